//! Rotationally symmetric 2-tensor perturbations `h = a·dr² + b·ψ² g_link`
//! and their covariant norms on a background.
//!
//! In the orthonormal frame the field is diag(a, b, …, b), so
//! `|h|² = a² + (n−1)b²`.  Covariant first and second derivatives mix the
//! component derivatives with `P = ψ′/ψ` terms; the squared norms used here
//! are (with t₁ = P(a−b), ν = n−1):
//!
//! `|∇h|² = a′² + ν b′² + 2ν t₁²`
//!
//! `|∇²h|² = F₁² + ν F₂² + ν F₃² + ν² P₄² + 2nν Q₄² + 4ν P₄Q₄ + 2ν(V₁²+V₂²)`
//!
//! with F₁ = a″, F₂ = b″, F₃ = P a′ − 2P t₁, P₄ = P b′, Q₄ = P t₁,
//! V₁ = P(a′−b′) + (ψ″/ψ − P²)(a−b), V₂ = P(a′−b′) − P t₁.
//!
//! At a rotation origin the components are even and the limits are
//! P a′ → a″, P b′ → b″, P t₁ → (a″−b″)/2, (ψ″/ψ − P²)(a−b) → −(a″−b″)/2·0
//! handled explicitly below.

use crate::error::{Error, Result};
use crate::fd::{deriv1, deriv2};
use crate::geometry::Background;

/// Perturbation field sampled on the background grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    /// radial (rr) component
    pub a: Vec<f64>,
    /// angular component (relative to ψ² g_link)
    pub b: Vec<f64>,
    /// optional node range [lo, hi) outside which the field is known to
    /// vanish; purely an optimization/bookkeeping hint
    pub support_hint: Option<(usize, usize)>,
}

impl SymTensorField {
    pub fn zeros(n: usize) -> Self {
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
            support_hint: None,
        }
    }

    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::GridMismatch(format!(
                "component lengths differ: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        Ok(Self {
            a,
            b,
            support_hint: None,
        })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn scale(&mut self, s: f64) {
        for v in self.a.iter_mut().chain(self.b.iter_mut()) {
            *v *= s;
        }
    }

    /// self += s · other
    pub fn axpy(&mut self, s: f64, other: &Self) {
        assert_eq!(self.len(), other.len());
        for (x, y) in self.a.iter_mut().zip(&other.a) {
            *x += s * y;
        }
        for (x, y) in self.b.iter_mut().zip(&other.b) {
            *x += s * y;
        }
    }

    /// Pointwise frame norm |h| = √(a² + (n−1)b²).
    pub fn pointwise_norm(&self, dim: usize) -> Vec<f64> {
        let nu = (dim - 1) as f64;
        self.a
            .iter()
            .zip(&self.b)
            .map(|(&a, &b)| (a * a + nu * b * b).sqrt())
            .collect()
    }
}

/// All nodal derivative data needed by the norm and nonlinearity formulas.
#[derive(Debug, Clone)]
pub struct FieldJet {
    pub a1: Vec<f64>,
    pub b1: Vec<f64>,
    pub a2: Vec<f64>,
    pub b2: Vec<f64>,
    /// t₁ = P(a−b), with its origin limit 0
    pub t1: Vec<f64>,
}

/// Differentiates the components with origin-aware stencils.
pub fn jet(bg: &Background, h: &SymTensorField) -> Result<FieldJet> {
    let m = bg.grid.len();
    if h.len() != m {
        return Err(Error::GridMismatch(format!(
            "field has {} nodes, grid has {m}",
            h.len()
        )));
    }
    let origin = bg.has_origin();
    let dr = bg.grid.spacing;
    let a1 = deriv1(&h.a, dr, origin);
    let b1 = deriv1(&h.b, dr, origin);
    let a2 = deriv2(&h.a, dr, origin);
    let b2 = deriv2(&h.b, dr, origin);
    let mut t1 = vec![0.0; m];
    for i in 0..m {
        if origin && i == 0 {
            t1[0] = 0.0;
        } else {
            t1[i] = bg.psi1[i] / bg.psi[i] * (h.a[i] - h.b[i]);
        }
    }
    Ok(FieldJet { a1, b1, a2, b2, t1 })
}

/// Pointwise |h|, |∇h|, |∇²h| on the grid.
pub fn pointwise_c_norms(bg: &Background, h: &SymTensorField) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let j = jet(bg, h)?;
    Ok(pointwise_c_norms_with_jet(bg, h, &j))
}

/// Frame components of the covariant second derivative that mix ψ′/ψ with
/// the component derivatives (see module docs); all with origin limits.
#[derive(Debug, Clone)]
pub struct FrameSecond {
    pub f3: Vec<f64>,
    pub p4: Vec<f64>,
    pub q4: Vec<f64>,
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
}

/// Computes F₃, P₄, Q₄, V₁, V₂ nodal arrays from a jet.
pub fn frame_second(bg: &Background, h: &SymTensorField, j: &FieldJet) -> FrameSecond {
    let m = bg.grid.len();
    let origin = bg.has_origin();
    let mut out = FrameSecond {
        f3: vec![0.0; m],
        p4: vec![0.0; m],
        q4: vec![0.0; m],
        v1: vec![0.0; m],
        v2: vec![0.0; m],
    };
    for i in 0..m {
        let (a1, b1, a2, b2, t1) = (j.a1[i], j.b1[i], j.a2[i], j.b2[i], j.t1[i]);
        if origin && i == 0 {
            // limits: P a′ → a″, P b′ → b″, P t₁ → (a″−b″)/2, and both V
            // combinations tend to (a″−b″)/2
            let pt1 = 0.5 * (a2 - b2);
            out.f3[i] = a2 - 2.0 * pt1;
            out.p4[i] = b2;
            out.q4[i] = pt1;
            out.v1[i] = pt1;
            out.v2[i] = pt1;
        } else {
            let p = bg.psi1[i] / bg.psi[i];
            let w = bg.psi2[i] / bg.psi[i] - p * p;
            out.f3[i] = p * a1 - 2.0 * p * t1;
            out.p4[i] = p * b1;
            out.q4[i] = p * t1;
            out.v1[i] = p * (a1 - b1) + w * (h.a[i] - h.b[i]);
            out.v2[i] = p * (a1 - b1) - p * t1;
        }
    }
    out
}

pub fn pointwise_c_norms_with_jet(
    bg: &Background,
    h: &SymTensorField,
    j: &FieldJet,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let m = bg.grid.len();
    let n = bg.dim as f64;
    let nu = n - 1.0;
    let fs = frame_second(bg, h, j);
    let c0 = h.pointwise_norm(bg.dim);
    let mut c1 = vec![0.0; m];
    let mut c2 = vec![0.0; m];
    for i in 0..m {
        let (a1, b1, a2, b2, t1) = (j.a1[i], j.b1[i], j.a2[i], j.b2[i], j.t1[i]);
        c1[i] = (a1 * a1 + nu * b1 * b1 + 2.0 * nu * t1 * t1).sqrt();
        let (f3, p4, q4, v1, v2) = (fs.f3[i], fs.p4[i], fs.q4[i], fs.v1[i], fs.v2[i]);
        let s2 = a2 * a2
            + nu * b2 * b2
            + nu * f3 * f3
            + nu * nu * p4 * p4
            + 2.0 * n * nu * q4 * q4
            + 4.0 * nu * p4 * q4
            + 2.0 * nu * (v1 * v1 + v2 * v2);
        c2[i] = s2.max(0.0).sqrt();
    }
    (c0, c1, c2)
}

/// Sup-norms (C⁰, C¹, C²) of the field over the grid.
pub fn c_norms(bg: &Background, h: &SymTensorField) -> Result<(f64, f64, f64)> {
    let (c0, c1, c2) = pointwise_c_norms(bg, h)?;
    let sup = |v: &[f64]| v.iter().cloned().fold(0.0f64, f64::max);
    Ok((sup(&c0), sup(&c1), sup(&c2)))
}
