//! Discretized weighted Lichnerowicz Laplacian `A = Δ_f + 2Rm` acting on
//! rotationally symmetric 2-tensor fields `h = a·dr² + b·ψ² g_link`.
//!
//! Two realizations of the same operator are kept:
//!
//! * a **variational** (finite-element) banded form built from the weighted
//!   Dirichlet energy
//!   `E(h) = ∫ [a′² + ν b′² + 2ν P²(a−b)²] ρ dr`,  `ρ = e^{−f} v`, `ν = n−1`,
//!   plus the curvature form `∫ [4ν K_rad a b + 2ν(n−2) K_sph b²] ρ dr`,
//!   with a lumped mass matrix.  This form is exactly symmetric and is what
//!   the eigensolver and the implicit time stepper consume;
//!
//! * a **collocation** pointwise action (`apply`), second-order finite
//!   differences with origin parity limits:
//!   `(Ah)_rr  = a″ + (νP − f′) a′ − 2νP²(a−b) + 2νK_rad b`
//!   `(Ah)_ang = b″ + (νP − f′) b′ + 2P²(a−b) + 2K_rad a + 2(n−2)K_sph b`.
//!
//! Degrees of freedom interleave (a_i, b_i) over active nodes; the outer
//! boundary (and the inner one when there is no rotation origin) is
//! homogeneous Dirichlet.  The similarity transform `S = D^{−1/2} A D^{−1/2}`
//! with `D = diag(mass)` turns the generalized problem `A x = λ M x` into an
//! ordinary symmetric banded one (bandwidth 2).

use crate::error::{Error, Result};
use crate::fd::{deriv1, deriv2, linfit};
use crate::geometry::Background;
use crate::grid::RadialGrid;
use crate::lapack::{sbevx_top, BandMat};
use crate::tensor::SymTensorField;

/// Assembled weak-form operator with its lumped mass.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    /// first active (non-Dirichlet) node
    pub i0: usize,
    /// number of active nodes
    pub n_active: usize,
    /// total grid nodes
    pub n_nodes: usize,
    pub dim: usize,
    /// A = −stiffness − coupling + curvature, symmetric banded (kd = 2)
    pub a_band: BandMat,
    /// lumped mass per DOF (angular DOFs carry the multiplicity ν)
    pub mass: Vec<f64>,
}

impl OperatorMatrix {
    #[inline]
    pub fn n_dof(&self) -> usize {
        2 * self.n_active
    }

    /// Restrict a nodal field to the active DOF vector.
    pub fn restrict(&self, h: &SymTensorField) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dof()];
        for i in 0..self.n_active {
            x[2 * i] = h.a[self.i0 + i];
            x[2 * i + 1] = h.b[self.i0 + i];
        }
        x
    }

    /// Embed a DOF vector as a field (zeros on Dirichlet nodes).
    pub fn embed(&self, x: &[f64]) -> SymTensorField {
        let mut h = SymTensorField::zeros(self.n_nodes);
        for i in 0..self.n_active {
            h.a[self.i0 + i] = x[2 * i];
            h.b[self.i0 + i] = x[2 * i + 1];
        }
        h
    }

    /// Weak bilinear form ⟨A h₁, h₂⟩_f (exactly symmetric).
    pub fn form(&self, h1: &SymTensorField, h2: &SymTensorField) -> f64 {
        let x1 = self.restrict(h1);
        let x2 = self.restrict(h2);
        self.a_band.quad_form(&x1, &x2)
    }

    /// Mass-weighted norm² of the restricted field.
    pub fn mass_norm2(&self, h: &SymTensorField) -> f64 {
        let x = self.restrict(h);
        x.iter().zip(&self.mass).map(|(&v, &m)| m * v * v).sum()
    }
}

/// Builds the banded weak form on a soliton background.
pub fn assemble(bg: &Background) -> Result<OperatorMatrix> {
    if !bg.is_soliton() {
        return Err(Error::NotSoliton(
            "operator assembly needs a soliton background".into(),
        ));
    }
    let n = bg.grid.len();
    if n > 10_000 {
        return Err(Error::InvalidParameter(format!(
            "grid size {n} exceeds the eigensolve budget (10^4 nodes)"
        )));
    }
    let nu = (bg.dim - 1) as f64;
    let nn = bg.dim as f64;
    let dr = bg.grid.spacing;
    let rho = bg.rho();
    let i0 = if bg.has_origin() { 0 } else { 1 };
    let n_active = n - 1 - i0;
    let n_dof = 2 * n_active;

    // per-node FEM quantities accumulated over edges
    let mut m_node = vec![0.0; n];
    let mut q_node = vec![0.0; n]; // ∫ 2ν P² ρ φ_i (lumped coupling)
    let mut s_edge = vec![0.0; n - 1];
    let g_pts = [0.5 - 0.5 / 3f64.sqrt(), 0.5 + 0.5 / 3f64.sqrt()];
    for e in 0..n - 1 {
        s_edge[e] = (rho[e] + rho[e + 1]) / (2.0 * dr) * dr / dr; // ρ̄ / dr
        m_node[e] += dr * (rho[e] / 3.0 + rho[e + 1] / 6.0);
        m_node[e + 1] += dr * (rho[e + 1] / 3.0 + rho[e] / 6.0);
        for &xi in &g_pts {
            let psi = bg.psi[e] * (1.0 - xi) + bg.psi[e + 1] * xi;
            let psi1 = bg.psi1[e] * (1.0 - xi) + bg.psi1[e + 1] * xi;
            let rh = rho[e] * (1.0 - xi) + rho[e + 1] * xi;
            if psi <= 0.0 {
                continue;
            }
            let p2 = (psi1 / psi) * (psi1 / psi);
            let val = 2.0 * nu * p2 * rh * (dr / 2.0);
            q_node[e] += val * (1.0 - xi);
            q_node[e + 1] += val * xi;
        }
    }

    let mut a = BandMat::zeros(n_dof, 2);
    let mut mass = vec![0.0; n_dof];
    for k in 0..n_active {
        let i = i0 + k;
        let (da, db) = (2 * k, 2 * k + 1);
        mass[da] = m_node[i];
        mass[db] = nu * m_node[i];
        let s_adj = (if i > 0 { s_edge[i - 1] } else { 0.0 })
            + (if i + 1 < n { s_edge[i] } else { 0.0 });
        *a.at_mut(da, da) += -s_adj - q_node[i];
        *a.at_mut(db, db) +=
            -nu * s_adj - q_node[i] + m_node[i] * 2.0 * nu * (nn - 2.0) * bg.sec_sph[i];
        *a.at_mut(db, da) += q_node[i] + m_node[i] * 2.0 * nu * bg.sec_rad[i];
        if k + 1 < n_active {
            *a.at_mut(da + 2, da) += s_edge[i];
            *a.at_mut(db + 2, db) += nu * s_edge[i];
        }
    }
    Ok(OperatorMatrix {
        i0,
        n_active,
        n_nodes: n,
        dim: bg.dim,
        a_band: a,
        mass,
    })
}

/// Pointwise collocation action of `Δ_f + 2Rm` with origin parity limits.
pub fn apply(bg: &Background, h: &SymTensorField) -> Result<SymTensorField> {
    let m = bg.grid.len();
    if h.len() != m {
        return Err(Error::GridMismatch("apply: field/grid size".into()));
    }
    let f1 = bg.f1_ref()?;
    let nu = (bg.dim - 1) as f64;
    let nn = bg.dim as f64;
    let origin = bg.has_origin();
    let dr = bg.grid.spacing;
    let a1 = deriv1(&h.a, dr, origin);
    let b1 = deriv1(&h.b, dr, origin);
    let a2 = deriv2(&h.a, dr, origin);
    let b2 = deriv2(&h.b, dr, origin);
    let mut out = SymTensorField::zeros(m);
    for i in 0..m {
        let (pa1, pb1, p2ab) = if origin && i == 0 {
            // P a′ → a″, P b′ → b″, P²(a−b) → (a″−b″)/2
            (a2[0], b2[0], 0.5 * (a2[0] - b2[0]))
        } else {
            let p = bg.psi1[i] / bg.psi[i];
            (p * a1[i], p * b1[i], p * p * (h.a[i] - h.b[i]))
        };
        let kr = bg.sec_rad[i];
        let ks = bg.sec_sph[i];
        out.a[i] = a2[i] + nu * pa1 - f1[i] * a1[i] - 2.0 * nu * p2ab + 2.0 * nu * kr * h.b[i];
        out.b[i] = b2[i] + nu * pb1 - f1[i] * b1[i] + 2.0 * p2ab
            + 2.0 * kr * h.a[i]
            + 2.0 * (nn - 2.0) * ks * h.b[i];
    }
    Ok(out)
}

/// L²_f inner product ⟨h₁, h₂⟩ = Σ w_i (a₁a₂ + ν b₁b₂)_i with the
/// background's quadrature weights.
pub fn inner_f(bg: &Background, h1: &SymTensorField, h2: &SymTensorField) -> Result<f64> {
    let m = bg.grid.len();
    if h1.len() != m || h2.len() != m {
        return Err(Error::GridMismatch("inner_f: field/grid size".into()));
    }
    let nu = (bg.dim - 1) as f64;
    Ok((0..m)
        .map(|i| bg.grid.quad_weights[i] * (h1.a[i] * h2.a[i] + nu * h1.b[i] * h2.b[i]))
        .sum())
}

pub fn norm_f(bg: &Background, h: &SymTensorField) -> Result<f64> {
    Ok(inner_f(bg, h, h)?.max(0.0).sqrt())
}

/// Top part of the L²_f spectrum with orthonormal eigenfields.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    /// descending: λ₁ ≥ λ₂ ≥ …
    pub eigenvalues: Vec<f64>,
    /// L²_f-orthonormal eigenfields, same order
    pub eigenfields: Vec<SymTensorField>,
    pub lambda_star: f64,
    /// number of eigenvalues above λ*
    pub k: usize,
}

const RESONANCE_TOL: f64 = 1e-6;

/// Top-`m` eigenpairs of the weighted-symmetric problem; counts K and
/// rejects a resonant λ*.
pub fn spectrum(
    opm: &OperatorMatrix,
    bg: &Background,
    m: usize,
    lambda_star: f64,
) -> Result<SpectralDecomposition> {
    if lambda_star >= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "lambda_star must be negative, got {lambda_star}"
        )));
    }
    let s = similarity(opm);
    let (vals, vecs) = sbevx_top(&s, m, true)?;
    // ascending from LAPACK → descending
    let mut eigenvalues: Vec<f64> = vals.iter().rev().cloned().collect();
    let mut fields: Vec<SymTensorField> = vecs
        .iter()
        .rev()
        .map(|z| {
            let x: Vec<f64> = z
                .iter()
                .zip(&opm.mass)
                .map(|(&v, &mm)| v / mm.sqrt())
                .collect();
            opm.embed(&x)
        })
        .collect();
    // re-orthonormalize under the trapezoid inner product (the eigensolve
    // orthogonality is with respect to the FEM mass, which differs by O(h²))
    for j in 0..fields.len() {
        for l in 0..j {
            let c = inner_f(bg, &fields[j], &fields[l])?;
            let prev = fields[l].clone();
            fields[j].axpy(-c, &prev);
        }
        let nrm = norm_f(bg, &fields[j])?;
        if nrm <= 0.0 {
            return Err(Error::Numerical(format!("eigenfield {j} degenerate")));
        }
        fields[j].scale(1.0 / nrm);
    }
    for w in eigenvalues.windows(2) {
        if w[1] > w[0] + 1e-12 {
            return Err(Error::Numerical("eigenvalues not decreasing".into()));
        }
    }
    for &l in &eigenvalues {
        if (l - lambda_star).abs() < RESONANCE_TOL {
            return Err(Error::ResonantLambdaStar {
                lambda_star,
                eigenvalue: l,
                tol: RESONANCE_TOL,
            });
        }
    }
    let k = eigenvalues.iter().filter(|&&l| l > lambda_star).count();
    eigenvalues.iter_mut().for_each(|v| {
        if v.abs() < 1e-300 {
            *v = 0.0;
        }
    });
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenfields: fields,
        lambda_star,
        k,
    })
}

/// Eigenvalues only (descending) — cheap path for convergence studies.
pub fn spectrum_values(opm: &OperatorMatrix, m: usize) -> Result<Vec<f64>> {
    let s = similarity(opm);
    let (vals, _) = sbevx_top(&s, m, false)?;
    Ok(vals.iter().rev().cloned().collect())
}

fn similarity(opm: &OperatorMatrix) -> BandMat {
    let mut s = BandMat::zeros(opm.n_dof(), opm.a_band.kd);
    for j in 0..opm.n_dof() {
        for i in j..(j + opm.a_band.kd + 1).min(opm.n_dof()) {
            *s.at_mut(i, j) = opm.a_band.at(i, j) / (opm.mass[i] * opm.mass[j]).sqrt();
        }
    }
    s
}

/// Unstable/stable split of h relative to the decomposition.
pub fn project(
    dec: &SpectralDecomposition,
    bg: &Background,
    h: &SymTensorField,
) -> Result<(SymTensorField, SymTensorField, Vec<f64>)> {
    let mut coeffs = Vec::with_capacity(dec.k);
    let mut h_u = SymTensorField::zeros(h.len());
    for j in 0..dec.k {
        let c = inner_f(bg, h, &dec.eigenfields[j])?;
        coeffs.push(c);
        h_u.axpy(c, &dec.eigenfields[j]);
    }
    let mut h_s = h.clone();
    h_s.axpy(-1.0, &h_u);
    Ok((h_u, h_s, coeffs))
}

/// Quadrature report for the weighted multiplier inequalities.
#[derive(Debug, Clone)]
pub struct WeightedReport {
    pub lhs1: f64,
    pub rhs1: f64,
    pub lhs2: f64,
    pub rhs2: f64,
    pub ok: bool,
}

/// Checks ∫|∇f|²|T|² ≤ ∫(4|∇T|² + n|T|²) and ∫f|T|² ≤ sup|R|‖T‖² + lhs₁
/// (all against e^{−f} dV) for a compactly supported field.
pub fn check_weighted_inequalities(bg: &Background, t: &SymTensorField) -> Result<WeightedReport> {
    let m = bg.grid.len();
    if t.len() != m {
        return Err(Error::GridMismatch("field/grid size".into()));
    }
    let last_nonzero = t.a[m - 1] != 0.0 || t.b[m - 1] != 0.0;
    let first_nonzero = !bg.has_origin() && (t.a[0] != 0.0 || t.b[0] != 0.0);
    if last_nonzero || first_nonzero {
        return Err(Error::InvalidParameter(
            "field support touches the grid boundary".into(),
        ));
    }
    let f = bg.f_ref()?;
    let f1 = bg.f1_ref()?;
    let nn = bg.dim as f64;
    let (c0, c1, _) = crate::tensor::pointwise_c_norms(bg, t)?;
    let t2: Vec<f64> = c0.iter().map(|&x| x * x).collect();
    let lhs1 = crate::geometry::weighted_integral(
        bg,
        &(0..m).map(|i| f1[i] * f1[i] * t2[i]).collect::<Vec<_>>(),
    )?;
    let rhs1 = crate::geometry::weighted_integral(
        bg,
        &(0..m)
            .map(|i| 4.0 * c1[i] * c1[i] + nn * t2[i])
            .collect::<Vec<_>>(),
    )?;
    let lhs2 =
        crate::geometry::weighted_integral(bg, &(0..m).map(|i| f[i] * t2[i]).collect::<Vec<_>>())?;
    let sup_r = bg.scalar_curv.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let norm2 = crate::geometry::weighted_integral(bg, &t2)?;
    let rhs2 = sup_r * norm2 + lhs1;
    let tol = 1e-12 * (1.0 + rhs1.abs() + rhs2.abs());
    let ok = lhs1 <= rhs1 + tol && lhs2 <= rhs2 + tol;
    Ok(WeightedReport {
        lhs1,
        rhs1,
        lhs2,
        rhs2,
        ok,
    })
}

/// Result of fitting the eigenmode growth condition
/// `|h_j| ≤ C f^{max{−λ_j,0}+δ}` (fit tolerance 0.1 included in `bound`).
///
/// `satisfies` can legitimately be false: generalized cylinders carry
/// eigenmodes with λ = +½ growing like f^{1/2}, which violates the bound
/// f^{δ} — the report records the violation rather than failing.
#[derive(Debug, Clone)]
pub struct GrowthFit {
    pub exponent: f64,
    pub c: f64,
    pub bound: f64,
    pub satisfies: bool,
}

/// Least-squares fit of log|h_j| against log f over the outer half of the
/// support region (2% boundary guard), checked against the eigenmode growth
/// condition.
pub fn eigenmode_growth_fit(
    dec: &SpectralDecomposition,
    bg: &Background,
    j: usize,
    delta: f64,
) -> Result<GrowthFit> {
    if j >= dec.eigenvalues.len() {
        return Err(Error::InvalidParameter(format!("mode index {j} out of range")));
    }
    let lam = dec.eigenvalues[j];
    let sep = dec
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|&(l, _)| l != j)
        .map(|(_, &v)| (v - lam).abs())
        .fold(f64::INFINITY, f64::min);
    if sep <= 1e-3 {
        return Err(Error::Numerical(format!(
            "eigenfield {j} numerically degenerate (separation {sep:.2e})"
        )));
    }
    let h = &dec.eigenfields[j];
    let f = bg.f_ref()?;
    let m = bg.grid.len();
    let guard = (m as f64 * 0.02).ceil() as usize;
    let p = h.pointwise_norm(bg.dim);
    let usable: Vec<usize> = (guard..m - guard).collect();
    let f_sup = usable.iter().map(|&i| f[i]).fold(0.0f64, f64::max);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &i in &usable {
        if f[i] >= 0.5 * f_sup && p[i] > 1e-13 {
            xs.push(f[i].ln());
            ys.push(p[i].ln());
        }
    }
    if xs.len() < 8 {
        return Err(Error::Numerical("too few samples for growth fit".into()));
    }
    let (slope, intercept) = linfit(&xs, &ys);
    let bound = (-lam).max(0.0) + delta + 0.1;
    Ok(GrowthFit {
        exponent: slope,
        c: intercept.exp(),
        bound,
        satisfies: slope <= bound,
    })
}

/// Export helper: {eigenvalues, K, lambda_star} as JSON.
pub fn decomposition_json(dec: &SpectralDecomposition) -> serde_json::Value {
    serde_json::json!({
        "eigenvalues": dec.eigenvalues,
        "K": dec.k,
        "lambda_star": dec.lambda_star,
    })
}

/// Convenience: smooth compactly supported bump 1 on [c−w/2, c+w/2]-ish,
/// zero outside [c−w, c+w] (C² cutoff built from smootherstep).
pub fn bump_profile(grid: &RadialGrid, center: f64, width: f64) -> Vec<f64> {
    grid.nodes
        .iter()
        .map(|&r| {
            let t = (r - center).abs() / width;
            1.0 - crate::fd::smootherstep(2.0 * t - 1.0)
        })
        .collect()
}
