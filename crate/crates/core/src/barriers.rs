//! Supersolution barriers and their parabolic defects.
//!
//! Two radial barrier families are evaluated on a soliton background:
//!
//! * **intermediate scale** — `u = e^{-κτ} (A f^κ − B f^{κ-1})` on the
//!   region `{Γ < f < γ e^τ}`, and
//! * **large scale** — the stationary profile `u = a − B₁/f` on
//!   `{γ e^τ < f < Γ e^τ}`, which additionally has to absorb the forcing
//!   term `(C₀/Γ) e^{-τ} √u`.
//!
//! The parabolic defect of a radial profile `u(f, τ)` is
//!
//! ```text
//! D = ∂_τ u − (1 + Cn √u) Δ̄u + ∇̄_{∇̄f} u − 4 Cn (1+ε) |Rm| u   (− forcing)
//! ```
//!
//! and `u` is a supersolution on the region exactly when `D ≥ 0` there.
//! Spatial derivatives are formed by finite differences of the nodal
//! values, so the reported minimum carries the discretisation error of
//! the grid; nodes within one spacing of the region boundary are
//! excluded to keep every stencil inside the region.
//!
//! [`glue_supersolution`] builds the pointwise minimum of a large-scale
//! and an intermediate-scale barrier and asserts the two crossing
//! inequalities that make the minimum itself a supersolution: the large
//! branch must lie strictly below the intermediate one at `f = γ₊ e^τ`
//! and strictly above it at `f = γ₋ e^τ`.  A failed crossing signals
//! that `τ` is too small for the chosen constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd;
use crate::geometry::Background;

/// Which barrier family a parameter set describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BarrierKind {
    Intermediate,
    Large,
}

/// Constants of a single barrier profile together with its space-time
/// region.  The fields `coef_a`, `coef_b`, `kappa`, `omega` belong to the
/// intermediate family; `level_a`, `coef_b1`, `forcing_c0` to the large
/// family.  `gamma_big` is the Γ cutoff and `gamma_small` the γ cutoff of
/// the respective region.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierParams {
    pub kind: BarrierKind,
    /// A — leading coefficient of the intermediate profile.
    pub coef_a: f64,
    /// B — subleading coefficient of the intermediate profile.
    pub coef_b: f64,
    /// κ — growth exponent of the intermediate profile.
    pub kappa: f64,
    /// ω — required slack in the intermediate hypothesis.
    pub omega: f64,
    /// a — plateau level of the large-scale profile.
    pub level_a: f64,
    /// B₁ — subleading coefficient of the large-scale profile.
    pub coef_b1: f64,
    /// C₀ — forcing amplitude absorbed by the large-scale barrier.
    pub forcing_c0: f64,
    /// Cn — dimensional constant multiplying the gradient correction.
    pub cn: f64,
    /// ε — the slack of the curvature term.
    pub eps: f64,
    /// Γ — fixed (intermediate) resp. expanding (large) region cutoff.
    pub gamma_big: f64,
    /// γ — expanding (intermediate) resp. expanding-lower (large) cutoff.
    pub gamma_small: f64,
    /// [τ₀, τ₁] over which the barrier is claimed.
    pub tau_window: (f64, f64),
}

impl BarrierParams {
    /// Intermediate-scale parameter set with the default `Cn = 4`.
    pub fn intermediate(
        coef_a: f64,
        coef_b: f64,
        kappa: f64,
        omega: f64,
        gamma_big: f64,
        gamma_small: f64,
        tau_window: (f64, f64),
    ) -> Self {
        Self {
            kind: BarrierKind::Intermediate,
            coef_a,
            coef_b,
            kappa,
            omega,
            level_a: 0.0,
            coef_b1: 0.0,
            forcing_c0: 0.0,
            cn: 4.0,
            eps: 0.01,
            gamma_big,
            gamma_small,
            tau_window,
        }
    }

    /// Large-scale parameter set with the default `Cn = 4`.
    pub fn large(
        level_a: f64,
        coef_b1: f64,
        forcing_c0: f64,
        gamma_big: f64,
        gamma_small: f64,
        tau_window: (f64, f64),
    ) -> Self {
        Self {
            kind: BarrierKind::Large,
            coef_a: 0.0,
            coef_b: 0.0,
            kappa: 0.0,
            omega: 0.0,
            level_a,
            coef_b1,
            forcing_c0,
            cn: 4.0,
            eps: 0.01,
            gamma_big,
            gamma_small,
            tau_window,
        }
    }

    /// Margin of the supersolution hypothesis on `bg`; the hypothesis
    /// holds when this is positive.
    ///
    /// * Intermediate: `B − A{κ(κ + n/2) + 4Cn(1+ε) sup(|Rm| f)} − ω`.
    /// * Large: `B₁ − 4Cn(1+ε) sup(f |Rm|) a − C₀ √a`.
    pub fn hypothesis_margin(&self, bg: &Background) -> Result<f64> {
        let f = potential(bg)?;
        let sup_rmf = bg
            .rm_norm
            .iter()
            .zip(f)
            .map(|(&rm, &fi)| rm * fi.max(0.0))
            .fold(0.0f64, f64::max);
        let curv = 4.0 * self.cn * (1.0 + self.eps) * sup_rmf;
        Ok(match self.kind {
            BarrierKind::Intermediate => {
                let n_half = bg.dim as f64 / 2.0;
                self.coef_b - self.coef_a * (self.kappa * (self.kappa + n_half) + curv)
                    - self.omega
            }
            BarrierKind::Large => {
                self.coef_b1 - curv * self.level_a - self.forcing_c0 * self.level_a.sqrt()
            }
        })
    }

    /// Check the hypothesis (and `ω > 0` for the intermediate family).
    pub fn validate(&self, bg: &Background) -> Result<()> {
        if self.cn <= 0.0 {
            return Err(Error::InvalidParameter("Cn must be positive".into()));
        }
        if self.kind == BarrierKind::Intermediate && self.omega <= 0.0 {
            return Err(Error::InvalidParameter(
                "intermediate barrier requires omega > 0".into(),
            ));
        }
        let margin = self.hypothesis_margin(bg)?;
        if margin < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "barrier hypothesis violated (margin {margin:.3e})"
            )));
        }
        Ok(())
    }
}

fn potential(bg: &Background) -> Result<&Vec<f64>> {
    bg.f.as_ref().ok_or_else(|| {
        Error::InvalidParameter("barrier evaluation needs a background potential f".into())
    })
}

/// Nodal values of the barrier profile at time `tau` (everywhere on the
/// grid, regardless of the region).
pub fn barrier_values(bg: &Background, p: &BarrierParams, tau: f64) -> Result<Vec<f64>> {
    let f = potential(bg)?;
    Ok(match p.kind {
        BarrierKind::Intermediate => {
            let damp = (-p.kappa * tau).exp();
            f.iter()
                .map(|&fi| {
                    let fi = fi.max(1e-300);
                    damp * (p.coef_a * fi.powf(p.kappa) - p.coef_b * fi.powf(p.kappa - 1.0))
                })
                .collect()
        }
        BarrierKind::Large => f
            .iter()
            .map(|&fi| p.level_a - p.coef_b1 / fi.max(1e-300))
            .collect(),
    })
}

/// Region membership of each node at time `tau`, eroded by one node so
/// that the central difference stencils stay inside; end nodes are
/// always excluded.
fn region_mask(bg: &Background, p: &BarrierParams, tau: f64) -> Result<Vec<bool>> {
    let f = potential(bg)?;
    let n = f.len();
    let (lo, hi) = match p.kind {
        BarrierKind::Intermediate => (p.gamma_big, p.gamma_small * tau.exp()),
        BarrierKind::Large => (p.gamma_small * tau.exp(), p.gamma_big * tau.exp()),
    };
    let raw: Vec<bool> = f.iter().map(|&fi| fi > lo && fi < hi).collect();
    let mut mask = vec![false; n];
    for i in 1..n - 1 {
        mask[i] = raw[i] && raw[i - 1] && raw[i + 1];
    }
    Ok(mask)
}

/// Parabolic defect of the barrier at every node, `NaN` outside the
/// (eroded) region.  Positivity of the profile is checked where the
/// respective lemma asserts it.
pub fn defect_field(bg: &Background, p: &BarrierParams, tau: f64) -> Result<Vec<f64>> {
    let f = potential(bg)?;
    let f1 = bg
        .f1
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("background lacks f'".into()))?;
    let h = bg.grid.spacing;
    let u = barrier_values(bg, p, tau)?;
    let mask = region_mask(bg, p, tau)?;

    // Positivity statements of the two lemmas.
    match p.kind {
        BarrierKind::Intermediate => {
            // u > 0 on {f > Γ} whenever A > B/Γ.
            if p.coef_a > p.coef_b / p.gamma_big {
                for (i, &fi) in f.iter().enumerate() {
                    if fi > p.gamma_big && u[i] <= 0.0 {
                        return Err(Error::Numerical(format!(
                            "intermediate barrier not positive at node {i} (f = {fi:.3e})"
                        )));
                    }
                }
            }
        }
        BarrierKind::Large => {
            // u > 0 on {f > γ e^τ} whenever (B₁/γ) e^{-τ} < a.
            if p.coef_b1 / p.gamma_small * (-tau).exp() < p.level_a {
                for (i, &fi) in f.iter().enumerate() {
                    if fi > p.gamma_small * tau.exp() && u[i] <= 0.0 {
                        return Err(Error::Numerical(format!(
                            "large barrier not positive at node {i} (f = {fi:.3e})"
                        )));
                    }
                }
            }
        }
    }

    let origin = bg.has_origin();
    let u1 = fd::deriv1(&u, h, origin);
    let u2 = fd::deriv2(&u, h, origin);
    let nu = (bg.dim - 1) as f64;
    let curv_coef = 4.0 * p.cn * (1.0 + p.eps);

    let mut d = vec![f64::NAN; u.len()];
    for i in 0..u.len() {
        if !mask[i] {
            continue;
        }
        let lap = if origin && i == 0 {
            (bg.dim as f64) * u2[0]
        } else {
            u2[i] + nu * bg.psi1[i] / bg.psi[i] * u1[i]
        };
        let sqrt_u = u[i].max(0.0).sqrt();
        let dtau_u = match p.kind {
            BarrierKind::Intermediate => -p.kappa * u[i],
            BarrierKind::Large => 0.0,
        };
        let mut di = dtau_u - (1.0 + p.cn * sqrt_u) * lap + f1[i] * u1[i]
            - curv_coef * bg.rm_norm[i] * u[i];
        if p.kind == BarrierKind::Large {
            di -= p.forcing_c0 / p.gamma_big * (-tau).exp() * sqrt_u;
        }
        d[i] = di;
    }
    Ok(d)
}

fn min_over(
    bg: &Background,
    p: &BarrierParams,
    grid_tau: &[f64],
) -> Result<(f64, (usize, f64))> {
    let mut best: Option<(f64, (usize, f64))> = None;
    for &tau in grid_tau {
        let d = defect_field(bg, p, tau)?;
        for (i, &di) in d.iter().enumerate() {
            if di.is_nan() {
                continue;
            }
            if best.map_or(true, |(b, _)| di < b) {
                best = Some((di, (i, tau)));
            }
        }
    }
    best.ok_or_else(|| {
        Error::RegionEmpty(format!(
            "barrier region does not meet the grid for any tau in {:?}",
            grid_tau
        ))
    })
}

/// Minimum of the intermediate-scale defect over the region and the
/// supplied τ samples, with its arg-min (node index, τ).
pub fn intermediate_defect(
    bg: &Background,
    p: &BarrierParams,
    grid_tau: &[f64],
) -> Result<(f64, (usize, f64))> {
    if p.kind != BarrierKind::Intermediate {
        return Err(Error::InvalidParameter(
            "intermediate_defect called with large-scale parameters".into(),
        ));
    }
    min_over(bg, p, grid_tau)
}

/// Minimum of the large-scale defect (including the forcing term) over
/// the region and the supplied τ samples.
pub fn large_defect(
    bg: &Background,
    p: &BarrierParams,
    grid_tau: &[f64],
) -> Result<(f64, (usize, f64))> {
    if p.kind != BarrierKind::Large {
        return Err(Error::InvalidParameter(
            "large_defect called with intermediate-scale parameters".into(),
        ));
    }
    min_over(bg, p, grid_tau)
}

/// Grid node whose potential value is closest to `target`; errors when
/// `target` lies outside the range of `f` on the grid.
fn node_at_f(bg: &Background, target: f64, what: &str) -> Result<usize> {
    let f = potential(bg)?;
    let fmin = f.iter().cloned().fold(f64::INFINITY, f64::min);
    let fmax = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if target < fmin || target > fmax {
        return Err(Error::NoCrossing(format!(
            "{what} crossing at f = {target:.3e} lies off the grid (f range [{fmin:.3e}, {fmax:.3e}])"
        )));
    }
    let mut best = 0;
    let mut dist = f64::INFINITY;
    for (i, &fi) in f.iter().enumerate() {
        let d = (fi - target).abs();
        if d < dist {
            dist = d;
            best = i;
        }
    }
    Ok(best)
}

/// Pointwise minimum of a large-scale and an intermediate-scale barrier
/// at time `tau`, after asserting the two crossing inequalities at the
/// grid nodes nearest to `f = γ₋ e^τ` and `f = γ₊ e^τ`:
///
/// * at `γ₊ e^τ` the large branch must lie strictly below the
///   intermediate one (the minimum switches to the plateau), and
/// * at `γ₋ e^τ` strictly above it (the minimum switches back).
///
/// A failure signals that `tau` is too small for the chosen constants.
pub fn glue_supersolution(
    bg: &Background,
    p_int: &BarrierParams,
    p_large: &BarrierParams,
    gamma_minus: f64,
    gamma_plus: f64,
    tau: f64,
) -> Result<Vec<f64>> {
    if p_int.kind != BarrierKind::Intermediate || p_large.kind != BarrierKind::Large {
        return Err(Error::InvalidParameter(
            "glue_supersolution expects (intermediate, large) parameter sets".into(),
        ));
    }
    if !(0.0 < gamma_minus && gamma_minus < gamma_plus) {
        return Err(Error::InvalidParameter(
            "need 0 < gamma_minus < gamma_plus".into(),
        ));
    }
    let u_int = barrier_values(bg, p_int, tau)?;
    let u_large = barrier_values(bg, p_large, tau)?;

    let i_plus = node_at_f(bg, gamma_plus * tau.exp(), "upper")?;
    let i_minus = node_at_f(bg, gamma_minus * tau.exp(), "lower")?;
    if u_large[i_plus] >= u_int[i_plus] {
        return Err(Error::CrossingFailed(format!(
            "at f = gamma_plus e^tau (node {i_plus}): large branch {:.6e} >= intermediate {:.6e}; tau = {tau} too small",
            u_large[i_plus], u_int[i_plus]
        )));
    }
    if u_int[i_minus] >= u_large[i_minus] {
        return Err(Error::CrossingFailed(format!(
            "at f = gamma_minus e^tau (node {i_minus}): intermediate branch {:.6e} >= large {:.6e}; tau = {tau} too small",
            u_int[i_minus], u_large[i_minus]
        )));
    }

    Ok(u_int
        .iter()
        .zip(&u_large)
        .map(|(&a, &b)| a.min(b))
        .collect())
}

/// The glue recipe of the existence proof, instantiated from the two
/// free constants: `A = C₁² + 1`, `B₀ = A κ(κ + n/2) + 1` with
/// `κ = 2|λ*|`, `a = δ²`, `B₁ = C₀ = 1`, `γ₊ = a²`, `γ₋ = (a/2A)²`.
/// Returns `(p_int, p_large, gamma_minus, gamma_plus)`.
pub fn glue_recipe(
    dim: usize,
    c1: f64,
    delta: f64,
    lambda_star: f64,
    tau_window: (f64, f64),
) -> (BarrierParams, BarrierParams, f64, f64) {
    let kappa = 2.0 * lambda_star.abs();
    let coef_a = c1 * c1 + 1.0;
    let coef_b = coef_a * kappa * (kappa + dim as f64 / 2.0) + 1.0;
    let level_a = delta * delta;
    let gamma_plus = level_a * level_a;
    let gamma_minus = (level_a / (2.0 * coef_a)).powi(2);
    let p_int = BarrierParams::intermediate(coef_a, coef_b, kappa, 1.0, 1.0, 1.0, tau_window);
    let p_large = BarrierParams::large(level_a, 1.0, 1.0, 1.0, 1.0, tau_window);
    (p_int, p_large, gamma_minus, gamma_plus)
}
