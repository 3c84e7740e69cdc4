//! Numerical Ważewski shooting: cutoff initial data, exit map, and the
//! search for the non-exiting unstable coefficient vector.
//!
//! Initial data at `τ₀` is the cutoff modal combination
//! `h = η_{γ₀} Σ_{j ≤ K_active} p_j h_j`, with `η_{γ₀}` a smooth radial
//! cutoff equal to 1 on `{f ≤ γ₀e^{τ₀}/2}` and 0 on `{f ≥ γ₀e^{τ₀}}`.
//! The exit map sends `p` to the unstable coefficients of the trajectory
//! at its first box exit (or at `τ_max`).  Because each unstable
//! coefficient grows until the trajectory leaves through the unstable
//! side, its sign at exit flips across the tuned value, so the tuned
//! vector is found by bisection (one active mode) or cyclic coordinate
//! bisection (several).  "Never exits" is operationalised as reaching
//! `τ_max`; choose `τ_max − τ₀ ≳ 10/(λ_K − λ*)` so transients decay by
//! `e^{-10}` relative.
//!
//! The degree-theoretic existence argument for several active modes is
//! replaced by the coordinate search together with an alternation
//! certificate (opposite exit signs on the two ends of the final
//! bracket); the homotopy itself is not reproduced.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd;
use crate::flow::{evolve_until_exit, BoxSpec, FlowCtx, FlowState, ForcingSpec, Status};
use crate::geometry::Background;
use crate::operator::SpectralDecomposition;
use crate::tensor::SymTensorField;

/// Relative width at which a bisection bracket is declared converged.
const BRACKET_TOL_REL: f64 = 1e-10;
/// Maximum cyclic coordinate-bisection sweeps.
const MAX_SWEEPS: usize = 50;

/// Parameters of a shooting run.
#[derive(Debug, Clone)]
pub struct ShootConfig {
    /// p̄ — radius of the searched coefficient ball, before the `e^{λ*τ₀}`
    /// scaling.
    pub p_bar: f64,
    /// γ₀ — initial-data cutoff scale.
    pub gamma0: f64,
    pub boxspec: BoxSpec,
    pub forcing: ForcingSpec,
    pub dtau: f64,
    /// Number of unstable modes searched (≤ K of the decomposition).
    pub k_active: usize,
}

impl ShootConfig {
    pub fn validate(&self) -> Result<()> {
        self.boxspec.validate()?;
        self.forcing.validate()?;
        if !(self.p_bar > 0.0 && self.p_bar <= 1.0) {
            return Err(Error::InvalidParameter("p_bar must lie in (0, 1]".into()));
        }
        if !(self.gamma0 > 0.0 && self.gamma0 < 1.0) {
            return Err(Error::InvalidParameter("gamma0 must lie in (0, 1)".into()));
        }
        if self.k_active < 1 {
            return Err(Error::InvalidParameter("K_active must be ≥ 1".into()));
        }
        if self.dtau <= 0.0 {
            return Err(Error::InvalidParameter("dtau must be positive".into()));
        }
        Ok(())
    }

    /// Radius of the searched ball at τ₀: `p̄ e^{λ*τ₀}`.
    pub fn ball_radius(&self) -> f64 {
        self.p_bar * (self.boxspec.lambda_star * self.boxspec.tau0).exp()
    }
}

/// Smooth radial cutoff `η_{γ₀}`: 1 on `{f ≤ γ₀e^{τ₀}/2}`, 0 on
/// `{f ≥ γ₀e^{τ₀}}`, quintic smoothstep in `f` in between.
pub fn bump_gamma0(bg: &Background, gamma0: f64, tau0: f64) -> Result<Vec<f64>> {
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::InvalidParameter("gamma0 must lie in (0, 1)".into()));
    }
    let f = bg.f_ref()?;
    let cap = gamma0 * tau0.exp();
    let fmax = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if cap > fmax {
        return Err(Error::InvalidParameter(format!(
            "cutoff support f ≤ {cap:.3e} exceeds the grid (f_max = {fmax:.3e})"
        )));
    }
    Ok(f.iter()
        .map(|&fi| 1.0 - fd::smootherstep((fi - 0.5 * cap) / (0.5 * cap)))
        .collect())
}

/// Cutoff modal initial data `η_{γ₀} Σ_j p_j h_j`.  The Euclidean length
/// of `p` must not exceed `p̄ e^{λ*τ₀}`.
pub fn initial_data(
    p: &[f64],
    dec: &SpectralDecomposition,
    bg: &Background,
    gamma0: f64,
    tau0: f64,
    p_bar: f64,
) -> Result<SymTensorField> {
    if p.is_empty() || p.len() > dec.eigenfields.len() {
        return Err(Error::InvalidParameter(format!(
            "p has {} entries, decomposition holds {} modes",
            p.len(),
            dec.eigenfields.len()
        )));
    }
    let radius = p_bar * (dec.lambda_star * tau0).exp();
    let len = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    if len > radius * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "|p| = {len:.3e} exceeds p_bar e^(lambda_star tau0) = {radius:.3e}"
        )));
    }
    let eta = bump_gamma0(bg, gamma0, tau0)?;
    let m = bg.grid.len();
    let mut h = SymTensorField::zeros(m);
    for (j, &pj) in p.iter().enumerate() {
        h.axpy(pj, &dec.eigenfields[j]);
    }
    for i in 0..m {
        h.a[i] *= eta[i];
        h.b[i] *= eta[i];
    }
    Ok(h)
}

/// Measured cutoff tail `max_j (∫_{f ≥ γ₀e^{τ₀}/2} |h_j|²_f)^{1/2}` over the
/// first `k` modes — the scale of the coefficient retention error of
/// [`initial_data`].
pub fn cutoff_tail(
    dec: &SpectralDecomposition,
    bg: &Background,
    gamma0: f64,
    tau0: f64,
    k: usize,
) -> Result<f64> {
    let f = bg.f_ref()?;
    let half = 0.5 * gamma0 * tau0.exp();
    let nu = (bg.dim - 1) as f64;
    let mut worst = 0.0f64;
    for hj in dec.eigenfields.iter().take(k) {
        let mut acc = 0.0;
        for i in 0..bg.grid.len() {
            if f[i] >= half {
                acc += bg.grid.quad_weights[i]
                    * (hj.a[i] * hj.a[i] + nu * hj.b[i] * hj.b[i]);
            }
        }
        worst = worst.max(acc.sqrt());
    }
    Ok(worst)
}

/// Result of one trajectory of the exit map.
#[derive(Debug, Clone)]
pub struct ExitRecord {
    /// Unstable coefficients at the exit state (or at τ_max).
    pub f_coeffs: Vec<f64>,
    pub tau_exit: f64,
    pub status: Status,
}

/// Runs the trajectory from `initial_data(p)` and reports the unstable
/// coefficients at its exit.  Initial data already outside the box exits
/// immediately at τ₀.  `keep_stride` controls how densely the returned
/// trajectory is sampled.
pub fn exit_map(
    p: &[f64],
    cfg: &ShootConfig,
    ctx: &FlowCtx,
) -> Result<(ExitRecord, Vec<FlowState>)> {
    cfg.validate()?;
    if p.len() != cfg.k_active {
        return Err(Error::InvalidParameter(format!(
            "p has {} entries, K_active = {}",
            p.len(),
            cfg.k_active
        )));
    }
    let tau0 = ctx.boxspec.tau0;
    let h0 = initial_data(p, ctx.dec, ctx.bg, cfg.gamma0, tau0, cfg.p_bar)?;
    let s0 = ctx.make_state(h0, tau0)?;
    if s0.status != Status::Inside {
        let (_, _, coeffs) = crate::operator::project(ctx.dec, ctx.bg, &s0.h)?;
        let rec = ExitRecord {
            f_coeffs: coeffs[..cfg.k_active].to_vec(),
            tau_exit: tau0,
            status: s0.status,
        };
        return Ok((rec, vec![s0]));
    }
    let stride = (0.05 / cfg.dtau).round().max(1.0) as usize;
    let (traj, status, tau_exit) = evolve_until_exit(ctx, &s0.h, cfg.dtau, stride)?;
    let last = traj.last().expect("nonempty trajectory");
    let (_, _, coeffs) = crate::operator::project(ctx.dec, ctx.bg, &last.h)?;
    let rec = ExitRecord {
        f_coeffs: coeffs[..cfg.k_active].to_vec(),
        tau_exit,
        status,
    };
    Ok((rec, traj))
}

/// Outcome of the `p` search.
#[derive(Debug, Clone)]
pub struct ShootOutcome {
    pub p_star: Vec<f64>,
    /// Width of the final bisection bracket (0 when a non-exiting
    /// trajectory was found directly).
    pub bracket_width: f64,
    /// Trajectory of the tuned run.
    pub trajectory: Vec<FlowState>,
    pub status: Status,
    pub tau_exit: f64,
    /// Fitted slope of `log ‖h‖_{L²_f}` vs τ; `None` for a null
    /// trajectory, whose decay certificate is vacuous.
    pub decay_slope: Option<f64>,
    /// Exit sides alternate (opposite unstable-coefficient signs) across
    /// the final bracket.
    pub alternation: bool,
}

/// Least-squares slope of `log ‖h(τ)‖_{L²_f}`; `None` when the trajectory
/// is numerically null (certificate vacuous).
pub fn decay_slope(traj: &[FlowState]) -> Option<f64> {
    if traj.len() < 3 {
        return None;
    }
    let peak = traj.iter().map(|s| s.norms.l2f).fold(0.0f64, f64::max);
    if peak < 1e-200 {
        return None;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in traj {
        if s.norms.l2f > peak * 1e-12 {
            xs.push(s.tau);
            ys.push(s.norms.l2f.ln());
        }
    }
    if xs.len() < 3 || xs.last()? - xs.first()? < 1e-12 {
        return None;
    }
    Some(fd::linfit(&xs, &ys).0)
}

fn outcome_from(
    p: Vec<f64>,
    bracket_width: f64,
    rec: ExitRecord,
    traj: Vec<FlowState>,
    alternation: bool,
) -> ShootOutcome {
    let slope = decay_slope(&traj);
    ShootOutcome {
        p_star: p,
        bracket_width,
        trajectory: traj,
        status: rec.status,
        tau_exit: rec.tau_exit,
        decay_slope: slope,
        alternation,
    }
}

/// Bisection (one active mode) or cyclic coordinate bisection (several)
/// for the non-exiting coefficient vector.  Returns either a trajectory
/// reaching τ_max, or the tuned bracket midpoint with width
/// ≤ 1e−10·p̄e^{λ*τ₀} and the alternation certificate.
pub fn find_p_star(cfg: &ShootConfig, ctx: &FlowCtx) -> Result<ShootOutcome> {
    cfg.validate()?;
    if cfg.k_active > ctx.dec.k {
        return Err(Error::InvalidParameter(format!(
            "K_active = {} exceeds the K = {} unstable modes",
            cfg.k_active, ctx.dec.k
        )));
    }
    let radius = cfg.ball_radius();
    let tol = BRACKET_TOL_REL * radius;
    let mut p = vec![0.0; cfg.k_active];
    let mut width = 2.0 * radius;

    for _sweep in 0..MAX_SWEEPS {
        let width_before = width;
        for j in 0..cfg.k_active {
            // clamp the coordinate interval so |p| stays inside the ball
            let rest: f64 = p
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != j)
                .map(|(_, v)| v * v)
                .sum();
            let reach = (radius * radius - rest).max(0.0).sqrt();
            let mut lo = -reach;
            let mut hi = reach;
            let eval = |pj: f64| -> Result<(ExitRecord, Vec<FlowState>)> {
                let mut q = p.clone();
                q[j] = pj;
                exit_map(&q, cfg, ctx)
            };
            let (rec_lo, traj_lo) = eval(lo)?;
            if rec_lo.status == Status::Inside {
                p[j] = lo;
                return Ok(outcome_from(p, 0.0, rec_lo, traj_lo, false));
            }
            let (rec_hi, traj_hi) = eval(hi)?;
            if rec_hi.status == Status::Inside {
                p[j] = hi;
                return Ok(outcome_from(p, 0.0, rec_hi, traj_hi, false));
            }
            let s_lo = rec_lo.f_coeffs[j].signum();
            if s_lo == rec_hi.f_coeffs[j].signum() {
                return Err(Error::NoCrossing(format!(
                    "exit coefficient {j} has the same sign ({s_lo:+.0}) on both bracket ends; \
                     thresholds are mis-tuned"
                )));
            }
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let (rec, traj) = eval(mid)?;
                if rec.status == Status::Inside {
                    p[j] = mid;
                    return Ok(outcome_from(p, 0.0, rec, traj, true));
                }
                if rec.f_coeffs[j].signum() == s_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            p[j] = 0.5 * (lo + hi);
            width = width.min(hi - lo);
        }
        // converged when no coordinate moved its bracket below the previous
        // sweep's width any further
        if cfg.k_active == 1 || (width_before - width).abs() <= 0.1 * tol {
            break;
        }
    }

    let (rec, traj) = exit_map(&p, cfg, ctx)?;
    // alternation certificate on the tuned value: step the first coordinate
    // across the final bracket and compare exit signs
    let mut alternation = false;
    if rec.status != Status::Inside {
        let probe = width.max(tol);
        let mut plus = p.clone();
        plus[0] = (plus[0] + probe).clamp(-radius, radius);
        let mut minus = p.clone();
        minus[0] = (minus[0] - probe).clamp(-radius, radius);
        let (rp, _) = exit_map(&plus, cfg, ctx)?;
        let (rm, _) = exit_map(&minus, cfg, ctx)?;
        alternation = rp.status == Status::ExitUnstable
            && rm.status == Status::ExitUnstable
            && rp.f_coeffs[0].signum() != rm.f_coeffs[0].signum();
    }
    Ok(outcome_from(p, width, rec, traj, alternation))
}

/// Trajectories for a batch of coefficient vectors (exit-side sweep);
/// independent runs evaluated in parallel.
pub fn exit_sweep(
    cfg: &ShootConfig,
    ctx: &FlowCtx,
    ps: &[Vec<f64>],
) -> Result<Vec<ExitRecord>> {
    ps.par_iter()
        .map(|p| exit_map(p, cfg, ctx).map(|(rec, _)| rec))
        .collect()
}

/// Box-side statistics of a trajectory near the tuned vector.
#[derive(Debug, Clone)]
pub struct WazReport {
    /// stable bound `‖h_s(τ)‖ ≤ μ_s e^{λ*τ}` holds at every sample once it
    /// holds at τ₀
    pub stable_ok: bool,
    /// samples within 0.1% of the unstable threshold
    pub unstable_touches: usize,
    /// touches at which the rescaled unstable norm is moving outward
    pub touches_outward: usize,
}

impl WazReport {
    pub fn ok(&self) -> bool {
        self.stable_ok && self.unstable_touches == self.touches_outward
    }
}

/// Verifies the Ważewski-side behaviour along a trajectory: the stable
/// bound propagates from τ₀, and any grazing of the unstable threshold
/// has positive outward derivative.
pub fn verify_waz_box(
    traj: &[FlowState],
    dec: &SpectralDecomposition,
    boxspec: &BoxSpec,
) -> Result<WazReport> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    if (dec.lambda_star - boxspec.lambda_star).abs() > 1e-12 {
        return Err(Error::Config(
            "decomposition and box disagree on lambda_star".into(),
        ));
    }
    let ls = boxspec.lambda_star;
    let gate = |tau: f64| (ls * tau).exp();
    let mut stable_ok = traj[0].norms.l2f_s <= boxspec.mu_s * gate(traj[0].tau) * (1.0 + 1e-9);
    if stable_ok {
        for s in traj {
            if s.norms.l2f_s > boxspec.mu_s * gate(s.tau) * (1.0 + 1e-9) {
                stable_ok = false;
                break;
            }
        }
    }
    let mut touches = 0usize;
    let mut outward = 0usize;
    for (i, s) in traj.iter().enumerate() {
        let thresh = boxspec.mu_u * gate(s.tau);
        if s.norms.l2f_u >= 0.999 * thresh {
            touches += 1;
            // outward motion of the rescaled unstable norm
            let y = |s: &FlowState| s.norms.l2f_u * (-ls * s.tau).exp();
            let moving_out = if i + 1 < traj.len() {
                y(&traj[i + 1]) > y(s)
            } else if i > 0 {
                y(s) > y(&traj[i - 1])
            } else {
                false
            };
            if moving_out {
                outward += 1;
            }
        }
    }
    Ok(WazReport {
        stable_ok,
        unstable_touches: touches,
        touches_outward: outward,
    })
}
