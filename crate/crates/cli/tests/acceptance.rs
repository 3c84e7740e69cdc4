//! Acceptance gate: ten quantitative criteria covering the whole pipeline
//! (backgrounds, spectrum, self-adjointness, weighted inequalities,
//! semigroup accuracy, barriers, projection dynamics, shooting, cone
//! scaling, determinism).  Each criterion prints one pass/fail line; the
//! single test fails if any criterion does.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the
//! per-criterion report even on success.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use shrinker_lab_core::flow::{
    check_projection_dynamics, e1_nonlinearity, envelope_w, evolve_until_exit, BoxSpec, FlowCtx,
    ForcingProfile, ForcingSpec, Status,
};
use shrinker_lab_core::barriers::{intermediate_defect, large_defect, BarrierParams};
use shrinker_lab_core::geometry::{
    make_cylinder, make_gaussian, make_rounded_cone, soliton_residuals, Background,
};
use shrinker_lab_core::grid::RadialGrid;
use shrinker_lab_core::operator::{
    assemble, bump_profile, check_weighted_inequalities, inner_f, norm_f, spectrum, spectrum_values,
    OperatorMatrix, SpectralDecomposition,
};
use shrinker_lab_core::shooting::{find_p_star, ShootConfig};
use shrinker_lab_core::tensor::SymTensorField;

fn gaussian(n: usize, r_max: f64, nodes: usize) -> Background {
    make_gaussian(n, RadialGrid::uniform(0.0, r_max, nodes).unwrap()).unwrap()
}

fn cylinder(k: usize, half: f64, nodes: usize) -> Background {
    make_cylinder(k, RadialGrid::uniform(-half, half, nodes).unwrap()).unwrap()
}

/// Smooth compactly supported pseudo-random tensor field (seeded).
fn random_supported(bg: &Background, seed: u64) -> SymTensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = bg.grid.len();
    let lo = bg.grid.nodes[0];
    let hi = bg.grid.nodes[m - 1];
    let center = lo + (hi - lo) * (0.3 + 0.4 * rng.gen::<f64>());
    let width = (hi - lo) * (0.1 + 0.15 * rng.gen::<f64>());
    let bump = bump_profile(&bg.grid, center, width);
    let (c1, c2, c3, c4) = (
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
    );
    let a: Vec<f64> = bg
        .grid
        .nodes
        .iter()
        .zip(&bump)
        .map(|(&r, &u)| u * (c1 + c2 * (0.7 * r).sin()))
        .collect();
    let b: Vec<f64> = bg
        .grid
        .nodes
        .iter()
        .zip(&bump)
        .map(|(&r, &u)| u * (c3 + c4 * (0.5 * r).cos()))
        .collect();
    SymTensorField::new(a, b).unwrap()
}

type Crit = Result<String, String>;

fn fail(msg: impl Into<String>) -> Crit {
    Err(msg.into())
}

// ---------------------------------------------------------------- 1

fn c1_soliton_identities() -> Crit {
    let mut details = Vec::new();
    for (name, bg) in [
        ("gaussian", gaussian(3, 30.0, 2001)),
        ("cylinder", cylinder(2, 30.0, 2001)),
    ] {
        let t = Instant::now();
        let (re, rh, rt) = soliton_residuals(&bg).map_err(|e| e.to_string())?;
        let dt = t.elapsed();
        let worst = re.max(rh).max(rt);
        if worst >= 1e-8 {
            return fail(format!("{name}: residual {worst:.2e} ≥ 1e-8"));
        }
        if dt >= Duration::from_secs(1) {
            return fail(format!("{name}: residuals took {dt:.1?} ≥ 1 s"));
        }
        details.push(format!("{name} {worst:.1e} in {dt:.0?}"));
    }
    Ok(details.join(", "))
}

// ---------------------------------------------------------------- 2

fn cyl_errors(nodes: usize) -> Vec<f64> {
    // eigenvalues only: the anchor and refinement checks don't need
    // eigenvectors, and skipping them keeps the fine solve fast
    let bg = cylinder(2, 30.0, nodes);
    let opm = assemble(&bg).unwrap();
    let vals = spectrum_values(&opm, 6).unwrap();
    let exact = [1.0, 0.5, 0.0, 0.0];
    (0..4).map(|j| (vals[j] - exact[j]).abs()).collect()
}

fn c2_spectral_anchors() -> Crit {
    let t = Instant::now();
    let e_coarse = cyl_errors(2001);
    let e_fine = cyl_errors(4001);
    for (j, &e) in e_coarse.iter().enumerate() {
        if e >= 2e-3 {
            return fail(format!("cylinder mode {j}: error {e:.2e} ≥ 2e-3"));
        }
    }
    // The constant modes (λ = 1 a-block, λ = 0 b-block) are represented
    // exactly at every N, so the refinement ratio is measured on the modes
    // whose error is discretization-dominated: the λ = ½ slot and the
    // worse of the two λ = 0 slots.
    let r_half = e_coarse[1] / e_fine[1];
    let r_zero = e_coarse[2].max(e_coarse[3]) / e_fine[2].max(e_fine[3]);
    if r_half < 3.5 || r_zero < 3.5 {
        return fail(format!("refinement ratios {r_half:.2} / {r_zero:.2} < 3.5"));
    }
    let bg = gaussian(3, 30.0, 2001);
    let opm = assemble(&bg).map_err(|e| e.to_string())?;
    let vals = spectrum_values(&opm, 4).map_err(|e| e.to_string())?;
    let g_top = vals[0].abs();
    let g_second = (vals[1] + 1.0).abs();
    if g_top >= 2e-3 || g_second >= 2e-3 {
        return fail(format!("gaussian errors {g_top:.2e}, {g_second:.2e} ≥ 2e-3"));
    }
    let dt = t.elapsed();
    if dt >= Duration::from_secs(30) {
        return fail(format!("spectra took {dt:.1?} ≥ 30 s"));
    }
    Ok(format!(
        "cylinder errs ≤ {:.1e}, ratios {r_half:.1}/{r_zero:.1}, gaussian errs {g_top:.1e}/{g_second:.1e} in {dt:.0?}",
        e_coarse.iter().cloned().fold(0.0f64, f64::max)
    ))
}

// ---------------------------------------------------------------- 3

fn c3_selfadjoint_orthonormal() -> Crit {
    let mut worst_sym = 0.0f64;
    let mut worst_gram = 0.0f64;
    for (bg, m) in [(cylinder(2, 24.0, 1201), 6), (gaussian(3, 30.0, 1201), 4)] {
        let opm = assemble(&bg).map_err(|e| e.to_string())?;
        for seed in 0..5 {
            let h1 = random_supported(&bg, seed);
            let h2 = random_supported(&bg, seed + 100);
            let scale = norm_f(&bg, &h1).unwrap() * norm_f(&bg, &h2).unwrap();
            let defect = (opm.form(&h1, &h2) - opm.form(&h2, &h1)).abs() / scale;
            worst_sym = worst_sym.max(defect);
        }
        let dec = spectrum(&opm, &bg, m, -0.25).map_err(|e| e.to_string())?;
        for i in 0..m {
            for j in 0..m {
                let g = inner_f(&bg, &dec.eigenfields[i], &dec.eigenfields[j]).unwrap();
                let want = if i == j { 1.0 } else { 0.0 };
                worst_gram = worst_gram.max((g - want).abs());
            }
        }
    }
    if worst_sym >= 1e-10 {
        return fail(format!("symmetry defect {worst_sym:.2e} ≥ 1e-10"));
    }
    if worst_gram >= 1e-8 {
        return fail(format!("Gram deviation {worst_gram:.2e} ≥ 1e-8"));
    }
    Ok(format!("symmetry {worst_sym:.1e}, Gram {worst_gram:.1e}"))
}

// ---------------------------------------------------------------- 4

fn c4_weighted_inequalities() -> Crit {
    let mut violations = 0usize;
    for bg in [gaussian(3, 30.0, 2001), cylinder(2, 30.0, 2001)] {
        for seed in 0..100u64 {
            let t = random_supported(&bg, seed);
            let rep = check_weighted_inequalities(&bg, &t).map_err(|e| e.to_string())?;
            if !rep.ok {
                violations += 1;
            }
        }
    }
    if violations > 0 {
        return fail(format!("{violations} of 200 seeded fields violated"));
    }
    Ok("0 violations over 2 × 100 seeded fields".into())
}

// ---------------------------------------------------------------- 5

fn semigroup_error(
    bg: &Background,
    opm: &OperatorMatrix,
    dec: &SpectralDecomposition,
    j: usize,
    dtau: f64,
) -> f64 {
    let boxspec = BoxSpec {
        lambda_star: -0.25,
        mu_u: 0.9,
        mu_s: 0.9,
        eps0: 0.9,
        eps1: 0.9,
        eps2: 0.9,
        tau0: 0.0,
        tau_max: 1.0,
    };
    let mut ctx = FlowCtx::new(bg, opm, dec, boxspec, ForcingSpec::default()).unwrap();
    ctx.e1_enabled = false;
    let mut h0 = dec.eigenfields[j].clone();
    h0.scale(1e-6);
    let (traj, status, _) = evolve_until_exit(&ctx, &h0, dtau, usize::MAX).unwrap();
    assert_eq!(status, Status::Inside);
    let growth = traj.last().unwrap().norms.l2f / traj[0].norms.l2f;
    let exact = dec.eigenvalues[j].exp();
    (growth - exact).abs() / exact
}

fn c5_semigroup() -> Crit {
    let bg = cylinder(2, 24.0, 1201);
    let opm = assemble(&bg).map_err(|e| e.to_string())?;
    let dec = spectrum(&opm, &bg, 6, -0.25).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut worst_ratio = f64::INFINITY;
    for j in 0..4 {
        let err = semigroup_error(&bg, &opm, &dec, j, 1e-3);
        worst = worst.max(err);
        if err >= 1e-5 {
            return fail(format!("mode {j}: relative error {err:.2e} ≥ 1e-5 at dtau 1e-3"));
        }
        // second-order convergence, measured where the error is
        // time-discretization dominated (|λ| ≥ ¼; the λ = 0 modes sit at
        // roundoff for every step size)
        if dec.eigenvalues[j].abs() >= 0.25 {
            let errs: Vec<f64> = [8e-3, 4e-3, 2e-3]
                .iter()
                .map(|&dt| semigroup_error(&bg, &opm, &dec, j, dt))
                .collect();
            for w in errs.windows(2) {
                let r = w[0] / w[1];
                worst_ratio = worst_ratio.min(r);
                if !(3.0..=5.0).contains(&r) {
                    return fail(format!("mode {j}: halving ratio {r:.2} outside [3, 5]"));
                }
            }
        }
    }
    Ok(format!("worst rel err {worst:.1e} at dtau 1e-3, halving ratios ≥ {worst_ratio:.2}"))
}

// ---------------------------------------------------------------- 6

fn c6_barriers() -> Crit {
    let taus: Vec<f64> = (0..21).map(|i| 5.0 + 0.25 * i as f64).collect();
    let bg_mid = gaussian(3, 30.0, 1501);
    let bg_big = gaussian(3, 60.0, 3001);

    // Intermediate: A = 1, κ = ½, B = Aκ(κ + n/2) + ω = 2 at ω = 1.
    let p_int = BarrierParams::intermediate(1.0, 2.0, 0.5, 1.0, 50.0, 0.01, (5.0, 10.0));
    p_int.validate(&bg_mid).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let (d_int, _) = intermediate_defect(&bg_mid, &p_int, &taus).map_err(|e| e.to_string())?;
    let dt_int = t.elapsed();
    if d_int < 0.0 {
        return fail(format!("intermediate defect {d_int:.2e} < 0"));
    }

    // Large: a = 0.16, B₁ = 0.5 > C₀√a = 0.4 (flat background, |Rm| = 0).
    let p_large = BarrierParams::large(0.16, 0.5, 1.0, 100.0, 0.04, (5.0, 10.0));
    p_large.validate(&bg_big).map_err(|e| e.to_string())?;
    let t = Instant::now();
    let (d_large, _) = large_defect(&bg_big, &p_large, &taus).map_err(|e| e.to_string())?;
    let dt_large = t.elapsed();
    if d_large < 0.0 {
        return fail(format!("large defect {d_large:.2e} < 0"));
    }
    if dt_int >= Duration::from_secs(10) || dt_large >= Duration::from_secs(10) {
        return fail(format!("sweeps took {dt_int:.1?} / {dt_large:.1?} ≥ 10 s"));
    }

    // Falsifications: hypothesis margin lowered to exactly −1.
    let p_int_bad = BarrierParams::intermediate(1.0, 0.0, 0.5, 1.0, 50.0, 0.01, (5.0, 10.0));
    if p_int_bad.validate(&bg_mid).is_ok() {
        return fail("intermediate falsification passes validate");
    }
    let (d, _) = intermediate_defect(&bg_mid, &p_int_bad, &taus).map_err(|e| e.to_string())?;
    if d >= 0.0 {
        return fail(format!("intermediate falsification stayed nonnegative ({d:.2e})"));
    }
    let p_large_bad = BarrierParams::large(0.16, 0.4 - 1.0, 1.0, 100.0, 0.04, (5.0, 10.0));
    if p_large_bad.validate(&bg_big).is_ok() {
        return fail("large falsification passes validate");
    }
    let (d2, _) = large_defect(&bg_big, &p_large_bad, &taus).map_err(|e| e.to_string())?;
    if d2 >= 0.0 {
        return fail(format!("large falsification stayed nonnegative ({d2:.2e})"));
    }
    Ok(format!(
        "min defects {d_int:.1e}/{d_large:.1e} ≥ 0, falsified {d:.1e}/{d2:.1e} < 0, sweeps {dt_int:.0?}/{dt_large:.0?}"
    ))
}

// ---------------------------------------------------------------- 7

/// Seed field for the nonlinear runs: a smooth bump placed where the
/// weight e^{−f} lives (near the origin / the neck), so that normalizing
/// in L²_f keeps the pointwise norms comparable.
fn seed_near_weight(bg: &Background, seed: u64) -> SymTensorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let has_origin = bg.grid.nodes[0].abs() < 1e-12;
    let center = if has_origin {
        2.5 + 2.0 * rng.gen::<f64>()
    } else {
        2.0 * rng.gen::<f64>() - 1.0
    };
    let width = 1.0 + rng.gen::<f64>();
    let bump = bump_profile(&bg.grid, center, width);
    let (c1, c2, c3, c4) = (
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
        rng.gen::<f64>() - 0.5,
    );
    let a: Vec<f64> = bg
        .grid
        .nodes
        .iter()
        .zip(&bump)
        .map(|(&r, &u)| u * (c1 + c2 * (0.7 * r).sin()))
        .collect();
    let b: Vec<f64> = bg
        .grid
        .nodes
        .iter()
        .zip(&bump)
        .map(|(&r, &u)| u * (c3 + c4 * (0.5 * r).cos()))
        .collect();
    SymTensorField::new(a, b).unwrap()
}

fn c7_projection_dynamics() -> Crit {
    let mut summary = Vec::new();
    for (name, bg, m) in [
        ("cylinder", cylinder(2, 24.0, 1201), 6usize),
        ("gaussian", gaussian(3, 30.0, 1501), 4),
    ] {
        let opm = assemble(&bg).map_err(|e| e.to_string())?;
        let dec = spectrum(&opm, &bg, m, -0.25).map_err(|e| e.to_string())?;
        let boxspec = BoxSpec {
            lambda_star: -0.25,
            mu_u: 1e-2,
            mu_s: 1e-2,
            eps0: 0.9,
            eps1: 0.9,
            eps2: 0.9,
            tau0: 0.0,
            tau_max: 2.0,
        };
        let ctx = FlowCtx::new(&bg, &opm, &dec, boxspec.clone(), ForcingSpec::default())
            .map_err(|e| e.to_string())?;
        let mut runs = Vec::new();
        for i in 0..10 {
            // smooth compactly supported seed, normalized to a small L²_f
            // size (eigenfield combinations are unusable here: their
            // pointwise sup norms are orders of magnitude above the C⁰–C²
            // faces of the box)
            let mut h0 = seed_near_weight(&bg, 7 + i);
            let n0 = norm_f(&bg, &h0).unwrap();
            h0.scale(1e-6 / n0);
            let (traj, _, _) = evolve_until_exit(&ctx, &h0, 2e-3, 50).map_err(|e| e.to_string())?;
            if traj.len() < 3 {
                return fail(format!("{name} run {i}: trajectory too short"));
            }
            let rep = check_projection_dynamics(&traj, &dec, &bg, &boxspec, 0.0, 1.0, 1e-6)
                .map_err(|e| e.to_string())?;
            if !rep.ok_unstable || !rep.ok_stable {
                return fail(format!(
                    "{name} run {i}: differential inequality violated (margins {:.2e}/{:.2e})",
                    rep.worst_margin_u, rep.worst_margin_s
                ));
            }
            let w = envelope_w(&traj, &bg, -0.25).map_err(|e| e.to_string())?;
            runs.push((traj, w));
        }
        // single fitted C₁ for this background: smallest constant making
        // ‖𝓔₁(τ)‖ ≤ C₁ W² e^{2λ*τ} hold across every sample of every run
        let mut c1 = 0.0f64;
        for (traj, w) in &runs {
            for s in traj {
                let e1 = norm_f(&bg, &e1_nonlinearity(&bg, &s.h).unwrap()).unwrap();
                c1 = c1.max(e1 / (w * w * (2.0 * -0.25 * s.tau).exp()));
            }
        }
        if !c1.is_finite() {
            return fail(format!("{name}: fitted C1 not finite"));
        }
        for (traj, w) in &runs {
            for s in traj {
                let e1 = norm_f(&bg, &e1_nonlinearity(&bg, &s.h).unwrap()).unwrap();
                if e1 > c1 * w * w * (2.0 * -0.25 * s.tau).exp() * (1.0 + 1e-12) {
                    return fail(format!("{name}: E1 bound violated with fitted C1"));
                }
            }
        }
        summary.push(format!("{name} C1 = {c1:.2e}"));
    }
    Ok(format!("20 trajectories ok; {}", summary.join(", ")))
}

// ---------------------------------------------------------------- 8

fn c8_shooting() -> Crit {
    let t_all = Instant::now();
    let bg = cylinder(2, 24.0, 1201);
    let opm = assemble(&bg).map_err(|e| e.to_string())?;
    let dec = spectrum(&opm, &bg, 6, -0.25).map_err(|e| e.to_string())?;
    let boxspec = BoxSpec {
        lambda_star: -0.25,
        mu_u: 1e-2,
        mu_s: 1e-2,
        eps0: 5e-2,
        eps1: 5e-2,
        eps2: 5e-2,
        tau0: 4.0,
        tau_max: 24.0,
    };
    let mut summary = Vec::new();
    for (label, forcing) in [
        ("off", ForcingSpec::default()),
        (
            "on",
            ForcingSpec {
                c0: 1.0,
                gamma0: 100.0,
                profile: ForcingProfile::AngularBump,
            },
        ),
    ] {
        let cfg = ShootConfig {
            p_bar: 1e-3,
            gamma0: 0.9,
            boxspec: boxspec.clone(),
            forcing: forcing.clone(),
            dtau: 2e-3,
            k_active: 2,
        };
        let ctx = FlowCtx::new(&bg, &opm, &dec, boxspec.clone(), forcing)
            .map_err(|e| e.to_string())?;
        let out = find_p_star(&cfg, &ctx).map_err(|e| e.to_string())?;
        let tol = 1e-10 * cfg.ball_radius();
        if out.bracket_width > tol {
            return fail(format!(
                "forcing {label}: bracket width {:.2e} > {tol:.2e}",
                out.bracket_width
            ));
        }
        if out.status != Status::Inside {
            return fail(format!(
                "forcing {label}: tuned trajectory exits with {} at τ = {:.3}",
                out.status, out.tau_exit
            ));
        }
        if !out.alternation {
            return fail(format!("forcing {label}: no alternation certificate"));
        }
        // Decay certificate: either the fitted log-norm slope matches λ*,
        // or the tuned trajectory is null to working precision and the
        // certificate is vacuous.
        let floor = out
            .trajectory
            .iter()
            .map(|s| s.norms.l2f / (-0.25f64 * s.tau).exp())
            .fold(0.0f64, f64::max);
        let slope_desc = match out.decay_slope {
            Some(s) if (s + 0.25).abs() <= 0.05 => format!("slope {s:.3}"),
            _ if floor <= 1e-6 * boxspec.mu_u => "slope vacuous (null trajectory)".into(),
            Some(s) => {
                return fail(format!(
                    "forcing {label}: slope {s:.3} outside λ* ± 0.05 and trajectory not null \
                     (rescaled peak {floor:.2e})"
                ))
            }
            None => {
                return fail(format!(
                    "forcing {label}: no slope and trajectory not null (peak {floor:.2e})"
                ))
            }
        };
        summary.push(format!("{label}: width {:.1e}, {slope_desc}", out.bracket_width));
    }
    let dt = t_all.elapsed();
    if dt >= Duration::from_secs(600) {
        return fail(format!("shooting took {dt:.1?} ≥ 10 min"));
    }
    Ok(format!("{} in {dt:.0?}", summary.join("; ")))
}

// ---------------------------------------------------------------- 9

fn c9_cone_scaling() -> Crit {
    let sup_rm = |r1: f64| {
        let grid = RadialGrid::uniform(0.05, 5.0 * r1, 8001).unwrap();
        let bg = make_rounded_cone(2.0, r1, grid).unwrap();
        bg.grid
            .nodes
            .iter()
            .zip(&bg.rm_norm)
            .filter(|(&r, _)| r >= r1 / 2.0)
            .map(|(_, &x)| x)
            .fold(0.0f64, f64::max)
    };
    let ratio = sup_rm(8.0) / sup_rm(4.0);
    if (ratio - 0.25).abs() > 0.025 {
        return fail(format!("sup|Rm| ratio {ratio:.3} deviates from ¼ by > 10%"));
    }
    Ok(format!("sup|Rm| ratio {ratio:.3} (expected 0.25 ± 10%)"))
}

// ---------------------------------------------------------------- 10

const DET_SPECTRUM: &str = r#"
[background]
kind = "cylinder"
k = 2
[background.grid]
r_max = 16.0
N = 401

[operator]
m_modes = 6
lambda_star = -0.25
"#;

const DET_FLOW: &str = r#"
[background]
kind = "cylinder"
k = 2
[background.grid]
r_max = 16.0
N = 401

[operator]
m_modes = 6
lambda_star = -0.25

[flow]
dtau = 1e-3
tau0 = 3.0
tau_max = 4.0
[flow.forcing]
C0 = 1.0
Gamma0 = 10.0
profile = "angular_bump"

[box]
mu_u = 0.9
mu_s = 0.9
eps0 = 0.9
eps1 = 0.9
eps2 = 0.9
"#;

const DET_BARRIER: &str = r#"
[background]
kind = "gaussian"
n = 3
[background.grid]
r_max = 30.0
N = 1501

[barriers]
kind = "Intermediate"
coef_a = 1.0
coef_b = 2.0
kappa = 0.5
omega = 1.0
level_a = 0.0
coef_b1 = 0.0
forcing_c0 = 0.0
cn = 4.0
eps = 0.01
gamma_big = 50.0
gamma_small = 0.01
tau_window = [5.0, 10.0]
"#;

const DET_SHOOT: &str = r#"
[background]
kind = "cylinder"
k = 2
[background.grid]
r_max = 16.0
N = 401

[operator]
m_modes = 6
lambda_star = -0.25

[flow]
dtau = 5e-3
tau0 = 2.0
tau_max = 6.0

[box]
mu_u = 5e-2
mu_s = 5e-2
eps0 = 0.5
eps1 = 0.5
eps2 = 0.5

[shooting]
p_bar = 2.5e-2
gamma0 = 0.9
K_active = 1
"#;

/// Bytes of every regular file in `dir`, keyed by file name, with the
/// manifest's wall-time line blanked out.
fn output_snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            let name = e.file_name().into_string().unwrap();
            let bytes = std::fs::read(e.path()).unwrap();
            (name, bytes)
        })
        .collect();
    files.sort();
    for (name, bytes) in &mut files {
        if name == "manifest.json" {
            let text = String::from_utf8(bytes.clone()).unwrap();
            *bytes = text
                .lines()
                .filter(|l| !l.contains("wall_time_ms"))
                .collect::<Vec<_>>()
                .join("\n")
                .into_bytes();
        }
    }
    files
}

fn c10_determinism() -> Crit {
    let bin = env!("CARGO_BIN_EXE_shrinker-lab");
    let work = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cases = [
        ("spectrum", DET_SPECTRUM),
        ("flow", DET_FLOW),
        ("barrier", DET_BARRIER),
        ("shoot", DET_SHOOT),
    ];
    let mut n_files = 0usize;
    for (sub, cfg_text) in cases {
        let cfg_path = work.path().join(format!("{sub}.toml"));
        std::fs::write(&cfg_path, cfg_text).map_err(|e| e.to_string())?;
        let mut snaps = Vec::new();
        for run in 0..2 {
            let out_dir = work.path().join(format!("{sub}-{run}"));
            let status = Command::new(bin)
                .arg(sub)
                .arg("--config")
                .arg(&cfg_path)
                .env("SHRINKER_LAB_OUT", &out_dir)
                .status()
                .map_err(|e| e.to_string())?;
            if !status.success() {
                return fail(format!("{sub} run {run}: exit status {status}"));
            }
            snaps.push(output_snapshot(&out_dir));
        }
        if snaps[0].is_empty() {
            return fail(format!("{sub}: no outputs written"));
        }
        if snaps[0] != snaps[1] {
            let diff: Vec<&String> = snaps[0]
                .iter()
                .zip(&snaps[1])
                .filter(|(a, b)| a != b)
                .map(|(a, _)| &a.0)
                .collect();
            return fail(format!("{sub}: reruns differ in {diff:?}"));
        }
        n_files += snaps[0].len();
    }
    Ok(format!("4 configs, {n_files} files byte-identical across reruns"))
}

// ----------------------------------------------------------------

#[test]
fn acceptance() {
    let criteria: Vec<(&str, fn() -> Crit)> = vec![
        ("1 soliton identities", c1_soliton_identities),
        ("2 spectral anchors", c2_spectral_anchors),
        ("3 self-adjointness/orthonormality", c3_selfadjoint_orthonormal),
        ("4 weighted inequalities", c4_weighted_inequalities),
        ("5 semigroup accuracy", c5_semigroup),
        ("6 barrier verification", c6_barriers),
        ("7 projection dynamics", c7_projection_dynamics),
        ("8 shooting", c8_shooting),
        ("9 rounded-cone scaling", c9_cone_scaling),
        ("10 determinism", c10_determinism),
    ];
    let mut failures = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("criterion {name}: PASS — {detail}"),
            Err(detail) => {
                println!("criterion {name}: FAIL — {detail}");
                failures.push(name);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
