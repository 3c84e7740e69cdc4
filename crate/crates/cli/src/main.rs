//! `shrinker-lab` — config-driven runner for the shrinking-soliton
//! laboratory.
//!
//! ```text
//! shrinker-lab <subcommand> --config <path> [--falsify] [--threads N] [--out DIR]
//! ```
//!
//! Subcommands: `background`, `spectrum`, `flow`, `barrier`, `shoot`, and
//! `all` (runs every stage whose config section is present).  Results are
//! written under the output directory (`--out`, else the env var
//! `SHRINKER_LAB_OUT`, else `output.dir` from the config) together with a
//! machine-readable `manifest.json` carrying the config hash, version,
//! wall time, and a per-stage summary.  All emission is deterministic:
//! rerunning the same config reproduces every output byte-for-byte except
//! the manifest's wall time.
//!
//! Exit codes: 0 success, 1 configuration/validation failure, 2 numerical
//! failure.  With `--falsify`, the `barrier` stage expects its hypothesis
//! to be violated and reports the negative defect as a success.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use shrinker_lab_core::barriers::{intermediate_defect, large_defect, BarrierKind};
use shrinker_lab_core::config::ScenarioConfig;
use shrinker_lab_core::emit;
use shrinker_lab_core::flow::{evolve_until_exit, FlowCtx};
use shrinker_lab_core::geometry::soliton_residuals;
use shrinker_lab_core::operator::{assemble, spectrum};
use shrinker_lab_core::shooting::find_p_star;
use shrinker_lab_core::tensor::SymTensorField;
use shrinker_lab_core::{Error, Result};

#[derive(Parser)]
#[command(name = "shrinker-lab", about, version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Scenario configuration (TOML)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Expect hypothesis violations (barrier falsification runs)
    #[arg(long, global = true)]
    falsify: bool,
    /// Worker threads for parallel stages
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides config; env SHRINKER_LAB_OUT overrides both)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Cmd {
    /// Build the background and report its soliton residuals
    Background,
    /// Assemble the weighted operator and export its top spectrum
    Spectrum,
    /// Run the perturbation flow (forcing-driven, zero initial data)
    Flow,
    /// Evaluate barrier defects over their space-time region
    Barrier,
    /// Search the unstable coefficients for the non-exiting trajectory
    Shoot,
    /// Every stage whose config section is present
    All,
}

impl Cmd {
    fn name(self) -> &'static str {
        match self {
            Cmd::Background => "background",
            Cmd::Spectrum => "spectrum",
            Cmd::Flow => "flow",
            Cmd::Barrier => "barrier",
            Cmd::Shoot => "shoot",
            Cmd::All => "all",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("shrinker-lab: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// 1 for configuration/validation problems, 2 for numerical failures.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("--config <path> is required".into()))?;
    let config_text = std::fs::read_to_string(config_path)?;
    let cfg = ScenarioConfig::from_str(&config_text)?;
    let out_dir: PathBuf = std::env::var_os("SHRINKER_LAB_OUT")
        .map(PathBuf::from)
        .or_else(|| cli.out.clone())
        .unwrap_or_else(|| PathBuf::from(cfg.output().dir));

    let started = Instant::now();
    let mut stages = serde_json::Map::new();
    match cli.cmd {
        Cmd::Background => {
            stages.insert("background".into(), stage_background(&cfg, &out_dir)?);
        }
        Cmd::Spectrum => {
            stages.insert("spectrum".into(), stage_spectrum(&cfg, &out_dir)?);
        }
        Cmd::Flow => {
            stages.insert("flow".into(), stage_flow(&cfg, &out_dir)?);
        }
        Cmd::Barrier => {
            stages.insert("barrier".into(), stage_barrier(&cfg, &out_dir, cli.falsify)?);
        }
        Cmd::Shoot => {
            stages.insert("shoot".into(), stage_shoot(&cfg, &out_dir)?);
        }
        Cmd::All => {
            stages.insert("background".into(), stage_background(&cfg, &out_dir)?);
            if cfg.operator.is_some() {
                stages.insert("spectrum".into(), stage_spectrum(&cfg, &out_dir)?);
            }
            if cfg.flow.is_some() && cfg.box_.is_some() {
                stages.insert("flow".into(), stage_flow(&cfg, &out_dir)?);
            }
            if cfg.barriers.is_some() {
                stages.insert("barrier".into(), stage_barrier(&cfg, &out_dir, cli.falsify)?);
            }
            if cfg.shooting.is_some() {
                stages.insert("shoot".into(), stage_shoot(&cfg, &out_dir)?);
            }
        }
    }

    let manifest = emit::manifest_json(
        cli.cmd.name(),
        &config_text,
        started.elapsed().as_millis() as u64,
        Value::Object(stages),
    );
    emit::write_text(&out_dir, "manifest.json", &manifest)?;
    Ok(())
}

fn stage_background(cfg: &ScenarioConfig, out: &Path) -> Result<Value> {
    let bg = cfg.build_background()?;
    emit::write_text(out, "background.csv", &emit::background_csv(&bg))?;
    let residuals = if bg.is_soliton() {
        let (re, rh, rt) = soliton_residuals(&bg)?;
        json!({ "einstein": re, "hamilton": rh, "trace": rt })
    } else {
        Value::Null
    };
    Ok(json!({ "dim": bg.dim, "nodes": bg.grid.len(), "residuals": residuals }))
}

fn stage_spectrum(cfg: &ScenarioConfig, out: &Path) -> Result<Value> {
    let bg = cfg.build_background()?;
    let op = cfg.operator()?;
    let opm = assemble(&bg)?;
    let dec = spectrum(&opm, &bg, op.m_modes, op.lambda_star)?;
    emit::write_text(out, "spectrum.json", &emit::spectrum_json(&dec))?;
    emit::write_text(out, "eigenfields.csv", &emit::eigenfields_csv(&bg, &dec))?;
    Ok(json!({ "eigenvalues": dec.eigenvalues, "K": dec.k }))
}

fn stage_flow(cfg: &ScenarioConfig, out: &Path) -> Result<Value> {
    let bg = cfg.build_background()?;
    let op = cfg.operator()?;
    let opm = assemble(&bg)?;
    let dec = spectrum(&opm, &bg, op.m_modes, op.lambda_star)?;
    let ctx = FlowCtx::new(&bg, &opm, &dec, cfg.boxspec()?, cfg.forcing()?)?;
    let h0 = SymTensorField::zeros(bg.grid.len());
    let stride = cfg.output().stride.unwrap_or(25);
    let (traj, status, tau_exit) = evolve_until_exit(&ctx, &h0, cfg.flow()?.dtau, stride)?;
    emit::write_text(out, "trajectory.csv", &emit::trajectory_csv(&traj))?;
    Ok(json!({
        "samples": traj.len(),
        "status": status.to_string(),
        "tau_exit": tau_exit,
    }))
}

fn stage_barrier(cfg: &ScenarioConfig, out: &Path, falsify: bool) -> Result<Value> {
    let bg = cfg.build_background()?;
    let p = cfg.barriers()?;
    let hypothesis = p.validate(&bg);
    if let Err(e) = &hypothesis {
        if !falsify {
            return Err(Error::Numerical(format!(
                "barrier hypothesis fails without --falsify: {e}"
            )));
        }
    } else if falsify {
        return Err(Error::InvalidParameter(
            "--falsify given but the barrier hypothesis holds".into(),
        ));
    }
    let (t0, t1) = p.tau_window;
    let samples = 21usize;
    let grid_tau: Vec<f64> = (0..samples)
        .map(|i| t0 + (t1 - t0) * i as f64 / (samples - 1) as f64)
        .collect();
    let (min_defect, (node, tau)) = match p.kind {
        BarrierKind::Intermediate => intermediate_defect(&bg, p, &grid_tau)?,
        BarrierKind::Large => large_defect(&bg, p, &grid_tau)?,
    };
    emit::write_text(out, "defect.csv", &emit::defect_csv(&bg, p, &grid_tau)?)?;
    if falsify {
        if min_defect >= 0.0 {
            return Err(Error::Numerical(format!(
                "falsification run stayed nonnegative (min defect {min_defect:.3e})"
            )));
        }
        println!("barrier: falsified as expected (min defect {min_defect:.3e})");
    } else if min_defect < 0.0 {
        return Err(Error::Numerical(format!(
            "barrier defect negative at node {node}, tau {tau}: {min_defect:.3e}"
        )));
    }
    Ok(json!({
        "min_defect": min_defect,
        "argmin_node": node,
        "argmin_tau": tau,
        "falsified": falsify,
    }))
}

fn stage_shoot(cfg: &ScenarioConfig, out: &Path) -> Result<Value> {
    let bg = cfg.build_background()?;
    let op = cfg.operator()?;
    let opm = assemble(&bg)?;
    let dec = spectrum(&opm, &bg, op.m_modes, op.lambda_star)?;
    let shoot_cfg = cfg.shoot_config()?;
    let ctx = FlowCtx::new(&bg, &opm, &dec, shoot_cfg.boxspec.clone(), shoot_cfg.forcing.clone())?;
    let outcome = find_p_star(&shoot_cfg, &ctx)?;
    emit::write_text(out, "shoot.json", &emit::shoot_json(&outcome))?;
    emit::write_text(
        out,
        "trajectory.csv",
        &emit::trajectory_csv(&outcome.trajectory),
    )?;
    Ok(json!({
        "p_star": outcome.p_star,
        "bracket_width": outcome.bracket_width,
        "status": outcome.status.to_string(),
        "decay_slope": outcome.decay_slope,
        "alternation": outcome.alternation,
    }))
}
