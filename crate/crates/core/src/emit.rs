//! Deterministic result emission: CSV with a documented header comment
//! and JSON rendered with sorted keys.  All floating-point values are
//! printed with 17 significant digits so reruns are byte-identical and
//! round-trip exactly.

use std::path::Path;

use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::barriers::{defect_field, BarrierParams};
use crate::error::Result;
use crate::flow::FlowState;
use crate::geometry::Background;
use crate::operator::SpectralDecomposition;
use crate::shooting::ShootOutcome;

/// 17 significant digits, scientific notation; round-trips any f64.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders JSON with object keys in sorted order (serde_json's default
/// map) and all numbers through [`fmt_float`].
pub fn render_json(v: &Value) -> String {
    let mut s = String::new();
    render_into(v, 0, &mut s);
    s.push('\n');
    s
}

fn render_into(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                out.push_str(&i.to_string());
            } else if let Some(u) = n.as_u64() {
                out.push_str(&u.to_string());
            } else {
                out.push_str(&fmt_float(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => {
            out.push_str(&Value::String(s.clone()).to_string());
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad);
                out.push_str("  ");
                render_into(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            out.push_str("{\n");
            let n = map.len();
            for (i, (k, val)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str("  ");
                out.push_str(&Value::String(k.clone()).to_string());
                out.push_str(": ");
                render_into(val, indent + 1, out);
                out.push_str(if i + 1 < n { ",\n" } else { "\n" });
            }
            out.push_str(&pad);
            out.push('}');
        }
    }
}

/// CSV text: a `#` comment line documenting the columns, the column
/// header, then the rows.  An empty row set yields a header-only file.
pub fn csv_text(comment: &str, columns: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    s.push_str("# ");
    s.push_str(comment);
    s.push('\n');
    s.push_str(&columns.join(","));
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), columns.len());
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

/// Background profile table.
pub fn background_csv(bg: &Background) -> String {
    let f = |x: f64| fmt_float(x);
    let mut rows = Vec::with_capacity(bg.grid.len());
    for i in 0..bg.grid.len() {
        rows.push(vec![
            f(bg.grid.nodes[i]),
            f(bg.psi[i]),
            f(bg.psi1[i]),
            f(bg.f.as_ref().map_or(f64::NAN, |v| v[i])),
            f(bg.scalar_curv[i]),
            f(bg.rm_norm[i]),
        ]);
    }
    csv_text(
        "radial coordinate, warping function and its derivative, potential (NaN if none), scalar curvature, |Rm|",
        &["r", "psi", "psi1", "f", "R", "rm_norm"],
        &rows,
    )
}

/// Spectrum summary (eigenvalues stay in descending order).
pub fn spectrum_json(dec: &SpectralDecomposition) -> String {
    render_json(&crate::operator::decomposition_json(dec))
}

/// Eigenfield table: radial coordinate then (a_j, b_j) per mode.
pub fn eigenfields_csv(bg: &Background, dec: &SpectralDecomposition) -> String {
    let mut cols: Vec<String> = vec!["r".into()];
    for j in 0..dec.eigenfields.len() {
        cols.push(format!("a{j}"));
        cols.push(format!("b{j}"));
    }
    let col_refs: Vec<&str> = cols.iter().map(|s| s.as_str()).collect();
    let mut rows = Vec::with_capacity(bg.grid.len());
    for i in 0..bg.grid.len() {
        let mut row = vec![fmt_float(bg.grid.nodes[i])];
        for h in &dec.eigenfields {
            row.push(fmt_float(h.a[i]));
            row.push(fmt_float(h.b[i]));
        }
        rows.push(row);
    }
    csv_text(
        "L2_f-orthonormal eigenfields, radial (a) and angular (b) components per mode",
        &col_refs,
        &rows,
    )
}

/// Trajectory norms and box status per retained sample.
pub fn trajectory_csv(traj: &[FlowState]) -> String {
    let rows: Vec<Vec<String>> = traj
        .iter()
        .map(|s| {
            vec![
                fmt_float(s.tau),
                fmt_float(s.norms.l2f),
                fmt_float(s.norms.l2f_u),
                fmt_float(s.norms.l2f_s),
                fmt_float(s.norms.c0),
                fmt_float(s.norms.c1),
                fmt_float(s.norms.c2),
                s.status.to_string(),
            ]
        })
        .collect();
    csv_text(
        "rescaled time, L2_f norms (total/unstable/stable), sup norms of h and its first two derivatives, box status",
        &["tau", "l2f", "l2f_u", "l2f_s", "c0", "c1", "c2", "status"],
        &rows,
    )
}

/// Barrier defect field over the region, one row per (node, tau) sample.
pub fn defect_csv(bg: &Background, p: &BarrierParams, grid_tau: &[f64]) -> Result<String> {
    let mut rows = Vec::new();
    for &tau in grid_tau {
        let d = defect_field(bg, p, tau)?;
        for (i, &di) in d.iter().enumerate() {
            if di.is_finite() {
                rows.push(vec![
                    fmt_float(bg.grid.nodes[i]),
                    fmt_float(tau),
                    fmt_float(di),
                ]);
            }
        }
    }
    Ok(csv_text(
        "parabolic defect of the barrier over its space-time region",
        &["r", "tau", "defect"],
        &rows,
    ))
}

/// Shooting outcome summary.
pub fn shoot_json(out: &ShootOutcome) -> String {
    render_json(&serde_json::json!({
        "p_star": out.p_star,
        "bracket_width": out.bracket_width,
        "status": out.status.to_string(),
        "tau_exit": out.tau_exit,
        "decay_slope": out.decay_slope,
        "alternation": out.alternation,
    }))
}

/// SHA-256 of the canonical config text, hex-encoded.
pub fn config_hash(config_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(config_text.as_bytes());
    format!("{:x}", h.finalize())
}

/// Machine-readable run manifest.  `wall_time_ms` varies between runs and
/// is excluded from byte-level reproducibility comparisons.
pub fn manifest_json(
    subcommand: &str,
    config_text: &str,
    wall_time_ms: u64,
    summary: Value,
) -> String {
    render_json(&serde_json::json!({
        "subcommand": subcommand,
        "config_sha256": config_hash(config_text),
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_ms": wall_time_ms,
        "summary": summary,
    }))
}

/// Writes `text` to `dir/name`, creating the directory as needed.
pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}
