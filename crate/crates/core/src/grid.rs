//! Uniform 1-D grids with quadrature weights for the weighted measure
//! `e^{−f} dV = e^{−f(r)} v(r) dr`, where `v` is the angular-integrated
//! volume element.

use crate::error::{Error, Result};

/// 1-D discretization of the radial/axial coordinate.
///
/// `quad_weights` realize `∫ g e^{−f} dV ≈ Σ w_i g_i` as the trapezoid rule
/// applied to the density `ρ = e^{−f} v`; they are filled in by the
/// background constructors once `f` is known.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub spacing: f64,
    pub volume_density: Vec<f64>,
    pub quad_weights: Vec<f64>,
}

impl RadialGrid {
    /// Uniform grid on `[r_min, r_max]` with `n` nodes.  Densities and
    /// weights start zeroed; background constructors populate them.
    pub fn uniform(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if n < 8 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 8 nodes, got {n}"
            )));
        }
        if !(r_max > r_min) {
            return Err(Error::InvalidParameter(format!(
                "grid range invalid: [{r_min}, {r_max}]"
            )));
        }
        let spacing = (r_max - r_min) / (n - 1) as f64;
        let nodes = (0..n).map(|i| r_min + spacing * i as f64).collect();
        Ok(Self {
            nodes,
            spacing,
            volume_density: vec![0.0; n],
            quad_weights: vec![0.0; n],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Trapezoid weights for `∫ ρ(r) g(r) dr` given nodal `ρ`.
    pub(crate) fn trapezoid_weights(&self, rho: &[f64]) -> Vec<f64> {
        let n = self.len();
        let h = self.spacing;
        (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                c * h * rho[i]
            })
            .collect()
    }

    /// Checks the structural invariants (monotone uniform nodes, nonnegative
    /// weights, weight total consistent with the trapezoid rule on
    /// `e^{−f} v`).
    pub fn validate(&self, rho: &[f64]) -> Result<()> {
        let n = self.len();
        for i in 1..n {
            if self.nodes[i] <= self.nodes[i - 1] {
                return Err(Error::InvalidParameter("nodes not increasing".into()));
            }
            let d = self.nodes[i] - self.nodes[i - 1];
            if (d - self.spacing).abs() > 1e-12 * self.spacing.abs().max(1.0) {
                return Err(Error::InvalidParameter("spacing not uniform".into()));
            }
        }
        if self.quad_weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter("negative quadrature weight".into()));
        }
        let total: f64 = self.quad_weights.iter().sum();
        let trap: f64 = self.trapezoid_weights(rho).iter().sum();
        if (total - trap).abs() > 1e-12 * trap.abs().max(1e-300) {
            return Err(Error::InvalidParameter(format!(
                "weight total {total} deviates from trapezoid {trap}"
            )));
        }
        Ok(())
    }
}
