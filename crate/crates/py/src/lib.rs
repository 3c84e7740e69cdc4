//! Python bindings for the shrinking-soliton laboratory.
//!
//! Exposes the main types and operations of the core crate:
//! backgrounds, the weighted operator with its spectrum and projections,
//! the perturbation flow, and barrier defects.
//!
//! ```python
//! import shrinker_lab as sl
//! bg = sl.Background.cylinder(2, -24.0, 24.0, 801)
//! op = sl.Operator(bg)
//! dec = op.spectrum(6, -0.25)
//! print(dec.eigenvalues)  # ≈ [1, 0.5, 0, 0, -0.5, -0.5]
//! ```

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use shrinker_lab_core::barriers;
use shrinker_lab_core::flow::{self, BoxSpec, FlowCtx, ForcingSpec};
use shrinker_lab_core::geometry::{
    self, make_cylinder, make_gaussian, make_rounded_cone,
};
use shrinker_lab_core::grid::RadialGrid;
use shrinker_lab_core::operator::{self, OperatorMatrix, SpectralDecomposition};
use shrinker_lab_core::tensor::SymTensorField;

fn err(e: shrinker_lab_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn field(bg: &geometry::Background, a: Vec<f64>, b: Vec<f64>) -> PyResult<SymTensorField> {
    if a.len() != bg.grid.len() || b.len() != bg.grid.len() {
        return Err(PyValueError::new_err(format!(
            "field components must have {} entries",
            bg.grid.len()
        )));
    }
    SymTensorField::new(a, b).map_err(err)
}

/// Radially reduced soliton background.
#[pyclass(from_py_object)]
#[derive(Clone)]
struct Background {
    inner: geometry::Background,
}

#[pymethods]
impl Background {
    /// Flat Gaussian shrinker of dimension `n` on `[r_min, r_max]`.
    #[staticmethod]
    fn gaussian(n: usize, r_min: f64, r_max: f64, n_nodes: usize) -> PyResult<Self> {
        let grid = RadialGrid::uniform(r_min, r_max, n_nodes).map_err(err)?;
        Ok(Self {
            inner: make_gaussian(n, grid).map_err(err)?,
        })
    }

    /// Round cylinder over S^k on `[z_min, z_max]`.
    #[staticmethod]
    fn cylinder(k: usize, z_min: f64, z_max: f64, n_nodes: usize) -> PyResult<Self> {
        let grid = RadialGrid::uniform(z_min, z_max, n_nodes).map_err(err)?;
        Ok(Self {
            inner: make_cylinder(k, grid).map_err(err)?,
        })
    }

    /// Rounded cone with opening scale `r1` and link curvature `c_link`.
    #[staticmethod]
    fn rounded_cone(
        c_link: f64,
        r1: f64,
        r_min: f64,
        r_max: f64,
        n_nodes: usize,
    ) -> PyResult<Self> {
        let grid = RadialGrid::uniform(r_min, r_max, n_nodes).map_err(err)?;
        Ok(Self {
            inner: make_rounded_cone(c_link, r1, grid).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    #[getter]
    fn nodes(&self) -> Vec<f64> {
        self.inner.grid.nodes.clone()
    }

    #[getter]
    fn psi(&self) -> Vec<f64> {
        self.inner.psi.clone()
    }

    #[getter]
    fn f(&self) -> Option<Vec<f64>> {
        self.inner.f.clone()
    }

    #[getter]
    fn scalar_curvature(&self) -> Vec<f64> {
        self.inner.scalar_curv.clone()
    }

    #[getter]
    fn rm_norm(&self) -> Vec<f64> {
        self.inner.rm_norm.clone()
    }

    /// Sup-norms of the three soliton identity residuals.
    fn soliton_residuals(&self) -> PyResult<(f64, f64, f64)> {
        geometry::soliton_residuals(&self.inner).map_err(err)
    }

    /// Weighted integral ∫ v e^{-f} dV of a nodal scalar field.
    fn weighted_integral(&self, values: Vec<f64>) -> PyResult<f64> {
        geometry::weighted_integral(&self.inner, &values).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Background(dim={}, nodes={})",
            self.inner.dim,
            self.inner.grid.len()
        )
    }
}

/// Assembled weighted Lichnerowicz operator on a background.
#[pyclass]
struct Operator {
    bg: geometry::Background,
    opm: OperatorMatrix,
}

#[pymethods]
impl Operator {
    #[new]
    fn new(bg: &Background) -> PyResult<Self> {
        let opm = operator::assemble(&bg.inner).map_err(err)?;
        Ok(Self {
            bg: bg.inner.clone(),
            opm,
        })
    }

    /// Pointwise action (Δ_f + 2Rm)h on a tensor field given as (a, b).
    fn apply(&self, a: Vec<f64>, b: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let h = field(&self.bg, a, b)?;
        let out = operator::apply(&self.bg, &h).map_err(err)?;
        Ok((out.a, out.b))
    }

    /// Weighted L²_f inner product of two tensor fields.
    fn inner_f(
        &self,
        a1: Vec<f64>,
        b1: Vec<f64>,
        a2: Vec<f64>,
        b2: Vec<f64>,
    ) -> PyResult<f64> {
        let h1 = field(&self.bg, a1, b1)?;
        let h2 = field(&self.bg, a2, b2)?;
        operator::inner_f(&self.bg, &h1, &h2).map_err(err)
    }

    /// Top `m` eigenpairs split at `lambda_star`.
    fn spectrum(&self, m: usize, lambda_star: f64) -> PyResult<Spectrum> {
        let dec = operator::spectrum(&self.opm, &self.bg, m, lambda_star).map_err(err)?;
        Ok(Spectrum {
            bg: self.bg.clone(),
            dec,
        })
    }
}

/// Top part of the spectrum with orthonormal eigenfields.
#[pyclass]
struct Spectrum {
    bg: geometry::Background,
    dec: SpectralDecomposition,
}

#[pymethods]
impl Spectrum {
    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.dec.eigenvalues.clone()
    }

    #[getter]
    #[pyo3(name = "K")]
    fn k(&self) -> usize {
        self.dec.k
    }

    #[getter]
    fn lambda_star(&self) -> f64 {
        self.dec.lambda_star
    }

    /// Components (a, b) of the j-th eigenfield.
    fn eigenfield(&self, j: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
        let h = self
            .dec
            .eigenfields
            .get(j)
            .ok_or_else(|| PyValueError::new_err(format!("no eigenfield {j}")))?;
        Ok((h.a.clone(), h.b.clone()))
    }

    /// Unstable/stable split and unstable coefficients of a field.
    fn project(
        &self,
        a: Vec<f64>,
        b: Vec<f64>,
    ) -> PyResult<((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>), Vec<f64>)> {
        let h = field(&self.bg, a, b)?;
        let (hu, hs, c) = operator::project(&self.dec, &self.bg, &h).map_err(err)?;
        Ok(((hu.a, hu.b), (hs.a, hs.b), c))
    }
}

/// Runs the perturbation flow from initial data (a, b) at `tau0` until it
/// exits the box or reaches `tau_max`.  Returns (samples, status,
/// tau_exit) where each sample is (tau, l2f, l2f_u, l2f_s, c0, c1, c2).
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (bg, a, b, m_modes, lambda_star, mu_u, mu_s, eps0, eps1, eps2, tau0, tau_max, dtau, stride=25))]
fn evolve(
    bg: &Background,
    a: Vec<f64>,
    b: Vec<f64>,
    m_modes: usize,
    lambda_star: f64,
    mu_u: f64,
    mu_s: f64,
    eps0: f64,
    eps1: f64,
    eps2: f64,
    tau0: f64,
    tau_max: f64,
    dtau: f64,
    stride: usize,
) -> PyResult<(Vec<(f64, f64, f64, f64, f64, f64, f64)>, String, f64)> {
    let opm = operator::assemble(&bg.inner).map_err(err)?;
    let dec = operator::spectrum(&opm, &bg.inner, m_modes, lambda_star).map_err(err)?;
    let boxspec = BoxSpec {
        lambda_star,
        mu_u,
        mu_s,
        eps0,
        eps1,
        eps2,
        tau0,
        tau_max,
    };
    let ctx =
        FlowCtx::new(&bg.inner, &opm, &dec, boxspec, ForcingSpec::default()).map_err(err)?;
    let h0 = field(&bg.inner, a, b)?;
    let (traj, status, tau_exit) = flow::evolve_until_exit(&ctx, &h0, dtau, stride).map_err(err)?;
    let samples = traj
        .iter()
        .map(|s| {
            (
                s.tau,
                s.norms.l2f,
                s.norms.l2f_u,
                s.norms.l2f_s,
                s.norms.c0,
                s.norms.c1,
                s.norms.c2,
            )
        })
        .collect();
    Ok((samples, status.to_string(), tau_exit))
}

/// Minimum barrier defect over the region; `params_toml` is a
/// [barriers] parameter table in TOML form.  Returns
/// (min_defect, argmin_node, argmin_tau).
#[pyfunction]
fn barrier_min_defect(
    bg: &Background,
    params_toml: &str,
    grid_tau: Vec<f64>,
) -> PyResult<(f64, usize, f64)> {
    let p: barriers::BarrierParams = toml::from_str(params_toml)
        .map_err(|e| PyValueError::new_err(format!("barrier params: {e}")))?;
    let (d, (node, tau)) = match p.kind {
        barriers::BarrierKind::Intermediate => {
            barriers::intermediate_defect(&bg.inner, &p, &grid_tau).map_err(err)?
        }
        barriers::BarrierKind::Large => {
            barriers::large_defect(&bg.inner, &p, &grid_tau).map_err(err)?
        }
    };
    Ok((d, node, tau))
}

#[pymodule]
fn shrinker_lab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Background>()?;
    m.add_class::<Operator>()?;
    m.add_class::<Spectrum>()?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(barrier_min_defect, m)?)?;
    Ok(())
}
