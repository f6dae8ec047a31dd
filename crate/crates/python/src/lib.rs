//! Python bindings: domains, spectra, bound evaluation, the mass-deficit
//! diagnostic and the case-file harness.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use spectral_bounds::analytic::analytic_spectrum;
use spectral_bounds::bounds::{self as sb_bounds, BoundEvaluation, BoundKind};
use spectral_bounds::fdm::{self, DiscreteLaplacian, SolverConfig};
use spectral_bounds::fourier::{self, GridSpec};
use spectral_bounds::geometry::{parse_mask, DomainSpec, Shape};
use spectral_bounds::report::{self, CaseFile};
use spectral_bounds::special;
use spectral_bounds::spectrum::Spectrum as CoreSpectrum;

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Domain", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyDomain {
    inner: DomainSpec,
}

#[pymethods]
impl PyDomain {
    #[staticmethod]
    #[pyo3(name = "box")]
    fn box_(lengths: Vec<f64>) -> PyResult<Self> {
        Ok(Self {
            inner: DomainSpec::new_box(&lengths).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn ball(dim: usize, radius: f64) -> PyResult<Self> {
        Ok(Self {
            inner: DomainSpec::new_ball(dim, radius).map_err(value_err)?,
        })
    }

    #[staticmethod]
    fn ball_with_volume(dim: usize, volume: f64) -> PyResult<Self> {
        Ok(Self {
            inner: DomainSpec::ball_with_volume(dim, volume).map_err(value_err)?,
        })
    }

    /// Mask from `MASK2D W H h` text.
    #[staticmethod]
    fn mask(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: DomainSpec::new_mask(parse_mask(text).map_err(value_err)?),
        })
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label.clone()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    #[getter]
    fn moment_of_inertia(&self) -> f64 {
        self.inner.moment_of_inertia()
    }

    #[getter]
    fn centroid(&self) -> Vec<f64> {
        self.inner.centroid()
    }

    fn __repr__(&self) -> String {
        format!("Domain({})", self.inner.label)
    }
}

#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum {
    inner: CoreSpectrum,
}

#[pymethods]
impl PySpectrum {
    /// Closed-form spectrum of a box or ball.
    #[staticmethod]
    fn analytic(domain: &PyDomain, count: usize) -> PyResult<Self> {
        Ok(Self {
            inner: analytic_spectrum(&domain.inner, count).map_err(value_err)?,
        })
    }

    /// Finite-difference spectrum of a mask, optionally extrapolated.
    #[staticmethod]
    #[pyo3(signature = (domain, count, richardson = false))]
    fn fdm(domain: &PyDomain, count: usize, richardson: bool) -> PyResult<Self> {
        let Shape::Mask(mask) = domain.inner.shape() else {
            return Err(PyValueError::new_err("finite differences need a mask domain"));
        };
        let cfg = SolverConfig::new(count);
        let run = |m| -> PyResult<CoreSpectrum> {
            fdm::smallest_eigs(&DiscreteLaplacian::from_mask(m), &cfg)
                .map_err(|e| PyRuntimeError::new_err(e.to_string()))
        };
        let coarse = run(mask.clone())?;
        let inner = if richardson {
            let fine = run(mask.refine_nodes())?;
            fdm::richardson_extrapolate(&coarse, &fine).map_err(|e| PyRuntimeError::new_err(e.to_string()))?
        } else {
            coarse
        };
        Ok(Self { inner })
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    #[getter]
    fn provenance(&self) -> &'static str {
        self.inner.provenance().as_str()
    }

    #[getter]
    fn discretization_tolerance(&self) -> f64 {
        self.inner.discretization_tolerance()
    }

    #[getter]
    fn domain(&self) -> PyDomain {
        PyDomain {
            inner: self.inner.domain().clone(),
        }
    }

    fn to_csv(&self) -> String {
        self.inner.to_csv()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "BoundEvaluation", frozen, get_all)]
struct PyEvaluation {
    kind: String,
    n: usize,
    k: Option<usize>,
    l: Option<usize>,
    eta: Option<f64>,
    lhs: f64,
    rhs: f64,
    margin: f64,
    sharpness: f64,
    verified: bool,
    deflation: f64,
}

impl From<BoundEvaluation> for PyEvaluation {
    fn from(e: BoundEvaluation) -> Self {
        Self {
            kind: e.kind.as_str().into(),
            n: e.params.n,
            k: e.params.k,
            l: e.params.l,
            eta: e.params.eta,
            lhs: e.lhs,
            rhs: e.rhs,
            margin: e.margin,
            sharpness: e.sharpness,
            verified: e.verified,
            deflation: e.deflation,
        }
    }
}

#[pymethods]
impl PyEvaluation {
    fn __repr__(&self) -> String {
        format!(
            "BoundEvaluation({} n={} lhs={} rhs={} verified={})",
            self.kind, self.n, self.lhs, self.rhs, self.verified
        )
    }
}

/// Evaluate one bound kind (`liyau-sum`, `thm1`, ...) at index `n`.
#[pyfunction]
#[pyo3(signature = (spectrum, kind, n, k = None, l = None, eta = None, c_melas = None))]
fn evaluate(
    spectrum: &PySpectrum,
    kind: &str,
    n: usize,
    k: Option<usize>,
    l: Option<usize>,
    eta: Option<f64>,
    c_melas: Option<f64>,
) -> PyResult<PyEvaluation> {
    let s = &spectrum.inner;
    let kind = BoundKind::parse(kind).ok_or_else(|| value_err(format!("unknown bound kind {kind:?}")))?;
    let need = |v: Option<usize>, what: &str| v.ok_or_else(|| value_err(format!("{} needs {what}", kind.as_str())));
    let eval = match kind {
        BoundKind::LiyauSum => sb_bounds::eval_liyau_sum(s, n),
        BoundKind::LiyauSingle => sb_bounds::eval_liyau_single(s, n),
        BoundKind::Polya => sb_bounds::eval_polya(s, n),
        BoundKind::Melas => sb_bounds::eval_melas(s, n, c_melas),
        BoundKind::FaberKrahn => sb_bounds::eval_faber_krahn(s),
        BoundKind::Thm1 => sb_bounds::eval_thm1(s, n, need(k, "k")?),
        BoundKind::Thm2 => sb_bounds::eval_thm2(s, n, need(l, "l")?),
        BoundKind::Avg => sb_bounds::eval_avg(s, n),
        BoundKind::Lemma1 | BoundKind::Lemma1Single => {
            let eta = eta.ok_or_else(|| value_err("lemma1 needs eta"))?;
            if kind == BoundKind::Lemma1 {
                sb_bounds::eval_lemma1(s, n, eta)
            } else {
                sb_bounds::eval_lemma1_single(s, n, eta)
            }
        }
    };
    Ok(eval.map_err(value_err)?.into())
}

#[pyfunction]
fn liyau_sum_bound(n: usize, dim: usize, volume: f64) -> f64 {
    sb_bounds::liyau_sum_bound(n, dim, volume)
}

#[pyfunction]
fn liyau_single_bound(n: usize, dim: usize, volume: f64) -> f64 {
    sb_bounds::liyau_single_bound(n, dim, volume)
}

#[pyfunction]
fn polya_bound(n: usize, dim: usize, volume: f64) -> f64 {
    sb_bounds::polya_bound(n, dim, volume)
}

#[pyfunction]
fn faber_krahn_bound(dim: usize, volume: f64) -> PyResult<f64> {
    sb_bounds::faber_krahn_bound(dim, volume).map_err(value_err)
}

#[pyfunction]
fn thm2_admissible(n: usize, l: usize, dim: usize) -> bool {
    sb_bounds::thm2_admissible(n, l, dim)
}

#[pyfunction]
fn thm2_factor(n: usize, l: usize, dim: usize) -> f64 {
    sb_bounds::thm2_factor(n, l, dim)
}

#[pyfunction]
fn lemma1_factor(eta: f64, dim: usize) -> PyResult<f64> {
    sb_bounds::lemma1_factor(eta, dim).map_err(value_err)
}

#[pyfunction]
fn bessel_j(nu: f64, x: f64) -> PyResult<f64> {
    special::bessel_j(nu, x).map_err(value_err)
}

#[pyfunction]
fn bessel_zero(nu: f64, k: usize) -> PyResult<f64> {
    special::bessel_zero(nu, k).map_err(value_err)
}

#[pyclass(name = "EtaDiagnostic", frozen, get_all)]
struct PyEta {
    k: usize,
    r: f64,
    s: f64,
    eta: f64,
    mass_inside: f64,
    total_mass: f64,
    approximate: bool,
    lemma1_factor: f64,
    lemma1_lhs: f64,
    lemma1_rhs: f64,
    lemma1_verified: bool,
    max_g: f64,
    plancherel_error: f64,
}

#[pymethods]
impl PyEta {
    fn __repr__(&self) -> String {
        format!("EtaDiagnostic(k={} eta={} verified={})", self.k, self.eta, self.lemma1_verified)
    }
}

/// Mass deficit of the first `k` eigenfunctions of a box or mask.
#[pyfunction]
fn eta(domain: &PyDomain, k: usize) -> PyResult<PyEta> {
    let profile = fourier::g_profile(&domain.inner, k, &GridSpec::default()).map_err(value_err)?;
    let d = fourier::eta(&profile).map_err(value_err)?;
    Ok(PyEta {
        k: d.k,
        r: d.r,
        s: d.s,
        eta: d.eta,
        mass_inside: d.mass_inside,
        total_mass: d.total_mass,
        approximate: d.approximate,
        lemma1_factor: d.lemma1_factor,
        lemma1_lhs: d.lemma1_lhs,
        lemma1_rhs: d.lemma1_rhs,
        lemma1_verified: d.lemma1_verified,
        max_g: profile.max_value(),
        plancherel_error: profile.plancherel_error(),
    })
}

/// Run a JSON case file (text); paths resolve against `base`. Returns the
/// report as JSON text.
#[pyfunction]
#[pyo3(signature = (case_json = None, base = "."))]
fn run_cases(case_json: Option<&str>, base: &str) -> PyResult<String> {
    let file = match case_json {
        Some(t) => CaseFile::parse(t).map_err(value_err)?,
        None => report::default_matrix(),
    };
    let rep = report::run_cases(&file, Path::new(base)).map_err(value_err)?;
    Ok(rep.to_json())
}

#[pymodule]
#[pyo3(name = "spectral_bounds")]
fn spectral_bounds_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDomain>()?;
    m.add_class::<PySpectrum>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_class::<PyEta>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(liyau_sum_bound, m)?)?;
    m.add_function(wrap_pyfunction!(liyau_single_bound, m)?)?;
    m.add_function(wrap_pyfunction!(polya_bound, m)?)?;
    m.add_function(wrap_pyfunction!(faber_krahn_bound, m)?)?;
    m.add_function(wrap_pyfunction!(thm2_admissible, m)?)?;
    m.add_function(wrap_pyfunction!(thm2_factor, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_factor, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_j, m)?)?;
    m.add_function(wrap_pyfunction!(bessel_zero, m)?)?;
    m.add_function(wrap_pyfunction!(eta, m)?)?;
    m.add_function(wrap_pyfunction!(run_cases, m)?)?;
    Ok(())
}
