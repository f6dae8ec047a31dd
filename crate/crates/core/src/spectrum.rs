//! Provenance-tagged leading Dirichlet spectra.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{DomainSpec, GeometryError};
use crate::numfmt::sig17;
use crate::special::SpecialError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    AnalyticBox,
    AnalyticBall,
    FdmDiscrete,
    FdmExtrapolated,
}

impl Provenance {
    pub fn is_analytic(self) -> bool {
        matches!(self, Self::AnalyticBox | Self::AnalyticBall)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::AnalyticBox => "analytic-box",
            Self::AnalyticBall => "analytic-ball",
            Self::FdmDiscrete => "fdm-discrete",
            Self::FdmExtrapolated => "fdm-extrapolated",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SpectrumError {
    #[error("eigenvalue {index} is not strictly positive and finite ({value})")]
    NonPositive { index: usize, value: f64 },
    #[error("eigenvalues decrease at index {index}")]
    NotSorted { index: usize },
    #[error("complete_through = {complete_through} exceeds list length {len}")]
    CompleteThrough { complete_through: usize, len: usize },
    #[error("index {n} outside the complete range 1..={complete_through}")]
    IndexOutOfRange { n: usize, complete_through: usize },
    #[error("unsupported request: {0}")]
    Unsupported(String),
    #[error("enumeration budget of {budget} lattice points exceeded")]
    BudgetExceeded { budget: usize },
    #[error("operation needs an analytic spectrum, got {0}")]
    NotAnalytic(Provenance),
    #[error("spectrum CSV line {line}: {msg}")]
    Csv { line: usize, msg: String },
    #[error(transparent)]
    Special(#[from] SpecialError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// The first `len()` Dirichlet eigenvalues of a domain, repeated according
/// to multiplicity. No eigenvalue below `eigenvalue(complete_through)` is
/// missing.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    domain: DomainSpec,
    eigenvalues: Vec<f64>,
    provenance: Provenance,
    complete_through: usize,
    /// Relative deflation applied before checking lower bounds (0 for
    /// analytic spectra).
    discretization_tolerance: f64,
}

impl Spectrum {
    pub fn new(
        domain: DomainSpec,
        eigenvalues: Vec<f64>,
        provenance: Provenance,
        complete_through: usize,
    ) -> Result<Self, SpectrumError> {
        for (i, &v) in eigenvalues.iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpectrumError::NonPositive {
                    index: i + 1,
                    value: v,
                });
            }
            if i > 0 && v < eigenvalues[i - 1] {
                return Err(SpectrumError::NotSorted { index: i + 1 });
            }
        }
        if complete_through > eigenvalues.len() {
            return Err(SpectrumError::CompleteThrough {
                complete_through,
                len: eigenvalues.len(),
            });
        }
        Ok(Self {
            domain,
            eigenvalues,
            provenance,
            complete_through,
            discretization_tolerance: 0.0,
        })
    }

    pub fn with_discretization_tolerance(mut self, tol: f64) -> Self {
        self.discretization_tolerance = tol.max(0.0);
        self
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn complete_through(&self) -> usize {
        self.complete_through
    }

    pub fn discretization_tolerance(&self) -> f64 {
        self.discretization_tolerance
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// `λ_n` with 1-based `n`, restricted to the complete range.
    pub fn eigenvalue(&self, n: usize) -> Result<f64, SpectrumError> {
        self.check_index(n)?;
        Ok(self.eigenvalues[n - 1])
    }

    pub fn check_index(&self, n: usize) -> Result<(), SpectrumError> {
        if n == 0 || n > self.complete_through {
            return Err(SpectrumError::IndexOutOfRange {
                n,
                complete_through: self.complete_through,
            });
        }
        Ok(())
    }

    /// Keeps the first `n` entries.
    pub fn truncated(&self, n: usize) -> Self {
        let mut out = self.clone();
        out.eigenvalues.truncate(n);
        out.complete_through = out.complete_through.min(n);
        out
    }

    /// Copy with a replaced eigenvalue list, keeping domain and provenance.
    pub fn with_eigenvalues(&self, eigenvalues: Vec<f64>) -> Result<Self, SpectrumError> {
        let n = eigenvalues.len();
        Ok(Self::new(self.domain.clone(), eigenvalues, self.provenance, n)?
            .with_discretization_tolerance(self.discretization_tolerance))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,eigenvalue\n");
        for (i, v) in self.eigenvalues.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, sig17(*v)));
        }
        out
    }

    /// Reads `index,eigenvalue` rows; the whole list is taken as complete.
    pub fn from_csv(
        text: &str,
        domain: DomainSpec,
        provenance: Provenance,
    ) -> Result<Self, SpectrumError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == "index,eigenvalue" => {}
            _ => {
                return Err(SpectrumError::Csv {
                    line: 1,
                    msg: "expected header `index,eigenvalue`".into(),
                })
            }
        }
        let mut values = Vec::new();
        for (i, line) in lines {
            let bad = |msg: String| SpectrumError::Csv { line: i + 1, msg };
            let (idx, val) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("expected two fields in {line:?}")))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad index {idx:?}")))?;
            if idx != values.len() + 1 {
                return Err(bad(format!("expected index {}, got {idx}", values.len() + 1)));
            }
            let val: f64 = val
                .trim()
                .parse()
                .map_err(|_| bad(format!("bad eigenvalue {val:?}")))?;
            values.push(val);
        }
        let n = values.len();
        Self::new(domain, values, provenance, n)
    }
}
