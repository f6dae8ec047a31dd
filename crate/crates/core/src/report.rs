//! Declarative verification cases, the harness that runs them and the
//! JSON reports it produces.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::analytic_spectrum;
use crate::bounds::{self, BoundEvaluation, BoundKind, BoundsError};
use crate::fdm::{self, DiscreteLaplacian, FdmError, SolverConfig};
use crate::geometry::{load_mask, DomainSpec, GeometryError, MaskError, Shape};
use crate::special::SpecialError;
use crate::spectrum::{Provenance, Spectrum, SpectrumError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed case file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Mask(#[from] MaskError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Fdm(#[from] FdmError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
}

impl ReportError {
    /// Failure of a numerical method, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        let special = |e: &SpecialError| matches!(e, SpecialError::NoConvergence { .. });
        match self {
            Self::Fdm(FdmError::NoConvergence { .. } | FdmError::CountMismatch { .. }) => true,
            Self::Spectrum(SpectrumError::Special(e)) => special(e),
            Self::Bounds(BoundsError::Special(e)) => special(e),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainInput {
    Box { lengths: Vec<f64> },
    Ball { dim: usize, radius: f64 },
    /// Ball scaled to the given volume.
    BallVolume { dim: usize, volume: f64 },
    /// `MASK2D` file; relative paths resolve against the case file.
    Mask { path: PathBuf },
}

impl DomainInput {
    pub fn build(&self, base: &Path) -> Result<DomainSpec, ReportError> {
        Ok(match self {
            Self::Box { lengths } => DomainSpec::new_box(lengths)?,
            Self::Ball { dim, radius } => DomainSpec::new_ball(*dim, *radius)?,
            Self::BallVolume { dim, volume } => DomainSpec::ball_with_volume(*dim, *volume)?,
            Self::Mask { path } => DomainSpec::new_mask(load_mask(resolve(base, path)?)?),
        })
    }
}

fn resolve(base: &Path, path: &Path) -> Result<PathBuf, ReportError> {
    let full = if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    };
    if !full.exists() {
        return Err(ReportError::Config(format!(
            "referenced file {} does not exist",
            full.display()
        )));
    }
    Ok(full)
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum SpectrumSource {
    #[default]
    Analytic,
    /// Finite differences. `grid` is the cell count along the longer side:
    /// boxes are rasterized at that resolution, masks resampled to it.
    Fdm {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        grid: Option<usize>,
        #[serde(default)]
        richardson: bool,
    },
    /// `index,eigenvalue` CSV.
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        provenance: Option<Provenance>,
    },
}

/// Choice of `k` for the `thm1` family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KPolicy {
    /// `k = max(1, n/2)`.
    Half,
    /// The `k` maximizing the improvement.
    Best,
    /// Every `1 <= k <= n`.
    All,
    Fixed(usize),
}

/// Choice of `ℓ` for the `thm2` bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LPolicy {
    /// `ℓ = n`.
    Equal,
    /// Smallest admissible `ℓ`.
    Threshold,
    /// Every admissible `ℓ` with `n + ℓ <= n_max`.
    AllAdmissible,
    Fixed(usize),
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundRequest {
    pub kind: BoundKind,
    #[serde(default = "one")]
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<KPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<LPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_melas: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
}

impl BoundRequest {
    pub fn new(kind: BoundKind, n_max: usize) -> Self {
        Self {
            kind,
            n_min: 1,
            n_max,
            k: None,
            l: None,
            c_melas: None,
            eta: None,
        }
    }

    fn validate(&self) -> Result<(), ReportError> {
        let bad = |m: String| Err(ReportError::Config(format!("{}: {m}", self.kind.as_str())));
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad(format!("need 1 <= n_min <= n_max, got {}..{}", self.n_min, self.n_max));
        }
        match self.kind {
            BoundKind::Melas if self.c_melas.is_none() => {
                return bad("the Melas constant `c_melas` is required".into())
            }
            BoundKind::Lemma1 | BoundKind::Lemma1Single => match self.eta {
                None => return bad("`eta` is required".into()),
                Some(e) if !(0.0..=1.0).contains(&e) => return bad(format!("eta = {e} outside [0, 1]")),
                _ => {}
            },
            BoundKind::Thm1 => {
                if let Some(KPolicy::Fixed(k)) = self.k {
                    if k == 0 || k > self.n_min {
                        return bad(format!("fixed k = {k} must satisfy 1 <= k <= n_min"));
                    }
                }
            }
            BoundKind::Thm2 => {
                if let Some(LPolicy::Fixed(0)) = self.l {
                    return bad("fixed l must be positive".into());
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Largest eigenvalue index the request reads.
    pub fn required_count(&self, dim: usize) -> usize {
        match self.kind {
            BoundKind::FaberKrahn => 1,
            BoundKind::Thm2 => match self.l.unwrap_or(LPolicy::Equal) {
                LPolicy::Equal => 2 * self.n_max,
                LPolicy::Threshold => (self.n_min..=self.n_max)
                    .map(|n| n + bounds::thm2_threshold(n, dim))
                    .max()
                    .unwrap_or(0),
                LPolicy::AllAdmissible => self.n_max,
                LPolicy::Fixed(l) => self.n_max + l,
            },
            _ => self.n_max,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Overrides the spectrum's discretization tolerance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deflation: Option<f64>,
    /// Lanczos residual tolerance for finite-difference spectra.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<f64>,
    /// Lanczos restart budget per run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver_restarts: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationCase {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub domain: DomainInput,
    #[serde(default)]
    pub spectrum: SpectrumSource,
    pub bounds: Vec<BoundRequest>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub schema_version: u32,
    pub cases: Vec<VerificationCase>,
}

impl CaseFile {
    pub fn parse(text: &str) -> Result<Self, ReportError> {
        let file: Self = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    /// Reads and validates a case file; returns it with the directory that
    /// relative paths resolve against.
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf), ReportError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        Ok((Self::parse(&text)?, base))
    }

    pub fn validate(&self) -> Result<(), ReportError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ReportError::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let mut seen = BTreeSet::new();
        for case in &self.cases {
            if !seen.insert(case.id.as_str()) {
                return Err(ReportError::Config(format!("duplicate case id {:?}", case.id)));
            }
            if case.bounds.is_empty() {
                return Err(ReportError::Config(format!("case {:?} requests no bounds", case.id)));
            }
            for b in &case.bounds {
                b.validate()?;
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("case files serialize") + "\n"
    }
}

/// Square, 2x1 rectangle, interval and unit-area disk, `n <= 1000`, with
/// Li–Yau, `thm1`, `thm2` and the averaged statistic.
pub fn default_matrix() -> CaseFile {
    let n = 1000;
    let requests = || {
        let mut thm1 = BoundRequest::new(BoundKind::Thm1, n);
        thm1.k = Some(KPolicy::Best);
        let mut thm1_half = BoundRequest::new(BoundKind::Thm1, n);
        thm1_half.k = Some(KPolicy::Half);
        let mut thm2 = BoundRequest::new(BoundKind::Thm2, n);
        thm2.l = Some(LPolicy::Equal);
        let mut thm2_min = BoundRequest::new(BoundKind::Thm2, n);
        thm2_min.l = Some(LPolicy::Threshold);
        vec![
            BoundRequest::new(BoundKind::LiyauSum, n),
            BoundRequest::new(BoundKind::LiyauSingle, n),
            thm1,
            thm1_half,
            thm2,
            thm2_min,
            BoundRequest::new(BoundKind::Avg, n),
        ]
    };
    let case = |id: &str, domain: DomainInput| VerificationCase {
        id: id.into(),
        label: None,
        domain,
        spectrum: SpectrumSource::Analytic,
        bounds: requests(),
        tolerances: Tolerances::default(),
    };
    CaseFile {
        schema_version: SCHEMA_VERSION,
        cases: vec![
            case("disk-unit-area", DomainInput::BallVolume { dim: 2, volume: 1.0 }),
            case("interval", DomainInput::Box { lengths: vec![1.0] }),
            case("rectangle-2x1", DomainInput::Box { lengths: vec![2.0, 1.0] }),
            case("square", DomainInput::Box { lengths: vec![1.0, 1.0] }),
        ],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSummary {
    pub label: String,
    pub shape: String,
    pub dim: usize,
    pub volume: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub provenance: Provenance,
    pub count: usize,
    pub complete_through: usize,
    pub discretization_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub kind: BoundKind,
    pub total: usize,
    pub verified: usize,
    pub min_sharpness: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub verified: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_sharpness: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub worst_margin: Option<f64>,
    pub by_kind: Vec<KindSummary>,
}

impl Summary {
    pub fn of<'a>(evals: impl IntoIterator<Item = &'a BoundEvaluation>) -> Self {
        let mut s = Summary::default();
        for e in evals {
            s.total += 1;
            s.verified += e.verified as usize;
            s.min_sharpness = Some(s.min_sharpness.map_or(e.sharpness, |m| m.min(e.sharpness)));
            s.worst_margin = Some(s.worst_margin.map_or(e.margin, |m| m.min(e.margin)));
            match s.by_kind.iter_mut().find(|k| k.kind == e.kind) {
                Some(k) => {
                    k.total += 1;
                    k.verified += e.verified as usize;
                    k.min_sharpness = k.min_sharpness.min(e.sharpness);
                }
                None => s.by_kind.push(KindSummary {
                    kind: e.kind,
                    total: 1,
                    verified: e.verified as usize,
                    min_sharpness: e.sharpness,
                }),
            }
        }
        s.by_kind.sort_by_key(|k| k.kind);
        s
    }

    pub fn all_verified(&self) -> bool {
        self.verified == self.total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub case_id: String,
    pub domain: DomainSummary,
    pub spectrum: SpectrumSummary,
    pub summary: Summary,
    /// Every evaluation that did not verify.
    pub failures: Vec<BoundEvaluation>,
    pub evaluations: Vec<BoundEvaluation>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub rounding_slack: f64,
    pub solver_tolerance: f64,
    pub solver_seed: u64,
}

impl Default for Environment {
    fn default() -> Self {
        let cfg = SolverConfig::new(1);
        Self {
            version: env!("CARGO_PKG_VERSION").into(),
            rounding_slack: bounds::ROUNDING_SLACK,
            solver_tolerance: cfg.tolerance,
            solver_seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub environment: Environment,
    pub summary: Summary,
    pub records: Vec<ReportRecord>,
}

impl Report {
    pub fn all_verified(&self) -> bool {
        self.summary.all_verified()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize") + "\n"
    }
}

pub const THM2_NOTE: &str =
    "thm2: right-hand side is factor * c with the Li-Yau constant c; no n^(2/d) factor";

fn shape_name(domain: &DomainSpec) -> &'static str {
    match domain.shape() {
        Shape::Box { .. } => "box",
        Shape::Ball { .. } => "ball",
        Shape::Mask(_) => "mask",
    }
}

/// Spectrum for a case, with at least `count` eigenvalues.
pub fn case_spectrum(
    case: &VerificationCase,
    domain: &DomainSpec,
    count: usize,
    base: &Path,
) -> Result<Spectrum, ReportError> {
    build_spectrum(&case.spectrum, &case.tolerances, domain, count, base)
}

/// At least `count` eigenvalues of `domain` from `source`.
pub fn build_spectrum(
    source: &SpectrumSource,
    tolerances: &Tolerances,
    domain: &DomainSpec,
    count: usize,
    base: &Path,
) -> Result<Spectrum, ReportError> {
    let spectrum = match source {
        SpectrumSource::Analytic => {
            if matches!(domain.shape(), Shape::Mask(_)) {
                return Err(ReportError::Config(
                    "masks have no analytic spectrum; use the fdm source".into(),
                ));
            }
            analytic_spectrum(domain, count)?
        }
        SpectrumSource::Fdm { grid, richardson } => {
            let mask = match domain.shape() {
                Shape::Mask(m) => match grid {
                    Some(g) => m.resample(*g)?,
                    None => m.clone(),
                },
                Shape::Box { lengths } if lengths.len() == 2 => {
                    let g = grid.ok_or_else(|| {
                        ReportError::Config("fdm on a box needs `grid`".into())
                    })?;
                    let h = lengths[0].max(lengths[1]) / g as f64;
                    fdm::rectangle_mask(lengths[0], lengths[1], h)?
                }
                _ => {
                    return Err(ReportError::Config(
                        "fdm spectra need a mask or a 2D box".into(),
                    ))
                }
            };
            let mut cfg = SolverConfig::new(count);
            if let Some(t) = tolerances.solver {
                cfg = cfg.with_tolerance(t);
            }
            if let Some(r) = tolerances.solver_restarts {
                cfg.max_restarts = r;
            }
            let op = DiscreteLaplacian::from_mask(mask.clone());
            let coarse = fdm::smallest_eigs(&op, &cfg)?;
            if *richardson {
                let fine_op = DiscreteLaplacian::from_mask(mask.refine_nodes());
                let fine = fdm::smallest_eigs(&fine_op, &cfg)?;
                fdm::richardson_extrapolate(&coarse, &fine)?
            } else {
                coarse
            }
        }
        SpectrumSource::Csv { path, provenance } => {
            let full = resolve(base, path)?;
            let text = std::fs::read_to_string(&full).map_err(|source| ReportError::Io {
                path: full.clone(),
                source,
            })?;
            let prov = provenance.unwrap_or(match domain.shape() {
                Shape::Box { .. } => Provenance::AnalyticBox,
                Shape::Ball { .. } => Provenance::AnalyticBall,
                Shape::Mask(_) => Provenance::FdmDiscrete,
            });
            Spectrum::from_csv(&text, domain.clone(), prov)?
        }
    };
    if spectrum.complete_through() < count {
        return Err(ReportError::Config(format!(
            "{count} eigenvalues needed, the spectrum is complete through {}",
            spectrum.complete_through()
        )));
    }
    Ok(match tolerances.deflation {
        Some(t) => spectrum.with_discretization_tolerance(t),
        None => spectrum,
    })
}

fn evaluate_request(spectrum: &Spectrum, req: &BoundRequest) -> Result<Vec<BoundEvaluation>, ReportError> {
    let d = spectrum.domain().dim();
    let ns = req.n_min..=req.n_max;
    let mut out = Vec::new();
    match req.kind {
        BoundKind::LiyauSum => {
            for n in ns {
                out.push(bounds::eval_liyau_sum(spectrum, n)?);
            }
        }
        BoundKind::LiyauSingle => {
            for n in ns {
                out.push(bounds::eval_liyau_single(spectrum, n)?);
            }
        }
        BoundKind::Polya => {
            for n in ns {
                out.push(bounds::eval_polya(spectrum, n)?);
            }
        }
        BoundKind::Melas => {
            for n in ns {
                out.push(bounds::eval_melas(spectrum, n, req.c_melas)?);
            }
        }
        BoundKind::FaberKrahn => out.push(bounds::eval_faber_krahn(spectrum)?),
        BoundKind::Thm1 => {
            for n in ns {
                match req.k.unwrap_or(KPolicy::Half) {
                    KPolicy::Half => out.push(bounds::eval_thm1(spectrum, n, (n / 2).max(1))?),
                    KPolicy::Best => {
                        let (k, _) = bounds::thm1_best_k(spectrum, n)?;
                        out.push(bounds::eval_thm1(spectrum, n, k)?);
                    }
                    KPolicy::All => {
                        for k in 1..=n {
                            out.push(bounds::eval_thm1(spectrum, n, k)?);
                        }
                    }
                    KPolicy::Fixed(k) => out.push(bounds::eval_thm1(spectrum, n, k)?),
                }
            }
        }
        BoundKind::Thm2 => {
            for n in ns {
                match req.l.unwrap_or(LPolicy::Equal) {
                    LPolicy::Equal => out.push(bounds::eval_thm2(spectrum, n, n)?),
                    LPolicy::Threshold => {
                        out.push(bounds::eval_thm2(spectrum, n, bounds::thm2_threshold(n, d))?)
                    }
                    LPolicy::AllAdmissible => {
                        let first = bounds::thm2_threshold(n, d);
                        for l in first..=req.n_max.saturating_sub(n) {
                            out.push(bounds::eval_thm2(spectrum, n, l)?);
                        }
                    }
                    LPolicy::Fixed(l) => out.push(bounds::eval_thm2(spectrum, n, l)?),
                }
            }
        }
        BoundKind::Avg => {
            for n in ns {
                out.push(bounds::eval_avg(spectrum, n)?);
            }
        }
        BoundKind::Lemma1 | BoundKind::Lemma1Single => {
            let eta = req.eta.expect("validated");
            for k in ns {
                out.push(if req.kind == BoundKind::Lemma1 {
                    bounds::eval_lemma1(spectrum, k, eta)?
                } else {
                    bounds::eval_lemma1_single(spectrum, k, eta)?
                });
            }
        }
    }
    Ok(out)
}

/// Evaluates a case against a spectrum that is already available.
pub fn evaluate_case(case: &VerificationCase, spectrum: &Spectrum) -> Result<ReportRecord, ReportError> {
    let mut evaluations = Vec::new();
    for req in &case.bounds {
        evaluations.extend(evaluate_request(spectrum, req)?);
    }
    let domain = spectrum.domain();
    let mut notes = Vec::new();
    if case.bounds.iter().any(|b| b.kind == BoundKind::Thm2) {
        notes.push(THM2_NOTE.to_string());
    }
    if spectrum.discretization_tolerance() > 0.0 {
        notes.push(format!(
            "left-hand sides deflated by the relative tolerance {}",
            spectrum.discretization_tolerance()
        ));
    }
    if case.bounds.iter().any(|b| matches!(b.kind, BoundKind::Lemma1 | BoundKind::Lemma1Single)) {
        notes.push("lemma1: eta supplied by the case file, not computed".into());
    }
    Ok(ReportRecord {
        case_id: case.id.clone(),
        domain: DomainSummary {
            label: case.label.clone().unwrap_or_else(|| domain.label.clone()),
            shape: shape_name(domain).into(),
            dim: domain.dim(),
            volume: domain.volume(),
        },
        spectrum: SpectrumSummary {
            provenance: spectrum.provenance(),
            count: spectrum.len(),
            complete_through: spectrum.complete_through(),
            discretization_tolerance: spectrum.discretization_tolerance(),
        },
        summary: Summary::of(&evaluations),
        failures: evaluations.iter().filter(|e| !e.verified).cloned().collect(),
        evaluations,
        notes,
    })
}

pub fn run_case(case: &VerificationCase, base: &Path) -> Result<ReportRecord, ReportError> {
    let domain = case.domain.build(base)?;
    let count = case
        .bounds
        .iter()
        .map(|b| b.required_count(domain.dim()))
        .max()
        .unwrap_or(1);
    let spectrum = case_spectrum(case, &domain, count, base)?;
    evaluate_case(case, &spectrum)
}

/// Runs every case (concurrently); records are sorted by case id.
pub fn run_cases(file: &CaseFile, base: &Path) -> Result<Report, ReportError> {
    file.validate()?;
    let mut records = file
        .cases
        .par_iter()
        .map(|c| run_case(c, base))
        .collect::<Result<Vec<_>, _>>()?;
    records.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    Ok(Report {
        schema_version: SCHEMA_VERSION,
        environment: Environment::default(),
        summary: Summary::of(records.iter().flat_map(|r| &r.evaluations)),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(bounds: Vec<BoundRequest>) -> VerificationCase {
        VerificationCase {
            id: "t".into(),
            label: None,
            domain: DomainInput::Box { lengths: vec![1.0, 1.0] },
            spectrum: SpectrumSource::Analytic,
            bounds,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn case_file_round_trip() {
        let m = default_matrix();
        assert_eq!(CaseFile::parse(&m.to_json()).unwrap(), m);
        let text = r#"{"schema_version":1,"cases":[{"id":"a","domain":{"box":{"lengths":[1,1]}},
            "bounds":[{"kind":"thm1","n_max":5,"k":{"fixed":2},"n_min":3},
                      {"kind":"thm2","n_max":5,"l":"threshold"}]}]}"#;
        let f = CaseFile::parse(text).unwrap();
        assert_eq!(f.cases[0].bounds[0].k, Some(KPolicy::Fixed(2)));
        assert_eq!(f.cases[0].spectrum, SpectrumSource::Analytic);
    }

    #[test]
    fn config_errors() {
        let bad = [
            r#"{"schema_version":2,"cases":[]}"#,
            r#"{"schema_version":1,"cases":[{"id":"a","domain":{"box":{"lengths":[1]}},"bounds":[{"kind":"melas","n_max":3}]}]}"#,
            r#"{"schema_version":1,"cases":[{"id":"a","domain":{"box":{"lengths":[1]}},"bounds":[{"kind":"avg","n_min":4,"n_max":3}]}]}"#,
            r#"{"schema_version":1,"cases":[{"id":"a","domain":{"box":{"lengths":[1]}},"bounds":[{"kind":"lemma1","n_max":3}]}]}"#,
            r#"{"schema_version":1,"cases":[{"id":"a","domain":{"box":{"lengths":[1]}},"bounds":[]}]}"#,
        ];
        for t in bad {
            assert!(matches!(CaseFile::parse(t), Err(ReportError::Config(_))), "{t}");
        }
        assert!(matches!(
            CaseFile::parse(r#"{"schema_version":1,"cases":[{"id":"a","bogus":1}]}"#),
            Err(ReportError::Parse(_))
        ));
        let mut c = case(vec![BoundRequest::new(BoundKind::Avg, 3)]);
        c.domain = DomainInput::Mask { path: "missing.msk".into() };
        assert!(matches!(run_case(&c, Path::new(".")), Err(ReportError::Config(_))));
    }

    #[test]
    fn required_counts() {
        let mut r = BoundRequest::new(BoundKind::Thm2, 100);
        assert_eq!(r.required_count(2), 200);
        r.l = Some(LPolicy::Threshold);
        assert_eq!(r.required_count(2), 100 + bounds::thm2_threshold(100, 2));
        r.l = Some(LPolicy::AllAdmissible);
        assert_eq!(r.required_count(2), 100);
        assert_eq!(BoundRequest::new(BoundKind::FaberKrahn, 50).required_count(2), 1);
    }

    #[test]
    fn small_case_runs() {
        let mut thm1 = BoundRequest::new(BoundKind::Thm1, 10);
        thm1.k = Some(KPolicy::All);
        let mut thm2 = BoundRequest::new(BoundKind::Thm2, 20);
        thm2.l = Some(LPolicy::AllAdmissible);
        let rec = run_case(
            &case(vec![thm1, thm2, BoundRequest::new(BoundKind::FaberKrahn, 1)]),
            Path::new("."),
        )
        .unwrap();
        let thm1_total = (1..=10).sum::<usize>();
        assert_eq!(rec.summary.by_kind[0].kind, BoundKind::FaberKrahn);
        assert_eq!(rec.summary.by_kind[1].total, thm1_total);
        let thm2_total: usize = (1..=20)
            .map(|n| (20usize.saturating_sub(n) + 1).saturating_sub(bounds::thm2_threshold(n, 2)))
            .sum();
        assert_eq!(rec.summary.by_kind[2].total, thm2_total);
        assert!(rec.summary.all_verified());
        assert!(rec.failures.is_empty());
        assert_eq!(rec.notes[0], THM2_NOTE);
        let min = rec.evaluations.iter().map(|e| e.sharpness).fold(f64::INFINITY, f64::min);
        assert_eq!(rec.summary.min_sharpness, Some(min));
    }

    #[test]
    fn corrupted_spectrum_fails() {
        let dir = tempfile::tempdir().unwrap();
        let s = analytic_spectrum(&DomainSpec::new_box(&[1.0, 1.0]).unwrap(), 10).unwrap();
        let mut ev = s.eigenvalues().to_vec();
        ev[0] /= 2.0;
        std::fs::write(dir.path().join("bad.csv"), s.with_eigenvalues(ev).unwrap().to_csv()).unwrap();
        let mut c = case(vec![
            BoundRequest::new(BoundKind::LiyauSingle, 10),
            BoundRequest::new(BoundKind::FaberKrahn, 1),
        ]);
        c.spectrum = SpectrumSource::Csv {
            path: "bad.csv".into(),
            provenance: None,
        };
        let rec = run_case(&c, dir.path()).unwrap();
        assert!(!rec.summary.all_verified());
        // π² still clears the single Li–Yau bound 2π; Faber–Krahn does not
        assert_eq!(rec.failures.len(), 1);
        assert_eq!(rec.failures[0].kind, BoundKind::FaberKrahn);
    }

    #[test]
    fn fdm_box_source_deflates() {
        let mut c = case(vec![BoundRequest::new(BoundKind::LiyauSum, 5)]);
        c.spectrum = SpectrumSource::Fdm {
            grid: Some(20),
            richardson: false,
        };
        let rec = run_case(&c, Path::new(".")).unwrap();
        assert_eq!(rec.spectrum.provenance, Provenance::FdmDiscrete);
        assert!(rec.spectrum.discretization_tolerance > 0.0);
        assert!(rec.evaluations.iter().all(|e| e.deflation > 0.0));
        assert!(rec.summary.all_verified());
    }
}
