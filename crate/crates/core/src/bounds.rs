//! Universal lower bounds on Dirichlet eigenvalues and their evaluation
//! against concrete spectra.
//!
//! Powers `n^{2/d}` are computed as `exp((2/d) ln n)`. Evaluations against
//! finite-difference spectra deflate the observed side by the spectrum's
//! discretization tolerance before declaring a bound verified.

use std::f64::consts::PI;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::geometry::{dimension_constants, DomainSpec, GeometryError};
use crate::special::{self, SpecialError};
use crate::spectrum::{Spectrum, SpectrumError};

/// Relative slack absorbing rounding when a bound is attained exactly.
pub const ROUNDING_SLACK: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum BoundsError {
    #[error("the Melas bound needs an explicit constant c_d")]
    MissingMelasConstant,
    #[error("(n, l) = ({n}, {l}) is not admissible in dimension {d}: (n+l)^2 l^d < n^(d+2)")]
    Inadmissible { n: usize, l: usize, d: usize },
    #[error("eta = {0} outside [0, 1]")]
    EtaOutOfRange(f64),
    #[error("elementary inequality needs x >= y >= 0, got x = {x}, y = {y}")]
    Ordering { x: f64, y: f64 },
    #[error("index constraint violated: {0}")]
    Index(String),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Special(#[from] SpecialError),
}

/// `n^{2/d}`.
pub fn pow_two_over_d(n: f64, d: usize) -> f64 {
    ((2.0 / d as f64) * n.ln()).exp()
}

/// `(|Ω| ω_d)^{2/d}`.
fn weyl_scale(d: usize, volume: f64) -> f64 {
    let omega = dimension_constants(d).expect("d >= 1").omega;
    pow_two_over_d(volume * omega, d)
}

/// `c = (d/(d+2)) 4π² / (|Ω| ω_d)^{2/d}`, the Li–Yau constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LYConstant {
    pub dim: usize,
    pub volume: f64,
    pub value: f64,
}

impl LYConstant {
    pub fn new(dim: usize, volume: f64) -> Result<Self, BoundsError> {
        dimension_constants(dim)?;
        if !(volume.is_finite() && volume > 0.0) {
            return Err(GeometryError::NonPositive {
                what: "volume",
                value: volume,
            }
            .into());
        }
        let d = dim as f64;
        Ok(Self {
            dim,
            volume,
            value: d / (d + 2.0) * 4.0 * PI * PI / weyl_scale(dim, volume),
        })
    }

    pub fn for_domain(domain: &DomainSpec) -> Self {
        Self::new(domain.dim(), domain.volume()).expect("valid domain")
    }
}

pub fn polya_bound(n: usize, d: usize, volume: f64) -> f64 {
    4.0 * PI * PI * pow_two_over_d(n as f64, d) / weyl_scale(d, volume)
}

pub fn liyau_single_bound(n: usize, d: usize, volume: f64) -> f64 {
    let dd = d as f64;
    dd / (dd + 2.0) * polya_bound(n, d, volume)
}

pub fn liyau_sum_bound(n: usize, d: usize, volume: f64) -> f64 {
    n as f64 * liyau_single_bound(n, d, volume)
}

/// `λ_n / polya_bound(n)`.
pub fn weyl_ratio(spectrum: &Spectrum, n: usize) -> Result<f64, BoundsError> {
    let lambda = spectrum.eigenvalue(n)?;
    let dom = spectrum.domain();
    Ok(lambda / polya_bound(n, dom.dim(), dom.volume()))
}

/// Li–Yau sum plus `c_melas (|Ω|/I(Ω)) n`. The constant has no default.
pub fn melas_bound(
    n: usize,
    d: usize,
    volume: f64,
    inertia: f64,
    c_melas: Option<f64>,
) -> Result<f64, BoundsError> {
    let c = c_melas.ok_or(BoundsError::MissingMelasConstant)?;
    Ok(liyau_sum_bound(n, d, volume) + c * (volume / inertia) * n as f64)
}

/// `λ_1 >= π j²_{d/2-1,1} / (Γ(d/2+1)^{2/d} |Ω|^{2/d})`.
pub fn faber_krahn_bound(d: usize, volume: f64) -> Result<f64, BoundsError> {
    dimension_constants(d)?;
    let j = special::faber_krahn_zero(d)?;
    let g = special::gamma_fn(d as f64 / 2.0 + 1.0)?;
    Ok(PI * j * j / (pow_two_over_d(g, d) * pow_two_over_d(volume, d)))
}

fn check_pair(spectrum: &Spectrum, k: usize, n: usize) -> Result<(), BoundsError> {
    if k == 0 || k > n {
        return Err(BoundsError::Index(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    spectrum.check_index(n)?;
    Ok(())
}

/// `liyau_single(n) + (k/n)(λ_n − λ_k)`.
pub fn thm1_rhs(spectrum: &Spectrum, n: usize, k: usize) -> Result<f64, BoundsError> {
    check_pair(spectrum, k, n)?;
    let dom = spectrum.domain();
    let (ln, lk) = (spectrum.eigenvalue(n)?, spectrum.eigenvalue(k)?);
    Ok(liyau_single_bound(n, dom.dim(), dom.volume()) + (k as f64 / n as f64) * (ln - lk))
}

/// Rearranged form: `(((n−k)/n) λ_n + (k/n) λ_k, liyau_single(n))`.
pub fn thm1_rearranged(spectrum: &Spectrum, n: usize, k: usize) -> Result<(f64, f64), BoundsError> {
    check_pair(spectrum, k, n)?;
    let dom = spectrum.domain();
    let (ln, lk) = (spectrum.eigenvalue(n)?, spectrum.eigenvalue(k)?);
    let t = k as f64 / n as f64;
    Ok((
        (1.0 - t) * ln + t * lk,
        liyau_single_bound(n, dom.dim(), dom.volume()),
    ))
}

/// `argmax_k (k/n)(λ_n − λ_k)`, smallest `k` on ties, with the maximum.
pub fn thm1_best_k(spectrum: &Spectrum, n: usize) -> Result<(usize, f64), BoundsError> {
    spectrum.check_index(n)?;
    let ev = spectrum.eigenvalues();
    let ln = ev[n - 1];
    let mut best = (1, 0.0);
    for k in 1..=n {
        let gain = (k as f64 / n as f64) * (ln - ev[k - 1]);
        if gain > best.1 {
            best = (k, gain);
        }
    }
    Ok(best)
}

/// `(n+ℓ)^{2/d} ℓ >= n^{1+2/d}`, decided exactly as `(n+ℓ)² ℓ^d >= n^{d+2}`.
pub fn thm2_admissible(n: usize, l: usize, d: usize) -> bool {
    if n == 0 || l == 0 || d == 0 {
        return false;
    }
    let small = || -> Option<bool> {
        let (n, l) = (n as u128, l as u128);
        let lhs = (n + l).checked_pow(2)?.checked_mul(l.checked_pow(d as u32)?)?;
        let rhs = n.checked_pow(d as u32 + 2)?;
        Some(lhs >= rhs)
    };
    small().unwrap_or_else(|| {
        let (nb, lb) = (BigUint::from(n), BigUint::from(l));
        let lhs = (&nb + &lb).pow(2) * lb.pow(d as u32);
        lhs >= nb.pow(d as u32 + 2)
    })
}

/// Smallest admissible `ℓ` for `n`.
pub fn thm2_threshold(n: usize, d: usize) -> usize {
    // ℓ = n is always admissible and admissibility is monotone in ℓ
    let (mut lo, mut hi) = (1, n.max(1));
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if thm2_admissible(n, mid, d) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    lo
}

/// `2 + (n/ℓ)(1 − (n/(n+ℓ))^{2/d})`.
pub fn thm2_factor(n: usize, l: usize, d: usize) -> f64 {
    let (nf, lf) = (n as f64, l as f64);
    2.0 + (nf / lf) * (1.0 - pow_two_over_d(nf / (nf + lf), d))
}

/// Two-point right-hand side: the factor times the Li–Yau constant `c`.
pub fn thm2_rhs(n: usize, l: usize, d: usize, volume: f64) -> Result<f64, BoundsError> {
    if !thm2_admissible(n, l, d) {
        return Err(BoundsError::Inadmissible { n, l, d });
    }
    Ok(thm2_factor(n, l, d) * LYConstant::new(d, volume)?.value)
}

/// `λ_n / n^{2/d} + λ_{n+ℓ} / (n+ℓ)^{2/d}`.
pub fn thm2_lhs(spectrum: &Spectrum, n: usize, l: usize) -> Result<f64, BoundsError> {
    let d = spectrum.domain().dim();
    let (a, b) = (spectrum.eigenvalue(n)?, spectrum.eigenvalue(n + l)?);
    Ok(a / pow_two_over_d(n as f64, d) + b / pow_two_over_d((n + l) as f64, d))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AvgStatistic {
    /// `A_n = (1/n) Σ_{m<=n} λ_m / m^{2/d}`.
    pub average: f64,
    /// `A_n / c`.
    pub ratio: f64,
    /// `A_n / c − 1`.
    pub empirical_constant: f64,
}

pub fn avg_ratio_statistic(spectrum: &Spectrum, n: usize) -> Result<AvgStatistic, BoundsError> {
    spectrum.check_index(n)?;
    let d = spectrum.domain().dim();
    let sum: f64 = spectrum.eigenvalues()[..n]
        .iter()
        .enumerate()
        .map(|(i, l)| l / pow_two_over_d((i + 1) as f64, d))
        .sum();
    let average = sum / n as f64;
    let ratio = average / LYConstant::for_domain(spectrum.domain()).value;
    Ok(AvgStatistic {
        average,
        ratio,
        empirical_constant: ratio - 1.0,
    })
}

/// `(1−η)^{(d+2)/d} + ((d+2)/d) η`.
pub fn lemma1_factor(eta: f64, d: usize) -> Result<f64, BoundsError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(BoundsError::EtaOutOfRange(eta));
    }
    let p = (d as f64 + 2.0) / d as f64;
    Ok((1.0 - eta).powf(p) + p * eta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `x^{(d+2)/d} − y^{(d+2)/d} >= ((d+2)/d) y^{2/d} (x − y)` for `x >= y >= 0`.
pub fn elementary_power_inequality(x: f64, y: f64, d: usize) -> Result<PowerInequality, BoundsError> {
    if !(y >= 0.0 && x >= y) || d == 0 {
        return Err(BoundsError::Ordering { x, y });
    }
    let p = (d as f64 + 2.0) / d as f64;
    let lhs = x.powf(p) - y.powf(p);
    let rhs = p * y.powf(2.0 / d as f64) * (x - y);
    let holds = lhs >= rhs - ROUNDING_SLACK * lhs.abs().max(rhs.abs());
    Ok(PowerInequality { lhs, rhs, holds })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    LiyauSum,
    LiyauSingle,
    Polya,
    Melas,
    FaberKrahn,
    Thm1,
    Thm2,
    Avg,
    Lemma1,
    Lemma1Single,
}

impl BoundKind {
    pub const ALL: [BoundKind; 10] = [
        Self::LiyauSum,
        Self::LiyauSingle,
        Self::Polya,
        Self::Melas,
        Self::FaberKrahn,
        Self::Thm1,
        Self::Thm2,
        Self::Avg,
        Self::Lemma1,
        Self::Lemma1Single,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::LiyauSum => "liyau-sum",
            Self::LiyauSingle => "liyau-single",
            Self::Polya => "polya",
            Self::Melas => "melas",
            Self::FaberKrahn => "faber-krahn",
            Self::Thm1 => "thm1",
            Self::Thm2 => "thm2",
            Self::Avg => "avg",
            Self::Lemma1 => "lemma1",
            Self::Lemma1Single => "lemma1-single",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub c_melas: Option<f64>,
}

impl BoundParams {
    pub fn n(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }
}

/// One inequality instance `lhs >= rhs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundEvaluation {
    pub kind: BoundKind,
    pub params: BoundParams,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub sharpness: f64,
    pub verified: bool,
    /// Relative deflation applied to `lhs` before the check.
    pub deflation: f64,
    /// Equivalent linear form `(lhs, rhs)` used for the check, when it
    /// differs from the displayed pair.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub checked_form: Option<(f64, f64)>,
}

impl BoundEvaluation {
    pub fn new(kind: BoundKind, params: BoundParams, lhs: f64, rhs: f64, deflation: f64) -> Self {
        Self {
            kind,
            params,
            lhs,
            rhs,
            margin: lhs - rhs,
            sharpness: lhs / rhs,
            verified: holds(lhs, rhs, deflation),
            deflation,
            checked_form: None,
        }
    }

    fn with_checked_form(mut self, lhs: f64, rhs: f64) -> Self {
        self.verified = holds(lhs, rhs, self.deflation);
        self.checked_form = Some((lhs, rhs));
        self
    }
}

fn holds(lhs: f64, rhs: f64, deflation: f64) -> bool {
    lhs * (1.0 - deflation) >= rhs - ROUNDING_SLACK * rhs.abs()
}

fn dims(spectrum: &Spectrum) -> (usize, f64, f64) {
    let dom = spectrum.domain();
    (dom.dim(), dom.volume(), spectrum.discretization_tolerance())
}

pub fn eval_liyau_sum(spectrum: &Spectrum, n: usize) -> Result<BoundEvaluation, BoundsError> {
    spectrum.check_index(n)?;
    let (d, vol, tol) = dims(spectrum);
    let sum: f64 = spectrum.eigenvalues()[..n].iter().sum();
    Ok(BoundEvaluation::new(
        BoundKind::LiyauSum,
        BoundParams::n(n),
        sum,
        liyau_sum_bound(n, d, vol),
        tol,
    ))
}

pub fn eval_liyau_single(spectrum: &Spectrum, n: usize) -> Result<BoundEvaluation, BoundsError> {
    let (d, vol, tol) = dims(spectrum);
    Ok(BoundEvaluation::new(
        BoundKind::LiyauSingle,
        BoundParams::n(n),
        spectrum.eigenvalue(n)?,
        liyau_single_bound(n, d, vol),
        tol,
    ))
}

pub fn eval_polya(spectrum: &Spectrum, n: usize) -> Result<BoundEvaluation, BoundsError> {
    let (d, vol, tol) = dims(spectrum);
    Ok(BoundEvaluation::new(
        BoundKind::Polya,
        BoundParams::n(n),
        spectrum.eigenvalue(n)?,
        polya_bound(n, d, vol),
        tol,
    ))
}

pub fn eval_melas(
    spectrum: &Spectrum,
    n: usize,
    c_melas: Option<f64>,
) -> Result<BoundEvaluation, BoundsError> {
    spectrum.check_index(n)?;
    let (d, vol, tol) = dims(spectrum);
    let inertia = spectrum.domain().moment_of_inertia();
    let rhs = melas_bound(n, d, vol, inertia, c_melas)?;
    let sum: f64 = spectrum.eigenvalues()[..n].iter().sum();
    Ok(BoundEvaluation::new(
        BoundKind::Melas,
        BoundParams {
            c_melas,
            ..BoundParams::n(n)
        },
        sum,
        rhs,
        tol,
    ))
}

pub fn eval_faber_krahn(spectrum: &Spectrum) -> Result<BoundEvaluation, BoundsError> {
    let (d, vol, tol) = dims(spectrum);
    Ok(BoundEvaluation::new(
        BoundKind::FaberKrahn,
        BoundParams::n(1),
        spectrum.eigenvalue(1)?,
        faber_krahn_bound(d, vol)?,
        tol,
    ))
}

/// Displays `λ_n >= thm1_rhs`; checks the rearranged form, which is linear
/// in the eigenvalues and so deflates consistently.
pub fn eval_thm1(spectrum: &Spectrum, n: usize, k: usize) -> Result<BoundEvaluation, BoundsError> {
    let rhs = thm1_rhs(spectrum, n, k)?;
    let (re_lhs, re_rhs) = thm1_rearranged(spectrum, n, k)?;
    Ok(BoundEvaluation::new(
        BoundKind::Thm1,
        BoundParams {
            k: Some(k),
            ..BoundParams::n(n)
        },
        spectrum.eigenvalue(n)?,
        rhs,
        spectrum.discretization_tolerance(),
    )
    .with_checked_form(re_lhs, re_rhs))
}

pub fn eval_thm2(spectrum: &Spectrum, n: usize, l: usize) -> Result<BoundEvaluation, BoundsError> {
    let (d, vol, tol) = dims(spectrum);
    let rhs = thm2_rhs(n, l, d, vol)?;
    Ok(BoundEvaluation::new(
        BoundKind::Thm2,
        BoundParams {
            l: Some(l),
            ..BoundParams::n(n)
        },
        thm2_lhs(spectrum, n, l)?,
        rhs,
        tol,
    ))
}

/// `A_n >= c`, the averaged statistic against the Li–Yau constant.
pub fn eval_avg(spectrum: &Spectrum, n: usize) -> Result<BoundEvaluation, BoundsError> {
    let stat = avg_ratio_statistic(spectrum, n)?;
    Ok(BoundEvaluation::new(
        BoundKind::Avg,
        BoundParams::n(n),
        stat.average,
        LYConstant::for_domain(spectrum.domain()).value,
        spectrum.discretization_tolerance(),
    ))
}

/// Mass-deficit sum bound: `Σ_{m<=k} λ_m >= lemma1_factor(η) · liyau_sum(k)`.
pub fn eval_lemma1(spectrum: &Spectrum, k: usize, eta: f64) -> Result<BoundEvaluation, BoundsError> {
    spectrum.check_index(k)?;
    let (d, vol, tol) = dims(spectrum);
    let sum: f64 = spectrum.eigenvalues()[..k].iter().sum();
    Ok(BoundEvaluation::new(
        BoundKind::Lemma1,
        BoundParams {
            eta: Some(eta),
            ..BoundParams::n(k)
        },
        sum,
        lemma1_factor(eta, d)? * liyau_sum_bound(k, d, vol),
        tol,
    ))
}

/// Single-eigenvalue consequence of the mass-deficit bound, from `k λ_k >= Σ_{m<=k} λ_m`:
/// `λ_k >= lemma1_factor(η) · liyau_single(k)`.
pub fn eval_lemma1_single(
    spectrum: &Spectrum,
    k: usize,
    eta: f64,
) -> Result<BoundEvaluation, BoundsError> {
    let (d, vol, tol) = dims(spectrum);
    Ok(BoundEvaluation::new(
        BoundKind::Lemma1Single,
        BoundParams {
            eta: Some(eta),
            ..BoundParams::n(k)
        },
        spectrum.eigenvalue(k)?,
        lemma1_factor(eta, d)? * liyau_single_bound(k, d, vol),
        tol,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{ball_spectrum, box_spectrum};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn liyau_plug_ins() {
        assert_relative_eq!(liyau_sum_bound(1, 2, 1.0), 2.0 * PI, max_relative = 1e-15);
        assert_relative_eq!(liyau_sum_bound(1, 1, 1.0), PI * PI / 3.0, max_relative = 1e-15);
        assert_relative_eq!(liyau_single_bound(100, 2, 1.0), 200.0 * PI, max_relative = 1e-14);
        let sq = box_spectrum(&[1.0, 1.0], 5).unwrap();
        let e = eval_liyau_sum(&sq, 5).unwrap();
        // 2 + 5 + 5 + 8 + 10 = 30
        assert_relative_eq!(e.lhs, 30.0 * PI * PI, max_relative = 1e-14);
        assert!(e.verified && e.sharpness > 1.0);
        let e1 = eval_liyau_single(&sq, 1).unwrap();
        assert_relative_eq!(e1.sharpness, PI, max_relative = 1e-14);
    }

    #[test]
    fn interval_sharpness_is_three() {
        let s = box_spectrum(&[1.0], 50).unwrap();
        for n in 1..=50 {
            assert_relative_eq!(eval_liyau_single(&s, n).unwrap().sharpness, 3.0, max_relative = 1e-12);
            assert_relative_eq!(weyl_ratio(&s, n).unwrap(), 1.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn polya_relations() {
        let sq = box_spectrum(&[1.0, 1.0], 1).unwrap();
        assert_relative_eq!(weyl_ratio(&sq, 1).unwrap(), PI / 2.0, max_relative = 1e-14);
        for d in 1..8 {
            assert_relative_eq!(
                liyau_single_bound(7, d, 2.5) / polya_bound(7, d, 2.5),
                d as f64 / (d as f64 + 2.0),
                max_relative = 1e-14
            );
        }
        assert!(weyl_ratio(&sq, 2).is_err());
    }

    #[test]
    fn melas_cases() {
        assert!(matches!(
            melas_bound(1, 2, 1.0, 1.0 / 6.0, None),
            Err(BoundsError::MissingMelasConstant)
        ));
        assert_eq!(melas_bound(3, 2, 1.0, 0.2, Some(0.0)).unwrap(), liyau_sum_bound(3, 2, 1.0));
        assert_relative_eq!(
            melas_bound(1, 2, 1.0, 1.0 / 6.0, Some(1.0)).unwrap(),
            2.0 * PI + 6.0,
            max_relative = 1e-14
        );
        // every term scales as t^-2
        let t: f64 = 1.7;
        let dom = DomainSpec::new_box(&[1.0, 2.0]).unwrap();
        let big = dom.dilate(t).unwrap();
        let a = melas_bound(4, 2, dom.volume(), dom.moment_of_inertia(), Some(0.3)).unwrap();
        let b = melas_bound(4, 2, big.volume(), big.moment_of_inertia(), Some(0.3)).unwrap();
        assert_relative_eq!(b, a / (t * t), max_relative = 1e-13);
    }

    #[test]
    fn faber_krahn_cases() {
        let fk = faber_krahn_bound(2, 1.0).unwrap();
        assert_relative_eq!(fk, 18.168_4, max_relative = 1e-5);
        let disk = ball_spectrum(2, 1.0 / PI.sqrt(), 1).unwrap();
        assert_relative_eq!(disk.eigenvalues()[0], fk, max_relative = 1e-6);
        let sq = box_spectrum(&[1.0, 1.0], 1).unwrap();
        let e = eval_faber_krahn(&sq).unwrap();
        assert_abs_diff_eq!(e.margin, 1.571, epsilon = 1e-3);
        assert_abs_diff_eq!(fk / liyau_single_bound(1, 2, 1.0), 2.8916, epsilon = 1e-4);
    }

    #[test]
    fn thm1_cases() {
        let sq = box_spectrum(&[1.0, 1.0], 100).unwrap();
        assert_eq!(thm1_rhs(&sq, 7, 7).unwrap(), liyau_single_bound(7, 2, 1.0));
        assert!(thm1_rhs(&sq, 100, 50).unwrap() > liyau_single_bound(100, 2, 1.0));
        let iv = box_spectrum(&[1.0], 2).unwrap();
        let e = eval_thm1(&iv, 2, 1).unwrap();
        let expected = liyau_single_bound(2, 1, 1.0) + 1.5 * PI * PI;
        assert_relative_eq!(e.rhs, expected, max_relative = 1e-14);
        assert!(e.verified);
        assert_eq!(thm1_best_k(&sq, 1).unwrap(), (1, 0.0));
        assert!(thm1_rhs(&sq, 3, 4).is_err());
        assert!(thm1_rhs(&sq, 101, 1).is_err());
    }

    #[test]
    fn best_k_matches_brute_force() {
        let sq = box_spectrum(&[1.0, 1.3], 200).unwrap();
        for n in 1..=200 {
            let (k, gain) = thm1_best_k(&sq, n).unwrap();
            let mut best = (1, f64::NEG_INFINITY);
            for kk in 1..=n {
                let g = thm1_rhs(&sq, n, kk).unwrap() - liyau_single_bound(n, 2, 1.3);
                if g > best.1 + 1e-9 * g.abs() {
                    best = (kk, g);
                }
            }
            assert_eq!(k, best.0, "n = {n}");
            assert_relative_eq!(gain, best.1.max(0.0), max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn admissibility() {
        assert!(!thm2_admissible(10, 6, 2));
        assert!(thm2_admissible(10, 7, 2));
        // 1618 · 618 = 999 924 < 10^6, so 619 is the first admissible ℓ
        assert!(!thm2_admissible(1000, 617, 2));
        assert!(!thm2_admissible(1000, 618, 2));
        assert!(thm2_admissible(1000, 619, 2));
        assert_eq!(thm2_threshold(1000, 2), 619);
        for d in 1..=12 {
            for n in [1, 2, 17, 500, 2000] {
                assert!(thm2_admissible(n, n, d));
            }
        }
        // large powers go through the big-integer path
        assert!(thm2_admissible(100_000, 100_000, 9));
        assert!(!thm2_admissible(100_000, 1, 9));
    }

    #[test]
    fn thm2_cases() {
        let c = thm2_rhs(10, 10, 2, 1.0).unwrap();
        assert_relative_eq!(c, 5.0 * PI, max_relative = 1e-12);
        for d in 1..10 {
            assert_relative_eq!(
                thm2_factor(7, 7, d),
                3.0 - 2f64.powf(-2.0 / d as f64),
                max_relative = 1e-14
            );
        }
        assert!(matches!(
            thm2_rhs(10, 6, 2, 1.0),
            Err(BoundsError::Inadmissible { n: 10, l: 6, d: 2 })
        ));
    }

    #[test]
    fn avg_cases() {
        let iv = box_spectrum(&[1.0], 40).unwrap();
        for n in [1, 7, 40] {
            assert_relative_eq!(avg_ratio_statistic(&iv, n).unwrap().ratio, 3.0, max_relative = 1e-12);
        }
        let sq = box_spectrum(&[1.0, 1.0], 1).unwrap();
        let a = avg_ratio_statistic(&sq, 1).unwrap();
        assert_eq!(a.average, sq.eigenvalues()[0]);
        assert_relative_eq!(a.ratio, PI, max_relative = 1e-14);
    }

    #[test]
    fn lemma1_factor_cases() {
        assert_eq!(lemma1_factor(0.0, 2).unwrap(), 1.0);
        assert_eq!(lemma1_factor(1.0, 3).unwrap(), 5.0 / 3.0);
        assert_relative_eq!(lemma1_factor(0.5, 2).unwrap(), 1.25, max_relative = 1e-15);
        assert!(lemma1_factor(1.1, 2).is_err());
        assert!(lemma1_factor(-0.1, 2).is_err());
    }

    #[test]
    fn elementary_inequality_cases() {
        let e = elementary_power_inequality(3.0, 3.0, 4).unwrap();
        assert_eq!((e.lhs, e.rhs, e.holds), (0.0, 0.0, true));
        let e = elementary_power_inequality(2.0, 1.0, 2).unwrap();
        assert_relative_eq!(e.lhs, 3.0, max_relative = 1e-15);
        assert_relative_eq!(e.rhs, 2.0, max_relative = 1e-15);
        let e = elementary_power_inequality(4.0, 1.0, 1).unwrap();
        assert_relative_eq!(e.lhs, 63.0, max_relative = 1e-15);
        assert_relative_eq!(e.rhs, 9.0, max_relative = 1e-15);
        assert!(elementary_power_inequality(1.0, 2.0, 2).is_err());
    }

    #[test]
    fn evaluation_json_shape() {
        let sq = box_spectrum(&[1.0, 1.0], 4).unwrap();
        let e = eval_thm2(&sq, 2, 2).unwrap();
        let v: serde_json::Value = serde_json::to_value(&e).unwrap();
        for key in ["kind", "params", "lhs", "rhs", "margin", "sharpness", "verified"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert_eq!(v["kind"], "thm2");
        assert_eq!(v["params"]["l"], 2);
        assert!(v["params"].get("k").is_none());
    }

    #[test]
    fn deflation_blocks_marginal_claims() {
        let sq = box_spectrum(&[1.0, 1.0], 1).unwrap();
        // λ_1 just above the Li-Yau single bound
        let tight = sq.with_eigenvalues(vec![liyau_single_bound(1, 2, 1.0) * 1.001]).unwrap();
        assert!(eval_liyau_single(&tight, 1).unwrap().verified);
        let deflated = tight.with_discretization_tolerance(0.01);
        let e = eval_liyau_single(&deflated, 1).unwrap();
        assert!(!e.verified);
        assert!(e.sharpness > 1.0);
    }
}
