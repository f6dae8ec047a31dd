//! Bound-related quantities tabulated over `n = 1..=n_max`.

use std::fmt::Write as _;

use crate::bounds::{self, BoundsError};
use crate::numfmt::sig17;
use crate::spectrum::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanQuantity {
    /// `λ_n / polya(n)`.
    WeylRatio,
    /// `λ_n / liyau_single(n)`.
    LiyauSingle,
    /// `thm1` gain at `k = max(1, n/2)` divided by `liyau_single(n)`.
    Thm1Improvement,
    /// Optimal `k / n` for `thm1`.
    Thm1BestK,
    /// `A_n / c`.
    AvgConstant,
    /// `thm2` factor at the smallest admissible `ℓ`.
    Thm2Factor,
    /// `thm2` sharpness at `ℓ = n`.
    Thm2Sharpness,
}

impl ScanQuantity {
    pub const ALL: [ScanQuantity; 7] = [
        Self::WeylRatio,
        Self::LiyauSingle,
        Self::Thm1Improvement,
        Self::Thm1BestK,
        Self::AvgConstant,
        Self::Thm2Factor,
        Self::Thm2Sharpness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::WeylRatio => "weyl-ratio",
            Self::LiyauSingle => "liyau-single",
            Self::Thm1Improvement => "thm1-improvement",
            Self::Thm1BestK => "thm1-best-k",
            Self::AvgConstant => "avg-constant",
            Self::Thm2Factor => "thm2-factor",
            Self::Thm2Sharpness => "thm2-sharpness",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|q| q.as_str() == s)
    }

    /// Eigenvalues needed to scan through `n_max`.
    pub fn required_count(self, n_max: usize) -> usize {
        match self {
            Self::Thm2Sharpness => 2 * n_max,
            Self::Thm2Factor => 0,
            _ => n_max,
        }
    }
}

pub fn scan(spectrum: &Spectrum, quantity: ScanQuantity, n_max: usize) -> Result<Vec<(usize, f64)>, BoundsError> {
    let dom = spectrum.domain();
    let (d, vol) = (dom.dim(), dom.volume());
    let mut rows = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let v = match quantity {
            ScanQuantity::WeylRatio => bounds::weyl_ratio(spectrum, n)?,
            ScanQuantity::LiyauSingle => spectrum.eigenvalue(n)? / bounds::liyau_single_bound(n, d, vol),
            ScanQuantity::Thm1Improvement => {
                let k = (n / 2).max(1);
                let gain = bounds::thm1_rhs(spectrum, n, k)? - bounds::liyau_single_bound(n, d, vol);
                gain / bounds::liyau_single_bound(n, d, vol)
            }
            ScanQuantity::Thm1BestK => bounds::thm1_best_k(spectrum, n)?.0 as f64 / n as f64,
            ScanQuantity::AvgConstant => bounds::avg_ratio_statistic(spectrum, n)?.ratio,
            ScanQuantity::Thm2Factor => bounds::thm2_factor(n, bounds::thm2_threshold(n, d), d),
            ScanQuantity::Thm2Sharpness => {
                bounds::thm2_lhs(spectrum, n, n)? / bounds::thm2_rhs(n, n, d, vol)?
            }
        };
        rows.push((n, v));
    }
    Ok(rows)
}

/// `n<TAB>quantity` rows with a header line.
pub fn to_tsv(quantity: ScanQuantity, rows: &[(usize, f64)]) -> String {
    let mut out = format!("n\t{}\n", quantity.as_str());
    for (n, v) in rows {
        let _ = writeln!(out, "{n}\t{}", sig17(*v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::box_spectrum;

    #[test]
    fn names_round_trip() {
        for q in ScanQuantity::ALL {
            assert_eq!(ScanQuantity::parse(q.as_str()), Some(q));
        }
        assert_eq!(ScanQuantity::parse("nope"), None);
    }

    #[test]
    fn interval_average_is_flat() {
        let s = box_spectrum(&[1.0], 50).unwrap();
        for (_, v) in scan(&s, ScanQuantity::AvgConstant, 50).unwrap() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn square_improvement_tends_to_half() {
        let s = box_spectrum(&[1.0, 1.0], 4000).unwrap();
        let rows = scan(&s, ScanQuantity::Thm1Improvement, 4000).unwrap();
        let last = rows.last().unwrap().1;
        assert!((last - 0.5).abs() < 0.03, "{last}");
        let tsv = to_tsv(ScanQuantity::Thm1Improvement, &rows);
        assert!(tsv.starts_with("n\tthm1-improvement\n1\t"));
        assert_eq!(tsv.lines().count(), 4001);
    }
}
