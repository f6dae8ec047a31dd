//! Gamma function, Bessel functions of the first kind of real order, and
//! their positive zeros.
//!
//! `J_ν(x)` uses the ascending series for `x ≤ 2`. Beyond that it follows
//! Steed's method: the continued fraction for `J'_ν/J_ν`, a downward
//! recurrence to a low order `μ`, and the complex continued fraction for
//! `(J'_μ + iY'_μ)/(J_μ + iY_μ)`, normalized through the Wronskian. This
//! keeps full double precision over the whole supported range, including
//! large arguments, so no separate asymptotic branch is needed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

/// Largest order accepted by the Bessel routines.
pub const MAX_ORDER: f64 = 1000.0;
/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARG: f64 = 1.0e5;
/// Largest zero index accepted by [`bessel_zero`].
pub const MAX_ZERO_INDEX: usize = 10_000;
/// Absolute accuracy targeted for every computed zero.
pub const ZERO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpecialError {
    #[error("{what} = {value} outside the supported range")]
    OutOfRange { what: &'static str, value: f64 },
    #[error("{what} failed to converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(z: f64) -> f64 {
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    acc
}

/// `Γ(x)` for `x > 0`.
pub fn gamma_fn(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialError::OutOfRange {
            what: "gamma argument",
            value: x,
        });
    }
    if x < 0.5 {
        // reflection
        return Ok(PI / ((PI * x).sin() * gamma_fn(1.0 - x)?));
    }
    if x > 171.0 {
        return Ok(f64::INFINITY);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok((2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z))
}

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64, SpecialError> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(SpecialError::OutOfRange {
            what: "ln_gamma argument",
            value: x,
        });
    }
    if x < 0.5 {
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

/// `J_ν(x)` for `0 ≤ ν ≤ MAX_ORDER`, `0 ≤ x ≤ MAX_ARG`.
pub fn bessel_j(nu: f64, x: f64) -> Result<f64, SpecialError> {
    check_order(nu)?;
    if !(0.0..=MAX_ARG).contains(&x) {
        return Err(SpecialError::OutOfRange {
            what: "Bessel argument",
            value: x,
        });
    }
    Ok(bessel_j_and_derivative(nu, x)?.0)
}

fn check_order(nu: f64) -> Result<(), SpecialError> {
    if (0.0..=MAX_ORDER).contains(&nu) {
        Ok(())
    } else {
        Err(SpecialError::OutOfRange {
            what: "Bessel order",
            value: nu,
        })
    }
}

/// `(J_ν(x), J'_ν(x))` without range checks on `x` (must be `≥ 0`).
pub(crate) fn bessel_j_and_derivative(nu: f64, x: f64) -> Result<(f64, f64), SpecialError> {
    if x == 0.0 {
        let j = if nu == 0.0 { 1.0 } else { 0.0 };
        let dj = match nu {
            n if n == 1.0 => 0.5,
            n if n == 0.0 || n > 1.0 => 0.0,
            _ => f64::INFINITY,
        };
        return Ok((j, dj));
    }
    if x <= 2.0 {
        return Ok(ascending_series(nu, x));
    }
    if x >= HANKEL_MIN_ARG && 2.0 * x >= nu * nu {
        return Ok(hankel_asymptotic(nu, x));
    }
    steed(nu, x)
}

const HANKEL_MIN_ARG: f64 = 1500.0;

/// `J_ν(x) = √(2/πx) (P cos χ - Q sin χ)`, `χ = x - (ν/2 + 1/4)π`, with the
/// usual asymptotic series for `P` and `Q` in powers of `1/x`. Only used for
/// `x ≥ ν²/2`, where the `k`-th term is bounded by `(4ν²/8x)^k / k!`. The derivative
/// comes from the companion series for `J_{ν+1}`.
fn hankel_asymptotic(nu: f64, x: f64) -> (f64, f64) {
    let j = |order: f64| {
        let mu = 4.0 * order * order;
        let (mut p, mut q) = (1.0, 0.0);
        let mut term = 1.0;
        let mut k: f64 = 1.0;
        loop {
            // term_k = Π_{i≤k} (μ - (2i-1)^2) / (i 8x)
            term *= (mu - (2.0 * k - 1.0).powi(2)) / (k * 8.0 * x);
            if k as usize % 2 == 1 {
                q += if (k as usize / 2) % 2 == 0 { term } else { -term };
            } else {
                p += if (k as usize / 2) % 2 == 1 { -term } else { term };
            }
            if term.abs() < 1e-17 || k > 60.0 {
                break;
            }
            k += 1.0;
        }
        let chi = x - (0.5 * order + 0.25) * PI;
        (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
    };
    let jn = j(nu);
    let jn1 = j(nu + 1.0);
    (jn, nu / x * jn - jn1)
}

fn ascending_series(nu: f64, x: f64) -> (f64, f64) {
    let half = 0.5 * x;
    let lead = (nu * half.ln() - ln_gamma(nu + 1.0).expect("nu + 1 > 0")).exp();
    let q = -half * half;
    let mut term = lead;
    let mut sum = term;
    let mut dsum = term * nu;
    let mut m = 0.0;
    loop {
        m += 1.0;
        term *= q / (m * (m + nu));
        sum += term;
        dsum += term * (2.0 * m + nu);
        if term.abs() <= 1e-17 * sum.abs() || m > 200.0 {
            break;
        }
    }
    (sum, dsum / x)
}

const FPMIN: f64 = 1e-30;
const RESCALE: f64 = 1e200;

fn steed(nu: f64, x: f64) -> Result<(f64, f64), SpecialError> {
    let eps = f64::EPSILON;
    let max_iter = 10 * x as usize + 10_000;
    let xi = 1.0 / x;
    let xi2 = 2.0 * xi;
    let w = xi2 / PI;

    // J'_ν/J_ν by the modified Lentz method
    let mut isign = 1.0;
    let mut h = (nu * xi).max(FPMIN);
    let mut b = xi2 * nu;
    let mut d = 0.0;
    let mut c = h;
    let mut converged = false;
    for _ in 0..max_iter {
        b += xi2;
        d = b - d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b - 1.0 / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = c * d;
        h *= del;
        if d < 0.0 {
            isign = -isign;
        }
        if (del - 1.0).abs() <= eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpecialError::NoConvergence {
            what: "Bessel ratio continued fraction",
            iterations: max_iter,
        });
    }

    let nl = (nu - x + 1.5).floor().max(0.0) as usize;
    let mu = nu - nl as f64;
    let mut rjl = isign * FPMIN;
    let mut rjpl = h * rjl;
    let mut rjl1 = rjl;
    let mut rjp1 = rjpl;
    let mut fact = nu * xi;
    for _ in 0..nl {
        let t = fact * rjl + rjpl;
        fact -= xi;
        rjpl = fact * t - rjl;
        rjl = t;
        if rjl.abs() > RESCALE {
            rjl /= RESCALE;
            rjpl /= RESCALE;
            rjl1 /= RESCALE;
            rjp1 /= RESCALE;
        }
    }
    if rjl == 0.0 {
        rjl = eps;
    }
    let f = rjpl / rjl;

    // p + iq = (J'_μ + iY'_μ)/(J_μ + iY_μ)
    let mut a = 0.25 - mu * mu;
    let mut p = -0.5 * xi;
    let mut q = 1.0;
    let br = 2.0 * x;
    let mut bi = 2.0;
    let mut fct = a * xi / (p * p + q * q);
    let mut cr = br + q * fct;
    let mut ci = bi + p * fct;
    let mut den = br * br + bi * bi;
    let mut dr = br / den;
    let mut di = -bi / den;
    let mut dlr = cr * dr - ci * di;
    let mut dli = cr * di + ci * dr;
    let mut tmp = p * dlr - q * dli;
    q = p * dli + q * dlr;
    p = tmp;
    converged = false;
    for i in 2..max_iter {
        a += 2.0 * (i - 1) as f64;
        bi += 2.0;
        dr = a * dr + br;
        di = a * di + bi;
        if dr.abs() + di.abs() < FPMIN {
            dr = FPMIN;
        }
        fct = a / (cr * cr + ci * ci);
        cr = br + cr * fct;
        ci = bi - ci * fct;
        if cr.abs() + ci.abs() < FPMIN {
            cr = FPMIN;
        }
        den = dr * dr + di * di;
        dr /= den;
        di /= -den;
        dlr = cr * dr - ci * di;
        dli = cr * di + ci * dr;
        tmp = p * dlr - q * dli;
        q = p * dli + q * dlr;
        p = tmp;
        if (dlr - 1.0).abs() + dli.abs() <= eps {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SpecialError::NoConvergence {
            what: "Bessel complex continued fraction",
            iterations: max_iter,
        });
    }
    let gam = (p - f) / q;
    let rjmu = (w / ((p - f) * gam + q)).sqrt().copysign(rjl);
    let scale = rjmu / rjl;
    Ok((rjl1 * scale, rjp1 * scale))
}

/// Ascending list of positive zeros `j_{ν,1} < j_{ν,2} < ...` of `J_ν`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BesselZeroTable {
    pub order: f64,
    pub zeros: Vec<f64>,
    pub tolerance: f64,
}

/// Bracket the root of `J_ν` in `[lo, hi]` (sign change required) and polish
/// it with Newton steps that fall back to bisection when they leave the
/// bracket.
fn refine_zero(nu: f64, mut lo: f64, mut hi: f64) -> Result<f64, SpecialError> {
    const MAX_ITER: usize = 200;
    let (mut flo, _) = bessel_j_and_derivative(nu, lo)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_ITER {
        let (fx, dfx) = bessel_j_and_derivative(nu, x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
            flo = fx;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton > lo && newton < hi && dfx != 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let step = (next - x).abs();
        x = next;
        if step <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * x {
            return Ok(x);
        }
    }
    Err(SpecialError::NoConvergence {
        what: "Bessel zero refinement",
        iterations: MAX_ITER,
    })
}

/// All zeros of `J_ν` in `(0, limit]`, found by stepping from `x = ν`
/// (there is no zero below `ν`) in unit increments. Consecutive zeros are
/// more than 3 apart for every `ν ≥ 0`, so each unit step holds at most one
/// sign change and none is skipped.
pub fn bessel_zeros_below(nu: f64, limit: f64) -> Result<Vec<f64>, SpecialError> {
    check_order(nu)?;
    collect_zeros(nu, |_, x| x <= limit)
        .map(|z| z.into_iter().filter(|&v| v <= limit).collect())
}

fn collect_zeros(
    nu: f64,
    mut keep_going: impl FnMut(&[f64], f64) -> bool,
) -> Result<Vec<f64>, SpecialError> {
    const STEP: f64 = 1.0;
    let mut zeros = Vec::new();
    let mut a = nu;
    let (mut fa, _) = bessel_j_and_derivative(nu, a)?;
    while keep_going(&zeros, a) {
        let b = a + STEP;
        let (fb, _) = bessel_j_and_derivative(nu, b)?;
        if fb == 0.0 {
            zeros.push(b);
            // step past the exact root
            a = b + 0.5 * STEP;
            fa = bessel_j_and_derivative(nu, a)?.0;
            continue;
        }
        if fa != 0.0 && (fa < 0.0) != (fb < 0.0) {
            zeros.push(refine_zero(nu, a, b)?);
        }
        a = b;
        fa = fb;
    }
    Ok(zeros)
}

/// The first `count` positive zeros of `J_ν`.
pub fn bessel_zeros(nu: f64, count: usize) -> Result<BesselZeroTable, SpecialError> {
    check_order(nu)?;
    let zeros = collect_zeros(nu, |z, _| z.len() < count)?;
    Ok(BesselZeroTable {
        order: nu,
        zeros,
        tolerance: ZERO_TOLERANCE,
    })
}

/// McMahon's large-zero expansion of `j_{ν,k}`.
pub fn mcmahon_estimate(nu: f64, k: usize) -> f64 {
    let beta = (k as f64 + 0.5 * nu - 0.25) * PI;
    let mu = 4.0 * nu * nu;
    let b8 = 8.0 * beta;
    beta - (mu - 1.0) / b8
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3))
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * b8.powi(5))
}

/// `j_{ν,k}`, the `k`-th positive zero of `J_ν`.
///
/// Low indices are located by a sign-change scan, which cannot miscount.
/// Once `k` is large compared to `ν` the McMahon estimate is accurate to far
/// better than half a zero spacing, and a Newton iteration confined to the
/// bracket `estimate ± 0.5` finishes the job.
pub fn bessel_zero(nu: f64, k: usize) -> Result<f64, SpecialError> {
    check_order(nu)?;
    if k == 0 || k > MAX_ZERO_INDEX {
        return Err(SpecialError::OutOfRange {
            what: "zero index",
            value: k as f64,
        });
    }
    if (k as f64) >= 2.0 * nu + 20.0 {
        let guess = mcmahon_estimate(nu, k);
        let (lo, hi) = (guess - 0.5, guess + 0.5);
        let flo = bessel_j_and_derivative(nu, lo)?.0;
        let fhi = bessel_j_and_derivative(nu, hi)?.0;
        if (flo < 0.0) != (fhi < 0.0) {
            return refine_zero(nu, lo, hi);
        }
    }
    let table = bessel_zeros(nu, k)?;
    Ok(table.zeros[k - 1])
}

/// `j_{d/2-1,1}`, the first zero entering the Faber–Krahn constant. For
/// `d = 1` the order is `-1/2` and `J_{-1/2}(x) ∝ cos(x)/√x`, so the zero
/// is `π/2`.
pub fn faber_krahn_zero(dim: usize) -> Result<f64, SpecialError> {
    match dim {
        0 => Err(SpecialError::OutOfRange {
            what: "dimension",
            value: 0.0,
        }),
        1 => Ok(0.5 * PI),
        d => bessel_zero(0.5 * d as f64 - 1.0, 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn gamma_values() {
        assert_relative_eq!(gamma_fn(1.0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(0.5).unwrap(), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma_fn(5.0).unwrap(), 24.0, max_relative = 1e-14);
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.0).is_err());
    }

    #[test]
    fn gamma_against_factorial_recurrences() {
        // integers: (n-1)!, half-integers: Γ(n+1/2) = (2n)! √π / (4^n n!)
        let mut fact = 1.0f64;
        for n in 1..=20u32 {
            if n > 1 {
                fact *= (n - 1) as f64;
            }
            assert_relative_eq!(gamma_fn(n as f64).unwrap(), fact, max_relative = 1e-12);
        }
        let mut half = PI.sqrt();
        for n in 0..20 {
            let x = n as f64 + 0.5;
            assert_relative_eq!(gamma_fn(x).unwrap(), half, max_relative = 1e-12);
            assert_relative_eq!(ln_gamma(x).unwrap(), half.ln(), max_relative = 1e-12);
            half *= x;
        }
    }

    #[test]
    fn bessel_known_values() {
        assert_eq!(bessel_j(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1.0, 0.0).unwrap(), 0.0);
        let table = [
            (0.0, 1.0, 0.765_197_686_557_966_6),
            (1.0, 1.0, 0.440_050_585_744_933_5),
            (0.0, 10.0, -0.245_935_764_451_348_3),
            (1.0, 10.0, 0.043_472_746_168_861_6),
            (5.0, 10.0, -0.234_061_528_186_793_6),
            (10.0, 10.0, 0.207_486_106_633_358_9),
            (2.0, 1.5, 0.232_087_672_144_214_75),
        ];
        for (nu, x, want) in table {
            assert_abs_diff_eq!(bessel_j(nu, x).unwrap(), want, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(bessel_j(0.0, 2.404_825_558).unwrap(), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn half_integer_orders_match_closed_forms() {
        for &x in &[0.3, 1.7, 2.5, 7.0, 31.4, 250.0, 4_000.0, 60_000.0] {
            let s = (2.0 / (PI * x)).sqrt();
            let j_half = s * x.sin();
            let j_three_half = s * (x.sin() / x - x.cos());
            let tol = if x <= 50.0 { 1e-12 } else { 1e-9 };
            assert_abs_diff_eq!(bessel_j(0.5, x).unwrap(), j_half, epsilon = tol);
            assert_abs_diff_eq!(bessel_j(1.5, x).unwrap(), j_three_half, epsilon = tol);
        }
    }

    #[test]
    fn three_term_recurrence_holds() {
        for &nu in &[1.0, 2.5, 7.3, 40.0, 120.0] {
            for &x in &[0.5, 3.0, 11.0, 45.0, 130.0, 900.0] {
                let a = bessel_j(nu - 1.0, x).unwrap();
                let b = bessel_j(nu, x).unwrap();
                let c = bessel_j(nu + 1.0, x).unwrap();
                let scale = a.abs().max(b.abs()).max(c.abs()).max(1e-300);
                assert!(
                    ((a + c) - 2.0 * nu / x * b).abs() <= 1e-11 * scale.max(2.0 * nu / x * b.abs()),
                    "nu={nu} x={x}"
                );
            }
        }
    }

    #[test]
    fn neumann_sum_of_squares() {
        // 1 = J_0^2 + 2 Σ_{k≥1} J_k^2
        for &x in &[0.7, 4.0, 17.0, 42.0] {
            let mut s = bessel_j(0.0, x).unwrap().powi(2);
            for k in 1..=(x as usize + 60) {
                s += 2.0 * bessel_j(k as f64, x).unwrap().powi(2);
            }
            assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn derivative_matches_recurrence() {
        for &(nu, x) in &[(0.0, 3.3), (2.0, 1.2), (4.5, 9.1), (30.0, 35.0)] {
            let (_, dj) = bessel_j_and_derivative(nu, x).unwrap();
            let want = if nu == 0.0 {
                -bessel_j(1.0, x).unwrap()
            } else {
                0.5 * (bessel_j(nu - 1.0, x).unwrap() - bessel_j(nu + 1.0, x).unwrap())
            };
            assert_abs_diff_eq!(dj, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn large_argument_branches_agree() {
        // just above the switch to the asymptotic series both methods are valid
        for &nu in &[0.0, 0.5, 2.0, 17.0, 40.0, 54.0] {
            for &x in &[1_500.0, 1_733.3, 2_000.0] {
                let a = hankel_asymptotic(nu, x);
                let b = steed(nu, x).unwrap();
                assert_abs_diff_eq!(a.0, b.0, epsilon = 5e-12);
                assert_abs_diff_eq!(a.1, b.1, epsilon = 5e-12);
            }
        }
    }

    #[test]
    fn out_of_range_arguments() {
        assert!(bessel_j(-0.5, 1.0).is_err());
        assert!(bessel_j(MAX_ORDER + 1.0, 1.0).is_err());
        assert!(bessel_j(1.0, -1.0).is_err());
        assert!(bessel_j(1.0, 2.0 * MAX_ARG).is_err());
        assert!(bessel_zero(1.0, 0).is_err());
        assert!(bessel_zero(1.0, MAX_ZERO_INDEX + 1).is_err());
    }

    #[test]
    fn half_order_zeros_are_multiples_of_pi() {
        for k in 1..=30 {
            assert_abs_diff_eq!(bessel_zero(0.5, k).unwrap(), k as f64 * PI, epsilon = 1e-12);
        }
        // large index goes through the McMahon path
        assert_abs_diff_eq!(bessel_zero(0.5, 9_000).unwrap(), 9_000.0 * PI, epsilon = 1e-9);
    }

    #[test]
    fn mcmahon_and_scan_agree() {
        for &nu in &[0.0, 1.0, 3.5, 10.0] {
            let k = (2.0 * nu + 20.0) as usize + 3;
            let table = bessel_zeros(nu, k).unwrap();
            assert_abs_diff_eq!(bessel_zero(nu, k).unwrap(), table.zeros[k - 1], epsilon = 1e-10);
        }
    }

    #[test]
    fn zeros_below_limit() {
        let z = bessel_zeros_below(0.0, 10.0).unwrap();
        assert_eq!(z.len(), 3);
        assert!(bessel_zeros_below(30.0, 30.0).unwrap().is_empty());
    }

    #[test]
    fn first_zero_by_dimension() {
        assert_abs_diff_eq!(faber_krahn_zero(1).unwrap(), PI / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(faber_krahn_zero(2).unwrap(), 2.404_825_557_695_773, epsilon = 1e-12);
        assert_abs_diff_eq!(faber_krahn_zero(3).unwrap(), PI, epsilon = 1e-12);
    }
}
