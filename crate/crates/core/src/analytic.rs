//! Closed-form Dirichlet spectra of boxes and balls.
//!
//! Both enumerators pick a cutoff from the Weyl asymptotic, collect every
//! eigenvalue at or below it, and double the cutoff until at least `N`
//! values are in hand. Everything below the cutoff is found, so the
//! truncated list is complete.

use std::f64::consts::PI;

use crate::geometry::{dimension_constants, DomainSpec, Shape};
use crate::spectrum::{Provenance, Spectrum, SpectrumError};
use crate::special;

pub const MAX_BOX_DIM: usize = 6;
pub const MAX_BOX_COUNT: usize = 1_000_000;
pub const MAX_BALL_COUNT: usize = 100_000;
/// Upper bound on lattice points visited by one box enumeration.
pub const BOX_BUDGET: usize = 20_000_000;

/// One box eigenfunction `∏ sin(k_i π x_i / a_i)` and its eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxMode {
    pub eigenvalue: f64,
    pub indices: Vec<u32>,
}

fn check_box_request(lengths: &[f64], count: usize) -> Result<DomainSpec, SpectrumError> {
    let domain = DomainSpec::new_box(lengths)?;
    if lengths.len() > MAX_BOX_DIM {
        return Err(SpectrumError::Unsupported(format!(
            "box dimension {} exceeds {MAX_BOX_DIM}",
            lengths.len()
        )));
    }
    if count == 0 || count > MAX_BOX_COUNT {
        return Err(SpectrumError::Unsupported(format!(
            "box eigenvalue count must be in 1..={MAX_BOX_COUNT}, got {count}"
        )));
    }
    Ok(domain)
}

/// Visits every positive integer tuple with `Σ k_i² w_i <= limit` in
/// lexicographic order. Returns `false` once more than `budget` tuples
/// have been seen.
fn visit_lattice(
    weights: &[f64],
    limit: f64,
    budget: usize,
    visit: &mut dyn FnMut(f64, &[u32]),
) -> bool {
    // smallest possible contribution of the axes after each position
    let mut tail = vec![0.0; weights.len() + 1];
    for i in (0..weights.len()).rev() {
        tail[i] = tail[i + 1] + weights[i];
    }
    let slack = limit * 1e-12;
    let mut tuple = Vec::with_capacity(weights.len());
    let mut seen = 0usize;

    fn go(
        axis: usize,
        partial: f64,
        weights: &[f64],
        tail: &[f64],
        limit: f64,
        slack: f64,
        tuple: &mut Vec<u32>,
        seen: &mut usize,
        budget: usize,
        visit: &mut dyn FnMut(f64, &[u32]),
    ) -> bool {
        if axis == weights.len() {
            if partial <= limit {
                *seen += 1;
                if *seen > budget {
                    return false;
                }
                visit(partial, tuple);
            }
            return true;
        }
        let mut k: u32 = 1;
        loop {
            let kk = k as f64;
            let next = partial + kk * kk * weights[axis];
            if next + tail[axis + 1] > limit + slack {
                return true;
            }
            tuple.push(k);
            let ok = go(
                axis + 1, next, weights, tail, limit, slack, tuple, seen, budget, visit,
            );
            tuple.pop();
            if !ok {
                return false;
            }
            k += 1;
        }
    }

    go(
        0, 0.0, weights, &tail, limit, slack, &mut tuple, &mut seen, budget, visit,
    )
}

/// Smallest lattice cutoff, in units of `π²`, holding at least `count`
/// modes.
fn box_cutoff(weights: &[f64], volume: f64, count: usize) -> Result<f64, SpectrumError> {
    let d = weights.len();
    let omega = dimension_constants(d)?.omega;
    // Weyl: N ≈ ω_d |Ω| λ^{d/2} / (2π)^d, and λ = π² s
    let weyl = 4.0 * (count as f64 / (omega * volume)).powf(2.0 / d as f64);
    let mut limit = weyl.max(weights.iter().sum());
    loop {
        let mut n = 0usize;
        if !visit_lattice(weights, limit, BOX_BUDGET, &mut |_, _| n += 1) {
            return Err(SpectrumError::BudgetExceeded { budget: BOX_BUDGET });
        }
        if n >= count {
            return Ok(limit);
        }
        limit *= 2.0;
    }
}

fn box_weights(lengths: &[f64]) -> Vec<f64> {
    lengths.iter().map(|a| 1.0 / (a * a)).collect()
}

/// The first `count` box modes, ordered by eigenvalue; equal eigenvalues
/// keep lexicographic tuple order.
pub fn box_modes(lengths: &[f64], count: usize) -> Result<Vec<BoxMode>, SpectrumError> {
    let domain = check_box_request(lengths, count)?;
    let weights = box_weights(lengths);
    let limit = box_cutoff(&weights, domain.volume(), count)?;
    let mut modes = Vec::new();
    visit_lattice(&weights, limit, BOX_BUDGET, &mut |s, t| {
        modes.push((s, t.to_vec()))
    });
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    modes.truncate(count);
    Ok(modes
        .into_iter()
        .map(|(s, indices)| BoxMode {
            eigenvalue: PI * PI * s,
            indices,
        })
        .collect())
}

/// First `count` Dirichlet eigenvalues `π² Σ (k_i/a_i)²` of the box.
pub fn box_spectrum(lengths: &[f64], count: usize) -> Result<Spectrum, SpectrumError> {
    let domain = check_box_request(lengths, count)?;
    let weights = box_weights(lengths);
    let limit = box_cutoff(&weights, domain.volume(), count)?;
    let mut values = Vec::new();
    visit_lattice(&weights, limit, BOX_BUDGET, &mut |s, _| values.push(s));
    // stable, so ties stay in lexicographic tuple order
    values.sort_by(|a, b| a.total_cmp(b));
    values.truncate(count);
    let values = values.into_iter().map(|s| PI * PI * s).collect();
    Spectrum::new(domain, values, Provenance::AnalyticBox, count)
}

/// First `count` Dirichlet eigenvalues of the ball of radius `radius`.
pub fn ball_spectrum(dim: usize, radius: f64, count: usize) -> Result<Spectrum, SpectrumError> {
    let domain = DomainSpec::new_ball(dim, radius)?;
    if count == 0 || count > MAX_BALL_COUNT {
        return Err(SpectrumError::Unsupported(format!(
            "ball eigenvalue count must be in 1..={MAX_BALL_COUNT}, got {count}"
        )));
    }
    let values = if dim == 1 {
        // the interval (-R, R)
        (1..=count)
            .map(|n| {
                let q = n as f64 * PI / (2.0 * radius);
                q * q
            })
            .collect()
    } else {
        ball_bessel_zeros(dim, count)?
            .into_iter()
            .map(|j| (j / radius).powi(2))
            .collect()
    };
    Spectrum::new(domain, values, Provenance::AnalyticBall, count)
}

/// The `count` smallest Bessel zeros of the radial problem on the unit
/// ball, repeated by angular multiplicity.
fn ball_bessel_zeros(dim: usize, count: usize) -> Result<Vec<f64>, SpectrumError> {
    let (order_shift, omega) = match dim {
        2 => (0.0, PI),
        _ => (0.5, 4.0 * PI / 3.0),
    };
    let multiplicity = |l: usize| -> usize {
        match dim {
            2 if l == 0 => 1,
            2 => 2,
            _ => 2 * l + 1,
        }
    };
    // Weyl for the unit ball in terms of the zero cutoff J: N ≈ ω² J^d / (2π)^d
    let d = dim as f64;
    let mut cutoff = (count as f64 * (2.0 * PI).powf(d) / (omega * omega)).powf(1.0 / d);
    loop {
        let mut zeros: Vec<(f64, usize)> = Vec::new();
        let mut total = 0usize;
        let mut l = 0usize;
        // j_{ν,1} > ν, so orders at or above the cutoff contribute nothing
        while (l as f64 + order_shift) < cutoff {
            let nu = l as f64 + order_shift;
            let found = special::bessel_zeros_below(nu, cutoff)?;
            if found.is_empty() {
                break;
            }
            total += found.len() * multiplicity(l);
            zeros.extend(found.into_iter().map(|j| (j, l)));
            l += 1;
        }
        if total >= count {
            zeros.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut out = Vec::with_capacity(total);
            for (j, l) in zeros {
                out.extend(std::iter::repeat(j).take(multiplicity(l)));
                if out.len() >= count {
                    break;
                }
            }
            out.truncate(count);
            return Ok(out);
        }
        cutoff *= std::f64::consts::SQRT_2;
    }
}

/// Spectrum of the dilated domain `tΩ`: eigenvalues scale by `t^{-2}`.
pub fn scale_spectrum(spectrum: &Spectrum, t: f64) -> Result<Spectrum, SpectrumError> {
    if !spectrum.provenance().is_analytic() {
        return Err(SpectrumError::NotAnalytic(spectrum.provenance()));
    }
    let domain = spectrum.domain().dilate(t)?;
    let values = spectrum.eigenvalues().iter().map(|v| v / (t * t)).collect();
    Spectrum::new(
        domain,
        values,
        spectrum.provenance(),
        spectrum.complete_through(),
    )
}

/// Analytic spectrum for any box or ball domain.
pub fn analytic_spectrum(domain: &DomainSpec, count: usize) -> Result<Spectrum, SpectrumError> {
    let s = match domain.shape() {
        Shape::Box { lengths } => box_spectrum(lengths, count)?,
        Shape::Ball { dim, radius } => ball_spectrum(*dim, *radius, count)?,
        Shape::Mask(_) => {
            return Err(SpectrumError::Unsupported(
                "masks have no closed-form spectrum".into(),
            ))
        }
    };
    // keep the caller's label
    Spectrum::new(
        domain.clone(),
        s.eigenvalues().to_vec(),
        s.provenance(),
        s.complete_through(),
    )
}
