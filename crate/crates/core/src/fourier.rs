//! Phase-space diagnostics for the first `k` eigenfunctions.
//!
//! With the unitary transform `û(ξ) = (2π)^{-d/2} ∫ u(x) e^{-i⟨x,ξ⟩} dx`,
//! the profile is `g(ξ) = ((2π)^d/|Ω|) Σ_{m<=k} |û_m(ξ)|²`. It satisfies
//! `0 <= g <= 1` and `∫ g = (2π)^d k / |Ω|`. The mass deficit `η` measures
//! how much of that mass sits outside the ball `B(0, r)` that would hold
//! it at full density.

use std::f64::consts::PI;
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::analytic::{box_modes, BoxMode};
use crate::bounds::{self, BoundEvaluation, BoundsError};
use crate::fdm::{self, DiscreteLaplacian, Eigenpairs, FdmError, SolverConfig};
use crate::geometry::{dimension_constants, DomainSpec, Shape};
use crate::numfmt::sig17;
use crate::quadrature::composite;
use crate::spectrum::{Spectrum, SpectrumError};

/// Largest `g` accepted on exact profiles.
pub const G_MAX_TOLERANCE: f64 = 1e-6;
/// Relative Plancherel tolerance for closed-form profiles.
pub const PLANCHEREL_TOLERANCE: f64 = 0.005;
/// Relative tolerance for profiles built from discrete eigenvectors.
pub const APPROXIMATE_TOLERANCE: f64 = 0.05;
/// Allowed change of the ball mass, relative to the total, between the two
/// quadrature resolutions used for `η`.
pub const ETA_QUADRATURE_TOLERANCE: f64 = 1e-6;
/// Largest tensor grid a profile may allocate.
pub const MAX_GRID_POINTS: usize = 40_000_000;

#[derive(Debug, thiserror::Error)]
pub enum FourierError {
    #[error("k >= 1 required")]
    ZeroModes,
    #[error("unsupported profile request: {0}")]
    Unsupported(String),
    #[error("{what}: achieved {achieved:e}, tolerance {tolerance:e}")]
    Quadrature {
        what: &'static str,
        achieved: f64,
        tolerance: f64,
    },
    #[error("ball radius {radius} exceeds the profile grid half-width {extent}")]
    RadiusOutsideGrid { radius: f64, extent: f64 },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Fdm(#[from] FdmError),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error("cannot write profile: {0}")]
    Io(#[from] std::io::Error),
}

/// `sin(x)/x`, with the Taylor limit near the removable singularity.
fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-6 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `|∫_0^a √(2/a) sin(kπx/a) e^{-iξx} dx|²`, written as
/// `(2/a) (q a sinc(θ/2) / (q + |ξ|))²` with `q = kπ/a`, `θ = |ξ|a − kπ`,
/// which stays finite at `|ξ| = q`.
pub fn axis_transform_sq(a: f64, k: u32, xi: f64) -> f64 {
    let q = k as f64 * PI / a;
    let x = xi.abs();
    let theta = x * a - k as f64 * PI;
    let t = q * a * sinc(0.5 * theta) / (q + x);
    2.0 / a * t * t
}

/// Squared modulus of the plain integral `∫_Ω u e^{-i⟨x,ξ⟩} dx` for the
/// normalized box mode `indices`.
pub fn box_eigfun_transform_sq(lengths: &[f64], indices: &[u32], xi: &[f64]) -> f64 {
    lengths
        .iter()
        .zip(indices)
        .zip(xi)
        .map(|((a, k), x)| axis_transform_sq(*a, *k, *x))
        .product()
}

/// `|û(ξ)|²` for the unitary transform; integrates to 1 over `R^d`.
pub fn box_eigfun_ft_sq(lengths: &[f64], indices: &[u32], xi: &[f64]) -> f64 {
    box_eigfun_transform_sq(lengths, indices, xi) / (2.0 * PI).powi(lengths.len() as i32)
}

/// Radius `2π k^{1/d} / (ω_d |Ω|)^{1/d}` of the ball of volume `(2π)^d k/|Ω|`.
pub fn ball_radius(k: usize, dim: usize, volume: f64) -> f64 {
    let omega = dimension_constants(dim).expect("d >= 1").omega;
    2.0 * PI * (k as f64 / (omega * volume)).powf(1.0 / dim as f64)
}

/// Frequency grid construction parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridSpec {
    /// Gauss–Legendre nodes per panel of width `π/a` (closed-form profiles).
    pub nodes_per_panel: usize,
    /// Minimal grid half-width in units of `r`.
    pub extent_factor: f64,
    /// Per-axis fraction of mode mass allowed outside the grid.
    pub tail_tolerance: f64,
    /// Zero-padding factor of the discrete transform (masks).
    pub padding: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            nodes_per_panel: 8,
            extent_factor: 3.0,
            tail_tolerance: 2e-4,
            padding: 4,
        }
    }
}

type DensityFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Source {
    Box {
        lengths: Vec<f64>,
        modes: Vec<Vec<u32>>,
    },
    Mask {
        width: usize,
        height: usize,
        spacing: f64,
        /// Eigenvectors laid out on the `width x height` grid, bottom row
        /// first, zero outside the mask.
        grids: Vec<Vec<f64>>,
    },
    Synthetic(DensityFn),
}

/// `g(ξ)` sampled on a tensor grid, plus what is needed to evaluate it
/// anywhere.
#[derive(Clone)]
pub struct SpectralMassProfile {
    dim: usize,
    volume: f64,
    k: usize,
    label: String,
    eigenvalues: Vec<f64>,
    deflation: f64,
    axes: Vec<Vec<f64>>,
    weights: Vec<Vec<f64>>,
    values: Vec<f64>,
    integral: f64,
    approximate: bool,
    /// Diameter of the spatial support; sets the oscillation scale of `g`.
    length_scale: f64,
    source: Source,
}

impl fmt::Debug for SpectralMassProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralMassProfile")
            .field("dim", &self.dim)
            .field("k", &self.k)
            .field("label", &self.label)
            .field("grid", &self.axes.iter().map(Vec::len).collect::<Vec<_>>())
            .field("integral", &self.integral)
            .field("approximate", &self.approximate)
            .finish()
    }
}

/// Scalar summary of a profile for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub k: usize,
    pub grid_points: Vec<usize>,
    pub half_width: Vec<f64>,
    pub max_g: f64,
    pub integral: f64,
    pub nominal_integral: f64,
    pub plancherel_error: f64,
    pub approximate: bool,
}

impl SpectralMassProfile {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn is_approximate(&self) -> bool {
        self.approximate
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    /// Quadrature weights along each axis.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    /// Grid values, last axis fastest.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Estimate of `∫_{R^d} g`.
    pub fn integral(&self) -> f64 {
        self.integral
    }

    /// `(2π)^d k / |Ω|`.
    pub fn nominal_integral(&self) -> f64 {
        (2.0 * PI).powi(self.dim as i32) * self.k as f64 / self.volume
    }

    pub fn plancherel_error(&self) -> f64 {
        let nominal = self.nominal_integral();
        if nominal == 0.0 {
            self.integral.abs()
        } else {
            ((self.integral - nominal) / nominal).abs()
        }
    }

    /// Smallest grid half-width over the axes.
    pub fn half_width(&self) -> f64 {
        self.axes
            .iter()
            .map(|ax| ax.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn summary(&self) -> ProfileSummary {
        ProfileSummary {
            k: self.k,
            grid_points: self.axes.iter().map(Vec::len).collect(),
            half_width: self
                .axes
                .iter()
                .map(|ax| ax.iter().fold(0.0f64, |m, x| m.max(x.abs())))
                .collect(),
            max_g: self.max_value(),
            integral: self.integral,
            nominal_integral: self.nominal_integral(),
            plancherel_error: self.plancherel_error(),
            approximate: self.approximate,
        }
    }

    /// `g(ξ)` at an arbitrary point.
    pub fn evaluate(&self, xi: &[f64]) -> f64 {
        match &self.source {
            Source::Synthetic(f) => f(xi),
            _ => {
                let scale = (2.0 * PI).powi(self.dim as i32) / self.volume;
                scale * (0..self.k).map(|m| self.mode_density(m, xi)).sum::<f64>()
            }
        }
    }

    /// `|û_m(ξ)|²` for the 0-based mode `m`, if the profile carries it.
    pub fn mode_density(&self, m: usize, xi: &[f64]) -> f64 {
        match &self.source {
            Source::Box { lengths, modes } => box_eigfun_ft_sq(lengths, &modes[m], xi),
            Source::Mask {
                width,
                height,
                spacing,
                grids,
            } => {
                let h = *spacing;
                let s = sinc(0.5 * xi[0] * h).powi(2) * sinc(0.5 * xi[1] * h).powi(2);
                let d = cell_sum_sq(&grids[m], *width, *height, h, xi);
                h * h * s * d / (4.0 * PI * PI)
            }
            Source::Synthetic(_) => 0.0,
        }
    }

    fn modes_available(&self) -> usize {
        match &self.source {
            Source::Box { modes, .. } => modes.len(),
            Source::Mask { grids, .. } => grids.len(),
            Source::Synthetic(_) => 0,
        }
    }

    /// Test profile with a prescribed `g`, grid half-width `half_width` and
    /// spatial length scale. `eigenvalues` feed the `lemma1` check.
    pub fn synthetic(
        dim: usize,
        volume: f64,
        k: usize,
        eigenvalues: Vec<f64>,
        half_width: f64,
        length_scale: f64,
        g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let g: DensityFn = Arc::new(g);
        let axis: Vec<f64> = vec![-half_width, 0.0, half_width];
        let weights = vec![0.0; 3];
        let mut p = Self {
            dim,
            volume,
            k,
            label: "synthetic".into(),
            eigenvalues,
            deflation: 0.0,
            axes: vec![axis; dim],
            weights: vec![weights; dim],
            values: Vec::new(),
            integral: 0.0,
            approximate: false,
            length_scale,
            source: Source::Synthetic(g.clone()),
        };
        p.values = grid_points(&p.axes).iter().map(|x| g(x)).collect();
        p.integral = (2.0 * PI).powi(dim as i32) * k as f64 / volume;
        p
    }

    /// `xi_1 ... xi_d g` rows, tab separated, 17 significant digits.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.dim).map(|i| format!("xi_{i}")).collect();
        let _ = writeln!(out, "{}\tg", header.join("\t"));
        for (x, v) in grid_points(&self.axes).iter().zip(&self.values) {
            for c in x {
                out.push_str(&sig17(*c));
                out.push('\t');
            }
            out.push_str(&sig17(*v));
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<std::path::Path>) -> Result<(), FourierError> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }
}

/// All tensor grid points, last axis fastest.
fn grid_points(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut pts = vec![Vec::new()];
    for ax in axes {
        let mut next = Vec::with_capacity(pts.len() * ax.len());
        for p in &pts {
            for x in ax {
                let mut q = p.clone();
                q.push(*x);
                next.push(q);
            }
        }
        pts = next;
    }
    pts
}

fn check_grid_size(axes: &[Vec<f64>]) -> Result<usize, FourierError> {
    let total = axes
        .iter()
        .try_fold(1usize, |acc, ax| acc.checked_mul(ax.len()))
        .unwrap_or(usize::MAX);
    if total > MAX_GRID_POINTS {
        return Err(FourierError::Unsupported(format!(
            "profile grid of {total} points exceeds {MAX_GRID_POINTS}"
        )));
    }
    Ok(total)
}

/// `|Σ_c v_c e^{-i⟨x_c, ξ⟩}|²` over cell midpoints `((c+½)h, (r+½)h)`.
fn cell_sum_sq(grid: &[f64], width: usize, height: usize, h: f64, xi: &[f64]) -> f64 {
    let col: Vec<Complex<f64>> = (0..width)
        .map(|c| Complex::from_polar(1.0, -(c as f64 + 0.5) * h * xi[0]))
        .collect();
    let mut total = Complex::new(0.0, 0.0);
    for r in 0..height {
        let row = &grid[r * width..(r + 1) * width];
        let mut acc = Complex::new(0.0, 0.0);
        for (v, e) in row.iter().zip(&col) {
            if *v != 0.0 {
                acc += e * *v;
            }
        }
        total += acc * Complex::from_polar(1.0, -(r as f64 + 0.5) * h * xi[1]);
    }
    total.norm_sqr()
}

/// Profile of the first `k` eigenfunctions of `domain` (boxes in closed
/// form, masks from discrete eigenvectors).
pub fn g_profile(domain: &DomainSpec, k: usize, spec: &GridSpec) -> Result<SpectralMassProfile, FourierError> {
    match domain.shape() {
        Shape::Box { lengths } => box_profile(lengths, k, spec),
        Shape::Mask(_) => {
            let op = DiscreteLaplacian::assemble(domain)?;
            let want = (k + 1).min(op.dimension()).max(1);
            let pairs = fdm::eigenpairs(&op, &SolverConfig::new(want))?;
            mask_profile(&op, &pairs, k, spec)
        }
        Shape::Ball { .. } => Err(FourierError::Unsupported(
            "profiles are available for boxes and masks".into(),
        )),
    }
}

pub fn box_profile(lengths: &[f64], k: usize, spec: &GridSpec) -> Result<SpectralMassProfile, FourierError> {
    let d = lengths.len();
    if d > 3 {
        return Err(FourierError::Unsupported(format!(
            "profiles need dimension <= 3, got {d}"
        )));
    }
    let domain = DomainSpec::new_box(lengths).map_err(SpectrumError::from)?;
    let volume = domain.volume();
    let modes: Vec<BoxMode> = box_modes(lengths, k + 1)?;
    let r = ball_radius(k.max(1), d, volume);

    let mut axes = Vec::with_capacity(d);
    let mut weights = Vec::with_capacity(d);
    for (i, &a) in lengths.iter().enumerate() {
        let q_max = modes[..k.max(1)]
            .iter()
            .map(|m| m.indices[i] as f64 * PI / a)
            .fold(0.0, f64::max);
        // fraction of a mode's mass beyond |ξ| = L is about 4q²/(3πaL³)
        let tail = (4.0 * q_max * q_max / (3.0 * PI * a * spec.tail_tolerance)).cbrt();
        let half = (spec.extent_factor * r).max(2.0 * q_max).max(tail);
        let panel = PI / a;
        let per_side = (half / panel).ceil() as usize;
        let (x, w) = composite(
            -(per_side as f64) * panel,
            per_side as f64 * panel,
            2 * per_side,
            spec.nodes_per_panel,
        );
        axes.push(x);
        weights.push(w);
    }
    let total = check_grid_size(&axes)?;

    // per-axis factor tables F[axis][mode][node]
    let tables: Vec<Vec<Vec<f64>>> = (0..d)
        .map(|i| {
            modes[..k]
                .iter()
                .map(|m| {
                    axes[i]
                        .iter()
                        .map(|x| axis_transform_sq(lengths[i], m.indices[i], *x))
                        .collect()
                })
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = axes.iter().map(Vec::len).collect();
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let idx = unflatten(flat, &sizes);
            let mut acc = 0.0;
            for m in 0..k {
                let mut p = 1.0;
                for (i, &j) in idx.iter().enumerate() {
                    p *= tables[i][m][j];
                }
                acc += p;
            }
            acc / volume
        })
        .collect();
    let integral = tensor_integral(&values, &weights);
    let diameter = lengths.iter().map(|a| a * a).sum::<f64>().sqrt();
    let profile = SpectralMassProfile {
        dim: d,
        volume,
        k,
        label: domain.label.clone(),
        eigenvalues: modes[..k].iter().map(|m| m.eigenvalue).collect(),
        deflation: 0.0,
        axes,
        weights,
        values,
        integral,
        approximate: false,
        length_scale: diameter,
        source: Source::Box {
            lengths: lengths.to_vec(),
            modes: modes.into_iter().map(|m| m.indices).collect(),
        },
    };
    check_profile(&profile)?;
    Ok(profile)
}

fn unflatten(mut flat: usize, sizes: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; sizes.len()];
    for i in (0..sizes.len()).rev() {
        idx[i] = flat % sizes[i];
        flat /= sizes[i];
    }
    idx
}

/// Tensor-product quadrature, summed in a fixed order.
fn tensor_integral(values: &[f64], weights: &[Vec<f64>]) -> f64 {
    let sizes: Vec<usize> = weights.iter().map(Vec::len).collect();
    let last = *sizes.last().unwrap_or(&1);
    values
        .par_chunks(last)
        .enumerate()
        .map(|(row, chunk)| {
            let idx = unflatten(row * last, &sizes);
            let outer: f64 = idx[..sizes.len() - 1]
                .iter()
                .enumerate()
                .map(|(i, &j)| weights[i][j])
                .product();
            let inner: f64 = chunk.iter().zip(&weights[sizes.len() - 1]).map(|(v, w)| v * w).sum();
            outer * inner
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

fn check_profile(p: &SpectralMassProfile) -> Result<(), FourierError> {
    let (g_tol, int_tol) = if p.approximate {
        (APPROXIMATE_TOLERANCE, APPROXIMATE_TOLERANCE)
    } else {
        (G_MAX_TOLERANCE, PLANCHEREL_TOLERANCE)
    };
    let max = p.max_value();
    if max > 1.0 + g_tol {
        return Err(FourierError::Quadrature {
            what: "g exceeds 1",
            achieved: max - 1.0,
            tolerance: g_tol,
        });
    }
    if p.k > 0 && p.plancherel_error() > int_tol {
        return Err(FourierError::Quadrature {
            what: "Plancherel integral",
            achieved: p.plancherel_error(),
            tolerance: int_tol,
        });
    }
    Ok(())
}

/// Profile from discrete eigenvectors: cell values are extended as
/// piecewise constants and sampled with a zero-padded 2D FFT. Values are
/// flagged approximate.
pub fn mask_profile(
    op: &DiscreteLaplacian,
    pairs: &Eigenpairs,
    k: usize,
    spec: &GridSpec,
) -> Result<SpectralMassProfile, FourierError> {
    if k > pairs.vectors.len() {
        return Err(FourierError::Unsupported(format!(
            "profile needs {k} eigenvectors, got {}",
            pairs.vectors.len()
        )));
    }
    let mask = op.mask();
    let (w, hgt, h) = (mask.width(), mask.height(), mask.spacing());
    let volume = op.domain().volume();
    let pad = spec.padding.max(4);
    let (pw, ph) = (pad * w, pad * hgt);

    // eigenvectors on the grid, bottom row first so y grows with the row
    let grids: Vec<Vec<f64>> = pairs
        .vectors
        .iter()
        .map(|v| {
            let mut g = vec![0.0; w * hgt];
            for (i, x) in v.iter().enumerate() {
                let (c, r) = op.cell(i);
                g[(hgt - 1 - r) * w + c] = *x;
            }
            g
        })
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let fft_row = planner.plan_fft_forward(pw);
    let fft_col = planner.plan_fft_forward(ph);
    let mut power = vec![0.0; pw * ph];
    for g in &grids[..k] {
        let mut buf = vec![Complex::new(0.0, 0.0); pw * ph];
        for r in 0..hgt {
            for c in 0..w {
                buf[r * pw + c] = Complex::new(g[r * w + c], 0.0);
            }
        }
        for row in buf.chunks_mut(pw) {
            fft_row.process(row);
        }
        let mut col = vec![Complex::new(0.0, 0.0); ph];
        for c in 0..pw {
            for r in 0..ph {
                col[r] = buf[r * pw + c];
            }
            fft_col.process(&mut col);
            for r in 0..ph {
                buf[r * pw + c] = col[r];
            }
        }
        for (p, b) in power.iter_mut().zip(&buf) {
            *p += b.norm_sqr();
        }
    }

    let (dx, dy) = (2.0 * PI / (pw as f64 * h), 2.0 * PI / (ph as f64 * h));
    let r = ball_radius(k.max(1), 2, volume);
    let half = (spec.extent_factor * r).max(PI / h);
    let (jx, jy) = ((half / dx).ceil() as i64, (half / dy).ceil() as i64);
    let xs: Vec<f64> = (-jx..=jx).map(|j| j as f64 * dx).collect();
    let ys: Vec<f64> = (-jy..=jy).map(|j| j as f64 * dy).collect();
    let axes = vec![xs, ys];
    check_grid_size(&axes)?;
    let norm = h * h / volume;
    let values: Vec<f64> = axes[0]
        .par_iter()
        .enumerate()
        .flat_map_iter(|(a, &x)| {
            let ia = (a as i64 - jx).rem_euclid(pw as i64) as usize;
            let sx = sinc(0.5 * x * h).powi(2);
            let power = &power;
            let ys = &axes[1];
            ys.iter().enumerate().map(move |(b, &y)| {
                let ib = (b as i64 - jy).rem_euclid(ph as i64) as usize;
                norm * sx * sinc(0.5 * y * h).powi(2) * power[ib * pw + ia]
            })
        })
        .collect();
    // Σ_p sinc²(t + πp) = 1, so one period of the power spectrum gives the
    // integral over the whole plane
    let integral = norm * dx * dy * power.iter().sum::<f64>();
    let weights = vec![vec![dx; axes[0].len()], vec![dy; axes[1].len()]];
    let diameter = ((w * w + hgt * hgt) as f64).sqrt() * h;
    let profile = SpectralMassProfile {
        dim: 2,
        volume,
        k,
        label: op.domain().label.clone(),
        eigenvalues: pairs.values[..k].to_vec(),
        deflation: fdm::default_discretization_tolerance(
            *pairs.values.get(k.max(1) - 1).unwrap_or(&0.0),
            h,
        ),
        axes,
        weights,
        values,
        integral,
        approximate: true,
        length_scale: diameter,
        source: Source::Mask {
            width: w,
            height: hgt,
            spacing: h,
            grids,
        },
    };
    check_profile(&profile)?;
    Ok(profile)
}

/// `∫_{B(0,r)} f` by Gauss–Legendre in the radius and the polar cosine and
/// the trapezoid rule in the azimuth. `refine` raises every resolution by
/// half.
fn ball_integral(
    dim: usize,
    r: f64,
    length_scale: f64,
    refine: bool,
    f: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> f64 {
    let order = if refine { 12 } else { 8 };
    let panels = ((r * length_scale / PI).ceil() as usize).max(2);
    let panels = if refine { panels + panels / 2 } else { panels };
    let (rho, wr) = composite(0.0, r, panels, order);
    let n_phi = {
        let base = 2 * (2.0 * r * length_scale).ceil() as usize + 32;
        if refine {
            base + base / 2
        } else {
            base
        }
    };
    match dim {
        1 => {
            let (x, w) = composite(-r, r, 2 * panels, order);
            x.iter().zip(&w).map(|(x, w)| w * f(&[*x])).sum()
        }
        2 => rho
            .par_iter()
            .zip(wr.par_iter())
            .map(|(&p, &wp)| {
                let ring: f64 = (0..n_phi)
                    .map(|j| {
                        let phi = 2.0 * PI * j as f64 / n_phi as f64;
                        f(&[p * phi.cos(), p * phi.sin()])
                    })
                    .sum();
                wp * p * ring * 2.0 * PI / n_phi as f64
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum(),
        _ => {
            let (mu, wm) = composite(-1.0, 1.0, panels, order);
            rho.par_iter()
                .zip(wr.par_iter())
                .map(|(&p, &wp)| {
                    let mut shell = 0.0;
                    for (&m, &w) in mu.iter().zip(&wm) {
                        let s = (1.0 - m * m).sqrt();
                        let ring: f64 = (0..n_phi)
                            .map(|j| {
                                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                                f(&[p * s * phi.cos(), p * s * phi.sin(), p * m])
                            })
                            .sum();
                        shell += w * ring * 2.0 * PI / n_phi as f64;
                    }
                    wp * p * p * shell
                })
                .collect::<Vec<f64>>()
                .iter()
                .sum()
        }
    }
}

/// Mass deficit η of the profile's `k` eigenfunctions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EtaDiagnostic {
    pub k: usize,
    pub dim: usize,
    pub volume: f64,
    /// `2π k^{1/d} / (ω_d |Ω|)^{1/d}`.
    pub r: f64,
    /// Outer radius of the shell holding the deficit: `s^d = (1 + η) r^d`.
    pub s: f64,
    pub mass_inside: f64,
    pub total_mass: f64,
    pub eta: f64,
    /// `η` before clamping to `[0, 1]`.
    pub eta_raw: f64,
    /// Change of `mass_inside / total_mass` under quadrature refinement.
    pub quadrature_delta: f64,
    pub approximate: bool,
    pub lemma1_factor: f64,
    pub lemma1_lhs: f64,
    pub lemma1_rhs: f64,
    pub lemma1_verified: bool,
    pub deflation: f64,
    /// Fraction of `|û_{k+1}|²` outside `B(0, r)`, when mode `k+1` is known.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub next_mode_outside_fraction: Option<f64>,
}

pub fn eta(profile: &SpectralMassProfile) -> Result<EtaDiagnostic, FourierError> {
    let k = profile.k;
    if k == 0 {
        return Err(FourierError::ZeroModes);
    }
    let d = profile.dim;
    let r = ball_radius(k, d, profile.volume);
    let extent = profile.half_width();
    if r > extent {
        return Err(FourierError::RadiusOutsideGrid { radius: r, extent });
    }
    let total = profile.nominal_integral();
    let g = |x: &[f64]| profile.evaluate(x);
    let coarse = ball_integral(d, r, profile.length_scale, false, &g);
    let fine = ball_integral(d, r, profile.length_scale, true, &g);
    let delta = ((fine - coarse) / total).abs();
    if delta > ETA_QUADRATURE_TOLERANCE {
        return Err(FourierError::Quadrature {
            what: "ball mass under refinement",
            achieved: delta,
            tolerance: ETA_QUADRATURE_TOLERANCE,
        });
    }
    let eta_raw = 1.0 - fine / total;
    let slack = if profile.approximate {
        APPROXIMATE_TOLERANCE
    } else {
        G_MAX_TOLERANCE
    };
    if !(-slack..=1.0 + slack).contains(&eta_raw) {
        return Err(FourierError::Quadrature {
            what: "eta outside [0, 1]",
            achieved: eta_raw,
            tolerance: slack,
        });
    }
    let eta = eta_raw.clamp(0.0, 1.0);
    let s = r * (1.0 + eta).powf(1.0 / d as f64);
    let factor = bounds::lemma1_factor(eta, d)?;
    if profile.eigenvalues.len() < k {
        return Err(FourierError::Unsupported(format!(
            "profile carries {} eigenvalues, k = {k}",
            profile.eigenvalues.len()
        )));
    }
    let lhs: f64 = profile.eigenvalues[..k].iter().sum();
    let rhs = factor * bounds::liyau_sum_bound(k, d, profile.volume);
    let check = BoundEvaluation::new(
        bounds::BoundKind::Lemma1,
        bounds::BoundParams::n(k),
        lhs,
        rhs,
        profile.deflation,
    );
    let next_mode_outside_fraction = (profile.modes_available() > k).then(|| {
        let dens = |x: &[f64]| profile.mode_density(k, x);
        1.0 - ball_integral(d, r, profile.length_scale, true, &dens)
    });
    Ok(EtaDiagnostic {
        k,
        dim: d,
        volume: profile.volume,
        r,
        s,
        mass_inside: fine,
        total_mass: total,
        eta,
        eta_raw,
        quadrature_delta: delta,
        approximate: profile.approximate,
        lemma1_factor: factor,
        lemma1_lhs: lhs,
        lemma1_rhs: rhs,
        lemma1_verified: check.verified,
        deflation: profile.deflation,
        next_mode_outside_fraction,
    })
}

/// The mass-deficit bound and its single-eigenvalue consequence at the diagnostic's `η`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Check {
    pub sum: BoundEvaluation,
    pub single: BoundEvaluation,
}

pub fn lemma1_check(spectrum: &Spectrum, diag: &EtaDiagnostic) -> Result<Lemma1Check, FourierError> {
    Ok(Lemma1Check {
        sum: bounds::eval_lemma1(spectrum, diag.k, diag.eta)?,
        single: bounds::eval_lemma1_single(spectrum, diag.k, diag.eta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn interval_mode_at_zero() {
        assert_relative_eq!(axis_transform_sq(1.0, 1, 0.0), 8.0 / (PI * PI), max_relative = 1e-14);
        assert_relative_eq!(
            box_eigfun_ft_sq(&[1.0], &[1], &[0.0]),
            4.0 / PI.powi(3),
            max_relative = 1e-14
        );
    }

    #[test]
    fn pole_is_removable() {
        for k in 1..5u32 {
            let a = 1.7;
            let pole = k as f64 * PI / a;
            let at = axis_transform_sq(a, k, pole);
            for eps in [1e-3, 1e-5, 1e-7, 1e-9] {
                for x in [pole - eps, pole + eps] {
                    assert_relative_eq!(axis_transform_sq(a, k, x), at, max_relative = 10.0 * eps);
                }
            }
            // the limit value is a / 2
            assert_relative_eq!(at, a / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_direct_integral() {
        // Riemann sum of √(2/a) sin(kπx/a) e^{-iξx} with many nodes
        let (a, k, xi) = (1.3, 3u32, 4.1);
        let n = 200_000;
        let dx = a / n as f64;
        let (mut re, mut im) = (0.0, 0.0);
        for i in 0..n {
            let x = (i as f64 + 0.5) * dx;
            let u = (2.0 / a).sqrt() * (k as f64 * PI * x / a).sin();
            re += u * (xi * x).cos() * dx;
            im -= u * (xi * x).sin() * dx;
        }
        assert_relative_eq!(axis_transform_sq(a, k, xi), re * re + im * im, max_relative = 1e-8);
    }

    #[test]
    fn per_mode_plancherel() {
        for k in 1..4u32 {
            let (x, w) = composite(-400.0 * PI, 400.0 * PI, 800, 8);
            let total: f64 = x
                .iter()
                .zip(&w)
                .map(|(x, w)| w * box_eigfun_ft_sq(&[1.0], &[k], &[*x]))
                .sum();
            assert_relative_eq!(total, 1.0, max_relative = 1e-4);
        }
    }

    #[test]
    fn unit_square_profiles() {
        let spec = GridSpec::default();
        let p1 = box_profile(&[1.0, 1.0], 1, &spec).unwrap();
        assert!(p1.max_value() < 1.0);
        assert!(p1.plancherel_error() < PLANCHEREL_TOLERANCE);
        let p5 = box_profile(&[1.0, 1.0], 5, &spec).unwrap();
        assert_relative_eq!(p5.integral(), 5.0 * 4.0 * PI * PI, max_relative = 0.005);
        let p0 = box_profile(&[1.0, 1.0], 0, &spec).unwrap();
        assert!(p0.values().iter().all(|v| *v == 0.0));
        assert!(matches!(eta(&p0), Err(FourierError::ZeroModes)));
    }

    #[test]
    fn eta_on_unit_square() {
        let p = box_profile(&[1.0, 1.0], 1, &GridSpec::default()).unwrap();
        let e = eta(&p).unwrap();
        assert!(e.eta > 0.0 && e.eta < 1.0);
        assert!(e.s >= e.r);
        assert_relative_eq!(e.lemma1_lhs, 2.0 * PI * PI, max_relative = 1e-14);
        assert!(e.lemma1_verified);
        assert!(e.next_mode_outside_fraction.unwrap() > 0.0);
    }

    #[test]
    fn synthetic_extremes() {
        let vol = 1.0;
        let k = 3;
        let r = ball_radius(k, 2, vol);
        let inside = SpectralMassProfile::synthetic(2, vol, k, vec![1.0; 3], 3.0 * r, 1.0, move |x| {
            if x[0].hypot(x[1]) <= r {
                1.0
            } else {
                0.0
            }
        });
        let e = eta(&inside).unwrap();
        assert!(e.eta.abs() < 1e-12, "eta = {}", e.eta);
        assert_eq!(e.lemma1_factor, 1.0);

        let outside = SpectralMassProfile::synthetic(2, vol, k, vec![1.0; 3], 3.0 * r, 1.0, move |x| {
            let rho = x[0].hypot(x[1]);
            if rho > r && rho <= r * 2f64.sqrt() {
                1.0
            } else {
                0.0
            }
        });
        let e = eta(&outside).unwrap();
        assert_eq!(e.eta, 1.0);
        assert_relative_eq!(e.s, r * 2f64.sqrt(), max_relative = 1e-14);

        let narrow = SpectralMassProfile::synthetic(2, vol, k, vec![1.0; 3], 0.5 * r, 1.0, |_| 0.0);
        assert!(matches!(eta(&narrow), Err(FourierError::RadiusOutsideGrid { .. })));
    }

    #[test]
    fn tsv_has_header_and_rows() {
        let p = box_profile(&[1.0], 1, &GridSpec::default()).unwrap();
        let t = p.to_tsv();
        let mut lines = t.lines();
        assert_eq!(lines.next(), Some("xi_1\tg"));
        assert_eq!(lines.count(), p.values().len());
    }

    #[test]
    fn small_mask_profile() {
        let mask = fdm::rectangle_mask(1.0, 1.0, 1.0 / 16.0).unwrap();
        let dom = DomainSpec::new_mask(mask);
        let p = g_profile(&dom, 3, &GridSpec::default()).unwrap();
        assert!(p.is_approximate());
        assert!(p.max_value() <= 1.0 + 1e-12);
        assert!(p.plancherel_error() < 1e-10);
        // the grid samples agree with direct evaluation
        let xs = &p.axes()[0];
        let ys = &p.axes()[1];
        for (a, b) in [(0, 0), (xs.len() / 2, ys.len() / 2 + 3), (7, 11)] {
            let v = p.values()[a * ys.len() + b];
            assert_relative_eq!(v, p.evaluate(&[xs[a], ys[b]]), max_relative = 1e-9, epsilon = 1e-14);
        }
        let e = eta(&p).unwrap();
        assert!((0.0..=1.0).contains(&e.eta));
    }
}
