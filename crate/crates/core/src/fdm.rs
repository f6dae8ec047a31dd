//! Five-point finite-difference Dirichlet Laplacian on pixel masks and a
//! thick-restart Lanczos eigensolver for its smallest eigenvalues.
//!
//! Each occupied cell carries one unknown at its midpoint and every cell
//! outside the mask is a zero boundary value. The solver runs Lanczos with
//! full reorthogonalization on the flipped operator `B = cI - A`,
//! `c = 8/h²`, so the wanted eigenvalues become the largest ones.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::geometry::{DomainSpec, Mask2D};
use crate::spectrum::{Provenance, Spectrum, SpectrumError};

const NONE: u32 = u32::MAX;
const CHUNK: usize = 4096;
/// Cap on Lanczos runs in the orthogonal complement of locked vectors.
const MAX_RUNS: usize = 64;

#[derive(Debug, thiserror::Error)]
pub enum FdmError {
    #[error("finite differences need a mask domain")]
    NotAMask,
    #[error("requested {count} eigenvalues but the grid has only {dimension} unknowns")]
    CountTooLarge { count: usize, dimension: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error(
        "Lanczos did not converge: {converged} of {requested} eigenpairs after {restarts} restarts"
    )]
    NoConvergence {
        converged: usize,
        requested: usize,
        restarts: usize,
    },
    #[error("Richardson extrapolation needs equal counts, got {coarse} and {fine}")]
    CountMismatch { coarse: usize, fine: usize },
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}

/// Matrix-free five-point Laplacian with zero exterior.
#[derive(Debug, Clone)]
pub struct DiscreteLaplacian {
    domain: DomainSpec,
    spacing: f64,
    /// `(col, row)` of each unknown.
    cells: Vec<(u32, u32)>,
    /// Left, right, up, down neighbour unknowns, `NONE` when exterior.
    neighbors: Vec<[u32; 4]>,
}

impl DiscreteLaplacian {
    pub fn assemble(domain: &DomainSpec) -> Result<Self, FdmError> {
        let mask = domain.as_mask().ok_or(FdmError::NotAMask)?;
        let (w, h) = (mask.width(), mask.height());
        let mut index = vec![NONE; w * h];
        let mut cells = Vec::with_capacity(mask.occupied_count());
        for (c, r) in mask.occupied() {
            index[r * w + c] = cells.len() as u32;
            cells.push((c as u32, r as u32));
        }
        let at = |c: isize, r: isize| -> u32 {
            if mask.is_occupied(c, r) {
                index[r as usize * w + c as usize]
            } else {
                NONE
            }
        };
        let neighbors = cells
            .iter()
            .map(|&(c, r)| {
                let (c, r) = (c as isize, r as isize);
                [at(c - 1, r), at(c + 1, r), at(c, r - 1), at(c, r + 1)]
            })
            .collect();
        Ok(Self {
            domain: domain.clone(),
            spacing: mask.spacing(),
            cells,
            neighbors,
        })
    }

    pub fn from_mask(mask: Mask2D) -> Self {
        Self::assemble(&DomainSpec::new_mask(mask)).expect("mask domain")
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn mask(&self) -> &Mask2D {
        self.domain.as_mask().expect("mask domain")
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dimension(&self) -> usize {
        self.cells.len()
    }

    /// Grid position `(col, row)` of unknown `i`.
    pub fn cell(&self, i: usize) -> (usize, usize) {
        let (c, r) = self.cells[i];
        (c as usize, r as usize)
    }

    /// Upper end of the spectrum enclosure `(0, 8/h²]`.
    pub fn spectral_bound(&self) -> f64 {
        8.0 / (self.spacing * self.spacing)
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dimension());
        assert_eq!(y.len(), self.dimension());
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, out)| {
            let base = ci * CHUNK;
            for (k, yk) in out.iter_mut().enumerate() {
                let i = base + k;
                let mut acc = 4.0 * x[i];
                for &nb in &self.neighbors[i] {
                    if nb != NONE {
                        acc -= x[nb as usize];
                    }
                }
                *yk = acc * inv_h2;
            }
        });
    }

    /// Dense copy of the operator, for small grids and tests.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dimension();
        let inv_h2 = 1.0 / (self.spacing * self.spacing);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 4.0 * inv_h2;
            for &nb in &self.neighbors[i] {
                if nb != NONE {
                    a[(i, nb as usize)] = -inv_h2;
                }
            }
        }
        a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub count: usize,
    /// Krylov subspace dimension `m`; at least `2 count + 20`.
    pub krylov_dim: usize,
    /// Bound on `‖Av − λv‖ / λ` for every returned pair.
    pub tolerance: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl SolverConfig {
    pub fn new(count: usize) -> Self {
        Self {
            count,
            krylov_dim: 2 * count + 20,
            tolerance: 1e-9,
            max_restarts: 2000,
            seed: 0x5eed_1a9c,
        }
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn validate(&self) -> Result<(), FdmError> {
        if self.count == 0 {
            return Err(FdmError::Config("count must be at least 1".into()));
        }
        if self.krylov_dim < 2 * self.count + 20 {
            return Err(FdmError::Config(format!(
                "Krylov dimension {} below 2N + 20 = {}",
                self.krylov_dim,
                2 * self.count + 20
            )));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(FdmError::Config(format!(
                "tolerance {} outside (0, 1)",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Converged eigenpairs of `A`, ascending.
#[derive(Debug, Clone)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    /// Unit-norm eigenvectors indexed like the operator's unknowns.
    pub vectors: Vec<Vec<f64>>,
    /// Relative residuals `‖Av − λv‖ / λ`.
    pub residuals: Vec<f64>,
    pub matvecs: usize,
    pub restarts: usize,
}

/// Dot product with eight independent partial sums, in a fixed order.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 8];
    let (ca, cb) = (a.chunks_exact(8), b.chunks_exact(8));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `w -= Σ_i c_i q_i` with `c_i = ⟨q_i, w⟩`. A second pass runs when the
/// first one removes most of `w` (Daniel-Gragg-Kaufman-Stewart test).
/// Returns the accumulated coefficients.
fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let mut total = vec![0.0; basis.len()];
    if basis.is_empty() {
        return total;
    }
    let mut before = norm(w);
    for _ in 0..2 {
        let coef: Vec<f64> = basis.par_iter().map(|q| dot(q, w)).collect();
        w.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, out)| {
            let base = ci * CHUNK;
            for (q, c) in basis.iter().zip(&coef) {
                let q = &q[base..base + out.len()];
                for (wk, qk) in out.iter_mut().zip(q) {
                    *wk -= c * qk;
                }
            }
        });
        for (t, c) in total.iter_mut().zip(coef) {
            *t += c;
        }
        let after = norm(w);
        if after > 0.7 * before {
            break;
        }
        before = after;
    }
    total
}

/// Columns `Σ_i y[(i, j)] q_i` for each requested `j`, computed in row
/// blocks so the basis is read once.
fn combine(basis: &[Vec<f64>], y: &DMatrix<f64>, cols: &[usize]) -> Vec<Vec<f64>> {
    const BLOCK: usize = 512;
    let n = basis[0].len();
    let blocks: Vec<Vec<f64>> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let lo = b * BLOCK;
            let len = BLOCK.min(n - lo);
            let mut out = vec![0.0; cols.len() * len];
            for (jj, &j) in cols.iter().enumerate() {
                let dst = &mut out[jj * len..(jj + 1) * len];
                for (i, q) in basis.iter().enumerate() {
                    let c = y[(i, j)];
                    for (d, qk) in dst.iter_mut().zip(&q[lo..lo + len]) {
                        *d += c * qk;
                    }
                }
            }
            out
        })
        .collect();
    let mut result = vec![vec![0.0; n]; cols.len()];
    for (b, out) in blocks.iter().enumerate() {
        let lo = b * BLOCK;
        let len = BLOCK.min(n - lo);
        for (jj, v) in result.iter_mut().enumerate() {
            v[lo..lo + len].copy_from_slice(&out[jj * len..(jj + 1) * len]);
        }
    }
    result
}

struct Lanczos<'a> {
    op: &'a DiscreteLaplacian,
    cfg: &'a SolverConfig,
    shift: f64,
    rng: ChaCha8Rng,
    matvecs: usize,
    restarts: usize,
}

struct RitzPair {
    theta: f64,
    vector: Vec<f64>,
}

impl Lanczos<'_> {
    fn flipped(&mut self, v: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; v.len()];
        self.op.apply(v, &mut w);
        self.matvecs += 1;
        w.par_iter_mut()
            .zip(v.par_iter())
            .for_each(|(wi, vi)| *wi = self.shift * vi - *wi);
        w
    }

    /// Random unit vector orthogonal to `locked` and `basis`.
    fn fresh(&mut self, locked: &[Vec<f64>], basis: &[Vec<f64>]) -> Vec<f64> {
        let n = self.op.dimension();
        loop {
            let mut v: Vec<f64> = (0..n).map(|_| self.rng.random::<f64>() - 0.5).collect();
            orthogonalize(&mut v, locked);
            orthogonalize(&mut v, basis);
            let nv = norm(&v);
            if nv > 1e-8 {
                v.iter_mut().for_each(|x| *x /= nv);
                return v;
            }
        }
    }

    /// One thick-restart Lanczos run in the complement of `locked`.
    ///
    /// Stops once the leading `want` Ritz pairs have converged, or, when a
    /// `floor` is given, as soon as a converged leading Ritz value drops
    /// below it. Returns the converged leading pairs at or above `floor`.
    fn run(
        &mut self,
        locked: &[Vec<f64>],
        want: usize,
        floor: Option<f64>,
    ) -> Result<Vec<RitzPair>, FdmError> {
        let n = self.op.dimension();
        let free = n - locked.len();
        if free == 0 || want == 0 {
            return Ok(Vec::new());
        }
        let m = self.cfg.krylov_dim.min(free);
        let want = want.min(m);
        let scale = self.shift;

        let mut basis = vec![self.fresh(locked, &[])];
        let mut h = DMatrix::<f64>::zeros(m, m);
        let mut start = 0;
        for restart in 0..=self.cfg.max_restarts {
            let mut residual = Vec::new();
            let mut beta_last = 0.0;
            for j in start..m {
                let mut w = self.flipped(&basis[j]);
                orthogonalize(&mut w, locked);
                let coef = orthogonalize(&mut w, &basis);
                for (i, c) in coef.into_iter().enumerate() {
                    h[(i, j)] = c;
                    h[(j, i)] = c;
                }
                let beta = norm(&w);
                if j + 1 < m {
                    if beta <= 1e-13 * scale {
                        let v = self.fresh(locked, &basis);
                        basis.push(v);
                    } else {
                        w.iter_mut().for_each(|x| *x /= beta);
                        h[(j + 1, j)] = beta;
                        h[(j, j + 1)] = beta;
                        basis.push(w);
                    }
                } else if m < free && beta > 1e-13 * scale {
                    beta_last = beta;
                    w.iter_mut().for_each(|x| *x /= beta);
                    residual = w;
                }
            }

            let eig = SymmetricEigen::new(h.clone());
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            let converged = |k: usize| {
                let i = order[k];
                let theta = eig.eigenvalues[i];
                let lambda = (scale - theta).max(f64::MIN_POSITIVE);
                beta_last * eig.eigenvectors[(m - 1, i)].abs() <= self.cfg.tolerance * lambda
            };
            let mut prefix = 0;
            while prefix < m && converged(prefix) {
                prefix += 1;
            }
            let below_floor = floor
                .map(|f| (0..prefix).any(|k| eig.eigenvalues[order[k]] < f))
                .unwrap_or(false);
            if prefix >= want || below_floor {
                let keep: Vec<usize> = order[..prefix.min(want)]
                    .iter()
                    .copied()
                    .filter(|&i| floor.is_none_or(|f| eig.eigenvalues[i] >= f))
                    .collect();
                let vectors = combine(&basis, &eig.eigenvectors, &keep);
                self.restarts += restart;
                return Ok(keep
                    .iter()
                    .zip(vectors)
                    .map(|(&i, vector)| RitzPair {
                        theta: eig.eigenvalues[i],
                        vector,
                    })
                    .collect());
            }
            if restart == self.cfg.max_restarts {
                return Err(FdmError::NoConvergence {
                    converged: prefix,
                    requested: want,
                    restarts: restart,
                });
            }

            // thick restart on the leading Ritz vectors
            let kept = (want + (m - want) / 2).min(m - 1).max(1);
            let cols: Vec<usize> = order[..kept].to_vec();
            let mut next = combine(&basis, &eig.eigenvectors, &cols);
            h.fill(0.0);
            for (k, &i) in cols.iter().enumerate() {
                h[(k, k)] = eig.eigenvalues[i];
            }
            if residual.is_empty() {
                residual = self.fresh(locked, &next);
            }
            next.push(residual);
            basis = next;
            start = kept;
        }
        unreachable!("loop returns on its last iteration")
    }
}

/// The `config.count` smallest eigenpairs of `op`.
///
/// Converged pairs are locked and further runs search their orthogonal
/// complement, which recovers second copies of degenerate eigenvalues,
/// until a run finds nothing below the current `count`-th value.
pub fn eigenpairs(op: &DiscreteLaplacian, config: &SolverConfig) -> Result<Eigenpairs, FdmError> {
    config.validate()?;
    let n = op.dimension();
    if config.count > n {
        return Err(FdmError::CountTooLarge {
            count: config.count,
            dimension: n,
        });
    }
    let mut lz = Lanczos {
        op,
        cfg: config,
        shift: op.spectral_bound(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        matvecs: 0,
        restarts: 0,
    };
    let mut locked: Vec<Vec<f64>> = Vec::new();
    let mut thetas: Vec<f64> = Vec::new();
    for _ in 0..MAX_RUNS {
        let floor = if thetas.len() >= config.count {
            let mut t = thetas.clone();
            t.sort_by(|a, b| b.total_cmp(a));
            Some(t[config.count - 1])
        } else {
            None
        };
        let want = config.count.min(n - locked.len());
        let found = lz.run(&locked, want, floor)?;
        if found.is_empty() {
            break;
        }
        for p in found {
            thetas.push(p.theta);
            locked.push(p.vector);
        }
        if locked.len() == n {
            break;
        }
    }

    // Rayleigh quotients in A avoid the cancellation in c - θ
    let mut pairs: Vec<(f64, f64, Vec<f64>)> = locked
        .into_iter()
        .map(|mut v| {
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            let mut av = vec![0.0; n];
            op.apply(&v, &mut av);
            let lambda = dot(&v, &av);
            let r: f64 = av
                .iter()
                .zip(&v)
                .map(|(a, x)| (a - lambda * x).powi(2))
                .sum::<f64>()
                .sqrt();
            (lambda, r / lambda, v)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.truncate(config.count);
    let mut out = Eigenpairs {
        values: Vec::with_capacity(pairs.len()),
        vectors: Vec::with_capacity(pairs.len()),
        residuals: Vec::with_capacity(pairs.len()),
        matvecs: lz.matvecs,
        restarts: lz.restarts,
    };
    for (l, r, v) in pairs {
        out.values.push(l);
        out.residuals.push(r);
        out.vectors.push(v);
    }
    Ok(out)
}

/// A priori relative discretization tolerance `λ_N h² / 6`: twice the
/// leading five-point error term for smooth eigenfunctions.
pub fn default_discretization_tolerance(lambda_max: f64, spacing: f64) -> f64 {
    lambda_max * spacing * spacing / 6.0
}

/// Discrete spectrum with provenance `fdm-discrete`.
pub fn smallest_eigs(op: &DiscreteLaplacian, config: &SolverConfig) -> Result<Spectrum, FdmError> {
    let pairs = eigenpairs(op, config)?;
    spectrum_from_pairs(op, &pairs)
}

pub fn spectrum_from_pairs(op: &DiscreteLaplacian, pairs: &Eigenpairs) -> Result<Spectrum, FdmError> {
    let n = pairs.values.len();
    let tol = default_discretization_tolerance(pairs.values[n - 1], op.spacing());
    Ok(
        Spectrum::new(op.domain().clone(), pairs.values.clone(), Provenance::FdmDiscrete, n)?
            .with_discretization_tolerance(tol),
    )
}

/// Per-index `(4 λ_{h/2} − λ_h) / 3`, re-sorted. The discretization
/// tolerance becomes the largest relative change between the two grids.
pub fn richardson_extrapolate(coarse: &Spectrum, fine: &Spectrum) -> Result<Spectrum, FdmError> {
    if coarse.len() != fine.len() {
        return Err(FdmError::CountMismatch {
            coarse: coarse.len(),
            fine: fine.len(),
        });
    }
    let mut values: Vec<f64> = coarse
        .eigenvalues()
        .iter()
        .zip(fine.eigenvalues())
        .map(|(c, f)| (4.0 * f - c) / 3.0)
        .collect();
    values.sort_by(f64::total_cmp);
    let tol = coarse
        .eigenvalues()
        .iter()
        .zip(fine.eigenvalues())
        .map(|(c, f)| ((f - c) / f).abs())
        .fold(0.0, f64::max);
    let n = values.len();
    Ok(Spectrum::new(
        fine.domain().clone(),
        values,
        Provenance::FdmExtrapolated,
        n.min(fine.complete_through()).min(coarse.complete_through()),
    )?
    .with_discretization_tolerance(tol))
}

/// Mask whose finite-difference domain is the `a x b` rectangle: the
/// `(a/h − 1) x (b/h − 1)` interior nodes of a grid of spacing `h`.
pub fn rectangle_mask(a: f64, b: f64, spacing: f64) -> Result<Mask2D, FdmError> {
    let w = (a / spacing).round() as i64 - 1;
    let h = (b / spacing).round() as i64 - 1;
    if w < 1 || h < 1 {
        return Err(FdmError::Config(format!(
            "spacing {spacing} leaves no interior node in {a} x {b}"
        )));
    }
    Mask2D::filled(w as usize, h as usize, spacing)
        .map_err(|e| FdmError::Config(e.to_string()))
}

/// Closed-form eigenvalue `(4/h²)(sin²(iπ/(2(W+1))) + sin²(jπ/(2(H+1))))`
/// of the five-point Laplacian on a full `W x H` cell block.
pub fn discrete_rectangle_eigenvalue(i: usize, j: usize, width: usize, height: usize, spacing: f64) -> f64 {
    let s = |k: usize, n: usize| {
        let t = (k as f64 * std::f64::consts::PI / (2.0 * (n + 1) as f64)).sin();
        t * t
    };
    4.0 / (spacing * spacing) * (s(i, width) + s(j, height))
}
