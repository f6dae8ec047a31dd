//! Bounded domains and their geometric functionals.
//!
//! Three shapes are supported: axis-aligned boxes of any dimension, balls in
//! dimension one to three, and planar pixel masks. Every constructor checks
//! its invariants, so a [`DomainSpec`] in hand is always valid.

mod mask;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use mask::{load_mask, parse_mask, Mask2D, MaskError};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GeometryError {
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("ball dimension {0} unsupported (expected 1, 2 or 3)")]
    BallDimension(usize),
    #[error("{what} must be finite and strictly positive, got {value}")]
    NonPositive { what: &'static str, value: f64 },
    #[error("mask has no occupied cell")]
    EmptyMask,
    #[error("mask occupancy has {got} cells, expected {expected}")]
    MaskShape { expected: usize, got: usize },
}

fn check_positive(what: &'static str, value: f64) -> Result<f64, GeometryError> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(GeometryError::NonPositive { what, value })
    }
}

/// Shape of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// `[0, a_1] x ... x [0, a_d]`.
    Box { lengths: Vec<f64> },
    /// Ball of radius `radius` centered at the origin.
    Ball { dim: usize, radius: f64 },
    Mask(Mask2D),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    shape: Shape,
    pub label: String,
}

impl DomainSpec {
    pub fn new_box(lengths: &[f64]) -> Result<Self, GeometryError> {
        if lengths.is_empty() {
            return Err(GeometryError::ZeroDimension);
        }
        for &a in lengths {
            check_positive("side length", a)?;
        }
        let label = format!(
            "box[{}]",
            lengths
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        Ok(Self {
            shape: Shape::Box {
                lengths: lengths.to_vec(),
            },
            label,
        })
    }

    pub fn new_ball(dim: usize, radius: f64) -> Result<Self, GeometryError> {
        if !(1..=3).contains(&dim) {
            return Err(GeometryError::BallDimension(dim));
        }
        check_positive("radius", radius)?;
        Ok(Self {
            shape: Shape::Ball { dim, radius },
            label: format!("ball[d={dim},R={radius}]"),
        })
    }

    /// Ball of the given dimension whose volume is `volume`.
    pub fn ball_with_volume(dim: usize, volume: f64) -> Result<Self, GeometryError> {
        check_positive("volume", volume)?;
        if !(1..=3).contains(&dim) {
            return Err(GeometryError::BallDimension(dim));
        }
        let omega = dimension_constants(dim)?.omega;
        Self::new_ball(dim, (volume / omega).powf(1.0 / dim as f64))
    }

    pub fn new_mask(mask: Mask2D) -> Self {
        let label = format!("mask[{}x{},h={}]", mask.width(), mask.height(), mask.spacing());
        Self {
            shape: Shape::Mask(mask),
            label,
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn as_mask(&self) -> Option<&Mask2D> {
        match &self.shape {
            Shape::Mask(m) => Some(m),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Box { lengths } => lengths.len(),
            Shape::Ball { dim, .. } => *dim,
            Shape::Mask(_) => 2,
        }
    }

    pub fn volume(&self) -> f64 {
        match &self.shape {
            Shape::Box { lengths } => lengths.iter().product(),
            Shape::Ball { dim, radius } => ball_volume(*dim, *radius),
            Shape::Mask(m) => m.occupied_count() as f64 * m.spacing() * m.spacing(),
        }
    }

    pub fn centroid(&self) -> Vec<f64> {
        match &self.shape {
            Shape::Box { lengths } => lengths.iter().map(|a| 0.5 * a).collect(),
            Shape::Ball { dim, .. } => vec![0.0; *dim],
            Shape::Mask(m) => m.centroid().to_vec(),
        }
    }

    /// `min_m ∫ |x - m|^2 dx`, attained at the centroid.
    pub fn moment_of_inertia(&self) -> f64 {
        match &self.shape {
            Shape::Box { lengths } => {
                let vol: f64 = lengths.iter().product();
                lengths.iter().map(|a| vol * a * a / 12.0).sum()
            }
            Shape::Ball { dim, radius } => {
                let d = *dim as f64;
                let omega = dimension_constants(*dim).expect("dim >= 1").omega;
                d * omega * radius.powi(*dim as i32 + 2) / (d + 2.0)
            }
            Shape::Mask(m) => m.second_moment_about(m.centroid()),
        }
    }

    /// `∫ |x - p|^2 dx` about an arbitrary point (cell midpoints for masks).
    pub fn second_moment_about(&self, p: &[f64]) -> f64 {
        assert_eq!(p.len(), self.dim(), "point dimension mismatch");
        let c = self.centroid();
        let shift: f64 = c.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum();
        match &self.shape {
            Shape::Mask(m) => m.second_moment_about([p[0], p[1]]),
            // parallel axis theorem
            _ => self.moment_of_inertia() + self.volume() * shift,
        }
    }

    /// The same domain dilated by `t > 0`.
    pub fn dilate(&self, t: f64) -> Result<Self, GeometryError> {
        check_positive("dilation factor", t)?;
        let shape = match &self.shape {
            Shape::Box { lengths } => Shape::Box {
                lengths: lengths.iter().map(|a| a * t).collect(),
            },
            Shape::Ball { dim, radius } => Shape::Ball {
                dim: *dim,
                radius: radius * t,
            },
            Shape::Mask(m) => Shape::Mask(m.with_spacing(m.spacing() * t)?),
        };
        Ok(Self {
            shape,
            label: self.label.clone(),
        })
    }
}

/// Volume of the unit ball and surface area of the unit sphere in `R^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionConstants {
    pub dim: usize,
    pub omega: f64,
    pub sigma: f64,
}

/// Uses `ω_d = 2π/d · ω_{d-2}` from `ω_0 = 1`, `ω_1 = 2`, which keeps the
/// low dimensions exact.
pub fn dimension_constants(dim: usize) -> Result<DimensionConstants, GeometryError> {
    if dim == 0 {
        return Err(GeometryError::ZeroDimension);
    }
    let mut omega = if dim % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if dim % 2 == 0 { 2 } else { 3 };
    while k <= dim {
        omega *= 2.0 * PI / k as f64;
        k += 2;
    }
    Ok(DimensionConstants {
        dim,
        omega,
        sigma: dim as f64 * omega,
    })
}

fn ball_volume(dim: usize, radius: f64) -> f64 {
    dimension_constants(dim).expect("dim >= 1").omega * radius.powi(dim as i32)
}
