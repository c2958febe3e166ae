//! Planar link geometry: excess path length, its directional derivative,
//! incidence angle and the reflection coefficients that feed the RSS model.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Reflection points closer than this to a node are rejected.
pub const NODE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl<T: Scalar> Add for Point2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Point2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Mul<T> for Point2<T> {
    type Output = Self;
    fn mul(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// A transmitter/receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkGeometry<T> {
    pub tx: Point2<T>,
    pub rx: Point2<T>,
}

impl<T: Scalar> LinkGeometry<T> {
    pub fn new(tx: Point2<T>, rx: Point2<T>) -> Result<Self> {
        let link = Self { tx, rx };
        link.validate()?;
        Ok(link)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tx.is_finite() || !self.rx.is_finite() {
            return Err(Error::InvalidConfig("node positions must be finite".into()));
        }
        if !(self.length() > T::zero()) {
            return Err(Error::InvalidConfig("tx and rx must be distinct".into()));
        }
        Ok(())
    }

    /// Direct TX-RX distance `d`.
    pub fn length(&self) -> T {
        self.tx.distance(self.rx)
    }

    /// Unit vectors pointing from each node towards `p`: `(from_rx, from_tx)`.
    fn unit_vectors(&self, p: Point2<T>) -> Result<(Point2<T>, Point2<T>)> {
        let to_rx = p - self.rx;
        let to_tx = p - self.tx;
        let (dr, dt) = (to_rx.norm(), to_tx.norm());
        let tol = T::lit(NODE_TOLERANCE);
        if !(dr > tol && dt > tol) {
            return Err(Error::DegeneratePoint {
                tolerance: NODE_TOLERANCE,
            });
        }
        Ok((to_rx * dr.recip(), to_tx * dt.recip()))
    }
}

/// Reflector trajectory `p(t) = p0 + v·t + A·sin(2πft)·δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReflectorMotion<T> {
    pub p0: Point2<T>,
    /// Unit breathing direction δ.
    pub direction: Point2<T>,
    /// Breathing displacement amplitude A in meters.
    pub amplitude: T,
    /// Breathing frequency f in Hz.
    pub breath_freq: T,
    /// Constant drift velocity in m/s.
    #[serde(default)]
    pub velocity: Point2<T>,
}

impl<T: Scalar> ReflectorMotion<T> {
    pub fn validate(&self) -> Result<()> {
        if !self.p0.is_finite() || !self.velocity.is_finite() {
            return Err(Error::InvalidConfig("motion vectors must be finite".into()));
        }
        if (self.direction.norm() - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(4.0))
        {
            return Err(Error::InvalidConfig(format!(
                "breathing direction must be a unit vector (norm {})",
                self.direction.norm()
            )));
        }
        if !(self.amplitude >= T::zero()) {
            return Err(Error::InvalidConfig("amplitude must be >= 0".into()));
        }
        if !(self.breath_freq > T::zero()) {
            return Err(Error::InvalidConfig("breathing frequency must be > 0".into()));
        }
        Ok(())
    }

    /// Breathing displacement g(t).
    pub fn displacement(&self, t: T) -> T {
        self.amplitude * (T::TAU() * self.breath_freq * t).sin()
    }

    pub fn position(&self, t: T) -> Point2<T> {
        self.p0 + self.velocity * t + self.direction * self.displacement(t)
    }
}

/// Propagation medium at one carrier wavelength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MediumParams<T> {
    pub wavelength: T,
    pub pathloss_exponent: T,
    pub rel_permittivity: T,
}

impl<T: Scalar> MediumParams<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength > T::zero()) {
            return Err(Error::InvalidConfig("wavelength must be > 0".into()));
        }
        if !(self.pathloss_exponent > T::zero()) {
            return Err(Error::InvalidConfig("path loss exponent must be > 0".into()));
        }
        if !(self.rel_permittivity >= T::one()) {
            return Err(Error::InvalidConfig("relative permittivity must be >= 1".into()));
        }
        Ok(())
    }
}

/// Excess path length `Δ = d_t + d_r − d` of the ray reflected at `p`.
pub fn excess_path<T: Scalar>(link: &LinkGeometry<T>, p: Point2<T>) -> Result<T> {
    link.unit_vectors(p)?;
    let excess = p.distance(link.tx) + p.distance(link.rx) - link.length();
    Ok(excess.max(T::zero()))
}

/// Inner product of the excess-path gradient at `p0` with `vector`.
///
/// With a unit breathing direction this is δ_Δ; with the drift velocity it
/// is δ_v (in m/s).
pub fn gradient_projection<T: Scalar>(
    link: &LinkGeometry<T>,
    p0: Point2<T>,
    vector: Point2<T>,
) -> Result<T> {
    let (ur, ut) = link.unit_vectors(p0)?;
    Ok((ur + ut).dot(vector))
}

/// Cosine `p(𝒑)` between the unit vectors from each node to `p`.
pub fn incidence_cosine<T: Scalar>(link: &LinkGeometry<T>, p: Point2<T>) -> Result<T> {
    let (ur, ut) = link.unit_vectors(p)?;
    Ok(ur.dot(ut).max(-T::one()).min(T::one()))
}

/// Grazing incidence angle `θ_i = π/2 − arccos(p)/2`.
pub fn incidence_angle<T: Scalar>(p_inner: T) -> T {
    T::FRAC_PI_2() - p_inner.max(-T::one()).min(T::one()).acos() / T::lit(2.0)
}

/// Magnitude of the perpendicular-polarisation Fresnel coefficient.
///
/// The angle from the surface normal is `arccos(p)/2`, so
/// `cos²θ = (1+p)/2` and `sin²θ = (1−p)/2`. The coefficient reaches 1 on
/// the link line (`p = −1`) and falls to `(√εr−1)/(√εr+1)` at normal
/// incidence.
pub fn fresnel_coefficient<T: Scalar>(p_inner: T, rel_permittivity: T) -> T {
    let two = T::lit(2.0);
    let p = p_inner.max(-T::one()).min(T::one());
    let cos_t = ((T::one() + p) / two).sqrt();
    let sin2 = (T::one() - p) / two;
    let root = (rel_permittivity - sin2).max(T::zero()).sqrt();
    let den = root + cos_t;
    if den == T::zero() {
        return T::zero();
    }
    ((root - cos_t) / den).abs().min(T::one())
}

/// Effective reflection coefficient `G = Γ / (1 + Δ/d)^(η/2)`.
pub fn effective_reflection<T: Scalar>(gamma: T, excess: T, link_len: T, pathloss: T) -> T {
    gamma / (T::one() + excess / link_len).powf(pathloss / T::lit(2.0))
}
