//! Shared scalar and vector primitives, physical constants, and the
//! frame/time conversions used throughout the assay.
//!
//! Conventions: positions and displacements are carried in nanometres,
//! time in seconds, flux density in tesla behind the [`FluxDensity`]
//! newtype (constructed from millitesla or tesla explicitly, so the two
//! can never be mixed silently). Forces and energies are SI.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use thiserror::Error;

/// Vacuum permeability μ₀, T·m/A.
pub const MU_0: f64 = 4.0e-7 * PI;

/// Bohr magneton μ_B, A·m².
pub const BOHR_MAGNETON: f64 = 9.274e-24;

/// Thermal energy k_B·T at the assay temperature of 25 °C, J.
pub const KBT_25C: f64 = 4.116e-21;

/// Video frame interval of the camera, s.
pub const FRAME_DT_S: f64 = 1.0 / 30.0;

/// Spacing of neighboring camera pixels, nm.
pub const PIXEL_PITCH_NM: f64 = 60.0;

/// Localization accuracy of a speckle center, nm.
pub const LOCALIZATION_SIGMA_NM: f64 = 20.0;

#[derive(Debug, Error, PartialEq)]
pub enum UnitsError {
    #[error("{quantity} must be finite, got {value}")]
    NonFinite { quantity: &'static str, value: f64 },
    #[error("{quantity} must be non-negative, got {value}")]
    Negative { quantity: &'static str, value: f64 },
}

/// Physical constants bundled for callers that thread them explicitly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Vacuum permeability, T·m/A.
    pub mu0: f64,
    /// Bohr magneton, A·m².
    pub bohr_magneton: f64,
    /// Thermal energy at the configured temperature, J.
    pub kbt: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            mu0: MU_0,
            bohr_magneton: BOHR_MAGNETON,
            kbt: KBT_25C,
        }
    }
}

/// Planar vector in nanometres.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the cross product; sin of the angle for unit inputs.
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Unit vector, or `None` when the norm is below `eps`.
    pub fn unit(self, eps: f64) -> Option<Vec2> {
        let n = self.norm();
        if n < eps {
            None
        } else {
            Some(Vec2::new(self.x / n, self.y / n))
        }
    }

    /// This vector rotated by +90° (counter-clockwise).
    pub fn perp(self) -> Vec2 {
        Vec2::new(-self.y, self.x)
    }

    pub fn rotated(self, angle_rad: f64) -> Vec2 {
        let (s, c) = angle_rad.sin_cos();
        Vec2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn from_angle(angle_rad: f64) -> Vec2 {
        let (s, c) = angle_rad.sin_cos();
        Vec2::new(c, s)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl AddAssign for Vec2 {
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl SubAssign for Vec2 {
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    fn mul(self, rhs: f64) -> Vec2 {
        Vec2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

/// External magnetic flux density. Stored in tesla; constructed explicitly
/// from either unit so a raw millitesla number cannot slip into a tesla slot.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FluxDensity {
    tesla: f64,
}

impl FluxDensity {
    pub fn from_tesla(tesla: f64) -> Result<Self, UnitsError> {
        if !tesla.is_finite() {
            return Err(UnitsError::NonFinite {
                quantity: "flux density",
                value: tesla,
            });
        }
        if tesla < 0.0 {
            return Err(UnitsError::Negative {
                quantity: "flux density",
                value: tesla,
            });
        }
        Ok(FluxDensity { tesla })
    }

    pub fn from_millitesla(mt: f64) -> Result<Self, UnitsError> {
        Self::from_tesla(mt_to_t(mt))
    }

    pub fn tesla(self) -> f64 {
        self.tesla
    }

    pub fn millitesla(self) -> f64 {
        t_to_mt(self.tesla)
    }
}

/// Millitesla to tesla.
pub fn mt_to_t(b_mt: f64) -> f64 {
    b_mt / 1000.0
}

/// Tesla to millitesla.
pub fn t_to_mt(b_t: f64) -> f64 {
    b_t * 1000.0
}

/// Camera clock: one sample every `dt_frame_s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameClock {
    pub dt_frame_s: f64,
}

impl Default for FrameClock {
    fn default() -> Self {
        FrameClock {
            dt_frame_s: FRAME_DT_S,
        }
    }
}

impl FrameClock {
    pub fn seconds_for(&self, frames: u32) -> f64 {
        frames as f64 * self.dt_frame_s
    }
}

/// Duration covered by `n` frames on the given clock.
pub fn frames_to_seconds(n: u32, clock: &FrameClock) -> f64 {
    clock.seconds_for(n)
}
