//! Closed-form dipole energetics.
//!
//! A filament carrying a magnetic moment density `M` (A/m) in an external
//! flux `B` (T) has energy density `E = -M·B + B²/(2μ₀)` (J/m³), which is
//! negative exactly on `0 < B < 2μ₀M`. The negated energy density is an
//! internal tensile stress `M·B − B²/(2μ₀)` (N/m²) whose maximum `μ₀M²/2`
//! sits at `B = μ₀M`; inverting that peak location yields the dipole
//! density, and multiplying by a per-monomer coherence volume yields the
//! per-monomer moment.

use crate::units::{FluxDensity, UnitsError, BOHR_MAGNETON, MU_0};
use std::f64::consts::PI;
use thiserror::Error;

/// Diameter of one actin monomer, m — the default coherence volume scale.
pub const MONOMER_DIAMETER_M: f64 = 4.0e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MagneticsError {
    #[error(transparent)]
    Units(#[from] UnitsError),
    #[error("monomer diameter must be positive and finite, got {0}")]
    BadDiameter(f64),
}

/// Magnetic moment density along the filament, A/m. Non-negative.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct DipoleDensity {
    a_per_m: f64,
}

impl DipoleDensity {
    pub fn new(a_per_m: f64) -> Result<Self, MagneticsError> {
        if !a_per_m.is_finite() {
            return Err(UnitsError::NonFinite {
                quantity: "dipole density",
                value: a_per_m,
            }
            .into());
        }
        if a_per_m < 0.0 {
            return Err(UnitsError::Negative {
                quantity: "dipole density",
                value: a_per_m,
            }
            .into());
        }
        Ok(DipoleDensity { a_per_m })
    }

    pub fn a_per_m(self) -> f64 {
        self.a_per_m
    }
}

/// Spherical coherence volume assigned to one monomer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomerGeometry {
    diameter_m: f64,
    volume_m3: f64,
}

impl MonomerGeometry {
    /// Sphere of the given diameter; volume `(π/6)·d³`.
    pub fn sphere(diameter_m: f64) -> Result<Self, MagneticsError> {
        if !diameter_m.is_finite() || diameter_m <= 0.0 {
            return Err(MagneticsError::BadDiameter(diameter_m));
        }
        Ok(MonomerGeometry {
            diameter_m,
            volume_m3: PI / 6.0 * diameter_m.powi(3),
        })
    }

    pub fn diameter_m(self) -> f64 {
        self.diameter_m
    }

    pub fn volume_m3(self) -> f64 {
        self.volume_m3
    }
}

/// Moment of one monomer, reported both in SI and in Bohr magnetons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonomerMoment {
    pub a_m2: f64,
    pub bohr_magnetons: f64,
}

/// Energy density `-M·B + B²/(2μ₀)` in J/m³.
pub fn energy_density(m: DipoleDensity, b: FluxDensity) -> f64 {
    let b_t = b.tesla();
    -m.a_per_m() * b_t + b_t * b_t / (2.0 * MU_0)
}

/// Tensile stress `M·B − B²/(2μ₀)` in N/m². Negative (compressive) for
/// `B > 2μ₀M`; returned unclamped so the whole parabola is visible to the
/// fitting stage.
pub fn tensile_stress(m: DipoleDensity, b: FluxDensity) -> f64 {
    -energy_density(m, b)
}

/// Flux density maximizing the tensile stress: `B = μ₀M`.
pub fn optimal_flux(m: DipoleDensity) -> FluxDensity {
    FluxDensity::from_tesla(MU_0 * m.a_per_m()).expect("mu0*M is finite and non-negative")
}

/// Dipole density recovered from a measured stress peak: `M = B*/μ₀`.
/// Exact inverse of [`optimal_flux`].
pub fn dipole_density_from_peak(b_star: FluxDensity) -> DipoleDensity {
    DipoleDensity::new(b_star.tesla() / MU_0).expect("B/mu0 is finite and non-negative")
}

/// Moment carried by one monomer coherence volume: `M·V`, also expressed
/// in Bohr magnetons.
pub fn monomer_moment(m: DipoleDensity, g: MonomerGeometry) -> MonomerMoment {
    let a_m2 = m.a_per_m() * g.volume_m3();
    MonomerMoment {
        a_m2,
        bohr_magnetons: a_m2 / BOHR_MAGNETON,
    }
}

/// Dipole-dipole interaction energy per monomer, modeled as `μ₀·M²·V`.
///
/// NOTE: this expression is an inference, not a first-principles pairwise
/// sum. It treats the per-monomer interaction as the magnetostatic energy
/// scale of one coherence volume at magnetization M; the pairwise geometry
/// (separation, orientation) is deliberately not modeled.
pub fn dipole_interaction_energy(m: DipoleDensity, g: MonomerGeometry) -> f64 {
    MU_0 * m.a_per_m() * m.a_per_m() * g.volume_m3()
}
