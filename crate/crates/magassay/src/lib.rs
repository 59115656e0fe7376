//! A virtual magnetic in-vitro motility assay.
//!
//! The crate simulates a fluorescently speckled filament gliding over
//! surface-bound motors while carrying a coherently fluctuating magnetic
//! dipole density coupled to an external flux, and provides the matching
//! trajectory analysis pipeline: moving-average smoothing, decomposition of
//! marker displacements into components parallel and perpendicular to the
//! smoothed path, windowed cross-correlation of the parallel displacements,
//! and peak fitting of intensity-vs-flux sweeps down to physical dipole
//! estimates.
//!
//! Modules mirror the processing chain:
//!
//! * [`units`] — shared vector/constant/conversion primitives
//! * [`magnetics`] — closed-form dipole energetics
//! * [`simulator`] — overdamped bead-chain filament with dipole coupling
//! * [`tracking`] — smoothing, tangents, displacement decomposition
//! * [`correlation`] — windowed auto/cross-correlation in nm²
//! * [`estimation`] — parabola peak fit and physical summary reports
//! * [`config`] — plain-text `key = value` run configuration
//! * [`csvio`] — the CSV schemas shared with the command-line tool

pub mod config;
pub mod correlation;
pub mod csvio;
pub mod estimation;
pub mod magnetics;
pub mod simulator;
pub mod tracking;
pub mod units;

pub use magnetics::{DipoleDensity, MonomerGeometry};
pub use simulator::{FilamentState, SimConfig};
pub use tracking::{DisplacementSeries, MarkerTrack};
pub use units::{FluxDensity, Vec2};
