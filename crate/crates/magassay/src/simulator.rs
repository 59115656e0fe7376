//! Overdamped Langevin bead-chain filament with propulsion, thermal noise,
//! and a coherently fluctuating magnetic dipole density coupled to the
//! external flux through the tensile-stress model.
//!
//! The dipole amplitude is a single filament-wide mean-reverting factor
//! `η(t)`; the instantaneous tensile stress is `(1+η)₊ · (M₀B − B²/2μ₀)`,
//! so the whole stress parabola is modulated in common mode, realizing a
//! dipole strength that fluctuates in phase over the entire filament. The
//! stress enters the mechanics twice:
//!
//! * as an axial tension on every bond (equal-and-opposite pulls on the
//!   bond endpoints, scaled by the angle coupling `g`), and
//! * as a load modulation of the motor propulsion along the local tangent,
//!   which is what makes distant markers fluctuate together — bond tension
//!   alone is an internal force and cannot move the filament as a whole.
//!
//! Marker bead positions are sampled every 1/30 s with Gaussian
//! localization noise and optional pixel quantization.

use crate::correlation::{window_intensities, CorrelationError};
use crate::estimation::SweepRecord;
use crate::magnetics::{tensile_stress, DipoleDensity};
use crate::tracking::{decompose, smooth, MarkerTrack, TrackSample, TrackingError};
use crate::units::{FluxDensity, Vec2, FRAME_DT_S, KBT_25C, LOCALIZATION_SIGMA_NM, PIXEL_PITCH_NM};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

const NM_PER_M: f64 = 1e9;
const M_PER_NM: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("invalid config: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("numerical blowup: bead {bead} moved more than one bead spacing at t = {time_s} s (dt too large)")]
    NumericalBlowup { bead: usize, time_s: f64 },
}

/// Angular coupling g(θ) between a filament direction and the field
/// direction. The default is sin²θ; arbitrary tabulated couplings are
/// linearly interpolated over the undirected angle θ ∈ [0°, 90°].
#[derive(Debug, Clone, PartialEq)]
pub enum AngleCoupling {
    Sin2,
    Table(Vec<(f64, f64)>),
}

impl AngleCoupling {
    /// Coupling between two unit vectors.
    pub fn eval_between(&self, a: Vec2, b: Vec2) -> f64 {
        match self {
            AngleCoupling::Sin2 => {
                let s = a.cross(b);
                s * s
            }
            AngleCoupling::Table(table) => {
                let theta = a.dot(b).abs().min(1.0).acos().to_degrees();
                Self::interp(table, theta)
            }
        }
    }

    /// Coupling at an explicit angle in degrees.
    pub fn eval_deg(&self, theta_deg: f64) -> f64 {
        match self {
            AngleCoupling::Sin2 => {
                let s = theta_deg.to_radians().sin();
                s * s
            }
            AngleCoupling::Table(table) => {
                let theta = theta_deg.rem_euclid(180.0);
                let theta = if theta > 90.0 { 180.0 - theta } else { theta };
                Self::interp(table, theta)
            }
        }
    }

    fn interp(table: &[(f64, f64)], theta: f64) -> f64 {
        if theta <= table[0].0 {
            return table[0].1;
        }
        for pair in table.windows(2) {
            let (t0, g0) = pair[0];
            let (t1, g1) = pair[1];
            if theta <= t1 {
                return g0 + (g1 - g0) * (theta - t0) / (t1 - t0);
            }
        }
        table[table.len() - 1].1
    }

    fn validate(&self) -> Result<(), String> {
        if let AngleCoupling::Table(table) = self {
            if table.is_empty() {
                return Err("coupling table must not be empty".into());
            }
            let mut prev = -1.0;
            for &(t, g) in table {
                if !t.is_finite() || !g.is_finite() || g < 0.0 || !(0.0..=90.0).contains(&t) {
                    return Err(format!("bad coupling table entry ({t}, {g})"));
                }
                if t <= prev {
                    return Err("coupling table angles must be strictly increasing".into());
                }
                prev = t;
            }
        }
        Ok(())
    }
}

/// Full parameterization of one assay run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_beads: usize,
    pub bead_spacing_nm: f64,
    /// Harmonic bond stiffness, N/m.
    pub bond_stiffness_n_per_m: f64,
    /// Angular stiffness of the discrete bending energy kθ·(1−cos φ), J.
    pub bend_stiffness_j: f64,
    /// Drag per bead (motor plus hydrodynamic), N·s/m = kg/s.
    pub drag_per_bead_kg_per_s: f64,
    pub propulsion_speed_nm_per_s: f64,
    pub temperature_kbt_j: f64,
    /// Mean dipole density M₀, A/m.
    pub m0_a_per_m: f64,
    /// Relative fluctuation amplitude σ_η of the dipole factor.
    pub dipole_relative_sigma: f64,
    /// Mean-reversion time of the dipole factor, s.
    pub dipole_corr_time_s: f64,
    /// Filament cross-section area carrying the stress, m².
    pub cross_section_area_m2: f64,
    pub b_mt: f64,
    /// Field direction relative to the initial filament axis, degrees.
    pub field_angle_deg: f64,
    /// Dimensionless gain of the motor-load response to the fluctuating
    /// tension; this is the common-mode displacement channel.
    pub load_response: f64,
    pub angle_coupling: AngleCoupling,
    /// Bead indices carrying fluorescent markers, strictly increasing.
    pub marker_beads: Vec<usize>,
    pub localization_sigma_nm: f64,
    pub pixel_pitch_nm: f64,
    pub quantize_pixels: bool,
    pub dt_internal_s: f64,
    pub frames: u32,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            // 21 beads at 100 nm: 2.0 um contour; markers at 1/9/19 give the
            // 0.8 um (p1-p2) and 1.8 um (p1-p3) spacings of a speckled
            // filament while staying off the flapping end beads.
            n_beads: 21,
            bead_spacing_nm: 100.0,
            bond_stiffness_n_per_m: 2.0e-4,
            bend_stiffness_j: 3.0e-19,
            drag_per_bead_kg_per_s: 2.0e-7,
            propulsion_speed_nm_per_s: 1000.0,
            temperature_kbt_j: KBT_25C,
            m0_a_per_m: 5.2e4,
            dipole_relative_sigma: 0.3,
            dipole_corr_time_s: 0.2,
            cross_section_area_m2: std::f64::consts::PI * (4.0e-9 / 2.0) * (4.0e-9 / 2.0),
            b_mt: 65.0,
            field_angle_deg: 90.0,
            load_response: 16.0,
            angle_coupling: AngleCoupling::Sin2,
            marker_beads: vec![1, 9, 19],
            localization_sigma_nm: LOCALIZATION_SIGMA_NM,
            pixel_pitch_nm: PIXEL_PITCH_NM,
            quantize_pixels: false,
            dt_internal_s: FRAME_DT_S / 100.0,
            frames: 300,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |field: &'static str, reason: String| SimError::InvalidConfig { field, reason };
        let positive = |field: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(field, format!("must be positive and finite, got {v}")))
            }
        };
        let non_negative = |field: &'static str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(bad(field, format!("must be non-negative and finite, got {v}")))
            }
        };

        if self.n_beads == 0 {
            return Err(bad("n_beads", "must be at least 1".into()));
        }
        positive("bead_spacing_nm", self.bead_spacing_nm)?;
        non_negative("bond_stiffness_n_per_m", self.bond_stiffness_n_per_m)?;
        non_negative("bend_stiffness_j", self.bend_stiffness_j)?;
        positive("drag_per_bead_kg_per_s", self.drag_per_bead_kg_per_s)?;
        non_negative("propulsion_speed_nm_per_s", self.propulsion_speed_nm_per_s)?;
        non_negative("temperature_kbt_j", self.temperature_kbt_j)?;
        non_negative("m0_a_per_m", self.m0_a_per_m)?;
        non_negative("dipole_relative_sigma", self.dipole_relative_sigma)?;
        if !(self.dipole_corr_time_s > 0.0) {
            return Err(bad(
                "dipole_corr_time_s",
                format!("must be positive, got {}", self.dipole_corr_time_s),
            ));
        }
        positive("cross_section_area_m2", self.cross_section_area_m2)?;
        non_negative("b_mt", self.b_mt)?;
        if !self.field_angle_deg.is_finite() {
            return Err(bad("field_angle_deg", "must be finite".into()));
        }
        if !self.load_response.is_finite() {
            return Err(bad("load_response", "must be finite".into()));
        }
        self.angle_coupling
            .validate()
            .map_err(|reason| bad("angle_coupling", reason))?;
        if self.marker_beads.is_empty() {
            return Err(bad("marker_beads", "need at least one marker".into()));
        }
        for (i, &m) in self.marker_beads.iter().enumerate() {
            if m >= self.n_beads {
                return Err(bad(
                    "marker_beads",
                    format!("bead index {m} out of range for {} beads", self.n_beads),
                ));
            }
            if i > 0 && self.marker_beads[i - 1] >= m {
                return Err(bad("marker_beads", "indices must be strictly increasing".into()));
            }
        }
        non_negative("localization_sigma_nm", self.localization_sigma_nm)?;
        positive("pixel_pitch_nm", self.pixel_pitch_nm)?;
        if !(self.dt_internal_s > 0.0 && self.dt_internal_s <= FRAME_DT_S / 10.0) {
            return Err(bad(
                "dt_internal_s",
                format!(
                    "must be in (0, {:.3e}] (at least 10 substeps per frame), got {}",
                    FRAME_DT_S / 10.0,
                    self.dt_internal_s
                ),
            ));
        }
        if self.frames == 0 {
            return Err(bad("frames", "must be at least 1".into()));
        }
        Ok(())
    }

    /// Mean tensile stress M₀B − B²/2μ₀ at the configured flux, Pa.
    /// Requires a validated config.
    pub fn mean_tensile_stress_pa(&self) -> f64 {
        let m = DipoleDensity::new(self.m0_a_per_m).expect("validated M0");
        let b = FluxDensity::from_millitesla(self.b_mt).expect("validated B");
        tensile_stress(m, b)
    }

    /// Unit vector of the applied field in the lab frame.
    pub fn field_unit(&self) -> Vec2 {
        Vec2::from_angle(self.field_angle_deg.to_radians())
    }

    /// Number of integrator substeps per video frame.
    pub fn substeps_per_frame(&self) -> u32 {
        (FRAME_DT_S / self.dt_internal_s).round().max(10.0) as u32
    }

    /// Substep actually used: the frame interval divided evenly.
    pub fn dt_effective_s(&self) -> f64 {
        FRAME_DT_S / self.substeps_per_frame() as f64
    }
}

/// Instantaneous state of the filament.
#[derive(Debug, Clone, PartialEq)]
pub struct FilamentState {
    pub positions_nm: Vec<Vec2>,
    /// Common-mode dipole fluctuation factor; M(t) = M₀·(1+η), clamped ≥ 0.
    pub eta: f64,
    pub time_s: f64,
    rng: ChaCha12Rng,
}

/// Straight filament along +x at rest spacing, η = 0, RNG seeded from the
/// config.
pub fn init(config: &SimConfig) -> Result<FilamentState, SimError> {
    config.validate()?;
    let positions_nm = (0..config.n_beads)
        .map(|i| Vec2::new(i as f64 * config.bead_spacing_nm, 0.0))
        .collect();
    Ok(FilamentState {
        positions_nm,
        eta: 0.0,
        time_s: 0.0,
        rng: ChaCha12Rng::seed_from_u64(config.seed),
    })
}

/// One mean-reverting update of the dipole factor:
/// η ← η·(1 − dt/τ) + σ_η·√(2dt/τ)·ξ, clamped so M(t) stays non-negative.
/// Returns the updated η.
pub fn dipole_step(state: &mut FilamentState, config: &SimConfig, dt_s: f64) -> f64 {
    let r = dt_s / config.dipole_corr_time_s;
    let xi: f64 = state.rng.sample(StandardNormal);
    let eta = state.eta * (1.0 - r) + config.dipole_relative_sigma * (2.0 * r).sqrt() * xi;
    state.eta = eta.max(-1.0);
    state.eta
}

/// Instantaneous tensile stress (1+η)₊·(M₀B − B²/2μ₀), Pa.
pub fn instantaneous_stress_pa(state: &FilamentState, config: &SimConfig) -> f64 {
    (1.0 + state.eta).max(0.0) * config.mean_tensile_stress_pa()
}

fn bead_tangent(positions: &[Vec2], j: usize) -> Option<Vec2> {
    let n = positions.len();
    if n < 2 {
        return None;
    }
    let chord = if j == 0 {
        positions[1] - positions[0]
    } else if j == n - 1 {
        positions[n - 1] - positions[n - 2]
    } else {
        positions[j + 1] - positions[j - 1]
    };
    chord.unit(1e-9)
}

/// Deterministic per-bead forces, N: harmonic bonds, discrete bending,
/// motor propulsion with tension-load modulation, and the axial magnetic
/// bond tension.
pub fn forces(state: &FilamentState, config: &SimConfig) -> Vec<Vec2> {
    let n = config.n_beads;
    let pos = &state.positions_nm;
    let mut f = vec![Vec2::ZERO; n];
    let rest_m = config.bead_spacing_nm * M_PER_NM;
    let k = config.bond_stiffness_n_per_m;
    let field = config.field_unit();
    let sigma_pa = instantaneous_stress_pa(state, config);
    let area = config.cross_section_area_m2;

    // bonds + magnetic tension share the bond geometry
    for i in 0..n.saturating_sub(1) {
        let d_nm = pos[i + 1] - pos[i];
        let Some(u) = d_nm.unit(1e-12) else { continue };
        let len_m = d_nm.norm() * M_PER_NM;
        let spring = k * (len_m - rest_m);
        let tension = sigma_pa * area * config.angle_coupling.eval_between(u, field);
        let pull = u * (spring + tension);
        f[i] += pull;
        f[i + 1] -= pull;
    }

    // discrete bending: E_j = kθ·(1 − cos φ_j) at each interior bead
    let ktheta = config.bend_stiffness_j;
    if ktheta > 0.0 {
        for j in 1..n.saturating_sub(1) {
            let u = (pos[j] - pos[j - 1]) * M_PER_NM;
            let v = (pos[j + 1] - pos[j]) * M_PER_NM;
            let lu = u.norm();
            let lv = v.norm();
            if lu < 1e-21 || lv < 1e-21 {
                continue;
            }
            let c = u.dot(v) / (lu * lv);
            let dc_du = v * (1.0 / (lu * lv)) - u * (c / (lu * lu));
            let dc_dv = u * (1.0 / (lu * lv)) - v * (c / (lv * lv));
            f[j - 1] += -dc_du * ktheta;
            f[j] += (dc_du - dc_dv) * ktheta;
            f[j + 1] += dc_dv * ktheta;
        }
    }

    // propulsion along the local tangent, with the motor load responding to
    // the instantaneous tension. The load couples to the filament as one
    // mechanical object, so it carries the filament-mean coupling factor;
    // a per-bead factor would turn heading wander along the chain into a
    // spurious distance-dependent signal.
    let gamma = config.drag_per_bead_kg_per_s;
    let v0 = config.propulsion_speed_nm_per_s * M_PER_NM;
    if v0 > 0.0 || config.load_response != 0.0 {
        let g_mean = mean_bond_coupling(pos, config, field);
        let load = config.load_response * sigma_pa * area * g_mean;
        for (j, fj) in f.iter_mut().enumerate() {
            if let Some(t) = bead_tangent(pos, j) {
                *fj += t * (gamma * v0 + load);
            }
        }
    }

    f
}

/// Mean angle coupling over all bonds — the filament-level factor seen by
/// the motor load.
pub fn mean_bond_coupling(positions: &[Vec2], config: &SimConfig, field: Vec2) -> f64 {
    let n = positions.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n - 1 {
        if let Some(u) = (positions[i + 1] - positions[i]).unit(1e-12) {
            sum += config.angle_coupling.eval_between(u, field);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Conservative potential matching the bond, bending, and magnetic-tension
/// terms of [`forces`], J. The angle-coupling factors are evaluated at the
/// current geometry; the gradient identity with [`forces`] is exact when
/// the coupling is uniform over angle.
pub fn potential_energy_j(state: &FilamentState, config: &SimConfig) -> f64 {
    let n = config.n_beads;
    let pos = &state.positions_nm;
    let rest_m = config.bead_spacing_nm * M_PER_NM;
    let k = config.bond_stiffness_n_per_m;
    let field = config.field_unit();
    let sigma_pa = instantaneous_stress_pa(state, config);
    let area = config.cross_section_area_m2;
    let mut e = 0.0;

    for i in 0..n.saturating_sub(1) {
        let d_nm = pos[i + 1] - pos[i];
        let len_m = d_nm.norm() * M_PER_NM;
        e += 0.5 * k * (len_m - rest_m) * (len_m - rest_m);
        if let Some(u) = d_nm.unit(1e-12) {
            // tension f pulling the endpoints together has potential +f·len
            e += sigma_pa * area * config.angle_coupling.eval_between(u, field) * len_m;
        }
    }

    let ktheta = config.bend_stiffness_j;
    if ktheta > 0.0 {
        for j in 1..n.saturating_sub(1) {
            let u = pos[j] - pos[j - 1];
            let v = pos[j + 1] - pos[j];
            let nu = u.norm();
            let nv = v.norm();
            if nu < 1e-12 || nv < 1e-12 {
                continue;
            }
            e += ktheta * (1.0 - u.dot(v) / (nu * nv));
        }
    }
    e
}

/// One Euler–Maruyama step: x ← x + (F/γ)·dt + √(2·kBT·dt/γ)·ξ per bead,
/// then the dipole update, then the clock.
pub fn step(state: &mut FilamentState, config: &SimConfig, dt_s: f64) -> Result<(), SimError> {
    let f = forces(state, config);
    let gamma = config.drag_per_bead_kg_per_s;
    let noise_nm = (2.0 * config.temperature_kbt_j * dt_s / gamma).sqrt() * NM_PER_M;
    let mobility_nm = dt_s / gamma * NM_PER_M;
    let time_s = state.time_s;

    let FilamentState {
        positions_nm, rng, ..
    } = state;
    for (i, pos) in positions_nm.iter_mut().enumerate() {
        let xi_x: f64 = rng.sample(StandardNormal);
        let xi_y: f64 = rng.sample(StandardNormal);
        let delta = f[i] * mobility_nm + Vec2::new(noise_nm * xi_x, noise_nm * xi_y);
        if delta.norm() > config.bead_spacing_nm {
            return Err(SimError::NumericalBlowup { bead: i, time_s });
        }
        *pos += delta;
    }
    dipole_step(state, config, dt_s);
    state.time_s += dt_s;
    Ok(())
}

fn sample_markers(
    state: &mut FilamentState,
    config: &SimConfig,
    frame: u32,
    tracks: &mut [Vec<TrackSample>],
) {
    let sigma = config.localization_sigma_nm;
    for (t, &bead) in tracks.iter_mut().zip(&config.marker_beads) {
        let mut p = state.positions_nm[bead];
        if sigma > 0.0 {
            let nx: f64 = state.rng.sample(StandardNormal);
            let ny: f64 = state.rng.sample(StandardNormal);
            p += Vec2::new(sigma * nx, sigma * ny);
        }
        if config.quantize_pixels {
            let pitch = config.pixel_pitch_nm;
            p = Vec2::new((p.x / pitch).round() * pitch, (p.y / pitch).round() * pitch);
        }
        t.push(TrackSample { frame, pos: p });
    }
}

/// Integrate a full assay run and return one track per marker bead,
/// sampled every 1/30 s. Deterministic for a given config (seed included).
pub fn run_assay(config: &SimConfig) -> Result<Vec<MarkerTrack>, SimError> {
    let mut state = init(config)?;
    let n_sub = config.substeps_per_frame();
    let dt = config.dt_effective_s();
    let mut tracks: Vec<Vec<TrackSample>> = vec![Vec::with_capacity(config.frames as usize); config.marker_beads.len()];

    sample_markers(&mut state, config, 0, &mut tracks);
    for frame in 1..config.frames {
        for _ in 0..n_sub {
            step(&mut state, config, dt)?;
        }
        sample_markers(&mut state, config, frame, &mut tracks);
    }

    Ok(tracks
        .into_iter()
        .enumerate()
        .map(|(i, samples)| {
            MarkerTrack::new(format!("p{}", i + 1), samples).expect("simulated tracks are valid")
        })
        .collect())
}

/// Sweep plan: the flux/angle grid, replica count, and the analysis
/// windows applied to each run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub b_list_mt: Vec<f64>,
    pub theta_list_deg: Vec<f64>,
    pub replicas: u32,
    pub smooth_window: u32,
    pub corr_window: u32,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            b_list_mt: vec![0.0, 20.0, 40.0, 65.0, 90.0, 120.0],
            theta_list_deg: vec![90.0],
            replicas: 20,
            smooth_window: 21,
            corr_window: 99,
        }
    }
}

/// One failed sweep cell; the sweep continues without it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepFailure {
    pub b_mt: f64,
    pub theta_deg: f64,
    pub replica: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub failures: Vec<SweepFailure>,
}

/// Deterministic per-cell RNG seed: a splitmix hash of the master seed and
/// the cell coordinates, so results do not depend on execution order.
pub fn cell_seed(master: u64, b_mt: f64, theta_deg: f64, replica: u32) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    let mut h = splitmix64(master ^ 0xA076_1D64_78BD_642F);
    h = splitmix64(h ^ b_mt.to_bits());
    h = splitmix64(h ^ theta_deg.to_bits());
    h = splitmix64(h ^ replica as u64);
    h
}

#[derive(Debug)]
enum RunError {
    Sim(SimError),
    Tracking(TrackingError),
    Correlation(CorrelationError),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Sim(e) => write!(f, "{e}"),
            RunError::Tracking(e) => write!(f, "{e}"),
            RunError::Correlation(e) => write!(f, "{e}"),
        }
    }
}

/// Zero-delay intensities of the (p1, p2) pair for every analysis window
/// of one run.
fn replica_intensities(config: &SimConfig, plan: &SweepPlan) -> Result<Vec<f64>, RunError> {
    let tracks = run_assay(config).map_err(RunError::Sim)?;
    let d1 = decompose(
        &tracks[0],
        &smooth(&tracks[0], plan.smooth_window).map_err(RunError::Tracking)?,
    )
    .map_err(RunError::Tracking)?;
    let d2 = decompose(
        &tracks[1],
        &smooth(&tracks[1], plan.smooth_window).map_err(RunError::Tracking)?,
    )
    .map_err(RunError::Tracking)?;
    window_intensities(&d1, &d2, plan.corr_window).map_err(RunError::Correlation)
}

/// Run the full (B, θ, replica) grid and aggregate window intensities into
/// one record per (B, θ) cell. Cells fail independently; failures are
/// reported, not fatal. Results are bit-identical for a fixed master seed
/// regardless of thread count.
pub fn sweep(base: &SimConfig, plan: &SweepPlan) -> Result<SweepOutcome, SimError> {
    base.validate()?;
    if base.marker_beads.len() < 2 {
        return Err(SimError::InvalidConfig {
            field: "marker_beads",
            reason: "sweep needs at least two markers for the p1-p2 pair".into(),
        });
    }
    if plan.b_list_mt.is_empty() || plan.theta_list_deg.is_empty() || plan.replicas == 0 {
        return Err(SimError::InvalidConfig {
            field: "sweep plan",
            reason: "flux list, angle list, and replicas must be non-empty".into(),
        });
    }

    let mut jobs = Vec::new();
    for &b in &plan.b_list_mt {
        for &theta in &plan.theta_list_deg {
            for replica in 0..plan.replicas {
                jobs.push((b, theta, replica));
            }
        }
    }

    let run_job = |&(b, theta, replica): &(f64, f64, u32)| {
        let mut config = base.clone();
        config.b_mt = b;
        config.field_angle_deg = theta;
        config.seed = cell_seed(base.seed, b, theta, replica);
        replica_intensities(&config, plan).map_err(|e| SweepFailure {
            b_mt: b,
            theta_deg: theta,
            replica,
            message: e.to_string(),
        })
    };

    #[cfg(feature = "parallel")]
    let results: Vec<Result<Vec<f64>, SweepFailure>> = jobs.par_iter().map(run_job).collect();
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<Vec<f64>, SweepFailure>> = jobs.iter().map(run_job).collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut idx = 0;
    for &b in &plan.b_list_mt {
        for &theta in &plan.theta_list_deg {
            let mut pooled = Vec::new();
            for _ in 0..plan.replicas {
                match &results[idx] {
                    Ok(values) => pooled.extend_from_slice(values),
                    Err(failure) => failures.push(failure.clone()),
                }
                idx += 1;
            }
            if pooled.is_empty() {
                continue;
            }
            let n = pooled.len() as f64;
            let mean = pooled.iter().sum::<f64>() / n;
            let stderr = if pooled.len() > 1 {
                let var = pooled.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            records.push(SweepRecord {
                b_mt: b,
                theta_deg: theta,
                intensity_nm2: mean,
                stderr_nm2: stderr,
                n_windows: pooled.len(),
            });
        }
    }

    Ok(SweepOutcome { records, failures })
}
