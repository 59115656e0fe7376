//! Browser bindings for the assay: a live filament you can steer with the
//! field controls, the closed-form stress curve behind the peak estimate,
//! and the running cross-correlation of the two nearest markers.

use magassay::correlation::cross_correlation;
use magassay::magnetics::{
    dipole_density_from_peak, dipole_interaction_energy, monomer_moment, tensile_stress,
    DipoleDensity, MonomerGeometry, MONOMER_DIAMETER_M,
};
use magassay::simulator::{self, FilamentState, SimConfig};
use magassay::tracking::{decompose, smooth, MarkerTrack, TrackSample};
use magassay::units::{FluxDensity, FrameClock, MU_0};
use wasm_bindgen::prelude::*;

fn clamp_finite(v: f64, lo: f64, hi: f64, fallback: f64) -> f64 {
    if v.is_finite() {
        v.clamp(lo, hi)
    } else {
        fallback
    }
}

/// Interactive filament simulation advanced one video frame at a time.
#[wasm_bindgen]
pub struct FilamentDemo {
    config: SimConfig,
    state: FilamentState,
    frame: u32,
    history: Vec<Vec<TrackSample>>,
}

const HISTORY_FRAMES: usize = 1200; // 40 s of video

#[wasm_bindgen]
impl FilamentDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(b_mt: f64, field_angle_deg: f64, m0_a_per_m: f64, seed: u64) -> FilamentDemo {
        let mut config = SimConfig::default();
        config.b_mt = clamp_finite(b_mt, 0.0, 500.0, 65.0);
        config.field_angle_deg = clamp_finite(field_angle_deg, 0.0, 180.0, 90.0);
        config.m0_a_per_m = clamp_finite(m0_a_per_m, 0.0, 1.0e6, 5.2e4);
        config.seed = seed;
        let state = simulator::init(&config).expect("default demo config is valid");
        let history = vec![Vec::new(); config.marker_beads.len()];
        let mut demo = FilamentDemo {
            config,
            state,
            frame: 0,
            history,
        };
        demo.record_frame();
        demo
    }

    /// Advance exactly one video frame (1/30 s of assay time).
    pub fn step_frame(&mut self) -> Result<(), JsValue> {
        let n_sub = self.config.substeps_per_frame();
        let dt = self.config.dt_effective_s();
        for _ in 0..n_sub {
            simulator::step(&mut self.state, &self.config, dt)
                .map_err(|e| JsValue::from_str(&e.to_string()))?;
        }
        self.frame += 1;
        self.record_frame();
        Ok(())
    }

    /// Live field controls; the run continues with the new parameters.
    pub fn set_field(&mut self, b_mt: f64, field_angle_deg: f64) {
        self.config.b_mt = clamp_finite(b_mt, 0.0, 500.0, self.config.b_mt);
        self.config.field_angle_deg =
            clamp_finite(field_angle_deg, 0.0, 180.0, self.config.field_angle_deg);
    }

    pub fn set_dipole_density(&mut self, m0_a_per_m: f64) {
        self.config.m0_a_per_m = clamp_finite(m0_a_per_m, 0.0, 1.0e6, self.config.m0_a_per_m);
    }

    /// Bead positions, interleaved x, y in nm.
    pub fn positions(&self) -> Vec<f64> {
        self.state
            .positions_nm
            .iter()
            .flat_map(|p| [p.x, p.y])
            .collect()
    }

    /// Marker bead positions, interleaved x, y in nm.
    pub fn marker_positions(&self) -> Vec<f64> {
        self.config
            .marker_beads
            .iter()
            .flat_map(|&i| {
                let p = self.state.positions_nm[i];
                [p.x, p.y]
            })
            .collect()
    }

    pub fn time_s(&self) -> f64 {
        self.state.time_s
    }

    pub fn eta(&self) -> f64 {
        self.state.eta
    }

    /// Instantaneous tensile stress (1+η)₊·(M₀B − B²/2μ₀), Pa.
    pub fn stress_pa(&self) -> f64 {
        simulator::instantaneous_stress_pa(&self.state, &self.config)
    }

    /// Filament-mean angle coupling seen by the motor load right now.
    pub fn mean_coupling(&self) -> f64 {
        simulator::mean_bond_coupling(
            &self.state.positions_nm,
            &self.config,
            self.config.field_unit(),
        )
    }

    pub fn b_mt(&self) -> f64 {
        self.config.b_mt
    }

    pub fn field_angle_deg(&self) -> f64 {
        self.config.field_angle_deg
    }

    /// Running cross-correlation of the p1–p2 parallel displacements over
    /// the recorded history, flattened as [delay_s, c_nm2, …]. Empty until
    /// enough frames have accumulated for one full analysis window.
    pub fn correlation_curve(&self, max_lag: u32) -> Vec<f64> {
        let window = 99u32;
        if self.history[0].len() < (window + 22) as usize || max_lag >= window {
            return Vec::new();
        }
        let to_track = |i: usize| {
            MarkerTrack::new(format!("p{}", i + 1), self.history[i].clone())
                .expect("history frames are strictly increasing")
        };
        let (t1, t2) = (to_track(0), to_track(1));
        let run = |t: &MarkerTrack| {
            let s = smooth(t, 21).ok()?;
            decompose(t, &s).ok()
        };
        let (Some(d1), Some(d2)) = (run(&t1), run(&t2)) else {
            return Vec::new();
        };
        match cross_correlation(&d1, &d2, max_lag, window, &FrameClock::default()) {
            Ok(f) => f
                .points()
                .iter()
                .flat_map(|p| [p.delay_s, p.value_nm2])
                .collect(),
            Err(_) => Vec::new(),
        }
    }

    fn record_frame(&mut self) {
        for (hist, &bead) in self.history.iter_mut().zip(&self.config.marker_beads) {
            hist.push(TrackSample {
                frame: self.frame,
                pos: self.state.positions_nm[bead],
            });
            if hist.len() > HISTORY_FRAMES {
                hist.remove(0);
            }
        }
    }
}

/// Mean tensile stress M·B − B²/2μ₀ in Pa sampled on n points of
/// B ∈ [0, b_max_mt], flattened as [b_mt, stress_pa, …].
#[wasm_bindgen]
pub fn stress_curve(m0_a_per_m: f64, b_max_mt: f64, n: u32) -> Vec<f64> {
    let m0 = clamp_finite(m0_a_per_m, 0.0, 1.0e6, 5.2e4);
    let b_max = clamp_finite(b_max_mt, 1.0, 1000.0, 130.0);
    let n = n.clamp(2, 4096);
    let m = DipoleDensity::new(m0).expect("clamped");
    (0..=n)
        .flat_map(|i| {
            let b_mt = b_max * i as f64 / n as f64;
            let b = FluxDensity::from_millitesla(b_mt).expect("clamped");
            [b_mt, tensile_stress(m, b)]
        })
        .collect()
}

/// Flux density of maximum tensile stress, mT.
#[wasm_bindgen]
pub fn optimal_flux_mt(m0_a_per_m: f64) -> f64 {
    clamp_finite(m0_a_per_m, 0.0, 1.0e6, 5.2e4) * MU_0 * 1.0e3
}

/// Physical estimates chained from a peak location, flattened as
/// [dipole density A/m, moment A·m², moment μ_B, interaction J].
#[wasm_bindgen]
pub fn dipole_estimates(b_star_mt: f64) -> Vec<f64> {
    let b_star = clamp_finite(b_star_mt, 0.0, 1000.0, 65.0);
    let m = dipole_density_from_peak(FluxDensity::from_millitesla(b_star).expect("clamped"));
    let g = MonomerGeometry::sphere(MONOMER_DIAMETER_M).expect("constant");
    let moment = monomer_moment(m, g);
    vec![
        m.a_per_m(),
        moment.a_m2,
        moment.bohr_magnetons,
        dipole_interaction_energy(m, g),
    ]
}
