//! Acceptance suite: one test per headline claim, each printing a PASS
//! line with the measured numbers (visible with `--nocapture`).
//!
//! Run with `cargo test -p magassay --test acceptance`.

use magassay::correlation::{auto_correlation, cross_correlation, window_covariance, window_intensities};
use magassay::estimation::{angle_profile, fit_peak, report, SweepRecord};
use magassay::magnetics::{
    dipole_density_from_peak, dipole_interaction_energy, energy_density, monomer_moment,
    optimal_flux, tensile_stress, DipoleDensity, MonomerGeometry, MONOMER_DIAMETER_M,
};
use magassay::simulator::{
    self, cell_seed, dipole_step, forces, potential_energy_j, run_assay, sweep, AngleCoupling,
    SimConfig, SweepPlan,
};
use magassay::tracking::{
    centroid, decompose, marker_distance, smooth, IntensityGrid, MarkerTrack, TrackSample,
};
use magassay::units::{frames_to_seconds, FluxDensity, FrameClock, Vec2, MU_0};
use magassay::csvio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

fn rel_err(actual: f64, expected: f64) -> f64 {
    (actual - expected).abs() / expected.abs().max(f64::MIN_POSITIVE)
}

fn m_ref() -> DipoleDensity {
    DipoleDensity::new(5.2e4).unwrap()
}

fn geometry() -> MonomerGeometry {
    MonomerGeometry::sphere(MONOMER_DIAMETER_M).unwrap()
}

/// Pool window intensities of one marker pair over replicas of the default
/// run at the given flux.
fn pooled_intensity(
    base: &SimConfig,
    b_mt: f64,
    replicas: u32,
    pair: (usize, usize),
) -> (f64, f64) {
    let mut vals = Vec::new();
    for r in 0..replicas {
        let mut cfg = base.clone();
        cfg.b_mt = b_mt;
        cfg.seed = cell_seed(base.seed, b_mt, cfg.field_angle_deg, r);
        let tracks = run_assay(&cfg).unwrap();
        let d1 = decompose(&tracks[pair.0], &smooth(&tracks[pair.0], 21).unwrap()).unwrap();
        let d2 = decompose(&tracks[pair.1], &smooth(&tracks[pair.1], 21).unwrap()).unwrap();
        vals.extend(window_intensities(&d1, &d2, 99).unwrap());
    }
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Criterion 1 — the closed-form estimation chain reproduces the headline
/// dipole numbers from a 65 mT peak within 5%.
#[test]
fn criterion_1_closed_form_chain() {
    let b_star = FluxDensity::from_millitesla(65.0).unwrap();
    let m_hat = dipole_density_from_peak(b_star);
    assert!(rel_err(m_hat.a_per_m(), 5.2e4) < 0.05);
    assert!(rel_err(m_hat.a_per_m(), 5.17254e4) < 1e-4);

    let moment = monomer_moment(m_hat, geometry());
    assert!(rel_err(moment.a_m2, 1.7e-21) < 0.05);
    assert!(
        moment.bohr_magnetons > 185.0 && moment.bohr_magnetons < 190.0,
        "{} Bohr magnetons",
        moment.bohr_magnetons
    );

    let interaction = dipole_interaction_energy(m_hat, geometry());
    assert!(rel_err(interaction, 1.1e-22) < 0.05);

    println!(
        "PASS criterion 1: M = {:.4e} A/m, moment = {:.4e} A m^2 = {:.1} muB, interaction = {:.4e} J",
        m_hat.a_per_m(),
        moment.a_m2,
        moment.bohr_magnetons,
        interaction
    );
}

/// Criterion 2 — the stress peak sits at mu0*M on a fine grid for random
/// dipole densities, and the parabola fit inverts exact stress samples to
/// machine precision.
#[test]
fn criterion_2_peak_identity() {
    let mut rng = ChaCha12Rng::seed_from_u64(20240);
    let grid_points = 10_000usize;
    for _ in 0..100 {
        let u: f64 = rng.random();
        let m_val = (1.0e3f64.ln() + u * (1.0e6f64 / 1.0e3).ln()).exp();
        let m = DipoleDensity::new(m_val).unwrap();
        let b_max = 2.0 * MU_0 * m_val;
        let step = b_max / (grid_points - 1) as f64;
        let mut best = (0usize, f64::MIN);
        for i in 0..grid_points {
            let s = tensile_stress(m, FluxDensity::from_tesla(step * i as f64).unwrap());
            if s > best.1 {
                best = (i, s);
            }
        }
        let b_best = step * best.0 as f64;
        assert!(
            (b_best - MU_0 * m_val).abs() <= step,
            "M = {m_val}: argmax {b_best} vs {}",
            MU_0 * m_val
        );

        // exact stress samples invert through the parabola fit
        let records: Vec<SweepRecord> = [0.3, 0.6, 0.9, 1.2, 1.5]
            .iter()
            .map(|&frac| {
                let b_t = frac * MU_0 * m_val;
                SweepRecord {
                    b_mt: b_t * 1e3,
                    theta_deg: 90.0,
                    intensity_nm2: 0.42 * tensile_stress(m, FluxDensity::from_tesla(b_t).unwrap()),
                    stderr_nm2: 0.0,
                    n_windows: 1,
                }
            })
            .collect();
        let fit = fit_peak(&records).unwrap();
        assert!(
            rel_err(fit.m_hat_a_per_m, m_val) < 1e-6,
            "M = {m_val} recovered as {}",
            fit.m_hat_a_per_m
        );
    }
    println!("PASS criterion 2: argmax within one grid step and fit inversion < 1e-6 for 100 random M");
}

/// Criterion 3 — the default end-to-end sweep reproduces the intensity
/// peak location within 15%.
#[test]
fn criterion_3_sweep_peak_location() {
    let config = SimConfig::default();
    let plan = SweepPlan::default();
    assert_eq!(plan.replicas, 20);
    assert_eq!(config.frames, 300); // 10 s per run

    let outcome = sweep(&config, &plan).unwrap();
    assert!(outcome.failures.is_empty());

    // monotone rise below the peak: 40 mT significantly above 0 mT
    let at = |b: f64| {
        outcome
            .records
            .iter()
            .find(|r| r.b_mt == b)
            .expect("cell present")
    };
    let (r0, r40) = (at(0.0), at(40.0));
    let z = (r40.intensity_nm2 - r0.intensity_nm2)
        / (r0.stderr_nm2.powi(2) + r40.stderr_nm2.powi(2)).sqrt();
    assert!(z >= 3.0, "I(40) - I(0) is only {z:.1} sigma");

    let fit = fit_peak(&outcome.records).unwrap();
    let target = 65.3;
    assert!(
        (fit.b_star_mt - target).abs() <= 0.15 * target,
        "B* = {} mT outside +-15% of {target}",
        fit.b_star_mt
    );
    println!(
        "PASS criterion 3: fitted B* = {:.2} mT (target {target} +- 15%), M_hat = {:.3e} A/m, I(40) - I(0) at {z:.1} sigma",
        fit.b_star_mt, fit.m_hat_a_per_m
    );
}

/// Criterion 4 — intensity at 65 mT beats 0 mT with >= 3 sigma, and the
/// adjacent (0.8 um) and distant (1.8 um) pairs agree within 20%.
#[test]
fn criterion_4_field_enhancement_and_distance_invariance() {
    let base = SimConfig::default();
    let (i0, se0) = pooled_intensity(&base, 0.0, 20, (0, 1));
    let (i65, se65) = pooled_intensity(&base, 65.0, 20, (0, 1));
    let z = (i65 - i0) / (se0 * se0 + se65 * se65).sqrt();
    assert!(z >= 3.0, "enhancement {i0} -> {i65} is only {z:.1} sigma");

    // distance invariance judged on the mechanics alone: localization
    // noise off, same replicas for both pairs
    let mut quiet = base.clone();
    quiet.localization_sigma_nm = 0.0;
    let (i12, _) = pooled_intensity(&quiet, 65.0, 24, (0, 1));
    let (i13, _) = pooled_intensity(&quiet, 65.0, 24, (0, 2));
    let rel = (i13 - i12).abs() / i12.max(i13);
    assert!(rel < 0.20, "pair intensities {i12:.1} vs {i13:.1}: {:.1}%", rel * 100.0);

    println!(
        "PASS criterion 4: I(65) = {i65:.0} vs I(0) = {i0:.0} nm^2 ({z:.1} sigma); 0.8 um vs 1.8 um pairs differ {:.1}%",
        rel * 100.0
    );
}

/// Criterion 5 — with g = sin^2, the angle profile at 65 mT rises
/// monotonically from 0 to 90 degrees with >= 3 sigma between extremes.
#[test]
fn criterion_5_angle_profile() {
    let config = SimConfig::default();
    let plan = SweepPlan {
        b_list_mt: vec![65.0],
        theta_list_deg: vec![0.0, 45.0, 90.0],
        replicas: 20,
        ..SweepPlan::default()
    };
    let outcome = sweep(&config, &plan).unwrap();
    assert!(outcome.failures.is_empty());
    let profile = angle_profile(&outcome.records, 15.0);
    assert_eq!(profile.len(), 3);
    assert!(profile[0].intensity_nm2 < profile[1].intensity_nm2);
    assert!(profile[1].intensity_nm2 < profile[2].intensity_nm2);
    let z = (profile[2].intensity_nm2 - profile[0].intensity_nm2)
        / (profile[0].stderr_nm2.powi(2) + profile[2].stderr_nm2.powi(2)).sqrt();
    assert!(z >= 3.0, "extremes separated by only {z:.1} sigma");
    println!(
        "PASS criterion 5: I(0) = {:.0} < I(45) = {:.0} < I(90) = {:.0} nm^2 ({z:.1} sigma extremes)",
        profile[0].intensity_nm2, profile[1].intensity_nm2, profile[2].intensity_nm2
    );
}

/// Criterion 6 — physics property suite: free-bead diffusion obeys
/// MSD = 4Dt within 5%, conservative forces match minus the potential
/// gradient within 1e-6, and the dipole factor reaches its stationary
/// variance within 5%.
#[test]
fn criterion_6_physics_properties() {
    // (a) fluctuation-dissipation: free bead, no forces
    let config = SimConfig {
        n_beads: 1,
        marker_beads: vec![0],
        propulsion_speed_nm_per_s: 0.0,
        load_response: 0.0,
        b_mt: 0.0,
        localization_sigma_nm: 0.0,
        seed: 61,
        ..SimConfig::default()
    };
    let d_nm2_per_s = config.temperature_kbt_j / config.drag_per_bead_kg_per_s * 1e18;
    let dt = config.dt_internal_s;
    let (n_replicas, n_steps) = (4000usize, 120usize);
    let mut msd_half = 0.0;
    let mut msd_full = 0.0;
    for r in 0..n_replicas {
        let mut cfg = config.clone();
        cfg.seed = cell_seed(config.seed, 0.0, 0.0, r as u32);
        let mut state = simulator::init(&cfg).unwrap();
        let origin = state.positions_nm[0];
        for step_i in 0..n_steps {
            simulator::step(&mut state, &cfg, dt).unwrap();
            if step_i + 1 == n_steps / 2 {
                msd_half += (state.positions_nm[0] - origin).norm_sq();
            }
        }
        msd_full += (state.positions_nm[0] - origin).norm_sq();
    }
    msd_half /= n_replicas as f64;
    msd_full /= n_replicas as f64;
    let expect_half = 4.0 * d_nm2_per_s * (n_steps / 2) as f64 * dt;
    let expect_full = 4.0 * d_nm2_per_s * n_steps as f64 * dt;
    assert!(rel_err(msd_half, expect_half) < 0.05, "{msd_half} vs {expect_half}");
    assert!(rel_err(msd_full, expect_full) < 0.05, "{msd_full} vs {expect_full}");

    // (b) conservative forces match -grad(U) by central differences; the
    // coupling is held uniform so the magnetic bond tension is an exact
    // gradient
    let fd_config = SimConfig {
        propulsion_speed_nm_per_s: 0.0,
        load_response: 0.0,
        angle_coupling: AngleCoupling::Table(vec![(0.0, 1.0), (90.0, 1.0)]),
        b_mt: 65.0,
        ..SimConfig::default()
    };
    let mut state = simulator::init(&fd_config).unwrap();
    for (i, p) in state.positions_nm.iter_mut().enumerate() {
        let t = i as f64;
        p.x += 6.0 * (0.9 * t).sin();
        p.y += 9.0 * (0.5 * t).cos();
    }
    state.eta = 0.25;
    let analytic = forces(&state, &fd_config);
    let f_scale = analytic.iter().map(|f| f.norm()).fold(0.0f64, f64::max);
    let h = 1e-4; // nm
    for bead in 0..fd_config.n_beads {
        for axis in 0..2 {
            let mut plus = state.clone();
            let mut minus = state.clone();
            if axis == 0 {
                plus.positions_nm[bead].x += h;
                minus.positions_nm[bead].x -= h;
            } else {
                plus.positions_nm[bead].y += h;
                minus.positions_nm[bead].y -= h;
            }
            let fd = -(potential_energy_j(&plus, &fd_config) - potential_energy_j(&minus, &fd_config))
                / (2.0 * h * 1e-9);
            let got = if axis == 0 { analytic[bead].x } else { analytic[bead].y };
            assert!(
                (fd - got).abs() <= 1e-6 * f_scale,
                "bead {bead} axis {axis}: fd {fd:.6e} vs force {got:.6e}"
            );
        }
    }

    // (c) stationary variance of the dipole factor over 1e6 steps
    let ou_config = SimConfig {
        seed: 600,
        ..SimConfig::default()
    };
    let mut state = simulator::init(&ou_config).unwrap();
    let burn_in = (10.0 * ou_config.dipole_corr_time_s / dt) as usize;
    for _ in 0..burn_in {
        dipole_step(&mut state, &ou_config, dt);
    }
    let n = 1_000_000usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let eta = dipole_step(&mut state, &ou_config, dt);
        sum += eta;
        sum_sq += eta * eta;
    }
    let mean = sum / n as f64;
    let var = sum_sq / n as f64 - mean * mean;
    let sigma_sq = ou_config.dipole_relative_sigma.powi(2);
    assert!(rel_err(var, sigma_sq) < 0.05, "var {var} vs {sigma_sq}");

    println!(
        "PASS criterion 6: MSD/4Dt = {:.3}, force-gradient residual <= 1e-6, eta variance {:.4} vs {sigma_sq}",
        msd_full / expect_full,
        var
    );
}

/// Criterion 7 — analysis property suite on simulated data plus the
/// hand-computed examples.
#[test]
fn criterion_7_analysis_properties() {
    let config = SimConfig {
        seed: 7,
        ..SimConfig::default()
    };
    let tracks = run_assay(&config).unwrap();
    let clock = FrameClock::default();

    // Pythagorean identity on every simulated marker and frame
    for track in &tracks {
        let smoothed = smooth(track, 21).unwrap();
        let series = decompose(track, &smoothed).unwrap();
        for s in series.samples() {
            let actual = track.position_at(s.frame).unwrap();
            let reference = smoothed
                .samples()
                .iter()
                .find(|x| x.frame == s.frame)
                .unwrap()
                .pos;
            let lhs = s.parallel_nm * s.parallel_nm + s.perp_nm * s.perp_nm;
            let rhs = (actual - reference).norm_sq();
            assert!(
                (lhs - rhs).abs() <= 1e-9 * rhs.max(1e-30),
                "frame {}: {lhs} vs {rhs}",
                s.frame
            );
        }
    }

    // C_ab(tau) = C_ba(-tau) and autocorrelation peak at zero delay
    let d: Vec<_> = tracks
        .iter()
        .map(|t| decompose(t, &smooth(t, 21).unwrap()).unwrap())
        .collect();
    let ab = cross_correlation(&d[0], &d[1], 20, 99, &clock).unwrap();
    let ba = cross_correlation(&d[1], &d[0], 20, 99, &clock).unwrap();
    let scale = ab
        .points()
        .iter()
        .map(|p| p.value_nm2.abs())
        .fold(0.0f64, f64::max);
    for (p, q) in ab.points().iter().zip(ba.points().iter().rev()) {
        assert!((p.value_nm2 - q.value_nm2).abs() <= 1e-12 * scale.max(1.0));
        assert!((p.delay_s + q.delay_s).abs() < 1e-12);
    }
    for series in &d {
        let auto = auto_correlation(series, 30, 99, &clock).unwrap();
        let c0 = auto.intensity_nm2();
        for p in auto.points() {
            assert!(c0 >= p.value_nm2.abs() - 1e-12 * c0.abs().max(1.0));
        }
    }

    // smoothing linearity and constant-track fixpoint
    let mk = |pts: &[(f64, f64)]| {
        MarkerTrack::new(
            "p1",
            pts.iter()
                .enumerate()
                .map(|(i, &(x, y))| TrackSample {
                    frame: i as u32,
                    pos: Vec2::new(x, y),
                })
                .collect(),
        )
        .unwrap()
    };
    let constant = mk(&[(5.0, 5.0); 25]);
    for s in smooth(&constant, 21).unwrap().samples() {
        assert_eq!(s.pos, Vec2::new(5.0, 5.0));
    }
    let t1: Vec<(f64, f64)> = (0..30).map(|i| ((i * i) as f64, (3 * i) as f64)).collect();
    let t2: Vec<(f64, f64)> = (0..30).map(|i| ((i % 5) as f64, (30 - i) as f64)).collect();
    let combo: Vec<(f64, f64)> = t1
        .iter()
        .zip(&t2)
        .map(|(a, b)| (2.0 * a.0 - 0.5 * b.0, 2.0 * a.1 - 0.5 * b.1))
        .collect();
    let (s1, s2, sc) = (
        smooth(&mk(&t1), 21).unwrap(),
        smooth(&mk(&t2), 21).unwrap(),
        smooth(&mk(&combo), 21).unwrap(),
    );
    for i in 0..sc.len() {
        let want = s1.samples()[i].pos * 2.0 - s2.samples()[i].pos * 0.5;
        assert!((sc.samples()[i].pos - want).norm() < 1e-9);
    }

    // hand-computed examples, exactly as stated
    assert!((frames_to_seconds(21, &clock) - 0.7).abs() < 1e-12);
    assert!((frames_to_seconds(99, &clock) - 3.3).abs() < 1e-12);

    let tiny = mk(&[(0.0, 0.0), (0.0, 0.0), (3.0, 0.0)]);
    assert_eq!(smooth(&tiny, 3).unwrap().samples()[0].pos.x, 1.0);

    let a = [1.0, -1.0, 1.0, -1.0];
    let b = [-1.0, 1.0, -1.0, 1.0];
    assert_eq!(window_covariance(&a, &b, 0), -1.0);
    assert_eq!(window_covariance(&a, &b, 1), 1.0);

    let grid = IntensityGrid::new(60.0, vec![vec![1.0, 3.0, 0.0]]).unwrap();
    assert_eq!(centroid(&grid).unwrap(), Vec2::new(45.0, 0.0));

    let p1 = mk(&[(0.0, 0.0)]);
    let p2 = MarkerTrack::new(
        "p2",
        vec![TrackSample {
            frame: 0,
            pos: Vec2::new(3.0, 4.0),
        }],
    )
    .unwrap();
    assert_eq!(marker_distance(&p1, &p2, 0).unwrap(), 5.0);

    let f = |x: f64| 100.0 - (x - 65.0) * (x - 65.0);
    let records: Vec<SweepRecord> = [25.0, 65.0, 105.0]
        .iter()
        .map(|&b| SweepRecord {
            b_mt: b,
            theta_deg: 90.0,
            intensity_nm2: f(b),
            stderr_nm2: 0.0,
            n_windows: 1,
        })
        .collect();
    assert!(rel_err(fit_peak(&records).unwrap().b_star_mt, 65.0) < 1e-9);

    let peak_energy = energy_density(m_ref(), optimal_flux(m_ref()));
    assert!(rel_err(peak_energy, -1.69897e3) < 1e-4);
    let summary = report(&fit_peak(&records).unwrap(), geometry());
    assert!(summary.moment_bohr > 180.0 && summary.moment_bohr < 195.0);

    println!("PASS criterion 7: Pythagoras < 1e-9, correlation symmetry, smoothing laws, hand examples");
}

/// Criterion 8 — identical (config, seed) gives byte-identical CSVs across
/// reruns and across thread counts.
#[test]
fn criterion_8_determinism() {
    let config = SimConfig {
        frames: 150,
        seed: 88,
        ..SimConfig::default()
    };
    let clock = FrameClock::default();

    // trajectory bytes across reruns
    let csv_a = csvio::trajectory_to_csv(&run_assay(&config).unwrap(), &clock);
    let csv_b = csvio::trajectory_to_csv(&run_assay(&config).unwrap(), &clock);
    assert_eq!(csv_a, csv_b);

    // analysis bytes across reruns
    let analyze = || {
        let tracks = run_assay(&config).unwrap();
        let d: Vec<_> = tracks
            .iter()
            .map(|t| decompose(t, &smooth(t, 21).unwrap()).unwrap())
            .collect();
        let funcs = vec![
            cross_correlation(&d[0], &d[1], 30, 99, &clock).unwrap(),
            cross_correlation(&d[0], &d[2], 30, 99, &clock).unwrap(),
        ];
        (
            csvio::displacements_to_csv(&d),
            csvio::correlation_rows_to_csv(&csvio::correlation_rows(&funcs)),
        )
    };
    assert_eq!(analyze(), analyze());

    // sweep bytes across thread counts
    let plan = SweepPlan {
        b_list_mt: vec![0.0, 65.0],
        theta_list_deg: vec![90.0],
        replicas: 3,
        ..SweepPlan::default()
    };
    let run_in_pool = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| csvio::sweep_to_csv(&sweep(&config, &plan).unwrap().records))
    };
    let single = run_in_pool(1);
    let multi = run_in_pool(4);
    assert_eq!(single, multi);

    println!("PASS criterion 8: byte-identical trajectory, analysis, and sweep CSVs (1 vs 4 threads)");
}
