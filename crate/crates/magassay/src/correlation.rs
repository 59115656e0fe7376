//! Windowed auto- and cross-correlation of parallel displacement series.
//!
//! The estimator is the mean-removed, unnormalized covariance in nm²
//! (the ordinate of the assay's intensity curves), with divisor `N − |τ|`
//! and means taken per analysis window. A run is split into successive
//! non-overlapping windows (default 99 frames = 3.3 s); per-lag values are
//! averaged across windows and reported with the standard error over
//! windows.

use crate::tracking::DisplacementSeries;
use crate::units::FrameClock;
use thiserror::Error;

/// Default correlation window: 99 frames = 3.3 s at 30 fps.
pub const DEFAULT_CORR_WINDOW: u32 = 99;

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("series overlap of {overlap} frames is shorter than the {window}-frame window")]
    InsufficientOverlap { overlap: usize, window: u32 },
    #[error("max lag {max_lag} must be smaller than the window of {window} frames")]
    LagTooLarge { max_lag: u32, window: u32 },
    #[error("window must contain at least 2 frames")]
    WindowTooSmall,
    #[error("common frames of the two series are not contiguous")]
    MisalignedSeries,
}

/// One correlation lag: delay in seconds, covariance in nm², standard
/// error over analysis windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationPoint {
    pub delay_s: f64,
    pub value_nm2: f64,
    pub stderr_nm2: f64,
}

/// Lag-indexed correlation of a marker pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationFunction {
    pub pair: (String, String),
    pub window_s: f64,
    pub n_windows: usize,
    points: Vec<CorrelationPoint>,
}

impl CorrelationFunction {
    pub fn points(&self) -> &[CorrelationPoint] {
        &self.points
    }

    /// Value at zero delay — the intensity I in nm².
    pub fn intensity_nm2(&self) -> f64 {
        let mid = self.points.len() / 2;
        self.points[mid].value_nm2
    }

    pub fn intensity_stderr_nm2(&self) -> f64 {
        let mid = self.points.len() / 2;
        self.points[mid].stderr_nm2
    }
}

/// Zero-delay summary of a marker pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensity {
    pub value_nm2: f64,
    pub stderr_nm2: f64,
    pub n_windows: usize,
}

/// Covariance of one window at one lag, means taken within the window.
/// `a` and `b` must have equal length `N`; `|lag| < N`.
pub fn window_covariance(a: &[f64], b: &[f64], lag: i64) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let l = lag.unsigned_abs() as usize;
    debug_assert!(l < n);
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let m = n - l;
    let mut sum = 0.0;
    if lag >= 0 {
        for t in 0..m {
            sum += (a[t] - mean_a) * (b[t + l] - mean_b);
        }
    } else {
        for t in 0..m {
            sum += (a[t + l] - mean_a) * (b[t] - mean_b);
        }
    }
    sum / m as f64
}

/// Per-lag mean and standard error over successive non-overlapping windows.
#[derive(Debug, Clone, PartialEq)]
pub struct LagStats {
    pub lags: Vec<i64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_windows: usize,
}

/// Windowed cross-covariance of two aligned slices for lags
/// `-max_lag ..= +max_lag`.
pub fn windowed_covariance(
    a: &[f64],
    b: &[f64],
    max_lag: u32,
    window: u32,
) -> Result<LagStats, CorrelationError> {
    if window < 2 {
        return Err(CorrelationError::WindowTooSmall);
    }
    if max_lag >= window {
        return Err(CorrelationError::LagTooLarge { max_lag, window });
    }
    let n = a.len().min(b.len());
    let w = window as usize;
    if n < w {
        return Err(CorrelationError::InsufficientOverlap {
            overlap: n,
            window,
        });
    }
    let n_windows = n / w;
    let lags: Vec<i64> = (-(max_lag as i64)..=max_lag as i64).collect();
    let mut mean = vec![0.0; lags.len()];
    let mut m2 = vec![0.0; lags.len()];
    for win in 0..n_windows {
        let lo = win * w;
        let wa = &a[lo..lo + w];
        let wb = &b[lo..lo + w];
        for (k, &lag) in lags.iter().enumerate() {
            let c = window_covariance(wa, wb, lag);
            // Welford accumulation across windows.
            let count = (win + 1) as f64;
            let delta = c - mean[k];
            mean[k] += delta / count;
            m2[k] += delta * (c - mean[k]);
        }
    }
    let stderr = m2
        .iter()
        .map(|&m2k| {
            if n_windows > 1 {
                (m2k / (n_windows as f64 - 1.0)).sqrt() / (n_windows as f64).sqrt()
            } else {
                0.0
            }
        })
        .collect();
    Ok(LagStats {
        lags,
        mean,
        stderr,
        n_windows,
    })
}

/// Zero-delay covariance of every successive non-overlapping window, in
/// run order. Sweeps pool these across replicas before averaging.
pub fn window_intensities(
    a: &DisplacementSeries,
    b: &DisplacementSeries,
    window: u32,
) -> Result<Vec<f64>, CorrelationError> {
    if window < 2 {
        return Err(CorrelationError::WindowTooSmall);
    }
    let (xa, xb) = aligned_parallel(a, b)?;
    let w = window as usize;
    if xa.len() < w {
        return Err(CorrelationError::InsufficientOverlap {
            overlap: xa.len(),
            window,
        });
    }
    Ok((0..xa.len() / w)
        .map(|win| {
            let lo = win * w;
            window_covariance(&xa[lo..lo + w], &xb[lo..lo + w], 0)
        })
        .collect())
}

/// Align two displacement series on their common frames and return the
/// parallel components. The common frames must be contiguous.
fn aligned_parallel(
    a: &DisplacementSeries,
    b: &DisplacementSeries,
) -> Result<(Vec<f64>, Vec<f64>), CorrelationError> {
    let mut xa = Vec::new();
    let mut xb = Vec::new();
    let mut last_frame: Option<u32> = None;
    let mut ib = 0usize;
    let bs = b.samples();
    for sa in a.samples() {
        while ib < bs.len() && bs[ib].frame < sa.frame {
            ib += 1;
        }
        if ib < bs.len() && bs[ib].frame == sa.frame {
            if let Some(prev) = last_frame {
                if sa.frame != prev + 1 {
                    return Err(CorrelationError::MisalignedSeries);
                }
            }
            last_frame = Some(sa.frame);
            xa.push(sa.parallel_nm);
            xb.push(bs[ib].parallel_nm);
        }
    }
    Ok((xa, xb))
}

/// Cross-correlation of the parallel displacements of two markers.
pub fn cross_correlation(
    a: &DisplacementSeries,
    b: &DisplacementSeries,
    max_lag: u32,
    window: u32,
    clock: &FrameClock,
) -> Result<CorrelationFunction, CorrelationError> {
    let (xa, xb) = aligned_parallel(a, b)?;
    let stats = windowed_covariance(&xa, &xb, max_lag, window)?;
    let points = stats
        .lags
        .iter()
        .zip(stats.mean.iter().zip(&stats.stderr))
        .map(|(&lag, (&value, &stderr))| CorrelationPoint {
            delay_s: lag as f64 * clock.dt_frame_s,
            value_nm2: value,
            stderr_nm2: stderr,
        })
        .collect();
    Ok(CorrelationFunction {
        pair: (a.marker_id.clone(), b.marker_id.clone()),
        window_s: clock.seconds_for(window),
        n_windows: stats.n_windows,
        points,
    })
}

/// Auto-correlation of one marker's parallel displacement.
pub fn auto_correlation(
    a: &DisplacementSeries,
    max_lag: u32,
    window: u32,
    clock: &FrameClock,
) -> Result<CorrelationFunction, CorrelationError> {
    cross_correlation(a, a, max_lag, window, clock)
}

/// Zero-delay cross-correlation intensity of a marker pair, nm².
pub fn intensity(
    a: &DisplacementSeries,
    b: &DisplacementSeries,
    window: u32,
    clock: &FrameClock,
) -> Result<Intensity, CorrelationError> {
    let f = cross_correlation(a, b, 0, window, clock)?;
    Ok(Intensity {
        value_nm2: f.intensity_nm2(),
        stderr_nm2: f.intensity_stderr_nm2(),
        n_windows: f.n_windows,
    })
}
