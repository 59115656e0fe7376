//! Physical estimates from intensity measurements: a weighted least-squares
//! parabola locates the intensity peak over flux density, the peak location
//! inverts to a dipole density, and the summary report chains that into a
//! per-monomer moment and interaction energy.

use crate::magnetics::{
    dipole_density_from_peak, dipole_interaction_energy, monomer_moment, MonomerGeometry,
};
use crate::units::FluxDensity;
use thiserror::Error;

/// Default angular bin width for angle profiles, degrees.
pub const DEFAULT_THETA_BIN_DEG: f64 = 15.0;

#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("peak fit needs at least 3 distinct flux values, got {0}")]
    TooFewPoints(usize),
    #[error("fitted curvature {gamma} is not concave; no interior maximum")]
    NotConcave { gamma: f64 },
    #[error("fitted peak {b_star_mt} mT is not positive")]
    PeakNotPositive { b_star_mt: f64 },
    #[error("sweep records contain non-finite values")]
    NonFiniteInput,
}

/// One cell of a field sweep: intensity of the parallel-displacement
/// cross-correlation at zero delay for a given flux density and field angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub b_mt: f64,
    pub theta_deg: f64,
    pub intensity_nm2: f64,
    pub stderr_nm2: f64,
    pub n_windows: usize,
}

/// Result of the parabola fit `I ≈ α + β·B + γ·B²` over B in mT.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakFit {
    pub b_star_mt: f64,
    pub m_hat_a_per_m: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Weighted RMS residual, nm².
    pub residual_nm2: f64,
}

/// One bin of an angle profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePoint {
    pub theta_deg: f64,
    pub intensity_nm2: f64,
    pub stderr_nm2: f64,
    pub n_records: usize,
}

/// Headline physical estimates chained from a peak fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryReport {
    pub b_star_mt: f64,
    pub m_a_per_m: f64,
    pub moment_a_m2: f64,
    pub moment_bohr: f64,
    pub interaction_j: f64,
}

/// Weighted least-squares parabola over the sweep's flux axis.
///
/// Weights are `1/stderr²` when every record carries a positive standard
/// error, uniform otherwise. The peak sits at `B* = −β/(2γ)` and inverts to
/// `M = B*/μ₀`.
pub fn fit_peak(records: &[SweepRecord]) -> Result<PeakFit, FitError> {
    if records
        .iter()
        .any(|r| !r.b_mt.is_finite() || !r.intensity_nm2.is_finite() || !r.stderr_nm2.is_finite())
    {
        return Err(FitError::NonFiniteInput);
    }
    let mut distinct: Vec<f64> = records.iter().map(|r| r.b_mt).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(FitError::TooFewPoints(distinct.len()));
    }

    let weighted = records.iter().all(|r| r.stderr_nm2 > 0.0);
    let mut s = [[0.0f64; 4]; 3];
    for r in records {
        let w = if weighted {
            1.0 / (r.stderr_nm2 * r.stderr_nm2)
        } else {
            1.0
        };
        let x = r.b_mt;
        let basis = [1.0, x, x * x];
        for (i, bi) in basis.iter().enumerate() {
            for (j, bj) in basis.iter().enumerate().skip(i) {
                s[i][j] += w * bi * bj;
            }
            s[i][3] += w * bi * r.intensity_nm2;
        }
    }
    // mirror the symmetric part
    for i in 0..3 {
        for j in 0..i {
            s[i][j] = s[j][i];
        }
    }

    let coeffs = solve3(s).ok_or(FitError::TooFewPoints(distinct.len()))?;
    let (alpha, beta, gamma) = (coeffs[0], coeffs[1], coeffs[2]);
    if gamma >= 0.0 {
        return Err(FitError::NotConcave { gamma });
    }
    let b_star_mt = -beta / (2.0 * gamma);
    if b_star_mt <= 0.0 {
        return Err(FitError::PeakNotPositive { b_star_mt });
    }

    let mut wsum = 0.0;
    let mut rss = 0.0;
    for r in records {
        let w = if weighted {
            1.0 / (r.stderr_nm2 * r.stderr_nm2)
        } else {
            1.0
        };
        let fit = alpha + beta * r.b_mt + gamma * r.b_mt * r.b_mt;
        rss += w * (r.intensity_nm2 - fit).powi(2);
        wsum += w;
    }

    let b_star = FluxDensity::from_millitesla(b_star_mt).expect("positive finite peak");
    Ok(PeakFit {
        b_star_mt,
        m_hat_a_per_m: dipole_density_from_peak(b_star).a_per_m(),
        alpha,
        beta,
        gamma,
        residual_nm2: (rss / wsum).sqrt(),
    })
}

/// Solve a 3x3 system given as an augmented matrix, by Gaussian elimination
/// with partial pivoting. Returns `None` for a singular system.
fn solve3(mut m: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&a, &b| {
            m[a][col]
                .abs()
                .partial_cmp(&m[b][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, pivot);
        for row in (col + 1)..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut out = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = m[row][3];
        for k in (row + 1)..3 {
            acc -= m[row][k] * out[k];
        }
        out[row] = acc / m[row][row];
    }
    Some(out)
}

/// Group sweep records at fixed flux by field angle bins and average each
/// bin. Bin centers are multiples of `bin_deg`; output is sorted by angle.
pub fn angle_profile(records: &[SweepRecord], bin_deg: f64) -> Vec<AnglePoint> {
    let mut bins: Vec<(i64, Vec<&SweepRecord>)> = Vec::new();
    for r in records {
        let idx = ((r.theta_deg / bin_deg) + 0.5).floor() as i64;
        match bins.iter_mut().find(|(i, _)| *i == idx) {
            Some((_, v)) => v.push(r),
            None => bins.push((idx, vec![r])),
        }
    }
    bins.sort_by_key(|(i, _)| *i);
    bins.into_iter()
        .map(|(idx, group)| {
            let n = group.len() as f64;
            let mean = group.iter().map(|r| r.intensity_nm2).sum::<f64>() / n;
            let var_sum = group.iter().map(|r| r.stderr_nm2 * r.stderr_nm2).sum::<f64>();
            AnglePoint {
                theta_deg: idx as f64 * bin_deg,
                intensity_nm2: mean,
                stderr_nm2: var_sum.sqrt() / n,
                n_records: group.len(),
            }
        })
        .collect()
}

/// Chain a peak fit into physical estimates for the given monomer geometry.
pub fn report(fit: &PeakFit, geometry: MonomerGeometry) -> SummaryReport {
    let m = dipole_density_from_peak(
        FluxDensity::from_millitesla(fit.b_star_mt).expect("fit produced a valid peak"),
    );
    let moment = monomer_moment(m, geometry);
    SummaryReport {
        b_star_mt: fit.b_star_mt,
        m_a_per_m: m.a_per_m(),
        moment_a_m2: moment.a_m2,
        moment_bohr: moment.bohr_magnetons,
        interaction_j: dipole_interaction_energy(m, geometry),
    }
}
