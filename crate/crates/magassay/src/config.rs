//! Plain-text run configuration: `key = value` lines, `#` comments, units
//! spelled out in the key names. Unknown keys are rejected outright — a
//! silently ignored typo in a physics parameter is the worst failure mode
//! this tool could have. An empty file yields the full default setup.

use crate::simulator::{AngleCoupling, SimConfig, SimError};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got `{text}`")]
    MissingEquals { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: cannot parse `{value}` as {expected} for `{key}`")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        expected: &'static str,
    },
    #[error("{field}: {reason}")]
    Invalid { field: String, reason: String },
}

impl From<SimError> for ConfigError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidConfig { field, reason } => ConfigError::Invalid {
                field: field.to_string(),
                reason,
            },
            other => ConfigError::Invalid {
                field: "simulator".to_string(),
                reason: other.to_string(),
            },
        }
    }
}

/// Analysis-stage parameters shared by the analyze and sweep commands.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Smoothing window in frames, odd.
    pub window_frames: u32,
    /// Correlation window in frames (99 = 3.3 s at 30 fps).
    pub corr_window_frames: u32,
    pub max_lag_frames: u32,
    pub theta_bin_deg: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window_frames: 21,
            corr_window_frames: 99,
            max_lag_frames: 30,
            theta_bin_deg: 15.0,
        }
    }
}

/// Sweep grid settings.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub b_list_mt: Vec<f64>,
    pub theta_list_deg: Vec<f64>,
    pub replicas: u32,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            b_list_mt: vec![0.0, 20.0, 40.0, 65.0, 90.0, 120.0],
            theta_list_deg: vec![90.0],
            replicas: 20,
        }
    }
}

/// Everything a run needs: simulator, analysis, and sweep settings.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssayConfig {
    pub sim: SimConfig,
    pub analysis: AnalysisConfig,
    pub sweep: SweepConfig,
}

const KEYS: &[&str] = &[
    "n_beads",
    "bead_spacing_nm",
    "bond_stiffness_n_per_m",
    "bend_stiffness_j",
    "drag_per_bead_kg_per_s",
    "propulsion_speed_nm_per_s",
    "temperature_kbt_j",
    "m0_a_per_m",
    "dipole_relative_sigma",
    "dipole_corr_time_s",
    "cross_section_area_m2",
    "b_mt",
    "field_angle_deg",
    "load_response",
    "angle_coupling",
    "angle_coupling_table",
    "marker_beads",
    "localization_sigma_nm",
    "pixel_pitch_nm",
    "quantize_pixels",
    "dt_internal_s",
    "frames",
    "seed",
    "window_frames",
    "corr_window_frames",
    "max_lag_frames",
    "theta_bin_deg",
    "b_list_mt",
    "theta_list_deg",
    "replicas",
];

fn parse_scalar<T: std::str::FromStr>(
    line: usize,
    key: &str,
    value: &str,
    expected: &'static str,
) -> Result<T, ConfigError> {
    value.parse::<T>().map_err(|_| ConfigError::BadValue {
        line,
        key: key.to_string(),
        value: value.to_string(),
        expected,
    })
}

fn parse_f64_list(line: usize, key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value
        .split(',')
        .map(|v| parse_scalar::<f64>(line, key, v.trim(), "a comma-separated list of numbers"))
        .collect()
}

fn parse_bool(line: usize, key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(ConfigError::BadValue {
            line,
            key: key.to_string(),
            value: value.to_string(),
            expected: "true or false",
        }),
    }
}

fn parse_coupling_table(line: usize, key: &str, value: &str) -> Result<Vec<(f64, f64)>, ConfigError> {
    value
        .split(',')
        .map(|entry| {
            let bad = || ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: entry.trim().to_string(),
                expected: "angle:coupling pairs like `0:0, 45:0.5, 90:1`",
            };
            let (t, g) = entry.split_once(':').ok_or_else(bad)?;
            let t = t.trim().parse::<f64>().map_err(|_| bad())?;
            let g = g.trim().parse::<f64>().map_err(|_| bad())?;
            Ok((t, g))
        })
        .collect()
}

/// Parse a configuration file. Defaults fill every key that is absent.
pub fn parse_config(text: &str) -> Result<AssayConfig, ConfigError> {
    let mut cfg = AssayConfig::default();
    let mut seen: Vec<String> = Vec::new();
    let mut coupling_kind: Option<(usize, String)> = None;
    let mut coupling_table: Option<(usize, Vec<(f64, f64)>)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or(ConfigError::MissingEquals {
            line,
            text: content.to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            });
        }
        if seen.iter().any(|s| s == key) {
            return Err(ConfigError::DuplicateKey {
                line,
                key: key.to_string(),
            });
        }
        seen.push(key.to_string());

        match key {
            "n_beads" => cfg.sim.n_beads = parse_scalar(line, key, value, "a positive integer")?,
            "bead_spacing_nm" => cfg.sim.bead_spacing_nm = parse_scalar(line, key, value, "a number")?,
            "bond_stiffness_n_per_m" => {
                cfg.sim.bond_stiffness_n_per_m = parse_scalar(line, key, value, "a number")?
            }
            "bend_stiffness_j" => cfg.sim.bend_stiffness_j = parse_scalar(line, key, value, "a number")?,
            "drag_per_bead_kg_per_s" => {
                cfg.sim.drag_per_bead_kg_per_s = parse_scalar(line, key, value, "a number")?
            }
            "propulsion_speed_nm_per_s" => {
                cfg.sim.propulsion_speed_nm_per_s = parse_scalar(line, key, value, "a number")?
            }
            "temperature_kbt_j" => {
                cfg.sim.temperature_kbt_j = parse_scalar(line, key, value, "a number")?
            }
            "m0_a_per_m" => cfg.sim.m0_a_per_m = parse_scalar(line, key, value, "a number")?,
            "dipole_relative_sigma" => {
                cfg.sim.dipole_relative_sigma = parse_scalar(line, key, value, "a number")?
            }
            "dipole_corr_time_s" => {
                cfg.sim.dipole_corr_time_s = parse_scalar(line, key, value, "a number")?
            }
            "cross_section_area_m2" => {
                cfg.sim.cross_section_area_m2 = parse_scalar(line, key, value, "a number")?
            }
            "b_mt" => cfg.sim.b_mt = parse_scalar(line, key, value, "a number")?,
            "field_angle_deg" => cfg.sim.field_angle_deg = parse_scalar(line, key, value, "a number")?,
            "load_response" => cfg.sim.load_response = parse_scalar(line, key, value, "a number")?,
            "angle_coupling" => coupling_kind = Some((line, value.to_string())),
            "angle_coupling_table" => {
                coupling_table = Some((line, parse_coupling_table(line, key, value)?))
            }
            "marker_beads" => {
                cfg.sim.marker_beads = value
                    .split(',')
                    .map(|v| parse_scalar::<usize>(line, key, v.trim(), "a list of bead indices"))
                    .collect::<Result<_, _>>()?
            }
            "localization_sigma_nm" => {
                cfg.sim.localization_sigma_nm = parse_scalar(line, key, value, "a number")?
            }
            "pixel_pitch_nm" => cfg.sim.pixel_pitch_nm = parse_scalar(line, key, value, "a number")?,
            "quantize_pixels" => cfg.sim.quantize_pixels = parse_bool(line, key, value)?,
            "dt_internal_s" => cfg.sim.dt_internal_s = parse_scalar(line, key, value, "a number")?,
            "frames" => cfg.sim.frames = parse_scalar(line, key, value, "a positive integer")?,
            "seed" => cfg.sim.seed = parse_scalar(line, key, value, "an unsigned integer")?,
            "window_frames" => {
                cfg.analysis.window_frames = parse_scalar(line, key, value, "a positive integer")?
            }
            "corr_window_frames" => {
                cfg.analysis.corr_window_frames = parse_scalar(line, key, value, "a positive integer")?
            }
            "max_lag_frames" => {
                cfg.analysis.max_lag_frames = parse_scalar(line, key, value, "a non-negative integer")?
            }
            "theta_bin_deg" => cfg.analysis.theta_bin_deg = parse_scalar(line, key, value, "a number")?,
            "b_list_mt" => cfg.sweep.b_list_mt = parse_f64_list(line, key, value)?,
            "theta_list_deg" => cfg.sweep.theta_list_deg = parse_f64_list(line, key, value)?,
            "replicas" => cfg.sweep.replicas = parse_scalar(line, key, value, "a positive integer")?,
            _ => unreachable!("key list is exhaustive"),
        }
    }

    match (coupling_kind, coupling_table) {
        (None, None) => {}
        (Some((_, kind)), None) if kind == "sin2" => cfg.sim.angle_coupling = AngleCoupling::Sin2,
        (Some((line, kind)), None) => {
            if kind == "table" {
                return Err(ConfigError::Invalid {
                    field: "angle_coupling".into(),
                    reason: "angle_coupling = table requires angle_coupling_table".into(),
                });
            }
            return Err(ConfigError::BadValue {
                line,
                key: "angle_coupling".into(),
                value: kind,
                expected: "`sin2` or `table`",
            });
        }
        (Some((line, kind)), Some((_, table))) => {
            if kind != "table" {
                return Err(ConfigError::BadValue {
                    line,
                    key: "angle_coupling".into(),
                    value: kind,
                    expected: "`table` when angle_coupling_table is given",
                });
            }
            cfg.sim.angle_coupling = AngleCoupling::Table(table);
        }
        (None, Some((line, _))) => {
            return Err(ConfigError::BadValue {
                line,
                key: "angle_coupling_table".into(),
                value: "…".into(),
                expected: "angle_coupling = table alongside the table",
            });
        }
    }

    validate_analysis(&cfg)?;
    cfg.sim.validate()?;
    Ok(cfg)
}

fn validate_analysis(cfg: &AssayConfig) -> Result<(), ConfigError> {
    let a = &cfg.analysis;
    if a.window_frames < 3 || a.window_frames % 2 == 0 {
        return Err(ConfigError::Invalid {
            field: "window_frames".into(),
            reason: format!("window must be odd and >= 3, got {}", a.window_frames),
        });
    }
    if a.corr_window_frames < 2 {
        return Err(ConfigError::Invalid {
            field: "corr_window_frames".into(),
            reason: "correlation window must be at least 2 frames".into(),
        });
    }
    if a.max_lag_frames >= a.corr_window_frames {
        return Err(ConfigError::Invalid {
            field: "max_lag_frames".into(),
            reason: format!(
                "max lag {} must be smaller than the correlation window {}",
                a.max_lag_frames, a.corr_window_frames
            ),
        });
    }
    if !(a.theta_bin_deg > 0.0 && a.theta_bin_deg.is_finite()) {
        return Err(ConfigError::Invalid {
            field: "theta_bin_deg".into(),
            reason: format!("bin width must be positive, got {}", a.theta_bin_deg),
        });
    }
    let s = &cfg.sweep;
    if s.b_list_mt.is_empty() || s.b_list_mt.iter().any(|b| !b.is_finite() || *b < 0.0) {
        return Err(ConfigError::Invalid {
            field: "b_list_mt".into(),
            reason: "flux list must be non-empty, finite, and non-negative".into(),
        });
    }
    if s.theta_list_deg.is_empty() || s.theta_list_deg.iter().any(|t| !t.is_finite()) {
        return Err(ConfigError::Invalid {
            field: "theta_list_deg".into(),
            reason: "angle list must be non-empty and finite".into(),
        });
    }
    if s.replicas == 0 {
        return Err(ConfigError::Invalid {
            field: "replicas".into(),
            reason: "need at least one replica".into(),
        });
    }
    Ok(())
}
