//! Job configuration: a single TOML file with flat sections `system`,
//! `bath`, `engine`, `job`. Every physical key carries an explicit unit
//! suffix; couplings and rates are given in meV, transition energies in eV,
//! and the timestep in eV^-1 or fs. Unknown keys are rejected, and missing
//! required keys are reported exhaustively in one pass.

use std::path::{Path, PathBuf};

use cavity_tempo::units::FS_PER_INV_EV;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

const MEV: f64 = 1e-3;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: Option<RawSystem>,
    bath: Option<RawBath>,
    engine: Option<RawEngine>,
    job: Option<RawJob>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    omega_e_ev: Option<f64>,
    omega_c_ev: Option<f64>,
    g_mev: Option<f64>,
    gamma_mev: Option<f64>,
    kappa_mev: Option<f64>,
    rotating_frame: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    mode_file: Option<String>,
    sigma_mev: Option<f64>,
    temperature_k: Option<f64>,
    alpha_hrf: Option<AlphaSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AlphaSpec {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEngine {
    dt_ev_inv: Option<f64>,
    dt_fs: Option<f64>,
    svd_cutoff: Option<f64>,
    n_steps: Option<usize>,
    memory_cutoff: Option<usize>,
    max_bond_dim: Option<usize>,
    pad_to: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJob {
    drive: Option<String>,
    out_dir: Option<String>,
    g_kappa_grid_mev: Option<Vec<[f64; 2]>>,
    corr_t_max_ev_inv: Option<f64>,
    corr_points: Option<usize>,
    kernel_delta_max: Option<usize>,
}

/// Fully validated job description. All energies are in eV, times in eV^-1.
#[derive(Debug, Clone, Serialize)]
pub struct JobConfig {
    pub system: SystemSection,
    pub bath: BathSection,
    pub engine: EngineSection,
    pub job: JobSection,
}

#[derive(Debug, Clone, Serialize)]
pub struct SystemSection {
    pub omega_e_ev: f64,
    /// None means "polaron-shifted resonance": omega_e minus the
    /// reorganization energy of the alpha-scaled density.
    pub omega_c_ev: Option<f64>,
    pub g_ev: f64,
    pub gamma_ev: f64,
    pub kappa_ev: f64,
    pub rotating_frame: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BathSection {
    pub mode_file: PathBuf,
    /// Mode-file energies are meV when set (selected by the CLI flag).
    pub modes_in_mev: bool,
    /// Gaussian broadening width in eV; None selects the analytic
    /// delta-mode density.
    pub sigma_ev: Option<f64>,
    pub temperature_k: f64,
    pub alpha_hrf: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EngineSection {
    /// None defers to the coupling-keyed default at job time.
    pub dt_ev_inv: Option<f64>,
    pub svd_cutoff: f64,
    /// None defers to the per-job default horizon.
    pub n_steps: Option<usize>,
    pub memory_cutoff: Option<usize>,
    pub max_bond_dim: Option<usize>,
    pub pad_to: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct JobSection {
    pub drive: String,
    pub out_dir: Option<PathBuf>,
    /// Sweep grid of (g, kappa) pairs in eV; defaults to the system values.
    pub g_kappa_grid_ev: Vec<(f64, f64)>,
    pub corr_t_max_ev_inv: f64,
    pub corr_points: usize,
    pub kernel_delta_max: Option<usize>,
}

impl JobConfig {
    /// Timestep in eV^-1: the configured value, or the coupling-keyed
    /// default (5 up to 15 meV, 3 up to 50 meV, 2 up to 100 meV, 1 beyond).
    pub fn dt(&self) -> f64 {
        self.engine.dt_ev_inv.unwrap_or_else(|| {
            let g = self.system.g_ev;
            if g <= 0.015 + 1e-12 {
                5.0
            } else if g <= 0.050 + 1e-12 {
                3.0
            } else if g <= 0.100 + 1e-12 {
                2.0
            } else {
                1.0
            }
        })
    }
}

/// Parse and validate a config file. Referenced paths are resolved relative
/// to the config file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<JobConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let raw: RawConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve(raw, base)
}

fn resolve(raw: RawConfig, base: &Path) -> Result<JobConfig> {
    let mut missing = Vec::new();
    let system = raw.system.unwrap_or(RawSystem {
        omega_e_ev: None,
        omega_c_ev: None,
        g_mev: None,
        gamma_mev: None,
        kappa_mev: None,
        rotating_frame: None,
    });
    let bath = raw.bath.unwrap_or(RawBath {
        mode_file: None,
        sigma_mev: None,
        temperature_k: None,
        alpha_hrf: None,
    });
    let engine = raw.engine.unwrap_or(RawEngine {
        dt_ev_inv: None,
        dt_fs: None,
        svd_cutoff: None,
        n_steps: None,
        memory_cutoff: None,
        max_bond_dim: None,
        pad_to: None,
    });
    let job = raw.job.unwrap_or(RawJob {
        drive: None,
        out_dir: None,
        g_kappa_grid_mev: None,
        corr_t_max_ev_inv: None,
        corr_points: None,
        kernel_delta_max: None,
    });

    let omega_e_ev = require(system.omega_e_ev, "system.omega_e_ev", &mut missing);
    let g_mev = require(system.g_mev, "system.g_mev", &mut missing);
    let gamma_mev = require(system.gamma_mev, "system.gamma_mev", &mut missing);
    let kappa_mev = require(system.kappa_mev, "system.kappa_mev", &mut missing);
    let mode_file = require(bath.mode_file.clone(), "bath.mode_file", &mut missing);
    if !missing.is_empty() {
        return Err(CliError::MissingKeys(missing));
    }
    let (omega_e_ev, g_mev, gamma_mev, kappa_mev) = (
        omega_e_ev.unwrap(),
        g_mev.unwrap(),
        gamma_mev.unwrap(),
        kappa_mev.unwrap(),
    );
    let mode_file = base.join(mode_file.unwrap());
    if !mode_file.is_file() {
        return Err(CliError::Config(format!(
            "bath.mode_file does not exist: {}",
            mode_file.display()
        )));
    }

    let dt_ev_inv = match (engine.dt_ev_inv, engine.dt_fs) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "engine.dt_ev_inv and engine.dt_fs are mutually exclusive".into(),
            ))
        }
        (Some(v), None) => Some(v),
        (None, Some(fs)) => Some(fs / FS_PER_INV_EV),
        (None, None) => None,
    };
    if let Some(dt) = dt_ev_inv {
        check_positive(dt, "engine timestep")?;
    }
    let svd_cutoff = engine.svd_cutoff.unwrap_or(1e-6);
    if !(0.0..=1.0).contains(&svd_cutoff) {
        return Err(CliError::Config(format!(
            "engine.svd_cutoff must lie in [0, 1], got {svd_cutoff}"
        )));
    }
    let pad_to = engine.pad_to.unwrap_or(1 << 15);
    if !pad_to.is_power_of_two() {
        return Err(CliError::Config(format!(
            "engine.pad_to must be a power of two, got {pad_to}"
        )));
    }

    let alpha_hrf = match bath.alpha_hrf {
        None => vec![1.0],
        Some(AlphaSpec::One(a)) => vec![a],
        Some(AlphaSpec::Many(v)) => {
            if v.is_empty() {
                return Err(CliError::Config("bath.alpha_hrf list is empty".into()));
            }
            v
        }
    };
    for &a in &alpha_hrf {
        if !a.is_finite() || a < 0.0 {
            return Err(CliError::Config(format!(
                "bath.alpha_hrf entries must be finite and >= 0, got {a}"
            )));
        }
    }
    if let Some(sigma) = bath.sigma_mev {
        check_positive(sigma, "bath.sigma_mev")?;
    }
    let temperature_k = bath.temperature_k.unwrap_or(4.0);
    check_positive(temperature_k, "bath.temperature_k")?;

    check_nonnegative(g_mev, "system.g_mev")?;
    check_nonnegative(gamma_mev, "system.gamma_mev")?;
    check_nonnegative(kappa_mev, "system.kappa_mev")?;

    let drive = job.drive.unwrap_or_else(|| "dipole".into());
    if drive != "dipole" && drive != "cavity" {
        return Err(CliError::Config(format!(
            "job.drive must be \"dipole\" or \"cavity\", got \"{drive}\""
        )));
    }
    let g_kappa_grid_ev = match job.g_kappa_grid_mev {
        None => vec![(g_mev * MEV, kappa_mev * MEV)],
        Some(pairs) => {
            if pairs.is_empty() {
                return Err(CliError::Config("job.g_kappa_grid_mev is empty".into()));
            }
            pairs
                .iter()
                .map(|p| (p[0] * MEV, p[1] * MEV))
                .collect()
        }
    };
    let corr_t_max_ev_inv = job.corr_t_max_ev_inv.unwrap_or(200.0);
    check_positive(corr_t_max_ev_inv, "job.corr_t_max_ev_inv")?;
    let corr_points = job.corr_points.unwrap_or(400);
    if corr_points < 2 {
        return Err(CliError::Config(format!(
            "job.corr_points must be at least 2, got {corr_points}"
        )));
    }

    Ok(JobConfig {
        system: SystemSection {
            omega_e_ev,
            omega_c_ev: system.omega_c_ev,
            g_ev: g_mev * MEV,
            gamma_ev: gamma_mev * MEV,
            kappa_ev: kappa_mev * MEV,
            rotating_frame: system.rotating_frame.unwrap_or(true),
        },
        bath: BathSection {
            mode_file,
            modes_in_mev: false,
            sigma_ev: bath.sigma_mev.map(|s| s * MEV),
            temperature_k,
            alpha_hrf,
        },
        engine: EngineSection {
            dt_ev_inv,
            svd_cutoff,
            n_steps: engine.n_steps,
            memory_cutoff: engine.memory_cutoff,
            max_bond_dim: engine.max_bond_dim,
            pad_to,
        },
        job: JobSection {
            drive,
            out_dir: job.out_dir.map(|d| base.join(d)),
            g_kappa_grid_ev,
            corr_t_max_ev_inv,
            corr_points,
            kernel_delta_max: job.kernel_delta_max,
        },
    })
}

fn require<T>(value: Option<T>, key: &str, missing: &mut Vec<String>) -> Option<T> {
    if value.is_none() {
        missing.push(key.to_string());
    }
    value
}

fn check_positive(v: f64, what: &str) -> Result<()> {
    if !v.is_finite() || v <= 0.0 {
        return Err(CliError::Config(format!(
            "{what} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

fn check_nonnegative(v: f64, what: &str) -> Result<()> {
    if !v.is_finite() || v < 0.0 {
        return Err(CliError::Config(format!(
            "{what} must be finite and >= 0, got {v}"
        )));
    }
    Ok(())
}
