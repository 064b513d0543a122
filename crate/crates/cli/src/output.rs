//! Structured outputs: plot-ready CSVs and the reproducibility manifest.
//! Every artifact is written atomically (temp file in the target directory,
//! then rename), so a crashed run never leaves a partial file behind.

use std::path::Path;

use cavity_tempo::engine::Trajectory;
use cavity_tempo::response::Spectrum;
use cavity_tempo::units::FS_PER_INV_EV;
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::config::JobConfig;
use crate::error::{CliError, Result};

/// Reproducibility record written alongside every output file set.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub job: String,
    /// Normalized config echo: all energies in eV, times in eV^-1.
    pub config: JobConfig,
    pub wall_clock_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_bond_dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cumulative_discarded_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equilibration_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<SweepEntry>>,
}

/// Per-entry sweep outcome; failures are recorded, not silently dropped.
#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub alpha_hrf: f64,
    pub g_ev: f64,
    pub kappa_ev: f64,
    pub dir: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub splitting_ev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub franck_condon: Option<f64>,
}

/// Metadata sidecar for a spectrum CSV.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumMeta {
    pub drive: String,
    pub alpha_hrf: f64,
    pub g_ev: f64,
    pub kappa_ev: f64,
    pub gamma_ev: f64,
    pub temperature_k: f64,
    pub dt_ev_inv: f64,
    pub svd_cutoff: f64,
    pub pad_to: usize,
    pub equilibration_residual: f64,
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |source: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().map(|n| n.to_string_lossy()).unwrap_or_default()
    ));
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

/// Fixed-width scientific notation: full f64 round-trip precision and a
/// byte-identical rendering on every run.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_trajectory_csv(path: &Path, traj: &Trajectory) -> Result<()> {
    let mut out = String::from(
        "t_ev_inv,t_fs,P_e,n_cav,re_coh,im_coh,trace,max_bond_dim,discarded_weight\n",
    );
    for i in 0..traj.len() {
        let t = traj.times[i];
        let coh = traj.coherence[i];
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            num(t),
            num(t * FS_PER_INV_EV),
            num(traj.p_e[i]),
            num(traj.n_cav[i]),
            num(coh.re),
            num(coh.im),
            num(traj.trace[i].re),
            traj.max_bond[i],
            num(traj.discarded_weight[i]),
        ));
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_spectrum_csv(path: &Path, spec: &Spectrum) -> Result<()> {
    let mut out = String::from("omega_ev,A\n");
    for (w, a) in spec.omega.iter().zip(&spec.a_vals) {
        out.push_str(&format!("{},{}\n", num(*w), num(*a)));
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_corr_csv(path: &Path, times: &[f64], values: &[C64]) -> Result<()> {
    let mut out = String::from("t_ev_inv,re_c_ev2,im_c_ev2\n");
    for (t, c) in times.iter().zip(values) {
        out.push_str(&format!("{},{},{}\n", num(*t), num(c.re), num(c.im)));
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_kernel_csv(path: &Path, eta: &[C64]) -> Result<()> {
    let mut out = String::from("delta,re_eta,im_eta\n");
    for (delta, e) in eta.iter().enumerate() {
        out.push_str(&format!("{delta},{},{}\n", num(e.re), num(e.im)));
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_summary_csv(path: &Path, entries: &[SweepEntry]) -> Result<()> {
    let mut out = String::from("alpha_hrf,g_mev,kappa_mev,splitting_ev,franck_condon\n");
    for e in entries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            num(e.alpha_hrf),
            num(e.g_ev * 1e3),
            num(e.kappa_ev * 1e3),
            e.splitting_ev.map(num).unwrap_or_default(),
            e.franck_condon.map(num).unwrap_or_default(),
        ));
    }
    atomic_write(path, out.as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("serializing {}: {e}", path.display())))?;
    atomic_write(path, format!("{text}\n").as_bytes())
}
