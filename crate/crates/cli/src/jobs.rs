//! Job pipelines: dynamics, spectrum, correlation and kernel dumps, and the
//! alpha / (g, kappa) sweep. Each job owns an independent engine, writes its
//! CSVs plus a manifest, and is deterministic end to end: no RNG exists
//! anywhere in the pipeline, so identical inputs give bitwise-identical
//! outputs at any worker count.

use std::path::{Path, PathBuf};
use std::time::Instant;

use cavity_tempo::bath::{franck_condon, MemoryKernel, Mode, ModeList, SpectralDensity};
use cavity_tempo::engine::{EngineConfig, TempoEngine, Trajectory};
use cavity_tempo::response::{
    absorption_spectrum, find_splitting, response_function, suggested_response_steps, DriveMode,
};
use cavity_tempo::system::{DensityMatrix3, SystemParams};

use crate::config::JobConfig;
use crate::error::{CliError, Result};
use crate::output::{
    write_corr_csv, write_json, write_kernel_csv, write_spectrum_csv, write_summary_csv,
    write_trajectory_csv, RunManifest, SpectrumMeta, SweepEntry,
};

pub struct JobContext {
    pub cfg: JobConfig,
    pub out_dir: PathBuf,
    pub workers: usize,
}

impl JobContext {
    fn manifest(&self, job: &str, started: Instant) -> RunManifest {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            job: job.to_string(),
            config: self.cfg.clone(),
            wall_clock_s: started.elapsed().as_secs_f64(),
            max_bond_dim: None,
            cumulative_discarded_weight: None,
            equilibration_residual: None,
            entries: None,
        }
    }
}

/// Load the mode list, converting energies when the meV flag is set.
fn load_modes(cfg: &JobConfig) -> Result<ModeList> {
    let modes = ModeList::load(&cfg.bath.mode_file)?;
    if !cfg.bath.modes_in_mev {
        return Ok(modes);
    }
    Ok(ModeList::new(
        modes
            .entries()
            .iter()
            .map(|m| Mode {
                energy: m.energy * 1e-3,
                hrf: m.hrf,
            })
            .collect(),
    )?)
}

/// Build the alpha-scaled spectral density.
fn density(cfg: &JobConfig, alpha: f64) -> Result<SpectralDensity> {
    let modes = load_modes(cfg)?;
    let base = match cfg.bath.sigma_ev {
        Some(sigma) => SpectralDensity::broaden(&modes, sigma, None)?,
        None => SpectralDensity::analytic_test(&modes),
    };
    Ok(base.scale_hrf(alpha)?)
}

/// System parameters for one (g, kappa) point. An omitted cavity frequency
/// defaults to the polaron-shifted resonance omega_e - lambda(alpha).
fn system(cfg: &JobConfig, bath: &SpectralDensity, g: f64, kappa: f64) -> SystemParams {
    let omega_c = cfg
        .system
        .omega_c_ev
        .unwrap_or(cfg.system.omega_e_ev - bath.reorganization_energy());
    SystemParams {
        omega_e: cfg.system.omega_e_ev,
        omega_c,
        g,
        gamma: cfg.system.gamma_ev,
        kappa,
        rotating_frame: cfg.system.rotating_frame,
    }
}

fn engine_config(cfg: &JobConfig, n_steps: usize) -> EngineConfig {
    EngineConfig {
        dt: cfg.dt(),
        svd_cutoff: cfg.engine.svd_cutoff,
        memory_cutoff: cfg.engine.memory_cutoff,
        max_steps: n_steps,
        max_bond_dim: cfg.engine.max_bond_dim,
    }
}

/// Kernel long enough for the run: the effective window, or the full
/// history when no memory cutoff is set.
fn kernel_for(cfg: &JobConfig, bath: &SpectralDensity, n_steps: usize) -> Result<MemoryKernel> {
    let delta_max = match cfg.engine.memory_cutoff {
        Some(k) => k.min(n_steps.saturating_sub(1)),
        None => n_steps.saturating_sub(1),
    };
    Ok(bath.memory_kernel(cfg.bath.temperature_k, cfg.dt(), delta_max)?)
}

/// Single-alpha jobs take a scalar; a sweep list is rejected early so the
/// mistake is caught before hours of propagation.
fn single_alpha(cfg: &JobConfig) -> Result<f64> {
    match cfg.bath.alpha_hrf.as_slice() {
        [a] => Ok(*a),
        list => Err(CliError::Config(format!(
            "this job needs a scalar bath.alpha_hrf, got a list of {}",
            list.len()
        ))),
    }
}

fn drive_mode(cfg: &JobConfig) -> DriveMode {
    match cfg.job.drive.as_str() {
        "cavity" => DriveMode::Cavity,
        _ => DriveMode::Dipole,
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.display().to_string(),
        source,
    })
}

/// Default dynamics horizon: t_end >= 5 / Gamma.
fn dynamics_steps(cfg: &JobConfig) -> Result<usize> {
    if let Some(n) = cfg.engine.n_steps {
        return Ok(n);
    }
    if cfg.system.gamma_ev <= 0.0 {
        return Err(CliError::Config(
            "engine.n_steps is required when gamma is 0 (no decay sets the horizon)".into(),
        ));
    }
    Ok((5.0 / (cfg.system.gamma_ev * cfg.dt())).ceil() as usize)
}

pub fn run_dynamics(ctx: &JobContext) -> Result<()> {
    let started = Instant::now();
    let alpha = single_alpha(&ctx.cfg)?;
    let bath = density(&ctx.cfg, alpha)?;
    let n_steps = dynamics_steps(&ctx.cfg)?;
    let (g, kappa) = (ctx.cfg.system.g_ev, ctx.cfg.system.kappa_ev);
    let sys = system(&ctx.cfg, &bath, g, kappa);
    let kernel = kernel_for(&ctx.cfg, &bath, n_steps)?;
    let engine = TempoEngine::new(&sys, &engine_config(&ctx.cfg, n_steps), &kernel)?;
    let traj = engine.run_dynamics(&DensityMatrix3::excited())?;
    ensure_dir(&ctx.out_dir)?;
    write_trajectory_csv(&ctx.out_dir.join("dynamics.csv"), &traj)?;
    let mut manifest = ctx.manifest("dynamics", started);
    fill_trajectory_stats(&mut manifest, &traj);
    write_json(&ctx.out_dir.join("manifest.json"), &manifest)
}

fn fill_trajectory_stats(manifest: &mut RunManifest, traj: &Trajectory) {
    manifest.max_bond_dim = traj.max_bond.iter().copied().max();
    manifest.cumulative_discarded_weight = traj.discarded_weight.last().copied();
}

struct SpectrumRun {
    spectrum: cavity_tempo::response::Spectrum,
    meta: SpectrumMeta,
    max_bond_dim: usize,
    discarded: f64,
}

fn spectrum_run(cfg: &JobConfig, alpha: f64, g: f64, kappa: f64) -> Result<SpectrumRun> {
    let bath = density(cfg, alpha)?;
    let sys = system(cfg, &bath, g, kappa);
    let n_steps = match cfg.engine.n_steps {
        Some(n) => n,
        None => suggested_response_steps(&sys, cfg.dt())?,
    };
    let kernel = kernel_for(cfg, &bath, n_steps)?;
    let series = response_function(
        drive_mode(cfg),
        &engine_config(cfg, n_steps),
        &sys,
        &kernel,
        n_steps,
    )?;
    for w in &series.warnings {
        eprintln!("warning: {w}");
    }
    let spectrum = absorption_spectrum(&series, cfg.engine.pad_to)?;
    let meta = SpectrumMeta {
        drive: cfg.job.drive.clone(),
        alpha_hrf: alpha,
        g_ev: g,
        kappa_ev: kappa,
        gamma_ev: cfg.system.gamma_ev,
        temperature_k: cfg.bath.temperature_k,
        dt_ev_inv: cfg.dt(),
        svd_cutoff: cfg.engine.svd_cutoff,
        pad_to: cfg.engine.pad_to,
        equilibration_residual: series.residual,
    };
    Ok(SpectrumRun {
        spectrum,
        meta,
        max_bond_dim: series.max_bond_dim,
        discarded: series.cumulative_discarded_weight,
    })
}

pub fn run_spectrum(ctx: &JobContext) -> Result<()> {
    let started = Instant::now();
    let alpha = single_alpha(&ctx.cfg)?;
    let run = spectrum_run(
        &ctx.cfg,
        alpha,
        ctx.cfg.system.g_ev,
        ctx.cfg.system.kappa_ev,
    )?;
    ensure_dir(&ctx.out_dir)?;
    write_spectrum_csv(&ctx.out_dir.join("spectrum.csv"), &run.spectrum)?;
    write_json(&ctx.out_dir.join("spectrum.meta.json"), &run.meta)?;
    let mut manifest = ctx.manifest("spectrum", started);
    manifest.max_bond_dim = Some(run.max_bond_dim);
    manifest.cumulative_discarded_weight = Some(run.discarded);
    manifest.equilibration_residual = Some(run.meta.equilibration_residual);
    write_json(&ctx.out_dir.join("manifest.json"), &manifest)
}

pub fn run_corr(ctx: &JobContext) -> Result<()> {
    let started = Instant::now();
    let alpha = single_alpha(&ctx.cfg)?;
    let bath = density(&ctx.cfg, alpha)?;
    let eval = bath.correlation_eval(ctx.cfg.bath.temperature_k)?;
    let n = ctx.cfg.job.corr_points;
    let t_max = ctx.cfg.job.corr_t_max_ev_inv;
    let times: Vec<f64> = (0..n)
        .map(|i| t_max * i as f64 / (n - 1) as f64)
        .collect();
    let values: Vec<_> = times.iter().map(|&t| eval.eval(t)).collect();
    ensure_dir(&ctx.out_dir)?;
    write_corr_csv(&ctx.out_dir.join("corr.csv"), &times, &values)?;
    write_json(&ctx.out_dir.join("manifest.json"), &ctx.manifest("corr", started))
}

pub fn run_kernel(ctx: &JobContext) -> Result<()> {
    let started = Instant::now();
    let alpha = single_alpha(&ctx.cfg)?;
    let bath = density(&ctx.cfg, alpha)?;
    let delta_max = ctx
        .cfg
        .job
        .kernel_delta_max
        .or(ctx.cfg.engine.memory_cutoff)
        .unwrap_or(64);
    let kernel = bath.memory_kernel(ctx.cfg.bath.temperature_k, ctx.cfg.dt(), delta_max)?;
    ensure_dir(&ctx.out_dir)?;
    write_kernel_csv(&ctx.out_dir.join("kernel.csv"), kernel.eta())?;
    write_json(&ctx.out_dir.join("manifest.json"), &ctx.manifest("kernel", started))
}

fn entry_dir_name(alpha: f64, g_ev: f64, kappa_ev: f64) -> String {
    format!(
        "alpha{:.4}_g{:.4}mev_kappa{:.4}mev",
        alpha,
        g_ev * 1e3,
        kappa_ev * 1e3
    )
}

/// Fan out over the alpha list and (g, kappa) grid; entries run
/// concurrently on the worker pool and each owns an independent engine.
pub fn run_sweep(ctx: &JobContext) -> Result<()> {
    use rayon::prelude::*;

    let started = Instant::now();
    ensure_dir(&ctx.out_dir)?;
    // Franck-Condon uses the exact mode-list weight, not its broadened
    // quadrature image.
    let s_tot = load_modes(&ctx.cfg)?.total_hrf();
    let mut points = Vec::new();
    for &alpha in &ctx.cfg.bath.alpha_hrf {
        for &(g, kappa) in &ctx.cfg.job.g_kappa_grid_ev {
            points.push((alpha, g, kappa));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.workers)
        .build()
        .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
    let entries: Vec<SweepEntry> = pool.install(|| {
        points
            .par_iter()
            .map(|&(alpha, g, kappa)| sweep_entry(ctx, alpha, g, kappa, s_tot))
            .collect()
    });

    write_summary_csv(&ctx.out_dir.join("summary.csv"), &entries)?;
    let failed = entries.iter().filter(|e| e.status != "ok").count();
    let total = entries.len();
    let mut manifest = ctx.manifest("sweep", started);
    manifest.entries = Some(entries);
    write_json(&ctx.out_dir.join("manifest.json"), &manifest)?;
    if failed > 0 {
        return Err(CliError::SweepFailures { failed, total });
    }
    Ok(())
}

fn sweep_entry(ctx: &JobContext, alpha: f64, g: f64, kappa: f64, s_tot: f64) -> SweepEntry {
    let dir_name = entry_dir_name(alpha, g, kappa);
    let dir = ctx.out_dir.join(&dir_name);
    let mut entry = SweepEntry {
        alpha_hrf: alpha,
        g_ev: g,
        kappa_ev: kappa,
        dir: dir_name,
        status: "ok".into(),
        splitting_ev: None,
        franck_condon: Some(franck_condon(alpha, s_tot)),
    };
    let outcome = (|| -> Result<f64> {
        let run = spectrum_run(&ctx.cfg, alpha, g, kappa)?;
        ensure_dir(&dir)?;
        write_spectrum_csv(&dir.join("spectrum.csv"), &run.spectrum)?;
        write_json(&dir.join("spectrum.meta.json"), &run.meta)?;
        let (_, splitting) = find_splitting(&run.spectrum)?;
        Ok(splitting)
    })();
    match outcome {
        Ok(splitting) => entry.splitting_ev = Some(splitting),
        Err(e) => entry.status = format!("error: {e}"),
    }
    entry
}

pub fn run_validate(cfg: &JobConfig) -> Result<()> {
    // Parse already succeeded; exercise the derived quantities so unit or
    // file problems surface here rather than mid-run.
    let alpha = *cfg
        .bath
        .alpha_hrf
        .first()
        .expect("validated config has at least one alpha");
    let bath = density(cfg, alpha)?;
    let sys = system(cfg, &bath, cfg.system.g_ev, cfg.system.kappa_ev);
    println!("config OK");
    println!("  dt = {} eV^-1, svd_cutoff = {:e}", cfg.dt(), cfg.engine.svd_cutoff);
    println!(
        "  omega_c = {} eV ({}), S_tot = {:.6}, lambda = {:.6} eV",
        sys.omega_c,
        if cfg.system.omega_c_ev.is_some() {
            "configured"
        } else {
            "polaron-shifted resonance"
        },
        bath.total_hrf(),
        bath.reorganization_energy(),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entry_directories_are_unique_per_point() {
        let a = entry_dir_name(0.5, 0.015, 0.05);
        let b = entry_dir_name(0.5, 0.05, 0.015);
        assert_ne!(a, b);
        assert_eq!(a, "alpha0.5000_g15.0000mev_kappa50.0000mev");
    }
}
