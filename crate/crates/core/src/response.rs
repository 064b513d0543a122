//! Linear response and absorption spectra.
//!
//! The first-order response to a semi-impulsive drive is obtained by
//! propagating the unphysical seed mu |g,0><g,0| and recording
//! S1(t) = tr(mu rho(t)). The absorption spectrum is the half-weighted
//! discrete transform A(omega) = 2 Re sum_k w_k S1(t_k) e^{i omega t_k} dt
//! with w_0 = 1/2, zero-padded to a power of two; the half weight at t = 0
//! makes the sum rule integral A domega = 2 pi Re S1(0) an exact identity
//! of the discretization. Runs in the rotating frame report absolute
//! frequencies by shifting the grid by omega_e.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::bath::MemoryKernel;
use crate::engine::{EngineConfig, TempoEngine};
use crate::error::{Error, Result};
use crate::system::{DensityMatrix3, SystemParams, DIM};

/// Threshold on |S1(t_end)| / |S1(0)| below which the run counts as
/// equilibrated; chosen at the spectral-leakage scale of the default padding.
pub const EQUILIBRATION_THRESHOLD: f64 = 1e-4;

/// Default transform length.
pub const DEFAULT_PAD: usize = 1 << 15;

/// Transition operator of the drive, restricted to the single-excitation
/// subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriveMode {
    /// Emitter dipole sigma^dag + sigma: couples |g,0> and |e,0>.
    Dipole,
    /// Cavity quadrature a^dag + a: couples |g,0> and |g,1>.
    Cavity,
}

impl DriveMode {
    pub fn operator(&self) -> Array2<C64> {
        let mut m = Array2::zeros((DIM, DIM));
        let one = C64::new(1.0, 0.0);
        let (i, j) = match self {
            DriveMode::Dipole => (0, 1),
            DriveMode::Cavity => (0, 2),
        };
        m[(i, j)] = one;
        m[(j, i)] = one;
        m
    }

    /// mu |g,0><g,0|: the traceless propagation seed.
    pub fn seed(&self) -> DensityMatrix3 {
        let mut m = Array2::zeros((DIM, DIM));
        let row = match self {
            DriveMode::Dipole => 1,
            DriveMode::Cavity => 2,
        };
        m[(row, 0)] = C64::new(1.0, 0.0);
        DensityMatrix3::raw(m).expect("constant seed is finite")
    }

    pub fn label(&self) -> &'static str {
        match self {
            DriveMode::Dipole => "dipole",
            DriveMode::Cavity => "cavity",
        }
    }
}

/// Sampled first-order response S1(t_k), t_k = k dt, including t = 0.
#[derive(Debug, Clone)]
pub struct ResponseSeries {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    pub drive: DriveMode,
    /// Engine configuration the run used.
    pub config: EngineConfig,
    /// Added to the frequency grid at transform time: omega_e for
    /// rotating-frame runs, zero in the lab frame.
    pub frame_shift: f64,
    /// |S1(t_end)| / |S1(0)|.
    pub residual: f64,
    pub warnings: Vec<String>,
    /// Largest bond dimension the run reached.
    pub max_bond_dim: usize,
    /// Total squared singular-value weight discarded over the run.
    pub cumulative_discarded_weight: f64,
}

impl ResponseSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.config.dt
    }

    pub fn equilibrated(&self) -> bool {
        self.residual < EQUILIBRATION_THRESHOLD
    }
}

/// Real absorption spectrum on a uniform, ascending frequency grid.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub omega: Vec<f64>,
    pub a_vals: Vec<f64>,
    pub pad_to: usize,
    /// Grid spacing 2 pi / (pad_to dt).
    pub resolution: f64,
}

impl Spectrum {
    /// integral A domega by the grid sum.
    pub fn integral(&self) -> f64 {
        self.a_vals.iter().sum::<f64>() * self.resolution
    }
}

fn trace_with(op: &Array2<C64>, rho: &DensityMatrix3) -> C64 {
    let m = rho.matrix();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..DIM {
        for j in 0..DIM {
            acc += op[(i, j)] * m[(j, i)];
        }
    }
    acc
}

/// Steps for the slowest decay channel to damp the response below the
/// equilibration threshold. Undamped systems need an explicit choice.
pub fn suggested_response_steps(sys: &SystemParams, dt: f64) -> Result<usize> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "timestep must be positive, got {dt}"
        )));
    }
    let rate = [sys.gamma, sys.kappa]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    if !rate.is_finite() {
        return Err(Error::InvalidArgument(
            "no damping channel: response never equilibrates, pass n_steps explicitly".into(),
        ));
    }
    // Amplitudes decay no slower than e^{-rate t / 2}.
    let t_end = 2.0 * (1.0 / EQUILIBRATION_THRESHOLD).ln() / rate;
    Ok(((t_end / dt).ceil() as usize).max(16))
}

/// Propagate the unphysical seed mu |g,0><g,0| for n_steps and record
/// tr(mu rho(t)) at every step including t = 0.
pub fn response_function(
    drive: DriveMode,
    cfg: &EngineConfig,
    sys: &SystemParams,
    kernel: &MemoryKernel,
    n_steps: usize,
) -> Result<ResponseSeries> {
    if n_steps < 1 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    let mut run_cfg = cfg.clone();
    run_cfg.max_steps = n_steps;
    let engine = TempoEngine::new(sys, &run_cfg, kernel)?;
    let mu = drive.operator();
    let seed = drive.seed();

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut values = Vec::with_capacity(n_steps + 1);
    times.push(0.0);
    values.push(trace_with(&mu, &seed));

    let mut state = engine.initialize_unphysical(&seed)?;
    times.push(run_cfg.dt);
    values.push(trace_with(&mu, &engine.reduced_state(&state)?));
    for k in 2..=n_steps {
        engine.step(&mut state)?;
        times.push(k as f64 * run_cfg.dt);
        values.push(trace_with(&mu, &engine.reduced_state(&state)?));
    }

    let s0 = values[0].norm();
    let residual = if s0 > 0.0 {
        values.last().expect("nonempty").norm() / s0
    } else {
        f64::INFINITY
    };
    let mut warnings = Vec::new();
    if residual >= EQUILIBRATION_THRESHOLD {
        warnings.push(format!(
            "response amplitude has not equilibrated: |S1(t_end)|/|S1(0)| = {residual:.3e} \
             (threshold {EQUILIBRATION_THRESHOLD:.0e}); extend n_steps"
        ));
    }
    Ok(ResponseSeries {
        times,
        values,
        drive,
        config: run_cfg,
        frame_shift: if sys.rotating_frame { sys.omega_e } else { 0.0 },
        residual,
        warnings,
        max_bond_dim: state.max_bond_dim(),
        cumulative_discarded_weight: state.cumulative_discarded_weight(),
    })
}

/// Half-weighted zero-padded transform of the response series.
pub fn absorption_spectrum(series: &ResponseSeries, pad_to: usize) -> Result<Spectrum> {
    if !pad_to.is_power_of_two() {
        return Err(Error::InvalidArgument(format!(
            "transform length must be a power of two, got {pad_to}"
        )));
    }
    if pad_to < series.len() {
        return Err(Error::InvalidArgument(format!(
            "transform length {pad_to} shorter than the series ({})",
            series.len()
        )));
    }
    if series.is_empty() {
        return Err(Error::InvalidArgument("empty response series".into()));
    }
    let dt = series.dt();
    let n = pad_to;
    let mut buf: Vec<C64> = Vec::with_capacity(n);
    buf.extend_from_slice(&series.values);
    buf[0] *= 0.5;
    buf.resize(n, C64::new(0.0, 0.0));

    // e^{+i omega t} convention: an unscaled inverse transform.
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut buf);

    let resolution = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let half = n / 2;
    let mut omega = Vec::with_capacity(n);
    let mut a_vals = Vec::with_capacity(n);
    for i in 0..n {
        let j = i as isize - half as isize;
        omega.push(series.frame_shift + j as f64 * resolution);
        let src = (i + half) % n;
        a_vals.push(2.0 * dt * buf[src].re);
    }
    Ok(Spectrum {
        omega,
        a_vals,
        pad_to,
        resolution,
    })
}

/// The two most prominent local maxima (quadratically refined) and their
/// separation.
pub fn find_splitting(spec: &Spectrum) -> Result<([f64; 2], f64)> {
    let a = &spec.a_vals;
    if a.len() < 3 {
        return Err(Error::TooFewPeaks { found: 0 });
    }
    let global_max = a.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let threshold = 0.02 * global_max;

    let mut peaks: Vec<(usize, f64)> = Vec::new();
    for i in 1..a.len() - 1 {
        if a[i] > a[i - 1] && a[i] > a[i + 1] {
            let prom = prominence(a, i);
            if prom >= threshold {
                peaks.push((i, prom));
            }
        }
    }
    if peaks.len() < 2 {
        return Err(Error::TooFewPeaks { found: peaks.len() });
    }
    peaks.sort_by(|x, y| y.1.total_cmp(&x.1));
    let mut pos = [refine(spec, peaks[0].0), refine(spec, peaks[1].0)];
    pos.sort_by(f64::total_cmp);
    Ok((pos, pos[1] - pos[0]))
}

/// Topographic prominence: height above the higher of the two valley floors
/// separating the peak from higher terrain (or the array edge).
fn prominence(a: &[f64], peak: usize) -> f64 {
    let mut left_floor = a[peak];
    let mut i = peak;
    while i > 0 {
        i -= 1;
        left_floor = left_floor.min(a[i]);
        if a[i] > a[peak] {
            break;
        }
    }
    let mut right_floor = a[peak];
    let mut j = peak;
    while j + 1 < a.len() {
        j += 1;
        right_floor = right_floor.min(a[j]);
        if a[j] > a[peak] {
            break;
        }
    }
    a[peak] - left_floor.max(right_floor)
}

/// 3-point quadratic vertex through (peak-1, peak, peak+1).
fn refine(spec: &Spectrum, peak: usize) -> f64 {
    let a = &spec.a_vals;
    let (ym, y0, yp) = (a[peak - 1], a[peak], a[peak + 1]);
    let denom = ym - 2.0 * y0 + yp;
    let shift = if denom.abs() > 0.0 {
        0.5 * (ym - yp) / denom
    } else {
        0.0
    };
    spec.omega[peak] + shift * spec.resolution
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::MemoryKernel;

    fn sys(g: f64, gamma: f64, kappa: f64) -> SystemParams {
        SystemParams {
            omega_e: 2.0,
            omega_c: 2.0,
            g,
            gamma,
            kappa,
            rotating_frame: true,
        }
    }

    fn cfg(dt: f64, max_steps: usize) -> EngineConfig {
        EngineConfig {
            dt,
            svd_cutoff: 0.0,
            memory_cutoff: None,
            max_steps,
            max_bond_dim: None,
        }
    }

    fn markovian(drive: DriveMode, s: &SystemParams, dt: f64, n: usize) -> ResponseSeries {
        let kernel = MemoryKernel::zero(dt, 4.0, n).unwrap();
        response_function(drive, &cfg(dt, n), s, &kernel, n).unwrap()
    }

    #[test]
    fn drive_operators_are_hermitian_with_unit_ground_expectation() {
        for drive in [DriveMode::Dipole, DriveMode::Cavity] {
            let mu = drive.operator();
            for i in 0..3 {
                for j in 0..3 {
                    assert_eq!(mu[(i, j)], mu[(j, i)].conj());
                }
            }
            let mu2 = mu.dot(&mu);
            assert_eq!(mu2[(0, 0)], C64::new(1.0, 0.0));
        }
    }

    #[test]
    fn response_starts_at_unity() {
        for drive in [DriveMode::Dipole, DriveMode::Cavity] {
            let series = markovian(drive, &sys(0.03, 0.004, 0.02), 1.0, 32);
            assert!((series.values[0].norm() - 1.0).abs() < 1e-9);
            assert_eq!(series.len(), 33);
            assert_eq!(series.times[0], 0.0);
        }
    }

    #[test]
    fn resonant_undamped_dipole_response_is_cosine() {
        let g = 0.05;
        let steps = 126;
        let series = markovian(DriveMode::Dipole, &sys(g, 0.0, 0.0), 1.0, steps);
        for (k, v) in series.values.iter().enumerate() {
            let want = (g * k as f64).cos();
            assert!(
                (v - C64::new(want, 0.0)).norm() < 1e-9,
                "step {k}: {v} vs {want}"
            );
        }
    }

    #[test]
    fn phonon_free_decay_is_exponential() {
        let gamma = 0.004;
        let series = markovian(DriveMode::Dipole, &sys(0.0, gamma, 0.0), 2.0, 200);
        for (k, v) in series.values.iter().enumerate() {
            let want = (-0.5 * gamma * 2.0 * k as f64).exp();
            assert!((v - C64::new(want, 0.0)).norm() < 1e-10);
        }
    }

    #[test]
    fn lorentzian_line_peak_width_and_sum_rule() {
        let gamma = 0.004;
        let s = sys(0.0, gamma, 0.0);
        let dt = 2.0;
        let n = suggested_response_steps(&s, dt).unwrap();
        assert!(n >= 2000);
        let series = markovian(DriveMode::Dipole, &s, dt, n);
        assert!(series.equilibrated(), "residual {}", series.residual);
        assert!(series.warnings.is_empty());
        let spec = absorption_spectrum(&series, DEFAULT_PAD).unwrap();

        let (imax, &amax) = spec
            .a_vals
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert!((amax - 4.0 / gamma).abs() <= 0.02 * 4.0 / gamma);
        assert!((spec.omega[imax] - 2.0).abs() <= spec.resolution);
        let fwhm = width_at(&spec, 0.5 * amax);
        assert!((fwhm - gamma).abs() <= 0.02 * gamma, "fwhm {fwhm}");
        assert!((spec.integral() - 2.0 * std::f64::consts::PI).abs()
            <= 0.01 * 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn sum_rule_is_exact_even_unequilibrated() {
        let series = markovian(DriveMode::Dipole, &sys(0.03, 0.004, 0.0), 1.0, 40);
        assert!(!series.warnings.is_empty());
        let spec = absorption_spectrum(&series, 1 << 12).unwrap();
        let want = 2.0 * std::f64::consts::PI * series.values[0].re;
        assert!((spec.integral() - want).abs() < 1e-10);
    }

    #[test]
    fn padding_is_neutral() {
        let s = sys(0.05, 0.008, 0.008);
        let dt = 1.0;
        let n = suggested_response_steps(&s, dt).unwrap();
        let series = markovian(DriveMode::Dipole, &s, dt, n);
        let a = absorption_spectrum(&series, 1 << 15).unwrap();
        let b = absorption_spectrum(&series, 1 << 16).unwrap();
        let (pa, _) = find_splitting(&a).unwrap();
        let (pb, _) = find_splitting(&b).unwrap();
        let pre_pad_spacing = 2.0 * std::f64::consts::PI / (series.len() as f64 * dt);
        assert!((pa[0] - pb[0]).abs() < pre_pad_spacing);
        assert!((pa[1] - pb[1]).abs() < pre_pad_spacing);
        assert!((a.integral() - b.integral()).abs() < 1e-3 * a.integral().abs());
    }

    #[test]
    fn vacuum_rabi_splitting_is_2g() {
        let g = 0.05;
        let s = sys(g, 0.002, 0.002);
        let dt = 1.0;
        let n = suggested_response_steps(&s, dt).unwrap();
        let series = markovian(DriveMode::Dipole, &s, dt, n);
        let spec = absorption_spectrum(&series, DEFAULT_PAD).unwrap();
        let (pos, split) = find_splitting(&spec).unwrap();
        // gamma = kappa makes the dissipative correction vanish exactly.
        assert!((split - 2.0 * g).abs() < 2e-4, "split {split}");
        assert!((pos[0] + pos[1] - 4.0).abs() < 2e-4, "asymmetric {pos:?}");
    }

    #[test]
    fn cavity_drive_sees_the_same_doublet() {
        let g = 0.05;
        let s = sys(g, 0.002, 0.002);
        let dt = 1.0;
        let n = suggested_response_steps(&s, dt).unwrap();
        let dip = absorption_spectrum(&markovian(DriveMode::Dipole, &s, dt, n), DEFAULT_PAD)
            .unwrap();
        let cav = absorption_spectrum(&markovian(DriveMode::Cavity, &s, dt, n), DEFAULT_PAD)
            .unwrap();
        let (pd, _) = find_splitting(&dip).unwrap();
        let (pc, _) = find_splitting(&cav).unwrap();
        assert!((pd[0] - pc[0]).abs() < 2.0 * dip.resolution);
        assert!((pd[1] - pc[1]).abs() < 2.0 * dip.resolution);
    }

    #[test]
    fn frames_agree_after_shift() {
        let gamma = 0.05;
        let mut lab = sys(0.0, gamma, 0.0);
        lab.rotating_frame = false;
        let rot = sys(0.0, gamma, 0.0);
        let dt_lab = 0.25;
        let n_lab = suggested_response_steps(&lab, dt_lab).unwrap();
        let lab_spec =
            absorption_spectrum(&markovian(DriveMode::Dipole, &lab, dt_lab, n_lab), 1 << 16)
                .unwrap();
        let n_rot = suggested_response_steps(&rot, 2.0).unwrap();
        let rot_spec =
            absorption_spectrum(&markovian(DriveMode::Dipole, &rot, 2.0, n_rot), DEFAULT_PAD)
                .unwrap();
        let peak = |s: &Spectrum| {
            let i = s
                .a_vals
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(b.1))
                .unwrap()
                .0;
            s.omega[i]
        };
        let (pl, pr) = (peak(&lab_spec), peak(&rot_spec));
        assert!(
            (pl - pr).abs() <= lab_spec.resolution + rot_spec.resolution,
            "lab {pl} vs rotating {pr}"
        );
    }

    #[test]
    fn single_line_reports_too_few_peaks() {
        let series = markovian(DriveMode::Dipole, &sys(0.0, 0.004, 0.0), 2.0, 4606);
        let spec = absorption_spectrum(&series, DEFAULT_PAD).unwrap();
        assert!(matches!(
            find_splitting(&spec),
            Err(Error::TooFewPeaks { found: 1 })
        ));
    }

    #[test]
    fn transform_validates_arguments() {
        let series = markovian(DriveMode::Dipole, &sys(0.0, 0.004, 0.0), 1.0, 16);
        assert!(absorption_spectrum(&series, 100).is_err());
        assert!(absorption_spectrum(&series, 8).is_err());
    }

    #[test]
    fn suggested_steps_needs_damping() {
        assert!(suggested_response_steps(&sys(0.05, 0.0, 0.0), 1.0).is_err());
        let n = suggested_response_steps(&sys(0.05, 0.004, 0.05), 1.0).unwrap();
        // Slowest channel gamma = 4 meV: t_end = 2 ln(1e4) / gamma.
        assert_eq!(n, ((2.0 * (1e4f64).ln() / 0.004).ceil() as usize).max(16));
    }

    fn width_at(spec: &Spectrum, level: f64) -> f64 {
        let a = &spec.a_vals;
        let imax = a
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .unwrap()
            .0;
        let mut lo = imax;
        while lo > 0 && a[lo] > level {
            lo -= 1;
        }
        let mut hi = imax;
        while hi + 1 < a.len() && a[hi] > level {
            hi += 1;
        }
        let interp = |i: usize, j: usize| -> f64 {
            let (ai, aj) = (a[i], a[j]);
            spec.omega[i] + (level - ai) / (aj - ai) * (spec.omega[j] - spec.omega[i])
        };
        interp(hi - 1, hi) - interp(lo + 1, lo)
    }
}
