//! Phonon environment: mode lists, spectral densities, correlation functions,
//! and discretized memory kernels.
//!
//! The spectral density J(omega) is kept in Huang-Rhys normalization
//! (units eV^-1), so integral J domega = S_Tot is dimensionless and the bath
//! correlation function carries an explicit omega^2 factor restoring the
//! coupling strength:
//!
//!   C(t) = int domega omega^2 J(omega)
//!          [coth(omega / 2 k_B T) cos(omega t) - i sin(omega t)].
//!
//! Memory kernel entries are double time integrals of C over timestep
//! windows. The inner time integration is done analytically per frequency;
//! only the omega quadrature is numerical. eta_0 integrates over the ordered
//! triangle 0 <= s <= t' <= dt, which is the weight the time-ordered
//! influence functional assigns to the diagonal; this is validated against
//! the exactly solvable pure-dephasing limit.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::units::thermal_energy_ev;

/// One vibrational mode: energy in eV, partial Huang-Rhys factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub energy: f64,
    pub hrf: f64,
}

/// Collection of phonon modes, sorted by energy. Duplicate energies are
/// merged by summing their weights; zero-weight entries are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeList {
    entries: Vec<Mode>,
}

impl ModeList {
    pub fn new(entries: Vec<Mode>) -> Result<Self> {
        for (i, m) in entries.iter().enumerate() {
            if !m.energy.is_finite() || m.energy <= 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "mode {i}: energy must be positive and finite, got {}",
                    m.energy
                )));
            }
            if !m.hrf.is_finite() || m.hrf < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "mode {i}: Huang-Rhys factor must be >= 0 and finite, got {}",
                    m.hrf
                )));
            }
        }
        let mut entries: Vec<Mode> = entries.into_iter().filter(|m| m.hrf > 0.0).collect();
        entries.sort_by(|a, b| a.energy.total_cmp(&b.energy));
        let mut merged: Vec<Mode> = Vec::with_capacity(entries.len());
        for m in entries {
            match merged.last_mut() {
                Some(last) if last.energy == m.energy => last.hrf += m.hrf,
                _ => merged.push(m),
            }
        }
        Ok(Self { entries: merged })
    }

    /// Parse a plain-text mode file: one `<energy_eV> <partial_HRF>` pair per
    /// line, `#` starts a comment, blank lines are ignored.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let fields: Vec<&str> = content.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(mode_file_error(
                    path,
                    line,
                    format!("expected `<energy_eV> <HRF>`, found {} fields", fields.len()),
                ));
            }
            let energy: f64 = fields[0].parse().map_err(|_| {
                mode_file_error(path, line, format!("invalid energy `{}`", fields[0]))
            })?;
            let hrf: f64 = fields[1].parse().map_err(|_| {
                mode_file_error(path, line, format!("invalid Huang-Rhys factor `{}`", fields[1]))
            })?;
            if !energy.is_finite() || energy <= 0.0 {
                return Err(mode_file_error(
                    path,
                    line,
                    format!("energy must be positive, got {energy}"),
                ));
            }
            if !hrf.is_finite() || hrf < 0.0 {
                return Err(mode_file_error(
                    path,
                    line,
                    format!("Huang-Rhys factor must be >= 0, got {hrf}"),
                ));
            }
            entries.push(Mode { energy, hrf });
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[Mode] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sum of all partial Huang-Rhys factors.
    pub fn total_hrf(&self) -> f64 {
        self.entries.iter().map(|m| m.hrf).sum()
    }

    pub fn max_energy(&self) -> f64 {
        self.entries.last().map_or(0.0, |m| m.energy)
    }

    /// Mode with the largest weight, if any.
    pub fn dominant(&self) -> Option<Mode> {
        self.entries
            .iter()
            .copied()
            .max_by(|a, b| a.hrf.total_cmp(&b.hrf))
    }
}

fn mode_file_error(path: &Path, line: usize, msg: String) -> Error {
    Error::ModeFile {
        path: path.display().to_string(),
        line,
        msg,
    }
}

/// Requested uniform frequency grid for sampled densities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub n_points: usize,
}

impl FrequencyGrid {
    pub fn new(omega_min: f64, omega_max: f64, n_points: usize) -> Result<Self> {
        if !omega_min.is_finite() || !omega_max.is_finite() || omega_min < 0.0 {
            return Err(Error::InvalidArgument(
                "grid bounds must be finite and >= 0".into(),
            ));
        }
        if omega_max <= omega_min {
            return Err(Error::InvalidArgument(format!(
                "grid upper bound {omega_max} must exceed lower bound {omega_min}"
            )));
        }
        if n_points < 2 {
            return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
        }
        Ok(Self {
            omega_min,
            omega_max,
            n_points,
        })
    }
}

/// Number of grid points used when no grid is given explicitly. Resolves a
/// 2.5 meV broadening peak with dozens of points even on a 0.2 eV span.
pub const DEFAULT_GRID_POINTS: usize = 20_001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    /// Gaussian-broadened modes sampled on a uniform grid.
    BroadenedModes,
    /// Single moment-matched Gaussian replacing a structured density.
    EffectiveWidth,
    /// Discrete modes kept as delta functions; integrals are closed-form
    /// sums. Intended for oracle comparisons.
    AnalyticTest,
}

/// Spectral density in Huang-Rhys normalization, either sampled on a uniform
/// grid or held as discrete delta weights. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    kind: DensityKind,
    modes: ModeList,
    sigma: Option<f64>,
    alpha: f64,
    grid: Option<GridData>,
    warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
struct GridData {
    omegas: Vec<f64>,
    /// Samples of J at alpha = 1.
    j: Vec<f64>,
}

impl SpectralDensity {
    /// Broaden each mode into a Gaussian of width `sigma`:
    /// J(omega) = sum_k S_k N(omega; nu_k, sigma). Without an explicit grid,
    /// [0, max nu + 6 sigma] with a fixed point count is used. A grid that
    /// fails to cover the modes is accepted but recorded as a warning.
    pub fn broaden(modes: &ModeList, sigma: f64, grid: Option<FrequencyGrid>) -> Result<Self> {
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "broadening width must be positive, got {sigma}"
            )));
        }
        let grid = match grid {
            Some(g) => g,
            None => FrequencyGrid::new(0.0, modes.max_energy() + 6.0 * sigma, DEFAULT_GRID_POINTS)?,
        };
        let mut warnings = Vec::new();
        let lo_needed = (modes.entries.first().map_or(0.0, |m| m.energy) - 6.0 * sigma).max(0.0);
        let hi_needed = modes.max_energy() + 6.0 * sigma;
        if !modes.is_empty() && (grid.omega_min > lo_needed || grid.omega_max < hi_needed) {
            let mut w = String::new();
            let _ = write!(
                w,
                "grid [{:.6}, {:.6}] does not cover modes within 6 sigma [{:.6}, {:.6}]; \
                 integrated weight will fall short",
                grid.omega_min, grid.omega_max, lo_needed, hi_needed
            );
            warnings.push(w);
        }
        let omegas = linspace(grid.omega_min, grid.omega_max, grid.n_points);
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * sigma);
        let j: Vec<f64> = omegas
            .iter()
            .map(|&w| {
                modes
                    .entries
                    .iter()
                    .map(|m| {
                        let u = (w - m.energy) / sigma;
                        m.hrf * norm * (-0.5 * u * u).exp()
                    })
                    .sum()
            })
            .collect();
        Ok(Self {
            kind: DensityKind::BroadenedModes,
            modes: modes.clone(),
            sigma: Some(sigma),
            alpha: 1.0,
            grid: Some(GridData { omegas, j }),
            warnings,
        })
    }

    /// Keep the modes as exact delta functions; every integral reduces to a
    /// closed-form sum. Useful as an independent oracle against sampled
    /// densities.
    pub fn analytic_test(modes: &ModeList) -> Self {
        Self {
            kind: DensityKind::AnalyticTest,
            modes: modes.clone(),
            sigma: None,
            alpha: 1.0,
            grid: None,
            warnings: Vec::new(),
        }
    }

    /// Replace the density by a single Gaussian with the same zeroth, first,
    /// and second moments (same total weight, spectral mean, and spectral
    /// standard deviation), truncated at omega <= 0 and renormalized so the
    /// total weight is preserved exactly.
    pub fn effective_width(&self) -> Result<Self> {
        let s_tot = self.total_hrf();
        if s_tot <= 0.0 {
            return Err(Error::InvalidArgument(
                "effective-width replacement needs a density with positive total weight".into(),
            ));
        }
        let center = self.reorganization_energy() / s_tot;
        let m2 = self.integrate_real(|w| w * w);
        let var = m2 / s_tot - center * center;
        if !(var > 0.0) {
            return Err(Error::InvalidArgument(
                "effective-width replacement needs a density with positive spectral variance"
                    .into(),
            ));
        }
        let std = var.sqrt();
        let grid = FrequencyGrid::new(0.0, center + 6.0 * std, DEFAULT_GRID_POINTS)?;
        let omegas = linspace(grid.omega_min, grid.omega_max, grid.n_points);
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * std);
        let mut j: Vec<f64> = omegas
            .iter()
            .map(|&w| {
                let u = (w - center) / std;
                s_tot * norm * (-0.5 * u * u).exp()
            })
            .collect();
        let raw = trapezoid(&omegas, &j);
        if raw <= 0.0 {
            return Err(Error::InvalidArgument(
                "effective-width Gaussian lost all weight to truncation".into(),
            ));
        }
        let rescale = s_tot / raw;
        for v in &mut j {
            *v *= rescale;
        }
        Ok(Self {
            kind: DensityKind::EffectiveWidth,
            modes: ModeList::new(vec![Mode {
                energy: center,
                hrf: s_tot,
            }])?,
            sigma: Some(std),
            alpha: 1.0,
            grid: Some(GridData { omegas, j }),
            warnings: Vec::new(),
        })
    }

    /// Scale the whole density by `alpha` in [0, 1]; the factor is recorded
    /// and applied on evaluation, composing multiplicatively.
    pub fn scale_hrf(&self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!(
                "scale factor must lie in [0, 1], got {alpha}"
            )));
        }
        let mut out = self.clone();
        out.alpha *= alpha;
        Ok(out)
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Broadening width (or moment-matched width), if the density has one.
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    pub fn modes(&self) -> &ModeList {
        &self.modes
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Grid samples (omega, alpha * J(omega)) for sampled kinds; None for
    /// discrete test densities.
    pub fn grid_samples(&self) -> Option<Vec<(f64, f64)>> {
        self.grid.as_ref().map(|g| {
            g.omegas
                .iter()
                .zip(&g.j)
                .map(|(&w, &j)| (w, self.alpha * j))
                .collect()
        })
    }

    /// Total Huang-Rhys factor S_Tot = integral J domega (trapezoidal on the
    /// grid, exact sum for discrete kinds).
    pub fn total_hrf(&self) -> f64 {
        self.integrate_real(|_| 1.0)
    }

    /// Reorganization energy lambda = integral omega J(omega) domega.
    pub fn reorganization_energy(&self) -> f64 {
        self.integrate_real(|w| w)
    }

    /// integral f(omega) J(omega) domega with the scale factor applied.
    fn integrate_real(&self, f: impl Fn(f64) -> f64) -> f64 {
        match &self.grid {
            Some(g) => {
                let n = g.omegas.len();
                let h = (g.omegas[n - 1] - g.omegas[0]) / (n - 1) as f64;
                let mut acc = 0.0;
                for i in 0..n {
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    acc += w * g.j[i] * f(g.omegas[i]);
                }
                self.alpha * h * acc
            }
            None => {
                self.alpha
                    * self
                        .modes
                        .entries
                        .iter()
                        .map(|m| m.hrf * f(m.energy))
                        .sum::<f64>()
            }
        }
    }

    /// Frequencies and quadrature weights realizing integral J f domega as
    /// sum_i w_i f(omega_i), scale factor included.
    fn measure(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.grid {
            Some(g) => {
                let n = g.omegas.len();
                let h = (g.omegas[n - 1] - g.omegas[0]) / (n - 1) as f64;
                let weights = (0..n)
                    .map(|i| {
                        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                        self.alpha * h * w * g.j[i]
                    })
                    .collect();
                (g.omegas.clone(), weights)
            }
            None => (
                self.modes.entries.iter().map(|m| m.energy).collect(),
                self.modes
                    .entries
                    .iter()
                    .map(|m| self.alpha * m.hrf)
                    .collect(),
            ),
        }
    }

    /// integral f(omega) J(omega) domega for a complex-valued factor, with
    /// the scale factor applied. Callers own any omega -> 0 limit handling in
    /// `f` itself.
    pub fn weighted_integral(&self, f: impl Fn(f64) -> C64) -> C64 {
        let (omegas, weights) = self.measure();
        omegas
            .iter()
            .zip(&weights)
            .map(|(&w, &m)| f(w) * m)
            .sum()
    }

    /// Bath correlation function C(t); see the module docs for the
    /// convention. Satisfies C(-t) = conj(C(t)).
    pub fn correlation_function(&self, temperature_k: f64, t: f64) -> Result<C64> {
        if !t.is_finite() {
            return Err(Error::InvalidArgument("time must be finite".into()));
        }
        Ok(self.correlation_eval(temperature_k)?.eval(t))
    }

    /// Precomputed evaluator for repeated C(t) calls on a fixed density and
    /// temperature.
    pub fn correlation_eval(&self, temperature_k: f64) -> Result<CorrelationEval> {
        let kbt = positive_thermal_energy(temperature_k)?;
        let (omegas, weights) = self.measure();
        let mut cos_w = Vec::with_capacity(omegas.len());
        let mut sin_w = Vec::with_capacity(omegas.len());
        for (&w, &m) in omegas.iter().zip(&weights) {
            if w == 0.0 {
                // omega^2 coth(omega / 2 kbt) -> 2 kbt omega -> 0.
                cos_w.push(0.0);
                sin_w.push(0.0);
            } else {
                cos_w.push(m * w * w * coth(0.5 * w / kbt));
                sin_w.push(m * w * w);
            }
        }
        Ok(CorrelationEval {
            omegas,
            cos_w,
            sin_w,
        })
    }

    /// Discretized influence kernel eta_Delta for Delta = 0 ..= delta_max:
    /// double integrals of C over timestep windows, with the inner time
    /// integration carried out analytically per frequency.
    pub fn memory_kernel(
        &self,
        temperature_k: f64,
        dt: f64,
        delta_max: usize,
    ) -> Result<MemoryKernel> {
        let kbt = positive_thermal_energy(temperature_k)?;
        check_timestep(dt)?;
        let (omegas, weights) = self.measure();
        let n = omegas.len();
        // Window factor 2(1 - cos omega dt) and coth, both t-independent.
        let mut win_coth = vec![0.0; n];
        let mut win = vec![0.0; n];
        let mut eta0 = C64::new(0.0, 0.0);
        for i in 0..n {
            let w = omegas[i];
            if w == 0.0 {
                continue;
            }
            let omc = one_minus_cos(w * dt);
            let cth = coth(0.5 * w / kbt);
            win_coth[i] = weights[i] * 2.0 * omc * cth;
            win[i] = weights[i] * 2.0 * omc;
            eta0 += weights[i] * C64::new(omc * cth, -x_minus_sin(w * dt));
        }
        let mut eta = Vec::with_capacity(delta_max + 1);
        eta.push(eta0);
        for delta in 1..=delta_max {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..n {
                if omegas[i] == 0.0 {
                    continue;
                }
                let phase = omegas[i] * delta as f64 * dt;
                acc += C64::new(win_coth[i] * phase.cos(), -win[i] * phase.sin());
            }
            eta.push(acc);
        }
        Ok(MemoryKernel {
            dt,
            temperature_k,
            eta,
        })
    }

    /// Slow reference kernel: nested adaptive quadrature of C(t' - s) over
    /// the actual time regions (ordered triangle for Delta = 0, full window
    /// rectangle for Delta >= 1), sharing this density's omega quadrature.
    /// Exists to validate the analytic inner integration of
    /// [`Self::memory_kernel`].
    pub fn memory_kernel_quadrature(
        &self,
        temperature_k: f64,
        dt: f64,
        delta_max: usize,
        tol: f64,
    ) -> Result<MemoryKernel> {
        check_timestep(dt)?;
        if !tol.is_finite() || tol <= 0.0 {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let c = self.correlation_eval(temperature_k)?;
        let inner_tol = 0.25 * tol / dt;
        let mut eta = Vec::with_capacity(delta_max + 1);
        // eta_0: int_0^dt dt' int_0^t' ds C(t' - s).
        eta.push(adaptive_simpson(
            &|tp: f64| adaptive_simpson(&|s: f64| c.eval(tp - s), 0.0, tp, inner_tol),
            0.0,
            dt,
            0.5 * tol,
        ));
        for delta in 1..=delta_max {
            let lo = delta as f64 * dt;
            eta.push(adaptive_simpson(
                &|tp: f64| adaptive_simpson(&|s: f64| c.eval(tp - s), 0.0, dt, inner_tol),
                lo,
                lo + dt,
                0.5 * tol,
            ));
        }
        Ok(MemoryKernel {
            dt,
            temperature_k,
            eta,
        })
    }
}

/// Franck-Condon factor exp(-alpha S_Tot / 2) for emitter-cavity coupling
/// renormalization.
pub fn franck_condon(alpha: f64, s_tot: f64) -> f64 {
    (-0.5 * alpha * s_tot).exp()
}

/// Fixed-weight evaluator for C(t): two dot products with trigonometric
/// vectors per call.
#[derive(Debug, Clone)]
pub struct CorrelationEval {
    omegas: Vec<f64>,
    cos_w: Vec<f64>,
    sin_w: Vec<f64>,
}

impl CorrelationEval {
    pub fn eval(&self, t: f64) -> C64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for i in 0..self.omegas.len() {
            let (s, c) = (self.omegas[i] * t).sin_cos();
            re += self.cos_w[i] * c;
            im -= self.sin_w[i] * s;
        }
        C64::new(re, im)
    }
}

/// Discretized memory kernel: eta_Delta over a uniform timestep, stationary
/// by construction (depends on the index difference only).
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    dt: f64,
    temperature_k: f64,
    eta: Vec<C64>,
}

impl MemoryKernel {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn temperature_k(&self) -> f64 {
        self.temperature_k
    }

    pub fn eta(&self) -> &[C64] {
        &self.eta
    }

    /// Largest available index difference.
    pub fn delta_max(&self) -> usize {
        self.eta.len() - 1
    }

    /// Trivial all-zero kernel, the Markovian limit.
    pub fn zero(dt: f64, temperature_k: f64, delta_max: usize) -> Result<Self> {
        check_timestep(dt)?;
        Ok(Self {
            dt,
            temperature_k,
            eta: vec![C64::new(0.0, 0.0); delta_max + 1],
        })
    }
}

fn positive_thermal_energy(temperature_k: f64) -> Result<f64> {
    if !temperature_k.is_finite() || temperature_k <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature_k} K"
        )));
    }
    Ok(thermal_energy_ev(temperature_k))
}

fn check_timestep(dt: f64) -> Result<()> {
    if !dt.is_finite() || dt <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "timestep must be positive and finite, got {dt}"
        )));
    }
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    (0..n).map(|i| lo + h * i as f64).collect()
}

fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len();
    let h = (x[n - 1] - x[0]) / (n - 1) as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        acc += w * y[i];
    }
    h * acc
}

fn coth(x: f64) -> f64 {
    1.0 / x.tanh()
}

/// 1 - cos(x) without cancellation at small x.
pub(crate) fn one_minus_cos(x: f64) -> f64 {
    let s = (0.5 * x).sin();
    2.0 * s * s
}

/// x - sin(x), series-expanded near zero where direct subtraction loses
/// precision.
pub(crate) fn x_minus_sin(x: f64) -> f64 {
    if x.abs() < 0.01 {
        let x2 = x * x;
        x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0))
    } else {
        x - x.sin()
    }
}

/// Adaptive Simpson quadrature for complex integrands, absolute tolerance.
pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> C64, a: f64, b: f64, tol: f64) -> C64 {
    if a == b {
        return C64::new(0.0, 0.0);
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson_panel(a, b, fa, fm, fb);
    adapt(f, a, fa, m, fm, b, fb, whole, tol, 48)
}

fn simpson_panel(a: f64, b: f64, fa: C64, fm: C64, fb: C64) -> C64 {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn adapt(
    f: &impl Fn(f64) -> C64,
    a: f64,
    fa: C64,
    m: f64,
    fm: C64,
    b: f64,
    fb: C64,
    whole: C64,
    tol: f64,
    depth: u32,
) -> C64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson_panel(a, m, fa, flm, fm);
    let right = simpson_panel(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adapt(f, a, fa, lm, flm, m, fm, left, 0.5 * tol, depth - 1)
            + adapt(f, m, fm, rm, frm, b, fb, right, 0.5 * tol, depth - 1)
    }
}
