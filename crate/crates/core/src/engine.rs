//! Augmented-density-tensor propagation as a matrix product state.
//!
//! The augmented density tensor after k steps carries one 9-dimensional
//! compound index per time slice. It is held as an MPS with sites ordered
//! newest slice first. One step grows the chain by a site and applies the
//! influence MPO, whose bond carries the value of the new index; every MPO
//! site is diagonal in its physical pair, so the application reduces to one
//! small matrix product per bond value. The merged full-step system
//! propagator rides along as an extra weight on the lag-1 pair, realizing
//! the symmetric splitting with the first and last half steps applied at
//! initialization and readout.
//!
//! Compression is a left-to-right zip-up (truncating at a tightened cutoff
//! while the MPO is absorbed) followed by a right-to-left sweep at the
//! configured cutoff. History older than the effective memory is folded exactly into
//! the oldest remaining site: expired slices can never be touched by a later
//! MPO (their influence entries are all ones), so summing them early equals
//! summing them at readout. The fold keeps the terminal right bond at
//! dimension 1, which makes the right environment of every sweep truncation
//! an exact isometry.

use ndarray::{Array1, Array2, Array3, Array4};
use num_complex::Complex64 as C64;

use crate::bath::{one_minus_cos, x_minus_sin, MemoryKernel, SpectralDensity};
use crate::error::{Error, Result};
use crate::influence::{influence_tensor, CouplingDiagonal, PHYS_DIM};
use crate::system::{
    half_step_propagator, lindblad_liouvillian, DensityMatrix3, SystemParams, LIOUVILLE_DIM,
};
use crate::units::thermal_energy_ev;

/// Largest slice count the dense ADT oracle will materialize (9^k entries).
pub const MAX_BRUTE_FORCE_STEPS: usize = 7;

/// The zip-up pass truncates in an uncanonical gauge where local singular
/// values overestimate global weight, so it runs at a tighter cutoff; the
/// closing right-to-left sweep at the configured cutoff sets the physical
/// truncation.
const ZIP_CUTOFF_FACTOR: f64 = 0.1;

/// Propagation parameters. Time in eV^-1.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    /// Trotter timestep.
    pub dt: f64,
    /// Relative SVD truncation cutoff epsilon_C (0 disables truncation).
    pub svd_cutoff: f64,
    /// Optional memory window K: influence at lags beyond K is dropped and
    /// the chain is folded to K sites. None keeps the full history.
    pub memory_cutoff: Option<usize>,
    /// Number of steps the engine may take.
    pub max_steps: usize,
    /// Optional hard cap on bond dimension; exceeding it is an error rather
    /// than a silent harder truncation.
    pub max_bond_dim: Option<usize>,
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "timestep must be positive, got {}",
                self.dt
            )));
        }
        if !(0.0..=1.0).contains(&self.svd_cutoff) {
            return Err(Error::InvalidArgument(format!(
                "SVD cutoff must lie in [0, 1], got {}",
                self.svd_cutoff
            )));
        }
        if self.max_steps < 1 {
            return Err(Error::InvalidArgument("max_steps must be >= 1".into()));
        }
        if self.memory_cutoff == Some(0) {
            return Err(Error::InvalidArgument(
                "memory cutoff must be >= 1 (the lag-1 site carries the propagator)".into(),
            ));
        }
        if self.max_bond_dim == Some(0) {
            return Err(Error::InvalidArgument("bond cap must be >= 1".into()));
        }
        Ok(())
    }
}

/// MPS-form augmented density tensor plus the exactly folded old history.
#[derive(Debug, Clone)]
pub struct AugmentedState {
    /// Site tensors (left bond, physical 9, right bond), newest slice first.
    /// The oldest site always has right bond dimension 1: weights of folded
    /// history are absorbed into it, which keeps the right environment of
    /// every truncation an exact isometry.
    mps: Vec<Array3<C64>>,
    step: usize,
    /// Sum over truncations of the relative discarded singular-value weight.
    cumulative_discarded_weight: f64,
    /// Physical seeds rescale the chain after each step so the exactly
    /// conserved readout trace is restored; traceless response seeds cannot.
    renormalize: bool,
    /// Readout trace measured before the rescale: the per-step truncation
    /// leak. Stays at 1 exactly in lossless runs.
    last_trace: C64,
}

impl AugmentedState {
    pub fn step(&self) -> usize {
        self.step
    }

    pub fn num_sites(&self) -> usize {
        self.mps.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.mps.iter().map(|s| s.shape()[2]).collect()
    }

    pub fn max_bond_dim(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    pub fn cumulative_discarded_weight(&self) -> f64 {
        self.cumulative_discarded_weight
    }

    /// Readout trace of the latest step before renormalization; |1 - trace|
    /// is the trace leaked by that step's truncations.
    pub fn last_readout_trace(&self) -> C64 {
        self.last_trace
    }
}

/// Per-step record of the reduced dynamics, including the t = 0 point.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub rho: Vec<DensityMatrix3>,
    pub p_e: Vec<f64>,
    pub n_cav: Vec<f64>,
    /// Emitter-cavity coherence <e,0|rho|g,1>.
    pub coherence: Vec<C64>,
    /// Readout trace before the per-step renormalization: deviation from 1
    /// is the trace leaked by that step's truncations.
    pub trace: Vec<C64>,
    pub max_bond: Vec<usize>,
    pub discarded_weight: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn push(&mut self, t: f64, rho: DensityMatrix3, trace: C64, bond: usize, discarded: f64) {
        self.times.push(t);
        self.p_e.push(rho.p_e());
        self.n_cav.push(rho.n_cav());
        self.coherence.push(rho.coherence());
        self.trace.push(trace);
        self.max_bond.push(bond);
        self.discarded_weight.push(discarded);
        self.rho.push(rho);
    }
}

/// Precomputed propagator and influence data for one parameter set. Engines
/// are immutable; a state advances through `step`.
#[derive(Debug, Clone)]
pub struct TempoEngine {
    cfg: EngineConfig,
    v_half: Array2<C64>,
    /// Self-influence diagonal b_0[beta, beta].
    b0_diag: Vec<C64>,
    /// Pair weights for lags 1..=k_eff; entry 0 carries b_1 entrywise-times
    /// the merged full-step propagator.
    lag_weights: Vec<Array2<C64>>,
    k_eff: usize,
}

impl TempoEngine {
    pub fn new(sys: &SystemParams, cfg: &EngineConfig, kernel: &MemoryKernel) -> Result<Self> {
        cfg.validate()?;
        if (kernel.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
            return Err(Error::InvalidArgument(format!(
                "kernel timestep {} does not match engine timestep {}",
                kernel.dt(),
                cfg.dt
            )));
        }
        let required = match cfg.memory_cutoff {
            Some(k) => k.min(cfg.max_steps - 1),
            None => cfg.max_steps - 1,
        };
        if kernel.delta_max() < required {
            return Err(Error::KernelTooShort {
                available: kernel.delta_max(),
                requested: required,
            });
        }
        // Influence at lags with eta exactly zero is the identity; trimming
        // them shrinks the window at no cost and makes the fold exact in the
        // Markovian limit.
        let last_nonzero = (1..=required)
            .rev()
            .find(|&d| kernel.eta()[d] != C64::new(0.0, 0.0))
            .unwrap_or(0);
        let k_eff = if required == 0 {
            0
        } else {
            last_nonzero.max(1)
        };

        let liouvillian = lindblad_liouvillian(sys)?;
        let v_half = half_step_propagator(&liouvillian, cfg.dt)?.matrix().clone();
        let v_full = v_half.dot(&v_half);

        let coupling = CouplingDiagonal::emitter_projector();
        let b0 = influence_tensor(kernel, 0, &coupling)?;
        let b0_diag = (0..PHYS_DIM).map(|p| b0.values()[(p, p)]).collect();
        let mut lag_weights = Vec::with_capacity(k_eff);
        for lag in 1..=k_eff {
            let b = influence_tensor(kernel, lag, &coupling)?;
            let mut w = b.values().clone();
            if lag == 1 {
                w = &w * &v_full;
            }
            lag_weights.push(w);
        }
        Ok(Self {
            cfg: cfg.clone(),
            v_half,
            b0_diag,
            lag_weights,
            k_eff,
        })
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    /// Memory window actually used: the configured cutoff shrunk past any
    /// exactly-zero kernel tail.
    pub fn effective_memory(&self) -> usize {
        self.k_eff
    }

    /// Encode a physical initial state: half-step propagator, then the
    /// self-influence diagonal. Trace renormalization is active.
    pub fn initialize(&self, rho0: &DensityMatrix3) -> Result<AugmentedState> {
        DensityMatrix3::physical(rho0.matrix().clone())?;
        Ok(self.seed(rho0, true))
    }

    /// Encode an arbitrary (possibly non-Hermitian, traceless) seed, as
    /// linear response requires. Entries must be finite and not all zero;
    /// trace renormalization is off because the trace carries no invariant.
    pub fn initialize_unphysical(&self, rho0: &DensityMatrix3) -> Result<AugmentedState> {
        if rho0.matrix().iter().all(|z| *z == C64::new(0.0, 0.0)) {
            return Err(Error::InvalidArgument(
                "initial matrix must not be identically zero".into(),
            ));
        }
        Ok(self.seed(rho0, false))
    }

    fn seed(&self, rho0: &DensityMatrix3, renormalize: bool) -> AugmentedState {
        let v = self.v_half.dot(&rho0.vectorize());
        let mut site = Array3::zeros((1, PHYS_DIM, 1));
        for p in 0..PHYS_DIM {
            site[(0, p, 0)] = self.b0_diag[p] * v[p];
        }
        AugmentedState {
            mps: vec![site],
            step: 1,
            cumulative_discarded_weight: 0.0,
            renormalize,
            last_trace: rho0.trace(),
        }
    }

    /// Advance the state by one timestep: grow, apply the influence MPO with
    /// the merged system propagator, compress, fold expired history.
    pub fn step(&self, state: &mut AugmentedState) -> Result<()> {
        if state.step >= self.cfg.max_steps {
            return Err(Error::InvalidArgument(format!(
                "state already at configured step limit {}",
                self.cfg.max_steps
            )));
        }
        let n = state.mps.len();
        debug_assert_eq!(n, state.step.min(self.k_eff));
        let this_step = state.step + 1;

        // Growth site for the new slice: diagonal b_0, bond broadcasting the
        // new index value.
        let mut head = Array3::zeros((1, PHYS_DIM, PHYS_DIM));
        for p in 0..PHYS_DIM {
            head[(0, p, p)] = self.b0_diag[p];
        }
        let mut new_mps: Vec<Array3<C64>> = Vec::with_capacity(n + 1);
        new_mps.push(head);

        // Zipper between the already-built left part and the remaining old
        // sites: (new bond, carried new-index value, old bond).
        let mut zipper = Array3::zeros((PHYS_DIM, PHYS_DIM, 1));
        for g in 0..PHYS_DIM {
            zipper[(g, g, 0)] = C64::new(1.0, 0.0);
        }

        for (o, old_site) in state.mps.iter().enumerate() {
            let lag = o + 1;
            let weights = &self.lag_weights[lag - 1];
            let (chi_l, _, chi_r) = (old_site.shape()[0], PHYS_DIM, old_site.shape()[2]);
            let old_flat = old_site
                .view()
                .into_shape((chi_l, PHYS_DIM * chi_r))
                .expect("site tensors are standard layout");
            let chi_z = zipper.shape()[0];
            if o + 1 < n {
                // Interior: keep carrying the new-index value on the bond.
                let mut t = Array4::<C64>::zeros((chi_z, PHYS_DIM, PHYS_DIM, chi_r));
                for g in 0..PHYS_DIM {
                    let m = zipper.index_axis(ndarray::Axis(1), g).dot(&old_flat);
                    for p in 0..PHYS_DIM {
                        let w = weights[(g, p)];
                        for a in 0..chi_z {
                            for c in 0..chi_r {
                                t[(a, p, g, c)] = m[(a, p * chi_r + c)] * w;
                            }
                        }
                    }
                }
                let matrix = t
                    .into_shape((chi_z * PHYS_DIM, PHYS_DIM * chi_r))
                    .expect("standard layout");
                let (u, s, vh, disc) =
                    self.split(&matrix, this_step, ZIP_CUTOFF_FACTOR * self.cfg.svd_cutoff)?;
                state.cumulative_discarded_weight += disc;
                let kept = s.len();
                new_mps.push(
                    u.into_shape((chi_z, PHYS_DIM, kept))
                        .expect("standard layout"),
                );
                let mut z = vh;
                for (i, sv) in s.iter().enumerate() {
                    z.row_mut(i).mapv_inplace(|x| x * *sv);
                }
                zipper = z
                    .into_shape((kept, PHYS_DIM, chi_r))
                    .expect("standard layout");
            } else {
                // Terminal: the carried value is consumed here.
                let mut t = Array3::<C64>::zeros((chi_z, PHYS_DIM, chi_r));
                for g in 0..PHYS_DIM {
                    let m = zipper.index_axis(ndarray::Axis(1), g).dot(&old_flat);
                    for p in 0..PHYS_DIM {
                        let w = weights[(g, p)];
                        for a in 0..chi_z {
                            for c in 0..chi_r {
                                t[(a, p, c)] += m[(a, p * chi_r + c)] * w;
                            }
                        }
                    }
                }
                new_mps.push(t);
            }
        }
        state.mps = new_mps;
        state.step = this_step;

        self.sweep_right_to_left(state, this_step)?;

        let target_len = state.step.min(self.k_eff);
        while state.mps.len() > target_len.max(1) {
            fold_oldest(state);
        }

        // Truncation is the only operation that can leak trace (the exact
        // recursion telescopes it to tr rho0). Measure the leak, then
        // restore the invariant for physical seeds so it cannot compound.
        let vec_out = self.readout_vector(state);
        let tr = vec_out[0] + vec_out[4] + vec_out[8];
        state.last_trace = tr;
        if state.renormalize {
            if tr.re <= 0.0 || !tr.re.is_finite() {
                return Err(Error::NonPhysicalState(format!(
                    "readout trace collapsed to {tr} at step {this_step}; \
                     cutoff too aggressive"
                )));
            }
            let scale = C64::new(1.0 / tr.re, 0.0);
            state.mps[0].mapv_inplace(|x| x * scale);
        }
        Ok(())
    }

    /// Right-to-left truncation sweep; leaves every bond at its cutoff rank.
    fn sweep_right_to_left(&self, state: &mut AugmentedState, step: usize) -> Result<()> {
        for i in (1..state.mps.len()).rev() {
            let site = state.mps[i].view();
            let (chi_l, chi_r) = (site.shape()[0], site.shape()[2]);
            let matrix = site
                .into_shape((chi_l, PHYS_DIM * chi_r))
                .expect("standard layout");
            let (u, s, vh, disc) = self.split(&matrix.to_owned(), step, self.cfg.svd_cutoff)?;
            state.cumulative_discarded_weight += disc;
            let kept = s.len();
            state.mps[i] = vh
                .into_shape((kept, PHYS_DIM, chi_r))
                .expect("standard layout");
            let mut carry = u;
            for (j, sv) in s.iter().enumerate() {
                carry.column_mut(j).mapv_inplace(|x| x * *sv);
            }
            let left = state.mps[i - 1].view();
            let (a, al) = (left.shape()[0], left.shape()[2]);
            debug_assert_eq!(al, chi_l);
            let merged = left
                .into_shape((a * PHYS_DIM, chi_l))
                .expect("standard layout")
                .dot(&carry);
            state.mps[i - 1] = merged
                .into_shape((a, PHYS_DIM, kept))
                .expect("standard layout");
        }
        Ok(())
    }

    /// Truncated SVD at the given relative cutoff, returning (U, sigma, V^H,
    /// relative discarded weight) and enforcing the bond cap.
    #[allow(clippy::type_complexity)]
    fn split(
        &self,
        m: &Array2<C64>,
        step: usize,
        cutoff: f64,
    ) -> Result<(Array2<C64>, Vec<f64>, Array2<C64>, f64)> {
        let (u, s, vh) = crate::tensor::svd_economy(m)?;
        let (kept, discarded) = crate::tensor::split_rank(&s, cutoff);
        if let Some(cap) = self.cfg.max_bond_dim {
            if kept > cap {
                return Err(Error::BondCapExceeded {
                    cap,
                    step,
                    reached: kept,
                });
            }
        }
        let total: f64 = s.iter().map(|x| x * x).sum();
        let rel = if total > 0.0 { discarded / total } else { 0.0 };
        Ok((
            u.slice(ndarray::s![.., ..kept]).to_owned(),
            s.iter().take(kept).copied().collect(),
            vh.slice(ndarray::s![..kept, ..]).to_owned(),
            rel,
        ))
    }

    /// Reduced system state: sum-caps over all past slices, the closing
    /// half-step propagator on the newest index.
    pub fn reduced_state(&self, state: &AugmentedState) -> Result<DensityMatrix3> {
        DensityMatrix3::unvectorize(&self.readout_vector(state))
    }

    fn readout_vector(&self, state: &AugmentedState) -> Array1<C64> {
        let mut v = Array1::from_elem(1, C64::new(1.0, 0.0));
        for i in (1..state.mps.len()).rev() {
            v = cap_contract(&state.mps[i], &v);
        }
        let newest = &state.mps[0];
        let chi_r = newest.shape()[2];
        let mut out = Array1::<C64>::zeros(LIOUVILLE_DIM);
        for p in 0..PHYS_DIM {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..chi_r {
                acc += newest[(0, p, c)] * v[c];
            }
            out[p] = acc;
        }
        self.v_half.dot(&out)
    }

    /// Full propagation from a physical initial state, recording observables
    /// at every step including t = 0.
    pub fn run_dynamics(&self, rho0: &DensityMatrix3) -> Result<Trajectory> {
        let mut traj = Trajectory {
            times: Vec::new(),
            rho: Vec::new(),
            p_e: Vec::new(),
            n_cav: Vec::new(),
            coherence: Vec::new(),
            trace: Vec::new(),
            max_bond: Vec::new(),
            discarded_weight: Vec::new(),
        };
        traj.push(
            0.0,
            DensityMatrix3::raw(rho0.matrix().clone())?,
            rho0.trace(),
            1,
            0.0,
        );
        let mut state = self.initialize(rho0)?;
        traj.push(
            self.cfg.dt,
            self.reduced_state(&state)?,
            state.last_readout_trace(),
            state.max_bond_dim(),
            state.cumulative_discarded_weight(),
        );
        for k in 2..=self.cfg.max_steps {
            self.step(&mut state)?;
            traj.push(
                k as f64 * self.cfg.dt,
                self.reduced_state(&state)?,
                state.last_readout_trace(),
                state.max_bond_dim(),
                state.cumulative_discarded_weight(),
            );
        }
        Ok(traj)
    }
}

/// Sum the physical leg (ones-cap) and contract the right bond.
fn cap_contract(site: &Array3<C64>, v: &Array1<C64>) -> Array1<C64> {
    let (chi_l, chi_r) = (site.shape()[0], site.shape()[2]);
    let m = site
        .view()
        .into_shape((chi_l * PHYS_DIM, chi_r))
        .expect("standard layout")
        .dot(v);
    let mut out = Array1::zeros(chi_l);
    for a in 0..chi_l {
        for p in 0..PHYS_DIM {
            out[a] += m[a * PHYS_DIM + p];
        }
    }
    out
}

/// Fold the oldest site out of the window: its sum-cap weight is absorbed
/// into the neighbouring site. The terminal right bond stays at dimension 1,
/// so the right environment of every later truncation is an exact isometry.
fn fold_oldest(state: &mut AugmentedState) {
    let site = state.mps.pop().expect("chain never empty");
    let unit = Array1::from_elem(1, C64::new(1.0, 0.0));
    let w = cap_contract(&site, &unit);
    let last = state.mps.last_mut().expect("fold keeps at least one site");
    let (chi_l, chi_r) = (last.shape()[0], last.shape()[2]);
    debug_assert_eq!(chi_r, w.len());
    let mut folded = Array3::zeros((chi_l, PHYS_DIM, 1));
    for a in 0..chi_l {
        for p in 0..PHYS_DIM {
            let mut acc = C64::new(0.0, 0.0);
            for c in 0..chi_r {
                acc += last[(a, p, c)] * w[c];
            }
            folded[(a, p, 0)] = acc;
        }
    }
    *last = folded;
}

/// Dense, compression-free evaluation of the ADT recursion: 9^k entries,
/// everything exact. This is the golden reference the MPS path must match
/// at zero cutoff.
pub fn brute_force_adt(
    rho0: &DensityMatrix3,
    k: usize,
    sys: &SystemParams,
    cfg: &EngineConfig,
    kernel: &MemoryKernel,
) -> Result<DensityMatrix3> {
    if k < 1 {
        return Err(Error::InvalidArgument("need at least one step".into()));
    }
    if k > MAX_BRUTE_FORCE_STEPS {
        return Err(Error::AdtTooLarge {
            k,
            max: MAX_BRUTE_FORCE_STEPS,
        });
    }
    cfg.validate()?;
    if (kernel.dt() - cfg.dt).abs() > 1e-12 * cfg.dt {
        return Err(Error::InvalidArgument(
            "kernel timestep does not match configuration".into(),
        ));
    }
    if kernel.delta_max() < k - 1 {
        return Err(Error::KernelTooShort {
            available: kernel.delta_max(),
            requested: k - 1,
        });
    }
    let coupling = CouplingDiagonal::emitter_projector();
    let b: Vec<Array2<C64>> = (0..k)
        .map(|lag| influence_tensor(kernel, lag, &coupling).map(|t| t.values().clone()))
        .collect::<Result<_>>()?;
    let liouvillian = lindblad_liouvillian(sys)?;
    let v_half = half_step_propagator(&liouvillian, cfg.dt)?.matrix().clone();
    let v_full = v_half.dot(&v_half);

    let seeded = v_half.dot(&rho0.vectorize());
    let mut adt: Vec<C64> = (0..PHYS_DIM).map(|p| b[0][(p, p)] * seeded[p]).collect();
    for j in 2..=k {
        let old_len = adt.len();
        let msd = old_len / PHYS_DIM; // stride of the previous newest slice
        let mut next = vec![C64::new(0.0, 0.0); old_len * PHYS_DIM];
        for (f, &amp) in adt.iter().enumerate() {
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let prev = f / msd;
            for beta_new in 0..PHYS_DIM {
                let mut w = b[0][(beta_new, beta_new)] * v_full[(beta_new, prev)] * amp;
                // Digits of f, least significant = oldest slice 1, carry
                // lags j-1 down to 1.
                let mut rem = f;
                for l in 1..j {
                    let digit = rem % PHYS_DIM;
                    rem /= PHYS_DIM;
                    w *= b[j - l][(beta_new, digit)];
                }
                next[beta_new * old_len + f] = w;
            }
        }
        adt = next;
    }
    let block = adt.len() / PHYS_DIM;
    let mut summed = Array1::<C64>::zeros(LIOUVILLE_DIM);
    for beta in 0..PHYS_DIM {
        summed[beta] = adt[beta * block..(beta + 1) * block].iter().sum();
    }
    DensityMatrix3::unvectorize(&v_half.dot(&summed))
}

/// Exact rotating-frame coherence envelope of the pure-dephasing limit
/// (g = 0): e^{-Gamma t / 2} exp(-Phi(t)) with
///
///   Phi(t) = int domega J(omega)
///            [(1 - cos omega t) coth(omega / 2 k_B T)
///             + i (sin omega t - omega t)],
///
/// whose linear-in-t imaginary part is the polaron shift: the zero-phonon
/// line sits at omega_e - lambda. Validated against direct propagation in a
/// truncated Fock space.
pub fn ibm_coherence_oracle(
    density: &SpectralDensity,
    temperature_k: f64,
    gamma: f64,
    t: f64,
) -> Result<C64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "time must be finite and >= 0, got {t}"
        )));
    }
    if !gamma.is_finite() || gamma < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "decay rate must be >= 0, got {gamma}"
        )));
    }
    if !temperature_k.is_finite() || temperature_k <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {temperature_k} K"
        )));
    }
    let kbt = thermal_energy_ev(temperature_k);
    let phi = density.weighted_integral(|w| {
        if w == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            C64::new(
                one_minus_cos(w * t) / (0.5 * w / kbt).tanh(),
                -x_minus_sin(w * t),
            )
        }
    });
    Ok((-phi).exp() * (-0.5 * gamma * t).exp())
}
