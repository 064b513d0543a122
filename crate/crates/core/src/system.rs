//! System Hamiltonian, Lindblad generator, and exact small-system dynamics.
//!
//! The closed single-excitation space is spanned by |g,0>, |e,0>, |g,1> in
//! that order (indices 0, 1, 2). Density matrices are vectorized by column
//! stacking: element (row r, column c) sits at linear index 3c + r, so
//! vec(A X B) = (B^T kron A) vec(X).

use ndarray::linalg::kron;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::tensor::expm;

pub const DIM: usize = 3;
pub const LIOUVILLE_DIM: usize = 9;

/// Index of |g,0> in the system basis.
pub const IDX_G0: usize = 0;
/// Index of |e,0> in the system basis.
pub const IDX_E0: usize = 1;
/// Index of |g,1> in the system basis.
pub const IDX_G1: usize = 2;

/// Emitter-cavity parameters. Energies and rates in eV.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Emitter transition energy omega_e.
    pub omega_e: f64,
    /// Cavity mode energy Omega_c.
    pub omega_c: f64,
    /// Emitter-cavity coupling g.
    pub g: f64,
    /// Emitter free-space decay rate Gamma.
    pub gamma: f64,
    /// Cavity loss rate kappa.
    pub kappa: f64,
    /// Work in the frame rotating at omega_e (subtracted from the diagonal).
    pub rotating_frame: bool,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega_e", self.omega_e),
            ("omega_c", self.omega_c),
            ("g", self.g),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("{name} must be finite")));
            }
        }
        if self.gamma < 0.0 || self.kappa < 0.0 {
            return Err(Error::InvalidArgument("decay rates must be >= 0".into()));
        }
        Ok(())
    }
}

/// 3x3 density matrix in the truncated emitter-cavity basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix3 {
    m: Array2<C64>,
}

impl DensityMatrix3 {
    /// Validated physical state: Hermitian, unit trace, positive semidefinite
    /// to numerical tolerance.
    pub fn physical(m: Array2<C64>) -> Result<Self> {
        check_shape(&m)?;
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let herm_defect = (0..DIM)
            .flat_map(|i| (0..DIM).map(move |j| (i, j)))
            .map(|(i, j)| (m[(i, j)] - m[(j, i)].conj()).norm())
            .fold(0.0, f64::max);
        if herm_defect > 1e-12 * scale {
            return Err(Error::NonPhysicalState(format!(
                "Hermiticity defect {herm_defect:.3e}"
            )));
        }
        let tr = trace(&m);
        if (tr - C64::new(1.0, 0.0)).norm() > 1e-12 {
            return Err(Error::NonPhysicalState(format!("trace {tr}")));
        }
        let min_eig = min_eigenvalue_hermitian(&m);
        if min_eig < -1e-10 {
            return Err(Error::NonPhysicalState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self { m })
    }

    /// Unvalidated matrix, e.g. the non-Hermitian seed of a linear-response
    /// run. Entries must still be finite.
    pub fn raw(m: Array2<C64>) -> Result<Self> {
        check_shape(&m)?;
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("entries must be finite".into()));
        }
        Ok(Self { m })
    }

    pub fn pure(ket: [C64; DIM]) -> Self {
        let mut m = Array2::zeros((DIM, DIM));
        for r in 0..DIM {
            for c in 0..DIM {
                m[(r, c)] = ket[r] * ket[c].conj();
            }
        }
        Self { m }
    }

    /// |g,0><g,0|.
    pub fn ground() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::pure([one, zero, zero])
    }

    /// |e,0><e,0|.
    pub fn excited() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self::pure([zero, one, zero])
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn trace(&self) -> C64 {
        trace(&self.m)
    }

    /// Excited-emitter population <e,0|rho|e,0>.
    pub fn p_e(&self) -> f64 {
        self.m[(IDX_E0, IDX_E0)].re
    }

    /// Cavity photon number <g,1|rho|g,1> (truncated space: occupation of the
    /// one-photon state).
    pub fn n_cav(&self) -> f64 {
        self.m[(IDX_G1, IDX_G1)].re
    }

    /// Emitter-cavity coherence <e,0|rho|g,1>.
    pub fn coherence(&self) -> C64 {
        self.m[(IDX_E0, IDX_G1)]
    }

    /// Frobenius norm of rho - rho^dagger.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut acc = 0.0;
        for r in 0..DIM {
            for c in 0..DIM {
                acc += (self.m[(r, c)] - self.m[(c, r)].conj()).norm_sqr();
            }
        }
        acc.sqrt()
    }

    /// Smallest eigenvalue of the Hermitian part (rho + rho^dagger) / 2.
    /// Positivity diagnostic: a physical state never dips below zero beyond
    /// numerical error.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        use ndarray_linalg::Eigh;
        let half = Array2::from_shape_fn((DIM, DIM), |(r, c)| {
            (self.m[(r, c)] + self.m[(c, r)].conj()) * C64::new(0.5, 0.0)
        });
        let (vals, _) = half.eigh(ndarray_linalg::UPLO::Lower)?;
        Ok(vals.iter().copied().fold(f64::INFINITY, f64::min))
    }

    /// Column-stacked vector, index 3*col + row.
    pub fn vectorize(&self) -> Array1<C64> {
        let mut v = Array1::zeros(LIOUVILLE_DIM);
        for c in 0..DIM {
            for r in 0..DIM {
                v[3 * c + r] = self.m[(r, c)];
            }
        }
        v
    }

    pub fn unvectorize(v: &Array1<C64>) -> Result<Self> {
        if v.len() != LIOUVILLE_DIM {
            return Err(Error::ShapeMismatch(format!(
                "vectorized state must have 9 entries, got {}",
                v.len()
            )));
        }
        let mut m = Array2::zeros((DIM, DIM));
        for c in 0..DIM {
            for r in 0..DIM {
                m[(r, c)] = v[3 * c + r];
            }
        }
        Ok(Self { m })
    }
}

fn check_shape(m: &Array2<C64>) -> Result<()> {
    if m.nrows() != DIM || m.ncols() != DIM {
        return Err(Error::ShapeMismatch(format!(
            "density matrix must be 3x3, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

fn trace(m: &Array2<C64>) -> C64 {
    (0..m.nrows().min(m.ncols())).map(|i| m[(i, i)]).sum()
}

/// Smallest eigenvalue of a (numerically) Hermitian 3x3 matrix, via the
/// symmetrized part. Closed-form cubic is avoided; bisection on the
/// characteristic polynomial is overkill; LAPACK does fine.
fn min_eigenvalue_hermitian(m: &Array2<C64>) -> f64 {
    use ndarray_linalg::{Eigh, UPLO};
    let h = (m + &m.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
    match h.eigh(UPLO::Lower) {
        Ok((vals, _)) => vals.iter().copied().fold(f64::INFINITY, f64::min),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// 9x9 superoperator acting on column-stacked density matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator9 {
    m: Array2<C64>,
}

impl Superoperator9 {
    pub fn new(m: Array2<C64>) -> Result<Self> {
        if m.nrows() != LIOUVILLE_DIM || m.ncols() != LIOUVILLE_DIM {
            return Err(Error::ShapeMismatch(format!(
                "superoperator must be 9x9, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("entries must be finite".into()));
        }
        Ok(Self { m })
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.m
    }

    pub fn apply_vec(&self, v: &Array1<C64>) -> Array1<C64> {
        self.m.dot(v)
    }

    pub fn apply(&self, rho: &DensityMatrix3) -> Result<DensityMatrix3> {
        DensityMatrix3::unvectorize(&self.m.dot(&rho.vectorize()))
    }

    pub fn compose(&self, other: &Superoperator9) -> Superoperator9 {
        Superoperator9 {
            m: self.m.dot(&other.m),
        }
    }
}

/// Jaynes-Cummings Hamiltonian on the truncated basis. In the rotating frame
/// omega_e is subtracted from every excited diagonal entry, leaving
/// diag(0, 0, Omega_c - omega_e).
pub fn jc_hamiltonian(sys: &SystemParams) -> Array2<C64> {
    let mut h = Array2::<C64>::zeros((DIM, DIM));
    let shift = if sys.rotating_frame { sys.omega_e } else { 0.0 };
    h[(IDX_E0, IDX_E0)] = C64::new(sys.omega_e - shift, 0.0);
    h[(IDX_G1, IDX_G1)] = C64::new(sys.omega_c - shift, 0.0);
    h[(IDX_E0, IDX_G1)] = C64::new(sys.g, 0.0);
    h[(IDX_G1, IDX_E0)] = C64::new(sys.g, 0.0);
    h
}

/// Emitter lowering operator |g,0><e,0|.
pub fn sigma_minus() -> Array2<C64> {
    let mut o = Array2::<C64>::zeros((DIM, DIM));
    o[(IDX_G0, IDX_E0)] = C64::new(1.0, 0.0);
    o
}

/// Cavity annihilation restricted to the truncated space, |g,0><g,1|.
pub fn cavity_lowering() -> Array2<C64> {
    let mut o = Array2::<C64>::zeros((DIM, DIM));
    o[(IDX_G0, IDX_G1)] = C64::new(1.0, 0.0);
    o
}

/// Column-stacked Lindblad generator
///   L = -i (I kron H - H^T kron I)
///     + sum_o r_o (conj(o) kron o - 1/2 I kron o^H o - 1/2 (o^H o)^T kron I).
pub fn lindblad_liouvillian(sys: &SystemParams) -> Result<Superoperator9> {
    sys.validate()?;
    let h = jc_hamiltonian(sys);
    let id = Array2::<C64>::eye(DIM);
    let i = C64::new(0.0, 1.0);

    let mut l = kron(&id, &h).mapv(|z| -i * z) + kron(&h.t().to_owned(), &id).mapv(|z| i * z);

    for (rate, op) in [(sys.gamma, sigma_minus()), (sys.kappa, cavity_lowering())] {
        if rate == 0.0 {
            continue;
        }
        let op_dag_op = op.t().mapv(|z| z.conj()).dot(&op);
        let jump = kron(&op.mapv(|z| z.conj()), &op);
        let left = kron(&id, &op_dag_op);
        let right = kron(&op_dag_op.t().to_owned(), &id);
        l = l + jump.mapv(|z| z * rate)
            - left.mapv(|z| z * (0.5 * rate))
            - right.mapv(|z| z * (0.5 * rate));
    }
    Superoperator9::new(l)
}

/// exp(L dt / 2), the half-step system propagator of the symmetric splitting.
pub fn half_step_propagator(l: &Superoperator9, dt: f64) -> Result<Superoperator9> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "time step must be positive and finite, got {dt}"
        )));
    }
    let half = l.matrix().mapv(|z| z * (0.5 * dt));
    Superoperator9::new(expm(&half)?)
}

/// Phonon-free reference dynamics: rho(t) = unvec(exp(L t) vec(rho0)) on an
/// ascending time grid (t >= 0). Each point is exponentiated directly, so
/// there is no step-size error to control.
pub fn exact_lindblad_dynamics(
    sys: &SystemParams,
    rho0: &DensityMatrix3,
    times: &[f64],
) -> Result<Vec<DensityMatrix3>> {
    let mut prev = f64::NEG_INFINITY;
    for &t in times {
        if !t.is_finite() || t < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "times must be finite and >= 0, got {t}"
            )));
        }
        if t < prev {
            return Err(Error::InvalidArgument("time grid must be ascending".into()));
        }
        prev = t;
    }
    let l = lindblad_liouvillian(sys)?;
    let v0 = rho0.vectorize();
    times
        .iter()
        .map(|&t| {
            let u = expm(&l.matrix().mapv(|z| z * t))?;
            DensityMatrix3::unvectorize(&u.dot(&v0))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::test_support::SplitMix64;

    fn resonant(g: f64, gamma: f64, kappa: f64, rotating: bool) -> SystemParams {
        SystemParams {
            omega_e: 2.0,
            omega_c: 2.0,
            g,
            gamma,
            kappa,
            rotating_frame: rotating,
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_with_expected_spectrum() {
        use ndarray_linalg::{Eigh, UPLO};
        let h = jc_hamiltonian(&resonant(0.05, 0.0, 0.0, true));
        for i in 0..DIM {
            for j in 0..DIM {
                assert!((h[(i, j)] - h[(j, i)].conj()).norm() < 1e-15);
            }
        }
        let (mut vals, _) = h.eigh(UPLO::Lower).unwrap();
        vals.as_slice_mut().unwrap().sort_by(f64::total_cmp);
        let want = [-0.05, 0.0, 0.05];
        for (v, w) in vals.iter().zip(want) {
            assert!((v - w).abs() < 1e-14);
        }
    }

    #[test]
    fn vectorization_order_is_column_stacked() {
        let mut m = Array2::<C64>::zeros((3, 3));
        m[(0, 1)] = C64::new(0.25, -0.5); // row 0, col 1 -> index 3*1 + 0
        m[(2, 0)] = C64::new(0.75, 0.0); // row 2, col 0 -> index 2
        let rho = DensityMatrix3::raw(m).unwrap();
        let v = rho.vectorize();
        assert_eq!(v[3], C64::new(0.25, -0.5));
        assert_eq!(v[2], C64::new(0.75, 0.0));
        let back = DensityMatrix3::unvectorize(&v).unwrap();
        assert_eq!(back, rho);
    }

    #[test]
    fn positivity_diagnostics_track_known_spectra() {
        let mut m = Array2::<C64>::zeros((3, 3));
        m[(0, 0)] = C64::new(0.7, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        m[(2, 2)] = C64::new(-0.2, 0.0);
        m[(0, 1)] = C64::new(0.1, 0.05);
        m[(1, 0)] = C64::new(0.1, -0.05);
        let rho = DensityMatrix3::raw(m).unwrap();
        assert!(rho.hermiticity_deviation() < 1e-15);
        // Hermitian, block diagonal: the isolated entry -0.2 is the smallest
        // eigenvalue since the 2x2 block has eigenvalues above 0.4.
        assert!((rho.min_eigenvalue().unwrap() + 0.2).abs() < 1e-12);

        let mut n = Array2::<C64>::zeros((3, 3));
        n[(0, 1)] = C64::new(0.3, 0.0);
        let skew = DensityMatrix3::raw(n).unwrap();
        assert!((skew.hermiticity_deviation() - 0.3 * 2f64.sqrt()).abs() < 1e-15);
        // Hermitian part is 0.15 on the off-diagonal pair: eigenvalues
        // (+0.15, -0.15, 0).
        assert!((skew.min_eigenvalue().unwrap() + 0.15).abs() < 1e-12);
    }

    #[test]
    fn liouvillian_vanishes_without_dynamics() {
        let sys = SystemParams {
            omega_e: 2.0,
            omega_c: 2.0,
            g: 0.0,
            gamma: 0.0,
            kappa: 0.0,
            rotating_frame: true,
        };
        // Rotating frame, resonant cavity: H = 0 and no dissipators.
        let l = lindblad_liouvillian(&sys).unwrap();
        assert!(l.matrix().iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn liouvillian_is_trace_preserving() {
        let l = lindblad_liouvillian(&resonant(0.03, 0.01, 0.02, false)).unwrap();
        // The trace functional (sum of diagonal positions 0, 4, 8) must be a
        // left null vector of L.
        for col in 0..LIOUVILLE_DIM {
            let s: C64 = [0usize, 4, 8].iter().map(|&r| l.matrix()[(r, col)]).sum();
            assert!(s.norm() < 1e-14);
        }
    }

    #[test]
    fn emitter_population_decays_exponentially() {
        let gamma = 0.004;
        let sys = resonant(0.0, gamma, 0.0, true);
        let times = [0.0, 37.0, 190.0, 512.0];
        let traj = exact_lindblad_dynamics(&sys, &DensityMatrix3::excited(), &times).unwrap();
        for (rho, &t) in traj.iter().zip(&times) {
            assert!((rho.p_e() - (-gamma * t).exp()).abs() < 1e-12);
            assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn coherence_decays_at_half_rate_with_phase() {
        let gamma = 0.01;
        let omega_e = 1.3;
        let sys = SystemParams {
            omega_e,
            omega_c: 1.3,
            g: 0.0,
            gamma,
            kappa: 0.0,
            rotating_frame: false,
        };
        let one = C64::new(1.0, 0.0);
        let ket = [one / 2f64.sqrt(), one / 2f64.sqrt(), C64::new(0.0, 0.0)];
        let rho0 = DensityMatrix3::pure(ket);
        let t = 41.0;
        let traj = exact_lindblad_dynamics(&sys, &rho0, &[t]).unwrap();
        let want = C64::new(0.0, -omega_e * t).exp() * (-0.5 * gamma * t).exp() * 0.5;
        let got = traj[0].matrix()[(IDX_E0, IDX_G0)];
        assert!((got - want).norm() < 1e-12);
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let g = 0.05;
        let sys = resonant(g, 0.0, 0.0, true);
        let times: Vec<f64> = (0..=40).map(|k| k as f64 * 3.3).collect();
        let traj = exact_lindblad_dynamics(&sys, &DensityMatrix3::excited(), &times).unwrap();
        for (rho, &t) in traj.iter().zip(&times) {
            let want = (g * t).cos().powi(2);
            assert!((rho.p_e() - want).abs() < 1e-11);
            assert!((rho.p_e() + rho.n_cav() + rho.matrix()[(0, 0)].re - 1.0).abs() < 1e-11);
        }
    }

    #[test]
    fn detuned_rabi_transfer_amplitude() {
        let g = 0.02;
        let delta = 0.03;
        let sys = SystemParams {
            omega_e: 2.0,
            omega_c: 2.0 + delta,
            g,
            gamma: 0.0,
            kappa: 0.0,
            rotating_frame: true,
        };
        let omega_r = (4.0 * g * g + delta * delta).sqrt();
        let amp = 4.0 * g * g / (omega_r * omega_r);
        let times = [5.0, 23.0, 77.0, 141.0];
        let traj = exact_lindblad_dynamics(&sys, &DensityMatrix3::excited(), &times).unwrap();
        for (rho, &t) in traj.iter().zip(&times) {
            let want = amp * (0.5 * omega_r * t).sin().powi(2);
            assert!((rho.n_cav() - want).abs() < 1e-11);
        }
    }

    #[test]
    fn frames_agree_on_populations() {
        let mut lab = resonant(0.015, 0.004, 0.05, false);
        lab.omega_c = 2.03;
        let mut rot = lab.clone();
        rot.rotating_frame = true;
        let times = [0.0, 11.0, 53.0, 220.0];
        let a = exact_lindblad_dynamics(&lab, &DensityMatrix3::excited(), &times).unwrap();
        let b = exact_lindblad_dynamics(&rot, &DensityMatrix3::excited(), &times).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.p_e() - y.p_e()).abs() < 1e-9);
            assert!((x.n_cav() - y.n_cav()).abs() < 1e-9);
        }
    }

    #[test]
    fn half_steps_compose_to_full_step() {
        let sys = resonant(0.05, 0.004, 0.015, true);
        let l = lindblad_liouvillian(&sys).unwrap();
        let dt = 5.0;
        let half = half_step_propagator(&l, dt).unwrap();
        let full = Superoperator9::new(expm(&l.matrix().mapv(|z| z * dt)).unwrap()).unwrap();
        let err = half
            .compose(&half)
            .matrix()
            .iter()
            .zip(full.matrix().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-12);
    }

    #[test]
    fn propagated_state_stays_physical() {
        let mut rng = SplitMix64(2024);
        // Random physical rho0: A A^H normalized.
        let mut a = Array2::<C64>::zeros((DIM, DIM));
        for i in 0..DIM {
            for j in 0..DIM {
                a[(i, j)] = rng.next_c64();
            }
        }
        let mut m = a.dot(&a.t().mapv(|z| z.conj()));
        let tr = trace(&m);
        m.mapv_inplace(|z| z / tr);
        let rho0 = DensityMatrix3::physical(m).unwrap();
        let sys = resonant(0.05, 0.01, 0.03, false);
        for rho in exact_lindblad_dynamics(&sys, &rho0, &[13.0, 67.0, 241.0]).unwrap() {
            assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-11);
            assert!(min_eigenvalue_hermitian(rho.matrix()) > -1e-11);
            DensityMatrix3::physical(rho.matrix().clone()).unwrap();
        }
    }

    #[test]
    fn physical_constructor_rejects_bad_states() {
        let mut m = Array2::<C64>::zeros((DIM, DIM));
        m[(0, 0)] = C64::new(1.0, 0.0);
        m[(0, 1)] = C64::new(0.2, 0.0);
        // Missing conjugate partner: not Hermitian.
        assert!(DensityMatrix3::physical(m.clone()).is_err());
        m[(1, 0)] = C64::new(0.2, 0.0);
        m[(1, 1)] = C64::new(0.5, 0.0);
        // Trace 1.5.
        assert!(DensityMatrix3::physical(m).is_err());
        let mut n = Array2::<C64>::zeros((DIM, DIM));
        n[(0, 0)] = C64::new(1.5, 0.0);
        n[(1, 1)] = C64::new(-0.5, 0.0);
        // Unit trace but indefinite.
        assert!(DensityMatrix3::physical(n).is_err());
    }

    #[test]
    fn unsorted_time_grid_is_rejected() {
        let sys = resonant(0.0, 0.0, 0.0, true);
        let err = exact_lindblad_dynamics(&sys, &DensityMatrix3::ground(), &[3.0, 1.0]);
        assert!(err.is_err());
    }
}
