//! Discrete influence tensors and the per-step matrix product operator.
//!
//! One timestep of bath influence on the augmented density tensor factorizes
//! into pairwise tensors
//!
//!   [b_Delta]_{beta_i beta_j}
//!     = exp(-(lambda_{s_i} - lambda_{r_i})
//!            (eta_Delta lambda_{s_j} - conj(eta_Delta) lambda_{r_j})),
//!
//! where beta = 3 r + s packs the bra (column) index r and ket (row) index s
//! of the vectorized density matrix, matching the column-stacking order of
//! the system module, and lambda is the diagonal of the coupling operator.
//! The step MPO chains these tensors with the bond carrying the value of the
//! newest index: site order runs newest to oldest, each site reads the bond,
//! weighs its physical leg diagonally by b_Delta[new, old], and passes the
//! bond along. Contracting all bonds therefore reproduces the literal
//! product over lags, which is the correctness oracle for the index layout.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::bath::MemoryKernel;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// Dimension of the vectorized system space.
pub const PHYS_DIM: usize = 9;

/// Diagonal of the system-bath coupling operator in the fixed system basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingDiagonal {
    lambda: [f64; 3],
}

impl CouplingDiagonal {
    pub fn new(lambda: [f64; 3]) -> Result<Self> {
        if lambda.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "coupling eigenvalues must be finite".into(),
            ));
        }
        Ok(Self { lambda })
    }

    /// Coupling through the emitter excited-state projector: diagonal
    /// (0, 1, 0) over (|g,0>, |e,0>, |g,1>). The phonons see the emitter
    /// excitation only, not the cavity photon.
    pub fn emitter_projector() -> Self {
        Self {
            lambda: [0.0, 1.0, 0.0],
        }
    }

    pub fn lambda(&self) -> &[f64; 3] {
        &self.lambda
    }

    /// Eigenvalue pair (bra, ket) addressed by a compound index.
    fn pair(&self, beta: usize) -> (f64, f64) {
        (self.lambda[beta / 3], self.lambda[beta % 3])
    }
}

/// 9x9 influence tensor at a fixed lag. Rows index the later time slice.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceTensor {
    delta: usize,
    values: Array2<C64>,
}

impl InfluenceTensor {
    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn values(&self) -> &Array2<C64> {
        &self.values
    }
}

/// Evaluate the influence tensor at lag `delta` from a memory kernel.
pub fn influence_tensor(
    kernel: &MemoryKernel,
    delta: usize,
    coupling: &CouplingDiagonal,
) -> Result<InfluenceTensor> {
    if delta > kernel.delta_max() {
        return Err(Error::KernelTooShort {
            available: kernel.delta_max(),
            requested: delta,
        });
    }
    let eta = kernel.eta()[delta];
    let mut values = Array2::zeros((PHYS_DIM, PHYS_DIM));
    for bi in 0..PHYS_DIM {
        let (lr_i, ls_i) = coupling.pair(bi);
        for bj in 0..PHYS_DIM {
            let (lr_j, ls_j) = coupling.pair(bj);
            let exponent = -(ls_i - lr_i) * (eta * ls_j - eta.conj() * lr_j);
            values[(bi, bj)] = exponent.exp();
        }
    }
    Ok(InfluenceTensor { delta, values })
}

/// Promote a pairwise influence tensor to the rank-4 MPO site
/// (physical-out, bond-in, physical-in, bond-out): diagonal in the physical
/// pair, pass-through in the bond pair, weighted by b[bond, physical].
pub fn promote_rank4(b: &InfluenceTensor) -> DenseTensor {
    let mut site = DenseTensor::zeros(&[PHYS_DIM, PHYS_DIM, PHYS_DIM, PHYS_DIM]);
    for gamma in 0..PHYS_DIM {
        for p in 0..PHYS_DIM {
            site.set(&[p, gamma, p, gamma], b.values[(gamma, p)]);
        }
    }
    site
}

/// Per-step influence MPO. Sites run from the newest time slice (lag 0,
/// growth site with trivial input leg) to the oldest covered slice, all
/// rank 4 in the layout (physical-out, bond-in, physical-in, bond-out) with
/// dummy unit legs at the chain ends.
#[derive(Debug, Clone)]
pub struct StepMpo {
    sites: Vec<DenseTensor>,
}

impl StepMpo {
    pub fn sites(&self) -> &[DenseTensor] {
        &self.sites
    }

    pub fn sites_mut(&mut self) -> &mut [DenseTensor] {
        &mut self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Contract all internal bonds into the dense step operator. Output legs
    /// are (new index, then per past slice newest-to-oldest), input legs the
    /// matching past slices. Exponential in site count; small chains only.
    pub fn contract_dense(&self) -> Result<DenseTensor> {
        let mut acc = self.sites[0].clone();
        for site in &self.sites[1..] {
            // Bond-out of the accumulated chain is its final axis.
            let bond = acc.rank() - 1;
            acc = crate::tensor::contract(&acc, site, &[(bond, 1)])?;
        }
        // Axes now alternate (p_out, p_in) per site with two unit bond axes,
        // one leading inside the first block and one trailing. Collect
        // physical axes: outs first, then ins, dropping unit legs.
        let n = self.sites.len();
        // acc axes: site0 contributes (p_out0, bond_in0=1, p_in0=1) then each
        // later site (p_out, p_in) and the final bond (=1).
        let mut order: Vec<usize> = Vec::new();
        order.push(0);
        for s in 1..n {
            order.push(1 + 2 * s);
        }
        order.push(1);
        order.push(2);
        for s in 1..n {
            order.push(2 + 2 * s);
        }
        order.push(2 * n + 1);
        let t = acc.permute(&order)?;
        let dims: Vec<usize> = t
            .shape()
            .iter()
            .copied()
            .filter(|&d| d != 1)
            .collect();
        t.reshape(&dims)
    }
}

/// Assemble the influence MPO for timestep `k` (1-based): sites for lags
/// 0 ..= L with L = min(k - 1, memory cutoff). Lags beyond the cutoff carry
/// no influence (all-ones tensors) and are simply not represented.
pub fn build_step_mpo(
    kernel: &MemoryKernel,
    k: usize,
    coupling: &CouplingDiagonal,
    memory_cutoff: Option<usize>,
) -> Result<StepMpo> {
    if k < 1 {
        return Err(Error::InvalidArgument("step index must be >= 1".into()));
    }
    let max_lag = match memory_cutoff {
        Some(kc) => (k - 1).min(kc),
        None => k - 1,
    };
    if max_lag > kernel.delta_max() {
        return Err(Error::KernelTooShort {
            available: kernel.delta_max(),
            requested: max_lag,
        });
    }
    let b0 = influence_tensor(kernel, 0, coupling)?;
    let mut sites = Vec::with_capacity(max_lag + 1);
    if max_lag == 0 {
        let mut site = DenseTensor::zeros(&[PHYS_DIM, 1, 1, 1]);
        for p in 0..PHYS_DIM {
            site.set(&[p, 0, 0, 0], b0.values()[(p, p)]);
        }
        sites.push(site);
        return Ok(StepMpo { sites });
    }
    // Growth site: no physical input, bond-out broadcasts the new index.
    let mut head = DenseTensor::zeros(&[PHYS_DIM, 1, 1, PHYS_DIM]);
    for p in 0..PHYS_DIM {
        head.set(&[p, 0, 0, p], b0.values()[(p, p)]);
    }
    sites.push(head);
    for lag in 1..max_lag {
        sites.push(promote_rank4(&influence_tensor(kernel, lag, coupling)?));
    }
    // Terminal site consumes the bond.
    let b_last = influence_tensor(kernel, max_lag, coupling)?;
    let mut tail = DenseTensor::zeros(&[PHYS_DIM, PHYS_DIM, PHYS_DIM, 1]);
    for gamma in 0..PHYS_DIM {
        for p in 0..PHYS_DIM {
            tail.set(&[p, gamma, p, 0], b_last.values()[(gamma, p)]);
        }
    }
    sites.push(tail);
    Ok(StepMpo { sites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::{Mode, ModeList, SpectralDensity};

    fn test_kernel(delta_max: usize) -> MemoryKernel {
        let modes = ModeList::new(vec![Mode {
            energy: 0.1,
            hrf: 0.2,
        }])
        .unwrap();
        SpectralDensity::analytic_test(&modes)
            .memory_kernel(4.0, 5.0, delta_max)
            .unwrap()
    }

    #[test]
    fn zero_kernel_gives_all_ones() {
        let kernel = MemoryKernel::zero(5.0, 4.0, 3).unwrap();
        let b = influence_tensor(&kernel, 2, &CouplingDiagonal::emitter_projector()).unwrap();
        assert!(b
            .values()
            .iter()
            .all(|v| (v - C64::new(1.0, 0.0)).norm() == 0.0));
    }

    #[test]
    fn rows_with_equal_coupling_eigenvalues_are_ones() {
        let b = influence_tensor(&test_kernel(2), 1, &CouplingDiagonal::emitter_projector())
            .unwrap();
        for bi in [0usize, 2, 4, 6, 8] {
            for bj in 0..PHYS_DIM {
                assert_eq!(b.values()[(bi, bj)], C64::new(1.0, 0.0));
            }
        }
        // A row that does accumulate phase, for contrast.
        assert!((b.values()[(1, 1)] - C64::new(1.0, 0.0)).norm() > 1e-3);
    }

    #[test]
    fn diagonal_entry_matches_scalar_formula() {
        let kernel = test_kernel(1);
        let b = influence_tensor(&kernel, 0, &CouplingDiagonal::emitter_projector()).unwrap();
        // beta = 1 is (bra g, ket e): lambda_s = 1, lambda_r = 0, so the
        // (1, 1) entry must be exp(-eta_0).
        let eta0 = kernel.eta()[0];
        assert!((b.values()[(1, 1)] - (-eta0).exp()).norm() < 1e-15);
        // Conjugate-branch entry beta = 3 is (bra e, ket g): exp(-eta_0*).
        assert!((b.values()[(3, 3)] - (-eta0.conj()).exp()).norm() < 1e-15);
        assert!(b.values().iter().all(|v| v.norm() > 0.0));
    }

    #[test]
    fn lag_out_of_range_is_reported() {
        match influence_tensor(&test_kernel(2), 3, &CouplingDiagonal::emitter_projector()) {
            Err(Error::KernelTooShort {
                available,
                requested,
            }) => {
                assert_eq!(available, 2);
                assert_eq!(requested, 3);
            }
            other => panic!("expected kernel-too-short, got {other:?}"),
        }
    }

    #[test]
    fn promotion_pattern_and_recovery() {
        let b = influence_tensor(&test_kernel(1), 1, &CouplingDiagonal::emitter_projector())
            .unwrap();
        let site = promote_rank4(&b);
        assert_eq!(site.shape(), &[9, 9, 9, 9]);
        let nonzero = site.flat().iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzero, 81);
        for gamma in 0..PHYS_DIM {
            for p in 0..PHYS_DIM {
                assert_eq!(site.get(&[p, gamma, p, gamma]), b.values()[(gamma, p)]);
            }
        }
    }

    #[test]
    fn single_site_mpo_is_self_interaction_diagonal() {
        let kernel = test_kernel(0);
        let mpo = build_step_mpo(&kernel, 1, &CouplingDiagonal::emitter_projector(), None)
            .unwrap();
        assert_eq!(mpo.len(), 1);
        let b0 = influence_tensor(&kernel, 0, &CouplingDiagonal::emitter_projector()).unwrap();
        for p in 0..PHYS_DIM {
            assert_eq!(mpo.sites()[0].get(&[p, 0, 0, 0]), b0.values()[(p, p)]);
        }
    }

    #[test]
    fn dense_contraction_matches_product_formula() {
        let coupling = CouplingDiagonal::emitter_projector();
        for k in [2usize, 3, 4] {
            let kernel = test_kernel(k - 1);
            let mpo = build_step_mpo(&kernel, k, &coupling, None).unwrap();
            assert_eq!(mpo.len(), k);
            let dense = mpo.contract_dense().unwrap();
            // Legs: (beta_k, outs newest..oldest, ins newest..oldest).
            assert_eq!(dense.rank(), 2 * k - 1);
            let b: Vec<InfluenceTensor> = (0..k)
                .map(|lag| influence_tensor(&kernel, lag, &coupling).unwrap())
                .collect();
            let past = k - 1;
            let mut idx = vec![0usize; 2 * k - 1];
            // Exhaustive entrywise check is 9^(2k-1) at k = 4; restrict to a
            // deterministic stride through the index space instead.
            let volume: usize = PHYS_DIM.pow((2 * k - 1) as u32);
            let stride = (volume / 4096).max(1) | 1;
            let mut flat = 0usize;
            while flat < volume {
                let mut rem = flat;
                for slot in idx.iter_mut().rev() {
                    *slot = rem % PHYS_DIM;
                    rem /= PHYS_DIM;
                }
                let beta_k = idx[0];
                let outs = &idx[1..1 + past];
                let ins = &idx[1 + past..];
                let mut want = C64::new(0.0, 0.0);
                if outs == ins {
                    want = b[0].values()[(beta_k, beta_k)];
                    for (slot, &beta_l) in outs.iter().enumerate() {
                        // Slot s holds slice k-1-s, i.e. lag s+1.
                        want *= b[slot + 1].values()[(beta_k, beta_l)];
                    }
                }
                assert!(
                    (dense.get(&idx) - want).norm() <= 1e-12 * want.norm().max(1.0),
                    "mismatch at {idx:?}"
                );
                flat += stride;
            }
        }
    }

    #[test]
    fn zero_kernel_mpo_contracts_to_identity_on_history() {
        let kernel = MemoryKernel::zero(5.0, 4.0, 2).unwrap();
        let mpo = build_step_mpo(&kernel, 3, &CouplingDiagonal::emitter_projector(), None)
            .unwrap();
        let dense = mpo.contract_dense().unwrap();
        for beta_k in 0..PHYS_DIM {
            for o1 in 0..PHYS_DIM {
                for o2 in 0..PHYS_DIM {
                    for i1 in 0..PHYS_DIM {
                        for i2 in 0..PHYS_DIM {
                            let want = if o1 == i1 && o2 == i2 { 1.0 } else { 0.0 };
                            let got = dense.get(&[beta_k, o1, o2, i1, i2]);
                            assert_eq!(got, C64::new(want, 0.0));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn memory_cutoff_limits_site_count() {
        let kernel = test_kernel(2);
        let coupling = CouplingDiagonal::emitter_projector();
        let mpo = build_step_mpo(&kernel, 6, &coupling, Some(2)).unwrap();
        assert_eq!(mpo.len(), 3);
        // Without the cutoff the same kernel is too short for k = 6.
        assert!(build_step_mpo(&kernel, 6, &coupling, None).is_err());
    }

    #[test]
    fn influence_scales_as_entrywise_power() {
        let modes = ModeList::new(vec![Mode {
            energy: 0.08,
            hrf: 0.5,
        }])
        .unwrap();
        let full = SpectralDensity::analytic_test(&modes);
        let half = full.scale_hrf(0.5).unwrap();
        let coupling = CouplingDiagonal::emitter_projector();
        let k_full = full.memory_kernel(4.0, 3.0, 4).unwrap();
        let k_half = half.memory_kernel(4.0, 3.0, 4).unwrap();
        for lag in 0..=4 {
            let b_full = influence_tensor(&k_full, lag, &coupling).unwrap();
            let b_half = influence_tensor(&k_half, lag, &coupling).unwrap();
            for (h, f) in b_half.values().iter().zip(b_full.values()) {
                assert!((h * h - f).norm() < 1e-14);
            }
        }
    }
}
