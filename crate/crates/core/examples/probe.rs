//! Bond-growth probe used while sizing tests; not part of the library.

use cavity_tempo::bath::{Mode, ModeList, SpectralDensity};
use cavity_tempo::engine::{EngineConfig, TempoEngine};
use cavity_tempo::system::{DensityMatrix3, SystemParams};
use ndarray::Array2;
use num_complex::Complex64 as C64;
use std::time::Instant;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let get = |i: usize, d: f64| -> f64 { args.get(i).map(|s| s.parse().unwrap()).unwrap_or(d) };
    let eps = get(1, 1e-6);
    let window = get(2, 40.0) as usize;
    let steps = get(3, 100.0) as usize;
    let g = get(4, 0.015);
    let kappa = get(5, 0.05);
    let nu = get(6, 0.1);
    let s_hr = get(7, 0.3);
    let sigma = get(8, 0.010);
    let dt = get(9, 5.0);
    let response = args.get(10).map(|s| s == "response").unwrap_or(false);
    let gamma = get(11, 0.004);
    let temp = get(12, 4.0);

    let modes = ModeList::new(vec![Mode {
        energy: nu,
        hrf: s_hr,
    }])
    .unwrap();
    let density = SpectralDensity::broaden(&modes, sigma, None).unwrap();
    let kernel = density.memory_kernel(temp, dt, window).unwrap();
    let sys = SystemParams {
        omega_e: 2.0,
        omega_c: 2.0 - density.reorganization_energy(),
        g,
        gamma,
        kappa,
        rotating_frame: true,
    };
    let cfg = EngineConfig {
        dt,
        svd_cutoff: eps,
        memory_cutoff: Some(window),
        max_steps: steps,
        max_bond_dim: None,
    };
    let engine = TempoEngine::new(&sys, &cfg, &kernel).unwrap();
    let t0 = Instant::now();
    let mut state = if response {
        let mut m = Array2::<C64>::zeros((3, 3));
        m[(1, 0)] = C64::new(1.0, 0.0);
        engine
            .initialize_unphysical(&DensityMatrix3::raw(m).unwrap())
            .unwrap()
    } else {
        engine.initialize(&DensityMatrix3::excited()).unwrap()
    };
    let mut worst_leak = 0.0f64;
    let mut worst_herm = 0.0f64;
    let mut worst_eig = f64::INFINITY;
    for k in 2..=steps {
        engine.step(&mut state).unwrap();
        let rho = engine.reduced_state(&state).unwrap();
        let m = rho.matrix();
        let herm = rho.hermiticity_deviation();
        let min_eig = rho.min_eigenvalue().unwrap();
        let leak = (state.last_readout_trace().re - 1.0).abs();
        worst_leak = worst_leak.max(leak);
        worst_herm = worst_herm.max(herm);
        worst_eig = worst_eig.min(min_eig);
        if k % 10 == 0 || k == steps {
            let obs = if response {
                m[(1, 0)].norm()
            } else {
                rho.n_cav()
            };
            println!(
                "step {:4}  sites {:3}  maxbond {:4}  t {:8.2?}  obs {:+.4e}  leak {:+.2e}  herm {:+.2e}  mineig {:+.2e}",
                k,
                state.num_sites(),
                state.max_bond_dim(),
                t0.elapsed(),
                obs,
                leak,
                herm,
                min_eig,
            );
        }
    }
    println!(
        "worst: leak {:+.2e}  herm {:+.2e}  mineig {:+.2e}",
        worst_leak, worst_herm, worst_eig
    );
}
