//! Unit conventions and physical constants.
//!
//! Everything internal is in hbar = 1 units with energies in eV; times are
//! then in 1/eV. Conversions to laboratory units happen only at the edges
//! (file output, CLI).

/// Boltzmann constant in eV/K.
pub const K_B_EV_PER_K: f64 = 8.617333262e-5;

/// One inverse electronvolt in femtoseconds (hbar / 1 eV).
pub const FS_PER_INV_EV: f64 = 0.6582119569;

/// Thermal energy k_B T in eV for a temperature in kelvin.
pub fn thermal_energy_ev(temperature_k: f64) -> f64 {
    K_B_EV_PER_K * temperature_k
}
