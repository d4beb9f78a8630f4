//! Dark-state optical pumping of acceptor-bound hole spins in silicon.
//!
//! The crate simulates an 8-level open quantum system: the Gamma8+ ground
//! quartet of a boron acceptor coupled by ~10 THz circularly polarised light
//! to the Gamma6- and Gamma7- excited doublets, with phonon-mediated orbital
//! decay and ground-state spin mixing treated as Lindblad dissipation. On
//! top of the solver sit the measured observable (relative pump-probe
//! transmission change), a global four-parameter fit against transmission
//! transients, and initialisation-time predictions for the unstrained
//! scheme and a strained four-level variant.
//!
//! Modules follow the pipeline:
//!
//! - [`selection`]: dipole selection rules, bright/dark decomposition;
//! - [`dynamics`]: Hamiltonian and jump operators, Lindblad integration;
//! - [`signal`]: population trajectories to transmission traces, dichroism;
//! - [`estimation`]: Nelder-Mead global fitting, lifetimes, temperature law;
//! - [`schemes`]: drive calibration and initialisation fidelity predictions;
//! - [`cli`]: the `bpump` command-line tool wired over the above.
//!
//! Units: time in ps, angular frequencies and rates in rad/ps and 1/ps.
//!
//! # Examples
//!
//! Each capability has a runnable example (`cargo run -p bpump --example
//! <name>`, add `--release` for the simulation-heavy ones):
//!
//! - `selection_tables` — relative intensity tables for both doublets;
//! - `dark_states` — dark dimensions and the sqrt(8)/3 overlap;
//! - `pump_cycle` — one calibrated 9 ps pump cycle, 25% to 27.9%;
//! - `pump_probe_traces` — SCP/OCP/PCP traces and the dichroism;
//! - `saturation_ceiling` — continuous-drive saturation vs power and T_spin;
//! - `fidelity_timing` — time to 99% initialisation vs spin lifetime;
//! - `strained_scheme` — the 245 ps / 124 ps strained predictions;
//! - `global_fit` — synthetic-data four-parameter fit round trip;
//! - `temperature_law` — thermometry correction and the quadratic rate law.

pub mod cli;
pub mod dynamics;
pub mod estimation;
pub mod linalg;
pub mod schemes;
pub mod selection;
pub mod signal;

pub use dynamics::{DensityState, ModelParameters, PulseShape, Trajectory};
pub use selection::{
    dark_subspace, dipole_block, DipoleBlock, ExcitedLevel, LevelLabel, MixingParameters,
    Polarization,
};
pub use signal::{ComboKind, ProbeCombo, PumpProbeTrace};
