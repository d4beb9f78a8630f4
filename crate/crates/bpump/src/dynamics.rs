//! Rotating-frame Hamiltonian, phonon jump operators, and Lindblad
//! integration for the 8-level (or reduced strained 4-level) system.
//!
//! The master equation is
//!
//! ```text
//! d rho / dt = -i [H, rho] + sum_k ( c_k rho c_k^+ - 1/2 {c_k^+ c_k, rho} )
//! ```
//!
//! with hbar = 1, H = H_o + H_d + H_B in the frame rotating with the laser:
//! H_o couples ground and excited states with matrix elements
//! (Omega_0 / 2) Q_eg / D0 while the pulse is on, H_d puts the laser
//! detunings on the excited diagonal, and H_B holds optional static Zeeman
//! shifts (zero throughout the canonical setup). Dissipation has two
//! channels: orbital decay sqrt(eta) |g><e| from every excited state to
//! every ground state, and ground-state spin mixing sqrt(xi) |g'><g| between
//! every ordered ground pair.
//!
//! With those uniform channels an excited population decays at 4 eta and a
//! ground-population imbalance at 4 xi (8-level layout), so the observable
//! transient lifetimes are T_orb = 1/(4 eta) and T_spin = 1/(4 xi); the
//! reduced 4-level layout has two channels per state instead, giving
//! T_orb = 1/(2 eta) and T_spin = 1/(2 xi). [`ModelParameters`] speaks in
//! observable lifetimes so callers never touch per-channel rates directly.
//!
//! State layout: indices [0..n_ground) are the ground manifold in the mJ
//! order {+3/2, +1/2, -1/2, -3/2} (8-level) or {+1/2, -1/2} (4-level);
//! excited states follow, Gamma6 {+1/2, -1/2} then Gamma7 {+1/2, -1/2} for
//! the 8-level case.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::selection::{
    dipole_block, ExcitedLevel, MixingParameters, Polarization, DOUBLET_SPLITTING,
};

/// Hermiticity tolerance for a valid density matrix (max |rho - rho^+|).
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Trace tolerance for a valid density matrix (|tr rho - 1|).
pub const TRACE_TOL: f64 = 1e-9;
/// Lower bound on the smallest eigenvalue of a valid density matrix.
pub const POSITIVITY_TOL: f64 = -1e-8;

/// Default integrator step: 5 fs.
pub const DEFAULT_STEP: f64 = 0.005;

/// Square drive pulse, or no drive at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PulseShape {
    /// Drive on for `start <= t < start + duration`.
    Square { start: f64, duration: f64 },
    Off,
}

impl PulseShape {
    pub fn square(start: f64, duration: f64) -> Self {
        assert!(duration > 0.0, "square pulse needs positive duration");
        PulseShape::Square { start, duration }
    }

    pub fn is_on(&self, t: f64) -> bool {
        match *self {
            PulseShape::Square { start, duration } => t >= start && t < start + duration,
            PulseShape::Off => false,
        }
    }

    /// Interval edges that integration segments must align to.
    fn edges(&self) -> Vec<f64> {
        match *self {
            PulseShape::Square { start, duration } => vec![start, start + duration],
            PulseShape::Off => Vec::new(),
        }
    }
}

/// Full parameter set of the forward model.
///
/// `omega0` is the base Rabi angular frequency D0 E / hbar; the per-pair
/// Rabi frequencies are omega0 times the dimensionless dipole elements (the
/// Gamma7 block already carries alpha through [`MixingParameters`]).
/// Lifetimes are the observable transient decay constants, converted to
/// per-channel rates internally per the layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    /// Base Rabi angular frequency (rad/ps).
    pub omega0: f64,
    /// Ground-state mixing gamma and dipole ratio alpha.
    pub mixing: MixingParameters,
    /// Observable orbital lifetime (ps); excited transients decay with it.
    pub t_orbital: f64,
    /// Observable spin lifetime (ps); ground imbalances decay with it.
    pub t_spin: f64,
    /// Laser detuning to the Gamma6 doublet (rad/ps).
    pub delta6: f64,
    /// Laser detuning to the Gamma7 doublet (rad/ps).
    pub delta7: f64,
    /// Optional static per-state diagonal shifts (rad/ps); empty means none.
    pub zeeman_shifts: Vec<f64>,
    /// Dimensionless optical depth for the Beer-Lambert observable.
    pub lambda: f64,
    /// Drive pulse.
    pub pulse: PulseShape,
}

impl Default for ModelParameters {
    /// Canonical fitted parameter set: 36.1 ps orbital and 1136 ps spin
    /// lifetimes, laser on the Gamma6 transition with the 20 GHz doublet
    /// splitting, drive off.
    fn default() -> Self {
        ModelParameters {
            omega0: 0.0,
            mixing: MixingParameters::default(),
            t_orbital: 36.1,
            t_spin: 1136.0,
            delta6: 0.0,
            delta7: DOUBLET_SPLITTING,
            zeeman_shifts: Vec::new(),
            lambda: 1.0,
            pulse: PulseShape::Off,
        }
    }
}

impl ModelParameters {
    /// Per-channel orbital decay rate eta for `n_ground` decay targets.
    pub fn eta(&self, n_ground: usize) -> f64 {
        1.0 / (n_ground as f64 * self.t_orbital)
    }

    /// Per-channel spin mixing rate xi for `n_ground` ground states.
    pub fn xi(&self, n_ground: usize) -> f64 {
        if self.t_spin.is_infinite() {
            0.0
        } else {
            1.0 / (n_ground as f64 * self.t_spin)
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        // NaN fails every comparison below, so it is rejected implicitly
        let ok = self.omega0 >= 0.0
            && self.mixing.alpha >= 0.0
            && self.t_orbital > 0.0
            && self.t_spin > 0.0
            && self.lambda.is_finite()
            && self.lambda >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(DynamicsError::InvalidParameters)
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("invalid model parameters (rates, lifetimes and lambda must be positive)")]
    InvalidParameters,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("integrator step {step} ps exceeds the pulse duration {duration} ps")]
    StepLargerThanPulse { step: f64, duration: f64 },
    #[error("sample time {0} ps outside the integration window")]
    SampleOutsideWindow(f64),
    #[error("density-matrix invariant violated at t = {t} ps: {what}")]
    InvariantViolation { t: f64, what: String },
}

/// Hermitian, trace-one density matrix with validated invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    matrix: CMat,
}

impl DensityState {
    /// Wrap a matrix, checking Hermiticity, unit trace and positivity.
    pub fn new(matrix: CMat) -> Result<Self, DynamicsError> {
        let state = DensityState { matrix };
        state.check(0.0)?;
        Ok(state)
    }

    /// Equal classical mixture of the `n_ground` ground states of a
    /// `dim`-level system.
    pub fn ground_mixture(dim: usize, n_ground: usize) -> Self {
        let mut m = CMat::zeros(dim, dim);
        for i in 0..n_ground {
            m[(i, i)] = C64::new(1.0 / n_ground as f64, 0.0);
        }
        DensityState { matrix: m }
    }

    /// All population in basis state `index`.
    pub fn pure_basis(dim: usize, index: usize) -> Self {
        let mut m = CMat::zeros(dim, dim);
        m[(index, index)] = C64::new(1.0, 0.0);
        DensityState { matrix: m }
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Diagonal populations (real parts).
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    /// Max |rho - rho^+| over elements.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.matrix)[0]
    }

    fn check(&self, t: f64) -> Result<(), DynamicsError> {
        if self.matrix.data().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(DynamicsError::InvariantViolation {
                t,
                what: "non-finite matrix entries".into(),
            });
        }
        let herm = self.hermiticity_defect();
        if herm > HERMITICITY_TOL {
            return Err(DynamicsError::InvariantViolation {
                t,
                what: format!("hermiticity defect {herm:.3e}"),
            });
        }
        let tr = (self.trace() - C64::new(1.0, 0.0)).norm();
        if tr > TRACE_TOL {
            return Err(DynamicsError::InvariantViolation {
                t,
                what: format!("trace defect {tr:.3e}"),
            });
        }
        let min_eig = self.min_eigenvalue();
        if min_eig < POSITIVITY_TOL {
            return Err(DynamicsError::InvariantViolation {
                t,
                what: format!("negative eigenvalue {min_eig:.3e}"),
            });
        }
        Ok(())
    }
}

/// Time-ordered density-matrix samples with derived populations.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityState>,
}

impl Trajectory {
    /// Population of basis state `index` at every sample time.
    pub fn population_series(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s.matrix()[(index, index)].re).collect()
    }

    /// Populations at the sample matching `t` (samples are exact
    /// integration nodes, so this is a lookup, not an interpolation).
    pub fn populations_at(&self, t: f64) -> Option<Vec<f64>> {
        let idx = self.times.iter().position(|&ti| (ti - t).abs() < 1e-9)?;
        Some(self.states[idx].populations())
    }
}

/// System layout: level count and the ground/excited split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layout {
    /// Ground quartet + Gamma6 and Gamma7 doublets.
    Canonical8,
    /// Strained scheme: ground +-1/2 pair + one excited +-1/2 pair.
    Strained4,
}

impl Layout {
    pub fn dim(self) -> usize {
        match self {
            Layout::Canonical8 => 8,
            Layout::Strained4 => 4,
        }
    }

    pub fn n_ground(self) -> usize {
        match self {
            Layout::Canonical8 => 4,
            Layout::Strained4 => 2,
        }
    }
}

/// Index of the dark ground state filled by the given circular pump in the
/// canonical layout: mJ = +1/2 for plus, mJ = -1/2 for minus.
pub fn dark_state_index(pol: Polarization) -> Option<usize> {
    match pol {
        Polarization::PlusCircular => Some(1),
        Polarization::MinusCircular => Some(2),
        _ => None,
    }
}

/// Rotating-frame Hamiltonian of the canonical 8-level system at time `t`.
///
/// Drive blocks (Omega_0/2) Q_eg/D0 are present only while the pulse is on;
/// the diagonal carries the detunings and any Zeeman shifts. Hermitian by
/// construction.
pub fn build_hamiltonian(
    params: &ModelParameters,
    pol: Polarization,
    t: f64,
) -> Result<CMat, DynamicsError> {
    params.validate()?;
    if !params.zeeman_shifts.is_empty() && params.zeeman_shifts.len() != 8 {
        return Err(DynamicsError::DimensionMismatch {
            expected: 8,
            got: params.zeeman_shifts.len(),
        });
    }
    let mut h = CMat::zeros(8, 8);
    let g6 = ExcitedLevel {
        label: crate::selection::LevelLabel::Gamma6Minus,
        detuning: params.delta6,
    };
    let g7 = ExcitedLevel {
        label: crate::selection::LevelLabel::Gamma7Minus,
        detuning: params.delta7,
    };
    for (level, row_base) in [(g6, 4usize), (g7, 6usize)] {
        h[(row_base, row_base)] = C64::new(level.detuning, 0.0);
        h[(row_base + 1, row_base + 1)] = C64::new(level.detuning, 0.0);
        if params.pulse.is_on(t) && params.omega0 > 0.0 {
            let block = dipole_block(&level, pol, &params.mixing);
            for e in 0..2 {
                for g in 0..4 {
                    let omega = 0.5 * params.omega0 * block.element(e, g);
                    h[(row_base + e, g)] += omega;
                    h[(g, row_base + e)] += omega.conj();
                }
            }
        }
    }
    for (i, &shift) in params.zeeman_shifts.iter().enumerate() {
        h[(i, i)] += C64::new(shift, 0.0);
    }
    Ok(h)
}

/// Jump operators for a layout: one sqrt(eta)|g><e| per (excited, ground)
/// pair and one sqrt(xi)|g'><g| per ordered ground pair.
///
/// `eta` and `xi` are per-channel rates (see [`ModelParameters::eta`]).
pub fn build_jump_operators(eta: f64, xi: f64, layout: Layout) -> Vec<CMat> {
    let dim = layout.dim();
    let n_g = layout.n_ground();
    let mut jumps = Vec::with_capacity(n_g * (dim - n_g) + n_g * (n_g - 1));
    for e in n_g..dim {
        for g in 0..n_g {
            let mut c = CMat::zeros(dim, dim);
            c[(g, e)] = C64::new(eta.sqrt(), 0.0);
            jumps.push(c);
        }
    }
    for g in 0..n_g {
        for g2 in 0..n_g {
            if g != g2 {
                let mut c = CMat::zeros(dim, dim);
                c[(g2, g)] = C64::new(xi.sqrt(), 0.0);
                jumps.push(c);
            }
        }
    }
    jumps
}

/// Full Lindblad right-hand side for arbitrary jump operators.
///
/// This is the reference form used by tests and small one-off evaluations;
/// [`evolve`] uses an algebraically identical fast path specialised to the
/// single-element jump structure.
pub fn lindblad_rhs(rho: &CMat, h: &CMat, jumps: &[CMat]) -> CMat {
    let d = rho.rows();
    assert_eq!(rho.cols(), d);
    assert_eq!((h.rows(), h.cols()), (d, d));
    let mut out = CMat::zeros(d, d);
    // -i [H, rho]
    let h_rho = h.mul(rho);
    let rho_h = rho.mul(h);
    for i in 0..d {
        for j in 0..d {
            out[(i, j)] = C64::new(0.0, -1.0) * (h_rho[(i, j)] - rho_h[(i, j)]);
        }
    }
    for c in jumps {
        let c_dag = c.dagger();
        let c_rho = c.mul(rho);
        let c_rho_cdag = c_rho.mul(&c_dag);
        let cdag_c = c_dag.mul(c);
        let cdagc_rho = cdag_c.mul(rho);
        let rho_cdagc = rho.mul(&cdag_c);
        for i in 0..d {
            for j in 0..d {
                out[(i, j)] +=
                    c_rho_cdag[(i, j)] - 0.5 * (cdagc_rho[(i, j)] + rho_cdagc[(i, j)]);
            }
        }
    }
    out
}

/// Structured generator for the fast integration path.
///
/// The Hamiltonian splits into a static diagonal plus a sparse coupling list
/// that is only active during the pulse; the dissipator reduces to per-state
/// outflow rates plus a classical population feed because every jump
/// operator has a single nonzero element.
pub(crate) struct Generator {
    pub dim: usize,
    pub n_ground: usize,
    /// Static diagonal of H (detunings + Zeeman shifts).
    pub diag: Vec<f64>,
    /// Drive couplings (excited index, ground index, Omega/2 element).
    pub couplings: Vec<(usize, usize, C64)>,
    /// Per-channel rates.
    pub eta: f64,
    pub xi: f64,
    /// Total outflow rate per state.
    pub outflow: Vec<f64>,
}

impl Generator {
    pub fn canonical(params: &ModelParameters, pol: Polarization) -> Result<Self, DynamicsError> {
        params.validate()?;
        if !params.zeeman_shifts.is_empty() && params.zeeman_shifts.len() != 8 {
            return Err(DynamicsError::DimensionMismatch {
                expected: 8,
                got: params.zeeman_shifts.len(),
            });
        }
        let layout = Layout::Canonical8;
        let mut diag = vec![0.0; 8];
        diag[4] = params.delta6;
        diag[5] = params.delta6;
        diag[6] = params.delta7;
        diag[7] = params.delta7;
        for (i, &shift) in params.zeeman_shifts.iter().enumerate() {
            diag[i] += shift;
        }
        let mut couplings = Vec::new();
        if params.omega0 > 0.0 {
            let g6 = ExcitedLevel {
                label: crate::selection::LevelLabel::Gamma6Minus,
                detuning: params.delta6,
            };
            let g7 = ExcitedLevel {
                label: crate::selection::LevelLabel::Gamma7Minus,
                detuning: params.delta7,
            };
            for (level, row_base) in [(g6, 4usize), (g7, 6usize)] {
                let block = dipole_block(&level, pol, &params.mixing);
                for e in 0..2 {
                    for g in 0..4 {
                        let el = block.element(e, g);
                        if el.norm_sqr() > 0.0 {
                            couplings.push((row_base + e, g, 0.5 * params.omega0 * el));
                        }
                    }
                }
            }
        }
        Ok(Generator::assemble(layout, diag, couplings, params))
    }

    /// Reduced strained layout: one bright ground state carrying the full
    /// circular oscillator strength sqrt(8) to one excited state.
    pub fn strained(params: &ModelParameters) -> Result<Self, DynamicsError> {
        params.validate()?;
        let layout = Layout::Strained4;
        let diag = vec![0.0, 0.0, params.delta6, params.delta6];
        let mut couplings = Vec::new();
        if params.omega0 > 0.0 {
            // ground -1/2 (index 1) -> excited +1/2 (index 2) under eps_+
            let strength = 0.5 * params.omega0 * 8.0f64.sqrt();
            couplings.push((2, 1, C64::new(strength, 0.0)));
        }
        Ok(Generator::assemble(layout, diag, couplings, params))
    }

    fn assemble(
        layout: Layout,
        diag: Vec<f64>,
        couplings: Vec<(usize, usize, C64)>,
        params: &ModelParameters,
    ) -> Self {
        let dim = layout.dim();
        let n_g = layout.n_ground();
        let eta = params.eta(n_g);
        let xi = params.xi(n_g);
        let mut outflow = vec![0.0; dim];
        for (state, rate) in outflow.iter_mut().enumerate() {
            *rate = if state < n_g { (n_g - 1) as f64 * xi } else { n_g as f64 * eta };
        }
        Generator { dim, n_ground: n_g, diag, couplings, eta, xi, outflow }
    }

    /// d rho / dt into `out`; `drive_on` switches the coupling terms.
    pub fn rhs(&self, rho: &CMat, drive_on: bool, out: &mut CMat) {
        let d = self.dim;
        debug_assert_eq!(rho.rows(), d);
        let rho_d = rho.data();
        let out_d = out.data_mut();
        // -i [D, rho] with D the static diagonal, plus dissipator damping
        for i in 0..d {
            for j in 0..d {
                let idx = i * d + j;
                let freq = self.diag[i] - self.diag[j];
                let damp = 0.5 * (self.outflow[i] + self.outflow[j]);
                let r = rho_d[idx];
                out_d[idx] = C64::new(freq * r.im - damp * r.re, -freq * r.re - damp * r.im);
            }
        }
        // population feed: orbital decay into every ground state, spin
        // mixing among ground states
        let mut excited_sum = 0.0;
        for e in self.n_ground..d {
            excited_sum += rho_d[e * d + e].re;
        }
        let mut ground_sum = 0.0;
        for g in 0..self.n_ground {
            ground_sum += rho_d[g * d + g].re;
        }
        for g in 0..self.n_ground {
            let pop = rho_d[g * d + g].re;
            let feed = self.eta * excited_sum + self.xi * (ground_sum - pop);
            out_d[g * d + g] += C64::new(feed, 0.0);
        }
        // -i [V, rho] for the sparse drive couplings
        if drive_on {
            for &(e, g, omega) in &self.couplings {
                // V = omega |e><g| + omega* |g><e|
                for k in 0..d {
                    // (V rho): row e gains omega rho[g, .]; row g the conj
                    let ve = omega * rho_d[g * d + k];
                    let vg = omega.conj() * rho_d[e * d + k];
                    out_d[e * d + k] += C64::new(ve.im, -ve.re);
                    out_d[g * d + k] += C64::new(vg.im, -vg.re);
                    // (rho V): col g gains rho[., e] omega; col e the conj
                    let we = rho_d[k * d + e] * omega;
                    let wg = rho_d[k * d + g] * omega.conj();
                    out_d[k * d + g] += C64::new(-we.im, we.re);
                    out_d[k * d + e] += C64::new(-wg.im, wg.re);
                }
            }
        }
    }
}

/// Integration controls for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Maximum RK4 step (ps); segments shrink it to land on breakpoints.
    pub step: f64,
    /// Check density-matrix invariants at every sample time.
    pub check_invariants: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig { step: DEFAULT_STEP, check_invariants: true }
    }
}

/// Fixed-step RK4 integration of the Lindblad equation.
///
/// Segments are aligned to the pulse edges and to every sample time, so
/// samples are exact integration nodes rather than interpolants; within a
/// segment the step is the largest value `<= config.step` that divides the
/// segment evenly. Deterministic for fixed inputs. The system layout is
/// inferred from the dimension of `rho0` (8 canonical, 4 strained).
pub fn evolve(
    rho0: &DensityState,
    params: &ModelParameters,
    pol: Polarization,
    t_end: f64,
    sample_times: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    let generator = match rho0.dim() {
        8 => Generator::canonical(params, pol)?,
        4 => Generator::strained(params)?,
        other => return Err(DynamicsError::DimensionMismatch { expected: 8, got: other }),
    };
    evolve_with_generator(&generator, rho0, &params.pulse, t_end, sample_times, config)
}

pub(crate) fn evolve_with_generator(
    generator: &Generator,
    rho0: &DensityState,
    pulse: &PulseShape,
    t_end: f64,
    sample_times: &[f64],
    config: &IntegratorConfig,
) -> Result<Trajectory, DynamicsError> {
    if let PulseShape::Square { duration, .. } = *pulse {
        if config.step > duration {
            return Err(DynamicsError::StepLargerThanPulse { step: config.step, duration });
        }
    }
    for &s in sample_times {
        if s < 0.0 || s > t_end + 1e-9 {
            return Err(DynamicsError::SampleOutsideWindow(s));
        }
    }
    let d = generator.dim;
    if rho0.dim() != d {
        return Err(DynamicsError::DimensionMismatch { expected: d, got: rho0.dim() });
    }

    // breakpoints: 0, pulse edges inside the window, sample times, t_end
    let mut breakpoints: Vec<f64> = vec![0.0, t_end];
    for e in pulse.edges() {
        if e > 0.0 && e < t_end {
            breakpoints.push(e);
        }
    }
    breakpoints.extend(sample_times.iter().copied());
    breakpoints.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breakpoints.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let mut rho = rho0.matrix().clone();
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());

    let mut sorted_samples: Vec<f64> = sample_times.to_vec();
    sorted_samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut next_sample = 0usize;

    let record = |t: f64,
                      rho: &CMat,
                      next_sample: &mut usize,
                      times: &mut Vec<f64>,
                      states: &mut Vec<DensityState>|
     -> Result<(), DynamicsError> {
        while *next_sample < sorted_samples.len()
            && (sorted_samples[*next_sample] - t).abs() < 1e-9
        {
            let state = DensityState { matrix: rho.clone() };
            if config.check_invariants {
                state.check(t)?;
            }
            times.push(sorted_samples[*next_sample]);
            states.push(state);
            *next_sample += 1;
        }
        Ok(())
    };

    record(0.0, &rho, &mut next_sample, &mut times, &mut states)?;

    let mut k1 = CMat::zeros(d, d);
    let mut k2 = CMat::zeros(d, d);
    let mut k3 = CMat::zeros(d, d);
    let mut k4 = CMat::zeros(d, d);
    let mut scratch = CMat::zeros(d, d);

    for w in breakpoints.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b - a < 1e-12 {
            continue;
        }
        // drive state is constant within a segment by construction
        let drive_on = pulse.is_on(0.5 * (a + b));
        let n_steps = ((b - a) / config.step - 1e-12).ceil().max(1.0) as usize;
        let h = (b - a) / n_steps as f64;
        for _ in 0..n_steps {
            rk4_step(
                generator,
                &mut rho,
                drive_on,
                h,
                &mut k1,
                &mut k2,
                &mut k3,
                &mut k4,
                &mut scratch,
            );
        }
        record(b, &rho, &mut next_sample, &mut times, &mut states)?;
    }

    Ok(Trajectory { times, states })
}

#[allow(clippy::too_many_arguments)]
fn rk4_step(
    generator: &Generator,
    rho: &mut CMat,
    drive_on: bool,
    h: f64,
    k1: &mut CMat,
    k2: &mut CMat,
    k3: &mut CMat,
    k4: &mut CMat,
    scratch: &mut CMat,
) {
    let n = rho.data().len();
    generator.rhs(rho, drive_on, k1);
    {
        let s = scratch.data_mut();
        let r = rho.data();
        let k = k1.data();
        for i in 0..n {
            s[i] = r[i] + 0.5 * h * k[i];
        }
    }
    generator.rhs(scratch, drive_on, k2);
    {
        let s = scratch.data_mut();
        let r = rho.data();
        let k = k2.data();
        for i in 0..n {
            s[i] = r[i] + 0.5 * h * k[i];
        }
    }
    generator.rhs(scratch, drive_on, k3);
    {
        let s = scratch.data_mut();
        let r = rho.data();
        let k = k3.data();
        for i in 0..n {
            s[i] = r[i] + h * k[i];
        }
    }
    generator.rhs(scratch, drive_on, k4);
    {
        let r = rho.data_mut();
        let (a, b, c, dd) = (k1.data(), k2.data(), k3.data(), k4.data());
        let w = h / 6.0;
        for i in 0..n {
            r[i] += w * (a[i] + 2.0 * b[i] + 2.0 * c[i] + dd[i]);
        }
    }
}
