//! Electric-dipole selection rules for the acceptor ground quartet coupled to
//! the two excited doublets under light propagating along <111>.
//!
//! The ground manifold is the Gamma8+ quartet with mJ in {+3/2, +1/2, -1/2,
//! -3/2} (that column order everywhere); the excited states are the Gamma6-
//! and Gamma7- doublets with mJ in {+1/2, -1/2} (row order). Dipole matrix
//! elements are carried in units of the Gamma6 orbital scale D0, with the
//! Gamma7 blocks multiplied by the ratio alpha = D0'/D0.
//!
//! With x and y transverse to the <111> propagation axis, the Gamma6
//! Cartesian matrices are
//!
//! ```text
//! Qx = D0 [  sqrt3 q   0   1   i sqrt3 g q ]      q = 1/sqrt(1 + g^2)
//!         [ -sqrt3 g q i   0   i sqrt3 q   ]
//! Qy = D0 [ i sqrt3 q  0  -i  -sqrt3 g q   ]
//!         [ i sqrt3 g q -1  0   sqrt3 q    ]
//! ```
//!
//! where g is the small Zeeman-type parameter mixing the mJ = +-3/2 ground
//! components. Circular combinations are Q+- = (Qx +- i Qy)/sqrt2. The
//! Gamma7 circular matrices carry the sign convention in which the
//! historical tabulation's typo sits in Qx (see module docs on
//! [`build_cartesian_dipoles`]); their Cartesian forms here are the unique
//! matrices reproducing those circular combinations.
//!
//! Key structural facts encoded below and guarded by tests:
//! - every block satisfies sum |Q|^2 = 8 scale^2 exactly, for any g;
//! - pumping either doublet alone leaves two dark ground states, pumping
//!   both leaves exactly one: mJ = +1/2 for plus-circular light and
//!   mJ = -1/2 for minus-circular;
//! - the bright/dark superpositions on the {+3/2, -3/2} subspace for the
//!   two doublets overlap with magnitude sqrt(8)/3 independent of g, which
//!   is why no superposition dark state survives joint pumping.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::linalg::{svd_right, CMat};

/// Detuning separation of the canonical excited doublets: 20 GHz in rad/ps.
pub const DOUBLET_SPLITTING: f64 = 2.0 * PI * 0.020;

/// Default ground-state mixing parameter from the published g-factors.
pub const DEFAULT_GAMMA: f64 = -0.0069;

/// Default intensity ratio of the Gamma7 to Gamma6 transition rates.
///
/// The fitted "ratio between the transition rates" of 0.104 is read as an
/// intensity (rate) ratio, i.e. alpha^2 = 0.104 with the Gamma6 coupling
/// stronger; both alpha and alpha^2 are reported by the fitting layer so
/// the two readings stay distinguishable.
pub const DEFAULT_RATE_RATIO: f64 = 0.104;

/// Pump/probe polarization for propagation along <111>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarization {
    /// epsilon_+ circular.
    PlusCircular,
    /// epsilon_- circular.
    MinusCircular,
    /// Linear along the transverse x axis.
    LinearX,
    /// Linear along the transverse y axis.
    LinearY,
}

impl Polarization {
    /// The circular polarization of opposite handedness; identity for linear.
    pub fn conjugate_circular(self) -> Polarization {
        match self {
            Polarization::PlusCircular => Polarization::MinusCircular,
            Polarization::MinusCircular => Polarization::PlusCircular,
            other => other,
        }
    }

    pub fn is_circular(self) -> bool {
        matches!(self, Polarization::PlusCircular | Polarization::MinusCircular)
    }
}

/// Which excited doublet a block couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevelLabel {
    Gamma6Minus,
    Gamma7Minus,
}

/// One excited doublet together with the laser detuning to it (rad/ps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExcitedLevel {
    pub label: LevelLabel,
    pub detuning: f64,
}

impl ExcitedLevel {
    /// Canonical pair: laser sitting on the lower (Gamma6) transition, with
    /// Gamma7 detuned by the 20 GHz doublet splitting.
    pub fn canonical_pair() -> (ExcitedLevel, ExcitedLevel) {
        (
            ExcitedLevel { label: LevelLabel::Gamma6Minus, detuning: 0.0 },
            ExcitedLevel { label: LevelLabel::Gamma7Minus, detuning: DOUBLET_SPLITTING },
        )
    }
}

/// Ground-state mixing and relative dipole scale.
///
/// `gamma` mixes the mJ = +-3/2 ground components; `alpha` is the dipole
/// ratio D0'/D0 between the Gamma7 and Gamma6 orbital matrix elements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixingParameters {
    pub gamma: f64,
    pub alpha: f64,
}

impl Default for MixingParameters {
    fn default() -> Self {
        MixingParameters { gamma: DEFAULT_GAMMA, alpha: DEFAULT_RATE_RATIO.sqrt() }
    }
}

impl MixingParameters {
    pub fn new(gamma: f64, alpha: f64) -> Self {
        assert!(gamma.is_finite(), "gamma must be finite");
        assert!(alpha >= 0.0, "alpha must be non-negative");
        MixingParameters { gamma, alpha }
    }

    /// Normalisation q = 1/sqrt(1 + gamma^2); always in (0, 1].
    pub fn q(&self) -> f64 {
        1.0 / (1.0 + self.gamma * self.gamma).sqrt()
    }

    /// The g-factor combination behind gamma, recovered by inverting
    /// gamma = sqrt2 (beta - sqrt(beta^2 + 1/2)). Exposed for documentation
    /// only; gamma itself is what enters every matrix element.
    pub fn beta(&self) -> f64 {
        let g = self.gamma;
        (g * g - 1.0) / (2.0 * std::f64::consts::SQRT_2 * g)
    }

    /// Build from the isotropic and anisotropic ground-state g-factors,
    /// beta = 3 g1 / (2 g2) + 23/8.
    pub fn from_g_factors(g1: f64, g2: f64, alpha: f64) -> Self {
        let beta = 1.5 * g1 / g2 + 23.0 / 8.0;
        let gamma = std::f64::consts::SQRT_2 * (beta - (beta * beta + 0.5).sqrt());
        MixingParameters::new(gamma, alpha)
    }

    /// Dipole scale of a level in units of D0: 1 for Gamma6, alpha for Gamma7.
    pub fn scale(&self, label: LevelLabel) -> f64 {
        match label {
            LevelLabel::Gamma6Minus => 1.0,
            LevelLabel::Gamma7Minus => self.alpha,
        }
    }
}

/// Coupling matrix between one excited doublet and the ground quartet for one
/// polarization, in units of D0. Rows: excited mJ {+1/2, -1/2}; columns:
/// ground mJ {+3/2, +1/2, -1/2, -3/2}.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleBlock {
    pub excited: ExcitedLevel,
    pub polarization: Polarization,
    matrix: CMat,
}

impl DipoleBlock {
    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn element(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    /// Sum of |Q|^2 over all elements; equals 8 scale^2 for every gamma.
    pub fn total_strength(&self) -> f64 {
        self.matrix.norm_sqr()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SelectionError {
    #[error("dipole blocks couple different excited levels")]
    MismatchedLevels,
    #[error("dark subspace needs at least one dipole block")]
    EmptyBlockList,
    #[error("dipole blocks mix polarizations")]
    MixedPolarizations,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Build the Cartesian (Qx, Qy) coupling blocks for one excited doublet.
///
/// The Gamma6 matrices follow the published tabulation directly. The Gamma7
/// matrices are the unique Cartesian pair consistent with the corrected
/// circular forms, taking the historical sign typo to sit in Qx; if it sat
/// in Qy instead, the circular blocks would swap handedness roles for
/// Gamma7 (Qx is unchanged either way).
pub fn build_cartesian_dipoles(
    excited: &ExcitedLevel,
    mix: &MixingParameters,
) -> (DipoleBlock, DipoleBlock) {
    let g = mix.gamma;
    let q = mix.q();
    let s3 = 3.0f64.sqrt();
    let (qx, qy) = match excited.label {
        LevelLabel::Gamma6Minus => {
            let qx = CMat::from_rows(&[
                vec![c(s3 * q, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, s3 * g * q)],
                vec![c(-s3 * g * q, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, s3 * q)],
            ]);
            let qy = CMat::from_rows(&[
                vec![c(0.0, s3 * q), c(0.0, 0.0), c(0.0, -1.0), c(-s3 * g * q, 0.0)],
                vec![c(0.0, s3 * g * q), c(-1.0, 0.0), c(0.0, 0.0), c(s3 * q, 0.0)],
            ]);
            (qx, qy)
        }
        LevelLabel::Gamma7Minus => {
            let a = mix.alpha;
            // u and v are the +-3/2 coupling amplitudes of the circular
            // blocks divided by sqrt2
            let u = (1.0f64 / 3.0).sqrt() * (2.0 * 2.0f64.sqrt() * g - 1.0) * q;
            let v = (1.0f64 / 3.0).sqrt() * (2.0 * 2.0f64.sqrt() + g) * q;
            let qx = CMat::from_rows(&[
                vec![c(0.0, a * u), c(0.0, 0.0), c(0.0, a), c(a * v, 0.0)],
                vec![c(0.0, -a * v), c(-a, 0.0), c(0.0, 0.0), c(a * u, 0.0)],
            ]);
            let qy = CMat::from_rows(&[
                vec![c(-a * u, 0.0), c(0.0, 0.0), c(a, 0.0), c(0.0, a * v)],
                vec![c(-a * v, 0.0), c(0.0, -a), c(0.0, 0.0), c(0.0, -a * u)],
            ]);
            (qx, qy)
        }
    };
    (
        DipoleBlock { excited: *excited, polarization: Polarization::LinearX, matrix: qx },
        DipoleBlock { excited: *excited, polarization: Polarization::LinearY, matrix: qy },
    )
}

/// Handedness selector for [`circular_from_cartesian`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircularSign {
    Plus,
    Minus,
}

/// Form Q+- = (Qx +- i Qy)/sqrt2 from the Cartesian blocks.
pub fn circular_from_cartesian(
    qx: &DipoleBlock,
    qy: &DipoleBlock,
    sign: CircularSign,
) -> Result<DipoleBlock, SelectionError> {
    if qx.excited.label != qy.excited.label {
        return Err(SelectionError::MismatchedLevels);
    }
    let (factor, pol) = match sign {
        CircularSign::Plus => (c(0.0, 1.0), Polarization::PlusCircular),
        CircularSign::Minus => (c(0.0, -1.0), Polarization::MinusCircular),
    };
    let inv_sqrt2 = 1.0 / 2.0f64.sqrt();
    let mut matrix = CMat::zeros(2, 4);
    for i in 0..2 {
        for j in 0..4 {
            matrix[(i, j)] = (qx.element(i, j) + factor * qy.element(i, j)) * inv_sqrt2;
        }
    }
    Ok(DipoleBlock { excited: qx.excited, polarization: pol, matrix })
}

/// Coupling block for any polarization of one excited doublet.
pub fn dipole_block(
    excited: &ExcitedLevel,
    pol: Polarization,
    mix: &MixingParameters,
) -> DipoleBlock {
    let (qx, qy) = build_cartesian_dipoles(excited, mix);
    match pol {
        Polarization::LinearX => qx,
        Polarization::LinearY => qy,
        Polarization::PlusCircular => {
            circular_from_cartesian(&qx, &qy, CircularSign::Plus).expect("same level")
        }
        Polarization::MinusCircular => {
            circular_from_cartesian(&qx, &qy, CircularSign::Minus).expect("same level")
        }
    }
}

/// |Q|^2 of every element divided by the block total 8 scale^2.
///
/// At gamma = 0 this reproduces the tabulated relative intensities exactly:
/// {0, 1/4, 3/4} for Gamma6 and {0, 1/4, 2/3, 1/12} for Gamma7. The entries
/// of each block sum to 1 for every gamma.
pub fn normalized_intensities(block: &DipoleBlock) -> [[f64; 4]; 2] {
    let total = 8.0
        * match block.excited.label {
            LevelLabel::Gamma6Minus => 1.0,
            LevelLabel::Gamma7Minus => {
                // recover alpha^2 from the block itself: total strength is
                // exactly 8 alpha^2
                block.total_strength() / 8.0
            }
        };
    let mut out = [[0.0; 4]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            *entry = block.element(i, j).norm_sqr() / total;
        }
    }
    out
}

/// Orthonormal basis of the common dark (null) subspace of a set of blocks.
#[derive(Debug, Clone)]
pub struct DarkSubspace {
    pub dimension: usize,
    /// Unit-norm, mutually orthogonal ground-space vectors in the
    /// {+3/2, +1/2, -1/2, -3/2} basis.
    pub basis: Vec<[C64; 4]>,
    /// Singular values of the stacked coupling matrix, descending.
    pub singular_values: Vec<f64>,
}

/// Relative singular-value threshold below which a direction counts as dark.
///
/// The one-sided Jacobi SVD keeps exact nulls at the machine noise floor
/// (~1e-16 relative), while the smallest genuine couplings are the
/// gamma-induced elements at ~1e-2 relative, so 1e-9 separates the two with
/// many orders of margin on both sides.
pub const DARK_SV_THRESHOLD: f64 = 1e-9;

/// Common null space of the stacked coupling matrix of `blocks`, by SVD.
///
/// Pumping one doublet alone yields dimension 2; pumping both canonical
/// doublets with circular light yields dimension 1, with the basis vector
/// being the bare mJ = +1/2 (plus-circular) or mJ = -1/2 (minus-circular)
/// ground state.
pub fn dark_subspace(blocks: &[DipoleBlock]) -> Result<DarkSubspace, SelectionError> {
    if blocks.is_empty() {
        return Err(SelectionError::EmptyBlockList);
    }
    if blocks.iter().any(|b| b.polarization != blocks[0].polarization) {
        return Err(SelectionError::MixedPolarizations);
    }
    let mats: Vec<&CMat> = blocks.iter().map(DipoleBlock::matrix).collect();
    let stacked = CMat::vstack(&mats);
    let svd = svd_right(&stacked);
    let cutoff = DARK_SV_THRESHOLD * svd.singular_values[0].max(f64::MIN_POSITIVE);
    let mut basis = Vec::new();
    for (j, &sv) in svd.singular_values.iter().enumerate() {
        if sv < cutoff {
            let mut vcol = [C64::new(0.0, 0.0); 4];
            for (k, entry) in vcol.iter_mut().enumerate() {
                *entry = svd.v[(k, j)];
            }
            basis.push(vcol);
        }
    }
    Ok(DarkSubspace { dimension: basis.len(), basis, singular_values: svd.singular_values })
}

/// Overlap magnitude between the Gamma6 bright superposition and the Gamma7
/// dark superposition on the {+3/2, -3/2} ground subspace under
/// plus-circular light.
///
/// Equals sqrt(8)/3 for every gamma; because it never vanishes, the two
/// doublets share no superposition dark state and joint pumping leaves the
/// single bare-state dark level.
pub fn bright_dark_overlap(mix: &MixingParameters) -> f64 {
    let (g6, g7) = ExcitedLevel::canonical_pair();
    let restricted = |label: &ExcitedLevel| -> CMat {
        let block = dipole_block(label, Polarization::PlusCircular, mix);
        let mut m = CMat::zeros(2, 2);
        for row in 0..2 {
            m[(row, 0)] = block.element(row, 0);
            m[(row, 1)] = block.element(row, 3);
        }
        m
    };
    let svd6 = svd_right(&restricted(&g6));
    let svd7 = svd_right(&restricted(&g7));
    // bright: dominant right-singular vector; dark: the orthogonal one
    let bright6 = [svd6.v[(0, 0)], svd6.v[(1, 0)]];
    let dark7 = [svd7.v[(0, 1)], svd7.v[(1, 1)]];
    (bright6[0].conj() * dark7[0] + bright6[1].conj() * dark7[1]).norm()
}
