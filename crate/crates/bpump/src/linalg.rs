//! Small dense complex-matrix workhorse used by the solvers.
//!
//! Everything here targets matrices of dimension 8 or smaller, so the
//! implementations favour robustness and determinism over asymptotic
//! cleverness: plain triple loops for products and Jacobi iterations for
//! spectra. The one-sided Jacobi SVD computes small singular values with
//! relative accuracy, which the dark-subspace classification relies on
//! (forming the Gram matrix would square the condition number and lose
//! exact nulls in the noise floor).

use num_complex::Complex64 as C64;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        CMat { rows: r, cols: c, data: rows.iter().flatten().copied().collect() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> CMat {
        let mut out = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        assert_eq!(self.rows, self.cols);
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Frobenius sum of |a_ij|^2.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest |a_ij|.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest |a_ij - b_ij|.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `self * other`, allocating.
    pub fn mul(&self, other: &CMat) -> CMat {
        let mut out = CMat::zeros(self.rows, other.cols);
        mul_into(self, other, &mut out);
        out
    }

    /// Stack matrices with equal column counts on top of each other.
    pub fn vstack(blocks: &[&CMat]) -> CMat {
        assert!(!blocks.is_empty());
        let cols = blocks[0].cols;
        assert!(blocks.iter().all(|b| b.cols == cols));
        let rows = blocks.iter().map(|b| b.rows).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        CMat { rows, cols, data }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// `out = a * b` without allocating.
pub fn mul_into(a: &CMat, b: &CMat, out: &mut CMat) {
    assert_eq!(a.cols, b.rows);
    assert_eq!((out.rows, out.cols), (a.rows, b.cols));
    for i in 0..a.rows {
        for j in 0..b.cols {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..a.cols {
                acc += a.data[i * a.cols + k] * b.data[k * b.cols + j];
            }
            out.data[i * out.cols + j] = acc;
        }
    }
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// ascending order. The input is symmetrised internally, so tiny
/// anti-Hermitian noise is tolerated.
pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    for i in 0..n {
        for j in 0..n {
            let sym = 0.5 * (a[(i, j)] + a[(j, i)].conj());
            a[(i, j)] = sym;
            a[(j, i)] = sym.conj();
        }
    }
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..60 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off < 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq.norm() < 1e-18 * scale {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let (c, s) = jacobi_rotation(app, aqq, apq);
                // a <- J^H a J with J = [[c, s], [-s*, c]] on rows/cols p, q
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * s.conj();
                    a[(k, q)] = akp * s + akq * c;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * s;
                    a[(q, k)] = apk * s.conj() + aqk * c;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(f64::total_cmp);
    eig
}

/// Rotation (c real, s complex) diagonalising [[app, apq], [apq*, aqq]].
fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (f64, C64) {
    let abs_apq = apq.norm();
    let phase = apq / abs_apq;
    let tau = (aqq - app) / (2.0 * abs_apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    (c, phase * (t * c))
}

/// Result of a singular value decomposition restricted to what the callers
/// need: singular values (descending) and right singular vectors.
#[derive(Debug, Clone)]
pub struct SvdRight {
    /// Singular values, descending.
    pub singular_values: Vec<f64>,
    /// Unitary matrix whose columns are the right singular vectors, ordered
    /// to match `singular_values`.
    pub v: CMat,
}

/// One-sided (Hestenes) Jacobi SVD of an m x n complex matrix.
///
/// Orthogonalises the columns of `a` by right-multiplication with plane
/// rotations; at convergence the column norms are the singular values and
/// the accumulated rotations form V. Small singular values keep relative
/// accuracy, so exact null directions come out at the machine noise floor
/// rather than at sqrt(eps).
pub fn svd_right(a: &CMat) -> SvdRight {
    let m = a.rows;
    let n = a.cols;
    let mut w = a.clone();
    let mut v = CMat::identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let mut app = 0.0f64;
                let mut aqq = 0.0f64;
                let mut apq = C64::new(0.0, 0.0);
                for k in 0..m {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    app += wp.norm_sqr();
                    aqq += wq.norm_sqr();
                    apq += wp.conj() * wq;
                }
                if apq.norm() <= 1e-16 * (app.sqrt() * aqq.sqrt()).max(1e-300) {
                    continue;
                }
                let (c, s) = jacobi_rotation(app, aqq, apq);
                // [w_p, w_q] <- [w_p, w_q] J with J = [[c, s], [-s*, c]]
                for k in 0..m {
                    let wp = w[(k, p)];
                    let wq = w[(k, q)];
                    w[(k, p)] = wp * c - wq * s.conj();
                    w[(k, q)] = wp * s + wq * c;
                }
                for k in 0..n {
                    let vp = v[(k, p)];
                    let vq = v[(k, q)];
                    v[(k, p)] = vp * c - vq * s.conj();
                    v[(k, q)] = vp * s + vq * c;
                }
                rotated = true;
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let norm: f64 = (0..m).map(|k| w[(k, j)].norm_sqr()).sum::<f64>().sqrt();
            (norm, j)
        })
        .collect();
    sv.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut v_sorted = CMat::zeros(n, n);
    for (new_j, &(_, old_j)) in sv.iter().enumerate() {
        for k in 0..n {
            v_sorted[(k, new_j)] = v[(k, old_j)];
        }
    }
    SvdRight { singular_values: sv.into_iter().map(|(s, _)| s).collect(), v: v_sorted }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let mut m = CMat::zeros(3, 3);
        m[(0, 0)] = c(2.0, 0.0);
        m[(1, 1)] = c(-1.0, 0.0);
        m[(2, 2)] = c(0.5, 0.0);
        let eig = hermitian_eigenvalues(&m);
        assert!((eig[0] + 1.0).abs() < 1e-14);
        assert!((eig[1] - 0.5).abs() < 1e-14);
        assert!((eig[2] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eigenvalues_of_pauli_like() {
        // [[0, i], [-i, 0]] has eigenvalues +-1
        let mut m = CMat::zeros(2, 2);
        m[(0, 1)] = c(0.0, 1.0);
        m[(1, 0)] = c(0.0, -1.0);
        let eig = hermitian_eigenvalues(&m);
        assert!((eig[0] + 1.0).abs() < 1e-14);
        assert!((eig[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_rank_one() {
        // outer product of unit vectors scaled by 3: singular values {3, 0}
        let mut m = CMat::zeros(2, 2);
        m[(0, 0)] = c(3.0 / 2.0_f64.sqrt(), 0.0);
        m[(0, 1)] = c(0.0, 3.0 / 2.0_f64.sqrt());
        let svd = svd_right(&m);
        assert!((svd.singular_values[0] - 3.0).abs() < 1e-12);
        assert!(svd.singular_values[1].abs() < 1e-12);
    }

    #[test]
    fn svd_matches_gram_eigenvalues() {
        // deterministic pseudo-random complex matrix
        let mut m = CMat::zeros(3, 4);
        let mut x = 0.123f64;
        for i in 0..3 {
            for j in 0..4 {
                x = (x * 9301.0 + 49297.0) % 233280.0;
                let re = x / 233280.0 - 0.5;
                x = (x * 9301.0 + 49297.0) % 233280.0;
                let im = x / 233280.0 - 0.5;
                m[(i, j)] = c(re, im);
            }
        }
        let svd = svd_right(&m);
        let gram = m.dagger().mul(&m);
        let mut eig = hermitian_eigenvalues(&gram);
        eig.reverse();
        for (s, e) in svd.singular_values.iter().zip(eig) {
            assert!((s * s - e.max(0.0)).abs() < 1e-10);
        }
        // V unitary
        let vhv = svd.v.dagger().mul(&svd.v);
        let id = CMat::identity(4);
        assert!(vhv.max_abs_diff(&id) < 1e-12);
    }

    #[test]
    fn svd_exact_null_column_is_tiny() {
        // column 1 identically zero: its singular value must sit at the
        // noise floor, far below any 1e-9 relative threshold
        let mut m = CMat::zeros(2, 3);
        m[(0, 0)] = c(1.0, 0.0);
        m[(1, 0)] = c(0.0, -0.3);
        m[(0, 2)] = c(0.2, 0.1);
        m[(1, 2)] = c(2.0, 0.0);
        let svd = svd_right(&m);
        assert!(svd.singular_values[2] < 1e-14 * svd.singular_values[0]);
    }
}
