//! Dense complex matrices, the tolerance bundle, and small vector helpers.
//!
//! Everything downstream works with square matrices in row-major order.
//! Rectangular objects (kept-mode bases) are handled as column lists with the
//! free functions at the bottom of this module, which keeps the matrix type
//! honest about its one invariant: square, all entries finite.

pub mod eig;

use crate::error::Error;
use crate::Result;

/// Double-precision complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Complex zero.
pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
/// Complex one.
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
/// Imaginary unit.
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Tolerance bundle separating "machine identities" from "discretization
/// identities". Every residual check in the crate names one of these.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Per-mode eigenpair residual certificate, relative to the Frobenius
    /// norm of the decomposed matrix.
    pub tau_res: f64,
    /// Identities that hold to working precision (algebraic identities of
    /// dimension-independent conditioning).
    pub tau_alg: f64,
    /// Eigenvalue reality test, |Im| relative to the spectral radius.
    pub tau_real: f64,
    /// Identities inherited from the continuum that a finite lattice only
    /// satisfies up to discretization error.
    pub tau_disc: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            tau_res: 1e-10,
            tau_alg: 1e-9,
            tau_real: 1e-8,
            tau_disc: 1e-6,
        }
    }
}

impl Tolerances {
    /// Checks the ordering contract: everything positive and finite, and the
    /// algebraic tolerance strictly tighter than the discretization one.
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("tau_res", self.tau_res),
            ("tau_alg", self.tau_alg),
            ("tau_real", self.tau_real),
            ("tau_disc", self.tau_disc),
        ];
        for (name, value) in fields {
            if !(value > 0.0) || !value.is_finite() {
                return Err(Error::BadTolerances {
                    reason: format!("{name} = {value} must be positive and finite"),
                });
            }
        }
        if self.tau_alg >= self.tau_disc {
            return Err(Error::BadTolerances {
                reason: format!(
                    "tau_alg = {} must be strictly below tau_disc = {}",
                    self.tau_alg, self.tau_disc
                ),
            });
        }
        Ok(())
    }
}

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl CMatrix {
    /// Builds a matrix from row-major data. Rejects wrong lengths and
    /// non-finite entries.
    pub fn new(dim: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: dim * dim,
                right: data.len(),
                context: "matrix construction",
            });
        }
        let m = CMatrix { dim, data };
        if let Some((row, col)) = m.first_non_finite() {
            return Err(Error::NonFinite { row, col });
        }
        Ok(m)
    }

    /// Zero matrix.
    pub fn zeros(dim: usize) -> Self {
        CMatrix { dim, data: vec![ZERO; dim * dim] }
    }

    /// Identity matrix.
    pub fn identity(dim: usize) -> Self {
        let mut m = CMatrix::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// Builds entry-wise from a function of (row, col).
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        CMatrix { dim, data }
    }

    /// Diagonal matrix from the given entries.
    pub fn diagonal(entries: &[C64]) -> Self {
        let dim = entries.len();
        let mut m = CMatrix::zeros(dim);
        for (i, &v) in entries.iter().enumerate() {
            m.data[i * dim + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> C64 {
        self.data[row * self.dim + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: C64) {
        self.data[row * self.dim + col] = value;
    }

    /// Borrow of one row.
    #[inline]
    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major view of the whole matrix.
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    fn same_dim(&self, other: &CMatrix, context: &'static str) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: other.dim,
                context,
            });
        }
        Ok(())
    }

    /// Position of the first NaN/inf entry, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        for i in 0..self.dim {
            for j in 0..self.dim {
                let v = self.at(i, j);
                if !v.re.is_finite() || !v.im.is_finite() {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn add(&self, other: &CMatrix) -> Result<CMatrix> {
        self.same_dim(other, "matrix sum")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Ok(CMatrix { dim: self.dim, data })
    }

    pub fn sub(&self, other: &CMatrix) -> Result<CMatrix> {
        self.same_dim(other, "matrix difference")?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(CMatrix { dim: self.dim, data })
    }

    pub fn scale(&self, factor: C64) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a * factor).collect(),
        }
    }

    /// Matrix product, ikj order with a zero-skip that makes products with
    /// banded operators cost O(band * n^2).
    pub fn mul(&self, other: &CMatrix) -> Result<CMatrix> {
        self.same_dim(other, "matrix product")?;
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let arow = &self.data[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for (k, &aik) in arow.iter().enumerate() {
                if aik == ZERO {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += aik * b;
                }
            }
        }
        Ok(CMatrix { dim: n, data: out })
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: v.len(),
                context: "matrix-vector product",
            });
        }
        Ok((0..self.dim)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(ZERO, |acc, (&a, &x)| acc + a * x)
            })
            .collect())
    }

    /// Entry-wise complex conjugate.
    pub fn conj(&self) -> CMatrix {
        CMatrix {
            dim: self.dim,
            data: self.data.iter().map(|a| a.conj()).collect(),
        }
    }

    pub fn transpose(&self) -> CMatrix {
        let n = self.dim;
        CMatrix::from_fn(n, |i, j| self.at(j, i))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let n = self.dim;
        CMatrix::from_fn(n, |i, j| self.at(j, i).conj())
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry magnitude.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// `||self - other||_F`.
    pub fn distance(&self, other: &CMatrix) -> Result<f64> {
        Ok(self.sub(other)?.fro_norm())
    }

    /// Hermitian positivity test: the matrix must be Hermitian within
    /// `tau_alg * ||M||_F`, and the minimum eigenvalue of its Hermitian part
    /// must exceed `tau_alg * ||M||_F`. Non-Hermitian input is reported as
    /// "not positive definite", not as an error.
    pub fn is_positive_definite(&self, tol: &Tolerances) -> Result<bool> {
        let norm = self.fro_norm();
        if norm == 0.0 {
            return Ok(false);
        }
        let herm_residual = self.sub(&self.adjoint())?.fro_norm();
        if herm_residual > tol.tau_alg * norm {
            return Ok(false);
        }
        let sym = self.add(&self.adjoint())?.scale(C64::new(0.5, 0.0));
        let min_eig = eig::hermitian_min_eigenvalue(&sym, tol)?;
        Ok(min_eig > tol.tau_alg * norm)
    }
}

/// `||A*B - B*A||_F`.
pub fn commutator_norm(a: &CMatrix, b: &CMatrix) -> Result<f64> {
    Ok(a.mul(b)?.sub(&b.mul(a)?)?.fro_norm())
}

/// Conjugating inner product `sum conj(u_j) v_j`.
pub fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).fold(ZERO, |acc, (a, b)| acc + a.conj() * b)
}

/// Plain bilinear sum `sum u_j v_j` (no conjugation).
pub fn dotu(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).fold(ZERO, |acc, (a, b)| acc + a * b)
}

/// Euclidean norm of a complex vector.
pub fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

/// Scales a vector in place.
pub fn scale_vec(v: &mut [C64], factor: C64) {
    for x in v.iter_mut() {
        *x *= factor;
    }
}

/// Compression of a square operator to a subspace: entries
/// `out[i][j] = w_i^H (A v_j)` for column lists `w`, `v` of equal length.
pub fn compress(a: &CMatrix, w: &[Vec<C64>], v: &[Vec<C64>]) -> Result<CMatrix> {
    if w.len() != v.len() {
        return Err(Error::DimensionMismatch {
            left: w.len(),
            right: v.len(),
            context: "subspace compression",
        });
    }
    let m = v.len();
    let av: Vec<Vec<C64>> = v
        .iter()
        .map(|col| a.apply(col))
        .collect::<Result<_>>()?;
    Ok(CMatrix::from_fn(m, |i, j| dot(&w[i], &av[j])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_matrix(rng: &mut StdRng, dim: usize) -> CMatrix {
        CMatrix::from_fn(dim, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
    }

    #[test]
    fn transpose_and_adjoint_examples() {
        let m = CMatrix::new(2, vec![c(1.0, 2.0), c(3.0, 0.0), c(0.0, 4.0), c(5.0, 0.0)]).unwrap();
        let t = m.transpose();
        assert_eq!(t.at(0, 1), c(0.0, 4.0));
        assert_eq!(t.at(1, 0), c(3.0, 0.0));
        let a = m.adjoint();
        assert_eq!(a.at(0, 0), c(1.0, -2.0));
        assert_eq!(a.at(0, 1), c(0.0, -4.0));
    }

    #[test]
    fn transpose_adjoint_conj_are_consistent_involutions() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..1000 {
            let dim = rng.gen_range(1..8);
            let m = random_matrix(&mut rng, dim);
            assert_eq!(m.transpose().transpose(), m);
            assert_eq!(m.adjoint().adjoint(), m);
            assert_eq!(m.conj().transpose(), m.adjoint());
            assert_eq!(m.transpose().conj(), m.adjoint());
        }
    }

    #[test]
    fn matmul_agrees_with_apply() {
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..50 {
            let dim = rng.gen_range(1..10);
            let a = random_matrix(&mut rng, dim);
            let b = random_matrix(&mut rng, dim);
            let v: Vec<C64> = (0..dim)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let ab = a.mul(&b).unwrap();
            let lhs = ab.apply(&v).unwrap();
            let rhs = a.apply(&b.apply(&v).unwrap()).unwrap();
            for (x, y) in lhs.iter().zip(&rhs) {
                assert!((x - y).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn identity_is_neutral() {
        let mut rng = StdRng::seed_from_u64(3);
        let m = random_matrix(&mut rng, 6);
        let id = CMatrix::identity(6);
        assert!(m.mul(&id).unwrap().distance(&m).unwrap() < 1e-15);
        assert!(id.mul(&m).unwrap().distance(&m).unwrap() < 1e-15);
    }

    #[test]
    fn fro_norm_example() {
        let m = CMatrix::new(2, vec![c(3.0, 0.0), c(0.0, 4.0), ZERO, ZERO]).unwrap();
        assert!((m.fro_norm() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn commutator_of_matrix_with_itself_vanishes() {
        let mut rng = StdRng::seed_from_u64(5);
        let m = random_matrix(&mut rng, 5);
        assert_eq!(commutator_norm(&m, &m).unwrap(), 0.0);
    }

    #[test]
    fn commutator_of_pauli_x_and_z() {
        let sx = CMatrix::new(2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let sz = CMatrix::new(2, vec![ONE, ZERO, ZERO, c(-1.0, 0.0)]).unwrap();
        let norm = commutator_norm(&sx, &sz).unwrap();
        assert!((norm - 2.0 * 2.0f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn positive_definite_catalog() {
        let tol = Tolerances::default();
        assert!(CMatrix::identity(3).is_positive_definite(&tol).unwrap());
        let indefinite = CMatrix::diagonal(&[ONE, c(-0.5, 0.0)]);
        assert!(!indefinite.is_positive_definite(&tol).unwrap());
        // Eigenvalues {0, 2}: Hermitian but only semidefinite.
        let semidefinite = CMatrix::new(2, vec![ONE, I, c(0.0, -1.0), ONE]).unwrap();
        assert!(!semidefinite.is_positive_definite(&tol).unwrap());
        // Eigenvalues {1, 3}: strictly positive.
        let positive = CMatrix::new(2, vec![c(2.0, 0.0), I, c(0.0, -1.0), c(2.0, 0.0)]).unwrap();
        assert!(positive.is_positive_definite(&tol).unwrap());
        // Non-Hermitian input is not positive definite by definition here.
        let nonherm = CMatrix::new(2, vec![ONE, ONE, ZERO, ONE]).unwrap();
        assert!(!nonherm.is_positive_definite(&tol).unwrap());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            CMatrix::new(2, vec![ZERO; 3]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            CMatrix::new(1, vec![c(f64::NAN, 0.0)]),
            Err(Error::NonFinite { row: 0, col: 0 })
        ));
    }

    #[test]
    fn mismatched_dims_error() {
        let a = CMatrix::identity(2);
        let b = CMatrix::identity(3);
        assert!(matches!(a.mul(&b), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(a.add(&b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn tolerance_defaults_and_validation() {
        let tol = Tolerances::default();
        assert_eq!(tol.tau_res, 1e-10);
        assert_eq!(tol.tau_alg, 1e-9);
        assert_eq!(tol.tau_real, 1e-8);
        assert_eq!(tol.tau_disc, 1e-6);
        assert!(tol.validate().is_ok());

        let bad = Tolerances { tau_alg: 1e-3, ..tol };
        assert!(matches!(bad.validate(), Err(Error::BadTolerances { .. })));
        let negative = Tolerances { tau_res: -1.0, ..tol };
        assert!(matches!(negative.validate(), Err(Error::BadTolerances { .. })));
    }

    #[test]
    fn compress_projects_onto_subspace() {
        // Compressing a diagonal matrix onto two of its eigenvectors picks
        // out the corresponding diagonal block.
        let a = CMatrix::diagonal(&[c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]);
        let e0 = vec![ONE, ZERO, ZERO];
        let e2 = vec![ZERO, ZERO, ONE];
        let small = compress(&a, &[e0.clone(), e2.clone()], &[e0, e2]).unwrap();
        assert_eq!(small.at(0, 0), c(1.0, 0.0));
        assert_eq!(small.at(1, 1), c(3.0, 0.0));
        assert_eq!(small.at(0, 1), ZERO);
    }
}
