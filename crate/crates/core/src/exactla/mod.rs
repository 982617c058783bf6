//! Exact dense linear algebra over a prime field or the rationals.
//!
//! Everything here is a pure function of its inputs. Ranks are computed by
//! straight Gaussian elimination (first nonzero pivot per column) in prime
//! mode and by fraction-free Bareiss elimination in rational mode, so results
//! are reproducible bit for bit.

mod elim;
mod field;
mod matrix;

use thiserror::Error;

pub use elim::{bareiss_echelon, gaussian_echelon, Echelon};
pub use field::{
    is_prime_u64, rational_to_i128, Field, FieldCfg, FieldMode, PrimeField, Rationals, Ring,
    DEFAULT_MODULUS, DEFAULT_RATIONAL_BOUND,
};
pub use matrix::Matrix;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension error: {left} columns vs {right} columns")]
    ColumnMismatch { left: usize, right: usize },
    #[error("shape error: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("modulus {modulus} rejected: {reason}")]
    BadModulus { modulus: u64, reason: &'static str },
    #[error("rational sampling bound must be positive")]
    BadSamplingBound,
}

/// Rank over the field.
pub fn rank<F: Field>(field: &F, m: &Matrix<F::Elem>) -> usize {
    elim::echelon_of(field, m).rank()
}

/// Basis of the right null space, one vector per row. The result has
/// `m.cols() - rank(m)` rows and `m.cols()` columns, and `m * result^T = 0`.
pub fn kernel_basis<F: Field>(field: &F, m: &Matrix<F::Elem>) -> Matrix<F::Elem> {
    let mut ech = elim::echelon_of(field, m);
    elim::reduce(field, &mut ech);
    let cols = m.cols();
    let mut is_pivot = vec![false; cols];
    for &p in &ech.pivots {
        is_pivot[p] = true;
    }
    let mut out = Matrix::empty(cols);
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![field.zero(); cols];
        v[free] = field.one();
        for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
            v[p] = field.neg(&row[free]);
        }
        out.push_row(&v).expect("kernel rows have matching width");
    }
    out
}

/// `dim(rowspace(a) ∩ rowspace(b))`, via `rank a + rank b - rank [a; b]`.
pub fn intersection_dim<F: Field>(
    field: &F,
    a: &Matrix<F::Elem>,
    b: &Matrix<F::Elem>,
) -> Result<usize, LinalgError> {
    let stacked = a.stack(b)?;
    Ok(rank(field, a) + rank(field, b) - rank(field, &stacked))
}

/// Incrementally maintained row space: a list of rows in echelon form where
/// each stored row is zero on the pivots of every earlier stored row.
#[derive(Debug, Clone)]
pub struct RowSpace<F: Field> {
    field: F,
    cols: usize,
    rows: Vec<(usize, Vec<F::Elem>)>,
}

impl<F: Field> RowSpace<F> {
    pub fn new(field: F, cols: usize) -> Self {
        Self {
            field,
            cols,
            rows: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn reduce(&self, v: &mut [F::Elem]) {
        let f = &self.field;
        for (p, row) in &self.rows {
            let c = v[*p].clone();
            if f.is_zero(&c) {
                continue;
            }
            for j in 0..self.cols {
                if !f.is_zero(&row[j]) {
                    let t = f.mul(&c, &row[j]);
                    v[j] = f.sub(&v[j], &t);
                }
            }
        }
    }

    /// Adds a row; returns whether the dimension grew.
    pub fn insert(&mut self, row: &[F::Elem]) -> Result<bool, LinalgError> {
        if row.len() != self.cols {
            return Err(LinalgError::ColumnMismatch {
                left: self.cols,
                right: row.len(),
            });
        }
        let mut v = row.to_vec();
        self.reduce(&mut v);
        let f = &self.field;
        let Some(p) = v.iter().position(|x| !f.is_zero(x)) else {
            return Ok(false);
        };
        let inv = f.inv(&v[p]).expect("nonzero pivot");
        for x in v.iter_mut() {
            *x = f.mul(x, &inv);
        }
        self.rows.push((p, v));
        Ok(true)
    }

    pub fn insert_all(&mut self, m: &Matrix<F::Elem>) -> Result<usize, LinalgError> {
        let mut added = 0;
        for r in m.row_iter() {
            if self.insert(r)? {
                added += 1;
            }
        }
        Ok(added)
    }

    pub fn contains(&self, row: &[F::Elem]) -> bool {
        let mut v = row.to_vec();
        self.reduce(&mut v);
        v.iter().all(|x| self.field.is_zero(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn fp() -> PrimeField {
        PrimeField::default()
    }

    fn mat(f: &PrimeField, rows: usize, cols: usize, v: &[i64]) -> Matrix<u64> {
        Matrix::new(rows, cols, v.iter().map(|&x| f.from_i64(x)).collect()).unwrap()
    }

    #[test]
    fn rank_identity_and_zero() {
        let f = fp();
        assert_eq!(rank(&f, &Matrix::identity(&f, 2)), 2);
        assert_eq!(rank(&f, &Matrix::zeros(&f, 3, 5)), 0);
    }

    #[test]
    fn rank_with_explicit_dependent_row() {
        let f = fp();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let r1: Vec<u64> = (0..3).map(|_| f.sample(&mut rng)).collect();
        let r2: Vec<u64> = (0..3).map(|_| f.sample(&mut rng)).collect();
        let r3: Vec<u64> = r1.iter().zip(&r2).map(|(a, b)| f.add(a, b)).collect();
        let m = Matrix::from_rows(3, vec![r1, r2, r3]).unwrap();
        assert_eq!(rank(&f, &m), 2);
    }

    #[test]
    fn kernel_examples() {
        let f = fp();
        let k = kernel_basis(&f, &Matrix::identity(&f, 2));
        assert_eq!((k.rows(), k.cols()), (0, 2));

        let ones = mat(&f, 1, 3, &[1, 1, 1]);
        let k = kernel_basis(&f, &ones);
        assert_eq!(k.rows(), 2);
        assert_eq!(rank(&f, &k), 2);
        for r in k.row_iter() {
            let s = r.iter().fold(0, |acc, x| f.add(&acc, x));
            assert_eq!(s, 0);
        }

        let k = kernel_basis(&f, &Matrix::zeros(&f, 2, 4));
        assert_eq!(k.rows(), 4);
        assert_eq!(rank(&f, &k), 4);
    }

    #[test]
    fn intersection_examples() {
        let f = fp();
        let a = mat(&f, 2, 4, &[1, 2, 3, 4, 0, 1, 5, 7]);
        assert_eq!(intersection_dim(&f, &a, &a).unwrap(), 2);
        let e1 = mat(&f, 1, 4, &[1, 0, 0, 0]);
        let e2 = mat(&f, 1, 4, &[0, 1, 0, 0]);
        assert_eq!(intersection_dim(&f, &e1, &e2).unwrap(), 0);
        let e12 = mat(&f, 2, 4, &[1, 0, 0, 0, 0, 1, 0, 0]);
        let e23 = mat(&f, 2, 4, &[0, 1, 0, 0, 0, 0, 1, 0]);
        assert_eq!(intersection_dim(&f, &e12, &e23).unwrap(), 1);
        let bad = mat(&f, 1, 3, &[1, 0, 0]);
        assert!(matches!(
            intersection_dim(&f, &e1, &bad),
            Err(LinalgError::ColumnMismatch { .. })
        ));
    }

    #[test]
    fn rational_kernel_is_exact() {
        let q = Rationals::default();
        let m = Matrix::new(
            2,
            4,
            [2, 4, -6, 1, 1, 2, -3, 5]
                .iter()
                .map(|&x| q.from_i64(x))
                .collect(),
        )
        .unwrap();
        assert_eq!(rank(&q, &m), 2);
        let k = kernel_basis(&q, &m);
        assert_eq!(k.rows(), 2);
        assert!(m.mul(&q, &k.transpose()).unwrap().is_zero(&q));
    }

    #[test]
    fn row_space_tracks_rank() {
        let f = fp();
        let m = mat(&f, 3, 3, &[1, 2, 3, 2, 4, 6, 0, 1, 1]);
        let mut rs = RowSpace::new(f, 3);
        assert_eq!(rs.insert_all(&m).unwrap(), 2);
        assert!(rs.contains(&[f.from_i64(1), f.from_i64(3), f.from_i64(4)]));
        assert!(!rs.contains(&[0, 0, 1]));
    }

    fn small_int_matrix() -> impl Strategy<Value = (usize, usize, Vec<i64>)> {
        (1usize..6, 1usize..7).prop_flat_map(|(r, c)| {
            (Just(r), Just(c), proptest::collection::vec(-3i64..=3, r * c))
        })
    }

    proptest! {
        #[test]
        fn rank_nullity_and_kernel_annihilates((r, c, v) in small_int_matrix()) {
            let f = fp();
            let m = mat(&f, r, c, &v);
            let k = kernel_basis(&f, &m);
            prop_assert_eq!(rank(&f, &m) + k.rows(), c);
            prop_assert!(rank(&f, &m) <= r.min(c));
            if k.rows() > 0 {
                prop_assert!(m.mul(&f, &k.transpose()).unwrap().is_zero(&f));
            }
        }

        #[test]
        fn stacked_rank_is_subadditive((r, c, v) in small_int_matrix(), w in proptest::collection::vec(-3i64..=3, 12)) {
            let f = fp();
            let a = mat(&f, r, c, &v);
            let rows_b = w.len() / c;
            prop_assume!(rows_b > 0);
            let b = mat(&f, rows_b, c, &w[..rows_b * c]);
            prop_assert!(rank(&f, &a.stack(&b).unwrap()) <= rank(&f, &a) + rank(&f, &b));
        }

        #[test]
        fn prime_and_rational_modes_agree((r, c, v) in small_int_matrix()) {
            // entries are tiny, so no minor is divisible by a 61-bit prime
            let f = fp();
            let q = Rationals::default();
            let mp = mat(&f, r, c, &v);
            let mq = Matrix::new(r, c, v.iter().map(|&x| q.from_i64(x)).collect::<Vec<BigRational>>()).unwrap();
            prop_assert_eq!(rank(&f, &mp), rank(&q, &mq));
            let kq = kernel_basis(&q, &mq);
            prop_assert_eq!(kq.rows() + rank(&q, &mq), c);
            if kq.rows() > 0 {
                prop_assert!(mq.mul(&q, &kq.transpose()).unwrap().is_zero(&q));
            }
        }
    }
}
