//! Row reduction kernels.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::{Field, Matrix};

/// Row echelon form: nonzero rows only, with the pivot column of each row.
#[derive(Debug, Clone)]
pub struct Echelon<E> {
    pub cols: usize,
    pub rows: Vec<Vec<E>>,
    pub pivots: Vec<usize>,
}

impl<E> Echelon<E> {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Straight Gaussian elimination; the pivot of each column is the first
/// remaining row with a nonzero entry there.
pub fn gaussian_echelon<F: Field>(
    field: &F,
    rows: usize,
    cols: usize,
    mut data: Vec<F::Elem>,
) -> Echelon<F::Elem> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !field.is_zero(&data[i * cols + c])) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                data.swap(p * cols + j, r * cols + j);
            }
        }
        let inv = field.inv(&data[r * cols + c]).expect("pivot is nonzero");
        for j in c..cols {
            data[r * cols + j] = field.mul(&data[r * cols + j], &inv);
        }
        for i in r + 1..rows {
            let factor = data[i * cols + c].clone();
            if field.is_zero(&factor) {
                continue;
            }
            for j in c..cols {
                let t = field.mul(&factor, &data[r * cols + j]);
                data[i * cols + j] = field.sub(&data[i * cols + j], &t);
            }
        }
        pivots.push(c);
        r += 1;
    }
    let out_rows = (0..r).map(|i| data[i * cols..(i + 1) * cols].to_vec()).collect();
    Echelon {
        cols,
        rows: out_rows,
        pivots,
    }
}

/// Fraction-free (Bareiss) elimination. Each row is first scaled to integer
/// entries; all intermediate values stay integral and every division is exact.
pub fn bareiss_echelon(rows: usize, cols: usize, data: Vec<BigRational>) -> Echelon<BigRational> {
    let mut a: Vec<BigInt> = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let row = &data[i * cols..(i + 1) * cols];
        let lcm = row
            .iter()
            .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
        for x in row {
            a.push(x.numer() * (&lcm / x.denom()));
        }
    }
    let mut prev = BigInt::one();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !a[i * cols + c].is_zero()) else {
            continue;
        };
        if p != r {
            for j in 0..cols {
                a.swap(p * cols + j, r * cols + j);
            }
        }
        let piv = a[r * cols + c].clone();
        for i in r + 1..rows {
            let lead = a[i * cols + c].clone();
            for j in c + 1..cols {
                let num = &piv * &a[i * cols + j] - &lead * &a[r * cols + j];
                let (q, rem) = num.div_rem(&prev);
                debug_assert!(rem.is_zero(), "Bareiss division must be exact");
                a[i * cols + j] = q;
            }
            a[i * cols + c] = BigInt::zero();
        }
        prev = piv;
        pivots.push(c);
        r += 1;
    }
    let out_rows = (0..r)
        .map(|i| {
            a[i * cols..(i + 1) * cols]
                .iter()
                .map(|x| BigRational::from_integer(x.clone()))
                .collect()
        })
        .collect();
    Echelon {
        cols,
        rows: out_rows,
        pivots,
    }
}

/// Brings an echelon form to reduced row echelon form (pivots 1, zeros above).
pub fn reduce<F: Field>(field: &F, ech: &mut Echelon<F::Elem>) {
    let k = ech.rows.len();
    for i in 0..k {
        let c = ech.pivots[i];
        let inv = field.inv(&ech.rows[i][c]).expect("pivot is nonzero");
        if ech.rows[i][c] != field.one() {
            for x in ech.rows[i].iter_mut() {
                *x = field.mul(x, &inv);
            }
        }
    }
    for i in (0..k).rev() {
        let c = ech.pivots[i];
        let (above, rest) = ech.rows.split_at_mut(i);
        let pivot_row = &rest[0];
        for row in above.iter_mut() {
            let factor = row[c].clone();
            if field.is_zero(&factor) {
                continue;
            }
            for j in c..ech.cols {
                let t = field.mul(&factor, &pivot_row[j]);
                row[j] = field.sub(&row[j], &t);
            }
        }
    }
}

pub fn echelon_of<F: Field>(field: &F, m: &Matrix<F::Elem>) -> Echelon<F::Elem> {
    field.echelon(m.rows(), m.cols(), m.entries().to_vec())
}
