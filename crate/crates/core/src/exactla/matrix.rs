use serde::Serialize;

use super::{Field, LinalgError};

/// Dense row-major matrix over a field element type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Matrix<E> {
    rows: usize,
    cols: usize,
    data: Vec<E>,
}

impl<E: Clone> Matrix<E> {
    pub fn new(rows: usize, cols: usize, data: Vec<E>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::Shape {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from explicit rows; every row must have `cols` entries.
    pub fn from_rows(cols: usize, rows: Vec<Vec<E>>) -> Result<Self, LinalgError> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * cols);
        for r in rows {
            if r.len() != cols {
                return Err(LinalgError::Shape {
                    expected: cols,
                    got: r.len(),
                });
            }
            data.extend(r);
        }
        Ok(Self {
            rows: n,
            cols,
            data,
        })
    }

    pub fn zeros<F: Field<Elem = E>>(field: &F, rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![field.zero(); rows * cols],
        }
    }

    pub fn identity<F: Field<Elem = E>>(field: &F, n: usize) -> Self {
        let mut m = Self::zeros(field, n, n);
        for i in 0..n {
            m.data[i * n + i] = field.one();
        }
        m
    }

    /// A matrix with no rows and `cols` columns.
    pub fn empty(cols: usize) -> Self {
        Self {
            rows: 0,
            cols,
            data: Vec::new(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[E] {
        &self.data
    }

    pub fn into_entries(self) -> Vec<E> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &E {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: E) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[E] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[E]> {
        // chunks_exact panics on a zero chunk size
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn push_row(&mut self, row: &[E]) -> Result<(), LinalgError> {
        if row.len() != self.cols {
            return Err(LinalgError::ColumnMismatch {
                left: self.cols,
                right: row.len(),
            });
        }
        self.data.extend_from_slice(row);
        self.rows += 1;
        Ok(())
    }

    /// Vertical concatenation.
    pub fn stack(&self, other: &Self) -> Result<Self, LinalgError> {
        if self.cols != other.cols {
            return Err(LinalgError::ColumnMismatch {
                left: self.cols,
                right: other.cols,
            });
        }
        let mut data = self.data.clone();
        data.extend_from_slice(&other.data);
        Ok(Self {
            rows: self.rows + other.rows,
            cols: self.cols,
            data,
        })
    }

    /// Stacks a list of matrices sharing a column count.
    pub fn stack_all<'a, I>(cols: usize, parts: I) -> Result<Self, LinalgError>
    where
        I: IntoIterator<Item = &'a Self>,
        E: 'a,
    {
        let mut out = Self::empty(cols);
        for p in parts {
            if p.cols != cols {
                return Err(LinalgError::ColumnMismatch {
                    left: cols,
                    right: p.cols,
                });
            }
            out.data.extend_from_slice(&p.data);
            out.rows += p.rows;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut data = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                data.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: rows.len(),
            cols: cols.len(),
            data,
        }
    }

    pub fn mul<F: Field<Elem = E>>(&self, field: &F, rhs: &Self) -> Result<Self, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::ColumnMismatch {
                left: self.cols,
                right: rhs.rows,
            });
        }
        let mut out = Self::zeros(field, self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if field.is_zero(a) {
                    continue;
                }
                for j in 0..rhs.cols {
                    let idx = i * rhs.cols + j;
                    let t = field.mul(a, rhs.get(k, j));
                    out.data[idx] = field.add(&out.data[idx], &t);
                }
            }
        }
        Ok(out)
    }

    pub fn is_zero<F: Field<Elem = E>>(&self, field: &F) -> bool {
        self.data.iter().all(|e| field.is_zero(e))
    }

    pub fn is_symmetric(&self) -> bool
    where
        E: PartialEq,
    {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::PrimeField;

    #[test]
    fn shape_checks() {
        assert!(Matrix::new(2, 2, vec![1u64, 2, 3]).is_err());
        assert!(Matrix::from_rows(2, vec![vec![1u64, 2], vec![3]]).is_err());
        let a = Matrix::new(1, 2, vec![1u64, 2]).unwrap();
        let b = Matrix::new(1, 3, vec![1u64, 2, 3]).unwrap();
        assert!(a.stack(&b).is_err());
    }

    #[test]
    fn transpose_and_mul() {
        let f = PrimeField::default();
        let a = Matrix::new(2, 3, vec![1u64, 2, 3, 4, 5, 6]).unwrap();
        let at = a.transpose();
        assert_eq!(at.row(0), &[1, 4]);
        let g = a.mul(&f, &at).unwrap();
        assert_eq!(g.entries(), &[14, 32, 32, 77]);
        assert!(g.is_symmetric());
    }
}
