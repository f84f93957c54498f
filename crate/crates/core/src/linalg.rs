//! Minimal dense linear algebra: row-major storage and an LU solve with
//! partial pivoting, just enough for the reduced-matrix block inversion.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;

/// LU factors of a square matrix, PA = LU, stored in place.
pub(crate) struct LuFactors {
    n: usize,
    data: Vec<f64>,
    // pivots[k] = row swapped into position k at step k
    pivots: Vec<usize>,
}

pub(crate) fn lu_factor(n: usize, mut data: Vec<f64>) -> Result<LuFactors, Error> {
    debug_assert_eq!(data.len(), n * n);
    let mut pivots = vec![0usize; n];
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = data[k * n + k].abs();
        for i in k + 1..n {
            let mag = data[i * n + k].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = i;
            }
        }
        if pivot_mag == 0.0 {
            return Err(Error::SingularSystem);
        }
        pivots[k] = pivot_row;
        if pivot_row != k {
            for j in 0..n {
                data.swap(k * n + j, pivot_row * n + j);
            }
        }
        let pivot = data[k * n + k];
        let (upper, lower) = data.split_at_mut((k + 1) * n);
        let row_k = &upper[k * n..(k + 1) * n];
        for row_i in lower.chunks_exact_mut(n) {
            let factor = row_i[k] / pivot;
            row_i[k] = factor;
            if factor != 0.0 {
                for j in k + 1..n {
                    row_i[j] -= factor * row_k[j];
                }
            }
        }
    }
    Ok(LuFactors { n, data, pivots })
}

impl LuFactors {
    /// Solves A x = b in place.
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        for k in 0..n {
            b.swap(k, self.pivots[k]);
        }
        // forward substitution with unit lower factor
        for i in 1..n {
            let row = &self.data[i * n..i * n + i];
            let mut acc = 0.0;
            for (aij, bj) in row.iter().zip(b.iter()) {
                acc += aij * bj;
            }
            b[i] -= acc;
        }
        // back substitution
        for i in (0..n).rev() {
            let row = &self.data[i * n + i + 1..(i + 1) * n];
            let mut acc = 0.0;
            for (aij, bj) in row.iter().zip(b[i + 1..].iter()) {
                acc += aij * bj;
            }
            b[i] = (b[i] - acc) / self.data[i * n + i];
        }
    }
}

/// y = A x for a row-major n x n matrix.
pub(crate) fn mat_vec(n: usize, a: &[f64], x: &[f64], y: &mut [f64]) {
    for (i, yi) in y.iter_mut().enumerate() {
        let row = &a[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for (aij, xj) in row.iter().zip(x.iter()) {
            acc += aij * xj;
        }
        *yi = acc;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // A = [[2,1],[1,3]], b = [5, 10] -> x = [1, 3]
        let lu = lu_factor(2, vec![2.0, 1.0, 1.0, 3.0]).unwrap();
        let mut b = [5.0, 10.0];
        lu.solve(&mut b);
        assert!((b[0] - 1.0).abs() < 1e-14);
        assert!((b[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let lu = lu_factor(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let mut b = [2.0, 3.0];
        lu.solve(&mut b);
        assert_eq!(b, [3.0, 2.0]);
    }

    #[test]
    fn singular_matrix_is_detected() {
        assert!(matches!(
            lu_factor(2, vec![1.0, 2.0, 2.0, 4.0]),
            Err(Error::SingularSystem)
        ));
    }
}
