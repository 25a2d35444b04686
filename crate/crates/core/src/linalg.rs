//! Exact dense linear solves over the rationals.

use num_traits::Zero;

use crate::rational::Rational;

/// Solves `A X = B` for a square `A` and a right-hand side with any number of
/// columns. Returns `None` when `A` is singular.
pub fn solve(matrix: &[Vec<Rational>], rhs: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = matrix.len();
    assert_eq!(rhs.len(), n, "row count mismatch");
    let k = rhs.first().map_or(0, Vec::len);
    let mut a: Vec<Vec<Rational>> = matrix
        .iter()
        .zip(rhs)
        .map(|(row, b)| {
            assert_eq!(row.len(), n, "matrix must be square");
            row.iter().chain(b.iter()).cloned().collect()
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for v in a[col][col..].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r == col || row[col].is_zero() {
                continue;
            }
            let factor = row[col].clone();
            for (v, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                if !p.is_zero() {
                    *v -= &factor * p;
                }
            }
        }
    }
    Some(a.into_iter().map(|row| row[n..n + k].to_vec()).collect())
}

pub fn solve_vec(matrix: &[Vec<Rational>], rhs: &[Rational]) -> Option<Vec<Rational>> {
    let b: Vec<Vec<Rational>> = rhs.iter().map(|v| vec![v.clone()]).collect();
    solve(matrix, &b).map(|x| x.into_iter().map(|mut r| r.remove(0)).collect())
}
