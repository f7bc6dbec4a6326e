//! Tiny dense solvers for the (k+1)-sized systems that appear in jet
//! realization and kernel-coefficient extraction. Not a general linear
//! algebra layer.

use crate::error::{Error, Result};

/// Solve `A x = b` by Gauss elimination with partial pivoting.
/// `a` is row-major, consumed. Fails when a pivot falls below `tiny`.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>, tiny: f64) -> Result<Vec<f64>> {
    let n = b.len();
    assert!(a.len() == n && a.iter().all(|r| r.len() == n));
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        if a[piv][col].abs() < tiny {
            return Err(Error::IllConditionedVandermonde(n));
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for j in col..n {
                        a[row][j] -= f * a[col][j];
                    }
                    b[row] -= f * b[col];
                }
            }
        }
    }
    Ok((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Least squares `min ‖A x - b‖₂` via the normal equations; adequate for
/// the small, mildly conditioned systems used here.
pub(crate) fn lstsq(a: &[Vec<f64>], b: &[f64], tiny: f64) -> Result<Vec<f64>> {
    let rows = a.len();
    assert_eq!(rows, b.len());
    let cols = a[0].len();
    let mut ata = vec![vec![0.0; cols]; cols];
    let mut atb = vec![0.0; cols];
    for r in 0..rows {
        for i in 0..cols {
            atb[i] += a[r][i] * b[r];
            for j in 0..cols {
                ata[i][j] += a[r][i] * a[r][j];
            }
        }
    }
    solve_dense(ata, atb, tiny)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_dense(a, vec![5.0, 10.0], 1e-14).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_singular_system() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(solve_dense(a, vec![1.0, 2.0], 1e-12).is_err());
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        // Overdetermined consistent system.
        let a = vec![
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        ];
        let b = vec![2.0, -1.0, 1.0];
        let x = lstsq(&a, &b, 1e-14).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-10);
        assert!((x[1] + 1.0).abs() < 1e-10);
    }
}
