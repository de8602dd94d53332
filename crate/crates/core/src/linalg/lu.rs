//! Dense LU factorization with partial pivoting.

use super::LinalgError;

/// Packed `PA = LU` factors of a square matrix. `L` has a unit diagonal and
/// is stored below the diagonal of `lu`; `U` occupies the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    /// `perm[i]` is the original row placed at position `i`.
    perm: Vec<usize>,
}

/// Factors a dense square matrix given as rows.
pub fn lu_factor(rows: &[Vec<f64>]) -> Result<LuFactors, LinalgError> {
    let n = rows.len();
    if let Some(bad) = rows.iter().find(|r| r.len() != n) {
        return Err(LinalgError::NotSquare {
            rows: n,
            cols: bad.len(),
        });
    }
    let mut lu: Vec<f64> = rows.iter().flatten().copied().collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let scale = lu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let threshold = scale * f64::EPSILON * (n.max(1) as f64);

    for k in 0..n {
        let (p, pmax) = (k..n)
            .map(|i| (i, lu[i * n + k].abs()))
            .fold(
                (k, -1.0),
                |best, cur| if cur.1 > best.1 { cur } else { best },
            );
        if pmax <= threshold || pmax == 0.0 {
            return Err(LinalgError::Singular {
                col: k,
                pivot: pmax,
            });
        }
        if p != k {
            for j in 0..n {
                lu.swap(k * n + j, p * n + j);
            }
            perm.swap(k, p);
        }
        let pivot = lu[k * n + k];
        for i in (k + 1)..n {
            let f = lu[i * n + k] / pivot;
            lu[i * n + k] = f;
            if f != 0.0 {
                for j in (k + 1)..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
    }
    Ok(LuFactors { n, lu, perm })
}

impl LuFactors {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `M x = v`.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if v.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| v[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        Ok(x)
    }

    /// Solves `M^T x = v`.
    pub fn solve_transpose(&self, v: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if v.len() != n {
            return Err(LinalgError::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
        // M^T = U^T L^T P, so solve U^T z = v, then L^T w = z, then x = P^T w.
        let mut z = v.to_vec();
        for i in 0..n {
            let mut acc = z[i];
            for j in 0..i {
                acc -= self.lu[j * n + i] * z[j];
            }
            z[i] = acc / self.lu[i * n + i];
        }
        for i in (0..n).rev() {
            let mut acc = z[i];
            for j in (i + 1)..n {
                acc -= self.lu[j * n + i] * z[j];
            }
            z[i] = acc;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let f = lu_factor(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(f.solve(&[5.0, 6.0]).unwrap(), vec![5.0, 6.0]);
    }

    #[test]
    fn diagonal_solve() {
        let f = lu_factor(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        assert_eq!(f.solve(&[2.0, 4.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn rank_deficient_is_singular() {
        let r = lu_factor(&[vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(r, Err(LinalgError::Singular { .. })));
    }

    #[test]
    fn pivoting_and_transpose() {
        let m = vec![
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ];
        let f = lu_factor(&m).unwrap();
        let x = f.solve(&[3.0, 2.0, 4.0]).unwrap();
        for (row, b) in m.iter().zip([3.0, 2.0, 4.0]) {
            let ax: f64 = row.iter().zip(&x).map(|(a, x)| a * x).sum();
            assert!((ax - b).abs() < 1e-12);
        }
        let y = f.solve_transpose(&[1.0, -1.0, 2.0]).unwrap();
        for (j, b) in [1.0, -1.0, 2.0].iter().enumerate() {
            let aty: f64 = (0..3).map(|i| m[i][j] * y[i]).sum();
            assert!((aty - b).abs() < 1e-12);
        }
    }

    #[test]
    fn not_square() {
        assert!(matches!(
            lu_factor(&[vec![1.0, 2.0]]),
            Err(LinalgError::NotSquare { .. })
        ));
    }
}
