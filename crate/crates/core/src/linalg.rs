//! Small dense and banded linear solvers.
//!
//! The step system of the Petrov-Galerkin method is seven-diagonal, so the
//! workhorse here is an LU factorization for band matrices with partial
//! pivoting (the band analogue of `dgbtrf`/`dgbtrs`). A dense LU is kept for
//! the initial-data interpolation and as a fallback for small systems.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at column {col})")]
    Singular { col: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// Solve a 3x3 system with partial pivoting. Rows are `a`, right-hand side `b`.
pub fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Result<[f64; 3], LinalgError> {
    let mut m = [[0.0f64; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-300 {
            return Err(LinalgError::Singular {
                col,
                pivot: m[piv][col],
            });
        }
        m.swap(col, piv);
        for row in col + 1..3 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
        }
    }
    let mut x = [0.0f64; 3];
    for i in (0..3).rev() {
        let mut s = m[i][3];
        for k in i + 1..3 {
            s -= m[i][k] * x[k];
        }
        x[i] = s / m[i][i];
    }
    Ok(x)
}

/// Dense LU factorization with partial pivoting, row-major storage.
pub struct DenseLu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl DenseLu {
    pub fn factorize(a: &[f64], n: usize) -> Result<Self, LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::Dimension(format!(
                "expected {} entries, got {}",
                n * n,
                a.len()
            )));
        }
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let mut piv = col;
            let mut best = lu[col * n + col].abs();
            for row in col + 1..n {
                let v = lu[row * n + col].abs();
                if v > best {
                    best = v;
                    piv = row;
                }
            }
            if best < 1e-300 {
                return Err(LinalgError::Singular { col, pivot: best });
            }
            if piv != col {
                for k in 0..n {
                    lu.swap(col * n + k, piv * n + k);
                }
                perm.swap(col, piv);
            }
            let d = lu[col * n + col];
            for row in col + 1..n {
                let f = lu[row * n + col] / d;
                lu[row * n + col] = f;
                for k in col + 1..n {
                    lu[row * n + k] -= f * lu[col * n + k];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let n = self.n;
        if b.len() != n {
            return Err(LinalgError::Dimension(format!(
                "rhs length {} != {}",
                b.len(),
                n
            )));
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut s = x[i];
            for k in 0..i {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= self.lu[i * n + k] * x[k];
            }
            x[i] = s / self.lu[i * n + i];
        }
        Ok(x)
    }
}

/// LU factorization of a band matrix with `kl` subdiagonals and `ku`
/// superdiagonals, with partial pivoting. Pivoting introduces up to `kl`
/// extra superdiagonals of fill-in, so U is stored with `kl + ku`
/// superdiagonals (LAPACK band-storage layout).
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    /// `(2*kl + ku + 1) x n`, column-major bands: `ab[kl + ku + i - j][j] = a[i][j]`.
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Factorize from a callback giving entry `(i, j)`; entries outside the
    /// band are treated as zero.
    pub fn factorize<F>(n: usize, kl: usize, ku: usize, entry: F) -> Result<Self, LinalgError>
    where
        F: Fn(usize, usize) -> f64,
    {
        let ldab = 2 * kl + ku + 1;
        let mut ab = vec![0.0f64; ldab * n];
        for j in 0..n {
            let lo = j.saturating_sub(ku);
            let hi = (j + kl).min(n - 1);
            for i in lo..=hi {
                ab[(kl + ku + i - j) * n + j] = entry(i, j);
            }
        }
        let mut ipiv = vec![0usize; n];
        // Band LU, pivot search restricted to the kl rows below the diagonal.
        for j in 0..n {
            let pmax = (j + kl).min(n - 1);
            let mut piv = j;
            let mut best = ab[(kl + ku) * n + j].abs();
            for i in j + 1..=pmax {
                let v = ab[(kl + ku + i - j) * n + j].abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best < 1e-300 {
                return Err(LinalgError::Singular { col: j, pivot: best });
            }
            ipiv[j] = piv;
            let jmax = (j + kl + ku).min(n - 1);
            if piv != j {
                // swap rows j and piv within columns j..=jmax
                for col in j..=jmax {
                    let bj = band_index(kl, ku, n, j, col);
                    let bp = band_index(kl, ku, n, piv, col);
                    ab.swap(bj, bp);
                }
            }
            let d = ab[(kl + ku) * n + j];
            for i in j + 1..=pmax {
                let bi = band_index(kl, ku, n, i, j);
                let f = ab[bi] / d;
                ab[bi] = f;
                for col in j + 1..=jmax {
                    let bic = band_index(kl, ku, n, i, col);
                    let bjc = band_index(kl, ku, n, j, col);
                    ab[bic] -= f * ab[bjc];
                }
            }
        }
        Ok(Self { n, kl, ku, ab, ipiv })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        if b.len() != n {
            return Err(LinalgError::Dimension(format!(
                "rhs length {} != {}",
                b.len(),
                n
            )));
        }
        let mut x = b.to_vec();
        for j in 0..n {
            let piv = self.ipiv[j];
            if piv != j {
                x.swap(j, piv);
            }
            let pmax = (j + kl).min(n - 1);
            for i in j + 1..=pmax {
                x[i] -= self.ab[band_index(kl, ku, n, i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            let jmax = (i + kl + ku).min(n - 1);
            let mut s = x[i];
            for j in i + 1..=jmax {
                s -= self.ab[band_index(kl, ku, n, i, j)] * x[j];
            }
            x[i] = s / self.ab[(kl + ku) * n + i];
        }
        Ok(x)
    }
}

#[inline]
fn band_index(kl: usize, ku: usize, n: usize, i: usize, j: usize) -> usize {
    (kl + ku + i - j) * n + j
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat_vec(a: &[f64], n: usize, x: &[f64]) -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| a[i * n + j] * x[j]).sum())
            .collect()
    }

    #[test]
    fn solve3_pivoting() {
        // first pivot is zero, forces a row swap
        let a = [[0.0, 2.0, 1.0], [1.0, 0.0, -1.0], [3.0, 1.0, 2.0]];
        let x = solve3(a, [3.0, 0.0, 6.0]).unwrap();
        for (i, row) in a.iter().enumerate() {
            let r: f64 = (0..3).map(|j| row[j] * x[j]).sum();
            assert!((r - [3.0, 0.0, 6.0][i]).abs() < 1e-12);
        }
    }

    #[test]
    fn solve3_singular_detected() {
        let a = [[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [0.0, 1.0, 1.0]];
        assert!(solve3(a, [1.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn dense_lu_random_residual() {
        let n = 40;
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut rnd = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let a: Vec<f64> = (0..n * n).map(|_| rnd()).collect();
        let xe: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let b = mat_vec(&a, n, &xe);
        let lu = DenseLu::factorize(&a, n).unwrap();
        let x = lu.solve(&b).unwrap();
        for i in 0..n {
            assert!((x[i] - xe[i]).abs() < 1e-9, "i={i}: {} vs {}", x[i], xe[i]);
        }
    }

    #[test]
    fn banded_matches_dense() {
        let n = 60;
        let (kl, ku) = (3, 3);
        let mut seed = 42u64;
        let mut rnd = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut a = vec![0.0f64; n * n];
        for i in 0..n {
            for j in 0..n {
                if j + kl >= i && i + ku >= j {
                    a[i * n + j] = rnd();
                }
            }
            // keep the diagonal from being accidentally tiny but NOT dominant,
            // so pivoting actually matters
            a[i * n + i] += 0.1;
        }
        let b: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let dense = DenseLu::factorize(&a, n).unwrap().solve(&b).unwrap();
        let band = BandedLu::factorize(n, kl, ku, |i, j| a[i * n + j])
            .unwrap()
            .solve(&b)
            .unwrap();
        for i in 0..n {
            assert!(
                (dense[i] - band[i]).abs() < 1e-9 * (1.0 + dense[i].abs()),
                "i={i}: {} vs {}",
                dense[i],
                band[i]
            );
        }
    }

    #[test]
    fn banded_needs_pivoting() {
        // zero diagonal entry: fails without partial pivoting
        let n = 5;
        let entries = |i: usize, j: usize| -> f64 {
            if i == j {
                if i == 2 { 0.0 } else { 2.0 }
            } else if i.abs_diff(j) <= 2 {
                1.0
            } else {
                0.0
            }
        };
        let lu = BandedLu::factorize(n, 2, 2, entries).unwrap();
        let b = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let x = lu.solve(&b).unwrap();
        for i in 0..n {
            let mut r = 0.0;
            for j in 0..n {
                r += entries(i, j) * x[j];
            }
            assert!((r - b[i]).abs() < 1e-12);
        }
    }
}
