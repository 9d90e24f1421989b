//! Symmetric tridiagonal eigensolver (implicit QL with Wilkinson shifts).
//!
//! Used twice in the crate: for Golub–Welsch quadrature rules, where only the
//! eigenvalues and the first eigenvector components are required, and for the
//! symmetrized finite-difference operator, where the full orthogonal basis is
//! needed.

use thiserror::Error;

const MAX_SWEEPS: usize = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigenError {
    #[error("off-diagonal has length {offdiag}, expected {expected}")]
    Shape { offdiag: usize, expected: usize },
    #[error("non-finite matrix entry")]
    NonFinite,
    #[error("QL iteration did not converge for eigenvalue {index}")]
    NoConvergence { index: usize },
}

/// Which parts of the eigenvectors to accumulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Vectors {
    None,
    /// Only the first component of every eigenvector (Golub–Welsch weights).
    FirstComponents,
    Full,
}

#[derive(Debug, Clone)]
pub struct TridiagEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// `first[j]` is component 0 of eigenvector `j` (when requested).
    pub first: Vec<f64>,
    /// Row-major: eigenvector `j` occupies `vectors[j*n..(j+1)*n]` (when requested).
    pub vectors: Vec<f64>,
}

impl TridiagEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, j: usize) -> &[f64] {
        let n = self.dim();
        &self.vectors[j * n..(j + 1) * n]
    }
}

/// Diagonalizes the symmetric tridiagonal matrix with main diagonal `diag` and
/// sub/super-diagonal `offdiag` (length `n - 1`).
pub fn symmetric_tridiagonal_eigen(
    diag: &[f64],
    offdiag: &[f64],
    want: Vectors,
) -> Result<TridiagEigen, EigenError> {
    let n = diag.len();
    if n == 0 {
        return Ok(TridiagEigen {
            values: Vec::new(),
            first: Vec::new(),
            vectors: Vec::new(),
        });
    }
    if offdiag.len() + 1 != n {
        return Err(EigenError::Shape {
            offdiag: offdiag.len(),
            expected: n - 1,
        });
    }
    if diag.iter().chain(offdiag).any(|x| !x.is_finite()) {
        return Err(EigenError::NonFinite);
    }

    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n - 1].copy_from_slice(offdiag);

    let mut first = match want {
        Vectors::FirstComponents => {
            let mut f = vec![0.0; n];
            f[0] = 1.0;
            f
        }
        _ => Vec::new(),
    };
    let mut z = match want {
        Vectors::Full => {
            let mut z = vec![0.0; n * n];
            for j in 0..n {
                z[j * n + j] = 1.0;
            }
            z
        }
        _ => Vec::new(),
    };

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(EigenError::NoConvergence { index: l });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;

                match want {
                    Vectors::None => {}
                    Vectors::FirstComponents => {
                        let f1 = first[i + 1];
                        first[i + 1] = s * first[i] + c * f1;
                        first[i] = c * first[i] - s * f1;
                    }
                    Vectors::Full => {
                        let (lo, hi) = z.split_at_mut((i + 1) * n);
                        let zi = &mut lo[i * n..];
                        let zi1 = &mut hi[..n];
                        for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                            let f1 = *b;
                            *b = s * *a + c * f1;
                            *a = c * *a - s * f1;
                        }
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values = order.iter().map(|&j| d[j]).collect();
    let first = if first.is_empty() {
        first
    } else {
        order.iter().map(|&j| first[j]).collect()
    };
    let vectors = if z.is_empty() {
        z
    } else {
        let mut sorted = Vec::with_capacity(n * n);
        for &j in &order {
            sorted.extend_from_slice(&z[j * n..(j + 1) * n]);
        }
        sorted
    };
    Ok(TridiagEigen {
        values,
        first,
        vectors,
    })
}
