//! Small dense kernels: cyclic Jacobi for real symmetric matrices and the
//! d×d block helpers used by Laplacian assembly.

use num_complex::Complex64;

const MAX_SWEEPS: usize = 100;

/// Output of [`jacobi_eigen`].
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Eigenvalues in the order of the columns of `vectors` (not sorted).
    pub values: Vec<f64>,
    /// Row-major `n × n`, eigenvectors as columns. Empty unless requested.
    pub vectors: Vec<f64>,
    pub sweeps: usize,
}

/// Cyclic Jacobi on a real symmetric row-major `n × n` matrix.
///
/// Iterates until the off-diagonal Frobenius norm is at most
/// `rel_tol · ‖A‖_F`. The input is consumed as workspace.
pub fn jacobi_eigen(mut a: Vec<f64>, n: usize, want_vectors: bool, rel_tol: f64) -> SymEigen {
    assert_eq!(a.len(), n * n, "matrix must be n×n");
    let mut v = if want_vectors {
        let mut v = vec![0.0; n * n];
        for i in 0..n {
            v[i * n + i] = 1.0;
        }
        v
    } else {
        Vec::new()
    };
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let target = rel_tol * norm;
    let mut sweeps = 0;
    while sweeps < MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i * n + j] * a[i * n + j];
                }
            }
        }
        if off.sqrt() <= target {
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                if want_vectors {
                    for k in 0..n {
                        let vkp = v[k * n + p];
                        let vkq = v[k * n + q];
                        v[k * n + p] = c * vkp - s * vkq;
                        v[k * n + q] = s * vkp + c * vkq;
                    }
                }
            }
        }
    }
    SymEigen {
        values: (0..n).map(|i| a[i * n + i]).collect(),
        vectors: v,
        sweeps,
    }
}

/// Row-major d×d real product `a · b`.
pub fn mat_mul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// `aᵀ · b` for row-major d×d blocks.
pub fn mat_tmul(a: &[f64], b: &[f64], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d * d];
    for k in 0..d {
        for i in 0..d {
            let aki = a[k * d + i];
            if aki == 0.0 {
                continue;
            }
            for j in 0..d {
                out[i * d + j] += aki * b[k * d + j];
            }
        }
    }
    out
}

pub fn identity(d: usize) -> Vec<f64> {
    let mut m = vec![0.0; d * d];
    for i in 0..d {
        m[i * d + i] = 1.0;
    }
    m
}

/// Inverse square root of a symmetric PSD block, `jitter` added to the
/// diagonal first. Returns `None` when an eigenvalue is not positive.
///
/// Diagonal blocks are handled element-wise; anything else goes through
/// a symmetric eigendecomposition.
pub fn sym_inv_sqrt(block: &[f64], d: usize, jitter: f64) -> Option<Vec<f64>> {
    let diagonal = (0..d).all(|i| (0..d).all(|j| i == j || block[i * d + j] == 0.0));
    if diagonal {
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            let x = block[i * d + i] + jitter;
            if x <= 0.0 || !x.is_finite() {
                return None;
            }
            out[i * d + i] = 1.0 / x.sqrt();
        }
        return Some(out);
    }
    let mut a = block.to_vec();
    for i in 0..d {
        a[i * d + i] += jitter;
    }
    let eig = jacobi_eigen(a, d, true, 1e-15);
    if eig.values.iter().any(|&l| l <= 0.0 || !l.is_finite()) {
        return None;
    }
    let inv: Vec<f64> = eig.values.iter().map(|l| 1.0 / l.sqrt()).collect();
    let u = &eig.vectors;
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            out[i * d + j] = (0..d).map(|k| u[i * d + k] * inv[k] * u[j * d + k]).sum();
        }
    }
    Some(out)
}

/// Complex d×d product `a · b`.
pub fn cmat_mul(a: &[Complex64], b: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for k in 0..d {
            let aik = a[i * d + k];
            for j in 0..d {
                out[i * d + j] += aik * b[k * d + j];
            }
        }
    }
    out
}

/// Conjugate transpose of a complex d×d block.
pub fn cmat_adjoint(a: &[Complex64], d: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); d * d];
    for i in 0..d {
        for j in 0..d {
            out[j * d + i] = a[i * d + j].conj();
        }
    }
    out
}

pub fn to_complex(a: &[f64]) -> Vec<Complex64> {
    a.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}
