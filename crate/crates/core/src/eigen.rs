//! Dense Hermitian eigensolver.
//!
//! Householder reduction to a complex tridiagonal matrix, a diagonal phase
//! change that makes the tridiagonal real symmetric, then implicit-shift QL.
//! The real tridiagonal solver is also used on its own for Golub–Welsch
//! quadrature rules.

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_QL_SWEEPS: usize = 60;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major data. Panics if `data.len() != n * n`.
    pub fn from_row_major(n: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), n * n, "row-major data has wrong length");
        Self { n, data }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Largest entrywise deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in i..self.n {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Frobenius norm.
    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Principal submatrix on the given (ordered) index set.
    pub fn principal(&self, idx: &[usize]) -> CMatrix {
        CMatrix::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }

    /// Leading principal submatrix of size `k`.
    pub fn leading(&self, k: usize) -> CMatrix {
        CMatrix::from_fn(k, |i, j| self[(i, j)])
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigen-decomposition of a real symmetric tridiagonal matrix.
///
/// `diag` has length `n`, `off` has length `n - 1` (`off[k]` couples `k` and `k + 1`).
/// Returns eigenvalues in ascending order and, when requested, the column
/// eigenvectors stored row-major as `z[i * n + j]` (component `i` of vector `j`).
pub fn tridiagonal_eig(
    diag: &[f64],
    off: &[f64],
    want_vectors: bool,
) -> Result<(Vec<f64>, Option<Vec<f64>>)> {
    let n = diag.len();
    assert!(n == 0 || off.len() + 1 == n, "off-diagonal length mismatch");
    let mut d = diag.to_vec();
    let mut e = vec![0.0; n];
    e[..n.saturating_sub(1)].copy_from_slice(off);
    let mut z = want_vectors.then(|| {
        let mut z = vec![0.0; n * n];
        for i in 0..n {
            z[i * n + i] = 1.0;
        }
        z
    });

    // Couplings below eps * ||T|| are dropped; without this floor a cluster of
    // eigenvalues at roundoff level never meets the relative test.
    let anorm = (0..n)
        .map(|i| d[i].abs() + e[i].abs() + if i > 0 { e[i - 1].abs() } else { 0.0 })
        .fold(0.0, f64::max);
    let floor = f64::EPSILON * anorm;

    // Implicit QL with Wilkinson-type shifts (tqli).
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence {
                    what: "tridiagonal QL",
                    iterations: MAX_QL_SWEEPS,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_mut() {
                    for k in 0..n {
                        let zk1 = z[k * n + i + 1];
                        let zk = z[k * n + i];
                        z[k * n + i + 1] = s * zk + c * zk1;
                        z[k * n + i] = c * zk - s * zk1;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // Sort ascending, permuting vectors alongside.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let vectors = z.map(|z| {
        let mut out = vec![0.0; n * n];
        for (j, &k) in order.iter().enumerate() {
            for i in 0..n {
                out[i * n + j] = z[i * n + k];
            }
        }
        out
    });
    Ok((values, vectors))
}

/// Householder vectors and the resulting complex tridiagonal.
struct Tridiagonal {
    diag: Vec<f64>,
    /// Complex sub-diagonal `T[k+1][k]`.
    sub: Vec<Complex64>,
    /// Householder vectors; `reflectors[k]` acts on indices `k+1..n`.
    reflectors: Vec<Option<Vec<Complex64>>>,
}

fn householder_tridiagonalize(m: &CMatrix) -> Tridiagonal {
    let n = m.dim();
    let mut a = m.clone();
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n.saturating_sub(2) {
        let len = n - k - 1;
        let x: Vec<Complex64> = (0..len).map(|i| a[(k + 1 + i, k)]).collect();
        let xnorm = x.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let tail = x[1..].iter().map(|c| c.norm_sqr()).sum::<f64>();
        if xnorm == 0.0 || tail == 0.0 {
            reflectors.push(None);
            continue;
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        // p = A22 v, K = v^* p, w = 2p - 2K v, A22 <- A22 - v w^* - w v^*.
        let off = k + 1;
        let p: Vec<Complex64> = (0..len)
            .map(|i| {
                let row = &a.data[(off + i) * n + off..(off + i) * n + n];
                row.iter().zip(&v).map(|(aij, vj)| aij * vj).sum()
            })
            .collect();
        let kk: Complex64 = v.iter().zip(&p).map(|(vi, pi)| vi.conj() * pi).sum();
        let w: Vec<Complex64> = p
            .iter()
            .zip(&v)
            .map(|(pi, vi)| 2.0 * pi - 2.0 * kk.re * vi)
            .collect();
        for i in 0..len {
            let vi = v[i];
            let wi = w[i];
            let row = &mut a.data[(off + i) * n + off..(off + i) * n + n];
            for (j, aij) in row.iter_mut().enumerate() {
                *aij -= vi * w[j].conj() + wi * v[j].conj();
            }
        }
        // Column k below the diagonal becomes (alpha, 0, ..., 0).
        a[(k + 1, k)] = alpha;
        a[(k, k + 1)] = alpha.conj();
        for i in 1..len {
            a[(k + 1 + i, k)] = Complex64::new(0.0, 0.0);
            a[(k, k + 1 + i)] = Complex64::new(0.0, 0.0);
        }
        reflectors.push(Some(v));
    }
    let diag = (0..n).map(|i| a[(i, i)].re).collect();
    let sub = (0..n.saturating_sub(1)).map(|i| a[(i + 1, i)]).collect();
    Tridiagonal {
        diag,
        sub,
        reflectors,
    }
}

/// Eigenvalues (ascending) and optionally eigenvectors of a Hermitian matrix.
///
/// Eigenvectors are returned column-wise: `vecs[(i, j)]` is component `i` of
/// the eigenvector for eigenvalue `j`.
pub fn hermitian_eigh(m: &CMatrix, want_vectors: bool) -> Result<(Vec<f64>, Option<CMatrix>)> {
    let n = m.dim();
    if n == 0 {
        return Ok((Vec::new(), want_vectors.then(|| CMatrix::zeros(0))));
    }
    let tri = householder_tridiagonalize(m);

    // Phase change D so that D^* T D is real with off-diagonal |T[k+1][k]|.
    let mut phases = vec![Complex64::new(1.0, 0.0); n];
    let mut off = vec![0.0; n - 1];
    for k in 0..n - 1 {
        let b = tri.sub[k];
        let r = b.norm();
        off[k] = r;
        phases[k + 1] = if r > 0.0 { phases[k] * b / r } else { phases[k] };
    }
    let (values, z) = tridiagonal_eig(&tri.diag, &off, want_vectors)?;
    let vectors = z.map(|z| {
        // V = Q D Z with Q = H_0 H_1 ... H_{n-3}.
        let mut v = CMatrix::from_fn(n, |i, j| phases[i] * z[i * n + j]);
        for (k, refl) in tri.reflectors.iter().enumerate().rev() {
            let Some(u) = refl else { continue };
            let off = k + 1;
            for j in 0..n {
                let dot: Complex64 = (0..u.len()).map(|i| u[i].conj() * v[(off + i, j)]).sum();
                let two_dot = 2.0 * dot;
                for i in 0..u.len() {
                    v[(off + i, j)] -= u[i] * two_dot;
                }
            }
        }
        v
    });
    Ok((values, vectors))
}

/// Eigenvalues only (ascending).
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    hermitian_eigh(m, false).map(|(v, _)| v)
}
