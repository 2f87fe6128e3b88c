//! Cross-checks of the Householder + QL eigensolver against two independent
//! algorithms: Sturm-count bisection on the real tridiagonal, and cyclic
//! Jacobi on the real symmetric 2n x 2n embedding of a Hermitian matrix.

use num_complex::Complex64;
use nyquist_core::eigen::{hermitian_eigh, hermitian_eigenvalues, tridiagonal_eig, CMatrix};
use nyquist_core::spectra::hermitian_eig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Number of eigenvalues of the tridiagonal (d, e) strictly below x.
fn sturm_count(d: &[f64], e: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..d.len() {
        let e2 = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] };
        q = d[i] - x - if i == 0 { 0.0 } else { e2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (d[i].abs() + 1.0);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

fn bisection_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { 0.0 } + if i + 1 < n { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if sturm_count(d, e, m) > k {
                    b = m;
                } else {
                    a = m;
                }
                if b - a <= 1e-15 * (1.0 + a.abs().max(b.abs())) {
                    break;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
fn jacobi_symmetric(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let mut m = CMatrix::zeros(n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(rng.gen_range(-2.0..2.0), 0.0);
        for j in 0..i {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

#[test]
fn tridiagonal_ql_matches_bisection() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for n in [1usize, 2, 5, 17, 60] {
        let d: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let e: Vec<f64> = (0..n.saturating_sub(1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (ql, _) = tridiagonal_eig(&d, &e, false).unwrap();
        let bis = bisection_eigenvalues(&d, &e);
        for (a, b) in ql.iter().zip(&bis) {
            assert!((a - b).abs() < 1e-10, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn hermitian_matches_real_embedding_jacobi() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in [2, 3, 8, 20] {
        let m = random_hermitian(n, &mut rng);
        // [[Re, -Im], [Im, Re]] has every eigenvalue of m twice.
        let mut big = vec![vec![0.0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                let z = m[(i, j)];
                big[i][j] = z.re;
                big[i + n][j + n] = z.re;
                big[i][j + n] = -z.im;
                big[i + n][j] = z.im;
            }
        }
        let jac = jacobi_symmetric(big);
        let ours = hermitian_eigenvalues(&m).unwrap();
        for (k, v) in ours.iter().enumerate() {
            assert!((v - jac[2 * k]).abs() < 1e-10, "n={n} k={k}: {v} vs {}", jac[2 * k]);
            assert!((v - jac[2 * k + 1]).abs() < 1e-10);
        }
    }
}

#[test]
fn extremal_pairs_have_small_residual() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let m = random_hermitian(150, &mut rng);
    let (vals, vecs) = hermitian_eigh(&m, true).unwrap();
    let vecs = vecs.unwrap();
    let norm = m.frobenius();
    for j in [0, vals.len() - 1] {
        let v: Vec<Complex64> = (0..m.dim()).map(|i| vecs[(i, j)]).collect();
        let mv = m.mul_vec(&v);
        let res: f64 = mv.iter().zip(&v).map(|(a, b)| (a - vals[j] * b).norm_sqr()).sum::<f64>().sqrt();
        assert!(res <= 1e-9 * norm, "pair {j}: residual {res:e}");
    }
}

#[test]
fn two_by_two_closed_form() {
    let (a, b) = (1.3, Complex64::new(0.4, -0.7));
    let m = CMatrix::from_row_major(2, vec![Complex64::new(a, 0.0), b, b.conj(), Complex64::new(a, 0.0)]);
    let s = hermitian_eig(&m).unwrap();
    assert!((s.eigenvalues[0] - (a + b.norm())).abs() < 1e-14);
    assert!((s.eigenvalues[1] - (a - b.norm())).abs() < 1e-14);
}

#[test]
fn rank_deficient_cluster_converges() {
    // Outer products of a few vectors: most eigenvalues sit at roundoff level.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 300;
    let vs: Vec<Vec<Complex64>> = (0..3)
        .map(|_| (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
        .collect();
    let m = CMatrix::from_fn(n, |i, j| vs.iter().map(|v| v[i] * v[j].conj()).sum());
    let vals = hermitian_eigenvalues(&m).unwrap();
    let top = vals[n - 1];
    assert!(vals[..n - 3].iter().all(|v| v.abs() < 1e-12 * top));
}
