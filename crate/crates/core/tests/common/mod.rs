//! Oracles and fixtures shared by the integration tests. Nothing here calls
//! into the crate's numerical kernels.
#![allow(dead_code)]

use nalgebra::DMatrix;
use qcmod::fractal::{build_ifs, IfsSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LOG4_LOG3: f64 = 1.261_859_507_142_914_9;

pub fn default_ifs() -> IfsSpec {
    build_ifs(1.0 / 3.0, vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = random_matrix(rng, n, n);
    (&a + a.transpose()) * 0.5
}

/// One-sided Jacobi (Hestenes) SVD: orthogonalize columns by plane
/// rotations, then read singular values off the column norms. Sorted
/// non-increasing.
pub fn jacobi_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut a = if m.nrows() >= m.ncols() { m.clone() } else { m.transpose() };
    let n = a.ncols();
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for i in 0..n {
            for j in i + 1..n {
                let alpha: f64 = a.column(i).norm_squared();
                let beta: f64 = a.column(j).norm_squared();
                let gamma: f64 = a.column(i).dot(&a.column(j));
                if gamma.abs() <= 1e-300 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt().max(1e-300));
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..a.nrows() {
                    let (x, y) = (a[(r, i)], a[(r, j)]);
                    a[(r, i)] = c * x - s * y;
                    a[(r, j)] = s * x + c * y;
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut s: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// `Σ s_j j^{-1+1/p}` written out directly; `p = ∞` gives the trace norm
/// weights `j^{-1}`.
pub fn oracle_lorentz(s: &[f64], p: f64) -> f64 {
    let inv = if p.is_infinite() { 0.0 } else { 1.0 / p };
    s.iter().enumerate().map(|(j, v)| v * ((j + 1) as f64).powf(inv - 1.0)).sum()
}

pub fn kron_identity(x: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(x.nrows() * m, x.ncols() * m);
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            for c in 0..m {
                out[(i * m + c, j * m + c)] = x[(i, j)];
            }
        }
    }
    out
}

/// The eight signed permutations of two coordinates.
pub fn signed_permutations_2() -> Vec<DMatrix<f64>> {
    let mut out = Vec::new();
    for swap in [false, true] {
        for a in [1.0, -1.0] {
            for b in [1.0, -1.0] {
                let mut g = DMatrix::zeros(2, 2);
                if swap {
                    g[(0, 1)] = a;
                    g[(1, 0)] = b;
                } else {
                    g[(0, 0)] = a;
                    g[(1, 1)] = b;
                }
                out.push(g);
            }
        }
    }
    out
}

/// Average of `(I ⊗ g) B (I ⊗ g)ᵀ` over the signed permutations of the copy
/// index, copy index fastest.
pub fn group_average_m2(b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b.nrows() / 2;
    let group = signed_permutations_2();
    let mut acc = DMatrix::zeros(b.nrows(), b.ncols());
    for g in &group {
        let mut full = DMatrix::zeros(2 * n, 2 * n);
        for k in 0..n {
            full.view_mut((2 * k, 2 * k), (2, 2)).copy_from(g);
        }
        acc += &full * b * full.transpose();
    }
    acc / group.len() as f64
}

/// `[A, T_i]` for every component, dense.
pub fn commutators(a: &DMatrix<f64>, comps: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    comps.iter().map(|t| a * t - t * a).collect()
}

/// Max-convention norm of a tuple via the Jacobi oracle.
pub fn oracle_tuple_max(tuple: &[DMatrix<f64>], p: f64) -> f64 {
    tuple
        .iter()
        .map(|t| oracle_lorentz(&jacobi_singular_values(t), p))
        .fold(0.0, f64::max)
}

pub fn oracle_tuple_tilde(tuple: &[DMatrix<f64>], p: f64) -> f64 {
    let rows = tuple[0].nrows();
    let mut stacked = DMatrix::zeros(rows * tuple.len(), tuple[0].ncols());
    for (i, t) in tuple.iter().enumerate() {
        stacked.rows_mut(i * rows, rows).copy_from(t);
    }
    oracle_lorentz(&jacobi_singular_values(&stacked), p)
}
