//! Reference implementations used as test oracles. They follow textbook
//! formulas and share no code paths with the library.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;

pub type M = DMatrix<C>;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// `(A⊗B)[(i·p + k), (j·q + l)] = A[i,j]·B[k,l]`, written out element by element.
pub fn kron(a: &M, b: &M) -> M {
    let (p, q) = (b.nrows(), b.ncols());
    M::from_fn(a.nrows() * p, a.ncols() * q, |r, s| a[(r / p, s / q)] * b[(r % p, s % q)])
}

pub fn det2(m: &M) -> C {
    m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
}

/// Cofactor expansion along the first row.
pub fn det_cofactor(m: &M) -> C {
    let n = m.nrows();
    if n == 1 {
        return m[(0, 0)];
    }
    if n == 2 {
        return det2(m);
    }
    (0..n)
        .map(|j| {
            let minor = m.clone().remove_row(0).remove_column(j);
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            m[(0, j)] * det_cofactor(&minor) * sign
        })
        .sum()
}

/// `2|a₀₀a₁₁ − a₀₁a₁₀|` of (possibly unnormalized) two-qubit amplitudes.
pub fn pure_concurrence(a: &[C]) -> f64 {
    2.0 * (a[0] * a[3] - a[1] * a[2]).norm()
}

/// `√(2(1 − tr ρ_A²))` of a normalized two-qubit state.
pub fn concurrence_from_purity(a: &[C]) -> f64 {
    let m = M::from_row_slice(2, 2, a);
    let rho_a = &m * m.adjoint();
    let purity = (&rho_a * &rho_a).trace().re;
    (2.0 * (1.0 - purity)).max(0.0).sqrt()
}

/// Square root of a PSD matrix; eigenvalues below `1e-14·tr` count as zero.
fn hermitian_sqrt(m: &M) -> M {
    let e = m.clone().symmetric_eigen();
    let floor = 1e-14 * e.eigenvalues.iter().map(|v| v.abs()).sum::<f64>();
    let s = DVector::from_iterator(e.eigenvalues.len(), e.eigenvalues.iter().map(|&v| c(if v > floor { v.sqrt() } else { 0.0 }, 0.0)));
    &e.eigenvectors * M::from_diagonal(&s) * e.eigenvectors.adjoint()
}

fn sigma_yy() -> M {
    let y = M::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)]);
    kron(&y, &y)
}

/// Wootters concurrence from the eigenvalues of `√(√ρ ρ̃ √ρ)`, ρ̃ = (Y⊗Y)ρ*(Y⊗Y).
/// Accepts unnormalized ρ (the formula is degree-one homogeneous).
pub fn wootters(rho: &M) -> f64 {
    let yy = sigma_yy();
    let tilde = &yy * rho.map(|z| z.conj()) * &yy;
    let s = hermitian_sqrt(rho);
    let r = &s * tilde * &s;
    let r = (&r + r.adjoint()).scale(0.5);
    let vals = r.symmetric_eigen().eigenvalues;
    let floor = 1e-14 * vals.iter().map(|v| v.abs()).sum::<f64>();
    let mut l: Vec<f64> = vals.iter().map(|&v| if v > floor { v.sqrt() } else { 0.0 }).collect();
    l.sort_by(|a, b| b.partial_cmp(a).unwrap());
    (l[0] - l[1] - l[2] - l[3]).max(0.0)
}

/// Cayley's hyperdeterminant with amplitude `a_ijk` at index `4i + 2j + k`.
pub fn hyperdeterminant(a: &[C]) -> C {
    let x = |i: usize, j: usize, k: usize| a[4 * i + 2 * j + k];
    let sq = |z: C| z * z;
    let d1 = sq(x(0, 0, 0)) * sq(x(1, 1, 1)) + sq(x(0, 0, 1)) * sq(x(1, 1, 0)) + sq(x(0, 1, 0)) * sq(x(1, 0, 1)) + sq(x(1, 0, 0)) * sq(x(0, 1, 1));
    let d2 = x(0, 0, 0) * x(1, 1, 1) * x(0, 1, 1) * x(1, 0, 0)
        + x(0, 0, 0) * x(1, 1, 1) * x(1, 0, 1) * x(0, 1, 0)
        + x(0, 0, 0) * x(1, 1, 1) * x(1, 1, 0) * x(0, 0, 1)
        + x(0, 1, 1) * x(1, 0, 0) * x(1, 0, 1) * x(0, 1, 0)
        + x(0, 1, 1) * x(1, 0, 0) * x(1, 1, 0) * x(0, 0, 1)
        + x(1, 0, 1) * x(0, 1, 0) * x(1, 1, 0) * x(0, 0, 1);
    let d3 = x(0, 0, 0) * x(1, 1, 0) * x(1, 0, 1) * x(0, 1, 1) + x(1, 1, 1) * x(0, 0, 1) * x(0, 1, 0) * x(1, 0, 0);
    d1 - d2 * 2.0 + d3 * 4.0
}

/// `√τ₃ = 2√|Det|`.
pub fn sqrt_three_tangle(a: &[C]) -> f64 {
    2.0 * hyperdeterminant(a).norm().sqrt()
}

/// `Σ_m Π_i |det K_m^(i)|^(2/d_i)` with cofactor determinants.
pub fn decay_factor(ops: &[Vec<M>]) -> f64 {
    ops.iter().map(|factors| factors.iter().map(|f| det_cofactor(f).norm().powf(2.0 / f.nrows() as f64)).product::<f64>()).sum()
}

/// Smallest eigenvalue of the partial transpose on the second qubit of a 4×4 matrix.
pub fn min_pt_eigenvalue(rho: &M) -> f64 {
    let pt = M::from_fn(4, 4, |r, s| {
        let (a, b) = (r / 2, r % 2);
        let (cc, d) = (s / 2, s % 2);
        rho[(2 * a + d, 2 * cc + b)]
    });
    pt.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn rank_one(v: &[C]) -> M {
    let v = DVector::from_column_slice(v);
    &v * v.adjoint()
}

/// Relative deviation `|a − b| / max(|b|, floor)`.
pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}
