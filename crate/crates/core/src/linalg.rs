//! Dense complex linear algebra over multipartite tensor-product spaces.
//!
//! Party indices are zero-based throughout. A joint basis index is the
//! mixed-radix number whose most significant digit belongs to party 0,
//! matching the ordering produced by [`kron`].

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{usage, Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<C64>;
pub type ComplexVector = DVector<C64>;

/// Largest joint dimension handled with dense storage.
pub const MAX_DIM: usize = 4096;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Local Hilbert-space dimensions `(d_1, ..., d_n)` of a multipartite system.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LocalDims(Vec<usize>);

impl LocalDims {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return usage("local dimensions must name at least one party");
        }
        if dims.iter().any(|&d| d == 0) {
            return usage(format!("local dimensions must be positive: {dims:?}"));
        }
        let mut total: usize = 1;
        for &d in &dims {
            total = total.checked_mul(d).filter(|&t| t <= MAX_DIM).ok_or(Error::Size {
                dim: dims.iter().fold(1usize, |a, &b| a.saturating_mul(b)),
                limit: MAX_DIM,
            })?;
        }
        Ok(Self(dims))
    }

    pub fn qubits(n: usize) -> Self {
        Self(vec![2; n])
    }

    pub fn parties(&self) -> usize {
        self.0.len()
    }

    pub fn total(&self) -> usize {
        self.0.iter().product()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn get(&self, party: usize) -> usize {
        self.0[party]
    }

    /// Mixed-radix digits of a joint index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.0.len()];
        for (slot, &d) in out.iter_mut().zip(&self.0).rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Inverse of [`LocalDims::digits`].
    pub fn index(&self, digits: &[usize]) -> usize {
        digits.iter().zip(&self.0).fold(0, |acc, (&x, &d)| acc * d + x)
    }

    pub fn sub(&self, parties: &[usize]) -> LocalDims {
        LocalDims(parties.iter().map(|&p| self.0[p]).collect())
    }
}

impl std::fmt::Display for LocalDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let rows = ra.checked_mul(rb).unwrap_or(usize::MAX);
    let cols = ca.checked_mul(cb).unwrap_or(usize::MAX);
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::Size { dim: rows.max(cols), limit: MAX_DIM });
    }
    Ok(a.kronecker(b))
}

/// Kronecker product of a list of factors, left to right.
pub fn kron_all(factors: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    let (first, rest) = factors
        .split_first()
        .ok_or_else(|| Error::Usage("kron of an empty factor list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, f| kron(&acc, f))
}

/// Determinant via LU factorization.
pub fn determinant(a: &ComplexMatrix) -> Result<C64> {
    if !a.is_square() {
        return usage(format!("determinant of a non-square {}x{} matrix", a.nrows(), a.ncols()));
    }
    if a.nrows() == 0 {
        return Ok(ONE);
    }
    Ok(a.clone().lu().determinant())
}

pub fn dagger(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

pub fn frobenius(a: &ComplexMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &ComplexMatrix) -> C64 {
    a.diagonal().iter().sum()
}

pub fn all_finite(a: &ComplexMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermiticity_defect(a: &ComplexMatrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(a + a†)/2`.
pub fn hermitian_part(a: &ComplexMatrix) -> ComplexMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues sorted descending.
/// Column `k` of the returned matrix is the eigenvector for eigenvalue `k`.
pub fn hermitian_eigen(a: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let eig = hermitian_part(a).symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub fn min_hermitian_eigenvalue(a: &ComplexMatrix) -> f64 {
    hermitian_part(a)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Thin SVD `a = U diag(s) V†` with singular values sorted descending.
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v_t: ComplexMatrix,
}

pub fn svd(a: &ComplexMatrix) -> Svd {
    let raw = a.clone().svd(true, true);
    let u = raw.u.expect("svd requested u");
    let v_t = raw.v_t.expect("svd requested v_t");
    let k = raw.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| raw.singular_values[j].total_cmp(&raw.singular_values[i]));
    Svd {
        u: ComplexMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| raw.singular_values[i]).collect(),
        v_t: ComplexMatrix::from_fn(k, v_t.ncols(), |r, c| v_t[(order[r], c)]),
    }
}

pub fn singular_values(a: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Square root of a positive semidefinite Hermitian matrix (negative
/// eigenvalues clamped to zero).
pub fn psd_sqrt(a: &ComplexMatrix) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(a);
    let n = vals.len();
    let mut scaled = vecs.clone();
    for (k, &v) in vals.iter().enumerate() {
        let s = v.max(0.0).sqrt();
        for r in 0..n {
            scaled[(r, k)] *= s;
        }
    }
    &scaled * vecs.adjoint()
}

/// Q factor of a thin QR decomposition with the diagonal of R made real
/// positive, so the map is a well-defined retraction onto isometries.
pub fn orthonormalize(a: &ComplexMatrix) -> ComplexMatrix {
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..q.ncols().min(r.nrows()) {
        let d = r[(c, c)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            for row in 0..q.nrows() {
                q[(row, c)] *= phase;
            }
        }
    }
    q
}

fn check_party_set(dims: &LocalDims, parties: &[usize], what: &str) -> Result<Vec<usize>> {
    let mut set = parties.to_vec();
    set.sort_unstable();
    set.dedup();
    if set.len() != parties.len() {
        return usage(format!("{what}: repeated party index in {parties:?}"));
    }
    if let Some(&bad) = set.iter().find(|&&p| p >= dims.parties()) {
        return usage(format!("{what}: party {bad} out of range for {} parties", dims.parties()));
    }
    Ok(set)
}

/// For every joint index, its (index within `first`, index within the
/// complement) pair.
fn split_indices(dims: &LocalDims, first: &[usize]) -> (Vec<usize>, LocalDims, LocalDims, Vec<(usize, usize)>) {
    let rest: Vec<usize> = (0..dims.parties()).filter(|p| !first.contains(p)).collect();
    let first_dims = dims.sub(first);
    let rest_dims = dims.sub(&rest);
    let map = (0..dims.total())
        .map(|idx| {
            let dg = dims.digits(idx);
            let a: Vec<usize> = first.iter().map(|&p| dg[p]).collect();
            let b: Vec<usize> = rest.iter().map(|&p| dg[p]).collect();
            (first_dims.index(&a), rest_dims.index(&b))
        })
        .collect();
    (rest, first_dims, rest_dims, map)
}

/// Reduced operator on `keep` obtained by tracing out every other party.
/// `keep` is returned in ascending party order.
pub fn partial_trace_matrix(mat: &ComplexMatrix, dims: &LocalDims, keep: &[usize]) -> Result<(ComplexMatrix, LocalDims)> {
    if keep.is_empty() {
        return usage("partial trace needs a nonempty set of kept parties");
    }
    let keep = check_party_set(dims, keep, "partial trace")?;
    let (_, kd, td, map) = split_indices(dims, &keep);
    let (dk, dt) = (kd.total(), td.total());
    let mut full = vec![vec![0usize; dt]; dk];
    for (idx, &(k, t)) in map.iter().enumerate() {
        full[k][t] = idx;
    }
    let out = ComplexMatrix::from_fn(dk, dk, |i, j| (0..dt).map(|t| mat[(full[i][t], full[j][t])]).sum());
    Ok((out, kd))
}

/// Partial transpose over the parties in `parties`.
pub fn partial_transpose(mat: &ComplexMatrix, dims: &LocalDims, parties: &[usize]) -> Result<ComplexMatrix> {
    let parties = check_party_set(dims, parties, "partial transpose")?;
    let n = dims.total();
    let digits: Vec<Vec<usize>> = (0..n).map(|i| dims.digits(i)).collect();
    let mut out = ComplexMatrix::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            let mut dr = digits[r].clone();
            let mut dc = digits[c].clone();
            for &p in &parties {
                std::mem::swap(&mut dr[p], &mut dc[p]);
            }
            out[(dims.index(&dr), dims.index(&dc))] = mat[(r, c)];
        }
    }
    Ok(out)
}

/// Amplitudes rearranged as a `d_left × d_right` coefficient matrix for the
/// bipartition `left | rest`.
pub fn coefficient_matrix(amps: &ComplexVector, dims: &LocalDims, left: &[usize]) -> Result<ComplexMatrix> {
    let left = check_party_set(dims, left, "bipartition")?;
    if left.is_empty() || left.len() == dims.parties() {
        return usage(format!("bipartition {left:?} must leave both sides nonempty"));
    }
    if amps.len() != dims.total() {
        return Err(Error::DimensionMismatch { expected: dims.total().to_string(), got: amps.len().to_string() });
    }
    let (_, ld, rd, map) = split_indices(dims, &left);
    let mut out = ComplexMatrix::zeros(ld.total(), rd.total());
    for (idx, &(a, b)) in map.iter().enumerate() {
        out[(a, b)] = amps[idx];
    }
    Ok(out)
}

/// Schmidt decomposition of a bipartite cut.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Descending non-negative coefficients; their squares sum to the squared norm.
    pub coeffs: Vec<f64>,
    pub left: Vec<ComplexVector>,
    pub right: Vec<ComplexVector>,
    pub left_dims: LocalDims,
    pub right_dims: LocalDims,
}

impl SchmidtDecomposition {
    /// `Σ_k c_k |l_k⟩|r_k⟩` laid out in the joint ordering of `dims`.
    pub fn reconstruct(&self, dims: &LocalDims, left: &[usize]) -> ComplexVector {
        let mut left_sorted = left.to_vec();
        left_sorted.sort_unstable();
        let (_, _, _, map) = split_indices(dims, &left_sorted);
        ComplexVector::from_iterator(
            dims.total(),
            map.iter().map(|&(a, b)| {
                self.coeffs
                    .iter()
                    .zip(self.left.iter().zip(&self.right))
                    .map(|(&c, (l, r))| l[a] * r[b] * c)
                    .sum::<C64>()
            }),
        )
    }
}

/// Schmidt decomposition of `amps` across `left | rest`.
pub fn schmidt_decompose_amps(amps: &ComplexVector, dims: &LocalDims, left: &[usize]) -> Result<SchmidtDecomposition> {
    let coeff = coefficient_matrix(amps, dims, left)?;
    let mut left_sorted = left.to_vec();
    left_sorted.sort_unstable();
    let rest: Vec<usize> = (0..dims.parties()).filter(|p| !left_sorted.contains(p)).collect();
    let s = svd(&coeff);
    let k = s.singular_values.len();
    Ok(SchmidtDecomposition {
        coeffs: s.singular_values.clone(),
        left: (0..k).map(|i| s.u.column(i).into_owned()).collect(),
        right: (0..k).map(|i| s.v_t.row(i).transpose()).collect(),
        left_dims: dims.sub(&left_sorted),
        right_dims: dims.sub(&rest),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn kron_identity_and_permutation() {
        let i4 = kron(&ComplexMatrix::identity(2, 2), &ComplexMatrix::identity(2, 2)).unwrap();
        assert_eq!(i4, ComplexMatrix::identity(4, 4));
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let e0 = ComplexVector::from_fn(4, |i, _| if i == 0 { ONE } else { ZERO });
        let out = &xx * e0;
        assert_eq!(out[3], ONE);
        assert_eq!(out.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn kron_size_limit() {
        let big = ComplexMatrix::identity(128, 128);
        assert!(matches!(kron(&big, &big), Err(Error::Size { .. })));
    }

    #[test]
    fn determinant_cases() {
        assert!((determinant(&ComplexMatrix::identity(3, 3)).unwrap() - ONE).norm() < 1e-15);
        let g: f64 = 0.36;
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![ONE, c((1.0 - g).sqrt(), 0.0)]));
        assert!((determinant(&d).unwrap().re - 0.8).abs() < 1e-15);
        assert!(determinant(&ComplexMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexVector::from_vec(vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        let rho = &psi * psi.adjoint();
        let dims = LocalDims::qubits(2);
        let (red, rd) = partial_trace_matrix(&rho, &dims, &[0]).unwrap();
        assert_eq!(rd.as_slice(), &[2]);
        assert!((red - ComplexMatrix::identity(2, 2).scale(0.5)).norm() < 1e-15);
        assert!(partial_trace_matrix(&rho, &dims, &[]).is_err());
        assert!(partial_trace_matrix(&rho, &dims, &[2]).is_err());
    }

    #[test]
    fn partial_transpose_bell_spectrum() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = ComplexVector::from_vec(vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        let rho = &psi * psi.adjoint();
        let pt = partial_transpose(&rho, &LocalDims::qubits(2), &[1]).unwrap();
        assert!((min_hermitian_eigenvalue(&pt) + 0.5).abs() < 1e-14);
    }

    #[test]
    fn schmidt_bell_and_product() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let dims = LocalDims::qubits(2);
        let bell = ComplexVector::from_vec(vec![c(h, 0.0), ZERO, ZERO, c(h, 0.0)]);
        let s = schmidt_decompose_amps(&bell, &dims, &[0]).unwrap();
        assert!((s.coeffs[0] - h).abs() < 1e-14 && (s.coeffs[1] - h).abs() < 1e-14);
        // |0⟩⊗|+⟩
        let prod = ComplexVector::from_vec(vec![c(h, 0.0), c(h, 0.0), ZERO, ZERO]);
        let s = schmidt_decompose_amps(&prod, &dims, &[0]).unwrap();
        assert!((s.coeffs[0] - 1.0).abs() < 1e-14 && s.coeffs[1].abs() < 1e-14);
        assert!(schmidt_decompose_amps(&prod, &dims, &[0, 1]).is_err());
        assert!(schmidt_decompose_amps(&prod, &dims, &[]).is_err());
    }

    #[test]
    fn local_dims_digits_round_trip() {
        let dims = LocalDims::new(vec![2, 3, 4]).unwrap();
        for i in 0..dims.total() {
            assert_eq!(dims.index(&dims.digits(i)), i);
        }
        assert!(LocalDims::new(vec![]).is_err());
        assert!(LocalDims::new(vec![64, 65]).is_err());
    }

    #[test]
    fn orthonormalize_keeps_isometries() {
        let a = ComplexMatrix::from_fn(5, 3, |r, k| c((r * 3 + k) as f64 * 0.1 + 1.0, (r as f64 - k as f64) * 0.3));
        let q = orthonormalize(&a);
        assert!((q.adjoint() * &q - ComplexMatrix::identity(3, 3)).norm() < 1e-13);
        let q2 = orthonormalize(&q);
        assert!((q2 - q).norm() < 1e-13);
    }
}
