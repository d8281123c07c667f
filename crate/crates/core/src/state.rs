//! Pure states and density operators tagged with their local dimensions.

use crate::error::{usage, Error, Result};
use crate::linalg::{
    all_finite, hermitian_part, hermiticity_defect, kron, min_hermitian_eigenvalue, partial_trace_matrix,
    schmidt_decompose_amps, trace, ComplexMatrix, ComplexVector, LocalDims, SchmidtDecomposition,
};

pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;

/// Normalized state vector on `H_1 ⊗ ... ⊗ H_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: ComplexVector,
    dims: LocalDims,
}

impl PureState {
    pub fn new(amps: ComplexVector, dims: LocalDims) -> Result<Self> {
        check_vector(&amps, &dims)?;
        let n = amps.norm_squared();
        if (n - 1.0).abs() > NORM_TOL {
            return usage(format!("state is not normalized: squared norm {n}"));
        }
        Ok(Self { amps, dims })
    }

    /// Normalizes a nonzero vector, returning the state and the original squared norm.
    pub fn from_unnormalized(amps: ComplexVector, dims: LocalDims) -> Result<(Self, f64)> {
        check_vector(&amps, &dims)?;
        let n = amps.norm_squared();
        if n == 0.0 {
            return usage("cannot normalize the zero vector");
        }
        Ok((Self { amps: amps.unscale(n.sqrt()), dims }, n))
    }

    /// Computational basis state with the given local digits.
    pub fn basis(dims: LocalDims, digits: &[usize]) -> Result<Self> {
        if digits.len() != dims.parties() || digits.iter().zip(dims.as_slice()).any(|(&x, &d)| x >= d) {
            return usage(format!("basis digits {digits:?} do not fit {dims}"));
        }
        let mut amps = ComplexVector::zeros(dims.total());
        amps[dims.index(digits)] = crate::linalg::ONE;
        Ok(Self { amps, dims })
    }

    pub fn amps(&self) -> &ComplexVector {
        &self.amps
    }

    pub fn dims(&self) -> &LocalDims {
        &self.dims
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { mat: &self.amps * self.amps.adjoint(), dims: self.dims.clone() }
    }

    pub fn schmidt(&self, left: &[usize]) -> Result<SchmidtDecomposition> {
        schmidt_decompose_amps(&self.amps, &self.dims, left)
    }
}

fn check_vector(amps: &ComplexVector, dims: &LocalDims) -> Result<()> {
    if amps.len() != dims.total() {
        return Err(Error::DimensionMismatch { expected: format!("{} amplitudes for {dims}", dims.total()), got: amps.len().to_string() });
    }
    if !amps.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return usage("state has non-finite amplitudes");
    }
    Ok(())
}

/// Positive semidefinite operator; unit trace unless built through
/// [`DensityMatrix::new_unnormalized`].
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
    dims: LocalDims,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix, dims: LocalDims) -> Result<Self> {
        let rho = Self::new_unnormalized(mat, dims)?;
        let t = rho.trace();
        if (t - 1.0).abs() > NORM_TOL {
            return usage(format!("density matrix trace is {t}, expected 1"));
        }
        Ok(rho)
    }

    /// Positive operator with any positive trace.
    pub fn new_unnormalized(mat: ComplexMatrix, dims: LocalDims) -> Result<Self> {
        let d = dims.total();
        if mat.shape() != (d, d) {
            return Err(Error::DimensionMismatch { expected: format!("{d}x{d} for {dims}"), got: format!("{}x{}", mat.nrows(), mat.ncols()) });
        }
        if !all_finite(&mat) {
            return usage("density matrix has non-finite entries");
        }
        let defect = hermiticity_defect(&mat);
        if defect > HERMITIAN_TOL {
            return usage(format!("matrix is not Hermitian (defect {defect:e})"));
        }
        let mat = hermitian_part(&mat);
        let lo = min_hermitian_eigenvalue(&mat);
        if lo < -PSD_TOL {
            return usage(format!("matrix is not positive semidefinite (min eigenvalue {lo:e})"));
        }
        let t = trace(&mat).re;
        if t <= 0.0 {
            return usage(format!("trace must be positive, got {t}"));
        }
        Ok(Self { mat, dims })
    }

    /// Hermitizes and divides by the trace. The input must already be
    /// positive semidefinite up to rounding.
    pub fn from_unnormalized_matrix(mat: ComplexMatrix, dims: LocalDims) -> Result<Self> {
        let t = trace(&mat).re;
        if !(t > 0.0) {
            return usage(format!("cannot normalize an operator of trace {t}"));
        }
        Self::new_unnormalized(hermitian_part(&mat).unscale(t), dims)
    }

    pub(crate) fn from_parts_unchecked(mat: ComplexMatrix, dims: LocalDims) -> Self {
        Self { mat: hermitian_part(&mat), dims }
    }

    pub fn maximally_mixed(dims: LocalDims) -> Self {
        let d = dims.total();
        Self { mat: ComplexMatrix::identity(d, d).unscale(d as f64), dims }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn dims(&self) -> &LocalDims {
        &self.dims
    }

    pub fn trace(&self) -> f64 {
        trace(&self.mat).re
    }

    pub fn scaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0) {
            return usage(format!("scale must be positive, got {r}"));
        }
        Ok(Self { mat: self.mat.scale(r), dims: self.dims.clone() })
    }

    pub fn normalized(&self) -> Self {
        Self { mat: self.mat.unscale(self.trace()), dims: self.dims.clone() }
    }

    /// `ρ ⊗ σ` with concatenated local dimensions.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<Self> {
        let mut dims = self.dims.as_slice().to_vec();
        dims.extend_from_slice(other.dims.as_slice());
        Ok(Self { mat: kron(&self.mat, &other.mat)?, dims: LocalDims::new(dims)? })
    }

    /// `λρ + (1-λ)σ`.
    pub fn mix(&self, other: &DensityMatrix, lambda: f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::DimensionMismatch { expected: self.dims.to_string(), got: other.dims.to_string() });
        }
        Ok(Self { mat: self.mat.scale(lambda) + other.mat.scale(1.0 - lambda), dims: self.dims.clone() })
    }

    /// Reduced state on `keep` (zero-based party indices).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let (mat, dims) = partial_trace_matrix(&self.mat, &self.dims, keep)?;
        Ok(Self { mat, dims })
    }

    /// `g ρ g†` without renormalization.
    pub fn conjugate_by(&self, g: &ComplexMatrix) -> Result<Self> {
        if g.shape() != self.mat.shape() {
            return Err(Error::DimensionMismatch { expected: format!("{:?}", self.mat.shape()), got: format!("{:?}", g.shape()) });
        }
        Ok(Self::from_parts_unchecked(g * &self.mat * g.adjoint(), self.dims.clone()))
    }
}

/// Input to the evolution and bound routines.
#[derive(Debug, Clone)]
pub enum State {
    Pure(PureState),
    Mixed(DensityMatrix),
}

impl State {
    pub fn dims(&self) -> &LocalDims {
        match self {
            State::Pure(p) => p.dims(),
            State::Mixed(m) => m.dims(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            State::Pure(p) => p.to_density(),
            State::Mixed(m) => m.clone(),
        }
    }
}

impl From<PureState> for State {
    fn from(p: PureState) -> Self {
        State::Pure(p)
    }
}

impl From<DensityMatrix> for State {
    fn from(m: DensityMatrix) -> Self {
        State::Mixed(m)
    }
}

/// Standard named states.
pub mod named {
    use super::*;
    use crate::linalg::C64;

    fn from_pairs(dims: LocalDims, entries: &[(usize, f64)]) -> PureState {
        let mut amps = ComplexVector::zeros(dims.total());
        for &(i, a) in entries {
            amps[i] = C64::new(a, 0.0);
        }
        PureState::new(amps, dims).expect("normalized by construction")
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        from_pairs(LocalDims::qubits(2), &[(0, s), (3, s)])
    }

    /// `(|0…0⟩ + |1…1⟩)/√2` on `n ≥ 2` qubits.
    pub fn ghz(n: usize) -> Result<PureState> {
        if n < 2 {
            return usage("GHZ state needs at least two qubits");
        }
        let dims = LocalDims::new(vec![2; n])?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Ok(from_pairs(dims.clone(), &[(0, s), (dims.total() - 1, s)]))
    }

    /// Equal superposition of the single-excitation basis states.
    pub fn w_state(n: usize) -> Result<PureState> {
        if n < 2 {
            return usage("W state needs at least two qubits");
        }
        let dims = LocalDims::new(vec![2; n])?;
        let a = 1.0 / (n as f64).sqrt();
        let entries: Vec<_> = (0..n).map(|k| (1usize << k, a)).collect();
        Ok(from_pairs(dims, &entries))
    }

    /// `p |Φ⁺⟩⟨Φ⁺| + (1 − p) I/4`.
    pub fn werner(p: f64) -> Result<DensityMatrix> {
        if !(0.0..=1.0).contains(&p) {
            return usage(format!("Werner parameter {p} outside [0, 1]"));
        }
        bell().to_density().mix(&DensityMatrix::maximally_mixed(LocalDims::qubits(2)), p)
    }
}
