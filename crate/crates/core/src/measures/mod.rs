//! SL-invariant entanglement measures.
//!
//! Every measure here is `|f(ψ)|^(2/k)` for a homogeneous polynomial `f` of
//! degree `k` in the amplitudes that is invariant under local determinant-one
//! transformations. Evaluated on an unnormalized vector this is automatically
//! homogeneous of degree one in `|ψ⟩⟨ψ|`, which is what the evolution law
//! needs. Mixed states are handled by [`convex_roof`] or, for two qubits, the
//! closed form [`wootters_concurrence`].

mod roof;

use std::fmt;
use std::sync::Arc;

use crate::error::{usage, Error, Result};
use crate::linalg::{determinant, hermitian_eigen, singular_values, ComplexMatrix, LocalDims, C64, ONE, ZERO};
use crate::state::{DensityMatrix, PureState};

pub use roof::{convex_roof, EnsembleMember, RoofOptions, RoofResult};
pub(crate) use roof::{combine, ensemble_from_mixing, weighted_eigenvectors};

type InvariantFn = dyn Fn(&[C64]) -> C64 + Send + Sync;

/// User-supplied homogeneous SL-invariant polynomial.
#[derive(Clone)]
pub struct PolynomialMeasure {
    name: String,
    degree: u32,
    dims: LocalDims,
    f: Arc<InvariantFn>,
}

impl PolynomialMeasure {
    /// `f` receives the amplitudes in joint-basis order. SL-invariance is the
    /// caller's responsibility; [`MeasureKind::spot_check_invariance`] tests
    /// it numerically.
    pub fn new<F>(name: impl Into<String>, degree: u32, dims: LocalDims, f: F) -> Result<Self>
    where
        F: Fn(&[C64]) -> C64 + Send + Sync + 'static,
    {
        if degree == 0 {
            return usage("polynomial measure needs positive degree");
        }
        Ok(Self { name: name.into(), degree, dims, f: Arc::new(f) })
    }
}

impl fmt::Debug for PolynomialMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolynomialMeasure").field("name", &self.name).field("degree", &self.degree).field("dims", &self.dims).finish()
    }
}

#[derive(Debug, Clone)]
pub enum MeasureKind {
    /// Two-qubit concurrence `|⟨ψ|σ_y⊗σ_y|ψ*⟩|`.
    Concurrence,
    /// `d·|det M|^(2/d)` for the `d × d` coefficient matrix of a `d⊗d` state.
    GConcurrence(usize),
    /// `√(4|Det₂₂₂|)` with Cayley's hyperdeterminant of a three-qubit state.
    SqrtThreeTangle,
    Polynomial(PolynomialMeasure),
}

impl MeasureKind {
    pub fn name(&self) -> String {
        match self {
            MeasureKind::Concurrence => "concurrence".into(),
            MeasureKind::GConcurrence(d) => format!("g_concurrence:{d}"),
            MeasureKind::SqrtThreeTangle => "sqrt_three_tangle".into(),
            MeasureKind::Polynomial(p) => format!("polynomial:{}", p.name),
        }
    }

    /// Parses `concurrence`, `g_concurrence[:d]`, `sqrt_three_tangle`.
    /// A bare `g_concurrence` takes `d` from `dims`.
    pub fn parse(name: &str, dims: &LocalDims) -> Result<Self> {
        let kind = match name {
            "concurrence" => MeasureKind::Concurrence,
            "sqrt_three_tangle" | "three_tangle" => MeasureKind::SqrtThreeTangle,
            "g_concurrence" => MeasureKind::GConcurrence(dims.get(0)),
            other => match other.strip_prefix("g_concurrence:") {
                Some(d) => MeasureKind::GConcurrence(d.parse().map_err(|_| Error::Usage(format!("bad G-concurrence dimension {d:?}")))?),
                None => return usage(format!("unknown measure {other:?}")),
            },
        };
        kind.check_dims(dims)?;
        Ok(kind)
    }

    pub fn expected_dims(&self) -> LocalDims {
        match self {
            MeasureKind::Concurrence => LocalDims::qubits(2),
            MeasureKind::GConcurrence(d) => LocalDims::new(vec![*d, *d]).expect("d*d within dense limit"),
            MeasureKind::SqrtThreeTangle => LocalDims::qubits(3),
            MeasureKind::Polynomial(p) => p.dims.clone(),
        }
    }

    pub fn check_dims(&self, dims: &LocalDims) -> Result<()> {
        if let MeasureKind::GConcurrence(d) = self {
            if *d < 2 {
                return usage("G-concurrence needs d ≥ 2");
            }
        }
        let want = self.expected_dims();
        if &want != dims {
            return Err(Error::DimensionMismatch { expected: format!("{} for {}", want, self.name()), got: dims.to_string() });
        }
        Ok(())
    }

    /// Polynomial degree `k` in the amplitudes.
    pub fn degree(&self) -> u32 {
        match self {
            MeasureKind::Concurrence => 2,
            MeasureKind::GConcurrence(d) => *d as u32,
            MeasureKind::SqrtThreeTangle => 4,
            MeasureKind::Polynomial(p) => p.degree,
        }
    }

    /// The invariant polynomial `f` at `amps`.
    pub fn invariant(&self, amps: &[C64]) -> C64 {
        match self {
            MeasureKind::Concurrence => (amps[1] * amps[2] - amps[0] * amps[3]) * 2.0,
            MeasureKind::GConcurrence(d) => {
                let m = ComplexMatrix::from_row_slice(*d, *d, amps);
                let det = if *d == 2 { m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)] } else { m.lu().determinant() };
                det * (*d as f64).powf(*d as f64 / 2.0)
            }
            MeasureKind::SqrtThreeTangle => hyperdeterminant(amps) * 4.0,
            MeasureKind::Polynomial(p) => (p.f)(amps),
        }
    }

    /// Holomorphic gradient `∂f/∂a_k` of the invariant polynomial.
    pub fn invariant_gradient(&self, amps: &[C64], out: &mut [C64]) {
        match self {
            MeasureKind::Concurrence => {
                out[0] = amps[3] * -2.0;
                out[1] = amps[2] * 2.0;
                out[2] = amps[1] * 2.0;
                out[3] = amps[0] * -2.0;
            }
            _ => {
                // central differences along the real axis; exact up to O(h²) for polynomials
                let h = 1e-5;
                let mut work = amps.to_vec();
                for k in 0..amps.len() {
                    let orig = work[k];
                    work[k] = orig + h;
                    let fp = self.invariant(&work);
                    work[k] = orig - h;
                    let fm = self.invariant(&work);
                    work[k] = orig;
                    out[k] = (fp - fm) / (2.0 * h);
                }
            }
        }
    }

    /// `|f(ψ̃)|^(2/k)`; no dimension checks. Homogeneous of degree one in `|ψ̃⟩⟨ψ̃|`.
    pub(crate) fn eval_raw(&self, amps: &[C64]) -> f64 {
        let v = self.invariant(amps).norm();
        match self.degree() {
            2 => v,
            4 => v.sqrt(),
            k => v.powf(2.0 / k as f64),
        }
    }

    /// Numerical SL-invariance check on random local SL elements: returns the
    /// largest relative deviation of `|f(gψ)|` from `|f(ψ)|` over `trials`.
    pub fn spot_check_invariance(&self, trials: usize, rng: &mut crate::RandomStream) -> Result<f64> {
        let dims = self.expected_dims();
        let mut worst: f64 = 0.0;
        for _ in 0..trials {
            let psi = crate::random::random_pure_state(&dims, rng);
            let g = crate::linalg::kron_all(&crate::random::random_local_sl(&dims, rng)?)?;
            let moved = &g * psi.amps();
            let a = self.invariant(psi.amps().as_slice()).norm();
            let b = self.invariant(moved.as_slice()).norm();
            worst = worst.max((a - b).abs() / a.max(1e-300));
        }
        Ok(worst)
    }
}

/// Cayley's 2×2×2 hyperdeterminant `d₁ − 2d₂ + 4d₃` of `a_ijk = amps[4i+2j+k]`.
pub fn hyperdeterminant(a: &[C64]) -> C64 {
    let (a000, a001, a010, a011) = (a[0], a[1], a[2], a[3]);
    let (a100, a101, a110, a111) = (a[4], a[5], a[6], a[7]);
    let d1 = a000 * a000 * a111 * a111 + a001 * a001 * a110 * a110 + a010 * a010 * a101 * a101 + a100 * a100 * a011 * a011;
    let d2 = a000 * a111 * a011 * a100
        + a000 * a111 * a101 * a010
        + a000 * a111 * a110 * a001
        + a011 * a100 * a101 * a010
        + a011 * a100 * a110 * a001
        + a101 * a010 * a110 * a001;
    let d3 = a000 * a110 * a101 * a011 + a111 * a001 * a010 * a100;
    d1 - d2 * 2.0 + d3 * 4.0
}

/// Measure of a normalized pure state.
pub fn measure_pure(kind: &MeasureKind, psi: &PureState) -> Result<f64> {
    kind.check_dims(psi.dims())?;
    Ok(kind.eval_raw(psi.amps().as_slice()))
}

/// Measure extended homogeneously to an unnormalized vector:
/// `⟨ψ̃|ψ̃⟩ · E(ψ̃/‖ψ̃‖)`.
pub fn measure_unnormalized(kind: &MeasureKind, amps: &crate::ComplexVector, dims: &LocalDims) -> Result<f64> {
    kind.check_dims(dims)?;
    if amps.len() != dims.total() {
        return Err(Error::DimensionMismatch { expected: dims.total().to_string(), got: amps.len().to_string() });
    }
    if amps.norm_squared() == 0.0 {
        return usage("measure of the zero vector");
    }
    Ok(kind.eval_raw(amps.as_slice()))
}

/// `σ_y ⊗ σ_y` in the computational basis (real, symmetric).
pub fn spin_flip() -> ComplexMatrix {
    let m = -ONE;
    ComplexMatrix::from_row_slice(
        4,
        4,
        &[ZERO, ZERO, ZERO, m, ZERO, ZERO, ONE, ZERO, ZERO, ONE, ZERO, ZERO, m, ZERO, ZERO, ZERO],
    )
}

/// Closed-form two-qubit concurrence `max(0, λ₁−λ₂−λ₃−λ₄)`.
///
/// The `λ_i` are the square roots of the eigenvalues of `ρ(σ_y⊗σ_y)ρ*(σ_y⊗σ_y)`,
/// obtained as the singular values of `Wᵀ(σ_y⊗σ_y)W` with `ρ = WW†`. Scales
/// linearly with the trace, so it also serves unnormalized operators.
pub fn wootters_concurrence(rho: &DensityMatrix) -> Result<f64> {
    MeasureKind::Concurrence.check_dims(rho.dims())?;
    Ok(wootters_raw(rho.matrix()))
}

/// Relative eigenvalue cutoff in the Wootters closed form.
const EIGEN_FLOOR: f64 = 1e-14;

pub(crate) fn wootters_raw(rho: &ComplexMatrix) -> f64 {
    let (vals, vecs) = hermitian_eigen(rho);
    // eigenvalues at rounding level would contribute their square roots
    let floor = EIGEN_FLOOR * vals.iter().map(|v| v.abs()).sum::<f64>();
    let mut w = vecs;
    for (k, &v) in vals.iter().enumerate() {
        let s = if v > floor { v.sqrt() } else { 0.0 };
        w.column_mut(k).scale_mut(s);
    }
    let tau = w.transpose() * spin_flip() * &w;
    let s = singular_values(&tau);
    (s[0] - s[1] - s[2] - s[3]).max(0.0)
}

/// G-concurrence through an explicit determinant; used to cross-check the
/// generic polynomial path.
pub fn g_concurrence_direct(psi: &PureState) -> Result<f64> {
    let d = psi.dims().get(0);
    MeasureKind::GConcurrence(d).check_dims(psi.dims())?;
    let m = ComplexMatrix::from_row_slice(d, d, psi.amps().as_slice());
    Ok(d as f64 * determinant(&m)?.norm().powf(2.0 / d as f64))
}
