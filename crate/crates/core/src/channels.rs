//! Separable CPTP operations and the determinant-product evolution law.
//!
//! A [`SeparableChannel`] stores each Kraus operator as its list of local
//! factors `K_m^(1) ⊗ ... ⊗ K_m^(n)`. For an SL-invariant measure `E` every
//! outcome obeys
//!
//! ```text
//! p_m E(σ_m) = Π_i |det K_m^(i)|^(2/d_i) · E(ρ)
//! ```
//!
//! so the average output entanglement is `decay_factor · E(ρ)` whatever the
//! input and whichever invariant measure is used. [`verify_evolution`]
//! evaluates both sides independently.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{determinant, frobenius, kron_all, ComplexMatrix, LocalDims, C64};
use crate::measures::{convex_roof, wootters_raw, MeasureKind, RoofOptions};
use crate::state::{DensityMatrix, State};

/// Closure residual above which a Kraus list is rejected.
pub const CLOSURE_TOL: f64 = 1e-10;
/// Outcomes with probability at or below this are kept as null outcomes.
pub const NULL_OUTCOME: f64 = 1e-12;
/// Smallest input entanglement accepted by [`verify_evolution`].
pub const MIN_INPUT_ENTANGLEMENT: f64 = 1e-8;

/// `Π_i |det K^(i)|^(2/d_i)` over one operator's local factors.
pub fn determinant_weight(factors: &[ComplexMatrix]) -> f64 {
    factors
        .iter()
        .map(|f| {
            let d = f.nrows() as f64;
            determinant(f).expect("factors are square").norm().powf(2.0 / d)
        })
        .product()
}

/// `Σ_m K_m ρ K_m†` for an arbitrary Kraus list.
pub fn apply_kraus(ops: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    let d = rho.nrows();
    ops.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k * rho * k.adjoint())
}

/// `‖Σ_m K_m†K_m − I‖_F`.
pub fn closure_residual(ops: &[ComplexMatrix]) -> f64 {
    let Some(first) = ops.first() else { return f64::INFINITY };
    let d = first.ncols();
    let sum = ops.iter().fold(ComplexMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
    frobenius(&(sum - ComplexMatrix::identity(d, d)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableKrausOperator {
    pub factors: Vec<ComplexMatrix>,
    pub label: Option<String>,
}

impl SeparableKrausOperator {
    pub fn new(factors: Vec<ComplexMatrix>) -> Self {
        Self { factors, label: None }
    }

    pub fn labeled(factors: Vec<ComplexMatrix>, label: impl Into<String>) -> Self {
        Self { factors, label: Some(label.into()) }
    }

    /// The operator on the joint space.
    pub fn full(&self) -> ComplexMatrix {
        kron_all(&self.factors).expect("validated against dense limit")
    }

    /// `Π_i |det K^(i)|^(2/d_i)`.
    pub fn determinant_weight(&self) -> f64 {
        determinant_weight(&self.factors)
    }
}

/// Kraus list of a single-party channel on dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalChannel {
    dim: usize,
    ops: Vec<ComplexMatrix>,
}

impl LocalChannel {
    pub fn new(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = ops.first().map(|k| k.nrows()).ok_or_else(|| Error::Structural("local channel has no Kraus operators".into()))?;
        if let Some((i, k)) = ops.iter().enumerate().find(|(_, k)| k.shape() != (dim, dim)) {
            return Err(Error::Structural(format!("local Kraus operator {i} is {}x{}, expected {dim}x{dim}", k.nrows(), k.ncols())));
        }
        let res = closure_residual(&ops);
        if !(res < CLOSURE_TOL) {
            return Err(Error::Structural(format!("local Kraus operators do not close: residual {res:e}")));
        }
        Ok(Self { dim, ops })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ops(&self) -> &[ComplexMatrix] {
        &self.ops
    }

    pub fn closure_residual(&self) -> f64 {
        closure_residual(&self.ops)
    }

    /// `Σ_m |det K_m|^(2/d)` of this representation.
    pub fn decay_factor(&self) -> f64 {
        self.ops.iter().map(|k| determinant_weight(std::slice::from_ref(k))).sum()
    }

    /// Acts on the first tensor factor of a `d·d'` operator with `dims = (d, d')`.
    pub fn apply_to_first(&self, rho: &ComplexMatrix, other_dim: usize) -> ComplexMatrix {
        let id = ComplexMatrix::identity(other_dim, other_dim);
        let ops: Vec<_> = self.ops.iter().map(|k| k.kronecker(&id)).collect();
        apply_kraus(&ops, rho)
    }
}

/// Closure and shape diagnostics of a separable Kraus list.
#[derive(Debug, Clone, Serialize)]
pub struct ChannelDiagnostics {
    pub closure_residual: f64,
    pub operator_count: usize,
    pub accepted: bool,
}

/// Checks factor counts and shapes (hard errors) and computes the closure
/// residual; `accepted` iff the residual is below [`CLOSURE_TOL`].
pub fn validate(dims: &LocalDims, ops: &[SeparableKrausOperator]) -> Result<ChannelDiagnostics> {
    if ops.is_empty() {
        return Err(Error::Structural("channel has no Kraus operators".into()));
    }
    for (m, op) in ops.iter().enumerate() {
        if op.factors.len() != dims.parties() {
            return Err(Error::Structural(format!("operator {m}{} has {} factors for {} parties", label_suffix(op), op.factors.len(), dims.parties())));
        }
        for (i, (f, &d)) in op.factors.iter().zip(dims.as_slice()).enumerate() {
            if f.shape() != (d, d) {
                return Err(Error::Structural(format!(
                    "operator {m}{} factor {i} is {}x{}, expected {d}x{d}",
                    label_suffix(op),
                    f.nrows(),
                    f.ncols()
                )));
            }
            if !crate::linalg::all_finite(f) {
                return Err(Error::Structural(format!("operator {m}{} factor {i} has non-finite entries", label_suffix(op))));
            }
        }
    }
    let full: Vec<_> = ops.iter().map(|o| o.full()).collect();
    let closure_residual = closure_residual(&full);
    Ok(ChannelDiagnostics { closure_residual, operator_count: ops.len(), accepted: closure_residual < CLOSURE_TOL })
}

fn label_suffix(op: &SeparableKrausOperator) -> String {
    op.label.as_ref().map(|l| format!(" ({l})")).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableChannel {
    dims: LocalDims,
    ops: Vec<SeparableKrausOperator>,
}

impl SeparableChannel {
    pub fn new(dims: LocalDims, ops: Vec<SeparableKrausOperator>) -> Result<Self> {
        let diag = validate(&dims, &ops)?;
        if !diag.accepted {
            return Err(Error::Structural(format!("Kraus operators do not close: residual {:e}", diag.closure_residual)));
        }
        Ok(Self { dims, ops })
    }

    pub fn dims(&self) -> &LocalDims {
        &self.dims
    }

    pub fn ops(&self) -> &[SeparableKrausOperator] {
        &self.ops
    }

    pub fn diagnostics(&self) -> ChannelDiagnostics {
        validate(&self.dims, &self.ops).expect("validated at construction")
    }

    pub fn full_kraus(&self) -> Vec<ComplexMatrix> {
        self.ops.iter().map(|o| o.full()).collect()
    }

    fn check_state_dims(&self, dims: &LocalDims) -> Result<()> {
        if dims != &self.dims {
            return Err(Error::DimensionMismatch { expected: self.dims.to_string(), got: dims.to_string() });
        }
        Ok(())
    }

    /// `Λ(ρ) = Σ_m K_m ρ K_m†`.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        self.check_state_dims(rho.dims())?;
        let out = apply_kraus(&self.full_kraus(), rho.matrix());
        Ok(DensityMatrix::from_parts_unchecked(out, self.dims.clone()))
    }

    /// Post-measurement ensemble `p_m σ_m = K_m ρ K_m†`.
    pub fn outcomes(&self, rho: &DensityMatrix) -> Result<OutcomeEnsemble> {
        self.check_state_dims(rho.dims())?;
        let outcomes = self
            .ops
            .iter()
            .map(|op| {
                let k = op.full();
                let unnorm = &k * rho.matrix() * k.adjoint();
                let p = crate::linalg::trace(&unnorm).re;
                let state = (p > NULL_OUTCOME).then(|| DensityMatrix::from_parts_unchecked(unnorm.unscale(p), self.dims.clone()));
                Outcome { probability: p, state, label: op.label.clone() }
            })
            .collect();
        Ok(OutcomeEnsemble { outcomes })
    }

    /// `Σ_m Π_i |det K_m^(i)|^(2/d_i)` of this representation.
    pub fn decay_factor(&self) -> f64 {
        self.ops.iter().map(|o| o.determinant_weight()).sum()
    }

    /// True iff every local factor satisfies `K†K = cI` with `c > tol`.
    pub fn is_random_unitary(&self, tol: f64) -> bool {
        self.ops.iter().flat_map(|o| &o.factors).all(|k| {
            let kk = k.adjoint() * k;
            let d = kk.nrows();
            let c = crate::linalg::trace(&kk).re / d as f64;
            c > tol && frobenius(&(kk - ComplexMatrix::identity(d, d).scale(c))) <= tol * c.max(1.0)
        })
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub probability: f64,
    /// `None` for null outcomes (`p ≤ NULL_OUTCOME`).
    pub state: Option<DensityMatrix>,
    pub label: Option<String>,
}

#[derive(Debug, Clone)]
pub struct OutcomeEnsemble {
    pub outcomes: Vec<Outcome>,
}

impl OutcomeEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }
}

/// Both sides of the evolution law for one (channel, state, measure) triple.
#[derive(Debug, Clone, Serialize)]
pub struct EvolutionReport {
    pub measure: String,
    pub decay: f64,
    pub input_entanglement: f64,
    /// `Σ_m p_m E(σ_m)`.
    pub average_output: f64,
    /// `average_output / input_entanglement`.
    pub ratio: f64,
    /// `|p_m E(σ_m) − Π_i|det K_m^(i)|^(2/d_i) E(ρ)|` per outcome.
    pub outcome_residuals: Vec<f64>,
    /// `|Σ_m p_m E(σ_m) − decay·E(ρ)|`.
    pub aggregate_residual: f64,
    /// Indices of outcomes with a singular local factor, and the largest
    /// `p_m E(σ_m)` seen among them (zero in exact arithmetic).
    pub zero_determinant_outcomes: Vec<usize>,
    pub zero_determinant_max: f64,
    /// `E(Λ(ρ))` where an exact mixed-state evaluation exists.
    pub output_entanglement: Option<f64>,
    /// False when a mixed-state value came from the convex-roof estimator.
    pub exact: bool,
}

impl EvolutionReport {
    pub fn max_outcome_residual(&self) -> f64 {
        self.outcome_residuals.iter().copied().fold(0.0, f64::max)
    }
}

/// Mixed-state value: Wootters closed form for concurrence, roof estimate
/// otherwise. Works on unnormalized operators.
pub(crate) fn mixed_value(kind: &MeasureKind, mat: &ComplexMatrix, dims: &LocalDims, opts: &RoofOptions) -> Result<(f64, bool)> {
    if matches!(kind, MeasureKind::Concurrence) || matches!(kind, MeasureKind::GConcurrence(2)) {
        return Ok((wootters_raw(mat), true));
    }
    let t = crate::linalg::trace(mat).re;
    if t <= 0.0 {
        return Ok((0.0, true));
    }
    let rho = DensityMatrix::from_parts_unchecked(mat.unscale(t), dims.clone());
    Ok((t * convex_roof(kind, &rho, opts)?.value, false))
}

/// Evaluates `p_m E(σ_m)` per outcome and compares with the determinant
/// weights times `E(ρ)`. Pure inputs are exact for every measure; mixed
/// inputs are exact for concurrence and flagged otherwise.
pub fn verify_evolution(channel: &SeparableChannel, state: &State, kind: &MeasureKind, opts: &RoofOptions) -> Result<EvolutionReport> {
    channel.check_state_dims(state.dims())?;
    kind.check_dims(state.dims())?;
    let dims = channel.dims();
    let mut exact = true;

    let input_entanglement = match state {
        State::Pure(psi) => kind.eval_raw(psi.amps().as_slice()),
        State::Mixed(rho) => {
            let (v, ex) = mixed_value(kind, rho.matrix(), dims, opts)?;
            exact &= ex;
            v
        }
    };
    if !(input_entanglement > MIN_INPUT_ENTANGLEMENT) {
        return Err(Error::Precondition(format!(
            "input entanglement {input_entanglement:e} is not above {MIN_INPUT_ENTANGLEMENT:e}; the evolution identity needs an entangled input"
        )));
    }

    let mut outcome_residuals = Vec::with_capacity(channel.ops.len());
    let mut zero_det = Vec::new();
    let mut zero_det_max: f64 = 0.0;
    let mut average_output = 0.0;
    for (m, op) in channel.ops.iter().enumerate() {
        let k = op.full();
        let weighted = match state {
            State::Pure(psi) => kind.eval_raw((&k * psi.amps()).as_slice()),
            State::Mixed(rho) => {
                let (v, ex) = mixed_value(kind, &(&k * rho.matrix() * k.adjoint()), dims, opts)?;
                exact &= ex;
                v
            }
        };
        let w = op.determinant_weight();
        if op.factors.iter().any(|f| determinant(f).map(|d| d.norm() == 0.0).unwrap_or(false)) || w == 0.0 {
            zero_det.push(m);
            zero_det_max = zero_det_max.max(weighted);
        }
        average_output += weighted;
        outcome_residuals.push((weighted - w * input_entanglement).abs());
    }
    let decay = channel.decay_factor();

    let output_entanglement = if matches!(kind, MeasureKind::Concurrence) {
        let out = apply_kraus(&channel.full_kraus(), &state.density().matrix().clone());
        Some(wootters_raw(&out))
    } else {
        None
    };

    Ok(EvolutionReport {
        measure: kind.name(),
        decay,
        input_entanglement,
        average_output,
        ratio: average_output / input_entanglement,
        aggregate_residual: (average_output - decay * input_entanglement).abs(),
        outcome_residuals,
        zero_determinant_outcomes: zero_det,
        zero_determinant_max: zero_det_max,
        output_entanglement,
        exact,
    })
}

/// `Λ_local` on `party`, identity elsewhere.
pub fn embed_one_sided(local: &[ComplexMatrix], party: usize, dims: &LocalDims) -> Result<SeparableChannel> {
    if party >= dims.parties() {
        return Err(Error::Usage(format!("party {party} out of range for {dims}")));
    }
    let d = dims.get(party);
    if let Some((i, k)) = local.iter().enumerate().find(|(_, k)| k.shape() != (d, d)) {
        return Err(Error::Structural(format!("local operator {i} is {}x{}, party {party} has dimension {d}", k.nrows(), k.ncols())));
    }
    let local = LocalChannel::new(local.to_vec())?;
    let ops = local
        .ops()
        .iter()
        .map(|k| {
            let factors = dims
                .as_slice()
                .iter()
                .enumerate()
                .map(|(i, &di)| if i == party { k.clone() } else { ComplexMatrix::identity(di, di) })
                .collect();
            SeparableKrausOperator::new(factors)
        })
        .collect();
    SeparableChannel::new(dims.clone(), ops)
}

/// `Λ^(1) ⊗ ... ⊗ Λ^(n)` with Kraus operators indexed lexicographically by
/// `(j_1, ..., j_n)`.
pub fn tensor_channels(channels: &[LocalChannel]) -> Result<SeparableChannel> {
    if channels.is_empty() {
        return Err(Error::Usage("tensor product of no channels".into()));
    }
    let dims = LocalDims::new(channels.iter().map(|c| c.dim()).collect())?;
    let mut combos: Vec<Vec<ComplexMatrix>> = vec![vec![]];
    for ch in channels {
        combos = combos.into_iter().flat_map(|prefix| ch.ops().iter().map(move |k| {
            let mut next = prefix.clone();
            next.push(k.clone());
            next
        })).collect();
    }
    SeparableChannel::new(dims, combos.into_iter().map(SeparableKrausOperator::new).collect())
}

/// Named channels and random generators.
pub mod families {
    use super::*;
    use crate::linalg::{ONE, ZERO};
    use crate::random::{random_haar_unitary, random_isometry, RandomStream};

    pub fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    pub fn pauli_y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ZERO, -crate::linalg::I, crate::linalg::I, ZERO])
    }

    pub fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    fn check_prob(name: &str, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Usage(format!("{name} parameter {p} outside [0, 1]")));
        }
        Ok(())
    }

    pub fn identity(dims: &LocalDims) -> SeparableChannel {
        let factors = dims.as_slice().iter().map(|&d| ComplexMatrix::identity(d, d)).collect();
        SeparableChannel::new(dims.clone(), vec![SeparableKrausOperator::labeled(factors, "identity")]).expect("identity closes")
    }

    /// `{√p I⊗I, √(1−p) X⊗X}`.
    pub fn bit_flip_correlated(p: f64) -> Result<SeparableChannel> {
        check_prob("bit-flip", p)?;
        let i2 = ComplexMatrix::identity(2, 2);
        let (a, b) = (p.sqrt(), (1.0 - p).sqrt());
        SeparableChannel::new(
            LocalDims::qubits(2),
            vec![
                SeparableKrausOperator::labeled(vec![i2.scale(a), i2.clone()], "sqrt(p) I⊗I"),
                SeparableKrausOperator::labeled(vec![pauli_x().scale(b), pauli_x()], "sqrt(1-p) X⊗X"),
            ],
        )
    }

    /// `ρ ↦ (1−p)ρ + p I/2` as `{√(1−3p/4) I, √(p/4) X, √(p/4) Y, √(p/4) Z}`.
    pub fn depolarizing(p: f64) -> Result<LocalChannel> {
        check_prob("depolarizing", p)?;
        let i2 = ComplexMatrix::identity(2, 2);
        let s = (p / 4.0).sqrt();
        LocalChannel::new(vec![i2.scale((1.0 - 0.75 * p).sqrt()), pauli_x().scale(s), pauli_y().scale(s), pauli_z().scale(s)])
    }

    /// `{diag(1, √(1−γ)), √γ |0⟩⟨1|}`.
    pub fn amplitude_damping(gamma: f64) -> Result<LocalChannel> {
        check_prob("amplitude-damping", gamma)?;
        let k0 = ComplexMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, C64::new((1.0 - gamma).sqrt(), 0.0)]);
        let k1 = ComplexMatrix::from_row_slice(2, 2, &[ZERO, C64::new(gamma.sqrt(), 0.0), ZERO, ZERO]);
        LocalChannel::new(vec![k0, k1])
    }

    pub fn local_identity(d: usize) -> LocalChannel {
        LocalChannel::new(vec![ComplexMatrix::identity(d, d)]).expect("identity closes")
    }

    /// `count` Kraus operators cut from a Haar isometry `(count·d) × d`.
    pub fn random_local_channel(d: usize, count: usize, rng: &mut RandomStream) -> Result<LocalChannel> {
        LocalChannel::new(random_instrument(d, count, rng)?)
    }

    fn random_instrument(d: usize, count: usize, rng: &mut RandomStream) -> Result<Vec<ComplexMatrix>> {
        if count == 0 {
            return Err(Error::Usage("a channel needs at least one Kraus operator".into()));
        }
        let v = random_isometry(count * d, d, rng)?;
        Ok((0..count).map(|j| v.rows(j * d, d).into_owned()).collect())
    }

    /// Random separable channel with exactly `count` product Kraus operators,
    /// generated as a branching one-way protocol: party 1 applies a random
    /// instrument, party 2 a random instrument chosen by party 1's outcome,
    /// and so on. Closure holds by construction.
    pub fn random_separable(dims: &LocalDims, count: usize, rng: &mut RandomStream) -> Result<SeparableChannel> {
        if count == 0 {
            return Err(Error::Usage("a channel needs at least one Kraus operator".into()));
        }
        let lists = branch(dims.as_slice(), count, rng)?;
        SeparableChannel::new(dims.clone(), lists.into_iter().map(SeparableKrausOperator::new).collect())
    }

    fn branch(dims: &[usize], count: usize, rng: &mut RandomStream) -> Result<Vec<Vec<ComplexMatrix>>> {
        let (&d, rest) = dims.split_first().expect("at least one party");
        if rest.is_empty() {
            return Ok(random_instrument(d, count, rng)?.into_iter().map(|k| vec![k]).collect());
        }
        let outcomes = rng.int_in(1, count);
        let ops = random_instrument(d, outcomes, rng)?;
        let sizes = random_composition(count, outcomes, rng);
        let mut out = Vec::with_capacity(count);
        for (k, size) in ops.into_iter().zip(sizes) {
            for tail in branch(rest, size, rng)? {
                let mut factors = vec![k.clone()];
                factors.extend(tail);
                out.push(factors);
            }
        }
        Ok(out)
    }

    /// Splits `total` into `parts` positive integers.
    fn random_composition(total: usize, parts: usize, rng: &mut RandomStream) -> Vec<usize> {
        let mut cuts: Vec<usize> = (1..total).collect();
        // partial Fisher–Yates for parts−1 distinct cut points
        for i in 0..parts - 1 {
            let j = rng.int_in(i, cuts.len() - 1);
            cuts.swap(i, j);
        }
        let mut chosen: Vec<usize> = cuts[..parts - 1].to_vec();
        chosen.sort_unstable();
        chosen.push(total);
        let mut prev = 0;
        chosen
            .into_iter()
            .map(|c| {
                let s = c - prev;
                prev = c;
                s
            })
            .collect()
    }

    /// `{√p_m U_m^(1) ⊗ ... ⊗ U_m^(n)}` with Haar unitaries and flat-Dirichlet weights.
    pub fn random_unitary_separable(dims: &LocalDims, count: usize, rng: &mut RandomStream) -> Result<SeparableChannel> {
        if count == 0 {
            return Err(Error::Usage("a channel needs at least one Kraus operator".into()));
        }
        let weights = rng.simplex(count);
        let ops = weights
            .into_iter()
            .map(|p| {
                let mut factors: Vec<ComplexMatrix> = dims.as_slice().iter().map(|&d| random_haar_unitary(d, rng)).collect();
                factors[0] *= C64::new(p.sqrt(), 0.0);
                SeparableKrausOperator::new(factors)
            })
            .collect();
        SeparableChannel::new(dims.clone(), ops)
    }

    /// Random `count`-operator channel on `party`, identity elsewhere.
    pub fn random_one_sided(dims: &LocalDims, party: usize, count: usize, rng: &mut RandomStream) -> Result<SeparableChannel> {
        let local = random_local_channel(dims.get(party), count, rng)?;
        embed_one_sided(local.ops(), party, dims)
    }
}

#[cfg(test)]
mod tests {
    use super::families::*;
    use super::*;
    use crate::linalg::{ComplexVector, ONE, ZERO};
    use crate::random::{random_density, random_haar_unitary, RandomStream};
    use crate::state::PureState;

    fn bell() -> PureState {
        PureState::from_unnormalized(ComplexVector::from_vec(vec![ONE, ZERO, ZERO, ONE]), LocalDims::qubits(2)).unwrap().0
    }

    #[test]
    fn validate_reference_channels() {
        let id = identity(&LocalDims::qubits(2));
        assert_eq!(id.diagnostics().closure_residual, 0.0);
        let bf = bit_flip_correlated(0.3).unwrap();
        assert!(bf.diagnostics().closure_residual < 1e-15);
    }

    #[test]
    fn dropping_an_operator_breaks_closure() {
        let mut rng = RandomStream::new(4, 0);
        let ch = random_separable(&LocalDims::qubits(2), 3, &mut rng).unwrap();
        let mut ops = ch.ops().to_vec();
        let removed = ops.pop().unwrap().full();
        let diag = validate(ch.dims(), &ops).unwrap();
        let expected = frobenius(&(removed.adjoint() * &removed));
        assert!((diag.closure_residual - expected).abs() < 1e-12);
        assert!(!diag.accepted);
        assert!(SeparableChannel::new(ch.dims().clone(), ops).is_err());
    }

    #[test]
    fn structural_errors_name_the_operator() {
        let bad = vec![SeparableKrausOperator::labeled(vec![ComplexMatrix::identity(2, 2)], "lonely")];
        let err = validate(&LocalDims::qubits(2), &bad).unwrap_err().to_string();
        assert!(err.contains("lonely"), "{err}");
        let bad = vec![SeparableKrausOperator::new(vec![ComplexMatrix::identity(2, 2), ComplexMatrix::identity(3, 3)])];
        assert!(validate(&LocalDims::qubits(2), &bad).is_err());
    }

    #[test]
    fn apply_and_outcomes() {
        let bf = bit_flip_correlated(0.3).unwrap();
        let rho = bell().to_density();
        let out = bf.apply(&rho).unwrap();
        assert!((out.matrix() - rho.matrix()).norm() < 1e-15);
        let ens = bf.outcomes(&rho).unwrap();
        assert!((ens.outcomes[0].probability - 0.3).abs() < 1e-15);
        assert!((ens.outcomes[1].probability - 0.7).abs() < 1e-15);
        for o in &ens.outcomes {
            assert!((o.state.as_ref().unwrap().matrix() - rho.matrix()).norm() < 1e-14);
        }
        let id = identity(&LocalDims::qubits(2));
        assert!((id.apply(&rho).unwrap().matrix() - rho.matrix()).norm() < 1e-15);
        assert_eq!(id.outcomes(&rho).unwrap().outcomes.len(), 1);
    }

    #[test]
    fn null_outcomes_are_kept() {
        let ch = bit_flip_correlated(1.0).unwrap();
        let ens = ch.outcomes(&bell().to_density()).unwrap();
        assert_eq!(ens.outcomes.len(), 2);
        assert!(ens.outcomes[1].state.is_none());
        assert!((ens.total_probability() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_channels_preserve_trace() {
        let mut rng = RandomStream::new(9, 0);
        for count in 1..=6 {
            let dims = LocalDims::new(vec![2, 3]).unwrap();
            let ch = random_separable(&dims, count, &mut rng).unwrap();
            assert_eq!(ch.ops().len(), count);
            let rho = random_density(&dims, 3, &mut rng).unwrap();
            assert!((ch.apply(&rho).unwrap().trace() - 1.0).abs() < 1e-10);
            assert!((ch.outcomes(&rho).unwrap().total_probability() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn decay_factor_examples() {
        assert!((bit_flip_correlated(0.3).unwrap().decay_factor() - 1.0).abs() < 1e-15);
        let ad = amplitude_damping(0.36).unwrap();
        let ch = embed_one_sided(ad.ops(), 0, &LocalDims::qubits(2)).unwrap();
        assert!((ch.decay_factor() - 0.8).abs() < 1e-15);
        assert!(ch.diagnostics().closure_residual < 1e-12);
        assert!((ch.decay_factor() - ad.decay_factor()).abs() < 1e-15);
        let mut rng = RandomStream::new(1, 1);
        let ru = random_unitary_separable(&LocalDims::new(vec![2, 3]).unwrap(), 4, &mut rng).unwrap();
        assert!((ru.decay_factor() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_unitary_detection() {
        assert!(bit_flip_correlated(0.3).unwrap().is_random_unitary(1e-10));
        assert!(identity(&LocalDims::qubits(2)).is_random_unitary(1e-10));
        let ad = embed_one_sided(amplitude_damping(0.36).unwrap().ops(), 0, &LocalDims::qubits(2)).unwrap();
        assert!(!ad.is_random_unitary(1e-10));
    }

    #[test]
    fn embed_and_tensor() {
        let dims = LocalDims::qubits(2);
        let id = embed_one_sided(&[ComplexMatrix::identity(2, 2)], 1, &dims).unwrap();
        assert_eq!(id.full_kraus(), identity(&dims).full_kraus());
        assert!(embed_one_sided(&[ComplexMatrix::identity(2, 2).scale(0.5)], 0, &dims).is_err());
        assert!(embed_one_sided(&[ComplexMatrix::identity(3, 3)], 0, &dims).is_err());

        let t = tensor_channels(&[local_identity(2), local_identity(2)]).unwrap();
        assert_eq!(t.full_kraus(), identity(&dims).full_kraus());
        let mut rng = RandomStream::new(2, 2);
        let a = random_local_channel(2, 3, &mut rng).unwrap();
        let b = random_local_channel(3, 2, &mut rng).unwrap();
        let t = tensor_channels(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(t.ops().len(), 6);
        assert!((t.decay_factor() - a.decay_factor() * b.decay_factor()).abs() < 1e-12);
    }

    #[test]
    fn evolution_on_bell_through_bit_flip() {
        let rep = verify_evolution(&bit_flip_correlated(0.3).unwrap(), &bell().into(), &MeasureKind::Concurrence, &RoofOptions::default()).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);
        assert!(rep.max_outcome_residual() < 1e-12);
        assert!((rep.output_entanglement.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_needs_entangled_input() {
        let prod = PureState::basis(LocalDims::qubits(2), &[0, 1]).unwrap();
        let err = verify_evolution(&bit_flip_correlated(0.3).unwrap(), &prod.into(), &MeasureKind::Concurrence, &RoofOptions::default());
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn evolution_ghz_one_sided_three_tangle() {
        let dims = LocalDims::qubits(3);
        let mut amps = ComplexVector::zeros(8);
        amps[0] = ONE;
        amps[7] = ONE;
        let ghz = PureState::from_unnormalized(amps, dims.clone()).unwrap().0;
        let mut rng = RandomStream::new(6, 0);
        for party in 0..3 {
            let ch = random_one_sided(&dims, party, 3, &mut rng).unwrap();
            let rep = verify_evolution(&ch, &ghz.clone().into(), &MeasureKind::SqrtThreeTangle, &RoofOptions::default()).unwrap();
            assert!(rep.max_outcome_residual() < 1e-8, "{rep:?}");
        }
    }

    #[test]
    fn representation_mixing_preserves_the_map() {
        let mut rng = RandomStream::new(12, 0);
        let dims = LocalDims::qubits(2);
        let ch = random_separable(&dims, 4, &mut rng).unwrap();
        let u = random_haar_unitary(4, &mut rng);
        let kraus = ch.full_kraus();
        let mixed: Vec<ComplexMatrix> = (0..4)
            .map(|j| (0..4).fold(ComplexMatrix::zeros(4, 4), |acc, m| acc + kraus[m].clone() * u[(j, m)]))
            .collect();
        let rho = random_density(&dims, 4, &mut rng).unwrap();
        let a = apply_kraus(&kraus, rho.matrix());
        let b = apply_kraus(&mixed, rho.matrix());
        assert!((a - b).norm() < 1e-10);
    }
}
