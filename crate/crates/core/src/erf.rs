//! Entanglement resilience factor: the smallest decay factor over separable
//! Kraus representations of a channel.
//!
//! Every Kraus representation of a channel with operators `K_1..K_M` is
//! `K̃_j = Σ_m U_jm K_m` for an isometry `U` (`J × M`, `J ≥ M`). Only some of
//! these are separable. [`erf_minimize`] searches over `U` with the decay
//! factor of the nearest product operators as objective and a graduated
//! penalty on the distance to product form. A final stage drives the
//! product-form residual alone towards zero before the point is judged.
//!
//! The search covers a subset of representations, so the reported value is
//! an upper bound on the resilience factor, never a certificate of the
//! minimum.

use rayon::prelude::*;

use crate::channels::{apply_kraus, mixed_value, LocalChannel, SeparableChannel, SeparableKrausOperator};
use crate::error::{usage, Error, Result};
use crate::linalg::{determinant, kron, svd, ComplexMatrix, LocalDims, C64, ZERO};
use crate::measures::{MeasureKind, RoofOptions};
use crate::random::{random_density, random_isometry, RandomStream};
use crate::state::State;
use crate::stiefel::{fd_gradient, minimize_rows, DescentOptions, RowObjective};

/// Operators with squared Frobenius norm below this are treated as absent.
pub const NEGLIGIBLE_OPERATOR: f64 = 1e-14;
/// Rows whose normalized overlap with an original operator is this close to
/// one count as a relabelling of that operator.
const PROPORTIONAL_TOL: f64 = 1e-6;
/// Slack on `decay ≤ 1`, checked at every feasible point.
pub const DECAY_BOUND_SLACK: f64 = 1e-8;

/// Index bookkeeping that views a `D × D` operator as a tensor with one
/// `d_i²`-dimensional leg per party.
#[derive(Debug, Clone)]
struct ProductLayout {
    dims: Vec<usize>,
    legs: Vec<usize>,
    /// `map[r·D + c]` is the tensor index of matrix entry `(r, c)`.
    map: Vec<usize>,
    /// Per tensor index, the leg index of every party.
    digits: Vec<Vec<usize>>,
}

impl ProductLayout {
    fn new(dims: &LocalDims) -> Self {
        let d = dims.total();
        let legs: Vec<usize> = dims.as_slice().iter().map(|&x| x * x).collect();
        let mut map = vec![0; d * d];
        for r in 0..d {
            let rd = dims.digits(r);
            for c in 0..d {
                let cd = dims.digits(c);
                let mut e = 0;
                for (i, &di) in dims.as_slice().iter().enumerate() {
                    e = e * legs[i] + rd[i] * di + cd[i];
                }
                map[r * d + c] = e;
            }
        }
        let total: usize = legs.iter().product();
        let digits = (0..total)
            .map(|mut e| {
                let mut out = vec![0; legs.len()];
                for i in (0..legs.len()).rev() {
                    out[i] = e % legs[i];
                    e /= legs[i];
                }
                out
            })
            .collect();
        Self { dims: dims.as_slice().to_vec(), legs, map, digits }
    }

    fn flatten(&self, k: &ComplexMatrix) -> Vec<C64> {
        let d = k.nrows();
        let mut t = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                t[self.map[r * d + c]] = k[(r, c)];
            }
        }
        t
    }

    /// `σ ⊗_i a_i` as a flat tensor.
    fn outer(&self, sigma: f64, vecs: &[Vec<C64>]) -> Vec<C64> {
        self.digits
            .iter()
            .map(|dig| dig.iter().zip(vecs).fold(C64::new(sigma, 0.0), |acc, (&e, v)| acc * v[e]))
            .collect()
    }
}

/// Best rank-one fit `σ ⊗_i a_i` (unit `a_i`) of a tensor, with the squared
/// distance to it.
#[derive(Debug, Clone)]
struct RankOne {
    sigma: f64,
    vecs: Vec<Vec<C64>>,
    residual_sq: f64,
    norm_sq: f64,
}

const ALS_SWEEPS: usize = 200;
const ALS_TOL: f64 = 1e-15;

fn leading_pair(mat: &ComplexMatrix) -> (f64, Vec<C64>, Vec<C64>) {
    let s = svd(mat);
    let sigma = s.singular_values[0];
    let u: Vec<C64> = s.u.column(0).iter().copied().collect();
    let v: Vec<C64> = s.v_t.row(0).iter().copied().collect();
    (sigma, u, v)
}

fn rank_one(t: &[C64], layout: &ProductLayout) -> RankOne {
    let norm_sq: f64 = t.iter().map(|z| z.norm_sqr()).sum();
    let n = layout.legs.len();
    if norm_sq == 0.0 {
        let vecs = layout.legs.iter().map(|&l| {
            let mut v = vec![ZERO; l];
            v[0] = C64::new(1.0, 0.0);
            v
        });
        return RankOne { sigma: 0.0, vecs: vecs.collect(), residual_sq: 0.0, norm_sq };
    }
    if n == 1 {
        let s = norm_sq.sqrt();
        return RankOne { sigma: s, vecs: vec![t.iter().map(|z| z / s).collect()], residual_sq: 0.0, norm_sq };
    }

    // sequential cuts: leg 0 | rest, then leg 1 | rest of the remainder, ...
    let mut vecs = Vec::with_capacity(n);
    let mut rest = t.to_vec();
    let mut sigma = 0.0;
    for i in 0..n - 1 {
        let rows = layout.legs[i];
        let cols = rest.len() / rows;
        let mat = ComplexMatrix::from_row_slice(rows, cols, &rest);
        let (s, u, v) = leading_pair(&mat);
        vecs.push(u);
        sigma = s;
        rest = v;
        if i == n - 2 {
            vecs.push(rest.clone());
        }
    }

    if n > 2 {
        let mut last = sigma;
        for _ in 0..ALS_SWEEPS {
            for i in 0..n {
                let mut acc = vec![ZERO; layout.legs[i]];
                for (e, dig) in layout.digits.iter().enumerate() {
                    let w = dig.iter().enumerate().filter(|&(k, _)| k != i).fold(t[e], |a, (k, &x)| a * vecs[k][x].conj());
                    acc[dig[i]] += w;
                }
                let s = acc.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if s == 0.0 {
                    break;
                }
                sigma = s;
                vecs[i] = acc.into_iter().map(|z| z / s).collect();
            }
            if (sigma - last).abs() <= ALS_TOL * sigma {
                break;
            }
            last = sigma;
        }
    }

    let fit = layout.outer(sigma, &vecs);
    let residual_sq = t.iter().zip(&fit).map(|(a, b)| (a - b).norm_sqr()).sum();
    RankOne { sigma, vecs, residual_sq, norm_sq }
}

impl RankOne {
    /// Local factors carrying `σ^(1/n)` each.
    fn factors(&self, layout: &ProductLayout) -> Vec<ComplexMatrix> {
        let s = self.sigma.powf(1.0 / layout.dims.len() as f64);
        layout
            .dims
            .iter()
            .zip(&self.vecs)
            .map(|(&d, v)| ComplexMatrix::from_row_slice(d, d, v).scale(s))
            .collect()
    }

    /// `Π_i |det A_i|^(2/d_i)` of the fitted factors, smoothed by `eps`.
    fn weight(&self, layout: &ProductLayout, eps: f64) -> f64 {
        let s = self.sigma.powf(1.0 / layout.dims.len() as f64);
        layout
            .dims
            .iter()
            .zip(&self.vecs)
            .map(|(&d, v)| {
                let det = determinant(&ComplexMatrix::from_row_slice(d, d, v)).expect("square").norm() * s.powi(d as i32);
                if eps == 0.0 {
                    det.powf(2.0 / d as f64)
                } else {
                    (det * det + eps * eps).powf(1.0 / d as f64)
                }
            })
            .product()
    }

    fn relative_residual(&self) -> f64 {
        if self.norm_sq == 0.0 { 0.0 } else { (self.residual_sq / self.norm_sq).sqrt() }
    }
}

/// Result of [`nearest_product_operator`].
#[derive(Debug, Clone)]
pub struct NearestProduct {
    pub factors: Vec<ComplexMatrix>,
    /// `‖K − ⊗A_i‖_F / ‖K‖_F` (zero for `K = 0`).
    pub residual: f64,
}

/// Best Frobenius-norm approximation of `K` by a product `A_1 ⊗ ... ⊗ A_n`:
/// the leading operator-Schmidt term for two parties, alternating
/// least squares seeded by successive cuts for more.
pub fn nearest_product_operator(k: &ComplexMatrix, dims: &LocalDims) -> Result<NearestProduct> {
    let d = dims.total();
    if k.shape() != (d, d) {
        return Err(Error::DimensionMismatch { expected: format!("{d}x{d} for {dims}"), got: format!("{}x{}", k.nrows(), k.ncols()) });
    }
    let layout = ProductLayout::new(dims);
    let fit = rank_one(&layout.flatten(k), &layout);
    Ok(NearestProduct { factors: fit.factors(&layout), residual: fit.relative_residual() })
}

#[derive(Debug, Clone)]
pub struct MixingSearchOptions {
    /// `J − M`: extra rows of the mixing isometry.
    pub extra_operators: usize,
    pub restarts: usize,
    /// Iteration cap per stage.
    pub max_iterations: usize,
    /// Penalty weights on the squared product-form residual; strictly increasing.
    pub penalty_schedule: Vec<f64>,
    /// Largest relative residual at which a representation counts as separable.
    pub separability_threshold: f64,
    pub seed: u64,
    /// Start of restart 0; `None` means the given representation itself.
    pub warm_start: Option<ComplexMatrix>,
}

impl Default for MixingSearchOptions {
    fn default() -> Self {
        Self {
            extra_operators: 0,
            restarts: 8,
            max_iterations: 400,
            penalty_schedule: vec![1.0, 10.0, 100.0, 1000.0],
            separability_threshold: 1e-6,
            seed: 0,
            warm_start: None,
        }
    }
}

impl MixingSearchOptions {
    fn check(&self, m: usize) -> Result<()> {
        if self.restarts == 0 {
            return usage("mixing search needs at least one restart");
        }
        if self.penalty_schedule.is_empty() || self.penalty_schedule.windows(2).any(|w| !(w[1] > w[0])) || self.penalty_schedule[0] <= 0.0 {
            return usage("penalty schedule must be positive and strictly increasing");
        }
        if !(self.separability_threshold > 0.0) {
            return usage("separability threshold must be positive");
        }
        if let Some(w) = &self.warm_start {
            if w.shape() != (m + self.extra_operators, m) {
                return usage(format!("warm start is {}x{}, expected {}x{m}", w.nrows(), w.ncols(), m + self.extra_operators));
            }
        }
        Ok(())
    }
}

/// A separable representation reached by the search.
#[derive(Debug, Clone)]
pub struct FeasiblePoint {
    pub restart: usize,
    pub value: f64,
    pub max_residual: f64,
    /// False when every operator is a rescaled original (a relabelling).
    pub nontrivial: bool,
}

/// Both sides of the resilience-factor sandwich for one input.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ErfBounds {
    /// `E(Λ(ρ)) / E(ρ)`.
    pub lower: f64,
    /// `Σ_m p_m E(σ_m) / E(ρ)` of the given representation.
    pub upper: f64,
    pub input_entanglement: f64,
    pub output_entanglement: f64,
    /// True when `E(Λ(ρ))` came from the convex-roof estimator, which makes
    /// `lower` an estimate rather than a bound.
    pub heuristic: bool,
}

#[derive(Debug, Clone)]
pub struct ErfEstimate {
    /// Smallest decay factor over the separable representations found.
    pub value: f64,
    /// Decay factor of the given representation.
    pub start_value: f64,
    /// False when no restart ended at a separable point; `value` is then the
    /// given representation's decay factor.
    pub search_feasible: bool,
    /// Largest relative product-form residual of the reported representation.
    pub separability_residual: f64,
    /// `J × M` isometry producing the reported representation.
    pub mixing: ComplexMatrix,
    /// Product operators of the reported representation.
    pub representation: Vec<SeparableKrausOperator>,
    pub feasible_points: Vec<FeasiblePoint>,
    /// Final exact objective of every restart, by index.
    pub restart_values: Vec<f64>,
    /// Largest `‖Λ̃(ρ) − Λ(ρ)‖_F` seen on probe states along the search.
    pub channel_drift: f64,
    /// Feasible points whose decay factor exceeded `1 + DECAY_BOUND_SLACK`.
    pub bound_violations: usize,
    pub bounds: Option<ErfBounds>,
    pub witness: Option<State>,
}

impl ErfEstimate {
    pub fn nontrivial_alternatives(&self) -> impl Iterator<Item = &FeasiblePoint> {
        self.feasible_points.iter().filter(|p| p.nontrivial)
    }

    /// `lower ≤ value ≤ upper` within `tol`; `None` without bounds.
    pub fn ordering_holds(&self, tol: f64) -> Option<bool> {
        self.bounds.as_ref().map(|b| b.lower <= self.value + tol && self.value <= b.upper + tol)
    }

    /// Attaches [`erf_bounds`] for `state`.
    pub fn with_bounds(mut self, channel: &SeparableChannel, state: State, kind: &MeasureKind, roof: &RoofOptions) -> Result<Self> {
        self.bounds = Some(erf_bounds(channel, &state, kind, roof)?);
        self.witness = Some(state);
        Ok(self)
    }
}

struct MixingObjective<'a> {
    ops: &'a [Vec<C64>],
    layout: &'a ProductLayout,
    penalty: f64,
    eps: f64,
    /// Residual-only stage.
    restore: bool,
}

impl MixingObjective<'_> {
    fn combine(&self, row: &[C64]) -> Vec<C64> {
        let mut t = vec![ZERO; self.ops[0].len()];
        for (u, op) in row.iter().zip(self.ops) {
            if *u != ZERO {
                for (slot, x) in t.iter_mut().zip(op) {
                    *slot += u * x;
                }
            }
        }
        t
    }
}

impl RowObjective for MixingObjective<'_> {
    fn value(&self, row: &[C64]) -> f64 {
        let fit = rank_one(&self.combine(row), self.layout);
        if self.restore {
            return fit.residual_sq;
        }
        fit.weight(self.layout, self.eps) + self.penalty * fit.residual_sq
    }

    fn gradient(&self, row: &[C64], out: &mut [C64]) {
        let step = if self.eps > 0.0 { (0.1 * self.eps).clamp(1e-8, 1e-6) } else { 1e-7 };
        fd_gradient(self, row, out, step);
    }
}

struct RestartOutcome {
    point: ComplexMatrix,
    value: f64,
    max_residual: f64,
    feasible: bool,
    nontrivial: bool,
    drift: f64,
}

struct Search<'a> {
    layout: ProductLayout,
    ops: Vec<Vec<C64>>,
    full: Vec<ComplexMatrix>,
    channel: &'a SeparableChannel,
    opts: &'a MixingSearchOptions,
}

impl Search<'_> {
    fn rows(&self, v: &ComplexMatrix) -> Vec<RankOne> {
        let h = self.objective(0.0, 0.0, false);
        (0..v.nrows())
            .map(|j| {
                let row: Vec<C64> = v.row(j).iter().copied().collect();
                rank_one(&h.combine(&row), &self.layout)
            })
            .collect()
    }

    fn objective(&self, penalty: f64, eps: f64, restore: bool) -> MixingObjective<'_> {
        MixingObjective { ops: &self.ops, layout: &self.layout, penalty, eps, restore }
    }

    fn mixed_kraus(&self, v: &ComplexMatrix) -> Vec<ComplexMatrix> {
        (0..v.nrows())
            .map(|j| self.full.iter().enumerate().fold(ComplexMatrix::zeros(self.full[0].nrows(), self.full[0].ncols()), |acc, (m, k)| acc + k * v[(j, m)]))
            .collect()
    }

    fn is_relabelling(&self, fit: &RankOne, v: &ComplexMatrix, j: usize) -> bool {
        let h = self.objective(0.0, 0.0, false);
        let row: Vec<C64> = v.row(j).iter().copied().collect();
        let t = h.combine(&row);
        self.ops.iter().any(|op| {
            let n2: f64 = op.iter().map(|z| z.norm_sqr()).sum();
            if n2 == 0.0 {
                return false;
            }
            let overlap: C64 = op.iter().zip(&t).map(|(a, b)| a.conj() * b).sum();
            overlap.norm_sqr() >= (1.0 - PROPORTIONAL_TOL) * n2 * fit.norm_sq
        })
    }

    fn judge(&self, v: &ComplexMatrix) -> (f64, f64, bool, bool) {
        let fits = self.rows(v);
        let mut value = 0.0;
        let mut max_residual: f64 = 0.0;
        let mut nontrivial = false;
        for (j, fit) in fits.iter().enumerate() {
            if fit.norm_sq < NEGLIGIBLE_OPERATOR {
                continue;
            }
            value += fit.weight(&self.layout, 0.0);
            max_residual = max_residual.max(fit.relative_residual());
            nontrivial |= !self.is_relabelling(fit, v, j);
        }
        (value, max_residual, max_residual < self.opts.separability_threshold, nontrivial)
    }

    fn run(&self, k: usize) -> RestartOutcome {
        let m = self.full.len();
        let j = m + self.opts.extra_operators;
        let mut rng = RandomStream::new(self.opts.seed, k as u64);
        let start = match (k, &self.opts.warm_start) {
            (0, Some(w)) => w.clone(),
            (0, None) => ComplexMatrix::identity(j, m),
            _ => random_isometry(j, m, &mut rng).expect("j ≥ m"),
        };

        let probe = random_density(self.channel.dims(), self.channel.dims().total(), &mut rng).expect("valid dims");
        let reference = apply_kraus(&self.full, probe.matrix());
        let mut drift: f64 = 0.0;
        let mut track = |v: &ComplexMatrix| {
            let out = apply_kraus(&self.mixed_kraus(v), probe.matrix());
            drift = drift.max((out - &reference).norm());
        };
        track(&start);

        let descent = DescentOptions { max_iterations: self.opts.max_iterations, ..DescentOptions::default() };
        let mut point = start;
        let schedule = &self.opts.penalty_schedule;
        for (s, &w) in schedule.iter().enumerate() {
            let eps = 10f64.powi(-(2 + s as i32));
            point = minimize_rows(&self.objective(w, eps, false), point, &descent, &mut track).point;
        }
        let last = *schedule.last().expect("nonempty schedule");
        point = minimize_rows(&self.objective(last, 0.0, false), point, &descent, &mut track).point;
        let restore = DescentOptions { gradient_tolerance: 1e-14, value_tolerance: 1e-30, ..descent };
        point = minimize_rows(&self.objective(0.0, 0.0, true), point, &restore, &mut track).point;

        let (value, max_residual, feasible, nontrivial) = self.judge(&point);
        RestartOutcome { point, value, max_residual, feasible, nontrivial, drift }
    }
}

/// Searches Kraus mixings of `channel` for a separable representation with a
/// smaller decay factor. Restart 0 starts at the given representation (or
/// `opts.warm_start`); the others start at random isometries.
pub fn erf_minimize(channel: &SeparableChannel, opts: &MixingSearchOptions) -> Result<ErfEstimate> {
    let full = channel.full_kraus();
    let m = full.len();
    opts.check(m)?;
    let layout = ProductLayout::new(channel.dims());
    let ops = full.iter().map(|k| layout.flatten(k)).collect();
    let search = Search { layout, ops, full, channel, opts };

    let start_value = channel.decay_factor();
    let runs: Vec<RestartOutcome> = (0..opts.restarts).into_par_iter().map(|k| search.run(k)).collect();

    let feasible_points: Vec<FeasiblePoint> = runs
        .iter()
        .enumerate()
        .filter(|(_, r)| r.feasible)
        .map(|(k, r)| FeasiblePoint { restart: k, value: r.value, max_residual: r.max_residual, nontrivial: r.nontrivial })
        .collect();
    let bound_violations = feasible_points.iter().filter(|p| p.value > 1.0 + DECAY_BOUND_SLACK).count();
    let channel_drift = runs.iter().map(|r| r.drift).fold(0.0, f64::max);

    // the warm start counts as a candidate when it is itself separable
    let identity = ComplexMatrix::identity(m + opts.extra_operators, m);
    let (start_mixing, start_value_checked, start_residual) = match &opts.warm_start {
        None => (identity, start_value, 0.0),
        Some(w) => {
            let (v, r, feasible, _) = search.judge(w);
            if feasible { (w.clone(), v, r) } else { (identity, start_value, 0.0) }
        }
    };

    let best = feasible_points
        .iter()
        .min_by(|a, b| a.value.total_cmp(&b.value).then(a.restart.cmp(&b.restart)))
        .filter(|p| p.value < start_value_checked);
    let (value, mixing, separability_residual) = match best {
        Some(p) => (p.value, runs[p.restart].point.clone(), p.max_residual),
        None => (start_value_checked, start_mixing, start_residual),
    };

    let representation = search
        .rows(&mixing)
        .into_iter()
        .filter(|f| f.norm_sq >= NEGLIGIBLE_OPERATOR)
        .map(|f| SeparableKrausOperator::new(f.factors(&search.layout)))
        .collect();

    Ok(ErfEstimate {
        value,
        start_value,
        search_feasible: !feasible_points.is_empty(),
        separability_residual,
        mixing,
        representation,
        restart_values: runs.iter().map(|r| r.value).collect(),
        feasible_points,
        channel_drift,
        bound_violations,
        bounds: None,
        witness: None,
    })
}

/// `E(Λ(ρ))/E(ρ)` and `Σ_m p_m E(σ_m)/E(ρ)` for the given representation.
pub fn erf_bounds(channel: &SeparableChannel, state: &State, kind: &MeasureKind, roof: &RoofOptions) -> Result<ErfBounds> {
    let report = crate::channels::verify_evolution(channel, state, kind, roof)?;
    let out = apply_kraus(&channel.full_kraus(), state.density().matrix());
    let (output_entanglement, exact) = mixed_value(kind, &out, channel.dims(), roof)?;
    Ok(ErfBounds {
        lower: output_entanglement / report.input_entanglement,
        upper: report.ratio,
        input_entanglement: report.input_entanglement,
        output_entanglement,
        heuristic: !exact || !report.exact,
    })
}

#[derive(Debug, Clone)]
pub struct TensorBoundReport {
    pub local_values: Vec<f64>,
    pub product: f64,
    pub joint: ErfEstimate,
    /// `joint.value ≤ product + tol`.
    pub holds: bool,
}

/// Tolerance of the tensor-product check.
pub const TENSOR_BOUND_TOL: f64 = 1e-6;

/// Searches each local channel on its own, then the tensor-product channel
/// warm-started from the product of the local optima, and compares.
pub fn tensor_bound_check(locals: &[LocalChannel], opts: &MixingSearchOptions) -> Result<TensorBoundReport> {
    let local_opts = MixingSearchOptions { warm_start: None, extra_operators: 0, ..opts.clone() };
    let mut local_values = Vec::with_capacity(locals.len());
    let mut warm: Option<ComplexMatrix> = None;
    for (i, ch) in locals.iter().enumerate() {
        let single = SeparableChannel::new(
            LocalDims::new(vec![ch.dim()])?,
            ch.ops().iter().map(|k| SeparableKrausOperator::new(vec![k.clone()])).collect(),
        )?;
        let est = erf_minimize(&single, &MixingSearchOptions { seed: opts.seed.wrapping_add(i as u64 + 1), ..local_opts.clone() })?;
        local_values.push(est.value);
        warm = Some(match warm {
            None => est.mixing,
            Some(w) => kron(&w, &est.mixing)?,
        });
    }
    let joint_channel = crate::channels::tensor_channels(locals)?;
    let m = joint_channel.ops().len();
    let warm = warm.ok_or_else(|| Error::Usage("tensor bound needs at least one channel".into()))?;
    let joint_opts = MixingSearchOptions { extra_operators: warm.nrows() - m, warm_start: Some(warm), ..opts.clone() };
    let joint = erf_minimize(&joint_channel, &joint_opts)?;
    let product: f64 = local_values.iter().product();
    Ok(TensorBoundReport { holds: joint.value <= product + TENSOR_BOUND_TOL, local_values, product, joint })
}

/// `max(0, σ_1 − Σ_{k>1} σ_k)` over the singular values of the symmetric
/// matrix `Q_mn` of the quadratic form `det(Σ_m u_m A_m)`, for qubit Kraus
/// operators `A_m`. This is the one-sided resilience factor.
pub fn one_sided_qubit_erf(ops: &[ComplexMatrix]) -> Result<f64> {
    if ops.iter().any(|k| k.shape() != (2, 2)) {
        return usage("closed form needs 2x2 Kraus operators");
    }
    let q = qubit_det_form(ops);
    let s = crate::linalg::singular_values(&q);
    Ok((s[0] - s[1..].iter().sum::<f64>()).max(0.0))
}

/// `det(Σ_m u_m A_m) = uᵀ Q u` for 2×2 operators.
pub(crate) fn qubit_det_form(ops: &[ComplexMatrix]) -> ComplexMatrix {
    let det = |a: &ComplexMatrix| a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let m = ops.len();
    ComplexMatrix::from_fn(m, m, |i, j| {
        if i == j {
            det(&ops[i])
        } else {
            (det(&(&ops[i] + &ops[j])) - det(&ops[i]) - det(&ops[j])) * 0.5
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::families::{amplitude_damping, bit_flip_correlated, depolarizing, local_identity, pauli_x};
    use crate::channels::embed_one_sided;
    use crate::linalg::{frobenius, kron_all, ONE};
    use crate::random::random_haar_unitary;

    fn quick() -> MixingSearchOptions {
        MixingSearchOptions { restarts: 3, max_iterations: 200, ..MixingSearchOptions::default() }
    }

    #[test]
    fn nearest_product_of_product_is_exact() {
        let xx = kron(&pauli_x(), &pauli_x()).unwrap();
        let np = nearest_product_operator(&xx, &LocalDims::qubits(2)).unwrap();
        assert!(np.residual < 1e-12);
        assert!((kron_all(&np.factors).unwrap() - &xx).norm() < 1e-12);

        let mut rng = RandomStream::new(4, 0);
        let fs: Vec<_> = (0..3).map(|_| rng.ginibre(2, 2)).collect();
        let k = kron_all(&fs).unwrap();
        let np = nearest_product_operator(&k, &LocalDims::qubits(3)).unwrap();
        assert!(np.residual < 1e-10, "{}", np.residual);
    }

    #[test]
    fn nearest_product_of_schmidt_rank_two() {
        let id = ComplexMatrix::identity(4, 4);
        let k = (id + kron(&pauli_x(), &pauli_x()).unwrap()).unscale(2f64.sqrt());
        let np = nearest_product_operator(&k, &LocalDims::qubits(2)).unwrap();
        assert!((np.residual - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nearest_product_residual_matches_operator_schmidt_tail() {
        let mut rng = RandomStream::new(5, 0);
        let dims = LocalDims::new(vec![2, 3]).unwrap();
        let k = rng.ginibre(6, 6);
        let np = nearest_product_operator(&k, &dims).unwrap();
        // independent rearrangement: R[(a,b),(c,d)] = K[(a c),(b d)]
        let r = ComplexMatrix::from_fn(4, 9, |ab, cd| k[((ab / 2) * 3 + cd / 3, (ab % 2) * 3 + cd % 3)]);
        let s = crate::linalg::singular_values(&r);
        let tail: f64 = s[1..].iter().map(|x| x * x).sum();
        assert!((np.residual - (tail / frobenius(&k).powi(2)).sqrt()).abs() < 1e-12);
        let approx = kron_all(&np.factors).unwrap();
        assert!(((&k - approx).norm() / k.norm() - np.residual).abs() < 1e-12);
    }

    #[test]
    fn bit_flip_has_no_alternative() {
        let ch = bit_flip_correlated(0.3).unwrap();
        let est = erf_minimize(&ch, &quick()).unwrap();
        assert!((est.value - 1.0).abs() < 1e-12);
        assert_eq!(est.nontrivial_alternatives().count(), 0);
        assert!(est.channel_drift < 1e-8);
        assert_eq!(est.bound_violations, 0);
    }

    #[test]
    fn one_sided_matches_closed_form() {
        let dims = LocalDims::qubits(2);
        for (name, local) in [("damping", amplitude_damping(0.36).unwrap()), ("depolarizing", depolarizing(0.5).unwrap())] {
            let ch = embed_one_sided(local.ops(), 0, &dims).unwrap();
            let est = erf_minimize(&ch, &quick()).unwrap();
            let exact = one_sided_qubit_erf(local.ops()).unwrap();
            assert!((est.value - exact).abs() < 1e-6, "{name}: {} vs {exact}", est.value);
            assert!(est.value <= ch.decay_factor() + 1e-12);
        }
        assert!((one_sided_qubit_erf(amplitude_damping(0.36).unwrap().ops()).unwrap() - 0.8).abs() < 1e-12);
        assert!((one_sided_qubit_erf(depolarizing(0.5).unwrap().ops()).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn bounds_on_bit_flip() {
        let ch = bit_flip_correlated(0.3).unwrap();
        let bell = crate::PureState::new(
            crate::ComplexVector::from_vec(vec![ONE, ZERO, ZERO, ONE]).unscale(2f64.sqrt()),
            LocalDims::qubits(2),
        )
        .unwrap();
        let b = erf_bounds(&ch, &bell.into(), &MeasureKind::Concurrence, &RoofOptions::default()).unwrap();
        assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-12);
        assert!(!b.heuristic);
    }

    #[test]
    fn tensor_bound_with_identity() {
        let locals = [local_identity(2), depolarizing(0.5).unwrap()];
        let rep = tensor_bound_check(&locals, &quick()).unwrap();
        assert!(rep.holds);
        assert!((rep.local_values[0] - 1.0).abs() < 1e-12);
        assert!(rep.joint.value <= rep.local_values[1] + 1e-6);
    }

    #[test]
    fn mixing_preserves_channel() {
        let mut rng = RandomStream::new(6, 0);
        let ch = crate::channels::families::random_separable(&LocalDims::qubits(2), 3, &mut rng).unwrap();
        let u = random_haar_unitary(3, &mut rng);
        let opts = MixingSearchOptions { warm_start: Some(u), ..quick() };
        let est = erf_minimize(&ch, &opts).unwrap();
        assert!(est.channel_drift < 1e-8);
        assert!(est.value <= est.start_value + 1e-12);
    }

    #[test]
    fn rejects_bad_schedule() {
        let ch = bit_flip_correlated(0.3).unwrap();
        let opts = MixingSearchOptions { penalty_schedule: vec![10.0, 10.0], ..quick() };
        assert!(erf_minimize(&ch, &opts).is_err());
    }
}
