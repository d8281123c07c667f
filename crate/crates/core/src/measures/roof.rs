//! Convex-roof extension of a pure-state measure by ensemble optimization.
//!
//! Every pure-state ensemble of `ρ = Σ_j λ_j |e_j⟩⟨e_j|` with `M` members is
//! `|ψ̃_i⟩ = Σ_j V_ij √λ_j |e_j⟩` for an isometry `V` (`M × r`). The average
//! entanglement `Σ_i E(ψ̃_i)` (with `E` extended homogeneously) is minimized
//! over `V` from several random starts; the best value found is an upper
//! estimate of the roof together with the ensemble that realizes it.
//!
//! `|f|` is not differentiable where a member's invariant vanishes, which is
//! exactly where optimal ensembles of weakly entangled states live. Each
//! restart therefore descends on `(|f|² + ε²)^(1/k) − ε^(2/k)` for a
//! decreasing ladder of `ε`, finishing with the exact objective.

use rayon::prelude::*;
use serde::Serialize;

use super::MeasureKind;
use crate::error::{usage, Result};
use crate::linalg::{hermitian_eigen, ComplexMatrix, ComplexVector, C64};
use crate::random::{random_isometry, RandomStream};
use crate::state::{DensityMatrix, PureState};
use crate::stiefel::{minimize_rows, DescentOptions, DescentOutcome, RowObjective};

/// Relative eigenvalue cutoff used to read off rank(ρ).
pub const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct RoofOptions {
    /// Ensemble size `M`; `None` means `rank²`.
    pub ensemble_size: Option<usize>,
    pub restarts: usize,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub seed: u64,
}

impl Default for RoofOptions {
    fn default() -> Self {
        Self { ensemble_size: None, restarts: 20, max_iterations: 3000, gradient_tolerance: 1e-8, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct EnsembleMember {
    pub weight: f64,
    pub state: PureState,
}

#[derive(Debug, Clone)]
pub struct RoofResult {
    /// `Σ p_i E(ψ_i)` of the returned ensemble.
    pub value: f64,
    pub ensemble: Vec<EnsembleMember>,
    /// Whether the best restart settled before hitting `max_iterations`.
    pub converged: bool,
    pub best_restart: usize,
    /// Exact-objective trace of the best restart's final descent; non-increasing.
    pub history: Vec<f64>,
    /// Final value of every restart, by restart index.
    pub restart_values: Vec<f64>,
}

impl RoofResult {
    /// `Σ p_i |ψ_i⟩⟨ψ_i|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.ensemble.first().map_or(0, |m| m.state.amps().len());
        self.ensemble.iter().fold(ComplexMatrix::zeros(d, d), |acc, m| acc + (m.state.amps() * m.state.amps().adjoint()).scale(m.weight))
    }
}

/// Columns `√λ_j |e_j⟩` for the nonzero part of the spectrum.
pub(crate) fn weighted_eigenvectors(rho: &DensityMatrix) -> ComplexMatrix {
    let (vals, vecs) = hermitian_eigen(rho.matrix());
    let cutoff = RANK_TOL * vals.first().copied().unwrap_or(0.0).max(0.0);
    let rank = vals.iter().filter(|&&v| v > cutoff).count().max(1);
    let mut w = vecs.columns(0, rank).into_owned();
    for k in 0..rank {
        w.column_mut(k).scale_mut(vals[k].max(0.0).sqrt());
    }
    w
}

/// Ensemble members `W·vᵢᵀ` for every row of the mixing isometry.
pub(crate) fn ensemble_from_mixing(w: &ComplexMatrix, v: &ComplexMatrix, dims: &crate::LocalDims) -> Vec<EnsembleMember> {
    let states = w * v.transpose();
    (0..states.ncols())
        .filter_map(|i| {
            let col: ComplexVector = states.column(i).into_owned();
            let p = col.norm_squared();
            (p > 1e-300).then(|| EnsembleMember { weight: p, state: PureState::from_unnormalized(col, dims.clone()).expect("nonzero member").0 })
        })
        .collect()
}

pub(crate) fn combine(w: &ComplexMatrix, row: &[C64], buf: &mut [C64]) {
    for (k, slot) in buf.iter_mut().enumerate() {
        *slot = row.iter().enumerate().map(|(j, &x)| w[(k, j)] * x).sum();
    }
}

/// Smoothing ladder, relative to tr(ρ). The final rung is the exact objective.
const SMOOTHING: [f64; 6] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 0.0];

struct RoofObjective<'a> {
    kind: &'a MeasureKind,
    w: &'a ComplexMatrix,
    eps: f64,
    exponent: f64,
}

impl<'a> RoofObjective<'a> {
    fn new(kind: &'a MeasureKind, w: &'a ComplexMatrix, eps: f64) -> Self {
        Self { kind, w, eps, exponent: 2.0 / kind.degree() as f64 }
    }

    fn member(&self, row: &[C64]) -> Vec<C64> {
        let mut buf = vec![C64::new(0.0, 0.0); self.w.nrows()];
        combine(self.w, row, &mut buf);
        buf
    }
}

impl RowObjective for RoofObjective<'_> {
    fn value(&self, row: &[C64]) -> f64 {
        let psi = self.member(row);
        if self.eps == 0.0 {
            return self.kind.eval_raw(&psi);
        }
        let f = self.kind.invariant(&psi).norm_sqr();
        (f + self.eps * self.eps).powf(self.exponent / 2.0) - self.eps.powf(self.exponent)
    }

    fn gradient(&self, row: &[C64], out: &mut [C64]) {
        let psi = self.member(row);
        let f = self.kind.invariant(&psi);
        let s = f.norm_sqr() + self.eps * self.eps;
        if s == 0.0 {
            out.iter_mut().for_each(|g| *g = C64::new(0.0, 0.0));
            return;
        }
        let mut df = vec![C64::new(0.0, 0.0); psi.len()];
        self.kind.invariant_gradient(&psi, &mut df);
        let scale = f * (self.exponent * s.powf(self.exponent / 2.0 - 1.0));
        for (j, slot) in out.iter_mut().enumerate() {
            // chain rule through ψ̃ = W·row
            let dfj: C64 = (0..psi.len()).map(|k| self.w[(k, j)] * df[k]).sum();
            *slot = scale * dfj.conj();
        }
    }
}

fn descend(kind: &MeasureKind, w: &ComplexMatrix, scale: f64, start: ComplexMatrix, opts: &RoofOptions) -> DescentOutcome {
    let descent = DescentOptions { max_iterations: opts.max_iterations, gradient_tolerance: opts.gradient_tolerance, ..DescentOptions::default() };
    let mut point = start;
    let mut last = None;
    for eps in SMOOTHING {
        let h = RoofObjective::new(kind, w, eps * scale);
        let out = minimize_rows(&h, point, &descent, |_| {});
        point = out.point.clone();
        last = Some(out);
    }
    last.expect("nonempty smoothing ladder")
}

pub fn convex_roof(kind: &MeasureKind, rho: &DensityMatrix, opts: &RoofOptions) -> Result<RoofResult> {
    kind.check_dims(rho.dims())?;
    if opts.restarts == 0 {
        return usage("convex roof needs at least one restart");
    }
    let w = weighted_eigenvectors(rho);
    let rank = w.ncols();
    let m = opts.ensemble_size.unwrap_or(rank * rank);
    if m < rank {
        return usage(format!("ensemble size {m} is below rank(ρ) = {rank}"));
    }

    let exact = RoofObjective::new(kind, &w, 0.0);

    if rank == 1 {
        let v = ComplexMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        let ensemble = ensemble_from_mixing(&w, &v, rho.dims());
        let value = exact.value(&[C64::new(1.0, 0.0)]);
        return Ok(RoofResult { value, ensemble, converged: true, best_restart: 0, history: vec![value], restart_values: vec![value] });
    }

    let scale = rho.trace();
    let runs: Vec<_> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomStream::new(opts.seed, k as u64);
            let start = random_isometry(m, rank, &mut rng).expect("m ≥ rank");
            descend(kind, &w, scale, start, opts)
        })
        .collect();

    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    let run = &runs[best];
    let ensemble = ensemble_from_mixing(&w, &run.point, rho.dims());
    let value = ensemble.iter().map(|e| e.weight * kind.eval_raw(e.state.amps().as_slice())).sum();
    Ok(RoofResult {
        value,
        ensemble,
        converged: run.converged,
        best_restart: best,
        history: run.history.clone(),
        restart_values: runs.iter().map(|r| r.value).collect(),
    })
}
