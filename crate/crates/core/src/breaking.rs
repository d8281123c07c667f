//! Schmidt rank and Schmidt number, and tests for channels that break
//! entanglement down to Schmidt number `r`.
//!
//! Exact separability verdicts exist only where the partial transpose decides
//! them (2⊗2 and 2⊗3). Elsewhere the Schmidt number is bounded from above by
//! exhibiting an ensemble whose members all have Schmidt rank at most `r`;
//! failing to find one proves nothing.

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::LocalChannel;
use crate::error::{usage, Error, Result};
use crate::linalg::{min_hermitian_eigenvalue, partial_transpose, svd, ComplexMatrix, ComplexVector, LocalDims, C64};
use crate::measures::{combine, ensemble_from_mixing, weighted_eigenvectors, EnsembleMember};
use crate::random::{random_isometry, random_pure_state, RandomStream};
use crate::state::{DensityMatrix, PureState, State};
use crate::stiefel::{minimize_rows, DescentOptions, RowObjective};

/// Schmidt coefficients above this count towards the rank.
pub const SCHMIDT_TOL: f64 = 1e-8;
/// Smallest partial-transpose eigenvalue still read as positive.
pub const PPT_TOL: f64 = 1e-10;
/// Random probes must have every Schmidt coefficient above this.
pub const MIN_PROBE_COEFFICIENT: f64 = 1e-4;
const PROBE_REDRAWS: usize = 100;

fn bipartite(dims: &LocalDims) -> Result<(usize, usize)> {
    match dims.as_slice() {
        &[a, b] => Ok((a, b)),
        other => usage(format!("expected a bipartite system, got dims {other:?}")),
    }
}

/// Number of Schmidt coefficients across `left | rest` above `tol`.
pub fn schmidt_rank(psi: &PureState, left: &[usize], tol: f64) -> Result<usize> {
    Ok(psi.schmidt(left)?.coeffs.iter().filter(|&&c| c > tol).count())
}

/// Smallest eigenvalue of the partial transpose over `parties`.
pub fn min_partial_transpose_eigenvalue(rho: &DensityMatrix, parties: &[usize]) -> Result<f64> {
    Ok(min_hermitian_eigenvalue(&partial_transpose(rho.matrix(), rho.dims(), parties)?))
}

/// Positive partial transpose across `parties | rest`.
pub fn is_ppt(rho: &DensityMatrix, parties: &[usize]) -> Result<bool> {
    Ok(min_partial_transpose_eigenvalue(rho, parties)? >= -PPT_TOL)
}

/// Exact separability for 2⊗2, 2⊗3 and 3⊗2, where PPT is equivalent to
/// separability.
pub fn is_separable_small(rho: &DensityMatrix) -> Result<bool> {
    let (a, b) = bipartite(rho.dims())?;
    if !matches!((a, b), (2, 2) | (2, 3) | (3, 2)) {
        return Err(Error::UnsupportedDims {
            dims: rho.dims().as_slice().to_vec(),
            reason: "the partial transpose decides separability only in 2x2 and 2x3; use is_ppt for the necessary condition".into(),
        });
    }
    is_ppt(rho, &[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchmidtMethod {
    ExactPure,
    Ppt2x2,
    Ppt2x3,
    RoofSearch,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchmidtReport {
    /// Schmidt rank of a pure state.
    pub rank: Option<usize>,
    /// Smallest `r` for which an ensemble of rank-`r` members was found.
    pub number_upper: Option<usize>,
    /// Exact separability verdict where one exists.
    pub separable: Option<bool>,
    /// Descending Schmidt coefficients: of the state itself when pure, of the
    /// worst member of the certifying ensemble otherwise.
    pub coefficients: Vec<f64>,
    pub method: SchmidtMethod,
}

#[derive(Debug, Clone, Serialize)]
pub struct SchmidtSearchOptions {
    /// Ensemble size; `None` means `rank²`.
    pub ensemble_size: Option<usize>,
    pub restarts: usize,
    pub max_iterations: usize,
    /// Largest normalized Schmidt coefficient beyond index `r` accepted in a certificate.
    pub tail_tolerance: f64,
    pub seed: u64,
}

impl Default for SchmidtSearchOptions {
    fn default() -> Self {
        Self { ensemble_size: None, restarts: 6, max_iterations: 2000, tail_tolerance: 1e-6, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SchmidtCertificate {
    pub r: usize,
    /// True when every member of `ensemble` has Schmidt rank ≤ `r` up to
    /// `tail_tolerance`, which proves `SN ≤ r`.
    pub certified: bool,
    /// Largest normalized tail coefficient over the ensemble.
    pub max_tail: f64,
    pub ensemble: Vec<EnsembleMember>,
    pub restart_values: Vec<f64>,
}

/// `Σ_{k ≥ r} σ_k²` of the coefficient matrix of `W·row`.
struct TailObjective<'a> {
    w: &'a ComplexMatrix,
    shape: (usize, usize),
    r: usize,
}

impl TailObjective<'_> {
    fn coefficients(&self, row: &[C64]) -> ComplexMatrix {
        let mut psi = vec![C64::new(0.0, 0.0); self.w.nrows()];
        combine(self.w, row, &mut psi);
        ComplexMatrix::from_row_slice(self.shape.0, self.shape.1, &psi)
    }
}

impl RowObjective for TailObjective<'_> {
    fn value(&self, row: &[C64]) -> f64 {
        let s = crate::linalg::singular_values(&self.coefficients(row));
        s.iter().skip(self.r).map(|x| x * x).sum()
    }

    fn gradient(&self, row: &[C64], out: &mut [C64]) {
        // d/dC̄ of ‖C − C_r‖² is C − C_r
        let c = self.coefficients(row);
        let s = svd(&c);
        let mut tail = c.clone();
        for k in 0..self.r.min(s.singular_values.len()) {
            tail -= (s.u.column(k) * s.v_t.row(k)).scale(s.singular_values[k]);
        }
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = (0..self.w.nrows()).map(|k| self.w[(k, j)].conj() * tail[(k / self.shape.1, k % self.shape.1)]).sum::<C64>() * 2.0;
        }
    }
}

fn max_tail(ensemble: &[EnsembleMember], r: usize) -> f64 {
    ensemble
        .iter()
        .map(|m| m.state.schmidt(&[0]).map(|s| s.coeffs.get(r).copied().unwrap_or(0.0)).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Searches for an ensemble of `rho` whose members all have Schmidt rank at
/// most `r`. A `certified` result proves `SN(ρ) ≤ r`; an uncertified one
/// only means none was found.
pub fn schmidt_number_upper(rho: &DensityMatrix, r: usize, opts: &SchmidtSearchOptions) -> Result<SchmidtCertificate> {
    let shape = bipartite(rho.dims())?;
    if r == 0 {
        return usage("Schmidt number bound needs r ≥ 1");
    }
    if opts.restarts == 0 {
        return usage("Schmidt number search needs at least one restart");
    }
    let w = weighted_eigenvectors(rho);
    let rank = w.ncols();
    let m = opts.ensemble_size.unwrap_or(rank * rank).max(rank);
    let h = TailObjective { w: &w, shape, r };

    let finish = |ensemble: Vec<EnsembleMember>, restart_values: Vec<f64>| {
        let tail = max_tail(&ensemble, r);
        SchmidtCertificate { r, certified: tail < opts.tail_tolerance, max_tail: tail, ensemble, restart_values }
    };

    if rank == 1 || r >= shape.0.min(shape.1) {
        let v = ComplexMatrix::identity(rank, rank);
        return Ok(finish(ensemble_from_mixing(&w, &v, rho.dims()), vec![]));
    }

    let descent = DescentOptions { max_iterations: opts.max_iterations, gradient_tolerance: 1e-14, value_tolerance: 1e-18 };
    let runs: Vec<_> = (0..opts.restarts)
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomStream::new(opts.seed, k as u64);
            let start = random_isometry(m, rank, &mut rng).expect("m ≥ rank");
            minimize_rows(&h, start, &descent, |_| {})
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
        .expect("at least one restart");
    Ok(finish(ensemble_from_mixing(&w, &runs[best].point, rho.dims()), runs.iter().map(|r| r.value).collect()))
}

/// Schmidt data of a bipartite state by the most exact method available.
pub fn schmidt_report(state: &State, opts: &SchmidtSearchOptions) -> Result<SchmidtReport> {
    let (a, b) = bipartite(state.dims())?;
    match state {
        State::Pure(psi) => {
            let coeffs = psi.schmidt(&[0])?.coeffs;
            let rank = coeffs.iter().filter(|&&c| c > SCHMIDT_TOL).count();
            Ok(SchmidtReport { rank: Some(rank), number_upper: Some(rank), separable: Some(rank == 1), coefficients: coeffs, method: SchmidtMethod::ExactPure })
        }
        State::Mixed(rho) if matches!((a, b), (2, 2) | (2, 3) | (3, 2)) => {
            let separable = is_separable_small(rho)?;
            let method = if a == b { SchmidtMethod::Ppt2x2 } else { SchmidtMethod::Ppt2x3 };
            // every 2⊗d state has Schmidt number at most 2
            Ok(SchmidtReport { rank: None, number_upper: Some(if separable { 1 } else { 2 }), separable: Some(separable), coefficients: vec![], method })
        }
        State::Mixed(rho) => {
            for r in 1..=a.min(b) {
                let cert = schmidt_number_upper(rho, r, opts)?;
                if cert.certified {
                    let worst = cert
                        .ensemble
                        .iter()
                        .map(|m| m.state.schmidt(&[0]).expect("bipartite").coeffs)
                        .max_by(|x, y| x.get(r).unwrap_or(&0.0).total_cmp(y.get(r).unwrap_or(&0.0)))
                        .unwrap_or_default();
                    return Ok(SchmidtReport { rank: None, number_upper: Some(r), separable: (r == 1).then_some(true), coefficients: worst, method: SchmidtMethod::RoofSearch });
                }
            }
            Err(Error::Internal("no Schmidt number bound found, not even the trivial one".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// Output Schmidt number ≤ r (exact, or certified by an ensemble).
    Breaks,
    /// Output Schmidt number > r (exact).
    Intact,
    /// No certificate either way.
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeResult {
    /// `None` for the maximally entangled probe.
    pub index: Option<usize>,
    pub min_schmidt_coefficient: f64,
    pub min_partial_transpose_eigenvalue: f64,
    pub verdict: Verdict,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PebOptions {
    /// Random full-Schmidt-rank probes besides the maximally entangled one.
    pub probes: usize,
    pub seed: u64,
    pub search: SchmidtSearchOptions,
}

impl Default for PebOptions {
    fn default() -> Self {
        Self { probes: 20, seed: 0, search: SchmidtSearchOptions::default() }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PebReport {
    pub dim: usize,
    pub r: usize,
    pub maximal: ProbeResult,
    pub probes: Vec<ProbeResult>,
    /// Probes whose decisive verdict differs from the maximal probe's.
    pub divergent: Vec<usize>,
    pub undetermined: usize,
    /// The maximal probe's verdict.
    pub verdict: Verdict,
}

impl PebReport {
    pub fn agreement(&self) -> bool {
        self.divergent.is_empty()
    }
}

pub fn maximally_entangled(d: usize) -> PureState {
    let dims = LocalDims::new(vec![d, d]).expect("small d");
    let mut amps = ComplexVector::zeros(d * d);
    for i in 0..d {
        amps[i * d + i] = C64::new(1.0 / (d as f64).sqrt(), 0.0);
    }
    PureState::new(amps, dims).expect("normalized")
}

/// Haar state on `d⊗d` whose Schmidt coefficients all exceed
/// [`MIN_PROBE_COEFFICIENT`], redrawn up to 100 times.
pub fn full_rank_probe(d: usize, rng: &mut RandomStream) -> Result<PureState> {
    let dims = LocalDims::new(vec![d, d])?;
    for _ in 0..PROBE_REDRAWS {
        let psi = random_pure_state(&dims, rng);
        if psi.schmidt(&[0])?.coeffs.iter().all(|&c| c > MIN_PROBE_COEFFICIENT) {
            return Ok(psi);
        }
    }
    Err(Error::Internal(format!("no full-Schmidt-rank probe in {PROBE_REDRAWS} draws")))
}

fn judge_output(out: &DensityMatrix, d: usize, r: usize, search: &SchmidtSearchOptions) -> Result<(Verdict, bool, f64)> {
    let lo = min_partial_transpose_eigenvalue(out, &[0])?;
    if r >= d {
        return Ok((Verdict::Breaks, true, lo));
    }
    if r == 1 && lo < -PPT_TOL {
        return Ok((Verdict::Intact, true, lo));
    }
    if r == 1 && d == 2 {
        return Ok((Verdict::Breaks, true, lo));
    }
    let cert = schmidt_number_upper(out, r, search)?;
    Ok((if cert.certified { Verdict::Breaks } else { Verdict::Undetermined }, false, lo))
}

fn run_probe(channel: &LocalChannel, psi: &PureState, index: Option<usize>, r: usize, search: &SchmidtSearchOptions) -> Result<ProbeResult> {
    let d = channel.dim();
    let out = channel.apply_to_first(psi.to_density().matrix(), d);
    let out = DensityMatrix::new_unnormalized(out, psi.dims().clone())?.normalized();
    let (verdict, exact, lo) = judge_output(&out, d, r, search)?;
    let min_coeff = psi.schmidt(&[0])?.coeffs.last().copied().unwrap_or(0.0);
    Ok(ProbeResult { index, min_schmidt_coefficient: min_coeff, min_partial_transpose_eigenvalue: lo, verdict, exact })
}

/// Applies `Φ ⊗ I` to the maximally entangled state and to random
/// full-Schmidt-rank probes and reports whether each output has Schmidt
/// number ≤ `r`. A channel breaks entanglement down to `r` for all inputs
/// iff it does so for any full-Schmidt-rank input, so all decisive verdicts
/// should agree; disagreements are listed in `divergent`.
pub fn r_peb_test(channel: &LocalChannel, r: usize, opts: &PebOptions) -> Result<PebReport> {
    if r == 0 {
        return usage("r must be at least 1");
    }
    let d = channel.dim();
    let maximal = run_probe(channel, &maximally_entangled(d), None, r, &opts.search)?;
    let probes = (0..opts.probes)
        .into_par_iter()
        .map(|k| {
            let mut rng = RandomStream::new(opts.seed, k as u64);
            let psi = full_rank_probe(d, &mut rng)?;
            run_probe(channel, &psi, Some(k), r, &opts.search)
        })
        .collect::<Result<Vec<_>>>()?;
    let decisive = |v: Verdict| v != Verdict::Undetermined;
    let divergent = probes
        .iter()
        .filter(|p| decisive(p.verdict) && decisive(maximal.verdict) && p.verdict != maximal.verdict)
        .map(|p| p.index.expect("random probe"))
        .collect();
    let undetermined = probes.iter().filter(|p| !decisive(p.verdict)).count() + usize::from(!decisive(maximal.verdict));
    Ok(PebReport { dim: d, r, verdict: maximal.verdict, maximal, probes, divergent, undetermined })
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanOptions {
    pub lo: f64,
    pub hi: f64,
    /// Grid points including both ends.
    pub points: usize,
    /// Width of the final bisection bracket.
    pub tolerance: f64,
    pub peb: PebOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { lo: 0.0, hi: 1.0, points: 21, tolerance: 1e-3, peb: PebOptions::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdStatus {
    Found,
    /// Breaking sets in at an end of the scanned range.
    AtBoundary,
    /// No scanned parameter breaks entanglement.
    NeverBreaking,
}

#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    pub parameter: f64,
    pub verdict: Verdict,
    pub agreement: bool,
    pub undetermined: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub status: ThresholdStatus,
    pub threshold: Option<f64>,
    /// Final `(intact, breaking)` bracket.
    pub bracket: Option<(f64, f64)>,
    pub grid: Vec<GridPoint>,
    pub bisection_steps: usize,
    /// All grid points had probe agreement.
    pub probe_agreement: bool,
}

/// Scans a one-parameter channel family on a grid (with the full probe set
/// at every point), checks that breaking is monotone in the parameter, and
/// bisects the first intact-to-breaking bracket using the maximally
/// entangled probe.
pub fn eb_threshold_scan<F>(family: F, r: usize, opts: &ScanOptions) -> Result<ThresholdReport>
where
    F: Fn(f64) -> Result<LocalChannel>,
{
    if opts.points < 2 || !(opts.hi > opts.lo) || !(opts.tolerance > 0.0) {
        return usage("scan needs at least two points, lo < hi and a positive tolerance");
    }
    let step = (opts.hi - opts.lo) / (opts.points - 1) as f64;
    let mut grid = Vec::with_capacity(opts.points);
    for i in 0..opts.points {
        let x = if i + 1 == opts.points { opts.hi } else { opts.lo + step * i as f64 };
        let rep = r_peb_test(&family(x)?, r, &opts.peb)?;
        grid.push(GridPoint { parameter: x, verdict: rep.verdict, agreement: rep.agreement(), undetermined: rep.undetermined });
    }
    let probe_agreement = grid.iter().all(|g| g.agreement);
    let breaks = |g: &GridPoint| g.verdict == Verdict::Breaks;

    let Some(first) = grid.iter().position(breaks) else {
        return Ok(ThresholdReport { status: ThresholdStatus::NeverBreaking, threshold: None, bracket: None, grid, bisection_steps: 0, probe_agreement });
    };
    if let Some(intact) = grid[first..].iter().find(|g| !breaks(g)) {
        return Err(Error::NonMonotone { breaking: grid[first].parameter, intact: intact.parameter });
    }
    if first == 0 {
        let x = grid[0].parameter;
        return Ok(ThresholdReport { status: ThresholdStatus::AtBoundary, threshold: Some(x), bracket: Some((x, x)), grid, bisection_steps: 0, probe_agreement });
    }

    let maximal_only = PebOptions { probes: 0, ..opts.peb.clone() };
    let (mut a, mut b) = (grid[first - 1].parameter, grid[first].parameter);
    let mut steps = 0;
    while b - a > opts.tolerance {
        let mid = 0.5 * (a + b);
        if r_peb_test(&family(mid)?, r, &maximal_only)?.verdict == Verdict::Breaks {
            b = mid;
        } else {
            a = mid;
        }
        steps += 1;
    }
    let (status, threshold) = if opts.hi - a <= opts.tolerance { (ThresholdStatus::AtBoundary, opts.hi) } else { (ThresholdStatus::Found, 0.5 * (a + b)) };
    Ok(ThresholdReport { status, threshold: Some(threshold), bracket: Some((a, b)), grid, bisection_steps: steps, probe_agreement })
}
