use std::time::Instant;

use rayon::prelude::*;
use serde_json::{json, Map, Value};

use super::inputs::{channel_source, dims_or, local_family, measure, parse_range, state, RandomKind};
use super::output::{record, Check, RunReport, Summary};
use super::{BreakingArgs, CommonArgs, DecayArgs, ErfArgs, ExperimentConfig, RoofArgs, SweepArgs, VerifyArgs};
use crate::breaking::{eb_threshold_scan, r_peb_test, PebOptions, ScanOptions, Verdict};
use crate::channels::{embed_one_sided, families, verify_evolution, LocalChannel, SeparableChannel};
use crate::erf::{erf_minimize, MixingSearchOptions};
use crate::error::{usage, Error, Result};
use crate::linalg::LocalDims;
use crate::measures::{convex_roof, wootters_concurrence, MeasureKind, RoofOptions};
use crate::random::{random_density, random_pure_state, RandomStream};
use crate::state::{named, State};

/// Decay factors above `1 + DECAY_SLACK` violate the determinant bound.
const DECAY_SLACK: f64 = 1e-10;

/// Random inputs with no entanglement are redrawn up to this many times.
const MAX_INPUT_REDRAWS: usize = 1000;

/// Per-trial random stream: child `trial` of the master stream.
fn trial_stream(seed: u64, trial: usize) -> RandomStream {
    RandomStream::new(seed, 0).derive(trial as u64)
}

fn max_of(records: &[Value], key: &str) -> f64 {
    records.iter().filter_map(|r| r.get(key).and_then(Value::as_f64)).fold(0.0, f64::max)
}

fn mean_of(records: &[Value], key: &str) -> f64 {
    let xs: Vec<f64> = records.iter().filter_map(|r| r.get(key).and_then(Value::as_f64)).collect();
    if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 }
}

fn par_trials<F>(trials: usize, f: F) -> Result<Vec<Value>>
where
    F: Fn(usize) -> Result<Value> + Sync + Send,
{
    (0..trials).into_par_iter().map(f).collect()
}

fn check_trials(common: &CommonArgs) -> Result<()> {
    if common.trials == 0 {
        return usage("--trials must be at least 1");
    }
    Ok(())
}

pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    check_trials(config.common())?;
    let start = Instant::now();
    let mut report = match config {
        ExperimentConfig::Verify(a) => cmd_verify(a),
        ExperimentConfig::Decay(a) => cmd_decay(a),
        ExperimentConfig::Erf(a) => cmd_erf(a),
        ExperimentConfig::Roof(a) => cmd_roof(a),
        ExperimentConfig::Breaking(a) => cmd_breaking(a),
        ExperimentConfig::Sweep(a) => cmd_sweep(a),
    }?;
    if config.common().timing {
        report.duration_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(report)
}

fn fixed_state_for(dims: &LocalDims, common: &CommonArgs) -> Result<Option<State>> {
    let s = state(common)?;
    if let Some(s) = &s {
        if s.dims() != dims {
            return Err(Error::DimensionMismatch { expected: dims.to_string(), got: s.dims().to_string() });
        }
    }
    Ok(s)
}

/// Checks the evolution law on every trial. Monotonicity is only checked
/// where `E(Λ(ρ))` is exact.
pub fn cmd_verify(args: &VerifyArgs) -> Result<RunReport> {
    let common = &args.common;
    check_trials(common)?;
    if args.random_channel && common.channel.is_some() {
        return usage("--random-channel and --channel are exclusive");
    }
    let kind = if args.one_sided { RandomKind::OneSided } else { RandomKind::Separable };
    let source = channel_source(common, args.kraus, kind)?;
    let dims = source.dims().clone();
    let measure_kind = measure(common, &dims)?;
    let fixed = fixed_state_for(&dims, common)?;
    let tol = common.tol.unwrap_or(1e-8);

    let records = par_trials(common.trials, |t| {
        let mut rng = trial_stream(common.seed, t);
        let mut rec = record(t, rng.stream_id());
        let channel = source.draw(&mut rng)?;
        let roof = RoofOptions { seed: rng.stream_id(), ..RoofOptions::default() };
        rec.insert("kraus_count".into(), channel.ops().len().into());
        let mut redraws = 0;
        let outcome = loop {
            let input: State = match (&fixed, args.mixed_rank) {
                (Some(s), _) => s.clone(),
                (None, Some(max_rank)) => {
                    let rank = rng.int_in(1, max_rank.max(1));
                    rec.insert("rank".into(), rank.into());
                    random_density(&dims, rank, &mut rng)?.into()
                }
                (None, None) => random_pure_state(&dims, &mut rng).into(),
            };
            match verify_evolution(&channel, &input, &measure_kind, &roof) {
                Err(Error::Precondition(msg)) if fixed.is_none() => {
                    redraws += 1;
                    if redraws >= MAX_INPUT_REDRAWS {
                        break Err(msg);
                    }
                }
                other => break Ok(other?),
            }
        };
        rec.insert("input_redraws".into(), redraws.into());
        match outcome {
            Ok(rep) => {
                rec.insert("skipped".into(), false.into());
                rec.insert("decay".into(), rep.decay.into());
                rec.insert("input_entanglement".into(), rep.input_entanglement.into());
                rec.insert("average_output".into(), rep.average_output.into());
                rec.insert("ratio".into(), rep.ratio.into());
                rec.insert("max_outcome_residual".into(), rep.max_outcome_residual().into());
                rec.insert("aggregate_residual".into(), rep.aggregate_residual.into());
                rec.insert("zero_determinant_max".into(), rep.zero_determinant_max.into());
                rec.insert("output_entanglement".into(), rep.output_entanglement.into());
                rec.insert("exact".into(), rep.exact.into());
            }
            Err(msg) => {
                rec.insert("skipped".into(), true.into());
                rec.insert("reason".into(), msg.into());
            }
        }
        Ok(Value::Object(rec))
    })?;

    let is = |r: &Value, k: &str| r.get(k).and_then(Value::as_bool).unwrap_or(false);
    let checked: Vec<Value> = records.iter().filter(|r| !is(r, "skipped") && is(r, "exact")).cloned().collect();
    let monotone_gap = checked
        .iter()
        .filter_map(|r| {
            let out = r.get("output_entanglement")?.as_f64()?;
            let avg = r["average_output"].as_f64()?;
            let inp = r["input_entanglement"].as_f64()?;
            Some((out - avg).max(avg - inp))
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let mut summary = Summary::default();
    summary.checks.push(Check::at_most("max_outcome_residual", max_of(&checked, "max_outcome_residual"), tol));
    summary.checks.push(Check::at_most("max_aggregate_residual", max_of(&checked, "aggregate_residual"), tol));
    summary.checks.push(Check::at_most("decay_bound", max_of(&checked, "decay"), 1.0 + DECAY_SLACK));
    summary.checks.push(Check::at_most("zero_determinant_outcomes", max_of(&checked, "zero_determinant_max"), 1e-9));
    if monotone_gap.is_finite() {
        summary.checks.push(Check::at_most("monotone_under_channel", monotone_gap, 1e-8));
    }
    summary.stats.insert("trials".into(), records.len() as f64);
    summary.stats.insert("checked".into(), checked.len() as f64);
    summary.stats.insert("skipped".into(), records.iter().filter(|r| is(r, "skipped")).count() as f64);
    summary.stats.insert("estimate_only".into(), records.iter().filter(|r| !is(r, "skipped") && !is(r, "exact")).count() as f64);
    summary.stats.insert("mean_ratio".into(), mean_of(&checked, "ratio"));
    summary.stats.insert("max_outcome_residual".into(), max_of(&checked, "max_outcome_residual"));
    summary.stats.insert("max_aggregate_residual".into(), max_of(&checked, "aggregate_residual"));
    Ok(RunReport::new(&ExperimentConfig::Verify(args.clone()), records, summary))
}

/// Decay factor of each drawn channel, with the random-unitary test.
pub fn cmd_decay(args: &DecayArgs) -> Result<RunReport> {
    let common = &args.common;
    check_trials(common)?;
    let source = channel_source(common, args.kraus, RandomKind::Separable)?;
    let records = par_trials(common.trials, |t| {
        let mut rng = trial_stream(common.seed, t);
        let mut rec = record(t, rng.stream_id());
        let ch = source.draw(&mut rng)?;
        let decay = ch.decay_factor();
        let unitary = ch.is_random_unitary(1e-10);
        rec.insert("decay".into(), decay.into());
        rec.insert("closure_residual".into(), ch.diagnostics().closure_residual.into());
        rec.insert("kraus_count".into(), ch.ops().len().into());
        rec.insert("random_unitary".into(), unitary.into());
        rec.insert("unit_decay".into(), ((decay - 1.0).abs() <= DECAY_SLACK).into());
        rec.insert("weights".into(), json!(ch.ops().iter().map(|o| o.determinant_weight()).collect::<Vec<_>>()));
        Ok(Value::Object(rec))
    })?;
    let consistent = records.iter().all(|r| r["random_unitary"] == r["unit_decay"]);
    let mut summary = Summary::default();
    summary.checks.push(Check::at_most("decay_bound", max_of(&records, "decay"), 1.0 + DECAY_SLACK));
    summary.checks.push(Check::holds("unit_decay_iff_random_unitary", consistent));
    summary.stats.insert("max_decay".into(), max_of(&records, "decay"));
    summary.stats.insert("mean_decay".into(), mean_of(&records, "decay"));
    Ok(RunReport::new(&ExperimentConfig::Decay(args.clone()), records, summary))
}

/// Resilience-factor search, with bounds when a state is given.
pub fn cmd_erf(args: &ErfArgs) -> Result<RunReport> {
    let common = &args.common;
    check_trials(common)?;
    let source = channel_source(common, args.kraus, RandomKind::Separable)?;
    let dims = source.dims().clone();
    let fixed = fixed_state_for(&dims, common)?;
    let kind = match (&fixed, &common.measure) {
        (None, None) => None,
        _ => Some(measure(common, &dims)?),
    };

    let records = par_trials(common.trials, |t| {
        let mut rng = trial_stream(common.seed, t);
        let mut rec = record(t, rng.stream_id());
        let ch = source.draw(&mut rng)?;
        let opts = MixingSearchOptions {
            restarts: args.restarts,
            extra_operators: args.extra,
            max_iterations: args.max_iterations,
            seed: rng.stream_id(),
            ..MixingSearchOptions::default()
        };
        let mut est = erf_minimize(&ch, &opts)?;
        if let Some(kind) = &kind {
            let input = match &fixed {
                Some(s) => s.clone(),
                None => random_pure_state(&dims, &mut rng).into(),
            };
            est = est.with_bounds(&ch, input, kind, &RoofOptions { seed: rng.stream_id(), ..RoofOptions::default() })?;
        }
        rec.insert("value".into(), est.value.into());
        rec.insert("start_value".into(), est.start_value.into());
        rec.insert("search_feasible".into(), est.search_feasible.into());
        rec.insert("feasible_points".into(), est.feasible_points.len().into());
        rec.insert("nontrivial_alternatives".into(), est.nontrivial_alternatives().count().into());
        rec.insert("separability_residual".into(), est.separability_residual.into());
        rec.insert("channel_drift".into(), est.channel_drift.into());
        rec.insert("bound_violations".into(), est.bound_violations.into());
        rec.insert("restart_values".into(), json!(est.restart_values));
        if let Some(b) = &est.bounds {
            rec.insert("lower".into(), b.lower.into());
            rec.insert("upper".into(), b.upper.into());
            rec.insert("heuristic".into(), b.heuristic.into());
            let ordered = est.ordering_holds(1e-6).unwrap_or(true);
            rec.insert("ordering".into(), (b.heuristic || ordered).into());
        }
        Ok(Value::Object(rec))
    })?;

    let mut summary = Summary::default();
    summary.checks.push(Check::at_most("channel_drift", max_of(&records, "channel_drift"), 1e-8));
    summary.checks.push(Check::at_most("feasible_decay_bound", max_of(&records, "bound_violations"), 0.0));
    let gain = records.iter().map(|r| r["value"].as_f64().unwrap_or(0.0) - r["start_value"].as_f64().unwrap_or(0.0)).fold(f64::NEG_INFINITY, f64::max);
    summary.checks.push(Check::at_most("value_not_above_start", gain, 1e-12));
    if kind.is_some() {
        summary.checks.push(Check::holds("bounds_ordering", records.iter().all(|r| r["ordering"].as_bool().unwrap_or(true))));
    }
    summary.stats.insert("min_value".into(), records.iter().filter_map(|r| r["value"].as_f64()).fold(f64::INFINITY, f64::min));
    summary.stats.insert("nontrivial_alternatives".into(), records.iter().filter_map(|r| r["nontrivial_alternatives"].as_f64()).sum());
    Ok(RunReport::new(&ExperimentConfig::Erf(args.clone()), records, summary))
}

/// Convex-roof estimates, compared with the closed form where one exists.
pub fn cmd_roof(args: &RoofArgs) -> Result<RunReport> {
    let common = &args.common;
    check_trials(common)?;
    let fixed = state(common)?;
    let dims = match &fixed {
        Some(s) => s.dims().clone(),
        None => dims_or(common, &[2, 2])?,
    };
    let kind = measure(common, &dims)?;
    let tol = common.tol.unwrap_or(1e-4);
    let rank = args.rank.unwrap_or(dims.total());

    let records = par_trials(common.trials, |t| {
        let mut rng = trial_stream(common.seed, t);
        let mut rec = record(t, rng.stream_id());
        let rho = match &fixed {
            Some(s) => s.density(),
            None => random_density(&dims, rank, &mut rng)?,
        };
        let opts = RoofOptions { ensemble_size: args.ensemble, restarts: args.restarts, seed: rng.stream_id(), ..RoofOptions::default() };
        let res = convex_roof(&kind, &rho, &opts)?;
        rec.insert("value".into(), res.value.into());
        rec.insert("converged".into(), res.converged.into());
        rec.insert("best_restart".into(), res.best_restart.into());
        rec.insert("ensemble_size".into(), res.ensemble.len().into());
        let spread = res.restart_values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b)) - res.value;
        rec.insert("restart_spread".into(), spread.into());
        if matches!(kind, MeasureKind::Concurrence | MeasureKind::GConcurrence(2)) {
            let exact = wootters_concurrence(&rho)?;
            rec.insert("closed_form".into(), exact.into());
            rec.insert("error".into(), (res.value - exact).abs().into());
        }
        Ok(Value::Object(rec))
    })?;

    let failures = records.iter().filter(|r| r["converged"] == Value::Bool(false)).count();
    let mut summary = Summary::default();
    if records.iter().any(|r| r.get("error").is_some()) {
        summary.checks.push(Check::at_most("max_error_vs_closed_form", max_of(&records, "error"), tol));
    }
    summary.checks.push(Check::at_most("non_converged_fraction", failures as f64 / records.len() as f64, 0.02));
    summary.stats.insert("mean_value".into(), mean_of(&records, "value"));
    summary.stats.insert("non_converged".into(), failures as f64);
    Ok(RunReport::new(&ExperimentConfig::Roof(args.clone()), records, summary))
}

fn local_channel_from(ch: &SeparableChannel) -> Result<LocalChannel> {
    if ch.dims().parties() != 1 {
        return usage(format!("breaking tests need a single-party channel, got dims {}", ch.dims()));
    }
    LocalChannel::new(ch.ops().iter().map(|o| o.factors[0].clone()).collect())
}

/// Partial-entanglement-breaking test at one parameter, or a threshold scan.
pub fn cmd_breaking(args: &BreakingArgs) -> Result<RunReport> {
    let common = &args.common;
    check_trials(common)?;
    let peb = PebOptions { probes: args.probes, seed: common.seed, ..PebOptions::default() };
    let mut summary = Summary::default();
    let stream = RandomStream::new(common.seed, 0).stream_id();

    if args.bisect {
        let name = args.family.as_deref().ok_or_else(|| Error::Usage("--bisect needs --family".into()))?;
        let family = local_family(name)?;
        let opts = ScanOptions { points: args.points, tolerance: common.tol.unwrap_or(1e-3), peb, ..ScanOptions::default() };
        let rep = eb_threshold_scan(family, args.r, &opts)?;
        let records = rep
            .grid
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let mut rec = record(i, stream);
                rec.insert("parameter".into(), g.parameter.into());
                rec.insert("verdict".into(), serde_json::to_value(g.verdict).expect("enum"));
                rec.insert("agreement".into(), g.agreement.into());
                rec.insert("undetermined".into(), g.undetermined.into());
                Value::Object(rec)
            })
            .collect();
        summary.checks.push(Check::holds("probe_agreement", rep.probe_agreement));
        if let Some(x) = rep.threshold {
            summary.stats.insert("threshold".into(), x);
        }
        if let Some((a, b)) = rep.bracket {
            summary.stats.insert("bracket_low".into(), a);
            summary.stats.insert("bracket_high".into(), b);
        }
        summary.stats.insert("bisection_steps".into(), rep.bisection_steps as f64);
        let mut rep_records: Vec<Value> = records;
        let mut status = Map::new();
        status.insert("status".into(), serde_json::to_value(rep.status).expect("enum"));
        rep_records.push(Value::Object({
            let mut m = record(rep_records.len(), stream);
            m.append(&mut status);
            m.insert("threshold".into(), rep.threshold.into());
            m
        }));
        return Ok(RunReport::new(&ExperimentConfig::Breaking(args.clone()), rep_records, summary));
    }

    let channel = match (&args.family, &common.channel) {
        (Some(name), None) => local_family(name)?(common.p.ok_or_else(|| Error::Usage("--family without --bisect needs --p".into()))?)?,
        (None, Some(path)) => local_channel_from(&crate::io::read_channel(std::path::Path::new(path))?)?,
        _ => return usage("pass exactly one of --family or --channel"),
    };
    let rep = r_peb_test(&channel, args.r, &peb)?;
    let records = std::iter::once(&rep.maximal)
        .chain(&rep.probes)
        .enumerate()
        .map(|(i, p)| {
            let mut rec = record(i, RandomStream::new(common.seed, p.index.map_or(0, |k| k as u64)).stream_id());
            rec.insert("probe".into(), p.index.map_or(Value::from("maximal"), Value::from));
            rec.insert("verdict".into(), serde_json::to_value(p.verdict).expect("enum"));
            rec.insert("exact".into(), p.exact.into());
            rec.insert("min_schmidt_coefficient".into(), p.min_schmidt_coefficient.into());
            rec.insert("min_partial_transpose_eigenvalue".into(), p.min_partial_transpose_eigenvalue.into());
            Value::Object(rec)
        })
        .collect();
    summary.checks.push(Check::holds("probe_agreement", rep.agreement()));
    summary.stats.insert("breaks".into(), if rep.verdict == Verdict::Breaks { 1.0 } else { 0.0 });
    summary.stats.insert("undetermined".into(), rep.undetermined as f64);
    Ok(RunReport::new(&ExperimentConfig::Breaking(args.clone()), records, summary))
}

/// `(x, y)` pairs over a parameter grid.
pub fn cmd_sweep(args: &SweepArgs) -> Result<RunReport> {
    let common = &args.common;
    let xs = parse_range(&args.range)?;
    let qubits = LocalDims::qubits(2);
    let channel_at = |x: f64| -> Result<SeparableChannel> {
        match args.family.as_str() {
            "bitflip" | "bit-flip" | "bit-flip-correlated" => families::bit_flip_correlated(x),
            name => embed_one_sided(local_family(name)?(x)?.ops(), 0, &qubits),
        }
    };
    let emit = args.emit.as_str();
    if !matches!(emit, "decay" | "ratio" | "erf" | "breaking") {
        return usage(format!("unknown --emit {emit:?}; expected decay, ratio, erf or breaking"));
    }
    let bell: State = named::bell().into();

    let records = xs
        .par_iter()
        .enumerate()
        .map(|(i, &x)| {
            let rng = trial_stream(common.seed, i);
            let mut rec = record(i, rng.stream_id());
            let y = match emit {
                "decay" => channel_at(x)?.decay_factor(),
                "ratio" => {
                    let ch = channel_at(x)?;
                    crate::erf::erf_bounds(&ch, &bell, &MeasureKind::Concurrence, &RoofOptions::default())?.lower
                }
                "erf" => erf_minimize(&channel_at(x)?, &MixingSearchOptions { seed: rng.stream_id(), ..MixingSearchOptions::default() })?.value,
                _ => {
                    let ch = local_family(&args.family)?(x)?;
                    let rep = r_peb_test(&ch, 1, &PebOptions { probes: 0, ..PebOptions::default() })?;
                    if rep.verdict == Verdict::Breaks { 1.0 } else { 0.0 }
                }
            };
            rec.insert("x".into(), x.into());
            rec.insert("y".into(), y.into());
            Ok(Value::Object(rec))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = Summary::default();
    if matches!(emit, "decay" | "erf") {
        summary.checks.push(Check::at_most("decay_bound", max_of(&records, "y"), 1.0 + DECAY_SLACK));
    }
    summary.stats.insert("points".into(), records.len() as f64);
    Ok(RunReport::new(&ExperimentConfig::Sweep(args.clone()), records, summary))
}
