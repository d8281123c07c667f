//! Resolution of channel, state and measure arguments.
//!
//! `--channel` and `--state` name a JSON file; when no such file exists the
//! argument (without directory and `.json` suffix) is looked up among the
//! built-in names.

use std::path::Path;

use super::CommonArgs;
use crate::channels::families;
use crate::channels::{embed_one_sided, LocalChannel, SeparableChannel};
use crate::error::{usage, Error, Result};
use crate::linalg::LocalDims;
use crate::measures::MeasureKind;
use crate::random::RandomStream;
use crate::state::{named, State};

fn builtin_name(arg: &str) -> String {
    let base = Path::new(arg).file_name().and_then(|s| s.to_str()).unwrap_or(arg);
    base.strip_suffix(".json").unwrap_or(base).to_ascii_lowercase()
}

pub(crate) fn dims_or(common: &CommonArgs, default: &[usize]) -> Result<LocalDims> {
    LocalDims::new(common.dims.clone().unwrap_or_else(|| default.to_vec()))
}

fn param(common: &CommonArgs, default: f64) -> f64 {
    common.p.unwrap_or(default)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RandomKind {
    Separable,
    UnitarySeparable,
    OneSided,
}

/// A fixed channel, or a recipe for drawing one per trial.
#[derive(Debug, Clone)]
pub(crate) enum ChannelSource {
    Fixed(SeparableChannel),
    Random { kind: RandomKind, dims: LocalDims, kraus: Option<usize> },
}

impl ChannelSource {
    pub(crate) fn dims(&self) -> &LocalDims {
        match self {
            ChannelSource::Fixed(c) => c.dims(),
            ChannelSource::Random { dims, .. } => dims,
        }
    }

    /// Kraus counts of random draws default to a uniform pick in 2..=6.
    pub(crate) fn draw(&self, rng: &mut RandomStream) -> Result<SeparableChannel> {
        match self {
            ChannelSource::Fixed(c) => Ok(c.clone()),
            ChannelSource::Random { kind, dims, kraus } => {
                let count = kraus.unwrap_or_else(|| rng.int_in(2, 6));
                match kind {
                    RandomKind::Separable => families::random_separable(dims, count, rng),
                    RandomKind::UnitarySeparable => families::random_unitary_separable(dims, count, rng),
                    RandomKind::OneSided => {
                        let party = rng.int_in(0, dims.parties() - 1);
                        families::random_one_sided(dims, party, count, rng)
                    }
                }
            }
        }
    }
}

pub(crate) fn channel_source(common: &CommonArgs, kraus: Option<usize>, default_random: RandomKind) -> Result<ChannelSource> {
    let Some(arg) = &common.channel else {
        return Ok(ChannelSource::Random { kind: default_random, dims: dims_or(common, &[2, 2])?, kraus });
    };
    if Path::new(arg).is_file() {
        return Ok(ChannelSource::Fixed(crate::io::read_channel(Path::new(arg))?));
    }
    let qubits = || dims_or(common, &[2, 2]);
    let one_sided = |local: LocalChannel| -> Result<ChannelSource> {
        let dims = qubits()?;
        Ok(ChannelSource::Fixed(embed_one_sided(local.ops(), 0, &dims)?))
    };
    match builtin_name(arg).as_str() {
        "bitflip" | "bit-flip" | "bit-flip-correlated" => Ok(ChannelSource::Fixed(families::bit_flip_correlated(param(common, 0.3))?)),
        "identity" => Ok(ChannelSource::Fixed(families::identity(&qubits()?))),
        "depolarizing" => one_sided(families::depolarizing(param(common, 0.5))?),
        "amplitude-damping" => one_sided(families::amplitude_damping(param(common, 0.5))?),
        "random-separable" => Ok(ChannelSource::Random { kind: RandomKind::Separable, dims: qubits()?, kraus }),
        "random-unitary-separable" => Ok(ChannelSource::Random { kind: RandomKind::UnitarySeparable, dims: qubits()?, kraus }),
        "random-one-sided" => Ok(ChannelSource::Random { kind: RandomKind::OneSided, dims: qubits()?, kraus }),
        _ => Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{arg}: no such file and not a built-in channel")))),
    }
}

pub(crate) fn state(common: &CommonArgs) -> Result<Option<State>> {
    let Some(arg) = &common.state else { return Ok(None) };
    if Path::new(arg).is_file() {
        return crate::io::read_state(Path::new(arg)).map(Some);
    }
    let parties = common.dims.as_ref().map_or(3, |d| d.len());
    let s: State = match builtin_name(arg).as_str() {
        "bell" => named::bell().into(),
        "ghz" => named::ghz(parties)?.into(),
        "w" => named::w_state(parties)?.into(),
        "werner" => named::werner(common.p.ok_or_else(|| Error::Usage("werner state needs --p".into()))?)?.into(),
        _ => return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, format!("{arg}: no such file and not a built-in state")))),
    };
    Ok(Some(s))
}

/// `--measure`, defaulting by dimensions.
pub(crate) fn measure(common: &CommonArgs, dims: &LocalDims) -> Result<MeasureKind> {
    let name = match &common.measure {
        Some(m) => m.clone(),
        None => match dims.as_slice() {
            [2, 2] => "concurrence".into(),
            [2, 2, 2] => "sqrt_three_tangle".into(),
            [a, b] if a == b => "g_concurrence".into(),
            other => return usage(format!("no default measure for dims {other:?}; pass --measure")),
        },
    };
    MeasureKind::parse(&name, dims)
}

pub(crate) type Family = fn(f64) -> Result<LocalChannel>;

pub(crate) fn local_family(name: &str) -> Result<Family> {
    match name {
        "depolarizing" => Ok(families::depolarizing),
        "amplitude-damping" => Ok(families::amplitude_damping),
        "identity" => Ok(|_| Ok(families::local_identity(2))),
        other => usage(format!("unknown local channel family {other:?}")),
    }
}

/// `start:stop:step`, inclusive of `stop` when the step lands on it.
pub(crate) fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Usage(format!("bad range {text:?}; expected start:stop:step"))))
        .collect::<Result<_>>()?;
    let &[start, stop, step] = parts.as_slice() else {
        return usage(format!("bad range {text:?}; expected start:stop:step"));
    };
    if !(step > 0.0) || !(stop >= start) {
        return usage(format!("range {text:?} needs step > 0 and stop ≥ start"));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| if i == n && ((start + step * n as f64) - stop).abs() < 1e-9 { stop } else { start + step * i as f64 }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r = parse_range("0:1:0.05").unwrap();
        assert_eq!(r.len(), 21);
        assert_eq!(r[20], 1.0);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("1:0:0.1").is_err());
    }

    #[test]
    fn names() {
        assert_eq!(builtin_name("data/bitflip.json"), "bitflip");
        assert_eq!(builtin_name("werner"), "werner");
    }
}
