//! JSON encodings of channels and states.
//!
//! Complex numbers are `[re, im]` pairs and matrices are row-major nested
//! arrays:
//!
//! ```text
//! channel: {"dims": [2, 2], "ops": [{"label": "a", "factors": [M1, M2]}, ...]}
//! state:   {"dims": [2, 2], "type": "pure",  "data": [[re, im], ...]}
//!          {"dims": [2, 2], "type": "mixed", "data": [[[re, im], ...], ...]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::channels::{SeparableChannel, SeparableKrausOperator};
use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, LocalDims, C64};
use crate::state::{DensityMatrix, PureState, State};

type Pair = [f64; 2];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    dims: Vec<usize>,
    ops: Vec<OpDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
    factors: Vec<Vec<Vec<Pair>>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateDoc {
    dims: Vec<usize>,
    #[serde(rename = "type")]
    kind: StateKind,
    data: Value,
}

#[derive(Debug, Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum StateKind {
    Pure,
    Mixed,
}

fn parse_err(location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), message: message.into() }
}

fn from_json<T: for<'de> Deserialize<'de>>(text: &str, source: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| parse_err(format!("{source}:{}:{}", e.line(), e.column()), e.to_string()))
}

fn complex(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn pair(z: &C64) -> Pair {
    [z.re, z.im]
}

pub fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<Pair>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| pair(&m[(r, c)])).collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<Pair>], location: &str) -> Result<ComplexMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(parse_err(location, "empty matrix"));
    }
    let cols = rows[0].len();
    if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(parse_err(format!("{location}[{r}]"), format!("row has {} entries, expected {cols}", row.len())));
    }
    let entries: Vec<C64> = rows.iter().flatten().map(complex).collect();
    if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(parse_err(location, "non-finite entry"));
    }
    Ok(ComplexMatrix::from_row_slice(n, cols, &entries))
}

fn dims_from(d: Vec<usize>, source: &str) -> Result<LocalDims> {
    LocalDims::new(d).map_err(|e| parse_err(format!("{source}: dims"), e.to_string()))
}

/// Parses a channel document; `source` names the input in error locations.
pub fn channel_from_str(text: &str, source: &str) -> Result<SeparableChannel> {
    let doc: ChannelDoc = from_json(text, source)?;
    let dims = dims_from(doc.dims, source)?;
    let mut ops = Vec::with_capacity(doc.ops.len());
    for (m, op) in doc.ops.iter().enumerate() {
        let factors = op
            .factors
            .iter()
            .enumerate()
            .map(|(i, f)| matrix_from_rows(f, &format!("{source}: ops[{m}].factors[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        ops.push(SeparableKrausOperator { factors, label: op.label.clone() });
    }
    SeparableChannel::new(dims, ops)
}

pub fn channel_to_string(channel: &SeparableChannel) -> String {
    let doc = ChannelDoc {
        dims: channel.dims().as_slice().to_vec(),
        ops: channel
            .ops()
            .iter()
            .map(|op| OpDoc { label: op.label.clone(), factors: op.factors.iter().map(matrix_to_rows).collect() })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn state_from_str(text: &str, source: &str) -> Result<State> {
    let doc: StateDoc = from_json(text, source)?;
    let dims = dims_from(doc.dims, source)?;
    let at = format!("{source}: data");
    match doc.kind {
        StateKind::Pure => {
            let amps: Vec<Pair> = serde_json::from_value(doc.data).map_err(|e| parse_err(&at, format!("expected [[re, im], ...]: {e}")))?;
            let v = ComplexVector::from_iterator(amps.len(), amps.iter().map(complex));
            Ok(State::Pure(PureState::new(v, dims).map_err(|e| parse_err(&at, e.to_string()))?))
        }
        StateKind::Mixed => {
            let rows: Vec<Vec<Pair>> = serde_json::from_value(doc.data).map_err(|e| parse_err(&at, format!("expected rows of [re, im]: {e}")))?;
            let m = matrix_from_rows(&rows, &at)?;
            Ok(State::Mixed(DensityMatrix::new(m, dims).map_err(|e| parse_err(&at, e.to_string()))?))
        }
    }
}

pub fn state_to_string(state: &State) -> String {
    let (kind, data) = match state {
        State::Pure(p) => (StateKind::Pure, serde_json::to_value(p.amps().iter().map(pair).collect::<Vec<_>>())),
        State::Mixed(m) => (StateKind::Mixed, serde_json::to_value(matrix_to_rows(m.matrix()))),
    };
    let doc = StateDoc { dims: state.dims().as_slice().to_vec(), kind, data: data.expect("serializable") };
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn read_channel(path: &Path) -> Result<SeparableChannel> {
    channel_from_str(&std::fs::read_to_string(path)?, &path.display().to_string())
}

pub fn read_state(path: &Path) -> Result<State> {
    state_from_str(&std::fs::read_to_string(path)?, &path.display().to_string())
}
