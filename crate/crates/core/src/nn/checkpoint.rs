//! Plain-text network container.
//!
//! ```text
//! freecool-mlp 1
//! meta <key> <value...>        zero or more, value runs to end of line
//! layers <count>
//! layer <inputs> <outputs> <relu|identity>
//! w <inputs values>            one line per output unit
//! b <outputs values>
//! ```
//!
//! Numbers use the shortest representation that parses back to the same bits,
//! so save → load is exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Activation, Dense, Mlp, NnError};
use crate::scalar::Real;

const MAGIC: &str = "freecool-mlp";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub net: Mlp<T>,
    pub meta: BTreeMap<String, String>,
}

impl<T: Real> Checkpoint<T> {
    pub fn new(net: Mlp<T>) -> Self {
        Self { net, meta: BTreeMap::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{MAGIC} {VERSION}").unwrap();
        for (k, v) in &self.meta {
            writeln!(s, "meta {k} {v}").unwrap();
        }
        writeln!(s, "layers {}", self.net.layers().len()).unwrap();
        for layer in self.net.layers() {
            writeln!(s, "layer {} {} {}", layer.inputs, layer.outputs, layer.activation.name()).unwrap();
            for j in 0..layer.outputs {
                s.push('w');
                for v in layer.row(j) {
                    write!(s, " {v}").unwrap();
                }
                s.push('\n');
            }
            s.push('b');
            for v in &layer.bias {
                write!(s, " {v}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, NnError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, msg: &str| NnError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut next = |what: &str| lines.next().ok_or_else(|| err(0, &format!("unexpected end of file, expected {what}")));

        let (n, header) = next("header")?;
        if header.trim() != format!("{MAGIC} {VERSION}") {
            return Err(err(n, "not a freecool-mlp v1 checkpoint"));
        }
        let mut meta = BTreeMap::new();
        let (mut n, mut line) = next("layers")?;
        while let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            meta.insert(k.to_string(), v.to_string());
            (n, line) = next("layers")?;
        }
        let count: usize = line
            .strip_prefix("layers ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| err(n, "expected `layers <count>`"))?;

        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, head) = next("layer")?;
            let parts: Vec<&str> = head.split_whitespace().collect();
            let (inputs, outputs, act) = match parts.as_slice() {
                ["layer", i, o, a] => (
                    i.parse::<usize>().map_err(|_| err(n, "bad input width"))?,
                    o.parse::<usize>().map_err(|_| err(n, "bad output width"))?,
                    Activation::parse(a).ok_or_else(|| err(n, "unknown activation"))?,
                ),
                _ => return Err(err(n, "expected `layer <in> <out> <activation>`")),
            };
            let mut dense = Dense::zeros(inputs, outputs, act);
            for j in 0..outputs {
                let (n, row) = next("weight row")?;
                let values = parse_values::<T>(row, "w", inputs).map_err(|m| err(n, &m))?;
                dense.weights[j * inputs..(j + 1) * inputs].copy_from_slice(&values);
            }
            let (n, row) = next("bias row")?;
            dense.bias = parse_values::<T>(row, "b", outputs).map_err(|m| err(n, &m))?;
            layers.push(dense);
        }
        Ok(Self {
            net: Mlp::from_layers(layers)?,
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), NnError> {
        fs::write(path, self.to_text()).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, NnError> {
        let text = fs::read_to_string(path).map_err(|e| NnError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

fn parse_values<T: Real>(line: &str, tag: &str, expected: usize) -> Result<Vec<T>, String> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(format!("expected `{tag}` row"));
    }
    let values: Vec<T> = parts
        .map(|p| p.parse::<T>().map_err(|_| format!("bad number `{p}`")))
        .collect::<Result<_, _>>()?;
    if values.len() != expected {
        return Err(format!("expected {expected} values, found {}", values.len()));
    }
    Ok(values)
}
