//! Versioned text format for trained models.
//!
//! ```text
//! qot-mlp 1
//! dims <inputs> <hidden> <outputs>
//! meta <key> <value>          (zero or more)
//! norm_mean <v>...
//! norm_std <v>...
//! W1
//! <hidden rows of inputs values>
//! b1
//! <hidden values>
//! W2
//! <outputs rows of hidden values>
//! b2
//! <outputs values>
//! ```
//!
//! Numbers are written in shortest round-trip form.

use std::fs;
use std::path::Path;

use super::mlp::{Mlp, Params};
use crate::dataset::Normalizer;
use crate::error::{Error, Result};

const MAGIC: &str = "qot-mlp 1";

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub model: Mlp,
    pub normalizer: Normalizer,
    /// Free-form training metadata, kept in insertion order.
    pub metadata: Vec<(String, String)>,
}

impl SavedModel {
    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    /// Class probabilities for a raw (unscaled) feature vector.
    pub fn predict_proba(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.model.forward(&self.normalizer.apply(raw))
    }

    pub fn predict(&self, raw: &[f64]) -> Result<usize> {
        self.model.predict(&self.normalizer.apply(raw))
    }

    pub fn to_text(&self) -> String {
        let m = &self.model;
        let join = |values: &[f64]| {
            values
                .iter()
                .map(|v| format!("{v:?}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("dims {} {} {}\n", m.inputs(), m.hidden(), m.outputs()));
        for (k, v) in &self.metadata {
            out.push_str(&format!("meta {k} {v}\n"));
        }
        out.push_str(&format!("norm_mean {}\n", join(&self.normalizer.mean)));
        out.push_str(&format!("norm_std {}\n", join(&self.normalizer.std)));
        let blocks = [
            ("W1", &m.params.w1, m.inputs()),
            ("b1", &m.params.b1, m.hidden()),
            ("W2", &m.params.w2, m.hidden()),
            ("b2", &m.params.b2, m.outputs()),
        ];
        for (name, values, row) in blocks {
            out.push_str(name);
            out.push('\n');
            for chunk in values.chunks(row.max(1)) {
                out.push_str(&join(chunk));
                out.push('\n');
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("model file ends before {what}")))
        };
        let (n, magic) = next("header")?;
        if magic != MAGIC {
            return Err(Error::parse(n, format!("expected {MAGIC:?}")));
        }
        let (n, dims) = next("dims")?;
        let dims: Vec<usize> = dims
            .strip_prefix("dims ")
            .ok_or_else(|| Error::parse(n, "expected `dims`"))?
            .split_whitespace()
            .map(|v| v.parse().map_err(|e| Error::parse(n, format!("bad dimension: {e}"))))
            .collect::<Result<_>>()?;
        let [inputs, hidden, outputs] = dims[..] else {
            return Err(Error::parse(n, "expected three dimensions"));
        };

        let numbers = |n: usize, s: &str| -> Result<Vec<f64>> {
            s.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| Error::parse(n, format!("bad number {v:?}: {e}"))))
                .collect()
        };
        let mut metadata = Vec::new();
        let (mut n, mut line) = next("normalizer")?;
        while let Some(rest) = line.strip_prefix("meta ") {
            let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
            metadata.push((k.to_string(), v.to_string()));
            (n, line) = next("normalizer")?;
        }
        let mean = numbers(n, line.strip_prefix("norm_mean").ok_or_else(|| Error::parse(n, "expected `norm_mean`"))?)?;
        let (n, line) = next("norm_std")?;
        let std = numbers(n, line.strip_prefix("norm_std").ok_or_else(|| Error::parse(n, "expected `norm_std`"))?)?;
        if mean.len() != inputs || std.len() != inputs {
            return Err(Error::parse(n, "normalizer width differs from input width"));
        }

        let mut block = |name: &str, rows: usize| -> Result<Vec<f64>> {
            let (n, header) = next(name)?;
            if header != name {
                return Err(Error::parse(n, format!("expected block {name}")));
            }
            let mut values = Vec::new();
            for _ in 0..rows {
                let (n, line) = next(name)?;
                values.extend(numbers(n, line)?);
            }
            Ok(values)
        };
        let w1 = block("W1", hidden)?;
        let b1 = block("b1", 1)?;
        let w2 = block("W2", outputs)?;
        let b2 = block("b2", 1)?;
        let model = Mlp::from_params(inputs, hidden, outputs, Params { w1, b1, w2, b2 })?;
        Ok(SavedModel {
            model,
            normalizer: Normalizer { mean, std },
            metadata,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
