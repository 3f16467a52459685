use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Saved model parameters: `{kind, dims, theta}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub kind: String,
    pub dims: Vec<usize>,
    pub theta: Vec<f64>,
}

impl Checkpoint {
    pub fn new(kind: impl Into<String>, dims: Vec<usize>, theta: Vec<f64>) -> Self {
        Self {
            kind: kind.into(),
            dims,
            theta,
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer(out, self)?;
        Ok(())
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        Ok(serde_json::from_reader(input)?)
    }
}
