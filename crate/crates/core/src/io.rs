//! JSON files holding a state or witness:
//! `{"dims": [dA, dB], "matrix": [[[re, im], ...], ...]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{Operator, C64};
use crate::states::DensityMatrix;
use crate::witness::WitnessSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub dims: Vec<usize>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}

impl OperatorFile {
    pub fn from_operator(op: &Operator) -> Self {
        Self { dims: op.dims().to_vec(), matrix: op.to_rows() }
    }

    /// Bipartite Hermitian operator; shape and Hermiticity are checked.
    pub fn to_operator(&self) -> Result<Operator> {
        if self.dims.len() != 2 {
            return Err(Error::InvalidDims(format!("expected two subsystems, found {}", self.dims.len())));
        }
        if self.matrix.iter().flatten().flatten().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        let rows: Vec<Vec<C64>> =
            self.matrix.iter().map(|r| r.iter().map(|&[re, im]| C64::new(re, im)).collect()).collect();
        let op = Operator::from_rows(self.dims.clone(), &rows)?;
        op.ensure_hermitian()?;
        Ok(op)
    }
}

pub fn parse_operator(text: &str) -> Result<Operator> {
    serde_json::from_str::<OperatorFile>(text)?.to_operator()
}

pub fn load_operator(path: &Path) -> Result<Operator> {
    parse_operator(&fs::read_to_string(path)?)
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    DensityMatrix::new(load_operator(path)?)
}

pub fn load_witness(path: &Path) -> Result<WitnessSpec> {
    WitnessSpec::new(load_operator(path)?)
}

pub fn to_json(op: &Operator) -> Result<String> {
    Ok(serde_json::to_string_pretty(&OperatorFile::from_operator(op))?)
}

pub fn save_operator(op: &Operator, path: &Path) -> Result<()> {
    fs::write(path, to_json(op)? + "\n")?;
    Ok(())
}
