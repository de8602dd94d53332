//! JSON instance files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InstanceError;
use crate::linalg::SparseMatrix;
use crate::model::{BipInstance, InstanceMeta};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    c: Vec<f64>,
    #[serde(default)]
    c0: f64,
    #[serde(rename = "Q", default, skip_serializing_if = "Option::is_none")]
    q: Option<SparseMatrix>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    a: Option<SparseMatrix>,
    #[serde(default)]
    b: Vec<f64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    beq: Option<SparseMatrix>,
    #[serde(default)]
    d: Vec<f64>,
    #[serde(default)]
    meta: InstanceMeta,
}

pub fn instance_to_json(inst: &BipInstance) -> String {
    let n = inst.n();
    let file = InstanceFile {
        n,
        c: inst.c().to_vec(),
        c0: inst.c0(),
        q: (!inst.q().is_empty()).then(|| inst.q().clone()),
        a: (inst.m1() > 0).then(|| inst.ineq_matrix().clone()),
        b: inst.ineq_rhs().to_vec(),
        beq: (inst.m2() > 0).then(|| inst.eq_matrix().clone()),
        d: inst.eq_rhs().to_vec(),
        meta: inst.meta().clone(),
    };
    serde_json::to_string(&file).expect("instance serializes")
}

/// Parses an instance; absent `Q`, `A` or `B` mean empty blocks.
pub fn instance_from_json(text: &str) -> Result<BipInstance, InstanceError> {
    let f: InstanceFile = serde_json::from_str(text)?;
    if f.c.len() != f.n {
        return Err(InstanceError::DeclaredSize {
            declared: f.n,
            found: f.c.len(),
        });
    }
    let n = f.n;
    let mut inst = BipInstance::new(f.c)?.with_constant(f.c0)?;
    if let Some(q) = f.q {
        inst = inst.with_quadratic(q)?;
    }
    let a = f.a.unwrap_or_else(|| SparseMatrix::zeros(0, n));
    inst = inst.with_inequalities(a, f.b)?;
    let beq = f.beq.unwrap_or_else(|| SparseMatrix::zeros(0, n));
    inst = inst.with_equalities(beq, f.d)?;
    Ok(inst.with_meta(f.meta))
}

pub fn read_instance(path: &Path) -> Result<BipInstance, InstanceError> {
    let text = fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })?;
    instance_from_json(&text)
}

pub fn write_instance(inst: &BipInstance, path: &Path) -> Result<(), InstanceError> {
    fs::write(path, instance_to_json(inst)).map_err(|source| InstanceError::Io {
        path: path.display().to_string(),
        source,
    })
}
