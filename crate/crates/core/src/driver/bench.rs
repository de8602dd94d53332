//! Batch runs over a directory of instance files, aggregated by
//! `floor(log2 nnz)`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{solve, SolveConfig};
use crate::instances::read_instance;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub file: String,
    pub class: String,
    pub nnz: usize,
    pub solved: bool,
    pub z_best: Option<f64>,
    pub time_to_best: Option<f64>,
    /// Set when the instance could not be read or solved.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub log2_nnz: u32,
    pub instances: usize,
    pub solved_pct: f64,
    pub median_time: Option<f64>,
    pub q1_time: Option<f64>,
    pub q3_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub groups: Vec<GroupRow>,
}

/// `floor(log2 nnz)`, with `nnz <= 1` in group 0.
pub fn log2_group(nnz: usize) -> u32 {
    if nnz <= 1 {
        0
    } else {
        usize::BITS - 1 - nnz.leading_zeros()
    }
}

/// First quartile, median and third quartile with linear interpolation
/// between order statistics.
pub fn quartiles(values: &[f64]) -> Option<(f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let at = |q: f64| {
        let pos = q * (v.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    };
    Some((at(0.25), at(0.5), at(0.75)))
}

fn aggregate(rows: &[BenchRow]) -> Vec<GroupRow> {
    let mut groups: BTreeMap<u32, Vec<&BenchRow>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.error.is_none()) {
        groups.entry(log2_group(r.nnz)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(g, members)| {
            let times: Vec<f64> = members.iter().filter_map(|r| r.time_to_best).collect();
            let solved = members.iter().filter(|r| r.solved).count();
            let q = quartiles(&times);
            GroupRow {
                log2_nnz: g,
                instances: members.len(),
                solved_pct: 100.0 * solved as f64 / members.len() as f64,
                median_time: q.map(|t| t.1),
                q1_time: q.map(|t| t.0),
                q3_time: q.map(|t| t.2),
            }
        })
        .collect()
}

/// Solves every `*.json` file in `dir` (sorted by name). Unreadable or
/// failing instances produce a row with `error` set and are left out of
/// the groups.
pub fn bench(dir: &Path, cfg: &SolveConfig) -> std::io::Result<BenchReport> {
    let mut files: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();

    let mut rows = Vec::with_capacity(files.len());
    for path in files {
        let file = path
            .file_name()
            .map_or_else(String::new, |f| f.to_string_lossy().into_owned());
        let inst = match read_instance(&path) {
            Ok(i) => i,
            Err(e) => {
                log::warn!("skipping {file}: {e}");
                rows.push(BenchRow {
                    file,
                    class: String::new(),
                    nnz: 0,
                    solved: false,
                    z_best: None,
                    time_to_best: None,
                    error: Some(e.to_string()),
                });
                continue;
            }
        };
        let class = inst.meta().class.clone();
        let nnz = inst.nnz();
        let row = match solve(&inst, cfg) {
            Ok(out) => {
                let inc = out.incumbent;
                BenchRow {
                    file,
                    class,
                    nnz,
                    solved: inc.is_some(),
                    z_best: inc.is_some().then_some(inc.z_best),
                    time_to_best: inc.is_some().then_some(inc.found_at_seconds),
                    error: None,
                }
            }
            Err(e) => BenchRow {
                file,
                class,
                nnz,
                solved: false,
                z_best: None,
                time_to_best: None,
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    let groups = aggregate(&rows);
    Ok(BenchReport { rows, groups })
}

impl BenchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Per-instance rows as CSV.
    pub fn rows_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
    }

    /// Group rows as CSV.
    pub fn groups_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for g in &self.groups {
            w.serialize(g)?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf8"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(nnz: usize, t: Option<f64>) -> BenchRow {
        BenchRow {
            file: String::new(),
            class: "x".into(),
            nnz,
            solved: t.is_some(),
            z_best: t,
            time_to_best: t,
            error: None,
        }
    }

    #[test]
    fn groups_by_log2() {
        assert_eq!(log2_group(9), 3);
        assert_eq!(log2_group(14), 3);
        assert_eq!(log2_group(16), 4);
        let g = aggregate(&[row(9, Some(1.0)), row(14, Some(3.0))]);
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].instances, 2);
        assert_eq!(g[0].solved_pct, 100.0);
        assert_eq!(g[0].median_time, Some(2.0));
    }

    #[test]
    fn partial_solves() {
        let g = aggregate(&[row(8, Some(1.0)), row(8, None)]);
        assert_eq!(g[0].solved_pct, 50.0);
    }

    #[test]
    fn quartile_values() {
        assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), Some((2.0, 3.0, 4.0)));
        assert_eq!(quartiles(&[]), None);
    }

    #[test]
    fn empty_dir() {
        let d = tempfile::tempdir().unwrap();
        let r = bench(d.path(), &SolveConfig::default()).unwrap();
        assert!(r.rows.is_empty() && r.groups.is_empty());
        assert_eq!(r.rows_csv().unwrap(), "");
    }
}
