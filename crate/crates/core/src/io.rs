//! File formats: similarity CSV, bid triples, assignment CSV and run reports.

use std::collections::HashMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ProblemInstance;
use crate::metrics::{FractionalAssignment, MetricsReport};
use crate::solvers::SolveStats;

/// A labelled similarity matrix; loads are supplied separately.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTable {
    pub paper_ids: Vec<String>,
    pub reviewer_ids: Vec<String>,
    pub sim: Array2<f64>,
}

impl SimilarityTable {
    /// Labels `p0..` and `r0..`.
    pub fn unlabelled(sim: Array2<f64>) -> Self {
        let (np, nr) = sim.dim();
        SimilarityTable {
            paper_ids: (0..np).map(|p| format!("p{p}")).collect(),
            reviewer_ids: (0..nr).map(|r| format!("r{r}")).collect(),
            sim,
        }
    }

    pub fn into_instance(self, paper_load: u32, reviewer_load: u32) -> Result<ProblemInstance> {
        ProblemInstance::new(self.sim, paper_load, reviewer_load)
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

/// Reads a dense similarity matrix: a header row of reviewer IDs (optionally
/// preceded by a corner label), then one row per paper with its ID and values.
pub fn load_similarity_csv(path: impl AsRef<Path>) -> Result<SimilarityTable> {
    read_similarity_csv(File::open(path)?)
}

pub fn read_similarity_csv<R: Read>(r: R) -> Result<SimilarityTable> {
    let mut rows = reader(r).into_records();
    let header = match rows.next() {
        Some(h) => h?,
        None => return Err(parse_error(1, 0, "empty file")),
    };
    let header: Vec<String> = header.iter().map(str::to_string).collect();
    let mut paper_ids = Vec::new();
    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    for (i, rec) in rows.enumerate() {
        let line = i + 2;
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let n = rec.len();
        match width {
            None => {
                if n != header.len() + 1 && n != header.len() {
                    return Err(parse_error(
                        line,
                        n,
                        &format!("row has {n} fields but the header names {} reviewers", header.len()),
                    ));
                }
                width = Some(n);
            }
            Some(w) if w != n => {
                return Err(parse_error(line, n.min(w) + 1, &format!("expected {w} fields, found {n}")));
            }
            _ => {}
        }
        paper_ids.push(rec[0].to_string());
        for (j, cell) in rec.iter().enumerate().skip(1) {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_error(line, j + 1, &format!("`{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_error(line, j + 1, "non-finite similarity"));
            }
            if v < 0.0 {
                return Err(Error::NegativeSimilarity {
                    row: line,
                    column: j + 1,
                    value: v,
                });
            }
            values.push(v);
        }
    }
    let width = width.ok_or_else(|| parse_error(2, 0, "no paper rows"))?;
    let nr = width - 1;
    let reviewer_ids = if header.len() == nr { header } else { header[1..].to_vec() };
    let sim = Array2::from_shape_vec((paper_ids.len(), nr), values).expect("rectangular rows");
    Ok(SimilarityTable {
        paper_ids,
        reviewer_ids,
        sim,
    })
}

fn parse_error(row: usize, column: usize, message: &str) -> Error {
    Error::Parse {
        row,
        column,
        message: message.to_string(),
    }
}

/// Writes a similarity matrix in the format read by [`load_similarity_csv`].
pub fn write_similarity_csv<W: Write>(w: W, table: &SimilarityTable) -> Result<()> {
    write_matrix(w, &table.paper_ids, &table.reviewer_ids, &table.sim)
}

fn write_matrix<W: Write>(w: W, rows: &[String], cols: &[String], m: &Array2<f64>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["paper".to_string()];
    header.extend(cols.iter().cloned());
    out.write_record(&header)?;
    for (id, row) in rows.iter().zip(m.rows()) {
        let mut rec = vec![id.clone()];
        rec.extend(row.iter().map(|v| format!("{v:.16e}")));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Mapping from bid levels to similarities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMap {
    pub levels: Vec<(String, f64)>,
    /// Level used for pairs without a bid.
    pub missing: String,
}

impl Default for LevelMap {
    fn default() -> Self {
        LevelMap {
            levels: vec![
                ("yes".into(), 1.0),
                ("maybe".into(), 0.5),
                ("no".into(), 0.25),
                ("conflict".into(), 0.0),
            ],
            missing: "no".into(),
        }
    }
}

impl LevelMap {
    /// Parses `"yes=1,maybe=0.5,no=0.25,conflict=0"`; the missing-bid level
    /// stays `no` when present, else the lowest-valued level.
    pub fn parse(s: &str) -> Result<Self> {
        let mut levels = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (name, value) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidParameter(format!("level `{part}` is not name=value")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("level value `{value}`")))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("level value {v} must be nonnegative")));
            }
            levels.push((name.trim().to_lowercase(), v));
        }
        let missing = if levels.iter().any(|(n, _)| n == "no") {
            "no".to_string()
        } else {
            levels
                .iter()
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .map(|l| l.0.clone())
                .ok_or_else(|| Error::InvalidParameter("empty level map".into()))?
        };
        Ok(LevelMap { levels, missing })
    }

    pub fn value(&self, level: &str) -> Option<f64> {
        let level = level.trim().to_lowercase();
        self.levels.iter().find(|(n, _)| *n == level).map(|(_, v)| *v)
    }

    fn missing_value(&self) -> f64 {
        self.value(&self.missing).unwrap_or(0.0)
    }
}

/// Reads `(paper, reviewer, level)` triples. Papers and reviewers are indexed
/// in order of first appearance; unlisted pairs get the missing-bid level.
/// A first row whose level column reads `level` or `bid` is skipped.
pub fn load_bids(path: impl AsRef<Path>, levels: &LevelMap) -> Result<SimilarityTable> {
    read_bids(File::open(path)?, levels)
}

pub fn read_bids<R: Read>(r: R, levels: &LevelMap) -> Result<SimilarityTable> {
    let mut papers: HashMap<String, usize> = HashMap::new();
    let mut reviewers: HashMap<String, usize> = HashMap::new();
    let mut paper_ids = Vec::new();
    let mut reviewer_ids = Vec::new();
    let mut bids = Vec::new();
    for (i, rec) in reader(r).into_records().enumerate() {
        let line = i + 1;
        let rec = rec?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != 3 {
            return Err(parse_error(line, rec.len(), "expected paper,reviewer,level"));
        }
        let level = &rec[2];
        if line == 1 && matches!(level.to_lowercase().as_str(), "level" | "bid") {
            continue;
        }
        let value = levels.value(level).ok_or_else(|| Error::UnknownLevel {
            level: level.to_string(),
            row: line,
        })?;
        let p = *papers.entry(rec[0].to_string()).or_insert_with(|| {
            paper_ids.push(rec[0].to_string());
            paper_ids.len() - 1
        });
        let q = *reviewers.entry(rec[1].to_string()).or_insert_with(|| {
            reviewer_ids.push(rec[1].to_string());
            reviewer_ids.len() - 1
        });
        bids.push((p, q, value));
    }
    let mut sim = Array2::from_elem((paper_ids.len(), reviewer_ids.len()), levels.missing_value());
    for (p, r, v) in bids {
        sim[[p, r]] = v;
    }
    Ok(SimilarityTable {
        paper_ids,
        reviewer_ids,
        sim,
    })
}

/// Writes `x` with 17 significant digits so that reading it back is exact.
pub fn write_assignment_csv<W: Write>(w: W, x: &FractionalAssignment, paper_ids: &[String], reviewer_ids: &[String]) -> Result<()> {
    write_matrix(w, paper_ids, reviewer_ids, x.matrix())
}

pub fn read_assignment_csv<R: Read>(r: R) -> Result<FractionalAssignment> {
    Ok(FractionalAssignment::new(read_similarity_csv(r).map_err(|e| match e {
        Error::NegativeSimilarity { row, column, value } => parse_error(row, column, &format!("negative probability {value}")),
        other => other,
    })?
    .sim))
}

pub fn load_assignment_csv(path: impl AsRef<Path>) -> Result<FractionalAssignment> {
    read_assignment_csv(File::open(path)?)
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    pub paper_load: u32,
    pub reviewer_load: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// JSON report of one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub paper_ids: Vec<String>,
    pub reviewer_ids: Vec<String>,
    pub assignment: Vec<Vec<f64>>,
    pub metrics: MetricsReport,
    pub stats: SolveStats,
    pub wall_time_ms: f64,
}

impl RunReport {
    pub fn assignment(&self) -> Result<FractionalAssignment> {
        let np = self.assignment.len();
        let nr = self.assignment.first().map_or(0, Vec::len);
        let flat: Vec<f64> = self.assignment.iter().flatten().copied().collect();
        let x = Array2::from_shape_vec((np, nr), flat)
            .map_err(|_| Error::MalformedInput("ragged assignment rows".into()))?;
        Ok(FractionalAssignment::new(x))
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, self)?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        Ok(serde_json::from_reader(r)?)
    }
}

pub fn dense_rows(x: &FractionalAssignment) -> Vec<Vec<f64>> {
    x.matrix().rows().into_iter().map(|r| r.to_vec()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn similarity_csv_basic() {
        let t = read_similarity_csv("r1,r2\np1,1,0\np2,0,1\n".as_bytes()).unwrap();
        assert_eq!(t.sim, array![[1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(t.reviewer_ids, vec!["r1", "r2"]);
        assert_eq!(t.paper_ids, vec!["p1", "p2"]);
    }

    #[test]
    fn similarity_csv_corner_label_and_exponent() {
        let t = read_similarity_csv("paper,r1,r2\np1,1e-3,0.5\n".as_bytes()).unwrap();
        assert_eq!(t.sim, array![[0.001, 0.5]]);
        assert_eq!(t.reviewer_ids, vec!["r1", "r2"]);
    }

    #[test]
    fn similarity_csv_ragged_row() {
        let err = read_similarity_csv("r1,r2\np1,1,0\np2,0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 3, .. }), "{err}");
    }

    #[test]
    fn similarity_csv_negative() {
        let err = read_similarity_csv("r1,r2\np1,1,-0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::NegativeSimilarity { row: 2, column: 3, .. }));
        let err = read_similarity_csv("r1\np1,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, column: 2, .. }));
    }

    #[test]
    fn bids_mapping() {
        let csv = "paper,reviewer,level\np1,r1,yes\np1,r2,conflict\np2,r2,maybe\n";
        let t = read_bids(csv.as_bytes(), &LevelMap::default()).unwrap();
        assert_eq!(t.sim, array![[1.0, 0.0], [0.25, 0.5]]);
        let err = read_bids("p1,r1,eager\n".as_bytes(), &LevelMap::default()).unwrap_err();
        assert!(matches!(err, Error::UnknownLevel { row: 1, .. }));
    }

    #[test]
    fn level_map_override() {
        let m = LevelMap::parse("yes=2, no=0.1").unwrap();
        assert_eq!(m.value("YES"), Some(2.0));
        assert_eq!(m.missing, "no");
        let t = read_bids("p1,r1,yes\np2,r2,yes\n".as_bytes(), &m).unwrap();
        assert_eq!(t.sim, array![[2.0, 0.1], [0.1, 2.0]]);
        assert!(LevelMap::parse("yes").is_err());
    }

    #[test]
    fn assignment_round_trip_is_bitwise() {
        let x = FractionalAssignment::new(array![[1.0 / 3.0, 2.0 / 3.0], [0.1 + 0.2, 0.7]]);
        let ids = vec!["a".to_string(), "b".to_string()];
        let mut buf = Vec::new();
        write_assignment_csv(&mut buf, &x, &ids, &ids).unwrap();
        let y = read_assignment_csv(buf.as_slice()).unwrap();
        assert_eq!(x.matrix(), y.matrix());
    }
}
