//! Plain-text formats around retrieval: poses, rankings and metric reports.
//!
//! * poses: header `id,x,y,z`, one row per image
//! * rankings: header `query_id,rank,db_id,distance`; `rank` starts at 1 and
//!   an incomparable distance is written as `inf`
//! * reports: header `metric,N,value`, e.g. `recall,5,87.5` and `mAP,,61.25`

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{EvalConfig, Pose, QueryRanking, RankedMatch, RetrievalError};

#[derive(Serialize, Deserialize)]
struct PoseRow {
    id: String,
    x: f64,
    y: f64,
    z: f64,
}

pub fn read_poses<R: Read>(reader: R) -> Result<BTreeMap<String, Pose>, RetrievalError> {
    let mut poses = BTreeMap::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: PoseRow = row?;
        let pose = Pose::new(row.x, row.y, row.z);
        if !pose.is_finite() {
            return Err(RetrievalError::Format(format!(
                "non-finite pose for `{}`",
                row.id
            )));
        }
        if poses.insert(row.id.clone(), pose).is_some() {
            return Err(RetrievalError::DuplicateId(row.id));
        }
    }
    Ok(poses)
}

pub fn write_poses<W: Write>(
    writer: W,
    poses: &BTreeMap<String, Pose>,
) -> Result<(), RetrievalError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(["id", "x", "y", "z"])?;
    for (id, p) in poses {
        w.serialize(PoseRow {
            id: id.clone(),
            x: p.x,
            y: p.y,
            z: p.z,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RankingRow {
    query_id: String,
    rank: usize,
    db_id: String,
    distance: String,
}

/// Writes the ranked hits of each query, in the given order.
pub fn write_rankings<W: Write>(
    writer: W,
    results: &[(String, Vec<RankedMatch>)],
) -> Result<(), RetrievalError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    w.write_record(["query_id", "rank", "db_id", "distance"])?;
    for (query_id, hits) in results {
        for (i, hit) in hits.iter().enumerate() {
            w.serialize(RankingRow {
                query_id: query_id.clone(),
                rank: i + 1,
                db_id: hit.image_id.clone(),
                distance: hit.distance.to_string(),
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a ranking file back into per-query rankings, ordered by query id.
/// Rows of one query may appear in any order but their ranks must be
/// exactly 1..=k.
pub fn read_rankings<R: Read>(reader: R) -> Result<Vec<QueryRanking>, RetrievalError> {
    let mut by_query: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
    for row in csv::Reader::from_reader(reader).deserialize() {
        let row: RankingRow = row?;
        if row.distance != "inf" && row.distance.parse::<f64>().is_err() {
            return Err(RetrievalError::Format(format!(
                "bad distance `{}` for query `{}`",
                row.distance, row.query_id
            )));
        }
        by_query
            .entry(row.query_id)
            .or_default()
            .push((row.rank, row.db_id));
    }
    by_query
        .into_iter()
        .map(|(query_id, mut rows)| {
            rows.sort_by_key(|(rank, _)| *rank);
            if rows.iter().enumerate().any(|(i, (rank, _))| *rank != i + 1) {
                return Err(RetrievalError::Format(format!(
                    "ranks of query `{query_id}` are not 1..={}",
                    rows.len()
                )));
            }
            Ok(QueryRanking {
                query_id,
                ranked_ids: rows.into_iter().map(|(_, id)| id).collect(),
            })
        })
        .collect()
}

/// Metric values of one evaluation run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub recall: BTreeMap<usize, f64>,
    pub mean_average_precision: f64,
    pub query_count: usize,
}

pub fn write_report<W: Write>(writer: W, report: &EvalReport) -> Result<(), RetrievalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["metric", "N", "value"])?;
    for (n, v) in &report.recall {
        w.write_record(["recall", &n.to_string(), &v.to_string()])?;
    }
    w.write_record(["mAP", "", &report.mean_average_precision.to_string()])?;
    w.flush()?;
    Ok(())
}

/// Human-readable summary of a report.
pub fn format_summary(report: &EvalReport, cfg: &EvalConfig) -> String {
    let mut out = format!(
        "{} queries, epsilon = {}\n{:<10} {:>8}\n",
        report.query_count, cfg.epsilon, "metric", "%"
    );
    for (n, v) in &report.recall {
        out.push_str(&format!("{:<10} {:>8.2}\n", format!("recall@{n}"), v));
    }
    out.push_str(&format!(
        "{:<10} {:>8.2}\n",
        "mAP", report.mean_average_precision
    ));
    out
}
