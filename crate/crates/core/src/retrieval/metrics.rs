use std::collections::BTreeMap;

use super::{Pose, RetrievalError};

/// Evaluation thresholds. `epsilon` is in the same unit as the poses.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub epsilon: f64,
    pub recall_ns: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            epsilon: 5.0,
            recall_ns: vec![1, 5, 10, 20],
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<(), RetrievalError> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(RetrievalError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.recall_ns.is_empty() || self.recall_ns.contains(&0) {
            return Err(RetrievalError::InvalidConfig(
                "recall N values must be non-empty and at least 1".into(),
            ));
        }
        if self.recall_ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(RetrievalError::InvalidConfig(
                "recall N values must be strictly ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Database ids retrieved for one query, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRanking {
    pub query_id: String,
    pub ranked_ids: Vec<String>,
}

fn pose_of<'a>(poses: &'a BTreeMap<String, Pose>, id: &str) -> Result<&'a Pose, RetrievalError> {
    poses
        .get(id)
        .ok_or_else(|| RetrievalError::MissingPose(id.to_owned()))
}

/// Relevance flag of every ranked entry.
fn relevance(
    q: &QueryRanking,
    query_poses: &BTreeMap<String, Pose>,
    db_poses: &BTreeMap<String, Pose>,
    epsilon: f64,
) -> Result<Vec<bool>, RetrievalError> {
    let qp = pose_of(query_poses, &q.query_id)?;
    q.ranked_ids
        .iter()
        .map(|id| Ok(pose_of(db_poses, id)?.distance(qp) <= epsilon))
        .collect()
}

/// Percentage of queries with at least one database entry within
/// `epsilon` among their first N results, for every N in `recall_ns`.
pub fn recall_at_n(
    run: &[QueryRanking],
    query_poses: &BTreeMap<String, Pose>,
    db_poses: &BTreeMap<String, Pose>,
    cfg: &EvalConfig,
) -> Result<BTreeMap<usize, f64>, RetrievalError> {
    cfg.validate()?;
    if run.is_empty() {
        return Err(RetrievalError::NoQueries);
    }
    let mut first_hits = Vec::with_capacity(run.len());
    for q in run {
        let rel = relevance(q, query_poses, db_poses, cfg.epsilon)?;
        first_hits.push(rel.iter().position(|&r| r));
    }
    Ok(cfg
        .recall_ns
        .iter()
        .map(|&n| {
            let hits = first_hits
                .iter()
                .filter(|h| matches!(h, Some(r) if *r < n))
                .count();
            (n, 100.0 * hits as f64 / run.len() as f64)
        })
        .collect())
}

/// Non-interpolated average precision of one ranking, normalized by the
/// number of relevant database entries `total_relevant`.
pub fn average_precision(relevant: &[bool], total_relevant: usize) -> f64 {
    if total_relevant == 0 {
        return 0.0;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, _) in relevant.iter().enumerate().filter(|(_, &r)| r) {
        hits += 1;
        sum += hits as f64 / (i + 1) as f64;
    }
    sum / total_relevant as f64
}

/// Mean average precision in percent. Queries with no database entry
/// within `epsilon` are left out of the mean.
pub fn mean_average_precision(
    run: &[QueryRanking],
    query_poses: &BTreeMap<String, Pose>,
    db_poses: &BTreeMap<String, Pose>,
    cfg: &EvalConfig,
) -> Result<f64, RetrievalError> {
    cfg.validate()?;
    if run.is_empty() {
        return Err(RetrievalError::NoQueries);
    }
    let mut sum = 0.0;
    let mut counted = 0usize;
    for q in run {
        let rel = relevance(q, query_poses, db_poses, cfg.epsilon)?;
        let qp = pose_of(query_poses, &q.query_id)?;
        let total = db_poses
            .values()
            .filter(|p| p.distance(qp) <= cfg.epsilon)
            .count();
        if total == 0 {
            continue;
        }
        sum += average_precision(&rel, total);
        counted += 1;
    }
    if counted == 0 {
        return Err(RetrievalError::NoRelevantAnywhere);
    }
    Ok(100.0 * sum / counted as f64)
}
