use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use rayon::prelude::*;
use wasabi::edges::write_edges;
use wasabi::labelmap::io::read_label_map;
use wasabi::matching::ImageDescriptor;
use wasabi::pipeline::{describe_edges, label_map_edges, PipelineConfig};
use wasabi::retrieval::csv_io::{
    format_summary, read_poses, read_rankings, write_rankings, write_report, EvalReport,
};
use wasabi::retrieval::{mean_average_precision, recall_at_n, RetrievalDatabase};
use wasabi::synth::{write_corpus, CorpusSpec};

use crate::config::{eval_config, match_config, pipeline_config, FileConfig};
use crate::{Cli, Command, DescribeArgs, EvalArgs, RetrieveArgs, SynthArgs};

/// Outcome of a command that did not fail outright.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Success,
    /// Some inputs were skipped.
    Partial,
}

impl From<Status> for std::process::ExitCode {
    fn from(s: Status) -> Self {
        match s {
            Status::Success => Self::SUCCESS,
            Status::Partial => Self::from(2),
        }
    }
}

const MAP_EXTENSIONS: &[&str] = &["png", "pgm", "pnm", "txt", "grid"];

pub fn run(cli: Cli) -> Result<Status> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    if let Some(jobs) = cli.jobs.or(file.jobs) {
        if jobs == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring the worker pool")?;
    }
    match cli.command {
        Command::Describe(args) => describe(&file, args),
        Command::Retrieve(args) => retrieve(&file, args),
        Command::Eval(args) => eval(&file, args),
        Command::Synth(args) => synth(args),
    }
}

/// Expands directories and pairs every label map with its image id, sorted
/// by id.
fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<(String, PathBuf)>> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            for entry in fs::read_dir(p).with_context(|| format!("listing {}", p.display()))? {
                let path = entry?.path();
                let known = path
                    .extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| MAP_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
                if path.is_file() && known {
                    files.push(path);
                }
            }
        } else {
            files.push(p.clone());
        }
    }
    let mut by_id = BTreeMap::new();
    for path in files {
        let id = path
            .file_stem()
            .and_then(|s| s.to_str())
            .with_context(|| format!("no usable file name in {}", path.display()))?
            .to_owned();
        if let Some(prev) = by_id.insert(id.clone(), path.clone()) {
            bail!(
                "image id `{id}` used by both {} and {}",
                prev.display(),
                path.display()
            );
        }
    }
    if by_id.is_empty() {
        bail!("no label maps found");
    }
    Ok(by_id.into_iter().collect())
}

/// Describes every input in parallel; failures are logged and dropped.
fn describe_inputs(
    inputs: &[(String, PathBuf)],
    cfg: &PipelineConfig,
    dump_edges: Option<&Path>,
) -> Result<(Vec<ImageDescriptor>, usize)> {
    if let Some(dir) = dump_edges {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let results: Vec<Result<ImageDescriptor>> = inputs
        .par_iter()
        .map(|(id, path)| {
            let map =
                read_label_map(path).with_context(|| format!("reading {}", path.display()))?;
            let edges = label_map_edges(&map, cfg)?;
            if let Some(dir) = dump_edges {
                let out = dir.join(format!("{id}.edges.txt"));
                let mut w = BufWriter::new(
                    File::create(&out).with_context(|| format!("creating {}", out.display()))?,
                );
                write_edges(&edges, &mut w)?;
                w.flush()?;
            }
            Ok(describe_edges(
                id.clone(),
                &edges,
                (map.width(), map.height()),
                &cfg.wavelet,
            )?)
        })
        .collect();
    let mut described = Vec::with_capacity(results.len());
    let mut skipped = 0;
    for ((id, path), r) in inputs.iter().zip(results) {
        match r {
            Ok(d) => {
                info!("{id}: {} edges", d.edge_count());
                described.push(d);
            }
            Err(e) => {
                warn!("skipping {} ({}): {e:#}", id, path.display());
                skipped += 1;
            }
        }
    }
    if described.is_empty() {
        bail!("none of the {} inputs could be described", inputs.len());
    }
    Ok((described, skipped))
}

fn status(skipped: usize) -> Status {
    if skipped == 0 {
        Status::Success
    } else {
        Status::Partial
    }
}

fn describe(file: &FileConfig, args: DescribeArgs) -> Result<Status> {
    let cfg = pipeline_config(file, &args.pipeline.overrides())?;
    let inputs = collect_inputs(&args.inputs)?;
    let poses = match &args.poses {
        Some(p) => Some(read_poses(
            File::open(p).with_context(|| format!("opening {}", p.display()))?,
        )?),
        None => None,
    };
    let (described, skipped) = describe_inputs(&inputs, &cfg, args.dump_edges.as_deref())?;
    let db = RetrievalDatabase::build(described, poses.as_ref())?;
    db.save(&args.out)
        .with_context(|| format!("writing {}", args.out.display()))?;
    info!("wrote {} images to {}", db.len(), args.out.display());
    Ok(status(skipped))
}

fn retrieve(file: &FileConfig, args: RetrieveArgs) -> Result<Status> {
    let cfg = pipeline_config(file, &args.pipeline.overrides())?;
    let match_cfg = match_config(file, args.unmatched_penalty)?;
    let db = RetrievalDatabase::load(&args.db)
        .with_context(|| format!("loading {}", args.db.display()))?;
    let k = args.k.unwrap_or(db.len());
    if k == 0 {
        bail!("-k must be at least 1");
    }
    let inputs = collect_inputs(&args.queries)?;
    let (queries, skipped) = describe_inputs(&inputs, &cfg, None)?;
    let results: Vec<_> = queries
        .par_iter()
        .map(|q| (q.image_id.clone(), db.query(q, k, &match_cfg)))
        .collect();
    let out =
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_rankings(BufWriter::new(out), &results)?;
    info!(
        "ranked {} queries against {} images",
        results.len(),
        db.len()
    );
    Ok(status(skipped))
}

fn eval(file: &FileConfig, args: EvalArgs) -> Result<Status> {
    let cfg = eval_config(file, args.epsilon, args.recall_n)?;
    let open = |p: &Path| File::open(p).with_context(|| format!("opening {}", p.display()));
    let run = read_rankings(open(&args.ranking)?)?;
    let db_poses = read_poses(open(&args.db_poses)?)?;
    let query_poses = read_poses(open(&args.query_poses)?)?;
    let report = EvalReport {
        recall: recall_at_n(&run, &query_poses, &db_poses, &cfg)?,
        mean_average_precision: mean_average_precision(&run, &query_poses, &db_poses, &cfg)?,
        query_count: run.len(),
    };
    if let Some(out) = &args.out {
        let f = File::create(out).with_context(|| format!("creating {}", out.display()))?;
        write_report(BufWriter::new(f), &report)?;
    }
    io::stdout().write_all(format_summary(&report, &cfg).as_bytes())?;
    Ok(Status::Success)
}

fn synth(args: SynthArgs) -> Result<Status> {
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let spec =
        CorpusSpec::from_toml(&text).with_context(|| format!("parsing {}", args.spec.display()))?;
    let summary = write_corpus(&spec, &args.out)?;
    if summary.database.is_empty() {
        bail!("the corpus spec defines no scenes");
    }
    info!(
        "wrote {} database and {} query maps to {}",
        summary.database.len(),
        summary.queries.len(),
        args.out.display()
    );
    Ok(Status::Success)
}
