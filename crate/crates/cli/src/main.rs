mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use wasabi::labelmap::ClassId;

use crate::config::PipelineOverrides;

/// Semantic-edge wavelet descriptors for place recognition.
///
/// Settings come from built-in defaults, then the `--config` file, then
/// command-line flags. Exit status is 0 on success, 1 when nothing could be
/// processed and 2 when some images were skipped.
#[derive(Parser, Debug)]
#[command(name = "wasabi", version)]
struct Cli {
    /// TOML file with `[cleanup]`, `[edges]`, `[wavelet]`, `[matching]` and
    /// `[eval]` sections plus a top-level `jobs` key.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Worker threads [default: number of CPUs].
    #[arg(long, short = 'j', global = true)]
    jobs: Option<usize>,

    /// More log output (-v info, -vv debug). `RUST_LOG` takes precedence.
    #[arg(long, short = 'v', global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Describe label maps and store the descriptors in a database file.
    Describe(DescribeArgs),
    /// Rank database images for each query label map.
    Retrieve(RetrieveArgs),
    /// Compute recall@N and mAP from a ranking file and ground-truth poses.
    Eval(EvalArgs),
    /// Render a synthetic corpus from a corpus spec file.
    Synth(SynthArgs),
}

/// Options of the label map to descriptor pipeline.
#[derive(Args, Debug, Clone)]
struct PipelineArgs {
    /// Connected regions smaller than this many pixels are merged into a
    /// neighbouring label [default: 50].
    #[arg(long)]
    min_blob_size: Option<usize>,

    /// Classes removed and filled from the nearest remaining label, e.g.
    /// `--dynamic-classes 11,12` [default: none].
    #[arg(long, value_delimiter = ',', value_name = "IDS")]
    dynamic_classes: Option<Vec<ClassId>>,

    /// Pixel connectivity of regions during cleanup, 4 or 8 [default: 4].
    #[arg(long)]
    connectivity: Option<u8>,

    /// Edges with fewer points are dropped [default: 50].
    #[arg(long)]
    min_edge_size: Option<usize>,

    /// Same-class edge ends at most this many pixels apart are joined
    /// [default: 5].
    #[arg(long)]
    min_neighbour_gap: Option<f64>,

    /// Points sampled along each edge; descriptors have twice as many
    /// dimensions [default: 64].
    #[arg(long)]
    resample_count: Option<usize>,

    /// Haar decomposition levels [default: 1].
    #[arg(long)]
    levels: Option<u32>,

    /// Scale coordinates by the image size before describing edges.
    #[arg(long)]
    normalize_coordinates: bool,
}

impl PipelineArgs {
    fn overrides(&self) -> PipelineOverrides {
        PipelineOverrides {
            min_blob_size: self.min_blob_size,
            dynamic_classes: self.dynamic_classes.clone(),
            connectivity: self.connectivity,
            min_edge_size: self.min_edge_size,
            min_neighbour_gap: self.min_neighbour_gap,
            resample_count: self.resample_count,
            levels: self.levels,
            normalize_coordinates: self.normalize_coordinates,
        }
    }
}

#[derive(Args, Debug)]
struct DescribeArgs {
    /// Label map files (PNG/PGM, or `.txt`/`.grid` text grids) or
    /// directories of them. The image id is the file name without extension.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,

    /// Output database file.
    #[arg(long, short)]
    out: PathBuf,

    /// Poses CSV (`id,x,y,z`) stored alongside the descriptors.
    #[arg(long)]
    poses: Option<PathBuf>,

    /// Write the extracted edges of every image to `<DIR>/<id>.edges.txt`.
    #[arg(long, value_name = "DIR")]
    dump_edges: Option<PathBuf>,

    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct RetrieveArgs {
    /// Query label map files or directories.
    #[arg(required = true)]
    queries: Vec<PathBuf>,

    /// Database file written by `describe`.
    #[arg(long)]
    db: PathBuf,

    /// Output ranking CSV (`query_id,rank,db_id,distance`).
    #[arg(long, short)]
    out: PathBuf,

    /// Results per query [default: the whole database].
    #[arg(long, short)]
    k: Option<usize>,

    /// Distance added per unmatched edge before averaging [default: 0].
    #[arg(long)]
    unmatched_penalty: Option<f64>,

    #[command(flatten)]
    pipeline: PipelineArgs,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Ranking CSV written by `retrieve`.
    ranking: PathBuf,

    /// Poses CSV of the database images.
    #[arg(long)]
    db_poses: PathBuf,

    /// Poses CSV of the query images.
    #[arg(long)]
    query_poses: PathBuf,

    /// A database image matches a query when their poses are at most this
    /// far apart [default: 5].
    #[arg(long)]
    epsilon: Option<f64>,

    /// Cut-offs N for recall@N [default: 1,5,10,20].
    #[arg(long, value_delimiter = ',', value_name = "NS")]
    recall_n: Option<Vec<usize>>,

    /// Report CSV (`metric,N,value`); the summary table always goes to
    /// standard output.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Corpus spec (TOML).
    spec: PathBuf,

    /// Output directory; receives `db/`, `queries/`, `db_poses.csv` and
    /// `query_poses.csv`.
    #[arg(long, short)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match commands::run(cli) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
