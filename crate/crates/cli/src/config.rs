//! Run configuration: built-in defaults, overridden by an optional TOML file,
//! overridden by command-line flags.

use std::collections::BTreeSet;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use wasabi::edges::EdgeExtractionConfig;
use wasabi::labelmap::{ClassId, CleanupConfig, Connectivity};
use wasabi::matching::MatchConfig;
use wasabi::pipeline::PipelineConfig;
use wasabi::retrieval::EvalConfig;
use wasabi::wavelet::WaveletConfig;

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub cleanup: CleanupSection,
    #[serde(default)]
    pub edges: EdgesSection,
    #[serde(default)]
    pub wavelet: WaveletSection,
    #[serde(default)]
    pub matching: MatchingSection,
    #[serde(default)]
    pub eval: EvalSection,
    pub jobs: Option<usize>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CleanupSection {
    pub min_blob_size: Option<usize>,
    pub dynamic_classes: Option<Vec<ClassId>>,
    pub connectivity: Option<u8>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgesSection {
    pub min_edge_size: Option<usize>,
    pub min_neighbour_gap: Option<f64>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveletSection {
    pub resample_count: Option<usize>,
    pub levels: Option<u32>,
    pub normalize_coordinates: Option<bool>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchingSection {
    pub unmatched_penalty: Option<f64>,
}

#[derive(Debug, Default, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub epsilon: Option<f64>,
    pub recall_ns: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub fn connectivity(n: u8) -> Result<Connectivity> {
    match n {
        4 => Ok(Connectivity::Four),
        8 => Ok(Connectivity::Eight),
        other => bail!("connectivity must be 4 or 8, got {other}"),
    }
}

/// Flag values of the pipeline options; `None` means "not given".
#[derive(Debug, Default, Clone, PartialEq)]
pub struct PipelineOverrides {
    pub min_blob_size: Option<usize>,
    pub dynamic_classes: Option<Vec<ClassId>>,
    pub connectivity: Option<u8>,
    pub min_edge_size: Option<usize>,
    pub min_neighbour_gap: Option<f64>,
    pub resample_count: Option<usize>,
    pub levels: Option<u32>,
    pub normalize_coordinates: bool,
}

pub fn pipeline_config(file: &FileConfig, flags: &PipelineOverrides) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();

    let c = &file.cleanup;
    let min_blob_size = flags.min_blob_size.or(c.min_blob_size);
    let dynamic = flags
        .dynamic_classes
        .as_ref()
        .or(c.dynamic_classes.as_ref());
    let conn = flags.connectivity.or(c.connectivity);
    cfg.cleanup = CleanupConfig {
        min_blob_size: min_blob_size.unwrap_or(cfg.cleanup.min_blob_size),
        dynamic_classes: dynamic.map_or_else(BTreeSet::new, |d| d.iter().copied().collect()),
        connectivity: conn.map(connectivity).transpose()?.unwrap_or_default(),
    };

    let e = &file.edges;
    cfg.edges = EdgeExtractionConfig {
        min_edge_size: flags
            .min_edge_size
            .or(e.min_edge_size)
            .unwrap_or(cfg.edges.min_edge_size),
        min_neighbour_gap: flags
            .min_neighbour_gap
            .or(e.min_neighbour_gap)
            .unwrap_or(cfg.edges.min_neighbour_gap),
    };
    if cfg.edges.min_edge_size < 2 {
        bail!("min edge size must be at least 2");
    }
    if !(cfg.edges.min_neighbour_gap.is_finite() && cfg.edges.min_neighbour_gap >= 0.0) {
        bail!("min neighbour gap must be a non-negative number");
    }

    let w = &file.wavelet;
    cfg.wavelet = WaveletConfig {
        resample_count: flags
            .resample_count
            .or(w.resample_count)
            .unwrap_or(cfg.wavelet.resample_count),
        levels: flags.levels.or(w.levels).unwrap_or(cfg.wavelet.levels),
        normalize_coordinates: flags.normalize_coordinates
            || w.normalize_coordinates.unwrap_or(false),
    };
    cfg.wavelet.validate()?;
    Ok(cfg)
}

pub fn match_config(file: &FileConfig, unmatched_penalty: Option<f64>) -> Result<MatchConfig> {
    let penalty = unmatched_penalty
        .or(file.matching.unmatched_penalty)
        .unwrap_or(0.0);
    if !(penalty.is_finite() && penalty >= 0.0) {
        bail!("unmatched penalty must be a non-negative number");
    }
    Ok(MatchConfig {
        unmatched_penalty: penalty,
    })
}

pub fn eval_config(
    file: &FileConfig,
    epsilon: Option<f64>,
    recall_ns: Option<Vec<usize>>,
) -> Result<EvalConfig> {
    let defaults = EvalConfig::default();
    let cfg = EvalConfig {
        epsilon: epsilon.or(file.eval.epsilon).unwrap_or(defaults.epsilon),
        recall_ns: recall_ns
            .or_else(|| file.eval.recall_ns.clone())
            .unwrap_or(defaults.recall_ns),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_without_file_or_flags() {
        let cfg = pipeline_config(&FileConfig::default(), &PipelineOverrides::default()).unwrap();
        assert_eq!(cfg, PipelineConfig::default());
        assert_eq!(cfg.cleanup.min_blob_size, 50);
        assert_eq!(cfg.edges.min_edge_size, 50);
        assert_eq!(cfg.edges.min_neighbour_gap, 5.0);
        assert_eq!(cfg.wavelet.resample_count, 64);
        let eval = eval_config(&FileConfig::default(), None, None).unwrap();
        assert_eq!(eval.recall_ns, [1, 5, 10, 20]);
    }

    #[test]
    fn flags_override_file() {
        let file: FileConfig = toml::from_str(
            r#"
            jobs = 3
            [cleanup]
            min_blob_size = 10
            dynamic_classes = [7, 8]
            connectivity = 8
            [edges]
            min_edge_size = 20
            [eval]
            epsilon = 2.0
            "#,
        )
        .unwrap();
        let flags = PipelineOverrides {
            min_blob_size: Some(30),
            ..Default::default()
        };
        let cfg = pipeline_config(&file, &flags).unwrap();
        assert_eq!(cfg.cleanup.min_blob_size, 30);
        assert_eq!(cfg.cleanup.dynamic_classes, BTreeSet::from([7, 8]));
        assert_eq!(cfg.cleanup.connectivity, Connectivity::Eight);
        assert_eq!(cfg.edges.min_edge_size, 20);
        assert_eq!(cfg.edges.min_neighbour_gap, 5.0);
        assert_eq!(eval_config(&file, None, None).unwrap().epsilon, 2.0);
        assert_eq!(eval_config(&file, Some(9.0), None).unwrap().epsilon, 9.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(toml::from_str::<FileConfig>("[cleanup]\nmin_blobsize = 3").is_err());
        let bad = |o: PipelineOverrides| pipeline_config(&FileConfig::default(), &o).is_err();
        assert!(bad(PipelineOverrides {
            connectivity: Some(6),
            ..Default::default()
        }));
        assert!(bad(PipelineOverrides {
            resample_count: Some(63),
            ..Default::default()
        }));
        assert!(bad(PipelineOverrides {
            min_edge_size: Some(1),
            ..Default::default()
        }));
        assert!(eval_config(&FileConfig::default(), Some(-1.0), None).is_err());
        assert!(match_config(&FileConfig::default(), Some(f64::NAN)).is_err());
    }
}
