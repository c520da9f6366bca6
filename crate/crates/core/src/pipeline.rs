//! Label map to image descriptor, end to end.

use rayon::prelude::*;
use thiserror::Error;

use crate::edges::{extract_edges, EdgeExtractionConfig, SemanticEdge};
use crate::labelmap::{clean, CleanupConfig, LabelMap, LabelMapError};
use crate::matching::ImageDescriptor;
use crate::wavelet::{describe_semantic_edge, WaveletConfig, WaveletError};

#[derive(Debug, Error)]
pub enum DescribeError {
    #[error(transparent)]
    LabelMap(#[from] LabelMapError),
    #[error(transparent)]
    Wavelet(#[from] WaveletError),
    #[error("no edge survived filtering")]
    NoEdges,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PipelineConfig {
    pub cleanup: CleanupConfig,
    pub edges: EdgeExtractionConfig,
    pub wavelet: WaveletConfig,
}

/// Cleans the map and returns its filtered, reconnected semantic edges.
pub fn label_map_edges(
    map: &LabelMap,
    cfg: &PipelineConfig,
) -> Result<Vec<SemanticEdge>, DescribeError> {
    let cleaned = clean(map, &cfg.cleanup)?;
    Ok(extract_edges(&cleaned, &cfg.edges))
}

/// One wavelet descriptor per edge. `frame` is the `(width, height)` of the
/// source map.
pub fn describe_edges(
    image_id: impl Into<String>,
    edges: &[SemanticEdge],
    frame: (usize, usize),
    cfg: &WaveletConfig,
) -> Result<ImageDescriptor, DescribeError> {
    cfg.validate()?;
    if edges.is_empty() {
        return Err(DescribeError::NoEdges);
    }
    let descriptors = edges
        .iter()
        .map(|e| describe_semantic_edge(e, frame, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ImageDescriptor::new(image_id, descriptors))
}

/// Cleanup, edge extraction and one wavelet descriptor per edge.
pub fn describe_label_map(
    image_id: impl Into<String>,
    map: &LabelMap,
    cfg: &PipelineConfig,
) -> Result<ImageDescriptor, DescribeError> {
    cfg.wavelet.validate()?;
    let edges = label_map_edges(map, cfg)?;
    describe_edges(image_id, &edges, (map.width(), map.height()), &cfg.wavelet)
}

/// Describes many maps in parallel; results keep the input order.
pub fn describe_all(
    maps: &[(String, LabelMap)],
    cfg: &PipelineConfig,
) -> Vec<Result<ImageDescriptor, DescribeError>> {
    maps.par_iter()
        .map(|(id, map)| describe_label_map(id.clone(), map, cfg))
        .collect()
}
