pub mod edges;
pub mod labelmap;
pub mod matching;
pub mod pipeline;
pub mod retrieval;
pub mod synth;
pub mod wavelet;
