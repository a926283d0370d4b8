//! Semi-supervised graph-based projective dependency parsing.
//!
//! The crate is organized around an exact chart engine for projective trees
//! ([`chart`]), a neural arc scorer with hand-written reverse-mode gradients
//! ([`encoder`]), treebank ingestion and evaluation ([`corpus`]), and two
//! semi-supervised trainers: a tree-latent-variable model with an exact
//! arc-decomposed E-step ([`gap`]) and a per-token Gaussian latent-variable
//! model ([`lap`]). [`oracle`] holds brute-force enumeration references used
//! by the self-check command and the test suites.

pub mod chart;
pub mod checkpoint;
pub mod corpus;
pub mod encoder;
pub mod gap;
pub mod lap;
pub mod mat;
pub mod model;
pub mod oracle;
pub mod synth;
pub mod train;

pub use mat::Mat;
pub use model::{Mode, TrainedModel};
