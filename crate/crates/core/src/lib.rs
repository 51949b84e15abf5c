//! Semantic spectral entropy of a text collection.
//!
//! Given `n` texts and a (possibly noisy) pairwise-equivalence judge, this
//! crate builds the judgment graph, spectrally clusters it, and reports the
//! plug-in entropy of the recovered cluster proportions, together with the
//! finite-sample bounds that control how far that estimate can sit from the
//! entropy of the true clusters.
//!
//! The crate is organized around the pipeline:
//!
//! 1. [`oracle`] — the pairwise judge `e(t_i, t_j)`: a simulated
//!    block-model judge, a persistent verdict cache, and a chat-completion
//!    client; adjacency assembly and `(p, q)` estimation.
//! 2. [`graph`] — adjacency matrices, Laplacians, block-model sampling, and
//!    spectral embeddings.
//! 3. [`cluster`] — k-means++ with restarts over embedding rows, label
//!    alignment, and miscluster error.
//! 4. [`entropy`](mod@crate::entropy) — entropy estimators and closed-form
//!    bound evaluators.
//! 5. [`model_selection`] — choosing K by pair-holdout cross-validation.
//! 6. [`corpus`] — synthetic text collections with known ground truth.
//! 7. [`sim`] — the experiment harness and persistent reports.
//!
//! Everything is deterministic given inputs and one explicit 64-bit seed.

pub mod cluster;
pub mod corpus;
pub mod entropy;
pub mod error;
pub mod graph;
pub mod model_selection;
pub mod oracle;
pub mod seed;
pub mod sim;

pub use cluster::{
    align_labels, kmeans_approx, miscluster_error, spectral_cluster, ClusterAssignment,
    KMeansResult, SpectralConfig,
};
pub use entropy::{
    assignment_entropy, entropy, proportions, BoundInputs, EntropyReport, ProbabilityVector,
};
pub use error::{Error, OracleError, Result};
pub use graph::{
    degrees, laplacian, sample_sbm, spectral_embedding, AdjacencyMatrix, Embedding, SbmParams,
    SpectrumVariant,
};
pub use oracle::{EdgeOracle, PromptTemplate, SymmetrizationPolicy};
pub use sim::{run_pipeline, ExperimentConfig, KPolicy, PipelineConfig, PipelineInput, Scenario};
