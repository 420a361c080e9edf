//! Core of the LoCoML pipeline orchestrator: typed inference-pipeline
//! graphs, the edge rule engine, the model hub, the pipeline repository and
//! the executor.

pub mod executor;
pub mod graph;
pub mod hub;
pub mod repository;
pub mod rules;
mod store;

pub use executor::{
    apply_adapter, compute_overhead, AdapterSpec, ExecError, ExecutionOutput, ExecutionTrace, Executor, ExecutorConfig,
    InvokeError, NodeFailureCause, NodeTiming, OverheadSummary, Payload, Transform,
};
pub use graph::{
    topological_order, validate_pipeline, DataKind, Edge, EdgeRejection, GraphError, Node, NodeKind, PipelineGraph,
    ValidationReport, Violation,
};
pub use hub::{Backend, HubError, ModelEntry, ModelFilter, ModelHub, RequestTemplate};
pub use repository::{PipelineRepository, PipelineSummary, RepositoryError, SavedPipeline};
pub use rules::{
    bhashini_ruleset, bhashini_ruleset_with_catalog, can_edge_exist, evaluate_rule, LanguagePair, LanguageSupport,
    ModelCatalog, Rule, RuleSet,
};
pub use store::StoreError;
