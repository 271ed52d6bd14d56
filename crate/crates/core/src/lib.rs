//! Synthetic social network generation over a fixed persona roster.
//!
//! The toolkit builds directed friendship networks with four prompt
//! architectures (sequential, global, local, iterative) driven by a
//! text-generation backend — a remote chat-completions endpoint or a
//! deterministic homophily-weighted mock — and analyzes the results:
//! baseline/inbreeding homophily per demographic attribute, topology
//! metrics, classical generator baselines (ER/BA/WS), experiment-matrix
//! orchestration, and fighting-words comparison of nomination reasons.

pub mod backend;
pub mod baselines;
pub mod fightwords;
pub mod generate;
pub mod graph;
pub mod homophily;
pub mod metrics;
pub mod mock;
pub mod parse;
pub mod persona;
pub mod seed;
pub mod study;
pub mod template;

pub use backend::{Backend, BackendError, BackendRequest, HttpBackend};
pub use baselines::{CalibrationTarget, Family};
pub use generate::{GenerationConfig, GenerationResult, Method};
pub use graph::{DirectedNetwork, GraphError, VerificationReport};
pub use homophily::{homophily_profile, HomophilyReport};
pub use metrics::MetricsReport;
pub use mock::{MockBackend, MockPolicy};
pub use parse::TieNomination;
pub use persona::{Attribute, Marginals, Persona, Roster};
pub use study::{Condition, Culture, Language, Study, StudyManifest};
pub use template::{PromptTemplate, TemplateSet};
