//! Token-level fix localization toolkit.
//!
//! Given a buggy method in a small Java-like language, the crate predicts
//! which leaf token must change and how (update / delete / insert), using a
//! pointer network that ranks *operation paths*: triples of a leaf token,
//! its root-to-leaf AST path, and a change operator. Around that core model
//! sit two comparison baselines, ranking metrics with k-fold cross
//! validation, a mutation-based corpus generator, and a generate-and-validate
//! repair pipeline driven by the ranked predictions.

pub mod baselines;
pub mod corpus;
pub mod diff;
pub mod eval;
pub mod tensor;
pub mod lang;
pub mod model;
pub mod pipeline;
pub mod repair;
pub mod rng;

pub use diff::{ChangeOperator, OperationPath, PatchRecord};
pub use lang::{AstPath, MethodAst, NodeKind, SyntaxError};
pub use model::{HyperParams, ModelParams, RankedPrediction, Vocab};
