//! The endpoint model: validated domain types for one service operation,
//! plus the inter-parameter dependency semantics used by every downstream
//! pipeline.
//!
//! An endpoint is an 8-tuple of containing class, handler method signature,
//! resource path, HTTP verb, parameters, inter-parameter dependencies,
//! reachable database operations, and response schema. All types are
//! immutable after construction and safe to share across threads; the
//! operations in this module are pure.

mod document;
mod expr;
mod ipd;
mod types;
mod validate;

pub use document::EndpointModelDocument;
pub use expr::{eval_arithmetic, eval_complex, parse_expression, EvalOutcome, Expr};
pub use ipd::{check_constraint, ipd_satisfied, request_satisfies_all, Assignment};
pub use types::{
    normalize_path, path_placeholders, ConstraintKind, CrudKind, DatabaseOperation, Endpoint,
    EndpointId, HttpMethod, InterParamDependency, IpdRelation, ParamKind, Parameter,
    ResponseSchema, ValueConstraint,
};
pub use validate::{validate_endpoint, Violation, ViolationCode};

use thiserror::Error;

/// Errors raised by endpoint-model operations.
#[derive(Debug, Error)]
pub enum ModelError {
    /// `constraint_logic` failed to parse for an Arithmetic or Complex IPD.
    #[error("MALFORMED_LOGIC: {0}")]
    MalformedLogic(String),
}

impl ModelError {
    pub fn code(&self) -> &'static str {
        match self {
            ModelError::MalformedLogic(_) => "MALFORMED_LOGIC",
        }
    }
}
