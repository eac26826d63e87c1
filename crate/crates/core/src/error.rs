use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The numerical integrator produced a nonfinite state or exhausted its step budget.
    #[error("integration failure: {0}")]
    Integration(String),

    /// More spikes than the guard cap in a single stroboscopic step.
    #[error("runaway spiking: more than {cap} spikes in one period")]
    Runaway { cap: usize },

    /// A root solve found no admissible solution.
    #[error("not found: {0}")]
    NotFound(String),

    /// A numeric failure tied to one parameter node of a sweep or scan.
    #[error("at {node}: {source}")]
    AtNode {
        node: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, node: impl Into<String>) -> Self {
        Error::AtNode {
            node: node.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
