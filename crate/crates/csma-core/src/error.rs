use thiserror::Error;

/// Errors produced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate link label `{0}`")]
    DuplicateLabel(String),

    #[error("edge references unknown link label `{0}`")]
    UnknownLabel(String),

    #[error("self-edge on link `{0}`")]
    SelfEdge(String),

    #[error("graph document lists no links")]
    EmptyLinkList,

    #[error("graphs with more than 64 links are not supported (got {0})")]
    TooManyLinks(usize),

    #[error("state enumeration exceeded the cap of {cap} states")]
    TooLarge { cap: usize },

    #[error("malformed graph document: {0}")]
    MalformedDocument(String),

    #[error("state {state} is not feasible for this graph")]
    Infeasible { state: String },

    #[error("countdown overhead must be positive (link {index} has c = {value})")]
    NonPositiveOverhead { index: usize, value: f64 },

    #[error("overhead vector has {got} entries, graph has {want} links")]
    OverheadLength { got: usize, want: usize },

    #[error("overhead map is missing link `{0}`")]
    MissingOverhead(String),

    #[error("distribution support does not match the graph's feasible states")]
    SupportMismatch,

    #[error("invalid duration distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid distribution spec `{spec}`: {reason}")]
    DistributionParse { spec: String, reason: String },

    #[error("inconsistent runtime snapshot: {0}")]
    InconsistentSnapshot(String),

    #[error("link {link} exhausted its recorded draw sequence during replay")]
    ExhaustedDraws { link: usize },

    #[error("stationary solve failed (residual {residual:.3e})")]
    SolveFailed { residual: f64 },

    #[error("invalid fixed-point iterate: x[{index}] = {value}")]
    InvalidPoint { index: usize, value: f64 },

    #[error("invalid staged-chain spec: {0}")]
    InvalidStagedSpec(String),

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
