use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed label `{0}`")]
    MalformedLabel(String),
    #[error("segments not concatenable at index {0}")]
    NotConcatenable(usize),
    #[error("segment {index} has length {len}, below L = {min}")]
    SegmentTooShort { index: usize, len: u64, min: u64 },
    #[error("boundary input lacks a Cauchy certificate")]
    MissingCertificate,
    #[error("mismatched basepoints: {0} vs {1}")]
    BasepointMismatch(String, String),
    #[error("empty family")]
    EmptyFamily,
    #[error("evidence for candidate {index} is {found}, not above B = {required}")]
    EvidenceBelowB { index: usize, found: String, required: String },
    #[error("index mismatch: expected {expected} entries, found {found}")]
    IndexMismatch { expected: usize, found: usize },
    #[error("branch {0} is not large")]
    NotLarge(usize),
    #[error("target is not carried: {0}")]
    NotCarried(String),
    #[error("no model matches the track")]
    NoMatch,
    #[error("surface mismatch: {0} vs {1}")]
    SurfaceMismatch(String, String),
    #[error("insufficient sampling resolution between samples {0} and {1}")]
    Resolution(usize, usize),
    #[error("point is not on the path")]
    OffPath,
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("depth guard {0} exceeded")]
    DepthGuard(usize),
    #[error("need {need} candidates, found {have}")]
    InsufficientCandidates { need: usize, have: usize },
    #[error("duplicate candidate {0}")]
    DuplicateCandidate(String),
    #[error("path provider failed: {0}")]
    Provider(String),
    #[error("backend interval too coarse to decide")]
    Indeterminate,
    #[error("dead end at vertex {0}")]
    DeadEnd(usize),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("depth exhausted before reaching the product bound")]
    DepthExhausted,
    #[error("alphabet collision between edges {0} and {1}")]
    Collision(usize, usize),
    #[error("slope {0} is not {1}-badly approximable")]
    NotBadlyApproximable(String, u64),
    #[error("work limit exceeded: {0}")]
    WorkLimit(String),
    #[error("chart breakdown at sample {0}")]
    ChartBreakdown(usize),
    #[error("not found within resolution; finest gap {0}")]
    NotFound(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable machine-readable tag used in CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::MalformedLabel(_) => "malformed_label",
            Error::NotConcatenable(_) => "not_concatenable",
            Error::SegmentTooShort { .. } => "segment_too_short",
            Error::MissingCertificate => "missing_certificate",
            Error::BasepointMismatch(..) => "basepoint_mismatch",
            Error::EmptyFamily => "empty_family",
            Error::EvidenceBelowB { .. } => "evidence_below_b",
            Error::IndexMismatch { .. } => "index_mismatch",
            Error::NotLarge(_) => "not_large",
            Error::NotCarried(_) => "not_carried",
            Error::NoMatch => "no_match",
            Error::SurfaceMismatch(..) => "surface_mismatch",
            Error::Resolution(..) => "resolution",
            Error::OffPath => "off_path",
            Error::Verification(_) => "verification",
            Error::DepthGuard(_) => "depth_guard",
            Error::InsufficientCandidates { .. } => "insufficient_candidates",
            Error::DuplicateCandidate(_) => "duplicate_candidate",
            Error::Provider(_) => "provider",
            Error::Indeterminate => "indeterminate",
            Error::DeadEnd(_) => "dead_end",
            Error::Hypothesis(_) => "hypothesis",
            Error::DepthExhausted => "depth_exhausted",
            Error::Collision(..) => "collision",
            Error::NotBadlyApproximable(..) => "not_badly_approximable",
            Error::WorkLimit(_) => "work_limit",
            Error::ChartBreakdown(_) => "chart_breakdown",
            Error::NotFound(_) => "not_found",
            Error::Invalid(_) => "invalid",
            Error::Integrity(_) => "integrity",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}
