use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("row {row}: cannot parse {field} value {value:?}")]
    Parse {
        row: usize,
        field: String,
        value: String,
    },

    #[error("duplicate year {0}")]
    DuplicateYear(i32),

    #[error("column {0} has no values; column-mean imputation is undefined")]
    EmptyColumn(String),

    #[error("dataset has {0} missing cells; impute before use")]
    MissingValues(usize),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("invalid split: {0}")]
    InvalidSplit(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("label {0} is outside {{0, 1}}")]
    InvalidLabel(u8),

    #[error("training set contains a single class ({0}); both classes are required")]
    SingleClass(u8),

    #[error("invalid hyperparameter {name}: {reason}")]
    Hyperparameter { name: &'static str, reason: String },

    #[error("{features} features exceeds the exhaustive enumeration limit of {limit}; use kernel_shap")]
    TooManyFeatures { features: usize, limit: usize },

    #[error("coalition budget {budget} is below the minimum {minimum}")]
    SampleBudget { budget: usize, minimum: usize },

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("unsupported model document version {0}")]
    Version(u32),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
