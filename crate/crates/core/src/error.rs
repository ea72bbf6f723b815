use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    // ingestion / panel
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("unbalanced panel: region `{region}` has no row for year {year}")]
    UnbalancedPanel { region: String, year: i32 },
    #[error("non-numeric cell at region `{region}`, year {year}, column `{column}`: {value:?}")]
    NonNumericCell {
        region: String,
        year: i32,
        column: String,
        value: String,
    },
    #[error("duplicate row for region `{region}`, year {year}")]
    DuplicateRow { region: String, year: i32 },
    #[error("log transform of `{variable}` needs positive values; region `{region}`, year {year} has {value}")]
    NonPositiveForLog {
        variable: String,
        region: String,
        year: i32,
        value: f64,
    },
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid panel: {0}")]
    InvalidPanel(String),

    // estimators
    #[error("design matrix is rank deficient; collinear columns: {}", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },
    #[error("too few observations: {0}")]
    TooFewObservations(String),
    #[error("restriction covariance is singular for group [{}]", .group.join(", "))]
    SingularRestrictionCovariance { group: Vec<String> },
    #[error("Wald test inapplicable: {0}")]
    TestInapplicable(String),
    #[error("unknown coefficient `{0}`")]
    UnknownCoefficient(String),

    // long run / cointegration
    #[error("cointegration test needs at least {required} periods per region, got {actual}")]
    InsufficientTimeLength { required: usize, actual: usize },
    #[error("no adjustment constants for {regressors} regressors ({variant})")]
    MissingAdjustmentConstants { regressors: usize, variant: String },

    // growth model
    #[error("estimation window too short: {0}")]
    WindowTooShort(String),
    #[error("period bin {start}-{end} has no usable rows")]
    EmptyPeriodBin { start: i32, end: i32 },

    // forecasting
    #[error("national series `{series}` has no value for year {year}")]
    MissingNationalValue { series: String, year: i32 },
    #[error("extrapolation rule {rule} does not apply to variable `{variable}`")]
    RuleVariableMismatch { rule: String, variable: String },
    #[error("missing regressor `{column}` for region `{region}`, year {year}")]
    MissingRegressor { region: String, year: i32, column: String },
    #[error("forecast read regional observation `{variable}` dated {year} after in-sample end {cutoff}")]
    ProvenanceViolation { variable: String, year: i32, cutoff: i32 },

    // decomposition
    #[error("missing channel coefficient `{0}`")]
    MissingChannelCoefficient(String),
    #[error("forecast audit trail incomplete: {0}")]
    AuditTrailIncomplete(String),

    // evaluation / synthetic
    #[error("unstable data-generating process: {0}")]
    UnstableConfig(String),
    #[error("model and benchmark windows do not overlap: {0}")]
    WindowMismatch(String),

    // configuration and pipeline
    #[error("config error in {file}, field `{field}`: {message}")]
    Config {
        file: String,
        field: String,
        message: String,
    },
    #[error("missing pipeline artifact {0}; run the upstream command first")]
    MissingArtifact(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
