use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A row of an input file failed validation. `row` is 1-based and counts
    /// data rows only (the header is not row 1).
    #[error("row {row}, field `{field}`: {message}")]
    InvalidRow {
        row: usize,
        field: &'static str,
        message: String,
    },

    #[error("input contains no data rows")]
    EmptyInput,

    #[error("invalid record: {0}")]
    InvalidRecord(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Gini is undefined when total income is zero.
    #[error("Gini coefficient is undefined: total income is zero")]
    UndefinedGini,

    #[error("singular design: column `{column}` is linearly dependent on the preceding columns")]
    SingularDesign { column: String },

    #[error("insufficient data: {n_obs} observations for {n_params} parameters")]
    InsufficientData { n_obs: usize, n_params: usize },

    #[error("degenerate response: total sum of squares is zero")]
    DegenerateResponse,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")]
    NoConvergence { a: f64, b: f64, x: f64 },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
