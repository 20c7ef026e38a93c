use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised by the engine.
///
/// Variants are grouped by the kind of failure so callers can map them onto
/// exit codes or HTTP statuses: `invalid input` (bad parameters or names),
/// `data` (the data cannot support the request), and `numeric`.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("column not found: {0}")]
    ColumnNotFound(String),
    #[error("duplicate column name: {0}")]
    DuplicateColumn(String),
    #[error("column {name} has {actual} values, expected {expected}")]
    ColumnLength { name: String, expected: usize, actual: usize },
    #[error("group column required but not present")]
    MissingGroupColumn,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("unknown ball id {0}")]
    UnknownBall(usize),
    #[error("column {column}: fewer than 2 non-missing values{}", group_suffix(.group))]
    InsufficientData { column: String, group: Option<String> },
    #[error("no rows retained after removing rows with missing axis values")]
    NoRetainedRows,
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("no observations for {0}")]
    NoObservations(String),
    #[error("rank-deficient design; collinear columns: {}", .0.join(", "))]
    RankDeficient(Vec<String>),
    #[error("need more than {needed} complete rows, have {rows}")]
    TooFewRows { rows: usize, needed: usize },
    #[error("row mismatch: {0}")]
    RowMismatch(String),
}

fn group_suffix(group: &Option<String>) -> String {
    match group {
        Some(g) => alloc::format!(" in group {g}"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures of the numeric routines rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(self, Error::RankDeficient(_))
    }

    /// True for failures where the request itself is malformed.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::ColumnNotFound(_)
                | Error::DuplicateColumn(_)
                | Error::ColumnLength { .. }
                | Error::MissingGroupColumn
                | Error::InvalidParameter(_)
                | Error::IndexOutOfRange { .. }
                | Error::UnknownBall(_)
        )
    }
}
