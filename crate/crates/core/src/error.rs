use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("validity error: {0}")]
    Validity(String),

    /// The operator handed to a solve has a (numerically) vanishing eigenvalue
    /// or singular value. `degree` is set when the offending mode is a single
    /// spherical-harmonic degree of a constant-coefficient operator.
    #[error("singular operator: smallest {smallest:e} vs largest {largest:e}{}", degree_suffix(.degree))]
    SingularOperator {
        smallest: f64,
        largest: f64,
        degree: Option<usize>,
    },
}

fn degree_suffix(degree: &Option<usize>) -> String {
    match degree {
        Some(l) => format!(" at degree l={l}"),
        None => String::new(),
    }
}
