use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid parameters: {0}")]
    Params(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("gains are not certified (Q is not negative definite); pass --force to run anyway")]
    Uncertified,

    #[error("simulation diverged at t = {t} s")]
    Divergence { t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
