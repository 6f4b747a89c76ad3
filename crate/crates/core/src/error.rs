use thiserror::Error;

/// Errors shared by all laboratory modules.
#[derive(Debug, Error)]
pub enum Error {
    /// An input fell outside the range an operation supports.
    #[error("{what} = {value} is outside the supported range {range}")]
    OutOfRange {
        what: &'static str,
        value: u64,
        range: &'static str,
    },

    /// Building a sieve would exceed the configured memory guard.
    #[error("sieve limit {requested} exceeds the memory guard {max}; refusing to allocate")]
    SieveGuard { requested: u64, max: u64 },

    /// Not a positive non-square discriminant congruent to 0 or 1 mod 4.
    #[error("{0} is not a valid positive discriminant (need d > 0, d = 0 or 1 mod 4, d non-square)")]
    Domain(u64),

    /// An operation received a form that violates its contract.
    #[error("form ({a}, {b}, {c}) violates the contract: {msg}")]
    Contract {
        a: i64,
        b: i64,
        c: i64,
        msg: &'static str,
    },

    /// A cache file failed to parse.
    #[error("cache parse error at line {line}: {msg}")]
    CacheParse { line: usize, msg: String },

    /// A cache file parsed but its contents are inconsistent.
    #[error("cache integrity error: {msg}")]
    CacheIntegrity { msg: String },

    /// A record that should carry a class number does not.
    #[error("record d = {0} is missing its class number")]
    MissingClassNumber(u64),

    /// Formula-mode class number could not be rounded reliably even after
    /// raising the smoothing parameter.
    #[error("class number rounding unreliable for d = {d}: h_real = {h_real}")]
    UnreliableRounding { d: u64, h_real: f64 },

    /// Adaptive quadrature did not reach the requested accuracy.
    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    /// Parameter validation failure with context.
    #[error("{0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
