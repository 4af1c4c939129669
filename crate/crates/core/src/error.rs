use thiserror::Error;

/// Errors raised by the expansion pipeline and its oracles.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("leading coefficient {0:e} is below the nonzero threshold")]
    ZeroLeadingCoefficient(f64),
    #[error("square root of a series with odd leading order {0}")]
    OddLeadingOrder(i32),
    #[error("exponential of a series with negative leading order {0}")]
    NegativeOrderExponent(i32),

    #[error("unknown potential `{0}`")]
    UnknownPotential(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("missing decay metadata at the {0} end")]
    MissingDecayMetadata(&'static str),

    #[error("quadrature tolerance not met: {0}")]
    ToleranceNotMet(String),
    #[error("invalid bracket: {0}")]
    InvalidSpec(String),
    #[error("divergent tail: {0}")]
    DivergentTail(String),

    #[error("requested order {requested} exceeds the validity order {valid}")]
    OrderExceedsValidity { requested: i32, valid: i32 },
    #[error("branch of the square root is ambiguous: leading coefficient {0:e}")]
    BranchAmbiguity(f64),
    #[error("no closed form printed for case {case} coefficient g_{index}")]
    NoClosedForm { case: String, index: i32 },
    #[error("exceptional case: zero-energy solutions are dependent (|W| = {0:e})")]
    ExceptionalCase(f64),
    #[error("zero-energy solution is not positive at x = {0}")]
    NegativeZeroMode(f64),
    #[error("model has no Fokker-Planck representation: {0}")]
    SchrodingerOnly(String),

    #[error("ODE integration failed: {0}")]
    NonconvergedOde(String),
    #[error("Wronskian degenerate: |W| = {0:e}")]
    WronskianDegenerate(f64),
    #[error("unsupported asymptotics: {0}")]
    UnsupportedAsymptotics(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("Bessel series did not converge for order {nu} at |z| = {abs_z}")]
    BesselNonconvergence { nu: f64, abs_z: f64 },
    #[error("division by zero at the resummation pole")]
    DivisionByZero,
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

impl Error {
    /// True for errors caused by bad input rather than numerical failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::UnknownPotential(_)
                | Error::BadParameter(_)
                | Error::MissingDecayMetadata(_)
                | Error::InvalidSpec(_)
                | Error::OrderExceedsValidity { .. }
                | Error::NoClosedForm { .. }
                | Error::SchrodingerOnly(_)
                | Error::InvalidArgument(_)
                | Error::UnsupportedAsymptotics(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
