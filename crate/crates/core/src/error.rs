use alloc::string::String;
use core::fmt;

/// Errors surfaced by the kernel. Every variant corresponds to a violated
/// precondition of some operation; internal invariants panic instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// Two series from different variable contexts were combined.
    MismatchedContexts,
    /// A substituted series had a nonzero constant term.
    NonzeroConstantTerm(String),
    /// The Jacobian in the requested pivot variables is singular at 0.
    SingularJacobian,
    /// Generators do not have linearly independent differentials at 0.
    NotAManifoldIdeal(String),
    /// An exact operation (recentre, point evaluation) was requested for a
    /// truncated, non-polynomial series.
    NotPolynomial,
    /// A series expected to be real (fixed by the conjugation) is not.
    NotReal(String),
    /// `lowest_weighted_component` found terms below the requested weight.
    TermsBelowWeight,
    /// Division by a series that is not a unit (zero constant term).
    NotAUnit,
    /// The defining series does not cut a hypersurface at the base point.
    NotAHypersurfacePoint(String),
    /// A vector field is not tangent where the operation requires it.
    NotTangent(String),
    /// Inclusion of submanifolds required but not satisfied.
    NotIncluded(String),
    /// Linearly dependent dual forms cannot cut a subbundle.
    DependentForms,
    /// The bracket closure did not stabilize within the depth budget; the
    /// computed dimension is only a lower bound for the orbit.
    OrbitNotStabilized { dim_lower_bound: usize },
    /// A precondition that names no finer variant.
    Precondition(String),
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::MismatchedContexts => write!(f, "series from different variable contexts"),
            CoreError::NonzeroConstantTerm(v) => {
                write!(f, "substituted series for {v} has a nonzero constant term")
            }
            CoreError::SingularJacobian => {
                write!(f, "singular Jacobian: not a manifold ideal with these pivots")
            }
            CoreError::NotAManifoldIdeal(why) => write!(f, "not a manifold ideal: {why}"),
            CoreError::NotPolynomial => {
                write!(f, "operation requires an exact polynomial, got a truncated series")
            }
            CoreError::NotReal(what) => write!(f, "{what} is not real (sigma f != f)"),
            CoreError::TermsBelowWeight => {
                write!(f, "series has terms of weight below the requested component")
            }
            CoreError::NotAUnit => write!(f, "division by a series with zero constant term"),
            CoreError::NotAHypersurfacePoint(why) => {
                write!(f, "not a hypersurface point: {why}")
            }
            CoreError::NotTangent(what) => write!(f, "{what} is not tangent"),
            CoreError::NotIncluded(what) => write!(f, "inclusion fails: {what}"),
            CoreError::DependentForms => {
                write!(f, "dual forms are linearly dependent at the base point")
            }
            CoreError::OrbitNotStabilized { dim_lower_bound } => write!(
                f,
                "orbit closure not stabilized within the bracket budget; dimension >= {dim_lower_bound} only"
            ),
            CoreError::Precondition(why) => write!(f, "precondition violated: {why}"),
        }
    }
}

pub type Result<T> = core::result::Result<T, CoreError>;
