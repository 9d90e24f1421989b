//! Exponential quadrature rules for linear stiff problems with fractional
//! time-dependent sources `y' = A y + h(t^r) v`, with the fractional φ
//! functions they need, benchmark problems, and convergence studies.

pub mod accept;
pub mod integrators;
pub mod operators;
pub mod problems;
pub mod quadrule;
pub mod specialfun;
pub mod study;
pub mod tridiag;

pub use integrators::{march, Formulation, FractionalSource, Method, TimeGrid};
pub use operators::{DiagonalizableOperator, OperatorKind, State};
pub use problems::{discretize, preset, reference_solution, terminal_error, ProblemName};
pub use quadrule::{node_set, NodeFamily, NodeSet};
pub use specialfun::{phi_classical, phi_frac, FracPhi, PhiOrder};
pub use study::{fit_order, run_study, ConvergenceReport, StudySpec};
