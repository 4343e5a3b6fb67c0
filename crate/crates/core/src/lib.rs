//! Estimation of the selected bivariate normal population's Y-mean under
//! LINEX loss: selection rule, estimators, admissibility of the shift
//! class, truncation improvements, Monte Carlo risk and the poultry data
//! analysis.

pub mod admissibility;
pub mod data;
pub mod error;
pub mod estimators;
pub mod improvement;
pub mod loss;
pub mod normal;
pub mod oracles;
pub mod quad;
pub mod sampling;
pub mod selection;
pub mod sim;
pub mod types;

pub use admissibility::{bounds, classify, h_a, psi, AdmissibilityBounds, ShiftClass};
pub use error::{Error, Result};
pub use estimators::{evaluate, BaseEstimator, EstimatorSpec, PriorSpec};
pub use improvement::{applicable_case, improve, ImprovedCase, ImprovementOutcome, Truncation};
pub use loss::linex_loss;
pub use selection::{realized_parameter, select, SelectedParameter, SelectionSummary};
pub use sim::{RiskEstimate, SimConfig};
pub use types::{CovarianceSpec, LinexParams, MeanVectorPair, ObservationPair, Pair, ThetaStar};
