//! Elementary integrals, the global-error series and its closed forms, and
//! the harness that compares them with measured errors.

mod closed_form;
mod envelope;
mod integrals;
mod measure;
mod series;

pub use closed_form::{
    closed_form_estimate_ef, EnvelopeTerm, ErrorEstimate, EstimateTerm, EstimateValue, PhaseShape, CLOSED_FORM_METHODS,
};
pub use envelope::{block_envelope, detect_breakdown, envelope_fit, peaks, rms_relative_deviation, EnvelopeFit};
pub use integrals::{elementary_integral_numeric, elementary_integrals_numeric, ElementaryIntegralSample};
pub use measure::{measure_global_error, parameter_space_error, ErrorTrajectory, ReferenceSpec};
pub use series::{error_series, linosc_estimate, order_of_modified, LinearEstimate};
