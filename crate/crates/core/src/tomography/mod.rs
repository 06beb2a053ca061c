//! Gate set tomography: experiment design, simulated data, the unconstrained
//! (standard) and physically parametrized fits, and report generation.

pub mod dataset;
pub mod design;
pub mod model;
pub mod physical;
pub mod report;
pub mod sequence;
pub mod simulate;
pub mod standard;

pub use dataset::{GstDataset, Record};
pub use design::{make_design, GstDesign};
pub use model::{CompiledCircuits, PhysicalParams, PtmGateSet};
pub use physical::{fit_physical_gst, PhysicalFitOptions, PhysicalLikelihood};
pub use report::{report_metrics, Estimate, FitReport, GateMetrics, MetricRow, PhysicalEstimate, StandardEstimate};
pub use sequence::{Circuit, Segment};
pub use simulate::{exact_probabilities, simulate_dataset, simulate_sequences, SimulationOptions};
pub use standard::{fit_standard_gst, StandardFitOptions};
