//! Creep-parameter calibration from fast-sintering fracture forces.

pub mod dataset;
pub mod dls;
pub mod shifts;
pub mod sintering;

pub use dataset::{read_dataset, write_dataset, write_fit_report, write_parameters, ParameterFile};
pub use dls::{damped_least_squares, numerical_jacobian, DlsOptions, DlsReport, LeastSquares};
pub use shifts::{fit_temperature_shifts, fit_temperature_shifts_default, fit_wlf, ShiftFit, TemperatureShifts};
pub use sintering::{
    creep_log_gradient, estimate_f0, fit_burgers_dls, fit_creep_curve, indentation_to_sintering,
    linear_fit, sintering_to_indentation, CreepCurve, FitResult, FixedParams, LinearFit, SampleAxis,
    SinteringDataset,
};
