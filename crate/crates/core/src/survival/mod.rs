//! Data model, hazard specifications and synthetic data generation under the
//! proportional-hazards model with non-informative right censoring.

mod dataset;
mod generate;
mod hazard;
pub mod io;
mod nelson_aalen;
mod step;

pub use dataset::{GenerationMeta, SurvivalDataset};
pub use generate::{
    draw_outcome, expected_event_fraction, first_axis_beta, generate_dataset, generate_dataset_with, sample_covariates,
    TailPolicy,
};
pub use hazard::{CensoringSpec, HazardSpec};
pub use nelson_aalen::nelson_aalen;
pub(crate) use nelson_aalen::{step_on_event_groups, time_groups, weighted_cumhaz_on_groups};
pub use step::StepFunction;
