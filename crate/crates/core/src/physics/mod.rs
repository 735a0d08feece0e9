//! Physical characterization of the assay and synthetic data generation.

mod params;
mod pde;
mod phi;
mod sensor;
mod synth;

pub use params::PhysicalParams;
pub use pde::{pde_oracle, required_time_steps, BoundCurve};
pub use phi::{
    bound_fraction_no_desorption, phi_general, phi_mass, phi_no_desorption, phi_norm_sq, phi_powers,
    truncation_order, PhiTable,
};
pub use sensor::{quantize, sensor_model, SensorConfig};
pub use synth::{synth_psdr, PointSource, SourceSpec};
