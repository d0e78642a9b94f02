//! Kinetic simulator for the relativistic Vlasov-Darwin system.
//!
//! Markers advect the phase-space density along relativistic
//! characteristics; the electromagnetic field is reconstructed at every
//! step from elliptic solves in the Darwin (magnetoinductive) limit:
//! a free-space Poisson solve for the longitudinal field, a projected
//! solve for the vector potential, and a fixed-point elliptic solve for
//! the transverse electric field. Diagnostics measure sup-norm decay
//! rates, the free-streaming parameter, momentum support, and transport
//! Jacobians; a spherically symmetric Vlasov-Poisson shell solver serves
//! as an independent reference for radial data.

pub mod config;
pub mod darwin;
pub mod decay;
pub mod deposit;
pub mod diagnostics;
pub mod error;
pub mod fft;
pub mod grid;
pub mod gronwall;
pub mod initial;
pub mod io;
pub mod kernel;
pub mod kinematics;
pub mod math;
pub mod oracles;
pub mod particles;
pub mod poisson;
pub mod projection;
pub mod pusher;
pub mod radial;
pub mod sim;
pub mod spectral;
pub mod variational;

pub use config::{Mode, SimConfig};
pub use darwin::{DarwinSources, FieldSolver, FieldState};
pub use deposit::{deposit_moments, Moments};
pub use error::{Result, SimError};
pub use grid::GridField;
pub use initial::{build_initial_datum, InitialDatum};
pub use kernel::FreeSpaceKernel;
pub use math::{Mat3, Vec3};
pub use particles::{sample_particles, ParticleEnsemble};
pub use diagnostics::{record_step, TimeSeriesRecord};
pub use sim::{run_simulation, run_smallness_study, RunManifest, RunOutput, StudySpec};
