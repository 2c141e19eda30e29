//! Constitutive model and simulation kernels for near-field ground
//! shock in porous, partially saturated geomaterials: a pressure- and
//! temperature-aware EOS drives the volumetric response, a hardening
//! compaction cap crushes out gas porosity (accumulating damage), and an
//! exponential pressure-dependent strength surface bounds the deviator,
//! the two surfaces held continuous at the critical state as the cap
//! moves. Strain-driven material-point drivers and a 1D spherical
//! Lagrangian solver sit on top of the point kernel.
//!
//! All quantities are SI. Mean stress is tension-positive; the EOS
//! speaks compression-positive pressure.

pub mod eos;
pub mod hardening;
pub mod model;
pub mod paths;
pub mod shock1d;
pub mod surface;
pub mod tensor;

pub use eos::{AnalyticEos, Eos, EosError, EosTable, RangePolicy, TableError};
pub use hardening::{CrushParams, HardeningError};
pub use model::{
    mises_q, saturation, ElasticParams, MaterialModel, MaterialParams, MaterialState, ModelError,
    ShearMode, SolverParams, StepBranch, StepReport,
};
pub use surface::{StressLocus, SurfaceError, SurfaceState, YieldParams};
pub use tensor::SymTensor;
