//! critwave: a numerical laboratory for radial solutions of the 3D focusing
//! quintic wave equation. It provides ground-state bubbles and their channel
//! norms, Friedlander radiation fields and their isometries, a radial
//! nonlinear evolver, the linearized elliptic corrector, multi-bubble
//! decomposition of energy states, scaling-law verification sweeps, and the
//! bootstrap recursion checker used by the radiation-concentration
//! diagnostics.

pub mod bubble_decomposition;
pub mod cli;
pub mod core_fields;
pub mod ground_state;
pub mod elliptic;
pub mod estimates_lab;
pub mod linear_radiation;
pub mod nonlinear_evolution;
pub mod numerics;

pub use core_fields::{
    h_norm, l1l2_norm, make_grid, y_norm, ChannelRegion, FieldError, FnField, GridScheme,
    NormValue, RadialGrid, RadialProfile, SpaceTimeField, StatePair,
};
pub use ground_state::{
    energy, eval_w, nonlinearity, stationarity_residual, Bubble, BubbleList, GroundStateError,
};
