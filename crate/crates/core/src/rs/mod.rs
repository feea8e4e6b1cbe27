//! The replica-symmetric order-parameter equations for `(u, v, w)` and the
//! inferred cumulative hazard `Λ(·)`, solved on a weighted population by a
//! damped fixed-point sweep.

mod population;
mod solver;

pub use population::{
    build_atom_population, build_population, build_population_with_floor, AtomOptions, Member, RsPopulation,
    MIN_POPULATION,
};
pub use solver::{
    lambda_update, rs_predicted_curve, solve_rs, solve_rs_population, solve_u, xi_update, LambdaUpdate, RsOptions,
    RsResiduals, RsSolution, RsStart, WUpdate,
};
