//! Periodic orbits, covering chains and bounded searches for the density,
//! closability and linkability conditions.

mod chain;
mod orbit;
mod search;

pub use chain::{
    loop_periodic_point, omega_limit_intervals, ClosedInterval, CoveringChain, OmegaLimitReport,
    FLOAT_PADDING,
};
pub use orbit::{
    enumerate_shift_periodic, interval_orbits_of_least_period, interval_periodic_points, lyndon_words,
    power_branches, power_fixed_points, shift_orbits_of_least_period, Branch, PeriodicOrbit,
    DEFAULT_BRANCH_CAP, DEFAULT_WORD_CAP,
};
pub use search::{
    check_closable, check_density_convex, check_density_ergodic, check_linkable_pair,
    closable_mean_bound, identity_cost, stitched_pair, stitched_targets, Candidate, ClosableWitness,
    DensityWitness, LinkWitness, OrbitSource, SearchCaps, SearchOutcome, Target,
};
