//! Static and dynamic load-balancing games.
//!
//! Players hold jobs of fixed length and split them fractionally over
//! heterogeneous servers to minimize their queueing delay. The static game is
//! an exact potential game whose best responses have a water-filling closed
//! form; the dynamic game replays those best responses against evolving queues
//! until every server is empty.

pub mod dynamic;
pub mod error;
pub mod experiments;
pub mod model;
pub mod static_game;
pub mod trace;

pub use dynamic::{
    bound_alternative, bound_t_double_prime, bound_t_prime, dynamic_step, per_arrival_average, run, run_sequential,
    run_simultaneous, running_average_cost, scripted_run, ArrivalOrder, DynamicRun, DynamicStep, RunConfig, StepRecord,
    UpdateMode,
};
pub use error::{GameError, Result};
pub use model::{
    effective_loads, instantaneous_cost_dynamic, normalized_loads, player_cost_static, potential, social_cost,
    state_transition, Action, ActionProfile, Instance, ServerLoads, SIMPLEX_TOL,
};
pub use static_game::{
    best_response, best_response_oracle, empirical_poa, is_nash, opt_lower_bound, poa_upper_bound, run_sequential_pass,
    BestResponse, NashCheck, SequentialPass, NASH_EPS,
};
