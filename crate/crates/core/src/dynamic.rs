//! Best-response dynamics with queue carryover.
//!
//! At every step the arriving player observes the queues, splits its job by
//! the closed-form best response against them, and the servers then drain
//! `mu_j` units of work each. In simultaneous mode every player arrives at
//! every step; see [`SimultaneousRule`] for what each player takes into account.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::model::{self, Action, Instance, ServerLoads};
use crate::static_game::{best_response, BestResponse};

/// Default threshold on total load for "the system is empty".
pub const DEFAULT_ZERO_TOLERANCE: f64 = 0.0;
/// Fallback threshold for runs that accumulate rounding.
pub const ROUNDING_ZERO_TOLERANCE: f64 = 1e-12;
/// Horizon used for simultaneous runs when no sequential bound is available.
pub const SIMULTANEOUS_DEFAULT_HORIZON: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UpdateMode {
    Sequential,
    Simultaneous,
}

impl UpdateMode {
    pub fn label(self) -> &'static str {
        match self {
            UpdateMode::Sequential => "sequential",
            UpdateMode::Simultaneous => "simultaneous",
        }
    }
}

/// Information used by each player in a simultaneous round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimultaneousRule {
    /// The round's allocations form an equilibrium of the static game whose
    /// initial loads are the current queues (one best-response pass from the
    /// uniform profile).
    #[default]
    StageEquilibrium,
    /// Each player best-responds to the queues plus the other players'
    /// allocations from the previous round (uniform before the first round).
    PreviousRound,
}

impl SimultaneousRule {
    pub fn label(self) -> &'static str {
        match self {
            SimultaneousRule::StageEquilibrium => "stage-equilibrium",
            SimultaneousRule::PreviousRound => "previous-round",
        }
    }
}

/// Which player receives the job at each step of a sequential run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalOrder {
    RoundRobin,
    /// Uniform over players, drawn from a ChaCha8 stream seeded with the value.
    SeededRandom(u64),
    /// Explicit player sequence, repeated cyclically if the run outlasts it.
    Explicit(Vec<usize>),
}

impl ArrivalOrder {
    fn schedule(&self, n: usize) -> Result<ArrivalSchedule> {
        match self {
            ArrivalOrder::RoundRobin => Ok(ArrivalSchedule::RoundRobin { n, next: 0 }),
            ArrivalOrder::SeededRandom(seed) => {
                Ok(ArrivalSchedule::Random { n, rng: Box::new(ChaCha8Rng::seed_from_u64(*seed)) })
            }
            ArrivalOrder::Explicit(seq) => {
                if seq.is_empty() {
                    return Err(GameError::InvalidParameter("explicit arrival sequence is empty".into()));
                }
                if let Some(&bad) = seq.iter().find(|&&i| i >= n) {
                    return Err(GameError::IndexOutOfRange { what: "player", index: bad, count: n });
                }
                Ok(ArrivalSchedule::Explicit { seq: seq.clone(), pos: 0 })
            }
        }
    }
}

enum ArrivalSchedule {
    RoundRobin { n: usize, next: usize },
    Random { n: usize, rng: Box<ChaCha8Rng> },
    Explicit { seq: Vec<usize>, pos: usize },
}

impl Iterator for ArrivalSchedule {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        Some(match self {
            ArrivalSchedule::RoundRobin { n, next } => {
                let i = *next;
                *next = (*next + 1) % *n;
                i
            }
            ArrivalSchedule::Random { n, rng } => rng.gen_range(0..*n),
            ArrivalSchedule::Explicit { seq, pos } => {
                let i = seq[*pos % seq.len()];
                *pos += 1;
                i
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    /// Players that scheduled a job at this step.
    pub arrivals: Vec<usize>,
    /// Actions played, aligned with `arrivals`.
    pub actions: Vec<Action>,
    /// Support size of each best response, aligned with `arrivals`.
    pub support_sizes: Vec<usize>,
    pub loads_before: ServerLoads,
    pub loads_after: ServerLoads,
    /// Instantaneous wait of each arriving player against `loads_before`.
    pub instantaneous_costs: Vec<f64>,
    pub total_load: f64,
}

impl StepRecord {
    pub fn total_cost(&self) -> f64 {
        self.instantaneous_costs.iter().sum()
    }
}

/// Parameters of a dynamic run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: UpdateMode,
    pub order: ArrivalOrder,
    /// Step cap; `None` picks ten times the analytic zero-load time.
    pub max_steps: Option<usize>,
    pub zero_tolerance: f64,
    /// Steps recorded after the system first empties (at least one).
    pub confirm_steps: usize,
    #[serde(default)]
    pub simultaneous_rule: SimultaneousRule,
}

impl RunConfig {
    pub fn sequential(order: ArrivalOrder) -> Self {
        Self {
            mode: UpdateMode::Sequential,
            order,
            max_steps: None,
            zero_tolerance: DEFAULT_ZERO_TOLERANCE,
            confirm_steps: 1,
            simultaneous_rule: SimultaneousRule::default(),
        }
    }

    pub fn simultaneous() -> Self {
        Self {
            mode: UpdateMode::Simultaneous,
            order: ArrivalOrder::RoundRobin,
            max_steps: None,
            zero_tolerance: DEFAULT_ZERO_TOLERANCE,
            confirm_steps: 1,
            simultaneous_rule: SimultaneousRule::default(),
        }
    }

    pub fn with_max_steps(mut self, max_steps: usize) -> Self {
        self.max_steps = Some(max_steps);
        self
    }

    pub fn with_confirm_steps(mut self, steps: usize) -> Self {
        self.confirm_steps = steps.max(1);
        self
    }

    pub fn with_simultaneous_rule(mut self, rule: SimultaneousRule) -> Self {
        self.simultaneous_rule = rule;
        self
    }

    pub fn with_zero_tolerance(mut self, tol: f64) -> Self {
        self.zero_tolerance = tol;
        self
    }
}

/// A completed dynamic run with its trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicRun {
    pub instance: Instance,
    pub config: RunConfig,
    pub max_steps: usize,
    pub trace: Vec<StepRecord>,
    /// First state index from which every recorded state is empty.
    pub converged_at: Option<usize>,
}

impl DynamicRun {
    pub fn mode(&self) -> UpdateMode {
        self.config.mode
    }

    /// State `s^t` for `t` in `0..=trace.len()`.
    pub fn state(&self, t: usize) -> &ServerLoads {
        if t == 0 {
            &self.trace[0].loads_before
        } else {
            &self.trace[t - 1].loads_after
        }
    }

    /// Mean queue length `(1/m) sum_j s_j` after each step.
    pub fn average_load_series(&self) -> Vec<f64> {
        let m = self.instance.m() as f64;
        self.trace.iter().map(|r| r.total_load / m).collect()
    }
}

/// One arrival: best response against the observed queues, then the transition.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicStep {
    pub response: BestResponse,
    pub next: ServerLoads,
    pub cost: f64,
}

pub fn dynamic_step(inst: &Instance, s: &ServerLoads, i: usize) -> Result<DynamicStep> {
    let response = best_response(inst, i, s.as_slice())?;
    let lambda = inst.lambda()[i];
    let contributions: Vec<f64> = response.action.as_slice().iter().map(|a| lambda * a).collect();
    let next = model::state_transition(inst, s, &contributions)?;
    let cost = model::instantaneous_cost_dynamic(inst, &response.action, s, i)?;
    Ok(DynamicStep { response, next, cost })
}

fn resolve_horizon(inst: &Instance, config: &RunConfig) -> usize {
    if let Some(cap) = config.max_steps {
        return cap;
    }
    match (config.mode, bound_t_double_prime(inst)) {
        (UpdateMode::Sequential, Ok(t)) => 10 * (t as usize).max(1),
        (UpdateMode::Simultaneous, Ok(t)) => (10 * (t as usize).max(1)).max(SIMULTANEOUS_DEFAULT_HORIZON),
        (_, Err(_)) => SIMULTANEOUS_DEFAULT_HORIZON,
    }
}

/// Tracks when the total load first reaches zero and stays there.
struct ConvergenceWatch {
    tol: f64,
    since: Option<usize>,
}

impl ConvergenceWatch {
    fn observe(&mut self, t: usize, total: f64) {
        if total <= self.tol {
            self.since.get_or_insert(t);
        } else {
            self.since = None;
        }
    }

    /// Steps recorded since the state first emptied.
    fn confirmed(&self, t: usize) -> usize {
        self.since.map_or(0, |s| t - s)
    }
}

/// Runs the dynamics described by `config` (either mode).
pub fn run(inst: &Instance, config: &RunConfig) -> Result<DynamicRun> {
    match config.mode {
        UpdateMode::Sequential => run_sequential(inst, config),
        UpdateMode::Simultaneous => run_simultaneous(inst, config),
    }
}

/// One arrival per step, chosen by the configured order.
pub fn run_sequential(inst: &Instance, config: &RunConfig) -> Result<DynamicRun> {
    inst.check_sequential_feasible()?;
    if inst.n() == 0 {
        return Err(GameError::InvalidInstance("dynamic runs need at least one player".into()));
    }
    let max_steps = resolve_horizon(inst, config);
    let mut arrivals = config.order.schedule(inst.n())?;
    let mut watch = ConvergenceWatch { tol: config.zero_tolerance, since: None };
    let mut state = inst.initial_loads();
    let mut trace = Vec::new();
    watch.observe(0, state.total());

    for t in 0..max_steps {
        let i = arrivals.next().expect("arrival schedules are infinite");
        let step = dynamic_step(inst, &state, i)?;
        let total_load = step.next.total();
        trace.push(StepRecord {
            t,
            arrivals: vec![i],
            actions: vec![step.response.action],
            support_sizes: vec![step.response.support_size],
            loads_before: std::mem::replace(&mut state, step.next),
            loads_after: state.clone(),
            instantaneous_costs: vec![step.cost],
            total_load,
        });
        watch.observe(t + 1, total_load);
        if watch.confirmed(t + 1) >= config.confirm_steps {
            break;
        }
    }
    Ok(DynamicRun { instance: inst.clone(), config: config.clone(), max_steps, trace, converged_at: watch.since })
}

/// Replays fixed `(player, action)` arrivals from `s0` instead of best responses.
pub fn scripted_run(inst: &Instance, arrivals: &[(usize, Action)]) -> Result<DynamicRun> {
    let mut watch = ConvergenceWatch { tol: DEFAULT_ZERO_TOLERANCE, since: None };
    let mut state = inst.initial_loads();
    let mut trace = Vec::with_capacity(arrivals.len());
    watch.observe(0, state.total());
    for (t, (i, action)) in arrivals.iter().enumerate() {
        inst.check_player(*i)?;
        if action.len() != inst.m() {
            return Err(GameError::DimensionMismatch {
                what: "action entries",
                expected: inst.m(),
                actual: action.len(),
            });
        }
        let lambda = inst.lambda()[*i];
        let contributions: Vec<f64> = action.as_slice().iter().map(|a| lambda * a).collect();
        let next = model::state_transition(inst, &state, &contributions)?;
        let cost = model::instantaneous_cost_dynamic(inst, action, &state, *i)?;
        let total_load = next.total();
        trace.push(StepRecord {
            t,
            arrivals: vec![*i],
            actions: vec![action.clone()],
            support_sizes: vec![action.support().len()],
            loads_before: std::mem::replace(&mut state, next),
            loads_after: state.clone(),
            instantaneous_costs: vec![cost],
            total_load,
        });
        watch.observe(t + 1, total_load);
    }
    let config = RunConfig::sequential(ArrivalOrder::Explicit(arrivals.iter().map(|(i, _)| *i).collect()));
    Ok(DynamicRun { instance: inst.clone(), config, max_steps: arrivals.len(), trace, converged_at: watch.since })
}

/// Every player arrives at every step; allocations follow `config.simultaneous_rule`.
pub fn run_simultaneous(inst: &Instance, config: &RunConfig) -> Result<DynamicRun> {
    inst.check_simultaneous_feasible()?;
    if inst.n() == 0 {
        return Err(GameError::InvalidInstance("dynamic runs need at least one player".into()));
    }
    let (n, m) = (inst.n(), inst.m());
    let max_steps = resolve_horizon(inst, config);
    let mut watch = ConvergenceWatch { tol: config.zero_tolerance, since: None };
    let mut state = inst.initial_loads();
    let mut previous: Vec<Action> = vec![Action::uniform(m); n];
    let mut trace = Vec::new();
    watch.observe(0, state.total());

    for t in 0..max_steps {
        let responses = match config.simultaneous_rule {
            SimultaneousRule::StageEquilibrium => stage_equilibrium(inst, &state)?,
            SimultaneousRule::PreviousRound => previous_round_responses(inst, &state, &previous)?,
        };
        let mut actions = Vec::with_capacity(n);
        let mut support_sizes = Vec::with_capacity(n);
        let mut costs = Vec::with_capacity(n);
        for (i, br) in responses.into_iter().enumerate() {
            costs.push(model::instantaneous_cost_dynamic(inst, &br.action, &state, i)?);
            support_sizes.push(br.support_size);
            actions.push(br.action);
        }
        let next = model::state_transition(inst, &state, &placed_work(inst, &actions))?;
        let total_load = next.total();
        trace.push(StepRecord {
            t,
            arrivals: (0..n).collect(),
            actions: actions.clone(),
            support_sizes,
            loads_before: std::mem::replace(&mut state, next),
            loads_after: state.clone(),
            instantaneous_costs: costs,
            total_load,
        });
        previous = actions;
        watch.observe(t + 1, total_load);
        if watch.confirmed(t + 1) >= config.confirm_steps {
            break;
        }
    }
    Ok(DynamicRun { instance: inst.clone(), config: config.clone(), max_steps, trace, converged_at: watch.since })
}

/// Work `sum_i lambda_i a_ij` sent to each server.
fn placed_work(inst: &Instance, actions: &[Action]) -> Vec<f64> {
    let mut placed = vec![0.0; inst.m()];
    for (a, &l) in actions.iter().zip(inst.lambda()) {
        for (p, x) in placed.iter_mut().zip(a.as_slice()) {
            *p += l * x;
        }
    }
    placed
}

/// Load player `i` faces: queues plus everyone else's placed work.
fn others_loads(state: &ServerLoads, placed: &[f64], own: &Action, lambda: f64) -> Vec<f64> {
    state.as_slice().iter().zip(placed).zip(own.as_slice()).map(|((s, p), a)| s + (p - lambda * a).max(0.0)).collect()
}

fn previous_round_responses(inst: &Instance, state: &ServerLoads, previous: &[Action]) -> Result<Vec<BestResponse>> {
    let placed = placed_work(inst, previous);
    (0..inst.n())
        .map(|i| best_response(inst, i, &others_loads(state, &placed, &previous[i], inst.lambda()[i])))
        .collect()
}

/// One pass of best responses in index order, starting from the uniform
/// profile, on the static game with initial loads `state`.
fn stage_equilibrium(inst: &Instance, state: &ServerLoads) -> Result<Vec<BestResponse>> {
    let m = inst.m();
    let mut rows: Vec<Action> = vec![Action::uniform(m); inst.n()];
    let mut placed = placed_work(inst, &rows);
    let mut responses = Vec::with_capacity(inst.n());
    for (i, &l) in inst.lambda().iter().enumerate() {
        let br = best_response(inst, i, &others_loads(state, &placed, &rows[i], l))?;
        for ((p, old), new) in placed.iter_mut().zip(rows[i].as_slice()).zip(br.action.as_slice()) {
            *p = (*p + l * (new - old)).max(0.0);
        }
        rows[i] = br.action.clone();
        responses.push(br);
    }
    Ok(responses)
}

/// Ceiling that ignores relative rounding noise below 1e-9, so that quotients
/// which are integers in exact arithmetic are not bumped up by one.
fn ceil_steps(x: f64) -> u64 {
    if !x.is_finite() {
        return u64::MAX;
    }
    let nudged = x - 1e-9 * x.abs().max(1.0);
    nudged.ceil().max(0.0) as u64
}

/// Step after which every best response uses all servers: `max_j ceil(s0_j / mu_j)`.
pub fn bound_t_prime(inst: &Instance) -> u64 {
    inst.s0().iter().zip(inst.mu()).map(|(s, u)| ceil_steps(s / u)).max().unwrap_or(0)
}

/// Step by which every queue is empty:
/// `ceil(t' + (sum s0 + t' * lambda_max) / (sum mu - lambda_max))`.
pub fn bound_t_double_prime(inst: &Instance) -> Result<u64> {
    inst.check_sequential_feasible()?;
    let t1 = bound_t_prime(inst) as f64;
    let drift = inst.mu_total() - inst.lambda_max();
    Ok(ceil_steps(t1 + (inst.s0_total() + t1 * inst.lambda_max()) / drift))
}

/// Alternative zero-load bound `ceil(sum s0 / min{sum mu - lambda_max, mu_min,
/// mu_min * lambda_min / (sum mu - mu_min)})`.
pub fn bound_alternative(inst: &Instance) -> Result<u64> {
    inst.check_sequential_feasible()?;
    let mu_total = inst.mu_total();
    let mu_min = inst.mu_min();
    let slack = mu_total - mu_min;
    let third = if slack > 0.0 { mu_min * inst.lambda_min() / slack } else { f64::INFINITY };
    let rate = (mu_total - inst.lambda_max()).min(mu_min).min(third);
    Ok(ceil_steps(inst.s0_total() / rate))
}

/// Cost of player `i` at each step (zero when it did not arrive).
fn player_costs(run: &DynamicRun, i: usize) -> impl Iterator<Item = Option<f64>> + '_ {
    run.trace.iter().map(move |r| r.arrivals.iter().position(|&k| k == i).map(|p| r.instantaneous_costs[p]))
}

/// Running average `(1/T) sum_{t<T} D_i(t)` for every horizon `T = 1..=len`.
pub fn running_average_cost(run: &DynamicRun, i: usize) -> Result<Vec<f64>> {
    run.instance.check_player(i)?;
    let mut acc = 0.0;
    Ok(player_costs(run, i)
        .enumerate()
        .map(|(t, c)| {
            acc += c.unwrap_or(0.0);
            acc / (t + 1) as f64
        })
        .collect())
}

/// Mean instantaneous cost over player `i`'s arrivals in steps `from..`.
pub fn per_arrival_average(run: &DynamicRun, i: usize, from: usize) -> Result<Option<f64>> {
    run.instance.check_player(i)?;
    let (sum, count) = player_costs(run, i).skip(from).flatten().fold((0.0, 0usize), |(s, k), c| (s + c, k + 1));
    Ok((count > 0).then(|| sum / count as f64))
}
