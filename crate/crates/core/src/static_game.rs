//! The static game: closed-form best responses, one-pass best-response
//! dynamics, equilibrium checks and price-of-anarchy machinery.

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::model::{self, Action, ActionProfile, Instance};

/// Default tolerance on cost improvement when checking for an equilibrium.
pub const NASH_EPS: f64 = 1e-8;

/// A closed-form best response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub action: Action,
    /// Number of servers receiving positive mass (a prefix of `server_order`).
    pub support_size: usize,
    /// Common normalized load `(lambda * a_j + load_j) / mu_j` over the support.
    pub water_level: f64,
    /// Servers by ascending normalized load, ties by index.
    pub server_order: Vec<usize>,
}

impl BestResponse {
    pub fn is_full_support(&self) -> bool {
        self.support_size == self.server_order.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.server_order[..self.support_size]
    }
}

/// Result of pouring `volume` units of work over servers that already hold `base`.
#[derive(Debug, Clone)]
pub(crate) struct WaterFill {
    pub amounts: Vec<f64>,
    pub level: f64,
    pub support_size: usize,
    pub order: Vec<usize>,
}

/// Minimizes `sum_j (x_j^2 / 2 + base_j * x_j) / mu_j` subject to `x >= 0`,
/// `sum x = volume`. The minimizer raises the normalized load `(base_j + x_j) / mu_j`
/// of the least loaded servers to a common level.
pub(crate) fn water_fill(volume: f64, mu: &[f64], base: &[f64]) -> WaterFill {
    let m = mu.len();
    let ratio: Vec<f64> = base.iter().zip(mu).map(|(b, u)| b / u).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| ratio[a].total_cmp(&ratio[b]));

    let mut rate_sum = 0.0;
    let mut load_sum = 0.0;
    let mut support_size = m;
    for (pos, &j) in order.iter().enumerate() {
        if pos > 0 && ratio[j] * rate_sum >= volume + load_sum {
            support_size = pos;
            break;
        }
        rate_sum += mu[j];
        load_sum += base[j];
    }
    let level = (volume + load_sum) / rate_sum;

    let mut amounts = vec![0.0; m];
    for &j in &order[..support_size] {
        amounts[j] = (mu[j] * level - base[j]).max(0.0);
    }
    WaterFill { amounts, level, support_size, order }
}

/// Closed-form minimizer of player `i`'s cost against fixed `effective_loads`.
///
/// In the static game the effective load of server `j` is `s0_j` plus the work
/// of every other player; in the dynamic game it is the current queue.
pub fn best_response(inst: &Instance, i: usize, effective_loads: &[f64]) -> Result<BestResponse> {
    inst.check_player(i)?;
    check_loads(inst, effective_loads)?;
    let lambda = inst.lambda()[i];
    let fill = water_fill(lambda, inst.mu(), effective_loads);
    let placed: f64 = fill.amounts.iter().sum();
    let action = Action::from_vec_unchecked(fill.amounts.iter().map(|x| x / placed).collect());
    Ok(BestResponse { action, support_size: fill.support_size, water_level: fill.level, server_order: fill.order })
}

fn check_loads(inst: &Instance, loads: &[f64]) -> Result<()> {
    if loads.len() != inst.m() {
        return Err(GameError::DimensionMismatch { what: "effective loads", expected: inst.m(), actual: loads.len() });
    }
    if let Some((j, s)) = loads.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s >= 0.0)) {
        return Err(GameError::InvalidLoads(format!("effective load {j} = {s} must be >= 0")));
    }
    Ok(())
}

const ORACLE_ITERATIONS: usize = 10_000;
const ORACLE_STEP_TOL: f64 = 1e-9;

/// Euclidean projection onto the probability simplex (sort-and-threshold).
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, u) in sorted.iter().enumerate() {
        cumulative += u;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

/// Numeric best response by projected gradient descent on the simplex.
///
/// Independent of the closed form; used to validate it.
pub fn best_response_oracle(inst: &Instance, i: usize, effective_loads: &[f64]) -> Result<Action> {
    inst.check_player(i)?;
    check_loads(inst, effective_loads)?;
    let m = inst.m();
    let lambda = inst.lambda()[i];
    let mu = inst.mu();
    if m == 1 {
        return Ok(Action::from_vec_unchecked(vec![1.0]));
    }
    let max_inv_mu = mu.iter().map(|u| 1.0 / u).fold(0.0, f64::max);
    let step = 1.0 / (lambda * lambda * max_inv_mu);

    let mut a = vec![1.0 / m as f64; m];
    let mut last_move = f64::INFINITY;
    for _ in 0..ORACLE_ITERATIONS {
        let trial: Vec<f64> =
            a.iter().zip(effective_loads).zip(mu).map(|((x, q), u)| x - step * lambda * (lambda * x + q) / u).collect();
        let next = project_to_simplex(&trial);
        last_move = next.iter().zip(&a).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        a = next;
        if last_move < 1e-15 {
            break;
        }
    }
    if last_move > ORACLE_STEP_TOL {
        return Err(GameError::OracleDiverged { iterations: ORACLE_ITERATIONS });
    }
    Action::new(a)
}

/// Outcome of one sequential pass of best responses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequentialPass {
    pub profile: ActionProfile,
    pub initial_potential: f64,
    /// Potential after each update, in update order.
    pub potentials: Vec<f64>,
    /// The best response played at each update.
    pub updates: Vec<(usize, BestResponse)>,
}

/// Lets every player in `order` best-respond once, in turn, to the current
/// profile.
pub fn run_sequential_pass(inst: &Instance, initial: &ActionProfile, order: &[usize]) -> Result<SequentialPass> {
    check_permutation(order, inst.n())?;
    let mut profile = initial.clone();
    let initial_potential = model::potential(inst, &profile)?;
    let mut potentials = Vec::with_capacity(order.len());
    let mut updates = Vec::with_capacity(order.len());
    for &i in order {
        let loads = model::effective_loads(inst, &profile, i)?;
        let br = best_response(inst, i, &loads)?;
        profile.set_row(i, br.action.clone());
        potentials.push(model::potential(inst, &profile)?);
        updates.push((i, br));
    }
    Ok(SequentialPass { profile, initial_potential, potentials, updates })
}

fn check_permutation(order: &[usize], n: usize) -> Result<()> {
    if order.len() != n {
        return Err(GameError::InvalidParameter(format!("update order has {} entries, expected {n}", order.len())));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(GameError::InvalidParameter(format!("update order is not a permutation (entry {i})")));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashCheck {
    pub is_nash: bool,
    /// Largest cost reduction any single player could obtain.
    pub max_improvement: f64,
    pub worst_player: Option<usize>,
}

/// Checks that no player can lower its cost by more than `epsilon` by deviating.
pub fn is_nash(inst: &Instance, profile: &ActionProfile, epsilon: f64) -> Result<NashCheck> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(GameError::InvalidParameter(format!("epsilon must be > 0, got {epsilon}")));
    }
    let mut max_improvement = 0.0;
    let mut worst_player = None;
    for i in 0..inst.n() {
        let loads = model::effective_loads(inst, profile, i)?;
        let current = model::cost_against_loads(inst, profile.row(i), &loads, i);
        let br = best_response(inst, i, &loads)?;
        let best = model::cost_against_loads(inst, &br.action, &loads, i);
        let gain = current - best;
        if worst_player.is_none() || gain > max_improvement {
            max_improvement = gain;
            worst_player = Some(i);
        }
    }
    Ok(NashCheck { is_nash: max_improvement <= epsilon, max_improvement, worst_player })
}

/// Common normalized load over the equilibrium support:
/// `(sum_{S} s0 + sum lambda) / sum_{S} mu`.
pub fn equilibrium_level(inst: &Instance, profile: &ActionProfile) -> (Vec<usize>, f64) {
    let support = profile.support();
    let s0: f64 = support.iter().map(|&j| inst.s0()[j]).sum();
    let mu: f64 = support.iter().map(|&j| inst.mu()[j]).sum();
    let level = (s0 + inst.lambda_total()) / mu;
    (support, level)
}

fn require_players(inst: &Instance) -> Result<()> {
    if inst.n() == 0 {
        Err(GameError::InvalidInstance("at least one player is required".into()))
    } else {
        Ok(())
    }
}

/// Upper bound on the price of anarchy; capped at 3 when every initial load is zero.
pub fn poa_upper_bound(inst: &Instance) -> Result<f64> {
    require_players(inst)?;
    let max_ratio = inst.s0().iter().zip(inst.mu()).map(|(s, u)| s / u).fold(0.0, f64::max);
    let lambda_total = inst.lambda_total();
    let bound = 1.0 + 2.0 * (max_ratio + lambda_total / inst.mu_min()) * (inst.mu_total() / lambda_total);
    if inst.s0().iter().all(|s| *s == 0.0) {
        Ok(bound.min(3.0))
    } else {
        Ok(bound)
    }
}

/// Convex lower bound on the optimal social cost: the minimum over aggregate
/// server work `X >= 0`, `sum X = sum lambda` of `sum_j (X_j^2 / 2 + s0_j X_j) / mu_j`.
pub fn opt_lower_bound(inst: &Instance) -> Result<f64> {
    require_players(inst)?;
    let fill = water_fill(inst.lambda_total(), inst.mu(), inst.s0());
    Ok(aggregate_cost(inst, &fill.amounts))
}

/// The relaxed objective evaluated at aggregate work `x`.
pub fn aggregate_cost(inst: &Instance, x: &[f64]) -> f64 {
    x.iter().zip(inst.s0()).zip(inst.mu()).map(|((x, s), u)| (0.5 * x * x + s * x) / u).sum()
}

/// Social cost of an equilibrium over the optimal-cost lower bound.
pub fn empirical_poa(inst: &Instance, ne_profile: &ActionProfile) -> Result<f64> {
    let check = is_nash(inst, ne_profile, NASH_EPS)?;
    if !check.is_nash {
        return Err(GameError::NotNash { improvement: check.max_improvement });
    }
    Ok(model::social_cost(inst, ne_profile)? / opt_lower_bound(inst)?)
}

/// Runs one pass from the uniform profile in player-index order and returns
/// the resulting equilibrium.
pub fn equilibrium_by_one_pass(inst: &Instance) -> Result<ActionProfile> {
    let order: Vec<usize> = (0..inst.n()).collect();
    Ok(run_sequential_pass(inst, &ActionProfile::uniform(inst.n(), inst.m()), &order)?.profile)
}
