//! Game primitives shared by the static and dynamic games.
//!
//! An [`Instance`] fixes the job lengths of the players, the service rates of
//! the servers and the initial queue contents. Players split their job over
//! the servers with an [`Action`] (a point of the probability simplex); the
//! cost of placing a mass `x` on a server already holding `q` units of work is
//! the integral of the queueing delay, `x * (x / 2 + q) / mu`.

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};

/// Absolute tolerance for simplex membership and equality checks.
pub const SIMPLEX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    s0: Vec<f64>,
}

/// Immutable game parameters. Validated at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance")]
pub struct Instance {
    lambda: Vec<f64>,
    mu: Vec<f64>,
    s0: Vec<f64>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = GameError;

    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.lambda, raw.mu, raw.s0)
    }
}

impl Instance {
    /// Builds an instance from job lengths, service rates and initial loads.
    ///
    /// An empty player set is accepted (the empty game); at least one server
    /// is required.
    pub fn new(lambda: Vec<f64>, mu: Vec<f64>, s0: Vec<f64>) -> Result<Self> {
        if mu.is_empty() {
            return Err(GameError::InvalidInstance("at least one server is required".into()));
        }
        if s0.len() != mu.len() {
            return Err(GameError::DimensionMismatch { what: "initial loads", expected: mu.len(), actual: s0.len() });
        }
        if let Some((i, l)) = lambda.iter().enumerate().find(|(_, l)| !(l.is_finite() && **l > 0.0)) {
            return Err(GameError::InvalidInstance(format!("job length lambda[{i}] = {l} must be finite and > 0")));
        }
        if let Some((j, m)) = mu.iter().enumerate().find(|(_, m)| !(m.is_finite() && **m > 0.0)) {
            return Err(GameError::InvalidInstance(format!("service rate mu[{j}] = {m} must be finite and > 0")));
        }
        if let Some((j, s)) = s0.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s >= 0.0)) {
            return Err(GameError::InvalidInstance(format!("initial load s0[{j}] = {s} must be finite and >= 0")));
        }
        Ok(Self { lambda, mu, s0 })
    }

    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn m(&self) -> usize {
        self.mu.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn s0(&self) -> &[f64] {
        &self.s0
    }

    pub fn initial_loads(&self) -> ServerLoads {
        ServerLoads(self.s0.clone())
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda.iter().copied().fold(0.0, f64::max)
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mu_min(&self) -> f64 {
        self.mu.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn mu_max(&self) -> f64 {
        self.mu.iter().copied().fold(0.0, f64::max)
    }

    pub fn lambda_total(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn mu_total(&self) -> f64 {
        self.mu.iter().sum()
    }

    pub fn s0_total(&self) -> f64 {
        self.s0.iter().sum()
    }

    /// Stability condition for one arrival per step: `lambda_max < sum(mu)`.
    pub fn is_sequential_feasible(&self) -> bool {
        self.lambda_max() < self.mu_total()
    }

    /// Stability condition for all players arriving every step: `sum(lambda) < sum(mu)`.
    pub fn is_simultaneous_feasible(&self) -> bool {
        self.lambda_total() < self.mu_total()
    }

    pub fn check_sequential_feasible(&self) -> Result<()> {
        if self.is_sequential_feasible() {
            Ok(())
        } else {
            Err(GameError::SequentialInfeasible { lambda_max: self.lambda_max(), mu_total: self.mu_total() })
        }
    }

    pub fn check_simultaneous_feasible(&self) -> Result<()> {
        if self.is_simultaneous_feasible() {
            Ok(())
        } else {
            Err(GameError::SimultaneousInfeasible { lambda_total: self.lambda_total(), mu_total: self.mu_total() })
        }
    }

    pub(crate) fn check_player(&self, i: usize) -> Result<()> {
        if i < self.n() {
            Ok(())
        } else {
            Err(GameError::IndexOutOfRange { what: "player", index: i, count: self.n() })
        }
    }

    fn check_servers(&self, what: &'static str, len: usize) -> Result<()> {
        if len == self.m() {
            Ok(())
        } else {
            Err(GameError::DimensionMismatch { what, expected: self.m(), actual: len })
        }
    }
}

/// One player's split of its job over the servers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Action(Vec<f64>);

impl TryFrom<Vec<f64>> for Action {
    type Error = GameError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Action::new(v)
    }
}

impl From<Action> for Vec<f64> {
    fn from(a: Action) -> Self {
        a.0
    }
}

impl Action {
    /// Validates simplex membership: entries finite and `>= 0`, sum within [`SIMPLEX_TOL`] of 1.
    pub fn new(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(GameError::InvalidAction("action has no entries".into()));
        }
        if let Some((j, a)) = fractions.iter().enumerate().find(|(_, a)| !(a.is_finite() && **a >= 0.0)) {
            return Err(GameError::InvalidAction(format!("entry {j} = {a} is negative or not finite")));
        }
        let sum: f64 = fractions.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(GameError::InvalidAction(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self(fractions))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    /// Fractions proportional to the service rates: the zero-load equilibrium action.
    pub fn proportional(mu: &[f64]) -> Self {
        let total: f64 = mu.iter().sum();
        Self(mu.iter().map(|m| m / total).collect())
    }

    /// Puts the whole job on server `j`.
    pub fn vertex(m: usize, j: usize) -> Self {
        let mut v = vec![0.0; m];
        v[j] = 1.0;
        Self(v)
    }

    pub(crate) fn from_vec_unchecked(v: Vec<f64>) -> Self {
        Self(v)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Servers receiving strictly positive mass.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, a)| **a > 0.0).map(|(j, _)| j).collect()
    }
}

impl std::ops::Index<usize> for Action {
    type Output = f64;

    fn index(&self, j: usize) -> &f64 {
        &self.0[j]
    }
}

/// Row-stochastic `n x m` matrix: one action per player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionProfile {
    rows: Vec<Action>,
}

impl ActionProfile {
    pub fn new(rows: Vec<Action>) -> Result<Self> {
        if let Some(first) = rows.first() {
            let m = first.len();
            if let Some(bad) = rows.iter().find(|r| r.len() != m) {
                return Err(GameError::DimensionMismatch { what: "action entries", expected: m, actual: bad.len() });
            }
        }
        Ok(Self { rows })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(Action::new).collect::<Result<Vec<_>>>()?)
    }

    pub fn uniform(n: usize, m: usize) -> Self {
        Self { rows: vec![Action::uniform(m); n] }
    }

    pub fn empty() -> Self {
        Self { rows: Vec::new() }
    }

    #[cfg(test)]
    pub(crate) fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Self {
        Self { rows: rows.into_iter().map(Action::from_vec_unchecked).collect() }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Action] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &Action {
        &self.rows[i]
    }

    pub fn set_row(&mut self, i: usize, action: Action) {
        self.rows[i] = action;
    }

    /// Servers receiving positive mass from at least one player.
    pub fn support(&self) -> Vec<usize> {
        let m = self.rows.first().map_or(0, Action::len);
        (0..m).filter(|&j| self.rows.iter().any(|r| r[j] > 0.0)).collect()
    }

    fn check_against(&self, inst: &Instance) -> Result<()> {
        if self.n() != inst.n() {
            return Err(GameError::DimensionMismatch { what: "profile rows", expected: inst.n(), actual: self.n() });
        }
        if let Some(r) = self.rows.first() {
            inst.check_servers("action entries", r.len())?;
        }
        Ok(())
    }
}

/// Queue contents of every server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ServerLoads(Vec<f64>);

impl TryFrom<Vec<f64>> for ServerLoads {
    type Error = GameError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        ServerLoads::new(v)
    }
}

impl From<ServerLoads> for Vec<f64> {
    fn from(s: ServerLoads) -> Self {
        s.0
    }
}

impl ServerLoads {
    pub fn new(loads: Vec<f64>) -> Result<Self> {
        if let Some((j, s)) = loads.iter().enumerate().find(|(_, s)| !(s.is_finite() && **s >= 0.0)) {
            return Err(GameError::InvalidLoads(format!("load {j} = {s} is negative or not finite")));
        }
        Ok(Self(loads))
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![0.0; m])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Delay of placing `mass` units on a server already holding `queued` units.
#[inline]
fn placement_cost(mass: f64, queued: f64, mu: f64) -> f64 {
    mass * (mass / (2.0 * mu) + queued / mu)
}

/// Work placed on each server by the whole profile: `X_j = sum_i lambda_i a_ij`.
pub fn scheduled_work(inst: &Instance, profile: &ActionProfile) -> Vec<f64> {
    let mut totals = vec![0.0; inst.m()];
    for (row, &l) in profile.rows().iter().zip(inst.lambda()) {
        for (t, a) in totals.iter_mut().zip(row.as_slice()) {
            *t += l * a;
        }
    }
    totals
}

/// Load on each server as seen by player `i`: initial load plus every other
/// player's scheduled work.
pub fn effective_loads(inst: &Instance, profile: &ActionProfile, i: usize) -> Result<Vec<f64>> {
    inst.check_player(i)?;
    profile.check_against(inst)?;
    let mut loads = inst.s0().to_vec();
    for (k, (row, &l)) in profile.rows().iter().zip(inst.lambda()).enumerate() {
        if k == i {
            continue;
        }
        for (s, a) in loads.iter_mut().zip(row.as_slice()) {
            *s += l * a;
        }
    }
    Ok(loads)
}

/// Cost of player `i` in the static game.
pub fn player_cost_static(inst: &Instance, profile: &ActionProfile, i: usize) -> Result<f64> {
    let loads = effective_loads(inst, profile, i)?;
    Ok(cost_against_loads(inst, profile.row(i), &loads, i))
}

/// Cost of player `i` placing `action` on servers holding `loads`.
pub(crate) fn cost_against_loads(inst: &Instance, action: &Action, loads: &[f64], i: usize) -> f64 {
    let l = inst.lambda()[i];
    action.as_slice().iter().zip(loads).zip(inst.mu()).map(|((a, q), mu)| placement_cost(l * a, *q, *mu)).sum()
}

/// Instantaneous wait of player `i` scheduling a fresh job on state `s`.
pub fn instantaneous_cost_dynamic(inst: &Instance, action: &Action, s: &ServerLoads, i: usize) -> Result<f64> {
    inst.check_player(i)?;
    inst.check_servers("action entries", action.len())?;
    inst.check_servers("server loads", s.len())?;
    Ok(cost_against_loads(inst, action, s.as_slice(), i))
}

/// Exact potential `sum_j (mu_j / 2) * ((s0_j + X_j) / mu_j)^2`.
pub fn potential(inst: &Instance, profile: &ActionProfile) -> Result<f64> {
    profile.check_against(inst)?;
    let work = scheduled_work(inst, profile);
    Ok(inst
        .mu()
        .iter()
        .zip(inst.s0())
        .zip(&work)
        .map(|((mu, s0), x)| {
            let l = (s0 + x) / mu;
            0.5 * mu * l * l
        })
        .sum())
}

/// Partial derivatives of player `i`'s cost with respect to its own fractions.
/// They coincide with the partials of [`potential`].
pub fn cost_gradient(inst: &Instance, profile: &ActionProfile, i: usize) -> Result<Vec<f64>> {
    let loads = effective_loads(inst, profile, i)?;
    let l = inst.lambda()[i];
    Ok(profile.row(i).as_slice().iter().zip(&loads).zip(inst.mu()).map(|((a, q), mu)| l * (l * a + q) / mu).collect())
}

/// Queue update `s'_j = max(0, s_j + contributions_j - mu_j)`.
pub fn state_transition(inst: &Instance, s: &ServerLoads, contributions: &[f64]) -> Result<ServerLoads> {
    inst.check_servers("server loads", s.len())?;
    inst.check_servers("contributions", contributions.len())?;
    if let Some((j, c)) = contributions.iter().enumerate().find(|(_, c)| !(c.is_finite() && **c >= 0.0)) {
        return Err(GameError::InvalidParameter(format!("contribution {j} = {c} must be >= 0")));
    }
    Ok(ServerLoads(
        s.as_slice().iter().zip(contributions).zip(inst.mu()).map(|((s, c), mu)| (s + c - mu).max(0.0)).collect(),
    ))
}

/// `L_j = (s0_j + X_j) / mu_j`.
pub fn normalized_loads(inst: &Instance, profile: &ActionProfile) -> Result<Vec<f64>> {
    if profile.n() == 0 {
        return Ok(inst.s0().iter().zip(inst.mu()).map(|(s, mu)| s / mu).collect());
    }
    profile.check_against(inst)?;
    let work = scheduled_work(inst, profile);
    Ok(inst.s0().iter().zip(&work).zip(inst.mu()).map(|((s, x), mu)| (s + x) / mu).collect())
}

/// Sum of every player's static cost.
pub fn social_cost(inst: &Instance, profile: &ActionProfile) -> Result<f64> {
    (0..inst.n()).map(|i| player_cost_static(inst, profile, i)).sum()
}
