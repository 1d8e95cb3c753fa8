//! Settings catalog, seeded instance generation and the experiment harness.
//!
//! Random draws use ChaCha8 (`rand_chacha`), which is portable and
//! value-stable across platforms. Reals are produced from the top 53 bits of
//! a `u64` draw, `lo + (hi - lo) * (x >> 11) * 2^-53`. Independent streams of
//! one seed are selected with ChaCha's stream counter.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamic::{self, ArrivalOrder, DynamicRun, RunConfig, SimultaneousRule, UpdateMode};
use crate::error::{GameError, Result};
use crate::model::{ActionProfile, Instance};
use crate::static_game::{self, NashCheck, SequentialPass, NASH_EPS};

/// Streams carved out of one experiment seed.
const STREAM_INSTANCE: u64 = 0;
const STREAM_ARRIVALS: u64 = 1;
const STREAM_STATIC_ORDER: u64 = 2;
const GENERATION_ATTEMPTS: usize = 100;

/// Seeded ChaCha8 generator positioned on `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Child seed for stream `stream` of `seed`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    stream_rng(seed, stream).next_u64()
}

/// Uniform real in `[lo, hi)` (exactly `lo` when `lo == hi`).
pub fn uniform_in(rng: &mut impl RngCore, lo: f64, hi: f64) -> f64 {
    let unit = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    lo + (hi - lo) * unit
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    StaticOnePass,
    Sequential,
    Simultaneous,
}

impl ExperimentMode {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentMode::StaticOnePass => "static",
            ExperimentMode::Sequential => "sequential",
            ExperimentMode::Simultaneous => "simultaneous",
        }
    }
}

/// Which stability condition a generated instance must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feasibility {
    Any,
    Sequential,
    Simultaneous,
}

impl Feasibility {
    fn holds(self, inst: &Instance) -> bool {
        match self {
            Feasibility::Any => true,
            Feasibility::Sequential => inst.is_sequential_feasible(),
            Feasibility::Simultaneous => inst.is_simultaneous_feasible() && inst.is_sequential_feasible(),
        }
    }

    /// Strongest condition needed by a set of modes.
    pub fn for_modes(modes: &[ExperimentMode]) -> Self {
        if modes.contains(&ExperimentMode::Simultaneous) {
            Feasibility::Simultaneous
        } else if modes.contains(&ExperimentMode::Sequential) {
            Feasibility::Sequential
        } else {
            Feasibility::Any
        }
    }
}

/// Uniform instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n: usize,
    pub m: usize,
    pub mu_range: (f64, f64),
    pub lambda_range: (f64, f64),
    pub s0_range: (f64, f64),
    pub seed: u64,
}

impl GeneratorSpec {
    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(GameError::InvalidParameter("generator needs at least one server".into()));
        }
        for (name, (lo, hi)) in [("mu", self.mu_range), ("lambda", self.lambda_range), ("s0", self.s0_range)] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(GameError::InvalidParameter(format!("{name} range [{lo}, {hi}] is not ordered")));
            }
        }
        Ok(())
    }
}

/// Draws an instance; redraws (on fresh streams) until it is valid and meets `require`.
pub fn generate_instance(spec: &GeneratorSpec, require: Feasibility) -> Result<Instance> {
    spec.validate()?;
    let mut last_reason = String::new();
    for attempt in 0..GENERATION_ATTEMPTS {
        let mut rng = stream_rng(spec.seed, attempt as u64);
        let mu: Vec<f64> = (0..spec.m).map(|_| uniform_in(&mut rng, spec.mu_range.0, spec.mu_range.1)).collect();
        let lambda: Vec<f64> =
            (0..spec.n).map(|_| uniform_in(&mut rng, spec.lambda_range.0, spec.lambda_range.1)).collect();
        let s0: Vec<f64> = (0..spec.m).map(|_| uniform_in(&mut rng, spec.s0_range.0, spec.s0_range.1)).collect();
        match Instance::new(lambda, mu, s0) {
            Ok(inst) if require.holds(&inst) => return Ok(inst),
            Ok(inst) => {
                last_reason = match require {
                    Feasibility::Simultaneous if !inst.is_simultaneous_feasible() => {
                        inst.check_simultaneous_feasible().unwrap_err().to_string()
                    }
                    _ => inst.check_sequential_feasible().err().map(|e| e.to_string()).unwrap_or_default(),
                }
            }
            Err(e) => last_reason = e.to_string(),
        }
    }
    Err(GameError::GenerationFailed { attempts: GENERATION_ATTEMPTS, reason: last_reason })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SettingInstance {
    Fixed(Instance),
    Generated(GeneratorSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSpec {
    pub id: String,
    pub description: String,
    pub instance: SettingInstance,
    pub modes: Vec<ExperimentMode>,
}

impl SettingSpec {
    /// Resolves the instance; generated settings draw from `seed` when given,
    /// otherwise from the seed stored in the spec.
    pub fn instance(&self, seed: Option<u64>) -> Result<Instance> {
        match &self.instance {
            SettingInstance::Fixed(inst) => Ok(inst.clone()),
            SettingInstance::Generated(spec) => {
                let mut spec = spec.clone();
                if let Some(seed) = seed {
                    spec.seed = derive_seed(seed, STREAM_INSTANCE);
                }
                generate_instance(&spec, Feasibility::for_modes(&self.modes))
            }
        }
    }
}

const ALL_MODES: [ExperimentMode; 3] =
    [ExperimentMode::StaticOnePass, ExperimentMode::Sequential, ExperimentMode::Simultaneous];
// sum(lambda) ~ 1250 and ~ 300 exceed sum(mu) ~ 700 and ~ 250: no simultaneous run
const NO_SIMULTANEOUS: [ExperimentMode; 2] = [ExperimentMode::StaticOnePass, ExperimentMode::Sequential];

const SETTING_LAMBDA_8: [f64; 8] = [0.5, 0.5, 0.3, 0.7, 0.9, 0.1, 0.6, 0.2];

fn fixed(id: u8, lambda: &[f64], mu: &[f64], s0: &[f64], modes: &[ExperimentMode]) -> SettingSpec {
    let inst = Instance::new(lambda.to_vec(), mu.to_vec(), s0.to_vec()).expect("catalog instance is valid");
    SettingSpec {
        id: id.to_string(),
        description: format!("fixed, {} players, {} servers", inst.n(), inst.m()),
        instance: SettingInstance::Fixed(inst),
        modes: modes.to_vec(),
    }
}

fn generated(id: u8, spec: GeneratorSpec, modes: &[ExperimentMode]) -> SettingSpec {
    SettingSpec {
        id: id.to_string(),
        description: format!(
            "generated, {} players, {} servers, mu~U[{},{}], lambda~U[{},{}], s0~U[{},{}]",
            spec.n,
            spec.m,
            spec.mu_range.0,
            spec.mu_range.1,
            spec.lambda_range.0,
            spec.lambda_range.1,
            spec.s0_range.0,
            spec.s0_range.1
        ),
        instance: SettingInstance::Generated(spec),
        modes: modes.to_vec(),
    }
}

pub const SETTING_IDS: std::ops::RangeInclusive<u8> = 1..=7;

/// Catalog settings 1 through 7.
pub fn builtin_setting(id: u8) -> Result<SettingSpec> {
    let gen = |n, m, mu, lambda, seed| GeneratorSpec {
        n,
        m,
        mu_range: mu,
        lambda_range: lambda,
        s0_range: (10.0, 20.0),
        seed,
    };
    Ok(match id {
        1 => fixed(
            1,
            &[1.5, 0.5, 0.3, 0.7, 0.9, 0.1, 0.6, 0.2],
            &[1.4, 1.4, 1.2, 0.5, 0.4, 0.3, 0.2, 0.1],
            &[10.0, 10.0, 1.0, 10.0, 20.0, 20.0, 10.0, 1.0],
            &ALL_MODES,
        ),
        2 => generated(2, gen(500, 200, (3.0, 4.0), (2.0, 3.0), 2), &NO_SIMULTANEOUS),
        3 => generated(3, gen(100, 50, (1.0, 2.0), (0.0, 1.0), 3), &ALL_MODES),
        4 => generated(4, gen(200, 100, (2.0, 3.0), (1.0, 2.0), 4), &NO_SIMULTANEOUS),
        5 => fixed(5, &[0.5, 0.5, 0.3, 0.7], &[0.9, 0.8, 0.4, 0.01], &[10.0, 10.0, 1.0, 0.5], &ALL_MODES),
        6 => fixed(6, &SETTING_LAMBDA_8, &[1.4, 1.2, 1.0, 0.5], &[10.0, 10.0, 1.0, 10.0], &ALL_MODES),
        7 => fixed(7, &SETTING_LAMBDA_8, &[2.0, 2.0], &[10.0, 50.0], &ALL_MODES),
        other => return Err(GameError::UnknownSetting(other.to_string())),
    })
}

/// Parses a setting id given as text (`"1"`..`"7"`).
pub fn setting_by_name(name: &str) -> Result<SettingSpec> {
    name.trim().parse::<u8>().map_err(|_| GameError::UnknownSetting(name.to_string())).and_then(builtin_setting)
}

pub fn catalog() -> Vec<SettingSpec> {
    SETTING_IDS.map(|id| builtin_setting(id).expect("catalog id")).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StaticReport {
    pub order: Vec<usize>,
    pub pass: SequentialPass,
    pub nash: NashCheck,
    /// Mean player cost after each update.
    pub average_cost: Vec<f64>,
    /// Support size of each update's best response.
    pub support_sizes: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DynamicReport {
    pub run: DynamicRun,
    pub average_load: Vec<f64>,
    /// Running average cost of every player, indexed `[player][step]`.
    pub running_average: Vec<Vec<f64>>,
}

impl DynamicReport {
    pub fn converged_at(&self) -> Option<usize> {
        self.run.converged_at
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub setting: String,
    pub seed: u64,
    pub instance: Instance,
    pub static_pass: Option<StaticReport>,
    pub sequential: Option<DynamicReport>,
    pub simultaneous: Option<DynamicReport>,
}

impl ExperimentReport {
    pub fn dynamic_runs(&self) -> impl Iterator<Item = &DynamicReport> {
        self.sequential.iter().chain(self.simultaneous.iter())
    }

    pub fn is_empty(&self) -> bool {
        self.static_pass.is_none() && self.sequential.is_none() && self.simultaneous.is_none()
    }
}

/// Options for [`run_experiment`].
#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    pub max_steps: Option<usize>,
    /// Arrival order for sequential runs; seeded random when absent.
    pub order: Option<ArrivalOrder>,
    pub zero_tolerance: Option<f64>,
    /// Restricts the modes run; all modes of the setting when absent.
    pub modes: Option<Vec<ExperimentMode>>,
    pub simultaneous_rule: SimultaneousRule,
}

/// Result of running a single mode.
#[derive(Debug, Clone)]
pub enum ModeOutcome {
    Static(StaticReport),
    Dynamic(DynamicReport),
}

/// Runs one mode on a resolved instance. Independent of other modes.
pub fn run_mode(inst: &Instance, mode: ExperimentMode, seed: u64, options: &ExperimentOptions) -> Result<ModeOutcome> {
    match mode {
        ExperimentMode::StaticOnePass => {
            // a pinned arrival order also pins the static pass to index order
            let order = match options.order {
                None => random_permutation(inst.n(), seed),
                Some(_) => (0..inst.n()).collect(),
            };
            Ok(ModeOutcome::Static(static_report(inst, order)?))
        }
        ExperimentMode::Sequential | ExperimentMode::Simultaneous => {
            let update =
                if mode == ExperimentMode::Sequential { UpdateMode::Sequential } else { UpdateMode::Simultaneous };
            let order = options.order.clone().unwrap_or(ArrivalOrder::SeededRandom(derive_seed(seed, STREAM_ARRIVALS)));
            let mut config = match update {
                UpdateMode::Sequential => RunConfig::sequential(order),
                UpdateMode::Simultaneous => RunConfig::simultaneous(),
            };
            config.max_steps = options.max_steps;
            if let Some(tol) = options.zero_tolerance {
                config.zero_tolerance = tol;
            }
            config.simultaneous_rule = options.simultaneous_rule;
            let run = dynamic::run(inst, &config)?;
            Ok(ModeOutcome::Dynamic(dynamic_report(run)?))
        }
    }
}

/// Player order of the static pass for `seed`.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut order, &mut stream_rng(seed, STREAM_STATIC_ORDER));
    order
}

/// Fisher-Yates shuffle driven by the portable stream.
pub fn shuffle(items: &mut [usize], rng: &mut ChaCha8Rng) {
    for k in (1..items.len()).rev() {
        let j = rng.gen_range(0..=k);
        items.swap(k, j);
    }
}

pub fn static_report(inst: &Instance, order: Vec<usize>) -> Result<StaticReport> {
    let start = ActionProfile::uniform(inst.n(), inst.m());
    let pass = static_game::run_sequential_pass(inst, &start, &order)?;
    let nash = static_game::is_nash(inst, &pass.profile, NASH_EPS)?;
    let support_sizes = pass.updates.iter().map(|(_, br)| br.support_size).collect();

    // replay to record the mean cost after every update
    let mut profile = start;
    let mut average_cost = Vec::with_capacity(order.len());
    for (i, br) in &pass.updates {
        profile.set_row(*i, br.action.clone());
        average_cost.push(crate::model::social_cost(inst, &profile)? / inst.n() as f64);
    }
    Ok(StaticReport { order, pass, nash, average_cost, support_sizes })
}

pub fn dynamic_report(run: DynamicRun) -> Result<DynamicReport> {
    let average_load = run.average_load_series();
    let running_average =
        (0..run.instance.n()).map(|i| dynamic::running_average_cost(&run, i)).collect::<Result<Vec<_>>>()?;
    Ok(DynamicReport { run, average_load, running_average })
}

/// Runs every requested mode of a setting.
pub fn run_experiment(spec: &SettingSpec, seed: u64, options: &ExperimentOptions) -> Result<ExperimentReport> {
    let inst = spec.instance(Some(seed))?;
    let modes = options.modes.clone().unwrap_or_else(|| spec.modes.clone());
    check_modes(&inst, &modes)?;
    let outcomes = modes.iter().map(|&mode| run_mode(&inst, mode, seed, options)).collect::<Result<Vec<_>>>()?;
    Ok(assemble_report(spec, seed, inst, outcomes))
}

/// Rejects mode/instance combinations whose stability condition fails.
pub fn check_modes(inst: &Instance, modes: &[ExperimentMode]) -> Result<()> {
    for mode in modes {
        match mode {
            ExperimentMode::StaticOnePass => {}
            ExperimentMode::Sequential => inst.check_sequential_feasible()?,
            ExperimentMode::Simultaneous => inst.check_simultaneous_feasible()?,
        }
    }
    Ok(())
}

pub fn assemble_report(spec: &SettingSpec, seed: u64, inst: Instance, outcomes: Vec<ModeOutcome>) -> ExperimentReport {
    let mut report = ExperimentReport {
        setting: spec.id.clone(),
        seed,
        instance: inst,
        static_pass: None,
        sequential: None,
        simultaneous: None,
    };
    for outcome in outcomes {
        match outcome {
            ModeOutcome::Static(s) => report.static_pass = Some(s),
            ModeOutcome::Dynamic(d) => match d.run.mode() {
                UpdateMode::Sequential => report.sequential = Some(d),
                UpdateMode::Simultaneous => report.simultaneous = Some(d),
            },
        }
    }
    report
}

/// One cell of the scaling experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub n: usize,
    pub m: usize,
    pub converged_at: Option<usize>,
    pub bound_t_double_prime: u64,
}

/// Sequential convergence time over a grid of player and server counts, with
/// `mu ~ U[1,2]`, `lambda ~ U[0,1]`, `s0 ~ U[10,20]`.
pub fn convergence_grid(sizes: &[usize], seed: u64) -> Result<Vec<GridCell>> {
    let mut cells = Vec::with_capacity(sizes.len() * sizes.len());
    for &n in sizes {
        for &m in sizes {
            cells.push(grid_cell(n, m, seed)?);
        }
    }
    Ok(cells)
}

pub fn grid_cell(n: usize, m: usize, seed: u64) -> Result<GridCell> {
    let cell_seed = derive_seed(seed, ((n as u64) << 32) | m as u64);
    let spec =
        GeneratorSpec { n, m, mu_range: (1.0, 2.0), lambda_range: (0.0, 1.0), s0_range: (10.0, 20.0), seed: cell_seed };
    let inst = generate_instance(&spec, Feasibility::Sequential)?;
    let order = ArrivalOrder::SeededRandom(derive_seed(cell_seed, STREAM_ARRIVALS));
    let run = dynamic::run_sequential(&inst, &RunConfig::sequential(order))?;
    Ok(GridCell { n, m, converged_at: run.converged_at, bound_t_double_prime: dynamic::bound_t_double_prime(&inst)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_matches_reference_parameters() {
        let fixed_of = |id| match builtin_setting(id).unwrap().instance {
            SettingInstance::Fixed(inst) => inst,
            SettingInstance::Generated(_) => panic!("setting {id} should be fixed"),
        };
        let s1 = fixed_of(1);
        assert_eq!(s1.mu(), &[1.4, 1.4, 1.2, 0.5, 0.4, 0.3, 0.2, 0.1]);
        assert_eq!(s1.lambda(), &[1.5, 0.5, 0.3, 0.7, 0.9, 0.1, 0.6, 0.2]);
        assert_eq!(s1.s0(), &[10.0, 10.0, 1.0, 10.0, 20.0, 20.0, 10.0, 1.0]);

        let s5 = fixed_of(5);
        assert_eq!(s5.mu(), &[0.9, 0.8, 0.4, 0.01]);
        assert_eq!(s5.lambda(), &[0.5, 0.5, 0.3, 0.7]);
        assert_eq!(s5.s0(), &[10.0, 10.0, 1.0, 0.5]);

        let s6 = fixed_of(6);
        assert_eq!(s6.mu(), &[1.4, 1.2, 1.0, 0.5]);
        assert_eq!(s6.lambda(), &[0.5, 0.5, 0.3, 0.7, 0.9, 0.1, 0.6, 0.2]);
        assert_eq!(s6.s0(), &[10.0, 10.0, 1.0, 10.0]);
        assert_eq!((s6.n(), s6.m()), (8, 4));

        let s7 = fixed_of(7);
        assert_eq!(s7.mu(), &[2.0, 2.0]);
        assert_eq!(s7.lambda(), &[0.5, 0.5, 0.3, 0.7, 0.9, 0.1, 0.6, 0.2]);
        assert_eq!(s7.s0(), &[10.0, 50.0]);

        let gen_of = |id| match builtin_setting(id).unwrap().instance {
            SettingInstance::Generated(g) => g,
            SettingInstance::Fixed(_) => panic!("setting {id} should be generated"),
        };
        let g2 = gen_of(2);
        assert_eq!(
            (g2.n, g2.m, g2.mu_range, g2.lambda_range, g2.s0_range),
            (500, 200, (3.0, 4.0), (2.0, 3.0), (10.0, 20.0))
        );
        let g3 = gen_of(3);
        assert_eq!(
            (g3.n, g3.m, g3.mu_range, g3.lambda_range, g3.s0_range),
            (100, 50, (1.0, 2.0), (0.0, 1.0), (10.0, 20.0))
        );
        let g4 = gen_of(4);
        assert_eq!(
            (g4.n, g4.m, g4.mu_range, g4.lambda_range, g4.s0_range),
            (200, 100, (2.0, 3.0), (1.0, 2.0), (10.0, 20.0))
        );
    }

    #[test]
    fn unknown_setting() {
        assert!(matches!(builtin_setting(0), Err(GameError::UnknownSetting(_))));
        assert!(matches!(builtin_setting(9), Err(GameError::UnknownSetting(_))));
        assert!(setting_by_name("nine").is_err());
        assert_eq!(setting_by_name(" 7 ").unwrap().id, "7");
        assert_eq!(catalog().len(), 7);
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = GeneratorSpec {
            n: 10,
            m: 5,
            mu_range: (1.0, 2.0),
            lambda_range: (0.0, 1.0),
            s0_range: (10.0, 20.0),
            seed: 77,
        };
        let a = generate_instance(&spec, Feasibility::Sequential).unwrap();
        let b = generate_instance(&spec, Feasibility::Sequential).unwrap();
        assert_eq!(a, b);
        let other = generate_instance(&GeneratorSpec { seed: 78, ..spec.clone() }, Feasibility::Sequential).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn setting3_generator_is_sequentially_feasible() {
        let inst = builtin_setting(3).unwrap().instance(Some(5)).unwrap();
        assert_eq!((inst.n(), inst.m()), (100, 50));
        assert!(inst.lambda_max() < 1.0);
        assert!(inst.mu_total() >= 50.0);
        assert!(inst.is_sequential_feasible());
    }

    #[test]
    fn degenerate_range() {
        let spec =
            GeneratorSpec { n: 4, m: 3, mu_range: (2.0, 2.0), lambda_range: (2.0, 2.0), s0_range: (2.0, 2.0), seed: 1 };
        let inst = generate_instance(&spec, Feasibility::Any).unwrap();
        assert!(inst.mu().iter().chain(inst.lambda()).chain(inst.s0()).all(|x| *x == 2.0));
    }

    #[test]
    fn generator_gives_up_on_impossible_feasibility() {
        let spec =
            GeneratorSpec { n: 3, m: 2, mu_range: (1.0, 1.0), lambda_range: (5.0, 6.0), s0_range: (0.0, 1.0), seed: 9 };
        assert!(matches!(
            generate_instance(&spec, Feasibility::Sequential),
            Err(GameError::GenerationFailed { attempts: 100, .. })
        ));
        let bad = GeneratorSpec { mu_range: (2.0, 1.0), ..spec };
        assert!(generate_instance(&bad, Feasibility::Any).is_err());
    }

    #[test]
    fn uniform_uses_53_bits() {
        struct Fixed(u64);
        impl RngCore for Fixed {
            fn next_u32(&mut self) -> u32 {
                self.0 as u32
            }
            fn next_u64(&mut self) -> u64 {
                self.0
            }
            fn fill_bytes(&mut self, _: &mut [u8]) {}
            fn try_fill_bytes(&mut self, _: &mut [u8]) -> std::result::Result<(), rand::Error> {
                Ok(())
            }
        }
        assert_eq!(uniform_in(&mut Fixed(0), 3.0, 4.0), 3.0);
        assert_eq!(uniform_in(&mut Fixed(1 << 63), 0.0, 1.0), 0.5);
        assert!(uniform_in(&mut Fixed(u64::MAX), 0.0, 1.0) < 1.0);
    }

    #[test]
    fn infeasible_mode_is_rejected() {
        let spec = builtin_setting(2).unwrap();
        let inst = Instance::new(vec![2.5, 3.0], vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(check_modes(&inst, &[ExperimentMode::Simultaneous]).is_err());
        let options = ExperimentOptions { modes: Some(vec![ExperimentMode::Simultaneous]), ..Default::default() };
        assert!(matches!(run_experiment(&spec, 1, &options), Err(GameError::SimultaneousInfeasible { .. })));
    }

    #[test]
    fn setting1_all_modes() {
        let report = run_experiment(&builtin_setting(1).unwrap(), 42, &ExperimentOptions::default()).unwrap();
        let st = report.static_pass.as_ref().unwrap();
        assert!(st.nash.is_nash);
        assert_eq!(st.pass.potentials.len(), 8);
        let seq = report.sequential.as_ref().unwrap();
        let sim = report.simultaneous.as_ref().unwrap();
        assert!(seq.converged_at().is_some());
        assert!(sim.converged_at().is_some());
        assert_eq!(seq.run.trace.last().unwrap().total_load, 0.0);
        assert_eq!(sim.run.trace.last().unwrap().total_load, 0.0);
    }
}
