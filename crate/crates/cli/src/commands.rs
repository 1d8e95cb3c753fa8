use std::fs;
use std::path::{Path, PathBuf};

use lbgame_core::dynamic::{bound_alternative, bound_t_double_prime, bound_t_prime, ArrivalOrder, UpdateMode};
use lbgame_core::experiments::{
    assemble_report, catalog, check_modes, grid_cell, random_permutation, run_mode, setting_by_name, static_report,
    ExperimentMode, ExperimentOptions, GridCell, ModeOutcome, SettingInstance, SettingSpec,
};
use lbgame_core::static_game::{empirical_poa, equilibrium_by_one_pass, opt_lower_bound, poa_upper_bound};
use lbgame_core::trace::{
    export_report, export_trace, sidecar_manifest_path, write_manifest, Bounds, Manifest, ManifestRun, TraceFormat,
};
use lbgame_core::{social_cost, Instance};
use rayon::prelude::*;

use crate::config::{parse_format, parse_mode, parse_rule, resolve_source, ConfigFile, OrderArg, Source};
use crate::{CliError, DynamicArgs, GridArgs, InstanceArgs, SettingsRunArgs, StaticArgs};

fn load_config(path: Option<&PathBuf>) -> Result<ConfigFile, CliError> {
    path.map_or_else(|| Ok(ConfigFile::default()), |p| ConfigFile::load(p))
}

/// Flag, then config, then a fresh random seed; the choice is always printed.
fn resolve_seed(flag: Option<u64>, config: &ConfigFile) -> u64 {
    let seed = flag.or(config.run.seed).unwrap_or_else(rand::random);
    println!("seed: {seed}");
    seed
}

fn prepare(args: &InstanceArgs) -> Result<(ConfigFile, u64, Source), CliError> {
    let config = load_config(args.config.as_ref())?;
    let seed = resolve_seed(args.seed, &config);
    let source = resolve_source(args.setting.as_deref(), &config, seed)?;
    println!("instance: setting {} ({})", source.spec.id, source.spec.description);
    Ok((config, seed, source))
}

fn order_from(flag: Option<&OrderArg>, config: &ConfigFile, default: OrderArg) -> Result<OrderArg, CliError> {
    match (flag, &config.run.order) {
        (Some(order), _) => Ok(order.clone()),
        (None, Some(text)) => text.parse().map_err(CliError::usage),
        (None, None) => Ok(default),
    }
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::failed(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| CliError::failed(format!("i/o error on {}: {e}", path.display())))
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool, CliError> {
    if jobs == 0 {
        return Err(CliError::usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(|e| CliError::failed(e.to_string()))
}

pub fn static_game(args: StaticArgs) -> Result<(), CliError> {
    let (config, seed, Source { instance: inst, .. }) = prepare(&args.instance)?;
    let order = match order_from(args.order.as_ref(), &config, OrderArg::RoundRobin)? {
        OrderArg::RoundRobin => (0..inst.n()).collect(),
        OrderArg::Random => random_permutation(inst.n(), seed),
        file @ OrderArg::File(_) => match file.resolve(inst.n())? {
            Some(ArrivalOrder::Explicit(players)) => players,
            _ => unreachable!("file orders are explicit"),
        },
    };
    let report = static_report(&inst, order)?;
    println!("initial_potential: {}", report.pass.initial_potential);
    for (k, ((i, br), phi)) in report.pass.updates.iter().zip(&report.pass.potentials).enumerate() {
        println!("update {}: player {i} support {} potential {phi}", k + 1, br.support_size);
    }
    let verdict = if report.nash.is_nash { "reached" } else { "not reached" };
    let updates = report.pass.updates.len();
    println!(
        "nash: {verdict} after {updates} update{} (max improvement {:e})",
        if updates == 1 { "" } else { "s" },
        report.nash.max_improvement
    );
    if let Some(path) = args.out.or(config.output.path) {
        write_json(&path, &report)?;
        println!("profile: {}", path.display());
    }
    Ok(())
}

fn print_bounds(inst: &Instance) {
    println!("t_prime: {}", bound_t_prime(inst));
    match (bound_t_double_prime(inst), bound_alternative(inst)) {
        (Ok(t2), Ok(alt)) => {
            println!("t_double_prime: {t2}");
            println!("alternative_bound: {alt}");
        }
        (Err(e), _) | (_, Err(e)) => println!("t_double_prime: n/a ({e})"),
    }
}

pub fn dynamic(args: DynamicArgs) -> Result<(), CliError> {
    let (config, seed, source) = prepare(&args.instance)?;
    let inst = &source.instance;
    let mode = match (args.mode, &config.run.mode) {
        (Some(m), _) => m,
        (None, Some(text)) => parse_mode(text).map_err(CliError::usage)?,
        (None, None) => UpdateMode::Sequential,
    };
    let rule = match (args.rule, &config.run.rule) {
        (Some(r), _) => r,
        (None, Some(text)) => parse_rule(text).map_err(CliError::usage)?,
        (None, None) => Default::default(),
    };
    let order_arg = order_from(args.order.as_ref(), &config, OrderArg::Random)?;
    let options = ExperimentOptions {
        max_steps: args.max_steps.or(config.run.max_steps),
        order: order_arg.resolve(inst.n())?,
        zero_tolerance: args.zero_tolerance.or(config.run.zero_tolerance),
        modes: None,
        simultaneous_rule: rule,
    };
    let exp_mode = match mode {
        UpdateMode::Sequential => ExperimentMode::Sequential,
        UpdateMode::Simultaneous => ExperimentMode::Simultaneous,
    };
    let ModeOutcome::Dynamic(report) = run_mode(inst, exp_mode, seed, &options)? else {
        unreachable!("dynamic modes yield dynamic reports")
    };
    let run = &report.run;
    match mode {
        UpdateMode::Sequential => println!("mode: sequential (order {})", describe_order(&run.config.order)),
        UpdateMode::Simultaneous => println!("mode: simultaneous (rule {})", rule.label()),
    }
    println!("steps: {}", run.trace.len());
    match run.converged_at {
        Some(t) => println!("converged_at: {t}"),
        None => println!("converged_at: none within {} steps", run.max_steps),
    }
    print_bounds(inst);
    println!("final_total_load: {}", run.trace.last().map_or(inst.s0_total(), |r| r.total_load));

    if let Some(path) = args.out.or(config.output.path) {
        let format = match (args.format, &config.output.format) {
            (Some(f), _) => f,
            (None, Some(text)) => parse_format(text).map_err(CliError::usage)?,
            (None, None) if path.extension().is_some_and(|e| e == "jsonl") => TraceFormat::Jsonl,
            (None, None) => TraceFormat::Csv,
        };
        export_trace(run, &path, format)?;
        let mut spec = source.spec.clone();
        spec.modes = vec![exp_mode];
        let manifest = Manifest {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            spec,
            instance: inst.clone(),
            format,
            bounds: Bounds::of(inst),
            static_profile: None,
            runs: vec![ManifestRun {
                mode: mode.label().to_string(),
                file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                steps: run.trace.len(),
                converged_at: run.converged_at,
            }],
        };
        let manifest_path = sidecar_manifest_path(&path);
        write_manifest(&manifest_path, &manifest)?;
        println!("trace: {} ({})", path.display(), format.extension());
        println!("manifest: {}", manifest_path.display());
    }
    Ok(())
}

fn describe_order(order: &ArrivalOrder) -> String {
    match order {
        ArrivalOrder::RoundRobin => "round-robin".into(),
        ArrivalOrder::SeededRandom(s) => format!("random, stream seed {s}"),
        ArrivalOrder::Explicit(seq) => format!("explicit, {} entries", seq.len()),
    }
}

pub fn poa(args: InstanceArgs) -> Result<(), CliError> {
    let (_, _, Source { instance: inst, .. }) = prepare(&args)?;
    let bound = poa_upper_bound(&inst)?;
    let lower = opt_lower_bound(&inst)?;
    let ne = equilibrium_by_one_pass(&inst)?;
    let cost = social_cost(&inst, &ne)?;
    let poa = empirical_poa(&inst, &ne)?;
    println!("poa_upper_bound: {bound}");
    println!("opt_lower_bound: {lower}");
    println!("ne_social_cost: {cost}");
    println!("empirical_poa: {poa}");
    Ok(())
}

fn mode_list(modes: &[ExperimentMode]) -> String {
    modes.iter().map(|m| m.label()).collect::<Vec<_>>().join(",")
}

pub fn settings_list() -> Result<(), CliError> {
    for spec in catalog() {
        match &spec.instance {
            SettingInstance::Fixed(inst) => println!(
                "setting {}: fixed n={} m={} mu={:?} lambda={:?} s0={:?} modes={}",
                spec.id,
                inst.n(),
                inst.m(),
                inst.mu(),
                inst.lambda(),
                inst.s0(),
                mode_list(&spec.modes)
            ),
            SettingInstance::Generated(g) => println!(
                "setting {}: generated n={} m={} mu~U[{},{}] lambda~U[{},{}] s0~U[{},{}] modes={}",
                spec.id,
                g.n,
                g.m,
                g.mu_range.0,
                g.mu_range.1,
                g.lambda_range.0,
                g.lambda_range.1,
                g.s0_range.0,
                g.s0_range.1,
                mode_list(&spec.modes)
            ),
        }
    }
    Ok(())
}

pub fn settings_run(args: SettingsRunArgs) -> Result<(), CliError> {
    let spec: SettingSpec = setting_by_name(&args.id)?;
    let seed = resolve_seed(args.seed, &ConfigFile::default());
    let inst = spec.instance(Some(seed))?;
    println!("instance: setting {} ({})", spec.id, spec.description);
    check_modes(&inst, &spec.modes)?;
    let options = ExperimentOptions {
        max_steps: args.max_steps,
        order: args.order.map(|o| o.resolve(inst.n())).transpose()?.flatten(),
        ..Default::default()
    };
    let pool = thread_pool(args.jobs)?;
    let outcomes = pool.install(|| {
        spec.modes.par_iter().map(|&mode| run_mode(&inst, mode, seed, &options)).collect::<Result<Vec<_>, _>>()
    })?;
    let report = assemble_report(&spec, seed, inst, outcomes);

    if let Some(st) = &report.static_pass {
        let verdict = if st.nash.is_nash { "reached" } else { "not reached" };
        println!("static: nash {verdict} after {} updates", st.pass.updates.len());
    }
    for run in report.dynamic_runs() {
        let at = run.converged_at().map_or("none".to_string(), |t| t.to_string());
        println!("{}: converged_at {at} ({} steps)", run.run.mode().label(), run.run.trace.len());
    }
    print_bounds(&report.instance);
    let dir = args.out.unwrap_or_else(|| PathBuf::from(format!("setting-{}-seed-{seed}", spec.id)));
    let manifest = export_report(&report, &spec, &dir, args.format)?;
    println!("output: {} ({} traces + manifest)", dir.display(), manifest.runs.len());
    Ok(())
}

pub fn settings_grid(args: GridArgs) -> Result<(), CliError> {
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(CliError::usage("--sizes needs positive counts"));
    }
    let seed = resolve_seed(args.seed, &ConfigFile::default());
    let pairs: Vec<(usize, usize)> = args.sizes.iter().flat_map(|&n| args.sizes.iter().map(move |&m| (n, m))).collect();
    let pool = thread_pool(args.jobs)?;
    let cells: Vec<GridCell> =
        pool.install(|| pairs.par_iter().map(|&(n, m)| grid_cell(n, m, seed)).collect::<Result<_, _>>())?;

    let header: Vec<String> = args.sizes.iter().map(|m| format!("{m:>8}")).collect();
    println!("n \\ m {}", header.join(""));
    for (row, n) in cells.chunks(args.sizes.len()).zip(&args.sizes) {
        let values: Vec<String> =
            row.iter().map(|c| format!("{:>8}", c.converged_at.map_or("-".into(), |t| t.to_string()))).collect();
        println!("{n:>5} {}", values.join(""));
    }
    if let Some(path) = args.out {
        let mut text = String::from("n,m,converged_at,t_double_prime\n");
        for c in &cells {
            let at = c.converged_at.map_or(String::new(), |t| t.to_string());
            text.push_str(&format!("{},{},{at},{}\n", c.n, c.m, c.bound_t_double_prime));
        }
        fs::write(&path, text).map_err(|e| CliError::failed(format!("i/o error on {}: {e}", path.display())))?;
        println!("grid: {}", path.display());
    }
    Ok(())
}
