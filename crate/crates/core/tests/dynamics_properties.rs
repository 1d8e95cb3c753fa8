use lbgame_core::dynamic::{
    bound_alternative, bound_t_double_prime, bound_t_prime, run, ArrivalOrder, RunConfig, SimultaneousRule,
};
use lbgame_core::model::Instance;
use proptest::prelude::*;

fn arb_instance() -> impl Strategy<Value = Instance> {
    (1usize..=6, 1usize..=6)
        .prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(0.05f64..2.0, n),
                prop::collection::vec(0.1f64..2.0, m),
                prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..20.0], m),
            )
        })
        .prop_filter_map("needs lambda_max < sum mu", |(lambda, mu, s0)| {
            let inst = Instance::new(lambda, mu, s0).ok()?;
            inst.is_sequential_feasible().then_some(inst)
        })
}

fn arb_order() -> impl Strategy<Value = ArrivalOrder> {
    prop_oneof![Just(ArrivalOrder::RoundRobin), any::<u64>().prop_map(ArrivalOrder::SeededRandom)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn converges_within_both_bounds(inst in arb_instance(), order in arb_order()) {
        let r = run(&inst, &RunConfig::sequential(order).with_confirm_steps(5)).unwrap();
        let at = r.converged_at.expect("sequential runs empty the system");
        prop_assert!(at as u64 <= bound_t_double_prime(&inst).unwrap());
        prop_assert!(at as u64 <= bound_alternative(&inst).unwrap());
        for t in at..=r.trace.len() {
            prop_assert!(r.state(t).as_slice().iter().all(|s| *s == 0.0));
        }
    }

    #[test]
    fn drift_is_exact_after_full_support(inst in arb_instance(), order in arb_order()) {
        let r = run(&inst, &RunConfig::sequential(order)).unwrap();
        let t_prime = bound_t_prime(&inst) as usize;
        for rec in r.trace.iter().filter(|rec| rec.t >= t_prime && rec.total_load > 0.0) {
            let drop = rec.loads_before.total() - rec.total_load;
            let expected = inst.mu_total() - inst.lambda()[rec.arrivals[0]];
            prop_assert!((drop - expected).abs() <= 1e-9, "step {}: drop {drop}, expected {expected}", rec.t);
        }
    }

    #[test]
    fn supports_are_nested_and_full_after_t_prime(inst in arb_instance(), order in arb_order()) {
        let r = run(&inst, &RunConfig::sequential(order)).unwrap();
        let t_prime = bound_t_prime(&inst) as usize;
        let mut previous: Vec<usize> = Vec::new();
        for rec in &r.trace {
            let support = rec.actions[0].support();
            prop_assert!(previous.iter().all(|j| support.contains(j)), "support shrank at step {}", rec.t);
            if rec.t >= t_prime {
                prop_assert_eq!(rec.support_sizes[0], inst.m());
            }
            previous = support;
        }
    }

    #[test]
    fn empty_system_plays_rate_proportional(inst in arb_instance(), seed in any::<u64>()) {
        let r = run(&inst, &RunConfig::sequential(ArrivalOrder::SeededRandom(seed)).with_confirm_steps(10)).unwrap();
        let at = r.converged_at.unwrap();
        for rec in &r.trace[at..] {
            let i = rec.arrivals[0];
            for (a, u) in rec.actions[0].as_slice().iter().zip(inst.mu()) {
                prop_assert!((a - u / inst.mu_total()).abs() <= 1e-9);
            }
            let steady = inst.lambda()[i].powi(2) / (2.0 * inst.mu_total());
            prop_assert!((rec.instantaneous_costs[0] - steady).abs() <= 1e-9);
        }
    }

    #[test]
    fn simultaneous_rounds_drain_no_faster_than_net_rate(inst in arb_instance()) {
        prop_assume!(inst.is_simultaneous_feasible());
        let net = inst.mu_total() - inst.lambda_total();
        let r = run(&inst, &RunConfig::simultaneous().with_max_steps(20_000)).unwrap();
        for rec in &r.trace {
            prop_assert!(rec.loads_before.total() - rec.total_load <= net + 1e-9);
        }
        if let Some(at) = r.converged_at {
            prop_assert!(at as f64 >= inst.s0_total() / net - 1e-6);
        }
    }

    #[test]
    fn simultaneous_rules_agree_for_one_player(inst in arb_instance()) {
        let single = Instance::new(vec![inst.lambda()[0]], inst.mu().to_vec(), inst.s0().to_vec()).unwrap();
        prop_assume!(single.is_simultaneous_feasible());
        let stage = run(&single, &RunConfig::simultaneous()).unwrap();
        let previous = run(&single, &RunConfig::simultaneous().with_simultaneous_rule(SimultaneousRule::PreviousRound)).unwrap();
        prop_assert_eq!(stage.trace, previous.trace);
    }
}
