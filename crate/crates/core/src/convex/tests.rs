use super::*;
use crate::model::{AveragingFactor, PriorityScheme, Service, Usage, Vm, Vnf};

fn scenario(caps: &[f64], services: &[(&[f64], f64)], factor: AveragingFactor) -> Scenario {
    let n_vnfs = services.iter().map(|(r, _)| r.len()).max().unwrap_or(1);
    Scenario {
        vms: caps
            .iter()
            .enumerate()
            .map(|(i, &c)| Vm { id: format!("m{i}"), max_capability: c, fixed_cost: 8.0, proportional_cost: 0.5 })
            .collect(),
        vnfs: (0..n_vnfs).map(|i| Vnf { id: format!("v{i}"), load_coefficient: 1e-3 }).collect(),
        services: services
            .iter()
            .enumerate()
            .map(|(i, (rates, d))| Service {
                id: format!("s{i}"),
                arrival_rates: rates.iter().enumerate().map(|(v, &r)| (VnfIdx(v), r)).collect(),
                max_delay: *d,
            })
            .collect(),
        priority_scheme: PriorityScheme::PerVnf,
        jitter: None,
        averaging_factor: factor,
        seed: None,
    }
}

fn place(state: &mut DeploymentState, s: usize, v: usize, m: usize) {
    state.placement.insert(VmIdx(m), VnfIdx(v));
    state.usage.insert(Usage { service: ServiceIdx(s), vnf: VnfIdx(v), vm: VmIdx(m) });
}

#[test]
fn single_pair_scales_to_its_delay_target() {
    let sc = scenario(&[10.0], &[(&[2000.0], 1.0 / 3.0 * 1e-3)], AveragingFactor::SelfExcluded);
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    let sol = solve(&build_problem(&st, &sc)).unwrap();
    assert!(sol.is_optimal());
    assert!((sol.mu[&VmIdx(0)] - 5.0).abs() < 1e-6, "{:?}", sol.mu);
    assert!((sol.objective_value - 10.5).abs() < 1e-6);
    assert!(sol.kkt_residual <= KKT_TOLERANCE);
}

#[test]
fn tight_target_is_infeasible_with_minimal_iis() {
    let sc = scenario(&[10.0, 10.0], &[(&[2000.0], 1e-4)], AveragingFactor::SelfExcluded);
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    let p = build_problem(&st, &sc);
    let sol = solve(&p).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    let expected: BTreeSet<_> = [ConstraintId::Capacity(VmIdx(0)), ConstraintId::Delay(ServiceIdx(0))].into();
    assert_eq!(sol.iis, expected);
}

#[test]
fn free_capability_costs_only_activation() {
    let mut sc = scenario(&[10.0], &[(&[2000.0], 1e-3)], AveragingFactor::SelfExcluded);
    sc.vms[0].proportional_cost = 0.0;
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    let sol = solve(&build_problem(&st, &sc)).unwrap();
    assert!((sol.objective_value - 8.0).abs() < 1e-9);
}

#[test]
fn averaging_targets_follow_the_factor() {
    let rates: &[(&[f64], f64)] = &[(&[2000.0], 0.01), (&[1000.0], 0.01)];
    for (factor, expected) in [(AveragingFactor::SelfExcluded, 1500.0), (AveragingFactor::SelfIncluded, 3000.0)] {
        let sc = scenario(&[10.0], rates, factor);
        let mut st = DeploymentState::for_scenario(&sc);
        place(&mut st, 0, 0, 0);
        place(&mut st, 1, 0, 0);
        let p = build_problem(&st, &sc);
        assert_eq!(p.averaging.len(), 1);
        assert_eq!(p.averaging[0].target_rate, expected);
    }
    let sc = scenario(&[10.0], &rates[..1], AveragingFactor::SelfExcluded);
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    let p = build_problem(&st, &sc);
    assert_eq!(p.terms[0].higher, HigherRate::Free { upper: 0.0 });
    assert_eq!(p.averaging[0].target_rate, 0.0);
}

#[test]
fn shared_instance_solution_satisfies_every_constraint() {
    let sc = scenario(&[10.0], &[(&[2000.0], 1.5e-3), (&[1000.0], 0.6e-3)], AveragingFactor::SelfExcluded);
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    place(&mut st, 1, 0, 0);
    let p = build_problem(&st, &sc);
    let sol = solve(&p).unwrap();
    assert!(sol.is_optimal());
    for (id, r) in p.residuals(&sol.mu, &sol.lambda_tilde) {
        assert!(r <= 1e-8, "{id}: {r}");
    }
    let sum: f64 = sol.lambda_tilde.values().sum();
    assert!((sum - 1500.0).abs() < 1e-6);

    // grid search over (mu, split) for the cheapest feasible capability
    let mut best = f64::INFINITY;
    for i in 0..=2000 {
        let mu = 3.0 + 7.0 * i as f64 / 2000.0;
        let feasible = (0..=300).any(|k| {
            let a = 1000.0 * k as f64 / 300.0;
            let b = 1500.0 - a;
            let lt: BTreeMap<_, _> = [((ServiceIdx(0), VnfIdx(0)), a), ((ServiceIdx(1), VnfIdx(0)), b)].into();
            let m: BTreeMap<_, _> = [(VmIdx(0), mu)].into();
            b <= 2000.0
                && p.residuals(&m, &lt).iter().all(|(_, r)| *r <= 0.0)
                && 1e-3 * (a + 2000.0) < mu
                && 1e-3 * (b + 1000.0) < mu
        });
        if feasible {
            best = mu;
            break;
        }
    }
    assert!(sol.mu[&VmIdx(0)] <= best + 1e-6, "solver {} grid {}", sol.mu[&VmIdx(0)], best);
    assert!(sol.mu[&VmIdx(0)] >= best - 7.0 / 2000.0 - 1e-6);
}

#[test]
fn iis_does_not_depend_on_constraint_order() {
    // s0 alone is hopeless; s1 is comfortable on its own VM
    let sc = scenario(&[10.0, 10.0], &[(&[2000.0, 0.0], 1e-4), (&[0.0, 1000.0], 0.01)], AveragingFactor::SelfExcluded);
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    place(&mut st, 1, 1, 1);
    let p = build_problem(&st, &sc);
    let forward = extract_iis(&p).unwrap();
    let mut order = p.constraint_ids();
    order.reverse();
    let backward = extract_iis_ordered(&p, &order).unwrap();
    assert_eq!(forward, backward);
    assert_eq!(forward, [ConstraintId::Capacity(VmIdx(0)), ConstraintId::Delay(ServiceIdx(0))].into());
    for c in &forward {
        let mut rest = forward.clone();
        rest.remove(c);
        assert!(is_feasible(&p, &rest).unwrap());
    }
}

#[test]
fn dropping_every_capacity_leaves_a_feasible_problem() {
    let sc = scenario(&[3.0], &[(&[2000.0], 1e-5), (&[900.0], 1e-5)], AveragingFactor::SelfIncluded);
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    place(&mut st, 1, 0, 0);
    let p = build_problem(&st, &sc);
    let rest: BTreeSet<_> =
        p.constraint_ids().into_iter().filter(|c| !matches!(c, ConstraintId::Capacity(_))).collect();
    assert!(is_feasible(&p, &rest).unwrap());
    assert!(!is_feasible(&p, &p.constraint_ids().into_iter().collect()).unwrap());
}

#[test]
fn fixed_problem_uses_realized_rates() {
    let sc = scenario(&[10.0], &[(&[2000.0], 1e-3), (&[1000.0], 1e-3)], AveragingFactor::SelfExcluded);
    let mut st = DeploymentState::for_scenario(&sc);
    place(&mut st, 0, 0, 0);
    place(&mut st, 1, 0, 0);
    let prio = PrioritySpec::Deterministic {
        scheme: PriorityScheme::PerVnf,
        values: [((ServiceIdx(0), VnfIdx(0)), 2.0), ((ServiceIdx(1), VnfIdx(0)), 1.0)].into(),
    };
    let p = build_fixed_problem(&st, &sc, &prio);
    assert_eq!(p.free_pairs(), 0);
    assert!(p.averaging.is_empty());
    let higher: Vec<_> = p.terms.iter().map(|t| t.higher).collect();
    assert_eq!(higher, vec![HigherRate::Fixed(0.0), HigherRate::Fixed(2000.0)]);
    let sol = solve(&p).unwrap();
    assert!(sol.is_optimal());
    // the low-priority class binds: mu / ((mu-2)(mu-3)) = 1
    let mu = sol.mu[&VmIdx(0)];
    assert!((mu - (3.0 + 3.0f64.sqrt())).abs() < 1e-6, "{mu}");
}
