//! Admission of services one at a time: assignment, scaling, priority
//! realization and, when scaling fails, pruning of the candidate graph.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::assignment::{apply_assignment, build_graph, hungarian, Assignment, CandidateGraph};
use crate::convex::{
    build_fixed_problem, build_problem, realize_priorities, solve, verify_realization, ConstraintId,
    DelayReport,
};
use crate::error::{Error, Result};
use crate::model::{DeploymentState, Scenario, ServiceIdx, VmIdx, VnfIdx};
use crate::oracle;

/// How the scaling step picks priorities for a tentative placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Joint scaling over capabilities and higher-priority rates, then realization.
    #[default]
    FlexShare,
    /// Exhaustive search over priority orderings, each scaled separately.
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AdmissionStatus {
    Admitted,
    Rejected,
}

/// One pass of the admission loop, as written to the trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub service: String,
    pub iteration: usize,
    /// VNF id to VM id.
    pub assignment: BTreeMap<String, String>,
    pub matching_cost: f64,
    pub outcome: &'static str,
    pub iis: Vec<String>,
    pub pruned: Option<(String, String)>,
    pub total_cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionResult {
    pub service: ServiceIdx,
    pub status: AdmissionStatus,
    /// Updated state when admitted, the input state otherwise.
    pub state: DeploymentState,
    /// Scaling attempts made.
    pub iterations: usize,
    pub initial_edges: usize,
    pub pruned_edges: Vec<(VnfIdx, VmIdx)>,
    pub cost_delta: f64,
    pub delay_report: Option<DelayReport>,
    pub fit_residual: f64,
    pub reason: Option<String>,
    pub trace: Vec<TraceRecord>,
}

impl AdmissionResult {
    pub fn is_admitted(&self) -> bool {
        self.status == AdmissionStatus::Admitted
    }

    fn rejected(service: ServiceIdx, state: &DeploymentState, reason: String) -> Self {
        AdmissionResult {
            service,
            status: AdmissionStatus::Rejected,
            state: state.clone(),
            iterations: 0,
            initial_edges: 0,
            pruned_edges: Vec::new(),
            cost_delta: 0.0,
            delay_report: None,
            fit_residual: 0.0,
            reason: Some(reason),
            trace: Vec::new(),
        }
    }
}

/// Result of scaling one tentative placement.
pub(crate) enum StepOutcome {
    Feasible { state: DeploymentState, fit_residual: f64 },
    Infeasible { iis: BTreeSet<ConstraintId> },
}

/// Scales `tentative` and fixes priorities. The capabilities of a feasible
/// outcome are the cheapest ones meeting every delay target under the
/// realized priorities.
pub(crate) fn scale_step(
    tentative: &DeploymentState,
    scenario: &Scenario,
    strategy: Strategy,
) -> Result<StepOutcome> {
    let relaxed = build_problem(tentative, scenario);
    let (priorities, fit_residual) = match strategy {
        Strategy::FlexShare => {
            let sol = solve(&relaxed)?;
            if !sol.is_optimal() {
                return Ok(StepOutcome::Infeasible { iis: sol.iis });
            }
            let real = realize_priorities(&sol, tentative, scenario)?;
            (real.priorities, real.fit_residual)
        }
        Strategy::BruteForce => match oracle::brute_force_priorities(tentative, scenario)? {
            Some(best) => (best.priorities, 0.0),
            None => {
                let sol = solve(&relaxed)?;
                if !sol.is_optimal() {
                    return Ok(StepOutcome::Infeasible { iis: sol.iis });
                }
                let real = realize_priorities(&sol, tentative, scenario)?;
                (real.priorities, real.fit_residual)
            }
        },
    };
    let fixed = solve(&build_fixed_problem(tentative, scenario, &priorities))?;
    if !fixed.is_optimal() {
        return Ok(StepOutcome::Infeasible { iis: fixed.iis });
    }
    let mut state = tentative.clone();
    state.priorities = priorities;
    state.capabilities = fixed.mu;
    Ok(StepOutcome::Feasible { state, fit_residual })
}

/// Capacity left at the instance on `vm` once its traffic is subtracted.
fn slack(vm: VmIdx, state: &DeploymentState, scenario: &Scenario) -> f64 {
    scenario.vm(vm).max_capability - state.offered_load(vm, scenario)
}

fn closest_to_instability(
    candidates: impl Iterator<Item = (VnfIdx, VmIdx)>,
    state: &DeploymentState,
    scenario: &Scenario,
) -> Option<(VnfIdx, VmIdx)> {
    candidates.min_by(|&(_, a), &(_, b)| {
        slack(a, state, scenario).total_cmp(&slack(b, state, scenario)).then(a.cmp(&b))
    })
}

/// Edge to prune after an infeasible scaling step: among the VMs whose
/// capacity constraint is in `iis` and which `service` uses in `tentative`,
/// the one with the least spare capacity (lowest index on ties).
pub fn select_prune_edge(
    iis: &BTreeSet<ConstraintId>,
    service: ServiceIdx,
    tentative: &DeploymentState,
    scenario: &Scenario,
) -> Result<(VnfIdx, VmIdx)> {
    let candidates = tentative
        .usages_of(service)
        .filter(|u| iis.contains(&ConstraintId::Capacity(u.vm)))
        .map(|u| (u.vnf, u.vm));
    closest_to_instability(candidates, tentative, scenario)
        .ok_or_else(|| Error::DeadEnd(scenario.service(service).id.clone()))
}

/// Fallback when the IIS holds no VM of `service`: its VM with the least spare capacity.
pub fn fallback_prune_edge(
    service: ServiceIdx,
    tentative: &DeploymentState,
    scenario: &Scenario,
) -> Option<(VnfIdx, VmIdx)> {
    closest_to_instability(tentative.usages_of(service).map(|u| (u.vnf, u.vm)), tentative, scenario)
}

fn names(a: &Assignment, scenario: &Scenario) -> BTreeMap<String, String> {
    a.pairs
        .iter()
        .map(|(&v, &m)| (scenario.vnf(v).id.clone(), scenario.vm(m).id.clone()))
        .collect()
}

fn constraint_name(c: &ConstraintId, scenario: &Scenario) -> String {
    match *c {
        ConstraintId::Capacity(m) => format!("capacity:{}", scenario.vm(m).id),
        ConstraintId::Delay(s) => format!("delay:{}", scenario.service(s).id),
        ConstraintId::Averaging(m) => format!("averaging:{}", scenario.vm(m).id),
    }
}

/// Admits `service` on top of `state`, or rejects it leaving `state` untouched.
///
/// Numerical failures of the scaling solver are returned as errors; every
/// other failure is a rejection.
pub fn admit(
    service: ServiceIdx,
    state: &DeploymentState,
    scenario: &Scenario,
    strategy: Strategy,
) -> Result<AdmissionResult> {
    let id = scenario.service(service).id.clone();
    let mut graph: CandidateGraph = match build_graph(service, state, scenario) {
        Ok(g) => g,
        Err(e @ Error::NoCandidate { .. }) => {
            log::info!("{id}: rejected, {e}");
            return Ok(AdmissionResult::rejected(service, state, e.to_string()));
        }
        Err(e) => return Err(e),
    };
    let initial_edges = graph.edge_count();
    let cost_before = state.total_cost(scenario);
    let mut result = AdmissionResult::rejected(service, state, String::new());
    result.initial_edges = initial_edges;

    loop {
        let assignment = match hungarian(&graph) {
            Ok(a) => a,
            Err(Error::InfeasibleMatching) => {
                result.reason = Some("candidate graph has no complete matching left".into());
                result.trace.push(TraceRecord {
                    service: id.clone(),
                    iteration: result.iterations + 1,
                    assignment: BTreeMap::new(),
                    matching_cost: f64::NAN,
                    outcome: "rejected",
                    iis: Vec::new(),
                    pruned: None,
                    total_cost: None,
                });
                log::info!("{id}: rejected after {} iterations", result.iterations);
                return Ok(result);
            }
            Err(e) => return Err(e),
        };
        result.iterations += 1;
        let tentative = apply_assignment(&assignment, service, state);
        let mut record = TraceRecord {
            service: id.clone(),
            iteration: result.iterations,
            assignment: names(&assignment, scenario),
            matching_cost: assignment.cost,
            outcome: "admitted",
            iis: Vec::new(),
            pruned: None,
            total_cost: None,
        };

        match scale_step(&tentative, scenario, strategy)? {
            StepOutcome::Feasible { state: next, fit_residual } => {
                let report = verify_realization(&next.priorities, &next, scenario);
                if !report.all_met() {
                    return Err(Error::Numerical(format!(
                        "service `{id}`: realized delays exceed their targets after scaling"
                    )));
                }
                let cost = next.total_cost(scenario);
                record.total_cost = Some(cost);
                result.trace.push(record);
                log::info!("{id}: admitted after {} iterations, cost {cost:.6}", result.iterations);
                result.status = AdmissionStatus::Admitted;
                result.cost_delta = cost - cost_before;
                result.delay_report = Some(report);
                result.fit_residual = fit_residual;
                result.reason = None;
                result.state = next;
                return Ok(result);
            }
            StepOutcome::Infeasible { iis } => {
                let edge = match select_prune_edge(&iis, service, &tentative, scenario) {
                    Ok(edge) => edge,
                    Err(Error::DeadEnd(_)) => {
                        log::debug!("{id}: IIS misses the service's VMs, pruning its tightest VM");
                        fallback_prune_edge(service, &tentative, scenario)
                            .expect("an assignment uses at least one VM")
                    }
                    Err(e) => return Err(e),
                };
                let removed = graph.prune(edge.0, edge.1);
                debug_assert!(removed, "pruned edge comes from the current matching");
                result.pruned_edges.push(edge);
                record.outcome = "pruned";
                record.iis = iis.iter().map(|c| constraint_name(c, scenario)).collect();
                record.pruned =
                    Some((scenario.vnf(edge.0).id.clone(), scenario.vm(edge.1).id.clone()));
                log::debug!("{id}: iteration {} infeasible, pruned {:?}", result.iterations, record.pruned);
                result.trace.push(record);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub state: DeploymentState,
    pub results: Vec<AdmissionResult>,
}

impl Deployment {
    pub fn admitted(&self) -> usize {
        self.results.iter().filter(|r| r.is_admitted()).count()
    }

    pub fn total_cost(&self, scenario: &Scenario) -> f64 {
        self.state.total_cost(scenario)
    }

    pub fn trace(&self) -> impl Iterator<Item = &TraceRecord> {
        self.results.iter().flat_map(|r| &r.trace)
    }
}

/// Admits `order` one service at a time. Rejected services are skipped.
pub fn deploy_sequence(order: &[ServiceIdx], scenario: &Scenario, strategy: Strategy) -> Result<Deployment> {
    let mut state = DeploymentState::for_scenario(scenario);
    let mut results = Vec::with_capacity(order.len());
    for &s in order {
        let r = admit(s, &state, scenario, strategy)?;
        if r.is_admitted() {
            state = r.state.clone();
        }
        results.push(r);
    }
    Ok(Deployment { state, results })
}

/// Admits every service in index order.
pub fn deploy_all(scenario: &Scenario, strategy: Strategy) -> Result<Deployment> {
    let order: Vec<ServiceIdx> = scenario.service_indices().collect();
    deploy_sequence(&order, scenario, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AveragingFactor, PriorityScheme, Service, Usage, Vm, Vnf};

    fn vm(id: &str, c: f64) -> Vm {
        Vm { id: id.into(), max_capability: c, fixed_cost: 8.0, proportional_cost: 0.5 }
    }

    fn scenario(vms: Vec<Vm>, services: Vec<(Vec<(usize, f64)>, f64)>, n_vnfs: usize) -> Scenario {
        Scenario {
            vms,
            vnfs: (0..n_vnfs).map(|i| Vnf { id: format!("v{i}"), load_coefficient: 1e-3 }).collect(),
            services: services
                .into_iter()
                .enumerate()
                .map(|(i, (r, d))| Service {
                    id: format!("s{i}"),
                    arrival_rates: r.into_iter().map(|(v, x)| (VnfIdx(v), x)).collect(),
                    max_delay: d,
                })
                .collect(),
            priority_scheme: PriorityScheme::PerVnf,
            jitter: None,
            averaging_factor: AveragingFactor::SelfExcluded,
            seed: None,
        }
    }

    #[test]
    fn prune_edge_prefers_least_slack() {
        let sc = scenario(vec![vm("m0", 3.0), vm("m1", 4.0)], vec![(vec![(0, 2500.0), (1, 2000.0)], 1e-3)], 2);
        let mut st = DeploymentState::for_scenario(&sc);
        for (v, m) in [(0, 0), (1, 1)] {
            st.placement.insert(VmIdx(m), VnfIdx(v));
            st.usage.insert(Usage { service: ServiceIdx(0), vnf: VnfIdx(v), vm: VmIdx(m) });
        }
        // slacks: m0 0.5, m1 2.0
        let iis: BTreeSet<_> = [ConstraintId::Capacity(VmIdx(0)), ConstraintId::Capacity(VmIdx(1))].into();
        assert_eq!(select_prune_edge(&iis, ServiceIdx(0), &st, &sc).unwrap(), (VnfIdx(0), VmIdx(0)));
        let iis: BTreeSet<_> = [ConstraintId::Capacity(VmIdx(1))].into();
        assert_eq!(select_prune_edge(&iis, ServiceIdx(0), &st, &sc).unwrap(), (VnfIdx(1), VmIdx(1)));
    }

    #[test]
    fn prune_edge_dead_end() {
        let sc = scenario(vec![vm("m0", 10.0), vm("m1", 10.0)], vec![(vec![(0, 1000.0)], 1e-3); 2], 1);
        let mut st = DeploymentState::for_scenario(&sc);
        st.placement.insert(VmIdx(0), VnfIdx(0));
        st.usage.insert(Usage { service: ServiceIdx(0), vnf: VnfIdx(0), vm: VmIdx(0) });
        st.placement.insert(VmIdx(1), VnfIdx(0));
        st.usage.insert(Usage { service: ServiceIdx(1), vnf: VnfIdx(0), vm: VmIdx(1) });
        let iis: BTreeSet<_> = [ConstraintId::Capacity(VmIdx(0))].into();
        assert!(matches!(select_prune_edge(&iis, ServiceIdx(1), &st, &sc), Err(Error::DeadEnd(_))));
        assert_eq!(fallback_prune_edge(ServiceIdx(1), &st, &sc), Some((VnfIdx(0), VmIdx(1))));
    }

    #[test]
    fn rejection_when_no_vm_fits() {
        let sc = scenario(vec![vm("m0", 1.0)], vec![(vec![(0, 2000.0)], 1e-3)], 1);
        let st = DeploymentState::for_scenario(&sc);
        let r = admit(ServiceIdx(0), &st, &sc, Strategy::FlexShare).unwrap();
        assert_eq!(r.status, AdmissionStatus::Rejected);
        assert_eq!(r.state, st);
    }

    #[test]
    fn cheap_infeasible_vm_is_pruned_for_a_costlier_one() {
        // m0 is cheaper to activate but too small for the delay target
        let mut vms = vec![vm("m0", 3.0), vm("m1", 10.0)];
        vms[0].fixed_cost = 1.0;
        let sc = scenario(vms, vec![(vec![(0, 2000.0)], 0.5e-3)], 1);
        let st = DeploymentState::for_scenario(&sc);
        let r = admit(ServiceIdx(0), &st, &sc, Strategy::FlexShare).unwrap();
        assert!(r.is_admitted());
        assert_eq!(r.iterations, 2);
        assert_eq!(r.pruned_edges, vec![(VnfIdx(0), VmIdx(0))]);
        assert!(r.iterations <= r.initial_edges);
        assert_eq!(r.state.vm_of(ServiceIdx(0), VnfIdx(0)), Some(VmIdx(1)));
        // 1e-3 / (mu - 2) = 0.5e-3
        assert!((r.state.capability(VmIdx(1)) - 4.0).abs() < 1e-6);
        let matching: Vec<f64> = r.trace.iter().map(|t| t.matching_cost).collect();
        assert!(matching.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn empty_sequence_costs_nothing() {
        let sc = scenario(vec![vm("m0", 10.0)], vec![(vec![(0, 1000.0)], 1e-3)], 1);
        let d = deploy_sequence(&[], &sc, Strategy::FlexShare).unwrap();
        assert_eq!(d.total_cost(&sc), 0.0);
        assert!(d.results.is_empty());
    }

    #[test]
    fn single_service_costs_activation_plus_capability() {
        let sc = scenario(vec![vm("m0", 10.0)], vec![(vec![(0, 2000.0)], 1e-3 / 3.0)], 1);
        let d = deploy_all(&sc, Strategy::FlexShare).unwrap();
        assert_eq!(d.admitted(), 1);
        assert!((d.total_cost(&sc) - (8.0 + 0.5 * 5.0)).abs() < 1e-6);
    }
}
