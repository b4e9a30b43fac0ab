//! Exhaustive baselines: best deterministic priorities for a fixed placement,
//! and best placement of an incoming service.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;

use crate::assignment::{apply_assignment, build_graph, Assignment};
use crate::convex::{build_fixed_problem, solve};
use crate::error::{Error, Result};
use crate::model::{DeploymentState, PriorityScheme, PrioritySpec, Scenario, ServiceIdx, VmIdx, VnfIdx};
use crate::pruning::{scale_step, StepOutcome, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    /// Services sharing one instance (or admitted, for per-service priorities).
    pub max_sharing: usize,
    pub max_configurations: usize,
    pub max_vnfs: usize,
    pub max_candidate_vms: usize,
    pub max_assignments: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_sharing: 4,
            max_configurations: 100_000,
            max_vnfs: 8,
            max_candidate_vms: 10,
            max_assignments: 2_000_000,
        }
    }
}

/// Every ordering of `k` items as a level per item, 0 served first. Ties
/// (weak orderings) are enumerated in full up to three items; beyond that
/// only strict orderings plus the all-equal one.
pub fn orderings(k: usize) -> Vec<Vec<usize>> {
    if k <= 3 {
        weak_orderings(k)
    } else {
        let mut out: Vec<Vec<usize>> = (0..k).permutations(k).collect();
        out.push(vec![0; k]);
        out
    }
}

/// Ordered set partitions of `k` items, as levels.
pub fn weak_orderings(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    (0..k)
        .map(|_| 0..k)
        .multi_cartesian_product()
        .filter(|levels| {
            let top = *levels.iter().max().expect("k > 0");
            (0..=top).all(|l| levels.contains(&l))
        })
        .collect()
}

/// Groups of pairs that are ordered together, with the orderings to try for each.
struct Families {
    groups: Vec<Vec<(ServiceIdx, Vec<VnfIdx>)>>,
    choices: Vec<Vec<Vec<usize>>>,
}

impl Families {
    fn count(&self) -> Option<usize> {
        self.choices.iter().try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
    }

    /// Mixed-radix decoding of configuration `index`.
    fn spec(&self, scheme: PriorityScheme, mut index: usize) -> PrioritySpec {
        let mut values = BTreeMap::new();
        for (group, choices) in self.groups.iter().zip(&self.choices) {
            let levels = &choices[index % choices.len()];
            index /= choices.len();
            let k = group.len();
            for ((s, vnfs), &level) in group.iter().zip(levels) {
                for &v in vnfs {
                    values.insert((*s, v), (k - level) as f64);
                }
            }
        }
        PrioritySpec::Deterministic { scheme, values }
    }
}

fn families(state: &DeploymentState, scenario: &Scenario, limits: &Limits) -> Result<Families> {
    let groups: Vec<Vec<(ServiceIdx, Vec<VnfIdx>)>> = match scenario.priority_scheme {
        PriorityScheme::PerService => {
            let all = state
                .admitted_services()
                .into_iter()
                .map(|s| (s, state.usages_of(s).map(|u| u.vnf).collect()))
                .collect();
            vec![all]
        }
        PriorityScheme::PerVnf => state
            .placement
            .iter()
            .map(|(&m, &v)| state.services_at(m).into_iter().map(|s| (s, vec![v])).collect())
            .collect(),
        PriorityScheme::PerRequest => {
            return Err(Error::Precondition(
                "per-request priorities are continuous and cannot be enumerated".into(),
            ))
        }
    };
    if let Some(big) = groups.iter().map(Vec::len).find(|&k| k > limits.max_sharing) {
        return Err(Error::Explosion { count: big, cap: limits.max_sharing });
    }
    let choices = groups.iter().map(|g| orderings(g.len())).collect();
    Ok(Families { groups, choices })
}

/// Number of priority configurations [`brute_force_priorities`] would evaluate.
pub fn configuration_count(state: &DeploymentState, scenario: &Scenario) -> Result<usize> {
    let f = families(state, scenario, &Limits::default())?;
    f.count().ok_or(Error::Explosion { count: usize::MAX, cap: Limits::default().max_configurations })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestPriorities {
    pub priorities: PrioritySpec,
    pub cost: f64,
    pub mu: BTreeMap<VmIdx, f64>,
    pub evaluated: usize,
    pub feasible: usize,
}

/// Cheapest deterministic priorities for the placement in `state`, each
/// configuration scaled with its competing rates fixed. `None` when no
/// configuration meets every delay target.
pub fn brute_force_priorities(state: &DeploymentState, scenario: &Scenario) -> Result<Option<BestPriorities>> {
    brute_force_priorities_with(state, scenario, &Limits::default())
}

pub fn brute_force_priorities_with(
    state: &DeploymentState,
    scenario: &Scenario,
    limits: &Limits,
) -> Result<Option<BestPriorities>> {
    let fam = families(state, scenario, limits)?;
    let count = fam
        .count()
        .filter(|&c| c <= limits.max_configurations)
        .ok_or(Error::Explosion {
            count: fam.count().unwrap_or(usize::MAX),
            cap: limits.max_configurations,
        })?;
    let scheme = scenario.priority_scheme;
    let outcomes: Vec<Option<(f64, BTreeMap<VmIdx, f64>)>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let spec = fam.spec(scheme, i);
            let sol = solve(&build_fixed_problem(state, scenario, &spec))?;
            Ok(sol.is_optimal().then_some((sol.objective_value, sol.mu)))
        })
        .collect::<Result<_>>()?;
    let feasible = outcomes.iter().flatten().count();
    let best = outcomes
        .into_iter()
        .enumerate()
        .filter_map(|(i, o)| o.map(|(c, mu)| (i, c, mu)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    Ok(best.map(|(i, cost, mu)| BestPriorities {
        priorities: fam.spec(scheme, i),
        cost,
        mu,
        evaluated: count,
        feasible,
    }))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestAssignment {
    pub assignment: Assignment,
    pub state: DeploymentState,
    pub cost: f64,
    pub evaluated: usize,
}

/// Every injective VNF-to-VM map over the candidate graph's edges, in lexicographic order.
fn injective_maps(
    vnfs: &[VnfIdx],
    edges: &BTreeMap<(VnfIdx, VmIdx), f64>,
    cap: usize,
) -> Result<Vec<Vec<VmIdx>>> {
    fn extend(
        depth: usize,
        vnfs: &[VnfIdx],
        edges: &BTreeMap<(VnfIdx, VmIdx), f64>,
        current: &mut Vec<VmIdx>,
        out: &mut Vec<Vec<VmIdx>>,
        cap: usize,
    ) -> Result<()> {
        if depth == vnfs.len() {
            if out.len() == cap {
                return Err(Error::Explosion { count: cap + 1, cap });
            }
            out.push(current.clone());
            return Ok(());
        }
        let v = vnfs[depth];
        for (&(_, m), _) in edges.range((v, VmIdx(0))..=(v, VmIdx(usize::MAX))) {
            if current.contains(&m) {
                continue;
            }
            current.push(m);
            extend(depth + 1, vnfs, edges, current, out, cap)?;
            current.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    extend(0, vnfs, edges, &mut Vec::new(), &mut out, cap)?;
    Ok(out)
}

/// Cheapest admission of `service` over every valid placement, each scaled
/// as the admission loop would (exhaustive priorities for deterministic schemes).
pub fn brute_force_assignment(
    service: ServiceIdx,
    state: &DeploymentState,
    scenario: &Scenario,
) -> Result<Option<BestAssignment>> {
    brute_force_assignment_with(service, state, scenario, &Limits::default())
}

pub fn brute_force_assignment_with(
    service: ServiceIdx,
    state: &DeploymentState,
    scenario: &Scenario,
    limits: &Limits,
) -> Result<Option<BestAssignment>> {
    let graph = match build_graph(service, state, scenario) {
        Ok(g) => g,
        Err(Error::NoCandidate { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if graph.vnf_nodes.len() > limits.max_vnfs {
        return Err(Error::Explosion { count: graph.vnf_nodes.len(), cap: limits.max_vnfs });
    }
    let vms: std::collections::BTreeSet<VmIdx> = graph.edges.keys().map(|&(_, m)| m).collect();
    if vms.len() > limits.max_candidate_vms {
        return Err(Error::Explosion { count: vms.len(), cap: limits.max_candidate_vms });
    }
    let maps = injective_maps(&graph.vnf_nodes, &graph.edges, limits.max_assignments)?;
    let strategy = match scenario.priority_scheme {
        PriorityScheme::PerRequest => Strategy::FlexShare,
        _ => Strategy::BruteForce,
    };
    let evaluated = maps.len();
    let outcomes: Vec<Option<(Assignment, DeploymentState, f64)>> = maps
        .into_par_iter()
        .map(|cols| {
            let pairs: BTreeMap<VnfIdx, VmIdx> = graph.vnf_nodes.iter().copied().zip(cols).collect();
            let cost = pairs.iter().map(|(&v, &m)| graph.edges[&(v, m)]).sum();
            let assignment = Assignment { pairs, cost };
            let tentative = apply_assignment(&assignment, service, state);
            Ok(match scale_step(&tentative, scenario, strategy)? {
                StepOutcome::Feasible { state: next, .. } => {
                    let total = next.total_cost(scenario);
                    Some((assignment, next, total))
                }
                StepOutcome::Infeasible { .. } => None,
            })
        })
        .collect::<Result<_>>()?;
    let best = outcomes
        .into_iter()
        .enumerate()
        .filter_map(|(i, o)| o.map(|x| (i, x)))
        .min_by(|a, b| a.1 .2.total_cmp(&b.1 .2).then(a.0.cmp(&b.0)));
    Ok(best.map(|(_, (assignment, state, cost))| BestAssignment { assignment, state, cost, evaluated }))
}
