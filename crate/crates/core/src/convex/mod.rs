//! Capability scaling for a fixed placement.
//!
//! Variables are the capability `μ(m)` of every active VM and, for every
//! (service, instance) pair, the rate `Λ̃(s, v)` of traffic served ahead of
//! the service. The objective is the operator cost. Constraints are the VM
//! capacity limits, the per-service delay targets and, per instance, an
//! averaging constraint fixing `Σ_s Λ̃(s, v)` to a multiple of the instance's
//! total arrival rate.
//!
//! Feasibility is monotone in `μ`: raising a capability never increases a
//! sojourn time. Deciding feasibility therefore reduces to a problem in `Λ̃`
//! alone with every `μ` at its limit (or unbounded when the VM's capacity
//! constraint is left out), which is convex. The joint problem in `(μ, Λ̃)` is
//! solved from a strictly feasible start with the barrier method and returns
//! a local optimum; the sojourn time is convex in each argument separately
//! but not jointly.
//!
//! Internally every capability and higher-priority load is expressed as a
//! fraction of its VM's maximum capability.

pub(crate) mod barrier;
mod realize;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DeploymentState, PrioritySpec, Scenario, ServiceIdx, VmIdx, VnfIdx};
use crate::queueing::{instance_classes, STABILITY_MARGIN};
use barrier::{Affine, Capability, DelayIneq, Options, Program, SojournTerm};

pub use realize::{realize_priorities, verify_realization, DelayReport, Realization, ServiceDelay};

/// Tolerance on the phase-one slack when classifying feasibility.
const FEASIBILITY_TOL: f64 = 1e-9;
/// Weight of `Σμ` in the objective, relative to the proportional cost, that breaks ties.
const TIE_BREAK: f64 = 1e-9;
/// Newton iterations allowed per solve.
pub const NEWTON_BUDGET: usize = 500;
/// Target barrier gap.
pub const KKT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ConstraintId {
    Capacity(VmIdx),
    Delay(ServiceIdx),
    Averaging(VmIdx),
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintId::Capacity(m) => write!(f, "capacity[{m}]"),
            ConstraintId::Delay(s) => write!(f, "delay[{s}]"),
            ConstraintId::Averaging(m) => write!(f, "averaging[{m}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HigherRate {
    /// Decision variable in `[0, upper]`, requests per second.
    Free { upper: f64 },
    /// Known rate, requests per second.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VmSlot {
    pub vm: VmIdx,
    pub capacity: f64,
    pub fixed_cost: f64,
    pub proportional_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueueTerm {
    pub service: ServiceIdx,
    pub vnf: VnfIdx,
    pub slot: usize,
    pub load_coefficient: f64,
    /// Arrival rate of the service itself.
    pub rate: f64,
    /// Rate queued FIFO with the service, its own included.
    pub own_rate: f64,
    pub higher: HigherRate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DelayRow {
    pub service: ServiceIdx,
    pub max_delay: f64,
    pub terms: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingRow {
    pub slot: usize,
    pub terms: Vec<usize>,
    /// Required `Σ Λ̃` over the instance, requests per second.
    pub target_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvexProblem {
    pub vms: Vec<VmSlot>,
    pub terms: Vec<QueueTerm>,
    pub delays: Vec<DelayRow>,
    pub averaging: Vec<AveragingRow>,
    /// Require every VM to carry its whole offered load. Priorities that
    /// place only part of the traffic ahead of each class do not imply it.
    pub whole_load: bool,
}

impl ConvexProblem {
    /// Capacity, then delay, then averaging constraints.
    pub fn constraint_ids(&self) -> Vec<ConstraintId> {
        self.vms
            .iter()
            .map(|s| ConstraintId::Capacity(s.vm))
            .chain(self.delays.iter().map(|d| ConstraintId::Delay(d.service)))
            .chain(self.averaging.iter().map(|a| ConstraintId::Averaging(self.vms[a.slot].vm)))
            .collect()
    }

    pub fn free_pairs(&self) -> usize {
        self.terms.iter().filter(|t| matches!(t.higher, HigherRate::Free { .. })).count()
    }

    fn fixed_cost(&self) -> f64 {
        self.vms.iter().map(|s| s.fixed_cost).sum()
    }

    /// Evaluates every constraint at `(mu, lambda_tilde)`: the value is `≤ 0` when satisfied.
    pub fn residuals(
        &self,
        mu: &BTreeMap<VmIdx, f64>,
        lambda_tilde: &BTreeMap<(ServiceIdx, VnfIdx), f64>,
    ) -> Vec<(ConstraintId, f64)> {
        let higher = |t: &QueueTerm| match t.higher {
            HigherRate::Fixed(r) => r,
            HigherRate::Free { .. } => lambda_tilde.get(&(t.service, t.vnf)).copied().unwrap_or(0.0),
        };
        let mut out = Vec::new();
        for s in &self.vms {
            out.push((ConstraintId::Capacity(s.vm), mu[&s.vm] / s.capacity - 1.0));
        }
        for d in &self.delays {
            let total: f64 = d
                .terms
                .iter()
                .map(|&i| {
                    let t = &self.terms[i];
                    let m = mu[&self.vms[t.slot].vm];
                    let u = m - t.load_coefficient * higher(t);
                    t.load_coefficient * m / (u * (u - t.load_coefficient * t.own_rate))
                })
                .sum();
            out.push((ConstraintId::Delay(d.service), total / d.max_delay - 1.0));
        }
        for a in &self.averaging {
            let sum: f64 = a.terms.iter().map(|&i| higher(&self.terms[i])).sum();
            let scale = a.target_rate.abs().max(1.0);
            out.push((ConstraintId::Averaging(self.vms[a.slot].vm), (sum - a.target_rate).abs() / scale));
        }
        out
    }
}

fn active_slots(state: &DeploymentState, scenario: &Scenario) -> Vec<VmSlot> {
    state
        .placement
        .keys()
        .map(|&m| {
            let vm = scenario.vm(m);
            VmSlot {
                vm: m,
                capacity: vm.max_capability,
                fixed_cost: vm.fixed_cost,
                proportional_cost: vm.proportional_cost,
            }
        })
        .collect()
}

fn delay_rows(terms: &[QueueTerm], state: &DeploymentState, scenario: &Scenario) -> Vec<DelayRow> {
    state
        .admitted_services()
        .into_iter()
        .map(|s| DelayRow {
            service: s,
            max_delay: scenario.service(s).max_delay,
            terms: (0..terms.len()).filter(|&i| terms[i].service == s).collect(),
        })
        .collect()
}

/// Scaling problem with free higher-priority rates for the placement in `state`.
pub fn build_problem(state: &DeploymentState, scenario: &Scenario) -> ConvexProblem {
    let vms = active_slots(state, scenario);
    let mut terms = Vec::new();
    let mut averaging = Vec::new();
    for (slot, vs) in vms.iter().enumerate() {
        let vnf = state.placement[&vs.vm];
        let members: Vec<(ServiceIdx, f64)> = state
            .services_at(vs.vm)
            .into_iter()
            .map(|s| (s, scenario.rate(s, vnf)))
            .filter(|&(_, r)| r > 0.0)
            .collect();
        let total: f64 = members.iter().map(|(_, r)| r).sum();
        let first = terms.len();
        for &(s, rate) in &members {
            let upper = match scenario.averaging_factor {
                crate::model::AveragingFactor::SelfExcluded => total - rate,
                crate::model::AveragingFactor::SelfIncluded => total,
            };
            terms.push(QueueTerm {
                service: s,
                vnf,
                slot,
                load_coefficient: scenario.vnf(vnf).load_coefficient,
                rate,
                own_rate: rate,
                higher: HigherRate::Free { upper },
            });
        }
        if !members.is_empty() {
            averaging.push(AveragingRow {
                slot,
                terms: (first..terms.len()).collect(),
                target_rate: scenario.averaging_factor.factor(members.len()) * total,
            });
        }
    }
    let delays = delay_rows(&terms, state, scenario);
    ConvexProblem { vms, terms, delays, averaging, whole_load: false }
}

/// Capability-only problem with the competing rates implied by `priorities`.
pub fn build_fixed_problem(
    state: &DeploymentState,
    scenario: &Scenario,
    priorities: &PrioritySpec,
) -> ConvexProblem {
    let vms = active_slots(state, scenario);
    let mut terms = Vec::new();
    for (slot, vs) in vms.iter().enumerate() {
        let vnf = state.placement[&vs.vm];
        for class in instance_classes(vs.vm, state, scenario, priorities) {
            if class.rate <= 0.0 {
                continue;
            }
            terms.push(QueueTerm {
                service: class.service,
                vnf,
                slot,
                load_coefficient: scenario.vnf(vnf).load_coefficient,
                rate: class.rate,
                own_rate: class.group_rate,
                higher: HigherRate::Fixed(class.ahead_rate),
            });
        }
    }
    let delays = delay_rows(&terms, state, scenario);
    ConvexProblem { vms, terms, delays, averaging: Vec::new(), whole_load: true }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSolution {
    pub status: SolveStatus,
    pub mu: BTreeMap<VmIdx, f64>,
    pub lambda_tilde: BTreeMap<(ServiceIdx, VnfIdx), f64>,
    /// Operator cost of the active VMs at `mu`.
    pub objective_value: f64,
    pub iis: BTreeSet<ConstraintId>,
    pub kkt_residual: f64,
    pub newton_iterations: usize,
}

impl ScalingSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

enum Mode {
    Feasibility,
    Optimize,
}

struct Layout {
    program: Program,
    /// Per-term scaled higher-priority load.
    ahead: Vec<Affine>,
    /// Initial interior point (without capability variables in optimize mode).
    start: Vec<f64>,
    n_mu: usize,
}

/// Lays out the problem restricted to `active`. Returns `None` when the
/// stability and averaging constraints alone already admit no point.
fn layout(p: &ConvexProblem, active: &BTreeSet<ConstraintId>, mode: Mode) -> Option<Layout> {
    let optimize = matches!(mode, Mode::Optimize);
    let n_mu = if optimize { p.vms.len() } else { 0 };
    let keep_margin = 1.0 - STABILITY_MARGIN;

    let mut affine = Vec::new();
    let mut ahead: Vec<Option<Affine>> = vec![None; p.terms.len()];
    let mut start = Vec::new();
    let mut next_var = n_mu;

    // In feasibility mode a slot without its capacity constraint has unbounded capability.
    let bounded = |slot: usize| optimize || active.contains(&ConstraintId::Capacity(p.vms[slot].vm));

    for (slot, vs) in p.vms.iter().enumerate() {
        let c = vs.capacity;
        let slot_terms: Vec<usize> = (0..p.terms.len()).filter(|&i| p.terms[i].slot == slot).collect();
        let own = |i: usize| p.terms[i].load_coefficient * p.terms[i].own_rate / c;
        // Largest scaled load ahead of term `i` that keeps the start point interior.
        let room = |i: usize, upper: f64| {
            if bounded(slot) {
                upper.min(keep_margin - own(i))
            } else {
                upper
            }
        };

        let mut free = Vec::new();
        for &i in &slot_terms {
            let t = &p.terms[i];
            match t.higher {
                HigherRate::Fixed(r) => {
                    let w = t.load_coefficient * r / c;
                    if bounded(slot) && w + own(i) >= keep_margin {
                        return None;
                    }
                    ahead[i] = Some(Affine::constant(w));
                }
                HigherRate::Free { upper } => free.push((i, t.load_coefficient * upper / c)),
            }
        }

        let averaged = p
            .averaging
            .iter()
            .find(|a| a.slot == slot)
            .filter(|_| active.contains(&ConstraintId::Averaging(vs.vm)));

        match averaged {
            Some(row) if !free.is_empty() => {
                let target = p.terms[row.terms[0]].load_coefficient * row.target_rate / c;
                if target <= 0.0 || free.len() == 1 {
                    let w = target.max(0.0);
                    for &(i, up) in &free {
                        if w > up || (bounded(slot) && w + own(i) >= keep_margin) {
                            return None;
                        }
                        ahead[i] = Some(Affine::constant(w));
                    }
                } else {
                    let rooms: Vec<f64> = free.iter().map(|&(i, up)| room(i, up)).collect();
                    let total_room: f64 = rooms.iter().sum();
                    if rooms.iter().any(|&r| r <= 0.0) || target >= total_room {
                        return None;
                    }
                    let mut last = Affine::constant(target);
                    for (k, &(i, up)) in free.iter().enumerate() {
                        let init = target * rooms[k] / total_room;
                        if k + 1 < free.len() {
                            let expr = Affine::var(next_var, 1.0);
                            last = last.plus(&expr.scaled(-1.0));
                            start.push(init);
                            next_var += 1;
                            bound_box(&expr, up, &mut affine);
                            ahead[i] = Some(expr);
                        } else {
                            bound_box(&last, up, &mut affine);
                            ahead[i] = Some(last.clone());
                        }
                    }
                }
            }
            _ => {
                for &(i, up) in &free {
                    if up <= 0.0 {
                        if bounded(slot) && own(i) >= keep_margin {
                            return None;
                        }
                        ahead[i] = Some(Affine::constant(0.0));
                        continue;
                    }
                    let r = room(i, up);
                    if r <= 0.0 {
                        return None;
                    }
                    let expr = Affine::var(next_var, 1.0);
                    start.push(r / 2.0);
                    next_var += 1;
                    bound_box(&expr, up, &mut affine);
                    ahead[i] = Some(expr);
                }
            }
        }
    }

    let ahead: Vec<Affine> = ahead.into_iter().map(|a| a.expect("every term laid out")).collect();
    let capability = |slot: usize| -> Option<Capability> {
        if optimize {
            Some(Capability::Var(slot))
        } else if bounded(slot) {
            Some(Capability::Const(1.0))
        } else {
            None
        }
    };

    // stability of every term on a bounded VM
    for (i, t) in p.terms.iter().enumerate() {
        let Some(mu) = capability(t.slot) else { continue };
        let w = &ahead[i];
        let own = t.load_coefficient * t.own_rate / p.vms[t.slot].capacity;
        let f = w.plus(&Affine::constant(own)).plus(&mu.as_affine().scaled(-keep_margin));
        if !f.coefs.is_empty() {
            affine.push(f);
        }
    }

    for (slot, vs) in p.vms.iter().enumerate().filter(|_| p.whole_load) {
        let Some(mu) = capability(slot) else { continue };
        let total: f64 = p
            .terms
            .iter()
            .filter(|t| t.slot == slot)
            .map(|t| t.load_coefficient * t.rate)
            .sum::<f64>()
            / vs.capacity;
        let f = mu.as_affine().scaled(-keep_margin).plus(&Affine::constant(total));
        if f.coefs.is_empty() {
            if f.constant >= 0.0 {
                return None;
            }
        } else {
            affine.push(f);
        }
    }

    let mut objective = vec![0.0; next_var];
    if optimize {
        let weight: f64 = p.vms.iter().map(|s| s.proportional_cost * s.capacity).sum();
        let weight = if weight > 0.0 { weight } else { 1.0 };
        let cap_sum: f64 = p.vms.iter().map(|s| s.capacity).sum();
        for (slot, s) in p.vms.iter().enumerate() {
            objective[slot] = s.proportional_cost * s.capacity / weight + TIE_BREAK * s.capacity / cap_sum;
            affine.push(Affine::var(slot, -1.0));
            affine.push(Affine { constant: -1.0, coefs: vec![(slot, 1.0)] });
        }
    }

    let slack = if optimize {
        None
    } else {
        objective.push(1.0);
        let s = next_var;
        affine.push(Affine { constant: -2.0, coefs: vec![(s, -1.0)] });
        Some(s)
    };

    let mut delays = Vec::new();
    for row in &p.delays {
        if !active.contains(&ConstraintId::Delay(row.service)) {
            continue;
        }
        let terms: Vec<SojournTerm> = row
            .terms
            .iter()
            .filter_map(|&i| {
                let t = &p.terms[i];
                let mu = capability(t.slot)?;
                let c = p.vms[t.slot].capacity;
                let w = &ahead[i];
                Some(SojournTerm {
                    mu,
                    ahead: w.clone(),
                    own: t.load_coefficient * t.own_rate / c,
                    coef: t.load_coefficient / (c * row.max_delay),
                })
            })
            .collect();
        delays.push(DelayIneq { terms, slack });
    }

    let dim = objective.len();
    Some(Layout {
        program: Program { dim, objective, affine, delays },
        ahead,
        start,
        n_mu,
    })
}

fn bound_box(expr: &Affine, upper: f64, affine: &mut Vec<Affine>) {
    affine.push(expr.scaled(-1.0));
    affine.push(expr.plus(&Affine::constant(-upper)));
}

struct PhaseOne {
    feasible: bool,
    x: Vec<f64>,
    iterations: usize,
}

fn phase_one(p: &ConvexProblem, active: &BTreeSet<ConstraintId>, to_convergence: bool) -> Result<PhaseOne> {
    let Some(lay) = layout(p, active, Mode::Feasibility) else {
        return Ok(PhaseOne { feasible: false, x: Vec::new(), iterations: 0 });
    };
    let prog = &lay.program;
    let mut x = lay.start.clone();
    x.push(0.0);
    let worst = prog.delays.iter().map(|d| d.value(&x)).fold(-1.0, f64::max);
    let s = prog.dim - 1;
    x[s] = (worst + 1.0).max(0.0);
    if prog.delays.is_empty() {
        return Ok(PhaseOne { feasible: true, x, iterations: 0 });
    }
    let opts = Options { max_newton: NEWTON_BUDGET, gap_tol: 1e-10, ..Default::default() };
    let stop = |obj: f64, gap: f64| {
        (!to_convergence && obj < -FEASIBILITY_TOL) || obj - gap > FEASIBILITY_TOL
    };
    match barrier::minimize(prog, x, &opts, &stop) {
        Ok(out) => {
            let slack = out.x[s];
            Ok(PhaseOne { feasible: slack < -FEASIBILITY_TOL, x: out.x, iterations: out.newton_iterations })
        }
        Err(barrier::Failure::NotInterior) => {
            Err(Error::Numerical("phase-one start point is not interior".into()))
        }
        Err(barrier::Failure::Budget { iterations, gap }) => Err(Error::Numerical(format!(
            "feasibility search did not converge in {iterations} Newton steps (gap {gap:.3e})"
        ))),
    }
}

/// Whether the constraints in `active` (plus variable bounds and queue stability) admit a point.
pub fn is_feasible(p: &ConvexProblem, active: &BTreeSet<ConstraintId>) -> Result<bool> {
    Ok(phase_one(p, active, false)?.feasible)
}

/// Solves the scaling problem. Infeasible problems come back with an IIS.
pub fn solve(p: &ConvexProblem) -> Result<ScalingSolution> {
    let all: BTreeSet<ConstraintId> = p.constraint_ids().into_iter().collect();
    let one = phase_one(p, &all, true)?;
    if !one.feasible {
        let iis = extract_iis(p)?;
        return Ok(ScalingSolution {
            status: SolveStatus::Infeasible,
            mu: BTreeMap::new(),
            lambda_tilde: BTreeMap::new(),
            objective_value: f64::INFINITY,
            iis,
            kkt_residual: f64::NAN,
            newton_iterations: one.iterations,
        });
    }

    let lay = layout(p, &all, Mode::Optimize).expect("feasible problem has an interior layout");
    let free_vars = &one.x[..one.x.len() - 1];
    let mut x0 = None;
    let mut eta = 1e-3;
    while eta > 1e-15 {
        let mut x: Vec<f64> = vec![1.0 - eta; lay.n_mu];
        x.extend_from_slice(free_vars);
        if lay.program.max_violation(&x) < 0.0 {
            x0 = Some(x);
            break;
        }
        eta /= 10.0;
    }
    let x0 = x0.ok_or_else(|| Error::Numerical("no interior start below the capacity limits".into()))?;
    let opts = Options {
        max_newton: NEWTON_BUDGET.saturating_sub(one.iterations).max(1),
        gap_tol: KKT_TOLERANCE,
        ..Default::default()
    };
    let out = barrier::minimize(&lay.program, x0, &opts, &|_, _| false).map_err(|e| match e {
        barrier::Failure::NotInterior => Error::Numerical("scaling start point is not interior".into()),
        barrier::Failure::Budget { iterations, gap } => Error::Numerical(format!(
            "scaling did not converge within the Newton budget ({} steps, gap {gap:.3e})",
            iterations + one.iterations
        )),
    })?;

    let mu: BTreeMap<VmIdx, f64> = p
        .vms
        .iter()
        .enumerate()
        .map(|(slot, s)| (s.vm, out.x[slot] * s.capacity))
        .collect();
    let lambda_tilde = p
        .terms
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let w = &lay.ahead[i];
            let rate = (w.eval(&out.x) * p.vms[t.slot].capacity / t.load_coefficient).max(0.0);
            ((t.service, t.vnf), rate)
        })
        .collect();
    let objective_value =
        p.fixed_cost() + p.vms.iter().map(|s| s.proportional_cost * mu[&s.vm]).sum::<f64>();
    Ok(ScalingSolution {
        status: SolveStatus::Optimal,
        mu,
        lambda_tilde,
        objective_value,
        iis: BTreeSet::new(),
        kkt_residual: out.gap,
        newton_iterations: one.iterations + out.newton_iterations,
    })
}

/// Deletion filter: drops every constraint whose removal leaves the rest infeasible.
pub fn extract_iis(p: &ConvexProblem) -> Result<BTreeSet<ConstraintId>> {
    extract_iis_ordered(p, &p.constraint_ids())
}

/// Deletion filter visiting constraints in `order`.
pub fn extract_iis_ordered(p: &ConvexProblem, order: &[ConstraintId]) -> Result<BTreeSet<ConstraintId>> {
    let mut set: BTreeSet<ConstraintId> = order.iter().copied().collect();
    if is_feasible(p, &set)? {
        return Err(Error::Precondition("IIS requested for a feasible problem".into()));
    }
    for c in order {
        set.remove(c);
        if is_feasible(p, &set)? {
            set.insert(*c);
        }
    }
    // confirming pass: every member must be necessary
    for c in set.clone() {
        let mut without = set.clone();
        without.remove(&c);
        if !is_feasible(p, &without)? {
            set = without;
        }
    }
    Ok(set)
}

/// Map of constraint values at a solution, for debugging dumps.
pub fn dump_json(p: &ConvexProblem, sol: &ScalingSolution, scenario: &Scenario) -> serde_json::Value {
    let name = |c: &ConstraintId| match *c {
        ConstraintId::Capacity(m) => format!("capacity:{}", scenario.vm(m).id),
        ConstraintId::Delay(s) => format!("delay:{}", scenario.service(s).id),
        ConstraintId::Averaging(m) => format!("averaging:{}", scenario.vm(m).id),
    };
    let residuals: serde_json::Map<String, serde_json::Value> = if sol.is_optimal() {
        p.residuals(&sol.mu, &sol.lambda_tilde)
            .iter()
            .map(|(c, r)| (name(c), serde_json::json!(r)))
            .collect()
    } else {
        Default::default()
    };
    serde_json::json!({
        "status": sol.status,
        "mu": sol.mu.iter().map(|(m, v)| (scenario.vm(*m).id.clone(), *v)).collect::<BTreeMap<_, _>>(),
        "lambda_tilde": sol.lambda_tilde.iter().map(|((s, v), r)| serde_json::json!({
            "service": scenario.service(*s).id, "vnf": scenario.vnf(*v).id, "rate": r
        })).collect::<Vec<_>>(),
        "objective": sol.objective_value,
        "residuals": residuals,
        "iis": sol.iis.iter().map(name).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests;
