//! Analytic model of a VNF instance as a preemptive-resume priority M/M/1 queue.
//!
//! A request of a class that sees higher-priority traffic at rate `Λ` and
//! brings its own traffic at rate `λ`, on a VNF with load coefficient `l`
//! hosted on a VM with capability `μ`, stays on average
//!
//! ```text
//! S = (l/μ) / ((1 - lΛ/μ) (1 - l(Λ+λ)/μ))
//! ```
//!
//! Requests of equal deterministic priority are served FIFO among themselves,
//! so a tie group behaves as a single class whose own rate is the sum of the
//! group's rates.

use crate::error::{Error, Result};
use crate::model::{DeploymentState, PrioritySpec, Scenario, ServiceIdx, VmIdx, VnfIdx};
use crate::scalar::Scalar;

/// Fraction of capability held back from the stable region.
pub const STABILITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueLoad<T> {
    /// Capability-seconds per request.
    pub vnf_load: T,
    /// Capability of the hosting VM.
    pub capability: T,
    /// Arrival rate of the class itself.
    pub own_rate: T,
    /// Arrival rate of traffic served ahead of the class.
    pub higher_rate: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unstable<T> {
    pub load: T,
    pub capability: T,
}

impl<T: Scalar> QueueLoad<T> {
    pub fn new(vnf_load: T, capability: T, own_rate: T, higher_rate: T) -> Self {
        QueueLoad { vnf_load, capability, own_rate, higher_rate }
    }

    /// Capability consumed by the class and everything ahead of it.
    pub fn offered_load(&self) -> T {
        self.vnf_load * (self.higher_rate + self.own_rate)
    }

    pub fn is_stable(&self) -> bool {
        self.capability > T::zero()
            && self.offered_load() <= (T::one() - T::lit(STABILITY_MARGIN)) * self.capability
    }
}

/// Mean sojourn time of the class described by `q`.
pub fn sojourn_time<T: Scalar>(q: &QueueLoad<T>) -> Result<T, Unstable<T>> {
    if !q.is_stable() {
        return Err(Unstable { load: q.offered_load(), capability: q.capability });
    }
    let mu = q.capability;
    let l = q.vnf_load;
    let ahead = T::one() - l * q.higher_rate / mu;
    let through = T::one() - l * (q.higher_rate + q.own_rate) / mu;
    Ok((l / mu) / (ahead * through))
}

/// Heaviside step with `H(0) = 1/2`.
pub fn heaviside<T: Scalar>(x: T) -> T {
    if x > T::zero() {
        T::one()
    } else if x < T::zero() {
        T::zero()
    } else {
        T::lit(0.5)
    }
}

/// Rate of competing traffic outranking a class with deterministic priority
/// `own_priority`. `competitors` holds `(priority, rate)` of every other class.
pub fn higher_priority_rate_per_vnf<T: Scalar>(own_priority: T, competitors: &[(T, T)]) -> T {
    competitors
        .iter()
        .fold(T::zero(), |acc, &(p, rate)| acc + heaviside(p - own_priority) * rate)
}

/// Probability that a request with priority uniform on `[r_t - j, r_t + j]`
/// outranks one uniform on `[r_s - j, r_s + j]`.
pub fn overtake_probability<T: Scalar>(r_s: T, r_t: T, j: T) -> T {
    let two_j = j + j;
    let diff = r_t - r_s;
    if diff > two_j {
        T::one()
    } else if diff < -two_j {
        T::zero()
    } else {
        T::lit(0.5) + diff / (two_j + two_j)
    }
}

/// Rate of competing traffic outranking a class with uniform-window center
/// `own_center`. `competitors` holds `(center, rate)` of every other class.
pub fn higher_priority_rate_per_request<T: Scalar>(own_center: T, competitors: &[(T, T)], j: T) -> T {
    competitors
        .iter()
        .fold(T::zero(), |acc, &(r, rate)| acc + overtake_probability(own_center, r, j) * rate)
}

/// One class at one VNF instance, with the loads that enter its sojourn time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassLoad {
    pub service: ServiceIdx,
    pub rate: f64,
    /// Competing rate from the priority model (Heaviside or overtake weights).
    pub competing_rate: f64,
    /// Rate served strictly ahead of the class.
    pub ahead_rate: f64,
    /// Rate the class queues with FIFO, itself included.
    pub group_rate: f64,
}

/// Per-class loads at the instance on `vm` under `priorities`.
pub fn instance_classes(
    vm: VmIdx,
    state: &DeploymentState,
    scenario: &Scenario,
    priorities: &PrioritySpec,
) -> Vec<ClassLoad> {
    let Some(&vnf) = state.placement.get(&vm) else {
        return Vec::new();
    };
    let members: Vec<(ServiceIdx, f64, f64)> = state
        .services_at(vm)
        .into_iter()
        .map(|s| (s, scenario.rate(s, vnf), priorities.value(s, vnf)))
        .collect();
    members
        .iter()
        .map(|&(s, rate, prio)| {
            let others: Vec<(f64, f64)> = members
                .iter()
                .filter(|(t, _, _)| *t != s)
                .map(|&(_, r, p)| (p, r))
                .collect();
            match priorities {
                PrioritySpec::Deterministic { .. } => {
                    let ahead = others.iter().filter(|(p, _)| *p > prio).map(|(_, r)| r).sum();
                    let tied: f64 = others.iter().filter(|(p, _)| *p == prio).map(|(_, r)| r).sum();
                    ClassLoad {
                        service: s,
                        rate,
                        competing_rate: higher_priority_rate_per_vnf(prio, &others),
                        ahead_rate: ahead,
                        group_rate: rate + tied,
                    }
                }
                PrioritySpec::Uniform { jitter, .. } => {
                    let lambda = higher_priority_rate_per_request(prio, &others, *jitter);
                    ClassLoad {
                        service: s,
                        rate,
                        competing_rate: lambda,
                        ahead_rate: lambda,
                        group_rate: rate,
                    }
                }
            }
        })
        .collect()
}

/// Competing rate `Λ(s, v)` of `s` at the instance it uses for `v`.
pub fn competing_rate(s: ServiceIdx, v: VnfIdx, state: &DeploymentState, scenario: &Scenario) -> f64 {
    state
        .vm_of(s, v)
        .and_then(|m| {
            instance_classes(m, state, scenario, &state.priorities)
                .into_iter()
                .find(|c| c.service == s)
        })
        .map_or(0.0, |c| c.competing_rate)
}

/// Mean sojourn time of `s` at each VNF it uses, at the capabilities in `state`.
pub fn sojourn_times(
    s: ServiceIdx,
    state: &DeploymentState,
    scenario: &Scenario,
) -> Result<Vec<(VnfIdx, VmIdx, f64)>> {
    state
        .usages_of(s)
        .filter(|u| scenario.rate(s, u.vnf) > 0.0)
        .map(|u| {
            let (load, capability) = (state.offered_load(u.vm, scenario), state.capability(u.vm));
            if !(load <= (1.0 - STABILITY_MARGIN) * capability) {
                return Err(Error::Unstable { vm: scenario.vm(u.vm).id.clone(), load, capability });
            }
            let class = instance_classes(u.vm, state, scenario, &state.priorities)
                .into_iter()
                .find(|c| c.service == s)
                .expect("usage implies class");
            let q = QueueLoad::new(
                scenario.vnf(u.vnf).load_coefficient,
                state.capability(u.vm),
                class.group_rate,
                class.ahead_rate,
            );
            sojourn_time(&q).map(|t| (u.vnf, u.vm, t)).map_err(|e| Error::Unstable {
                vm: scenario.vm(u.vm).id.clone(),
                load: e.load,
                capability: e.capability,
            })
        })
        .collect()
}

/// Mean end-to-end delay of `s`: the sum of its per-VNF sojourn times.
pub fn service_delay(s: ServiceIdx, state: &DeploymentState, scenario: &Scenario) -> Result<f64> {
    Ok(sojourn_times(s, state, scenario)?.iter().map(|&(_, _, t)| t).sum())
}
