//! Turning the scaling solution's higher-priority rates into actual priorities.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ScalingSolution;
use crate::error::{Error, Result};
use crate::model::{DeploymentState, PriorityScheme, PrioritySpec, Scenario, ServiceIdx, VnfIdx};
use crate::queueing::{overtake_probability, service_delay};

/// Relative tolerance when checking a delay against its target.
const DELAY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub priorities: PrioritySpec,
    /// Worst per-instance fit residual of the per-request centers, as a
    /// fraction of the instance's total rate. Zero for deterministic schemes.
    pub fit_residual: f64,
}

/// Priorities for every admitted (service, VNF) pair under the scenario's scheme.
///
/// * per-service: one priority per service, tighter delay targets first;
/// * per-VNF: at each instance, the smaller the rate the solution lets ahead
///   of a service, the higher its priority;
/// * per-request: window centers fitted so that the expected overtaking rates
///   match the solution's rates in the least-squares sense.
pub fn realize_priorities(
    sol: &ScalingSolution,
    state: &DeploymentState,
    scenario: &Scenario,
) -> Result<Realization> {
    match scenario.priority_scheme {
        PriorityScheme::PerService => Ok(Realization {
            priorities: per_service(state, scenario),
            fit_residual: 0.0,
        }),
        PriorityScheme::PerVnf => Ok(Realization {
            priorities: per_vnf(sol, state),
            fit_residual: 0.0,
        }),
        PriorityScheme::PerRequest => {
            let jitter = scenario
                .jitter
                .ok_or_else(|| Error::Validation("per-request scheme requires a jitter".into()))?;
            Ok(per_request(sol, state, scenario, jitter))
        }
    }
}

fn per_service(state: &DeploymentState, scenario: &Scenario) -> PrioritySpec {
    let mut order = state.admitted_services();
    order.sort_by(|&a, &b| {
        scenario.service(a).max_delay.total_cmp(&scenario.service(b).max_delay).then(a.cmp(&b))
    });
    let count = order.len();
    let rank: BTreeMap<ServiceIdx, usize> = order.into_iter().enumerate().map(|(r, s)| (s, r)).collect();
    let values = state
        .usage
        .iter()
        .map(|u| ((u.service, u.vnf), (count - rank[&u.service]) as f64))
        .collect();
    PrioritySpec::Deterministic { scheme: PriorityScheme::PerService, values }
}

fn target(sol: &ScalingSolution, s: ServiceIdx, v: VnfIdx) -> f64 {
    sol.lambda_tilde.get(&(s, v)).copied().unwrap_or(0.0)
}

fn per_vnf(sol: &ScalingSolution, state: &DeploymentState) -> PrioritySpec {
    let mut values = BTreeMap::new();
    for (&m, &v) in &state.placement {
        let mut members = state.services_at(m);
        members.sort_by(|&a, &b| target(sol, a, v).total_cmp(&target(sol, b, v)).then(a.cmp(&b)));
        let k = members.len();
        for (rank, s) in members.into_iter().enumerate() {
            values.insert((s, v), (k - rank) as f64);
        }
    }
    PrioritySpec::Deterministic { scheme: PriorityScheme::PerVnf, values }
}

fn per_request(
    sol: &ScalingSolution,
    state: &DeploymentState,
    scenario: &Scenario,
    jitter: f64,
) -> Realization {
    let mut centers = BTreeMap::new();
    let mut worst = 0.0f64;
    for (&m, &v) in &state.placement {
        let members = state.services_at(m);
        let rates: Vec<f64> = members.iter().map(|&s| scenario.rate(s, v)).collect();
        let targets: Vec<f64> = members.iter().map(|&s| target(sol, s, v)).collect();
        let (offsets, residual) = fit_offsets(&rates, &targets);
        worst = worst.max(residual);
        for (&s, d) in members.iter().zip(offsets) {
            centers.insert((s, v), d * jitter);
        }
    }
    Realization { priorities: PrioritySpec::Uniform { centers, jitter }, fit_residual: worst }
}

/// Rates overtaking each class when class `s` has its window centered at
/// `offsets[s]`, in units of the jitter.
pub(crate) fn overtaking_rates(offsets: &[f64], rates: &[f64]) -> Vec<f64> {
    (0..offsets.len())
        .map(|s| {
            (0..offsets.len())
                .filter(|&t| t != s)
                .map(|t| overtake_probability(offsets[s], offsets[t], 1.0) * rates[t])
                .sum()
        })
        .collect()
}

fn fit_cost(offsets: &[f64], rates: &[f64], targets: &[f64]) -> f64 {
    let total: f64 = rates.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    overtaking_rates(offsets, rates)
        .iter()
        .zip(targets)
        .map(|(a, b)| ((a - b) / total).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Least-squares window offsets (jitter units, first class anchored at 0) and
/// the normalized residual. Runs Gauss-Newton from a start spaced by the
/// ranking of the targets and from a neutral start, and keeps the better fit.
pub(crate) fn fit_offsets(rates: &[f64], targets: &[f64]) -> (Vec<f64>, f64) {
    let k = rates.len();
    if k <= 1 {
        return (vec![0.0; k], 0.0);
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| targets[a].total_cmp(&targets[b]).then(a.cmp(&b)));
    let mut spaced = vec![0.0; k];
    for (rank, &s) in order.iter().enumerate() {
        spaced[s] = 2.0 * (k - 1 - rank) as f64;
    }
    let anchor = spaced[0];
    spaced.iter_mut().for_each(|d| *d -= anchor);

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in [spaced, vec![0.0; k]] {
        let fitted = gauss_newton(start, rates, targets);
        let cost = fit_cost(&fitted, rates, targets);
        if best.as_ref().is_none_or(|(_, c)| cost < *c) {
            best = Some((fitted, cost));
        }
    }
    best.expect("two starts")
}

fn gauss_newton(mut d: Vec<f64>, rates: &[f64], targets: &[f64]) -> Vec<f64> {
    let k = d.len();
    let mut cost = fit_cost(&d, rates, targets);
    for _ in 0..200 {
        let lam = overtaking_rates(&d, rates);
        let r = DVector::from_iterator(k, lam.iter().zip(targets).map(|(a, b)| a - b));
        // columns for offsets 1..k; offset 0 stays anchored
        let mut jac = DMatrix::<f64>::zeros(k, k - 1);
        for s in 0..k {
            for t in 0..k {
                if t == s || (d[t] - d[s]).abs() >= 2.0 {
                    continue;
                }
                let w = rates[t] / 4.0;
                if t > 0 {
                    jac[(s, t - 1)] += w;
                }
                if s > 0 {
                    jac[(s, s - 1)] -= w;
                }
            }
        }
        let mut normal = jac.transpose() * &jac;
        let scale = normal.diagonal().max().max(f64::MIN_POSITIVE);
        for i in 0..k - 1 {
            normal[(i, i)] += 1e-12 * scale;
        }
        let rhs = -(jac.transpose() * r);
        let Some(step) = normal.lu().solve(&rhs) else { break };
        let mut alpha = 1.0;
        let mut improved = false;
        while alpha > 1e-10 {
            let mut trial = d.clone();
            for i in 1..k {
                trial[i] += alpha * step[i - 1];
            }
            let c = fit_cost(&trial, rates, targets);
            if c < cost {
                let gain = cost - c;
                d = trial;
                cost = c;
                improved = gain > 1e-15;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    d
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceDelay {
    pub service: ServiceIdx,
    /// Mean end-to-end delay, seconds; infinite when some queue is unstable.
    pub delay: f64,
    pub max_delay: f64,
    /// `max_delay - delay`.
    pub slack: f64,
}

impl ServiceDelay {
    pub fn is_met(&self) -> bool {
        self.delay <= self.max_delay * (1.0 + DELAY_TOL)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayReport {
    pub rows: Vec<ServiceDelay>,
}

impl DelayReport {
    pub fn all_met(&self) -> bool {
        self.rows.iter().all(ServiceDelay::is_met)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ServiceDelay> {
        self.rows.iter().filter(|r| !r.is_met())
    }
}

/// Delay of every admitted service under `priorities` at the capabilities in `state`.
pub fn verify_realization(
    priorities: &PrioritySpec,
    state: &DeploymentState,
    scenario: &Scenario,
) -> DelayReport {
    let mut probe = state.clone();
    probe.priorities = priorities.clone();
    let rows = probe
        .admitted_services()
        .into_iter()
        .map(|s| {
            let delay = service_delay(s, &probe, scenario).unwrap_or(f64::INFINITY);
            let max_delay = scenario.service(s).max_delay;
            ServiceDelay { service: s, delay, max_delay, slack: max_delay - delay }
        })
        .collect();
    DelayReport { rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_targets_are_recovered() {
        let rates = [1000.0, 2000.0, 1500.0];
        let offsets = [0.0, 1.0, -0.5];
        let targets = overtaking_rates(&offsets, &rates);
        let (fit, residual) = fit_offsets(&rates, &targets);
        assert!(residual < 1e-9, "residual {residual}");
        for (a, b) in fit.iter().zip(offsets) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn saturated_targets_use_spacing() {
        // strict order: class 1 first, then 0, then 2
        let rates = [1000.0, 2000.0, 1500.0];
        let targets = [2000.0, 0.0, 3000.0];
        let (fit, residual) = fit_offsets(&rates, &targets);
        assert!(residual < 1e-12);
        assert!(fit[1] - fit[0] >= 2.0 && fit[0] - fit[2] >= 2.0, "{fit:?} {residual}");
    }

    #[test]
    fn single_class_sits_at_zero() {
        assert_eq!(fit_offsets(&[5.0], &[0.0]), (vec![0.0], 0.0));
    }
}
