//! Scenario and deployment-state types.
//!
//! All quantities are held in SI units: requests per second, seconds, and
//! capability units. Load coefficients are capability-seconds per request, so
//! a VNF with coefficient `l` on a VM using capability `mu` serves `mu / l`
//! requests per second.

mod file;
mod generate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use file::{load_scenario, save_scenario, scenario_from_json, scenario_to_json, StateFile, Units};
pub use generate::{
    generate_realistic, generate_synthetic, RealisticConfig, SyntheticConfig, REALISTIC_VNFS,
};

macro_rules! index_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub struct $name(pub usize);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

index_type!(VmIdx);
index_type!(VnfIdx);
index_type!(ServiceIdx);

#[derive(Debug, Clone, PartialEq)]
pub struct Vm {
    pub id: String,
    pub max_capability: f64,
    pub fixed_cost: f64,
    pub proportional_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vnf {
    pub id: String,
    /// Capability-seconds needed per request.
    pub load_coefficient: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Service {
    pub id: String,
    /// Requests per second entering each VNF; absent entries are zero.
    pub arrival_rates: BTreeMap<VnfIdx, f64>,
    /// Target mean end-to-end delay, seconds.
    pub max_delay: f64,
}

impl Service {
    pub fn rate(&self, vnf: VnfIdx) -> f64 {
        self.arrival_rates.get(&vnf).copied().unwrap_or(0.0)
    }

    /// VNFs this service actually traverses, in index order.
    pub fn vnfs(&self) -> impl Iterator<Item = VnfIdx> + '_ {
        self.arrival_rates.iter().filter(|(_, &r)| r > 0.0).map(|(&v, _)| v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorityScheme {
    PerService,
    PerVnf,
    PerRequest,
}

impl PriorityScheme {
    pub const ALL: [PriorityScheme; 3] =
        [PriorityScheme::PerService, PriorityScheme::PerVnf, PriorityScheme::PerRequest];

    pub fn as_str(self) -> &'static str {
        match self {
            PriorityScheme::PerService => "per-service",
            PriorityScheme::PerVnf => "per-vnf",
            PriorityScheme::PerRequest => "per-request",
        }
    }
}

impl fmt::Display for PriorityScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for PriorityScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-service" | "service" => Ok(PriorityScheme::PerService),
            "per-vnf" | "vnf" => Ok(PriorityScheme::PerVnf),
            "per-request" | "request" => Ok(PriorityScheme::PerRequest),
            other => Err(Error::Validation(format!("unknown priority scheme `{other}`"))),
        }
    }
}

/// How many competing arrival streams each stream is credited with, on
/// average, in the averaging constraint of the scaling problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingFactor {
    /// `|S| / 2`: every stream counted, its own included.
    #[serde(alias = "paper")]
    SelfIncluded,
    /// `(|S| - 1) / 2`: a stream never competes with itself.
    #[default]
    SelfExcluded,
}

impl AveragingFactor {
    pub fn factor(self, sharing: usize) -> f64 {
        match self {
            AveragingFactor::SelfIncluded => sharing as f64 / 2.0,
            AveragingFactor::SelfExcluded => sharing.saturating_sub(1) as f64 / 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AveragingFactor::SelfIncluded => "self-included",
            AveragingFactor::SelfExcluded => "self-excluded",
        }
    }
}

impl std::str::FromStr for AveragingFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" | "self-included" => Ok(AveragingFactor::SelfIncluded),
            "self-excluded" => Ok(AveragingFactor::SelfExcluded),
            other => Err(Error::Validation(format!("unknown averaging factor `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub vms: Vec<Vm>,
    pub vnfs: Vec<Vnf>,
    pub services: Vec<Service>,
    pub priority_scheme: PriorityScheme,
    /// Half-width of the per-request priority window; present iff the scheme is per-request.
    pub jitter: Option<f64>,
    pub averaging_factor: AveragingFactor,
    pub seed: Option<u64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if self.vms.is_empty() {
            return fail("scenario has no VMs".into());
        }
        if self.vnfs.is_empty() {
            return fail("scenario has no VNFs".into());
        }
        if self.services.is_empty() {
            return fail("scenario has no services".into());
        }
        check_unique("VM", self.vms.iter().map(|v| &v.id))?;
        check_unique("VNF", self.vnfs.iter().map(|v| &v.id))?;
        check_unique("service", self.services.iter().map(|s| &s.id))?;
        for vm in &self.vms {
            if !(vm.max_capability > 0.0 && vm.max_capability.is_finite()) {
                return fail(format!("VM `{}`: max_capability must be > 0", vm.id));
            }
            if !(vm.fixed_cost >= 0.0 && vm.fixed_cost.is_finite()) {
                return fail(format!("VM `{}`: fixed_cost must be >= 0", vm.id));
            }
            if !(vm.proportional_cost >= 0.0 && vm.proportional_cost.is_finite()) {
                return fail(format!("VM `{}`: proportional_cost must be >= 0", vm.id));
            }
        }
        for vnf in &self.vnfs {
            if !(vnf.load_coefficient > 0.0 && vnf.load_coefficient.is_finite()) {
                return fail(format!("VNF `{}`: load_coefficient must be > 0", vnf.id));
            }
        }
        for s in &self.services {
            if !(s.max_delay > 0.0 && s.max_delay.is_finite()) {
                return fail(format!("service `{}`: max_delay must be > 0", s.id));
            }
            for (&v, &r) in &s.arrival_rates {
                if v.0 >= self.vnfs.len() {
                    return fail(format!("service `{}` references unknown VNF index {v}", s.id));
                }
                if !(r >= 0.0 && r.is_finite()) {
                    return fail(format!("service `{}`: arrival rates must be >= 0", s.id));
                }
            }
            if s.vnfs().next().is_none() {
                return fail(format!("service `{}` has no positive arrival rate", s.id));
            }
        }
        match (self.priority_scheme, self.jitter) {
            (PriorityScheme::PerRequest, Some(j)) if j > 0.0 && j.is_finite() => {}
            (PriorityScheme::PerRequest, _) => {
                return fail("per-request scheme requires a jitter > 0".into())
            }
            (_, Some(_)) => return fail("jitter is only allowed with the per-request scheme".into()),
            (_, None) => {}
        }
        Ok(())
    }

    pub fn vm(&self, m: VmIdx) -> &Vm {
        &self.vms[m.0]
    }

    pub fn vnf(&self, v: VnfIdx) -> &Vnf {
        &self.vnfs[v.0]
    }

    pub fn service(&self, s: ServiceIdx) -> &Service {
        &self.services[s.0]
    }

    pub fn service_indices(&self) -> impl Iterator<Item = ServiceIdx> {
        (0..self.services.len()).map(ServiceIdx)
    }

    pub fn vm_indices(&self) -> impl Iterator<Item = VmIdx> {
        (0..self.vms.len()).map(VmIdx)
    }

    pub fn find_service(&self, id: &str) -> Option<ServiceIdx> {
        self.services.iter().position(|s| s.id == id).map(ServiceIdx)
    }

    pub fn find_vm(&self, id: &str) -> Option<VmIdx> {
        self.vms.iter().position(|s| s.id == id).map(VmIdx)
    }

    pub fn find_vnf(&self, id: &str) -> Option<VnfIdx> {
        self.vnfs.iter().position(|s| s.id == id).map(VnfIdx)
    }

    /// Arrival rate of `s` at `v`.
    pub fn rate(&self, s: ServiceIdx, v: VnfIdx) -> f64 {
        self.services[s.0].rate(v)
    }

    /// Capability units one second of `s`'s traffic at `v` consumes.
    pub fn load(&self, s: ServiceIdx, v: VnfIdx) -> f64 {
        self.vnfs[v.0].load_coefficient * self.rate(s, v)
    }

    /// Same scenario with every arrival rate multiplied by `n`.
    pub fn scaled(&self, n: f64) -> Scenario {
        let mut out = self.clone();
        for s in &mut out.services {
            for r in s.arrival_rates.values_mut() {
                *r *= n;
            }
        }
        out
    }

    /// Same scenario under a different priority scheme.
    pub fn with_scheme(&self, scheme: PriorityScheme, jitter: Option<f64>) -> Scenario {
        let mut out = self.clone();
        out.priority_scheme = scheme;
        out.jitter = match scheme {
            PriorityScheme::PerRequest => Some(jitter.or(self.jitter).unwrap_or(1.0)),
            _ => None,
        };
        out
    }
}

fn check_unique<'a>(what: &str, ids: impl Iterator<Item = &'a String>) -> Result<()> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(Error::Validation(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

/// Service `service` sends its traffic for `vnf` to the instance on `vm`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Usage {
    pub service: ServiceIdx,
    pub vnf: VnfIdx,
    pub vm: VmIdx,
}

/// Realized priorities of every (service, VNF) pair.
#[derive(Debug, Clone, PartialEq)]
pub enum PrioritySpec {
    /// Deterministic priority per pair; larger is served first. Under the
    /// per-service scheme the value is constant across VNFs for each service.
    Deterministic {
        scheme: PriorityScheme,
        values: BTreeMap<(ServiceIdx, VnfIdx), f64>,
    },
    /// Priorities drawn uniformly in `[center - jitter, center + jitter]`.
    Uniform {
        centers: BTreeMap<(ServiceIdx, VnfIdx), f64>,
        jitter: f64,
    },
}

impl PrioritySpec {
    pub fn empty(scheme: PriorityScheme, jitter: Option<f64>) -> Self {
        match scheme {
            PriorityScheme::PerRequest => PrioritySpec::Uniform {
                centers: BTreeMap::new(),
                jitter: jitter.unwrap_or(1.0),
            },
            s => PrioritySpec::Deterministic { scheme: s, values: BTreeMap::new() },
        }
    }

    pub fn scheme(&self) -> PriorityScheme {
        match self {
            PrioritySpec::Deterministic { scheme, .. } => *scheme,
            PrioritySpec::Uniform { .. } => PriorityScheme::PerRequest,
        }
    }

    pub fn value(&self, s: ServiceIdx, v: VnfIdx) -> f64 {
        match self {
            PrioritySpec::Deterministic { values, .. } => values.get(&(s, v)).copied(),
            PrioritySpec::Uniform { centers, .. } => centers.get(&(s, v)).copied(),
        }
        .unwrap_or(0.0)
    }
}

/// Placements, usages, capabilities and priorities of everything admitted so far.
#[derive(Debug, Clone, PartialEq)]
pub struct DeploymentState {
    pub placement: BTreeMap<VmIdx, VnfIdx>,
    pub usage: BTreeSet<Usage>,
    pub capabilities: BTreeMap<VmIdx, f64>,
    pub priorities: PrioritySpec,
}

impl DeploymentState {
    pub fn new(scheme: PriorityScheme, jitter: Option<f64>) -> Self {
        DeploymentState {
            placement: BTreeMap::new(),
            usage: BTreeSet::new(),
            capabilities: BTreeMap::new(),
            priorities: PrioritySpec::empty(scheme, jitter),
        }
    }

    pub fn for_scenario(scenario: &Scenario) -> Self {
        Self::new(scenario.priority_scheme, scenario.jitter)
    }

    pub fn is_admitted(&self, s: ServiceIdx) -> bool {
        self.usage.iter().any(|u| u.service == s)
    }

    pub fn admitted_services(&self) -> Vec<ServiceIdx> {
        let set: BTreeSet<ServiceIdx> = self.usage.iter().map(|u| u.service).collect();
        set.into_iter().collect()
    }

    /// Services sharing the instance on `vm`, in index order.
    pub fn services_at(&self, vm: VmIdx) -> Vec<ServiceIdx> {
        self.usage.iter().filter(|u| u.vm == vm).map(|u| u.service).collect()
    }

    /// The VM serving `s`'s traffic for `v`, if any.
    pub fn vm_of(&self, s: ServiceIdx, v: VnfIdx) -> Option<VmIdx> {
        self.usage.iter().find(|u| u.service == s && u.vnf == v).map(|u| u.vm)
    }

    pub fn usages_of(&self, s: ServiceIdx) -> impl Iterator<Item = &Usage> {
        self.usage.iter().filter(move |u| u.service == s)
    }

    /// Offered load, in capability units, at the instance on `vm`.
    pub fn offered_load(&self, vm: VmIdx, scenario: &Scenario) -> f64 {
        self.usage.iter().filter(|u| u.vm == vm).map(|u| scenario.load(u.service, u.vnf)).sum()
    }

    pub fn capability(&self, vm: VmIdx) -> f64 {
        self.capabilities.get(&vm).copied().unwrap_or(0.0)
    }

    /// Checks the placement/usage/capability invariants against `scenario`.
    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let fail = |msg: String| Err(Error::State(msg));
        for (&m, &v) in &self.placement {
            if m.0 >= scenario.vms.len() || v.0 >= scenario.vnfs.len() {
                return fail(format!("placement ({m}, {v}) out of range"));
            }
        }
        let mut seen = BTreeSet::new();
        for u in &self.usage {
            if self.placement.get(&u.vm) != Some(&u.vnf) {
                return fail(format!(
                    "usage of VM `{}` for VNF `{}` without a matching placement",
                    scenario.vm(u.vm).id,
                    scenario.vnf(u.vnf).id
                ));
            }
            if !seen.insert((u.service, u.vnf)) {
                return fail(format!(
                    "service `{}` uses VNF `{}` on more than one VM",
                    scenario.service(u.service).id,
                    scenario.vnf(u.vnf).id
                ));
            }
        }
        for s in self.admitted_services() {
            for v in scenario.service(s).vnfs() {
                if !seen.contains(&(s, v)) {
                    return fail(format!(
                        "admitted service `{}` has no instance for VNF `{}`",
                        scenario.service(s).id,
                        scenario.vnf(v).id
                    ));
                }
            }
        }
        for (&m, &mu) in &self.capabilities {
            if !self.placement.contains_key(&m) {
                return fail(format!("capability set on inactive VM `{}`", scenario.vm(m).id));
            }
            if !(mu >= 0.0 && mu <= scenario.vm(m).max_capability * (1.0 + 1e-9)) {
                return fail(format!("capability of VM `{}` outside [0, C]", scenario.vm(m).id));
            }
        }
        Ok(())
    }

    /// Operator cost: fixed cost of every active VM plus proportional cost of used capability.
    pub fn total_cost(&self, scenario: &Scenario) -> f64 {
        self.placement
            .keys()
            .map(|&m| {
                let vm = scenario.vm(m);
                vm.fixed_cost + vm.proportional_cost * self.capability(m)
            })
            .sum()
    }

    /// Mean number of services per active instance.
    pub fn mean_services_per_instance(&self) -> f64 {
        if self.placement.is_empty() {
            return 0.0;
        }
        let total: usize = self.placement.keys().map(|&m| self.services_at(m).len()).sum();
        total as f64 / self.placement.len() as f64
    }

    pub fn capability_sum(&self) -> f64 {
        self.placement.keys().map(|&m| self.capability(m)).sum()
    }

    pub fn max_capability_sum(&self, scenario: &Scenario) -> f64 {
        self.placement.keys().map(|&m| scenario.vm(m).max_capability).sum()
    }
}

/// Convenience wrapper around [`DeploymentState::total_cost`].
pub fn total_cost(state: &DeploymentState, scenario: &Scenario) -> f64 {
    state.total_cost(scenario)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_vm_scenario(n_vms: usize) -> Scenario {
        Scenario {
            vms: (0..n_vms)
                .map(|i| Vm {
                    id: format!("m{i}"),
                    max_capability: 10.0,
                    fixed_cost: 8.0,
                    proportional_cost: 0.5,
                })
                .collect(),
            vnfs: vec![Vnf { id: "v1".into(), load_coefficient: 1e-3 }],
            services: vec![Service {
                id: "s1".into(),
                arrival_rates: [(VnfIdx(0), 1000.0)].into_iter().collect(),
                max_delay: 0.02,
            }],
            priority_scheme: PriorityScheme::PerVnf,
            jitter: None,
            averaging_factor: AveragingFactor::SelfExcluded,
            seed: None,
        }
    }

    #[test]
    fn empty_deployment_costs_nothing() {
        let sc = one_vm_scenario(1);
        assert_eq!(DeploymentState::for_scenario(&sc).total_cost(&sc), 0.0);
    }

    #[test]
    fn cost_of_active_vms() {
        let sc = one_vm_scenario(2);
        let mut st = DeploymentState::for_scenario(&sc);
        st.placement.insert(VmIdx(0), VnfIdx(0));
        st.capabilities.insert(VmIdx(0), 4.0);
        assert_eq!(st.total_cost(&sc), 10.0);
        st.placement.insert(VmIdx(1), VnfIdx(0));
        st.capabilities.insert(VmIdx(1), 6.0);
        assert_eq!(st.total_cost(&sc), 21.0);
    }

    #[test]
    fn validation_rejects_bad_inputs() {
        let mut sc = one_vm_scenario(1);
        sc.services[0].max_delay = -1.0;
        assert!(matches!(sc.validate(), Err(Error::Validation(_))));

        let mut sc = one_vm_scenario(1);
        sc.services.clear();
        assert!(matches!(sc.validate(), Err(Error::Validation(_))));

        let mut sc = one_vm_scenario(1);
        sc.jitter = Some(1.0);
        assert!(sc.validate().is_err());

        let mut sc = one_vm_scenario(1);
        sc.priority_scheme = PriorityScheme::PerRequest;
        assert!(sc.validate().is_err());
        sc.jitter = Some(0.5);
        sc.validate().unwrap();
    }

    #[test]
    fn state_validation_catches_dangling_usage() {
        let sc = one_vm_scenario(2);
        let mut st = DeploymentState::for_scenario(&sc);
        st.usage.insert(Usage { service: ServiceIdx(0), vnf: VnfIdx(0), vm: VmIdx(1) });
        assert!(st.validate(&sc).is_err());
        st.placement.insert(VmIdx(1), VnfIdx(0));
        st.validate(&sc).unwrap();
        st.capabilities.insert(VmIdx(1), 11.0);
        assert!(st.validate(&sc).is_err());
    }

    #[test]
    fn averaging_factors() {
        assert_eq!(AveragingFactor::SelfIncluded.factor(2), 1.0);
        assert_eq!(AveragingFactor::SelfExcluded.factor(2), 0.5);
        assert_eq!(AveragingFactor::SelfExcluded.factor(1), 0.0);
    }
}
