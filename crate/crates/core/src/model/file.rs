//! JSON scenario files and deployment-state exports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    AveragingFactor, DeploymentState, PriorityScheme, PrioritySpec, Scenario, Service, ServiceIdx,
    Usage, Vm, Vnf, VnfIdx,
};
use crate::error::{Error, Result};

/// Units declared by a scenario file. Values are converted to SI on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(default = "Units::default_rate")]
    pub rate: String,
    #[serde(default = "Units::default_delay")]
    pub delay: String,
    #[serde(default = "Units::default_load")]
    pub load: String,
}

impl Units {
    fn default_rate() -> String {
        "req/s".into()
    }
    fn default_delay() -> String {
        "s".into()
    }
    fn default_load() -> String {
        "cap*s/req".into()
    }

    fn rate_factor(&self) -> Result<f64> {
        match self.rate.as_str() {
            "req/s" => Ok(1.0),
            "req/ms" => Ok(1e3),
            u => Err(Error::Validation(format!("unknown rate unit `{u}`"))),
        }
    }

    fn delay_factor(&self) -> Result<f64> {
        match self.delay.as_str() {
            "s" => Ok(1.0),
            "ms" => Ok(1e-3),
            u => Err(Error::Validation(format!("unknown delay unit `{u}`"))),
        }
    }

    fn load_factor(&self) -> Result<f64> {
        match self.load.as_str() {
            "cap*s/req" => Ok(1.0),
            "cap*ms/req" => Ok(1e-3),
            u => Err(Error::Validation(format!("unknown load unit `{u}`"))),
        }
    }
}

impl Default for Units {
    fn default() -> Self {
        Units { rate: Self::default_rate(), delay: Self::default_delay(), load: Self::default_load() }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VmEntry {
    id: String,
    max_capability: f64,
    fixed_cost: f64,
    proportional_cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VnfEntry {
    id: String,
    load_coefficient: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ServiceEntry {
    id: String,
    arrival_rates: BTreeMap<String, f64>,
    max_delay: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    vms: Vec<VmEntry>,
    vnfs: Vec<VnfEntry>,
    services: Vec<ServiceEntry>,
    priority_scheme: PriorityScheme,
    #[serde(default)]
    jitter: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    units: Units,
    #[serde(default)]
    averaging_factor: AveragingFactor,
}

pub fn scenario_from_json(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    let rate_k = file.units.rate_factor()?;
    let delay_k = file.units.delay_factor()?;
    let load_k = file.units.load_factor()?;

    let vnfs: Vec<Vnf> = file
        .vnfs
        .into_iter()
        .map(|v| Vnf { id: v.id, load_coefficient: v.load_coefficient * load_k })
        .collect();
    let vnf_index: BTreeMap<&str, VnfIdx> =
        vnfs.iter().enumerate().map(|(i, v)| (v.id.as_str(), VnfIdx(i))).collect();

    let mut services = Vec::with_capacity(file.services.len());
    for s in file.services {
        let mut arrival_rates = BTreeMap::new();
        for (vnf, rate) in s.arrival_rates {
            let idx = *vnf_index.get(vnf.as_str()).ok_or_else(|| {
                Error::Validation(format!("service `{}` references unknown VNF `{vnf}`", s.id))
            })?;
            arrival_rates.insert(idx, rate * rate_k);
        }
        services.push(Service { id: s.id, arrival_rates, max_delay: s.max_delay * delay_k });
    }

    let scenario = Scenario {
        vms: file
            .vms
            .into_iter()
            .map(|v| Vm {
                id: v.id,
                max_capability: v.max_capability,
                fixed_cost: v.fixed_cost,
                proportional_cost: v.proportional_cost,
            })
            .collect(),
        vnfs,
        services,
        priority_scheme: file.priority_scheme,
        jitter: file.jitter,
        averaging_factor: file.averaging_factor,
        seed: file.seed,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Serializes in SI units.
pub fn scenario_to_json(scenario: &Scenario) -> String {
    let file = ScenarioFile {
        vms: scenario
            .vms
            .iter()
            .map(|v| VmEntry {
                id: v.id.clone(),
                max_capability: v.max_capability,
                fixed_cost: v.fixed_cost,
                proportional_cost: v.proportional_cost,
            })
            .collect(),
        vnfs: scenario
            .vnfs
            .iter()
            .map(|v| VnfEntry { id: v.id.clone(), load_coefficient: v.load_coefficient })
            .collect(),
        services: scenario
            .services
            .iter()
            .map(|s| ServiceEntry {
                id: s.id.clone(),
                arrival_rates: s
                    .arrival_rates
                    .iter()
                    .map(|(&v, &r)| (scenario.vnf(v).id.clone(), r))
                    .collect(),
                max_delay: s.max_delay,
            })
            .collect(),
        priority_scheme: scenario.priority_scheme,
        jitter: scenario.jitter,
        seed: scenario.seed,
        units: Units::default(),
        averaging_factor: scenario.averaging_factor,
    };
    serde_json::to_string_pretty(&file).expect("scenario serializes")
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    scenario_from_json(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, scenario_to_json(scenario) + "\n")?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UsageEntry {
    pub service: String,
    pub vnf: String,
    pub vm: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorityEntry {
    pub service: String,
    pub vnf: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrioritiesEntry {
    pub scheme: PriorityScheme,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    /// Deterministic priorities, or uniform-window centers for the per-request scheme.
    pub values: Vec<PriorityEntry>,
}

/// Exported deployment state, keyed by scenario identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub placement: BTreeMap<String, String>,
    pub usage: Vec<UsageEntry>,
    pub capabilities: BTreeMap<String, f64>,
    pub priorities: PrioritiesEntry,
    pub cost: f64,
}

impl StateFile {
    pub fn from_state(state: &DeploymentState, scenario: &Scenario) -> StateFile {
        let name_pair = |(s, v): &(ServiceIdx, VnfIdx), value: f64| PriorityEntry {
            service: scenario.service(*s).id.clone(),
            vnf: scenario.vnf(*v).id.clone(),
            value,
        };
        let priorities = match &state.priorities {
            PrioritySpec::Deterministic { scheme, values } => PrioritiesEntry {
                scheme: *scheme,
                jitter: None,
                values: values.iter().map(|(k, &p)| name_pair(k, p)).collect(),
            },
            PrioritySpec::Uniform { centers, jitter } => PrioritiesEntry {
                scheme: PriorityScheme::PerRequest,
                jitter: Some(*jitter),
                values: centers.iter().map(|(k, &p)| name_pair(k, p)).collect(),
            },
        };
        StateFile {
            placement: state
                .placement
                .iter()
                .map(|(&m, &v)| (scenario.vm(m).id.clone(), scenario.vnf(v).id.clone()))
                .collect(),
            usage: state
                .usage
                .iter()
                .map(|u| UsageEntry {
                    service: scenario.service(u.service).id.clone(),
                    vnf: scenario.vnf(u.vnf).id.clone(),
                    vm: scenario.vm(u.vm).id.clone(),
                })
                .collect(),
            capabilities: state
                .capabilities
                .iter()
                .map(|(&m, &mu)| (scenario.vm(m).id.clone(), mu))
                .collect(),
            priorities,
            cost: state.total_cost(scenario),
        }
    }

    pub fn to_state(&self, scenario: &Scenario) -> Result<DeploymentState> {
        let vm = |id: &str| {
            scenario.find_vm(id).ok_or_else(|| Error::State(format!("unknown VM `{id}`")))
        };
        let vnf = |id: &str| {
            scenario.find_vnf(id).ok_or_else(|| Error::State(format!("unknown VNF `{id}`")))
        };
        let service = |id: &str| {
            scenario.find_service(id).ok_or_else(|| Error::State(format!("unknown service `{id}`")))
        };
        let mut state = DeploymentState::new(self.priorities.scheme, self.priorities.jitter);
        for (m, v) in &self.placement {
            state.placement.insert(vm(m)?, vnf(v)?);
        }
        for u in &self.usage {
            state.usage.insert(Usage { service: service(&u.service)?, vnf: vnf(&u.vnf)?, vm: vm(&u.vm)? });
        }
        for (m, &mu) in &self.capabilities {
            state.capabilities.insert(vm(m)?, mu);
        }
        let mut values = BTreeMap::new();
        for p in &self.priorities.values {
            values.insert((service(&p.service)?, vnf(&p.vnf)?), p.value);
        }
        state.priorities = match self.priorities.scheme {
            PriorityScheme::PerRequest => PrioritySpec::Uniform {
                centers: values,
                jitter: self
                    .priorities
                    .jitter
                    .ok_or_else(|| Error::State("per-request priorities need a jitter".into()))?,
            },
            scheme => PrioritySpec::Deterministic { scheme, values },
        };
        state.validate(scenario)?;
        Ok(state)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("state serializes")
    }

    pub fn from_json(text: &str) -> Result<StateFile> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MS_SCENARIO: &str = r#"{
        "vms": [{"id": "m1", "max_capability": 5, "fixed_cost": 8, "proportional_cost": 0.5}],
        "vnfs": [{"id": "v1", "load_coefficient": 1}],
        "services": [{"id": "s1", "arrival_rates": {"v1": 2}, "max_delay": 1.1}],
        "priority_scheme": "per-vnf",
        "units": {"rate": "req/ms", "delay": "ms", "load": "cap*ms/req"}
    }"#;

    #[test]
    fn units_are_normalized_to_si() {
        let sc = scenario_from_json(MS_SCENARIO).unwrap();
        assert_eq!(sc.services[0].rate(VnfIdx(0)), 2000.0);
        assert!((sc.services[0].max_delay - 1.1e-3).abs() < 1e-15);
        assert_eq!(sc.vnfs[0].load_coefficient, 1e-3);
        assert_eq!(sc.averaging_factor, AveragingFactor::SelfExcluded);
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = scenario_from_json("{\n \"vms\": [,]\n}").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_vnf_reference_is_a_validation_error() {
        let text = MS_SCENARIO.replace("{\"v1\": 2}", "{\"v9\": 2}");
        assert!(matches!(scenario_from_json(&text), Err(Error::Validation(_))));
    }

    #[test]
    fn negative_delay_rejected() {
        let text = MS_SCENARIO.replace("\"max_delay\": 1.1", "\"max_delay\": -1");
        assert!(matches!(scenario_from_json(&text), Err(Error::Validation(_))));
    }
}
