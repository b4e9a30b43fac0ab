#![allow(dead_code)]

use std::collections::BTreeMap;

use flexshare::{
    AveragingFactor, DeploymentState, PriorityScheme, PrioritySpec, Scenario, Service, ServiceIdx, Usage,
    Vm, VmIdx, Vnf, VnfIdx,
};

pub const FACE: VnfIdx = VnfIdx(0);
pub const TRANSCODE: VnfIdx = VnfIdx(1);
pub const MOTION: VnfIdx = VnfIdx(2);
pub const S1: ServiceIdx = ServiceIdx(0);
pub const S2: ServiceIdx = ServiceIdx(1);

/// Two surveillance services: s1 runs face recognition, transcoding and
/// motion detection at 2 req/ms; s2 runs the last two at 1 req/ms. Both
/// target 1.1 ms. Every VNF costs 1 ms of one capability unit per request;
/// the shared VMs have 5 units and the face recognition VM 9.15.
pub fn surveillance(scheme: PriorityScheme) -> Scenario {
    let vm = |id: &str, c: f64| Vm { id: id.into(), max_capability: c, fixed_cost: 1.0, proportional_cost: 1.0 };
    let vnf = |id: &str| Vnf { id: id.into(), load_coefficient: 1e-3 };
    Scenario {
        vms: vec![vm("m-face", 9.15), vm("m-transcode", 5.0), vm("m-motion", 5.0)],
        vnfs: vec![vnf("face-recognition"), vnf("transcoding"), vnf("motion-detection")],
        services: vec![
            Service {
                id: "s1".into(),
                arrival_rates: [(FACE, 2000.0), (TRANSCODE, 2000.0), (MOTION, 2000.0)].into(),
                max_delay: 1.1e-3,
            },
            Service {
                id: "s2".into(),
                arrival_rates: [(TRANSCODE, 1000.0), (MOTION, 1000.0)].into(),
                max_delay: 1.1e-3,
            },
        ],
        priority_scheme: scheme,
        jitter: None,
        averaging_factor: AveragingFactor::SelfExcluded,
        seed: None,
    }
}

/// Both services deployed, every VM at full capability, no priorities yet.
pub fn surveillance_state(scenario: &Scenario) -> DeploymentState {
    let mut st = DeploymentState::for_scenario(scenario);
    for (m, v) in [(0, FACE), (1, TRANSCODE), (2, MOTION)] {
        st.placement.insert(VmIdx(m), v);
        st.capabilities.insert(VmIdx(m), scenario.vms[m].max_capability);
    }
    for (s, vnfs) in [(S1, vec![FACE, TRANSCODE, MOTION]), (S2, vec![TRANSCODE, MOTION])] {
        for v in vnfs {
            let vm = st.placement.iter().find(|(_, &pv)| pv == v).map(|(&m, _)| m).unwrap();
            st.usage.insert(Usage { service: s, vnf: v, vm });
        }
    }
    st
}

/// Deterministic priorities from `(service, vnf, value)` triples.
pub fn priorities(scheme: PriorityScheme, entries: &[(ServiceIdx, VnfIdx, f64)]) -> PrioritySpec {
    let values: BTreeMap<_, _> = entries.iter().map(|&(s, v, p)| ((s, v), p)).collect();
    PrioritySpec::Deterministic { scheme, values }
}

/// s1 ahead of s2 everywhere.
pub fn s1_first() -> PrioritySpec {
    priorities(
        PriorityScheme::PerService,
        &[(S1, FACE, 2.0), (S1, TRANSCODE, 2.0), (S1, MOTION, 2.0), (S2, TRANSCODE, 1.0), (S2, MOTION, 1.0)],
    )
}

/// Both services at the same level.
pub fn equal_priorities() -> PrioritySpec {
    priorities(
        PriorityScheme::PerService,
        &[(S1, FACE, 1.0), (S1, TRANSCODE, 1.0), (S1, MOTION, 1.0), (S2, TRANSCODE, 1.0), (S2, MOTION, 1.0)],
    )
}

/// s1 first at transcoding, s2 first at motion detection.
pub fn flexible() -> PrioritySpec {
    priorities(
        PriorityScheme::PerVnf,
        &[(S1, FACE, 1.0), (S1, TRANSCODE, 2.0), (S2, TRANSCODE, 1.0), (S1, MOTION, 1.0), (S2, MOTION, 2.0)],
    )
}

pub fn with_priorities(state: &DeploymentState, p: PrioritySpec) -> DeploymentState {
    let mut st = state.clone();
    st.priorities = p;
    st
}
