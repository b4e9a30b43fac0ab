//! Built-in scenario generators: a small synthetic topology with random VM
//! capabilities and a smart-city topology with measured per-VNF rates.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AveragingFactor, PriorityScheme, Scenario, Service, Vm, Vnf, VnfIdx};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    /// Traffic multiplier applied to every arrival rate.
    pub n: f64,
    /// Seed for the VM capability draws.
    pub seed: u64,
    /// VNF indices (0-based, into five VNFs) used by each of the three services.
    pub incidence: [Vec<usize>; 3],
    /// Per-service base rate, requests per millisecond, on each of its VNFs.
    pub base_rates_per_ms: [f64; 3],
    /// Per-service delay target, milliseconds.
    pub delays_ms: [f64; 3],
    pub vm_count: usize,
    pub capability_range: (f64, f64),
    pub load_coefficient: f64,
    pub fixed_cost: f64,
    pub proportional_cost: f64,
    pub scheme: PriorityScheme,
    pub jitter: Option<f64>,
    pub averaging_factor: AveragingFactor,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n: 1.0,
            seed: 1,
            incidence: [vec![0, 1, 2], vec![0, 2, 3], vec![2, 3, 4]],
            base_rates_per_ms: [1.0, 1.5, 2.0],
            // no target is given for s2; the midpoint of s1 and s3 is used.
            delays_ms: [20.0, 12.5, 5.0],
            vm_count: 10,
            capability_range: (5.0, 10.0),
            load_coefficient: 1e-3,
            fixed_cost: 8.0,
            proportional_cost: 0.5,
            scheme: PriorityScheme::PerVnf,
            jitter: None,
            averaging_factor: AveragingFactor::SelfExcluded,
        }
    }
}

impl SyntheticConfig {
    pub fn new(n: f64, seed: u64) -> Self {
        SyntheticConfig { n, seed, ..Default::default() }
    }
}

/// Three services over five VNFs and ten VMs with capabilities drawn from `cfg.seed`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Scenario {
    assert!(cfg.n > 0.0, "traffic multiplier must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (lo, hi) = cfg.capability_range;
    let vms = (0..cfg.vm_count)
        .map(|i| Vm {
            id: format!("m{}", i + 1),
            max_capability: rng.random_range(lo..=hi),
            fixed_cost: cfg.fixed_cost,
            proportional_cost: cfg.proportional_cost,
        })
        .collect();
    let vnfs = (0..5)
        .map(|i| Vnf { id: format!("v{}", i + 1), load_coefficient: cfg.load_coefficient })
        .collect();
    let services = (0..3)
        .map(|i| Service {
            id: format!("s{}", i + 1),
            arrival_rates: cfg.incidence[i]
                .iter()
                .map(|&v| (VnfIdx(v), cfg.base_rates_per_ms[i] * 1e3 * cfg.n))
                .collect(),
            max_delay: cfg.delays_ms[i] * 1e-3,
        })
        .collect();
    Scenario {
        vms,
        vnfs,
        services,
        priority_scheme: cfg.scheme,
        jitter: cfg.jitter,
        averaging_factor: cfg.averaging_factor,
        seed: Some(cfg.seed),
    }
}

/// VNF names and load coefficients (capability-seconds per request) of the smart-city scenario.
pub const REALISTIC_VNFS: [(&str, f64); 13] = [
    ("eNB", 1e-4),
    ("EPC-PGW", 1e-4),
    ("EPC-SGW", 1e-4),
    ("EPC-HSS", 1e-4),
    ("EPC-MME", 1e-3),
    ("CIM", 1e-3),
    ("collision-detector", 1e-3),
    ("car-manufacturer-db", 1e-4),
    ("alarm-generator", 1e-4),
    ("CT-server", 5e-3),
    ("CT-database", 1e-4),
    ("IoT-authentication", 1e-4),
    ("IoT-application-server", 1e-3),
];

const ICA_RATES: [(&str, f64); 9] = [
    ("eNB", 117.69),
    ("EPC-PGW", 117.69),
    ("EPC-SGW", 117.69),
    ("EPC-HSS", 11.77),
    ("EPC-MME", 11.77),
    ("CIM", 117.69),
    ("collision-detector", 117.69),
    ("car-manufacturer-db", 117.69),
    ("alarm-generator", 11.77),
];

const CT_RATES: [(&str, f64); 8] = [
    ("eNB", 179.82),
    ("EPC-PGW", 179.82),
    ("EPC-SGW", 179.82),
    ("EPC-HSS", 17.98),
    ("EPC-MME", 17.98),
    ("CIM", 179.82),
    ("CT-server", 179.82),
    ("CT-database", 17.98),
];

const IOT_RATES: [(&str, f64); 7] = [
    ("eNB", 50.0),
    ("EPC-PGW", 50.0),
    ("EPC-SGW", 50.0),
    ("EPC-HSS", 5.0),
    ("EPC-MME", 5.0),
    ("IoT-authentication", 20.0),
    ("IoT-application-server", 20.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RealisticConfig {
    pub n: f64,
    pub vm_count: usize,
    /// Delay targets for ICA, CT and IoT, milliseconds. These are placeholders;
    /// override them when calibrating against measurements.
    pub delays_ms: [f64; 3],
    pub scheme: PriorityScheme,
    pub jitter: Option<f64>,
    pub averaging_factor: AveragingFactor,
}

impl Default for RealisticConfig {
    fn default() -> Self {
        RealisticConfig {
            n: 1.0,
            vm_count: 10,
            delays_ms: [20.0, 50.0, 100.0],
            scheme: PriorityScheme::PerVnf,
            jitter: None,
            averaging_factor: AveragingFactor::SelfExcluded,
        }
    }
}

/// ICA, CT and IoT services sharing the EPC chain (and CIM between ICA and CT).
pub fn generate_realistic(cfg: &RealisticConfig) -> Scenario {
    assert!(cfg.n > 0.0, "traffic multiplier must be positive");
    let vnfs: Vec<Vnf> = REALISTIC_VNFS
        .iter()
        .map(|&(id, l)| Vnf { id: id.into(), load_coefficient: l })
        .collect();
    let index = |name: &str| VnfIdx(REALISTIC_VNFS.iter().position(|&(id, _)| id == name).unwrap());
    let service = |id: &str, rates: &[(&str, f64)], delay_ms: f64| Service {
        id: id.into(),
        arrival_rates: rates
            .iter()
            .map(|&(v, r)| (index(v), r * cfg.n))
            .collect::<BTreeMap<_, _>>(),
        max_delay: delay_ms * 1e-3,
    };
    Scenario {
        vms: (0..cfg.vm_count)
            .map(|i| Vm {
                id: format!("m{}", i + 1),
                max_capability: 1000.0,
                fixed_cost: 1000.0,
                proportional_cost: 1.0,
            })
            .collect(),
        vnfs,
        services: vec![
            service("ICA", &ICA_RATES, cfg.delays_ms[0]),
            service("CT", &CT_RATES, cfg.delays_ms[1]),
            service("IoT", &IOT_RATES, cfg.delays_ms[2]),
        ],
        priority_scheme: cfg.scheme,
        jitter: cfg.jitter,
        averaging_factor: cfg.averaging_factor,
        seed: None,
    }
}
