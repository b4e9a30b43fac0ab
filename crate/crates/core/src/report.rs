//! Sweeps over traffic multipliers and priority schemes.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PriorityScheme, Scenario};
use crate::pruning::{deploy_all, Deployment, Strategy};

/// A priority scheme together with the way its priorities are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    FlexShare(PriorityScheme),
    /// Per-VNF priorities found by exhaustive search.
    VnfBrute,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::FlexShare(PriorityScheme::PerService),
        Variant::FlexShare(PriorityScheme::PerVnf),
        Variant::VnfBrute,
        Variant::FlexShare(PriorityScheme::PerRequest),
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::FlexShare(s) => s.as_str(),
            Variant::VnfBrute => "vnf-brute",
        }
    }

    fn scheme(self) -> PriorityScheme {
        match self {
            Variant::FlexShare(s) => s,
            Variant::VnfBrute => PriorityScheme::PerVnf,
        }
    }

    fn strategy(self) -> Strategy {
        match self {
            Variant::FlexShare(_) => Strategy::FlexShare,
            Variant::VnfBrute => Strategy::BruteForce,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vnf-brute" | "brute" => Ok(Variant::VnfBrute),
            other => other.parse().map(Variant::FlexShare),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub scenario: String,
    pub n: f64,
    pub scheme: String,
    pub total_cost: f64,
    pub shared_services_mean: f64,
    pub mu_used_sum: f64,
    pub c_max_sum: f64,
    pub admissions_ok: usize,
}

pub const CSV_HEADER: [&str; 8] = [
    "scenario",
    "n",
    "scheme",
    "total_cost",
    "shared_services_mean",
    "mu_used_sum",
    "c_max_sum",
    "admissions_ok",
];

impl CompareRow {
    pub fn from_deployment(name: &str, n: f64, variant: Variant, d: &Deployment, scenario: &Scenario) -> Self {
        CompareRow {
            scenario: name.into(),
            n,
            scheme: variant.label().into(),
            total_cost: d.total_cost(scenario),
            shared_services_mean: d.state.mean_services_per_instance(),
            mu_used_sum: d.state.capability_sum(),
            c_max_sum: d.state.max_capability_sum(scenario),
            admissions_ok: d.admitted(),
        }
    }

    fn failed(name: &str, n: f64, variant: Variant) -> Self {
        CompareRow {
            scenario: name.into(),
            n,
            scheme: variant.label().into(),
            total_cost: f64::NAN,
            shared_services_mean: f64::NAN,
            mu_used_sum: f64::NAN,
            c_max_sum: f64::NAN,
            admissions_ok: 0,
        }
    }
}

/// Deploys every service of `base` scaled by `n` under `variant`.
pub fn run_cell(base: &Scenario, n: f64, variant: Variant, jitter: Option<f64>) -> Result<(Scenario, Deployment)> {
    let scenario = base.scaled(n).with_scheme(variant.scheme(), jitter);
    let d = deploy_all(&scenario, variant.strategy())?;
    Ok((scenario, d))
}

/// One row per (n, variant), computed in parallel. A cell that fails
/// numerically is reported with no admissions and does not stop the sweep.
pub fn compare(
    name: &str,
    base: &Scenario,
    ns: &[f64],
    variants: &[Variant],
    jitter: Option<f64>,
) -> Vec<CompareRow> {
    let cells: Vec<(f64, Variant)> =
        ns.iter().flat_map(|&n| variants.iter().map(move |&v| (n, v))).collect();
    cells
        .par_iter()
        .map(|&(n, v)| match run_cell(base, n, v, jitter) {
            Ok((sc, d)) => CompareRow::from_deployment(name, n, v, &d, &sc),
            Err(e) => {
                log::warn!("{name} n={n} {v}: {e}");
                CompareRow::failed(name, n, v)
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[CompareRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    w.flush()?;
    Ok(())
}

/// `start, start + step, ..., end` with the end point included up to rounding.
pub fn multiplier_range(start: f64, end: f64, step: f64) -> Vec<f64> {
    if step <= 0.0 || end < start {
        return vec![start];
    }
    let count = ((end - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| ((start + step * i as f64) * 1e9).round() / 1e9).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_include_end() {
        assert_eq!(multiplier_range(1.0, 2.0, 0.2), vec![1.0, 1.2, 1.4, 1.6, 1.8, 2.0]);
        assert_eq!(multiplier_range(1.0, 1.0, 0.2), vec![1.0]);
    }

    #[test]
    fn variant_labels_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.label().parse::<Variant>().unwrap(), v);
        }
    }

    #[test]
    fn csv_header_is_frozen() {
        let row = CompareRow::failed("x", 1.0, Variant::VnfBrute);
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    }
}
