//! Discrete-event simulation of every VNF instance as a preemptive-resume
//! priority queue with Poisson arrivals and exponential service.
//!
//! Each (service, VNF) stream arrives independently at its instance and the
//! end-to-end delay of a service is the sum of its per-instance means, as in
//! the analytic model. Instances are simulated independently, in parallel.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DeploymentState, PrioritySpec, Scenario, ServiceIdx, VmIdx, VnfIdx};
use crate::queueing::sojourn_times;

/// Relative deviation above which a simulated mean is flagged.
pub const DEVIATION_THRESHOLD: f64 = 0.02;
pub const MIN_HORIZON: usize = 10_000;
const BATCHES: usize = 20;

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub state: DeploymentState,
    pub scenario: Scenario,
    /// Completed requests per (service, VNF) stream.
    pub horizon: usize,
    pub seed: u64,
    /// Leading fraction of each stream's completions discarded.
    pub warmup_fraction: f64,
}

impl SimConfig {
    pub fn new(state: DeploymentState, scenario: Scenario, horizon: usize, seed: u64) -> Self {
        SimConfig { state, scenario, horizon, seed, warmup_fraction: 0.1 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon < MIN_HORIZON {
            return Err(Error::Precondition(format!(
                "horizon {} is below the minimum of {MIN_HORIZON} completions",
                self.horizon
            )));
        }
        if !(0.0..1.0).contains(&self.warmup_fraction) {
            return Err(Error::Precondition("warmup fraction must lie in [0, 1)".into()));
        }
        self.state.validate(&self.scenario)?;
        for &m in self.state.placement.keys() {
            let load = self.state.offered_load(m, &self.scenario);
            let mu = self.state.capability(m);
            if load >= mu {
                return Err(Error::Unstable { vm: self.scenario.vm(m).id.clone(), load, capability: mu });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueueStats {
    pub service: ServiceIdx,
    pub vnf: VnfIdx,
    pub vm: VmIdx,
    pub completions: usize,
    /// Seconds.
    pub mean_sojourn: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ServiceStats {
    pub service: ServiceIdx,
    /// Seconds.
    pub mean_delay: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimReport {
    pub queues: Vec<QueueStats>,
    pub services: Vec<ServiceStats>,
    /// Busy fraction of each active VM.
    pub utilization: BTreeMap<VmIdx, f64>,
}

#[derive(Serialize)]
struct QueueRow<'a> {
    service: &'a str,
    vnf: &'a str,
    vm: &'a str,
    completions: usize,
    mean_sojourn_s: f64,
    std_error_s: f64,
}

impl SimReport {
    pub fn to_json(&self, scenario: &Scenario) -> serde_json::Value {
        let queues: Vec<_> = self
            .queues
            .iter()
            .map(|q| {
                serde_json::json!({
                    "service": scenario.service(q.service).id,
                    "vnf": scenario.vnf(q.vnf).id,
                    "vm": scenario.vm(q.vm).id,
                    "completions": q.completions,
                    "mean_sojourn_s": q.mean_sojourn,
                    "std_error_s": q.std_error,
                })
            })
            .collect();
        let services: Vec<_> = self
            .services
            .iter()
            .map(|s| {
                serde_json::json!({
                    "service": scenario.service(s.service).id,
                    "mean_delay_s": s.mean_delay,
                    "std_error_s": s.std_error,
                })
            })
            .collect();
        let utilization: BTreeMap<&str, f64> =
            self.utilization.iter().map(|(m, u)| (scenario.vm(*m).id.as_str(), *u)).collect();
        serde_json::json!({ "queues": queues, "services": services, "utilization": utilization })
    }

    /// One row per queue.
    pub fn write_csv<W: Write>(&self, out: W, scenario: &Scenario) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for q in &self.queues {
            w.serialize(QueueRow {
                service: &scenario.service(q.service).id,
                vnf: &scenario.vnf(q.vnf).id,
                vm: &scenario.vm(q.vm).id,
                completions: q.completions,
                mean_sojourn_s: q.mean_sojourn,
                std_error_s: q.std_error,
            })
            .map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, Copy)]
struct Job {
    class: usize,
    priority: f64,
    seq: u64,
    arrival: f64,
    remaining: f64,
}

impl PartialEq for Job {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Job {}

impl PartialOrd for Job {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Job {
    /// Higher priority first, then earlier arrival.
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority.total_cmp(&other.priority).then(other.seq.cmp(&self.seq))
    }
}

struct Class {
    rate: f64,
    center: f64,
}

struct Tally {
    skip: usize,
    seen: usize,
    sum: f64,
    batch_size: usize,
    batch_sum: f64,
    batch_len: usize,
    batch_means: Vec<f64>,
}

impl Tally {
    fn new(horizon: usize, warmup: f64) -> Self {
        let skip = (horizon as f64 * warmup).floor() as usize;
        Tally {
            skip,
            seen: 0,
            sum: 0.0,
            batch_size: ((horizon - skip) / BATCHES).max(1),
            batch_sum: 0.0,
            batch_len: 0,
            batch_means: Vec::new(),
        }
    }

    fn record(&mut self, x: f64) {
        self.seen += 1;
        if self.seen <= self.skip {
            return;
        }
        self.sum += x;
        self.batch_sum += x;
        self.batch_len += 1;
        if self.batch_len == self.batch_size {
            self.batch_means.push(self.batch_sum / self.batch_size as f64);
            self.batch_sum = 0.0;
            self.batch_len = 0;
        }
    }

    fn kept(&self) -> usize {
        self.seen.saturating_sub(self.skip)
    }

    fn mean(&self) -> f64 {
        self.sum / self.kept().max(1) as f64
    }

    /// Batch-means standard error of the mean.
    fn std_error(&self) -> f64 {
        let b = self.batch_means.len();
        if b < 2 {
            return f64::INFINITY;
        }
        let m = self.batch_means.iter().sum::<f64>() / b as f64;
        let var = self.batch_means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64;
        (var / b as f64).sqrt()
    }
}

struct QueueOutcome {
    tallies: Vec<Tally>,
    utilization: f64,
}

/// Simulates one instance until every class has `horizon` completions.
fn run_queue(
    classes: &[Class],
    service_rate: f64,
    jitter: Option<f64>,
    horizon: usize,
    warmup: f64,
    seed: u64,
    stream: u64,
) -> QueueOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let service = Exp::new(service_rate).expect("positive service rate");
    let inter: Vec<Exp<f64>> = classes.iter().map(|c| Exp::new(c.rate).expect("positive rate")).collect();
    let mut next_arrival: Vec<f64> = inter.iter().map(|d| d.sample(&mut rng)).collect();
    let mut tallies: Vec<Tally> = classes.iter().map(|_| Tally::new(horizon, warmup)).collect();
    let mut waiting: BinaryHeap<Job> = BinaryHeap::new();
    let mut current: Option<Job> = None;
    let mut now = 0.0f64;
    let mut busy = 0.0f64;
    let mut seq = 0u64;
    let mut done = 0usize;

    while done < classes.len() {
        let (class, t_arr) = next_arrival
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("at least one class");
        if let Some(job) = current.as_mut() {
            let t_done = now + job.remaining;
            if t_done <= t_arr {
                busy += job.remaining;
                now = t_done;
                let tally = &mut tallies[job.class];
                tally.record(now - job.arrival);
                if tally.seen == horizon {
                    done += 1;
                }
                current = waiting.pop();
                continue;
            }
            job.remaining -= t_arr - now;
            busy += t_arr - now;
        }
        now = t_arr;
        next_arrival[class] = now + inter[class].sample(&mut rng);
        let priority = match jitter {
            Some(j) => classes[class].center + rng.random_range(-j..=j),
            None => classes[class].center,
        };
        let job = Job { class, priority, seq, arrival: now, remaining: service.sample(&mut rng) };
        seq += 1;
        match current {
            Some(running) if job.priority > running.priority => {
                waiting.push(running);
                current = Some(job);
            }
            Some(_) => waiting.push(job),
            None => current = Some(job),
        }
    }
    QueueOutcome { tallies, utilization: busy / now }
}

/// Runs the simulation described by `cfg`.
pub fn simulate(cfg: &SimConfig) -> Result<SimReport> {
    cfg.validate()?;
    let (state, scenario) = (&cfg.state, &cfg.scenario);
    let jitter = match &state.priorities {
        PrioritySpec::Uniform { jitter, .. } => Some(*jitter),
        PrioritySpec::Deterministic { .. } => None,
    };
    let instances: Vec<(VmIdx, VnfIdx, Vec<ServiceIdx>)> = state
        .placement
        .iter()
        .map(|(&m, &v)| {
            let members = state.services_at(m).into_iter().filter(|&s| scenario.rate(s, v) > 0.0).collect();
            (m, v, members)
        })
        .filter(|(_, _, members): &(VmIdx, VnfIdx, Vec<ServiceIdx>)| !members.is_empty())
        .collect();

    let outcomes: Vec<QueueOutcome> = instances
        .par_iter()
        .map(|(m, v, members)| {
            let classes: Vec<Class> = members
                .iter()
                .map(|&s| Class { rate: scenario.rate(s, *v), center: state.priorities.value(s, *v) })
                .collect();
            let service_rate = state.capability(*m) / scenario.vnf(*v).load_coefficient;
            run_queue(&classes, service_rate, jitter, cfg.horizon, cfg.warmup_fraction, cfg.seed, m.0 as u64)
        })
        .collect();

    let mut queues = Vec::new();
    let mut utilization = BTreeMap::new();
    for ((m, v, members), out) in instances.iter().zip(outcomes) {
        utilization.insert(*m, out.utilization);
        for (&s, t) in members.iter().zip(&out.tallies) {
            queues.push(QueueStats {
                service: s,
                vnf: *v,
                vm: *m,
                completions: t.kept(),
                mean_sojourn: t.mean(),
                std_error: t.std_error(),
            });
        }
    }
    queues.sort_by_key(|q| (q.service, q.vnf));
    let services = state
        .admitted_services()
        .into_iter()
        .map(|s| {
            let own = queues.iter().filter(|q| q.service == s);
            ServiceStats {
                service: s,
                mean_delay: own.clone().map(|q| q.mean_sojourn).sum(),
                std_error: own.map(|q| q.std_error.powi(2)).sum::<f64>().sqrt(),
            }
        })
        .collect();
    Ok(SimReport { queues, services, utilization })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviation {
    pub service: ServiceIdx,
    /// `None` for the end-to-end row.
    pub vnf: Option<VnfIdx>,
    pub simulated: f64,
    pub analytic: f64,
    pub relative: f64,
    pub flagged: bool,
}

#[derive(Serialize)]
struct DeviationRow<'a> {
    service: &'a str,
    vnf: &'a str,
    simulated_s: f64,
    analytic_s: f64,
    relative_deviation: f64,
    flagged: bool,
}

/// Per-queue and end-to-end relative deviation of `report` from the analytic model.
pub fn compare_to_analytic(
    report: &SimReport,
    state: &DeploymentState,
    scenario: &Scenario,
) -> Result<Vec<Deviation>> {
    let row = |service, vnf, simulated: f64, analytic: f64| {
        let relative = (simulated - analytic).abs() / analytic;
        Deviation { service, vnf, simulated, analytic, relative, flagged: relative > DEVIATION_THRESHOLD }
    };
    let mut out = Vec::new();
    for s in state.admitted_services() {
        let analytic: BTreeMap<VnfIdx, f64> =
            sojourn_times(s, state, scenario)?.into_iter().map(|(v, _, t)| (v, t)).collect();
        let mut sim_total = 0.0;
        let mut an_total = 0.0;
        for q in report.queues.iter().filter(|q| q.service == s) {
            let Some(&a) = analytic.get(&q.vnf) else { continue };
            out.push(row(s, Some(q.vnf), q.mean_sojourn, a));
            sim_total += q.mean_sojourn;
            an_total += a;
        }
        if an_total > 0.0 {
            out.push(row(s, None, sim_total, an_total));
        }
    }
    Ok(out)
}

pub fn write_deviation_csv<W: Write>(rows: &[Deviation], out: W, scenario: &Scenario) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for d in rows {
        w.serialize(DeviationRow {
            service: &scenario.service(d.service).id,
            vnf: d.vnf.map_or("end-to-end", |v| scenario.vnf(v).id.as_str()),
            simulated_s: d.simulated,
            analytic_s: d.analytic,
            relative_deviation: d.relative,
            flagged: d.flagged,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}
