//! Candidate VNF/VM graph for an incoming service and its minimum-cost assignment.

pub mod hungarian;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{DeploymentState, Scenario, ServiceIdx, Usage, VmIdx, VnfIdx};

/// Capability added to every edge's proportional term so that reusing an
/// instance is never free.
pub const EDGE_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGraph {
    pub service: ServiceIdx,
    /// VNFs of the incoming service, one node each.
    pub vnf_nodes: Vec<VnfIdx>,
    pub vm_nodes: Vec<VmIdx>,
    pub edges: BTreeMap<(VnfIdx, VmIdx), f64>,
    pub pruned: BTreeSet<(VnfIdx, VmIdx)>,
}

impl CandidateGraph {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Removes an edge for good. Returns whether it was present.
    pub fn prune(&mut self, vnf: VnfIdx, vm: VmIdx) -> bool {
        let present = self.edges.remove(&(vnf, vm)).is_some();
        if present {
            self.pruned.insert((vnf, vm));
        }
        present
    }

    /// Rows are `vnf_nodes`, columns are `vm_nodes`.
    pub fn cost_matrix(&self) -> Vec<Vec<Option<f64>>> {
        self.vnf_nodes
            .iter()
            .map(|&v| self.vm_nodes.iter().map(|&m| self.edges.get(&(v, m)).copied()).collect())
            .collect()
    }

    /// Graphviz rendering for inspection.
    pub fn to_dot(&self, scenario: &Scenario) -> String {
        let mut out = String::from("graph candidates {\n  rankdir=LR;\n");
        for &v in &self.vnf_nodes {
            let _ = writeln!(out, "  \"{}\" [shape=box];", scenario.vnf(v).id);
        }
        for &m in &self.vm_nodes {
            let _ = writeln!(out, "  \"{}\" [shape=ellipse];", scenario.vm(m).id);
        }
        for (&(v, m), cost) in &self.edges {
            let _ = writeln!(
                out,
                "  \"{}\" -- \"{}\" [label=\"{cost:.6}\"];",
                scenario.vnf(v).id,
                scenario.vm(m).id
            );
        }
        out.push_str("}\n");
        out
    }
}

/// Builds the candidate graph for admitting `service` on top of `state`.
///
/// Every VNF of the service is connected to each unused VM and to each VM
/// already running that VNF, provided the VM's maximum capability keeps the
/// instance stable with the new traffic added.
pub fn build_graph(
    service: ServiceIdx,
    state: &DeploymentState,
    scenario: &Scenario,
) -> Result<CandidateGraph> {
    if state.is_admitted(service) {
        return Err(Error::Precondition(format!(
            "service `{}` is already admitted",
            scenario.service(service).id
        )));
    }
    let vnf_nodes: Vec<VnfIdx> = scenario.service(service).vnfs().collect();
    let vm_nodes: Vec<VmIdx> = scenario.vm_indices().collect();
    let mut edges = BTreeMap::new();
    for &v in &vnf_nodes {
        let l = scenario.vnf(v).load_coefficient;
        let new_rate = scenario.rate(service, v);
        for &m in &vm_nodes {
            let vm = scenario.vm(m);
            let active = match state.placement.get(&m) {
                None => false,
                Some(&running) if running == v => true,
                Some(_) => continue,
            };
            let existing: f64 =
                state.services_at(m).iter().map(|&s| scenario.rate(s, v)).sum();
            if l * (existing + new_rate) >= vm.max_capability {
                continue;
            }
            let fixed = if active { 0.0 } else { vm.fixed_cost };
            edges.insert((v, m), fixed + vm.proportional_cost * (l * new_rate + EDGE_EPSILON));
        }
        if !edges.keys().any(|&(ev, _)| ev == v) {
            return Err(Error::NoCandidate {
                service: scenario.service(service).id.clone(),
                vnf: scenario.vnf(v).id.clone(),
            });
        }
    }
    Ok(CandidateGraph { service, vnf_nodes, vm_nodes, edges, pruned: BTreeSet::new() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub pairs: BTreeMap<VnfIdx, VmIdx>,
    /// Sum of the selected edge costs.
    pub cost: f64,
}

/// Minimum-cost assignment of every VNF node to a distinct VM over the graph's edges.
pub fn hungarian(graph: &CandidateGraph) -> Result<Assignment> {
    let (cols, _) = hungarian::solve(&graph.cost_matrix())?;
    let pairs: BTreeMap<VnfIdx, VmIdx> = graph
        .vnf_nodes
        .iter()
        .zip(cols)
        .map(|(&v, j)| (v, graph.vm_nodes[j]))
        .collect();
    let cost = pairs.iter().map(|(&v, &m)| graph.edges[&(v, m)]).sum();
    Ok(Assignment { pairs, cost })
}

/// Adds the assignment's placements and usages. Capabilities are left for the scaling step.
pub fn apply_assignment(
    assignment: &Assignment,
    service: ServiceIdx,
    state: &DeploymentState,
) -> DeploymentState {
    let mut next = state.clone();
    for (&v, &m) in &assignment.pairs {
        next.placement.insert(m, v);
        next.usage.insert(Usage { service, vnf: v, vm: m });
    }
    next
}
