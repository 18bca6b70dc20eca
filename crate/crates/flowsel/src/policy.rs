//! Least-privilege ACL policies for a chosen device assignment.
//!
//! The policy allows exactly two kinds of flows and nothing else:
//!
//! * trigger flows: for every workflow edge, the source device may reach the
//!   target device on each port/protocol the target declares as an inbound
//!   trigger for its function;
//! * outbound flows: every assigned device may reach the external endpoints
//!   it declares for its assigned function.
//!
//! Rules are exact 4-tuples (no wildcards, no subnets) followed by a default
//! deny. Every rule carries the edge or requirement it came from, so the
//! verifier can re-derive and challenge each rule independently of the
//! generator.

use std::collections::{BTreeMap, HashSet};
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

use crate::device::{Device, Direction, Network, TransportProtocol};
use crate::error::{Error, Result};
use crate::preference::Assignment;
use crate::workflow::Workflow;

/// Written into every policy header: the rules only admit the first packet
/// of a flow; replies ride on connection tracking.
pub const STATEFULNESS_NOTE: &str = "Rules permit connection initiation only; \
return traffic of established flows is expected to be admitted by stateful \
connection tracking at the enforcement point.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Allow,
    Deny,
}

/// Where a rule came from; enough to re-derive the rule from the inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RuleProvenance {
    /// Trigger flow of a workflow edge; `requirement` indexes the target
    /// device's declared requirement list for the target function.
    Trigger {
        edge: (String, String),
        requirement: usize,
    },
    /// Outbound flow of the device assigned to `function`.
    Outbound {
        function: String,
        device: String,
        requirement: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AclRule {
    pub action: Action,
    pub src_ip: Ipv4Addr,
    pub dest_ip: Ipv4Addr,
    pub dest_port: u16,
    pub tp_proto: TransportProtocol,
    pub provenance: RuleProvenance,
}

impl AclRule {
    fn tuple(&self) -> (Ipv4Addr, Ipv4Addr, u16, TransportProtocol) {
        (self.src_ip, self.dest_ip, self.dest_port, self.tp_proto)
    }
}

impl std::fmt::Display for AclRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} -> {}:{}/{}",
            match self.action {
                Action::Allow => "allow",
                Action::Deny => "deny",
            },
            self.src_ip,
            self.dest_ip,
            self.dest_port,
            self.tp_proto
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyHeader {
    pub workflow_id: String,
    pub assignment: BTreeMap<String, String>,
    /// Optional wall-clock stamp; omitted by default so identical inputs
    /// produce byte-identical policies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_at: Option<String>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AclPolicy {
    pub header: PolicyHeader,
    /// Allow rules in canonical order: workflow edges first (in edge order,
    /// then requirement order), then per-function outbound flows.
    pub rules: Vec<AclRule>,
    /// Terminal behavior for everything the rules do not match.
    #[serde(rename = "default")]
    pub default_action: Action,
}

fn assigned_device<'n>(
    network: &'n Network,
    assignment: &Assignment,
    function: &str,
) -> Result<&'n Device> {
    let Some(device_id) = assignment.get(function) else {
        return Err(Error::UnassignedFunction {
            function: function.to_string(),
        });
    };
    let Some(device) = network.device(device_id) else {
        return Err(Error::AssignmentMismatch(format!(
            "assigned device {device_id:?} is not in the registry"
        )));
    };
    // Surfaces FunctionNotSupported for incapable bindings.
    device.net_requirements_for(function)?;
    Ok(device)
}

/// Compiles the assignment into allow rules plus a default deny.
///
/// Workflow edges between functions assigned to the same physical device
/// need no network flow and so produce no rule.
pub fn generate_policy(
    network: &Network,
    workflow: &Workflow,
    assignment: &Assignment,
) -> Result<AclPolicy> {
    for function in assignment.keys() {
        if !workflow.contains(function) {
            return Err(Error::AssignmentMismatch(format!(
                "assignment binds {function:?}, which is not a workflow function"
            )));
        }
    }
    for function in workflow.functions() {
        assigned_device(network, assignment, function)?;
    }

    let mut rules = Vec::new();
    for (src_fn, dst_fn) in workflow.edges() {
        let src_dev = assigned_device(network, assignment, src_fn)?;
        let dst_dev = assigned_device(network, assignment, dst_fn)?;
        if src_dev.id == dst_dev.id {
            continue;
        }
        let reqs = dst_dev.net_requirements_for(dst_fn)?;
        let mut trigger_found = false;
        for (idx, req) in reqs.iter().enumerate() {
            if req.direction != Direction::InboundTrigger {
                continue;
            }
            trigger_found = true;
            rules.push(AclRule {
                action: Action::Allow,
                src_ip: src_dev.address,
                dest_ip: dst_dev.address,
                dest_port: req.dest_port,
                tp_proto: req.tp_proto,
                provenance: RuleProvenance::Trigger {
                    edge: (src_fn.clone(), dst_fn.clone()),
                    requirement: idx,
                },
            });
        }
        if !trigger_found {
            return Err(Error::UnsatisfiableTrigger {
                src: src_fn.clone(),
                dst: dst_fn.clone(),
                device: dst_dev.id.clone(),
            });
        }
    }

    for function in workflow.functions() {
        let device = assigned_device(network, assignment, function)?;
        for (idx, req) in device.net_requirements_for(function)?.iter().enumerate() {
            if req.direction != Direction::Outbound {
                continue;
            }
            rules.push(AclRule {
                action: Action::Allow,
                src_ip: device.address,
                dest_ip: req.external_endpoint.expect("validated outbound requirements carry an endpoint"),
                dest_port: req.dest_port,
                tp_proto: req.tp_proto,
                provenance: RuleProvenance::Outbound {
                    function: function.clone(),
                    device: device.id.clone(),
                    requirement: idx,
                },
            });
        }
    }

    // Set semantics: identical tuples collapse onto the first occurrence.
    let mut seen = HashSet::new();
    rules.retain(|r| seen.insert(r.tuple()));

    Ok(AclPolicy {
        header: PolicyHeader {
            workflow_id: workflow.id().to_string(),
            assignment: assignment.clone(),
            generated_at: None,
            note: STATEFULNESS_NOTE.to_string(),
        },
        rules,
        default_action: Action::Deny,
    })
}

/// Stable text form: identical policies serialize byte-identically.
pub fn serialize_policy(policy: &AclPolicy) -> String {
    let mut text = serde_json::to_string_pretty(policy).expect("policy serialization cannot fail");
    text.push('\n');
    text
}

pub fn parse_policy(doc: &str) -> Result<AclPolicy> {
    Ok(serde_json::from_str(doc)?)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckOutcome {
    pub pass: bool,
    pub violations: Vec<String>,
}

impl CheckOutcome {
    fn from(violations: Vec<String>) -> Self {
        CheckOutcome {
            pass: violations.is_empty(),
            violations,
        }
    }
}

/// The three verdicts of `verify_least_privilege`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeastPrivilegeReport {
    /// Every edge and every declared outbound flow is covered by a rule.
    pub completeness: CheckOutcome,
    /// Every rule re-derives from its recorded origin; nothing is spare.
    pub minimality: CheckOutcome,
    /// No rule admits traffic between devices the workflow does not connect.
    pub closure: CheckOutcome,
}

impl LeastPrivilegeReport {
    pub fn pass(&self) -> bool {
        self.completeness.pass && self.minimality.pass && self.closure.pass
    }
}

/// Checks the least-privilege guarantee directly against the inputs, without
/// consulting the generator: completeness (nothing the workflow needs is
/// missing), minimality (nothing beyond a recorded need is present), and
/// deny-matrix closure (no unconnected device pair is reachable).
pub fn verify_least_privilege(
    policy: &AclPolicy,
    network: &Network,
    workflow: &Workflow,
    assignment: &Assignment,
) -> Result<LeastPrivilegeReport> {
    for function in workflow.functions() {
        assigned_device(network, assignment, function)?;
    }
    let tuples: HashSet<_> = policy.rules.iter().map(AclRule::tuple).collect();

    // Completeness.
    let mut missing = Vec::new();
    for (src_fn, dst_fn) in workflow.edges() {
        let src_dev = assigned_device(network, assignment, src_fn)?;
        let dst_dev = assigned_device(network, assignment, dst_fn)?;
        if src_dev.id == dst_dev.id {
            continue;
        }
        let mut has_trigger = false;
        for req in dst_dev.net_requirements_for(dst_fn)? {
            if req.direction != Direction::InboundTrigger {
                continue;
            }
            has_trigger = true;
            let want = (src_dev.address, dst_dev.address, req.dest_port, req.tp_proto);
            if !tuples.contains(&want) {
                missing.push(format!(
                    "edge {src_fn} -> {dst_fn}: no rule admits {}:{}/{} from {}",
                    dst_dev.address, req.dest_port, req.tp_proto, src_dev.address
                ));
            }
        }
        if !has_trigger {
            missing.push(format!(
                "edge {src_fn} -> {dst_fn}: device {} declares no inbound trigger, the edge cannot be admitted",
                dst_dev.id
            ));
        }
    }
    for function in workflow.functions() {
        let device = assigned_device(network, assignment, function)?;
        for req in device.net_requirements_for(function)? {
            if req.direction != Direction::Outbound {
                continue;
            }
            let endpoint = req.external_endpoint.expect("validated outbound requirements carry an endpoint");
            let want = (device.address, endpoint, req.dest_port, req.tp_proto);
            if !tuples.contains(&want) {
                missing.push(format!(
                    "outbound flow of {function} ({}) to {endpoint}:{}/{} is not admitted",
                    device.id, req.dest_port, req.tp_proto
                ));
            }
        }
    }

    // Minimality: re-derive each rule from its provenance.
    let mut spare = Vec::new();
    let mut seen_tuples = HashSet::new();
    for rule in &policy.rules {
        if rule.action != Action::Allow {
            spare.push(format!("{rule}: only allow rules may precede the default"));
            continue;
        }
        if !seen_tuples.insert(rule.tuple()) {
            spare.push(format!("{rule}: duplicate of an earlier rule"));
            continue;
        }
        match check_provenance(rule, network, workflow, assignment) {
            Ok(()) => {}
            Err(reason) => spare.push(format!("{rule}: {reason}")),
        }
    }

    // Deny-matrix closure over every ordered device pair.
    let connected: HashSet<(String, String)> = workflow
        .edges()
        .iter()
        .map(|(s, d)| (assignment[s].clone(), assignment[d].clone()))
        .collect();
    let mut leaks = Vec::new();
    for rule in &policy.rules {
        if rule.action != Action::Allow {
            continue;
        }
        let Some(dst_dev) = network.device_by_address(rule.dest_ip) else {
            continue; // Outbound to somewhere outside the network.
        };
        let src_dev = network.device_by_address(rule.src_ip);
        let pair_ok = src_dev
            .map(|s| connected.contains(&(s.id.clone(), dst_dev.id.clone())))
            .unwrap_or(false);
        if !pair_ok {
            leaks.push(format!(
                "{rule}: admits traffic to {} from a device the workflow does not connect to it",
                dst_dev.id
            ));
        }
    }

    Ok(LeastPrivilegeReport {
        completeness: CheckOutcome::from(missing),
        minimality: CheckOutcome::from(spare),
        closure: CheckOutcome::from(leaks),
    })
}

fn check_provenance(
    rule: &AclRule,
    network: &Network,
    workflow: &Workflow,
    assignment: &Assignment,
) -> std::result::Result<(), String> {
    match &rule.provenance {
        RuleProvenance::Trigger { edge, requirement } => {
            let (src_fn, dst_fn) = edge;
            if !workflow.edges().iter().any(|(s, d)| s == src_fn && d == dst_fn) {
                return Err(format!("claims edge {src_fn} -> {dst_fn}, which does not exist"));
            }
            let src_dev = network
                .device(assignment.get(src_fn).ok_or("source function unassigned")?)
                .ok_or("source device missing")?;
            let dst_dev = network
                .device(assignment.get(dst_fn).ok_or("target function unassigned")?)
                .ok_or("target device missing")?;
            if src_dev.id == dst_dev.id {
                return Err("claims an edge both ends of which live on one device".into());
            }
            let reqs = dst_dev
                .net_requirements_for(dst_fn)
                .map_err(|e| e.to_string())?;
            let req = reqs
                .get(*requirement)
                .ok_or("claims a requirement index that does not exist")?;
            if req.direction != Direction::InboundTrigger {
                return Err("claims a requirement that is not an inbound trigger".into());
            }
            let want = (src_dev.address, dst_dev.address, req.dest_port, req.tp_proto);
            if rule.tuple() != want {
                return Err("does not match the flow its origin describes".into());
            }
            Ok(())
        }
        RuleProvenance::Outbound {
            function,
            device,
            requirement,
        } => {
            if assignment.get(function) != Some(device) {
                return Err(format!("claims {device:?} serves {function:?}, which the assignment denies"));
            }
            let dev = network.device(device).ok_or("device missing")?;
            let reqs = dev
                .net_requirements_for(function)
                .map_err(|e| e.to_string())?;
            let req = reqs
                .get(*requirement)
                .ok_or("claims a requirement index that does not exist")?;
            if req.direction != Direction::Outbound {
                return Err("claims a requirement that is not outbound".into());
            }
            let endpoint = req.external_endpoint.ok_or("origin has no endpoint")?;
            let want = (dev.address, endpoint, req.dest_port, req.tp_proto);
            if rule.tuple() != want {
                return Err("does not match the flow its origin describes".into());
            }
            Ok(())
        }
    }
}
