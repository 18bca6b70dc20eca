//! Device registry: the inventory of networked devices a space offers,
//! what workflow functions each can perform, and what network traffic each
//! needs in order to perform them.

use std::collections::{BTreeMap, HashMap};
use std::net::Ipv4Addr;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction of a declared traffic need, relative to the device declaring it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Traffic that arrives at this device to start the function.
    InboundTrigger,
    /// Traffic this device must originate (cloud check-ins, firmware, brokers).
    Outbound,
}

/// Transport protocol of a requirement or rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportProtocol {
    Tcp,
    Udp,
}

impl std::fmt::Display for TransportProtocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransportProtocol::Tcp => write!(f, "tcp"),
            TransportProtocol::Udp => write!(f, "udp"),
        }
    }
}

/// One declared traffic need of a device while serving one function.
///
/// `external_endpoint` names the remote host of an outbound flow and is
/// present exactly when `direction` is outbound; trigger traffic stays inside
/// the network, so its endpoints are derived from the workflow instead.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetRequirement {
    pub direction: Direction,
    pub dest_port: u16,
    pub tp_proto: TransportProtocol,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_endpoint: Option<Ipv4Addr>,
}

/// A networked device: identity, address, descriptive attributes, the
/// functions it can perform, and its per-function traffic needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Device {
    pub id: String,
    pub address: Ipv4Addr,
    #[serde(default)]
    pub attributes: BTreeMap<String, serde_json::Value>,
    pub capabilities: Vec<String>,
    #[serde(default)]
    pub net_requirements: BTreeMap<String, Vec<NetRequirement>>,
}

impl Device {
    /// The declared traffic needs of this device when serving `function`.
    ///
    /// A capable device with nothing declared yields an empty slice; asking
    /// about a function outside the capability set is an error.
    pub fn net_requirements_for(&self, function: &str) -> Result<&[NetRequirement]> {
        if !self.capabilities.iter().any(|c| c == function) {
            return Err(Error::FunctionNotSupported {
                device: self.id.clone(),
                function: function.to_string(),
            });
        }
        Ok(self
            .net_requirements
            .get(function)
            .map(Vec::as_slice)
            .unwrap_or(&[]))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RegistryDoc {
    devices: Vec<Device>,
}

/// The validated registry: all devices, with unique ids and addresses.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    devices: Vec<Device>,
    by_id: HashMap<String, usize>,
}

impl Network {
    /// Builds a network from parts, enforcing every registry invariant.
    pub fn new(devices: Vec<Device>) -> Result<Self> {
        let mut by_id = HashMap::with_capacity(devices.len());
        let mut by_addr: HashMap<Ipv4Addr, &str> = HashMap::with_capacity(devices.len());
        for (i, dev) in devices.iter().enumerate() {
            if dev.id.is_empty() {
                return Err(Error::InvalidDevice {
                    device: format!("#{i}"),
                    problem: "empty id".into(),
                });
            }
            if by_id.insert(dev.id.clone(), i).is_some() {
                return Err(Error::DuplicateDeviceId(dev.id.clone()));
            }
            if let Some(first) = by_addr.insert(dev.address, &dev.id) {
                return Err(Error::DuplicateAddress {
                    address: dev.address.to_string(),
                    first: first.to_string(),
                    second: dev.id.clone(),
                });
            }
            validate_device(dev)?;
        }
        Ok(Network { devices, by_id })
    }

    pub fn from_json_str(doc: &str) -> Result<Self> {
        let doc: RegistryDoc = serde_json::from_str(doc)?;
        Network::new(doc.devices)
    }

    pub fn to_json_string(&self) -> String {
        let doc = RegistryDoc {
            devices: self.devices.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("registry serialization cannot fail")
    }

    pub fn devices(&self) -> &[Device] {
        &self.devices
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn device(&self, id: &str) -> Option<&Device> {
        self.by_id.get(id).map(|&i| &self.devices[i])
    }

    pub fn device_by_address(&self, address: Ipv4Addr) -> Option<&Device> {
        // Addresses are pairwise distinct, so the first match is the only one.
        self.devices.iter().find(|d| d.address == address)
    }

    /// All devices capable of `function`, in registry order.
    pub fn capable_devices(&self, function: &str) -> Vec<&Device> {
        self.devices
            .iter()
            .filter(|d| d.capabilities.iter().any(|c| c == function))
            .collect()
    }
}

fn validate_device(dev: &Device) -> Result<()> {
    let invalid = |problem: &str| Error::InvalidDevice {
        device: dev.id.clone(),
        problem: problem.to_string(),
    };
    if dev.capabilities.is_empty() {
        return Err(invalid("empty capability set"));
    }
    let mut seen = std::collections::HashSet::new();
    for cap in &dev.capabilities {
        if cap.is_empty() {
            return Err(invalid("empty capability name"));
        }
        if !seen.insert(cap.as_str()) {
            return Err(invalid(&format!("duplicate capability {cap:?}")));
        }
    }
    for (function, reqs) in &dev.net_requirements {
        if !seen.contains(function.as_str()) {
            return Err(Error::RequirementForUnlistedCapability {
                device: dev.id.clone(),
                function: function.clone(),
            });
        }
        for req in reqs {
            if req.dest_port == 0 {
                return Err(invalid(&format!("port 0 in a requirement for {function:?}")));
            }
            match (req.direction, req.external_endpoint) {
                (Direction::Outbound, None) => {
                    return Err(invalid(&format!(
                        "outbound requirement for {function:?} has no external endpoint"
                    )))
                }
                (Direction::InboundTrigger, Some(_)) => {
                    return Err(invalid(&format!(
                        "inbound trigger for {function:?} names an external endpoint; trigger sources come from the workflow"
                    )))
                }
                _ => {}
            }
        }
    }
    Ok(())
}

/// Reads and validates a registry document from disk.
pub fn load_network(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    Network::from_json_str(&text)
}
