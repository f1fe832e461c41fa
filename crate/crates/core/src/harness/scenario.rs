//! Scenario files: topology, commodities, nominal rates and background
//! traffic in one TOML document.
//!
//! ```toml
//! name = "line"
//! lambda_max = [1.0]
//!
//! [[nodes]]
//! id = 1
//! kind = "overlay"
//!
//! [[links]]
//! from = 1
//! to = 5
//! capacity = 2
//! bidirectional = true   # optional, adds (5, 1) with the same capacity
//!
//! [[routes]]             # optional; derived by shortest path otherwise
//! at = 5
//! dest = 2
//! next = 6
//!
//! [[commodities]]
//! source = 1
//! destination = 2
//! pinned = [1, 5, 6, 2]  # optional: restrict to this one tunnel
//! utility_weight = 20.0  # optional, rate control only
//! rate_cap = 20.0        # optional, rate control only
//!
//! [[background]]         # optional
//! path = [5, 6]
//! rate = 0.5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{self, LogUtility};
use crate::network::{Commodity, NetworkError, OverlayNetwork};
use crate::sim::{ArrivalSpec, BackgroundFlow};
use crate::topology::{NodeId, NodeKind, Topology, TopologyError};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error("unknown built-in scenario `{0}`")]
    UnknownBuiltin(String),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: u32,
    pub kind: NodeKind,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkEntry {
    pub from: u32,
    pub to: u32,
    pub capacity: u32,
    #[serde(default)]
    pub bidirectional: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteEntry {
    pub at: u32,
    pub dest: u32,
    pub next: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommodityEntry {
    pub source: u32,
    pub destination: u32,
    #[serde(default)]
    pub pinned: Option<Vec<u32>>,
    #[serde(default)]
    pub utility_weight: Option<f64>,
    #[serde(default)]
    pub rate_cap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    #[serde(default)]
    pub description: String,
    /// Per-commodity rates that define load `ρ = 1`.
    #[serde(default)]
    pub lambda_max: Option<Vec<f64>>,
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<LinkEntry>,
    #[serde(default)]
    pub routes: Vec<RouteEntry>,
    pub commodities: Vec<CommodityEntry>,
    #[serde(default)]
    pub background: Vec<BackgroundFlow>,
}

/// A compiled scenario ready to simulate.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub description: String,
    pub network: OverlayNetwork,
    pub lambda_max: Vec<f64>,
    pub background: Vec<BackgroundFlow>,
    pub utilities: Vec<LogUtility>,
}

const BUILTINS: &[(&str, &str)] = &[
    ("topoA", include_str!("../../../../fixtures/topoA.toml")),
    (
        "topoB-sub",
        include_str!("../../../../fixtures/topoB-sub.toml"),
    ),
    (
        "topoB-sub-bg",
        include_str!("../../../../fixtures/topoB-sub-bg.toml"),
    ),
    ("topoC", include_str!("../../../../fixtures/topoC.toml")),
];

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn topology(&self) -> Result<Topology, TopologyError> {
        let mut topo = Topology::new();
        for n in &self.nodes {
            topo.add_node(NodeId(n.id), n.kind)?;
        }
        for l in &self.links {
            topo.add_link(NodeId(l.from), NodeId(l.to), l.capacity)?;
            if l.bidirectional {
                topo.add_link(NodeId(l.to), NodeId(l.from), l.capacity)?;
            }
        }
        for r in &self.routes {
            topo.set_route(NodeId(r.at), NodeId(r.dest), NodeId(r.next))?;
        }
        topo.derive_routes();
        topo.validate()?;
        Ok(topo)
    }

    pub fn build(&self) -> Result<Scenario, ScenarioError> {
        let topo = self.topology()?;
        let commodities: Vec<Commodity> = self
            .commodities
            .iter()
            .map(|c| Commodity {
                source: NodeId(c.source),
                destination: NodeId(c.destination),
                pinned: c
                    .pinned
                    .as_ref()
                    .map(|p| p.iter().copied().map(NodeId).collect()),
            })
            .collect();
        let network = OverlayNetwork::new(topo, commodities)?;
        let k = network.num_commodities();
        let lambda_max = match &self.lambda_max {
            Some(v) if v.len() == k => v.clone(),
            Some(v) => {
                return Err(ScenarioError::Invalid(format!(
                    "lambda_max has {} entries for {k} commodities",
                    v.len()
                )))
            }
            None => vec![1.0; k],
        };
        let utilities = self
            .commodities
            .iter()
            .map(|c| LogUtility {
                weight: c.utility_weight.unwrap_or(20.0),
                cap: c.rate_cap.unwrap_or(20.0),
            })
            .collect();
        let scenario = Scenario {
            name: self.name.clone(),
            description: self.description.clone(),
            network,
            lambda_max,
            background: self.background.clone(),
            utilities,
        };
        scenario.check_background(&scenario.background)?;
        Ok(scenario)
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        ScenarioFile::from_toml(text)?.build()
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTINS.iter().map(|(n, _)| *n)
    }

    pub fn builtin_source(name: &str) -> Option<&'static str> {
        BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
    }

    pub fn builtin(name: &str) -> Result<Self, ScenarioError> {
        let text =
            Self::builtin_source(name).ok_or_else(|| ScenarioError::UnknownBuiltin(name.into()))?;
        Self::from_toml(text)
    }

    /// A built-in name or a path to a scenario file.
    pub fn load(spec: &str) -> Result<Self, ScenarioError> {
        if let Some(text) = Self::builtin_source(spec) {
            return Self::from_toml(text);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: spec.into(),
            source,
        })?;
        Self::from_toml(&text)
    }

    /// Rejects background flows whose path is not the underlay route.
    pub fn check_background(&self, flows: &[BackgroundFlow]) -> Result<(), ScenarioError> {
        crate::sim::Engine::new(&self.network, flows)
            .map(|_| ())
            .map_err(|e| ScenarioError::Invalid(e.to_string()))
    }

    /// Per-commodity arrival rates at load `rho`.
    pub fn rates(&self, rho: f64) -> Vec<f64> {
        self.lambda_max.iter().map(|l| l * rho).collect()
    }

    pub fn poisson_arrivals(&self, rho: f64) -> ArrivalSpec {
        ArrivalSpec::poisson_at_sources(&self.network, &self.rates(rho))
    }

    /// `λ_i^k` laid out `[overlay index * K + k]` for per-commodity `rates`.
    pub fn node_rates(&self, rates: &[f64]) -> Vec<f64> {
        let net = &self.network;
        let k_count = net.num_commodities();
        let mut out = vec![0.0; net.overlay_nodes().len() * k_count];
        for (k, c) in net.commodities().iter().enumerate() {
            out[net.overlay_index(c.source).expect("overlay") * k_count + k] = rates[k];
        }
        out
    }

    /// Link capacities net of this scenario's background traffic.
    pub fn capacities(&self) -> Vec<f64> {
        lp::residual_capacities(&self.network, &self.background)
    }

    /// Largest multiple of `lambda_max` the fluid model supports, with the
    /// scenario's background traffic taken out of the capacities.
    pub fn max_load(&self) -> Result<f64, lp::LpError> {
        let dir = self.node_rates(&self.lambda_max);
        Ok(lp::max_scaling(&self.network, &dir, &self.capacities())?.theta)
    }

    /// Same scenario with different background flows.
    pub fn with_background(&self, flows: Vec<BackgroundFlow>) -> Result<Self, ScenarioError> {
        self.check_background(&flows)?;
        Ok(Self {
            background: flows,
            ..self.clone()
        })
    }
}
