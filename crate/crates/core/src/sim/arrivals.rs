//! External traffic: per-(node, commodity) arrival processes and underlay
//! background flows.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::network::OverlayNetwork;
use crate::topology::NodeId;

use super::SimError;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ArrivalProcess {
    Poisson {
        rate: f64,
    },
    /// `rate` packets per slot on average, emitted as whole packets with the
    /// fractional part carried over.
    Deterministic {
        rate: f64,
    },
    None,
}

impl ArrivalProcess {
    pub fn rate(&self) -> f64 {
        match *self {
            ArrivalProcess::Poisson { rate } | ArrivalProcess::Deterministic { rate } => rate,
            ArrivalProcess::None => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArrivalEntry {
    pub node: NodeId,
    pub commodity: usize,
    pub process: ArrivalProcess,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    pub entries: Vec<ArrivalEntry>,
}

impl ArrivalSpec {
    pub fn none() -> Self {
        Self::default()
    }

    /// Poisson arrivals of `rates[k]` at each commodity's source.
    pub fn poisson_at_sources(net: &OverlayNetwork, rates: &[f64]) -> Self {
        Self::at_sources(net, rates, |rate| ArrivalProcess::Poisson { rate })
    }

    pub fn deterministic_at_sources(net: &OverlayNetwork, rates: &[f64]) -> Self {
        Self::at_sources(net, rates, |rate| ArrivalProcess::Deterministic { rate })
    }

    fn at_sources(
        net: &OverlayNetwork,
        rates: &[f64],
        make: impl Fn(f64) -> ArrivalProcess,
    ) -> Self {
        let entries = net
            .commodities()
            .iter()
            .zip(rates)
            .enumerate()
            .map(|(k, (c, &rate))| ArrivalEntry {
                node: c.source,
                commodity: k,
                process: make(rate),
            })
            .collect();
        Self { entries }
    }

    /// Mean arrival rate per `(overlay index, commodity)`, flattened.
    pub fn mean_rates(&self, net: &OverlayNetwork) -> Vec<f64> {
        let k = net.num_commodities();
        let mut out = vec![0.0; net.overlay_nodes().len() * k];
        for e in &self.entries {
            if let Some(i) = net.overlay_index(e.node) {
                out[i * k + e.commodity] += e.process.rate();
            }
        }
        out
    }
}

/// Uncontrolled traffic injected Poisson at `rate` into the first link of
/// `path` and removed at its last node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundFlow {
    pub path: Vec<NodeId>,
    pub rate: f64,
}

enum Source {
    Poisson(Poisson<f64>),
    Deterministic { rate: f64, credit: f64 },
    Idle,
}

impl Source {
    fn new(process: ArrivalProcess) -> Result<Self, SimError> {
        let rate = process.rate();
        if !rate.is_finite() || rate < 0.0 {
            return Err(SimError::InvalidRate(rate));
        }
        Ok(match process {
            _ if rate == 0.0 => Source::Idle,
            ArrivalProcess::Poisson { rate } => {
                Source::Poisson(Poisson::new(rate).map_err(|_| SimError::InvalidRate(rate))?)
            }
            ArrivalProcess::Deterministic { rate } => Source::Deterministic { rate, credit: 0.0 },
            ArrivalProcess::None => Source::Idle,
        })
    }

    fn sample<R: Rng>(&mut self, rng: &mut R) -> u64 {
        match self {
            Source::Poisson(d) => d.sample(rng) as u64,
            Source::Deterministic { rate, credit } => {
                *credit += *rate;
                let n = credit.floor();
                *credit -= n;
                n as u64
            }
            Source::Idle => 0,
        }
    }
}

/// Seeded sampler. Commodity arrivals and background flows draw from separate
/// ChaCha streams, so adding or removing background traffic never perturbs
/// the arrival sample path.
pub struct ArrivalSampler {
    sources: Vec<(usize, usize, Source)>,
    background: Vec<Source>,
    rng: ChaCha8Rng,
    bg_rng: ChaCha8Rng,
}

impl ArrivalSampler {
    pub fn new(
        net: &OverlayNetwork,
        spec: &ArrivalSpec,
        background: &[BackgroundFlow],
        seed: u64,
    ) -> Result<Self, SimError> {
        let mut sources = Vec::new();
        for e in &spec.entries {
            let node = net
                .overlay_index(e.node)
                .ok_or(SimError::NotOverlay(e.node))?;
            if e.commodity >= net.num_commodities() {
                return Err(SimError::UnknownCommodity(e.commodity));
            }
            sources.push((node, e.commodity, Source::new(e.process)?));
        }
        let background = background
            .iter()
            .map(|f| Source::new(ArrivalProcess::Poisson { rate: f.rate }))
            .collect::<Result<_, _>>()?;
        let rng = ChaCha8Rng::seed_from_u64(seed);
        let mut bg_rng = ChaCha8Rng::seed_from_u64(seed);
        bg_rng.set_stream(1);
        Ok(Self {
            sources,
            background,
            rng,
            bg_rng,
        })
    }

    /// Calls `f(overlay index, commodity, count)` for every non-zero draw.
    pub fn sample_arrivals(&mut self, mut f: impl FnMut(usize, usize, u64)) {
        for (node, k, src) in &mut self.sources {
            let n = src.sample(&mut self.rng);
            if n > 0 {
                f(*node, *k, n);
            }
        }
    }

    pub fn sample_background(&mut self, mut f: impl FnMut(usize, u64)) {
        for (i, src) in self.background.iter_mut().enumerate() {
            let n = src.sample(&mut self.bg_rng);
            if n > 0 {
                f(i, n);
            }
        }
    }
}
