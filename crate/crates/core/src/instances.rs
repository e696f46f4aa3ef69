//! Benchmark instances: seeded G(n, p) generation, instance sets and radii.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;

pub const RESAMPLE_CAP: usize = 1000;
pub const LENGTH_RANGE: (f64, f64) = (0.5, 1.5);

/// Samples a connected G(n, p) graph with lengths uniform on [0.5, 1.5).
/// Disconnected samples are redrawn from a fresh stream of the same seed.
pub fn gen_random(n: usize, p: f64, seed: u64) -> Result<Network> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nodes, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!("edge probability {p} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..RESAMPLE_CAP {
        rng.set_stream(attempt as u64);
        let mut triples = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < p {
                    triples.push((i, j, rng.random_range(LENGTH_RANGE.0..LENGTH_RANGE.1)));
                }
            }
        }
        match Network::new(n, triples) {
            Ok(net) => return Ok(net),
            Err(Error::Disconnected) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResampleCapExceeded(RESAMPLE_CAP))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusPolicy {
    Small,
    Large,
}

impl RadiusPolicy {
    pub fn label(self) -> &'static str {
        match self {
            RadiusPolicy::Small => "small",
            RadiusPolicy::Large => "large",
        }
    }
}

impl std::str::FromStr for RadiusPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "small" => Ok(RadiusPolicy::Small),
            "large" => Ok(RadiusPolicy::Large),
            other => Err(Error::InvalidArgument(format!("unknown radius policy {other:?}"))),
        }
    }
}

/// Small radius is the mean edge length, large is twice that.
pub fn radius_for(net: &Network, policy: RadiusPolicy) -> f64 {
    let mean = net.mean_edge_length();
    match policy {
        RadiusPolicy::Small => mean,
        RadiusPolicy::Large => 2.0 * mean,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceSource {
    File { graph: PathBuf },
    Random { n: usize, p: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub id: String,
    #[serde(flatten)]
    pub source: InstanceSource,
}

impl Instance {
    /// Loads or generates the network; relative paths resolve against `base`.
    pub fn network(&self, base: Option<&Path>) -> Result<Network> {
        match &self.source {
            InstanceSource::File { graph } => match base {
                Some(dir) if graph.is_relative() => Network::read_file(dir.join(graph)),
                _ => Network::read_file(graph),
            },
            InstanceSource::Random { n, p, seed } => gen_random(*n, *p, *seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSet {
    pub name: String,
    pub radius_policy: RadiusPolicy,
    pub instances: Vec<Instance>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

pub const RANDOM_A_SIZES: [usize; 3] = [10, 15, 20];
pub const RANDOM_B_SIZES: [usize; 3] = [25, 30, 40];
pub const PROBABILITIES: [f64; 4] = [0.1, 0.2, 0.3, 0.4];

impl InstanceSet {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut set: InstanceSet = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        set.base_dir = path.parent().map(Path::to_path_buf);
        Ok(set)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// One random instance per (n, p) pair; seeds are `seed, seed + 1, ...`.
    pub fn random(name: &str, sizes: &[usize], policy: RadiusPolicy, seed: u64) -> Self {
        let mut instances = Vec::new();
        for &n in sizes {
            for &p in &PROBABILITIES {
                let seed = seed + instances.len() as u64;
                instances
                    .push(Instance { id: format!("{name}_n{n}_p{p}"), source: InstanceSource::Random { n, p, seed } });
            }
        }
        InstanceSet { name: name.to_string(), radius_policy: policy, instances, base_dir: None }
    }

    pub fn random_a(policy: RadiusPolicy, seed: u64) -> Self {
        Self::random("random_A", &RANDOM_A_SIZES, policy, seed)
    }

    pub fn random_b(policy: RadiusPolicy, seed: u64) -> Self {
        Self::random("random_B", &RANDOM_B_SIZES, policy, seed)
    }

    pub fn network(&self, index: usize) -> Result<Network> {
        self.instances[index].network(self.base_dir.as_deref())
    }
}
