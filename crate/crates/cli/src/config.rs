use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use netcover::instances::{radius_for, RadiusPolicy};
use netcover::{Network, Variant};
use serde::Deserialize;

/// Settings shared by the solving subcommands. Values given on the command
/// line take precedence over those read from a `--config` file.
#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<PathBuf>,
    pub delta: Option<f64>,
    pub radius: Option<RadiusPolicy>,
    pub variant: Option<Variant>,
    pub backend: Option<String>,
    pub time_limit: Option<f64>,
    pub abs_gap: Option<f64>,
    pub seed: Option<u32>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn merge(self, over: RunConfig) -> RunConfig {
        RunConfig {
            graph: over.graph.or(self.graph),
            delta: over.delta.or(self.delta),
            radius: over.radius.or(self.radius),
            variant: over.variant.or(self.variant),
            backend: over.backend.or(self.backend),
            time_limit: over.time_limit.or(self.time_limit),
            abs_gap: over.abs_gap.or(self.abs_gap),
            seed: over.seed.or(self.seed),
            output: over.output.or(self.output),
        }
    }

    pub fn graph(&self) -> Result<&Path> {
        match &self.graph {
            Some(p) => Ok(p),
            None => bail!(UsageError("no graph given (use --graph or set `graph` in the config)".into())),
        }
    }

    /// The covering radius, fixed directly or derived from the graph.
    pub fn delta_for(&self, net: &Network) -> Result<f64> {
        match (self.delta, self.radius) {
            (Some(d), None) => Ok(d),
            (None, Some(policy)) => Ok(radius_for(net, policy)),
            (Some(_), Some(_)) => bail!(UsageError("give either a delta or a radius policy, not both".into())),
            (None, None) => bail!(UsageError("no radius given (use --delta or --radius)".into())),
        }
    }
}

/// Invalid invocation; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_wins() {
        let file: RunConfig = toml::from_str("delta = 1.5\nvariant = \"SF\"\ntime_limit = 60.0").unwrap();
        let merged = file.merge(RunConfig { variant: Some(Variant::RF), ..RunConfig::default() });
        assert_eq!(merged.variant, Some(Variant::RF));
        assert_eq!(merged.delta, Some(1.5));
        assert_eq!(merged.time_limit, Some(60.0));
    }

    #[test]
    fn exactly_one_radius_source() {
        let net = netcover::graph::fixtures::path(3);
        let both = RunConfig { delta: Some(1.0), radius: Some(RadiusPolicy::Small), ..RunConfig::default() };
        assert!(both.delta_for(&net).is_err());
        assert!(RunConfig::default().delta_for(&net).is_err());
        let large = RunConfig { radius: Some(RadiusPolicy::Large), ..RunConfig::default() };
        assert_eq!(large.delta_for(&net).unwrap(), 2.0);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<RunConfig>("deltaa = 1.0").is_err());
    }
}
