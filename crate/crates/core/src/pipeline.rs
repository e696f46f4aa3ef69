//! End-to-end solve: preprocess, compute covers, build, solve, decode, lift
//! back to the input network and verify.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::covers::{process_network, process_reduced_network, CoverData};
use crate::error::Result;
use crate::formulations::{build, ModelSpec, Variant};
use crate::graph::Network;
use crate::preprocess::{preprocess, Mode, PreprocessReport};
use crate::solver::{Backend, SolveOptions, Status};
use crate::verify::{decode, is_cover, CoverReport, Placement};

pub fn mode_for(variant: Variant) -> Mode {
    if variant == Variant::RF {
        Mode::Reduced
    } else {
        Mode::Assumption
    }
}

/// A model ready for the solver, with everything needed to interpret its solution.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub network: Network,
    pub report: PreprocessReport,
    pub covers: Option<CoverData>,
    pub model: ModelSpec,
    /// Seconds spent preprocessing, computing covers and building the model.
    pub prep_time: f64,
}

pub fn prepare(net: &Network, delta: f64, variant: Variant) -> Result<Prepared> {
    let start = Instant::now();
    let (network, report) = preprocess(net, delta, mode_for(variant))?;
    let covers = match variant {
        Variant::F0 => None,
        Variant::RF => Some(process_reduced_network(&network, delta)?),
        _ => Some(process_network(&network, delta)?),
    };
    let model = build(&network, delta, covers.as_ref(), variant)?;
    Ok(Prepared { network, report, covers, model, prep_time: start.elapsed().as_secs_f64() })
}

/// Node count after contraction and subdivision to edges of length at most `delta`.
pub fn subdivided_node_count(net: &Network, delta: f64) -> Result<usize> {
    Ok(preprocess(net, delta, Mode::Assumption)?.1.subdivided_counts.n)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub variant: Variant,
    pub delta: f64,
    pub status: Status,
    pub incumbent: Option<f64>,
    pub bound: Option<f64>,
    pub solve_time: f64,
    pub prep_time: f64,
    /// Facilities on the input network.
    pub placement: Option<Placement>,
    /// Exact coverage check of `placement` on the input network.
    pub verification: Option<CoverReport>,
}

impl Outcome {
    pub fn verified(&self) -> bool {
        self.verification.as_ref().is_some_and(|v| v.covered)
    }
}

/// Solves a prepared model and checks the lifted placement on `original`.
pub fn solve_prepared(
    prepared: &Prepared,
    original: &Network,
    backend: &dyn Backend,
    options: &SolveOptions,
) -> Result<Outcome> {
    let result = backend.solve(&prepared.model, options)?;
    let mut outcome = Outcome {
        variant: prepared.model.variant,
        delta: prepared.model.delta,
        status: result.status,
        incumbent: result.incumbent,
        bound: result.bound,
        solve_time: result.wall_time,
        prep_time: prepared.prep_time,
        placement: None,
        verification: None,
    };
    if result.incumbent.is_none() {
        return Ok(outcome);
    }
    let decoded = decode(&prepared.model, &result, &prepared.network)?;
    let points =
        decoded.points.iter().map(|&p| prepared.report.mapping.lift(original, p)).collect::<Result<Vec<_>>>()?;
    let placement = Placement { points, ..decoded };
    outcome.verification = Some(is_cover(original, prepared.model.delta, &placement.points)?);
    outcome.placement = Some(placement);
    Ok(outcome)
}

pub fn solve_network(
    net: &Network,
    delta: f64,
    variant: Variant,
    backend: &dyn Backend,
    options: &SolveOptions,
) -> Result<Outcome> {
    let prepared = prepare(net, delta, variant)?;
    solve_prepared(&prepared, net, backend, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::solver::InProcess;

    fn run(net: &Network, delta: f64, variant: Variant) -> Outcome {
        solve_network(net, delta, variant, &InProcess, &SolveOptions::with_time_limit(60.0)).unwrap()
    }

    #[test]
    fn path_of_eight_all_variants() {
        for v in [Variant::F0, Variant::F, Variant::SF, Variant::RF] {
            let o = run(&path(8), 1.2, v);
            assert_eq!((o.status, o.incumbent), (Status::Optimal, Some(3.0)), "{v}");
            assert!(o.verified(), "{v}");
        }
        // Contraction leaves one edge of length 7, cut into six pieces whose
        // nodes happen to admit a node-only 3-cover.
        assert_eq!(run(&path(8), 1.2, Variant::SFD).incumbent, Some(3.0));
    }

    #[test]
    fn triangle_through_contraction() {
        for v in Variant::ALL {
            let o = run(&triangle(), 2.0, v);
            assert_eq!(o.incumbent, Some(1.0), "{v}");
            assert!(o.verified());
        }
        for v in Variant::ALL {
            let o = run(&triangle(), 0.5, v);
            assert_eq!(o.incumbent, Some(3.0), "{v}");
            assert!(o.verified());
        }
    }

    #[test]
    fn random_instance_variants_agree() {
        let net = crate::instances::gen_random(10, 0.3, 5).unwrap();
        let delta = crate::instances::radius_for(&net, crate::instances::RadiusPolicy::Small);
        let outs: Vec<_> = Variant::ALL.iter().map(|&v| run(&net, delta, v)).collect();
        for o in &outs {
            assert_eq!(o.status, Status::Optimal);
            assert!(o.verified(), "{}", o.variant);
        }
        let rf = outs[3].incumbent.unwrap();
        for o in &outs[..4] {
            assert_eq!(o.incumbent.unwrap(), rf, "{}", o.variant);
        }
        assert!(outs[4].incumbent.unwrap() >= rf);
    }

    fn fixture() -> Network {
        let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/gnp_n20_p0.2_seed7.txt");
        Network::read_file(path).unwrap()
    }

    #[test]
    fn fixture_solves_and_verifies_at_large_radius() {
        let net = fixture();
        let delta = crate::instances::radius_for(&net, crate::instances::RadiusPolicy::Large);
        let rf = run(&net, delta, Variant::RF);
        let sfd = run(&net, delta, Variant::SFD);
        assert_eq!(rf.status, Status::Optimal);
        assert!(rf.verified() && sfd.verified());
        assert!(sfd.incumbent.unwrap() >= rf.incumbent.unwrap());

        // the placement still checks out after a trip through JSON
        let placement = rf.placement.unwrap();
        let json = serde_json::to_string(&placement.points).unwrap();
        let points: Vec<crate::graph::PointOnNetwork> = serde_json::from_str(&json).unwrap();
        assert!(is_cover(&net, delta, &points).unwrap().covered);
        assert_eq!(points.len() as f64, rf.incumbent.unwrap());
    }

    #[test]
    fn cover_data_reloads_exactly() {
        let net = fixture();
        let delta = crate::instances::radius_for(&net, crate::instances::RadiusPolicy::Large);
        let prepared = prepare(&net, delta, Variant::SF).unwrap();
        let covers = prepared.covers.unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("covers.json");
        std::fs::write(&path, serde_json::to_string(&covers).unwrap()).unwrap();
        assert_eq!(CoverData::load(&path).unwrap(), covers);
    }
}
