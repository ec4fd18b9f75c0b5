use std::sync::Arc;

use rayon::prelude::*;

use crate::analysis::{invade_time, lambda_plus, min_interactions};
use crate::dynamics::{run_on_timeline, LatticeState, Params, Process, ProcessKind};
use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, FiniteLattice, Site};
use crate::rng::RngStream;
use crate::timeline::Timeline;

use super::ids;

#[derive(Clone, Debug, PartialEq)]
pub struct InvasionReport {
    pub epsilon: f64,
    pub mu: f64,
    pub dim: usize,
    pub horizon: f64,
    pub interactions: u32,
    pub lambda_plus: f64,
    pub lambda: f64,
    pub replicas: usize,
    pub successes: usize,
    pub frequency: f64,
    pub se: f64,
    /// `1 − ε`.
    pub target: f64,
}

/// Per-λ success indicators of the star invasion `ξ_T(y) ≥ 1/2 for all y ∼ 0`
/// from `ξ_0(0) = 1/2`, with `T = invade_time(ε, d)`. All λ share each
/// replica's timeline, so indicators are monotone in λ.
pub fn invasion_indicators(
    epsilon: f64,
    mu: f64,
    dim: usize,
    lambdas: &[f64],
    replicas: usize,
    rng: &RngStream,
) -> Result<Vec<Vec<bool>>> {
    if lambdas.is_empty() || replicas == 0 {
        return Err(Error::InvalidParameter("need at least one lambda and one replica".into()));
    }
    let horizon = invade_time(epsilon, dim)?;
    let domain = DomainSpec::free_box(dim, 1)?;
    let origin = Site::origin(dim);
    let kind = ProcessKind::StarRestricted(origin.clone());
    for &l in lambdas {
        Params::new(l, mu, domain, horizon).validate(&kind)?;
    }
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lattice = Arc::new(FiniteLattice::new(domain)?);
    let initial = LatticeState::single(kind.clone(), origin.clone(), 0.5);
    let neighbours = domain.neighbors(&origin);
    let per_replica: Vec<Vec<bool>> = (0..replicas as u64)
        .into_par_iter()
        .map(|r| {
            let stream = rng.replica(ids::INVASION, r);
            let timeline = Timeline::generate(lattice.clone(), lo, (hi > lo).then_some(hi), horizon, &stream)?;
            lambdas
                .iter()
                .map(|&l| {
                    let params = Params::new(l, mu, domain, horizon);
                    let process = Process::new(kind.clone(), &params).with_threshold(timeline.label_threshold(l)?);
                    let traj = run_on_timeline(&process, &initial, &timeline, &[horizon])?;
                    let state = &traj.samples[0].state;
                    Ok(neighbours.iter().all(|y| state.get(y) >= 0.5))
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok((0..lambdas.len())
        .map(|k| per_replica.iter().map(|rep| rep[k]).collect())
        .collect())
}

/// Runs the star invasion at `lambda`, or at the solved `λ_+` when `None`.
pub fn check_invasion(
    epsilon: f64,
    mu: f64,
    dim: usize,
    lambda: Option<f64>,
    replicas: usize,
    rng: &RngStream,
) -> Result<InvasionReport> {
    let horizon = invade_time(epsilon, dim)?;
    let interactions = min_interactions(mu)?;
    let lp = lambda_plus(epsilon, mu, dim)?;
    let l = lambda.unwrap_or(lp);
    let ind = invasion_indicators(epsilon, mu, dim, &[l], replicas, rng)?;
    let successes = ind[0].iter().filter(|b| **b).count();
    let frequency = successes as f64 / replicas as f64;
    Ok(InvasionReport {
        epsilon,
        mu,
        dim,
        horizon,
        interactions,
        lambda_plus: lp,
        lambda: l,
        replicas,
        successes,
        frequency,
        se: (frequency * (1.0 - frequency) / replicas as f64).sqrt(),
        target: 1.0 - epsilon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_in_lambda() {
        let ls = [5.0, 20.0, 80.0];
        let ind = invasion_indicators(0.2, 0.5, 1, &ls, 300, &RngStream::new(4, 0)).unwrap();
        for k in 0..2 {
            assert!(ind[k].iter().zip(&ind[k + 1]).all(|(a, b)| !a || *b));
        }
        let f = |v: &Vec<bool>| v.iter().filter(|b| **b).count();
        assert!(f(&ind[0]) < f(&ind[2]));
    }

    #[test]
    fn report_fields() {
        let rep = check_invasion(0.2, 1.0, 1, None, 50, &RngStream::new(4, 1)).unwrap();
        assert_eq!(rep.interactions, 1);
        assert_eq!(rep.target, 0.8);
        assert!(rep.lambda_plus > 0.0 && rep.lambda == rep.lambda_plus);
        assert!(matches!(
            check_invasion(0.2, 0.0, 1, None, 10, &RngStream::new(4, 1)),
            Err(Error::NoFiniteInteractions)
        ));
    }

    #[test]
    fn mu_one_is_a_contact_process() {
        // with mu = 1 every mark copies 1/2 across the edge, so the star runs
        // a three-site contact process; one mark per edge and no deaths is
        // enough for success
        use crate::timeline::EventKind;
        let eps = 0.5;
        let t = invade_time(eps, 1).unwrap();
        let lattice = Arc::new(FiniteLattice::new(DomainSpec::free_box(1, 1).unwrap()).unwrap());
        let rng = RngStream::new(4, 2);
        let ind = invasion_indicators(eps, 1.0, 1, &[3.0], 400, &rng).unwrap();
        let mut sufficient = 0;
        for (r, &ok) in ind[0].iter().enumerate() {
            let stream = rng.replica(ids::INVASION, r as u64);
            let tl = Timeline::generate(lattice.clone(), 3.0, None, t, &stream).unwrap();
            let mut informed = [false, true, false];
            let (mut rang, mut deaths) = ([false; 2], 0);
            for ev in tl.events() {
                match ev.kind {
                    EventKind::Interaction(e) => {
                        let (a, b) = lattice.endpoints(e);
                        let any = informed[a as usize] || informed[b as usize];
                        informed[a as usize] = any;
                        informed[b as usize] = any;
                        rang[e as usize] = true;
                    }
                    EventKind::Death(s) => {
                        informed[s as usize] = false;
                        deaths += 1;
                    }
                    _ => {}
                }
            }
            assert_eq!(ok, informed[0] && informed[2], "replica {r}");
            if rang.iter().all(|b| *b) && deaths == 0 {
                sufficient += 1;
                assert!(ok, "replica {r}");
            }
        }
        assert!(sufficient > 0);
    }
}
