use std::io::{self, Write};

use rayon::prelude::*;

use crate::analysis::drift_coefficient;
use crate::dynamics::{evolve_with, EvolveOptions, LatticeState, Params, ProcessKind, Strategy};
use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, Site};
use crate::observables::total_knowledge;
use crate::rng::RngStream;

use super::ids;
use super::stats::mean_se;

pub const DEFAULT_EVENT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug)]
pub struct DecayConfig {
    pub lambda: f64,
    pub mu: f64,
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    /// Lazy for exact infinite-lattice runs; a finite domain truncates.
    pub domain: DomainSpec,
    pub event_budget: u64,
}

impl DecayConfig {
    pub fn new(dim: usize, lambda: f64, mu: f64, t_grid: Vec<f64>, replicas: usize) -> Result<Self> {
        Ok(Self {
            lambda,
            mu,
            t_grid,
            replicas,
            domain: DomainSpec::lazy(dim)?,
            event_budget: DEFAULT_EVENT_BUDGET,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    pub mean: f64,
    pub se: f64,
    pub closed_form: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub replicas: usize,
    /// Replicas dropped for exhausting the event budget.
    pub censored: usize,
    pub warning: Option<String>,
}

/// Mean total knowledge of the dominating process from `1_0` against
/// `exp((2dλμ − 1)t)`.
pub fn verify_decay(cfg: &DecayConfig, rng: &RngStream) -> Result<DecayReport> {
    if cfg.t_grid.is_empty() || cfg.replicas == 0 {
        return Err(Error::InvalidParameter("decay needs a nonempty time grid and replicas".into()));
    }
    let mut grid = cfg.t_grid.clone();
    grid.sort_by(f64::total_cmp);
    let horizon = *grid.last().unwrap();
    let dim = cfg.domain.dim;
    let params = Params::new(cfg.lambda, cfg.mu, cfg.domain, horizon.max(f64::MIN_POSITIVE));
    params.validate(&ProcessKind::Unbounded)?;
    let warning = cfg
        .domain
        .is_finite()
        .then(|| format!("{} truncates the lattice; the closed form is exact only on Z^d", cfg.domain.describe()));
    let initial = LatticeState::single(ProcessKind::Unbounded, Site::origin(dim), 1.0);
    let opts = EvolveOptions {
        strategy: Strategy::Auto,
        event_budget: Some(cfg.event_budget),
    };
    let runs: Vec<Option<Vec<f64>>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let traj = evolve_with(&initial, &params, &rng.replica(ids::DECAY, r), &grid, opts)?;
            Ok((!traj.censored).then(|| traj.samples.iter().map(|s| total_knowledge(&s.state)).collect()))
        })
        .collect::<Result<_>>()?;
    let kept: Vec<&Vec<f64>> = runs.iter().flatten().collect();
    let censored = runs.len() - kept.len();
    let drift = drift_coefficient(dim, cfg.lambda, cfg.mu);
    let rows = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let xs: Vec<f64> = kept.iter().map(|v| v[k]).collect();
            let m = mean_se(&xs);
            DecayRow {
                t,
                mean: m.mean,
                se: m.se,
                closed_form: (drift * t).exp(),
            }
        })
        .collect();
    Ok(DecayReport {
        rows,
        replicas: cfg.replicas,
        censored,
        warning,
    })
}

pub fn write_decay_csv<W: Write>(mut w: W, report: &DecayReport) -> io::Result<()> {
    writeln!(w, "t,mean,se,closed_form")?;
    for r in &report.rows {
        writeln!(w, "{},{:.10e},{:.10e},{:.10e}", r.t, r.mean, r.se, r.closed_form)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_zero_is_exact() {
        let cfg = DecayConfig::new(1, 1.0, 0.25, vec![0.0, 0.5], 50).unwrap();
        let rep = verify_decay(&cfg, &RngStream::new(3, 0)).unwrap();
        assert_eq!(rep.rows[0].mean, 1.0);
        assert_eq!(rep.rows[0].se, 0.0);
        assert_eq!(rep.rows[0].closed_form, 1.0);
        assert!(rep.warning.is_none());
    }

    #[test]
    fn zero_drift_closed_form() {
        let cfg = DecayConfig::new(2, 1.0, 0.25, vec![0.5, 1.0, 3.0], 4).unwrap();
        let rep = verify_decay(&cfg, &RngStream::new(3, 0)).unwrap();
        assert!(rep.rows.iter().all(|r| r.closed_form == 1.0));
    }

    #[test]
    fn finite_domain_warns() {
        let mut cfg = DecayConfig::new(1, 1.0, 0.25, vec![1.0], 4).unwrap();
        cfg.domain = DomainSpec::torus(1, 11).unwrap();
        assert!(verify_decay(&cfg, &RngStream::new(3, 0)).unwrap().warning.is_some());
    }

    #[test]
    fn tiny_budget_censors() {
        let mut cfg = DecayConfig::new(1, 2.0, 0.5, vec![2.0], 20).unwrap();
        cfg.event_budget = 1;
        let rep = verify_decay(&cfg, &RngStream::new(3, 0)).unwrap();
        assert!(rep.censored > 0);
    }

    #[test]
    fn deterministic() {
        let cfg = DecayConfig::new(1, 1.0, 0.4, vec![0.5, 1.0], 64).unwrap();
        let a = verify_decay(&cfg, &RngStream::new(9, 1)).unwrap();
        let b = verify_decay(&cfg, &RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
    }
}
