//! Scalar summaries of a configuration: total knowledge, threshold densities
//! and the finite-horizon survival proxy.

use std::io::{self, Write};

use crate::dynamics::{LatticeState, Trajectory};
use crate::error::{Error, Result};
use crate::lattice::DomainSpec;
use crate::scalar::Knowledge;

/// Threshold density. Lazy (infinite) domains have no site count to divide by,
/// so they report the raw count instead.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Density {
    Fraction(f64),
    Count(usize),
}

impl Density {
    pub fn fraction(&self) -> Option<f64> {
        match *self {
            Density::Fraction(f) => Some(f),
            Density::Count(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableRecord {
    pub time: f64,
    pub total_knowledge: f64,
    pub support_size: usize,
    pub count_above_half: usize,
    pub density_above_half: Density,
    pub max_value: f64,
}

/// Ξ = sum of all site values.
pub fn total_knowledge<S: Knowledge>(state: &LatticeState<S>) -> S {
    state.iter().fold(S::zero(), |acc, (_, v)| acc + v)
}

pub fn count_above<S: Knowledge>(state: &LatticeState<S>, theta: S) -> usize {
    state.iter().filter(|(_, v)| *v > theta).count()
}

/// `#{x : ξ(x) > θ} / #sites`.
pub fn density_above<S: Knowledge>(state: &LatticeState<S>, theta: S, domain: &DomainSpec) -> Density {
    let count = count_above(state, theta);
    match domain.num_sites() {
        Some(n) => Density::Fraction(count as f64 / n as f64),
        None => Density::Count(count),
    }
}

pub fn max_value<S: Knowledge>(state: &LatticeState<S>) -> S {
    state.iter().fold(S::zero(), |m, (_, v)| m.max(v))
}

pub fn record<S: Knowledge>(state: &LatticeState<S>, domain: &DomainSpec, time: f64) -> ObservableRecord {
    let half = S::of(0.5);
    ObservableRecord {
        time,
        total_knowledge: total_knowledge(state).as_f64(),
        support_size: state.support_size(),
        count_above_half: count_above(state, half),
        density_above_half: density_above(state, half, domain),
        max_value: max_value(state).as_f64(),
    }
}

/// `Ξ_T > δ`, read from the sample taken at the horizon.
pub fn survival_proxy<S: Knowledge>(trajectory: &Trajectory<S>, horizon: f64, delta: f64) -> Result<bool> {
    trajectory
        .sample_at(horizon)
        .map(|s| s.record.total_knowledge > delta)
        .ok_or(Error::InvalidParameter(format!("trajectory has no sample at t = {horizon}")))
}

pub fn write_trajectory_header<W: Write>(mut w: W) -> io::Result<()> {
    writeln!(w, "replica,time,observable,value")
}

/// Long-format rows `replica,time,observable,value` for every sample. Densities
/// on lazy domains are written as the raw count under `count_above_half`.
pub fn write_trajectory_rows<W: Write, S: Knowledge>(mut w: W, replica: usize, traj: &Trajectory<S>) -> io::Result<()> {
    for s in &traj.samples {
        let r = &s.record;
        let t = r.time;
        writeln!(w, "{replica},{t},total_knowledge,{}", r.total_knowledge)?;
        writeln!(w, "{replica},{t},support_size,{}", r.support_size)?;
        writeln!(w, "{replica},{t},count_above_half,{}", r.count_above_half)?;
        if let Some(f) = r.density_above_half.fraction() {
            writeln!(w, "{replica},{t},density_above_half,{f}")?;
        }
        writeln!(w, "{replica},{t},max_value,{}", r.max_value)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ProcessKind;
    use crate::lattice::Site;

    #[test]
    fn totals() {
        let empty = LatticeState::<f64>::empty(ProcessKind::Bounded);
        assert_eq!(total_knowledge(&empty), 0.0);
        let one = LatticeState::single(ProcessKind::Bounded, Site::origin(2), 1.0f64);
        assert_eq!(total_knowledge(&one), 1.0);
        let two = LatticeState::from_values(
            ProcessKind::Bounded,
            [(Site::new(&[0, 0]), 0.5f64), (Site::new(&[1, 0]), 0.25)],
        );
        assert_eq!(total_knowledge(&two), 0.75);
    }

    #[test]
    fn densities() {
        let d = DomainSpec::torus(1, 5).unwrap();
        let zero = LatticeState::<f64>::empty(ProcessKind::Bounded);
        assert_eq!(density_above(&zero, 0.5, &d), Density::Fraction(0.0));
        let all = LatticeState::from_values(ProcessKind::Bounded, (-2..=2).map(|i| (Site::new(&[i]), 1.0f64)));
        assert_eq!(density_above(&all, 0.5, &d), Density::Fraction(1.0));
        let two = LatticeState::from_values(
            ProcessKind::Bounded,
            [(Site::new(&[0]), 0.6f64), (Site::new(&[2]), 0.6), (Site::new(&[1]), 0.2)],
        );
        assert_eq!(density_above(&two, 0.5, &d), Density::Fraction(0.4));
        let lazy = DomainSpec::lazy(1).unwrap();
        assert_eq!(density_above(&two, 0.5, &lazy), Density::Count(2));
    }

    #[test]
    fn trajectory_rows() {
        use crate::dynamics::evolve;
        use crate::dynamics::Params;
        use crate::rng::RngStream;
        let d = DomainSpec::torus(1, 5).unwrap();
        let init = LatticeState::single(ProcessKind::Bounded, Site::origin(1), 1.0f64);
        let traj = evolve(&init, &Params::new(1.0, 0.5, d, 1.0), &RngStream::new(1, 0), &[0.0, 1.0]).unwrap();
        let mut buf = Vec::new();
        write_trajectory_header(&mut buf).unwrap();
        write_trajectory_rows(&mut buf, 3, &traj).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 11);
        assert_eq!(lines[1], "3,0,total_knowledge,1");
        assert_eq!(lines[3], "3,0,count_above_half,1");
        assert_eq!(lines[4], "3,0,density_above_half,0.2");
    }
}
