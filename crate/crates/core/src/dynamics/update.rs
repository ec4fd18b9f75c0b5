use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, Site};
use crate::scalar::{Knowledge, DEFAULT_CLAMP_TOL};

use super::state::{LatticeState, ProcessKind};

/// Two-site exchange under the bounded rule, evaluated from pre-update values:
/// each side gains `μ·(other)·(1 − self)`.
#[inline]
pub fn teach<S: Knowledge>(x: S, y: S, mu: S) -> (S, S) {
    let one = S::one();
    let nx = x + mu * y * (one - x);
    let ny = y + mu * x * (one - y);
    debug_assert!({
        let tol = S::of(1e-12).max(S::epsilon() * S::of(8.0));
        ((one - nx) - (one - x) * (one - mu * y)).abs() <= tol
            && ((one - ny) - (one - y) * (one - mu * x)).abs() <= tol
    });
    (nx, ny)
}

/// Two-site exchange of the dominating process: each side gains `μ·(other)`.
#[inline]
pub fn teach_unbounded<S: Knowledge>(x: S, y: S, mu: S) -> (S, S) {
    (x + mu * y, y + mu * x)
}

/// Infection passes through the mark when either end is infected.
#[inline]
pub fn contact_update<S: Knowledge>(x: S, y: S) -> (S, S) {
    if x > S::zero() || y > S::zero() {
        (S::one(), S::one())
    } else {
        (x, y)
    }
}

#[inline]
pub fn snap_bounded<S: Knowledge>(v: S, tol: S) -> S {
    if v < tol {
        S::zero()
    } else if v > S::one() - tol {
        S::one()
    } else {
        v
    }
}

#[inline]
pub fn snap_unbounded<S: Knowledge>(v: S, tol: S) -> S {
    if v < tol {
        S::zero()
    } else {
        v
    }
}

fn check_pair(domain: &DomainSpec, x: &Site, y: &Site) -> Result<()> {
    domain.edge(x, y).map(|_| ())
}

/// Interaction mark on `{x, y}` for bounded, star-restricted and contact states.
pub fn apply_interaction<S: Knowledge>(
    state: &mut LatticeState<S>,
    domain: &DomainSpec,
    x: &Site,
    y: &Site,
    mu: S,
) -> Result<()> {
    check_pair(domain, x, y)?;
    let (vx, vy) = (state.get(x), state.get(y));
    let tol = S::of(DEFAULT_CLAMP_TOL);
    let (nx, ny) = match state.kind() {
        ProcessKind::Bounded => teach(vx, vy, mu),
        ProcessKind::StarRestricted(_) => {
            if !(state.kind().admits(domain, x) && state.kind().admits(domain, y)) {
                return Ok(());
            }
            teach(vx, vy, mu)
        }
        ProcessKind::Contact => {
            let (a, b) = contact_update(vx, vy);
            state.set(x.clone(), a);
            state.set(y.clone(), b);
            return Ok(());
        }
        ProcessKind::Unbounded => {
            return Err(Error::InvalidParameter(
                "unbounded states use apply_interaction_unbounded".into(),
            ))
        }
    };
    state.set(x.clone(), snap_bounded(nx, tol));
    state.set(y.clone(), snap_bounded(ny, tol));
    Ok(())
}

/// Interaction mark on `{x, y}` for the dominating (unbounded) process.
pub fn apply_interaction_unbounded<S: Knowledge>(
    state: &mut LatticeState<S>,
    domain: &DomainSpec,
    x: &Site,
    y: &Site,
    mu: S,
) -> Result<()> {
    check_pair(domain, x, y)?;
    if state.kind() != &ProcessKind::Unbounded {
        return Err(Error::InvalidParameter(format!(
            "{} state passed to the unbounded update",
            state.kind().name()
        )));
    }
    let (nx, ny) = teach_unbounded(state.get(x), state.get(y), mu);
    let tol = S::of(DEFAULT_CLAMP_TOL);
    state.set(x.clone(), snap_unbounded(nx, tol));
    state.set(y.clone(), snap_unbounded(ny, tol));
    Ok(())
}

/// Death mark at `x`: the site forgets everything.
pub fn apply_death<S: Knowledge>(state: &mut LatticeState<S>, x: &Site) {
    state.set(x.clone(), S::zero());
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> DomainSpec {
        DomainSpec::torus(1, 5).unwrap()
    }

    fn pair(kind: ProcessKind, a: f64, b: f64) -> LatticeState<f64> {
        LatticeState::from_values(kind, [(Site::new(&[0]), a), (Site::new(&[1]), b)])
    }

    #[test]
    fn half_and_zero_full_transfer() {
        let mut s = pair(ProcessKind::Bounded, 0.5, 0.0);
        apply_interaction(&mut s, &line(), &Site::new(&[0]), &Site::new(&[1]), 1.0).unwrap();
        assert_eq!(s.get(&Site::new(&[0])), 0.5);
        assert_eq!(s.get(&Site::new(&[1])), 0.5);
    }

    #[test]
    fn halves_at_half_fraction() {
        assert_eq!(teach(0.5, 0.5, 0.5), (0.625, 0.625));
    }

    #[test]
    fn omniscient_absorbs() {
        for mu in [0.0, 0.3, 1.0] {
            assert_eq!(teach(1.0, 1.0, mu), (1.0, 1.0));
        }
    }

    #[test]
    fn zero_fraction_is_identity() {
        let mut s = pair(ProcessKind::Bounded, 0.3, 0.8);
        let before = s.clone();
        apply_interaction(&mut s, &line(), &Site::new(&[1]), &Site::new(&[0]), 0.0).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn unbounded_examples() {
        assert_eq!(teach_unbounded(1.0, 1.0, 0.25), (1.25, 1.25));
        assert_eq!(teach_unbounded(0.7, 0.0, 0.4), (0.7, 0.7 * 0.4));
        let mut s = pair(ProcessKind::Unbounded, 1.0, 1.0);
        apply_interaction_unbounded(&mut s, &line(), &Site::new(&[0]), &Site::new(&[1]), 0.25).unwrap();
        assert_eq!(s.get(&Site::new(&[1])), 1.25);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let mut s = pair(ProcessKind::Unbounded, 1.0, 1.0);
        assert!(apply_interaction(&mut s, &line(), &Site::new(&[0]), &Site::new(&[1]), 0.5).is_err());
        let mut b = pair(ProcessKind::Bounded, 1.0, 1.0);
        assert!(apply_interaction_unbounded(&mut b, &line(), &Site::new(&[0]), &Site::new(&[1]), 0.5).is_err());
    }

    #[test]
    fn topology_errors() {
        let mut s = pair(ProcessKind::Bounded, 0.5, 0.0);
        let r = apply_interaction(&mut s, &line(), &Site::new(&[0]), &Site::new(&[0]), 0.5);
        assert!(matches!(r, Err(Error::Topology(_))));
        let r = apply_interaction(&mut s, &line(), &Site::new(&[0]), &Site::new(&[2]), 0.5);
        assert!(matches!(r, Err(Error::Topology(_))));
    }

    #[test]
    fn contact_rule() {
        let mut s = pair(ProcessKind::Contact, 1.0, 0.0);
        apply_interaction(&mut s, &line(), &Site::new(&[0]), &Site::new(&[1]), 0.1).unwrap();
        assert_eq!(s.get(&Site::new(&[1])), 1.0);
    }

    #[test]
    fn star_discards_outside_marks() {
        let c = Site::new(&[0]);
        let mut s = LatticeState::from_values(
            ProcessKind::StarRestricted(c.clone()),
            [(Site::new(&[1]), 0.5)],
        );
        apply_interaction(&mut s, &line(), &Site::new(&[1]), &Site::new(&[2]), 1.0).unwrap();
        assert_eq!(s.get(&Site::new(&[2])), 0.0);
        apply_interaction(&mut s, &line(), &Site::new(&[1]), &c, 1.0).unwrap();
        assert_eq!(s.get(&c), 0.5);
    }

    #[test]
    fn death_accounting() {
        let mut s = pair(ProcessKind::Bounded, 0.9, 0.2);
        apply_death(&mut s, &Site::new(&[0]));
        assert_eq!(s.get(&Site::new(&[0])), 0.0);
        assert_eq!(s.support_size(), 1);
        let before = s.clone();
        apply_death(&mut s, &Site::new(&[0]));
        assert_eq!(s, before);
    }

    #[test]
    fn snapping() {
        assert_eq!(snap_bounded(1e-13, 1e-12), 0.0);
        assert_eq!(snap_bounded(1.0 - 1e-13, 1e-12), 1.0);
        assert_eq!(snap_bounded(0.3, 1e-12), 0.3);
        assert_eq!(snap_bounded(1e-300, 0.0), 1e-300);
        assert_eq!(snap_unbounded(5.0, 1e-12), 5.0);
    }

    #[test]
    fn generic_over_f32() {
        let (a, b) = teach(0.5f32, 0.5f32, 0.5f32);
        assert_eq!((a, b), (0.625, 0.625));
    }
}
