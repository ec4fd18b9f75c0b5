use proptest::prelude::*;

use kcontact::analysis::{lemma1_lower_bound, pair_recursion, poisson_tail_bound, replay_knowledge, TailSide};
use kcontact::dynamics::{
    apply_interaction, evolve_with, teach, teach_unbounded, EvolveOptions, Strategy as Run,
};
use kcontact::experiments::oriented_percolation;
use kcontact::observables::{density_above, total_knowledge};
use kcontact::{evolve_coupled, DomainSpec, LatticeState, Params, ProcessKind, RngStream, Site};

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(1.0), 0.0..=1.0f64]
}

proptest! {
    #[test]
    fn bounded_update_stays_in_unit_interval(x in unit(), y in unit(), mu in unit()) {
        let (a, b) = teach(x, y, mu);
        prop_assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
        prop_assert!(((1.0 - a) - (1.0 - x) * (1.0 - mu * y)).abs() <= 1e-12);
        prop_assert!(((1.0 - b) - (1.0 - y) * (1.0 - mu * x)).abs() <= 1e-12);
    }

    #[test]
    fn updates_are_symmetric(x in unit(), y in unit(), mu in unit()) {
        let (a, b) = teach(x, y, mu);
        let (b2, a2) = teach(y, x, mu);
        prop_assert_eq!((a, b), (a2, b2));
        let (a, b) = teach_unbounded(x, y, mu);
        let (b2, a2) = teach_unbounded(y, x, mu);
        prop_assert_eq!((a, b), (a2, b2));
    }

    #[test]
    fn unbounded_dominates_bounded(x in unit(), y in unit(), mu in unit()) {
        let (a, b) = teach(x, y, mu);
        let (ua, ub) = teach_unbounded(x, y, mu);
        prop_assert!(a <= ua && b <= ub);
    }

    #[test]
    fn update_is_monotone(x in unit(), y in unit(), dx in unit(), dy in unit(), mu in unit(), dmu in unit()) {
        let (x2, y2, mu2) = (x + (1.0 - x) * dx, y + (1.0 - y) * dy, mu + (1.0 - mu) * dmu);
        let (a, b) = teach(x, y, mu);
        let (a2, b2) = teach(x2, y2, mu2);
        // exact up to rounding of the larger inputs
        prop_assert!(a <= a2 + 1e-15 && b <= b2 + 1e-15);
    }

    #[test]
    fn binary_stays_binary_at_mu_one(bits in prop::collection::vec(any::<bool>(), 7), steps in prop::collection::vec((0i32..7, any::<bool>()), 0..50)) {
        let domain = DomainSpec::torus(1, 7).unwrap();
        let mut s = LatticeState::from_values(
            ProcessKind::Bounded,
            bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| (Site::new(&[i as i32 - 3]), 1.0)),
        );
        for (c, right) in steps {
            let x = Site::new(&[c - 3]);
            let y = Site::new(&[if right { (c - 3 + 4).rem_euclid(7) - 3 } else { (c - 3 + 2).rem_euclid(7) - 3 }]);
            apply_interaction(&mut s, &domain, &x, &y, 1.0).unwrap();
            prop_assert!(s.iter().all(|(_, v)| v == 1.0));
        }
    }

    #[test]
    fn total_knowledge_additive(a in prop::collection::vec(unit(), 5), b in prop::collection::vec(unit(), 5)) {
        let left = LatticeState::from_values(ProcessKind::Bounded, a.iter().enumerate().map(|(i, v)| (Site::new(&[i as i32]), *v)));
        let right = LatticeState::from_values(ProcessKind::Bounded, b.iter().enumerate().map(|(i, v)| (Site::new(&[i as i32 + 10]), *v)));
        let both = LatticeState::from_values(ProcessKind::Bounded, left.iter().chain(right.iter()).map(|(s, v)| (s.clone(), v)));
        prop_assert!((total_knowledge(&both) - total_knowledge(&left) - total_knowledge(&right)).abs() < 1e-12);
        prop_assert_eq!(both.support_size(), left.support_size() + right.support_size());
    }

    #[test]
    fn density_nonincreasing_in_threshold(v in prop::collection::vec(unit(), 9), t1 in unit(), t2 in unit()) {
        let domain = DomainSpec::torus(1, 9).unwrap();
        let s = LatticeState::from_values(ProcessKind::Bounded, v.iter().enumerate().map(|(i, x)| (Site::new(&[i as i32 - 4]), *x)));
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        prop_assert!(density_above(&s, hi, &domain).fraction().unwrap() <= density_above(&s, lo, &domain).fraction().unwrap());
    }

    #[test]
    fn recursion_beats_lemma_bound(mu in 0.0..=1.0f64, n in 0u32..300) {
        let (_, y) = pair_recursion(0.5, 0.0, mu, n as usize);
        prop_assert!(y >= lemma1_lower_bound(mu, n) - 1e-12);
    }

    #[test]
    fn chernoff_dominates_poisson(m in 0.5..40.0f64, frac in 0.0..=1.0f64) {
        let n = (m * frac).floor() as u64;
        let mut term = (-m).exp();
        let mut exact = term;
        for k in 1..=n {
            term *= m / k as f64;
            exact += term;
        }
        prop_assert!(poisson_tail_bound(m, n, TailSide::Lower).unwrap() >= exact * (1.0 - 1e-12));
    }

    #[test]
    fn replay_shape(len in 1usize..12, mu in 0.01..0.999f64, init in 0.01..0.999f64, at in 1usize..12) {
        let at = at.min(len);
        let plain = replay_knowledge(len, mu, init, None).unwrap();
        prop_assert!(plain.values.windows(2).all(|w| w[1] <= w[0]));
        let r = replay_knowledge(len, mu, init, Some(at)).unwrap();
        prop_assert!(r.values[at] > r.before_double.unwrap());
        for i in (at + 1)..=len {
            prop_assert!(r.values[i] <= r.values[i - 1]);
        }
    }

    #[test]
    fn percolation_monotone_in_p(p in 0.0..=1.0f64, dp in 0.0..=1.0f64, seed in any::<u64>()) {
        let rng = RngStream::new(seed, 0);
        let init = [Site::origin(1)];
        let a = oriented_percolation(p, 15, 1, &init, &rng).unwrap();
        let b = oriented_percolation(p + (1.0 - p) * dp, 15, 1, &init, &rng).unwrap();
        for n in 0..=15 {
            prop_assert!(a.wet[n].is_subset(&b.wet[n]));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lazy_equals_eager(seed in any::<u64>(), lambda in 0.0..3.0f64, mu in 0.0..=1.0f64, kind in 0usize..3) {
        let kind = [ProcessKind::Bounded, ProcessKind::Unbounded, ProcessKind::Contact][kind].clone();
        let params = Params::new(lambda, mu, DomainSpec::torus(1, 9).unwrap(), 3.0);
        let i = LatticeState::single(kind, Site::origin(1), 1.0);
        let run = |strategy| {
            evolve_with(&i, &params, &RngStream::new(seed, 0), &[1.0, 3.0], EvolveOptions { strategy, event_budget: None }).unwrap()
        };
        let (e, l) = (run(Run::Eager), run(Run::Lazy));
        prop_assert_eq!(&e.samples[0].state, &l.samples[0].state);
        prop_assert_eq!(&e.samples[1].state, &l.samples[1].state);
    }

    #[test]
    fn coupling_never_violates_order(
        seed in any::<u64>(),
        l in (0.0..4.0f64, 0.0..4.0f64),
        m in (0.0..=1.0f64, 0.0..=1.0f64),
        vals in prop::collection::vec((unit(), unit()), 11),
    ) {
        let domain = DomainSpec::torus(1, 11).unwrap();
        let p1 = Params::new(l.0.min(l.1), m.0.min(m.1), domain, 5.0);
        let p2 = Params::new(l.0.max(l.1), m.0.max(m.1), domain, 5.0);
        let sites = || (-5..=5).map(|c| Site::new(&[c]));
        let i1 = LatticeState::from_values(ProcessKind::Bounded, sites().zip(&vals).map(|(s, (a, _))| (s, *a)));
        let i2 = LatticeState::from_values(ProcessKind::Bounded, sites().zip(&vals).map(|(s, (a, b))| (s, a + (1.0 - a) * b)));
        prop_assert!(evolve_coupled(&p1, &p2, &i1, &i2, &RngStream::new(seed, 0), &[5.0]).is_ok());
    }
}
