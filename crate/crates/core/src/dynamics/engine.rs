use std::cmp::Ordering as CmpOrdering;
use std::collections::{BinaryHeap, HashMap};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, Edge, FiniteLattice, Site, SiteId};
use crate::observables::{record, ObservableRecord};
use crate::rng::RngStream;
use crate::scalar::Knowledge;
use crate::timeline::{augment_for_coupling, clock_stream, Channel, Clock, Event, EventKind, Timeline};

use super::state::{LatticeState, Params, ProcessKind};
use super::update::{contact_update, snap_bounded, snap_unbounded, teach, teach_unbounded};

#[derive(Clone, Debug, PartialEq)]
pub struct Sample<S> {
    pub time: f64,
    pub state: LatticeState<S>,
    pub record: ObservableRecord,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<S> {
    pub samples: Vec<Sample<S>>,
    /// Marks that were applied (lazy runs skip marks that cannot change anything).
    pub events_processed: u64,
    /// Set when the event budget ran out; later samples are missing.
    pub censored: bool,
}

impl<S: Knowledge> Trajectory<S> {
    pub fn sample_at(&self, time: f64) -> Option<&Sample<S>> {
        self.samples.iter().find(|s| s.time == time)
    }

    pub fn last(&self) -> Option<&Sample<S>> {
        self.samples.last()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Eager on finite domains, lazy on [`crate::lattice::DomainMode::Lazy`].
    #[default]
    Auto,
    Eager,
    Lazy,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct EvolveOptions {
    pub strategy: Strategy,
    pub event_budget: Option<u64>,
}

/// How one process reads a timeline.
#[derive(Clone, Debug, PartialEq)]
pub struct Process<S> {
    pub kind: ProcessKind,
    pub mu: S,
    /// Secondary marks with `label < threshold` are used.
    pub threshold: f64,
    pub clamp_tol: S,
}

impl<S: Knowledge> Process<S> {
    pub fn new(kind: ProcessKind, params: &Params<S>) -> Self {
        Self {
            kind,
            mu: params.mu,
            threshold: 0.0,
            clamp_tol: params.clamp_tol,
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    #[inline]
    fn exchange(&self, x: S, y: S) -> (S, S) {
        match self.kind {
            ProcessKind::Bounded | ProcessKind::StarRestricted(_) => {
                let (a, b) = teach(x, y, self.mu);
                (snap_bounded(a, self.clamp_tol), snap_bounded(b, self.clamp_tol))
            }
            ProcessKind::Unbounded => {
                let (a, b) = teach_unbounded(x, y, self.mu);
                (snap_unbounded(a, self.clamp_tol), snap_unbounded(b, self.clamp_tol))
            }
            ProcessKind::Contact => contact_update(x, y),
        }
    }
}

fn check_sample_times(times: &[f64], horizon: f64) -> Result<()> {
    for &t in times {
        if !(0.0..=horizon).contains(&t) {
            return Err(Error::SampleBeyondHorizon { time: t, horizon });
        }
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter("sample times must be nondecreasing".into()));
    }
    Ok(())
}

struct Sampler<'a> {
    times: &'a [f64],
    next: usize,
}

impl<'a> Sampler<'a> {
    fn new(times: &'a [f64]) -> Self {
        Self { times, next: 0 }
    }

    /// Records every pending sample time strictly before `t`.
    fn before<S: Knowledge>(
        &mut self,
        t: f64,
        domain: &DomainSpec,
        out: &mut Vec<Sample<S>>,
        snap: impl Fn() -> LatticeState<S>,
    ) {
        while self.next < self.times.len() && self.times[self.next] < t {
            let time = self.times[self.next];
            let state = snap();
            out.push(Sample {
                time,
                record: record(&state, domain, time),
                state,
            });
            self.next += 1;
        }
    }
}

/// Dense per-site values on an enumerated lattice.
struct Dense<'a, S> {
    process: &'a Process<S>,
    lattice: &'a FiniteLattice,
    values: Vec<S>,
    star: Option<Vec<bool>>,
}

impl<'a, S: Knowledge> Dense<'a, S> {
    fn new(process: &'a Process<S>, lattice: &'a FiniteLattice, initial: &LatticeState<S>) -> Result<Self> {
        if initial.kind() != &process.kind {
            return Err(Error::InconsistentInitial(format!(
                "{} state given to a {} process",
                initial.kind().name(),
                process.kind.name()
            )));
        }
        initial.validate(lattice.spec())?;
        let mut values = vec![S::zero(); lattice.num_sites()];
        for (s, v) in initial.iter() {
            values[lattice.site_id(s).expect("validated") as usize] = v;
        }
        let star = match &process.kind {
            ProcessKind::StarRestricted(_) => Some(
                lattice
                    .sites()
                    .iter()
                    .map(|s| process.kind.admits(lattice.spec(), s))
                    .collect(),
            ),
            _ => None,
        };
        Ok(Self {
            process,
            lattice,
            values,
            star,
        })
    }

    #[inline]
    fn in_star(&self, s: SiteId) -> bool {
        self.star.as_ref().map_or(true, |m| m[s as usize])
    }

    /// Applies `ev` if this process sees it; returns the sites it rewrote.
    #[inline]
    fn apply(&mut self, ev: &Event) -> Option<[Option<SiteId>; 2]> {
        if !Timeline::uses(&ev.kind, self.process.threshold) {
            return None;
        }
        match ev.kind {
            EventKind::Interaction(e) | EventKind::SecondaryInteraction { edge: e, .. } => {
                let (a, b) = self.lattice.endpoints(e);
                if !(self.in_star(a) && self.in_star(b)) {
                    return None;
                }
                let (ia, ib) = (a as usize, b as usize);
                let (na, nb) = self.process.exchange(self.values[ia], self.values[ib]);
                self.values[ia] = na;
                self.values[ib] = nb;
                Some([Some(a), Some(b)])
            }
            EventKind::Death(s) => {
                if !self.in_star(s) {
                    return None;
                }
                self.values[s as usize] = S::zero();
                Some([Some(s), None])
            }
        }
    }

    fn snapshot(&self) -> LatticeState<S> {
        LatticeState::from_values(
            self.process.kind.clone(),
            self.values
                .iter()
                .enumerate()
                .filter(|(_, v)| **v > S::zero())
                .map(|(i, v)| (self.lattice.site(i as SiteId).clone(), *v)),
        )
    }
}

/// Runs one process through a frozen timeline.
pub fn run_on_timeline<S: Knowledge>(
    process: &Process<S>,
    initial: &LatticeState<S>,
    timeline: &Timeline,
    sample_times: &[f64],
) -> Result<Trajectory<S>> {
    run_on_timeline_budget(process, initial, timeline, sample_times, None)
}

fn run_on_timeline_budget<S: Knowledge>(
    process: &Process<S>,
    initial: &LatticeState<S>,
    timeline: &Timeline,
    sample_times: &[f64],
    budget: Option<u64>,
) -> Result<Trajectory<S>> {
    check_sample_times(sample_times, timeline.horizon())?;
    let lattice = timeline.lattice();
    let mut dense = Dense::new(process, lattice, initial)?;
    let domain = lattice.spec();
    let mut sampler = Sampler::new(sample_times);
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut processed = 0u64;
    let mut censored = false;
    for ev in timeline.events() {
        sampler.before(ev.time, domain, &mut samples, || dense.snapshot());
        if dense.apply(ev).is_some() {
            processed += 1;
            if budget.is_some_and(|b| processed >= b) {
                censored = true;
                break;
            }
        }
    }
    if !censored {
        sampler.before(f64::INFINITY, domain, &mut samples, || dense.snapshot());
    }
    Ok(Trajectory {
        samples,
        events_processed: processed,
        censored,
    })
}

/// Read access to two processes sharing a timeline, after one mark.
pub struct PairView<'a, S> {
    pub first: &'a [S],
    pub second: &'a [S],
    /// Sites rewritten by the mark (all sites for the initial call).
    pub touched: &'a [SiteId],
    pub lattice: &'a FiniteLattice,
}

/// Runs two processes in lockstep over one timeline. `check` is called once
/// on the initial states (with `None`) and after every mark either process
/// used; an error from `check` aborts the run.
pub fn run_pair_on_timeline<S, F>(
    first: (&Process<S>, &LatticeState<S>),
    second: (&Process<S>, &LatticeState<S>),
    timeline: &Timeline,
    sample_times: &[f64],
    mut check: F,
) -> Result<(Trajectory<S>, Trajectory<S>)>
where
    S: Knowledge,
    F: FnMut(Option<&Event>, &PairView<'_, S>) -> Result<()>,
{
    check_sample_times(sample_times, timeline.horizon())?;
    let lattice = timeline.lattice();
    let domain = lattice.spec();
    let mut a = Dense::new(first.0, lattice, first.1)?;
    let mut b = Dense::new(second.0, lattice, second.1)?;
    let all: Vec<SiteId> = (0..lattice.num_sites() as SiteId).collect();
    check(
        None,
        &PairView {
            first: &a.values,
            second: &b.values,
            touched: &all,
            lattice,
        },
    )?;
    let (mut sa, mut sb) = (Sampler::new(sample_times), Sampler::new(sample_times));
    let (mut out_a, mut out_b) = (Vec::new(), Vec::new());
    let (mut na, mut nb) = (0u64, 0u64);
    let mut touched: Vec<SiteId> = Vec::with_capacity(4);
    for ev in timeline.events() {
        sa.before(ev.time, domain, &mut out_a, || a.snapshot());
        sb.before(ev.time, domain, &mut out_b, || b.snapshot());
        touched.clear();
        if let Some(t) = a.apply(ev) {
            na += 1;
            touched.extend(t.iter().flatten());
        }
        if let Some(t) = b.apply(ev) {
            nb += 1;
            touched.extend(t.iter().flatten());
        }
        if !touched.is_empty() {
            check(
                Some(ev),
                &PairView {
                    first: &a.values,
                    second: &b.values,
                    touched: &touched,
                    lattice,
                },
            )?;
        }
    }
    sa.before(f64::INFINITY, domain, &mut out_a, || a.snapshot());
    sb.before(f64::INFINITY, domain, &mut out_b, || b.snapshot());
    Ok((
        Trajectory {
            samples: out_a,
            events_processed: na,
            censored: false,
        },
        Trajectory {
            samples: out_b,
            events_processed: nb,
            censored: false,
        },
    ))
}

pub fn evolve<S: Knowledge>(
    initial: &LatticeState<S>,
    params: &Params<S>,
    rng: &RngStream,
    sample_times: &[f64],
) -> Result<Trajectory<S>> {
    evolve_with(initial, params, rng, sample_times, EvolveOptions::default())
}

/// Evolves the process of `initial.kind()` from `initial` over `[0, horizon]`.
pub fn evolve_with<S: Knowledge>(
    initial: &LatticeState<S>,
    params: &Params<S>,
    rng: &RngStream,
    sample_times: &[f64],
    opts: EvolveOptions,
) -> Result<Trajectory<S>> {
    let kind = initial.kind().clone();
    params.validate(&kind)?;
    initial.validate(&params.domain)?;
    check_sample_times(sample_times, params.horizon)?;
    let process = Process::new(kind, params);
    let lazy = match opts.strategy {
        Strategy::Auto => !params.domain.is_finite(),
        Strategy::Lazy => true,
        Strategy::Eager => {
            if !params.domain.is_finite() {
                return Err(Error::UnsupportedMode("eager evolution needs a finite domain"));
            }
            false
        }
    };
    if lazy {
        LazyEngine::new(&process, params, rng).run(initial, sample_times, opts.event_budget)
    } else {
        let lattice = Arc::new(FiniteLattice::new(params.domain)?);
        let timeline = Timeline::generate(lattice, params.lambda, None, params.horizon, rng)?;
        run_on_timeline_budget(&process, initial, &timeline, sample_times, opts.event_budget)
    }
}

fn kinds_comparable(a: &ProcessKind, b: &ProcessKind) -> bool {
    a == b
        || matches!(
            (a, b),
            (ProcessKind::Bounded, ProcessKind::Unbounded) | (ProcessKind::Bounded, ProcessKind::Contact)
        )
}

/// Couples two parameterisations on shared randomness. The first process
/// reads only the rate-λ1 marks, the second also reads the rate-(λ2 − λ1)
/// secondary marks; deaths are shared. The pointwise order `first ≤ second`
/// is checked after every mark and any violation is an [`Error::Ordering`].
pub fn evolve_coupled<S: Knowledge>(
    params1: &Params<S>,
    params2: &Params<S>,
    initial1: &LatticeState<S>,
    initial2: &LatticeState<S>,
    rng: &RngStream,
    sample_times: &[f64],
) -> Result<(Trajectory<S>, Trajectory<S>)> {
    let (k1, k2) = (initial1.kind().clone(), initial2.kind().clone());
    params1.validate(&k1)?;
    params2.validate(&k2)?;
    if params1.domain != params2.domain || params1.horizon != params2.horizon {
        return Err(Error::InvalidParameter("coupled runs need one domain and horizon".into()));
    }
    if params1.clamp_tol != params2.clamp_tol {
        return Err(Error::InvalidParameter("coupled runs need one clamp tolerance".into()));
    }
    if !kinds_comparable(&k1, &k2) {
        return Err(Error::Ordering(format!("no coupling order from {} to {}", k1.name(), k2.name())));
    }
    if params1.lambda > params2.lambda {
        return Err(Error::Ordering(format!("lambda1 = {} > lambda2 = {}", params1.lambda, params2.lambda)));
    }
    if params1.mu > params2.mu && k2 != ProcessKind::Contact {
        return Err(Error::Ordering(format!("mu1 = {} > mu2 = {}", params1.mu, params2.mu)));
    }
    if !initial1.le_pointwise(initial2) {
        return Err(Error::Ordering("initial configurations are not pointwise ordered".into()));
    }
    let timeline = augment_for_coupling(&params1.domain, params1.lambda, params2.lambda, params1.horizon, rng)?;
    let p1 = Process::new(k1, params1);
    let p2 = Process::new(k2, params2).with_threshold(timeline.label_threshold(params2.lambda)?);
    run_pair_on_timeline((&p1, initial1), (&p2, initial2), &timeline, sample_times, |ev, view| {
        for &s in view.touched {
            let (x, y) = (view.first[s as usize], view.second[s as usize]);
            if !(x <= y) {
                return Err(Error::Ordering(format!(
                    "at t = {} site {}: {} > {}",
                    ev.map_or(0.0, |e| e.time),
                    view.lattice.site(s),
                    x,
                    y
                )));
            }
        }
        Ok(())
    })
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Entity {
    Edge(Edge),
    Site(Site),
}

/// Heap entry, ordered so the earliest `(time, entity)` pops first.
#[derive(Debug, PartialEq)]
struct Pending {
    time: f64,
    entity: Entity,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> CmpOrdering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.entity.cmp(&self.entity))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<CmpOrdering> {
        Some(self.cmp(other))
    }
}

struct LazyClock {
    clock: Clock,
    scheduled: bool,
}

/// Active-region evolution: clocks exist only for entities that touched a
/// site with positive value. A clock created late replays its stream from
/// time 0 and skips the marks already in the past, so on a finite domain the
/// marks it produces are exactly those of the eager timeline.
struct LazyEngine<'a, S> {
    process: &'a Process<S>,
    domain: DomainSpec,
    lambda: f64,
    horizon: f64,
    rng: &'a RngStream,
    values: HashMap<Site, S>,
    clocks: HashMap<Entity, LazyClock>,
    heap: BinaryHeap<Pending>,
}

impl<'a, S: Knowledge> LazyEngine<'a, S> {
    fn new(process: &'a Process<S>, params: &Params<S>, rng: &'a RngStream) -> Self {
        Self {
            process,
            domain: params.domain,
            lambda: params.lambda,
            horizon: params.horizon,
            rng,
            values: HashMap::new(),
            clocks: HashMap::new(),
            heap: BinaryHeap::new(),
        }
    }

    fn value(&self, s: &Site) -> S {
        self.values.get(s).copied().unwrap_or_else(S::zero)
    }

    fn set(&mut self, s: &Site, v: S) {
        if v > S::zero() {
            self.values.insert(s.clone(), v);
        } else {
            self.values.remove(s);
        }
    }

    fn relevant(&self, e: &Entity) -> bool {
        match e {
            Entity::Edge(edge) => self.value(edge.a()) > S::zero() || self.value(edge.b()) > S::zero(),
            Entity::Site(s) => self.value(s) > S::zero(),
        }
    }

    /// Puts `entity` on the heap at its first mark after `now`.
    fn ensure(&mut self, entity: Entity, now: (f64, Option<&Entity>)) {
        if let Some(c) = self.clocks.get(&entity) {
            if c.scheduled {
                return;
            }
        }
        let slot = match self.clocks.entry(entity.clone()) {
            std::collections::hash_map::Entry::Occupied(o) => o.into_mut(),
            std::collections::hash_map::Entry::Vacant(v) => {
                let (stream, rate) = match &entity {
                    Entity::Edge(e) => (clock_stream(self.rng, Channel::Primary, e.key()), self.lambda),
                    Entity::Site(s) => (clock_stream(self.rng, Channel::Death, s.key()), 1.0),
                };
                match Clock::start(stream, rate, false) {
                    Some(clock) => v.insert(LazyClock {
                        clock,
                        scheduled: false,
                    }),
                    None => return,
                }
            }
        };
        let past = |t: f64| match now.1 {
            None => t <= now.0,
            Some(cur) => t < now.0 || (t == now.0 && &entity <= cur),
        };
        while past(slot.clock.next) {
            slot.clock.advance();
        }
        slot.scheduled = true;
        if slot.clock.next <= self.horizon {
            self.heap.push(Pending {
                time: slot.clock.next,
                entity,
            });
        }
    }

    fn activate(&mut self, s: &Site, now: (f64, Option<&Entity>)) {
        let kind = &self.process.kind;
        if !kind.admits(&self.domain, s) {
            return;
        }
        self.ensure(Entity::Site(s.clone()), now);
        for y in self.domain.neighbors(s) {
            if self.process.kind.admits(&self.domain, &y) {
                self.ensure(Entity::Edge(Edge::canonical(s.clone(), y)), now);
            }
        }
    }

    fn snapshot(&self) -> LatticeState<S> {
        LatticeState::from_values(
            self.process.kind.clone(),
            self.values.iter().map(|(s, v)| (s.clone(), *v)),
        )
    }

    fn run(
        mut self,
        initial: &LatticeState<S>,
        sample_times: &[f64],
        budget: Option<u64>,
    ) -> Result<Trajectory<S>> {
        for (s, v) in initial.iter() {
            self.set(s, v);
        }
        let seeds: Vec<Site> = initial.support().cloned().collect();
        for s in &seeds {
            self.activate(s, (0.0, None));
        }
        let mut sampler = Sampler::new(sample_times);
        let mut samples = Vec::with_capacity(sample_times.len());
        let mut processed = 0u64;
        let mut censored = false;
        while let Some(Pending { time, entity }) = self.heap.pop() {
            sampler.before(time, &self.domain, &mut samples, || self.snapshot());
            let mut born: [Option<Site>; 2] = [None, None];
            if self.relevant(&entity) {
                match &entity {
                    Entity::Edge(e) => {
                        let (a, b) = (e.a().clone(), e.b().clone());
                        let (va, vb) = (self.value(&a), self.value(&b));
                        let (na, nb) = self.process.exchange(va, vb);
                        if va == S::zero() && na > S::zero() {
                            born[0] = Some(a.clone());
                        }
                        if vb == S::zero() && nb > S::zero() {
                            born[1] = Some(b.clone());
                        }
                        self.set(&a, na);
                        self.set(&b, nb);
                    }
                    Entity::Site(s) => {
                        let s = s.clone();
                        self.set(&s, S::zero());
                    }
                }
                processed += 1;
            }
            let still = self.relevant(&entity);
            let horizon = self.horizon;
            let slot = self.clocks.get_mut(&entity).expect("scheduled entity has a clock");
            slot.clock.advance();
            if still {
                if slot.clock.next <= horizon {
                    self.heap.push(Pending {
                        time: slot.clock.next,
                        entity: entity.clone(),
                    });
                }
            } else {
                slot.scheduled = false;
            }
            for s in born.iter().flatten() {
                self.activate(s, (time, Some(&entity)));
            }
            if budget.is_some_and(|b| processed >= b) {
                censored = true;
                break;
            }
        }
        if !censored {
            sampler.before(f64::INFINITY, &self.domain, &mut samples, || self.snapshot());
        }
        Ok(Trajectory {
            samples,
            events_processed: processed,
            censored,
        })
    }
}
