//! Harris graphical representation.
//!
//! Each undirected edge carries a rate-λ1 clock of interaction marks and, for
//! coupled runs, a rate-(λ2 − λ1) clock of secondary marks; each site carries a
//! rate-1 clock of death marks. Every clock draws from its own [`RngStream`]
//! keyed by the entity, so eager timelines and the lazy engine in
//! [`crate::dynamics`] see exactly the same marks.
//!
//! Secondary marks also carry a uniform label in `[0, 1)`. A process run at
//! rate `λ ∈ [λ1, λ2]` keeps the secondary marks with
//! `label < (λ − λ1) / (λ2 − λ1)`; by thinning these form a rate-(λ − λ1)
//! stream, and the kept set grows with λ, which is what makes whole λ grids
//! monotone under common random numbers.

use std::io::{self, Write};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, Edge, EdgeId, FiniteLattice, Site, SiteId};
use crate::rng::{mix2, RngStream};

/// Clock class. The numeric value is the tie-break rank between classes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Channel {
    Primary = 0,
    Secondary = 1,
    Death = 2,
}

pub(crate) fn clock_stream(rng: &RngStream, channel: Channel, entity_key: u64) -> RngStream {
    rng.substream(mix2(channel as u64, entity_key))
}

/// Returns `current + E` with `E ~ Exp(rate)`.
pub fn next_clock_time<R: Rng + ?Sized>(current: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::InvalidRate(rate));
    }
    let e: f64 = Exp1.sample(rng);
    let t = current + e / rate;
    Ok(if t > current { t } else { current.next_up() })
}

/// One exponential clock with its private generator.
#[derive(Debug, Clone)]
pub(crate) struct Clock {
    rng: ChaCha8Rng,
    rate: f64,
    labelled: bool,
    pub next: f64,
    pub label: f64,
}

impl Clock {
    /// `None` when the rate is zero: such a clock never rings.
    pub fn start(stream: RngStream, rate: f64, labelled: bool) -> Option<Self> {
        if rate <= 0.0 {
            return None;
        }
        let mut c = Clock {
            rng: stream.rng(),
            rate,
            labelled,
            next: 0.0,
            label: 0.0,
        };
        c.advance();
        Some(c)
    }

    pub fn advance(&mut self) {
        self.next = next_clock_time(self.next, self.rate, &mut self.rng)
            .expect("clock rate checked at start");
        if self.labelled {
            self.label = self.rng.random();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventKind {
    Interaction(EdgeId),
    /// Coupling mark; `label` selects which intermediate rates see it.
    SecondaryInteraction { edge: EdgeId, label: f64 },
    Death(SiteId),
}

impl EventKind {
    pub fn tag(&self) -> char {
        match self {
            EventKind::Interaction(_) => 'I',
            EventKind::SecondaryInteraction { .. } => 'S',
            EventKind::Death(_) => 'D',
        }
    }

    pub fn edge(&self) -> Option<EdgeId> {
        match *self {
            EventKind::Interaction(e) | EventKind::SecondaryInteraction { edge: e, .. } => Some(e),
            EventKind::Death(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub seq: u64,
}

/// A frozen realisation of the graphical representation on a finite domain.
#[derive(Debug, Clone)]
pub struct Timeline {
    events: Vec<Event>,
    lattice: Arc<FiniteLattice>,
    lambda1: f64,
    lambda2: Option<f64>,
    horizon: f64,
}

fn check_common(lattice: &FiniteLattice, horizon: f64) -> Result<()> {
    lattice.spec().validate()?;
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidParameter(format!("horizon must be positive, got {horizon}")));
    }
    Ok(())
}

fn check_rate(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
    }
    Ok(())
}

/// Builds the rate-λ timeline on a finite domain.
pub fn build_timeline(domain: &DomainSpec, lambda: f64, horizon: f64, rng: &RngStream) -> Result<Timeline> {
    if !domain.is_finite() {
        return Err(Error::UnsupportedMode("lazy domains are generated inside the dynamics"));
    }
    let lattice = Arc::new(FiniteLattice::new(*domain)?);
    Timeline::generate(lattice, lambda, None, horizon, rng)
}

/// Timeline with rate-λ1 interaction marks plus rate-(λ2 − λ1) secondary marks.
pub fn augment_for_coupling(
    domain: &DomainSpec,
    lambda1: f64,
    lambda2: f64,
    horizon: f64,
    rng: &RngStream,
) -> Result<Timeline> {
    if !domain.is_finite() {
        return Err(Error::UnsupportedMode("lazy domains are generated inside the dynamics"));
    }
    if lambda1 > lambda2 {
        return Err(Error::Ordering(format!("lambda1 = {lambda1} exceeds lambda2 = {lambda2}")));
    }
    let lattice = Arc::new(FiniteLattice::new(*domain)?);
    Timeline::generate(lattice, lambda1, Some(lambda2), horizon, rng)
}

/// Compacts `seq` to `0..n` keeping generation order.
fn renumber(events: &mut [Event]) {
    let mut order: Vec<u64> = events.iter().map(|e| e.seq).collect();
    order.sort_unstable();
    for e in events {
        e.seq = order.binary_search(&e.seq).unwrap() as u64;
    }
}

impl Timeline {
    /// Generates a timeline on an already enumerated lattice, so replicas can
    /// share one [`FiniteLattice`].
    pub fn generate(
        lattice: Arc<FiniteLattice>,
        lambda1: f64,
        lambda2: Option<f64>,
        horizon: f64,
        rng: &RngStream,
    ) -> Result<Timeline> {
        check_common(&lattice, horizon)?;
        check_rate("lambda", lambda1)?;
        if let Some(l2) = lambda2 {
            check_rate("lambda2", l2)?;
            if lambda1 > l2 {
                return Err(Error::Ordering(format!("lambda1 = {lambda1} exceeds lambda2 = {l2}")));
            }
        }
        let mut events = Vec::new();
        let mut seq = 0u64;
        let mut push_stream = |events: &mut Vec<Event>, clock: Option<Clock>, make: &dyn Fn(f64) -> EventKind| {
            if let Some(mut c) = clock {
                while c.next <= horizon {
                    events.push(Event {
                        time: c.next,
                        kind: make(c.label),
                        seq,
                    });
                    seq += 1;
                    c.advance();
                }
            }
        };
        for e in 0..lattice.num_edges() as EdgeId {
            let key = lattice.edge(e).key();
            let clock = Clock::start(clock_stream(rng, Channel::Primary, key), lambda1, false);
            push_stream(&mut events, clock, &|_| EventKind::Interaction(e));
        }
        if let Some(l2) = lambda2 {
            for e in 0..lattice.num_edges() as EdgeId {
                let key = lattice.edge(e).key();
                let clock = Clock::start(clock_stream(rng, Channel::Secondary, key), l2 - lambda1, true);
                push_stream(&mut events, clock, &|label| EventKind::SecondaryInteraction { edge: e, label });
            }
        }
        for s in 0..lattice.num_sites() as SiteId {
            let key = lattice.site(s).key();
            let clock = Clock::start(clock_stream(rng, Channel::Death, key), 1.0, false);
            push_stream(&mut events, clock, &|_| EventKind::Death(s));
        }
        // stable: equal times keep generation order
        events.sort_by(|a, b| a.time.total_cmp(&b.time));
        Ok(Timeline {
            events,
            lattice,
            lambda1,
            lambda2,
            horizon,
        })
    }

    /// Assembles a timeline from explicit marks; `seq` follows the given order.
    /// Used to build hand-made scenarios.
    pub fn from_events(
        lattice: Arc<FiniteLattice>,
        lambda1: f64,
        lambda2: Option<f64>,
        horizon: f64,
        marks: Vec<(f64, EventKind)>,
    ) -> Result<Timeline> {
        check_common(&lattice, horizon)?;
        let mut events = Vec::with_capacity(marks.len());
        for (i, (time, kind)) in marks.into_iter().enumerate() {
            if !(0.0..=horizon).contains(&time) {
                return Err(Error::InvalidParameter(format!("mark at {time} outside [0, {horizon}]")));
            }
            let ok = match kind {
                EventKind::Interaction(e) | EventKind::SecondaryInteraction { edge: e, .. } => {
                    (e as usize) < lattice.num_edges()
                }
                EventKind::Death(s) => (s as usize) < lattice.num_sites(),
            };
            if !ok {
                return Err(Error::Topology(format!("mark {kind:?} outside the domain")));
            }
            events.push(Event { time, kind, seq: i as u64 });
        }
        events.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.seq.cmp(&b.seq)));
        Ok(Timeline {
            events,
            lattice,
            lambda1,
            lambda2,
            horizon,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn lattice(&self) -> &Arc<FiniteLattice> {
        &self.lattice
    }

    pub fn domain(&self) -> &DomainSpec {
        self.lattice.spec()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> Option<f64> {
        self.lambda2
    }

    /// Label cut-off that turns this timeline into a rate-`lambda` one.
    pub fn label_threshold(&self, lambda: f64) -> Result<f64> {
        let (l1, l2) = (self.lambda1, self.lambda2.unwrap_or(self.lambda1));
        if lambda < l1 || lambda > l2 {
            return Err(Error::Ordering(format!(
                "rate {lambda} outside the timeline's coupling range [{l1}, {l2}]"
            )));
        }
        Ok(if l2 > l1 { (lambda - l1) / (l2 - l1) } else { 0.0 })
    }

    /// Whether a process run with label cut-off `threshold` uses this mark.
    #[inline]
    pub fn uses(kind: &EventKind, threshold: f64) -> bool {
        match *kind {
            EventKind::SecondaryInteraction { label, .. } => label < threshold,
            _ => true,
        }
    }

    /// Rate-`lambda` timeline obtained by thinning the secondary marks.
    pub fn at_rate(&self, lambda: f64) -> Result<Timeline> {
        let threshold = self.label_threshold(lambda)?;
        let mut kept: Vec<Event> = self
            .events
            .iter()
            .filter(|e| Timeline::uses(&e.kind, threshold))
            .map(|e| Event {
                kind: match e.kind {
                    EventKind::SecondaryInteraction { edge, .. } => EventKind::Interaction(edge),
                    k => k,
                },
                ..*e
            })
            .collect();
        renumber(&mut kept);
        Ok(Timeline {
            events: kept,
            lattice: self.lattice.clone(),
            lambda1: lambda,
            lambda2: None,
            horizon: self.horizon,
        })
    }

    /// Drops secondary marks and renumbers `seq` in generation order, giving
    /// exactly the rate-λ1 timeline built from the same stream.
    pub fn primary_projection(&self) -> Timeline {
        let mut kept: Vec<Event> = self
            .events
            .iter()
            .filter(|e| !matches!(e.kind, EventKind::SecondaryInteraction { .. }))
            .copied()
            .collect();
        renumber(&mut kept);
        Timeline {
            events: kept,
            lattice: self.lattice.clone(),
            lambda1: self.lambda1,
            lambda2: None,
            horizon: self.horizon,
        }
    }

    /// Numbers of (interaction, secondary, death) marks.
    pub fn counts(&self) -> (usize, usize, usize) {
        self.events.iter().fold((0, 0, 0), |(i, s, d), e| match e.kind {
            EventKind::Interaction(_) => (i + 1, s, d),
            EventKind::SecondaryInteraction { .. } => (i, s + 1, d),
            EventKind::Death(_) => (i, s, d + 1),
        })
    }

    pub fn edge_of(&self, e: EdgeId) -> Edge {
        self.lattice.edge(e)
    }

    /// Writes one mark per line: time, tag, then the site or both edge ends.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        let fmt_site = |s: &Site| {
            s.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
        };
        for ev in &self.events {
            write!(w, "{:.16e}\t{}", ev.time, ev.kind.tag())?;
            match ev.kind {
                EventKind::Interaction(e) | EventKind::SecondaryInteraction { edge: e, .. } => {
                    let edge = self.lattice.edge(e);
                    writeln!(w, "\t{}\t{}", fmt_site(edge.a()), fmt_site(edge.b()))?;
                }
                EventKind::Death(s) => writeln!(w, "\t{}", fmt_site(self.lattice.site(s)))?,
            }
        }
        Ok(())
    }
}
