use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, Site};
use crate::scalar::{Knowledge, DEFAULT_CLAMP_TOL};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ProcessKind {
    Bounded,
    Unbounded,
    Contact,
    /// Bounded dynamics confined to `{centre} ∪ {y : y ~ centre}`.
    StarRestricted(Site),
}

impl ProcessKind {
    pub fn name(&self) -> &'static str {
        match self {
            ProcessKind::Bounded => "bounded",
            ProcessKind::Unbounded => "unbounded",
            ProcessKind::Contact => "contact",
            ProcessKind::StarRestricted(_) => "star",
        }
    }

    pub fn is_bounded_rule(&self) -> bool {
        matches!(self, ProcessKind::Bounded | ProcessKind::StarRestricted(_))
    }

    /// Whether `s` takes part in the dynamics of this kind.
    pub fn admits(&self, domain: &DomainSpec, s: &Site) -> bool {
        match self {
            ProcessKind::StarRestricted(c) => c == s || domain.are_neighbors(c, s),
            _ => true,
        }
    }
}

/// Sparse configuration: absent sites hold 0 and zeros are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeState<S> {
    values: BTreeMap<Site, S>,
    kind: ProcessKind,
}

impl<S: Knowledge> LatticeState<S> {
    pub fn empty(kind: ProcessKind) -> Self {
        Self {
            values: BTreeMap::new(),
            kind,
        }
    }

    /// `value` at `site`, zero elsewhere (`1_0` with value one at the origin).
    pub fn single(kind: ProcessKind, site: Site, value: S) -> Self {
        let mut s = Self::empty(kind);
        s.set(site, value);
        s
    }

    pub fn from_values<I: IntoIterator<Item = (Site, S)>>(kind: ProcessKind, values: I) -> Self {
        let mut s = Self::empty(kind);
        for (site, v) in values {
            s.set(site, v);
        }
        s
    }

    pub fn kind(&self) -> &ProcessKind {
        &self.kind
    }

    /// Same values, relabelled as another process kind.
    pub fn with_kind(&self, kind: ProcessKind) -> Self {
        Self {
            values: self.values.clone(),
            kind,
        }
    }

    pub fn get(&self, site: &Site) -> S {
        self.values.get(site).copied().unwrap_or_else(S::zero)
    }

    /// Stores `v`, dropping the entry when `v` is not positive.
    pub fn set(&mut self, site: Site, v: S) {
        if v > S::zero() {
            self.values.insert(site, v);
        } else {
            self.values.remove(&site);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, S)> + '_ {
        self.values.iter().map(|(s, v)| (s, *v))
    }

    pub fn support(&self) -> impl Iterator<Item = &Site> + '_ {
        self.values.keys()
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Indicator configuration `1{ξ > 0}` as a contact state.
    pub fn indicator(&self) -> LatticeState<S> {
        LatticeState {
            values: self.values.keys().map(|s| (s.clone(), S::one())).collect(),
            kind: ProcessKind::Contact,
        }
    }

    /// Pointwise `self ≤ other`, comparing values only.
    pub fn le_pointwise(&self, other: &LatticeState<S>) -> bool {
        self.values.iter().all(|(s, v)| *v <= other.get(s))
    }

    /// Checks the value range of the kind and membership in `domain`.
    pub fn validate(&self, domain: &DomainSpec) -> Result<()> {
        for (s, v) in &self.values {
            if !domain.contains(s) {
                return Err(Error::InconsistentInitial(format!("site {s} outside {}", domain.describe())));
            }
            if !self.kind.admits(domain, s) {
                return Err(Error::InconsistentInitial(format!("site {s} outside the star")));
            }
            let ok = match self.kind {
                ProcessKind::Bounded | ProcessKind::StarRestricted(_) => *v <= S::one(),
                ProcessKind::Contact => *v == S::one(),
                ProcessKind::Unbounded => v.is_finite(),
            };
            if !ok || v.is_nan() {
                return Err(Error::InconsistentInitial(format!(
                    "value {v} at {s} invalid for {} process",
                    self.kind.name()
                )));
            }
        }
        if let ProcessKind::StarRestricted(c) = &self.kind {
            if !domain.contains(c) {
                return Err(Error::InconsistentInitial(format!("star centre {c} outside domain")));
            }
        }
        Ok(())
    }
}

/// Model parameters. Rates and times are `f64`; the fraction μ and the clamp
/// tolerance live in the knowledge scalar type.
#[derive(Clone, Debug, PartialEq)]
pub struct Params<S> {
    pub lambda: f64,
    pub mu: S,
    pub domain: DomainSpec,
    pub horizon: f64,
    /// Values closer than this to 0 (or to 1 under the bounded rule) snap to it.
    pub clamp_tol: S,
}

impl<S: Knowledge> Params<S> {
    pub fn new(lambda: f64, mu: S, domain: DomainSpec, horizon: f64) -> Self {
        Self {
            lambda,
            mu,
            domain,
            horizon,
            clamp_tol: S::of(DEFAULT_CLAMP_TOL),
        }
    }

    pub fn with_clamp_tol(mut self, tol: S) -> Self {
        self.clamp_tol = tol;
        self
    }

    pub fn dim(&self) -> usize {
        self.domain.dim
    }

    /// Unbounded processes accept any μ ≥ 0; μ > 1 lies outside the model.
    pub fn validate(&self, kind: &ProcessKind) -> Result<()> {
        self.domain.validate()?;
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        let mu_ok = match kind {
            ProcessKind::Unbounded => self.mu >= S::zero() && self.mu.is_finite(),
            _ => self.mu >= S::zero() && self.mu <= S::one(),
        };
        if !mu_ok {
            return Err(Error::InvalidParameter(format!(
                "mu = {} out of range for {} process",
                self.mu,
                kind.name()
            )));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidParameter(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.clamp_tol >= S::zero()) {
            return Err(Error::InvalidParameter("clamp tolerance must be >= 0".into()));
        }
        Ok(())
    }
}
