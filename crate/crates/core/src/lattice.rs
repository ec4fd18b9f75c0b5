//! Lattice geometry: sites, nearest-neighbour edges and the finite truncations
//! of Z^d the simulator runs on.

use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::rng::{mix2, mix64};

/// A point of Z^d.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(pub SmallVec<[i32; 4]>);

impl Site {
    pub fn new(coords: &[i32]) -> Self {
        Site(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        Site(SmallVec::from_elem(0, dim))
    }

    /// `origin + delta * e_axis`.
    pub fn unit(dim: usize, axis: usize, delta: i32) -> Self {
        let mut s = Site::origin(dim);
        s.0[axis] = delta;
        s
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i32] {
        &self.0
    }

    pub fn l1_distance(&self, other: &Site) -> u64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (*a as i64 - *b as i64).unsigned_abs())
            .sum()
    }

    /// Order-independent seeding key.
    pub fn key(&self) -> u64 {
        self.0
            .iter()
            .fold(mix64(self.0.len() as u64), |h, &c| mix2(h, c as u32 as u64))
    }
}

impl fmt::Debug for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// An undirected nearest-neighbour edge, stored with `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: Site,
    b: Site,
}

impl Edge {
    /// Builds the canonical edge; neighbourhood is checked by the domain.
    pub(crate) fn canonical(x: Site, y: Site) -> Self {
        if x <= y {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    pub fn a(&self) -> &Site {
        &self.a
    }

    pub fn b(&self) -> &Site {
        &self.b
    }

    pub fn key(&self) -> u64 {
        mix2(self.a.key(), self.b.key())
    }

    pub fn touches(&self, s: &Site) -> bool {
        &self.a == s || &self.b == s
    }
}

/// How Z^d is truncated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainMode {
    /// Periodic box of odd linear size, coordinates in `[-(size-1)/2, (size-1)/2]`.
    Torus { size: u32 },
    /// `[-half_width, half_width]^d` with no edges across the boundary.
    FreeBox { half_width: u32 },
    /// All of Z^d, generated on demand.
    Lazy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DomainSpec {
    pub mode: DomainMode,
    pub dim: usize,
}

impl DomainSpec {
    pub fn torus(dim: usize, size: u32) -> Result<Self> {
        Self::checked(DomainMode::Torus { size }, dim)
    }

    pub fn free_box(dim: usize, half_width: u32) -> Result<Self> {
        Self::checked(DomainMode::FreeBox { half_width }, dim)
    }

    pub fn lazy(dim: usize) -> Result<Self> {
        Self::checked(DomainMode::Lazy, dim)
    }

    fn checked(mode: DomainMode, dim: usize) -> Result<Self> {
        let d = DomainSpec { mode, dim };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidDomain("dimension must be at least 1".into()));
        }
        match self.mode {
            DomainMode::Torus { size } if size < 3 || size % 2 == 0 => Err(Error::InvalidDomain(
                format!("torus size must be odd and >= 3, got {size}"),
            )),
            DomainMode::FreeBox { half_width } if half_width < 1 => {
                Err(Error::InvalidDomain("box half-width must be >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        !matches!(self.mode, DomainMode::Lazy)
    }

    /// Linear size per axis, `None` for lazy domains.
    pub fn linear_size(&self) -> Option<u32> {
        match self.mode {
            DomainMode::Torus { size } => Some(size),
            DomainMode::FreeBox { half_width } => Some(2 * half_width + 1),
            DomainMode::Lazy => None,
        }
    }

    fn half(&self) -> Option<i32> {
        self.linear_size().map(|n| (n as i32 - 1) / 2)
    }

    pub fn num_sites(&self) -> Option<usize> {
        self.linear_size().map(|n| (n as usize).pow(self.dim as u32))
    }

    pub fn contains(&self, s: &Site) -> bool {
        if s.dim() != self.dim {
            return false;
        }
        match self.half() {
            None => true,
            Some(h) => s.0.iter().all(|c| (-h..=h).contains(c)),
        }
    }

    fn wrap(&self, c: i32) -> i32 {
        match self.mode {
            DomainMode::Torus { size } => {
                let n = size as i32;
                let h = (n - 1) / 2;
                (c + h).rem_euclid(n) - h
            }
            _ => c,
        }
    }

    /// Nearest neighbours of `s` inside the domain.
    pub fn neighbors(&self, s: &Site) -> SmallVec<[Site; 8]> {
        let mut out = SmallVec::new();
        let half = self.half();
        for axis in 0..self.dim {
            for delta in [-1, 1] {
                let mut y = s.clone();
                let c = s.0[axis] + delta;
                match self.mode {
                    DomainMode::FreeBox { .. } if c.abs() > half.unwrap() => continue,
                    _ => y.0[axis] = self.wrap(c),
                }
                out.push(y);
            }
        }
        out
    }

    pub fn are_neighbors(&self, x: &Site, y: &Site) -> bool {
        x != y && self.contains(x) && self.contains(y) && self.neighbors(x).contains(y)
    }

    /// Canonical edge `{x, y}`, failing unless `x ~ y` in this domain.
    pub fn edge(&self, x: &Site, y: &Site) -> Result<Edge> {
        if !self.are_neighbors(x, y) {
            return Err(Error::Topology(format!("{x} and {y} are not nearest neighbours")));
        }
        Ok(Edge::canonical(x.clone(), y.clone()))
    }

    pub fn describe(&self) -> String {
        match self.mode {
            DomainMode::Torus { size } => format!("torus(d={}, size={size})", self.dim),
            DomainMode::FreeBox { half_width } => {
                format!("box(d={}, half_width={half_width})", self.dim)
            }
            DomainMode::Lazy => format!("lazy(d={})", self.dim),
        }
    }
}

pub type SiteId = u32;
pub type EdgeId = u32;

/// Enumerated sites and edges of a finite domain, in canonical order.
#[derive(Debug, Clone)]
pub struct FiniteLattice {
    spec: DomainSpec,
    sites: Vec<Site>,
    index: HashMap<Site, SiteId>,
    edges: Vec<(SiteId, SiteId)>,
    incident: Vec<SmallVec<[EdgeId; 8]>>,
}

impl FiniteLattice {
    pub fn new(spec: DomainSpec) -> Result<Self> {
        spec.validate()?;
        let h = spec.half().ok_or(Error::UnsupportedMode(
            "lazy domains cannot be enumerated",
        ))?;
        let n = spec.num_sites().unwrap();
        let side = 2 * h as usize + 1;
        let sites: Vec<Site> = (0..n)
            .map(|mut i| {
                let mut c = vec![0i32; spec.dim];
                for axis in (0..spec.dim).rev() {
                    c[axis] = (i % side) as i32 - h;
                    i /= side;
                }
                Site::new(&c)
            })
            .collect();
        debug_assert!(sites.windows(2).all(|w| w[0] < w[1]));
        let index: HashMap<Site, SiteId> = sites
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as SiteId))
            .collect();
        let mut edges: Vec<Edge> = Vec::new();
        for s in &sites {
            for y in spec.neighbors(s) {
                if s < &y {
                    edges.push(Edge::canonical(s.clone(), y));
                }
            }
        }
        edges.sort();
        edges.dedup();
        let edges: Vec<(SiteId, SiteId)> =
            edges.iter().map(|e| (index[&e.a], index[&e.b])).collect();
        let mut incident = vec![SmallVec::new(); sites.len()];
        for (id, &(a, b)) in edges.iter().enumerate() {
            incident[a as usize].push(id as EdgeId);
            incident[b as usize].push(id as EdgeId);
        }
        Ok(Self {
            spec,
            sites,
            index,
            edges,
            incident,
        })
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn site(&self, id: SiteId) -> &Site {
        &self.sites[id as usize]
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site_id(&self, s: &Site) -> Option<SiteId> {
        self.index.get(s).copied()
    }

    pub fn endpoints(&self, e: EdgeId) -> (SiteId, SiteId) {
        self.edges[e as usize]
    }

    pub fn edge(&self, e: EdgeId) -> Edge {
        let (a, b) = self.edges[e as usize];
        Edge::canonical(self.sites[a as usize].clone(), self.sites[b as usize].clone())
    }

    pub fn edge_id(&self, x: SiteId, y: SiteId) -> Option<EdgeId> {
        self.incident[x as usize].iter().copied().find(|&e| {
            let (a, b) = self.edges[e as usize];
            (a == x && b == y) || (a == y && b == x)
        })
    }

    pub fn incident(&self, s: SiteId) -> &[EdgeId] {
        &self.incident[s as usize]
    }
}
