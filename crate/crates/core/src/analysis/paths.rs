use std::collections::VecDeque;
use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::lattice::{EdgeId, FiniteLattice, Site, SiteId};
use crate::timeline::{EventKind, Timeline};

pub const DEFAULT_PATH_CAP: usize = 10_000;

/// A space-time path `(x_0, s_0) → (x_K, s_{K+1})`: an interaction mark joins
/// `x_{i−1}` and `x_i` at `s_i`, and no site `x_i` sees a death mark during its
/// occupancy `(s_i, s_{i+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    pub sites: Vec<SiteId>,
    /// `s_0 < s_1 < … < s_{K+1}`; the last entry is the target time.
    pub times: Vec<f64>,
}

impl Path {
    /// Number of jumps `K`.
    pub fn len(&self) -> usize {
        self.sites.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// No step returns straight to the site it came from.
    pub fn is_non_backtracking(&self) -> bool {
        self.sites.windows(3).all(|w| w[0] != w[2])
    }

    pub fn endpoint(&self) -> SiteId {
        *self.sites.last().expect("path has a source")
    }

    pub fn site_coords(&self, lattice: &FiniteLattice) -> Vec<Site> {
        self.sites.iter().map(|&s| lattice.site(s).clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathSet {
    pub paths: Vec<Path>,
    /// Enumeration hit the cap before exhausting all paths.
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Overlap {
    pub index: usize,
    pub sigma: f64,
    pub tau: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleInteraction {
    pub index: usize,
    pub time: f64,
}

/// Per-site and per-edge mark lists of a frozen timeline.
pub struct PathIndex<'a> {
    timeline: &'a Timeline,
    deaths: Vec<Vec<f64>>,
    contacts: Vec<Vec<(f64, SiteId)>>,
    edge_marks: Vec<Vec<f64>>,
}

impl<'a> PathIndex<'a> {
    /// Index the interaction marks visible at label threshold `threshold`
    /// (0 keeps only the primary marks).
    pub fn new(timeline: &'a Timeline, threshold: f64) -> Self {
        let lattice = timeline.lattice();
        let mut deaths = vec![Vec::new(); lattice.num_sites()];
        let mut contacts = vec![Vec::new(); lattice.num_sites()];
        let mut edge_marks = vec![Vec::new(); lattice.num_edges()];
        for ev in timeline.events() {
            match ev.kind {
                EventKind::Death(s) => deaths[s as usize].push(ev.time),
                ref k if Timeline::uses(k, threshold) => {
                    let e = k.edge().expect("interaction has an edge");
                    let (a, b) = lattice.endpoints(e);
                    contacts[a as usize].push((ev.time, b));
                    contacts[b as usize].push((ev.time, a));
                    edge_marks[e as usize].push(ev.time);
                }
                _ => {}
            }
        }
        PathIndex {
            timeline,
            deaths,
            contacts,
            edge_marks,
        }
    }

    pub fn timeline(&self) -> &Timeline {
        self.timeline
    }

    fn first_death_after(&self, s: SiteId, t: f64) -> f64 {
        let d = &self.deaths[s as usize];
        let k = d.partition_point(|&u| u <= t);
        d.get(k).copied().unwrap_or(f64::INFINITY)
    }

    fn last_death_before(&self, s: SiteId, t: f64) -> f64 {
        let d = &self.deaths[s as usize];
        let k = d.partition_point(|&u| u < t);
        if k == 0 {
            f64::NEG_INFINITY
        } else {
            d[k - 1]
        }
    }

    fn edge(&self, x: SiteId, y: SiteId) -> EdgeId {
        self.timeline.lattice().edge_id(x, y).expect("path steps join neighbours")
    }

    /// Breadth-first enumeration of paths from `(source, s0)` to time
    /// `target`, stopping after `cap` complete paths.
    pub fn extract(&self, source: SiteId, s0: f64, target: f64, cap: usize) -> Result<PathSet> {
        if source as usize >= self.deaths.len() {
            return Err(Error::InvalidDomain(format!("site id {source} outside the lattice")));
        }
        if !(s0 >= 0.0 && s0 < target && target <= self.timeline.horizon()) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= s0 < target <= horizon, got s0 = {s0}, target = {target}"
            )));
        }
        // partial paths can die off, so bound the frontier work separately
        let work_cap = cap.saturating_mul(64).max(1024);
        let mut work = 0usize;
        let mut paths = Vec::new();
        let mut truncated = false;
        let mut queue = VecDeque::from([(vec![source], vec![s0])]);
        while let Some((sites, times)) = queue.pop_front() {
            work += 1;
            if paths.len() >= cap || work > work_cap {
                truncated = true;
                break;
            }
            let here = *sites.last().unwrap();
            let since = *times.last().unwrap();
            let death = self.first_death_after(here, since);
            if death >= target {
                let mut t = times.clone();
                t.push(target);
                paths.push(Path { sites: sites.clone(), times: t });
            }
            let until = death.min(target);
            let marks = &self.contacts[here as usize];
            let start = marks.partition_point(|&(u, _)| u <= since);
            for &(u, other) in marks[start..].iter().take_while(|&&(u, _)| u < until) {
                let mut ns = sites.clone();
                ns.push(other);
                let mut nt = times.clone();
                nt.push(u);
                queue.push_back((ns, nt));
            }
        }
        Ok(PathSet { paths, truncated })
    }

    /// `σ_i` = max(s_{i−1}, last death at x_i before s_i) and
    /// `τ_i` = min(s_{i+1}, first death at x_{i−1} after s_i), for i = 1..K.
    pub fn overlaps(&self, path: &Path) -> Vec<Overlap> {
        (1..=path.len())
            .map(|i| {
                let s = path.times[i];
                let sigma = path.times[i - 1].max(self.last_death_before(path.sites[i], s));
                let tau = path.times[i + 1].min(self.first_death_after(path.sites[i - 1], s));
                Overlap { index: i, sigma, tau }
            })
            .collect()
    }

    /// Extra marks on the edge of each overlap, inside its window.
    pub fn doubles(&self, path: &Path, overlaps: &[Overlap]) -> Vec<DoubleInteraction> {
        let mut out = Vec::new();
        for o in overlaps {
            let i = o.index;
            let s = path.times[i];
            let marks = &self.edge_marks[self.edge(path.sites[i - 1], path.sites[i]) as usize];
            let start = marks.partition_point(|&u| u <= o.sigma);
            out.extend(
                marks[start..]
                    .iter()
                    .take_while(|&&u| u < o.tau)
                    .filter(|&&u| u != s)
                    .map(|&time| DoubleInteraction { index: i, time }),
            );
        }
        out
    }
}

/// Paths from `source` to `target_time` through the primary marks.
pub fn extract_paths(timeline: &Timeline, source: (&Site, f64), target_time: f64, cap: usize) -> Result<PathSet> {
    let id = timeline
        .lattice()
        .site_id(source.0)
        .ok_or_else(|| Error::InvalidDomain(format!("source {} outside the lattice", source.0)))?;
    PathIndex::new(timeline, 0.0).extract(id, source.1, target_time, cap)
}

pub fn overlap_windows(path: &Path, timeline: &Timeline) -> Vec<Overlap> {
    PathIndex::new(timeline, 0.0).overlaps(path)
}

pub fn double_interactions(path: &Path, timeline: &Timeline) -> Vec<DoubleInteraction> {
    let index = PathIndex::new(timeline, 0.0);
    let overlaps = index.overlaps(path);
    index.doubles(path, &overlaps)
}

fn coords(s: &Site) -> String {
    s.coords().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

/// One row per overlap: `path,i,from,to,s,sigma,tau,doubles`, double
/// interaction times separated by `;`.
pub fn write_path_csv<W: Write>(mut w: W, index: &PathIndex<'_>, paths: &[Path]) -> io::Result<()> {
    let lattice = index.timeline().lattice();
    writeln!(w, "path,i,from,to,s,sigma,tau,doubles")?;
    for (id, path) in paths.iter().enumerate() {
        let overlaps = index.overlaps(path);
        let doubles = index.doubles(path, &overlaps);
        for o in &overlaps {
            let ts: Vec<String> = doubles
                .iter()
                .filter(|d| d.index == o.index)
                .map(|d| format!("{:.12e}", d.time))
                .collect();
            writeln!(
                w,
                "{id},{},{},{},{:.12e},{:.12e},{:.12e},{}",
                o.index,
                coords(lattice.site(path.sites[o.index - 1])),
                coords(lattice.site(path.sites[o.index])),
                path.times[o.index],
                o.sigma,
                o.tau,
                ts.join(";")
            )?;
        }
    }
    Ok(())
}
