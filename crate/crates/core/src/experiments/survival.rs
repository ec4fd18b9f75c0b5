use std::io::{self, Write};
use std::sync::Arc;

use rayon::prelude::*;

use crate::dynamics::{run_on_timeline, LatticeState, Params, Process, ProcessKind};
use crate::error::{Error, Result};
use crate::lattice::{DomainSpec, FiniteLattice, Site};
use crate::observables::{survival_proxy, total_knowledge};
use crate::rng::RngStream;
use crate::scalar::DEFAULT_CLAMP_TOL;
use crate::timeline::Timeline;

use super::ids;
use super::stats::{mean_se, wilson_interval, Z95};

/// Fixed ingredients of a finite-size, finite-horizon survival proxy: the
/// process starts from a single fully informed site at the origin and
/// survives if `Ξ_T > δ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalSetup {
    pub domain: DomainSpec,
    pub horizon: f64,
    pub delta: f64,
    pub replicas: usize,
    pub kind: ProcessKind,
    pub clamp_tol: f64,
}

impl SurvivalSetup {
    pub fn new(domain: DomainSpec, horizon: f64, delta: f64, replicas: usize) -> Self {
        Self {
            domain,
            horizon,
            delta,
            replicas,
            kind: ProcessKind::Bounded,
            clamp_tol: DEFAULT_CLAMP_TOL,
        }
    }

    pub fn with_kind(mut self, kind: ProcessKind) -> Self {
        self.kind = kind;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.domain.is_finite() {
            return Err(Error::UnsupportedMode("survival estimates need a finite domain"));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("replicas must be >= 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta = {} must be >= 0", self.delta)));
        }
        if matches!(self.kind, ProcessKind::Unbounded | ProcessKind::StarRestricted(_)) {
            return Err(Error::UnsupportedMode("survival estimates use Bounded or Contact kinds"));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!(
            "finite-size finite-horizon proxy: {} T={} delta={} replicas={}",
            self.domain.describe(),
            self.horizon,
            self.delta,
            self.replicas
        )
    }
}

/// Survival indicators `indicators[cell][replica]` for every `(λ, μ)` pair of
/// `lambdas × mus` (λ-major), under common random numbers: replica `r` draws
/// one timeline over `[min λ, max λ]` and each λ keeps the secondary marks
/// below its label threshold. Also returns the per-cell values of `Ξ_T`.
pub fn survival_indicators(
    lambdas: &[f64],
    mus: &[f64],
    setup: &SurvivalSetup,
    rng: &RngStream,
) -> Result<(Vec<Vec<bool>>, Vec<Vec<f64>>)> {
    if lambdas.is_empty() || mus.is_empty() {
        return Err(Error::InvalidParameter("parameter grids must be nonempty".into()));
    }
    let lo = lambdas.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    indicators_in_range((lo, hi), lambdas, mus, setup, rng)
}

/// As [`survival_indicators`] with the timelines drawn over `range`, which
/// must contain every λ.
fn indicators_in_range(
    (lo, hi): (f64, f64),
    lambdas: &[f64],
    mus: &[f64],
    setup: &SurvivalSetup,
    rng: &RngStream,
) -> Result<(Vec<Vec<bool>>, Vec<Vec<f64>>)> {
    setup.validate()?;
    for &l in lambdas {
        if !(lo <= l && l <= hi) {
            return Err(Error::InvalidParameter(format!("lambda = {l} outside [{lo}, {hi}]")));
        }
        for &m in mus {
            Params::new(l, m, setup.domain, setup.horizon).validate(&setup.kind)?;
        }
    }
    let lattice = Arc::new(FiniteLattice::new(setup.domain)?);
    let initial = LatticeState::single(setup.kind.clone(), Site::origin(setup.domain.dim), 1.0);
    let horizon = [setup.horizon];
    let per_replica: Vec<Vec<(bool, f64)>> = (0..setup.replicas as u64)
        .into_par_iter()
        .map(|r| {
            let stream = rng.replica(ids::SURVIVAL, r);
            let timeline = Timeline::generate(lattice.clone(), lo, (hi > lo).then_some(hi), setup.horizon, &stream)?;
            let mut out = Vec::with_capacity(lambdas.len() * mus.len());
            for &l in lambdas {
                let threshold = timeline.label_threshold(l)?;
                for &m in mus {
                    let params = Params::new(l, m, setup.domain, setup.horizon).with_clamp_tol(setup.clamp_tol);
                    let process = Process::new(setup.kind.clone(), &params).with_threshold(threshold);
                    let traj = run_on_timeline(&process, &initial, &timeline, &horizon)?;
                    let xi = total_knowledge(&traj.samples[0].state);
                    out.push((survival_proxy(&traj, setup.horizon, setup.delta)?, xi));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let cells = lambdas.len() * mus.len();
    let mut ind = vec![Vec::with_capacity(setup.replicas); cells];
    let mut xis = vec![Vec::with_capacity(setup.replicas); cells];
    for rep in per_replica {
        for (c, (b, x)) in rep.into_iter().enumerate() {
            ind[c].push(b);
            xis[c].push(x);
        }
    }
    Ok((ind, xis))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurvivalEstimate {
    pub frequency: f64,
    pub ci: (f64, f64),
    pub mean_xi: f64,
    pub se_xi: f64,
    pub replicas: usize,
    pub indicators: Vec<bool>,
}

fn summarize(indicators: Vec<bool>, xis: &[f64]) -> SurvivalEstimate {
    let n = indicators.len();
    let k = indicators.iter().filter(|b| **b).count();
    let m = mean_se(xis);
    SurvivalEstimate {
        frequency: k as f64 / n as f64,
        ci: wilson_interval(k, n, Z95),
        mean_xi: m.mean,
        se_xi: m.se,
        replicas: n,
        indicators,
    }
}

/// Fraction of replicas with `Ξ_T > δ`, with a Wilson 95% interval.
pub fn estimate_survival(
    params: &Params<f64>,
    kind: ProcessKind,
    delta: f64,
    replicas: usize,
    rng: &RngStream,
) -> Result<SurvivalEstimate> {
    let mut setup = SurvivalSetup::new(params.domain, params.horizon, delta, replicas).with_kind(kind);
    setup.clamp_tol = params.clamp_tol;
    let (mut ind, xis) = survival_indicators(&[params.lambda], &[params.mu], &setup, rng)?;
    Ok(summarize(ind.pop().unwrap(), &xis[0]))
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda: f64,
    pub mu: f64,
    pub estimate: SurvivalEstimate,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub setup: SurvivalSetup,
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    /// λ-major: row `i * mus.len() + j` is `(lambdas[i], mus[j])`.
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn row(&self, i: usize, j: usize) -> &SweepRow {
        &self.rows[i * self.mus.len() + j]
    }

    /// Every replica's indicator is nondecreasing along increasing λ and
    /// increasing μ.
    pub fn indicators_monotone(&self) -> bool {
        let order = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            idx
        };
        let (li, mi) = (order(&self.lambdas), order(&self.mus));
        let le = |a: &SweepRow, b: &SweepRow| {
            a.estimate
                .indicators
                .iter()
                .zip(&b.estimate.indicators)
                .all(|(x, y)| !x || *y)
        };
        for &j in &mi {
            for w in li.windows(2) {
                if !le(self.row(w[0], j), self.row(w[1], j)) {
                    return false;
                }
            }
        }
        for &i in &li {
            for w in mi.windows(2) {
                if !le(self.row(i, w[0]), self.row(i, w[1])) {
                    return false;
                }
            }
        }
        true
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        let s = &self.setup;
        let size = s.domain.linear_size().map_or("inf".to_string(), |n| n.to_string());
        writeln!(w, "lambda,mu,dim,size,horizon,delta,replicas,survival_freq,ci_lo,ci_hi,mean_xi,se_xi")?;
        for r in &self.rows {
            let e = &r.estimate;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.10e},{:.10e}",
                r.lambda, r.mu, s.domain.dim, size, s.horizon, s.delta, e.replicas, e.frequency, e.ci.0, e.ci.1, e.mean_xi, e.se_xi
            )?;
        }
        Ok(())
    }
}

pub fn sweep_phase_grid(lambdas: &[f64], mus: &[f64], setup: &SurvivalSetup, rng: &RngStream) -> Result<SweepTable> {
    let (ind, xis) = survival_indicators(lambdas, mus, setup, rng)?;
    let mut rows = Vec::with_capacity(ind.len());
    for (c, (i, x)) in ind.into_iter().zip(&xis).enumerate() {
        rows.push(SweepRow {
            lambda: lambdas[c / mus.len()],
            mu: mus[c % mus.len()],
            estimate: summarize(i, x),
        });
    }
    Ok(SweepTable {
        setup: setup.clone(),
        lambdas: lambdas.to_vec(),
        mus: mus.to_vec(),
        rows,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Lambda,
    Mu,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BisectConfig {
    pub direction: Direction,
    /// The parameter held fixed (μ when bisecting λ, and vice versa).
    pub fixed: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    /// Survival frequency at which a probe counts as surviving.
    pub level: f64,
    pub setup: SurvivalSetup,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CriticalOutcome {
    Found {
        estimate: f64,
        half_width: f64,
        /// Bracket after each probe, starting with the initial one.
        brackets: Vec<(f64, f64)>,
        /// `(parameter, survival frequency)` for every probe in order.
        probes: Vec<(f64, f64)>,
        label: String,
    },
    NoTransition {
        bracket: (f64, f64),
        frequency_hi: f64,
        label: String,
    },
}

/// Bisection of the survival frequency against `level`. Probes share
/// randomness: bisecting λ draws every replica's timeline over the whole
/// bracket, so a replica's indicator is monotone in the probe.
pub fn bisect_critical(cfg: &BisectConfig, rng: &RngStream) -> Result<CriticalOutcome> {
    let (lo0, hi0) = cfg.bracket;
    if !(lo0 < hi0) || !(cfg.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need lo < hi and tolerance > 0, got ({lo0}, {hi0}) and {}",
            cfg.tolerance
        )));
    }
    if !(cfg.level > 0.0 && cfg.level <= 1.0) {
        return Err(Error::InvalidParameter(format!("level = {} outside (0, 1]", cfg.level)));
    }
    let probe = |v: f64| -> Result<f64> {
        let (mut ind, _) = match cfg.direction {
            // the bracket pins the label thresholds for every probe
            Direction::Lambda => indicators_in_range((lo0, hi0), &[v], &[cfg.fixed], &cfg.setup, rng)?,
            Direction::Mu => survival_indicators(&[cfg.fixed], &[v], &cfg.setup, rng)?,
        };
        let ind = ind.pop().unwrap();
        Ok(ind.iter().filter(|b| **b).count() as f64 / ind.len() as f64)
    };
    let label = cfg.setup.label() + &format!(" level={}", cfg.level);
    let f_lo = probe(lo0)?;
    if f_lo >= cfg.level {
        return Err(Error::Bracketing {
            lo: lo0,
            hi: hi0,
            freq_lo: f_lo,
        });
    }
    let f_hi = probe(hi0)?;
    if f_hi < cfg.level {
        return Ok(CriticalOutcome::NoTransition {
            bracket: cfg.bracket,
            frequency_hi: f_hi,
            label,
        });
    }
    let (mut lo, mut hi) = cfg.bracket;
    let mut brackets = vec![(lo, hi)];
    let mut probes = vec![(lo0, f_lo), (hi0, f_hi)];
    while (hi - lo) / 2.0 > cfg.tolerance {
        let mid = 0.5 * (lo + hi);
        let f = probe(mid)?;
        probes.push((mid, f));
        if f >= cfg.level {
            hi = mid;
        } else {
            lo = mid;
        }
        brackets.push((lo, hi));
    }
    Ok(CriticalOutcome::Found {
        estimate: 0.5 * (lo + hi),
        half_width: 0.5 * (hi - lo),
        brackets,
        probes,
        label,
    })
}
