use std::fs;
use std::io::{self, Write};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;

use kcontact::analysis::{write_path_csv, PathIndex};
use kcontact::observables::{write_trajectory_header, write_trajectory_rows};
use kcontact::experiments::{
    bisect_critical, check_invasion, ids, oriented_percolation, sweep_phase_grid, verify_decay, write_decay_csv,
    BisectConfig, CriticalOutcome, DecayConfig, SurvivalSetup,
};
use kcontact::{
    build_timeline, evolve_coupled, evolve_with, Error, EvolveOptions, LatticeState, Params, RngStream,
    Site,
};

use crate::config::{Command, Format, RunConfig};
use crate::render::render_snapshot;

pub struct Outcome {
    pub code: i32,
}

/// Resolves the seed, runs the command and writes the output (stdout when no
/// path is set). The whole output is built in memory first, so a failed run
/// leaves no file behind.
pub fn run(mut cfg: RunConfig) -> Result<Outcome> {
    if cfg.seed.is_none() {
        let seed = rand::random::<u64>();
        eprintln!("seed = {seed}");
        cfg.seed = Some(seed);
    }
    // an explicit pool keeps RAYON_NUM_THREADS out of the picture
    let threads = cfg
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let body = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("cannot build the thread pool")?
        .install(|| body(&cfg))?;
    let out = if body.magic_line {
        // PGM readers need the magic number first; comments may follow it
        let split = body.bytes.iter().position(|b| *b == b'\n').map_or(0, |i| i + 1);
        [&body.bytes[..split], &header(&cfg)[..], &body.bytes[split..]].concat()
    } else {
        [header(&cfg), body.bytes].concat()
    };
    emit(&cfg, &out)?;
    Ok(Outcome { code: body.code })
}

struct Body {
    bytes: Vec<u8>,
    code: i32,
    magic_line: bool,
}

impl Body {
    fn ok(bytes: Vec<u8>) -> Self {
        Body {
            bytes,
            code: 0,
            magic_line: false,
        }
    }
}

fn header(cfg: &RunConfig) -> Vec<u8> {
    let mut h = format!("# kcontact {}\n", cfg.command.name());
    for (k, v) in cfg.describe() {
        h.push_str(&format!("# {k} = {v}\n"));
    }
    h.into_bytes()
}

fn emit(cfg: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &cfg.output {
        None => io::stdout().lock().write_all(bytes).context("writing stdout"),
        Some(path) => {
            let written = fs::File::create(path).and_then(|mut f| f.write_all(bytes).and_then(|_| f.sync_all()));
            if let Err(e) = written {
                let _ = fs::remove_file(path);
                return Err(e).with_context(|| format!("writing {}", path.display()));
            }
            Ok(())
        }
    }
}

fn seed(cfg: &RunConfig) -> RngStream {
    RngStream::new(cfg.seed.expect("seed resolved before running"), 0)
}

fn params(cfg: &RunConfig, lambda: f64, mu: f64) -> Params<f64> {
    Params::new(lambda, mu, cfg.domain, cfg.horizon).with_clamp_tol(cfg.clamp_tol)
}

fn origin_state(cfg: &RunConfig) -> LatticeState<f64> {
    LatticeState::single(cfg.kind.clone(), Site::origin(cfg.dim), 1.0)
}

fn options(cfg: &RunConfig) -> EvolveOptions {
    EvolveOptions {
        event_budget: Some(cfg.budget),
        ..Default::default()
    }
}

fn survival_setup(cfg: &RunConfig) -> SurvivalSetup {
    let mut setup = SurvivalSetup::new(cfg.domain, cfg.horizon, cfg.delta, cfg.replicas).with_kind(cfg.kind.clone());
    setup.clamp_tol = cfg.clamp_tol;
    setup
}

fn body(cfg: &RunConfig) -> Result<Body> {
    let rng = seed(cfg);
    let mut w = Vec::new();
    match cfg.command {
        Command::Simulate => {
            let p = params(cfg, cfg.lambda, cfg.mu);
            let init = origin_state(cfg);
            let trajs: Vec<_> = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| evolve_with(&init, &p, &rng.replica(ids::SIMULATE, r as u64), &cfg.times, options(cfg)))
                .collect::<Result<_, Error>>()?;
            let censored = trajs.iter().filter(|t| t.censored).count();
            if censored > 0 {
                eprintln!("warning: {censored} replicas exhausted the event budget; their later samples are missing");
            }
            write_trajectory_header(&mut w)?;
            for (r, t) in trajs.iter().enumerate() {
                write_trajectory_rows(&mut w, r, t)?;
            }
        }
        Command::Decay => {
            let mut dc = DecayConfig::new(cfg.dim, cfg.lambda, cfg.mu, cfg.times.clone(), cfg.replicas)?;
            dc.domain = cfg.domain;
            dc.event_budget = cfg.budget;
            let report = verify_decay(&dc, &rng)?;
            if let Some(msg) = &report.warning {
                eprintln!("warning: {msg}");
            }
            if report.censored > 0 {
                eprintln!("warning: {} replicas exhausted the event budget and were dropped", report.censored);
            }
            write_decay_csv(&mut w, &report)?;
        }
        Command::Sweep => {
            let table = sweep_phase_grid(&cfg.lambdas, &cfg.mus, &survival_setup(cfg), &rng)?;
            eprintln!("{}", table.setup.label());
            table.write_csv(&mut w)?;
        }
        Command::Critical => {
            let bc = BisectConfig {
                direction: cfg.direction,
                fixed: cfg.fixed,
                bracket: cfg.bracket,
                tolerance: cfg.tolerance,
                level: cfg.level,
                setup: survival_setup(cfg),
            };
            match bisect_critical(&bc, &rng)? {
                CriticalOutcome::Found {
                    estimate,
                    half_width,
                    probes,
                    label,
                    ..
                } => {
                    writeln!(w, "# estimate = {estimate}")?;
                    writeln!(w, "# half_width = {half_width}")?;
                    writeln!(w, "# {label}")?;
                    writeln!(w, "probe,value,frequency")?;
                    for (i, (v, f)) in probes.iter().enumerate() {
                        writeln!(w, "{i},{v},{f}")?;
                    }
                    eprintln!("critical value {estimate} +/- {half_width} ({label})");
                }
                CriticalOutcome::NoTransition {
                    bracket,
                    frequency_hi,
                    label,
                } => {
                    writeln!(w, "# no transition in [{}, {}]", bracket.0, bracket.1)?;
                    writeln!(w, "# {label}")?;
                    writeln!(w, "probe,value,frequency")?;
                    writeln!(w, "0,{},{frequency_hi}", bracket.1)?;
                    eprintln!("no transition in [{}, {}]: frequency {frequency_hi} at hi", bracket.0, bracket.1);
                }
            }
        }
        Command::CoupleCheck => {
            let p1 = params(cfg, cfg.lambda, cfg.mu);
            let p2 = params(cfg, cfg.lambda2, cfg.mu2);
            let init = origin_state(cfg);
            let results: Vec<Result<Option<String>, Error>> = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let stream = rng.replica(ids::COUPLING, r as u64);
                    match evolve_coupled(&p1, &p2, &init, &init, &stream, &[cfg.horizon]) {
                        Ok(_) => Ok(None),
                        Err(Error::Ordering(msg)) => Ok(Some(msg)),
                        Err(e) => Err(e),
                    }
                })
                .collect();
            writeln!(w, "replica,ordered,detail")?;
            let mut violations = 0;
            for (r, res) in results.into_iter().enumerate() {
                match res? {
                    None => writeln!(w, "{r},true,")?,
                    Some(msg) => {
                        violations += 1;
                        writeln!(w, "{r},false,\"{}\"", msg.replace('"', "'"))?;
                    }
                }
            }
            eprintln!("{violations} ordering violations in {} coupled runs", cfg.replicas);
            return Ok(Body {
                bytes: w,
                code: i32::from(violations > 0),
                magic_line: false,
            });
        }
        Command::Invade => {
            let lambda = cfg.lambda_set.then_some(cfg.lambda);
            let r = check_invasion(cfg.epsilon, cfg.mu, cfg.dim, lambda, cfg.replicas, &rng)?;
            writeln!(w, "epsilon,mu,dim,horizon,interactions,lambda_plus,lambda,replicas,successes,frequency,se,target")?;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.epsilon,
                r.mu,
                r.dim,
                r.horizon,
                r.interactions,
                r.lambda_plus,
                r.lambda,
                r.replicas,
                r.successes,
                r.frequency,
                r.se,
                r.target
            )?;
        }
        Command::Paths => {
            let timeline = build_timeline(&cfg.domain, cfg.lambda, cfg.horizon, &rng.substream(ids::PATHS))?;
            let index = PathIndex::new(&timeline, 0.0);
            let source = timeline
                .lattice()
                .site_id(&Site::origin(cfg.dim))
                .expect("origin lies in every finite domain");
            let set = index.extract(source, 0.0, cfg.horizon, cfg.cap)?;
            if set.truncated {
                eprintln!("warning: path enumeration truncated at {} paths", cfg.cap);
            }
            eprintln!("{} paths", set.paths.len());
            write_path_csv(&mut w, &index, &set.paths)?;
        }
        Command::Perc => {
            let field = oriented_percolation(cfg.p, cfg.depth, cfg.dim, &[Site::origin(cfg.dim)], &rng)?;
            field.write_csv(&mut w)?;
        }
        Command::Snapshot => {
            let traj = evolve_with(&origin_state(cfg), &params(cfg, cfg.lambda, cfg.mu), &rng, &[cfg.snapshot_time], options(cfg))?;
            let Some(sample) = traj.sample_at(cfg.snapshot_time) else {
                bail!("event budget {} exhausted before t = {}", cfg.budget, cfg.snapshot_time);
            };
            let r = render_snapshot(&sample.state, &cfg.domain, cfg.format)?;
            for msg in &r.warnings {
                eprintln!("warning: {msg}");
            }
            return Ok(Body {
                bytes: r.bytes,
                code: 0,
                magic_line: cfg.format == Format::Pgm,
            });
        }
    }
    Ok(Body::ok(w))
}
