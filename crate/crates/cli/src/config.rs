use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use thiserror::Error;

use kcontact::experiments::Direction;
use kcontact::{DomainSpec, ProcessKind, Site, DEFAULT_CLAMP_TOL};

#[derive(Debug, Error, PartialEq)]
pub enum UsageError {
    #[error("{key}: {message}")]
    Invalid { key: String, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("config line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("no command given (pass one or set `command` in the config file)")]
    MissingCommand,
    #[error("cannot read config file {path}: {message}")]
    ConfigFile { path: String, message: String },
    #[error("{0}")]
    Clap(String),
    /// `--help` or `--version`; not a failure.
    #[error("{0}")]
    Help(String),
}

fn invalid(key: &str, message: impl Into<String>) -> UsageError {
    UsageError::Invalid {
        key: key.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Decay,
    Sweep,
    Critical,
    CoupleCheck,
    Invade,
    Paths,
    Perc,
    Snapshot,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Decay => "decay",
            Command::Sweep => "sweep",
            Command::Critical => "critical",
            Command::CoupleCheck => "couple-check",
            Command::Invade => "invade",
            Command::Paths => "paths",
            Command::Perc => "perc",
            Command::Snapshot => "snapshot",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Pgm,
    Ascii,
}

/// Command-line flags. Every value flag is also a config-file key of the
/// same name; flags win over the file.
#[derive(Debug, Parser)]
#[command(name = "kcontact", version, about = "Knowledge contact process simulator")]
struct Cli {
    #[arg(value_enum)]
    command: Option<Command>,
    /// `key = value` file; `#` starts a comment
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    mu: Option<String>,
    /// Second process rate for couple-check
    #[arg(long)]
    lambda2: Option<String>,
    /// Second process learning rate for couple-check
    #[arg(long)]
    mu2: Option<String>,
    /// Comma-separated λ grid for sweep
    #[arg(long)]
    lambdas: Option<String>,
    /// Comma-separated μ grid for sweep
    #[arg(long)]
    mus: Option<String>,
    /// torus, box or lazy
    #[arg(long)]
    domain: Option<String>,
    /// Odd linear size of the torus or box
    #[arg(long)]
    size: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    #[arg(long)]
    output: Option<String>,
    /// bounded, unbounded, contact or star
    #[arg(long)]
    kind: Option<String>,
    /// Comma-separated sample times
    #[arg(long)]
    times: Option<String>,
    #[arg(long = "snapshot-time")]
    snapshot_time: Option<String>,
    /// Worker threads for replicas
    #[arg(long)]
    jobs: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// lambda or mu
    #[arg(long)]
    direction: Option<String>,
    /// Parameter held fixed while bisecting
    #[arg(long)]
    fixed: Option<String>,
    /// `lo,hi`
    #[arg(long)]
    bracket: Option<String>,
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    level: Option<String>,
    /// pgm or ascii
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    cap: Option<String>,
    #[arg(long = "clamp-tol")]
    clamp_tol: Option<String>,
}

impl Cli {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("dim", &self.dim),
            ("lambda", &self.lambda),
            ("mu", &self.mu),
            ("lambda2", &self.lambda2),
            ("mu2", &self.mu2),
            ("lambdas", &self.lambdas),
            ("mus", &self.mus),
            ("domain", &self.domain),
            ("size", &self.size),
            ("horizon", &self.horizon),
            ("replicas", &self.replicas),
            ("seed", &self.seed),
            ("delta", &self.delta),
            ("output", &self.output),
            ("kind", &self.kind),
            ("times", &self.times),
            ("snapshot-time", &self.snapshot_time),
            ("jobs", &self.jobs),
            ("epsilon", &self.epsilon),
            ("direction", &self.direction),
            ("fixed", &self.fixed),
            ("bracket", &self.bracket),
            ("tolerance", &self.tolerance),
            ("level", &self.level),
            ("format", &self.format),
            ("depth", &self.depth),
            ("p", &self.p),
            ("budget", &self.budget),
            ("cap", &self.cap),
            ("clamp-tol", &self.clamp_tol),
        ]
    }
}

/// Fully resolved run configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub dim: usize,
    pub lambda: f64,
    /// Whether λ was given explicitly (invade otherwise uses λ_+).
    pub lambda_set: bool,
    pub mu: f64,
    pub lambda2: f64,
    pub mu2: f64,
    pub lambdas: Vec<f64>,
    pub mus: Vec<f64>,
    pub domain: DomainSpec,
    pub horizon: f64,
    pub replicas: usize,
    /// `None` until resolved from entropy by the runner.
    pub seed: Option<u64>,
    pub delta: f64,
    pub output: Option<PathBuf>,
    pub kind: ProcessKind,
    pub times: Vec<f64>,
    pub snapshot_time: f64,
    pub jobs: Option<usize>,
    pub epsilon: f64,
    pub direction: Direction,
    pub fixed: f64,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub level: f64,
    pub format: Format,
    pub depth: usize,
    pub p: f64,
    pub budget: u64,
    pub cap: usize,
    pub clamp_tol: f64,
}

/// Reads `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, UsageError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| UsageError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        let key = k.trim().replace('_', "-");
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, UsageError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| invalid(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn list(&self, key: &str, default: &[f64]) -> Result<Vec<f64>, UsageError> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| invalid(key, format!("cannot parse `{s}`: {e}"))))
                .collect(),
        }
    }
}

fn check(ok: bool, key: &str, message: impl Into<String>) -> Result<(), UsageError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, message))
    }
}

/// Parses flags (`argv[0]` is the program name) over the contents of a
/// config file. When `config_text` is `None` and `--config` is given, the
/// file is read from disk.
pub fn parse_config<I, T>(argv: I, config_text: Option<&str>) -> Result<RunConfig, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| match e.kind() {
        clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => UsageError::Help(e.to_string()),
        _ => UsageError::Clap(e.to_string()),
    })?;
    let file_text = match (config_text, &cli.config) {
        (Some(t), _) => Some(t.to_string()),
        (None, Some(path)) => Some(std::fs::read_to_string(path).map_err(|e| UsageError::ConfigFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?),
        (None, None) => None,
    };
    let mut values = match file_text {
        Some(t) => parse_config_text(&t)?,
        None => BTreeMap::new(),
    };
    let pairs = cli.pairs();
    let file_command = values.remove("command");
    for key in values.keys() {
        if !pairs.iter().any(|(k, _)| k == key) {
            return Err(UsageError::UnknownKey(key.clone()));
        }
    }
    for (k, v) in pairs {
        if let Some(v) = v {
            values.insert(k.to_string(), v.clone());
        }
    }
    let command = match (cli.command, file_command) {
        (Some(c), _) => c,
        (None, Some(name)) => Command::from_str(&name, true).map_err(|_| invalid("command", format!("unknown command `{name}`")))?,
        (None, None) => return Err(UsageError::MissingCommand),
    };
    resolve(command, Values(values))
}

fn resolve(command: Command, v: Values) -> Result<RunConfig, UsageError> {
    let dim: usize = v.num("dim", 1)?;
    check(dim >= 1, "dim", "must be >= 1")?;
    let kind = match v.raw("kind").unwrap_or("bounded") {
        "bounded" => ProcessKind::Bounded,
        "unbounded" => ProcessKind::Unbounded,
        "contact" => ProcessKind::Contact,
        "star" => ProcessKind::StarRestricted(Site::origin(dim)),
        other => return Err(invalid("kind", format!("unknown kind `{other}`"))),
    };
    let mu_ok = |key: &str, m: f64| -> Result<(), UsageError> {
        if kind == ProcessKind::Unbounded {
            check(m >= 0.0 && m.is_finite(), key, format!("must be finite and >= 0, got {m}"))
        } else {
            check((0.0..=1.0).contains(&m), key, format!("must lie in [0, 1] for {} kind, got {m}", kind.name()))
        }
    };
    let lambda: f64 = v.num("lambda", 1.0)?;
    check(lambda >= 0.0 && lambda.is_finite(), "lambda", "must be finite and >= 0")?;
    let mu: f64 = v.num("mu", 0.5)?;
    mu_ok("mu", mu)?;
    let lambda2: f64 = v.num("lambda2", lambda)?;
    check(lambda2 >= lambda && lambda2.is_finite(), "lambda2", "must be finite and >= lambda")?;
    let mu2: f64 = v.num("mu2", mu)?;
    mu_ok("mu2", mu2)?;
    check(mu2 >= mu, "mu2", "must be >= mu")?;
    let lambdas = v.list("lambdas", &[lambda])?;
    check(!lambdas.is_empty() && lambdas.iter().all(|l| *l >= 0.0 && l.is_finite()), "lambdas", "must be a nonempty list of rates >= 0")?;
    let mus = v.list("mus", &[mu])?;
    for m in &mus {
        mu_ok("mus", *m)?;
    }
    let size: u32 = v.num("size", 21)?;
    let default_domain = if matches!(command, Command::Decay | Command::Invade) { "lazy" } else { "torus" };
    let domain = match v.raw("domain").unwrap_or(default_domain) {
        "torus" => DomainSpec::torus(dim, size),
        "box" => {
            check(size % 2 == 1 && size >= 3, "size", "box size must be odd and >= 3")?;
            DomainSpec::free_box(dim, (size - 1) / 2)
        }
        "lazy" => DomainSpec::lazy(dim),
        other => return Err(invalid("domain", format!("unknown domain `{other}`"))),
    }
    .map_err(|e| invalid("size", e.to_string()))?;
    let horizon: f64 = v.num("horizon", 10.0)?;
    check(horizon > 0.0 && horizon.is_finite(), "horizon", "must be finite and > 0")?;
    let replicas: usize = v.num("replicas", 100)?;
    check(replicas >= 1, "replicas", "must be >= 1")?;
    let seed = match v.raw("seed") {
        None => None,
        Some(s) => Some(s.parse::<u64>().map_err(|e| invalid("seed", e.to_string()))?),
    };
    let delta: f64 = v.num("delta", 0.0)?;
    check(delta >= 0.0, "delta", "must be >= 0")?;
    let default_times: Vec<f64> = if command == Command::Decay {
        vec![0.5, 1.0, 2.0, 4.0]
    } else {
        vec![horizon]
    };
    let times = v.list("times", &default_times)?;
    check(!times.is_empty(), "times", "must be nonempty")?;
    if command == Command::Decay {
        check(times.iter().all(|t| *t >= 0.0 && t.is_finite()), "times", "must be finite and >= 0")?;
    } else {
        check(times.iter().all(|t| (0.0..=horizon).contains(t)), "times", format!("must lie in [0, {horizon}]"))?;
        check(times.windows(2).all(|w| w[0] <= w[1]), "times", "must be nondecreasing")?;
    }
    let snapshot_time: f64 = v.num("snapshot-time", horizon)?;
    check((0.0..=horizon).contains(&snapshot_time), "snapshot-time", format!("must lie in [0, {horizon}]"))?;
    let jobs = match v.raw("jobs") {
        None => None,
        Some(s) => {
            let n: usize = s.parse().map_err(|e: std::num::ParseIntError| invalid("jobs", e.to_string()))?;
            check(n >= 1, "jobs", "must be >= 1")?;
            Some(n)
        }
    };
    let epsilon: f64 = v.num("epsilon", 0.2)?;
    check(epsilon > 0.0 && epsilon < 2.0, "epsilon", "must lie in (0, 2)")?;
    let direction = match v.raw("direction").unwrap_or("lambda") {
        "lambda" => Direction::Lambda,
        "mu" => Direction::Mu,
        other => return Err(invalid("direction", format!("expected lambda or mu, got `{other}`"))),
    };
    let fixed: f64 = v.num("fixed", if direction == Direction::Lambda { mu } else { lambda })?;
    let default_bracket = if direction == Direction::Lambda { [0.5, 8.0] } else { [0.0, 1.0] };
    let b = v.list("bracket", &default_bracket)?;
    check(b.len() == 2 && b[0] < b[1], "bracket", "expected `lo,hi` with lo < hi")?;
    let bracket = (b[0], b[1]);
    match direction {
        Direction::Lambda => {
            mu_ok("fixed", fixed)?;
            check(bracket.0 >= 0.0, "bracket", "rates must be >= 0")?;
        }
        Direction::Mu => {
            check(fixed >= 0.0, "fixed", "rate must be >= 0")?;
            mu_ok("bracket", bracket.0)?;
            mu_ok("bracket", bracket.1)?;
        }
    }
    let tolerance: f64 = v.num("tolerance", 0.05)?;
    check(tolerance > 0.0, "tolerance", "must be > 0")?;
    let level: f64 = v.num("level", 0.5)?;
    check(level > 0.0 && level <= 1.0, "level", "must lie in (0, 1]")?;
    let format = match v.raw("format").unwrap_or("pgm") {
        "pgm" => Format::Pgm,
        "ascii" => Format::Ascii,
        other => return Err(invalid("format", format!("expected pgm or ascii, got `{other}`"))),
    };
    let depth: usize = v.num("depth", 20)?;
    let p: f64 = v.num("p", 0.7)?;
    check((0.0..=1.0).contains(&p), "p", "must lie in [0, 1]")?;
    let budget: u64 = v.num("budget", kcontact::experiments::DEFAULT_EVENT_BUDGET)?;
    check(budget >= 1, "budget", "must be >= 1")?;
    let cap: usize = v.num("cap", kcontact::analysis::DEFAULT_PATH_CAP)?;
    check(cap >= 1, "cap", "must be >= 1")?;
    let clamp_tol: f64 = v.num("clamp-tol", DEFAULT_CLAMP_TOL)?;
    check((0.0..0.5).contains(&clamp_tol), "clamp-tol", "must lie in [0, 0.5)")?;

    // command-specific conflicts
    let finite = domain.is_finite();
    let needs_finite = matches!(
        command,
        Command::Sweep | Command::Critical | Command::CoupleCheck | Command::Paths | Command::Snapshot
    );
    check(!needs_finite || finite, "domain", format!("{} needs a finite domain", command.name()))?;
    if command == Command::Snapshot && format == Format::Pgm {
        check(dim == 2, "format", "pgm snapshots need a 2-d domain")?;
    }
    if matches!(command, Command::Sweep | Command::Critical) {
        check(
            matches!(kind, ProcessKind::Bounded | ProcessKind::Contact),
            "kind",
            format!("{} supports bounded and contact kinds", command.name()),
        )?;
    }
    if command == Command::CoupleCheck {
        check(kind == ProcessKind::Bounded, "kind", "couple-check couples two bounded processes")?;
    }
    if command == Command::Invade {
        check(mu > 0.0, "mu", "star invasion needs mu > 0")?;
    }
    Ok(RunConfig {
        command,
        dim,
        lambda,
        lambda_set: v.raw("lambda").is_some(),
        mu,
        lambda2,
        mu2,
        lambdas,
        mus,
        domain,
        horizon,
        replicas,
        seed,
        delta,
        output: v.raw("output").map(PathBuf::from),
        kind,
        times,
        snapshot_time,
        jobs,
        epsilon,
        direction,
        fixed,
        bracket,
        tolerance,
        level,
        format,
        depth,
        p,
        budget,
        cap,
        clamp_tol,
    })
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// `key = value` lines of the resolved configuration, in a fixed order.
    pub fn describe(&self) -> Vec<(String, String)> {
        let domain = match self.domain.mode {
            kcontact::DomainMode::Torus { .. } => "torus",
            kcontact::DomainMode::FreeBox { .. } => "box",
            kcontact::DomainMode::Lazy => "lazy",
        };
        let kind = match self.kind {
            ProcessKind::Bounded => "bounded",
            ProcessKind::Unbounded => "unbounded",
            ProcessKind::Contact => "contact",
            ProcessKind::StarRestricted(_) => "star",
        };
        let out = vec![
            ("command", self.command.name().to_string()),
            ("seed", self.seed.map_or("unset".into(), |s| s.to_string())),
            ("dim", self.dim.to_string()),
            ("lambda", self.lambda.to_string()),
            ("mu", self.mu.to_string()),
            ("lambda2", self.lambda2.to_string()),
            ("mu2", self.mu2.to_string()),
            ("lambdas", join(&self.lambdas)),
            ("mus", join(&self.mus)),
            ("domain", domain.to_string()),
            ("size", self.domain.linear_size().map_or("inf".into(), |n| n.to_string())),
            ("horizon", self.horizon.to_string()),
            ("replicas", self.replicas.to_string()),
            ("delta", self.delta.to_string()),
            ("kind", kind.to_string()),
            ("times", join(&self.times)),
            ("snapshot-time", self.snapshot_time.to_string()),
            ("epsilon", self.epsilon.to_string()),
            (
                "direction",
                match self.direction {
                    Direction::Lambda => "lambda".into(),
                    Direction::Mu => "mu".into(),
                },
            ),
            ("fixed", self.fixed.to_string()),
            ("bracket", format!("{},{}", self.bracket.0, self.bracket.1)),
            ("tolerance", self.tolerance.to_string()),
            ("level", self.level.to_string()),
            (
                "format",
                match self.format {
                    Format::Pgm => "pgm".into(),
                    Format::Ascii => "ascii".into(),
                },
            ),
            ("depth", self.depth.to_string()),
            ("p", self.p.to_string()),
            ("budget", self.budget.to_string()),
            ("cap", self.cap.to_string()),
            ("clamp-tol", self.clamp_tol.to_string()),
        ];
        // jobs is left out: the thread count never changes results
        out.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        std::iter::once("kcontact".to_string())
            .chain(s.split_whitespace().map(String::from))
            .collect()
    }

    #[test]
    fn decay_dispatch() {
        let c = parse_config(argv("--lambda 1 --mu 0.25 --dim 1 decay"), None).unwrap();
        assert_eq!(c.command, Command::Decay);
        assert_eq!((c.lambda, c.mu, c.dim), (1.0, 0.25, 1));
        assert_eq!(c.times, vec![0.5, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn mu_above_one_rejected_for_bounded() {
        let err = parse_config(argv("--mu 1.2 simulate"), None).unwrap_err();
        assert!(matches!(err, UsageError::Invalid { ref key, .. } if key == "mu"), "{err}");
        assert!(parse_config(argv("--mu 1.2 --kind unbounded simulate"), None).is_ok());
    }

    #[test]
    fn config_file_alone() {
        let text = "# run\ncommand = sweep\nlambdas = 1, 2\nmus = 0.5\nsize = 11  # small\nseed = 4\n";
        let c = parse_config(argv(""), Some(text)).unwrap();
        assert_eq!(c.command, Command::Sweep);
        assert_eq!(c.lambdas, vec![1.0, 2.0]);
        assert_eq!(c.domain, DomainSpec::torus(1, 11).unwrap());
        assert_eq!(c.seed, Some(4));
    }

    #[test]
    fn flags_override_file() {
        let c = parse_config(argv("--size 7 simulate"), Some("size = 11\nmu = 0.3")).unwrap();
        assert_eq!(c.domain.linear_size(), Some(7));
        assert_eq!(c.mu, 0.3);
    }

    #[test]
    fn unknown_key_rejected() {
        assert_eq!(
            parse_config(argv("simulate"), Some("lamda = 2")).unwrap_err(),
            UsageError::UnknownKey("lamda".into())
        );
        assert!(matches!(parse_config(argv("simulate"), Some("just words")), Err(UsageError::Syntax { .. })));
        assert!(matches!(parse_config(argv("--bogus 1 simulate"), None), Err(UsageError::Clap(_))));
        assert_eq!(parse_config(argv(""), None).unwrap_err(), UsageError::MissingCommand);
    }

    #[test]
    fn conflicts_name_the_key() {
        let key = |s: &str| match parse_config(argv(s), None).unwrap_err() {
            UsageError::Invalid { key, .. } => key,
            e => panic!("{e}"),
        };
        assert_eq!(key("--domain lazy sweep"), "domain");
        assert_eq!(key("--size 4 simulate"), "size");
        assert_eq!(key("--times 1,20 simulate"), "times");
        assert_eq!(key("--dim 1 snapshot"), "format");
        assert_eq!(key("--lambda 2 --lambda2 1 couple-check"), "lambda2");
        assert_eq!(key("--epsilon 2 invade"), "epsilon");
    }
}
