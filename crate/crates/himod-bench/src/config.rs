//! Flat `key = value` experiment configuration.
//!
//! One key per line, nested keys dotted (`training.size`), `#` starts a comment. Lists are
//! comma separated; parameter intervals are written `lo:hi`. A file must set `problem`,
//! which selects the preset every other key overrides. Unknown keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use himod::affine::ParameterDomain;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    Adr,
    Stokes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    HiPod,
    HiRb,
    Both,
}

impl Method {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "hipod" => Method::HiPod,
            "hirb" => Method::HiRb,
            "both" => Method::Both,
            other => bail!("method must be hipod, hirb or both (got {other:?})"),
        })
    }

    pub fn pod(self) -> bool {
        self != Method::HiRb
    }

    pub fn rb(self) -> bool {
        self != Method::HiPod
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub length: f64,
    /// Wall oscillation amplitude of the ADR map.
    pub amplitude: f64,
    /// Channel height of the Stokes map.
    pub height: f64,
    pub elements: usize,
    pub modes: usize,
    pub modes_velocity: usize,
    pub modes_pressure: usize,
    pub nu_ref: f64,
    pub rho: f64,
    pub domain: ParameterDomain,
    pub query: Vec<f64>,
    pub training_size: usize,
    pub training_seed: u64,
    pub testing_size: usize,
    pub testing_seed: u64,
    pub n: usize,
    /// HiPOD energy tolerance; when set it replaces `n` for the HiPOD basis size.
    pub energy: Option<f64>,
    pub method: Method,
    pub greedy_seed: u64,
    pub eta_bar: f64,
    pub offline_sizes: Vec<usize>,
    pub speedup_sizes: Vec<usize>,
    pub repetitions: usize,
    pub timed_queries: usize,
    pub supremizers: usize,
    pub field_nx: usize,
    pub field_ny: usize,
    pub out: PathBuf,
}

impl ExperimentConfig {
    pub fn preset(problem: ProblemKind) -> Self {
        match problem {
            ProblemKind::Adr => ExperimentConfig {
                problem,
                length: 4.0,
                amplitude: 0.2,
                height: 1.0,
                elements: 80,
                modes: 8,
                modes_velocity: 7,
                modes_pressure: 5,
                nu_ref: 5.0,
                rho: 1.0,
                domain: ParameterDomain::new(vec![(1.0, 10.0), (15.0, 25.0), (70.0, 80.0), (20.0, 30.0)]).unwrap(),
                query: vec![5.0, 20.0, 75.0, 25.0],
                training_size: 100,
                training_seed: 42,
                testing_size: 100,
                testing_seed: 7,
                n: 20,
                energy: None,
                method: Method::Both,
                greedy_seed: 42,
                eta_bar: 0.0,
                offline_sizes: vec![25, 50, 100, 200, 300, 400, 500],
                speedup_sizes: vec![1, 2, 3, 4],
                repetitions: 5,
                timed_queries: 100,
                supremizers: 4,
                field_nx: 161,
                field_ny: 21,
                out: PathBuf::from("out"),
            },
            ProblemKind::Stokes => ExperimentConfig {
                problem,
                length: 6.0,
                amplitude: 0.0,
                height: 1.0,
                elements: 80,
                modes: 8,
                modes_velocity: 7,
                modes_pressure: 5,
                nu_ref: 5.0,
                rho: 1.0,
                domain: ParameterDomain::new(vec![(1.0, 10.0), (5.0, 15.0), (0.0, 10.0), (1.0, 10.0), (0.0, 10.0)])
                    .unwrap(),
                query: vec![5.0, 10.0, 0.0, 3.0, 0.0],
                training_size: 100,
                training_seed: 42,
                testing_size: 100,
                testing_seed: 7,
                n: 4,
                ..Self::preset(ProblemKind::Adr)
            },
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').with_context(|| format!("line {}: expected key = value", no + 1))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            ensure!(!k.is_empty(), "line {}: empty key", no + 1);
            if entries.insert(k.clone(), v).is_some() {
                bail!("line {}: duplicate key {k}", no + 1);
            }
        }
        let problem = match entries.remove("problem").as_deref() {
            Some("adr") => ProblemKind::Adr,
            Some("stokes") => ProblemKind::Stokes,
            Some(other) => bail!("problem must be adr or stokes (got {other:?})"),
            None => bail!("missing key `problem`"),
        };
        let mut c = Self::preset(problem);
        for (k, v) in &entries {
            c.set(k, v).with_context(|| format!("key {k}"))?;
        }
        // Preset sweeps follow a smaller rom.n; explicit ones are validated as written.
        if !entries.contains_key("speedup.sizes") {
            c.speedup_sizes.retain(|&s| s <= c.n);
        }
        if !entries.contains_key("infsup.supremizers") {
            c.supremizers = c.supremizers.min(c.n);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "map.length" => self.length = num(v)?,
            "map.amplitude" => self.amplitude = num(v)?,
            "map.height" => self.height = num(v)?,
            "mesh.elements" => self.elements = num(v)?,
            "modes.state" => self.modes = num(v)?,
            "modes.velocity" => self.modes_velocity = num(v)?,
            "modes.pressure" => self.modes_pressure = num(v)?,
            "robin.nu_ref" => self.nu_ref = num(v)?,
            "robin.rho" => self.rho = num(v)?,
            "domain" => {
                let intervals = list(v, |s| {
                    let (a, b) = s.split_once(':').with_context(|| format!("interval {s:?} is not lo:hi"))?;
                    Ok((num(a)?, num(b)?))
                })?;
                self.domain = ParameterDomain::new(intervals)?;
            }
            "query" => self.query = list(v, num)?,
            "training.size" => self.training_size = num(v)?,
            "training.seed" => self.training_seed = num(v)?,
            "testing.size" => self.testing_size = num(v)?,
            "testing.seed" => self.testing_seed = num(v)?,
            "rom.n" => self.n = num(v)?,
            "rom.energy" => self.energy = Some(num(v)?),
            "rom.method" => self.method = Method::parse(v)?,
            "greedy.seed" => self.greedy_seed = num(v)?,
            "greedy.eta_bar" => self.eta_bar = num(v)?,
            "offline.sizes" => self.offline_sizes = list(v, num)?,
            "speedup.sizes" => self.speedup_sizes = list(v, num)?,
            "timing.repetitions" => self.repetitions = num(v)?,
            "timing.queries" => self.timed_queries = num(v)?,
            "infsup.supremizers" => self.supremizers = num(v)?,
            "field.nx" => self.field_nx = num(v)?,
            "field.ny" => self.field_ny = num(v)?,
            "output" => self.out = PathBuf::from(v),
            _ => bail!("unknown key"),
        }
        Ok(())
    }

    pub fn n_params(&self) -> usize {
        match self.problem {
            ProblemKind::Adr => 4,
            ProblemKind::Stokes => 5,
        }
    }

    /// Structural checks that need no assembly; the problem builders check the rest.
    pub fn validate(&self) -> Result<()> {
        ensure!(self.training_size > 0, "training.size (M) must be positive");
        ensure!(self.testing_size > 0, "testing.size must be positive");
        ensure!(self.n > 0, "rom.n must be positive");
        ensure!(self.n <= self.training_size, "rom.n = {} exceeds training.size = {}", self.n, self.training_size);
        if let Some(eps) = self.energy {
            ensure!(eps > 0.0 && eps < 1.0, "rom.energy must lie in (0, 1)");
        }
        ensure!(self.elements > 0, "mesh.elements must be positive");
        ensure!(self.length > 0.0, "map.length must be positive");
        match self.problem {
            ProblemKind::Adr => ensure!(self.modes > 0, "modes.state must be positive"),
            ProblemKind::Stokes => ensure!(
                self.modes_pressure > 0 && self.modes_velocity == self.modes_pressure + 2,
                "modes.velocity must equal modes.pressure + 2 (got {}, {})",
                self.modes_velocity,
                self.modes_pressure
            ),
        }
        ensure!(
            self.domain.dim() == self.n_params(),
            "domain has {} intervals, the problem has {} parameters",
            self.domain.dim(),
            self.n_params()
        );
        ensure!(self.domain.contains(&self.query), "query {:?} lies outside the parameter domain", self.query);
        ensure!(self.eta_bar >= 0.0, "greedy.eta_bar must be non-negative");
        ensure!(!self.offline_sizes.is_empty(), "offline.sizes is empty");
        ensure!(self.offline_sizes.windows(2).all(|w| w[0] < w[1]), "offline.sizes must be increasing");
        ensure!(self.offline_sizes[0] >= self.n, "offline.sizes must all be at least rom.n");
        ensure!(self.speedup_sizes.iter().all(|&s| s >= 1 && s <= self.n), "speedup.sizes must lie in 1..=rom.n");
        ensure!(self.repetitions > 0, "timing.repetitions must be positive");
        ensure!(self.timed_queries > 0, "timing.queries must be positive");
        ensure!(self.supremizers <= self.n, "infsup.supremizers must not exceed rom.n");
        ensure!(self.field_nx >= 2 && self.field_ny >= 2, "field grid needs at least 2x2 points");
        Ok(())
    }
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.trim().parse::<T>().with_context(|| format!("cannot parse {s:?}"))
}

fn list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(|p| f(p.trim())).collect()
}
