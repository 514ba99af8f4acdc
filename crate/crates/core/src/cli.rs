//! `lipcert {gen|estimate|export|certify} --config <path> [overrides]`.
//!
//! A JSON config file describes one run; command-line flags override it.
//! Reports go to stdout as single-line JSON, logs to stderr.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::certify::{self, Certifier, PairwiseLipschitzMatrix};
use crate::conic::{export_sdpa, Settings};
use crate::error::{Error, Result};
use crate::network::{load_network, random_network_with_outputs, save_network, InputRegion, Network};
use crate::pop::PopProblem;
use crate::relaxation::{
    build_pop, estimate_size, relax_pop, solve_relaxation, upper_bound, CubicMode, Method, Relaxation, RelaxationSpec,
};
use crate::sampler;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_GUARD: i32 = 4;

pub const MAX_MOMENT_VARS: usize = 5_000_000;
pub const MAX_PSD_BLOCKS: usize = 100_000;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub sizes: Vec<usize>,
    pub sparsity: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub outputs: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionConfig {
    /// `global` or `local`.
    pub kind: String,
    pub radius: Option<f64>,
    pub center: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
}

impl Default for RegionConfig {
    fn default() -> Self {
        Self {
            kind: "global".into(),
            radius: None,
            center: None,
            epsilon: None,
        }
    }
}

/// One run, as read from the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Stored network (JSON).
    pub network: Option<PathBuf>,
    /// Random banded network.
    pub random: Option<RandomSpec>,
    /// Generic POP (JSON); relaxation methods only.
    pub pop: Option<PathBuf>,
    pub region: RegionConfig,
    /// `shor`, `hr1`, `hr2`, `lbs` or `oracle`.
    pub method: String,
    pub cubic_mode: CubicMode,
    pub ball_constraints: bool,
    pub settings: Settings,
    pub label: usize,
    /// Bound every pair `c_i − c_j` instead of one label.
    pub pairwise: bool,
    pub samples: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub epsilons: Vec<f64>,
    /// Precomputed bound for binary certification.
    pub bound: Option<f64>,
    /// Precomputed pairwise matrix (JSON) for multiclass certification.
    pub matrix: Option<PathBuf>,
    pub force: bool,
    pub threads: Option<usize>,
    /// Report `solve_time_s` as zero so reports are byte-identical across runs.
    pub no_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            network: None,
            random: None,
            pop: None,
            region: RegionConfig::default(),
            method: "hr2".into(),
            cubic_mode: CubicMode::PerTriple,
            ball_constraints: true,
            settings: Settings::default(),
            label: 0,
            pairwise: false,
            samples: sampler::DEFAULT_SAMPLES,
            seed: 0,
            output: None,
            dataset: None,
            epsilons: certify::default_epsilons(),
            bound: None,
            matrix: None,
            force: false,
            threads: None,
            no_timing: false,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "lipcert", version, about = "Upper bounds on Lipschitz constants of ReLU networks")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Generate a random banded network and save it.
    Gen(Overrides),
    /// Bound the Lipschitz constant (or compute a lower bound).
    Estimate(Overrides),
    /// Write a relaxation in SDPA sparse format.
    Export(Overrides),
    /// Certified-ratio sweep over a dataset.
    Certify(Overrides),
}

#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    network: Option<PathBuf>,
    /// Layer sizes of a random network, e.g. `80,80`.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    sparsity: Option<usize>,
    #[arg(long)]
    net_seed: Option<u64>,
    #[arg(long)]
    outputs: Option<usize>,
    #[arg(long)]
    pop: Option<PathBuf>,
    /// `global` or `local`.
    #[arg(long)]
    region: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    center: Option<Vec<f64>>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    cubic_mode: Option<String>,
    #[arg(long)]
    no_balls: bool,
    #[arg(long)]
    label: Option<usize>,
    #[arg(long)]
    pairwise: bool,
    #[arg(long)]
    samples: Option<usize>,
    /// Seed of the sampler.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    epsilons: Option<Vec<f64>>,
    #[arg(long)]
    bound: Option<f64>,
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    feas_tol: Option<f64>,
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    time_limit: Option<f64>,
    /// Skip the resource guard.
    #[arg(long)]
    force: bool,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    no_timing: bool,
}

impl Overrides {
    fn apply(self, mut c: RunConfig) -> Result<RunConfig> {
        if let Some(v) = self.network {
            c.network = Some(v);
            c.random = None;
        }
        if self.sizes.is_some() || self.sparsity.is_some() || self.net_seed.is_some() || self.outputs.is_some() {
            let mut r = c.random.take().unwrap_or_default();
            if let Some(v) = self.sizes {
                r.sizes = v;
            }
            if let Some(v) = self.sparsity {
                r.sparsity = v;
            }
            if let Some(v) = self.net_seed {
                r.seed = v;
            }
            r.outputs = self.outputs.unwrap_or(r.outputs.max(1));
            if r.sparsity == 0 {
                r.sparsity = r.sizes.iter().copied().max().unwrap_or(1);
            }
            c.random = Some(r);
            c.network = None;
        }
        if let Some(v) = self.pop {
            c.pop = Some(v);
        }
        if let Some(v) = self.region {
            c.region.kind = v;
        }
        if let Some(v) = self.radius {
            c.region.radius = Some(v);
        }
        if let Some(v) = self.center {
            c.region.center = Some(v);
        }
        if let Some(v) = self.epsilon {
            c.region.epsilon = Some(v);
        }
        if let Some(v) = self.method {
            c.method = v;
        }
        if let Some(v) = self.cubic_mode {
            c.cubic_mode = v.parse()?;
        }
        if self.no_balls {
            c.ball_constraints = false;
        }
        if let Some(v) = self.label {
            c.label = v;
        }
        c.pairwise |= self.pairwise;
        if let Some(v) = self.samples {
            c.samples = v;
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.output {
            c.output = Some(v);
        }
        if let Some(v) = self.dataset {
            c.dataset = Some(v);
        }
        if let Some(v) = self.epsilons {
            c.epsilons = v;
        }
        if let Some(v) = self.bound {
            c.bound = Some(v);
        }
        if let Some(v) = self.matrix {
            c.matrix = Some(v);
        }
        if let Some(v) = self.feas_tol {
            c.settings.feas_tol = v;
        }
        if let Some(v) = self.gap_tol {
            c.settings.rel_gap_tol = v;
        }
        if let Some(v) = self.max_iter {
            c.settings.max_iter = v;
        }
        if let Some(v) = self.time_limit {
            c.settings.time_limit = Some(v);
        }
        c.force |= self.force;
        if let Some(v) = self.threads {
            c.threads = Some(v);
        }
        c.no_timing |= self.no_timing;
        Ok(c)
    }
}

/// Parsed `method` field.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    Relaxation(Method),
    Lbs,
    Oracle,
}

impl std::str::FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lbs" => Ok(MethodChoice::Lbs),
            "oracle" => Ok(MethodChoice::Oracle),
            other => Ok(MethodChoice::Relaxation(other.parse()?)),
        }
    }
}

impl MethodChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            MethodChoice::Relaxation(m) => m.as_str(),
            MethodChoice::Lbs => "lbs",
            MethodChoice::Oracle => "oracle",
        }
    }
}

impl RunConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("config: {e}")))
    }

    pub fn method_choice(&self) -> Result<MethodChoice> {
        self.method.parse()
    }

    pub fn spec(&self) -> Result<RelaxationSpec> {
        let m = match self.method_choice()? {
            MethodChoice::Relaxation(m) => m,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "method '{}' is not a relaxation",
                    other.as_str()
                )))
            }
        };
        Ok(RelaxationSpec {
            method: m,
            cubic_mode: self.cubic_mode,
            settings: self.settings.clone(),
            ball_constraints: self.ball_constraints,
        })
    }

    /// Loads or generates the network; exactly one source must be given.
    pub fn load_network(&self) -> Result<Network> {
        match (&self.network, &self.random) {
            (Some(p), None) => load_network(p),
            (None, Some(r)) => random_network_with_outputs(&r.sizes, r.sparsity, r.outputs.max(1), r.seed),
            (Some(_), Some(_)) => Err(Error::InvalidArgument("give either `network` or `random`, not both".into())),
            (None, None) => Err(Error::InvalidArgument("no network source (`network` or `random`)".into())),
        }
    }

    pub fn input_region(&self, dim: usize) -> Result<InputRegion> {
        match self.region.kind.as_str() {
            "global" => {
                if self.region.center.is_some() || self.region.epsilon.is_some() {
                    return Err(Error::InvalidArgument("global region takes only a radius".into()));
                }
                InputRegion::global_with_radius(dim, self.region.radius.unwrap_or(crate::network::DEFAULT_GLOBAL_RADIUS))
            }
            "local" => {
                if self.region.radius.is_some() {
                    return Err(Error::InvalidArgument("local region takes `epsilon`, not `radius`".into()));
                }
                let center = self
                    .region
                    .center
                    .clone()
                    .ok_or_else(|| Error::InvalidArgument("local region needs a center".into()))?;
                InputRegion::local(center, self.region.epsilon.unwrap_or(crate::network::DEFAULT_LOCAL_EPSILON))
            }
            other => Err(Error::InvalidArgument(format!("unknown region kind '{other}'"))),
        }
    }

    fn guard(&self, moment_vars: usize, psd_blocks: usize) -> Result<()> {
        if self.force {
            return Ok(());
        }
        if moment_vars > MAX_MOMENT_VARS || psd_blocks > MAX_PSD_BLOCKS {
            return Err(Error::ResourceGuard(format!(
                "relaxation needs about {moment_vars} moment variables and {psd_blocks} PSD blocks \
                 (limits {MAX_MOMENT_VARS} and {MAX_PSD_BLOCKS}); pass --force to try anyway"
            )));
        }
        Ok(())
    }
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Solver { .. } => EXIT_SOLVER,
        Error::ResourceGuard(_) | Error::Budget(_) => EXIT_GUARD,
        _ => EXIT_CONFIG,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Parse(_) | Error::ParseLine { .. } => "parse",
        Error::Solver { .. } => "solver",
        Error::ResourceGuard(_) => "resource_guard",
        Error::Budget(_) => "budget",
        Error::Containment(_) => "containment",
        _ => "invalid_argument",
    }
}

pub fn error_json(e: &Error) -> String {
    json!({"error": {"kind": error_kind(e), "message": e.to_string()}}).to_string()
}

/// Runs one command line (including the program name). Returns the exit code
/// and the single stdout line.
pub fn run<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (EXIT_OK, e.to_string().trim_end().to_string()),
                _ => (EXIT_CONFIG, error_json(&Error::InvalidArgument(e.to_string().trim().to_string()))),
            };
        }
    };
    let (cmd, ov) = match cli.command {
        Cmd::Gen(o) => ("gen", o),
        Cmd::Estimate(o) => ("estimate", o),
        Cmd::Export(o) => ("export", o),
        Cmd::Certify(o) => ("certify", o),
    };
    match dispatch(cmd, ov) {
        Ok(v) => (EXIT_OK, v.to_string()),
        Err(e) => (exit_code(&e), error_json(&e)),
    }
}

fn dispatch(cmd: &str, ov: Overrides) -> Result<serde_json::Value> {
    let base = match &ov.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            RunConfig::from_json_str(&text)?
        }
        None => RunConfig::default(),
    };
    let cfg = ov.apply(base)?;
    let threads = cfg
        .threads
        .or_else(|| std::env::var("LIPCERT_THREADS").ok().and_then(|v| v.parse().ok()));
    let work = || match cmd {
        "gen" => cmd_gen(&cfg),
        "estimate" => cmd_estimate(&cfg),
        "export" => cmd_export(&cfg),
        _ => cmd_certify(&cfg),
    };
    match threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

pub fn cmd_gen(cfg: &RunConfig) -> Result<serde_json::Value> {
    let r = cfg
        .random
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("gen needs a `random` network spec".into()))?;
    let out = cfg
        .output
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("gen needs an output path".into()))?;
    let net = cfg.load_network()?;
    save_network(&net, out)?;
    Ok(json!({
        "command": "gen",
        "output": out,
        "layer_sizes": net.layer_sizes(),
        "sparsity": r.sparsity,
        "seed": r.seed,
        "outputs": net.classes(),
    }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub method: String,
    pub bound: f64,
    pub status: String,
    pub solve_time_s: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_moment_vars: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_psd_blocks: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn elapsed(cfg: &RunConfig, start: Instant) -> f64 {
    if cfg.no_timing {
        0.0
    } else {
        start.elapsed().as_secs_f64()
    }
}

fn assemble(cfg: &RunConfig, net: Option<&Network>, c: Option<&[f64]>) -> Result<Relaxation> {
    let spec = cfg.spec()?;
    let pop = match (net, &cfg.pop) {
        (Some(net), None) => {
            let est = estimate_size(net.layer_sizes(), &spec);
            cfg.guard(est.moment_vars, est.psd_blocks)?;
            let region = cfg.input_region(net.input_dim())?;
            let c = match c {
                Some(c) => c.to_vec(),
                None => net.output_row(cfg.label)?.to_vec(),
            };
            build_pop(net, &region, &c, &spec)?
        }
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            PopProblem::from_json_str(&text)?
        }
        _ => unreachable!("callers resolve the source"),
    };
    let r = relax_pop(&pop, &spec)?;
    cfg.guard(r.n_moment_vars(), r.n_psd_blocks)?;
    Ok(r)
}

/// Network, or `None` for a generic POP source.
fn source(cfg: &RunConfig) -> Result<Option<Network>> {
    if cfg.pop.is_some() {
        if cfg.network.is_some() || cfg.random.is_some() {
            return Err(Error::InvalidArgument("give either a network or a `pop`, not both".into()));
        }
        return Ok(None);
    }
    cfg.load_network().map(Some)
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<serde_json::Value> {
    let start = Instant::now();
    let choice = cfg.method_choice()?;
    let net = source(cfg)?;
    if net.is_none() && !matches!(choice, MethodChoice::Relaxation(_)) {
        return Err(Error::InvalidArgument(format!("method '{}' needs a network", choice.as_str())));
    }
    if cfg.pairwise {
        let net = net.ok_or_else(|| Error::InvalidArgument("pairwise bounds need a network".into()))?;
        let spec = cfg.spec()?;
        let est = estimate_size(net.layer_sizes(), &spec);
        cfg.guard(est.moment_vars, est.psd_blocks)?;
        let region = cfg.input_region(net.input_dim())?;
        let m = certify::pairwise_matrix(&net, &region, &spec)?;
        if let Some(out) = &cfg.output {
            let text = serde_json::to_string(&m).map_err(|e| Error::Parse(e.to_string()))?;
            std::fs::write(out, text).map_err(|e| Error::io(out, e))?;
        }
        return Ok(json!({
            "method": spec.method.as_str(),
            "pairwise": m.to_rows(),
            "n_solves": m.n_solves,
            "solve_time_s": elapsed(cfg, start),
        }));
    }
    let report = match (choice, net) {
        (MethodChoice::Lbs, Some(net)) => {
            let region = cfg.input_region(net.input_dim())?;
            let r = sampler::lbs(&net, &region, cfg.label, cfg.samples, cfg.seed)?;
            BoundReport {
                method: "lbs".into(),
                bound: r.lower_bound,
                status: "sampled".into(),
                solve_time_s: elapsed(cfg, start),
                n_moment_vars: None,
                n_psd_blocks: None,
                seed: Some(cfg.seed),
            }
        }
        (MethodChoice::Oracle, Some(net)) => {
            let region = cfg.input_region(net.input_dim())?;
            let v = sampler::exact_lipschitz_1hidden(&net, &region, cfg.label)?;
            BoundReport {
                method: "oracle".into(),
                bound: v,
                status: "exact".into(),
                solve_time_s: elapsed(cfg, start),
                n_moment_vars: None,
                n_psd_blocks: None,
                seed: None,
            }
        }
        (MethodChoice::Relaxation(m), net) => {
            let r = assemble(cfg, net.as_ref(), None)?;
            let b = solve_relaxation(&r, m, &cfg.settings, "")?;
            BoundReport {
                method: m.as_str().into(),
                bound: b.value,
                status: b.status.as_str().into(),
                solve_time_s: elapsed(cfg, start),
                n_moment_vars: Some(b.n_moment_vars),
                n_psd_blocks: Some(b.n_psd_blocks),
                seed: None,
            }
        }
        _ => unreachable!("checked above"),
    };
    serde_json::to_value(report).map_err(|e| Error::Parse(e.to_string()))
}

pub fn cmd_export(cfg: &RunConfig) -> Result<serde_json::Value> {
    let out = cfg
        .output
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("export needs an output path".into()))?;
    let net = source(cfg)?;
    let r = assemble(cfg, net.as_ref(), None)?;
    export_sdpa(&r.problem, out)?;
    Ok(json!({
        "command": "export",
        "method": cfg.spec()?.method.as_str(),
        "output": out,
        "n_moment_vars": r.n_moment_vars(),
        "n_psd_blocks": r.n_psd_blocks,
        "equalities": r.problem.equalities.len(),
        "inequalities": r.problem.inequalities.len(),
    }))
}

pub fn cmd_certify(cfg: &RunConfig) -> Result<serde_json::Value> {
    let start = Instant::now();
    let net = cfg.load_network()?;
    let path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("certify needs a dataset".into()))?;
    let data = certify::load_dataset(path)?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("empty dataset".into()));
    }
    let region = cfg.input_region(net.input_dim())?;
    let (cert, method, bound) = if net.classes() == 1 {
        let (bound, method) = match cfg.bound {
            Some(b) => (b, "given".to_string()),
            None => match cfg.method_choice()? {
                MethodChoice::Lbs => {
                    return Err(Error::InvalidArgument(
                        "a sampled lower bound cannot certify robustness".into(),
                    ))
                }
                MethodChoice::Oracle => (sampler::exact_lipschitz_1hidden(&net, &region, 0)?, "oracle".into()),
                MethodChoice::Relaxation(m) => {
                    let spec = cfg.spec()?;
                    let est = estimate_size(net.layer_sizes(), &spec);
                    cfg.guard(est.moment_vars, est.psd_blocks)?;
                    let c = net.output_row(0)?.to_vec();
                    (upper_bound(&net, &region, &c, &spec)?.value, m.as_str().into())
                }
            },
        };
        (
            Certifier::Binary {
                bound,
                region: Some(region),
            },
            method,
            json!(bound),
        )
    } else {
        let m: PairwiseLipschitzMatrix = match &cfg.matrix {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                serde_json::from_str(&text).map_err(|e| Error::Parse(format!("pairwise matrix: {e}")))?
            }
            None => {
                let spec = cfg.spec()?;
                let est = estimate_size(net.layer_sizes(), &spec);
                cfg.guard(est.moment_vars, est.psd_blocks)?;
                certify::pairwise_matrix(&net, &region, &spec)?
            }
        };
        let method = m.method.as_str().to_string();
        let rows = json!(m.to_rows());
        (Certifier::Multiclass(m), method, rows)
    };
    let reports = certify::ratio_sweep(&net, &cert, &data, &cfg.epsilons)?;
    Ok(json!({
        "command": "certify",
        "method": method,
        "bound": bound,
        "reports": reports,
        "solve_time_s": elapsed(cfg, start),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_and_overrides() {
        let cfg = RunConfig::from_json_str(r#"{"random": {"sizes": [3, 4], "sparsity": 2, "seed": 5}, "method": "shor"}"#).unwrap();
        let ov = Overrides {
            method: Some("hr2".into()),
            net_seed: Some(9),
            ..Default::default()
        };
        let cfg = ov.apply(cfg).unwrap();
        assert_eq!(cfg.method, "hr2");
        assert_eq!(cfg.random.as_ref().unwrap().seed, 9);
        assert_eq!(cfg.random.as_ref().unwrap().sparsity, 2);
        assert!(RunConfig::from_json_str(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn regions() {
        let mut cfg = RunConfig::default();
        assert_eq!(cfg.input_region(2).unwrap().radius, 10.0);
        cfg.region.kind = "local".into();
        assert!(cfg.input_region(2).is_err());
        cfg.region.center = Some(vec![1.0, 2.0]);
        let r = cfg.input_region(2).unwrap();
        assert_eq!(r.radius, 0.1);
        assert_eq!(r.bounds(1), (1.9, 2.1));
    }

    #[test]
    fn exit_codes() {
        let (code, out) = run(["lipcert", "estimate", "--method", "hr2"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(out.contains("\"kind\":\"invalid_argument\""));
        let (code, _) = run(["lipcert", "estimate", "--sizes", "3000,3000", "--sparsity", "3000", "--method", "hr2"]);
        assert_eq!(code, EXIT_GUARD);
        let (code, _) = run(["lipcert", "frobnicate"]);
        assert_eq!(code, EXIT_CONFIG);
        let (code, out) = run(["lipcert", "estimate", "--sizes", "2,21", "--method", "oracle"]);
        assert_eq!(code, EXIT_GUARD, "{out}");
    }

    #[test]
    fn lbs_report_is_single_line_json() {
        let (code, out) = run([
            "lipcert", "estimate", "--sizes", "3,4", "--sparsity", "3", "--method", "lbs", "--samples", "100", "--no-timing",
        ]);
        assert_eq!(code, EXIT_OK, "{out}");
        assert!(!out.contains('\n'));
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["method"], "lbs");
        assert_eq!(v["seed"], 0);
        assert_eq!(v["solve_time_s"], 0.0);
    }
}
