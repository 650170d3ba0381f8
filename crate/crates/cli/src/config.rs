use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use semidirect::composer::DEFAULT_REL_TOL;
use semidirect::corpus::{seeded_fields, standard_corpus, CorpusSpec, Family};

const OUTPUT_HELP: &str = "\
OUTPUTS (in --out):
  reports.jsonl  one JSON object per line. Inequality reports carry
                 kind, label, params, norm_sq, entropy_lhs, dirichlet,
                 dirichlet_per_slot, potential, constant_term, rhs, slack,
                 normalized_slack, pass, tol and warnings. Other records
                 (constants, probes, fits, summary) also carry a kind.
  curves.csv     columns curve,t,value,predicted; predicted is empty when
                 the curve has no prediction.

EXIT CODES:
  0  every check passed
  1  at least one inequality failed (or a uniqueness probe found a violation)
  2  configuration error
  3  numerical fault (non-finite term, solver breakdown)";

#[derive(Debug, Parser)]
#[command(name = "semidirect", version, about = "Numerical checks of log-Sobolev, Hardy and heat-kernel bounds", after_help = OUTPUT_HELP)]
pub struct Cli {
    /// JSON run configuration; command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub t_min: Option<f64>,
    #[arg(long, global = true)]
    pub t_max: Option<f64>,
    #[arg(long, global = true)]
    pub t_points: Option<usize>,
    /// Relative tolerance on the slack.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for the randomized corpus fields.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Print the resolved configuration and exit.
    #[arg(long, global = true)]
    pub show_config: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sweep the composed inequality over a corpus and a t grid.
    Verify(VerifyArgs),
    /// Hardy-type inequalities at the origin.
    Hardy(HardyArgs),
    /// Heat-kernel diagonal curves for Grushin-type operators.
    Heat(HeatArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Verify(_) => "verify",
            Self::Hardy(_) => "hardy",
            Self::Heat(_) => "heat",
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyName {
    Grushin,
    SpecialGrushin,
    TensorFlat,
    DefectiveGaussianFlat,
    Metabelian,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub family: Option<FamilyName>,
    /// Grushin exponent.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Metabelian dimension Q.
    #[arg(long)]
    pub q: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HardyArgs {
    /// Logarithmic inequality (default).
    #[arg(long, conflicts_with = "power")]
    pub log: bool,
    /// Power inequality with weight |x|^-alpha.
    #[arg(long)]
    pub power: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Run the uniqueness probe with this exponent in place of b.
    #[arg(long)]
    pub probe_b: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct HeatArgs {
    /// Coefficient (x²)^m.
    #[arg(long)]
    pub m: Option<f64>,
    /// Coefficient exp(-2/|x|^alpha).
    #[arg(long)]
    pub very_degenerate: bool,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long)]
    pub rx: Option<f64>,
    #[arg(long)]
    pub ry: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub family: Family,
    pub radius: f64,
    pub nodes: usize,
    /// Replaces the standard corpus when set.
    pub corpus: Option<Vec<CorpusSpec>>,
    /// Seeded trigonometric fields appended to the corpus.
    pub random_fields: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self { family: Family::SpecialGrushin {}, radius: 3.0, nodes: 96, corpus: None, random_fields: 4 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HardyMode {
    Log,
    Power,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HardyConfig {
    pub mode: HardyMode,
    pub alpha: f64,
    pub probe_b: Option<f64>,
    pub radius: f64,
    pub nodes: usize,
    pub prop61_deltas: Vec<f64>,
    pub corpus: Option<Vec<CorpusSpec>>,
    pub random_fields: usize,
}

impl Default for HardyConfig {
    fn default() -> Self {
        Self {
            mode: HardyMode::Log,
            alpha: 0.5,
            probe_b: None,
            radius: 4.0,
            nodes: 512,
            prop61_deltas: vec![0.1, 0.5, 1.0],
            corpus: None,
            random_fields: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeatConfig {
    pub m: f64,
    pub very_degenerate: bool,
    pub alpha: f64,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub rx: Option<f64>,
    pub ry: Option<f64>,
    /// Probe nodes, in cells from the centre along y = 0.
    pub probe_offsets: Vec<usize>,
}

impl Default for HeatConfig {
    fn default() -> Self {
        Self {
            m: 1.0,
            very_degenerate: false,
            alpha: 0.5,
            nx: None,
            ny: None,
            rx: None,
            ry: None,
            probe_offsets: vec![0, 2, 4],
        }
    }
}

impl HeatConfig {
    /// Square box of radius 6 for the flat case; otherwise a box twice as
    /// fine in y, where the kernel at `x = 0` is narrower.
    fn resolve_grid(&mut self) {
        let flat = !self.very_degenerate && self.m == 0.0;
        let (nx, ny, rx, ry) = if flat { (193, 193, 6.0, 6.0) } else { (121, 241, 3.0, 1.5) };
        self.nx.get_or_insert(nx);
        self.ny.get_or_insert(ny);
        self.rx.get_or_insert(rx);
        self.ry.get_or_insert(ry);
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<String>,
    pub out: PathBuf,
    pub t_grid: Option<TGrid>,
    pub tol: f64,
    pub seed: u64,
    pub verify: VerifyConfig,
    pub hardy: HardyConfig,
    pub heat: HeatConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            out: PathBuf::from("out"),
            t_grid: None,
            tol: DEFAULT_REL_TOL,
            seed: 0,
            verify: VerifyConfig::default(),
            hardy: HardyConfig::default(),
            heat: HeatConfig::default(),
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn bad<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

pub fn read_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))
}

impl RunConfig {
    /// Defaults, then the config file, then flags; validated and with every
    /// default made explicit.
    pub fn resolve(cli: &Cli) -> Result<Self, ConfigError> {
        let mut cfg = match &cli.config {
            Some(p) => read_config(p)?,
            None => RunConfig::default(),
        };
        let name = cli.command.name();
        match cfg.command.as_deref() {
            Some(c) if c != name => return bad(format!("config is for `{c}` but the command is `{name}`")),
            _ => cfg.command = Some(name.into()),
        }
        if let Some(o) = &cli.out {
            cfg.out = o.clone();
        }
        if let Some(t) = cli.tol {
            cfg.tol = t;
        }
        if let Some(s) = cli.seed {
            cfg.seed = s;
        }
        let default_grid = match cli.command {
            Command::Heat(_) => TGrid { min: 0.05, max: 0.4, points: 7 },
            _ => TGrid { min: 1e-2, max: 1e2, points: 25 },
        };
        let mut grid = cfg.t_grid.take().unwrap_or(default_grid);
        if let Some(v) = cli.t_min {
            grid.min = v;
        }
        if let Some(v) = cli.t_max {
            grid.max = v;
        }
        if let Some(v) = cli.t_points {
            grid.points = v;
        }
        cfg.t_grid = Some(grid);

        match &cli.command {
            Command::Verify(a) => cfg.apply_verify(a)?,
            Command::Hardy(a) => cfg.apply_hardy(a)?,
            Command::Heat(a) => cfg.apply_heat(a)?,
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_verify(&mut self, a: &VerifyArgs) -> Result<(), ConfigError> {
        let v = &mut self.verify;
        if let Some(name) = a.family {
            v.family = match name {
                FamilyName::Grushin => Family::Grushin { alpha: a.alpha.unwrap_or(1.0) },
                FamilyName::SpecialGrushin => Family::SpecialGrushin {},
                FamilyName::TensorFlat => Family::TensorFlat {},
                FamilyName::DefectiveGaussianFlat => Family::DefectiveGaussianFlat {},
                FamilyName::Metabelian => Family::Metabelian { q: a.q.unwrap_or(1) },
            };
        } else if let Some(alpha) = a.alpha {
            match &mut v.family {
                Family::Grushin { alpha: x } => *x = alpha,
                _ => return bad("--alpha applies to the grushin family"),
            }
        }
        if let Some(q) = a.q {
            match &mut v.family {
                Family::Metabelian { q: x } => *x = q,
                _ => return bad("--q applies to the metabelian family"),
            }
        }
        if let Some(r) = a.radius {
            v.radius = r;
        }
        if let Some(n) = a.nodes {
            v.nodes = n;
        }
        if v.corpus.is_none() {
            let dim = v.family.dim();
            let mut corpus = standard_corpus(dim, v.radius);
            corpus.extend(seeded_fields(self.seed, v.random_fields, dim, v.radius));
            v.corpus = Some(corpus);
        }
        Ok(())
    }

    fn apply_hardy(&mut self, a: &HardyArgs) -> Result<(), ConfigError> {
        let h = &mut self.hardy;
        if a.power {
            h.mode = HardyMode::Power;
        } else if a.log {
            h.mode = HardyMode::Log;
        }
        if let Some(x) = a.alpha {
            h.alpha = x;
        }
        if a.probe_b.is_some() {
            h.probe_b = a.probe_b;
        }
        if let Some(r) = a.radius {
            h.radius = r;
        }
        if let Some(n) = a.nodes {
            h.nodes = n;
        }
        if h.corpus.is_none() {
            let mut corpus = standard_corpus(1, h.radius);
            corpus.extend(seeded_fields(self.seed, h.random_fields, 1, h.radius));
            h.corpus = Some(corpus);
        }
        Ok(())
    }

    fn apply_heat(&mut self, a: &HeatArgs) -> Result<(), ConfigError> {
        let h = &mut self.heat;
        if let Some(m) = a.m {
            h.m = m;
        }
        if a.very_degenerate {
            h.very_degenerate = true;
        }
        if let Some(x) = a.alpha {
            h.alpha = x;
        }
        h.nx = a.nx.or(h.nx);
        h.ny = a.ny.or(h.ny);
        h.rx = a.rx.or(h.rx);
        h.ry = a.ry.or(h.ry);
        h.resolve_grid();
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let g = self.t_grid.as_ref().expect("resolved");
        if !(g.min > 0.0 && g.max.is_finite() && g.max >= g.min) {
            return bad(format!("t grid [{}, {}] must satisfy 0 < t_min ≤ t_max", g.min, g.max));
        }
        if g.points == 0 || (g.points == 1 && g.min != g.max) {
            return bad("t grid needs at least one point, two when t_min < t_max");
        }
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return bad("tol must be a finite non-negative number");
        }
        match self.command.as_deref() {
            Some("verify") => {
                let v = &self.verify;
                if !(v.radius > 0.0) || v.nodes < 16 {
                    return bad("verify needs radius > 0 and at least 16 nodes per axis");
                }
                if let Family::Grushin { alpha } = v.family {
                    if !(alpha > 0.0 && alpha.is_finite()) {
                        return bad("alpha out of range: Grushin exponent must be positive");
                    }
                }
                if let Family::Metabelian { q: 0 } = v.family {
                    return bad("metabelian needs Q ≥ 1");
                }
            }
            Some("hardy") => {
                let h = &self.hardy;
                if h.mode == HardyMode::Power && !(h.alpha > 0.0 && h.alpha < 1.0) {
                    return bad(format!("alpha out of range: {} is not in (0, 1)", h.alpha));
                }
                if h.probe_b.is_some() && h.mode != HardyMode::Power {
                    return bad("--probe-b needs --power");
                }
                if let Some(b) = h.probe_b {
                    if !(b > 0.0 && b.is_finite()) {
                        return bad("probe exponent must be positive");
                    }
                }
                if !(h.radius > 0.0) || h.nodes < 16 || h.nodes % 2 == 1 {
                    return bad("hardy needs radius > 0 and an even node count ≥ 16 (no node at the origin)");
                }
                if h.prop61_deltas.iter().any(|&d| !(d > 0.0 && d <= 1.0)) {
                    return bad("prop61 deltas must lie in (0, 1]");
                }
            }
            Some("heat") => {
                let h = &self.heat;
                if h.very_degenerate {
                    if !(h.alpha > 0.0 && h.alpha < 1.0) {
                        return bad(format!("alpha out of range: {} is not in (0, 1)", h.alpha));
                    }
                } else if !(h.m >= 0.0 && h.m.is_finite()) {
                    return bad("m must be non-negative");
                }
                let (nx, ny) = (h.nx.unwrap_or(0), h.ny.unwrap_or(0));
                if nx < 5 || ny < 5 || !(h.rx.unwrap_or(0.0) > 0.0 && h.ry.unwrap_or(0.0) > 0.0) {
                    return bad("heat grid needs at least 5 nodes per axis and positive radii");
                }
                if h.probe_offsets.is_empty() || h.probe_offsets.iter().any(|&o| o > nx / 2) {
                    return bad("probe offsets must be non-empty and inside the grid");
                }
                if g.points < 4 {
                    return bad("a decay fit needs at least 4 t points");
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn t_values(&self) -> Vec<f64> {
        let g = self.t_grid.as_ref().expect("resolved");
        if g.points == 1 {
            return vec![g.min];
        }
        semidirect::numerics::log_grid(g.min, g.max, g.points)
    }
}
