use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use plsb_core::distributions::Family;
use plsb_core::mini_bnb::mps::load_mps;
use plsb_core::mini_bnb::{solve, MiniMip, MipError, SolveConfig, SolveMode, SolveResult};

use super::{create_output, print_table, require_path, write_failed};
use crate::config::{BranchingConfig, SolveFileConfig};
use crate::table::Table;
use crate::{CliError, CliResult};

/// Branching flags shared by `solve` and `sweep`.
#[derive(Debug, Args, Default)]
pub struct BranchingArgs {
    /// Fraction of the maximum lookahead before the probabilistic test runs [default: 0.6].
    #[arg(long)]
    pub phi: Option<f64>,
    /// Nonzero gains needed before the distribution is fitted [default: 5].
    #[arg(long)]
    pub min_nonzero_samples: Option<usize>,
    /// Tail family of the fitted gain distribution [default: pareto].
    #[arg(long)]
    pub family: Option<String>,
    /// Fit the exponential to all gains instead of a point mass plus tail.
    #[arg(long)]
    pub plain_fit: bool,
    /// Branchings per direction before pseudocosts are trusted [default: 2].
    #[arg(long)]
    pub reliability: Option<u32>,
    /// Unreliable candidates strong-branched per node [default: 100].
    #[arg(long)]
    pub max_candidates: Option<usize>,
    /// Simplex iteration limit of each strong-branching LP [default: 500].
    #[arg(long)]
    pub sb_iteration_limit: Option<u64>,
    /// Node limit [default: 1000000].
    #[arg(long)]
    pub node_limit: Option<u64>,
}

impl BranchingArgs {
    /// Solver configuration with branching settings applied, mode and lookahead left at defaults.
    pub fn resolve(self, file: BranchingConfig) -> CliResult<SolveConfig> {
        let mut cfg = SolveConfig::default();
        if let Some(phi) = self.phi.or(file.phi) {
            cfg.prob.phi = phi;
        }
        if let Some(n) = self.min_nonzero_samples.or(file.min_nonzero_samples) {
            cfg.prob.min_nonzero_samples = n;
        }
        cfg.prob.mixed = !self.plain_fit && file.mixed.unwrap_or(true);
        match self.family.or(file.family) {
            Some(name) => cfg.prob.family = name.parse::<Family>().map_err(CliError::Input)?,
            None if !cfg.prob.mixed => cfg.prob.family = Family::Exponential,
            None => {}
        }
        if cfg.prob.family.is_control() {
            return Err(CliError::Input(format!(
                "{} is a control family and cannot drive the stopping rule",
                cfg.prob.family.name()
            )));
        }
        if let Some(r) = self.reliability.or(file.reliability) {
            cfg.reliability = r;
        }
        if let Some(c) = self.max_candidates.or(file.max_candidates) {
            cfg.max_candidates = c;
        }
        if let Some(l) = self.sb_iteration_limit.or(file.sb_iteration_limit) {
            cfg.sb_iteration_limit = l;
        }
        if let Some(n) = self.node_limit.or(file.node_limit) {
            cfg.node_limit = n;
        }
        cfg.validate().map_err(CliError::input)?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// MPS file.
    pub instance: Option<PathBuf>,
    /// fixed or dynamic [default: fixed].
    #[arg(long)]
    pub mode: Option<String>,
    /// Lookahead L [default: 9].
    #[arg(long)]
    pub lookahead: Option<u32>,
    /// Extra strong-branching iterations K [default: 1000000].
    #[arg(long)]
    pub extra_iterations: Option<u64>,
    /// Known objective value; only solutions at least this good are sought.
    #[arg(long, allow_hyphen_values = true)]
    pub cutoff: Option<f64>,
    #[command(flatten)]
    pub branching: BranchingArgs,
    /// Solution CSV (`variable,value`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-node branching decisions CSV.
    #[arg(long)]
    pub decisions: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SolvePlan {
    pub instance: PathBuf,
    pub config: SolveConfig,
    pub out: Option<PathBuf>,
    pub decisions: Option<PathBuf>,
}

impl SolvePlan {
    pub fn resolve(args: SolveArgs, file: SolveFileConfig, branching: BranchingConfig) -> CliResult<Self> {
        let instance = args.instance.or(file.instance);
        let instance = require_path(&instance, "instance")?.to_path_buf();
        let mut config = args.branching.resolve(branching)?;
        if let Some(mode) = args.mode.or(file.mode) {
            config.mode = mode.parse::<SolveMode>().map_err(CliError::Input)?;
        }
        if let Some(l) = args.lookahead.or(file.lookahead) {
            config.fixed.lookahead = l;
        }
        if let Some(k) = args.extra_iterations.or(file.extra_iterations) {
            config.fixed.extra_iterations = k;
        }
        config.cutoff = args.cutoff.or(file.cutoff);
        let decisions = args.decisions.or(file.decisions);
        config.record_log = decisions.is_some();
        config.validate().map_err(CliError::input)?;
        Ok(Self {
            instance,
            config,
            out: args.out.or(file.out),
            decisions,
        })
    }
}

pub(crate) fn load_instance(path: &Path) -> CliResult<MiniMip> {
    let mip = load_mps(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    mip.validate()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(mip)
}

pub(crate) fn solve_error(e: MipError) -> CliError {
    match e {
        MipError::Invalid(_) => CliError::input(e),
        MipError::Numerical(_) => CliError::internal(e),
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        v.to_string()
    }
}

fn summary(mip: &MiniMip, config: &SolveConfig, r: &SolveResult) -> Table {
    let s = &r.stats;
    let mut t = Table::new(["field", "value"]);
    let rows: Vec<(&str, String)> = vec![
        ("instance", mip.name.clone()),
        ("mode", config.mode.to_string()),
        ("status", r.status.as_str().to_string()),
        ("objective", r.objective.map(fmt_value).unwrap_or_else(|| "-".into())),
        ("bound", fmt_value(r.bound)),
        ("nodes", s.nodes.to_string()),
        ("max_depth", s.max_depth.to_string()),
        ("sb_calls", s.sb_calls.to_string()),
        ("sb_lps", s.sb_lps.to_string()),
        ("sb_iterations", s.sb_iterations.to_string()),
        ("node_lp_iterations", s.node_lp_iterations.to_string()),
        ("lookahead_stops", s.lookahead_stops.to_string()),
        ("budget_stops", s.budget_stops.to_string()),
        ("early_stops", s.early_stops.to_string()),
    ];
    for (k, v) in rows {
        t.push([k.to_string(), v]);
    }
    t
}

pub fn run(plan: &SolvePlan, out: &mut dyn Write) -> CliResult<()> {
    let mip = load_instance(&plan.instance)?;
    let result = solve(&mip, &plan.config).map_err(solve_error)?;

    if let (Some(path), Some(x)) = (&plan.out, &result.solution) {
        let mut wtr = csv::Writer::from_writer(create_output(path)?);
        wtr.write_record(["variable", "value"]).map_err(|e| write_failed(path, e))?;
        for (name, v) in mip.var_names.iter().zip(x) {
            wtr.write_record([name.clone(), v.to_string()])
                .map_err(|e| write_failed(path, e))?;
        }
        wtr.flush().map_err(|e| write_failed(path, e))?;
    }
    if let Some(path) = &plan.decisions {
        let mut wtr = csv::Writer::from_writer(create_output(path)?);
        wtr.write_record(["node", "variable", "sb_candidates", "stop_reason"])
            .map_err(|e| write_failed(path, e))?;
        for d in &result.decisions {
            wtr.write_record([
                d.node.to_string(),
                mip.var_names[d.var].clone(),
                d.sb_candidates.to_string(),
                d.stop_reason.map(|r| r.as_str().to_string()).unwrap_or_default(),
            ])
            .map_err(|e| write_failed(path, e))?;
        }
        wtr.flush().map_err(|e| write_failed(path, e))?;
    }
    print_table(&summary(&mip, &plan.config, &result), out)
}
