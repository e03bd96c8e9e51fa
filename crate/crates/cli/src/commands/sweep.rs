use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use plsb_core::mini_bnb::generate::toy_corpus;
use plsb_core::mini_bnb::{solve, MiniMip, SolveConfig, SolveMode, SolveStats, SolveStatus};
use plsb_core::stats::shifted_geometric_mean;
use rayon::prelude::*;

use super::solve::{load_instance, BranchingArgs};
use super::{create_output, parse_all, print_table, write_failed};
use crate::config::{BranchingConfig, SweepConfig};
use crate::table::Table;
use crate::{CliError, CliResult};

pub const NODE_SHIFT: f64 = 100.0;
pub const LP_SHIFT: f64 = 1.0;
pub const ITERATION_SHIFT: f64 = 1.0;

pub const SUMMARY_HEADER: [&str; 8] = [
    "mode",
    "lookahead",
    "extra_iterations",
    "instances",
    "completed",
    "sgm_nodes",
    "sgm_sb_lps",
    "sgm_iterations",
];

pub const DETAIL_HEADER: [&str; 11] = [
    "mode",
    "lookahead",
    "extra_iterations",
    "instance",
    "status",
    "nodes",
    "sb_lps",
    "sb_iterations",
    "node_lp_iterations",
    "early_stops",
    "error",
];

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory of `.mps` files [default: the generated toy corpus].
    #[arg(long)]
    pub instances: Option<PathBuf>,
    /// Size of the generated toy corpus [default: 50].
    #[arg(long)]
    pub count: Option<usize>,
    /// Seed of the generated toy corpus (required, here or in the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Modes, comma separated [default: fixed,dynamic].
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<String>>,
    /// Lookahead values L [default: 9].
    #[arg(long, value_delimiter = ',')]
    pub lookaheads: Option<Vec<u32>>,
    /// Extra strong-branching iteration values K [default: 1000000].
    #[arg(long, value_delimiter = ',')]
    pub extra_iterations: Option<Vec<u64>>,
    /// `optimal`: solve each instance once and rerun every cell with its optimum as a
    /// cutoff; `none`: no cutoff [default: optimal].
    #[arg(long)]
    pub cutoff: Option<String>,
    #[command(flatten)]
    pub branching: BranchingArgs,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Per-cell summary CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Per-instance CSV.
    #[arg(long)]
    pub details: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Directory(PathBuf),
    ToyCorpus { seed: u64, count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CutoffPolicy {
    Optimal,
    None,
}

impl std::str::FromStr for CutoffPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "optimal" => Ok(CutoffPolicy::Optimal),
            "none" => Ok(CutoffPolicy::None),
            other => Err(format!("unknown cutoff policy `{other}` (expected optimal or none)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub source: InstanceSource,
    pub modes: Vec<SolveMode>,
    pub lookaheads: Vec<u32>,
    pub extra_iterations: Vec<u64>,
    pub cutoff: CutoffPolicy,
    /// Settings shared by every cell; mode, L and K are overridden per cell.
    pub base: SolveConfig,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub details: Option<PathBuf>,
}

impl SweepPlan {
    pub fn resolve(args: SweepArgs, file: SweepConfig, branching: BranchingConfig) -> CliResult<Self> {
        let seed = args
            .seed
            .or(file.seed)
            .ok_or_else(|| CliError::Input("a seed is required (--seed or config)".into()))?;
        let source = match args.instances.or(file.instances) {
            Some(dir) => InstanceSource::Directory(dir),
            None => InstanceSource::ToyCorpus {
                seed,
                count: args.count.or(file.count).unwrap_or(50),
            },
        };
        let modes = match args.modes.or(file.modes) {
            Some(names) => parse_all::<SolveMode>(&names, "modes")?,
            None => vec![SolveMode::Fixed, SolveMode::Dynamic],
        };
        let lookaheads = args.lookaheads.or(file.lookaheads).unwrap_or(vec![9]);
        let extra_iterations = args
            .extra_iterations
            .or(file.extra_iterations)
            .unwrap_or(vec![1_000_000]);
        if lookaheads.is_empty() || extra_iterations.is_empty() {
            return Err(CliError::Input("empty L or K grid".into()));
        }
        let cutoff = match args.cutoff.or(file.cutoff) {
            Some(s) => s.parse::<CutoffPolicy>().map_err(CliError::Input)?,
            None => CutoffPolicy::Optimal,
        };
        let workers = args.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::Input("workers must be at least 1".into()));
        }
        Ok(Self {
            source,
            modes,
            lookaheads,
            extra_iterations,
            cutoff,
            base: args.branching.resolve(branching)?,
            workers,
            out: args.out.or(file.out),
            details: args.details.or(file.details),
        })
    }

    pub fn cells(&self) -> Vec<(SolveMode, u32, u64)> {
        let mut cells = Vec::new();
        for &mode in &self.modes {
            for &l in &self.lookaheads {
                for &k in &self.extra_iterations {
                    cells.push((mode, l, k));
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub instance: String,
    pub outcome: Result<(SolveStatus, SolveStats), String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub mode: SolveMode,
    pub lookahead: u32,
    pub extra_iterations: u64,
    pub runs: Vec<RunRecord>,
}

impl CellSummary {
    pub fn completed(&self) -> Vec<&SolveStats> {
        self.runs
            .iter()
            .filter_map(|r| r.outcome.as_ref().ok().map(|(_, s)| s))
            .collect()
    }

    fn sgm(&self, f: impl Fn(&SolveStats) -> u64, shift: f64) -> Option<f64> {
        let v: Vec<f64> = self.completed().into_iter().map(|s| f(s) as f64).collect();
        shifted_geometric_mean(&v, shift)
    }

    pub fn sgm_nodes(&self) -> Option<f64> {
        self.sgm(|s| s.nodes, NODE_SHIFT)
    }

    pub fn sgm_sb_lps(&self) -> Option<f64> {
        self.sgm(|s| s.sb_lps, LP_SHIFT)
    }

    pub fn sgm_iterations(&self) -> Option<f64> {
        self.sgm(|s| s.total_iterations(), ITERATION_SHIFT)
    }
}

fn load_instances(source: &InstanceSource) -> CliResult<Vec<(String, Result<MiniMip, String>)>> {
    match source {
        InstanceSource::ToyCorpus { seed, count } => Ok(toy_corpus(*seed, *count)
            .into_iter()
            .map(|m| (m.name.clone(), Ok(m)))
            .collect()),
        InstanceSource::Directory(dir) => {
            let entries = std::fs::read_dir(dir)
                .map_err(|e| CliError::Input(format!("cannot read {}: {e}", dir.display())))?;
            let mut paths: Vec<PathBuf> = entries
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("mps")))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(CliError::Input(format!("no .mps files in {}", dir.display())));
            }
            Ok(paths
                .iter()
                .map(|p| (instance_name(p), load_instance(p).map_err(|e| e.to_string())))
                .collect())
        }
    }
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Runs every cell of the grid on every instance. Failures are recorded per run.
pub fn run_sweep(plan: &SweepPlan) -> CliResult<Vec<CellSummary>> {
    let instances = load_instances(&plan.source)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = plan.workers {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(CliError::internal)?;

    let cutoffs: Vec<Result<Option<f64>, String>> = pool.install(|| {
        instances
            .par_iter()
            .map(|(_, mip)| {
                let mip = mip.as_ref().map_err(Clone::clone)?;
                match plan.cutoff {
                    CutoffPolicy::None => Ok(None),
                    CutoffPolicy::Optimal => {
                        let reference = SolveConfig {
                            mode: SolveMode::Fixed,
                            ..plan.base.clone()
                        };
                        let r = solve(mip, &reference).map_err(|e| e.to_string())?;
                        Ok(match r.status {
                            SolveStatus::Optimal => r.objective,
                            _ => None,
                        })
                    }
                }
            })
            .collect()
    });

    let cells = plan.cells();
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..instances.len()).map(move |i| (c, i)))
        .collect();
    let records: Vec<RunRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(c, i)| {
                let (mode, l, k) = cells[c];
                let (name, mip) = &instances[i];
                let outcome = match (mip, &cutoffs[i]) {
                    (Err(e), _) | (_, Err(e)) => Err(e.clone()),
                    (Ok(mip), Ok(cutoff)) => {
                        let mut cfg = plan.base.clone();
                        cfg.mode = mode;
                        cfg.fixed.lookahead = l;
                        cfg.fixed.extra_iterations = k;
                        cfg.cutoff = *cutoff;
                        solve(mip, &cfg)
                            .map(|r| (r.status, r.stats))
                            .map_err(|e| e.to_string())
                    }
                };
                RunRecord {
                    instance: name.clone(),
                    outcome,
                }
            })
            .collect()
    });

    let mut records = records.into_iter();
    Ok(cells
        .iter()
        .map(|&(mode, lookahead, extra_iterations)| CellSummary {
            mode,
            lookahead,
            extra_iterations,
            runs: records.by_ref().take(instances.len()).collect(),
        })
        .collect())
}

fn fmt_sgm(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

fn summary_row(c: &CellSummary) -> Vec<String> {
    vec![
        c.mode.to_string(),
        c.lookahead.to_string(),
        c.extra_iterations.to_string(),
        c.runs.len().to_string(),
        c.completed().len().to_string(),
        fmt_sgm(c.sgm_nodes()),
        fmt_sgm(c.sgm_sb_lps()),
        fmt_sgm(c.sgm_iterations()),
    ]
}

pub fn write_summary<W: Write>(cells: &[CellSummary], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(SUMMARY_HEADER)?;
    for c in cells {
        wtr.write_record(summary_row(c))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_details<W: Write>(cells: &[CellSummary], w: W) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(DETAIL_HEADER)?;
    for c in cells {
        for r in &c.runs {
            let mut row = vec![
                c.mode.to_string(),
                c.lookahead.to_string(),
                c.extra_iterations.to_string(),
                r.instance.clone(),
            ];
            match &r.outcome {
                Ok((status, s)) => row.extend([
                    status.as_str().to_string(),
                    s.nodes.to_string(),
                    s.sb_lps.to_string(),
                    s.sb_iterations.to_string(),
                    s.node_lp_iterations.to_string(),
                    s.early_stops.to_string(),
                    String::new(),
                ]),
                Err(e) => {
                    row.extend(["error".to_string()]);
                    row.extend(std::iter::repeat_n(String::new(), 5));
                    row.push(e.clone());
                }
            }
            wtr.write_record(row)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

pub fn run(plan: &SweepPlan, out: &mut dyn Write) -> CliResult<()> {
    let cells = run_sweep(plan)?;
    if let Some(path) = &plan.out {
        write_summary(&cells, create_output(path)?).map_err(|e| write_failed(path, e))?;
    }
    if let Some(path) = &plan.details {
        write_details(&cells, create_output(path)?).map_err(|e| write_failed(path, e))?;
    }
    let mut table = Table::new(SUMMARY_HEADER);
    for c in &cells {
        table.push(summary_row(c));
    }
    print_table(&table, out)
}
