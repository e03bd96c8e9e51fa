use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use plsb_core::gains::{read_gain_series, read_geomean_pool, GeomGain};
use plsb_core::simulator::{run_campaign, CampaignSpec, CampaignTable, SimError, Strategy};

use super::{create_output, epsilon, parse_all, print_table, require_path, write_failed};
use crate::config::SimulateConfig;
use crate::table::Table;
use crate::{CliError, CliResult};

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Gain pool: a `geomean_gain` CSV or a gain file whose entries are pooled.
    #[arg(long)]
    pub instance: Option<PathBuf>,
    /// Gaps to close, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gaps: Option<Vec<f64>>,
    /// Trials per gap [default: 1000].
    #[arg(long)]
    pub trials: Option<u64>,
    /// Campaign seed (required, here or in the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Strategies: fixed, full, prob-exp, prob-mixed-exp, prob-mixed-pareto, prob-mixed-lognormal.
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<String>>,
    /// Worker threads [default: all cores]. Results do not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Shift of the geometric mean when pooling a gain file [default: 1e-6].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Output CSV (`gap,strategy,mean_total_nodes,mean_sb_nodes`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct SimulatePlan {
    pub instance: PathBuf,
    pub epsilon: f64,
    pub spec: CampaignSpec,
    pub out: Option<PathBuf>,
}

impl SimulatePlan {
    pub fn resolve(args: SimulateArgs, file: SimulateConfig) -> CliResult<Self> {
        let instance = args.instance.or(file.instance);
        let instance = require_path(&instance, "instance")?.to_path_buf();
        let seed = args
            .seed
            .or(file.seed)
            .ok_or_else(|| CliError::Input("a seed is required (--seed or config)".into()))?;
        let gaps = args
            .gaps
            .or(file.gaps)
            .ok_or_else(|| CliError::Input("no gaps given (--gaps or config)".into()))?;
        let strategies = match args.strategies.or(file.strategies) {
            Some(names) => parse_all::<Strategy>(&names, "strategies")?,
            None => Strategy::defaults(),
        };
        let workers = args.workers.or(file.workers);
        if workers == Some(0) {
            return Err(CliError::Input("workers must be at least 1".into()));
        }
        let eps = epsilon(args.epsilon.or(file.epsilon))?;
        let pool = load_pool(&instance, eps)?;
        let spec = CampaignSpec {
            trials: args.trials.or(file.trials).unwrap_or(1000),
            strategies,
            workers,
            ..CampaignSpec::new(pool, gaps, seed)
        };
        spec.validate().map_err(CliError::input)?;
        Ok(Self {
            instance,
            epsilon: eps,
            spec,
            out: args.out.or(file.out),
        })
    }
}

/// Reads a pool file, accepting either the single-column pool format or a gain file.
pub fn load_pool(path: &Path, epsilon: f64) -> CliResult<Vec<GeomGain>> {
    let read_err = |e: std::io::Error| CliError::Input(format!("cannot read {}: {e}", path.display()));
    let file = std::fs::File::open(path).map_err(read_err)?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first).map_err(read_err)?;
    let file = std::fs::File::open(path).map_err(read_err)?;
    let bad = |e: &dyn std::fmt::Display| CliError::Input(format!("{}: {e}", path.display()));
    if first.trim().starts_with("geomean_gain") {
        read_geomean_pool(file).map_err(|e| bad(&e))
    } else {
        let series = read_gain_series(file).map_err(|e| bad(&e))?;
        let mut pool = Vec::new();
        for s in &series {
            pool.extend(s.geomeans(epsilon).map_err(|e| bad(&e))?);
        }
        Ok(pool)
    }
}

pub fn run(plan: &SimulatePlan, out: &mut dyn Write) -> CliResult<()> {
    let table = run_campaign(&plan.spec).map_err(|e| match e {
        SimError::Workers(_) => CliError::internal(e),
        other => CliError::input(other),
    })?;
    if let Some(path) = &plan.out {
        table
            .write_csv(create_output(path)?)
            .map_err(|e| write_failed(path, e))?;
    }
    print_table(&campaign_table(&table), out)
}

fn campaign_table(table: &CampaignTable) -> Table {
    let mut t = Table::new(CampaignTable::HEADER);
    for r in &table.rows {
        t.push([
            r.gap.to_string(),
            r.strategy.clone(),
            format!("{:.1}", r.mean_total_nodes),
            format!("{:.1}", r.mean_sb_nodes),
        ]);
    }
    t
}
