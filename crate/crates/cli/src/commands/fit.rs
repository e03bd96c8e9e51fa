use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use plsb_core::distributions::{fit_report, Family, FitReport, DEFAULT_ALPHA};
use plsb_core::gains::{load_gain_series, GainsError};

use super::{create_output, epsilon, parse_all, print_table, require_path, write_failed};
use crate::config::FitConfig;
use crate::table::Table;
use crate::{CliError, CliResult};

const ALL_FAMILIES: [&str; 5] = ["exponential", "pareto", "lognormal", "uniform", "normal"];

pub const REPORT_HEADER: [&str; 9] = [
    "node_id",
    "family",
    "n_nonzero",
    "p0",
    "theta1",
    "theta2",
    "ks_D",
    "ks_p",
    "verdict",
];

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Gain file (`node_id,variable_id,downgain,upgain`).
    #[arg(long)]
    pub gains: Option<PathBuf>,
    /// Report CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Families to fit [default: all five].
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<String>>,
    /// KS significance level [default: 0.05].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Shift of the geometric mean [default: 1e-6].
    #[arg(long)]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct FitPlan {
    pub gains: PathBuf,
    pub out: Option<PathBuf>,
    pub families: Vec<Family>,
    pub alpha: f64,
    pub epsilon: f64,
}

impl FitPlan {
    pub fn resolve(args: FitArgs, file: FitConfig) -> CliResult<Self> {
        let gains = args.gains.or(file.gains);
        let gains = require_path(&gains, "gain file")?.to_path_buf();
        let families = args
            .families
            .or(file.families)
            .unwrap_or_else(|| ALL_FAMILIES.iter().map(|s| s.to_string()).collect());
        let alpha = args.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Input(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        Ok(Self {
            gains,
            out: args.out.or(file.out),
            families: parse_all(&families, "families")?,
            alpha,
            epsilon: epsilon(args.epsilon.or(file.epsilon))?,
        })
    }
}

fn report_row(node_id: &str, r: &FitReport) -> Vec<String> {
    let n = r.n_zero + r.n_nonzero;
    let p0 = r
        .distribution
        .as_ref()
        .map_or(r.n_zero as f64 / n as f64, |d| d.p0());
    let theta = r.distribution.as_ref().map(|d| d.tail().theta()).unwrap_or_default();
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    vec![
        node_id.to_string(),
        r.family.name().to_string(),
        r.n_nonzero.to_string(),
        p0.to_string(),
        opt(theta.first().copied()),
        opt(theta.get(1).copied()),
        opt(r.ks.map(|k| k.statistic)),
        opt(r.ks.map(|k| k.p_value)),
        r.verdict.as_str().to_string(),
    ]
}

pub fn run(plan: &FitPlan, out: &mut dyn Write) -> CliResult<()> {
    let series = load_gain_series(&plan.gains).map_err(|e| match e {
        GainsError::Io(io) => {
            CliError::Input(format!("cannot read {}: {io}", plan.gains.display()))
        }
        other => CliError::Input(format!("{}: {other}", plan.gains.display())),
    })?;

    let mut rows = Vec::new();
    for s in series.iter().filter(|s| !s.is_empty()) {
        let reports = fit_report(s, &plan.families, plan.epsilon, plan.alpha)
            .map_err(|e| CliError::Input(format!("series {}: {e}", s.node_id())))?;
        rows.extend(reports.iter().map(|r| report_row(s.node_id(), r)));
    }

    if let Some(path) = &plan.out {
        let mut wtr = csv::Writer::from_writer(create_output(path)?);
        wtr.write_record(REPORT_HEADER).map_err(|e| write_failed(path, e))?;
        for row in &rows {
            wtr.write_record(row).map_err(|e| write_failed(path, e))?;
        }
        wtr.flush().map_err(|e| write_failed(path, e))?;
    }

    let mut table = Table::new(REPORT_HEADER);
    for row in &rows {
        let short = |s: &str| match s.parse::<f64>() {
            Ok(v) if s.contains('.') || s.contains('e') => format!("{v:.4}"),
            _ => s.to_string(),
        };
        table.push(row.iter().map(|c| short(c)));
    }
    print_table(&table, out)
}
