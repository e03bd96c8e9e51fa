use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use plsb_core::abstract_tree::{build_svb_tree, svb_depth, svb_tree_size, AbstractVariable, Depth};
use plsb_core::gains::{load_gain_series, GainPair};

use super::{create_output, epsilon, print_table, write_failed};
use crate::config::ReportConfig;
use crate::table::Table;
use crate::{CliError, CliResult};

pub const HEADER: [&str; 8] = [
    "left_gain",
    "right_gain",
    "geomean_gain",
    "gap",
    "exact_nodes",
    "approx_nodes",
    "relative_error",
    "note",
];

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Gain pairs as `left:right`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub pairs: Option<Vec<String>>,
    /// Gain file whose nonzero entries are added to the pairs.
    #[arg(long)]
    pub gains: Option<PathBuf>,
    /// Gaps, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub gaps: Option<Vec<f64>>,
    /// Shift of the geometric mean [default: 1e-6].
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Output CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct ReportPlan {
    pub pairs: Vec<GainPair>,
    pub gaps: Vec<f64>,
    pub epsilon: f64,
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> CliResult<GainPair> {
    let bad = || CliError::Input(format!("invalid gain pair `{s}` (expected left:right)"));
    let (l, r) = s.split_once(':').ok_or_else(bad)?;
    let l = l.trim().parse::<f64>().map_err(|_| bad())?;
    let r = r.trim().parse::<f64>().map_err(|_| bad())?;
    GainPair::new(l, r).map_err(CliError::input)
}

impl ReportPlan {
    pub fn resolve(args: ReportArgs, file: ReportConfig) -> CliResult<Self> {
        let mut pairs = Vec::new();
        for s in args.pairs.or(file.pairs).unwrap_or_default() {
            pairs.push(parse_pair(&s)?);
        }
        if let Some(path) = args.gains.or(file.gains) {
            let series = load_gain_series(&path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            pairs.extend(series.iter().flat_map(|s| s.entries().iter().map(|(_, p)| *p)));
        }
        pairs.retain(|p| p.down() > 0.0 && p.up() > 0.0);
        if pairs.is_empty() {
            return Err(CliError::Input("no gain pairs with both gains positive".into()));
        }
        let gaps = args
            .gaps
            .or(file.gaps)
            .ok_or_else(|| CliError::Input("no gaps given (--gaps or config)".into()))?;
        if gaps.is_empty() || gaps.iter().any(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(CliError::Input("gaps must be positive and finite".into()));
        }
        Ok(Self {
            pairs,
            gaps,
            epsilon: epsilon(args.epsilon.or(file.epsilon))?,
            out: args.out.or(file.out),
        })
    }
}

fn row(pair: GainPair, gap: f64, epsilon: f64) -> CliResult<Vec<String>> {
    let g = pair.geomean(epsilon).map_err(CliError::input)?;
    let approx = match svb_depth(gap, g) {
        Depth::Finite(d) => svb_tree_size(d).ok(),
        Depth::Unbounded => None,
    };
    let exact = build_svb_tree(gap, &AbstractVariable::new("x", pair.down(), pair.up()));
    let (exact_s, err_s, note) = match (&exact, approx) {
        (Ok(e), Some(a)) => (
            e.to_string(),
            ((a as f64 - *e as f64) / *e as f64).to_string(),
            String::new(),
        ),
        (Ok(e), None) => (e.to_string(), String::new(), "approximation too large".into()),
        (Err(e), _) => (String::new(), String::new(), e.to_string()),
    };
    Ok(vec![
        pair.down().to_string(),
        pair.up().to_string(),
        g.value().to_string(),
        gap.to_string(),
        exact_s,
        approx.map(|a| a.to_string()).unwrap_or_default(),
        err_s,
        note,
    ])
}

pub fn run(plan: &ReportPlan, out: &mut dyn Write) -> CliResult<()> {
    let mut rows = Vec::new();
    for &p in &plan.pairs {
        for &gap in &plan.gaps {
            rows.push(row(p, gap, plan.epsilon)?);
        }
    }
    if let Some(path) = &plan.out {
        let mut wtr = csv::Writer::from_writer(create_output(path)?);
        wtr.write_record(HEADER).map_err(|e| write_failed(path, e))?;
        for r in &rows {
            wtr.write_record(r).map_err(|e| write_failed(path, e))?;
        }
        wtr.flush().map_err(|e| write_failed(path, e))?;
    }
    let mut table = Table::new(HEADER);
    for r in rows {
        let mut r = r;
        if let Ok(v) = r[6].parse::<f64>() {
            r[6] = format!("{:+.2}%", 100.0 * v);
        }
        if let Ok(v) = r[2].parse::<f64>() {
            r[2] = format!("{v:.4}");
        }
        table.push(r);
    }
    print_table(&table, out)
}
