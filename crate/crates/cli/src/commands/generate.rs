use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Subcommand};
use plsb_core::distributions::Tail;
use plsb_core::gains::write_geomean_pool;
use plsb_core::mini_bnb::generate::toy_corpus;
use plsb_core::mini_bnb::mps::save_mps;
use plsb_core::simulator::synthetic_pool;

use super::{create_output, write_failed};
use crate::{CliError, CliResult};

#[derive(Debug, Subcommand)]
pub enum GenerateCommand {
    /// A seeded gain pool: a share of exact zeros plus draws from a tail distribution.
    Pool(PoolArgs),
    /// The seeded toy MIP corpus as MPS files.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args)]
pub struct PoolArgs {
    #[arg(long, default_value_t = 500)]
    pub size: usize,
    #[arg(long, default_value_t = 0.3)]
    pub zero_fraction: f64,
    /// `pareto:SCALE:SHAPE`, `exponential:RATE`, `lognormal:MU:SIGMA` or `uniform:UPPER`.
    #[arg(long, default_value = "pareto:100:1.5")]
    pub tail: String,
    #[arg(long)]
    pub seed: u64,
    /// Pool CSV (`geomean_gain`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 50)]
    pub count: usize,
    #[arg(long)]
    pub seed: u64,
    /// Directory receiving one `.mps` file per instance.
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Parses a tail description such as `pareto:100:1.5`.
pub fn parse_tail(s: &str) -> CliResult<Tail> {
    let mut parts = s.split(':');
    let family = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
    let params: Vec<f64> = parts
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Input(format!("invalid tail parameters in `{s}`")))?;
    let tail = match (family.as_str(), params.as_slice()) {
        ("exponential" | "exp", &[rate]) => Tail::Exponential { rate },
        ("pareto", &[scale, shape]) => Tail::Pareto { scale, shape },
        ("lognormal", &[mu, sigma]) => Tail::LogNormal { mu, sigma },
        ("uniform", &[upper]) => Tail::Uniform { upper },
        _ => {
            return Err(CliError::Input(format!(
                "invalid tail `{s}` (expected pareto:SCALE:SHAPE, exponential:RATE, \
                 lognormal:MU:SIGMA or uniform:UPPER)"
            )))
        }
    };
    let ok = match tail {
        Tail::Exponential { rate } => rate > 0.0 && rate.is_finite(),
        Tail::Pareto { scale, shape } => scale > 0.0 && shape > 0.0 && scale.is_finite() && shape.is_finite(),
        Tail::LogNormal { mu, sigma } => mu.is_finite() && sigma > 0.0 && sigma.is_finite(),
        Tail::Uniform { upper } => upper > 0.0 && upper.is_finite(),
        _ => false,
    };
    if ok {
        Ok(tail)
    } else {
        Err(CliError::Input(format!("tail parameters out of range in `{s}`")))
    }
}

pub fn run(cmd: GenerateCommand, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        GenerateCommand::Pool(a) => {
            let tail = parse_tail(&a.tail)?;
            let pool = synthetic_pool(a.seed, a.size, a.zero_fraction, &tail).map_err(CliError::input)?;
            write_geomean_pool(create_output(&a.out)?, &pool).map_err(|e| write_failed(&a.out, e))?;
            writeln!(out, "wrote {} gains to {}", pool.len(), a.out.display()).map_err(CliError::internal)
        }
        GenerateCommand::Corpus(a) => {
            std::fs::create_dir_all(&a.out_dir)
                .map_err(|e| CliError::Input(format!("cannot create {}: {e}", a.out_dir.display())))?;
            let corpus = toy_corpus(a.seed, a.count);
            for mip in &corpus {
                let path = a.out_dir.join(format!("{}.mps", mip.name));
                save_mps(&path, mip).map_err(|e| write_failed(&path, e))?;
            }
            writeln!(out, "wrote {} instances to {}", corpus.len(), a.out_dir.display())
                .map_err(CliError::internal)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_specs() {
        assert_eq!(
            parse_tail("pareto:100:1.5").unwrap(),
            Tail::Pareto { scale: 100.0, shape: 1.5 }
        );
        assert_eq!(parse_tail("exp:2").unwrap(), Tail::Exponential { rate: 2.0 });
        assert!(parse_tail("pareto:100").is_err());
        assert!(parse_tail("normal:0:1").is_err());
        assert!(parse_tail("exponential:-1").is_err());
    }
}
