//! Command-line front end. Every command writes CSV (or a table for
//! `verify`) to stdout, or to `--out` when given.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::fmt17;
use crate::functionals::eval_functional;
use crate::gridfn::{Dim, GridFn};
use crate::optimize::{maximize_gridfn, AscentConfig, Init, Status};
use crate::quad::QuadConfig;
use crate::sequences::{parse_schedule, sweep};
use crate::series::{series_bound, series_table, SeriesConfig};
use crate::special::bliss_row;
use crate::verify::{run, Suite};
use crate::weights::{Perturbation, WeightSpec};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NONCONVERGENCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "bliss-moser",
    version,
    about = "Bliss constants, Moser sequences and limiting exponential functionals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bliss constants C_{N,k} and their limit.
    Constants {
        #[arg(long = "N")]
        n: u32,
        /// Comma-separated exponents, e.g. `1,2,1e2,1e6`.
        #[arg(long, default_value = "1,2,10,1e2,1e3,1e4,1e5,1e6")]
        k: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The functional along the Moser sequence w_j.
    Sweep {
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long = "N")]
        n: u32,
        /// `a:b:xR` geometric range or a comma list.
        #[arg(long, default_value = "1e2:1e8:x10")]
        j: String,
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// The functional at a function read from a JSON node file.
    Eval {
        #[arg(long = "fn")]
        func: PathBuf,
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long = "N")]
        n: u32,
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Taylor-series upper bound for sup I_β; terms table on stdout, summary on stderr.
    Series {
        #[arg(long = "N")]
        n: u32,
        #[arg(long)]
        beta: f64,
        /// Rows in the table.
        #[arg(long, default_value_t = 100)]
        terms: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Projected gradient ascent over nondecreasing functions in E_N.
    Optimize {
        #[command(flatten)]
        weight: WeightArgs,
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 64)]
        segments: usize,
        #[arg(long, default_value_t = 500)]
        iters: usize,
        /// Random start; the best grid broken line when absent.
        #[arg(long)]
        seed: Option<u64>,
        /// Starting function (nodes must lie on the ascent grid).
        #[arg(long = "fn")]
        func: Option<PathBuf>,
        #[command(flatten)]
        quad: QuadArgs,
        /// Writes the best function as a JSON node file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Runs invariant suites; exits 4 if any check fails.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma: f64,
    /// `none` or `triple_log`.
    #[arg(long, default_value = "none")]
    pub perturb: String,
}

impl WeightArgs {
    fn spec(&self) -> Result<WeightSpec, Error> {
        let p: Perturbation = self.perturb.parse()?;
        if !self.beta.is_finite() || !self.gamma.is_finite() {
            return Err(Error::InvalidArgument("β and γ must be finite".into()));
        }
        Ok(WeightSpec::new(self.beta, self.gamma, p))
    }
}

#[derive(Debug, Args)]
pub struct QuadArgs {
    #[arg(long = "rel-tol", default_value_t = 1e-9)]
    pub rel_tol: f64,
    #[arg(long = "abs-tol", default_value_t = 1e-12)]
    pub abs_tol: f64,
}

impl QuadArgs {
    fn config(&self) -> Result<QuadConfig, Error> {
        let cfg = QuadConfig::default()
            .with_rel_tol(self.rel_tol)
            .with_abs_tol(self.abs_tol);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NonFiniteExponent { .. } | Error::Overflow(_) => Failure::Numeric(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{t}` is not a number")))
        })
        .collect()
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_fn(path: &PathBuf) -> Result<GridFn, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Failure::Usage(format!("bad function file {}: {e}", path.display())))
}

/// Runs one command and returns its exit code.
pub fn execute(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            EXIT_USAGE
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            EXIT_NONCONVERGENCE
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Constants { n, k, out } => {
            let n = Dim::new(n)?;
            let mut csv = String::from("N,k,C,kC,C_N_limit\n");
            for k in parse_list(&k)? {
                let r = bliss_row(n, k)?;
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.n,
                    fmt17(r.k),
                    fmt17(r.c_value),
                    fmt17(r.k_times_c),
                    fmt17(r.limit)
                ));
            }
            emit(&out, &csv)?;
            Ok(EXIT_OK)
        }
        Command::Sweep {
            weight,
            n,
            j,
            quad,
            out,
        } => {
            let n = Dim::new(n)?;
            let js = if j.contains(':') {
                parse_schedule(&j)?
            } else {
                parse_list(&j)?
            };
            let table = sweep(&weight.spec()?, n, &js, &quad.config()?)?;
            emit(&out, &table.to_csv())?;
            for r in table
                .rows
                .iter()
                .filter(|r| r.error.is_some() || r.beyond_range)
            {
                eprintln!(
                    "j={}: {}",
                    r.j,
                    r.error.as_deref().unwrap_or("beyond the default range")
                );
            }
            Ok(if table.all_converged() {
                EXIT_OK
            } else {
                EXIT_NONCONVERGENCE
            })
        }
        Command::Eval {
            func,
            weight,
            n,
            quad,
            out,
        } => {
            let n = Dim::new(n)?;
            let f = read_fn(&func)?;
            let r = eval_functional(&f, &weight.spec()?, n, &quad.config()?)?;
            let csv = format!(
                "value,error_estimate,panels,converged\n{},{},{},{}\n",
                fmt17(r.value),
                fmt17(r.error_estimate),
                r.panels_used,
                r.converged
            );
            emit(&out, &csv)?;
            Ok(if r.converged {
                EXIT_OK
            } else {
                EXIT_NONCONVERGENCE
            })
        }
        Command::Series {
            n,
            beta,
            terms,
            out,
        } => {
            let n = Dim::new(n)?;
            if !(beta >= 0.0) || !beta.is_finite() {
                return Err(Failure::Usage(format!("β must be ≥ 0, got {beta}")));
            }
            let rows = series_table(n, beta, terms)?;
            let mut csv = String::from("k,term,partial_sum,ratio\n");
            for r in &rows {
                let ratio = r.ratio.map(fmt17).unwrap_or_default();
                csv.push_str(&format!(
                    "{},{},{},{}\n",
                    r.k,
                    fmt17(r.term),
                    fmt17(r.partial_sum),
                    ratio
                ));
            }
            emit(&out, &csv)?;
            if beta < 1.0 {
                let b = series_bound(n, beta, &SeriesConfig::default())?;
                eprintln!(
                    "bound={} terms={} tail_estimate={:.3e} tail_converged={}",
                    fmt17(b.value),
                    b.terms,
                    b.tail_estimate,
                    b.tail_converged
                );
                Ok(if b.tail_converged {
                    EXIT_OK
                } else {
                    EXIT_NONCONVERGENCE
                })
            } else {
                let last = rows.last().map_or(1.0, |r| r.partial_sum);
                eprintln!(
                    "β ≥ 1: no finite bound; partial sum after {terms} terms {}",
                    fmt17(last)
                );
                Ok(EXIT_OK)
            }
        }
        Command::Optimize {
            weight,
            n,
            segments,
            iters,
            seed,
            func,
            quad,
            out,
        } => {
            let n = Dim::new(n)?;
            let init = match (seed, func) {
                (Some(_), Some(_)) => {
                    return Err(Failure::Usage("--seed and --fn are exclusive".into()))
                }
                (Some(s), None) => Init::Seed(s),
                (None, Some(p)) => Init::Function(read_fn(&p)?),
                (None, None) => Init::ScanBest,
            };
            let cfg = AscentConfig {
                segments,
                iters,
                init,
                quad: quad.config()?,
                ..AscentConfig::default()
            };
            let r = maximize_gridfn(&weight.spec()?, n, &cfg)?;
            print!(
                "status,best_value,iterations,concentration\n{},{},{},{}\n",
                r.status,
                fmt17(r.best_value),
                r.iterations,
                fmt17(r.concentration)
            );
            if let Some(p) = &out {
                let json = serde_json::to_string_pretty(&r.best_fn).expect("serializable");
                emit(&Some(p.clone()), &json)?;
            }
            Ok(if r.status == Status::BudgetExhausted {
                EXIT_NONCONVERGENCE
            } else {
                EXIT_OK
            })
        }
        Command::Verify { suite } => {
            let suite: Suite = suite.parse()?;
            let report = run(suite)?;
            print!("{}", report.table());
            println!(
                "{} checks, {} violations",
                report.checks.len(),
                report.violations()
            );
            Ok(if report.passed() {
                EXIT_OK
            } else {
                EXIT_VERIFY
            })
        }
    }
}
