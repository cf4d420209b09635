//! Command-line front end: closed-form evaluation, simulation, free-parameter
//! optimization, and figure-style parameter sweeps. JSON goes to stdout,
//! diagnostics to stderr, sweep data to CSV/JSON files with a manifest
//! sidecar.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use aoi_core::cli::{
    cmd_analytic, cmd_optimize, cmd_simulate, cmd_sweep, parse_f64_list, parse_u32_list,
    resolve_out_path, CliResult, RunLength, SweepFormat,
};
use aoi_core::model::DEFAULT_TAIL_TOL;
use aoi_core::{BatteryMode, Error, Policy, SystemParams};

#[derive(Parser)]
#[command(
    name = "aoi",
    version,
    about = "Average age of information for an energy-harvesting transmitter \
             on a slotted erasure channel: MDS or rateless coding, best-effort \
             or save-and-transmit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ParamArgs {
    /// Probability of a unit energy arrival per slot (0 < p <= 1)
    #[arg(long)]
    p: f64,
    /// Probability of symbol erasure per slot (0 <= delta < 1)
    #[arg(long)]
    delta: f64,
    /// Symbols per uncoded status update
    #[arg(long)]
    k: u32,
}

impl ParamArgs {
    fn build(&self) -> Result<SystemParams, Error> {
        SystemParams::new(self.p, self.delta, self.k)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form average AoI for one policy
    Analytic {
        /// MDS_ST, MDS_BE, RC_BE, or RC_ST
        #[arg(long)]
        policy: Policy,
        #[command(flatten)]
        params: ParamArgs,
        /// MDS blocklength (required for MDS policies, n >= k)
        #[arg(long)]
        n: Option<u32>,
        /// Saving duration in slots (required for RC_ST)
        #[arg(long)]
        m: Option<u32>,
        /// Absolute tail tolerance for truncated distributions
        #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
        tail_tol: f64,
    },
    /// Slot-level simulation, or renewal oracle sampling with --oracle
    Simulate {
        #[arg(long)]
        policy: Policy,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        m: Option<u32>,
        /// Slots to simulate (slot mode)
        #[arg(long, conflicts_with = "renewals")]
        horizon: Option<u64>,
        /// Renewals to sample (oracle mode)
        #[arg(long)]
        renewals: Option<u64>,
        /// RNG seed; mandatory so every run is reproducible
        #[arg(long)]
        seed: u64,
        /// Battery bookkeeping for MDS_ST: analysis-faithful or physical
        #[arg(long, default_value = "analysis-faithful")]
        battery_mode: BatteryMode,
        /// Sample the renewal-reward oracle instead of the slot process
        #[arg(long)]
        oracle: bool,
        /// Write per-renewal (q, t) samples to this CSV file
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Optimize the free policy parameter (n for MDS, m for RC_ST)
    Optimize {
        #[arg(long)]
        policy: Policy,
        #[command(flatten)]
        params: ParamArgs,
        /// Upper bound of the blocklength scan (default 10k + 50)
        #[arg(long)]
        n_max: Option<u32>,
        /// Upper bound of the saving-duration scan (default ceil(10k(1-p)/p) + 50)
        #[arg(long)]
        m_max: Option<u32>,
    },
    /// Optimized AoI for every policy over a (p, delta, k) grid
    Sweep {
        /// Comma-separated energy arrival rates, e.g. 1,0.7,0.4,0.2
        #[arg(long)]
        p: String,
        /// Comma-separated erasure rates, e.g. 0.3
        #[arg(long)]
        delta: String,
        /// Update lengths: "100", "10,20,50", or a range "10..200:10"
        #[arg(long)]
        k: String,
        /// Comma-separated policies (default: all four)
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
        tail_tol: f64,
        /// Output file (default: $AOI_OUT_DIR/sweep.<format> or ./sweep.<format>)
        #[arg(long)]
        out: Option<PathBuf>,
        /// csv or json
        #[arg(long, default_value = "csv")]
        format: SweepFormat,
    },
}

fn run() -> CliResult<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analytic {
            policy,
            params,
            n,
            m,
            tail_tol,
        } => {
            let doc = cmd_analytic(policy, &params.build()?, n, m, tail_tol)?;
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
        Command::Simulate {
            policy,
            params,
            n,
            m,
            horizon,
            renewals,
            seed,
            battery_mode,
            oracle,
            dump,
        } => {
            let length = match (horizon, renewals) {
                (Some(h), None) => RunLength::Horizon(h),
                (None, Some(r)) => RunLength::Renewals(r),
                _ => {
                    return Err(Error::InvalidConfig(
                        "specify exactly one of --horizon or --renewals".into(),
                    )
                    .into())
                }
            };
            let doc = cmd_simulate(
                policy,
                &params.build()?,
                n,
                m,
                battery_mode,
                length,
                seed,
                oracle,
                dump.as_deref(),
            )?;
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
        Command::Optimize {
            policy,
            params,
            n_max,
            m_max,
        } => {
            let doc = cmd_optimize(policy, &params.build()?, n_max, m_max)?;
            println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        }
        Command::Sweep {
            p,
            delta,
            k,
            policy,
            tail_tol,
            out,
            format,
        } => {
            let grid = aoi_core::search::SweepGrid {
                ps: parse_f64_list(&p)?,
                deltas: parse_f64_list(&delta)?,
                ks: parse_u32_list(&k)?,
            };
            let policies: Vec<Policy> = match policy {
                Some(spec) => spec
                    .split(',')
                    .map(|tok| tok.trim().parse())
                    .collect::<Result<_, _>>()?,
                None => Policy::ALL.to_vec(),
            };
            let out = resolve_out_path(out, format);
            let (data, manifest, warnings) = cmd_sweep(&grid, &policies, tail_tol, &out, format)?;
            eprintln!(
                "wrote {} and {} ({} warning{})",
                data.display(),
                manifest.display(),
                warnings,
                if warnings == 1 { "" } else { "s" }
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
