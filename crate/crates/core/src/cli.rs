//! Command execution behind the `aoi` binary: analytic evaluation,
//! simulation, free-parameter optimization, and grid sweeps, with JSON on
//! stdout and CSV/JSON files for sweeps. Every output embeds or accompanies
//! a run manifest, and numbers are serialized with 12 significant digits so
//! reruns diff cleanly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde_json::{json, Map, Value};

use crate::analytic::{aoi_mds_be, aoi_mds_st, aoi_rc_be, aoi_rc_st, rc_be_st_gap};
use crate::error::Error;
use crate::model::{
    AoiBreakdown, BatteryMode, Policy, PolicyConfig, SystemParams, DEFAULT_TAIL_TOL,
};
use crate::search::{best_m, best_n, default_m_max, default_n_max, sweep, SweepGrid, SweepRow};
use crate::sim::{renewal_oracle_mds_st, renewal_oracle_rc_st, simulate_policy};

/// Environment variable naming the default output directory for sweep files.
pub const OUT_DIR_ENV: &str = "AOI_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Echo of a run: the command, its fully resolved arguments, the seed when
/// one applies, the tool version, and an ISO-8601 timestamp. Reruns with an
/// identical manifest produce identical numeric output; only the timestamp
/// differs.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub command: String,
    pub args: Value,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(command: &str, args: Value, seed: Option<u64>) -> Self {
        RunManifest {
            command: command.to_string(),
            args,
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "command": self.command,
            "args": self.args,
            "seed": self.seed,
            "tool_version": self.tool_version,
            "timestamp": self.timestamp,
        })
    }
}

/// Rounds to 12 significant digits, the serialization precision for every
/// floating-point value this tool emits.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("round-trip")
}

/// Decimal text with 12 significant digits.
pub fn fmt_sig12(x: f64) -> String {
    format!("{}", round_sig12(x))
}

/// JSON number with 12 significant digits.
pub fn sig12(x: f64) -> Value {
    json!(round_sig12(x))
}

fn params_json(params: &SystemParams) -> Value {
    json!({
        "p": sig12(params.p()),
        "delta": sig12(params.delta()),
        "k": params.k(),
        "q": sig12(params.q()),
    })
}

fn breakdown_json(doc: &mut Map<String, Value>, b: &AoiBreakdown) {
    doc.insert("aoi".into(), sig12(b.aoi));
    doc.insert("mean_q".into(), sig12(b.mean_q));
    doc.insert("mean_t".into(), sig12(b.mean_t));
}

fn gap_warning(params: &SystemParams) -> String {
    format!(
        "rateless convention gap: the save-and-transmit expression at m = 0 gives \
         (3k+1-q)/(2q) while the best-effort closed form gives (3k+2-2q)/(2q); the \
         difference (1-q)/(2q) = {} is a documented accounting-convention gap and is \
         reported, not reconciled",
        fmt_sig12(rc_be_st_gap(params))
    )
}

// ---------------------------------------------------------------------------
// analytic
// ---------------------------------------------------------------------------

pub fn cmd_analytic(
    policy: Policy,
    params: &SystemParams,
    n: Option<u32>,
    m: Option<u32>,
    tail_tol: f64,
) -> CliResult<Value> {
    let mut warnings: Vec<String> = Vec::new();
    let require_n =
        || n.ok_or_else(|| Error::InvalidConfig(format!("{policy} requires a blocklength --n")));
    let breakdown = match policy {
        Policy::MdsSt => aoi_mds_st(params, require_n()?, tail_tol)?,
        Policy::MdsBe => aoi_mds_be(params, require_n()?)?,
        Policy::RcBe => {
            warnings.push(gap_warning(params));
            aoi_rc_be(params)?
        }
        Policy::RcSt => {
            let m = m.ok_or_else(|| {
                Error::InvalidConfig("RC_ST requires a saving duration --m".into())
            })?;
            if m == 0 {
                warnings.push(gap_warning(params));
            }
            aoi_rc_st(params, m, tail_tol)?
        }
    };

    let args = json!({
        "policy": policy.as_str(),
        "p": sig12(params.p()),
        "delta": sig12(params.delta()),
        "k": params.k(),
        "n": n,
        "m": m,
        "tail_tol": sig12(tail_tol),
    });
    let mut doc = Map::new();
    doc.insert("command".into(), json!("analytic"));
    doc.insert("policy".into(), json!(policy.as_str()));
    doc.insert("params".into(), params_json(params));
    if let Some(n) = n {
        doc.insert("n".into(), json!(n));
    }
    if let Some(m) = m {
        doc.insert("m".into(), json!(m));
    }
    breakdown_json(&mut doc, &breakdown);
    doc.insert("warnings".into(), json!(warnings));
    doc.insert(
        "manifest".into(),
        RunManifest::new("analytic", args, None).to_json(),
    );
    Ok(Value::Object(doc))
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Length specification for a simulation run: a slot horizon for the
/// slot-level simulator, or a renewal count for the oracle samplers.
#[derive(Debug, Clone, Copy)]
pub enum RunLength {
    Horizon(u64),
    Renewals(u64),
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_simulate(
    policy: Policy,
    params: &SystemParams,
    n: Option<u32>,
    m: Option<u32>,
    battery_mode: BatteryMode,
    length: RunLength,
    seed: u64,
    oracle: bool,
    dump: Option<&Path>,
) -> CliResult<Value> {
    let mut warnings: Vec<String> = Vec::new();
    let tail_tol = DEFAULT_TAIL_TOL;

    let require_n =
        || n.ok_or_else(|| Error::InvalidConfig(format!("{policy} requires a blocklength --n")));
    let require_m =
        || m.ok_or_else(|| Error::InvalidConfig("RC_ST requires a saving duration --m".into()));

    let mut doc = Map::new();
    doc.insert("command".into(), json!("simulate"));
    doc.insert("policy".into(), json!(policy.as_str()));
    doc.insert("params".into(), params_json(params));
    if let Some(n) = n {
        doc.insert("n".into(), json!(n));
    }
    if let Some(m) = m {
        doc.insert("m".into(), json!(m));
    }
    doc.insert("seed".into(), json!(seed));

    let (aoi, se) = match (oracle, length) {
        (true, RunLength::Renewals(renewals)) => {
            let est = match policy {
                Policy::MdsSt => renewal_oracle_mds_st(params, require_n()?, renewals, seed)?,
                Policy::RcSt => renewal_oracle_rc_st(params, require_m()?, renewals, seed)?,
                other => {
                    return Err(Error::InvalidConfig(format!(
                        "oracle sampling exists for MDS_ST and RC_ST only, not {other}"
                    ))
                    .into())
                }
            };
            doc.insert("mode".into(), json!("oracle"));
            doc.insert("renewals".into(), json!(est.renewals));
            doc.insert("mean_q".into(), sig12(est.mean_q));
            doc.insert("mean_t".into(), sig12(est.mean_t));
            doc.insert("se_mean_q".into(), sig12(est.se_q));
            doc.insert("se_mean_t".into(), sig12(est.se_t));
            (est.aoi, Some(est.se_aoi))
        }
        (false, RunLength::Horizon(horizon)) => {
            let cfg = PolicyConfig {
                policy,
                n,
                m,
                battery_mode,
            };
            cfg.validate(params)?;
            let stats = simulate_policy(params, &cfg, horizon, seed)?;
            if let (Some(path), Some(q), Some(t)) =
                (dump, stats.q_samples.as_ref(), stats.t_samples.as_ref())
            {
                dump_renewals_csv(path, q, t)?;
                doc.insert("dump".into(), json!(path.display().to_string()));
            }
            doc.insert("mode".into(), json!("slot"));
            doc.insert("horizon".into(), json!(stats.total_slots));
            doc.insert("deliveries".into(), json!(stats.deliveries));
            doc.insert(
                "renewals".into(),
                json!(stats.t_samples.as_ref().map_or(0, |t| t.len())),
            );
            if policy == Policy::MdsSt {
                doc.insert("battery_mode".into(), json!(battery_mode.as_str()));
            }
            let se = stats.aoi_standard_error();
            (stats.empirical_aoi(), se)
        }
        (true, RunLength::Horizon(_)) => {
            return Err(Error::InvalidConfig(
                "oracle sampling runs on --renewals, not --horizon".into(),
            )
            .into())
        }
        (false, RunLength::Renewals(_)) => {
            return Err(Error::InvalidConfig(
                "the slot simulator runs on --horizon; use --oracle with --renewals".into(),
            )
            .into())
        }
    };

    let reference = match policy {
        Policy::MdsSt => {
            if battery_mode == BatteryMode::Physical {
                warnings.push(
                    "physical battery mode: the analytic value assumes the battery is \
                     drained after every round and upper-bounds this simulation"
                        .into(),
                );
            }
            Some(aoi_mds_st(params, require_n()?, tail_tol)?.aoi)
        }
        Policy::MdsBe => Some(aoi_mds_be(params, require_n()?)?.aoi),
        Policy::RcBe => {
            warnings.push(format!(
                "slot-level accounting converges to the zero-saving save-and-transmit \
                 value, {} below this closed form; see the documented convention gap",
                fmt_sig12(rc_be_st_gap(params))
            ));
            Some(aoi_rc_be(params)?.aoi)
        }
        Policy::RcSt => {
            if params.p() < 1.0 {
                if !oracle {
                    warnings.push(
                        "the analytic model counts delivery at the end of the no-outage \
                         phase; the slot simulator resets age at the k-th received symbol, \
                         so its AoI sits at or below the analytic value"
                            .into(),
                    );
                }
                Some(aoi_rc_st(params, require_m()?, tail_tol)?.aoi)
            } else {
                None
            }
        }
    };

    doc.insert("aoi".into(), sig12(aoi));
    match se {
        Some(se) => doc.insert("standard_error".into(), sig12(se)),
        None => doc.insert("standard_error".into(), Value::Null),
    };
    match reference {
        Some(reference) => {
            let z = se.map(|se| (aoi - reference) / se);
            doc.insert(
                "analytic".into(),
                json!({
                    "aoi": sig12(reference),
                    "z_score": z.map(sig12),
                }),
            );
        }
        None => {
            doc.insert("analytic".into(), Value::Null);
        }
    }
    doc.insert("warnings".into(), json!(warnings));

    let args = json!({
        "policy": policy.as_str(),
        "p": sig12(params.p()),
        "delta": sig12(params.delta()),
        "k": params.k(),
        "n": n,
        "m": m,
        "battery_mode": battery_mode.as_str(),
        "oracle": oracle,
        "length": match length {
            RunLength::Horizon(h) => json!({"horizon": h}),
            RunLength::Renewals(r) => json!({"renewals": r}),
        },
    });
    doc.insert(
        "manifest".into(),
        RunManifest::new("simulate", args, Some(seed)).to_json(),
    );
    Ok(Value::Object(doc))
}

fn dump_renewals_csv(path: &Path, q: &[f64], t: &[u64]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["q", "t"])?;
    for (qi, ti) in q.iter().zip(t.iter()) {
        w.write_record([fmt_sig12(*qi), ti.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// optimize
// ---------------------------------------------------------------------------

pub fn cmd_optimize(
    policy: Policy,
    params: &SystemParams,
    n_max: Option<u32>,
    m_max: Option<u32>,
) -> CliResult<Value> {
    let mut warnings: Vec<String> = Vec::new();
    let (name, bound, opt) = match policy {
        Policy::MdsSt | Policy::MdsBe => {
            let bound = n_max.unwrap_or_else(|| default_n_max(params));
            ("n", bound, best_n(params, policy, bound)?)
        }
        Policy::RcSt => {
            let bound = m_max.unwrap_or_else(|| default_m_max(params));
            ("m", bound, best_m(params, bound)?)
        }
        Policy::RcBe => {
            return Err(
                Error::InvalidConfig("RC_BE has no free parameter to optimize".into()).into(),
            )
        }
    };
    if opt.at_bound {
        warnings.push(format!(
            "optimal {name} = {} sits on the search bound; rerun with a larger bound",
            opt.value
        ));
    }

    let args = json!({
        "policy": policy.as_str(),
        "p": sig12(params.p()),
        "delta": sig12(params.delta()),
        "k": params.k(),
        "search_bound": bound,
    });
    let mut doc = Map::new();
    doc.insert("command".into(), json!("optimize"));
    doc.insert("policy".into(), json!(policy.as_str()));
    doc.insert("params".into(), params_json(params));
    doc.insert("free_param".into(), json!(name));
    doc.insert("search_bound".into(), json!(bound));
    doc.insert("best".into(), json!(opt.value));
    breakdown_json(&mut doc, &opt.breakdown);
    doc.insert("at_bound".into(), json!(opt.at_bound));
    doc.insert("warnings".into(), json!(warnings));
    doc.insert(
        "manifest".into(),
        RunManifest::new("optimize", args, None).to_json(),
    );
    Ok(Value::Object(doc))
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Output encoding for sweep files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepFormat {
    Csv,
    Json,
}

impl SweepFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            SweepFormat::Csv => "csv",
            SweepFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for SweepFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(SweepFormat::Csv),
            "json" => Ok(SweepFormat::Json),
            other => Err(Error::InvalidParam(format!(
                "unknown format '{other}' (expected csv or json)"
            ))),
        }
    }
}

/// Resolves the sweep output path: an explicit `--out` wins; otherwise the
/// file lands in the directory named by `AOI_OUT_DIR` (or the working
/// directory) as `sweep.<ext>`.
pub fn resolve_out_path(out: Option<PathBuf>, format: SweepFormat) -> PathBuf {
    out.unwrap_or_else(|| {
        let dir = std::env::var(OUT_DIR_ENV).unwrap_or_else(|_| ".".into());
        PathBuf::from(dir).join(format!("sweep.{}", format.extension()))
    })
}

/// CSV column order for sweep rows.
pub const SWEEP_CSV_HEADER: [&str; 8] = [
    "p",
    "delta",
    "k",
    "policy",
    "free_param",
    "aoi",
    "mean_q",
    "mean_t",
];

fn sweep_record(row: &SweepRow) -> [String; 8] {
    [
        fmt_sig12(row.params.p()),
        fmt_sig12(row.params.delta()),
        row.params.k().to_string(),
        row.policy.as_str().to_string(),
        row.free_param.map_or_else(String::new, |v| v.to_string()),
        fmt_sig12(row.aoi),
        fmt_sig12(row.mean_q),
        fmt_sig12(row.mean_t),
    ]
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SWEEP_CSV_HEADER)?;
    for row in rows {
        w.write_record(sweep_record(row))?;
    }
    w.flush()?;
    Ok(())
}

fn sweep_row_json(row: &SweepRow) -> Value {
    json!({
        "p": sig12(row.params.p()),
        "delta": sig12(row.params.delta()),
        "k": row.params.k(),
        "policy": row.policy.as_str(),
        "free_param": row.free_param,
        "aoi": sig12(row.aoi),
        "mean_q": sig12(row.mean_q),
        "mean_t": sig12(row.mean_t),
    })
}

pub fn write_sweep_json(path: &Path, rows: &[SweepRow]) -> CliResult<()> {
    let body: Vec<Value> = rows.iter().map(sweep_row_json).collect();
    let mut file = fs::File::create(path)?;
    serde_json::to_writer_pretty(&mut file, &body).map_err(std::io::Error::other)?;
    file.write_all(b"\n")?;
    Ok(())
}

/// Runs a sweep and writes the data file plus its manifest sidecar
/// (`<out>.manifest.json`). Returns the two paths and the number of
/// annotated rows.
pub fn cmd_sweep(
    grid: &SweepGrid,
    policies: &[Policy],
    tail_tol: f64,
    out: &Path,
    format: SweepFormat,
) -> CliResult<(PathBuf, PathBuf, usize)> {
    let rows = sweep(grid, policies, tail_tol)?;
    match format {
        SweepFormat::Csv => write_sweep_csv(out, &rows)?,
        SweepFormat::Json => write_sweep_json(out, &rows)?,
    }

    let notes: Vec<Value> = rows
        .iter()
        .filter_map(|row| {
            row.note.as_ref().map(|note| {
                json!({
                    "p": sig12(row.params.p()),
                    "delta": sig12(row.params.delta()),
                    "k": row.params.k(),
                    "policy": row.policy.as_str(),
                    "at_bound": row.at_bound,
                    "note": note,
                })
            })
        })
        .collect();
    let note_count = notes.len();

    let args = json!({
        "p": grid.ps.iter().map(|&v| sig12(v)).collect::<Vec<_>>(),
        "delta": grid.deltas.iter().map(|&v| sig12(v)).collect::<Vec<_>>(),
        "k": grid.ks,
        "policies": policies.iter().map(|p| p.as_str()).collect::<Vec<_>>(),
        "tail_tol": sig12(tail_tol),
        "format": format.extension(),
        "out": out.display().to_string(),
    });
    let manifest = json!({
        "manifest": RunManifest::new("sweep", args, None).to_json(),
        "rows": rows.len(),
        "warnings": notes,
    });
    let manifest_path = PathBuf::from(format!("{}.manifest.json", out.display()));
    let mut file = fs::File::create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut file, &manifest).map_err(std::io::Error::other)?;
    file.write_all(b"\n")?;
    Ok((out.to_path_buf(), manifest_path, note_count))
}

// ---------------------------------------------------------------------------
// flag parsing helpers
// ---------------------------------------------------------------------------

/// Parses a comma-separated list of floats.
pub fn parse_f64_list(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParam(format!("cannot parse '{tok}' as a number")))
        })
        .collect()
}

/// Parses an integer list: `"100"`, `"10,20,30"`, or an inclusive range
/// `"10..200"` with optional step `"10..200:10"`.
pub fn parse_u32_list(s: &str) -> Result<Vec<u32>, Error> {
    if let Some(((lo, hi), step)) = split_range(s) {
        let step = step.unwrap_or(1).max(1);
        if hi < lo {
            return Err(Error::InvalidParam(format!("empty range {lo}..{hi}")));
        }
        return Ok((lo..=hi).step_by(step as usize).collect());
    }
    s.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<u32>()
                .map_err(|_| Error::InvalidParam(format!("cannot parse '{tok}' as an integer")))
        })
        .collect()
}

fn split_range(s: &str) -> Option<((u32, u32), Option<u32>)> {
    let (range, step) = match s.split_once(':') {
        Some((r, st)) => (r, st.trim().parse::<u32>().ok()),
        None => (s, None),
    };
    let (lo, hi) = range.split_once("..")?;
    Some(((lo.trim().parse().ok()?, hi.trim().parse().ok()?), step))
}
