//! Command-line front end: sampling, exact checks, verification campaigns and reports.
//!
//! Exit status: 0 pass, 1 statistical or invariant failure, 2 budget exceeded,
//! 64 usage error.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use config::{destination, Format, Settings};
use tuplewise::campaign::{self, Campaign, CampaignParams};
use tuplewise::chain::{derive_transition_matrix, pattern_probability};
use tuplewise::measures::{exact_distribution, exact_moments, ord_sixth_moment_bruteforce, rademacher_sixth_moment_bruteforce, sixth_moment_gap};
use tuplewise::process::{audit_block_contents, decompose_blocks, sample_path};
use tuplewise::stats::CampaignReport;
use tuplewise::{MeasureKind, SamplerConfig};

pub const OUT_DIR_ENV: &str = "TUPLEWISE_OUT_DIR";
const EXIT_FAIL: u8 = 1;
const EXIT_BUDGET: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "tuplewise", version, about = "Exact sampler and verification suite for a 5-tuplewise independent ±1 process")]
struct Cli {
    #[command(flatten)]
    settings: Settings,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the process over --window and emit the path (k, X, N, anchor, J).
    SamplePath {
        /// Emit the level dump (k, W1..Wd, N, anchor, J) instead of the path.
        #[arg(long)]
        levels: bool,
    },
    /// Print exact rational quantities.
    Exact {
        #[arg(value_enum, default_value_t = Topic::All)]
        topic: Topic,
    },
    /// Run a verification campaign and write its report.
    Verify {
        /// One of: measures, chain, hierarchy, independence, moments, tails, blocks, double-one, cross-mode, all.
        campaign: String,
    },
    /// Audit the complete blocks of a sampled window.
    Blocks,
    /// Summarize campaign report files (default: every .json in the output directory).
    Report { files: Vec<PathBuf> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Topic {
    All,
    Measures,
    TransitionMatrix,
    GapIdentity,
    Pattern,
    Moments,
}

/// Errors that map to the usage exit status.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAIL),
        Err(e) => {
            if let Some(tuplewise::Error::BudgetExceeded { what, level, limit }) = e.downcast_ref::<tuplewise::Error>() {
                eprintln!("error: {e}");
                eprintln!("note: {}", budget_context(what, *level, *limit));
                return ExitCode::from(EXIT_BUDGET);
            }
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() || e.downcast_ref::<tuplewise::Error>().is_some_and(|t| matches!(t, tuplewise::Error::InvalidArgument(_))) {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_FAIL)
            }
        }
    }
}

/// How likely the tripped guard is, where that has a closed form.
fn budget_context(what: &str, level: u32, limit: u64) -> String {
    match what {
        "level guard" => format!(
            "each position needs more than {limit} levels with probability (3/8)^{limit} = {:.3e}; raise --budget-level",
            0.375f64.powi(limit as i32)
        ),
        "identity-pattern scan" => {
            let q = tuplewise::measures::rational_to_f64(&pattern_probability());
            format!(
                "level {level}: no identity pattern in {limit} columns has probability about (1 - {q:.3e})^{limit} = {:.3e}",
                (-(q * limit as f64)).exp()
            )
        }
        "backward coalescence" => format!("level {level}: six coupled copies did not meet within {limit} steps; raise --budget-backward"),
        _ => format!("level {level}: limit {limit}"),
    }
}

fn ci_mode() -> bool {
    std::env::var("CI").is_ok_and(|v| !v.is_empty() && v != "0" && v != "false")
}

fn seed(s: &Settings) -> Result<u64> {
    match s.seed {
        Some(seed) => Ok(seed),
        None if ci_mode() => Err(usage("--seed is required when CI is set")),
        None => Ok(0),
    }
}

fn sampler(s: &Settings) -> Result<SamplerConfig> {
    let mut cfg = SamplerConfig::with_seed(seed(s)?);
    if let Some(b) = s.budget_backward {
        cfg.backward_budget = b;
    }
    if let Some(l) = s.budget_level {
        cfg.level_guard = l;
    }
    if let Some(d) = s.depth {
        if d > cfg.level_guard {
            return Err(usage(format!("--depth {d} exceeds the level guard {}", cfg.level_guard)));
        }
        cfg.min_depth = d;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn emit(dest: Option<PathBuf>, content: &str) -> Result<()> {
    match dest {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    Ok(String::from_utf8(w.into_inner().map_err(|e| anyhow!("{e}"))?)?)
}

fn run(cli: Cli) -> Result<bool> {
    let s = cli.settings.resolve().map_err(|e| usage(format!("{e:#}")))?;
    if let Some(sig) = s.significance {
        if !(sig > 0.0 && sig < 1.0) {
            return Err(usage("--significance must lie in (0, 1)"));
        }
    }
    if s.replicates == Some(0) || s.positions == Some(0) {
        return Err(usage("--replicates and --positions must be at least 1"));
    }
    match cli.command {
        Command::SamplePath { levels } => sample_path_cmd(&s, levels),
        Command::Exact { topic } => exact_cmd(&s, topic),
        Command::Verify { campaign } => verify_cmd(&s, &campaign),
        Command::Blocks => blocks_cmd(&s),
        Command::Report { files } => report_cmd(&s, files),
    }
}

fn sample_path_cmd(s: &Settings, levels: bool) -> Result<bool> {
    let window = s.window().map_err(|e| usage(format!("{e:#}")))?;
    let cfg = sampler(s)?;
    let path = sample_path(window, &cfg)?;
    let format = s.format.unwrap_or(Format::Csv);
    let content = match (format, levels) {
        (Format::Csv, false) => path.to_csv(),
        (Format::Csv, true) => path.hierarchy.to_csv(s.depth.unwrap_or(path.hierarchy.depth()).max(1)),
        (Format::Json, _) => {
            let rows: Vec<Value> = path
                .records
                .iter()
                .zip(&path.x)
                .map(|(r, x)| {
                    let mut row = json!({"k": r.k, "X": x, "N": r.n, "anchor": r.anchor, "J": r.j.to_string()});
                    if levels {
                        let w: Vec<u8> = (1..=path.hierarchy.depth()).map(|u| path.hierarchy.symbol(u, r.k)).collect();
                        row["W"] = json!(w);
                    }
                    row
                })
                .collect();
            serde_json::to_string_pretty(&rows)? + "\n"
        }
    };
    emit(destination(s.out.as_deref(), "path.csv"), &content)?;
    Ok(true)
}

fn exact_sections(topic: Topic, depth: u32) -> Result<Vec<(&'static str, Vec<&'static str>, Vec<Vec<String>>)>> {
    let mut out = Vec::new();
    let want = |t: Topic| topic == Topic::All || topic == t;
    if want(Topic::TransitionMatrix) {
        let p = derive_transition_matrix();
        let rows = (1..=6u8)
            .map(|i| std::iter::once(i.to_string()).chain((1..=6u8).map(|j| p.entry(i, j).to_string())).collect())
            .collect();
        out.push(("transition-matrix", vec!["state", "1", "2", "3", "4", "5", "6"], rows));
    }
    if want(Topic::Measures) {
        let mut rows = Vec::new();
        for kind in MeasureKind::ALL {
            for level in kind.min_level()..=1 {
                for (v, p) in exact_distribution(level, kind)?.support() {
                    rows.push(vec![kind.name().to_string(), level.to_string(), v.to_string(), p.to_string()]);
                }
            }
        }
        out.push(("measures", vec!["measure", "level", "vector", "probability"], rows));
    }
    if want(Topic::GapIdentity) {
        let rows = vec![
            vec!["rademacher_sixth_moment".into(), rademacher_sixth_moment_bruteforce().to_string()],
            vec!["ord_sixth_moment".into(), ord_sixth_moment_bruteforce().to_string()],
            vec!["gap_level0".into(), sixth_moment_gap(0, [1; 6])?.to_string()],
        ]
        .into_iter()
        .chain((1..=3u32).map(|n| vec![format!("gap_full_blocks_level{n}"), sixth_moment_gap(n, [6u64.pow(n); 6]).expect("full blocks").to_string()]))
        .collect();
        out.push(("gap-identity", vec!["quantity", "value"], rows));
    }
    if want(Topic::Pattern) {
        out.push(("pattern", vec!["quantity", "value"], vec![vec!["identity_pattern_probability".into(), pattern_probability().to_string()]]));
    }
    if want(Topic::Moments) {
        let mut rows = Vec::new();
        for n in 0..=depth {
            let m = exact_moments(n);
            rows.push(vec![n.to_string(), "coordinate_mean_pos".into(), m.coordinate_mean_pos.to_string()]);
            if let Some(six) = &m.sixth_moment_sum_ord {
                rows.push(vec![n.to_string(), "sixth_moment_sum_ord".into(), six.to_string()]);
            }
            for (kind, parity) in &m.product_parity {
                let v = parity.map(|p| p.to_string()).unwrap_or_else(|| "random".into());
                rows.push(vec![n.to_string(), format!("product_parity_{}", kind.name()), v]);
            }
        }
        out.push(("moments", vec!["level", "quantity", "value"], rows));
    }
    Ok(out)
}

fn exact_cmd(s: &Settings, topic: Topic) -> Result<bool> {
    let depth = s.depth.unwrap_or(3);
    let sections = exact_sections(topic, depth)?;
    let content = match s.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut text = String::new();
            for (i, (name, header, rows)) in sections.iter().enumerate() {
                if sections.len() > 1 {
                    if i > 0 {
                        text.push('\n');
                    }
                    text.push_str(&format!("# {name}\n"));
                }
                text.push_str(&csv_string(header, rows.clone())?);
            }
            text
        }
        Format::Json => {
            let mut obj = serde_json::Map::new();
            for (name, header, rows) in &sections {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|r| Value::Object(header.iter().zip(r).map(|(h, v)| (h.to_string(), json!(v))).collect()))
                    .collect();
                obj.insert(name.to_string(), Value::Array(rows));
            }
            serde_json::to_string_pretty(&obj)? + "\n"
        }
    };
    emit(destination(s.out.as_deref(), "exact.txt"), &content)?;
    let checks = [campaign::transition_report(), campaign::exact_measures_report(), campaign::gap_identity_report()];
    Ok(checks.iter().all(|r| r.pass))
}

fn campaign_params(s: &Settings) -> Result<CampaignParams> {
    let seed = seed(s)?;
    let mut p = CampaignParams::new(seed);
    if let Some(b) = s.budget_backward {
        p.sampler.backward_budget = b;
    }
    if let Some(l) = s.budget_level {
        p.sampler.level_guard = l;
    }
    p.sampler.validate().map_err(|e| usage(e.to_string()))?;
    p.positions = s.positions;
    p.replicates = s.replicates;
    if let Some(n) = s.nmax {
        p.nmax = n;
    }
    if let Some(sig) = s.significance {
        p.significance = sig;
    }
    Ok(p)
}

fn report_text(report: &CampaignReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => csv_string(
            &["name", "value", "stderr", "target", "verdict"],
            report.estimates.iter().map(|e| {
                vec![
                    e.name.clone(),
                    e.value.to_string(),
                    e.stderr.to_string(),
                    e.target.to_string(),
                    serde_json::to_value(e.verdict).expect("verdict").as_str().unwrap_or_default().to_string(),
                ]
            }),
        )?,
    })
}

fn verify_cmd(s: &Settings, name: &str) -> Result<bool> {
    let params = campaign_params(s)?;
    let report = if name == "all" {
        campaign::run_all(&params)?
    } else {
        let c = Campaign::from_name(name).ok_or_else(|| usage(format!("unknown campaign `{name}`")))?;
        campaign::run_campaign(c, &params)?
    };
    let format = s.format.unwrap_or(Format::Json);
    let ext = if format == Format::Json { "json" } else { "csv" };
    emit(destination(s.out.as_deref(), &format!("verify-{name}.{ext}")), &report_text(&report, format)?)?;
    eprintln!("{}: {}", report.campaign, if report.pass { "pass" } else { "FAIL" });
    Ok(report.pass)
}

fn blocks_cmd(s: &Settings) -> Result<bool> {
    let window = s.window().map_err(|e| usage(format!("{e:#}")))?;
    let cfg = sampler(s)?;
    let path = sample_path(window, &cfg)?;
    let blocks = decompose_blocks(&path.hierarchy);
    let audit = audit_block_contents(&path, &blocks);
    let content = match s.format.unwrap_or(Format::Json) {
        Format::Json => audit.to_json() + "\n",
        Format::Csv => csv_string(
            &["m", "min", "max", "sum", "product", "pass"],
            audit.blocks.iter().map(|b| {
                vec![b.m.to_string(), b.min.to_string(), b.max.to_string(), b.sum.to_string(), b.product.to_string(), b.pass.to_string()]
            }),
        )?,
    };
    emit(destination(s.out.as_deref(), "blocks.json"), &content)?;
    for f in &audit.failures {
        eprintln!("violation: {f}");
    }
    Ok(audit.pass)
}

fn report_inputs(s: &Settings, files: Vec<PathBuf>) -> Result<Vec<PathBuf>> {
    if !files.is_empty() {
        return Ok(files);
    }
    let dir = std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .ok_or_else(|| usage(format!("no report files given and {OUT_DIR_ENV} is not set")))?;
    let mut found: Vec<PathBuf> = std::fs::read_dir(&dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json") && s.out.as_deref() != Some(p.as_path()))
        .collect();
    found.sort();
    if found.is_empty() {
        bail!(usage(format!("no .json reports in {}", dir.display())));
    }
    Ok(found)
}

fn summarize(path: &Path) -> Result<BTreeMap<&'static str, Value>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let estimates = v["estimates"].as_array().ok_or_else(|| anyhow!("{} is not a campaign report", path.display()))?;
    let failed = estimates.iter().filter(|e| e["verdict"] != "pass").count();
    let mut row = BTreeMap::new();
    row.insert("file", json!(path.file_name().map(|f| f.to_string_lossy().into_owned())));
    row.insert("campaign", v["campaign"].clone());
    row.insert("seed", v["seed"].clone());
    row.insert("estimates", json!(estimates.len()));
    row.insert("failed", json!(failed));
    row.insert("pass", json!(v["pass"].as_bool() == Some(true) && failed == 0));
    Ok(row)
}

fn report_cmd(s: &Settings, files: Vec<PathBuf>) -> Result<bool> {
    let rows = report_inputs(s, files)?.iter().map(|p| summarize(p)).collect::<Result<Vec<_>>>()?;
    let pass = rows.iter().all(|r| r["pass"] == json!(true));
    let content = match s.format.unwrap_or(Format::Csv) {
        Format::Json => serde_json::to_string_pretty(&json!({"reports": rows, "pass": pass}))? + "\n",
        Format::Csv => {
            let keys = ["file", "campaign", "seed", "estimates", "failed", "pass"];
            csv_string(
                &keys,
                rows.iter().map(|r| {
                    keys.iter()
                        .map(|k| match &r[k] {
                            Value::String(s) => s.clone(),
                            other => other.to_string(),
                        })
                        .collect()
                }),
            )?
        }
    };
    match &s.out {
        Some(p) => emit(Some(p.clone()), &content)?,
        None => print!("{content}"),
    }
    Ok(pass)
}
