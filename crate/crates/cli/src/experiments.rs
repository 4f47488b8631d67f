//! Simulation runs, seed sweeps and aggregate reports.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use wsmac_core::metrics::{emit_report, mean_std, ReportFormat, ReportRow};
use wsmac_sim::scenarios::{feedback_script, five_node_bursty, five_node_quiet, grid16_bursty};
use wsmac_sim::{run_simulation, ProtocolKind, SimConfig, SimResult};

use crate::failure::{CmdResult, Failure, InputContext};
use crate::inputs::ms_to_us;
use crate::manifest::{RunManifest, MANIFEST_FILE};

fn load_config(path: &Path) -> CmdResult<SimConfig> {
    let text = fs::read_to_string(path).input(format!("cannot read {}", path.display()))?;
    let cfg = SimConfig::from_json(&text).input(format!("invalid config {}", path.display()))?;
    cfg.validate()
        .input(format!("invalid config {}", path.display()))?;
    Ok(cfg)
}

/// Runs one simulation and checks the guarantees every result must hold.
fn simulate_checked(cfg: &SimConfig) -> CmdResult<SimResult> {
    let r = run_simulation(cfg).input(format!("simulation with seed {} failed", cfg.seed))?;
    if !r.ledger_summary.is_conserved() {
        return Err(Failure::internal(format!(
            "packet ledger does not balance: {:?}",
            r.ledger_summary
        )));
    }
    if !(0.0..=100.0).contains(&r.duty_cycle_pct) {
        return Err(Failure::internal(format!(
            "duty-cycle {} out of range",
            r.duty_cycle_pct
        )));
    }
    Ok(r)
}

fn result_json(r: &SimResult) -> CmdResult<String> {
    Ok(r.to_json().map_err(Failure::internal)? + "\n")
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Simulation config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Skip the per-packet ledger CSV.
    #[arg(long)]
    pub no_ledger: bool,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn simulate(args: &SimulateArgs) -> CmdResult<()> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let mut m = RunManifest::new("simulate", args, &args.out)?;
    m.input(&args.config);
    m.seeds.push(cfg.seed);
    m.write(
        "config.json",
        cfg.to_json().map_err(Failure::internal)? + "\n",
    )?;
    let r = simulate_checked(&cfg)?;
    m.write("result.json", result_json(&r)?)?;
    if !args.no_ledger {
        m.write("ledger.csv", r.ledger_csv())?;
    }
    println!(
        "{}: PDR {:.2}%, duty-cycle {:.3}%, {} packets, {} trigger(s)",
        r.protocol,
        r.pdr_pct,
        r.duty_cycle_pct,
        r.ledger_summary.generated,
        r.triggers.len()
    );
    for e in &r.errors {
        eprintln!("warning: {e}");
    }
    m.finish()
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => ReportFormat::Csv,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

type CellKey = (String, String, String, String, u64);

fn cell_key(r: &SimResult) -> CellKey {
    (
        r.labels.scenario.clone(),
        r.protocol.clone(),
        r.labels.environment.clone(),
        r.labels.interference_type.clone(),
        r.t_data_us,
    )
}

/// One report row per (scenario, protocol, environment, interference, T)
/// cell, averaged over its seeds.
pub fn aggregate(results: &[SimResult]) -> Vec<ReportRow> {
    let mut cells: BTreeMap<CellKey, Vec<&SimResult>> = BTreeMap::new();
    for r in results {
        cells.entry(cell_key(r)).or_default().push(r);
    }
    cells
        .into_iter()
        .map(
            |((scenario, protocol, environment, interference_type, t_data_us), mut rs)| {
                rs.sort_by_key(|r| r.seed);
                let pdr: Vec<f64> = rs.iter().map(|r| r.pdr_pct).collect();
                let duty: Vec<f64> = rs.iter().map(|r| r.duty_cycle_pct).collect();
                let (pdr_pct, pdr_std) = mean_std(&pdr);
                let (duty_cycle_pct, duty_cycle_std) = mean_std(&duty);
                ReportRow {
                    scenario,
                    protocol,
                    environment,
                    interference_type,
                    t_data_s: t_data_us as f64 / 1e6,
                    seed: rs
                        .iter()
                        .map(|r| r.seed.to_string())
                        .collect::<Vec<_>>()
                        .join(";"),
                    pdr_pct,
                    pdr_std,
                    duty_cycle_pct,
                    duty_cycle_std,
                }
            },
        )
        .collect()
}

fn write_reports(m: &mut RunManifest, rows: &[ReportRow]) -> CmdResult<()> {
    for (name, format) in [
        ("report.csv", ReportFormat::Csv),
        ("report.json", ReportFormat::Json),
    ] {
        m.write(name, emit_report(rows, format).map_err(Failure::internal)?)?;
    }
    Ok(())
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    /// Simulation configs; repeat the flag for a matrix.
    #[arg(long = "config", required = true)]
    pub configs: Vec<PathBuf>,
    /// Seeds per config, counted up from the config's own seed.
    #[arg(long, default_value_t = 3)]
    pub seeds: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn compare(args: &CompareArgs) -> CmdResult<()> {
    if args.seeds == 0 {
        return Err(Failure::input("--seeds must be at least 1"));
    }
    let mut m = RunManifest::new("compare", args, &args.out)?;
    let mut jobs = Vec::new();
    for (k, path) in args.configs.iter().enumerate() {
        m.input(path);
        let cfg = load_config(path)?;
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("config");
        for s in 0..args.seeds {
            let mut c = cfg.clone();
            c.seed = cfg.seed + s;
            jobs.push((format!("results/{k:02}-{stem}-seed{}.json", c.seed), c));
        }
    }
    m.seeds = jobs.iter().map(|(_, c)| c.seed).collect();
    // each simulation stays single-threaded; independent runs fan out
    let results: Vec<SimResult> = jobs
        .par_iter()
        .map(|(_, c)| simulate_checked(c))
        .collect::<CmdResult<_>>()?;
    for ((name, _), r) in jobs.iter().zip(&results) {
        m.write(name, result_json(r)?)?;
    }
    let rows = aggregate(&results);
    write_reports(&mut m, &rows)?;
    print!(
        "{}",
        String::from_utf8_lossy(&emit_report(&rows, ReportFormat::Csv).map_err(Failure::internal)?)
    );
    m.finish()
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    /// Result files, or directories scanned for result files.
    #[arg(required = true)]
    pub results: Vec<PathBuf>,
    /// Format printed to stdout; both formats are written to --out.
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: PathBuf,
}

fn read_result(path: &Path) -> CmdResult<SimResult> {
    let text = fs::read_to_string(path).input(format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).input(format!("{} is not a simulation result", path.display()))
}

fn collect_results(paths: &[PathBuf], m: &mut RunManifest) -> CmdResult<Vec<SimResult>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .input(format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "json"))
                .filter(|f| f.file_name().is_some_and(|n| n != MANIFEST_FILE))
                .collect();
            files.sort();
            for f in files {
                // directories may also hold configs and reports
                let parsed = fs::read_to_string(&f)
                    .ok()
                    .and_then(|t| serde_json::from_str::<SimResult>(&t).ok());
                if let Some(r) = parsed {
                    m.input(&f);
                    out.push(r);
                }
            }
        } else {
            m.input(p);
            out.push(read_result(p)?);
        }
    }
    if out.is_empty() {
        return Err(Failure::input("no simulation results found"));
    }
    Ok(out)
}

pub fn report(args: &ReportArgs) -> CmdResult<()> {
    let mut m = RunManifest::new("report", args, &args.out)?;
    let results = collect_results(&args.results, &mut m)?;
    m.seeds = results.iter().map(|r| r.seed).collect();
    let rows = aggregate(&results);
    write_reports(&mut m, &rows)?;
    let bytes = emit_report(&rows, args.format.into()).map_err(Failure::internal)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    m.finish()
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ScenarioName {
    /// Five-node tree, no interference.
    FiveNodeQuiet,
    /// Five-node tree under one bursty jammer.
    FiveNodeBursty,
    /// 4 × 4 grid with two bursty jammers.
    Grid16Bursty,
    /// Five-node tree whose jammer switches from silent to continuous.
    Feedback,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
pub enum ProtocolArg {
    Lucid,
    Lpl,
}

#[derive(Debug, Args, Serialize)]
pub struct ScenarioArgs {
    #[arg(value_enum)]
    pub name: ScenarioName,
    #[arg(long, value_enum, default_value_t = ProtocolArg::Lucid)]
    pub protocol: ProtocolArg,
    /// Transmissions per packet for the LPL baseline.
    #[arg(long, default_value_t = 3)]
    pub max_tx: u32,
    #[arg(long, default_value_t = 2)]
    pub n_slot: u32,
    #[arg(long, default_value_t = 60_000.0)]
    pub t_data_ms: f64,
    #[arg(long, default_value_t = 7_200_000.0)]
    pub duration_ms: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Writes a built-in scenario as an editable config file.
pub fn scenario(args: &ScenarioArgs) -> CmdResult<()> {
    let protocol = match args.protocol {
        ProtocolArg::Lucid => ProtocolKind::ReceiverAware,
        ProtocolArg::Lpl => ProtocolKind::LplBaseline {
            max_tx: args.max_tx,
        },
    };
    let t = ms_to_us(args.t_data_ms, "t-data-ms")?;
    let d = ms_to_us(args.duration_ms, "duration-ms")?;
    let cfg = match args.name {
        ScenarioName::FiveNodeQuiet => five_node_quiet(protocol, t, d, args.seed),
        ScenarioName::FiveNodeBursty => five_node_bursty(protocol, t, d, args.seed),
        ScenarioName::Grid16Bursty => grid16_bursty(protocol, args.n_slot, t, d, args.seed),
        ScenarioName::Feedback => feedback_script(d, args.seed),
    };
    cfg.validate()
        .input("scenario parameters are inconsistent")?;
    let mut m = RunManifest::new("scenario", args, &args.out)?;
    m.seeds.push(args.seed);
    m.write(
        "config.json",
        cfg.to_json().map_err(Failure::internal)? + "\n",
    )?;
    println!(
        "config written to {}",
        args.out.join("config.json").display()
    );
    m.finish()
}
