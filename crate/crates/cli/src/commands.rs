//! The work behind each subcommand, kept free of argument parsing so it can be tested.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use bems_agent::{run_query, AgentEnv, AgentProfile, AgentRun, RunOptions};
use bems_bench::battery::battery_for;
use bems_bench::fixture::{canonical_fixture, FixtureOptions};
use bems_bench::harness::{read_results, rescore, run_battery, Abort, BuildingRun, HarnessOptions, RESULTS_FILE};
use bems_bench::report::{aggregate_report, BenchmarkReport};
use bems_core::ingestion::{load_history, save_history, synth_month, IngestionReport, LoadOptions};
use bems_core::BuildingProfile;
use bems_home::MemoryStore;
use serde_json::Value;

use crate::config::ServiceConfig;
use crate::data::{build_provider, history_path, load_building};
use crate::error::CliError;

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_MD: &str = "report.md";

pub fn bench_dir(cfg: &ServiceConfig) -> PathBuf {
    cfg.data_dir.join("bench")
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Loads a history CSV and stores it as the building's series.
pub fn ingest(cfg: &ServiceConfig, csv: &Path, building_id: &str, resample: bool) -> Result<IngestionReport, CliError> {
    let opts = LoadOptions { resample, ..Default::default() };
    let (series, report) = load_history(csv, building_id, &opts).map_err(|e| CliError::Input(format!("{}: {e}", csv.display())))?;
    fs::create_dir_all(&cfg.data_dir)?;
    save_history(&series, &history_path(cfg, building_id)).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(report)
}

/// Writes a synthetic month for a preset building.
pub fn synth(cfg: &ServiceConfig, building_id: &str, seed: u64, days: Option<u32>) -> Result<PathBuf, CliError> {
    let p = BuildingProfile::preset(building_id).ok_or_else(|| CliError::Input(format!("unknown building {building_id}")))?;
    let series = synth_month(seed, &p, days.unwrap_or(p.days), p.season).map_err(|e| CliError::Input(e.to_string()))?;
    fs::create_dir_all(&cfg.data_dir)?;
    let path = history_path(cfg, building_id);
    save_history(&series, &path).map_err(|e| CliError::Input(e.to_string()))?;
    Ok(path)
}

/// Writes the canonical scripted fixture for every configured building, one file each.
pub fn fixtures(cfg: &ServiceConfig, out_dir: &Path, drop_classifications: usize) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for id in &cfg.buildings {
        let (profile, series) = load_building(cfg, id)?;
        let path = out_dir.join(format!("{id}.json"));
        canonical_fixture(&profile, &series, FixtureOptions { drop_classifications }).save(&path)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug)]
pub struct BenchSummary {
    pub rows: usize,
    pub report: BenchmarkReport,
    pub aborted: Option<Abort>,
    pub out_dir: PathBuf,
}

fn write_report(out_dir: &Path, report: &BenchmarkReport) -> Result<(), CliError> {
    write_json(&out_dir.join(REPORT_JSON), report)?;
    fs::write(out_dir.join(REPORT_MD), report.to_markdown())?;
    Ok(())
}

/// Runs the battery on the given buildings (all configured ones when empty). A provider outage
/// still writes the report for the rows that completed.
pub fn bench(
    cfg: &ServiceConfig,
    buildings: &[String],
    out_dir: Option<&Path>,
    only: Option<Vec<String>>,
    resume: bool,
) -> Result<BenchSummary, CliError> {
    let ids = if buildings.is_empty() { cfg.buildings.clone() } else { buildings.to_vec() };
    let out_dir = out_dir.map(Path::to_path_buf).unwrap_or_else(|| bench_dir(cfg));
    let mut data = Vec::new();
    let mut providers = Vec::new();
    for id in &ids {
        data.push(load_building(cfg, id)?);
        providers.push(build_provider(cfg, id)?);
    }
    let runs: Vec<BuildingRun> = data
        .into_iter()
        .zip(&providers)
        .map(|((profile, series), p)| BuildingRun { profile, series, provider: p.as_ref() })
        .collect();
    let opts = HarnessOptions {
        out_dir: Some(out_dir.clone()),
        resume,
        pricing: cfg.pricing.pricing(),
        model: cfg.provider.model.clone(),
        only,
    };
    let out = run_battery(&runs, &opts).map_err(|e| CliError::Input(e.to_string()))?;
    let report = aggregate_report(&out.rows(), cfg.outlier_threshold_s);
    write_report(&out_dir, &report)?;
    Ok(BenchSummary { rows: out.lines.len(), report, aborted: out.aborted, out_dir })
}

/// Recomputes scores and the report from an archived results file.
pub fn rescore_dir(cfg: &ServiceConfig, out_dir: &Path) -> Result<BenchmarkReport, CliError> {
    let lines = read_results(&out_dir.join(RESULTS_FILE)).map_err(|e| CliError::Input(e.to_string()))?;
    if lines.is_empty() {
        return Err(CliError::Input(format!("no results in {}", out_dir.display())));
    }
    let mut batteries = Vec::new();
    for id in lines.iter().map(|l| l.record.building_id.clone()).collect::<indexmap::IndexSet<_>>() {
        let (profile, series) = load_building(cfg, &id)?;
        batteries.push(battery_for(&profile, &series));
    }
    let rows = rescore(&lines, &batteries, &cfg.pricing.pricing());
    let report = aggregate_report(&rows, cfg.outlier_threshold_s);
    write_report(out_dir, &report)?;
    Ok(report)
}

/// Saves a run's chart artifacts and returns their paths.
pub fn save_artifacts(cfg: &ServiceConfig, run: &AgentRun) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = Vec::new();
    for (i, a) in run.response.artifacts.iter().enumerate() {
        let path = cfg.data_dir.join("charts").join(format!("{}-{}.json", run.run_id, i + 1));
        write_json(&path, a)?;
        paths.push(path);
    }
    Ok(paths)
}

/// A line-oriented session: one query per line until `exit`, `quit` or end of input.
pub fn chat(cfg: &ServiceConfig, building_id: &str, input: impl BufRead, mut output: impl Write) -> Result<usize, CliError> {
    let (profile, series) = load_building(cfg, building_id)?;
    let provider = build_provider(cfg, building_id)?;
    let memory_path = cfg.data_dir.join("memory").join(format!("{building_id}.json"));
    let memory = if memory_path.exists() {
        MemoryStore::load(&memory_path).map_err(|e| CliError::Input(e.to_string()))?
    } else {
        MemoryStore::new()
    };
    let memory = Arc::new(RwLock::new(memory));
    let mut agent = AgentProfile::new(profile.clone());
    if let Some(m) = &cfg.provider.model {
        agent = agent.with_model(m.clone());
    }
    let env = AgentEnv::from_profile(profile, series).with_memory(memory.clone());
    let mut count = 0;
    for line in input.lines() {
        let line = line?;
        let q = line.trim();
        if q.is_empty() {
            continue;
        }
        if matches!(q.to_ascii_lowercase().as_str(), "exit" | "quit") {
            break;
        }
        let run = run_query(q, &env, &agent, provider.as_ref(), &RunOptions::default());
        count += 1;
        match &run.error {
            Some(e) => writeln!(output, "[{}] {}", e.code, e.message)?,
            None => writeln!(output, "{}", run.response.text)?,
        }
        for p in save_artifacts(cfg, &run)? {
            writeln!(output, "chart: {}", p.display())?;
        }
        writeln!(output, "({:.1} s, {} tokens)", run.wall_time_s(), run.token_usage.total_tokens)?;
        let store = env.memory_snapshot();
        if !store.is_empty() {
            fs::create_dir_all(memory_path.parent().unwrap_or(&cfg.data_dir))?;
            store.save(&memory_path).map_err(|e| CliError::Input(e.to_string()))?;
        }
    }
    Ok(count)
}

/// The stored report, if a benchmark has been run.
pub fn stored_report(cfg: &ServiceConfig) -> Option<Value> {
    let text = fs::read_to_string(bench_dir(cfg).join(REPORT_JSON)).ok()?;
    serde_json::from_str(&text).ok()
}
