//! Runs the battery against one or more buildings, one query at a time, and persists each
//! result as it completes so an interrupted benchmark can resume.

use std::collections::HashSet;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use bems_agent::{run_query, AgentEnv, AgentProfile, Provider, RunOptions};
use bems_core::{BuildingProfile, EnergySeries, TokenPricing};
use bems_home::{CommandSource, Home, MemoryFilter, MemoryStore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::battery::{battery_for, Battery, BenchmarkQuery, SetupAction};
use crate::scoring::{score_run, RunRecord, ScoreRow};

pub const RESULTS_FILE: &str = "results.jsonl";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed results line {line}: {message}")]
    Results { line: usize, message: String },
    #[error("setup for {query_id} failed: {message}")]
    Setup { query_id: String, message: String },
}

/// One building under test.
pub struct BuildingRun<'a> {
    pub profile: BuildingProfile,
    pub series: EnergySeries,
    pub provider: &'a dyn Provider,
}

#[derive(Clone, Debug, Default)]
pub struct HarnessOptions {
    /// Where results, logs and memory files go; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    /// Skip queries already present in the results file.
    pub resume: bool,
    pub pricing: TokenPricing,
    pub model: Option<String>,
    /// Restrict to these query ids.
    pub only: Option<Vec<String>>,
}

/// A persisted result line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    pub record: RunRecord,
    pub score: ScoreRow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Abort {
    pub building_id: String,
    pub query_id: String,
    pub message: String,
}

#[derive(Clone, Debug, Default)]
pub struct BenchOutput {
    pub lines: Vec<ResultLine>,
    /// Set when the provider became unavailable; earlier rows are kept.
    pub aborted: Option<Abort>,
}

impl BenchOutput {
    pub fn rows(&self) -> Vec<ScoreRow> {
        self.lines.iter().map(|l| l.score.clone()).collect()
    }
}

pub fn read_results(path: &Path) -> Result<Vec<ResultLine>, HarnessError> {
    if !path.exists() {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| HarnessError::Results { line: i + 1, message: e.to_string() })?);
    }
    Ok(out)
}

fn apply_setup(home: &Home, memory: &RwLock<MemoryStore>, q: &BenchmarkQuery) -> Result<(), HarnessError> {
    let fail = |message: String| HarnessError::Setup { query_id: q.query_id.clone(), message };
    for action in &q.setup {
        match action {
            SetupAction::Device { device_id, attribute, value } => {
                home.devices_execute(device_id, attribute, value, CommandSource::User).map_err(|e| fail(e.to_string()))?;
            }
            SetupAction::Schedule { schedule } => {
                home.schedule_create(schedule.clone()).map_err(|e| fail(e.to_string()))?;
            }
            SetupAction::Memory { utterance } => {
                let mut store = memory.write().unwrap_or_else(|e| e.into_inner());
                let exists = store.sync(&MemoryFilter::All).iter().any(|m| m.utterance.as_deref() == Some(utterance));
                if !exists {
                    store.create_from_utterance(utterance, home.sim_clock()).map_err(|e| fail(e.to_string()))?;
                }
            }
        }
    }
    Ok(())
}

fn write_logs(dir: &Path, record: &RunRecord) -> Result<(), HarnessError> {
    let logs = dir.join("logs").join(&record.building_id);
    fs::create_dir_all(&logs)?;
    fs::write(logs.join(format!("{}.md", record.query_id)), record.run.to_markdown())?;
    let json = serde_json::to_string_pretty(&record.run.to_json()).map_err(std::io::Error::other)?;
    fs::write(logs.join(format!("{}.json", record.query_id)), json + "\n")?;
    Ok(())
}

fn write_memory(dir: &Path, building_id: &str, store: &MemoryStore) -> Result<(), HarnessError> {
    let path = dir.join("memory").join(format!("{building_id}.json"));
    fs::create_dir_all(path.parent().unwrap_or(dir))?;
    let json = serde_json::to_string_pretty(&store.to_document()).map_err(std::io::Error::other)?;
    fs::write(path, json + "\n")?;
    Ok(())
}

/// Runs each building's battery in order. Every query starts from the building's initial
/// device and schedule state; the memory store carries over from query to query.
pub fn run_battery(buildings: &[BuildingRun<'_>], opts: &HarnessOptions) -> Result<BenchOutput, HarnessError> {
    let results_path = opts.out_dir.as_ref().map(|d| d.join(RESULTS_FILE));
    let previous = match (&results_path, opts.resume) {
        (Some(p), true) => read_results(p)?,
        _ => vec![],
    };
    if let Some(dir) = &opts.out_dir {
        fs::create_dir_all(dir)?;
        if !opts.resume {
            File::create(dir.join(RESULTS_FILE))?;
        }
    }
    let done: HashSet<(String, String)> =
        previous.iter().map(|l| (l.record.building_id.clone(), l.record.query_id.clone())).collect();
    let mut output = BenchOutput { lines: previous.clone(), aborted: None };

    for b in buildings {
        let battery: Battery = battery_for(&b.profile, &b.series);
        let mut agent = AgentProfile::new(b.profile.clone());
        if let Some(m) = &opts.model {
            agent = agent.with_model(m.clone());
        }
        let memory = previous
            .iter()
            .rev()
            .find(|l| l.record.building_id == b.profile.building_id)
            .map(|l| serde_json::to_value(&l.record.memories_after).map_err(std::io::Error::other))
            .transpose()?
            .map(|doc| MemoryStore::from_document(&doc).map_err(|e| std::io::Error::other(e.to_string())))
            .transpose()?
            .unwrap_or_else(MemoryStore::new);
        let memory = Arc::new(RwLock::new(memory));
        let env = AgentEnv::from_profile(b.profile.clone(), b.series.clone()).with_memory(memory.clone());
        let initial = env.home.snapshot();

        for q in &battery.queries {
            if done.contains(&(b.profile.building_id.clone(), q.query_id.clone())) {
                continue;
            }
            if opts.only.as_ref().is_some_and(|only| !only.contains(&q.query_id)) {
                continue;
            }
            env.home.restore(&initial);
            apply_setup(&env.home, &memory, q)?;
            let schedules_before = env.home.schedule_sync(None);
            let memories_before = env.memory_snapshot().sync(&MemoryFilter::All);
            let run = run_query(&q.text, &env, &agent, b.provider, &RunOptions::deterministic(Some(q.query_id.clone())));
            if run.error.as_ref().is_some_and(|e| e.code == "provider_unavailable") {
                output.aborted = Some(Abort {
                    building_id: b.profile.building_id.clone(),
                    query_id: q.query_id.clone(),
                    message: run.error.map(|e| e.message).unwrap_or_default(),
                });
                return Ok(output);
            }
            let record = RunRecord {
                building_id: b.profile.building_id.clone(),
                query_id: q.query_id.clone(),
                devices_after: env.home.devices_sync(),
                schedules_before,
                schedules_after: env.home.schedule_sync(None),
                memories_before,
                memories_after: env.memory_snapshot().sync(&MemoryFilter::All),
                run,
            };
            let score = score_run(&record, q, &opts.pricing);
            let line = ResultLine { record, score };
            if let (Some(dir), Some(path)) = (&opts.out_dir, &results_path) {
                write_logs(dir, &line.record)?;
                write_memory(dir, &b.profile.building_id, &env.memory_snapshot())?;
                let mut f = OpenOptions::new().append(true).create(true).open(path)?;
                writeln!(f, "{}", serde_json::to_string(&line).map_err(std::io::Error::other)?)?;
            }
            output.lines.push(line);
        }
        env.home.restore(&initial);
    }
    Ok(output)
}

/// Recomputes every score from archived records against freshly built batteries.
pub fn rescore(lines: &[ResultLine], batteries: &[Battery], pricing: &TokenPricing) -> Vec<ScoreRow> {
    lines
        .iter()
        .filter_map(|l| {
            let battery = batteries.iter().find(|b| b.building_id == l.record.building_id)?;
            let q = battery.get(&l.record.query_id)?;
            Some(score_run(&l.record, q, pricing))
        })
        .collect()
}
