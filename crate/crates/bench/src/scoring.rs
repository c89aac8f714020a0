//! The scoring rubric: a pure function of the archived run record and the battery query.

use std::collections::BTreeMap;

use bems_agent::{tool_family, AgentRun, ResponseType};
use bems_core::{AttributeValue, DeviceState, Primary, Secondary, TokenPricing, TokenUsage};
use bems_home::{MemoryEntry, Outcome, ScheduleEntry, Trigger};
use serde::{Deserialize, Serialize};

use crate::battery::{AnswerSpec, BenchmarkQuery, DeviceExpect, MemoryMatch, ScheduleMatch, StateDiffSpec};

/// One executed query with the home and memory state around it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub building_id: String,
    pub query_id: String,
    pub run: AgentRun,
    pub devices_after: Vec<DeviceState>,
    pub schedules_before: Vec<ScheduleEntry>,
    pub schedules_after: Vec<ScheduleEntry>,
    pub memories_before: Vec<MemoryEntry>,
    pub memories_after: Vec<MemoryEntry>,
}

/// One row of the score card.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub building_id: String,
    pub query_id: String,
    pub primary: Primary,
    pub secondary: Secondary,
    pub latency_s: f64,
    pub classification_executed: bool,
    /// Absent when the run carried no usable classification.
    pub primary_correct: Option<bool>,
    pub secondary_correct: Option<bool>,
    pub tool_call_count: usize,
    pub tool_counts: BTreeMap<String, usize>,
    pub tool_call_score: f64,
    pub response_score: f64,
    pub token_usage: TokenUsage,
    /// Model cost of the query in currency units.
    pub cost: f64,
    pub response_type: ResponseType,
}

pub fn score_run(record: &RunRecord, query: &BenchmarkQuery, pricing: &TokenPricing) -> ScoreRow {
    let run = &record.run;
    let label = run.classification.as_ref().and_then(|c| c.label());
    let mut tool_counts = BTreeMap::new();
    for c in &run.tool_calls {
        *tool_counts.entry(c.name.clone()).or_insert(0) += 1;
    }
    ScoreRow {
        building_id: record.building_id.clone(),
        query_id: query.query_id.clone(),
        primary: query.label.primary,
        secondary: query.label.secondary,
        latency_s: run.wall_time_s(),
        classification_executed: run.classification_executed(),
        primary_correct: label.map(|l| l.primary == query.label.primary),
        secondary_correct: label.map(|l| l.secondary == query.label.secondary),
        tool_call_count: run.tool_calls.len(),
        tool_counts,
        tool_call_score: tool_score(run, &query.expected_tools),
        response_score: response_score(record, query),
        token_usage: run.token_usage,
        cost: pricing.cost(&run.token_usage).as_decimal(),
        response_type: run.response.response_type,
    }
}

/// 1 when every expected tool ran and nothing outside their families did, 0.5 for a partial
/// overlap, else 0. A query expecting no tools scores 1 only if none were called.
pub fn tool_score(run: &AgentRun, expected: &[String]) -> f64 {
    let called: Vec<&str> = run.tool_names();
    if expected.is_empty() {
        return if called.is_empty() { 1.0 } else { 0.0 };
    }
    let families: Vec<&str> = expected.iter().filter_map(|t| tool_family(t)).collect();
    if called.iter().any(|t| tool_family(t).is_none_or(|f| !families.contains(&f))) {
        return 0.0;
    }
    let hit = expected.iter().filter(|e| called.contains(&e.as_str())).count();
    if hit == expected.len() {
        1.0
    } else if hit > 0 {
        0.5
    } else {
        0.0
    }
}

pub fn response_score(record: &RunRecord, query: &BenchmarkQuery) -> f64 {
    let run = &record.run;
    match run.response.response_type {
        ResponseType::NeedsClarification => return if query.ambiguous { 0.5 } else { 0.0 },
        ResponseType::Error => return 0.0,
        _ => {}
    }
    let expected_ok = || run.tool_calls.iter().any(|c| c.ok && query.expected_tools.contains(&c.name));
    let text = &run.response.text;
    match &query.answer {
        AnswerSpec::Numeric { value, rel_tol, abs_tol, .. } => {
            let tol = (rel_tol * value.abs()).max(*abs_tol);
            if numbers_in(text).iter().any(|x| (x - value).abs() <= tol + 1e-12) {
                1.0
            } else if expected_ok() {
                0.5
            } else {
                0.0
            }
        }
        AnswerSpec::SetEquality { expected, universe } => {
            let said = mentioned(text, universe);
            let want: Vec<&String> = expected.iter().collect();
            let hit = said.iter().filter(|s| want.contains(s)).count();
            if hit == want.len() && said.len() == want.len() {
                1.0
            } else if hit > 0 {
                0.5
            } else {
                0.0
            }
        }
        AnswerSpec::Response { expected, must_mention, artifact } => {
            if run.response.response_type != *expected {
                return 0.0;
            }
            let total = must_mention.len() + usize::from(artifact.is_some());
            let met = must_mention.iter().filter(|m| contains_word(text, m)).count()
                + usize::from(artifact.as_ref().is_some_and(|kinds| run.response.artifacts.iter().any(|a| kinds.contains(&a.kind))));
            if met == total {
                1.0
            } else if met > 0 || expected_ok() {
                0.5
            } else {
                0.0
            }
        }
        AnswerSpec::StateDiff(spec) => state_diff_score(record, spec),
    }
}

/// Every decimal number in the text. Commas between digits are thousands separators; a minus
/// sign counts only when it does not follow a letter or digit.
pub fn numbers_in(text: &str) -> Vec<f64> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let neg = chars[i] == '-'
            && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())
            && (i == 0 || !chars[i - 1].is_alphanumeric());
        let starts = chars[i].is_ascii_digit() && (i == 0 || !(chars[i - 1].is_ascii_digit() || chars[i - 1] == '.'));
        if !(neg || starts) {
            i += 1;
            continue;
        }
        let mut s = String::new();
        if neg {
            s.push('-');
            i += 1;
        }
        let mut dot = false;
        while i < chars.len() {
            let c = chars[i];
            let next_digit = chars.get(i + 1).is_some_and(|c| c.is_ascii_digit());
            if c.is_ascii_digit() {
                s.push(c);
            } else if c == ',' && next_digit && s.ends_with(|p: char| p.is_ascii_digit()) {
            } else if c == '.' && !dot && next_digit {
                dot = true;
                s.push('.');
            } else {
                break;
            }
            i += 1;
        }
        if let Ok(v) = s.parse() {
            out.push(v);
        }
    }
    out
}

fn normalize(s: &str) -> String {
    s.to_lowercase().replace('_', " ")
}

fn boundary(text: &[char], start: usize, end: usize) -> bool {
    (start == 0 || !text[start - 1].is_alphanumeric()) && (end >= text.len() || !text[end].is_alphanumeric())
}

fn find_spans(text: &[char], needle: &[char]) -> Vec<(usize, usize)> {
    if needle.is_empty() || needle.len() > text.len() {
        return vec![];
    }
    (0..=text.len() - needle.len())
        .filter(|&i| text[i..i + needle.len()] == *needle && boundary(text, i, i + needle.len()))
        .map(|i| (i, i + needle.len()))
        .collect()
}

pub fn contains_word(text: &str, word: &str) -> bool {
    let t: Vec<char> = normalize(text).chars().collect();
    let w: Vec<char> = normalize(word).chars().collect();
    !find_spans(&t, &w).is_empty()
}

/// The universe items named in the text. Longer names claim their spans first, so
/// "Air Compressor 2" does not also count as "Air Compressor".
pub fn mentioned(text: &str, universe: &[String]) -> Vec<String> {
    let t: Vec<char> = normalize(text).chars().collect();
    let mut order: Vec<&String> = universe.iter().collect();
    order.sort_by_key(|u| std::cmp::Reverse(u.chars().count()));
    let mut taken: Vec<(usize, usize)> = Vec::new();
    let mut out = Vec::new();
    for item in order {
        let w: Vec<char> = normalize(item).chars().collect();
        let free: Vec<(usize, usize)> =
            find_spans(&t, &w).into_iter().filter(|&(s, e)| taken.iter().all(|&(ts, te)| e <= ts || s >= te)).collect();
        if !free.is_empty() {
            taken.extend(free);
            out.push(item.clone());
        }
    }
    out
}

fn value_eq(a: &AttributeValue, b: &AttributeValue) -> bool {
    match (a, b) {
        (AttributeValue::Number(x), AttributeValue::Number(y)) => (x - y).abs() < 1e-9,
        (AttributeValue::Text(x), AttributeValue::Text(y)) => x.eq_ignore_ascii_case(y),
        _ => a == b,
    }
}

fn device_met(devices: &[DeviceState], e: &DeviceExpect) -> bool {
    devices
        .iter()
        .find(|d| d.device_id == e.device_id)
        .and_then(|d| d.attributes.get(&e.attribute))
        .is_some_and(|v| value_eq(v, &e.value))
}

pub fn schedule_matches(m: &ScheduleMatch, s: &ScheduleEntry) -> bool {
    let (at, recurrence, cond) = match &s.trigger {
        Trigger::Time { at, recurrence } => (Some(at.format("%H:%M").to_string()), Some(*recurrence), None),
        Trigger::Condition { device_id, .. } => (None, None, Some(device_id.as_str())),
    };
    m.device_id == s.device_id
        && m.attribute.as_ref().is_none_or(|a| *a == s.attribute)
        && m.value.as_ref().is_none_or(|v| value_eq(v, &s.value))
        && m.at.as_ref().is_none_or(|a| at.as_deref() == Some(a.as_str()))
        && m.recurrence.is_none_or(|r| recurrence == Some(r))
        && m.condition_device.as_ref().is_none_or(|d| cond == Some(d.as_str()))
        && m.enabled.is_none_or(|e| e == s.enabled)
}

pub fn memory_matches(m: &MemoryMatch, e: &MemoryEntry) -> bool {
    let has = |hay: Option<&str>, needle: &str| hay.is_some_and(|h| h.to_lowercase().contains(&needle.to_lowercase()));
    m.device.as_ref().is_none_or(|d| e.target_device.as_deref() == Some(d.as_str()))
        && m.attribute.as_ref().is_none_or(|a| e.attribute.as_deref() == Some(a.as_str()))
        && m.value.as_ref().is_none_or(|v| has(e.value.as_deref(), v))
        && m.text.as_ref().is_none_or(|t| has(Some(&e.summary), t))
}

/// Greedy one-to-one matching; returns (matched expectations, unmatched actual items).
fn match_greedy<P, T>(expected: &[P], actual: &[&T], ok: impl Fn(&P, &T) -> bool) -> (usize, usize) {
    let mut used = vec![false; actual.len()];
    let mut met = 0;
    for p in expected {
        if let Some(i) = (0..actual.len()).find(|&i| !used[i] && ok(p, actual[i])) {
            used[i] = true;
            met += 1;
        }
    }
    (met, used.iter().filter(|u| !**u).count())
}

struct Diff<'a, T> {
    added: Vec<&'a T>,
    removed: Vec<&'a T>,
    changed: Vec<&'a T>,
}

fn diff<'a, T: PartialEq>(before: &'a [T], after: &'a [T], id: impl Fn(&T) -> &str, same: impl Fn(&T, &T) -> bool) -> Diff<'a, T> {
    let find = |xs: &'a [T], k: &str| xs.iter().find(|x| id(x) == k);
    Diff {
        added: after.iter().filter(|a| find(before, id(a)).is_none()).collect(),
        removed: before.iter().filter(|b| find(after, id(b)).is_none()).collect(),
        changed: after.iter().filter(|a| find(before, id(a)).is_some_and(|b| !same(a, b))).collect(),
    }
}

fn state_diff_score(record: &RunRecord, spec: &StateDiffSpec) -> f64 {
    let mut checks = 0;
    let mut met = 0;
    let mut extras = 0;
    for e in &spec.devices {
        checks += 1;
        met += usize::from(device_met(&record.devices_after, e));
    }
    extras += record
        .run
        .state_changes
        .iter()
        .filter(|a| matches!(a.outcome, Outcome::Applied) && a.applied != a.previous)
        .filter(|a| !spec.devices.iter().any(|e| e.device_id == a.device_id && e.attribute == a.attribute))
        .count();

    let sd = diff(&record.schedules_before, &record.schedules_after, |s| &s.schedule_id, |a, b| {
        ScheduleEntry { last_fired: None, ..a.clone() } == ScheduleEntry { last_fired: None, ..b.clone() }
    });
    for (want, got) in [(&spec.schedules_added, &sd.added), (&spec.schedules_removed, &sd.removed), (&spec.schedules_changed, &sd.changed)] {
        let (m, left) = match_greedy(want, got, schedule_matches);
        checks += want.len();
        met += m;
        extras += left;
    }
    let md = diff(&record.memories_before, &record.memories_after, |m| &m.memory_id, |a, b| a == b);
    for (want, got) in [(&spec.memories_added, &md.added), (&spec.memories_removed, &md.removed), (&spec.memories_changed, &md.changed)] {
        let (m, left) = match_greedy(want, got, memory_matches);
        checks += want.len();
        met += m;
        extras += left;
    }
    if let Some(t) = spec.response_type {
        checks += 1;
        met += usize::from(record.run.response.response_type == t);
    }
    if checks == 0 {
        return if extras == 0 { 1.0 } else { 0.0 };
    }
    if met == checks && extras == 0 {
        1.0
    } else if met > 0 {
        0.5
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn extracts_numbers() {
        assert_eq!(numbers_in("You used 1,234.56 kWh, down -3.5% from 2025-09-01."), vec![1234.56, -3.5, 2025.0, 9.0, 1.0]);
        assert_eq!(numbers_in("item-2 costs $0.75."), vec![2.0, 0.75]);
        assert!(numbers_in("no digits").is_empty());
    }

    #[test]
    fn longest_names_claim_first() {
        let u: Vec<String> = ["Air Compressor", "Air Compressor 2", "Range"].map(String::from).to_vec();
        assert_eq!(mentioned("Check Air Compressor 2 and the range.", &u), vec!["Air Compressor 2".to_string(), "Range".to_string()]);
        assert_eq!(mentioned("Arrange things", &u), Vec::<String>::new());
    }

    #[test]
    fn word_matching_is_whole_word() {
        assert!(contains_word("No, there are none.", "no"));
        assert!(!contains_word("None found.", "no"));
        assert!(contains_word("runs at coffee_maker", "Coffee Maker"));
        assert!(!contains_word("at 07:00", "7:00"));
    }
}
