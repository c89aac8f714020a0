//! Historical CSV: `timestamp,<channel>...` with decimal kW values.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDateTime, Timelike};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::series::{validate_series, ChannelRole, EnergySeries};
use crate::units::INTERVAL_MINUTES;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";
const TIMESTAMP_HEADERS: &[&str] = &["timestamp", "time", "datetime", "date_time", "local_15min", "localminute"];

/// Channel-name → role rules. Exact overrides win; otherwise the first keyword that
/// appears as a whole word (or phrase) in the lower-cased name decides; else appliance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoleMap {
    #[serde(default)]
    pub overrides: IndexMap<String, ChannelRole>,
    pub keywords: Vec<(String, ChannelRole)>,
}

impl Default for RoleMap {
    fn default() -> Self {
        let kw = |k: &str, r| (k.to_string(), r);
        RoleMap {
            overrides: IndexMap::new(),
            keywords: vec![
                kw("grid", ChannelRole::Grid),
                kw("solar", ChannelRole::Generation),
                kw("pv", ChannelRole::Generation),
                kw("photovoltaic", ChannelRole::Generation),
                kw("car1", ChannelRole::EvCharger),
                kw("car", ChannelRole::EvCharger),
                kw("ev", ChannelRole::EvCharger),
                kw("electric vehicle", ChannelRole::EvCharger),
            ],
        }
    }
}

impl RoleMap {
    pub fn with_override(mut self, channel: &str, role: ChannelRole) -> Self {
        self.overrides.insert(channel.to_string(), role);
        self
    }

    pub fn role_for(&self, channel: &str) -> ChannelRole {
        if let Some(r) = self.overrides.get(channel) {
            return *r;
        }
        let words: Vec<String> = channel
            .to_ascii_lowercase()
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect();
        for (keyword, role) in &self.keywords {
            let kws: Vec<&str> = keyword.split_whitespace().collect();
            if !kws.is_empty() && words.windows(kws.len()).any(|w| w.iter().zip(&kws).all(|(a, b)| a == b)) {
                return *role;
            }
        }
        ChannelRole::Appliance
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadOptions {
    pub role_map: RoleMap,
    /// Average irregular or finer-grained samples into 15-minute buckets instead of failing.
    pub resample: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// 1-based line number in the file (the header is line 1).
    pub line: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestionReport {
    pub rows_read: usize,
    pub rows_accepted: usize,
    pub rows_rejected: usize,
    pub rejections: Vec<Rejection>,
    pub channels_found: Vec<String>,
    pub gaps_filled: usize,
    pub resampled: bool,
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub fn load_history(path: &Path, building_id: &str, opts: &LoadOptions) -> Result<(EnergySeries, IngestionReport), IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
    read_history(file, building_id, opts)
}

/// Parses, gap-fills, optionally resamples and validates a history CSV.
pub fn read_history<R: Read>(reader: R, building_id: &str, opts: &LoadOptions) -> Result<(EnergySeries, IngestionReport), IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(IngestError::NoDataRows),
        Some(r) => r.map_err(|e| IngestError::MalformedHeader(e.to_string()))?,
    };
    let first = header.get(0).unwrap_or("").trim().trim_start_matches('\u{feff}').to_ascii_lowercase();
    if !TIMESTAMP_HEADERS.contains(&first.as_str()) {
        return Err(IngestError::MalformedHeader(format!("first column must be a timestamp column, found {first:?}")));
    }
    let channels: Vec<String> = header.iter().skip(1).map(|h| h.trim().to_string()).collect();
    if channels.is_empty() {
        return Err(IngestError::MalformedHeader("no channel columns".into()));
    }
    for (i, c) in channels.iter().enumerate() {
        if c.is_empty() {
            return Err(IngestError::MalformedHeader(format!("column {} has an empty name", i + 2)));
        }
        if channels[..i].contains(c) {
            return Err(IngestError::MalformedHeader(format!("duplicate channel {c:?}")));
        }
    }

    let mut report = IngestionReport { channels_found: channels.clone(), ..Default::default() };
    let mut rows: Vec<(NaiveDateTime, Vec<f64>)> = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        report.rows_read += 1;
        let reject = |report: &mut IngestionReport, reason: String| {
            report.rows_rejected += 1;
            report.rejections.push(Rejection { line, reason });
        };
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                reject(&mut report, e.to_string());
                continue;
            }
        };
        if rec.len() != channels.len() + 1 {
            reject(&mut report, format!("expected {} fields, found {}", channels.len() + 1, rec.len()));
            continue;
        }
        let Some(t) = parse_timestamp(&rec[0]) else {
            reject(&mut report, format!("unparseable timestamp {:?}", &rec[0]));
            continue;
        };
        let values: Result<Vec<f64>, String> = rec
            .iter()
            .skip(1)
            .zip(&channels)
            .map(|(v, c)| match v.trim().parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(format!("bad value {v:?} in channel {c:?}")),
            })
            .collect();
        match values {
            Ok(values) => rows.push((t, values)),
            Err(reason) => reject(&mut report, reason),
        }
    }
    report.rows_accepted = rows.len();
    if rows.is_empty() {
        return Err(IngestError::NoDataRows);
    }
    for w in rows.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(IngestError::NonMonotone { at: w[1].0 });
        }
    }

    let step = Duration::minutes(INTERVAL_MINUTES as i64);
    let off_grid = rows
        .iter()
        .find(|(t, _)| t.second() != 0 || t.nanosecond() != 0 || t.minute() % INTERVAL_MINUTES != 0);
    if let Some((at, _)) = off_grid {
        if !opts.resample {
            return Err(IngestError::BadInterval { at: *at });
        }
        rows = resample(rows);
        report.resampled = true;
    }

    let mut filled: Vec<(NaiveDateTime, Vec<f64>)> = Vec::with_capacity(rows.len());
    for (t, values) in rows {
        if let Some((prev_t, prev_v)) = filled.last() {
            let missing = (t - *prev_t).num_minutes() / INTERVAL_MINUTES as i64 - 1;
            if missing >= 2 {
                return Err(IngestError::Gap { after: *prev_t, missing: missing as usize });
            }
            if missing == 1 {
                let mid: Vec<f64> = prev_v.iter().zip(&values).map(|(a, b)| (a + b) / 2.0).collect();
                filled.push((*prev_t + step, mid));
                report.gaps_filled += 1;
            }
        }
        filled.push((t, values));
    }

    let mut series = EnergySeries::new(building_id, filled[0].0);
    for (c, name) in channels.iter().enumerate() {
        let samples = filled.iter().map(|(_, v)| v[c]).collect();
        series.push_channel(name, opts.role_map.role_for(name), samples);
    }
    let validation = validate_series(&series);
    if !validation.is_ok() {
        return Err(IngestError::Invalid(validation));
    }
    Ok((series, report))
}

/// Floors each timestamp to its 15-minute bucket and averages the samples per bucket.
fn resample(rows: Vec<(NaiveDateTime, Vec<f64>)>) -> Vec<(NaiveDateTime, Vec<f64>)> {
    let mut out: Vec<(NaiveDateTime, Vec<f64>, usize)> = Vec::new();
    for (t, values) in rows {
        let bucket = t
            .with_second(0)
            .and_then(|x| x.with_nanosecond(0))
            .and_then(|x| x.with_minute(t.minute() - t.minute() % INTERVAL_MINUTES))
            .unwrap_or(t);
        match out.last_mut() {
            Some((b, sums, n)) if *b == bucket => {
                for (s, v) in sums.iter_mut().zip(&values) {
                    *s += v;
                }
                *n += 1;
            }
            _ => out.push((bucket, values, 1)),
        }
    }
    out.into_iter()
        .map(|(b, sums, n)| (b, sums.into_iter().map(|s| s / n as f64).collect()))
        .collect()
}

/// Writes a series as CSV. Values use the shortest representation that parses back to the same `f64`.
pub fn write_history<W: Write>(series: &EnergySeries, writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| IngestError::Io(e.to_string());
    let mut header = vec!["timestamp".to_string()];
    header.extend(series.channels.keys().cloned());
    w.write_record(&header).map_err(io)?;
    for i in 0..series.len() {
        let mut row = vec![series.timestamp(i).format(TIMESTAMP_FORMAT).to_string()];
        row.extend(series.channels.values().map(|v| v[i].to_string()));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| IngestError::Io(e.to_string()))
}

pub fn save_history(series: &EnergySeries, path: &Path) -> Result<(), IngestError> {
    let file = std::fs::File::create(path).map_err(|e| IngestError::Io(format!("{}: {e}", path.display())))?;
    write_history(series, std::io::BufWriter::new(file))
}

pub fn history_to_string(series: &EnergySeries) -> String {
    let mut buf = Vec::new();
    let _ = write_history(series, &mut buf);
    String::from_utf8(buf).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<(EnergySeries, IngestionReport), IngestError> {
        read_history(text.as_bytes(), "b", &LoadOptions::default())
    }

    #[test]
    fn default_roles() {
        let m = RoleMap::default();
        assert_eq!(m.role_for("grid"), ChannelRole::Grid);
        assert_eq!(m.role_for("Electrical Grid"), ChannelRole::Grid);
        assert_eq!(m.role_for("solar"), ChannelRole::Generation);
        assert_eq!(m.role_for("Photovoltaic System"), ChannelRole::Generation);
        assert_eq!(m.role_for("car1"), ChannelRole::EvCharger);
        assert_eq!(m.role_for("Electric Vehicle Charger"), ChannelRole::EvCharger);
        assert_eq!(m.role_for("Oven"), ChannelRole::Appliance);
        assert_eq!(m.role_for("Vent Hood"), ChannelRole::Appliance);
        let m = m.with_override("Oven", ChannelRole::Generation);
        assert_eq!(m.role_for("Oven"), ChannelRole::Generation);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(load("").unwrap_err().to_string(), "no data rows");
        assert_eq!(load("timestamp,grid\n").unwrap_err().to_string(), "no data rows");
    }

    #[test]
    fn bad_header() {
        assert!(matches!(load("when,grid\n2018-01-01T00:00:00,1\n"), Err(IngestError::MalformedHeader(_))));
        assert!(matches!(load("timestamp,grid,grid\n"), Err(IngestError::MalformedHeader(_))));
    }

    #[test]
    fn single_gap_interpolated_longer_gap_rejected() {
        let text = "timestamp,grid,oven\n2018-01-01T00:00:00,1.0,0.5\n2018-01-01T00:30:00,3.0,1.5\n";
        let (s, r) = load(text).unwrap();
        assert_eq!(r.gaps_filled, 1);
        assert_eq!(s.channel("grid").unwrap(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.channel("oven").unwrap(), &[0.5, 1.0, 1.5]);
        let text = "timestamp,grid\n2018-01-01T00:00:00,1.0\n2018-01-01T00:45:00,3.0\n";
        assert!(matches!(load(text), Err(IngestError::Gap { missing: 2, .. })));
    }

    #[test]
    fn non_monotone_rejected() {
        let text = "timestamp,grid\n2018-01-01T00:15:00,1.0\n2018-01-01T00:00:00,3.0\n";
        assert!(matches!(load(text), Err(IngestError::NonMonotone { .. })));
    }

    #[test]
    fn malformed_rows_counted() {
        let text = "timestamp,grid\n2018-01-01T00:00:00,1.0\n2018-01-01T00:15:00,abc\n2018-01-01T00:30:00,3.0\n";
        let (s, r) = load(text).unwrap();
        assert_eq!((r.rows_read, r.rows_accepted, r.rows_rejected), (3, 2, 1));
        assert_eq!(r.rejections[0].line, 3);
        assert_eq!(r.gaps_filled, 1);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn off_grid_needs_resample() {
        let mut text = String::from("timestamp,grid\n");
        for m in 0..30 {
            text.push_str(&format!("2018-01-01T00:{m:02}:00,{}\n", m as f64));
        }
        assert!(matches!(load(&text), Err(IngestError::BadInterval { .. })));
        let opts = LoadOptions { resample: true, ..Default::default() };
        let (s, r) = read_history(text.as_bytes(), "b", &opts).unwrap();
        assert!(r.resampled);
        assert_eq!(s.channel("grid").unwrap(), &[7.0, 22.0]);
    }

    #[test]
    fn negative_appliance_fails_validation() {
        let text = "timestamp,grid,oven\n2018-01-01T00:00:00,1.0,-0.5\n";
        assert!(matches!(load(text), Err(IngestError::Invalid(_))));
    }
}
