//! Aggregate report: per-building and per-category metric means, outlier-trimmed latency,
//! heatmap matrices, cross-building ANOVA and the metric correlation matrix.

use std::fmt::Write as _;

use bems_agent::{ChartArtifact, ChartKind};
use bems_core::{Primary, Secondary};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::scoring::ScoreRow;
use crate::stats::{anova_oneway, correlation_matrix, tukey_hsd};

pub const DEFAULT_OUTLIER_S: f64 = 600.0;

/// Per-query metrics that can be averaged, compared across buildings or correlated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    Latency,
    ExecutionRate,
    PrimaryAccuracy,
    SecondaryAccuracy,
    ToolCalls,
    ToolCallScore,
    ResponseScore,
    Tokens,
    Cost,
}

impl Metric {
    pub const ALL: [Metric; 9] = [
        Metric::Latency,
        Metric::ExecutionRate,
        Metric::PrimaryAccuracy,
        Metric::SecondaryAccuracy,
        Metric::ToolCalls,
        Metric::ToolCallScore,
        Metric::ResponseScore,
        Metric::Tokens,
        Metric::Cost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Latency => "latency_s",
            Metric::ExecutionRate => "execution_rate",
            Metric::PrimaryAccuracy => "primary_accuracy",
            Metric::SecondaryAccuracy => "secondary_accuracy",
            Metric::ToolCalls => "tool_calls",
            Metric::ToolCallScore => "tool_call_score",
            Metric::ResponseScore => "response_score",
            Metric::Tokens => "tokens",
            Metric::Cost => "cost",
        }
    }

    /// The row's value; accuracies are absent for runs without a classification.
    pub fn of(self, r: &ScoreRow) -> Option<f64> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Metric::Latency => Some(r.latency_s),
            Metric::ExecutionRate => Some(flag(r.classification_executed)),
            Metric::PrimaryAccuracy => r.primary_correct.map(flag),
            Metric::SecondaryAccuracy => r.secondary_correct.map(flag),
            Metric::ToolCalls => Some(r.tool_call_count as f64),
            Metric::ToolCallScore => Some(r.tool_call_score),
            Metric::ResponseScore => Some(r.response_score),
            Metric::Tokens => Some(r.token_usage.total_tokens as f64),
            Metric::Cost => Some(r.cost),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricMeans {
    pub n: usize,
    pub latency_s: f64,
    /// Mean latency over rows at or below the outlier threshold.
    pub latency_trimmed_s: f64,
    pub latency_outliers: usize,
    pub execution_rate: f64,
    pub primary_accuracy: Option<f64>,
    pub secondary_accuracy: Option<f64>,
    pub tool_calls: f64,
    pub tool_call_score: f64,
    pub response_score: f64,
    pub prompt_tokens: f64,
    pub completion_tokens: f64,
    pub total_tokens: f64,
    pub cost: f64,
}

fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for x in xs {
        s += x;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

impl MetricMeans {
    pub fn of(rows: &[&ScoreRow], outlier_s: f64) -> Self {
        let m = |f: &dyn Fn(&ScoreRow) -> f64| mean(rows.iter().map(|r| f(r))).unwrap_or(0.0);
        let kept: Vec<f64> = rows.iter().map(|r| r.latency_s).filter(|l| *l <= outlier_s).collect();
        MetricMeans {
            n: rows.len(),
            latency_s: m(&|r| r.latency_s),
            latency_outliers: rows.len() - kept.len(),
            latency_trimmed_s: mean(kept).unwrap_or(0.0),
            execution_rate: m(&|r| if r.classification_executed { 1.0 } else { 0.0 }),
            primary_accuracy: mean(rows.iter().filter_map(|r| Metric::PrimaryAccuracy.of(r))),
            secondary_accuracy: mean(rows.iter().filter_map(|r| Metric::SecondaryAccuracy.of(r))),
            tool_calls: m(&|r| r.tool_call_count as f64),
            tool_call_score: m(&|r| r.tool_call_score),
            response_score: m(&|r| r.response_score),
            prompt_tokens: m(&|r| r.token_usage.prompt_tokens as f64),
            completion_tokens: m(&|r| r.token_usage.completion_tokens as f64),
            total_tokens: m(&|r| r.token_usage.total_tokens as f64),
            cost: m(&|r| r.cost),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TukeySummary {
    pub a: String,
    pub b: String,
    pub mean_diff: f64,
    pub q: f64,
    pub p_adj: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnovaSummary {
    pub f_value: f64,
    pub p_value: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub tukey: Vec<TukeySummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub metrics: Vec<String>,
    /// `None` where a column has no variance.
    pub matrix: Vec<Vec<Option<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub outlier_threshold_s: f64,
    pub overall: MetricMeans,
    pub per_building: IndexMap<String, MetricMeans>,
    pub per_primary: IndexMap<String, MetricMeans>,
    pub per_secondary: IndexMap<String, MetricMeans>,
    /// Building × secondary-category matrices.
    pub heatmaps: Vec<ChartArtifact>,
    /// Cross-building comparison per metric; empty with fewer than two buildings.
    pub anova: IndexMap<String, AnovaSummary>,
    pub correlation: Correlation,
}

/// Values of one metric grouped by building, in first-seen building order.
pub fn groups_by_building(rows: &[ScoreRow], metric: Metric) -> IndexMap<String, Vec<f64>> {
    let mut g: IndexMap<String, Vec<f64>> = IndexMap::new();
    for r in rows {
        let e = g.entry(r.building_id.clone()).or_default();
        if let Some(v) = metric.of(r) {
            e.push(v);
        }
    }
    g
}

pub fn metric_anova(rows: &[ScoreRow], metric: Metric, alpha: f64) -> Option<AnovaSummary> {
    let groups = groups_by_building(rows, metric);
    let names: Vec<&String> = groups.keys().collect();
    let values: Vec<Vec<f64>> = groups.values().cloned().collect();
    let a = anova_oneway(&values).ok()?;
    let tukey = tukey_hsd(&values, alpha)
        .map(|pairs| {
            pairs
                .into_iter()
                .map(|p| TukeySummary {
                    a: names[p.i].clone(),
                    b: names[p.j].clone(),
                    mean_diff: p.diff,
                    q: p.q,
                    p_adj: p.p_adj,
                    significant: p.reject,
                })
                .collect()
        })
        .unwrap_or_default();
    Some(AnovaSummary { f_value: a.f_value, p_value: a.p_value, df_between: a.df_between, df_within: a.df_within, tukey })
}

fn heatmap(rows: &[ScoreRow], buildings: &[String], title: &str, metric: Metric) -> ChartArtifact {
    let secs: Vec<Secondary> = Primary::ALL.iter().flat_map(|p| p.secondaries()).collect();
    let mut chart = ChartArtifact::new(ChartKind::Heatmap, title, "Secondary category", "")
        .with_labels(secs.iter().map(|s| s.name().to_string()).collect());
    for b in buildings {
        let cells = secs
            .iter()
            .map(|s| mean(rows.iter().filter(|r| &r.building_id == b && r.secondary == *s).filter_map(|r| metric.of(r))))
            .collect();
        chart = chart.with_cells(b.clone(), cells);
    }
    chart
}

pub fn aggregate_report(rows: &[ScoreRow], outlier_s: f64) -> BenchmarkReport {
    let all: Vec<&ScoreRow> = rows.iter().collect();
    let mut buildings: Vec<String> = Vec::new();
    for r in rows {
        if !buildings.contains(&r.building_id) {
            buildings.push(r.building_id.clone());
        }
    }
    let per_building = buildings
        .iter()
        .map(|b| (b.clone(), MetricMeans::of(&rows.iter().filter(|r| &r.building_id == b).collect::<Vec<_>>(), outlier_s)))
        .collect();
    let per_primary = Primary::ALL
        .iter()
        .filter(|p| rows.iter().any(|r| r.primary == **p))
        .map(|p| (p.name().to_string(), MetricMeans::of(&rows.iter().filter(|r| r.primary == *p).collect::<Vec<_>>(), outlier_s)))
        .collect();
    let per_secondary = Primary::ALL
        .iter()
        .flat_map(|p| p.secondaries())
        .filter(|s| rows.iter().any(|r| r.secondary == *s))
        .map(|s| (s.name().to_string(), MetricMeans::of(&rows.iter().filter(|r| r.secondary == s).collect::<Vec<_>>(), outlier_s)))
        .collect();
    let heatmaps = vec![
        heatmap(rows, &buildings, "Response accuracy", Metric::ResponseScore),
        heatmap(rows, &buildings, "Tool call accuracy", Metric::ToolCallScore),
        heatmap(rows, &buildings, "Intent classification execution rate", Metric::ExecutionRate),
    ];
    let anova = if buildings.len() >= 2 {
        Metric::ALL.iter().filter_map(|m| metric_anova(rows, *m, 0.05).map(|a| (m.name().to_string(), a))).collect()
    } else {
        IndexMap::new()
    };
    // Accuracy columns are only defined on classified runs; count a missing one as 0 here.
    let columns: Vec<Vec<f64>> =
        Metric::ALL.iter().map(|m| rows.iter().map(|r| m.of(r).unwrap_or(0.0)).collect()).collect();
    BenchmarkReport {
        outlier_threshold_s: outlier_s,
        overall: MetricMeans::of(&all, outlier_s),
        per_building,
        per_primary,
        per_secondary,
        heatmaps,
        anova,
        correlation: Correlation {
            metrics: Metric::ALL.iter().map(|m| m.name().to_string()).collect(),
            matrix: correlation_matrix(&columns),
        },
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or("–".into(), |v| format!("{v:.2}"))
}

fn means_table(out: &mut String, key: &str, rows: &IndexMap<String, MetricMeans>) {
    let _ = writeln!(
        out,
        "| {key} | n | latency (s) | trimmed latency (s) | exec. rate | primary acc. | secondary acc. | tool calls | tool score | response score | tokens | cost ($) |"
    );
    let _ = writeln!(out, "|---|---|---|---|---|---|---|---|---|---|---|---|");
    for (name, m) in rows {
        let _ = writeln!(
            out,
            "| {name} | {} | {:.2} | {:.2} | {:.2} | {} | {} | {:.2} | {:.2} | {:.2} | {:.0} | {:.4} |",
            m.n,
            m.latency_s,
            m.latency_trimmed_s,
            m.execution_rate,
            opt(m.primary_accuracy),
            opt(m.secondary_accuracy),
            m.tool_calls,
            m.tool_call_score,
            m.response_score,
            m.total_tokens,
            m.cost
        );
    }
    out.push('\n');
}

impl BenchmarkReport {
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("# Benchmark report\n\n");
        let mut overall = IndexMap::new();
        overall.insert("all".to_string(), self.overall.clone());
        let _ = writeln!(out, "Latency outlier threshold: {} s.\n\n## Overall\n", self.outlier_threshold_s);
        means_table(&mut out, "scope", &overall);
        out.push_str("## By building\n\n");
        means_table(&mut out, "building", &self.per_building);
        out.push_str("## By primary category\n\n");
        means_table(&mut out, "category", &self.per_primary);
        out.push_str("## By secondary category\n\n");
        means_table(&mut out, "category", &self.per_secondary);
        if !self.anova.is_empty() {
            out.push_str("## Cross-building ANOVA\n\n| metric | F | p |\n|---|---|---|\n");
            for (m, a) in &self.anova {
                let _ = writeln!(out, "| {m} | {:.4} | {:.4} |", a.f_value, a.p_value);
            }
            out.push('\n');
        }
        out
    }
}
