//! Chart artifacts: the data behind a chart plus a Vega-Lite spec that renders it.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChartKind {
    Bar,
    Line,
    Pie,
    Heatmap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartSeries {
    pub name: String,
    /// One value per label. `None` is an empty cell.
    pub values: Vec<Option<f64>>,
}

/// Bar and line charts plot each series over `labels`; a pie has one series of slice
/// sizes; a heatmap has one series per row with `labels` as its columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChartArtifact {
    pub kind: ChartKind,
    pub title: String,
    pub x_label: String,
    pub unit: String,
    pub labels: Vec<String>,
    pub series: Vec<ChartSeries>,
}

impl ChartArtifact {
    pub fn new(kind: ChartKind, title: impl Into<String>, x_label: impl Into<String>, unit: impl Into<String>) -> Self {
        ChartArtifact { kind, title: title.into(), x_label: x_label.into(), unit: unit.into(), labels: vec![], series: vec![] }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = labels;
        self
    }

    pub fn with_series(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.series.push(ChartSeries { name: name.into(), values: values.into_iter().map(Some).collect() });
        self
    }

    pub fn with_cells(mut self, name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        self.series.push(ChartSeries { name: name.into(), values });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty() || self.series.iter().all(|s| s.values.iter().all(Option::is_none))
    }

    /// Pie shares, in label order. Empty unless the slices have a positive total.
    pub fn shares(&self) -> Vec<f64> {
        let Some(s) = self.series.first() else { return vec![] };
        let total: f64 = s.values.iter().flatten().sum();
        if total <= 0.0 {
            return vec![];
        }
        s.values.iter().map(|v| v.unwrap_or(0.0) / total).collect()
    }

    pub fn validate(&self) -> Result<(), String> {
        for s in &self.series {
            if s.values.len() != self.labels.len() {
                return Err(format!("series {:?} has {} values for {} labels", s.name, s.values.len(), self.labels.len()));
            }
        }
        if self.kind == ChartKind::Pie {
            if self.series.len() > 1 {
                return Err("a pie chart has one series".into());
            }
            if self.series.iter().flat_map(|s| s.values.iter().flatten()).any(|v| *v < 0.0) {
                return Err("negative pie slice".into());
            }
        }
        Ok(())
    }

    fn records(&self) -> Vec<Value> {
        let mut out = Vec::new();
        match self.kind {
            ChartKind::Pie => {
                let shares = self.shares();
                if let Some(s) = self.series.first() {
                    for (k, (label, v)) in self.labels.iter().zip(&s.values).enumerate() {
                        out.push(json!({"category": label, "value": v, "share": shares.get(k)}));
                    }
                }
            }
            ChartKind::Heatmap => {
                for s in &self.series {
                    for (label, v) in self.labels.iter().zip(&s.values) {
                        out.push(json!({"row": s.name, "column": label, "value": v}));
                    }
                }
            }
            ChartKind::Bar | ChartKind::Line => {
                for s in &self.series {
                    for (label, v) in self.labels.iter().zip(&s.values) {
                        out.push(json!({"x": label, "series": s.name, "value": v}));
                    }
                }
            }
        }
        out
    }

    /// A self-contained Vega-Lite document with the data inlined.
    pub fn to_document(&self) -> Value {
        let y_title = format!("{} ({})", self.title, self.unit);
        let (mark, encoding) = match self.kind {
            ChartKind::Bar | ChartKind::Line => (
                if self.kind == ChartKind::Bar { "bar" } else { "line" },
                json!({
                    "x": {"field": "x", "type": "ordinal", "title": self.x_label, "sort": null},
                    "y": {"field": "value", "type": "quantitative", "title": y_title},
                    "color": {"field": "series", "type": "nominal"}
                }),
            ),
            ChartKind::Pie => (
                "arc",
                json!({
                    "theta": {"field": "value", "type": "quantitative"},
                    "color": {"field": "category", "type": "nominal", "sort": null},
                    "tooltip": [{"field": "category"}, {"field": "share", "format": ".1%"}]
                }),
            ),
            ChartKind::Heatmap => (
                "rect",
                json!({
                    "x": {"field": "column", "type": "ordinal", "title": self.x_label, "sort": null},
                    "y": {"field": "row", "type": "ordinal", "sort": null},
                    "color": {"field": "value", "type": "quantitative", "title": self.unit}
                }),
            ),
        };
        json!({
            "$schema": "https://vega.github.io/schema/vega-lite/v5.json",
            "title": self.title,
            "description": format!("{:?} chart, {} points", self.kind, self.labels.len()),
            "data": {"values": self.records()},
            "mark": mark,
            "encoding": encoding,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pie_document_carries_shares() {
        let c = ChartArtifact::new(ChartKind::Pie, "Use by device", "device", "kWh")
            .with_labels(vec!["a".into(), "b".into()])
            .with_series("energy", vec![1.0, 3.0]);
        c.validate().unwrap();
        let doc = c.to_document();
        assert_eq!(doc["mark"], "arc");
        assert_eq!(doc["data"]["values"][1]["share"], 0.75);
    }

    #[test]
    fn mismatched_series_is_rejected() {
        let c = ChartArtifact::new(ChartKind::Bar, "t", "x", "kWh").with_labels(vec!["a".into()]).with_series("s", vec![]);
        assert!(c.validate().is_err());
        assert!(c.is_empty());
    }
}
