//! Per-dataset and cross-dataset aggregation, the m-HIoU score, and the
//! JSON report.
//!
//! Report layout:
//!
//! ```text
//! {
//!   "datasets": { "ovis": {...}, "mot17": {...}, "mot20": {...} },
//!   "mean":     { "spatial": {...}, "temporal": {...} },
//!   "m_hiou":   0.25417,
//!   "display":  { ... the same values as 3-decimal percentage strings ... }
//! }
//! ```
//!
//! Numbers carry 6 significant digits. Datasets appear in canonical order
//! (ovis, mot17, mot20, then any others alphabetically).

use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::model::{HotaComponents, TemporalMetrics};
use crate::numfmt::{percent3, sig6};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("no dataset reports to aggregate")]
    Empty,
    #[error("datasets disagree on temporal thresholds")]
    MismatchedThresholds,
    #[error("{name} = {value} outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("{}: {source}", path.display())]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed report: {0}")]
    Json(#[from] serde_json::Error),
}

/// Results of one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetReport {
    #[serde(skip)]
    pub dataset: String,
    pub spatial: HotaComponents,
    pub temporal: TemporalMetrics,
    pub query_count: usize,
    pub referent_count: usize,
}

/// Spatial and temporal metrics without dataset bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub spatial: HotaComponents,
    pub temporal: TemporalMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FinalReport {
    /// Canonical dataset order.
    pub datasets: Vec<DatasetReport>,
    pub mean: MetricSummary,
    pub m_hiou: f64,
}

/// Sort key placing the benchmark datasets first.
pub fn canonical_rank(name: &str) -> (usize, String) {
    let rank = match name {
        "ovis" => 0,
        "mot17" => 1,
        "mot20" => 2,
        _ => 3,
    };
    (rank, name.to_string())
}

/// Unweighted per-field mean over datasets, regardless of their sizes.
pub fn cross_dataset_mean(reports: &[DatasetReport]) -> Result<MetricSummary, ReportError> {
    if reports.is_empty() {
        return Err(ReportError::Empty);
    }
    // sum in canonical order so the result does not depend on input order
    let mut ordered: Vec<&DatasetReport> = reports.iter().collect();
    ordered.sort_by_key(|r| canonical_rank(&r.dataset));
    let spatial =
        HotaComponents::mean(ordered.iter().map(|r| &r.spatial)).ok_or(ReportError::Empty)?;
    let temporal = TemporalMetrics::mean(ordered.iter().map(|r| &r.temporal))
        .ok_or(ReportError::MismatchedThresholds)?;
    Ok(MetricSummary { spatial, temporal })
}

/// Arithmetic mean of HOTA and mIoU, both fractions.
pub fn m_hiou(hota_mean: f64, miou_mean: f64) -> Result<f64, ReportError> {
    for (name, value) in [("hota", hota_mean), ("miou", miou_mean)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(ReportError::OutOfRange { name, value });
        }
    }
    Ok((hota_mean + miou_mean) / 2.0)
}

impl FinalReport {
    /// Orders the datasets canonically, averages them and combines the means.
    pub fn new(mut datasets: Vec<DatasetReport>) -> Result<Self, ReportError> {
        datasets.sort_by_key(|r| canonical_rank(&r.dataset));
        let mean = cross_dataset_mean(&datasets)?;
        let m_hiou = m_hiou(mean.spatial.hota, mean.temporal.miou)?;
        Ok(Self {
            datasets,
            mean,
            m_hiou,
        })
    }

    /// m-HIoU as a 3-decimal percentage, e.g. `"25.417"`.
    pub fn m_hiou_display(&self) -> String {
        percent3(sig6(self.m_hiou))
    }

    fn to_document(&self) -> ReportDocument {
        let datasets: IndexMap<String, DatasetReport> = self
            .datasets
            .iter()
            .map(|d| {
                let mut d = d.clone();
                d.spatial = round_spatial(&d.spatial);
                d.temporal = round_temporal(&d.temporal);
                (d.dataset.clone(), d)
            })
            .collect();
        let mean = MetricSummary {
            spatial: round_spatial(&self.mean.spatial),
            temporal: round_temporal(&self.mean.temporal),
        };
        // display strings derive from the stored numbers so a parsed report
        // re-serializes byte for byte
        let display = DisplayBlock {
            datasets: datasets
                .iter()
                .map(|(name, d)| (name.clone(), display_fields(&d.spatial, &d.temporal)))
                .collect(),
            mean: display_fields(&mean.spatial, &mean.temporal),
            m_hiou: self.m_hiou_display(),
        };
        ReportDocument {
            datasets,
            mean,
            m_hiou: sig6(self.m_hiou),
            display,
        }
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_document()).expect("report serializes");
        s.push('\n');
        s
    }

    /// Parses a report written by [`FinalReport::to_json_string`].
    pub fn from_json_str(text: &str) -> Result<Self, ReportError> {
        let doc: ReportDocument = serde_json::from_str(text)?;
        Ok(Self {
            datasets: doc
                .datasets
                .into_iter()
                .map(|(name, mut d)| {
                    d.dataset = name;
                    d
                })
                .collect(),
            mean: doc.mean,
            m_hiou: doc.m_hiou,
        })
    }
}

/// Writes the report; identical reports produce identical bytes.
pub fn write_report(report: &FinalReport, path: &Path) -> Result<(), ReportError> {
    std::fs::write(path, report.to_json_string()).map_err(|source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct ReportDocument {
    datasets: IndexMap<String, DatasetReport>,
    mean: MetricSummary,
    m_hiou: f64,
    display: DisplayBlock,
}

#[derive(Debug, Serialize, Deserialize)]
struct DisplayBlock {
    datasets: IndexMap<String, IndexMap<String, String>>,
    mean: IndexMap<String, String>,
    m_hiou: String,
}

fn round_spatial(c: &HotaComponents) -> HotaComponents {
    HotaComponents::from_fields(c.fields().map(sig6))
}

fn round_temporal(t: &TemporalMetrics) -> TemporalMetrics {
    let r = |m: &crate::model::ThresholdMap| m.iter().map(|(k, v)| (*k, sig6(*v))).collect();
    TemporalMetrics {
        r1: r(&t.r1),
        r5: r(&t.r5),
        r10: r(&t.r10),
        map_at: r(&t.map_at),
        miou: sig6(t.miou),
    }
}

fn display_fields(s: &HotaComponents, t: &TemporalMetrics) -> IndexMap<String, String> {
    let mut out = IndexMap::new();
    for (name, v) in HotaComponents::RATIO_NAMES.iter().zip(s.ratios()) {
        out.insert((*name).to_string(), percent3(v));
    }
    for (prefix, map) in [
        ("r1", &t.r1),
        ("r5", &t.r5),
        ("r10", &t.r10),
        ("map", &t.map_at),
    ] {
        for (tau, v) in map {
            out.insert(format!("{prefix}@{tau}"), percent3(*v));
        }
    }
    out.insert("miou".into(), percent3(t.miou));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Tau;
    use approx::assert_abs_diff_eq;

    fn dataset(name: &str, hota: f64, miou: f64) -> DatasetReport {
        let mut temporal = TemporalMetrics::constant(&Tau::defaults(), miou);
        temporal.miou = miou;
        DatasetReport {
            dataset: name.into(),
            spatial: HotaComponents {
                hota,
                ..HotaComponents::ZERO
            },
            temporal,
            query_count: 3,
            referent_count: 4,
        }
    }

    #[test]
    fn leaderboard_arithmetic() {
        let rows = [
            (7.957, 42.877, "25.417"),
            (10.734, 30.627, "20.680"),
            (9.001, 23.227, "16.114"),
            (9.159, 19.137, "14.148"),
        ];
        for (hota, miou, expected) in rows {
            let v = m_hiou(hota / 100.0, miou / 100.0).unwrap();
            assert_eq!(percent3(v), expected);
        }
        assert!(m_hiou(1.2, 0.5).is_err());
        assert!(m_hiou(0.5, -0.1).is_err());
    }

    #[test]
    fn cross_dataset_mean_examples() {
        let ds = [
            dataset("ovis", 0.22734, 0.0),
            dataset("mot17", 0.0059603, 0.0),
            dataset("mot20", 0.0042845, 0.0),
        ];
        let m = cross_dataset_mean(&ds).unwrap();
        assert_abs_diff_eq!(m.spatial.hota * 100.0, 7.9195, epsilon = 1e-4);

        let single = cross_dataset_mean(&ds[..1]).unwrap();
        assert_eq!(single.spatial, ds[0].spatial);
        assert_eq!(single.temporal, ds[0].temporal);

        let m = cross_dataset_mean(&[dataset("a", 1.0, 1.0), dataset("b", 0.0, 0.0)]).unwrap();
        assert_eq!(m.spatial.hota, 0.5);
        assert_eq!(m.temporal.miou, 0.5);

        assert!(matches!(cross_dataset_mean(&[]), Err(ReportError::Empty)));
    }

    #[test]
    fn mean_ignores_input_order() {
        let a = [
            dataset("mot20", 0.1, 0.7),
            dataset("ovis", 0.3, 0.2),
            dataset("mot17", 0.7, 0.9),
        ];
        let b = [a[2].clone(), a[0].clone(), a[1].clone()];
        assert_eq!(
            cross_dataset_mean(&a).unwrap(),
            cross_dataset_mean(&b).unwrap()
        );
    }

    #[test]
    fn report_is_canonical_and_a_fixpoint() {
        let r = FinalReport::new(vec![
            dataset("mot20", 0.1, 0.7),
            dataset("ovis", 1.0 / 3.0, 0.2),
            dataset("mot17", 0.7, 2.0 / 3.0),
        ])
        .unwrap();
        assert_abs_diff_eq!(
            r.m_hiou,
            (r.mean.spatial.hota + r.mean.temporal.miou) / 2.0,
            epsilon = 1e-12
        );
        let text = r.to_json_string();
        let ovis = text.find("\"ovis\"").unwrap();
        let mot17 = text.find("\"mot17\"").unwrap();
        let mot20 = text.find("\"mot20\"").unwrap();
        assert!(ovis < mot17 && mot17 < mot20);
        assert!(text.contains("\"m_hiou\""));
        assert!(text.contains("0.333333"));
        assert!(text.contains("\"r1@0.1\""));

        let back = FinalReport::from_json_str(&text).unwrap();
        assert_eq!(back.to_json_string(), text);
        assert_eq!(back.datasets[0].dataset, "ovis");
        assert_eq!(back.datasets[0].query_count, 3);
    }
}
