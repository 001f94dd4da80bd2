use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Relative slack allowed between consecutive refinement levels before a series
/// counts as increasing.
pub const SERIES_NOISE: f64 = 0.10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefinementPoint {
    pub level: String,
    pub metric: f64,
}

/// Outcome of one named check.
///
/// `runtime` is kept out of the serialized form so that JSON reports of identical
/// runs are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub check: String,
    pub passed: bool,
    pub tolerance: f64,
    pub metrics: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub series: Vec<RefinementPoint>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
    #[serde(skip)]
    pub runtime: Option<Duration>,
}

impl VerificationReport {
    pub fn new(check: impl Into<String>, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            passed: true,
            tolerance,
            metrics: BTreeMap::new(),
            series: Vec::new(),
            notes: BTreeMap::new(),
            runtime: None,
        }
    }

    pub fn metric(&mut self, name: impl Into<String>, value: f64) -> &mut Self {
        self.metrics.insert(name.into(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.metrics.get(name).copied()
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl Into<String>) -> &mut Self {
        self.notes.insert(key.into(), value.into());
        self
    }

    pub fn push_level(&mut self, level: impl Into<String>, metric: f64) -> &mut Self {
        self.series.push(RefinementPoint {
            level: level.into(),
            metric,
        });
        self
    }

    /// Records a sub-check: stores the metric and fails the report when it exceeds `tol`.
    /// NaN never passes.
    pub fn require_at_most(&mut self, name: &str, value: f64, tol: f64) -> bool {
        self.metrics.insert(name.to_string(), value);
        let ok = value <= tol;
        if !ok {
            self.passed = false;
        }
        ok
    }

    pub fn require(&mut self, name: &str, ok: bool) -> bool {
        self.metrics.insert(name.to_string(), if ok { 1.0 } else { 0.0 });
        if !ok {
            self.passed = false;
        }
        ok
    }

    /// Whether the refinement series never grows by more than the noise allowance.
    pub fn series_non_increasing(&self) -> bool {
        self.series
            .windows(2)
            .all(|w| w[1].metric <= w[0].metric * (1.0 + SERIES_NOISE))
    }

    /// Applies the series rule to `passed` and records it as a metric.
    pub fn enforce_series(&mut self) -> &mut Self {
        let ok = self.series_non_increasing();
        self.require("series_non_increasing", ok);
        self
    }

    pub fn with_runtime(mut self, d: Duration) -> Self {
        self.runtime = Some(d);
        self
    }

    pub fn status(&self) -> &'static str {
        if self.passed {
            "PASS"
        } else {
            "FAIL"
        }
    }
}

/// A serialized run of several checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub schema: String,
    pub seed: u64,
    pub model: String,
    pub reports: Vec<VerificationReport>,
}

pub const BUNDLE_SCHEMA: &str = "borchers-lab/report/v1";

impl ReportBundle {
    pub fn new(seed: u64, model: impl Into<String>) -> Self {
        Self {
            schema: BUNDLE_SCHEMA.into(),
            seed,
            model: model.into(),
            reports: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report bundles serialize");
        s.push('\n');
        s
    }

    /// Aligned text table, one row per metric.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model {}  seed {}", self.model, self.seed);
        for r in &self.reports {
            let runtime = r
                .runtime
                .map(|d| format!("  ({:.3} s)", d.as_secs_f64()))
                .unwrap_or_default();
            let _ = writeln!(out, "[{}] {}  tol {:.1e}{}", r.status(), r.check, r.tolerance, runtime);
            for (k, v) in &r.metrics {
                let _ = writeln!(out, "    {k:<36} {v:>14.6e}");
            }
            for p in &r.series {
                let _ = writeln!(out, "    series {:<29} {:>14.6e}", p.level, p.metric);
            }
            for (k, v) in &r.notes {
                let _ = writeln!(out, "    note {k}: {v}");
            }
        }
        out
    }

    /// `check,metric,value` rows for plotting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,kind,name,value\n");
        for r in &self.reports {
            for (k, v) in &r.metrics {
                let _ = writeln!(out, "{},metric,{},{:e}", r.check, k, v);
            }
            for p in &r.series {
                let _ = writeln!(out, "{},series,{},{:e}", r.check, p.level, p.metric);
            }
        }
        out
    }
}
