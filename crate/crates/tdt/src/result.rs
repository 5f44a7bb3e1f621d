//! Solver result documents (JSON).

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tdt_core::constraints::ViolationReport;
use tdt_core::objective::KpiReport;
use tdt_core::{Network, Slot, TdtPlan};

pub const RESULT_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct KpiDoc {
    pub tdt_placed: usize,
    /// Coverage for target days 0..=3.
    pub kpi: [f64; 4],
    pub normalization: f64,
}

impl From<&KpiReport> for KpiDoc {
    fn from(k: &KpiReport) -> Self {
        KpiDoc { tdt_placed: k.tdt_placed, kpi: k.kpi, normalization: k.normalization }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, Copy, PartialEq, Eq)]
pub struct ViolationDoc {
    pub shifts: usize,
    pub slot_capacity: usize,
    pub rolling_capacity: usize,
    pub labor: usize,
    pub dispatch_spacing: usize,
    pub total: usize,
}

impl From<&ViolationReport> for ViolationDoc {
    fn from(v: &ViolationReport) -> Self {
        ViolationDoc {
            shifts: v.shifts,
            slot_capacity: v.slot_capacity,
            rolling_capacity: v.rolling_capacity,
            labor: v.labor,
            dispatch_spacing: v.dispatch_spacing,
            total: v.total,
        }
    }
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ObjectivesDoc {
    /// Coverage totals per target day before normalization.
    pub blackbox_totals: [f64; 4],
    /// Target-weighted sum of `blackbox_totals`.
    pub blackbox: f64,
    pub package_speed: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct CpDoc {
    pub status: String,
    pub objective: Option<f64>,
    pub bound: f64,
    pub nodes: u64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct AnnealDoc {
    pub iterations: u64,
    pub best_fitness: f64,
    pub restarts: usize,
    pub best_restart: usize,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct LocalSearchDoc {
    pub evaluations: u64,
    pub improvements: u64,
    pub sweeps: u64,
}

/// Departure slot per `leg_id/wave`, `null` when unplaced.
pub type PlanDoc = BTreeMap<String, Option<u8>>;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ResultDoc {
    pub format_version: u32,
    pub solver: String,
    pub status: String,
    pub instance: String,
    pub plan: Option<PlanDoc>,
    pub kpis: Option<KpiDoc>,
    pub violations: Option<ViolationDoc>,
    pub objectives: Option<ObjectivesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cp: Option<CpDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anneal: Option<AnnealDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub local_search: Option<LocalSearchDoc>,
    pub wall_time_s: Option<f64>,
    #[serde(default)]
    pub config: serde_json::Value,
}

pub fn plan_to_doc(net: &Network, plan: &TdtPlan) -> PlanDoc {
    plan.flat()
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let (l, w) = net.wave_at(i);
            (format!("{}/{}", net.leg(l).id, w + 1), s.map(Slot::get))
        })
        .collect()
}

/// Rebuilds a plan; every wave of the network must be present.
pub fn plan_from_doc(net: &Network, doc: &PlanDoc) -> Result<TdtPlan> {
    let mut text = String::new();
    for (k, v) in doc {
        match v {
            Some(s) => text.push_str(&format!("{k} {s}\n")),
            None => text.push_str(&format!("{k} -\n")),
        }
    }
    if doc.len() != net.total_waves() {
        bail!("result plan lists {} waves, instance has {}", doc.len(), net.total_waves());
    }
    crate::plan_io::parse_plan(net, &text)
}

impl ResultDoc {
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn parse(text: &str) -> Result<ResultDoc> {
        let value: serde_json::Value = serde_json::from_str(text).context("result is not valid JSON")?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| anyhow!("result has no format_version"))?;
        if version != RESULT_FORMAT_VERSION as u64 {
            bail!("unsupported result format_version {version} (this build reads {RESULT_FORMAT_VERSION})");
        }
        serde_json::from_value(value).context("malformed result document")
    }

    pub fn load(path: &Path) -> Result<ResultDoc> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        ResultDoc::parse(&text).with_context(|| format!("loading {}", path.display()))
    }
}
