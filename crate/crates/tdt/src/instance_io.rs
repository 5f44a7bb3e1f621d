//! JSON instance documents.
//!
//! ```text
//! { "meta": { "format_version": 1, "slots_per_day": 96, "rolling_window": 4 },
//!   "nodes": [ { "id", "kind": "SW"|"SC"|"DS", "inbound_shift", "outbound_shift",
//!                "cap_in_slot", "cap_out_slot", "cap_in_rolling", "cap_out_rolling",
//!                "dispatch_spacing" (SW), "processing_slots" (SC),
//!                "cutoff", "shift_start", "shift_end" (DS) } ],
//!   "legs": [ { "id", "origin", "dest", "transit_slots", "waves", "volume"? } ],
//!   "paths": [ { "id", "legs": [..], "volume" } ],
//!   "demand_segments": [ { "ds", "weight", "serving_sws": [..] } ],
//!   "demand_curve": { "sw_curves": { "<sw id>": [96 values] } } }
//! ```
//!
//! Shifts are 96-character strings of `0`/`1`, character `i` being slot `i + 1`.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tdt_core::instance::{
    Capacities, LaborShift, LegSpec, Node, NodeKind, NodeRole, PathSpec, SegmentSpec,
};
use tdt_core::objective::DemandCurve;
use tdt_core::{Network, NetworkSpec, Slot, SlotSet};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    pub format_version: u32,
    pub slots_per_day: u32,
    pub rolling_window: u32,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    pub kind: String,
    pub inbound_shift: String,
    pub outbound_shift: String,
    pub cap_in_slot: u32,
    pub cap_out_slot: u32,
    pub cap_in_rolling: u32,
    pub cap_out_rolling: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dispatch_spacing: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub processing_slots: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_start: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift_end: Option<u16>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct LegDoc {
    pub id: String,
    pub origin: String,
    pub dest: String,
    pub transit_slots: u32,
    #[serde(default = "one")]
    pub waves: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volume: Option<f64>,
}

fn one() -> u8 {
    1
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PathDoc {
    pub id: String,
    pub legs: Vec<String>,
    pub volume: f64,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SegmentDoc {
    pub ds: String,
    pub weight: f64,
    pub serving_sws: Vec<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct CurveDoc {
    #[serde(default)]
    pub sw_curves: BTreeMap<String, Vec<f64>>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct InstanceDoc {
    pub meta: Meta,
    pub nodes: Vec<NodeDoc>,
    pub legs: Vec<LegDoc>,
    pub paths: Vec<PathDoc>,
    pub demand_segments: Vec<SegmentDoc>,
    #[serde(default)]
    pub demand_curve: CurveDoc,
}

/// A loaded network plus non-fatal findings (e.g. recomputed leg volumes).
#[derive(Debug)]
pub struct Loaded {
    pub network: Network,
    pub warnings: Vec<String>,
}

pub fn shift_to_string(set: SlotSet) -> String {
    Slot::all().map(|s| if set.contains(s) { '1' } else { '0' }).collect()
}

pub fn shift_from_str(s: &str) -> Result<SlotSet, String> {
    if s.len() != 96 {
        return Err(format!("shift bitmap has {} characters, expected 96", s.len()));
    }
    let mut set = SlotSet::EMPTY;
    for (i, c) in s.chars().enumerate() {
        match c {
            '1' => set.insert(Slot::of(i as u16 + 1)),
            '0' => {}
            _ => return Err(format!("shift bitmap character {} is `{c}`, expected 0 or 1", i + 1)),
        }
    }
    Ok(set)
}

fn slot_field(node: &str, name: &str, v: Option<u16>, issues: &mut Vec<String>) -> Slot {
    match v {
        Some(k) if (1..=96).contains(&k) => Slot::of(k),
        Some(k) => {
            issues.push(format!("node `{node}`: {name} {k} outside 1..=96"));
            Slot::FIRST
        }
        None => {
            issues.push(format!("node `{node}`: DS requires {name}"));
            Slot::FIRST
        }
    }
}

fn node_from_doc(n: &NodeDoc, issues: &mut Vec<String>) -> Node {
    let id = n.id.as_str();
    let shift = |name: &str, s: &str, issues: &mut Vec<String>| {
        shift_from_str(s).unwrap_or_else(|e| {
            issues.push(format!("node `{id}`: {name}: {e}"));
            SlotSet::EMPTY
        })
    };
    let inbound_shift = shift("inbound_shift", &n.inbound_shift, issues);
    let outbound_shift = shift("outbound_shift", &n.outbound_shift, issues);
    let mut stray = |field: &str, present: bool| {
        if present {
            issues.push(format!("node `{id}`: field {field} does not apply to kind {}", n.kind));
        }
    };
    let role = match n.kind.as_str() {
        "SW" => {
            stray("processing_slots", n.processing_slots.is_some());
            stray("cutoff", n.cutoff.is_some());
            stray("shift_start", n.shift_start.is_some());
            stray("shift_end", n.shift_end.is_some());
            NodeRole::Sw { dispatch_spacing: n.dispatch_spacing.unwrap_or(0) }
        }
        "SC" => {
            stray("dispatch_spacing", n.dispatch_spacing.is_some());
            stray("cutoff", n.cutoff.is_some());
            stray("shift_start", n.shift_start.is_some());
            stray("shift_end", n.shift_end.is_some());
            NodeRole::Sc { processing_slots: n.processing_slots.unwrap_or(0) }
        }
        "DS" => {
            stray("dispatch_spacing", n.dispatch_spacing.is_some());
            stray("processing_slots", n.processing_slots.is_some());
            NodeRole::Ds {
                cutoff: slot_field(id, "cutoff", n.cutoff, issues),
                shift: LaborShift {
                    start: slot_field(id, "shift_start", n.shift_start, issues),
                    end: slot_field(id, "shift_end", n.shift_end, issues),
                },
            }
        }
        other => {
            issues.push(format!("node `{id}`: unknown kind `{other}` (expected SW, SC or DS)"));
            NodeRole::Sw { dispatch_spacing: 0 }
        }
    };
    Node {
        id: n.id.clone(),
        role,
        inbound_shift,
        outbound_shift,
        capacity: Capacities {
            in_slot: n.cap_in_slot,
            out_slot: n.cap_out_slot,
            in_rolling: n.cap_in_rolling,
            out_rolling: n.cap_out_rolling,
        },
    }
}

fn node_to_doc(n: &Node) -> NodeDoc {
    let (mut spacing, mut processing, mut cutoff, mut start, mut end) = (None, None, None, None, None);
    match n.role {
        NodeRole::Sw { dispatch_spacing } => spacing = Some(dispatch_spacing),
        NodeRole::Sc { processing_slots } => processing = Some(processing_slots),
        NodeRole::Ds { cutoff: c, shift } => {
            cutoff = Some(c.get() as u16);
            start = Some(shift.start.get() as u16);
            end = Some(shift.end.get() as u16);
        }
    }
    NodeDoc {
        id: n.id.clone(),
        kind: n.kind().as_str().into(),
        inbound_shift: shift_to_string(n.inbound_shift),
        outbound_shift: shift_to_string(n.outbound_shift),
        cap_in_slot: n.capacity.in_slot,
        cap_out_slot: n.capacity.out_slot,
        cap_in_rolling: n.capacity.in_rolling,
        cap_out_rolling: n.capacity.out_rolling,
        dispatch_spacing: spacing,
        processing_slots: processing,
        cutoff,
        shift_start: start,
        shift_end: end,
    }
}

impl InstanceDoc {
    pub fn from_network(net: &Network) -> InstanceDoc {
        let spec = net.to_spec();
        InstanceDoc {
            meta: Meta { format_version: FORMAT_VERSION, slots_per_day: 96, rolling_window: spec.rolling_window },
            nodes: spec.nodes.iter().map(node_to_doc).collect(),
            legs: spec
                .legs
                .into_iter()
                .map(|l| LegDoc {
                    id: l.id,
                    origin: l.origin,
                    dest: l.dest,
                    transit_slots: l.transit_slots,
                    waves: l.waves,
                    volume: l.volume,
                })
                .collect(),
            paths: spec.paths.into_iter().map(|p| PathDoc { id: p.id, legs: p.legs, volume: p.volume }).collect(),
            demand_segments: spec
                .segments
                .into_iter()
                .map(|s| SegmentDoc { ds: s.ds, weight: s.weight, serving_sws: s.serving_sws })
                .collect(),
            demand_curve: CurveDoc {
                sw_curves: spec.curves.into_iter().map(|(id, c)| (id, c.values().to_vec())).collect(),
            },
        }
    }

    pub fn into_network(self) -> Result<Loaded> {
        let mut issues = Vec::new();
        if self.meta.slots_per_day != 96 {
            issues.push(format!("meta.slots_per_day is {}, only 96 is supported", self.meta.slots_per_day));
        }
        let nodes = self.nodes.iter().map(|n| node_from_doc(n, &mut issues)).collect();
        let mut curves = Vec::new();
        for (sw, values) in self.demand_curve.sw_curves {
            let Ok(arr) = <[f64; 96]>::try_from(values.as_slice()) else {
                issues.push(format!("demand curve of `{sw}` has {} values, expected 96", values.len()));
                continue;
            };
            match DemandCurve::new(arr) {
                Ok(c) => curves.push((sw, c)),
                Err(e) => issues.push(format!("demand curve of `{sw}`: {e}")),
            }
        }
        if !issues.is_empty() {
            bail!("invalid instance: {}", issues.join("; "));
        }
        let spec = NetworkSpec {
            rolling_window: self.meta.rolling_window,
            nodes,
            legs: self
                .legs
                .into_iter()
                .map(|l| LegSpec {
                    id: l.id,
                    origin: l.origin,
                    dest: l.dest,
                    transit_slots: l.transit_slots,
                    waves: l.waves,
                    volume: l.volume,
                })
                .collect(),
            paths: self.paths.into_iter().map(|p| PathSpec { id: p.id, legs: p.legs, volume: p.volume }).collect(),
            segments: self
                .demand_segments
                .into_iter()
                .map(|s| SegmentSpec { ds: s.ds, weight: s.weight, serving_sws: s.serving_sws })
                .collect(),
            curves,
        };
        let built = spec.build()?;
        Ok(Loaded { network: built.network, warnings: built.warnings })
    }
}

/// Parses and validates an instance document.
pub fn parse_instance(text: &str) -> Result<Loaded> {
    let value: serde_json::Value = serde_json::from_str(text).context("instance is not valid JSON")?;
    let version = value
        .get("meta")
        .and_then(|m| m.get("format_version"))
        .ok_or_else(|| anyhow!("instance has no meta.format_version"))?;
    if version.as_u64() != Some(FORMAT_VERSION as u64) {
        bail!("unsupported instance format_version {version} (this build reads {FORMAT_VERSION})");
    }
    let doc: InstanceDoc = serde_json::from_str(text).context("malformed instance document")?;
    doc.into_network()
}

pub fn render_instance(net: &Network) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceDoc::from_network(net)).expect("instance serializes");
    s.push('\n');
    s
}

pub fn load_instance(path: &Path) -> Result<Loaded> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("loading {}", path.display()))
}

/// Node counts by kind.
pub fn kind_counts(net: &Network) -> (usize, usize, usize) {
    let count = |k| net.nodes().iter().filter(|n| n.kind() == k).count();
    (count(NodeKind::Sw), count(NodeKind::Sc), count(NodeKind::Ds))
}

#[cfg(test)]
mod tests {
    use super::*;
    use tdt_core::generate_instance;

    #[test]
    fn generated_instances_round_trip() {
        for seed in 0..5 {
            let net = generate_instance(seed, 4, 2, 6, 0.5).unwrap();
            let text = render_instance(&net);
            let back = parse_instance(&text).unwrap();
            assert_eq!(back.network, net);
            assert!(back.warnings.is_empty());
            assert_eq!(render_instance(&back.network), text);
        }
    }

    #[test]
    fn shift_strings() {
        let set = SlotSet::interval(Slot::of(95), Slot::of(2));
        let s = shift_to_string(set);
        assert_eq!(&s[..3], "110");
        assert_eq!(&s[93..], "011");
        assert_eq!(shift_from_str(&s).unwrap(), set);
        assert!(shift_from_str("01").is_err());
        assert!(shift_from_str(&"2".repeat(96)).is_err());
    }

    #[test]
    fn rejects_unknown_version() {
        let net = generate_instance(1, 2, 1, 2, 1.0).unwrap();
        let text = render_instance(&net).replace("\"format_version\": 1", "\"format_version\": 2");
        let err = parse_instance(&text).unwrap_err();
        assert!(err.to_string().contains("format_version"), "{err}");
    }

    #[test]
    fn reports_parse_position() {
        let err = parse_instance("{\"meta\": {\"format_version\": 1}, \"nodes\": 3}").unwrap_err();
        let chain = format!("{err:#}");
        assert!(chain.contains("line"), "{chain}");
    }

    #[test]
    fn empty_node_list_is_invalid() {
        let text = r#"{"meta": {"format_version": 1, "slots_per_day": 96, "rolling_window": 4},
            "nodes": [], "legs": [], "paths": [], "demand_segments": []}"#;
        let err = format!("{:#}", parse_instance(text).unwrap_err());
        assert!(err.contains("no nodes"), "{err}");
    }

    #[test]
    fn stray_fields_are_reported() {
        let net = generate_instance(1, 2, 1, 2, 1.0).unwrap();
        let mut doc = InstanceDoc::from_network(&net);
        doc.nodes[0].cutoff = Some(3);
        let err = doc.into_network().unwrap_err().to_string();
        assert!(err.contains("does not apply"), "{err}");
    }
}
