//! Network data model, structural validation and leg shift domains.

mod generate;

pub use generate::{generate_instance, GeneratorConfig};

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result, ValidationErrors};
use crate::objective::DemandCurve;
use crate::slot::{Slot, SlotSet};

/// Default rolling-window length in slots.
pub const DEFAULT_ROLLING_WINDOW: u32 = 4;

macro_rules! index_type {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub const fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

index_type!(
    /// Position of a node in [`Network::nodes`].
    NodeIdx
);
index_type!(
    /// Position of a leg in [`Network::legs`].
    LegIdx
);
index_type!(
    /// Position of a path in [`Network::paths`].
    PathIdx
);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NodeKind {
    Sw,
    Sc,
    Ds,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Sw => "SW",
            NodeKind::Sc => "SC",
            NodeKind::Ds => "DS",
        }
    }
}

/// Labor shift of a distribution station: the modular interval `start..=end`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct LaborShift {
    pub start: Slot,
    pub end: Slot,
}

impl LaborShift {
    pub fn len(&self) -> usize {
        ((self.end.offset() - self.start.offset()).rem_euclid(96) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Shift slots in chronological order, unrolled across midnight.
    pub fn slots(&self) -> impl Iterator<Item = Slot> + '_ {
        (0..self.len() as i64).map(move |i| self.start.shifted(i))
    }

    pub fn as_set(&self) -> SlotSet {
        SlotSet::interval(self.start, self.end)
    }
}

/// Kind-specific node data.
#[derive(Clone, Copy, PartialEq, Debug)]
pub enum NodeRole {
    Sw { dispatch_spacing: u32 },
    Sc { processing_slots: u32 },
    Ds { cutoff: Slot, shift: LaborShift },
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Capacities {
    pub in_slot: u32,
    pub out_slot: u32,
    pub in_rolling: u32,
    pub out_rolling: u32,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Node {
    pub id: String,
    pub role: NodeRole,
    pub inbound_shift: SlotSet,
    pub outbound_shift: SlotSet,
    pub capacity: Capacities,
}

impl Node {
    pub fn kind(&self) -> NodeKind {
        match self.role {
            NodeRole::Sw { .. } => NodeKind::Sw,
            NodeRole::Sc { .. } => NodeKind::Sc,
            NodeRole::Ds { .. } => NodeKind::Ds,
        }
    }

    /// Processing time before volume can leave a sort center; zero elsewhere.
    pub fn processing_slots(&self) -> u32 {
        match self.role {
            NodeRole::Sc { processing_slots } => processing_slots,
            _ => 0,
        }
    }

    pub fn dispatch_spacing(&self) -> u32 {
        match self.role {
            NodeRole::Sw { dispatch_spacing } => dispatch_spacing,
            _ => 0,
        }
    }

    pub fn cutoff(&self) -> Option<Slot> {
        match self.role {
            NodeRole::Ds { cutoff, .. } => Some(cutoff),
            _ => None,
        }
    }

    pub fn labor_shift(&self) -> Option<LaborShift> {
        match self.role {
            NodeRole::Ds { shift, .. } => Some(shift),
            _ => None,
        }
    }
}

#[derive(Clone, PartialEq, Debug)]
pub struct Leg {
    pub id: String,
    pub origin: NodeIdx,
    pub dest: NodeIdx,
    pub transit_slots: u32,
    pub waves: u8,
    /// Sum of the volumes of every path using this leg.
    pub volume: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct Path {
    pub id: String,
    pub legs: Vec<LegIdx>,
    pub origin: NodeIdx,
    pub dest: NodeIdx,
    pub volume: f64,
}

/// Share of a station's demand that can be covered from any of `serving_sws`.
#[derive(Clone, PartialEq, Debug)]
pub struct DemandSegment {
    pub ds: NodeIdx,
    pub weight: f64,
    pub serving_sws: Vec<NodeIdx>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct LegSpec {
    pub id: String,
    pub origin: String,
    pub dest: String,
    pub transit_slots: u32,
    pub waves: u8,
    /// Declared volume; always recomputed from the paths.
    pub volume: Option<f64>,
}

#[derive(Clone, PartialEq, Debug)]
pub struct PathSpec {
    pub id: String,
    pub legs: Vec<String>,
    pub volume: f64,
}

#[derive(Clone, PartialEq, Debug)]
pub struct SegmentSpec {
    pub ds: String,
    pub weight: f64,
    pub serving_sws: Vec<String>,
}

/// Unvalidated, id-referenced description of a network.
#[derive(Clone, PartialEq, Debug)]
pub struct NetworkSpec {
    pub rolling_window: u32,
    pub nodes: Vec<Node>,
    pub legs: Vec<LegSpec>,
    pub paths: Vec<PathSpec>,
    pub segments: Vec<SegmentSpec>,
    /// Per-SW demand curves; SWs not listed use the uniform curve.
    pub curves: Vec<(String, DemandCurve)>,
}

/// Outcome of [`NetworkSpec::build`].
#[derive(Debug)]
pub struct Built {
    pub network: Network,
    pub warnings: Vec<String>,
}

/// Immutable, validated middle-mile network.
#[derive(Clone, PartialEq, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    legs: Vec<Leg>,
    paths: Vec<Path>,
    segments: Vec<DemandSegment>,
    rolling_window: u32,
    curves: BTreeMap<NodeIdx, DemandCurve>,

    node_index: BTreeMap<String, NodeIdx>,
    leg_index: BTreeMap<String, LegIdx>,
    out_legs: Vec<Vec<LegIdx>>,
    in_legs: Vec<Vec<LegIdx>>,
    leg_paths: Vec<Vec<PathIdx>>,
    ds_paths: Vec<Vec<PathIdx>>,
    ds_segments: Vec<Vec<usize>>,
    feasible: Vec<SlotSet>,
    wave_offset: Vec<usize>,
    downstream_first: Vec<LegIdx>,
    position: Vec<usize>,
}

impl NetworkSpec {
    /// Resolves ids, recomputes leg volumes and checks every structural
    /// invariant, collecting all issues before failing.
    pub fn build(self) -> Result<Built> {
        let mut issues: Vec<String> = Vec::new();
        let mut warnings = Vec::new();

        if self.nodes.is_empty() {
            issues.push("no nodes".into());
        }
        if self.rolling_window == 0 {
            issues.push("rolling_window must be positive".into());
        }

        let mut node_index = BTreeMap::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if node_index.insert(n.id.clone(), NodeIdx(i as u32)).is_some() {
                issues.push(format!("duplicate node id `{}`", n.id));
            }
        }

        let mut legs = Vec::with_capacity(self.legs.len());
        let mut leg_index = BTreeMap::new();
        for (i, l) in self.legs.iter().enumerate() {
            if leg_index.insert(l.id.clone(), LegIdx(i as u32)).is_some() {
                issues.push(format!("duplicate leg id `{}`", l.id));
            }
            let origin = node_index.get(&l.origin).copied();
            let dest = node_index.get(&l.dest).copied();
            if origin.is_none() {
                issues.push(format!("leg `{}`: unknown origin `{}`", l.id, l.origin));
            }
            if dest.is_none() {
                issues.push(format!("leg `{}`: unknown destination `{}`", l.id, l.dest));
            }
            if l.transit_slots == 0 {
                issues.push(format!("leg `{}`: transit_slots must be positive", l.id));
            }
            if let (Some(o), Some(d)) = (origin, dest) {
                let (ok, ik) = (self.nodes[o.index()].kind(), self.nodes[d.index()].kind());
                let allowed = matches!(
                    (ok, ik),
                    (NodeKind::Sw, NodeKind::Sc)
                        | (NodeKind::Sw, NodeKind::Ds)
                        | (NodeKind::Sc, NodeKind::Sc)
                        | (NodeKind::Sc, NodeKind::Ds)
                );
                if !allowed {
                    issues.push(format!(
                        "leg `{}`: {}→{} legs are not allowed",
                        l.id,
                        ok.as_str(),
                        ik.as_str()
                    ));
                }
                if o == d {
                    issues.push(format!("leg `{}` is a self-loop", l.id));
                }
                let multi_ok = ok == NodeKind::Sw && ik == NodeKind::Sc;
                if l.waves == 0 || l.waves > 2 || (l.waves > 1 && !multi_ok) {
                    issues.push(format!(
                        "leg `{}`: {} waves not allowed (1, or up to 2 on SW→SC legs)",
                        l.id, l.waves
                    ));
                }
            }
            legs.push(Leg {
                id: l.id.clone(),
                origin: origin.unwrap_or(NodeIdx(0)),
                dest: dest.unwrap_or(NodeIdx(0)),
                transit_slots: l.transit_slots,
                waves: l.waves.max(1),
                volume: 0.0,
            });
        }

        let mut paths = Vec::with_capacity(self.paths.len());
        let mut path_ids = BTreeMap::new();
        for p in &self.paths {
            if path_ids.insert(p.id.clone(), ()).is_some() {
                issues.push(format!("duplicate path id `{}`", p.id));
            }
            if !(p.volume.is_finite() && p.volume >= 0.0) {
                issues.push(format!("path `{}`: volume must be finite and non-negative", p.id));
            }
            if p.legs.is_empty() {
                issues.push(format!("path `{}` has no legs", p.id));
                continue;
            }
            let mut resolved = Vec::with_capacity(p.legs.len());
            for lid in &p.legs {
                match leg_index.get(lid) {
                    Some(&li) => resolved.push(li),
                    None => issues.push(format!("path `{}`: unknown leg `{}`", p.id, lid)),
                }
            }
            if resolved.len() != p.legs.len() {
                continue;
            }
            let mut ok = true;
            for w in resolved.windows(2) {
                if legs[w[0].index()].dest != legs[w[1].index()].origin {
                    issues.push(format!(
                        "path `{}`: legs `{}` and `{}` are not contiguous",
                        p.id,
                        legs[w[0].index()].id,
                        legs[w[1].index()].id
                    ));
                    ok = false;
                }
            }
            if !ok || self.nodes.is_empty() {
                continue;
            }
            let origin = legs[resolved[0].index()].origin;
            let dest = legs[resolved[resolved.len() - 1].index()].dest;
            let kind = |n: NodeIdx| self.nodes[n.index()].kind();
            if kind(origin) != NodeKind::Sw {
                issues.push(format!("path `{}` does not start at an SW", p.id));
            }
            if kind(dest) != NodeKind::Ds {
                issues.push(format!("path `{}` does not end at a DS", p.id));
            }
            let mut visited = vec![origin];
            for &li in &resolved {
                let n = legs[li.index()].dest;
                if n != dest && kind(n) != NodeKind::Sc {
                    issues.push(format!("path `{}`: interior node `{}` is not an SC", p.id, self.nodes[n.index()].id));
                }
                if visited.contains(&n) {
                    issues.push(format!("path `{}` revisits node `{}`", p.id, self.nodes[n.index()].id));
                }
                visited.push(n);
            }
            paths.push(Path { id: p.id.clone(), legs: resolved, origin, dest, volume: p.volume });
        }

        let mut leg_paths = vec![Vec::new(); legs.len()];
        for (pi, p) in paths.iter().enumerate() {
            for &li in &p.legs {
                leg_paths[li.index()].push(PathIdx(pi as u32));
                legs[li.index()].volume += p.volume;
            }
        }
        for (i, l) in legs.iter().enumerate() {
            if leg_paths[i].is_empty() {
                issues.push(format!("leg `{}` is not used by any path", l.id));
            }
            if let Some(declared) = self.legs[i].volume {
                let tol = 1e-9 * l.volume.abs().max(1.0);
                if (declared - l.volume).abs() > tol {
                    warnings.push(format!(
                        "leg `{}`: declared volume {} recomputed from paths as {}",
                        l.id, declared, l.volume
                    ));
                }
            }
        }

        let mut segments = Vec::with_capacity(self.segments.len());
        for (si, s) in self.segments.iter().enumerate() {
            let Some(&ds) = node_index.get(&s.ds) else {
                issues.push(format!("demand segment #{si}: unknown DS `{}`", s.ds));
                continue;
            };
            if self.nodes[ds.index()].kind() != NodeKind::Ds {
                issues.push(format!("demand segment #{si}: `{}` is not a DS", s.ds));
            }
            if !(s.weight.is_finite() && s.weight >= 0.0) {
                issues.push(format!("demand segment #{si}: weight must be finite and non-negative"));
            }
            let mut sws = Vec::with_capacity(s.serving_sws.len());
            for sw in &s.serving_sws {
                match node_index.get(sw) {
                    Some(&n) => {
                        if !paths.iter().any(|p| p.origin == n && p.dest == ds) {
                            issues.push(format!("demand segment #{si}: no path from `{sw}` to `{}`", s.ds));
                        }
                        sws.push(n);
                    }
                    None => issues.push(format!("demand segment #{si}: unknown SW `{sw}`")),
                }
            }
            sws.sort();
            sws.dedup();
            segments.push(DemandSegment { ds, weight: s.weight, serving_sws: sws });
        }

        let mut curves = BTreeMap::new();
        for (id, c) in self.curves {
            match node_index.get(&id) {
                Some(&n) if self.nodes[n.index()].kind() == NodeKind::Sw => {
                    if let Err(e) = c.check() {
                        issues.push(format!("demand curve for `{id}`: {e}"));
                    }
                    curves.insert(n, c);
                }
                Some(_) => issues.push(format!("demand curve for `{id}`: not an SW")),
                None => issues.push(format!("demand curve for unknown node `{id}`")),
            }
        }

        // Succession graph between legs must be acyclic.
        let mut succ: Vec<Vec<LegIdx>> = vec![Vec::new(); legs.len()];
        let mut position = vec![usize::MAX; legs.len()];
        for p in &paths {
            for (pos, w) in p.legs.iter().enumerate() {
                position[w.index()] = position[w.index()].min(pos);
            }
            for w in p.legs.windows(2) {
                if !succ[w[0].index()].contains(&w[1]) {
                    succ[w[0].index()].push(w[1]);
                }
            }
        }
        let downstream_first = match topo_order(&succ) {
            Some(mut order) => {
                order.reverse();
                order
            }
            None => {
                issues.push("leg succession along paths contains a cycle".into());
                Vec::new()
            }
        };

        if !issues.is_empty() {
            return Err(Error::Validation(ValidationErrors { issues }));
        }

        let n = self.nodes.len();
        let mut out_legs = vec![Vec::new(); n];
        let mut in_legs = vec![Vec::new(); n];
        for (i, l) in legs.iter().enumerate() {
            out_legs[l.origin.index()].push(LegIdx(i as u32));
            in_legs[l.dest.index()].push(LegIdx(i as u32));
        }
        let mut ds_paths = vec![Vec::new(); n];
        for (pi, p) in paths.iter().enumerate() {
            ds_paths[p.dest.index()].push(PathIdx(pi as u32));
        }
        let mut ds_segments = vec![Vec::new(); n];
        for (si, s) in segments.iter().enumerate() {
            ds_segments[s.ds.index()].push(si);
        }
        let feasible = legs
            .iter()
            .map(|l| {
                let o = &self.nodes[l.origin.index()];
                let d = &self.nodes[l.dest.index()];
                o.outbound_shift.intersection(d.inbound_shift.rotated(-(l.transit_slots as i64)))
            })
            .collect();
        let mut wave_offset = Vec::with_capacity(legs.len() + 1);
        let mut acc = 0;
        for l in &legs {
            wave_offset.push(acc);
            acc += l.waves as usize;
        }
        wave_offset.push(acc);

        Ok(Built {
            network: Network {
                nodes: self.nodes,
                legs,
                paths,
                segments,
                rolling_window: self.rolling_window,
                curves,
                node_index,
                leg_index,
                out_legs,
                in_legs,
                leg_paths,
                ds_paths,
                ds_segments,
                feasible,
                wave_offset,
                downstream_first,
                position,
            },
            warnings,
        })
    }
}

fn topo_order(succ: &[Vec<LegIdx>]) -> Option<Vec<LegIdx>> {
    let mut indeg = vec![0usize; succ.len()];
    for s in succ {
        for t in s {
            indeg[t.index()] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..succ.len()).rev().filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(succ.len());
    while let Some(i) = stack.pop() {
        order.push(LegIdx(i as u32));
        for t in succ[i].iter().rev() {
            indeg[t.index()] -= 1;
            if indeg[t.index()] == 0 {
                stack.push(t.index());
            }
        }
    }
    (order.len() == succ.len()).then_some(order)
}

impl Network {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn legs(&self) -> &[Leg] {
        &self.legs
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn segments(&self) -> &[DemandSegment] {
        &self.segments
    }

    pub fn rolling_window(&self) -> u32 {
        self.rolling_window
    }

    pub fn node(&self, n: NodeIdx) -> &Node {
        &self.nodes[n.index()]
    }

    pub fn leg(&self, l: LegIdx) -> &Leg {
        &self.legs[l.index()]
    }

    pub fn path(&self, p: PathIdx) -> &Path {
        &self.paths[p.index()]
    }

    pub fn node_by_id(&self, id: &str) -> Option<NodeIdx> {
        self.node_index.get(id).copied()
    }

    pub fn leg_by_id(&self, id: &str) -> Option<LegIdx> {
        self.leg_index.get(id).copied()
    }

    pub fn leg_indices(&self) -> impl ExactSizeIterator<Item = LegIdx> + Clone {
        (0..self.legs.len() as u32).map(LegIdx)
    }

    pub fn node_indices(&self) -> impl ExactSizeIterator<Item = NodeIdx> + Clone {
        (0..self.nodes.len() as u32).map(NodeIdx)
    }

    pub fn path_indices(&self) -> impl ExactSizeIterator<Item = PathIdx> + Clone {
        (0..self.paths.len() as u32).map(PathIdx)
    }

    pub fn out_legs(&self, n: NodeIdx) -> &[LegIdx] {
        &self.out_legs[n.index()]
    }

    pub fn in_legs(&self, n: NodeIdx) -> &[LegIdx] {
        &self.in_legs[n.index()]
    }

    /// Paths that traverse a leg.
    pub fn paths_through(&self, l: LegIdx) -> &[PathIdx] {
        &self.leg_paths[l.index()]
    }

    /// Paths terminating at a DS.
    pub fn paths_to(&self, ds: NodeIdx) -> &[PathIdx] {
        &self.ds_paths[ds.index()]
    }

    /// Indices into [`Network::segments`] for a DS.
    pub fn segments_of(&self, ds: NodeIdx) -> &[usize] {
        &self.ds_segments[ds.index()]
    }

    /// Shift-feasible departure slots of a leg.
    pub fn feasible_slots(&self, l: LegIdx) -> SlotSet {
        self.feasible[l.index()]
    }

    /// Total number of (leg, wave) decision variables.
    pub fn total_waves(&self) -> usize {
        self.wave_offset[self.legs.len()]
    }

    /// Flat index of the first wave of a leg.
    pub fn wave_offset(&self, l: LegIdx) -> usize {
        self.wave_offset[l.index()]
    }

    /// Inverse of [`Network::wave_offset`]: the leg and 0-based wave of a flat index.
    pub fn wave_at(&self, flat: usize) -> (LegIdx, u8) {
        let li = self.wave_offset.partition_point(|&o| o <= flat) - 1;
        (LegIdx(li as u32), (flat - self.wave_offset[li]) as u8)
    }

    /// Legs ordered so that each leg comes after every leg that follows it on some path.
    pub fn legs_downstream_first(&self) -> &[LegIdx] {
        &self.downstream_first
    }

    /// Smallest 0-based position of the leg over all paths using it.
    pub fn leg_position(&self, l: LegIdx) -> usize {
        self.position[l.index()]
    }

    pub fn demand_curve(&self, sw: NodeIdx) -> &DemandCurve {
        self.curves.get(&sw).unwrap_or(&DemandCurve::UNIFORM)
    }

    pub fn curve_overrides(&self) -> impl Iterator<Item = (NodeIdx, &DemandCurve)> {
        self.curves.iter().map(|(k, v)| (*k, v))
    }

    /// Sum of all demand-segment weights; the KPI normalization constant.
    pub fn total_demand(&self) -> f64 {
        self.segments.iter().map(|s| s.weight).sum()
    }

    /// Arrival slot of a departure at `slot` over the leg.
    pub fn arrival_slot(&self, l: LegIdx, slot: Slot) -> Slot {
        slot.shifted(self.legs[l.index()].transit_slots as i64)
    }

    /// Id-referenced description that rebuilds into an identical network.
    pub fn to_spec(&self) -> NetworkSpec {
        let nid = |n: NodeIdx| self.nodes[n.index()].id.clone();
        NetworkSpec {
            rolling_window: self.rolling_window,
            nodes: self.nodes.clone(),
            legs: self
                .legs
                .iter()
                .map(|l| LegSpec {
                    id: l.id.clone(),
                    origin: nid(l.origin),
                    dest: nid(l.dest),
                    transit_slots: l.transit_slots,
                    waves: l.waves,
                    volume: Some(l.volume),
                })
                .collect(),
            paths: self
                .paths
                .iter()
                .map(|p| PathSpec {
                    id: p.id.clone(),
                    legs: p.legs.iter().map(|l| self.legs[l.index()].id.clone()).collect(),
                    volume: p.volume,
                })
                .collect(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentSpec {
                    ds: nid(s.ds),
                    weight: s.weight,
                    serving_sws: s.serving_sws.iter().map(|&n| nid(n)).collect(),
                })
                .collect(),
            curves: self.curves.iter().map(|(n, c)| (nid(*n), c.clone())).collect(),
        }
    }
}

/// Shift-feasible departure slots of the leg named `leg_id`.
pub fn leg_feasible_slots(net: &Network, leg_id: &str) -> Result<SlotSet> {
    net.leg_by_id(leg_id)
        .map(|l| net.feasible_slots(l))
        .ok_or_else(|| Error::UnknownLeg(leg_id.into()))
}
