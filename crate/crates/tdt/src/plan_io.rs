//! Line-oriented text formats for plans and slot domains.
//!
//! Plan lines are `leg_id/wave slot`, with `-` for a wave left unplaced.
//! Domain lines are `leg_id/wave 1-24,37`, with `-` for an empty domain.
//! Waves are numbered from 1. `#` starts a comment.

use std::collections::HashSet;
use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};
use tdt_core::{Network, Slot, SlotSet, TdtPlan};

fn entries<'a>(text: &'a str) -> impl Iterator<Item = (usize, &'a str, &'a str)> + 'a {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            return None;
        }
        let (key, value) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        Some((i + 1, key, value.trim()))
    })
}

fn flat_index(net: &Network, key: &str) -> Result<usize> {
    let (leg, wave) = key.rsplit_once('/').ok_or_else(|| anyhow!("expected `leg_id/wave`, got `{key}`"))?;
    let l = net.leg_by_id(leg).ok_or_else(|| anyhow!("unknown leg `{leg}`"))?;
    let w: u8 = wave.parse().map_err(|_| anyhow!("bad wave number `{wave}`"))?;
    let waves = net.leg(l).waves;
    if w == 0 || w > waves {
        bail!("leg `{leg}` has {waves} wave(s), got wave {w}");
    }
    Ok(net.wave_offset(l) + (w - 1) as usize)
}

fn key_of(net: &Network, flat: usize) -> String {
    let (l, w) = net.wave_at(flat);
    format!("{}/{}", net.leg(l).id, w + 1)
}

fn parse_slot(s: &str) -> Result<Slot> {
    let k: u16 = s.parse().map_err(|_| anyhow!("bad slot `{s}`"))?;
    Slot::new(k).ok_or_else(|| anyhow!("slot {k} outside 1..=96"))
}

/// Parses a plan; waves not mentioned stay unplaced.
pub fn parse_plan(net: &Network, text: &str) -> Result<TdtPlan> {
    let mut plan = TdtPlan::empty(net);
    let mut seen = HashSet::new();
    for (line, key, value) in entries(text) {
        let res = (|| {
            let i = flat_index(net, key)?;
            if !seen.insert(i) {
                bail!("`{key}` given twice");
            }
            plan.flat_mut()[i] = match value {
                "-" => None,
                "" => bail!("`{key}` has no slot"),
                v => Some(parse_slot(v)?),
            };
            Ok(())
        })();
        res.map_err(|e| anyhow!("plan line {line}: {e}"))?;
    }
    Ok(plan)
}

pub fn render_plan(net: &Network, plan: &TdtPlan) -> String {
    let mut out = String::new();
    for (i, s) in plan.flat().iter().enumerate() {
        match s {
            Some(s) => writeln!(out, "{} {}", key_of(net, i), s.get()),
            None => writeln!(out, "{} -", key_of(net, i)),
        }
        .unwrap();
    }
    out
}

fn render_set(set: SlotSet) -> String {
    let mut runs: Vec<(u8, u8)> = Vec::new();
    for s in set.iter() {
        let k = s.get();
        match runs.last_mut() {
            Some((_, hi)) if *hi + 1 == k => *hi = k,
            _ => runs.push((k, k)),
        }
    }
    if runs.is_empty() {
        return "-".into();
    }
    runs.iter()
        .map(|&(lo, hi)| if lo == hi { lo.to_string() } else { format!("{lo}-{hi}") })
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_set(s: &str) -> Result<SlotSet> {
    let mut set = SlotSet::EMPTY;
    if s == "-" {
        return Ok(set);
    }
    for part in s.split(',') {
        let part = part.trim();
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (parse_slot(a.trim())?, parse_slot(b.trim())?);
                if a > b {
                    bail!("descending range `{part}`");
                }
                set = set.union(SlotSet::interval(a, b));
            }
            None => set.insert(parse_slot(part)?),
        }
    }
    Ok(set)
}

pub fn render_domains(net: &Network, domains: &[SlotSet]) -> String {
    let mut out = String::new();
    for (i, d) in domains.iter().enumerate() {
        writeln!(out, "{} {}", key_of(net, i), render_set(*d)).unwrap();
    }
    out
}

/// Parses a domain document; every wave must be listed.
pub fn parse_domains(net: &Network, text: &str) -> Result<Vec<SlotSet>> {
    let mut domains: Vec<Option<SlotSet>> = vec![None; net.total_waves()];
    for (line, key, value) in entries(text) {
        let res = (|| {
            let i = flat_index(net, key)?;
            if domains[i].is_some() {
                bail!("`{key}` given twice");
            }
            domains[i] = Some(parse_set(value)?);
            Ok(())
        })();
        res.map_err(|e| anyhow!("domains line {line}: {e}"))?;
    }
    domains
        .into_iter()
        .enumerate()
        .map(|(i, d)| d.ok_or_else(|| anyhow!("domains missing `{}`", key_of(net, i))))
        .collect()
}
