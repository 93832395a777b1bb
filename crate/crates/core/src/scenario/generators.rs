use rand::seq::index::sample;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{ScenarioConfig, ScenarioError, ToolState};
use crate::mode::Mode;
use crate::netgraph::{shortest_path_tree, MultiModalGraph};
use crate::rng;

/// SOC given to tools created by [`distribute_tools`].
pub const DEFAULT_TOOL_SOC: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ToolPolicy {
    /// Every hub holds one of each tool type.
    Fixed,
    /// Every hub holds a uniformly drawn non-empty subset of the tool types.
    Random,
}

/// Replaces every hub's inventory according to `policy`. Docks are widened
/// to cover the new tools. New tools start at [`DEFAULT_TOOL_SOC`].
pub fn distribute_tools(sc: &ScenarioConfig, policy: ToolPolicy, seed: u64) -> ScenarioConfig {
    let mut rng = rng::stream(seed, 0x7001);
    let mut next = sc.clone();
    for hub in &mut next.hubs {
        let mask: u8 = match policy {
            ToolPolicy::Fixed => 0b111,
            ToolPolicy::Random => rng.random_range(1..8u8),
        };
        hub.tools = Mode::TOOLS
            .into_iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, mode)| ToolState { mode, soc: DEFAULT_TOOL_SOC })
            .collect();
        for t in &hub.tools {
            hub.docks.insert(t.mode);
        }
    }
    next
}

/// Draws `n` distinct walk-reachable (origin, destination) pairs, stratified
/// over the short/medium/long terciles of walking time.
pub fn sample_od_pairs(g: &MultiModalGraph, n: usize, seed: u64) -> Result<Vec<(String, String)>, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::InvalidRequest("at least one O/D pair must be requested".into()));
    }
    if g.node_count() < 2 {
        return Err(ScenarioError::NotEnoughPairs { requested: n, available: 0 });
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for o in 0..g.node_count() {
        let tree = shortest_path_tree(g, Mode::Walk, o);
        for (d, t) in tree.time.iter().enumerate() {
            if let (true, Some(t)) = (d != o, t) {
                pairs.push((*t, o, d));
            }
        }
    }
    if pairs.len() < n {
        return Err(ScenarioError::NotEnoughPairs { requested: n, available: pairs.len() });
    }
    pairs.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| g.node_id(a.1).cmp(g.node_id(b.1)))
            .then_with(|| g.node_id(a.2).cmp(g.node_id(b.2)))
    });

    let len = pairs.len();
    let bounds = [0, len / 3, 2 * len / 3, len];
    let strata: Vec<&[(f64, usize, usize)]> = (0..3).map(|i| &pairs[bounds[i]..bounds[i + 1]]).collect();
    let mut quota = [n / 3; 3];
    for q in quota.iter_mut().take(n % 3) {
        *q += 1;
    }
    // Move quota that a small stratum cannot absorb to the others.
    loop {
        let mut spill = 0;
        for (i, q) in quota.iter_mut().enumerate() {
            if *q > strata[i].len() {
                spill += *q - strata[i].len();
                *q = strata[i].len();
            }
        }
        if spill == 0 {
            break;
        }
        for (i, q) in quota.iter_mut().enumerate() {
            let room = strata[i].len() - *q;
            let take = room.min(spill);
            *q += take;
            spill -= take;
        }
    }

    let mut rng = rng::stream(seed, 0x0D0D);
    let mut out = Vec::with_capacity(n);
    for (stratum, &q) in strata.iter().zip(&quota) {
        let mut picked = sample(&mut rng, stratum.len(), q).into_vec();
        picked.sort_unstable();
        for i in picked {
            let (_, o, d) = stratum[i];
            out.push((g.node_id(o).to_string(), g.node_id(d).to_string()));
        }
    }
    Ok(out)
}
