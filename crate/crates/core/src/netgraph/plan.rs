use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::reduced::ReducedGraph;
use crate::mode::Mode;
use crate::scenario::{hub_index, ScenarioConfig, SOC_EPS};

/// One movement between reduced-graph nodes.
///
/// `pickup` is set when a fresh tool of `mode` is taken from the hub at
/// `from` for this leg; a tool leg without `pickup` continues riding the tool
/// carried on the previous leg.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Leg {
    pub from: String,
    pub to: String,
    pub mode: Mode,
    pub time_s: f64,
    pub distance_m: f64,
    #[serde(default)]
    pub pickup: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soc_after: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub legs: Vec<Leg>,
    pub total_time_s: f64,
}

impl Plan {
    pub fn empty() -> Self {
        Plan { legs: Vec::new(), total_time_s: 0.0 }
    }

    /// Total is the left-to-right sum of leg times.
    pub fn from_legs(legs: Vec<Leg>) -> Self {
        let total_time_s = legs.iter().fold(0.0, |acc, l| acc + l.time_s);
        Plan { legs, total_time_s }
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.legs.iter().map(|l| l.mode)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Violation {
    WrongStart {
        expected: String,
        found: String,
    },
    WrongEnd {
        expected: String,
        found: String,
    },
    BrokenChain {
        leg: usize,
    },
    Revisit {
        node: String,
    },
    UnknownArc {
        leg: usize,
    },
    TimeMismatch {
        leg: usize,
        expected: f64,
        found: f64,
    },
    TotalMismatch {
        expected: f64,
        found: f64,
    },
    PreferenceExcluded {
        mode: Mode,
    },
    /// The pickup hub does not hold a tool of this mode.
    ToolUnavailable {
        leg: usize,
        node: String,
        mode: Mode,
    },
    /// A tool leg without pickup while not carrying that tool.
    NoToolCarried {
        leg: usize,
        mode: Mode,
    },
    /// A tool is left at a node that does not dock its mode.
    NotDroppable {
        node: String,
        mode: Mode,
    },
    EnergyDeficit {
        leg: usize,
        mode: Mode,
        required: f64,
        available: f64,
    },
}

/// Recomputes a plan's cost from the reduced graph's arc weights, or `None`
/// if a leg does not correspond to an arc.
pub fn plan_cost(p: &Plan, r: &ReducedGraph) -> Option<f64> {
    p.legs.iter().try_fold(0.0, |acc, l| r.arc_between(&l.from, &l.to, l.mode).map(|a| acc + a.time_s))
}

/// Checks chaining, arc weights, preference, conformity (pickup and drop
/// hubs) and energy along each carried segment. Returns every violation.
pub fn validate_plan(p: &Plan, r: &ReducedGraph, sc: &ScenarioConfig) -> Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    let origin = r.node_id(r.origin());
    let destination = r.node_id(r.destination());
    let hubs = hub_index(sc);

    match (p.legs.first(), p.legs.last()) {
        (Some(first), Some(last)) => {
            if first.from != origin {
                violations.push(Violation::WrongStart { expected: origin.into(), found: first.from.clone() });
            }
            if last.to != destination {
                violations.push(Violation::WrongEnd { expected: destination.into(), found: last.to.clone() });
            }
        }
        _ => {
            if origin != destination {
                violations.push(Violation::WrongEnd { expected: destination.into(), found: origin.into() });
            }
        }
    }

    let mut visited: HashSet<&str> = HashSet::new();
    visited.insert(origin);
    let mut excluded_reported = HashSet::new();
    let mut carried: Option<(Mode, f64)> = None;
    let docks = |node: &str, mode: Mode| hubs.get(node).is_some_and(|h| h.docks.contains(mode));

    for (k, leg) in p.legs.iter().enumerate() {
        if k > 0 && p.legs[k - 1].to != leg.from {
            violations.push(Violation::BrokenChain { leg: k });
        }
        if !visited.insert(leg.to.as_str()) {
            violations.push(Violation::Revisit { node: leg.to.clone() });
        }
        match r.arc_between(&leg.from, &leg.to, leg.mode) {
            None => violations.push(Violation::UnknownArc { leg: k }),
            Some(arc) if arc.time_s != leg.time_s => {
                violations.push(Violation::TimeMismatch { leg: k, expected: arc.time_s, found: leg.time_s })
            }
            Some(_) => {}
        }
        if !sc.preference.allows(leg.mode) && excluded_reported.insert(leg.mode) {
            violations.push(Violation::PreferenceExcluded { mode: leg.mode });
        }

        let node = leg.from.as_str();
        let continuing = !leg.pickup && leg.mode.is_tool() && carried.is_some_and(|(m, _)| m == leg.mode);
        if !continuing {
            if let Some((m, _)) = carried.take() {
                if !docks(node, m) {
                    violations.push(Violation::NotDroppable { node: node.into(), mode: m });
                }
            }
        }
        if leg.mode == Mode::Walk {
            continue;
        }
        let soc = if continuing {
            carried.map(|(_, s)| s)
        } else if leg.pickup {
            match hubs.get(node).and_then(|h| h.tool(leg.mode)) {
                Some(t) => Some(t.soc),
                None => {
                    violations.push(Violation::ToolUnavailable { leg: k, node: node.into(), mode: leg.mode });
                    None
                }
            }
        } else {
            violations.push(Violation::NoToolCarried { leg: k, mode: leg.mode });
            None
        };
        if let Some(soc) = soc {
            let required = sc.energy_required(leg.mode, leg.time_s);
            if soc - required < -SOC_EPS {
                violations.push(Violation::EnergyDeficit { leg: k, mode: leg.mode, required, available: soc });
            }
            carried = Some((leg.mode, soc - required));
        } else {
            carried = None;
        }
    }
    if let Some((m, _)) = carried {
        if !docks(destination, m) {
            violations.push(Violation::NotDroppable { node: destination.into(), mode: m });
        }
    }

    let sum = p.legs.iter().fold(0.0, |acc, l| acc + l.time_s);
    if sum != p.total_time_s {
        violations.push(Violation::TotalMismatch { expected: sum, found: p.total_time_s });
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scenario::UserPreference;

    fn leg(r: &ReducedGraph, from: &str, to: &str, mode: Mode, pickup: bool) -> Leg {
        let arc = r.arc_between(from, to, mode).expect("fixture arc");
        Leg {
            from: from.into(),
            to: to.into(),
            mode,
            time_s: arc.time_s,
            distance_m: arc.distance_m,
            pickup,
            soc_after: None,
        }
    }

    fn ecar_plan(r: &ReducedGraph) -> Plan {
        Plan::from_legs(vec![
            leg(r, "O", "H1", Mode::Walk, false),
            leg(r, "H1", "H2", Mode::ECar, true),
            leg(r, "H2", "D", Mode::Walk, false),
        ])
    }

    #[test]
    fn t3_ecar_plan_is_valid() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let p = ecar_plan(&r);
        assert_eq!(p.total_time_s, 1050.0);
        assert_eq!(validate_plan(&p, &r, &sc.config), Ok(()));
        assert_eq!(plan_cost(&p, &r), Some(1050.0));
    }

    #[test]
    fn excluded_mode_is_reported() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let cfg = sc.config.with_preference(UserPreference::excluding(Mode::ECar));
        let err = validate_plan(&ecar_plan(&r), &r, &cfg).unwrap_err();
        assert_eq!(err, vec![Violation::PreferenceExcluded { mode: Mode::ECar }]);
    }

    #[test]
    fn low_soc_bike_is_an_energy_deficit() {
        let sc = fixtures::t3(20.0);
        let r = fixtures::t3_reduced(&sc);
        let p = Plan::from_legs(vec![
            leg(&r, "O", "H1", Mode::Walk, false),
            leg(&r, "H1", "H2", Mode::EBike, true),
            leg(&r, "H2", "D", Mode::Walk, false),
        ]);
        let err = validate_plan(&p, &r, &sc.config).unwrap_err();
        assert_eq!(err, vec![Violation::EnergyDeficit { leg: 1, mode: Mode::EBike, required: 30.0, available: 20.0 }]);
    }

    #[test]
    fn conformity_violations() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        // Picking up at H2, which holds no tools.
        let p = Plan::from_legs(vec![leg(&r, "O", "H2", Mode::Walk, false), leg(&r, "H2", "D", Mode::Walk, false)]);
        assert_eq!(validate_plan(&p, &r, &sc.config), Ok(()));

        let mut p = ecar_plan(&r);
        p.legs[1].pickup = false;
        let err = validate_plan(&p, &r, &sc.config).unwrap_err();
        assert!(err.contains(&Violation::NoToolCarried { leg: 1, mode: Mode::ECar }));

        // H2 stops docking cars: the car cannot be left there.
        let mut cfg = sc.config.clone();
        cfg.hubs[1].docks.remove(Mode::ECar);
        let err = validate_plan(&ecar_plan(&r), &r, &cfg).unwrap_err();
        assert_eq!(err, vec![Violation::NotDroppable { node: "H2".into(), mode: Mode::ECar }]);

        // Riding a pickup straight into D (not a hub).
        let mut net = fixtures::t3_network();
        net.edges.iter_mut().find(|e| e.id == "h1_d").unwrap().modes.push(Mode::ECar);
        let sc3 = crate::scenario::Scenario::from_documents(&net, &fixtures::t3_scenario_document(50.0)).unwrap();
        let r3 = fixtures::t3_reduced(&sc3);
        let p = Plan::from_legs(vec![leg(&r3, "O", "H1", Mode::Walk, false), leg(&r3, "H1", "D", Mode::ECar, true)]);
        let err = validate_plan(&p, &r3, &sc3.config).unwrap_err();
        assert_eq!(err, vec![Violation::NotDroppable { node: "D".into(), mode: Mode::ECar }]);
    }

    #[test]
    fn structural_violations() {
        let sc = fixtures::t3(50.0);
        let r = fixtures::t3_reduced(&sc);
        let mut p = ecar_plan(&r);
        p.total_time_s += 1.0;
        p.legs[2].from = "H1".into();
        let err = validate_plan(&p, &r, &sc.config).unwrap_err();
        assert!(err.contains(&Violation::BrokenChain { leg: 2 }));
        assert!(err.iter().any(|v| matches!(v, Violation::TotalMismatch { .. })));

        let empty = Plan::empty();
        assert!(validate_plan(&empty, &r, &sc.config).is_err());
    }
}
