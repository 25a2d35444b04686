//! JSON documents for annotations, strategy profiles and correlation
//! devices. Rationals are strings (`"1/3"`, `"2"`, `"0.25"`).
//!
//! Annotations:
//!
//! ```json
//! {
//!   "roles": ["a", "b"],
//!   "transitions": { "t0": { "role": "a", "utilities": { "a": "-1" } } },
//!   "metadata": {}
//! }
//! ```
//!
//! Profiles map player names to a default rule (`act`, `uniform`, `first`
//! or `idle`) and explicit rules for (state, signal) pairs:
//!
//! ```json
//! { "players": { "c": { "default": "idle" },
//!                "a": { "default": "act",
//!                       "rules": [ { "state": ["p2"], "signal": "⊤",
//!                                    "choose": { "t1": "1/2", "idle": "1/2" } } ] } } }
//! ```
//!
//! Devices list signal alphabets, device states and per-state emissions;
//! players without an alphabet receive `⊤`:
//!
//! ```json
//! { "signals": { "alice": ["WORK_A", "WORK_B"], "bob": ["WORK_A", "WORK_B"] },
//!   "emissions": { "d0": [
//!       { "signals": { "alice": "WORK_B", "bob": "WORK_B" }, "prob": "3/5" },
//!       { "signals": { "alice": "WORK_A", "bob": "WORK_A" }, "prob": "2/5" } ] } }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::game::{Action, StochasticGame};
use crate::petri::{AnnotatedNet, Marking, PetriNet};
use crate::rational::{self, Rational};
use crate::strategy::{
    CorrelationDevice, Dist, Emission, Rule, StationaryStrategy, Strategy, StrategyProfile, TOP,
};

fn schema<E: std::fmt::Display>(e: E) -> Error {
    Error::SchemaError(e.to_string())
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct AnnotationDoc {
    #[serde(default)]
    roles: Vec<String>,
    #[serde(default)]
    transitions: BTreeMap<String, TransitionDoc>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    metadata: Value,
    /// Only `uniform` is supported; other conflict-resolution schemes are
    /// reserved for probability annotations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conflict_resolution: Option<String>,
}

#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TransitionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<String>,
    #[serde(default)]
    utilities: BTreeMap<String, String>,
}

/// Reads an annotation document for `net`. Unassigned transitions belong to
/// nature and missing utilities are 0.
pub fn parse_annotations(text: &str, net: PetriNet, initial: Marking) -> Result<AnnotatedNet> {
    let doc: AnnotationDoc = serde_json::from_str(text).map_err(schema)?;
    match doc.conflict_resolution.as_deref() {
        None | Some("uniform") => {}
        Some(other) => {
            return Err(Error::UnsupportedFeature(format!(
                "conflict resolution `{other}`; only `uniform` is implemented"
            )))
        }
    }
    let mut builder = AnnotatedNet::builder(net, initial).roles(doc.roles);
    for (t, td) in doc.transitions {
        if let Some(r) = td.role {
            builder = builder.assign(t.clone(), r);
        }
        for (r, v) in td.utilities {
            builder = builder.utility(r, t.clone(), rational::parse(&v)?);
        }
    }
    builder.build()
}

/// Annotation document of a net; [`parse_annotations`] reads it back.
pub fn write_annotations(a: &AnnotatedNet) -> Value {
    let net = a.net();
    let mut transitions = BTreeMap::new();
    for t in net.transitions() {
        let mut td = TransitionDoc {
            role: a.owner(t).map(|r| a.roles()[r].clone()),
            ..Default::default()
        };
        for (r, role) in a.roles().iter().enumerate() {
            let u = a.utility(r, t);
            if !num_traits::Zero::is_zero(&u) {
                td.utilities.insert(role.clone(), u.to_string());
            }
        }
        if td.role.is_some() || !td.utilities.is_empty() {
            transitions.insert(net.transition_name(t).to_string(), td);
        }
    }
    serde_json::to_value(AnnotationDoc {
        roles: a.roles().to_vec(),
        transitions,
        ..Default::default()
    })
    .expect("serializable")
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDoc {
    #[serde(default)]
    players: BTreeMap<String, PlayerDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlayerDoc {
    #[serde(default)]
    default: Option<String>,
    #[serde(default)]
    rules: Vec<RuleDoc>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    state: Vec<String>,
    #[serde(default)]
    signal: Option<String>,
    choose: BTreeMap<String, String>,
}

const RULES: [(&str, Rule); 4] = [
    ("act", Rule::Act),
    ("uniform", Rule::Uniform),
    ("first", Rule::FirstAct),
    ("idle", Rule::Idle),
];

fn rule_named(name: &str) -> Result<Rule> {
    RULES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, r)| *r)
        .ok_or_else(|| Error::SchemaError(format!("unknown default rule `{name}`")))
}

fn action_named(game: &StochasticGame, name: &str) -> Result<Action> {
    if name == "idle" {
        Ok(Action::Idle)
    } else {
        Ok(Action::Fire(game.net().transition(name)?))
    }
}

fn action_name(game: &StochasticGame, a: Action) -> String {
    match a {
        Action::Idle => "idle".to_string(),
        Action::Fire(t) => game.net().transition_name(t).to_string(),
    }
}

/// Reads a profile document. Players not mentioned act uniformly over their
/// enabled transitions (nature: uniform over all options).
pub fn parse_profile(
    text: &str,
    game: &StochasticGame,
    device: &CorrelationDevice,
) -> Result<StrategyProfile> {
    let doc: ProfileDoc = serde_json::from_str(text).map_err(schema)?;
    let mut profile = StrategyProfile::acting(game, device);
    for (name, pd) in doc.players {
        let i = game.player_index(&name)?;
        let default = match pd.default.as_deref() {
            Some(r) => rule_named(r)?,
            None if i == game.nature() => Rule::Uniform,
            None => Rule::Act,
        };
        let mut overrides: BTreeMap<(usize, usize), Dist> = BTreeMap::new();
        for rule in &pd.rules {
            let marking = game.net().marking(&rule.state)?;
            let s = game
                .state_index(&marking)
                .ok_or_else(|| Error::UnknownState(game.net().marking_label(&marking)))?;
            let signals: Vec<usize> = match &rule.signal {
                None => (0..device.alphabet(i).len()).collect(),
                Some(sig) => vec![device.signal_index(i, sig).ok_or_else(|| {
                    Error::SchemaError(format!("`{name}` has no signal `{sig}`"))
                })?],
            };
            let dist = rule
                .choose
                .iter()
                .map(|(a, p)| Ok((action_named(game, a)?, rational::parse(p)?)))
                .collect::<Result<Dist>>()?;
            for m in signals {
                overrides.insert((s, m), dist.clone());
            }
        }
        let strategy = StationaryStrategy::from_fn(game, device, i, |s, m, avail| {
            overrides
                .get(&(s, m))
                .cloned()
                .unwrap_or_else(|| default.apply(avail))
        })?;
        profile = profile.with(i, Strategy::Stationary(strategy));
    }
    Ok(profile)
}

fn dist_json(game: &StochasticGame, dist: &Dist) -> Value {
    let map: Map<String, Value> = dist
        .iter()
        .map(|(a, p)| (action_name(game, *a), Value::String(p.to_string())))
        .collect();
    Value::Object(map)
}

/// Profile document of stationary strategies, using for every player the
/// default rule that needs the fewest explicit rules.
pub fn write_profile(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
) -> Result<Value> {
    let mut players = Map::new();
    for i in 0..game.num_players() {
        let s = profile.stationary(game, i)?;
        let cells: Vec<(usize, usize)> = (0..game.num_states())
            .flat_map(|st| (0..device.alphabet(i).len()).map(move |m| (st, m)))
            .collect();
        let (name, rule, misses) = RULES
            .iter()
            .map(|(n, r)| {
                let misses: Vec<(usize, usize)> = cells
                    .iter()
                    .copied()
                    .filter(|&(st, m)| *s.dist(st, m) != r.apply(game.available(st, i)))
                    .collect();
                (*n, *r, misses)
            })
            .min_by_key(|(_, _, misses)| misses.len())
            .expect("rules exist");
        let _ = rule;
        let rules: Vec<Value> = misses
            .into_iter()
            .map(|(st, m)| {
                let mut rule = json!({
                    "state": game.net().marking_names(&game.states()[st]),
                    "choose": dist_json(game, s.dist(st, m)),
                });
                if device.alphabet(i).len() > 1 {
                    rule["signal"] = Value::String(device.alphabet(i)[m].clone());
                }
                rule
            })
            .collect();
        let mut entry = json!({ "default": name });
        if !rules.is_empty() {
            entry["rules"] = Value::Array(rules);
        }
        players.insert(game.player_name(i).to_string(), entry);
    }
    Ok(json!({ "players": players }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DeviceDoc {
    #[serde(default)]
    signals: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    states: Option<Vec<String>>,
    #[serde(default)]
    start: Option<String>,
    emissions: BTreeMap<String, Vec<EmissionDoc>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EmissionDoc {
    #[serde(default)]
    signals: BTreeMap<String, String>,
    prob: String,
    #[serde(default)]
    next: Option<String>,
}

/// Reads a device document for the players of `game`.
pub fn parse_device(text: &str, game: &StochasticGame) -> Result<CorrelationDevice> {
    let doc: DeviceDoc = serde_json::from_str(text).map_err(schema)?;
    let mut alphabets = vec![vec![TOP.to_string()]; game.num_players()];
    for (name, alphabet) in doc.signals {
        alphabets[game.player_index(&name)?] = alphabet;
    }
    let states = doc
        .states
        .unwrap_or_else(|| doc.emissions.keys().cloned().collect());
    let state_index = |name: &str| {
        states
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| Error::SchemaError(format!("unknown device state `{name}`")))
    };
    let start = match &doc.start {
        Some(s) => state_index(s)?,
        None => 0,
    };
    let mut emissions = vec![Vec::new(); states.len()];
    for (state, list) in &doc.emissions {
        let x = state_index(state)?;
        for e in list {
            let mut signals = vec![0; game.num_players()];
            for (player, sig) in &e.signals {
                let i = game.player_index(player)?;
                signals[i] = alphabets[i].iter().position(|s| s == sig).ok_or_else(|| {
                    Error::SchemaError(format!("`{player}` has no signal `{sig}`"))
                })?;
            }
            let next = match &e.next {
                Some(n) => state_index(n)?,
                None => x,
            };
            emissions[x].push(Emission {
                signals,
                prob: rational::parse(&e.prob)?,
                next,
            });
        }
    }
    CorrelationDevice::new(alphabets, states, start, emissions)
}

/// Device document; [`parse_device`] reads it back.
pub fn write_device(game: &StochasticGame, device: &CorrelationDevice) -> Value {
    let players = 0..game.num_players();
    let signals: Map<String, Value> = players
        .clone()
        .map(|i| (game.player_name(i).to_string(), json!(device.alphabet(i))))
        .collect();
    let states: Vec<&str> = (0..device.num_states())
        .map(|x| device.state_name(x))
        .collect();
    let emissions: Map<String, Value> = (0..device.num_states())
        .map(|x| {
            let list: Vec<Value> = device
                .emissions(x)
                .iter()
                .map(|e| {
                    let sig: Map<String, Value> = players
                        .clone()
                        .map(|i| {
                            let name = device.alphabet(i)[e.signals[i]].clone();
                            (game.player_name(i).to_string(), Value::String(name))
                        })
                        .collect();
                    json!({
                        "signals": sig,
                        "prob": e.prob.to_string(),
                        "next": device.state_name(e.next),
                    })
                })
                .collect();
            (device.state_name(x).to_string(), Value::Array(list))
        })
        .collect();
    json!({
        "signals": signals,
        "states": states,
        "start": device.state_name(device.start()),
        "emissions": emissions,
    })
}

/// Exact rational from a JSON string, for report consumers and tests.
pub fn rational_field(v: &Value) -> Result<Rational> {
    match v {
        Value::String(s) => rational::parse(s),
        other => Err(Error::SchemaError(format!(
            "expected a rational string, got {other}"
        ))),
    }
}
