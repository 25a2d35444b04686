//! JSON and text reports.
//!
//! Every report carries the tool name and version, SHA-256 digests of its
//! inputs and, when randomness was involved, the seed. Exact values appear as
//! `{"exact": "1/15", "approx": 0.066667}`. Entries produced by simulation
//! carry `"heuristic": true`.

use serde_json::{json, Map, Value};

use crate::equilibrium::{
    AlignmentVerdict, BridgeReport, EquilibriumCheck, PlayerGain, Positivity, SearchOutcome,
};
use crate::error::Result;
use crate::game::{GameKind, StochasticGame};
use crate::io::digest;
use crate::io::documents::{write_device, write_profile};
use crate::petri::{AnnotatedNet, PetriNet, StructuralReport, NATURE};
use crate::rational::{DualValue, Rational};
use crate::statespace::SoundnessReport;
use crate::strategy::SimulationEstimate;

pub const TOOL_NAME: &str = "petrigame";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Format> {
        match s {
            "json" => Ok(Format::Json),
            "text" => Ok(Format::Text),
            other => Err(crate::Error::InvalidArgument(format!(
                "unknown format `{other}`"
            ))),
        }
    }
}

/// Report under construction. Keys are kept sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    root: Map<String, Value>,
}

impl Report {
    pub fn new(command: &str) -> Report {
        let mut root = Map::new();
        root.insert(
            "tool".into(),
            json!({ "name": TOOL_NAME, "version": TOOL_VERSION }),
        );
        root.insert("command".into(), json!(command));
        root.insert("inputs".into(), json!({}));
        Report { root }
    }

    /// Records the digest of an input file.
    pub fn input(mut self, name: &str, bytes: &[u8]) -> Report {
        self.root["inputs"]
            .as_object_mut()
            .expect("inputs is an object")
            .insert(name.to_string(), json!({ "sha256": digest(bytes) }));
        self
    }

    pub fn seed(self, seed: u64) -> Report {
        self.set("seed", json!(seed))
    }

    pub fn set(mut self, key: &str, value: Value) -> Report {
        self.root.insert(key.to_string(), value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.root.get(key)
    }

    pub fn to_json(&self) -> Value {
        Value::Object(self.root.clone())
    }
}

fn text_lines(prefix: &str, v: &Value, out: &mut Vec<String>) {
    match v {
        Value::Object(map) if map.len() == 2 && map.contains_key("exact") => {
            out.push(format!(
                "{prefix}: {}",
                map["exact"].as_str().unwrap_or("?")
            ));
        }
        Value::Object(map) => {
            for (k, v) in map {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                text_lines(&p, v, out);
            }
        }
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push(format!("{prefix}: [{}]", parts.join(", ")));
        }
        Value::Array(items) => {
            for (k, v) in items.iter().enumerate() {
                text_lines(&format!("{prefix}[{k}]"), v, out);
            }
        }
        other => out.push(format!("{prefix}: {}", scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Renders a report: pretty JSON, or one `path: value` line per leaf.
pub fn emit_report(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&report.to_json()).expect("serializable");
            s.push('\n');
            s
        }
        Format::Text => {
            let mut lines = Vec::new();
            text_lines("", &report.to_json(), &mut lines);
            lines.join("\n") + "\n"
        }
    }
}

pub fn dual(q: &Rational) -> Value {
    serde_json::to_value(DualValue::from(q)).expect("serializable")
}

fn duals(v: &[Rational]) -> Value {
    Value::Array(v.iter().map(dual).collect())
}

/// Roles followed by nature.
pub fn player_names(a: &AnnotatedNet) -> Vec<String> {
    let mut names = a.roles().to_vec();
    names.push(NATURE.to_string());
    names
}

fn per_player(names: &[String], values: &[Rational]) -> Value {
    Value::Object(
        names
            .iter()
            .zip(values)
            .map(|(n, q)| (n.clone(), dual(q)))
            .collect(),
    )
}

/// Full game table: every state, every admissible or inadmissible profile
/// step with its successor distribution and rewards.
pub fn export_game(g: &StochasticGame) -> Result<Value> {
    let net = g.net();
    let players: Vec<&str> = (0..g.num_players()).map(|i| g.player_name(i)).collect();
    let mut states = Vec::new();
    for s in 0..g.num_states() {
        let mut rows = Vec::new();
        for step in g.profiles(s) {
            let out = g.outcome(s, &step)?;
            let next: Vec<Value> = out
                .next
                .iter()
                .map(|(t, p)| json!({ "state": t, "prob": dual(p) }))
                .collect();
            rows.push(json!({
                "step": net.step_names(&step),
                "admissible": g.is_admissible(s, &step)?,
                "next": next,
                "payoff": duals(&g.payoff(s, &step)),
                "reward": duals(&out.reward),
            }));
        }
        states.push(json!({
            "index": s,
            "marking": net.marking_names(&g.states()[s]),
            "profiles": rows,
        }));
    }
    Ok(json!({
        "kind": match g.kind() { GameKind::Base => "base", GameKind::Restart => "restart" },
        "players": players,
        "initial": g.initial(),
        "states": states,
    }))
}

pub fn structural_json(net: &PetriNet, s: &StructuralReport) -> Value {
    let workflow = s.workflow.as_ref().map(|w| {
        let i = w.initial_marking();
        let o = w.final_marking();
        json!({ "source": net.marking_names(&i), "sink": net.marking_names(&o) })
    });
    json!({
        "extended_free_choice": s.extended_free_choice,
        "free_choice_violation": s.free_choice_violation,
        "workflow": workflow,
        "workflow_defect": s.workflow_defect,
        "note": s.note,
    })
}

pub fn soundness_json(net: &PetriNet, r: &SoundnessReport) -> Value {
    let markings = |ms: &[crate::petri::Marking]| -> Vec<Vec<String>> {
        ms.iter().map(|m| net.marking_names(m)).collect()
    };
    let dead: Vec<&str> = r
        .dead_transitions
        .iter()
        .map(|t| net.transition_name(*t))
        .collect();
    json!({
        "sound": r.sound,
        "option_to_complete": r.option_to_complete,
        "proper_completion": r.proper_completion,
        "no_dead_transitions": r.no_dead_transitions,
        "reachable_markings": r.states,
        "stuck_markings": markings(&r.stuck_markings),
        "improper_markings": markings(&r.improper_markings),
        "dead_transitions": dead,
    })
}

fn gain_json(names: &[String], g: &PlayerGain) -> Value {
    match g {
        PlayerGain::Exact(d) => json!({
            "player": names[d.player],
            "gain": dual(&d.gain),
            "profile_value": dual(&d.profile_value),
            "best_response_value": dual(&d.best_response_value),
        }),
        PlayerGain::Estimated(h) => json!({
            "player": names[h.player],
            "heuristic": true,
            "gain": h.gain,
            "profile_estimate": h.profile_estimate,
            "best_deviation_estimate": h.best_deviation_estimate,
            "std_error": h.std_error,
            "best_deviation": h.best_deviation,
        }),
    }
}

pub fn equilibrium_json(names: &[String], c: &EquilibriumCheck) -> Value {
    let mut v = json!({
        "epsilon": dual(&c.epsilon),
        "holds": c.holds,
        "gains": c.gains.iter().map(|g| gain_json(names, g)).collect::<Vec<_>>(),
    });
    if c.heuristic {
        v["heuristic"] = json!(true);
    }
    v
}

pub fn positivity_json(names: &[String], p: &Positivity) -> Value {
    json!({ "positive": p.positive, "payoff": per_player(names, &p.payoff) })
}

/// Verdict of an alignment check. The witness is spelled out as device and
/// profile documents when `game` is given.
pub fn verdict_json(
    names: &[String],
    game: Option<&StochasticGame>,
    v: &AlignmentVerdict,
) -> Result<Value> {
    let witness = match (&v.witness, game) {
        (Some(w), Some(g)) => json!({
            "label": w.label,
            "device": write_device(g, &w.device),
            "profile": write_profile(g, &w.device, &w.profile)?,
        }),
        (Some(w), None) => json!({ "label": w.label }),
        (None, _) => Value::Null,
    };
    let mut out = json!({
        "mode": v.mode.as_str(),
        "aligned": v.aligned,
        "equilibrium": equilibrium_json(names, &v.equilibrium),
        "positivity": positivity_json(names, &v.positivity),
        "witness": witness,
        "failures": v.failures.iter().map(|d| d.to_string()).collect::<Vec<_>>(),
    });
    if v.heuristic {
        out["heuristic"] = json!(true);
    }
    Ok(out)
}

pub fn bridge_json(a: &AnnotatedNet, b: &BridgeReport) -> Result<Value> {
    Ok(json!({
        "sound": b.sound,
        "aligned_full_liveness": b.aligned_full_liveness,
        "agree": b.agree,
        "soundness": soundness_json(a.net(), &b.soundness),
        "verdict": verdict_json(&player_names(a), None, &b.verdict)?,
    }))
}

pub fn search_json(g: &StochasticGame, outcome: &SearchOutcome) -> Result<Value> {
    let names = player_names(g.annotated_net());
    Ok(match outcome {
        SearchOutcome::Found(v) => json!({
            "result": "found",
            "verdict": verdict_json(&names, Some(g), v)?,
        }),
        SearchOutcome::Exhausted { tried, last } => json!({
            "result": "exhausted",
            "tried": tried,
            "last": last.as_ref().map(|v| verdict_json(&names, None, v)).transpose()?,
        }),
        SearchOutcome::Refuted(b) => json!({
            "result": "refuted",
            "bridge": bridge_json(g.annotated_net(), b)?,
        }),
    })
}

pub fn simulation_json(names: &[String], e: &SimulationEstimate) -> Value {
    let players: Map<String, Value> = names
        .iter()
        .enumerate()
        .map(|(i, n)| {
            (
                n.clone(),
                json!({ "mean": e.mean[i], "std_error": e.std_error[i] }),
            )
        })
        .collect();
    json!({
        "heuristic": true,
        "stages": e.stages,
        "trials": e.trials,
        "seed": e.seed,
        "players": players,
    })
}
