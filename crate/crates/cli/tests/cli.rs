//! End-to-end runs of the command line against the fixture files.

use std::path::PathBuf;
use std::process::Command;

use petrigame_cli::{run_cli, CliOutput, ENV_BOUND, ENV_EFFORT};
use serde_json::Value;

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> CliOutput {
    let mut argv = vec!["petrigame".to_string()];
    for a in args {
        argv.push(if a.ends_with(".pnml") || a.ends_with(".json") {
            fixture(a)
        } else {
            a.to_string()
        });
    }
    run_cli(argv)
}

fn json(out: &CliOutput) -> Value {
    serde_json::from_str(&out.stdout).unwrap_or_else(|e| panic!("{e}: {out:?}"))
}

#[test]
fn soundness_verdicts() {
    let w1 = run(&["check-soundness", "w1.pnml"]);
    assert_eq!(w1.code, 0, "{w1:?}");
    assert_eq!(json(&w1)["soundness"]["sound"], true);

    let w2 = run(&["check-soundness", "w2.pnml"]);
    assert_eq!(w2.code, 1);
    let v = json(&w2);
    assert_eq!(
        v["soundness"]["dead_transitions"],
        serde_json::json!(["t_b"])
    );
    assert_eq!(v["tool"]["name"], "petrigame");
    assert_eq!(v["inputs"]["w2.pnml"]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn game_export() {
    let out = run(&["build-game", "n1.pnml", "n1.ann.json", "--restart"]);
    assert_eq!(out.code, 0);
    let v = json(&out);
    assert_eq!(v["game"]["kind"], "restart");
    assert_eq!(v["game"]["states"].as_array().unwrap().len(), 3);
    let base = json(&run(&["build-game", "n1.pnml", "n1.ann.json"]));
    assert_eq!(base["game"]["kind"], "base");
    assert_eq!(base["game"]["states"].as_array().unwrap().len(), 4);
}

#[test]
fn analyze_searches_and_checks_witnesses() {
    let out = run(&[
        "analyze",
        "n1.pnml",
        "n1.ann.json",
        "--mode",
        "proper-completion",
    ]);
    assert_eq!(out.code, 0, "{out:?}");
    let v = json(&out);
    assert_eq!(v["search"]["result"], "found");
    let witness = &v["search"]["verdict"]["witness"]["profile"]["players"]["c"];
    assert_eq!(witness["default"], "idle");

    let out = run(&[
        "analyze",
        "n1.pnml",
        "n1.ann.json",
        "--mode",
        "full-liveness",
        "--profile",
        "n1.c_idles.json",
    ]);
    assert_eq!(out.code, 1);
    let failures = json(&out)["verdict"]["failures"].to_string();
    assert!(failures.contains("t'"), "{failures}");

    let out = run(&[
        "analyze",
        "n1.pnml",
        "n1.ann.json",
        "--profile",
        "n1.c_idles.json",
        "--epsilon",
        "0",
    ]);
    assert_eq!(out.code, 0);
    let all_act = run(&[
        "analyze",
        "n1.pnml",
        "n1.ann.json",
        "--profile",
        "n1.c_idles.json",
        "--device",
        "n1.c_idles.json",
    ]);
    assert_eq!(all_act.code, 3, "a profile is not a device: {all_act:?}");
}

#[test]
fn epsilon_decides_all_act() {
    // the acting profile is the default when only a device is given
    let tmp = tempfile::tempdir().unwrap();
    let dev = tmp.path().join("trivial.device.json");
    std::fs::write(&dev, r#"{"emissions": {"d0": [{"prob": "1"}]}}"#).unwrap();
    let dev = dev.display().to_string();
    let strict = run(&["analyze", "n1.pnml", "n1.ann.json", "--device", &dev]);
    assert_eq!(strict.code, 1);
    let loose = run(&[
        "analyze",
        "n1.pnml",
        "n1.ann.json",
        "--device",
        &dev,
        "--epsilon",
        "1/15",
    ]);
    assert_eq!(loose.code, 0, "{loose:?}");
}

#[test]
fn shared_signals_are_analyzed_exactly() {
    // both players see the same signal, so deviations are solved exactly;
    // Alice prefers working to fishing whatever she is told
    let out = run(&[
        "analyze",
        "alice_bob.pnml",
        "alice_bob.ann.json",
        "--device",
        "alice_bob.device.json",
        "--profile",
        "alice_bob.obedient.json",
    ]);
    assert_eq!(out.code, 1);
    let v = json(&out);
    assert_eq!(
        v["verdict"]["equilibrium"]["gains"][0]["gain"]["exact"],
        "6/5"
    );
    assert_eq!(
        v["verdict"]["positivity"]["payoff"]["alice"]["exact"],
        "14/5"
    );
}

#[test]
fn private_signals_make_the_verdict_heuristic() {
    let tmp = tempfile::tempdir().unwrap();
    let dev = tmp.path().join("private.device.json");
    let mut emissions = Vec::new();
    for a in ["X", "Y"] {
        for b in ["X", "Y"] {
            emissions.push(serde_json::json!({"signals": {"alice": a, "bob": b}, "prob": "1/4"}));
        }
    }
    let doc = serde_json::json!({
        "signals": {"alice": ["X", "Y"], "bob": ["X", "Y"]},
        "emissions": {"d0": emissions},
    });
    std::fs::write(&dev, doc.to_string()).unwrap();
    let out = run(&[
        "analyze",
        "alice_bob.pnml",
        "alice_bob.ann.json",
        "--device",
        &dev.display().to_string(),
        "--seed",
        "4",
    ]);
    let v = json(&out);
    assert_eq!(v["verdict"]["heuristic"], true, "{v}");
    assert_eq!(v["seed"], 4);
    assert_eq!(out.code, 2);
}

#[test]
fn simulation_report() {
    let out = run(&[
        "simulate",
        "n1.pnml",
        "n1.ann.json",
        "--stages",
        "200",
        "--trials",
        "50",
        "--seed",
        "9",
        "--profile",
        "n1.c_idles.json",
    ]);
    assert_eq!(out.code, 0);
    let v = json(&out);
    assert_eq!(v["seed"], 9);
    assert_eq!(v["simulation"]["heuristic"], true);
    let c = v["simulation"]["players"]["c"]["mean"].as_f64().unwrap();
    assert!((c - 2.0 / 3.0).abs() < 0.01, "{c}");
    assert_eq!(
        run(&[
            "simulate",
            "n1.pnml",
            "n1.ann.json",
            "--stages",
            "200",
            "--trials",
            "50",
            "--seed",
            "9",
            "--profile",
            "n1.c_idles.json"
        ])
        .stdout,
        out.stdout
    );
}

#[test]
fn bridge_verdicts() {
    let w1 = run(&["bridge", "w1.pnml"]);
    assert_eq!(w1.code, 0, "{w1:?}");
    assert_eq!(json(&w1)["bridge"]["agree"], true);
    assert_eq!(run(&["bridge", "w2.pnml"]).code, 1);
    let n1 = run(&["bridge", "n1.pnml", "n1.ann.json"]);
    assert_eq!(n1.code, 2);
    assert_eq!(json(&n1)["bridge"]["applicable"], false);
}

#[test]
fn text_format() {
    let out = run(&["check-soundness", "w2.pnml", "--format", "text"]);
    assert!(
        out.stdout.contains("soundness.sound: false\n"),
        "{}",
        out.stdout
    );
}

#[test]
fn input_and_usage_errors() {
    assert_eq!(run(&["check-soundness", "missing.pnml"]).code, 3);
    assert_eq!(run(&["check-soundness", "n1.ann.json"]).code, 3);
    assert_eq!(
        run(&["analyze", "n1.pnml", "n1.ann.json", "--mode", "weird"]).code,
        64
    );
    assert_eq!(
        run(&["analyze", "n1.pnml", "n1.ann.json", "--epsilon", "x"]).code,
        64
    );
    assert_eq!(run(&["frobnicate"]).code, 64);
    assert_eq!(run(&[]).code, 64);
    assert_eq!(run(&["--help"]).code, 0);
    // two sink places: not a workflow net
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("two-sinks.pnml");
    std::fs::write(
        &bad,
        r#"<pnml><net id="n"><place id="i"><initialMarking><text>1</text></initialMarking></place>
           <place id="a"/><place id="b"/><transition id="t"/>
           <arc id="1" source="i" target="t"/><arc id="2" source="t" target="a"/>
           <arc id="3" source="t" target="b"/></net></pnml>"#,
    )
    .unwrap();
    assert_eq!(
        run(&["check-soundness", &bad.display().to_string()]).code,
        3
    );
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_petrigame"))
}

#[test]
fn environment_overrides_bound_and_effort() {
    let out = binary()
        .args(["check-soundness", &fixture("w1.pnml")])
        .env(ENV_BOUND, "2")
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(2),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let flag = binary()
        .args(["check-soundness", &fixture("w1.pnml"), "--bound", "100"])
        .env(ENV_BOUND, "2")
        .output()
        .unwrap();
    assert_eq!(flag.status.code(), Some(0));

    let out = binary()
        .args(["analyze", &fixture("n1.pnml"), &fixture("n1.ann.json")])
        .env(ENV_EFFORT, "1")
        .output()
        .unwrap();
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["effort"], 1);
    assert_eq!(v["search"]["tried"].as_array().map(Vec::len), Some(1));
    assert_eq!(out.status.code(), Some(2));

    let bad = binary()
        .args(["analyze", &fixture("n1.pnml"), &fixture("n1.ann.json")])
        .env(ENV_EFFORT, "lots")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(64));
}
