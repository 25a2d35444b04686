//! The checked-in `fixtures/` directory matches its generator and reads back
//! into the same objects.

mod common;

use std::path::PathBuf;

use common::restart;
use petrigame::fixtures;
use petrigame::io::{parse_annotations, parse_device, parse_pnml, parse_profile};
use petrigame::petri::structural_checks;
use petrigame::rational::ratio;
use petrigame::statespace::check_soundness;
use petrigame::strategy::{longrun_average_payoff, CorrelationDevice};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(dir().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

#[test]
fn files_are_up_to_date() {
    for (rel, text) in fixtures::files().unwrap() {
        assert_eq!(
            read(&rel),
            text,
            "{rel} is stale; run `cargo run -p petrigame --example export_fixtures`"
        );
    }
}

#[test]
fn annotated_fixtures_read_back() {
    for (name, a) in [
        ("n1", fixtures::n1()),
        ("alice_bob", fixtures::alice_bob()),
        ("order_to_cash", fixtures::order_to_cash()),
    ] {
        let (net, m0) = parse_pnml(&read(&format!("{name}.pnml"))).unwrap();
        let back = parse_annotations(&read(&format!("{name}.ann.json")), net, m0).unwrap();
        assert_eq!(back, a, "{name}");
    }
}

#[test]
fn profile_documents_give_the_expected_payoffs() {
    let g = restart(&fixtures::alice_bob());
    let d = parse_device(&read("alice_bob.device.json"), &g).unwrap();
    let sigma = parse_profile(&read("alice_bob.obedient.json"), &g, &d).unwrap();
    let v = longrun_average_payoff(&g, &d, &sigma).unwrap();
    assert_eq!(v[..2], [ratio(14, 5), ratio(12, 5)]);

    let g = restart(&fixtures::n1());
    let d = CorrelationDevice::trivial(g.num_players());
    let sigma = parse_profile(&read("n1.c_idles.json"), &g, &d).unwrap();
    let v = longrun_average_payoff(&g, &d, &sigma).unwrap();
    assert_eq!(v[..3], [ratio(1, 3), ratio(1, 3), ratio(2, 3)]);
}

#[test]
fn corpus_files_match_their_manifest() {
    let manifest: serde_json::Value = serde_json::from_str(&read("corpus/manifest.json")).unwrap();
    let entries = manifest.as_array().unwrap();
    assert!(entries.len() >= 20);
    for e in entries {
        let file = e["file"].as_str().unwrap();
        let (net, m0) = parse_pnml(&read(&format!("corpus/{file}"))).unwrap();
        let a = fixtures::single_role_unit(net, m0);
        let shape = structural_checks(&a).workflow.unwrap();
        let sound = check_soundness(&a, &shape, 1000).unwrap().sound;
        assert_eq!(sound, e["sound"].as_bool().unwrap(), "{file}");
    }
}
