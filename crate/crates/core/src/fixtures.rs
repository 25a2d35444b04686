//! Hand-encoded nets used throughout the tests, the guide and the CLI
//! fixture files.
//!
//! Utilities of the Alice/Bob and order-to-cash nets are fixture choices.

use crate::petri::{AnnotatedNet, PetriNet};
use crate::rational::{int, Rational};

/// Role name used for single-role, unit-utility workflow annotations.
pub const SINGLE_ROLE: &str = "Σ";

fn running_example_net() -> PetriNet {
    PetriNet::builder()
        .transition("t0", ["p0"], ["p1"])
        .transition("t", ["p1"], ["p2"])
        .transition("t'", ["p2"], ["p1"])
        .transition("t1", ["p2"], ["p3"])
        .build()
        .expect("valid net")
}

/// The running example: `p0 -t0-> p1 -t-> p2`, `p2 -t'-> p1`, `p2 -t1-> p3`
/// with roles `a` (t0: -1, t1: +2), `b` (t: +1) and `c` (t': +1, and +2 on
/// t1 which is owned by `a`).
pub fn n1() -> AnnotatedNet {
    let net = running_example_net();
    let m0 = net.marking(&["p0"]).expect("p0");
    AnnotatedNet::builder(net, m0)
        .roles(["a", "b", "c"])
        .assign("t0", "a")
        .assign("t", "b")
        .assign("t'", "c")
        .assign("t1", "a")
        .utility("a", "t0", int(-1))
        .utility("b", "t", int(1))
        .utility("c", "t'", int(1))
        .utility("a", "t1", int(2))
        .utility("c", "t1", int(2))
        .build()
        .expect("valid annotations")
}

/// Every transition owned by a single role with utility 1.
pub fn single_role_unit(net: PetriNet, initial: crate::petri::Marking) -> AnnotatedNet {
    let names: Vec<String> = net
        .transitions()
        .map(|t| net.transition_name(t).to_string())
        .collect();
    let mut b = AnnotatedNet::builder(net, initial).role(SINGLE_ROLE);
    for t in names {
        b = b
            .assign(t.clone(), SINGLE_ROLE)
            .utility(SINGLE_ROLE, t, int(1));
    }
    b.build().expect("single role annotation")
}

/// The running example read as a workflow net (`i = p0`, `o = p3`) with one
/// role and unit utilities.
pub fn w1() -> AnnotatedNet {
    let net = running_example_net();
    let m0 = net.marking(&["p0"]).expect("p0");
    single_role_unit(net, m0)
}

pub fn w2_net() -> PetriNet {
    PetriNet::builder()
        .transition("t_a", ["i"], ["o"])
        .transition("t_b", ["q"], ["o"])
        .build()
        .expect("valid net")
}

/// `i -t_a-> o` next to `q -t_b-> o` where `q` is never marked.
pub fn w2() -> AnnotatedNet {
    let net = w2_net();
    let m0 = net.marking(&["i"]).expect("i");
    single_role_unit(net, m0)
}

/// One working day of Alice and Bob. Each picks one activity per day;
/// the day ends when both have acted.
pub fn alice_bob() -> AnnotatedNet {
    let net = PetriNet::builder()
        .transition("work_a", ["a0"], ["a1"])
        .transition("fish", ["a0"], ["a1"])
        .transition("work_b", ["b0"], ["b1"])
        .transition("surf", ["b0"], ["b1"])
        .build()
        .expect("valid net");
    let m0 = net.marking(&["a0", "b0"]).expect("start");
    AnnotatedNet::builder(net, m0)
        .roles(["alice", "bob"])
        .assign("work_a", "alice")
        .assign("fish", "alice")
        .assign("work_b", "bob")
        .assign("surf", "bob")
        .utility("alice", "work_a", int(4))
        .utility("alice", "fish", int(2))
        .utility("bob", "work_b", int(2))
        .utility("bob", "surf", int(3))
        .build()
        .expect("valid annotations")
}

/// Probability that the mediator sends Bob to work.
pub fn alice_bob_work_b() -> Rational {
    crate::rational::ratio(3, 5)
}

/// A simplified order-to-cash process with customer, supplier and shipper;
/// nature decides stock availability and damage in transit.
pub fn order_to_cash() -> AnnotatedNet {
    let net = PetriNet::builder()
        .transition("order", ["i"], ["ordered"])
        .transition("in_stock", ["ordered"], ["available"])
        .transition("out_of_stock", ["ordered"], ["unavailable"])
        .transition("cancel", ["unavailable"], ["o"])
        .transition("request_shipment", ["available"], ["ready"])
        .transition("pick_up", ["ready"], ["in_transit"])
        .transition("deliver", ["in_transit"], ["delivered"])
        .transition("damage", ["in_transit"], ["damaged"])
        .transition("refund", ["damaged"], ["o"])
        .transition("pay", ["delivered"], ["o"])
        .build()
        .expect("valid net");
    let m0 = net.marking(&["i"]).expect("i");
    AnnotatedNet::builder(net, m0)
        .roles(["customer", "shipper", "supplier"])
        .assign("order", "customer")
        .assign("pay", "customer")
        .assign("cancel", "supplier")
        .assign("request_shipment", "supplier")
        .assign("refund", "supplier")
        .assign("pick_up", "shipper")
        .assign("deliver", "shipper")
        .utility("customer", "deliver", int(12))
        .utility("customer", "pay", int(-10))
        .utility("supplier", "pay", int(10))
        .utility("supplier", "request_shipment", int(-6))
        .utility("shipper", "request_shipment", int(2))
        .utility("shipper", "pick_up", int(-1))
        .utility("supplier", "refund", int(-2))
        .utility("customer", "refund", int(2))
        .build()
        .expect("valid annotations")
}

/// Mediator for [`alice_bob`]: both receive `WORK_B` with probability
/// [`alice_bob_work_b`], otherwise both receive `WORK_A`.
pub const ALICE_BOB_DEVICE: &str = r#"{
  "signals": { "alice": ["WORK_A", "WORK_B"], "bob": ["WORK_A", "WORK_B"] },
  "states": ["d0"],
  "start": "d0",
  "emissions": {
    "d0": [
      { "signals": { "alice": "WORK_B", "bob": "WORK_B" }, "prob": "3/5", "next": "d0" },
      { "signals": { "alice": "WORK_A", "bob": "WORK_A" }, "prob": "2/5", "next": "d0" }
    ]
  }
}
"#;

/// Obedient play under [`ALICE_BOB_DEVICE`]: on `WORK_A` Alice works and
/// Bob surfs, on `WORK_B` Alice fishes and Bob works.
pub const ALICE_BOB_OBEDIENT: &str = r#"{
  "players": {
    "alice": {
      "default": "idle",
      "rules": [
        { "state": ["a0", "b0"], "signal": "WORK_A", "choose": { "work_a": "1" } },
        { "state": ["a0", "b0"], "signal": "WORK_B", "choose": { "fish": "1" } },
        { "state": ["a0", "b1"], "signal": "WORK_A", "choose": { "work_a": "1" } },
        { "state": ["a0", "b1"], "signal": "WORK_B", "choose": { "fish": "1" } }
      ]
    },
    "bob": {
      "default": "idle",
      "rules": [
        { "state": ["a0", "b0"], "signal": "WORK_A", "choose": { "surf": "1" } },
        { "state": ["a0", "b0"], "signal": "WORK_B", "choose": { "work_b": "1" } },
        { "state": ["a1", "b0"], "signal": "WORK_A", "choose": { "surf": "1" } },
        { "state": ["a1", "b0"], "signal": "WORK_B", "choose": { "work_b": "1" } }
      ]
    }
  }
}
"#;

/// Role `c` never takes `t'` in [`n1`]; everyone else acts.
pub const N1_C_IDLES: &str = r#"{ "players": { "c": { "default": "idle" } } }
"#;

/// Contents of the repository's `fixtures/` directory as `(relative path,
/// text)` pairs, including the default corpus under `corpus/`.
pub fn files() -> crate::Result<Vec<(String, String)>> {
    use crate::game::{build_base_game, build_restart_game};
    use crate::io::{export_game, write_annotations, write_pnml};

    let mut out = Vec::new();
    let json = |v: &serde_json::Value| serde_json::to_string_pretty(v).expect("json") + "\n";
    let mut net_files = |name: &str, a: &AnnotatedNet, annotations: bool| {
        out.push((
            format!("{name}.pnml"),
            write_pnml(a.net(), a.initial(), name),
        ));
        if annotations {
            out.push((format!("{name}.ann.json"), json(&write_annotations(a))));
        }
    };
    net_files("n1", &n1(), true);
    net_files("w1", &w1(), false);
    net_files("w2", &w2(), false);
    net_files("alice_bob", &alice_bob(), true);
    net_files("order_to_cash", &order_to_cash(), true);

    let n1 = n1();
    let ss = crate::statespace::explore(&n1, 1000)?;
    let restart = build_restart_game(&build_base_game(&n1, &ss)?, n1.initial())?;
    out.push(("restart_n1.game.json".into(), json(&export_game(&restart)?)));
    out.push(("n1.c_idles.json".into(), N1_C_IDLES.into()));
    out.push(("alice_bob.device.json".into(), ALICE_BOB_DEVICE.into()));
    out.push(("alice_bob.obedient.json".into(), ALICE_BOB_OBEDIENT.into()));

    let mut manifest = Vec::new();
    for c in crate::corpus::default_corpus() {
        let path = format!("corpus/{}.pnml", c.name);
        out.push((
            path.clone(),
            write_pnml(c.annotated.net(), c.annotated.initial(), &c.name),
        ));
        manifest.push(serde_json::json!({
            "file": format!("{}.pnml", c.name),
            "sound": c.defect.is_none(),
            "defect": c.defect.map(|d| d.as_str()),
        }));
    }
    out.push((
        "corpus/manifest.json".into(),
        json(&serde_json::Value::Array(manifest)),
    ));
    Ok(out)
}
