//! Deterministic generator of small safe, extended free-choice workflow nets
//! built from structured blocks, with optional defects that make them
//! unsound.
//!
//! Structured blocks (sequence, exclusive choice, parallel split/join and
//! loops with dedicated entry and exit) always yield sound nets. Defects
//! are spliced in at a chosen place:
//!
//! * [`DefectKind::DeadTransition`]: a transition fed by an extra source
//!   place that is never marked;
//! * [`DefectKind::Deadlock`]: an exclusive choice whose branches meet in a
//!   parallel join;
//! * [`DefectKind::ImproperCompletion`]: a parallel split where one branch
//!   reaches the end while the other keeps spinning;
//! * [`DefectKind::Livelock`]: a choice leading into a cycle without exit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fixtures::single_role_unit;
use crate::petri::{AnnotatedNet, PetriNet};
use crate::rational;
use crate::statespace;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Block {
    Task,
    Seq(Vec<Block>),
    Xor(Vec<Block>),
    And(Vec<Block>),
    /// Body, then either leave or take the redo branch back to the body.
    Loop(Box<Block>, Box<Block>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DefectKind {
    DeadTransition,
    Deadlock,
    ImproperCompletion,
    Livelock,
}

impl DefectKind {
    pub const ALL: [DefectKind; 4] = [
        DefectKind::DeadTransition,
        DefectKind::Deadlock,
        DefectKind::ImproperCompletion,
        DefectKind::Livelock,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DefectKind::DeadTransition => "dead-transition",
            DefectKind::Deadlock => "deadlock",
            DefectKind::ImproperCompletion => "improper-completion",
            DefectKind::Livelock => "livelock",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CorpusNet {
    pub name: String,
    pub shape: Block,
    pub defect: Option<DefectKind>,
    /// Single role owning every transition with utility 1.
    pub annotated: AnnotatedNet,
}

fn refs(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

struct Emitter {
    arcs: Vec<(String, Vec<String>, Vec<String>)>,
    places: usize,
}

impl Emitter {
    fn new() -> Self {
        Emitter {
            arcs: Vec::new(),
            places: 0,
        }
    }

    fn place(&mut self) -> String {
        self.places += 1;
        format!("p{}", self.places)
    }

    fn transition(&mut self, pre: &[&str], post: &[&str]) {
        let name = format!("t{}", self.arcs.len() + 1);
        let own = |v: &[&str]| v.iter().map(|s| s.to_string()).collect();
        self.arcs.push((name, own(pre), own(post)));
    }

    fn block(&mut self, b: &Block, from: &str, to: &str) {
        match b {
            Block::Task => self.transition(&[from], &[to]),
            Block::Seq(parts) => {
                let mut cur = from.to_string();
                for (k, part) in parts.iter().enumerate() {
                    let next = if k + 1 == parts.len() {
                        to.to_string()
                    } else {
                        self.place()
                    };
                    self.block(part, &cur, &next);
                    cur = next;
                }
            }
            Block::Xor(branches) => {
                for br in branches {
                    // a private entry keeps every branch's first transition
                    // in a singleton conflict with the others' entries
                    let entry = self.place();
                    self.transition(&[from], &[&entry]);
                    self.block(br, &entry, to);
                }
            }
            Block::And(branches) => {
                let starts: Vec<String> = branches.iter().map(|_| self.place()).collect();
                let ends: Vec<String> = branches.iter().map(|_| self.place()).collect();
                self.transition(&[from], &refs(&starts));
                for ((br, s), e) in branches.iter().zip(&starts).zip(&ends) {
                    self.block(br, s, e);
                }
                self.transition(&refs(&ends), &[to]);
            }
            Block::Loop(body, redo) => {
                let (a, b) = (self.place(), self.place());
                self.transition(&[from], &[&a]);
                self.block(body, &a, &b);
                self.block(redo, &b, &a);
                self.transition(&[&b], &[to]);
            }
        }
    }

    fn defect(&mut self, kind: DefectKind, from: &str, to: &str) {
        match kind {
            DefectKind::DeadTransition => {
                self.transition(&[from], &[to]);
                let q = self.place();
                self.transition(&[&q], &[to]);
            }
            DefectKind::Deadlock => {
                self.transition(&[from], &[to]);
                let (a, b) = (self.place(), self.place());
                self.transition(&[from], &[&a]);
                self.transition(&[from], &[&b]);
                self.transition(&[&a, &b], &[to]);
            }
            DefectKind::ImproperCompletion => {
                let (x, y, z) = (self.place(), self.place(), self.place());
                self.transition(&[from], &[&x, &y]);
                self.transition(&[&x], &[to]);
                self.transition(&[&y], &[&z]);
                self.transition(&[&z], &[&y]);
            }
            DefectKind::Livelock => {
                self.transition(&[from], &[to]);
                let (a, b) = (self.place(), self.place());
                self.transition(&[from], &[&a]);
                self.transition(&[&a], &[&b]);
                self.transition(&[&b], &[&a]);
            }
        }
    }

    fn finish(self) -> PetriNet {
        self.arcs
            .into_iter()
            .fold(PetriNet::builder(), |b, (name, pre, post)| {
                b.transition(name, pre, post)
            })
            .build()
            .expect("generated nets are well formed")
    }
}

/// Workflow net `i → block → o`, with a defect between the block and `o`.
pub fn workflow_net(shape: &Block, defect: Option<DefectKind>) -> AnnotatedNet {
    let mut e = Emitter::new();
    match defect {
        None => e.block(shape, "i", "o"),
        Some(kind) => {
            let mid = e.place();
            e.block(shape, "i", &mid);
            e.defect(kind, &mid, "o");
        }
    }
    let net = e.finish();
    let initial = net.marking(&["i"]).expect("i exists");
    single_role_unit(net, initial)
}

fn random_block(rng: &mut ChaCha8Rng, depth: usize) -> Block {
    let pick = if depth == 0 {
        0
    } else {
        rng.random_range(0..5)
    };
    let width = |rng: &mut ChaCha8Rng| rng.random_range(2..4);
    match pick {
        0 => Block::Task,
        1 => Block::Seq(
            (0..width(rng))
                .map(|_| random_block(rng, depth - 1))
                .collect(),
        ),
        2 => Block::Xor(
            (0..width(rng))
                .map(|_| random_block(rng, depth - 1))
                .collect(),
        ),
        3 => Block::And((0..2).map(|_| random_block(rng, depth - 1)).collect()),
        _ => Block::Loop(
            Box::new(random_block(rng, depth - 1)),
            Box::new(Block::Task),
        ),
    }
}

/// Maximum reachable markings of a corpus member.
pub const MAX_STATES: usize = 64;

/// `sound` structured nets and `unsound` defective ones (defect kinds in
/// rotation), all with at most [`MAX_STATES`] reachable markings.
pub fn mixed_corpus(seed: u64, sound: usize, unsound: usize) -> Vec<CorpusNet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let (mut n_sound, mut n_unsound) = (0, 0);
    while n_sound < sound || n_unsound < unsound {
        let shape = random_block(&mut rng, 3);
        let defect = (n_sound >= sound).then(|| DefectKind::ALL[n_unsound % DefectKind::ALL.len()]);
        let annotated = workflow_net(&shape, defect);
        if statespace::explore(&annotated, MAX_STATES).is_err() {
            continue;
        }
        let name = match defect {
            None => format!("sound-{n_sound:02}"),
            Some(k) => format!("{}-{n_unsound:02}", k.as_str()),
        };
        if defect.is_some() {
            n_unsound += 1;
        } else {
            n_sound += 1;
        }
        out.push(CorpusNet {
            name,
            shape,
            defect,
            annotated,
        });
    }
    out
}

/// The default corpus: 16 sound and 8 unsound members.
pub fn default_corpus() -> Vec<CorpusNet> {
    mixed_corpus(2024, 16, 8)
}

/// The same net with transitions dealt round-robin to `roles` roles and
/// nature, every role getting utility 1 on the transitions it owns.
pub fn multi_role(a: &AnnotatedNet, roles: usize) -> AnnotatedNet {
    let names: Vec<String> = (0..roles).map(|r| format!("r{r}")).collect();
    let net = a.net();
    let mut builder = AnnotatedNet::builder(net.clone(), a.initial().clone()).roles(names.clone());
    for (k, t) in net.transitions().enumerate() {
        let slot = k % (roles + 1);
        if slot < roles {
            let tn = net.transition_name(t).to_string();
            builder = builder.assign(tn.clone(), names[slot].clone()).utility(
                names[slot].clone(),
                tn,
                rational::one(),
            );
        }
    }
    builder.build().expect("valid reassignment")
}
