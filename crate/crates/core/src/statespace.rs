//! Reachability graphs over safe markings and the classical soundness check
//! for elementary workflow nets.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::petri::{self, AnnotatedNet, Marking, PetriNet, Step, TransitionId, WorkflowShape};

pub const DEFAULT_STATE_BOUND: usize = 1_000_000;

/// Reachable markings in breadth-first order (the initial marking has index
/// 0) with edges labelled by single transitions.
#[derive(Clone, Debug)]
pub struct StateSpace {
    states: Vec<Marking>,
    index: HashMap<Marking, usize>,
    edges: Vec<Vec<(TransitionId, usize)>>,
    final_states: Vec<usize>,
}

impl StateSpace {
    pub fn states(&self) -> &[Marking] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn index_of(&self, m: &Marking) -> Option<usize> {
        self.index.get(m).copied()
    }

    /// Outgoing `(transition, target)` edges of a state.
    pub fn edges(&self, state: usize) -> &[(TransitionId, usize)] {
        &self.edges[state]
    }

    pub fn final_states(&self) -> &[usize] {
        &self.final_states
    }

    /// States from which `target` is reachable, via one backward sweep.
    pub fn can_reach(&self, target: usize) -> Vec<bool> {
        let mut reverse = vec![Vec::new(); self.states.len()];
        for (src, out) in self.edges.iter().enumerate() {
            for &(_, dst) in out {
                reverse[dst].push(src);
            }
        }
        let mut seen = vec![false; self.states.len()];
        seen[target] = true;
        let mut queue = VecDeque::from([target]);
        while let Some(s) = queue.pop_front() {
            for &prev in &reverse[s] {
                if !seen[prev] {
                    seen[prev] = true;
                    queue.push_back(prev);
                }
            }
        }
        seen
    }
}

pub fn explore(a: &AnnotatedNet, bound: usize) -> Result<StateSpace> {
    explore_from(a.net(), a.initial(), bound)
}

/// Breadth-first closure of `initial` under single-transition firing.
pub fn explore_from(net: &PetriNet, initial: &Marking, bound: usize) -> Result<StateSpace> {
    let bound = bound.max(1);
    let mut states = vec![initial.clone()];
    let mut index = HashMap::from([(initial.clone(), 0)]);
    let mut edges: Vec<Vec<(TransitionId, usize)>> = vec![Vec::new()];
    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let marking = states[s].clone();
        for t in petri::enabled(net, &marking) {
            let next = petri::fire_step(net, &marking, &Step::singleton(t))?;
            let target = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() == bound {
                        return Err(Error::StateSpaceExceeded(bound));
                    }
                    let j = states.len();
                    index.insert(next.clone(), j);
                    states.push(next);
                    edges.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            edges[s].push((t, target));
        }
    }
    let final_states = (0..states.len())
        .filter(|&s| net.is_final(&states[s]))
        .collect();
    Ok(StateSpace {
        states,
        index,
        edges,
        final_states,
    })
}

/// `Ok(false)` when some reachable marking would carry two tokens on a place.
pub fn is_safe(a: &AnnotatedNet, bound: usize) -> Result<bool> {
    match explore(a, bound) {
        Ok(_) => Ok(true),
        Err(Error::SafetyViolation { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SoundnessReport {
    pub option_to_complete: bool,
    pub proper_completion: bool,
    pub no_dead_transitions: bool,
    pub sound: bool,
    pub states: usize,
    /// Reachable markings from which `[o]` cannot be reached.
    pub stuck_markings: Vec<Marking>,
    /// Reachable markings that mark `o` together with other places.
    pub improper_markings: Vec<Marking>,
    pub dead_transitions: Vec<TransitionId>,
}

/// Option to complete, proper completion and absence of dead transitions,
/// evaluated over every marking reachable from `[i]`.
pub fn check_soundness(
    a: &AnnotatedNet,
    shape: &WorkflowShape,
    bound: usize,
) -> Result<SoundnessReport> {
    let net = a.net();
    shape.validate(net)?;
    let ss = explore_from(net, &shape.initial_marking(), bound)?;
    let done = shape.final_marking();
    let reaches_done = match ss.index_of(&done) {
        Some(target) => ss.can_reach(target),
        None => vec![false; ss.len()],
    };
    let stuck_markings: Vec<Marking> = ss
        .states()
        .iter()
        .zip(&reaches_done)
        .filter(|(_, &ok)| !ok)
        .map(|(m, _)| m.clone())
        .collect();
    let improper_markings: Vec<Marking> = ss
        .states()
        .iter()
        .filter(|m| m.contains(shape.final_place) && **m != done)
        .cloned()
        .collect();
    let mut fired = vec![false; net.num_transitions()];
    for s in 0..ss.len() {
        for &(t, _) in ss.edges(s) {
            fired[t.0] = true;
        }
    }
    let dead_transitions: Vec<TransitionId> = net.transitions().filter(|t| !fired[t.0]).collect();
    let option_to_complete = stuck_markings.is_empty();
    let proper_completion = improper_markings.is_empty();
    let no_dead_transitions = dead_transitions.is_empty();
    Ok(SoundnessReport {
        option_to_complete,
        proper_completion,
        no_dead_transitions,
        sound: option_to_complete && proper_completion && no_dead_transitions,
        states: ss.len(),
        stuck_markings,
        improper_markings,
        dead_transitions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn two_producers() -> AnnotatedNet {
        let net = PetriNet::builder()
            .transition("split", ["i"], ["a", "b"])
            .transition("u", ["a"], ["c"])
            .transition("v", ["b"], ["c"])
            .transition("w", ["c"], ["o"])
            .build()
            .unwrap();
        let m = net.marking(&["i"]).unwrap();
        AnnotatedNet::unannotated(net, m)
    }

    #[test]
    fn explores_running_example_breadth_first() {
        let n1 = fixtures::n1();
        let ss = explore(&n1, DEFAULT_STATE_BOUND).unwrap();
        let labels: Vec<String> = ss
            .states()
            .iter()
            .map(|m| n1.net().marking_label(m))
            .collect();
        assert_eq!(labels, vec!["{p0}", "{p1}", "{p2}", "{p3}"]);
        assert_eq!(ss.final_states(), &[3]);
        // determinism
        let again = explore(&n1, DEFAULT_STATE_BOUND).unwrap();
        assert_eq!(ss.states(), again.states());
    }

    #[test]
    fn single_transition_net() {
        let net = PetriNet::builder()
            .transition("t", ["i"], ["o"])
            .build()
            .unwrap();
        let m = net.marking(&["i"]).unwrap();
        let a = AnnotatedNet::unannotated(net, m);
        assert_eq!(explore(&a, 10).unwrap().len(), 2);
        let shape = WorkflowShape::detect(a.net(), a.initial()).unwrap();
        assert!(check_soundness(&a, &shape, 10).unwrap().sound);
    }

    #[test]
    fn two_producers_are_unsafe() {
        let a = two_producers();
        assert!(matches!(
            explore(&a, 100),
            Err(Error::SafetyViolation { .. })
        ));
        assert!(!is_safe(&a, 100).unwrap());
        assert!(is_safe(&fixtures::n1(), 100).unwrap());
    }

    #[test]
    fn net_with_nothing_enabled_is_safe() {
        let net = PetriNet::builder()
            .transition("t", ["a"], ["b"])
            .build()
            .unwrap();
        let a = AnnotatedNet::unannotated(net, Marking::empty());
        assert!(is_safe(&a, 1).unwrap());
        assert_eq!(explore(&a, 1).unwrap().len(), 1);
    }

    #[test]
    fn bound_is_enforced() {
        assert_eq!(
            explore(&fixtures::n1(), 3).unwrap_err(),
            Error::StateSpaceExceeded(3)
        );
    }

    #[test]
    fn soundness_of_w1_and_w2() {
        let w1 = fixtures::w1();
        let shape = WorkflowShape::detect(w1.net(), w1.initial()).unwrap();
        let r = check_soundness(&w1, &shape, 100).unwrap();
        assert!(r.sound);
        assert_eq!(r.states, 4);

        let w2 = fixtures::w2();
        let shape = WorkflowShape::detect(w2.net(), w2.initial()).unwrap();
        let r = check_soundness(&w2, &shape, 100).unwrap();
        assert!(!r.no_dead_transitions && !r.sound);
        assert!(r.option_to_complete && r.proper_completion);
        let dead: Vec<&str> = r
            .dead_transitions
            .iter()
            .map(|t| w2.net().transition_name(*t))
            .collect();
        assert_eq!(dead, vec!["t_b"]);
    }

    #[test]
    fn deadlock_and_improper_completion_witnesses() {
        // xor split followed by an and join: deadlock
        let net = PetriNet::builder()
            .transition("l", ["i"], ["a"])
            .transition("r", ["i"], ["b"])
            .transition("join", ["a", "b"], ["o"])
            .build()
            .unwrap();
        let m = net.marking(&["i"]).unwrap();
        let a = AnnotatedNet::unannotated(net, m);
        let shape = WorkflowShape::detect(a.net(), a.initial()).unwrap();
        let r = check_soundness(&a, &shape, 100).unwrap();
        assert!(!r.option_to_complete && !r.no_dead_transitions);
        assert_eq!(r.stuck_markings.len(), 3);

        // a token left cycling beside o
        let net = PetriNet::builder()
            .transition("split", ["i"], ["o", "z"])
            .transition("spin", ["z"], ["y"])
            .transition("spun", ["y"], ["z"])
            .build()
            .unwrap();
        let m = net.marking(&["i"]).unwrap();
        let a = AnnotatedNet::unannotated(net, m);
        let shape = WorkflowShape::detect(a.net(), a.initial()).unwrap();
        let r = check_soundness(&a, &shape, 100).unwrap();
        assert!(!r.proper_completion && !r.option_to_complete && r.no_dead_transitions);
        assert_eq!(r.improper_markings.len(), 2);
    }
}
