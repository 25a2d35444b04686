//! Elementary net systems with safe markings, step firing, conflict
//! structure and the role/utility annotations that turn a net into a game.
//!
//! Place and transition identifiers are strings. They are sorted at
//! construction, so [`PlaceId`] and [`TransitionId`] order coincides with the
//! lexicographic order of the names and every enumeration in the crate is
//! reproducible.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, Rational};

/// Reserved identifier of the nature player. Roles may not use it.
pub const NATURE: &str = "⊥";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct PlaceId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TransitionId(pub usize);

/// A safe marking, i.e. the set of marked places.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Marking(BTreeSet<PlaceId>);

impl Marking {
    pub fn new(places: impl IntoIterator<Item = PlaceId>) -> Self {
        Marking(places.into_iter().collect())
    }

    pub fn empty() -> Self {
        Marking::default()
    }

    pub fn contains(&self, p: PlaceId) -> bool {
        self.0.contains(&p)
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceId> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A set of transitions fired together. The empty step is the idle step.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Step(BTreeSet<TransitionId>);

impl Step {
    pub fn new(transitions: impl IntoIterator<Item = TransitionId>) -> Self {
        Step(transitions.into_iter().collect())
    }

    pub fn idle() -> Self {
        Step::default()
    }

    pub fn singleton(t: TransitionId) -> Self {
        Step([t].into_iter().collect())
    }

    pub fn contains(&self, t: TransitionId) -> bool {
        self.0.contains(&t)
    }

    pub fn transitions(&self) -> impl Iterator<Item = TransitionId> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, t: TransitionId) -> bool {
        self.0.insert(t)
    }

    pub fn union(&self, other: &Step) -> Step {
        Step(self.0.union(&other.0).copied().collect())
    }

    pub fn is_disjoint(&self, other: &Step) -> bool {
        self.0.is_disjoint(&other.0)
    }
}

impl FromIterator<TransitionId> for Step {
    fn from_iter<I: IntoIterator<Item = TransitionId>>(iter: I) -> Self {
        Step::new(iter)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PetriNet {
    places: Vec<String>,
    transitions: Vec<String>,
    pre: Vec<Vec<PlaceId>>,
    post: Vec<Vec<PlaceId>>,
    place_index: HashMap<String, PlaceId>,
    transition_index: HashMap<String, TransitionId>,
}

#[derive(Debug, Default)]
pub struct NetBuilder {
    places: BTreeSet<String>,
    transitions: BTreeMap<String, (BTreeSet<String>, BTreeSet<String>)>,
    duplicate: Option<String>,
}

impl NetBuilder {
    /// Declares a place. Places mentioned in arcs are declared implicitly.
    pub fn place(mut self, name: impl Into<String>) -> Self {
        self.places.insert(name.into());
        self
    }

    pub fn transition<I, O, S>(mut self, name: impl Into<String>, pre: I, post: O) -> Self
    where
        I: IntoIterator<Item = S>,
        O: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let name = name.into();
        let pre: BTreeSet<String> = pre.into_iter().map(Into::into).collect();
        let post: BTreeSet<String> = post.into_iter().map(Into::into).collect();
        self.places.extend(pre.iter().cloned());
        self.places.extend(post.iter().cloned());
        if self.transitions.insert(name.clone(), (pre, post)).is_some() {
            self.duplicate.get_or_insert(name);
        }
        self
    }

    pub fn build(self) -> Result<PetriNet> {
        if let Some(t) = self.duplicate {
            return Err(Error::InvalidNet(format!(
                "transition `{t}` declared twice"
            )));
        }
        if let Some(p) = self
            .places
            .iter()
            .find(|p| self.transitions.contains_key(*p))
        {
            return Err(Error::InvalidNet(format!(
                "`{p}` is both a place and a transition"
            )));
        }
        let places: Vec<String> = self.places.into_iter().collect();
        let place_index: HashMap<String, PlaceId> = places
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), PlaceId(i)))
            .collect();
        let mut transitions = Vec::new();
        let mut pre = Vec::new();
        let mut post = Vec::new();
        for (name, (inputs, outputs)) in self.transitions {
            if inputs.is_empty() {
                return Err(Error::InvalidNet(format!(
                    "transition `{name}` has an empty pre-set"
                )));
            }
            if outputs.is_empty() {
                return Err(Error::InvalidNet(format!(
                    "transition `{name}` has an empty post-set"
                )));
            }
            pre.push(inputs.iter().map(|p| place_index[p]).collect());
            post.push(outputs.iter().map(|p| place_index[p]).collect());
            transitions.push(name);
        }
        let transition_index = transitions
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), TransitionId(i)))
            .collect();
        Ok(PetriNet {
            places,
            transitions,
            pre,
            post,
            place_index,
            transition_index,
        })
    }
}

impl PetriNet {
    pub fn builder() -> NetBuilder {
        NetBuilder::default()
    }

    pub fn num_places(&self) -> usize {
        self.places.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.transitions.len()
    }

    pub fn places(&self) -> impl Iterator<Item = PlaceId> {
        (0..self.places.len()).map(PlaceId)
    }

    pub fn transitions(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len()).map(TransitionId)
    }

    pub fn place_name(&self, p: PlaceId) -> &str {
        &self.places[p.0]
    }

    pub fn transition_name(&self, t: TransitionId) -> &str {
        &self.transitions[t.0]
    }

    pub fn place(&self, name: &str) -> Result<PlaceId> {
        self.place_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownPlace(name.to_string()))
    }

    pub fn transition(&self, name: &str) -> Result<TransitionId> {
        self.transition_index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownTransition(name.to_string()))
    }

    pub fn pre(&self, t: TransitionId) -> &[PlaceId] {
        &self.pre[t.0]
    }

    pub fn post(&self, t: TransitionId) -> &[PlaceId] {
        &self.post[t.0]
    }

    pub fn marking<S: AsRef<str>>(&self, places: &[S]) -> Result<Marking> {
        places
            .iter()
            .map(|p| self.place(p.as_ref()))
            .collect::<Result<BTreeSet<_>>>()
            .map(Marking)
    }

    pub fn step<S: AsRef<str>>(&self, transitions: &[S]) -> Result<Step> {
        transitions
            .iter()
            .map(|t| self.transition(t.as_ref()))
            .collect::<Result<BTreeSet<_>>>()
            .map(Step)
    }

    /// Renders a marking as `{p0,p1}`.
    pub fn marking_label(&self, m: &Marking) -> String {
        let names: Vec<&str> = m.places().map(|p| self.place_name(p)).collect();
        format!("{{{}}}", names.join(","))
    }

    pub fn step_label(&self, s: &Step) -> String {
        let names: Vec<&str> = s.transitions().map(|t| self.transition_name(t)).collect();
        format!("{{{}}}", names.join(","))
    }

    pub fn step_names(&self, s: &Step) -> Vec<String> {
        s.transitions()
            .map(|t| self.transition_name(t).to_string())
            .collect()
    }

    pub fn marking_names(&self, m: &Marking) -> Vec<String> {
        m.places().map(|p| self.place_name(p).to_string()).collect()
    }

    /// A marking is final when it intersects no pre-set.
    pub fn is_final(&self, m: &Marking) -> bool {
        self.pre
            .iter()
            .all(|pre| pre.iter().all(|p| !m.contains(*p)))
    }

    fn is_enabled(&self, m: &Marking, t: TransitionId) -> bool {
        self.pre(t).iter().all(|p| m.contains(*p))
    }

    /// First pair of transitions whose pre-sets intersect without coinciding.
    pub fn free_choice_violation(&self) -> Option<(TransitionId, TransitionId)> {
        for a in self.transitions() {
            for b in self.transitions().skip(a.0 + 1) {
                let (pa, pb) = (self.pre(a), self.pre(b));
                if pa != pb && pa.iter().any(|p| pb.contains(p)) {
                    return Some((a, b));
                }
            }
        }
        None
    }

    pub fn is_extended_free_choice(&self) -> bool {
        self.free_choice_violation().is_none()
    }
}

impl fmt::Display for PetriNet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for t in self.transitions() {
            let pre: Vec<&str> = self.pre(t).iter().map(|p| self.place_name(*p)).collect();
            let post: Vec<&str> = self.post(t).iter().map(|p| self.place_name(*p)).collect();
            writeln!(
                f,
                "{} : {{{}}} -> {{{}}}",
                self.transition_name(t),
                pre.join(","),
                post.join(",")
            )?;
        }
        Ok(())
    }
}

/// Transitions `t` with `pre(t) ⊆ m`, in identifier order.
pub fn enabled(net: &PetriNet, m: &Marking) -> Vec<TransitionId> {
    net.transitions()
        .filter(|&t| net.is_enabled(m, t))
        .collect()
}

/// Whether the step is enabled in the multiset sense: every place carries at
/// least as many tokens as the step consumes from it.
pub fn step_enabled(net: &PetriNet, m: &Marking, s: &Step) -> bool {
    let mut consumed: HashMap<PlaceId, usize> = HashMap::new();
    for t in s.transitions() {
        for &p in net.pre(t) {
            *consumed.entry(p).or_default() += 1;
        }
    }
    consumed
        .into_iter()
        .all(|(p, n)| n <= usize::from(m.contains(p)))
}

/// Fires a step at a safe marking.
pub fn fire_step(net: &PetriNet, m: &Marking, s: &Step) -> Result<Marking> {
    if !step_enabled(net, m, s) {
        return Err(Error::StepNotEnabled {
            step: net.step_label(s),
            marking: net.marking_label(m),
        });
    }
    let mut tokens: BTreeMap<PlaceId, usize> = m.places().map(|p| (p, 1)).collect();
    for t in s.transitions() {
        for p in net.pre(t) {
            *tokens
                .get_mut(p)
                .expect("enabled step consumes marked places") -= 1;
        }
    }
    for t in s.transitions() {
        for &p in net.post(t) {
            let n = tokens.entry(p).or_default();
            *n += 1;
            if *n > 1 {
                return Err(Error::SafetyViolation {
                    step: net.step_label(s),
                    marking: net.marking_label(m),
                    place: net.place_name(p).to_string(),
                });
            }
        }
    }
    Ok(Marking(
        tokens
            .into_iter()
            .filter(|&(_, n)| n == 1)
            .map(|(p, _)| p)
            .collect(),
    ))
}

/// Partition of the transitions into conflict sets (shared pre-set places).
/// Classes are ordered by their least member.
pub fn conflict_sets(net: &PetriNet) -> Result<Vec<Vec<TransitionId>>> {
    if let Some((a, b)) = net.free_choice_violation() {
        return Err(Error::NotFreeChoice(
            net.transition_name(a).to_string(),
            net.transition_name(b).to_string(),
        ));
    }
    let mut by_preset: BTreeMap<&[PlaceId], Vec<TransitionId>> = BTreeMap::new();
    for t in net.transitions() {
        by_preset.entry(net.pre(t)).or_default().push(t);
    }
    let mut classes: Vec<Vec<TransitionId>> = by_preset.into_values().collect();
    classes.sort();
    Ok(classes)
}

/// Initial and final place of an elementary workflow net.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkflowShape {
    pub initial_place: PlaceId,
    pub final_place: PlaceId,
}

impl WorkflowShape {
    /// Reads the workflow shape off a marked net. The initial place is the
    /// single place of the initial marking; the final place is the unique
    /// place that no transition consumes from.
    pub fn detect(net: &PetriNet, initial: &Marking) -> Result<WorkflowShape> {
        let not_wf = |msg: String| Error::NotAWorkflowNet(msg);
        if initial.len() != 1 {
            return Err(not_wf(format!(
                "initial marking {} must mark exactly one place",
                net.marking_label(initial)
            )));
        }
        let i = initial.places().next().expect("one place");
        let sinks: Vec<PlaceId> = net
            .places()
            .filter(|&p| net.transitions().all(|t| !net.pre(t).contains(&p)))
            .collect();
        let o = match sinks.as_slice() {
            [o] => *o,
            [] => return Err(not_wf("no place is free of outgoing arcs".into())),
            many => {
                let names: Vec<&str> = many.iter().map(|p| net.place_name(*p)).collect();
                return Err(not_wf(format!("several sink places: {}", names.join(", "))));
            }
        };
        let shape = WorkflowShape {
            initial_place: i,
            final_place: o,
        };
        shape.validate(net)?;
        Ok(shape)
    }

    pub fn validate(&self, net: &PetriNet) -> Result<()> {
        let not_wf = |msg: String| Error::NotAWorkflowNet(msg);
        let (i, o) = (self.initial_place, self.final_place);
        if i == o {
            return Err(not_wf("initial and final place coincide".into()));
        }
        if let Some(t) = net.transitions().find(|&t| net.post(t).contains(&i)) {
            return Err(not_wf(format!(
                "initial place `{}` is produced by `{}`",
                net.place_name(i),
                net.transition_name(t)
            )));
        }
        if let Some(t) = net.transitions().find(|&t| net.pre(t).contains(&o)) {
            return Err(not_wf(format!(
                "final place `{}` is consumed by `{}`",
                net.place_name(o),
                net.transition_name(t)
            )));
        }
        if let Some(p) = net.places().find(|&p| {
            net.transitions()
                .all(|t| !net.pre(t).contains(&p) && !net.post(t).contains(&p))
        }) {
            return Err(not_wf(format!("place `{}` is isolated", net.place_name(p))));
        }
        Ok(())
    }

    pub fn initial_marking(&self) -> Marking {
        Marking::new([self.initial_place])
    }

    pub fn final_marking(&self) -> Marking {
        Marking::new([self.final_place])
    }
}

/// A marked net together with roles, a sparse utility table and a partial
/// assignment of transitions to roles. Unassigned transitions belong to
/// nature.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnotatedNet {
    net: PetriNet,
    initial: Marking,
    roles: Vec<String>,
    utility: BTreeMap<(usize, TransitionId), Rational>,
    owner: Vec<Option<usize>>,
}

pub struct AnnotatedNetBuilder {
    net: PetriNet,
    initial: Marking,
    roles: BTreeSet<String>,
    owners: Vec<(String, String)>,
    utilities: Vec<(String, String, Rational)>,
}

impl AnnotatedNetBuilder {
    pub fn role(mut self, name: impl Into<String>) -> Self {
        self.roles.insert(name.into());
        self
    }

    pub fn roles<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.roles.extend(names.into_iter().map(Into::into));
        self
    }

    pub fn assign(mut self, transition: impl Into<String>, role: impl Into<String>) -> Self {
        self.owners.push((transition.into(), role.into()));
        self
    }

    pub fn utility(
        mut self,
        role: impl Into<String>,
        transition: impl Into<String>,
        value: Rational,
    ) -> Self {
        self.utilities.push((role.into(), transition.into(), value));
        self
    }

    pub fn build(self) -> Result<AnnotatedNet> {
        let net = self.net;
        if self.roles.contains(NATURE) {
            return Err(Error::SchemaError(format!(
                "role name `{NATURE}` is reserved for nature"
            )));
        }
        let roles: Vec<String> = self.roles.into_iter().collect();
        let role_index = |r: &str| {
            roles
                .iter()
                .position(|x| x == r)
                .ok_or_else(|| Error::UnknownRole(r.to_string()))
        };
        let mut owner = vec![None; net.num_transitions()];
        for (t, r) in &self.owners {
            let t = net.transition(t)?;
            let r = role_index(r)?;
            match owner[t.0] {
                Some(prev) if prev != r => {
                    return Err(Error::SchemaError(format!(
                        "transition `{}` assigned to two roles",
                        net.transition_name(t)
                    )))
                }
                _ => owner[t.0] = Some(r),
            }
        }
        let mut utility = BTreeMap::new();
        for (r, t, v) in self.utilities {
            let t = net.transition(&t)?;
            let r = role_index(&r)?;
            if num_traits::Zero::is_zero(&v) {
                utility.remove(&(r, t));
            } else {
                utility.insert((r, t), v);
            }
        }
        if let Some(p) = self.initial.places().find(|p| p.0 >= net.num_places()) {
            return Err(Error::UnknownPlace(format!("#{}", p.0)));
        }
        Ok(AnnotatedNet {
            net,
            initial: self.initial,
            roles,
            utility,
            owner,
        })
    }
}

impl AnnotatedNet {
    pub fn builder(net: PetriNet, initial: Marking) -> AnnotatedNetBuilder {
        AnnotatedNetBuilder {
            net,
            initial,
            roles: BTreeSet::new(),
            owners: Vec::new(),
            utilities: Vec::new(),
        }
    }

    /// Net without roles: every transition belongs to nature.
    pub fn unannotated(net: PetriNet, initial: Marking) -> AnnotatedNet {
        let owner = vec![None; net.num_transitions()];
        AnnotatedNet {
            net,
            initial,
            roles: Vec::new(),
            utility: BTreeMap::new(),
            owner,
        }
    }

    pub fn net(&self) -> &PetriNet {
        &self.net
    }

    pub fn initial(&self) -> &Marking {
        &self.initial
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn role_index(&self, role: &str) -> Result<usize> {
        self.roles
            .iter()
            .position(|r| r == role)
            .ok_or_else(|| Error::UnknownRole(role.to_string()))
    }

    /// Owning role of a transition; `None` means nature.
    pub fn owner(&self, t: TransitionId) -> Option<usize> {
        self.owner[t.0]
    }

    pub fn utility(&self, role: usize, t: TransitionId) -> Rational {
        self.utility
            .get(&(role, t))
            .cloned()
            .unwrap_or_else(rational::zero)
    }

    /// Non-zero utility entries as `(role, transition, value)`.
    pub fn utility_entries(&self) -> impl Iterator<Item = (usize, TransitionId, &Rational)> {
        self.utility.iter().map(|(&(r, t), v)| (r, t, v))
    }

    /// Sum of the role's utilities over the transitions of the step.
    pub fn step_utility(&self, role: &str, s: &Step) -> Result<Rational> {
        let r = self.role_index(role)?;
        if let Some(t) = s.transitions().find(|t| t.0 >= self.net.num_transitions()) {
            return Err(Error::UnknownTransition(format!("#{}", t.0)));
        }
        Ok(self.step_utility_of(r, s))
    }

    pub(crate) fn step_utility_of(&self, role: usize, s: &Step) -> Rational {
        s.transitions()
            .fold(rational::zero(), |acc, t| acc + self.utility(role, t))
    }
}

/// Structural predicates of an annotated net.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuralReport {
    pub extended_free_choice: bool,
    pub free_choice_violation: Option<(String, String)>,
    pub workflow: Option<WorkflowShape>,
    pub workflow_defect: Option<String>,
    pub note: &'static str,
}

pub fn structural_checks(a: &AnnotatedNet) -> StructuralReport {
    let net = a.net();
    let violation = net.free_choice_violation().map(|(x, y)| {
        (
            net.transition_name(x).to_string(),
            net.transition_name(y).to_string(),
        )
    });
    let (workflow, workflow_defect) = match WorkflowShape::detect(net, a.initial()) {
        Ok(shape) => (Some(shape), None),
        Err(e) => (None, Some(e.to_string())),
    };
    StructuralReport {
        extended_free_choice: violation.is_none(),
        free_choice_violation: violation,
        workflow,
        workflow_defect,
        note: "safety, final markings and soundness need the reachability graph",
    }
}
