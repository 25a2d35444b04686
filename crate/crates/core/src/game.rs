//! Stochastic games generated by annotated nets: the base game with fair
//! conflicts and its restart variant.
//!
//! Action profiles are represented by their union [`Step`]; since every
//! transition has exactly one owner, the per-player decomposition can always
//! be recovered with [`StochasticGame::decompose`].
//!
//! Two payoff notions are exposed. [`StochasticGame::payoff`] is the utility
//! of the whole profile step. [`Outcome::reward`] is the expected utility of
//! the sub-step that actually fires once conflicts are resolved; it is the
//! stage reward used by every long-run analysis in the crate.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use itertools::Itertools;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::petri::{self, AnnotatedNet, Marking, PetriNet, Step, TransitionId, NATURE};
use crate::rational::{self, Rational};
use crate::statespace::StateSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    Role(usize),
    Nature,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Idle,
    Fire(TransitionId),
}

impl Action {
    pub fn as_step(self) -> Step {
        match self {
            Action::Idle => Step::idle(),
            Action::Fire(t) => Step::singleton(t),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameKind {
    Base,
    Restart,
}

/// Successor distribution and expected per-player reward of one profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub next: Vec<(usize, Rational)>,
    pub reward: Vec<Rational>,
    /// Mass that reached a final marking and was sent back to the initial
    /// state; always zero in the base game.
    pub restarted: Rational,
}

impl Outcome {
    pub fn total_probability(&self) -> Rational {
        self.next.iter().map(|(_, p)| p).sum()
    }
}

/// Conflict classes of an extended free-choice net with a per-transition
/// class lookup.
#[derive(Clone, Debug)]
struct Conflicts {
    classes: Vec<Vec<TransitionId>>,
    class_of: Vec<usize>,
}

impl Conflicts {
    fn of(net: &PetriNet) -> Result<Conflicts> {
        let classes = petri::conflict_sets(net)?;
        let mut class_of = vec![0; net.num_transitions()];
        for (k, class) in classes.iter().enumerate() {
            for t in class {
                class_of[t.0] = k;
            }
        }
        Ok(Conflicts { classes, class_of })
    }

    /// The members of `s` grouped by conflict class, classes in order.
    fn split(&self, s: &Step) -> Vec<Vec<TransitionId>> {
        let mut groups: Vec<(usize, Vec<TransitionId>)> = Vec::new();
        for t in s.transitions() {
            let k = self.class_of[t.0];
            match groups.iter_mut().find(|(c, _)| *c == k) {
                Some((_, g)) => g.push(t),
                None => groups.push((k, vec![t])),
            }
        }
        groups.sort();
        groups.into_iter().map(|(_, g)| g).collect()
    }

    /// Maximal `m`-enabled sub-steps of `s` and the common weight
    /// `Π 1/|s ∩ X|` of each of them.
    fn substeps(&self, net: &PetriNet, m: &Marking, s: &Step) -> (Vec<Step>, Rational) {
        let groups = self.split(s);
        let weight = groups.iter().fold(rational::one(), |acc, g| {
            acc / rational::int(g.len() as i64)
        });
        let subs = groups
            .iter()
            .map(|g| g.iter().copied())
            .multi_cartesian_product()
            .map(Step::new)
            .filter(|sub| petri::step_enabled(net, m, sub))
            .collect::<Vec<_>>();
        // multi_cartesian_product of zero iterators yields nothing
        let subs = if groups.is_empty() {
            vec![Step::idle()]
        } else {
            subs
        };
        (subs, weight)
    }
}

/// All maximal `m`-enabled sub-steps of `s`: enabled, contained in `s`, with
/// one transition from every conflict class that meets `s`.
pub fn maximal_enabled_substeps(a: &AnnotatedNet, m: &Marking, s: &Step) -> Result<Vec<Step>> {
    let conflicts = Conflicts::of(a.net())?;
    Ok(conflicts.substeps(a.net(), m, s).0)
}

/// Base-game probability of moving from `m` to `m2` when the profile step `s`
/// is chosen: each conflict class meeting `s` is resolved by a fair die.
pub fn transition_probability(
    a: &AnnotatedNet,
    m: &Marking,
    s: &Step,
    m2: &Marking,
) -> Result<Rational> {
    let conflicts = Conflicts::of(a.net())?;
    let (subs, weight) = conflicts.substeps(a.net(), m, s);
    let mut total = rational::zero();
    for sub in subs {
        if petri::fire_step(a.net(), m, &sub)? == *m2 {
            total += &weight;
        }
    }
    Ok(total)
}

pub struct StochasticGame {
    net: Arc<AnnotatedNet>,
    kind: GameKind,
    conflicts: Conflicts,
    players: Vec<Player>,
    states: Vec<Marking>,
    index: HashMap<Marking, usize>,
    initial: usize,
    available: Vec<Vec<Vec<Action>>>,
    cache: Mutex<HashMap<(usize, Step), Arc<Outcome>>>,
}

impl Clone for StochasticGame {
    fn clone(&self) -> Self {
        StochasticGame {
            net: Arc::clone(&self.net),
            kind: self.kind,
            conflicts: self.conflicts.clone(),
            players: self.players.clone(),
            states: self.states.clone(),
            index: self.index.clone(),
            initial: self.initial,
            available: self.available.clone(),
            cache: Mutex::new(self.cache.lock().expect("cache poisoned").clone()),
        }
    }
}

impl std::fmt::Debug for StochasticGame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("StochasticGame")
            .field("kind", &self.kind)
            .field("players", &self.players.len())
            .field("states", &self.states.len())
            .finish()
    }
}

/// Base game with fair conflicts over all reachable markings.
pub fn build_base_game(a: &AnnotatedNet, ss: &StateSpace) -> Result<StochasticGame> {
    let conflicts = Conflicts::of(a.net())?;
    let states = ss.states().to_vec();
    let initial = ss
        .index_of(a.initial())
        .ok_or_else(|| Error::UnknownState(a.net().marking_label(a.initial())))?;
    Ok(StochasticGame::assemble(
        Arc::new(a.clone()),
        GameKind::Base,
        conflicts,
        states,
        initial,
    ))
}

/// Restart game: final markings are dropped and the probability of reaching
/// them is redirected to `initial`.
pub fn build_restart_game(g: &StochasticGame, initial: &Marking) -> Result<StochasticGame> {
    let net = g.net.net();
    if net.is_final(initial) {
        return Err(Error::InitialIsFinal(net.marking_label(initial)));
    }
    if g.state_index(initial).is_none() {
        return Err(Error::UnknownState(net.marking_label(initial)));
    }
    let states: Vec<Marking> = g
        .states
        .iter()
        .filter(|m| !net.is_final(m))
        .cloned()
        .collect();
    let initial = states.iter().position(|m| m == initial).expect("kept");
    Ok(StochasticGame::assemble(
        Arc::clone(&g.net),
        GameKind::Restart,
        g.conflicts.clone(),
        states,
        initial,
    ))
}

impl StochasticGame {
    fn assemble(
        net: Arc<AnnotatedNet>,
        kind: GameKind,
        conflicts: Conflicts,
        states: Vec<Marking>,
        initial: usize,
    ) -> StochasticGame {
        let mut players: Vec<Player> = (0..net.roles().len()).map(Player::Role).collect();
        players.push(Player::Nature);
        let nature = players.len() - 1;
        let available = states
            .iter()
            .map(|m| {
                let mut per_player = vec![vec![Action::Idle]; players.len()];
                for t in petri::enabled(net.net(), m) {
                    let owner = net.owner(t).unwrap_or(nature);
                    per_player[owner].push(Action::Fire(t));
                }
                per_player
            })
            .collect();
        let index = states
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        StochasticGame {
            net,
            kind,
            conflicts,
            players,
            states,
            index,
            initial,
            available,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn annotated_net(&self) -> &AnnotatedNet {
        &self.net
    }

    pub fn net(&self) -> &PetriNet {
        self.net.net()
    }

    pub fn kind(&self) -> GameKind {
        self.kind
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn nature(&self) -> usize {
        self.players.len() - 1
    }

    pub fn player_name(&self, i: usize) -> &str {
        match self.players[i] {
            Player::Role(r) => &self.net.roles()[r],
            Player::Nature => NATURE,
        }
    }

    pub fn player_index(&self, name: &str) -> Result<usize> {
        if name == NATURE {
            return Ok(self.nature());
        }
        self.net.role_index(name)
    }

    /// Player owning a transition.
    pub fn owner(&self, t: TransitionId) -> usize {
        self.net.owner(t).unwrap_or(self.nature())
    }

    pub fn states(&self) -> &[Marking] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, m: &Marking) -> Option<usize> {
        self.index.get(m).copied()
    }

    pub fn state_label(&self, s: usize) -> String {
        self.net().marking_label(&self.states[s])
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Idle plus the enabled transitions the player owns.
    pub fn available(&self, state: usize, player: usize) -> &[Action] {
        &self.available[state][player]
    }

    pub fn conflict_classes(&self) -> &[Vec<TransitionId>] {
        &self.conflicts.classes
    }

    pub fn profile_step(&self, actions: &[Action]) -> Step {
        actions
            .iter()
            .filter_map(|a| match a {
                Action::Fire(t) => Some(*t),
                Action::Idle => None,
            })
            .collect()
    }

    /// Splits a union step back into one action per player.
    pub fn decompose(&self, step: &Step) -> Result<Vec<Action>> {
        let mut actions = vec![Action::Idle; self.players.len()];
        for t in step.transitions() {
            if t.0 >= self.net().num_transitions() {
                return Err(Error::UnknownTransition(format!("#{}", t.0)));
            }
            let p = self.owner(t);
            if actions[p] != Action::Idle {
                return Err(Error::MalformedHistory(format!(
                    "player `{}` fires two transitions in {}",
                    self.player_name(p),
                    self.net().step_label(step)
                )));
            }
            actions[p] = Action::Fire(t);
        }
        Ok(actions)
    }

    /// Every profile assembled from available actions at `state`, as union
    /// steps in a deterministic order.
    pub fn profiles(&self, state: usize) -> Vec<Step> {
        self.available[state]
            .iter()
            .map(|acts| acts.iter().copied())
            .multi_cartesian_product()
            .map(|combo| self.profile_step(&combo))
            .collect()
    }

    /// Utility of the profile step for every player (nature always 0).
    pub fn payoff(&self, _state: usize, step: &Step) -> Vec<Rational> {
        let mut v: Vec<Rational> = (0..self.net.roles().len())
            .map(|r| self.net.step_utility_of(r, step))
            .collect();
        v.push(rational::zero());
        v
    }

    /// Game state entered when the net reaches `m`; final markings map to the
    /// initial state in the restart game.
    pub fn successor_state(&self, m: &Marking) -> Result<usize> {
        if self.kind == GameKind::Restart && self.net().is_final(m) {
            return Ok(self.initial);
        }
        self.state_index(m)
            .ok_or_else(|| Error::UnknownState(self.net().marking_label(m)))
    }

    /// Successor distribution and expected fired-step reward of a profile,
    /// memoized per `(state, step)`.
    pub fn outcome(&self, state: usize, step: &Step) -> Result<Arc<Outcome>> {
        let key = (state, step.clone());
        if let Some(hit) = self.cache.lock().expect("cache poisoned").get(&key) {
            return Ok(Arc::clone(hit));
        }
        let outcome = Arc::new(self.compute_outcome(state, step)?);
        self.cache
            .lock()
            .expect("cache poisoned")
            .insert(key, Arc::clone(&outcome));
        Ok(outcome)
    }

    fn compute_outcome(&self, state: usize, step: &Step) -> Result<Outcome> {
        let marking = self
            .states
            .get(state)
            .ok_or_else(|| Error::UnknownState(format!("#{state}")))?;
        let (subs, weight) = self.conflicts.substeps(self.net(), marking, step);
        let mut next: Vec<(usize, Rational)> = Vec::new();
        let mut reward = vec![rational::zero(); self.players.len()];
        let mut restarted = rational::zero();
        for sub in &subs {
            let fired = petri::fire_step(self.net(), marking, sub)?;
            if self.kind == GameKind::Restart && self.net().is_final(&fired) {
                restarted += &weight;
            }
            let target = self.successor_state(&fired)?;
            match next.iter_mut().find(|(s, _)| *s == target) {
                Some((_, p)) => *p += &weight,
                None => next.push((target, weight.clone())),
            }
            for (r, acc) in reward.iter_mut().enumerate().take(self.net.roles().len()) {
                *acc += self.net.step_utility_of(r, sub) * &weight;
            }
        }
        next.sort_by_key(|(s, _)| *s);
        Ok(Outcome {
            next,
            reward,
            restarted,
        })
    }

    pub fn prob(&self, state: usize, step: &Step, target: usize) -> Result<Rational> {
        Ok(self
            .outcome(state, step)?
            .next
            .iter()
            .find(|(s, _)| *s == target)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero))
    }

    /// A step is admissible at a state when its successor row sums to one.
    pub fn is_admissible(&self, state: usize, step: &Step) -> Result<bool> {
        Ok(self.outcome(state, step)?.total_probability().is_one())
    }
}
