//! Correlation devices, strategy profiles, history probabilities and
//! mean payoffs.
//!
//! Devices are finite-state: every device state emits a distribution over
//! signal vectors and the successor device state is a function of the
//! emitted vector alone, never of the game state. Exact analyses
//! ([`mean_expected_payoff`], [`longrun_average_payoff`]) need stationary
//! strategies that look at the current game state and the player's own
//! current signal; arbitrary observation-dependent strategies are accepted
//! by [`history_probability`] and [`simulate`].

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{self, MarkovChain};
use crate::error::{Error, Result};
use crate::game::{Action, StochasticGame};
use crate::petri::{self, Step};
use crate::rational::{self, to_f64, Rational};

/// Signal observed by every player of the trivial device.
pub const TOP: &str = "⊤";

/// One signal index per player.
pub type SignalVector = Vec<usize>;

/// Distribution over actions; entries have positive probability.
pub type Dist = Vec<(Action, Rational)>;

#[derive(Clone, Debug, PartialEq)]
pub struct Emission {
    pub signals: SignalVector,
    pub prob: Rational,
    pub next: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationDevice {
    alphabets: Vec<Vec<String>>,
    state_names: Vec<String>,
    start: usize,
    emissions: Vec<Vec<Emission>>,
}

impl CorrelationDevice {
    /// A single device state emitting `⊤` to everybody with probability one.
    pub fn trivial(players: usize) -> CorrelationDevice {
        CorrelationDevice {
            alphabets: vec![vec![TOP.to_string()]; players],
            state_names: vec!["d0".to_string()],
            start: 0,
            emissions: vec![vec![Emission {
                signals: vec![0; players],
                prob: rational::one(),
                next: 0,
            }]],
        }
    }

    /// A single device state drawing a fresh signal vector from `dist` at
    /// every stage.
    pub fn iid(
        alphabets: Vec<Vec<String>>,
        dist: Vec<(SignalVector, Rational)>,
    ) -> Result<CorrelationDevice> {
        let emissions = dist
            .into_iter()
            .map(|(signals, prob)| Emission {
                signals,
                prob,
                next: 0,
            })
            .collect();
        CorrelationDevice::new(alphabets, vec!["d0".to_string()], 0, vec![emissions])
    }

    pub fn new(
        alphabets: Vec<Vec<String>>,
        state_names: Vec<String>,
        start: usize,
        emissions: Vec<Vec<Emission>>,
    ) -> Result<CorrelationDevice> {
        let bad = |m: String| Error::InvalidDistribution(m);
        if state_names.is_empty() || start >= state_names.len() {
            return Err(bad("device needs a valid start state".into()));
        }
        if emissions.len() != state_names.len() {
            return Err(bad("one emission list per device state".into()));
        }
        if alphabets.iter().any(Vec::is_empty) {
            return Err(bad("every player needs at least one signal".into()));
        }
        let mut emissions = emissions;
        for (x, list) in emissions.iter_mut().enumerate() {
            list.retain(|e| !e.prob.is_zero());
            let mut total = rational::zero();
            for e in list.iter() {
                if e.prob.is_negative() {
                    return Err(bad(format!(
                        "negative probability in state {}",
                        state_names[x]
                    )));
                }
                if e.next >= state_names.len() {
                    return Err(bad(format!(
                        "unknown successor in state {}",
                        state_names[x]
                    )));
                }
                if e.signals.len() != alphabets.len()
                    || e.signals.iter().zip(&alphabets).any(|(s, a)| *s >= a.len())
                {
                    return Err(bad(format!(
                        "invalid signal vector in state {}",
                        state_names[x]
                    )));
                }
                total += &e.prob;
            }
            if !total.is_one() {
                return Err(bad(format!(
                    "emission of state {} sums to {total}",
                    state_names[x]
                )));
            }
            if !list.iter().map(|e| &e.signals).all_unique() {
                return Err(bad(format!(
                    "repeated signal vector in state {}",
                    state_names[x]
                )));
            }
        }
        Ok(CorrelationDevice {
            alphabets,
            state_names,
            start,
            emissions,
        })
    }

    pub fn num_players(&self) -> usize {
        self.alphabets.len()
    }

    pub fn num_states(&self) -> usize {
        self.state_names.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn state_name(&self, x: usize) -> &str {
        &self.state_names[x]
    }

    pub fn alphabet(&self, player: usize) -> &[String] {
        &self.alphabets[player]
    }

    pub fn emissions(&self, x: usize) -> &[Emission] {
        &self.emissions[x]
    }

    pub fn signal_index(&self, player: usize, name: &str) -> Option<usize> {
        self.alphabets[player].iter().position(|s| s == name)
    }

    /// Probability of emitting `signals` in device state `x`, and the
    /// successor state.
    pub fn emit(&self, x: usize, signals: &[usize]) -> Option<(&Rational, usize)> {
        self.emissions[x]
            .iter()
            .find(|e| e.signals == signals)
            .map(|e| (&e.prob, e.next))
    }

    /// Whether the player's own signal always determines the whole vector.
    pub fn observes_all(&self, player: usize) -> bool {
        self.emissions
            .iter()
            .all(|list| list.iter().map(|e| e.signals[player]).all_unique())
    }

    pub fn is_trivial(&self) -> bool {
        self.emissions.iter().all(|l| l.len() == 1)
    }
}

/// Built-in stationary behaviours.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Uniform over every available action, idle included.
    Uniform,
    /// Uniform over the available transitions; idle only when none is enabled.
    Act,
    /// Lexicographically first available transition, else idle.
    FirstAct,
    Idle,
}

impl Rule {
    pub fn apply(self, available: &[Action]) -> Dist {
        let fire: Vec<Action> = available
            .iter()
            .copied()
            .filter(|a| *a != Action::Idle)
            .collect();
        let uniform = |acts: &[Action]| -> Dist {
            let p = rational::ratio(1, acts.len() as i64);
            acts.iter().map(|a| (*a, p.clone())).collect()
        };
        match self {
            Rule::Uniform => uniform(available),
            Rule::Act if !fire.is_empty() => uniform(&fire),
            Rule::FirstAct if !fire.is_empty() => vec![(fire[0], rational::one())],
            _ => vec![(Action::Idle, rational::one())],
        }
    }
}

/// Strategy table indexed by game state and the player's own signal.
#[derive(Clone, Debug, PartialEq)]
pub struct StationaryStrategy {
    table: Vec<Vec<Dist>>,
}

fn normalize_dist(mut dist: Dist, available: &[Action]) -> Result<Dist> {
    dist.retain(|(_, p)| !p.is_zero());
    dist.sort_by_key(|(a, _)| *a);
    let mut total = rational::zero();
    for (a, p) in &dist {
        if p.is_negative() {
            return Err(Error::InvalidStrategy("negative probability".into()));
        }
        if !available.contains(a) {
            return Err(Error::InvalidStrategy(format!(
                "action {a:?} is not available"
            )));
        }
        total += p;
    }
    if !dist.iter().map(|(a, _)| a).all_unique() {
        return Err(Error::InvalidStrategy("action listed twice".into()));
    }
    if !total.is_one() {
        return Err(Error::InvalidStrategy(format!(
            "probabilities sum to {total}"
        )));
    }
    Ok(dist)
}

impl StationaryStrategy {
    pub fn from_fn(
        game: &StochasticGame,
        device: &CorrelationDevice,
        player: usize,
        mut f: impl FnMut(usize, usize, &[Action]) -> Dist,
    ) -> Result<StationaryStrategy> {
        let signals = device.alphabet(player).len();
        let table = (0..game.num_states())
            .map(|s| {
                let avail = game.available(s, player);
                (0..signals)
                    .map(|m| {
                        normalize_dist(f(s, m, avail), avail).map_err(|e| {
                            Error::InvalidStrategy(format!(
                                "player `{}` at {}: {e}",
                                game.player_name(player),
                                game.state_label(s)
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StationaryStrategy { table })
    }

    pub fn rule(
        game: &StochasticGame,
        device: &CorrelationDevice,
        player: usize,
        rule: Rule,
    ) -> StationaryStrategy {
        Self::from_fn(game, device, player, |_, _, avail| rule.apply(avail))
            .expect("built-in rules are valid")
    }

    pub fn dist(&self, state: usize, signal: usize) -> &Dist {
        &self.table[state][signal]
    }

    pub fn prob(&self, state: usize, signal: usize, action: Action) -> Rational {
        self.table[state][signal]
            .iter()
            .find(|(a, _)| *a == action)
            .map(|(_, p)| p.clone())
            .unwrap_or_else(Rational::zero)
    }

    pub fn num_states(&self) -> usize {
        self.table.len()
    }

    pub fn num_signals(&self) -> usize {
        self.table.first().map_or(0, Vec::len)
    }
}

/// What a player has seen at the current stage.
#[derive(Clone, Copy, Debug)]
pub struct Observation<'a> {
    pub player: usize,
    /// Visited game states; the last one is the current state.
    pub states: &'a [usize],
    /// The player's own signals, aligned with `states`.
    pub signals: &'a [usize],
    /// Union steps of all previous stages.
    pub profiles: &'a [Step],
}

impl Observation<'_> {
    pub fn state(&self) -> usize {
        *self.states.last().expect("non-empty observation")
    }

    pub fn signal(&self) -> usize {
        *self.signals.last().expect("non-empty observation")
    }
}

/// Strategy that may use the whole observation history.
pub trait AdaptiveStrategy: Send + Sync + fmt::Debug {
    fn distribution(&self, game: &StochasticGame, obs: &Observation<'_>) -> Dist;
}

#[derive(Clone, Debug)]
pub enum Strategy {
    Stationary(StationaryStrategy),
    Adaptive(Arc<dyn AdaptiveStrategy>),
}

impl Strategy {
    fn distribution(&self, game: &StochasticGame, obs: &Observation<'_>) -> Dist {
        match self {
            Strategy::Stationary(s) => s.dist(obs.state(), obs.signal()).clone(),
            Strategy::Adaptive(a) => a.distribution(game, obs),
        }
    }
}

#[derive(Clone, Debug)]
pub struct StrategyProfile {
    strategies: Vec<Strategy>,
}

impl StrategyProfile {
    pub fn new(strategies: Vec<Strategy>) -> StrategyProfile {
        StrategyProfile { strategies }
    }

    /// Every role follows `role_rule`; nature is uniform over its options.
    pub fn from_rule(game: &StochasticGame, device: &CorrelationDevice, role_rule: Rule) -> Self {
        let nature = game.nature();
        let strategies = (0..game.num_players())
            .map(|i| {
                let rule = if i == nature {
                    Rule::Uniform
                } else {
                    role_rule
                };
                Strategy::Stationary(StationaryStrategy::rule(game, device, i, rule))
            })
            .collect();
        StrategyProfile { strategies }
    }

    /// Roles pick uniformly among their enabled transitions and idle only
    /// when they have none.
    pub fn acting(game: &StochasticGame, device: &CorrelationDevice) -> Self {
        Self::from_rule(game, device, Rule::Act)
    }

    pub fn idle(game: &StochasticGame, device: &CorrelationDevice) -> Self {
        Self::from_rule(game, device, Rule::Idle)
    }

    pub fn with(mut self, player: usize, strategy: Strategy) -> Self {
        self.strategies[player] = strategy;
        self
    }

    pub fn with_rule(
        self,
        game: &StochasticGame,
        device: &CorrelationDevice,
        player: usize,
        rule: Rule,
    ) -> Self {
        let s = StationaryStrategy::rule(game, device, player, rule);
        self.with(player, Strategy::Stationary(s))
    }

    pub fn strategy(&self, player: usize) -> &Strategy {
        &self.strategies[player]
    }

    pub fn len(&self) -> usize {
        self.strategies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strategies.is_empty()
    }

    pub fn stationary(&self, game: &StochasticGame, player: usize) -> Result<&StationaryStrategy> {
        match &self.strategies[player] {
            Strategy::Stationary(s) => Ok(s),
            Strategy::Adaptive(_) => Err(Error::NonStationaryStrategy(
                game.player_name(player).to_string(),
            )),
        }
    }

    fn check_shape(&self, game: &StochasticGame, device: &CorrelationDevice) -> Result<()> {
        if self.strategies.len() != game.num_players() || device.num_players() != game.num_players()
        {
            return Err(Error::InvalidStrategy(format!(
                "game has {} players, profile {}, device {}",
                game.num_players(),
                self.strategies.len(),
                device.num_players()
            )));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if let Strategy::Stationary(s) = s {
                if s.num_states() != game.num_states()
                    || s.num_signals() != device.alphabet(i).len()
                {
                    return Err(Error::InvalidStrategy(format!(
                        "strategy of `{}` does not match the game and device",
                        game.player_name(i)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Joint distribution over union steps at a state for a signal vector.
    pub fn joint(
        &self,
        game: &StochasticGame,
        state: usize,
        signals: &[usize],
    ) -> Result<Vec<(Step, Rational)>> {
        let per_player = (0..game.num_players())
            .map(|i| Ok(self.stationary(game, i)?.dist(state, signals[i])))
            .collect::<Result<Vec<_>>>()?;
        Ok(per_player
            .iter()
            .map(|d| d.iter())
            .multi_cartesian_product()
            .map(|combo| {
                let actions: Vec<Action> = combo.iter().map(|(a, _)| *a).collect();
                let p = combo.iter().fold(rational::one(), |acc, (_, p)| acc * p);
                (game.profile_step(&actions), p)
            })
            .collect())
    }
}

/// `⟨s1, m1, α1, …, s_n, m_n⟩`: game states, signal vectors and union steps.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    pub states: Vec<usize>,
    pub signals: Vec<SignalVector>,
    pub profiles: Vec<Step>,
}

impl History {
    pub fn stage(&self) -> usize {
        self.states.len()
    }
}

fn validate_history(
    game: &StochasticGame,
    device: &CorrelationDevice,
    h: &History,
) -> Result<Vec<Vec<Action>>> {
    let bad = |m: String| Error::MalformedHistory(m);
    let n = h.states.len();
    if n == 0 || h.signals.len() != n || h.profiles.len() + 1 != n {
        return Err(bad(format!(
            "{} states, {} signal vectors and {} profiles",
            n,
            h.signals.len(),
            h.profiles.len()
        )));
    }
    if let Some(s) = h.states.iter().find(|&&s| s >= game.num_states()) {
        return Err(bad(format!("unknown state #{s}")));
    }
    for m in &h.signals {
        if m.len() != device.num_players()
            || m.iter()
                .enumerate()
                .any(|(i, x)| *x >= device.alphabet(i).len())
        {
            return Err(bad("invalid signal vector".into()));
        }
    }
    h.profiles
        .iter()
        .zip(&h.states)
        .map(|(step, &s)| {
            let actions = game.decompose(step).map_err(|e| bad(e.to_string()))?;
            for (i, a) in actions.iter().enumerate() {
                if !game.available(s, i).contains(a) {
                    return Err(bad(format!(
                        "{} is not available to `{}` at {}",
                        game.net().step_label(&a.as_step()),
                        game.player_name(i),
                        game.state_label(s)
                    )));
                }
            }
            Ok(actions)
        })
        .collect()
}

/// Probability of a finite history under a device, start state and profile,
/// by the stage recursion: previous probability times the players' action
/// probabilities times the transition probability times the next emission.
pub fn history_probability(
    game: &StochasticGame,
    device: &CorrelationDevice,
    start: usize,
    profile: &StrategyProfile,
    h: &History,
) -> Result<Rational> {
    profile.check_shape(game, device)?;
    let decomposed = validate_history(game, device, h)?;
    if h.states[0] != start {
        return Ok(rational::zero());
    }
    let Some((p1, mut x)) = device.emit(device.start(), &h.signals[0]) else {
        return Ok(rational::zero());
    };
    let mut prob = p1.clone();
    let players = game.num_players();
    let own: Vec<Vec<usize>> = (0..players)
        .map(|i| h.signals.iter().map(|m| m[i]).collect())
        .collect();
    for k in 0..h.profiles.len() {
        for (i, own_signals) in own.iter().enumerate() {
            let obs = Observation {
                player: i,
                states: &h.states[..=k],
                signals: &own_signals[..=k],
                profiles: &h.profiles[..k],
            };
            let dist = profile.strategy(i).distribution(game, &obs);
            let p = dist
                .iter()
                .find(|(a, _)| *a == decomposed[k][i])
                .map(|(_, p)| p.clone())
                .unwrap_or_else(Rational::zero);
            prob *= p;
        }
        prob *= game.prob(h.states[k], &h.profiles[k], h.states[k + 1])?;
        match device.emit(x, &h.signals[k + 1]) {
            Some((p, next)) => {
                prob *= p;
                x = next;
            }
            None => return Ok(rational::zero()),
        }
        if prob.is_zero() {
            return Ok(prob);
        }
    }
    Ok(prob)
}

/// Positive-probability move of a stationary profile in the product chain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Move {
    /// Union step of the chosen profile.
    pub step: Step,
    pub target: usize,
    /// The move completes the process and restarts it.
    pub restart: bool,
}

/// Game state paired with a device state, with the positive-probability
/// moves of a stationary profile.
#[derive(Clone, Debug)]
pub struct ProductChain {
    pub states: Vec<(usize, usize)>,
    index: HashMap<(usize, usize), usize>,
    pub chain: MarkovChain,
    pub moves: Vec<Vec<Move>>,
}

impl ProductChain {
    /// Product states reachable from `(root, device start)` for each root.
    pub fn build(
        game: &StochasticGame,
        device: &CorrelationDevice,
        profile: &StrategyProfile,
        roots: &[usize],
    ) -> Result<ProductChain> {
        profile.check_shape(game, device)?;
        for i in 0..game.num_players() {
            profile.stationary(game, i)?;
        }
        let mut states = Vec::new();
        let mut index = HashMap::new();
        let mut queue = VecDeque::new();
        for &r in roots {
            let key = (r, device.start());
            if let std::collections::hash_map::Entry::Vacant(e) = index.entry(key) {
                e.insert(states.len());
                states.push(key);
                queue.push_back(key);
            }
        }
        let mut rows: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); states.len()];
        let mut rewards = vec![vec![rational::zero(); game.num_players()]; states.len()];
        let mut moves: Vec<Vec<Move>> = vec![Vec::new(); states.len()];
        while let Some((s, x)) = queue.pop_front() {
            let u = index[&(s, x)];
            let mut row: Vec<(usize, Rational)> = Vec::new();
            let mut reward = vec![rational::zero(); game.num_players()];
            let mut mv: Vec<Move> = Vec::new();
            for e in device.emissions(x) {
                for (step, p_step) in profile.joint(game, s, &e.signals)? {
                    let outcome = game.outcome(s, &step)?;
                    let weight = &e.prob * &p_step;
                    for (r, acc) in reward.iter_mut().enumerate() {
                        *acc += &weight * &outcome.reward[r];
                    }
                    for (s2, q) in &outcome.next {
                        let key = (*s2, e.next);
                        let v = match index.get(&key) {
                            Some(&v) => v,
                            None => {
                                let v = states.len();
                                index.insert(key, v);
                                states.push(key);
                                queue.push_back(key);
                                rows.push(Vec::new());
                                rewards.push(Vec::new());
                                moves.push(Vec::new());
                                v
                            }
                        };
                        let mass = &weight * q;
                        match row.iter_mut().find(|(t, _)| *t == v) {
                            Some((_, acc)) => *acc += mass,
                            None => row.push((v, mass)),
                        }
                        let m = Move {
                            step: step.clone(),
                            target: v,
                            restart: *s2 == game.initial() && !outcome.restarted.is_zero(),
                        };
                        if !mv.contains(&m) {
                            mv.push(m);
                        }
                    }
                }
            }
            row.sort_by_key(|(t, _)| *t);
            rows[u] = row;
            rewards[u] = reward;
            moves[u] = mv;
        }
        Ok(ProductChain {
            states,
            index,
            chain: MarkovChain { rows, rewards },
            moves,
        })
    }

    pub fn index_of(&self, state: usize, device_state: usize) -> Option<usize> {
        self.index.get(&(state, device_state)).copied()
    }
}

/// Mean expected payoff `φ̄_n` of every player from `start`, by forward
/// dynamic programming over the product of game and device states.
pub fn mean_expected_payoff(
    game: &StochasticGame,
    device: &CorrelationDevice,
    start: usize,
    profile: &StrategyProfile,
    stages: usize,
) -> Result<Vec<Rational>> {
    if stages == 0 {
        return Err(Error::InvalidArgument(
            "stage count must be at least 1".into(),
        ));
    }
    let pc = ProductChain::build(game, device, profile, &[start])?;
    let chain = &pc.chain;
    let mut dist = vec![rational::zero(); chain.len()];
    dist[0] = rational::one();
    let mut total = vec![rational::zero(); game.num_players()];
    for stage in 0..stages {
        for (u, p) in dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (acc, r) in total.iter_mut().zip(&chain.rewards[u]) {
                *acc += p * r;
            }
        }
        if stage + 1 == stages {
            break;
        }
        let mut next = vec![rational::zero(); chain.len()];
        for (u, p) in dist.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            for (v, q) in &chain.rows[u] {
                next[*v] += p * q;
            }
        }
        dist = next;
    }
    let n = rational::int(stages as i64);
    Ok(total.into_iter().map(|t| t / &n).collect())
}

/// Limit of the mean expected payoff from the game's initial state.
pub fn longrun_average_payoff(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
) -> Result<Vec<Rational>> {
    longrun_average_payoff_from(game, device, profile, game.initial())
}

pub fn longrun_average_payoff_from(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    start: usize,
) -> Result<Vec<Rational>> {
    let pc = ProductChain::build(game, device, profile, &[start])?;
    let analysis = chain::analyze(&pc.chain)?;
    Ok(analysis.gain[0].clone())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationEstimate {
    pub mean: Vec<f64>,
    /// `None` with a single trial.
    pub std_error: Vec<Option<f64>>,
    pub stages: usize,
    pub trials: usize,
    pub seed: u64,
}

/// Per-player cumulative sampling tables, one per (state, own signal).
enum Sampler<'a> {
    Table(Vec<Vec<Vec<(f64, Action)>>>),
    Adaptive(&'a dyn AdaptiveStrategy),
}

fn cumulative<T: Copy>(items: impl IntoIterator<Item = (T, f64)>) -> Vec<(f64, T)> {
    let mut acc = 0.0;
    let mut out: Vec<(f64, T)> = items
        .into_iter()
        .map(|(x, p)| {
            acc += p;
            (acc, x)
        })
        .collect();
    if let Some(last) = out.last_mut() {
        last.0 = f64::INFINITY;
    }
    out
}

fn draw<T: Copy>(table: &[(f64, T)], rng: &mut impl Rng) -> T {
    let u: f64 = rng.random();
    let k = table.partition_point(|(c, _)| *c <= u);
    table[k.min(table.len() - 1)].1
}

/// One sampled conflict resolution: successor state and realised rewards.
type Resolution = Vec<(f64, (usize, usize))>;

struct Resolver<'g> {
    game: &'g StochasticGame,
    class_of: Vec<usize>,
    cache: HashMap<(usize, Step), Resolution>,
    rewards: Vec<Vec<f64>>,
}

impl<'g> Resolver<'g> {
    fn new(game: &'g StochasticGame) -> Self {
        let mut class_of = vec![0; game.net().num_transitions()];
        for (k, class) in game.conflict_classes().iter().enumerate() {
            for t in class {
                class_of[t.0] = k;
            }
        }
        Resolver {
            game,
            class_of,
            cache: HashMap::new(),
            rewards: Vec::new(),
        }
    }

    /// Fair dice per conflict class, then firing in the net.
    fn table(&mut self, state: usize, step: &Step) -> Result<&Resolution> {
        if !self.cache.contains_key(&(state, step.clone())) {
            let game = self.game;
            let mut groups: Vec<Vec<petri::TransitionId>> = Vec::new();
            let mut keys: Vec<usize> = Vec::new();
            for t in step.transitions() {
                let k = self.class_of[t.0];
                match keys.iter().position(|&x| x == k) {
                    Some(j) => groups[j].push(t),
                    None => {
                        keys.push(k);
                        groups.push(vec![t]);
                    }
                }
            }
            let weight: f64 = groups.iter().map(|g| 1.0 / g.len() as f64).product();
            let choices: Vec<Step> = if groups.is_empty() {
                vec![Step::idle()]
            } else {
                groups
                    .iter()
                    .map(|g| g.iter().copied())
                    .multi_cartesian_product()
                    .map(Step::new)
                    .collect()
            };
            let marking = &game.states()[state];
            let roles = game.annotated_net().roles().len();
            let mut entries = Vec::new();
            for sub in choices {
                if !petri::step_enabled(game.net(), marking, &sub) {
                    continue;
                }
                let next = game.successor_state(&petri::fire_step(game.net(), marking, &sub)?)?;
                let mut r = vec![0.0; game.num_players()];
                for (role, v) in r.iter_mut().enumerate().take(roles) {
                    *v = sub
                        .transitions()
                        .map(|t| to_f64(&game.annotated_net().utility(role, t)))
                        .sum();
                }
                self.rewards.push(r);
                entries.push(((next, self.rewards.len() - 1), weight));
            }
            if entries.is_empty() {
                return Err(Error::InvalidStrategy(format!(
                    "profile {} is not admissible at {}",
                    game.net().step_label(step),
                    game.state_label(state)
                )));
            }
            self.cache
                .insert((state, step.clone()), cumulative(entries));
        }
        Ok(&self.cache[&(state, step.clone())])
    }
}

/// Monte Carlo estimate of `φ̄_n`: every trial samples signals, actions and
/// conflict resolutions for `stages` stages and records each player's
/// average realised utility. Trial `k` uses the ChaCha8 stream `k` of
/// `seed`, so results do not depend on thread scheduling.
pub fn simulate(
    game: &StochasticGame,
    device: &CorrelationDevice,
    start: usize,
    profile: &StrategyProfile,
    stages: usize,
    trials: usize,
    seed: u64,
) -> Result<SimulationEstimate> {
    if stages == 0 || trials == 0 {
        return Err(Error::InvalidArgument(
            "stages and trials must be at least 1".into(),
        ));
    }
    if start >= game.num_states() {
        return Err(Error::UnknownState(format!("#{start}")));
    }
    profile.check_shape(game, device)?;
    let players = game.num_players();
    let samplers: Vec<Sampler> = (0..players)
        .map(|i| match profile.strategy(i) {
            Strategy::Stationary(s) => Sampler::Table(
                (0..game.num_states())
                    .map(|st| {
                        (0..device.alphabet(i).len())
                            .map(|m| cumulative(s.dist(st, m).iter().map(|(a, p)| (*a, to_f64(p)))))
                            .collect()
                    })
                    .collect(),
            ),
            Strategy::Adaptive(a) => Sampler::Adaptive(a.as_ref()),
        })
        .collect();
    let adaptive = samplers.iter().any(|s| matches!(s, Sampler::Adaptive(_)));
    let emissions: Vec<Vec<(f64, usize)>> = (0..device.num_states())
        .map(|x| {
            cumulative(
                device
                    .emissions(x)
                    .iter()
                    .enumerate()
                    .map(|(k, e)| (k, to_f64(&e.prob))),
            )
        })
        .collect();

    let chunk = 256;
    let chunks: Vec<Result<Vec<Vec<f64>>>> = (0..trials.div_ceil(chunk))
        .into_par_iter()
        .map(|c| {
            let mut resolver = Resolver::new(game);
            let mut out = Vec::new();
            for trial in c * chunk..((c + 1) * chunk).min(trials) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(trial as u64);
                let mut totals = vec![0.0; players];
                let (mut s, mut x) = (start, device.start());
                let mut hist_states = Vec::new();
                let mut hist_signals: Vec<Vec<usize>> = vec![Vec::new(); players];
                let mut hist_profiles = Vec::new();
                for _ in 0..stages {
                    let e = &device.emissions(x)[draw(&emissions[x], &mut rng)];
                    if adaptive {
                        hist_states.push(s);
                        for (i, h) in hist_signals.iter_mut().enumerate() {
                            h.push(e.signals[i]);
                        }
                    }
                    let mut step = Step::idle();
                    for (i, sampler) in samplers.iter().enumerate() {
                        let action = match sampler {
                            Sampler::Table(t) => draw(&t[s][e.signals[i]], &mut rng),
                            Sampler::Adaptive(a) => {
                                let obs = Observation {
                                    player: i,
                                    states: &hist_states,
                                    signals: &hist_signals[i],
                                    profiles: &hist_profiles,
                                };
                                let dist: Vec<(Action, f64)> = a
                                    .distribution(game, &obs)
                                    .iter()
                                    .map(|(a, p)| (*a, to_f64(p)))
                                    .collect();
                                draw(&cumulative(dist), &mut rng)
                            }
                        };
                        if !game.available(s, i).contains(&action) {
                            return Err(Error::InvalidStrategy(format!(
                                "`{}` chose an unavailable action at {}",
                                game.player_name(i),
                                game.state_label(s)
                            )));
                        }
                        if let Action::Fire(t) = action {
                            step.insert(t);
                        }
                    }
                    let (next, r) = draw(resolver.table(s, &step)?, &mut rng);
                    for (acc, v) in totals.iter_mut().zip(&resolver.rewards[r]) {
                        *acc += v;
                    }
                    if adaptive {
                        hist_profiles.push(step);
                    }
                    s = next;
                    x = e.next;
                }
                out.push(totals.into_iter().map(|t| t / stages as f64).collect());
            }
            Ok(out)
        })
        .collect();
    let mut samples: Vec<Vec<f64>> = Vec::with_capacity(trials);
    for c in chunks {
        samples.extend(c?);
    }
    let n = trials as f64;
    let mean: Vec<f64> = (0..players)
        .map(|i| samples.iter().map(|v| v[i]).sum::<f64>() / n)
        .collect();
    let std_error = (0..players)
        .map(|i| {
            (trials > 1).then(|| {
                let var = samples
                    .iter()
                    .map(|v| (v[i] - mean[i]).powi(2))
                    .sum::<f64>()
                    / (n - 1.0);
                (var / n).sqrt()
            })
        })
        .collect();
    Ok(SimulationEstimate {
        mean,
        std_error,
        stages,
        trials,
        seed,
    })
}
