//! Best responses, ε-equilibria, eventual positivity, incentive-alignment
//! witnesses, a bounded witness search and the soundness bridge.
//!
//! All verdicts about the unbounded stage quantifiers are decided on the
//! finite product of game and device states:
//!
//! * deviation gains compare the exact long-run average payoff of the
//!   profile with the optimal gain of the deviator's average-reward MDP;
//!   Cesàro averages of finite chains converge, so a gain `≤ ε` in the limit
//!   is exactly what the stage threshold `n0` needs;
//! * "arbitrarily late, with positive probability" becomes a cycle condition
//!   on the support graph: an edge can be taken at arbitrarily late stages
//!   from a start state `u` iff its source is reachable from a cycle of the
//!   part of the graph reachable from `u`.

use std::collections::VecDeque;
use std::fmt;

use itertools::Itertools;
use num_traits::{Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::game::{Action, GameKind, StochasticGame};
use crate::mdp::{self, Choice, Mdp};
use crate::petri::{structural_checks, AnnotatedNet, TransitionId, WorkflowShape};
use crate::rational::{self, to_f64, Rational};
use crate::statespace::{self, SoundnessReport};
use crate::strategy::{
    self, CorrelationDevice, ProductChain, Rule, SimulationEstimate, StationaryStrategy, Strategy,
    StrategyProfile,
};

/// Default ε: one millionth, so in practice "the exact gain is zero".
pub fn default_epsilon() -> Rational {
    rational::ratio(1, 1_000_000)
}

/// Default number of candidate profiles tried by [`search_alignment`].
pub const DEFAULT_EFFORT: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationGain {
    pub player: usize,
    pub best_response_value: Rational,
    pub profile_value: Rational,
    pub gain: Rational,
    /// Stationary best response, when one exists in terms of the player's
    /// own signals.
    pub best_response: Option<StationaryStrategy>,
}

/// The deviator's decision process over (game state, device state, emitted
/// signal vector).
struct DeviationModel {
    nodes: Vec<(usize, usize, usize)>,
    actions: Vec<Vec<Action>>,
    mdp: Mdp,
    /// Initial distribution over nodes.
    start: Vec<(usize, Rational)>,
}

fn others_joint(
    game: &StochasticGame,
    profile: &StrategyProfile,
    player: usize,
    state: usize,
    signals: &[usize],
) -> Result<Vec<(Vec<Action>, Rational)>> {
    let dists = (0..game.num_players())
        .map(|j| {
            if j == player {
                Ok(vec![(Action::Idle, rational::one())])
            } else {
                Ok(profile.stationary(game, j)?.dist(state, signals[j]).clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dists
        .iter()
        .map(|d| d.iter())
        .multi_cartesian_product()
        .map(|combo| {
            let p = combo.iter().fold(rational::one(), |acc, (_, q)| acc * q);
            (combo.into_iter().map(|(a, _)| *a).collect(), p)
        })
        .collect())
}

fn deviation_model(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    player: usize,
    start: usize,
) -> Result<DeviationModel> {
    let mut nodes: Vec<(usize, usize, usize)> = Vec::new();
    let mut index = std::collections::HashMap::new();
    let mut queue = VecDeque::new();
    let mut intern = |key: (usize, usize, usize),
                      nodes: &mut Vec<(usize, usize, usize)>,
                      queue: &mut VecDeque<usize>|
     -> usize {
        *index.entry(key).or_insert_with(|| {
            nodes.push(key);
            queue.push_back(nodes.len() - 1);
            nodes.len() - 1
        })
    };
    let x0 = device.start();
    let start_dist: Vec<(usize, Rational)> = device
        .emissions(x0)
        .iter()
        .enumerate()
        .map(|(k, e)| {
            (
                intern((start, x0, k), &mut nodes, &mut queue),
                e.prob.clone(),
            )
        })
        .collect();
    let mut choices: Vec<Vec<Choice>> = Vec::new();
    let mut actions: Vec<Vec<Action>> = Vec::new();
    while let Some(u) = queue.pop_front() {
        let (s, x, k) = nodes[u];
        let e = &device.emissions(x)[k];
        let others = others_joint(game, profile, player, s, &e.signals)?;
        let avail = game.available(s, player).to_vec();
        let mut per_action = Vec::with_capacity(avail.len());
        for &a in &avail {
            let mut reward = rational::zero();
            let mut next: Vec<(usize, Rational)> = Vec::new();
            for (acts, p) in &others {
                let mut acts = acts.clone();
                acts[player] = a;
                let outcome = game.outcome(s, &game.profile_step(&acts))?;
                reward += p * &outcome.reward[player];
                for (s2, q) in &outcome.next {
                    for (k2, e2) in device.emissions(e.next).iter().enumerate() {
                        let v = intern((*s2, e.next, k2), &mut nodes, &mut queue);
                        let mass = p * q * &e2.prob;
                        match next.iter_mut().find(|(t, _)| *t == v) {
                            Some((_, acc)) => *acc += mass,
                            None => next.push((v, mass)),
                        }
                    }
                }
            }
            next.sort_by_key(|(t, _)| *t);
            per_action.push(Choice { reward, next });
        }
        if choices.len() <= u {
            choices.resize(u + 1, Vec::new());
            actions.resize(u + 1, Vec::new());
        }
        choices[u] = per_action;
        actions[u] = avail;
    }
    Ok(DeviationModel {
        nodes,
        actions,
        mdp: Mdp { choices },
        start: start_dist,
    })
}

fn check_observability(
    game: &StochasticGame,
    device: &CorrelationDevice,
    player: usize,
) -> Result<()> {
    if device.observes_all(player) {
        Ok(())
    } else {
        Err(Error::UnsupportedDevice(
            game.player_name(player).to_string(),
        ))
    }
}

/// Exact gain of the best unilateral deviation of `player` from the profile,
/// in long-run average payoff from the game's initial state.
///
/// The deviator is assumed to see the whole signal vector; devices where the
/// player's own signal does not determine it are rejected with
/// [`Error::UnsupportedDevice`].
pub fn best_response_gain(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    player: usize,
) -> Result<DeviationGain> {
    let profile_value =
        strategy::longrun_average_payoff_from(game, device, profile, game.initial())?[player]
            .clone();
    if player == game.nature() {
        return Ok(DeviationGain {
            player,
            best_response_value: profile_value.clone(),
            profile_value,
            gain: rational::zero(),
            best_response: None,
        });
    }
    check_observability(game, device, player)?;
    let own = profile.stationary(game, player)?;
    let model = deviation_model(game, device, profile, player, game.initial())?;
    let initial_policy = model
        .nodes
        .iter()
        .zip(&model.actions)
        .map(|(&(s, x, k), acts)| {
            let signal = device.emissions(x)[k].signals[player];
            let dist = own.dist(s, signal);
            let (best, _) = dist
                .iter()
                .fold(None::<(Action, &Rational)>, |acc, (a, p)| match acc {
                    Some((_, q)) if q >= p => acc,
                    _ => Some((*a, p)),
                })
                .expect("non-empty distribution");
            acts.iter().position(|a| *a == best).expect("available")
        })
        .collect();
    let solution = mdp::solve_average_reward(&model.mdp, initial_policy)?;
    let best_response_value: Rational = model
        .start
        .iter()
        .map(|(u, p)| p * &solution.gain[*u])
        .sum();

    // project onto (state, own signal); give up when device states disagree
    let mut chosen: std::collections::HashMap<(usize, usize), Action> = Default::default();
    let mut consistent = true;
    for (u, &(s, x, k)) in model.nodes.iter().enumerate() {
        let signal = device.emissions(x)[k].signals[player];
        let a = model.actions[u][solution.policy[u]];
        if *chosen.entry((s, signal)).or_insert(a) != a {
            consistent = false;
        }
    }
    let best_response = consistent
        .then(|| {
            StationaryStrategy::from_fn(game, device, player, |s, m, _| match chosen.get(&(s, m)) {
                Some(&a) => vec![(a, rational::one())],
                None => own.dist(s, m).clone(),
            })
        })
        .transpose()?;
    let gain = &best_response_value - &profile_value;
    debug_assert!(!gain.is_negative(), "best response below the profile");
    Ok(DeviationGain {
        player,
        best_response_value,
        profile_value,
        gain,
        best_response,
    })
}

/// Simulation budget of the heuristic deviation estimator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SimulationBudget {
    pub stages: usize,
    pub trials: usize,
    pub seed: u64,
}

impl Default for SimulationBudget {
    fn default() -> Self {
        SimulationBudget {
            stages: 200,
            trials: 400,
            seed: 0,
        }
    }
}

/// Lower bound on a deviation gain obtained by simulating a finite library
/// of deviations. Always heuristic.
#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicGain {
    pub player: usize,
    pub profile_estimate: f64,
    pub best_deviation_estimate: f64,
    pub gain: f64,
    pub std_error: Option<f64>,
    pub best_deviation: Option<String>,
}

/// Signal-ignoring rules plus, for every signal `k`, "behave as if `k` had
/// been received".
pub fn deviation_library(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    player: usize,
) -> Vec<(String, Strategy)> {
    let mut lib: Vec<(String, Strategy)> = [
        ("always idle", Rule::Idle),
        ("first transition", Rule::FirstAct),
        ("uniform transition", Rule::Act),
        ("uniform action", Rule::Uniform),
    ]
    .into_iter()
    .map(|(name, rule)| {
        let s = StationaryStrategy::rule(game, device, player, rule);
        (name.to_string(), Strategy::Stationary(s))
    })
    .collect();
    if let Ok(own) = profile.stationary(game, player) {
        for (k, name) in device.alphabet(player).iter().enumerate() {
            let fixed =
                StationaryStrategy::from_fn(game, device, player, |s, _, _| own.dist(s, k).clone())
                    .expect("rows of a valid strategy");
            lib.push((format!("as if `{name}`"), Strategy::Stationary(fixed)));
        }
    }
    lib
}

fn estimate(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    budget: &SimulationBudget,
) -> Result<SimulationEstimate> {
    strategy::simulate(
        game,
        device,
        game.initial(),
        profile,
        budget.stages,
        budget.trials,
        budget.seed,
    )
}

/// Best simulated improvement over the profile among `library`; 0 when
/// nothing improves or the library is empty.
pub fn estimate_deviation_gain(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    player: usize,
    library: &[(String, Strategy)],
    budget: &SimulationBudget,
) -> Result<HeuristicGain> {
    let base = estimate(game, device, profile, budget)?;
    let mut result = HeuristicGain {
        player,
        profile_estimate: base.mean[player],
        best_deviation_estimate: base.mean[player],
        gain: 0.0,
        std_error: None,
        best_deviation: None,
    };
    for (name, s) in library {
        let deviated = profile.clone().with(player, s.clone());
        let est = estimate(game, device, &deviated, budget)?;
        let gain = est.mean[player] - base.mean[player];
        if gain > result.gain {
            result.gain = gain;
            result.best_deviation_estimate = est.mean[player];
            result.best_deviation = Some(name.clone());
            result.std_error = match (est.std_error[player], base.std_error[player]) {
                (Some(a), Some(b)) => Some((a * a + b * b).sqrt()),
                _ => None,
            };
        }
    }
    Ok(result)
}

#[derive(Clone, Debug, PartialEq)]
pub enum PlayerGain {
    Exact(DeviationGain),
    Estimated(HeuristicGain),
}

impl PlayerGain {
    pub fn player(&self) -> usize {
        match self {
            PlayerGain::Exact(g) => g.player,
            PlayerGain::Estimated(g) => g.player,
        }
    }

    pub fn within(&self, epsilon: &Rational) -> bool {
        match self {
            PlayerGain::Exact(g) => &g.gain <= epsilon,
            PlayerGain::Estimated(g) => g.gain <= to_f64(epsilon),
        }
    }

    pub fn exact(&self) -> Option<&DeviationGain> {
        match self {
            PlayerGain::Exact(g) => Some(g),
            PlayerGain::Estimated(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumCheck {
    pub epsilon: Rational,
    pub holds: bool,
    /// Some gain is a simulated lower bound, so `holds` is not a proof.
    pub heuristic: bool,
    pub gains: Vec<PlayerGain>,
}

/// Whether no player gains more than `ε` by deviating unilaterally.
pub fn verify_epsilon_equilibrium(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    epsilon: &Rational,
) -> Result<EquilibriumCheck> {
    verify_epsilon_equilibrium_with(game, device, profile, epsilon, None)
}

/// As [`verify_epsilon_equilibrium`]; players that cannot be solved exactly
/// because of private signals fall back to [`estimate_deviation_gain`] when
/// a budget is given.
pub fn verify_epsilon_equilibrium_with(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    epsilon: &Rational,
    fallback: Option<&SimulationBudget>,
) -> Result<EquilibriumCheck> {
    let gains = (0..game.num_players())
        .into_par_iter()
        .map(|i| {
            if i != game.nature() && !device.observes_all(i) {
                if let Some(budget) = fallback {
                    let lib = deviation_library(game, device, profile, i);
                    return estimate_deviation_gain(game, device, profile, i, &lib, budget)
                        .map(PlayerGain::Estimated);
                }
            }
            best_response_gain(game, device, profile, i).map(PlayerGain::Exact)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EquilibriumCheck {
        epsilon: epsilon.clone(),
        holds: gains.iter().all(|g| g.within(epsilon)),
        heuristic: gains.iter().any(|g| matches!(g, PlayerGain::Estimated(_))),
        gains,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Positivity {
    pub positive: bool,
    /// Long-run payoff of every player, nature last.
    pub payoff: Vec<Rational>,
}

/// Whether every role's long-run average payoff is strictly positive.
pub fn eventually_positive(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
) -> Result<Positivity> {
    let payoff = strategy::longrun_average_payoff(game, device, profile)?;
    let positive = payoff[..game.nature()].iter().all(Signed::is_positive);
    Ok(Positivity { positive, payoff })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    ProperCompletion,
    FullLiveness,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::ProperCompletion => "proper-completion",
            Mode::FullLiveness => "full-liveness",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Mode> {
        match s {
            "proper-completion" => Ok(Mode::ProperCompletion),
            "full-liveness" => Ok(Mode::FullLiveness),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Defect {
    NotEquilibrium {
        player: String,
        gain: String,
    },
    NotPositive {
        player: String,
        payoff: String,
    },
    /// No restart can happen at arbitrarily late stages.
    RestartUnsupported,
    /// The transition cannot fire at arbitrarily late stages from these
    /// starting states.
    TransitionUnsupported {
        transition: String,
        from: Vec<String>,
    },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::NotEquilibrium { player, gain } => {
                write!(f, "player `{player}` gains {gain} by deviating")
            }
            Defect::NotPositive { player, payoff } => {
                write!(f, "long-run payoff of `{player}` is {payoff}, not positive")
            }
            Defect::RestartUnsupported => {
                f.write_str("no restart is possible at arbitrarily late stages")
            }
            Defect::TransitionUnsupported { transition, from } => write!(
                f,
                "transition `{transition}` unsupported from {}",
                from.join(", ")
            ),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub label: String,
    pub device: CorrelationDevice,
    pub profile: StrategyProfile,
}

#[derive(Clone, Debug)]
pub struct AlignmentVerdict {
    pub mode: Mode,
    pub aligned: bool,
    pub heuristic: bool,
    pub equilibrium: EquilibriumCheck,
    pub positivity: Positivity,
    /// Present exactly when `aligned`.
    pub witness: Option<Witness>,
    pub failures: Vec<Defect>,
}

fn reach(pc: &ProductChain, seeds: impl IntoIterator<Item = usize>) -> Vec<bool> {
    let mut seen = vec![false; pc.states.len()];
    let mut queue: VecDeque<usize> = seeds.into_iter().collect();
    for &u in &queue {
        seen[u] = true;
    }
    while let Some(u) = queue.pop_front() {
        for (v, _) in &pc.chain.rows[u] {
            if !seen[*v] {
                seen[*v] = true;
                queue.push_back(*v);
            }
        }
    }
    seen
}

/// Nodes lying on some cycle of the support graph.
fn on_cycle(pc: &ProductChain) -> Vec<bool> {
    let mut cyclic = vec![false; pc.states.len()];
    for comp in pc.chain.components() {
        let looped = comp.len() > 1 || pc.chain.rows[comp[0]].iter().any(|(v, _)| *v == comp[0]);
        if looped {
            for u in comp {
                cyclic[u] = true;
            }
        }
    }
    cyclic
}

/// `R∞(u)`: nodes reachable from a cycle among the nodes reachable from `u`.
/// Reachable sets are closed under successors, so every cycle touching them
/// lies inside.
fn late_reachable(pc: &ProductChain, cyclic: &[bool], root: usize) -> Vec<bool> {
    let from_root = reach(pc, [root]);
    reach(
        pc,
        (0..pc.states.len()).filter(|&u| from_root[u] && cyclic[u]),
    )
}

fn support_defects(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    mode: Mode,
) -> Result<Vec<Defect>> {
    match mode {
        Mode::ProperCompletion => {
            let pc = ProductChain::build(game, device, profile, &[game.initial()])?;
            let late = late_reachable(&pc, &on_cycle(&pc), 0);
            let initial = game.initial();
            let restarts = pc.moves.iter().enumerate().any(|(u, moves)| {
                late[u]
                    && moves.iter().any(|m| {
                        m.restart || (pc.states[m.target].0 == initial && pc.states[u].0 != initial)
                    })
            });
            Ok(if restarts {
                vec![]
            } else {
                vec![Defect::RestartUnsupported]
            })
        }
        Mode::FullLiveness => {
            let roots: Vec<usize> = (0..game.num_states()).collect();
            let pc = ProductChain::build(game, device, profile, &roots)?;
            let cyclic = on_cycle(&pc);
            let net = game.net();
            let mut unsupported: Vec<Vec<String>> = vec![Vec::new(); net.num_transitions()];
            for s in roots {
                let root = pc.index_of(s, device.start()).expect("root");
                let late = late_reachable(&pc, &cyclic, root);
                let mut seen = vec![false; net.num_transitions()];
                for (u, moves) in pc.moves.iter().enumerate() {
                    if late[u] {
                        for m in moves {
                            for t in m.step.transitions() {
                                seen[t.0] = true;
                            }
                        }
                    }
                }
                for (t, ok) in seen.into_iter().enumerate() {
                    if !ok {
                        unsupported[t].push(game.state_label(s));
                    }
                }
            }
            Ok(unsupported
                .into_iter()
                .enumerate()
                .filter(|(_, from)| !from.is_empty())
                .map(|(t, from)| Defect::TransitionUnsupported {
                    transition: net.transition_name(TransitionId(t)).to_string(),
                    from,
                })
                .collect())
        }
    }
}

/// Checks that `(device, profile)` witnesses incentive alignment: an
/// ε-equilibrium, eventually positive for every role, under which restarts
/// (proper completion) or every transition from every state (full liveness)
/// stay possible at arbitrarily late stages.
pub fn check_alignment_witness(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    mode: Mode,
    epsilon: &Rational,
) -> Result<AlignmentVerdict> {
    check_alignment_witness_with(game, device, profile, mode, epsilon, None, "supplied")
}

pub fn check_alignment_witness_with(
    game: &StochasticGame,
    device: &CorrelationDevice,
    profile: &StrategyProfile,
    mode: Mode,
    epsilon: &Rational,
    fallback: Option<&SimulationBudget>,
    label: &str,
) -> Result<AlignmentVerdict> {
    let equilibrium = verify_epsilon_equilibrium_with(game, device, profile, epsilon, fallback)?;
    let positivity = eventually_positive(game, device, profile)?;
    let mut failures = Vec::new();
    for g in &equilibrium.gains {
        if !g.within(epsilon) {
            let gain = match g {
                PlayerGain::Exact(d) => d.gain.to_string(),
                PlayerGain::Estimated(h) => format!("~{:.6}", h.gain),
            };
            failures.push(Defect::NotEquilibrium {
                player: game.player_name(g.player()).to_string(),
                gain,
            });
        }
    }
    for (i, p) in positivity.payoff[..game.nature()].iter().enumerate() {
        if !p.is_positive() {
            failures.push(Defect::NotPositive {
                player: game.player_name(i).to_string(),
                payoff: p.to_string(),
            });
        }
    }
    failures.extend(support_defects(game, device, profile, mode)?);
    let aligned = failures.is_empty();
    Ok(AlignmentVerdict {
        mode,
        aligned,
        heuristic: equilibrium.heuristic,
        witness: aligned.then(|| Witness {
            label: label.to_string(),
            device: device.clone(),
            profile: profile.clone(),
        }),
        equilibrium,
        positivity,
        failures,
    })
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum SearchOutcome {
    /// A verified witness.
    Found(AlignmentVerdict),
    /// No witness among the candidates tried; says nothing about alignment.
    Exhausted {
        tried: Vec<String>,
        last: Option<Box<AlignmentVerdict>>,
    },
    /// Not aligned: the net falls under the soundness characterization and
    /// is unsound.
    Refuted(Box<BridgeReport>),
}

/// Bounded search for an alignment witness with the trivial device.
///
/// Candidates, in order: roles acting uniformly over enabled transitions,
/// roles always taking their first enabled transition, then best-response
/// rounds seeded by each of these, where the player with the largest gain
/// above `ε` switches to an exact best response. `effort` caps the number of
/// candidates checked.
pub fn search_alignment(
    game: &StochasticGame,
    mode: Mode,
    epsilon: &Rational,
    effort: usize,
) -> Result<SearchOutcome> {
    let device = CorrelationDevice::trivial(game.num_players());
    let seeds = [
        ("uniform", StrategyProfile::acting(game, &device)),
        (
            "first-transition",
            StrategyProfile::from_rule(game, &device, Rule::FirstAct),
        ),
    ];
    let mut tried: Vec<String> = Vec::new();
    let mut last = None;
    let mut verdicts: Vec<AlignmentVerdict> = Vec::new();
    for (label, profile) in &seeds {
        if tried.len() >= effort {
            break;
        }
        let v = check_alignment_witness_with(game, &device, profile, mode, epsilon, None, label)?;
        tried.push(label.to_string());
        if v.aligned {
            return Ok(SearchOutcome::Found(v));
        }
        verdicts.push(v);
    }
    for ((seed, mut profile), mut verdict) in seeds.into_iter().zip(verdicts) {
        let mut round = 0;
        while tried.len() < effort {
            let worst = verdict
                .equilibrium
                .gains
                .iter()
                .filter_map(PlayerGain::exact)
                .filter(|g| g.gain > *epsilon && g.best_response.is_some())
                .max_by(|a, b| a.gain.cmp(&b.gain).then(b.player.cmp(&a.player)));
            let Some(worst) = worst else { break };
            let br = worst.best_response.clone().expect("filtered");
            profile = profile.with(worst.player, Strategy::Stationary(br));
            round += 1;
            let label = format!(
                "{seed}, best-response round {round} ({} switches)",
                game.player_name(worst.player)
            );
            verdict =
                check_alignment_witness_with(game, &device, &profile, mode, epsilon, None, &label)?;
            tried.push(label);
            if verdict.aligned {
                return Ok(SearchOutcome::Found(verdict));
            }
        }
        last = Some(Box::new(verdict));
    }
    if mode == Mode::FullLiveness && game.kind() == GameKind::Restart {
        if let Ok(bridge) =
            soundness_alignment_bridge(game.annotated_net(), statespace::DEFAULT_STATE_BOUND)
        {
            if !bridge.sound {
                return Ok(SearchOutcome::Refuted(Box::new(bridge)));
            }
        }
    }
    Ok(SearchOutcome::Exhausted { tried, last })
}

#[derive(Clone, Debug)]
pub struct BridgeReport {
    pub sound: bool,
    pub aligned_full_liveness: bool,
    /// `sound == aligned_full_liveness`; false signals an internal error.
    pub agree: bool,
    pub soundness: SoundnessReport,
    pub verdict: AlignmentVerdict,
}

/// Preconditions of the soundness characterization: one role owning every
/// transition with utility 1, an elementary workflow net started in `[i]`,
/// safe and extended free choice.
pub fn bridge_hypotheses(a: &AnnotatedNet, bound: usize) -> Result<WorkflowShape> {
    let net = a.net();
    let mut violated = Vec::new();
    if a.roles().len() != 1 {
        violated.push(format!(
            "expected exactly one role, found {}",
            a.roles().len()
        ));
    } else {
        for t in net.transitions() {
            if a.owner(t) != Some(0) {
                violated.push(format!(
                    "transition `{}` is not owned by `{}`",
                    net.transition_name(t),
                    a.roles()[0]
                ));
            }
            if a.utility(0, t) != rational::one() {
                violated.push(format!(
                    "utility of `{}` is {}, not 1",
                    net.transition_name(t),
                    a.utility(0, t)
                ));
            }
        }
    }
    let structure = structural_checks(a);
    if let Some((x, y)) = &structure.free_choice_violation {
        violated.push(format!("not extended free choice (`{x}`, `{y}`)"));
    }
    match &structure.workflow {
        None => violated.push(format!(
            "not an elementary workflow net: {}",
            structure.workflow_defect.clone().unwrap_or_default()
        )),
        Some(_) => {
            if !statespace::is_safe(a, bound)? {
                violated.push("not safe".to_string());
            }
        }
    }
    match structure.workflow {
        Some(shape) if violated.is_empty() => Ok(shape),
        _ => Err(Error::HypothesisViolated(violated)),
    }
}

/// Compares workflow soundness with full-liveness alignment of the restart
/// game, witnessed by every role acting uniformly over its enabled
/// transitions with the trivial device.
pub fn soundness_alignment_bridge(a: &AnnotatedNet, bound: usize) -> Result<BridgeReport> {
    let shape = bridge_hypotheses(a, bound)?;
    let soundness = statespace::check_soundness(a, &shape, bound)?;
    let ss = statespace::explore(a, bound)?;
    let base = crate::game::build_base_game(a, &ss)?;
    let restart = crate::game::build_restart_game(&base, a.initial())?;
    let device = CorrelationDevice::trivial(restart.num_players());
    let profile = StrategyProfile::acting(&restart, &device);
    let verdict = check_alignment_witness_with(
        &restart,
        &device,
        &profile,
        Mode::FullLiveness,
        &default_epsilon(),
        None,
        "uniform",
    )?;
    let aligned = verdict.aligned;
    Ok(BridgeReport {
        sound: soundness.sound,
        aligned_full_liveness: aligned,
        agree: soundness.sound == aligned,
        soundness,
        verdict,
    })
}

/// Whether a verdict's gains are all exactly zero, ignoring ε.
pub fn all_gains_zero(check: &EquilibriumCheck) -> bool {
    check
        .gains
        .iter()
        .all(|g| g.exact().is_some_and(|d| d.gain.is_zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::game::{build_base_game, build_restart_game};
    use crate::rational::{int, ratio};
    use crate::statespace::{explore, DEFAULT_STATE_BOUND};

    fn restart(a: &AnnotatedNet) -> StochasticGame {
        let base = build_base_game(a, &explore(a, DEFAULT_STATE_BOUND).unwrap()).unwrap();
        build_restart_game(&base, a.initial()).unwrap()
    }

    fn c_idles(g: &StochasticGame, d: &CorrelationDevice) -> StrategyProfile {
        StrategyProfile::acting(g, d).with_rule(g, d, 2, Rule::Idle)
    }

    #[test]
    fn gains_on_the_running_example() {
        let g = restart(&fixtures::n1());
        let d = CorrelationDevice::trivial(g.num_players());
        let all_act = StrategyProfile::acting(&g, &d);
        let c = best_response_gain(&g, &d, &all_act, 2).unwrap();
        assert_eq!(c.best_response_value, ratio(2, 3));
        assert_eq!(c.gain, ratio(1, 15));
        let check =
            verify_epsilon_equilibrium(&g, &d, &c_idles(&g, &d), &default_epsilon()).unwrap();
        assert!(check.holds && all_gains_zero(&check));
        let check = verify_epsilon_equilibrium(&g, &d, &all_act, &default_epsilon()).unwrap();
        assert!(!check.holds);
        assert!(
            verify_epsilon_equilibrium(&g, &d, &all_act, &ratio(1, 15))
                .unwrap()
                .holds
        );
    }

    #[test]
    fn idle_profile_has_no_profitable_deviation() {
        let g = restart(&fixtures::n1());
        let d = CorrelationDevice::trivial(g.num_players());
        let idle = StrategyProfile::idle(&g, &d);
        for i in 0..g.num_players() {
            assert_eq!(best_response_gain(&g, &d, &idle, i).unwrap().gain, int(0));
        }
    }

    #[test]
    fn alignment_of_the_running_example() {
        let g = restart(&fixtures::n1());
        let d = CorrelationDevice::trivial(g.num_players());
        let sigma = c_idles(&g, &d);
        let eps = default_epsilon();
        let pc = check_alignment_witness(&g, &d, &sigma, Mode::ProperCompletion, &eps).unwrap();
        assert!(pc.aligned, "{:?}", pc.failures);
        let fl = check_alignment_witness(&g, &d, &sigma, Mode::FullLiveness, &eps).unwrap();
        assert!(!fl.aligned);
        assert!(matches!(
            fl.failures.as_slice(),
            [Defect::TransitionUnsupported { transition, .. }] if transition == "t'"
        ));
    }

    #[test]
    fn search_reaches_c_idles() {
        let g = restart(&fixtures::n1());
        let SearchOutcome::Found(v) = search_alignment(
            &g,
            Mode::ProperCompletion,
            &default_epsilon(),
            DEFAULT_EFFORT,
        )
        .unwrap() else {
            panic!("no witness")
        };
        let w = v.witness.unwrap();
        let s = w.profile.stationary(&g, 2).unwrap();
        for st in 0..g.num_states() {
            assert_eq!(s.dist(st, 0), &vec![(Action::Idle, int(1))]);
        }
    }

    #[test]
    fn bridge_on_w1_and_w2() {
        let w1 = soundness_alignment_bridge(&fixtures::w1(), DEFAULT_STATE_BOUND).unwrap();
        assert!(w1.sound && w1.aligned_full_liveness && w1.agree);
        let w2 = soundness_alignment_bridge(&fixtures::w2(), DEFAULT_STATE_BOUND).unwrap();
        assert!(!w2.sound && !w2.aligned_full_liveness && w2.agree);
        let g = restart(&fixtures::w2());
        assert!(matches!(
            search_alignment(&g, Mode::FullLiveness, &default_epsilon(), DEFAULT_EFFORT).unwrap(),
            SearchOutcome::Refuted(_)
        ));
        assert!(matches!(
            soundness_alignment_bridge(&fixtures::n1(), DEFAULT_STATE_BOUND),
            Err(Error::HypothesisViolated(_))
        ));
    }

    #[test]
    fn private_signals_need_the_estimator() {
        let g = restart(&fixtures::alice_bob());
        let names = vec!["x".to_string(), "y".to_string()];
        let d = CorrelationDevice::iid(
            vec![names.clone(), names, vec![strategy::TOP.to_string()]],
            vec![(vec![0, 0, 0], ratio(1, 2)), (vec![0, 1, 0], ratio(1, 2))],
        )
        .unwrap();
        let sigma = StrategyProfile::acting(&g, &d);
        assert!(matches!(
            best_response_gain(&g, &d, &sigma, 0),
            Err(Error::UnsupportedDevice(ref p)) if p == "alice"
        ));
        let budget = SimulationBudget {
            stages: 20,
            trials: 50,
            seed: 3,
        };
        let check =
            verify_epsilon_equilibrium_with(&g, &d, &sigma, &default_epsilon(), Some(&budget))
                .unwrap();
        assert!(check.heuristic);
        let empty = estimate_deviation_gain(&g, &d, &sigma, 0, &[], &budget).unwrap();
        assert_eq!(empty.gain, 0.0);
    }
}
