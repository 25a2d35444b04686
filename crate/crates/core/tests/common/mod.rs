//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's chain analysis or solvers; the matrices of the running
//! example are written out by hand.
#![allow(dead_code)]

use num_traits::{One, Zero};
use petrigame::game::{build_base_game, build_restart_game, Action, StochasticGame};
use petrigame::petri::AnnotatedNet;
use petrigame::rational::{int, ratio, Rational};
use petrigame::statespace::explore;
use petrigame::strategy::{CorrelationDevice, StationaryStrategy, Strategy, StrategyProfile};

pub fn base(a: &AnnotatedNet) -> StochasticGame {
    build_base_game(a, &explore(a, 10_000).unwrap()).unwrap()
}

pub fn restart(a: &AnnotatedNet) -> StochasticGame {
    build_restart_game(&base(a), a.initial()).unwrap()
}

/// Stationary distribution of an irreducible chain by Gaussian elimination
/// on `π (P - I) = 0` with the last equation replaced by `Σ π = 1`.
pub fn stationary_distribution(p: &[Vec<Rational>]) -> Vec<Rational> {
    let n = p.len();
    // rows: equations, columns: unknowns π_0..π_{n-1}, then the constant
    let mut m: Vec<Vec<Rational>> = (0..n)
        .map(|j| {
            let mut row: Vec<Rational> = (0..n)
                .map(|i| {
                    let delta = if i == j {
                        Rational::one()
                    } else {
                        Rational::zero()
                    };
                    &p[i][j] - delta
                })
                .collect();
            row.push(Rational::zero());
            row
        })
        .collect();
    m[n - 1] = vec![Rational::one(); n + 1];
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !m[r][col].is_zero())
            .expect("irreducible chain");
        m.swap(col, pivot);
        let inv = Rational::one() / &m[col][col];
        for x in m[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    m.into_iter().map(|row| row[n].clone()).collect()
}

/// Long-run payoff of an irreducible reward chain.
pub fn irreducible_payoff(p: &[Vec<Rational>], rewards: &[Vec<Rational>]) -> Vec<Rational> {
    let pi = stationary_distribution(p);
    let players = rewards[0].len();
    (0..players)
        .map(|r| pi.iter().zip(rewards).map(|(x, row)| x * &row[r]).sum())
        .collect()
}

/// Restart game of the running example over the states `[p0], [p1], [p2]`
/// (the final `[p3]` folds back into `[p0]`), with rewards for `a, b, c, ⊥`.
///
/// Everyone acts: at `[p2]` the step `{t', t1}` flips a fair coin between
/// `t'` (back to `[p1]`, `c` earns 1) and `t1` (restart, `a` and `c` earn 2).
/// With `c` idling, `t1` fires for sure.
pub fn n1_restart_chain(c_idles: bool) -> (Vec<Vec<Rational>>, Vec<Vec<Rational>>) {
    let (z, o, h) = (int(0), int(1), ratio(1, 2));
    let p = if c_idles {
        vec![
            vec![z.clone(), o.clone(), z.clone()],
            vec![z.clone(), z.clone(), o.clone()],
            vec![o.clone(), z.clone(), z.clone()],
        ]
    } else {
        vec![
            vec![z.clone(), o.clone(), z.clone()],
            vec![z.clone(), z.clone(), o.clone()],
            vec![h.clone(), h.clone(), z.clone()],
        ]
    };
    let at_p2 = if c_idles {
        vec![int(2), int(0), int(2), int(0)]
    } else {
        vec![int(1), int(0), ratio(3, 2), int(0)]
    };
    let rewards = vec![
        vec![int(-1), int(0), int(0), int(0)],
        vec![int(0), int(1), int(0), int(0)],
        at_p2,
    ];
    (p, rewards)
}

/// Floating-point Cesàro average of a reward chain from `start` over
/// `stages` stages, by propagating the state distribution.
pub fn cesaro_f64(
    rows: &[Vec<(usize, f64)>],
    rewards: &[Vec<f64>],
    start: usize,
    stages: usize,
) -> Vec<f64> {
    let players = rewards[0].len();
    let mut dist = vec![0.0; rows.len()];
    dist[start] = 1.0;
    let mut total = vec![0.0; players];
    for _ in 0..stages {
        let mut next = vec![0.0; rows.len()];
        for (u, &p) in dist.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (acc, r) in total.iter_mut().zip(&rewards[u]) {
                *acc += p * r;
            }
            for &(v, q) in &rows[u] {
                next[v] += p * q;
            }
        }
        dist = next;
    }
    total.into_iter().map(|t| t / stages as f64).collect()
}

/// Every pure stationary policy of `player` under the trivial device, one
/// action per game state.
pub fn pure_policies(g: &StochasticGame, player: usize) -> Vec<Vec<Action>> {
    let mut out = vec![Vec::new()];
    for s in 0..g.num_states() {
        let avail = g.available(s, player);
        out = out
            .into_iter()
            .flat_map(|prefix| {
                avail.iter().map(move |a| {
                    let mut p = prefix.clone();
                    p.push(*a);
                    p
                })
            })
            .collect();
    }
    out
}

pub fn pure_strategy(
    g: &StochasticGame,
    d: &CorrelationDevice,
    player: usize,
    policy: &[Action],
) -> Strategy {
    Strategy::Stationary(
        StationaryStrategy::from_fn(g, d, player, |s, _, _| vec![(policy[s], Rational::one())])
            .unwrap(),
    )
}

/// Sparse rows and per-state reward vectors of a chain in floating point.
pub type FloatChain = (Vec<Vec<(usize, f64)>>, Vec<Vec<f64>>);

/// Chain induced by a stationary profile under the trivial device, read off
/// the game's outcome table in floating point.
pub fn induced_chain_f64(
    g: &StochasticGame,
    d: &CorrelationDevice,
    profile: &StrategyProfile,
) -> FloatChain {
    let players = g.num_players();
    let mut rows = Vec::new();
    let mut rewards = Vec::new();
    let f = petrigame::rational::to_f64;
    for s in 0..g.num_states() {
        let mut row: Vec<(usize, f64)> = Vec::new();
        let mut reward = vec![0.0; players];
        for (step, p) in profile.joint(g, s, &vec![0; players]).unwrap() {
            let out = g.outcome(s, &step).unwrap();
            for (acc, r) in reward.iter_mut().zip(&out.reward) {
                *acc += f(&p) * f(r);
            }
            for (t, q) in &out.next {
                row.push((*t, f(&p) * f(q)));
            }
        }
        rows.push(row);
        rewards.push(reward);
        let _ = d;
    }
    (rows, rewards)
}
