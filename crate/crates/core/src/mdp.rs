//! Average-reward Markov decision processes solved exactly by multichain
//! policy iteration.
//!
//! Each iteration evaluates the current deterministic policy (gain and bias
//! of the induced chain), then improves it: first on the gain, and only when
//! no state can raise its gain, on the bias among gain-maximising actions.
//! The current action is kept whenever it ties, which makes the sequence of
//! policies strictly improving; a repeated policy is reported as a solver
//! failure rather than looping.

use std::collections::HashSet;

use crate::chain::{self, MarkovChain};
use crate::error::{Error, Result};
use crate::rational::Rational;

/// Iteration cap of [`solve_average_reward`].
pub const MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub struct Choice {
    pub reward: Rational,
    /// Sparse successor distribution.
    pub next: Vec<(usize, Rational)>,
}

/// Finite MDP; every state needs at least one choice.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Mdp {
    pub choices: Vec<Vec<Choice>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Index of the chosen action per state.
    pub policy: Vec<usize>,
    /// Optimal long-run average reward per state.
    pub gain: Vec<Rational>,
    pub bias: Vec<Rational>,
    pub iterations: usize,
}

impl Mdp {
    pub fn len(&self) -> usize {
        self.choices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choices.is_empty()
    }

    /// Markov reward chain induced by a deterministic policy.
    pub fn induced_chain(&self, policy: &[usize]) -> MarkovChain {
        let picked = self.choices.iter().zip(policy).map(|(c, &a)| &c[a]);
        MarkovChain {
            rows: picked.clone().map(|c| c.next.clone()).collect(),
            rewards: picked.map(|c| vec![c.reward.clone()]).collect(),
        }
    }
}

fn expectation(next: &[(usize, Rational)], values: &[Rational]) -> Rational {
    next.iter().map(|(t, p)| p * &values[*t]).sum()
}

/// Maximises every state's long-run average reward, starting from the given
/// policy.
pub fn solve_average_reward(mdp: &Mdp, initial_policy: Vec<usize>) -> Result<Solution> {
    if let Some(s) = mdp.choices.iter().position(Vec::is_empty) {
        return Err(Error::InvalidArgument(format!(
            "MDP state {s} has no action"
        )));
    }
    if initial_policy.len() != mdp.len()
        || initial_policy
            .iter()
            .zip(&mdp.choices)
            .any(|(&a, c)| a >= c.len())
    {
        return Err(Error::InvalidArgument(
            "initial policy does not fit the MDP".into(),
        ));
    }
    let mut policy = initial_policy;
    let mut seen = HashSet::new();
    for iteration in 1..=MAX_ITERATIONS {
        if !seen.insert(policy.clone()) {
            return Err(Error::SolverNonconvergence(format!(
                "policy repeated after {iteration} iterations"
            )));
        }
        let chain = mdp.induced_chain(&policy);
        let analysis = chain::analyze(&chain)?;
        let gain: Vec<Rational> = analysis.gain.iter().map(|g| g[0].clone()).collect();
        let bias = analysis.bias(&chain, 0)?;

        let mut next = policy.clone();
        let mut changed = false;
        for (s, choices) in mdp.choices.iter().enumerate() {
            let current = expectation(&choices[policy[s]].next, &gain);
            let mut best = current.clone();
            for (a, c) in choices.iter().enumerate() {
                let v = expectation(&c.next, &gain);
                if v > best {
                    best = v;
                    next[s] = a;
                }
            }
            changed |= next[s] != policy[s];
        }
        if !changed {
            for (s, choices) in mdp.choices.iter().enumerate() {
                let target = expectation(&choices[policy[s]].next, &gain);
                let value = |c: &Choice| &c.reward + expectation(&c.next, &bias);
                let mut best = value(&choices[policy[s]]);
                for (a, c) in choices.iter().enumerate() {
                    if expectation(&c.next, &gain) != target {
                        continue;
                    }
                    let v = value(c);
                    if v > best {
                        best = v;
                        next[s] = a;
                    }
                }
                changed |= next[s] != policy[s];
            }
        }
        if !changed {
            return Ok(Solution {
                policy,
                gain,
                bias,
                iterations: iteration,
            });
        }
        policy = next;
    }
    Err(Error::SolverNonconvergence(format!(
        "no optimal policy after {MAX_ITERATIONS} iterations"
    )))
}

/// Long-run average reward of a fixed deterministic policy.
pub fn policy_gain(mdp: &Mdp, policy: &[usize]) -> Result<Vec<Rational>> {
    let analysis = chain::analyze(&mdp.induced_chain(policy))?;
    Ok(analysis.gain.into_iter().map(|mut g| g.remove(0)).collect())
}

/// Optimal gain by trying every deterministic policy. Exponential; meant for
/// cross-checks on tiny models.
pub fn brute_force_gain(mdp: &Mdp) -> Result<Vec<Rational>> {
    let mut best: Option<Vec<Rational>> = None;
    let mut policy = vec![0; mdp.len()];
    loop {
        let g = policy_gain(mdp, &policy)?;
        best = Some(match best {
            None => g,
            Some(b) => b.into_iter().zip(g).map(|(x, y)| x.max(y)).collect(),
        });
        let mut k = 0;
        loop {
            if k == mdp.len() {
                return Ok(best.unwrap_or_default());
            }
            policy[k] += 1;
            if policy[k] < mdp.choices[k].len() {
                break;
            }
            policy[k] = 0;
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn choice(reward: i64, next: &[(usize, Rational)]) -> Choice {
        Choice {
            reward: int(reward),
            next: next.to_vec(),
        }
    }

    /// State 0 can stay (reward 1) or move to the absorbing pair {1, 2}
    /// alternating rewards 0 and 4; state 3 chooses between 0 and 2.
    fn multichain() -> Mdp {
        Mdp {
            choices: vec![
                vec![choice(1, &[(0, int(1))]), choice(0, &[(1, int(1))])],
                vec![choice(0, &[(2, int(1))])],
                vec![choice(4, &[(1, int(1))])],
                vec![
                    choice(0, &[(0, ratio(1, 2)), (3, ratio(1, 2))]),
                    choice(5, &[(0, int(1))]),
                ],
            ],
        }
    }

    #[test]
    fn policy_iteration_finds_the_multichain_optimum() {
        let mdp = multichain();
        let sol = solve_average_reward(&mdp, vec![0; 4]).unwrap();
        assert_eq!(sol.gain, vec![int(2); 4]);
        assert_eq!(sol.policy[0], 1);
        assert_eq!(sol.gain, brute_force_gain(&mdp).unwrap());
    }

    #[test]
    fn bias_step_breaks_gain_ties() {
        // both choices at state 0 reach the same absorbing state; the
        // transient reward decides
        let mdp = Mdp {
            choices: vec![
                vec![choice(0, &[(1, int(1))]), choice(3, &[(1, int(1))])],
                vec![choice(1, &[(1, int(1))])],
            ],
        };
        let sol = solve_average_reward(&mdp, vec![0, 0]).unwrap();
        assert_eq!(sol.policy, vec![1, 0]);
        assert_eq!(sol.gain, vec![int(1), int(1)]);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mdp = Mdp {
            choices: vec![vec![]],
        };
        assert!(solve_average_reward(&mdp, vec![0]).is_err());
        assert!(solve_average_reward(&multichain(), vec![5, 0, 0, 0]).is_err());
    }
}
