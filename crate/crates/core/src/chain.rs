//! Long-run analysis of finite Markov reward chains with exact arithmetic.
//!
//! The Cesàro limit of the average reward is computed per recurrent class
//! (stationary distribution times reward) and propagated to transient states
//! through absorption, so periodic and multichain structure needs no
//! special handling.

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rational::{self, Rational};

/// Row-stochastic chain with a reward vector (one entry per dimension) on
/// every state.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MarkovChain {
    pub rows: Vec<Vec<(usize, Rational)>>,
    pub rewards: Vec<Vec<Rational>>,
}

impl MarkovChain {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.rewards.first().map_or(0, Vec::len)
    }

    /// Strongly connected components of the positive-probability graph.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(self.len(), 0);
        let nodes: Vec<_> = (0..self.len()).map(|_| g.add_node(())).collect();
        for (s, row) in self.rows.iter().enumerate() {
            for (t, _) in row {
                g.add_edge(nodes[s], nodes[*t], ());
            }
        }
        let mut comps: Vec<Vec<usize>> = tarjan_scc(&g)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        comps.sort();
        comps
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainAnalysis {
    /// Closed communicating classes, each sorted.
    pub recurrent: Vec<Vec<usize>>,
    /// Recurrent class of each state, `None` when transient.
    pub class_of: Vec<Option<usize>>,
    /// Stationary distribution of each class, aligned with its members.
    pub stationary: Vec<Vec<Rational>>,
    /// Long-run average reward per state and dimension.
    pub gain: Vec<Vec<Rational>>,
}

fn singular(what: &str) -> Error {
    Error::SolverNonconvergence(format!("singular system while computing {what}"))
}

pub fn analyze(chain: &MarkovChain) -> Result<ChainAnalysis> {
    let n = chain.len();
    let dims = chain.dims();
    let mut class_of = vec![None; n];
    let mut recurrent = Vec::new();
    for comp in chain.components() {
        let closed = comp.iter().all(|&s| {
            chain.rows[s]
                .iter()
                .all(|(t, _)| comp.binary_search(t).is_ok())
        });
        if closed {
            for &s in &comp {
                class_of[s] = Some(recurrent.len());
            }
            recurrent.push(comp);
        }
    }

    let mut stationary = Vec::with_capacity(recurrent.len());
    let mut gain = vec![vec![rational::zero(); dims]; n];
    for class in &recurrent {
        let pi = stationary_distribution(chain, class)?;
        let mut g = vec![rational::zero(); dims];
        for (k, &s) in class.iter().enumerate() {
            for (d, acc) in g.iter_mut().enumerate() {
                *acc += &pi[k] * &chain.rewards[s][d];
            }
        }
        for &s in class {
            gain[s] = g.clone();
        }
        stationary.push(pi);
    }

    let transient: Vec<usize> = (0..n).filter(|&s| class_of[s].is_none()).collect();
    if !transient.is_empty() {
        let pos = position_map(n, &transient);
        let mut a = vec![vec![rational::zero(); transient.len()]; transient.len()];
        let mut b = vec![vec![rational::zero(); dims]; transient.len()];
        for (i, &s) in transient.iter().enumerate() {
            a[i][i] += rational::one();
            for (t, p) in &chain.rows[s] {
                match pos[*t] {
                    Some(j) => a[i][j] -= p,
                    None => {
                        for d in 0..dims {
                            b[i][d] += p * &gain[*t][d];
                        }
                    }
                }
            }
        }
        let x = linalg::solve(&a, &b).ok_or_else(|| singular("absorption"))?;
        for (i, &s) in transient.iter().enumerate() {
            gain[s] = x[i].clone();
        }
    }

    Ok(ChainAnalysis {
        recurrent,
        class_of,
        stationary,
        gain,
    })
}

fn position_map(n: usize, members: &[usize]) -> Vec<Option<usize>> {
    let mut pos = vec![None; n];
    for (i, &s) in members.iter().enumerate() {
        pos[s] = Some(i);
    }
    pos
}

fn stationary_distribution(chain: &MarkovChain, class: &[usize]) -> Result<Vec<Rational>> {
    let k = class.len();
    let pos = position_map(chain.len(), class);
    // rows of (I - P)^T, the last one replaced by normalization
    let mut a = vec![vec![rational::zero(); k]; k];
    for (i, &s) in class.iter().enumerate() {
        a[i][i] += rational::one();
        for (t, p) in &chain.rows[s] {
            let j = pos[*t].expect("class is closed");
            a[j][i] -= p;
        }
    }
    a[k - 1] = vec![rational::one(); k];
    let mut rhs = vec![rational::zero(); k];
    rhs[k - 1] = rational::one();
    linalg::solve_vec(&a, &rhs).ok_or_else(|| singular("a stationary distribution"))
}

impl ChainAnalysis {
    /// Bias `h` of reward dimension `dim`: `(I - P) h = r - g`, with `h`
    /// pinned to zero at the first state of every recurrent class.
    pub fn bias(&self, chain: &MarkovChain, dim: usize) -> Result<Vec<Rational>> {
        let n = chain.len();
        let mut h = vec![rational::zero(); n];
        for class in &self.recurrent {
            let pos = position_map(n, class);
            let k = class.len();
            let mut a = vec![vec![rational::zero(); k]; k];
            let mut b = vec![rational::zero(); k];
            for (i, &s) in class.iter().enumerate() {
                if i == 0 {
                    a[0][0] = rational::one();
                    continue;
                }
                a[i][i] += rational::one();
                for (t, p) in &chain.rows[s] {
                    a[i][pos[*t].expect("closed")] -= p;
                }
                b[i] = &chain.rewards[s][dim] - &self.gain[s][dim];
            }
            let x = linalg::solve_vec(&a, &b).ok_or_else(|| singular("a recurrent bias"))?;
            for (i, &s) in class.iter().enumerate() {
                h[s] = x[i].clone();
            }
        }
        let transient: Vec<usize> = (0..n).filter(|&s| self.class_of[s].is_none()).collect();
        if !transient.is_empty() {
            let pos = position_map(n, &transient);
            let mut a = vec![vec![rational::zero(); transient.len()]; transient.len()];
            let mut b = vec![rational::zero(); transient.len()];
            for (i, &s) in transient.iter().enumerate() {
                a[i][i] += rational::one();
                b[i] = &chain.rewards[s][dim] - &self.gain[s][dim];
                for (t, p) in &chain.rows[s] {
                    match pos[*t] {
                        Some(j) => a[i][j] -= p,
                        None => b[i] += p * &h[*t],
                    }
                }
            }
            let x = linalg::solve_vec(&a, &b).ok_or_else(|| singular("a transient bias"))?;
            for (i, &s) in transient.iter().enumerate() {
                h[s] = x[i].clone();
            }
        }
        Ok(h)
    }
}
