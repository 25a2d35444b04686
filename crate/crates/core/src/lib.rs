//! Stochastic games generated by Petri nets whose transitions carry
//! per-role utilities.
//!
//! The crate covers the whole pipeline from an annotated elementary net to
//! incentive-alignment verdicts:
//!
//! * [`petri`]: nets, safe markings, step firing, conflict sets, annotations;
//! * [`statespace`]: reachability graphs and workflow-net soundness;
//! * [`game`]: the base game with fair conflicts and the restart game;
//! * [`strategy`]: correlation devices, stationary strategies, history
//!   probabilities, exact and simulated mean payoffs;
//! * [`equilibrium`]: best responses, ε-equilibria, alignment witnesses,
//!   bounded witness search and the soundness bridge;
//! * [`io`]: PNML and annotation input, game export and analysis reports.
//!
//! ```
//! use petrigame::{fixtures, game, statespace, strategy};
//! use petrigame::rational::ratio;
//!
//! let n1 = fixtures::n1();
//! let ss = statespace::explore(&n1, statespace::DEFAULT_STATE_BOUND)?;
//! let base = game::build_base_game(&n1, &ss)?;
//! let restart = game::build_restart_game(&base, n1.initial())?;
//!
//! let device = strategy::CorrelationDevice::trivial(restart.num_players());
//! let all_act = strategy::StrategyProfile::acting(&restart, &device);
//! let payoff = strategy::longrun_average_payoff(&restart, &device, &all_act)?;
//! assert_eq!(payoff[..3], [ratio(1, 5), ratio(2, 5), ratio(3, 5)]);
//! # Ok::<(), petrigame::Error>(())
//! ```

pub mod chain;
pub mod corpus;
pub mod equilibrium;
pub mod error;
pub mod fixtures;
pub mod game;
pub mod io;
pub mod linalg;
pub mod mdp;
pub mod petri;
pub mod rational;
pub mod statespace;
pub mod strategy;

pub use error::{Error, Result};
