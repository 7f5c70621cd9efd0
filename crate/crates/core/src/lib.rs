//! Game dynamics on products of simplices, combinatorial Conley theory on
//! cubical grids, and cubical homology over the integers.
//!
//! The pieces fit together as follows: [`game`] holds exact bimatrix games
//! and their (ε-)Nash sets, [`dynamics`] turns games into vector fields and
//! integrates them, [`conley`] discretizes a flow into a transition graph and
//! its Morse decomposition, [`homology`] computes Betti numbers and torsion of
//! cubical pairs, and [`netopo`] combines the game and homology layers to
//! study the topology of ε-Nash sets.

pub mod conley;
pub mod dynamics;
pub mod exact;
pub mod game;
pub mod homology;
pub mod netopo;
pub mod rational;

pub use game::{km_game, matching_pennies, BimatrixGame, MixedProfile, NashReport, Player};
pub use rational::Rational;
