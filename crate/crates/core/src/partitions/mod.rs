//! Vafa-Witten partition functions of K3: closed forms, the multiple-cover
//! oracle, and the wall-crossing relation between pair and generalized invariants.

pub mod closed;
pub mod gcomb;
pub mod multiple_cover;
pub mod wall_crossing;

pub use closed::*;
pub use gcomb::{GCombination, GTerm, TermDiff};
pub use multiple_cover::{multiple_cover, multiple_cover_with, mukai_exponent_ess, mukai_exponent_opt, GerbeKind, MukaiData};
