//! Genetic programming over single-variable expression trees.

mod evolve;
mod expr;
mod ops;
mod parse;

pub use evolve::{evolve, fitness_of, EvolveOutcome, Individual, Population};
pub use expr::{BinaryOp, Expr, UnaryOp, DIV_GUARD, EXP_CLAMP, VALUE_CLAMP};
pub use ops::{crossover, grow, mutate, GpConfig};
pub use parse::parse_expr;
