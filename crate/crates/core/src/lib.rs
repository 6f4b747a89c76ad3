//! Computational laboratory for class numbers of indefinite binary quadratic
//! forms ordered by the size of their fundamental units.
//!
//! The library enumerates the positive discriminants `d` with fundamental
//! unit `eps_d <= x` via the Pell-pair parametrization, computes class
//! numbers `h(d)` both exactly (cycles of reduced forms) and analytically
//! (Dirichlet class number formula with a smoothed `L(1,chi_d)` series),
//! evaluates the complete character sums and Euler-product constants that
//! govern the moments of `h(d)` in this ordering, and compares empirical
//! moment and tail statistics against their predicted main terms.
//!
//! Modules mirror the subject decomposition:
//!
//! * [`arith`] — Kronecker symbol, smallest-prime-factor sieve, squarefree
//!   parts, exact square tests, the real-order divisor function `d_k`.
//! * [`pell`] — enumeration of `{d : eps_d <= x}` with on-disk caching.
//! * [`forms`] — reduced indefinite forms, cycle counting, smoothed
//!   Dirichlet series and the hybrid exact/formula class number.
//! * [`charsums`] — complete character sums of the Pell quadratic
//!   polynomial and the residue-class counts they reduce to.
//! * [`constants`] — `g_k`, `C(k)`, local factors `H_p(k)`, `H(k)`, the
//!   tail constant `A_0`, and large-`k` asymptotics.
//! * [`moments`] — empirical vs. predicted moment sums, twisted sums,
//!   the logarithmic integral.
//! * [`tail`] — tail distribution of large `h(d)`, extreme-value scans,
//!   conditional upper bounds.

pub mod arith;
pub mod charsums;
pub mod constants;
mod error;
pub mod forms;
pub mod moments;
pub mod numeric;
pub mod pell;
pub mod tail;

pub use error::{Error, Result};
