//! Complete character sums of the quadratic polynomial attached to a Pell
//! residue class,
//! `C_m(P_{a,u}) = sum_{l mod m} (P_{a,u}(l) | m)` with
//! `P_{a,u}(l) = 16 u^2 l^2 + 8 a l + d(a,u)`,
//! together with their closed-form evaluation, the residue-class counts
//! `N_i(u)`, and the derived factors `B_m(u)`, `F_m(u)`, `a(m)`.
//!
//! Everything on the closed-form side is exact rational arithmetic; the
//! brute-force side is plain symbol summation. The two must agree exactly,
//! and the verification grid treats any discrepancy as a counterexample to
//! report, never to reconcile.

use num_integer::gcd;
use num_rational::Ratio;
use rayon::prelude::*;

use crate::arith::{kronecker, SpfTable};
use crate::numeric::is_square;
use crate::pell::discriminant_of_pair;
use crate::{Error, Result};

/// Exact rational value, numerator/denominator in `i64`.
pub type Rational = Ratio<i64>;

/// Cost guard for the brute-force character sum.
pub const BRUTEFORCE_M_MAX: u64 = 1_000_000;
/// Cost guard for the residue-class scan (`4 u^2` values of `a`).
pub const NI_U_MAX: u64 = 1_000;

/// Which residue class of the ambient discriminant set a case falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidueClass {
    /// `d = 0 mod 4`
    D0,
    /// `d = 1 mod 8`
    D1,
    /// `d = 5 mod 8`
    D2,
}

/// One character-sum case `(m, a, u)` with the factorization data the
/// closed form consumes.
#[derive(Debug, Clone)]
pub struct CharSumCase {
    pub m: u64,
    pub a: u64,
    pub u: u64,
    /// Exponent of 2 in `m`.
    pub e1: u32,
    /// Odd primes of `m` with exponents, ascending.
    pub odd_primes: Vec<(u64, u32)>,
    /// Squarefree part of `m / 2^e1`.
    pub m0: u64,
    /// `d(a, u) = (a^2 - 4)/u^2`.
    pub d_au: u64,
    pub residue: ResidueClass,
}

impl CharSumCase {
    /// Assemble a case. Requires `2 < a <= 4u^2 + 2`, `u^2 | a^2 - 4`, and
    /// `d(a, u)` a valid discriminant.
    pub fn new(m: u64, a: u64, u: u64, spf: &SpfTable) -> Result<Self> {
        if m == 0 {
            return Err(Error::OutOfRange {
                what: "character sum modulus m",
                value: 0,
                range: "m >= 1",
            });
        }
        if u == 0 || a <= 2 || a > 4 * u * u + 2 {
            return Err(Error::Validation(format!(
                "case (m={m}, a={a}, u={u}) outside 2 < a <= 4u^2 + 2"
            )));
        }
        let d_au = discriminant_of_pair(a, u)
            .ok_or_else(|| Error::Validation(format!("d({a}, {u}) is not a discriminant")))?;
        let residue = if d_au % 4 == 0 {
            ResidueClass::D0
        } else if d_au % 8 == 1 {
            ResidueClass::D1
        } else {
            debug_assert_eq!(d_au % 8, 5);
            ResidueClass::D2
        };
        let fact = spf.factor(m)?;
        let e1 = fact.exponent_of(2);
        let odd_primes: Vec<(u64, u32)> =
            fact.factors.iter().copied().filter(|&(p, _)| p != 2).collect();
        let m0 = odd_primes
            .iter()
            .filter(|&&(_, e)| e % 2 == 1)
            .map(|&(p, _)| p)
            .product();
        Ok(CharSumCase {
            m,
            a,
            u,
            e1,
            odd_primes,
            m0,
            d_au,
            residue,
        })
    }
}

/// The values of `a` in `(2, 4u^2 + 2]` with `u^2 | a^2 - 4` and
/// `d(a, u)` a valid discriminant — one full residue period.
pub fn admissible_a_values(u: u64) -> Vec<u64> {
    let uu = u * u;
    (3..=4 * uu + 2)
        .filter(|&a| (a * a - 4) % uu == 0 && discriminant_of_pair(a, u).is_some())
        .collect()
}

/// `P_{a,u}(l) = 16 u^2 l^2 + 8 a l + d(a, u)`.
pub fn poly_eval(case: &CharSumCase, l: u64) -> i128 {
    let (u, a, l) = (case.u as i128, case.a as i128, l as i128);
    16 * u * u * l * l + 8 * a * l + case.d_au as i128
}

/// `P_{a,u}(l) mod modulus`, without overflow.
fn poly_eval_mod(case: &CharSumCase, l: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let l = l as u128 % m;
    let quad = (16 * (case.u as u128) * (case.u as u128)) % m * l % m * l % m;
    let lin = (8 * (case.a as u128)) % m * l % m;
    ((quad + lin + case.d_au as u128) % m) as u64
}

/// Direct evaluation of `C_m(P_{a,u})` by summing Kronecker symbols over a
/// full period.
pub fn charsum_bruteforce(case: &CharSumCase) -> Result<i64> {
    if case.m > BRUTEFORCE_M_MAX {
        return Err(Error::OutOfRange {
            what: "brute-force modulus m",
            value: case.m,
            range: "m <= 10^6",
        });
    }
    // (v | m) depends on v mod 8m only, so reduce the polynomial there.
    let modulus = 8 * case.m;
    let mut sum = 0i64;
    for l in 0..case.m {
        let v = poly_eval_mod(case, l, modulus);
        sum += i64::from(kronecker(v as i64, case.m));
    }
    Ok(sum)
}

/// The sign `b_{a,u}(m)`: 1 for odd `m`; for even `m` it depends on the
/// residue class of `d(a, u)` and the parity of the 2-exponent.
fn b_factor(case: &CharSumCase) -> i64 {
    if case.e1 == 0 {
        return 1;
    }
    match case.residue {
        ResidueClass::D0 => 0,
        ResidueClass::D1 => 1,
        ResidueClass::D2 => {
            if case.e1 % 2 == 0 {
                1
            } else {
                -1
            }
        }
    }
}

/// Closed-form value of `C_m(P_{a,u}) / m` as an exact rational:
/// zero when `gcd(m0, u) > 1`, otherwise
/// `b_{a,u}(m) (-1)^omega(m0) / m0` times `(1 - 2/p)` over odd primes of
/// `m` with even exponent, times `(1 + 1/(p-2))` over those that also
/// divide `u`.
pub fn charsum_closed(case: &CharSumCase) -> Result<Rational> {
    if gcd(case.m0, case.u) > 1 {
        return Ok(Rational::from_integer(0));
    }
    let b = b_factor(case);
    if b == 0 {
        return Ok(Rational::from_integer(0));
    }
    let omega_m0 = case.odd_primes.iter().filter(|&&(_, e)| e % 2 == 1).count();
    let sign = if omega_m0 % 2 == 0 { 1i64 } else { -1 };
    let mut value = Rational::new(b * sign, case.m0 as i64);
    for &(p, e) in &case.odd_primes {
        if e % 2 == 0 {
            let p = p as i64;
            value *= Rational::new(p - 2, p);
            if case.u % (p as u64) == 0 {
                value *= Rational::new(p - 1, p - 2);
            }
        }
    }
    Ok(value)
}

/// Residue-class counts over one period of `a`, with the 2-adic and odd
/// decomposition of `u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NiCounts {
    pub u: u64,
    /// Exponent of 2 in `u`.
    pub r1: u32,
    /// Odd part of `u`.
    pub u0: u64,
    /// Number of odd primes dividing `u`.
    pub eta: u32,
    pub n0: u64,
    pub n1: u64,
    pub n2: u64,
}

fn u_decomposition(u: u64, spf: &SpfTable) -> Result<(u32, u64, u32)> {
    let r1 = u.trailing_zeros();
    let u0 = u >> r1;
    let eta = spf.factor(u0)?.omega();
    Ok((r1, u0, eta))
}

/// Exact `N_i(u)` by scanning every `a` in `(2, 4u^2 + 2]`.
pub fn ni_bruteforce(u: u64, spf: &SpfTable) -> Result<NiCounts> {
    if u == 0 || u > NI_U_MAX {
        return Err(Error::OutOfRange {
            what: "residue-count argument u",
            value: u,
            range: "1 <= u <= 10^3",
        });
    }
    let (r1, u0, eta) = u_decomposition(u, spf)?;
    let uu = u * u;
    let (mut n0, mut n1, mut n2) = (0u64, 0u64, 0u64);
    for a in 3..=4 * uu + 2 {
        if (a * a - 4) % uu != 0 {
            continue;
        }
        let d = (a * a - 4) / uu;
        if is_square(d) {
            continue;
        }
        if d % 4 == 0 {
            n0 += 1;
        } else if d % 8 == 1 {
            n1 += 1;
        } else if d % 8 == 5 {
            n2 += 1;
        }
    }
    Ok(NiCounts {
        u,
        r1,
        u0,
        eta,
        n0,
        n1,
        n2,
    })
}

/// The case table for `N_i(u)` in terms of `r1` and `eta(u)`.
pub fn ni_formula(u: u64, spf: &SpfTable) -> Result<NiCounts> {
    if u == 0 {
        return Err(Error::OutOfRange {
            what: "residue-count argument u",
            value: 0,
            range: "u >= 1",
        });
    }
    let (r1, u0, eta) = u_decomposition(u, spf)?;
    let pow = 1u64 << eta; // 2^eta
    let n0 = match r1 {
        0 => 2 * pow,
        1 => 4 * pow,
        _ => 8 * pow,
    };
    let n1 = if r1 >= 3 { 4 * pow } else { 0 };
    let n2 = match r1 {
        0 => 2 * pow,
        _ if r1 >= 3 => 4 * pow,
        _ => 0,
    };
    Ok(NiCounts {
        u,
        r1,
        u0,
        eta,
        n0,
        n1,
        n2,
    })
}

/// The summed sign `B_m(u)`, the normalizer `a(m)`, and the multiplicative
/// factor `F_m(u) = B_m(u)/a(m) * prod_{p | u, e even}(1 + 1/(p-2))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BfFactors {
    pub b_sum: i64,
    pub a_m: i64,
    pub f: Rational,
}

/// Compute `(B_m(u), a(m), F_m(u))` from the exact residue counts.
pub fn bf_factors(m: u64, u: u64, spf: &SpfTable) -> Result<BfFactors> {
    let fact = spf.factor(m)?;
    let e1 = fact.exponent_of(2);
    let ni = ni_bruteforce(u, spf)?;
    let sign = if e1 % 2 == 0 { 1i64 } else { -1 };
    let (b_sum, a_m) = if e1 == 0 {
        ((ni.n0 + ni.n1 + ni.n2) as i64, 4i64)
    } else {
        (ni.n1 as i64 + sign * ni.n2 as i64, 2 * sign)
    };
    let mut f = Rational::new(b_sum, a_m);
    for &(p, e) in fact.factors.iter().filter(|&&(p, _)| p != 2) {
        if e % 2 == 0 && u % p == 0 {
            let p = p as i64;
            f *= Rational::new(p - 1, p - 2);
        }
    }
    Ok(BfFactors { b_sum, a_m, f })
}

/// One row of the exactness grid.
#[derive(Debug, Clone)]
pub struct CharSumRow {
    pub m: u64,
    pub a: u64,
    pub u: u64,
    /// Closed-form `C_m / m`.
    pub closed: Rational,
    pub brute: i64,
    pub matches: bool,
}

/// Result of sweeping the verification grid.
#[derive(Debug, Clone)]
pub struct CharSumVerification {
    /// Rows ordered by `(m, u, a)`.
    pub rows: Vec<CharSumRow>,
    pub mismatches: u64,
}

/// Closed form against brute force on the full grid
/// `m <= m_max, u <= u_max`, all admissible `a`. Exact rational equality
/// `closed * m == brute`; mismatches are collected, not patched.
pub fn verify_charsums(m_max: u64, u_max: u64, spf: &SpfTable) -> Result<CharSumVerification> {
    if m_max == 0 || u_max == 0 {
        return Err(Error::Validation("empty verification grid".into()));
    }
    let mut triples: Vec<(u64, u64, u64)> = Vec::new();
    for u in 1..=u_max {
        for a in admissible_a_values(u) {
            for m in 1..=m_max {
                triples.push((m, u, a));
            }
        }
    }
    triples.sort_unstable();
    let rows: Result<Vec<CharSumRow>> = triples
        .par_iter()
        .map(|&(m, u, a)| {
            let case = CharSumCase::new(m, a, u, spf)?;
            let closed = charsum_closed(&case)?;
            let brute = charsum_bruteforce(&case)?;
            let matches = closed * Rational::from_integer(m as i64)
                == Rational::from_integer(brute);
            Ok(CharSumRow {
                m,
                a,
                u,
                closed,
                brute,
                matches,
            })
        })
        .collect();
    let rows = rows?;
    let mismatches = rows.iter().filter(|r| !r.matches).count() as u64;
    Ok(CharSumVerification { rows, mismatches })
}

/// One row of the residue-count grid.
#[derive(Debug, Clone)]
pub struct NiRow {
    pub u: u64,
    pub formula: NiCounts,
    pub brute: NiCounts,
    pub matches: bool,
}

/// `ni_formula` against `ni_bruteforce` for every `u <= u_max`.
pub fn verify_ni(u_max: u64, spf: &SpfTable) -> Result<Vec<NiRow>> {
    (1..=u_max)
        .into_par_iter()
        .map(|u| {
            let formula = ni_formula(u, spf)?;
            let brute = ni_bruteforce(u, spf)?;
            Ok(NiRow {
                u,
                matches: formula == brute,
                formula,
                brute,
            })
        })
        .collect()
}
