//! The constants of the moment asymptotics: the multiplicative twist
//! weight `g_k(m)`, the Euler product `C(k)`, the local factors `H_p(k)`
//! and their product `H(k)`, the tail-distribution constant `A_0`, and the
//! large-`k` asymptotics of `log H(k)`.
//!
//! Products are truncated at a prime bound `P` and carry certified bounds;
//! `C(k)` additionally completes its tail through the prime zeta function,
//! which costs nothing and brings the truncation error down to rounding
//! level. For `k` beyond ~200 the product overflows a double, so every
//! evaluation also reports its logarithm, computed stably throughout.

use std::sync::OnceLock;

use crate::arith::{dk_prime_power, SpfTable};
use crate::numeric::{adaptive_simpson, block_sum, zeta_real, CompensatedSum};
use crate::{Error, Result};

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_86;

/// How a [`ConstantEval`] was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMethod {
    EulerProduct,
    DirectSeries,
    ClosedForm,
}

/// A constant evaluation with its truncation certificate.
///
/// `tail_bound` bounds `|log(true) - log_value|`. `value` is `exp` of the
/// log and saturates to infinity where `H(k)` genuinely exceeds the double
/// range (k beyond about 200).
#[derive(Debug, Clone, Copy)]
pub struct ConstantEval {
    pub k: f64,
    pub p_limit: u64,
    pub value: f64,
    pub log_value: f64,
    pub tail_bound: f64,
    pub method: EvalMethod,
}

/// `A_0` with the achieved quadrature error.
#[derive(Debug, Clone, Copy)]
pub struct A0Eval {
    pub value: f64,
    pub quadrature_error: f64,
}

/// The explicit 2-factor of `C(k)`:
/// `1 + 2^-s + 2*4^-s + 4/(4^s (2^s - 1))` with `s = k + 2`.
fn two_factor(k: f64) -> f64 {
    let q = (-(k + 2.0) * std::f64::consts::LN_2).exp();
    1.0 + q + 2.0 * q * q + 4.0 * q * q * q / (1.0 - q)
}

/// `g_k(p^a)` on prime powers.
///
/// For odd `p`: `-(1/p)(1 + 2/(p^s - 1))^-1` at odd `a`, and
/// `(1 - 2/p)(1 + 2(p-1)/((p-2)(p^s - 1)))(1 + 2/(p^s - 1))^-1` at even
/// `a`. At `p = 2` the sign alternates with `a` and only even `a` carry
/// the correction term. Factors involving `p^s` short-circuit to their
/// limit once `s log p` would overflow the exponent range.
pub fn gk_prime_power(p: u64, a: u32, k: f64) -> f64 {
    debug_assert!(a >= 1);
    let s = k + 2.0;
    let lp = (p as f64).ln();
    let q = if s * lp > 700.0 { 0.0 } else { (-s * lp).exp() };
    if p == 2 {
        let sign = if a % 2 == 0 { 1.0 } else { -1.0 };
        let corr = if a % 2 == 0 {
            1.0 + 4.0 * q * q * q / (1.0 - q)
        } else {
            1.0
        };
        return sign / 2.0 * corr / two_factor(k);
    }
    let pf = p as f64;
    let a_factor = 1.0 + 2.0 * q / (1.0 - q);
    if a % 2 == 1 {
        -1.0 / pf / a_factor
    } else {
        let b_factor = 1.0 + 2.0 * (pf - 1.0) / (pf - 2.0) * q / (1.0 - q);
        (1.0 - 2.0 / pf) * b_factor / a_factor
    }
}

/// The multiplicative function `g_k(m)`; `g_k(1) = 1`.
pub fn gk(m: u64, k: f64, spf: &SpfTable) -> Result<f64> {
    if m == 0 {
        return Err(Error::OutOfRange {
            what: "g_k argument m",
            value: 0,
            range: "m >= 1",
        });
    }
    let fact = spf.factor(m)?;
    Ok(fact
        .factors
        .iter()
        .map(|&(p, e)| gk_prime_power(p, e, k))
        .product())
}

/// Moebius function for the small indices the prime zeta series needs.
fn moebius_small(n: u32) -> i32 {
    let mut m = n;
    let mut mu = 1i32;
    let mut p = 2u32;
    while p * p <= m {
        if m % p == 0 {
            m /= p;
            if m % p == 0 {
                return 0;
            }
            mu = -mu;
        }
        p += 1;
    }
    if m > 1 {
        mu = -mu;
    }
    mu
}

/// Prime zeta `P(s) = sum_p p^-s` for real `s >= 2`, via
/// `P(s) = sum_n mu(n)/n log zeta(n s)`.
pub fn prime_zeta(s: f64) -> f64 {
    debug_assert!(s >= 2.0);
    let mut acc = CompensatedSum::new();
    for n in 1u32..=64 {
        let ns = f64::from(n) * s;
        if ns > 200.0 {
            break;
        }
        let mu = moebius_small(n);
        if mu == 0 {
            continue;
        }
        acc.add(f64::from(mu) / f64::from(n) * zeta_real(ns).ln());
    }
    acc.total()
}

/// `C(k)`: the explicit 2-factor times `prod_{2 < p <= P} (1 + 2/(p^s-1))`,
/// with the `p > P` tail completed through the prime zeta function
/// (`log((1+q)/(1-q)) = 2 artanh(q)` summed over the tail primes).
///
/// The reported `tail_bound` is the conservative no-completion certificate
/// plus rounding headroom; the actual residual after completion is far
/// smaller.
pub fn c_of_k(k: f64, p_limit: u64, spf: &SpfTable) -> Result<ConstantEval> {
    if k < 0.0 {
        return Err(Error::Validation(format!("C(k) needs k >= 0, got {k}")));
    }
    validate_p_limit(p_limit, 1_000, spf)?;
    let s = k + 2.0;
    let mut log_prod = CompensatedSum::new();
    // Partial prime power sums over p <= P for the tail completion.
    let mut s1 = CompensatedSum::new();
    let mut s3 = CompensatedSum::new();
    let mut s5 = CompensatedSum::new();
    for p in spf.primes().take_while(|&p| p <= p_limit) {
        let q = (-s * (p as f64).ln()).exp();
        s1.add(q);
        s3.add(q * q * q);
        s5.add(q * q * q * q * q);
        if p == 2 {
            continue;
        }
        // 1 + 2/(p^s - 1) = (1 + q)/(1 - q)
        log_prod.add((1.0 + q).ln() - (1.0 - q).ln());
    }
    // sum_{p > P} log((1+q)/(1-q)) = 2 sum_{j odd} (P(js) - S_j)/j, truncated
    // at j = 5; the j >= 7 remainder is below 2^-200 for P >= 1000.
    let tail = 2.0 * ((prime_zeta(s) - s1.total())
        + (prime_zeta(3.0 * s) - s3.total()) / 3.0
        + (prime_zeta(5.0 * s) - s5.total()) / 5.0);
    let log_odd = log_prod.total() + tail;
    let value = two_factor(k) * log_odd.exp();
    let log_value = value.ln();

    // Certificate: exp(2 * sum_{p>P} 2/(p^s - 1)) - 1 with the prime sum
    // bounded by the integral estimate 4/((k+1) P^{k+1} log P), plus
    // rounding headroom for the completed evaluation itself.
    let lnp = (p_limit as f64).ln();
    let log_term = (8.0f64).ln() - (k + 1.0) * lnp - (k + 1.0).ln() - lnp.ln();
    let spec_bound = if log_term < -700.0 {
        0.0
    } else {
        log_term.exp().exp_m1()
    };
    Ok(ConstantEval {
        k,
        p_limit,
        value,
        log_value,
        tail_bound: spec_bound + 1e-11,
        method: EvalMethod::EulerProduct,
    })
}

/// Closed form for `C(k)` through zeta values:
/// `prod_p (1 + 2/(p^s-1)) = zeta(s)^2 / zeta(2s)`, so
/// `C(k) = two_factor(k) * zeta(s)^2/zeta(2s) * (2^s-1)/(2^s+1)`.
/// Kept as an independent cross-check of the product route.
pub fn c_of_k_closed(k: f64) -> f64 {
    let s = k + 2.0;
    let odd_all = zeta_real(s) * zeta_real(s) / zeta_real(2.0 * s);
    // (2^s - 1)/(2^s + 1) without forming 2^s when it is huge.
    let q = (-s * std::f64::consts::LN_2).exp();
    let two_ratio = (1.0 - q) / (1.0 + q);
    two_factor(k) * odd_all * two_ratio
}

fn validate_p_limit(p_limit: u64, floor: u64, spf: &SpfTable) -> Result<()> {
    if p_limit < floor {
        return Err(Error::Validation(format!(
            "prime bound P = {p_limit} below the required floor {floor}"
        )));
    }
    if p_limit > spf.limit() {
        return Err(Error::Validation(format!(
            "prime bound P = {p_limit} exceeds the sieve limit {}",
            spf.limit()
        )));
    }
    Ok(())
}

/// `(H_p(k), log H_p(k))`, both computed stably.
///
/// The local sum telescopes through the generating identity
/// `sum_a d_k(p^a) t^a p^-a = (1 - t/p)^-k` at `t = +-1`, giving for odd
/// `p` (with `alpha = (1-1/p)^-k`, `beta = (1+1/p)^-k`, `B` the even-power
/// correction and `A` this prime's factor of `C(k)`):
///
/// `H_p(k) = ca * alpha + cb * beta + (A - (1-2/p) B)`,
/// `ca = ((1-2/p) B - 1/p)/2`, `cb = ((1-2/p) B + 1/p)/2`.
fn local_h_parts(p: u64, k: f64) -> (f64, f64) {
    let s = k + 2.0;
    let pf = p as f64;
    let lp = pf.ln();
    let q = if s * lp > 700.0 { 0.0 } else { (-s * lp).exp() };
    if p == 2 {
        // H_2 = E + ((2/3)^k - 1)/2 + w (S+ - 1)/2 with w = 4/(4^s (2^s-1))
        // and S+ = (2^k + (2/3)^k)/2.
        let e = two_factor(k);
        let r = (2.0f64 / 3.0).powf(k);
        let w = 4.0 * q * q * q / (1.0 - q);
        let half_bracket = 0.5 * (r - 1.0);
        let ln2 = std::f64::consts::LN_2;
        let w_term = if k * ln2 < 700.0 {
            let s_plus = 0.5 * (2.0f64.powf(k) + r);
            0.5 * w * (s_plus - 1.0)
        } else if w == 0.0 {
            0.0
        } else {
            // log-space: w * S+ / 2, then subtract the tiny w/2.
            let ln_w = (4.0 / (1.0 - q)).ln() - 3.0 * s * ln2;
            let ln_splus = (k - 1.0) * ln2 + (3.0f64).powf(-k).ln_1p();
            let x = ln_w + ln_splus - ln2;
            (if x < -700.0 { 0.0 } else { x.exp() }) - 0.5 * w
        };
        let h = e + half_bracket + w_term;
        return (h, h.ln());
    }
    let a_factor = 1.0 + 2.0 * q / (1.0 - q);
    let b_factor = 1.0 + 2.0 * (pf - 1.0) / (pf - 2.0) * q / (1.0 - q);
    let gb = (1.0 - 2.0 / pf) * b_factor;
    let ca = 0.5 * (gb - 1.0 / pf);
    let cb = 0.5 * (gb + 1.0 / pf);
    let c0 = a_factor - gb;
    let ln_alpha = -k * (1.0 - 1.0 / pf).ln();
    let beta = (-k * (1.0 + 1.0 / pf).ln()).exp();
    if ln_alpha < 700.0 {
        let h = ca * ln_alpha.exp() + cb * beta + c0;
        (h, h.ln())
    } else if ca > 0.0 {
        // alpha dominates; beta/alpha and c0/alpha underflow to zero.
        let log_h = ln_alpha + ca.ln();
        let value = if log_h > 709.0 { f64::INFINITY } else { log_h.exp() };
        (value, log_h)
    } else {
        // ca vanishes only at p = 3 once q underflows.
        let h = cb * beta + c0;
        (h, h.ln())
    }
}

/// The local factor `H_p(k)` in closed form (this prime's factor of `C(k)`
/// times the local prime-power series).
pub fn local_h(p: u64, k: f64) -> f64 {
    local_h_parts(p, k).0
}

/// `log H_p(k)`, finite even where the value overflows.
pub fn ln_local_h(p: u64, k: f64) -> f64 {
    local_h_parts(p, k).1
}

/// Direct prime-power summation of the local series, retained purely as a
/// test oracle for [`local_h`]. Valid for moderate `k` where the terms
/// stay inside the double range.
pub fn local_h_series(p: u64, k: f64) -> f64 {
    let s = k + 2.0;
    let pf = p as f64;
    let q = (-s * pf.ln()).exp();
    let c_p = if p == 2 {
        two_factor(k)
    } else {
        1.0 + 2.0 * q / (1.0 - q)
    };
    let mut sum = 1.0f64;
    let mut a = 1u32;
    loop {
        let term = dk_prime_power(k, a) * gk_prime_power(p, a, k) / pf.powi(a as i32);
        sum += term;
        if term.abs() < 1e-16 * sum.abs() || a > 4000 {
            break;
        }
        a += 1;
    }
    c_p * sum
}

/// `H(k) = prod_p H_p(k)` truncated at `P`, accumulated in log space with
/// a deterministic fixed-block reduction.
///
/// Requires `P >= max(1000, 10 k^2)` so the factor-size estimate behind
/// the tail bound (`|log H_p| <= ~k^2/p^2` for `p > k^2`) applies.
pub fn h_of_k(k: f64, p_limit: u64, spf: &SpfTable) -> Result<ConstantEval> {
    if !(k > 0.0) {
        return Err(Error::Validation(format!("H(k) needs k > 0, got {k}")));
    }
    let floor = 1_000u64.max((10.0 * k * k).ceil() as u64);
    validate_p_limit(p_limit, floor, spf)?;
    let primes: Vec<u64> = spf.primes().take_while(|&p| p <= p_limit).collect();
    let log_value = block_sum(primes.len(), |i| ln_local_h(primes[i], k));
    // |log H_p| <= (0.7 k^2 + 1.3 k + 2.2)/p^2 for p > P >= 10 k^2, and
    // sum_{p > P} 1/p^2 <= 1.3/(P log P).
    let tail_bound =
        1.4 * (k * k + 2.0 * k + 3.0) / (p_limit as f64 * (p_limit as f64).ln());
    Ok(ConstantEval {
        k,
        p_limit,
        value: log_value.exp(),
        log_value,
        tail_bound,
        method: EvalMethod::EulerProduct,
    })
}

/// Direct summation of `C(k) * sum_m d_k(m) g_k(m)/m` up to `n_max`,
/// an independent series route to `H(k)` used by the cross-check tests.
pub fn h_series_direct(k: f64, n_max: u64, spf: &SpfTable) -> Result<f64> {
    if n_max < 2 || n_max > spf.limit() {
        return Err(Error::Validation(format!(
            "series bound {n_max} outside [2, sieve limit {}]",
            spf.limit()
        )));
    }
    let n = n_max as usize;
    // Sieve d_k(n) g_k(n) / n multiplicatively.
    let mut coef = vec![0.0f64; n + 1];
    coef[1] = 1.0;
    for i in 2..=n {
        let p = spf.spf(i as u64) as usize;
        let mut m = i;
        let mut e = 0u32;
        while m % p == 0 {
            m /= p;
            e += 1;
        }
        coef[i] = coef[m] * dk_prime_power(k, e) * gk_prime_power(p as u64, e, k);
    }
    let series = block_sum(n, |i| coef[i + 1] / (i + 1) as f64);
    let c = c_of_k(k, 1_000_000.min(spf.limit()), spf)?;
    Ok(c.value * series)
}

/// `log cosh(t)` without overflow or cancellation.
fn log_cosh(t: f64) -> f64 {
    let t = t.abs();
    if t < 0.1 {
        // t^2/2 - t^4/12 + t^6/45 - 17 t^8/2520
        let t2 = t * t;
        t2 * (0.5 + t2 * (-1.0 / 12.0 + t2 * (1.0 / 45.0 - t2 * 17.0 / 2520.0)))
    } else if t < 20.0 {
        t.cosh().ln()
    } else {
        t - std::f64::consts::LN_2 + (-2.0 * t).exp().ln_1p()
    }
}

/// The tail-shape kernel: `log cosh(t)` below 1, `log cosh(t) - t` from 1
/// on (so the function drops by exactly 1 across the seam).
pub fn f_value(t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if t < 1.0 {
        log_cosh(t)
    } else {
        log_cosh(t) - t
    }
}

/// `A_0 = int_0^1 log cosh(t)/t^2 dt + int_1^inf (log cosh(t) - t)/t^2 dt + 1`.
///
/// The integrand near zero is evaluated through the `log cosh` series (the
/// quotient tends to 1/2), and the upper tail beyond `T` contributes
/// `-log 2 / T` up to `O(e^{-2T})`.
pub fn a0_value() -> Result<A0Eval> {
    const T: f64 = 20.0;
    // On [0, 0.1] integrate the series for log cosh(t)/t^2 analytically:
    // 1/2 - t^2/12 + t^4/45 - 17 t^6/2520 integrates term by term.
    let a = 0.1f64;
    let head = a * (0.5 + a * a * (-1.0 / 36.0 + a * a * (1.0 / 225.0 - a * a * 17.0 / 17640.0)));
    let head_err = 1e-12; // next series term is below 10^-12 over [0, 0.1]

    let mid = adaptive_simpson(|t| log_cosh(t) / (t * t), a, 1.0, 1e-13)?;
    let upper = adaptive_simpson(|t| (log_cosh(t) - t) / (t * t), 1.0, T, 1e-13)?;
    let tail = -std::f64::consts::LN_2 / T;
    let tail_err = (-2.0 * T).exp() / (2.0 * T * T);

    Ok(A0Eval {
        value: head + mid.value + upper.value + tail + 1.0,
        quadrature_error: head_err + mid.error_estimate + upper.error_estimate + tail_err,
    })
}

/// `A_0` memoized for the hot paths (tail predictions, asymptotics).
pub fn a0_cached() -> f64 {
    static CELL: OnceLock<f64> = OnceLock::new();
    *CELL.get_or_init(|| a0_value().expect("A_0 quadrature converges").value)
}

/// The large-`k` main term of `log H(k)`:
/// `k log log k + k (gamma - log 3) + (A_0 - 1) k / log k`.
pub fn log_h_asymp(k: f64) -> f64 {
    debug_assert!(k >= 10.0);
    k * k.ln().ln() + k * (EULER_GAMMA - 3.0f64.ln()) + (a0_cached() - 1.0) * k / k.ln()
}

/// The per-prime main term of `log H_p(k)` in its two regimes:
/// `-k log(1 - 1/p)` for `5 <= p <= k^(2/3)`, `log cosh(k/p)` above.
pub fn hp_asymp(p: u64, k: f64) -> f64 {
    debug_assert!(p >= 5 && k >= 10.0);
    let pf = p as f64;
    if pf <= k.powf(2.0 / 3.0) {
        -k * (1.0 - 1.0 / pf).ln()
    } else {
        log_cosh(k / pf)
    }
}
