//! Exact integer arithmetic shared by every module: the Kronecker symbol,
//! a smallest-prime-factor sieve with trial-division fallback, squarefree
//! parts, perfect-square tests, and the real-order divisor function `d_k`.

use crate::{Error, Result};

pub use crate::numeric::is_square;

/// Hard ceiling on sieve size: 32-bit cells, so this is ~480 MB.
/// Requests beyond it are refused rather than attempted.
pub const MAX_SIEVE_LIMIT: u64 = 120_000_000;

/// Default sieve size used by the front end when nothing larger is needed.
pub const DEFAULT_SIEVE_LIMIT: u64 = 25_000_000;

/// Prime factorization `n = p1^e1 * ... * pr^er` with primes ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factorization {
    pub n: u64,
    pub factors: Vec<(u64, u32)>,
}

impl Factorization {
    /// Number of distinct prime factors.
    pub fn omega(&self) -> u32 {
        self.factors.len() as u32
    }

    /// Exponent of `p` in `n` (zero if `p` does not divide `n`).
    pub fn exponent_of(&self, p: u64) -> u32 {
        self.factors
            .iter()
            .find(|&&(q, _)| q == p)
            .map_or(0, |&(_, e)| e)
    }

    /// Product of the primes dividing `n` to an odd power.
    pub fn squarefree_part(&self) -> u64 {
        self.factors
            .iter()
            .filter(|&&(_, e)| e % 2 == 1)
            .map(|&(p, _)| p)
            .product()
    }

    /// All divisors of `n`, in no particular order.
    pub fn divisors(&self) -> Vec<u64> {
        let mut out = vec![1u64];
        for &(p, e) in &self.factors {
            let prev = out.len();
            let mut pw = 1u64;
            for _ in 0..e {
                pw *= p;
                for i in 0..prev {
                    out.push(out[i] * pw);
                }
            }
        }
        out
    }
}

/// Smallest-prime-factor table for `2 <= n <= limit`, stored in 32-bit
/// cells. Larger arguments are factored by trial division over the sieved
/// primes, which covers everything up to `limit^2`.
pub struct SpfTable {
    limit: u64,
    spf: Vec<u32>,
}

impl std::fmt::Debug for SpfTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpfTable").field("limit", &self.limit).finish()
    }
}

impl SpfTable {
    /// Build the table. Refuses limits beyond [`MAX_SIEVE_LIMIT`].
    pub fn build(limit: u64) -> Result<Self> {
        if limit > MAX_SIEVE_LIMIT {
            return Err(Error::SieveGuard {
                requested: limit,
                max: MAX_SIEVE_LIMIT,
            });
        }
        let limit = limit.max(2);
        let n = (limit + 1) as usize;
        let mut spf = vec![0u32; n];
        let mut i = 2usize;
        while i * i <= limit as usize {
            if spf[i] == 0 {
                let mut j = i * i;
                while j <= limit as usize {
                    if spf[j] == 0 {
                        spf[j] = i as u32;
                    }
                    j += i;
                }
            }
            i += 1;
        }
        for (j, cell) in spf.iter_mut().enumerate().skip(2) {
            if *cell == 0 {
                *cell = j as u32;
            }
        }
        Ok(SpfTable { limit, spf })
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Smallest prime factor of `n`, table lookup only (`2 <= n <= limit`).
    #[inline]
    pub fn spf(&self, n: u64) -> u32 {
        self.spf[n as usize]
    }

    /// Iterator over the primes `p <= limit` in ascending order.
    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.spf
            .iter()
            .enumerate()
            .skip(2)
            .filter(|&(n, &p)| p as usize == n)
            .map(|(n, _)| n as u64)
    }

    /// Factor `n`. Uses the table for `n <= limit` and trial division by
    /// sieved primes above it; refuses `n` beyond `limit^2`, where a
    /// composite could escape certification.
    pub fn factor(&self, n: u64) -> Result<Factorization> {
        if n == 0 {
            return Err(Error::OutOfRange {
                what: "factor argument",
                value: 0,
                range: "n >= 1",
            });
        }
        let mut factors = Vec::new();
        if n <= self.limit {
            let mut m = n;
            while m > 1 {
                let p = self.spf[m as usize] as u64;
                let mut e = 0u32;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
            factors.sort_unstable();
            return Ok(Factorization { n, factors });
        }
        if n / self.limit > self.limit {
            return Err(Error::OutOfRange {
                what: "factor argument",
                value: n,
                range: "n <= limit^2 (trial-division fallback)",
            });
        }
        let mut m = n;
        for p in self.primes() {
            if p * p > m {
                break;
            }
            if m % p == 0 {
                let mut e = 0u32;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                factors.push((p, e));
            }
        }
        if m > 1 {
            factors.push((m, 1));
        }
        factors.sort_unstable();
        Ok(Factorization { n, factors })
    }
}

/// Kronecker symbol `(d | n)` for `n >= 0`.
///
/// Completely multiplicative in `n`; agrees with the Jacobi symbol for odd
/// positive `n` and extends it by `(d | 2) = 0` for even `d`, `+1` for
/// `d = +-1 mod 8`, `-1` for `d = +-3 mod 8`, and `(d | 0) = 1` iff
/// `|d| = 1`.
pub fn kronecker(d: i64, n: u64) -> i32 {
    if n == 0 {
        return i32::from(d == 1 || d == -1);
    }
    let mut sign = 1i32;
    let mut den = n;
    if den % 2 == 0 {
        if d % 2 == 0 {
            return 0;
        }
        let tz = den.trailing_zeros();
        den >>= tz;
        if tz % 2 == 1 {
            let m8 = d.rem_euclid(8);
            if m8 == 3 || m8 == 5 {
                sign = -sign;
            }
        }
    }
    if den == 1 {
        return sign;
    }
    // Jacobi symbol (d | den) for odd den > 1, by binary reciprocity.
    let mut a = d.rem_euclid(den as i64) as u64;
    let mut b = den;
    while a != 0 {
        let tz = a.trailing_zeros();
        a >>= tz;
        if tz % 2 == 1 {
            let m8 = b % 8;
            if m8 == 3 || m8 == 5 {
                sign = -sign;
            }
        }
        if a % 4 == 3 && b % 4 == 3 {
            sign = -sign;
        }
        std::mem::swap(&mut a, &mut b);
        a %= b;
    }
    if b == 1 {
        sign
    } else {
        0
    }
}

/// Product of the primes dividing `n` to an odd power; `n / result` is a
/// perfect square.
pub fn squarefree_part(n: u64, table: &SpfTable) -> Result<u64> {
    if n == 1 {
        return Ok(1);
    }
    Ok(table.factor(n)?.squarefree_part())
}

/// `d_k(p^a)` — depends only on the exponent, not the prime:
/// `Gamma(k+a) / (Gamma(k) a!)`, evaluated by the overflow-free recurrence
/// `d_k(p^0) = 1`, `d_k(p^a) = d_k(p^(a-1)) (k+a-1)/a`.
pub fn dk_prime_power(k: f64, a: u32) -> f64 {
    let mut v = 1.0;
    for j in 1..=a {
        v *= (k + f64::from(j) - 1.0) / f64::from(j);
    }
    v
}

/// The real-order divisor function `d_k(n)`, multiplicative over the
/// factorization of `n`.
pub fn divisor_dk(k: f64, n: u64, table: &SpfTable) -> Result<f64> {
    if n == 1 {
        return Ok(1.0);
    }
    let fact = table.factor(n)?;
    Ok(fact
        .factors
        .iter()
        .map(|&(_, e)| dk_prime_power(k, e))
        .product())
}
