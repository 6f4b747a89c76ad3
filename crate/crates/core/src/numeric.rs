//! Floating-point support: compensated summation, deterministic parallel
//! reduction, adaptive quadrature, and the real zeta function.

use rayon::prelude::*;

use crate::{Error, Result};

/// Neumaier's variant of Kahan summation.
///
/// Keeps a running compensation term so that adding terms of wildly
/// different magnitude loses at most one ulp overall instead of one per
/// addition.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Block size for the deterministic parallel reduction. Fixed so that the
/// grouping of partial sums, and hence the result, is identical for every
/// thread count.
const REDUCTION_BLOCK: usize = 4096;

/// Sum `f(0) + f(1) + ... + f(n-1)` with a fixed-block compensated
/// reduction: blocks of [`REDUCTION_BLOCK`] indices are summed
/// independently (possibly in parallel) and the block totals are combined
/// in block order. The result is bit-identical for any thread count.
pub fn block_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let blocks = n.div_ceil(REDUCTION_BLOCK);
    let partials: Vec<f64> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * REDUCTION_BLOCK;
            let hi = (lo + REDUCTION_BLOCK).min(n);
            let mut acc = CompensatedSum::new();
            for i in lo..hi {
                acc.add(f(i));
            }
            acc.total()
        })
        .collect();
    let mut acc = CompensatedSum::new();
    for p in partials {
        acc.add(p);
    }
    acc.total()
}

/// `true` iff `n` is a perfect square, decided by exact integer arithmetic.
pub fn is_square(n: u64) -> bool {
    let r = n.isqrt();
    r * r == n
}

/// Result of an adaptive quadrature together with its error estimate.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
}

/// Adaptive Simpson integration of `f` over `[a, b]`.
///
/// `tol` is an absolute tolerance on the whole interval; subintervals get
/// proportional shares. Fails with the achieved estimate if the recursion
/// bottoms out before the tolerance is met.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
        h / 6.0 * (fa + 4.0 * fm + fb)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        err_acc: &mut f64,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            *err_acc += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        let lv = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err_acc);
        let rv = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err_acc);
        lv + rv
    }

    if !(b > a) {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let fa = f(a);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let fb = f(b);
    let whole = simpson(fa, fm, fb, b - a);
    let mut err = 0.0;
    let value = recurse(&f, a, b, fa, fm, fb, whole, tol, 48, &mut err);
    if err > tol * 4.0 && err > 1e-300 {
        return Err(Error::Quadrature {
            achieved: err,
            requested: tol,
        });
    }
    Ok(Quadrature {
        value,
        error_estimate: err,
    })
}

/// Riemann zeta for real `s > 1` by Euler-Maclaurin.
///
/// Accuracy is a few ulps for s >= 2, which is all callers need (the
/// prime-zeta tail completions and the closed-form product oracles).
pub fn zeta_real(s: f64) -> f64 {
    debug_assert!(s > 1.0, "zeta_real needs s > 1, got {s}");
    if s > 120.0 {
        // 5^-s is already below 2^-278 here.
        return 1.0 + 2f64.powf(-s) + 3f64.powf(-s) + 4f64.powf(-s);
    }
    const N: u32 = 64;
    let nf = f64::from(N);
    let mut acc = CompensatedSum::new();
    for n in 1..N {
        acc.add(f64::from(n).powf(-s));
    }
    let mut z = acc.total();
    z += nf.powf(1.0 - s) / (s - 1.0);
    z += 0.5 * nf.powf(-s);
    // Bernoulli corrections B2, B4, B6.
    z += s * nf.powf(-s - 1.0) / 12.0;
    z -= s * (s + 1.0) * (s + 2.0) * nf.powf(-s - 3.0) / 720.0;
    z += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * nf.powf(-s - 5.0) / 30240.0;
    z
}
