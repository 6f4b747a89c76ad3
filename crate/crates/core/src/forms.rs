//! Class numbers of positive discriminants two ways: exactly, as the
//! number of cycles of reduced indefinite binary quadratic forms under the
//! reduction neighbor map, and analytically, via Dirichlet's class number
//! formula `h(d) = sqrt(d) L(1, chi_d) / log eps_d` with a smoothed series
//! for the L-value.
//!
//! "Reduced" means `|sqrt(d) - 2|a|| < b < sqrt(d)`, decided everywhere by
//! exact integer comparisons. Cycle counting under proper equivalence is
//! the ground truth the formula route is checked against.

use std::collections::HashMap;
use std::sync::OnceLock;

use num_integer::gcd;
use rayon::prelude::*;

use crate::arith::{dk_prime_power, kronecker, SpfTable};
use crate::numeric::{is_square, CompensatedSum};
use crate::pell::{DiscriminantRecord, EnumerationRun, HMode};
use crate::{Error, Result};

/// Neglected-tail level for the smoothed series cutoff.
pub const SMOOTHING_EPS_TAIL: f64 = 1e-12;

/// Rounding distances beyond this flag the formula value as unreliable.
pub const ROUNDING_WINDOW: f64 = 0.35;

/// An integral binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct QuadForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadForm {
    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_primitive(&self) -> bool {
        gcd(gcd(self.a.unsigned_abs(), self.b.unsigned_abs()), self.c.unsigned_abs()) == 1
    }

    /// `|sqrt(d) - 2|a|| < b < sqrt(d)` by integer comparisons only.
    pub fn is_reduced(&self, d: u64) -> bool {
        let b = self.b;
        if b <= 0 {
            return false;
        }
        let b = b as u64;
        if b * b >= d {
            return false;
        }
        let two_a = 2 * self.a.unsigned_abs();
        // sqrt(d) - 2|a| < b  <=>  d < (b + 2|a|)^2
        if d >= (b + two_a) * (b + two_a) {
            return false;
        }
        // 2|a| - sqrt(d) < b  <=>  2|a| <= b, or (2|a| - b)^2 < d
        two_a <= b || (two_a - b) * (two_a - b) < d
    }
}

/// `d > 0`, `d = 0 or 1 mod 4`, non-square.
pub fn validate_discriminant(d: u64) -> Result<()> {
    if d < 5 || d % 4 > 1 || is_square(d) {
        return Err(Error::Domain(d));
    }
    Ok(())
}

/// All primitive reduced forms of discriminant `d`, sorted by `(b, a)`.
///
/// For each `b < sqrt(d)` of the right parity, the factorizations
/// `|a| |c| = (d - b^2)/4` are enumerated and filtered by the reduction
/// window; each surviving `|a|` contributes the pair `(a, b, -c)`,
/// `(-a, b, c)`.
pub fn reduced_forms(d: u64, spf: &SpfTable) -> Result<Vec<QuadForm>> {
    validate_discriminant(d)?;
    let n_max = (d - 1) / 4;
    if n_max > spf.limit() {
        return Err(Error::Validation(format!(
            "sieve limit {} too small to factor (d - b^2)/4 up to {n_max}",
            spf.limit()
        )));
    }
    let s = d.isqrt();
    let mut forms = Vec::new();
    let mut divisors: Vec<u64> = Vec::new();
    let start = if d % 2 == 0 { 2 } else { 1 };
    let mut b = start;
    while b <= s {
        let n = (d - b * b) / 4;
        if n > 0 {
            divisors.clear();
            divisors.push(1);
            let mut m = n;
            while m > 1 {
                let p = spf.spf(m) as u64;
                let mut e = 0;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                let prev = divisors.len();
                let mut pw = 1u64;
                for _ in 0..e {
                    pw *= p;
                    for i in 0..prev {
                        divisors.push(divisors[i] * pw);
                    }
                }
            }
            for &a in &divisors {
                let c = n / a;
                // reduction window |sqrt(d) - 2a| < b
                let two_a = 2 * a;
                if d >= (b + two_a) * (b + two_a) {
                    continue;
                }
                if two_a > b && (two_a - b) * (two_a - b) >= d {
                    continue;
                }
                if gcd(gcd(a, b), c) != 1 {
                    continue;
                }
                forms.push(QuadForm {
                    a: a as i64,
                    b: b as i64,
                    c: -(c as i64),
                });
                forms.push(QuadForm {
                    a: -(a as i64),
                    b: b as i64,
                    c: c as i64,
                });
            }
        }
        b += 2;
    }
    forms.sort_unstable_by_key(|f| (f.b, f.a));
    Ok(forms)
}

/// The reduction neighbor `rho(a, b, c) = (c, b', (b'^2 - d)/(4c))` where
/// `b' = -b mod 2|c|` is placed in the window `sqrt(d) - 2|c| < b' < sqrt(d)`.
/// A permutation of the reduced forms of `d`.
pub fn rho_step(f: &QuadForm, d: u64) -> Result<QuadForm> {
    validate_discriminant(d)?;
    if f.discriminant() != d as i64 || !f.is_reduced(d) || !f.is_primitive() {
        return Err(Error::Contract {
            a: f.a,
            b: f.b,
            c: f.c,
            msg: "rho_step needs a primitive reduced form of the given discriminant",
        });
    }
    let s = d.isqrt() as i64;
    let two_c = 2 * f.c.abs();
    // Unique b' = -b (mod 2|c|) with s + 1 - 2|c| <= b' <= s.
    let b_next = s - (s + f.b).rem_euclid(two_c);
    let num = b_next * b_next - d as i64;
    debug_assert_eq!(num.rem_euclid(4 * f.c), 0);
    let c_next = num / (4 * f.c);
    let g = QuadForm {
        a: f.c,
        b: b_next,
        c: c_next,
    };
    debug_assert_eq!(g.discriminant(), d as i64);
    debug_assert!(g.is_reduced(d), "rho must stay reduced: {f:?} -> {g:?}");
    Ok(g)
}

/// `h(d)` as the number of rho-cycles among the reduced forms — the exact
/// (proper equivalence) class number.
pub fn class_number_cycles(d: u64, spf: &SpfTable) -> Result<u64> {
    let forms = reduced_forms(d, spf)?;
    let index: HashMap<(i64, i64), usize> = forms
        .iter()
        .enumerate()
        .map(|(i, f)| ((f.a, f.b), i))
        .collect();
    let mut visited = vec![false; forms.len()];
    let mut cycles = 0u64;
    for start in 0..forms.len() {
        if visited[start] {
            continue;
        }
        cycles += 1;
        let mut cur = start;
        loop {
            visited[cur] = true;
            let next = rho_step(&forms[cur], d)?;
            let ni = *index.get(&(next.a, next.b)).ok_or(Error::Contract {
                a: next.a,
                b: next.b,
                c: next.c,
                msg: "rho stepped outside the reduced set",
            })?;
            if ni == start {
                break;
            }
            if visited[ni] {
                return Err(Error::Contract {
                    a: next.a,
                    b: next.b,
                    c: next.c,
                    msg: "rho re-entered a cycle other than at its start",
                });
            }
            cur = ni;
        }
    }
    Ok(cycles)
}

/// Smoothed Dirichlet series value for one discriminant.
#[derive(Debug, Clone)]
pub struct LApprox {
    pub d: u64,
    pub k: f64,
    pub y: f64,
    /// `sum_{n <= N} d_k(n) chi_d(n) / n * exp(-n/y)`.
    pub value: f64,
    pub terms_used: u64,
}

/// Precomputed `d_k(n) e^{-n/y} / n` weights shared across discriminants.
///
/// Evaluating many `d` against one `(k, y)` pair dominates the moment and
/// tail experiments, so the `d`-independent part of every term is built
/// once and the per-`d` work is a single multiplicative sieve of
/// `chi_d` plus a dot product.
pub struct LSeriesWorkspace {
    k: f64,
    y: f64,
    weights: Vec<f64>,
}

impl LSeriesWorkspace {
    pub fn new(k: f64, y: f64, spf: &SpfTable) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::Validation(format!("smoothing needs k > 0, got {k}")));
        }
        if !(y >= 2.0) {
            return Err(Error::Validation(format!("smoothing needs y >= 2, got {y}")));
        }
        let n_terms = (y * (y / SMOOTHING_EPS_TAIL).ln()).ceil() as u64;
        if n_terms > spf.limit() {
            return Err(Error::Validation(format!(
                "sieve limit {} too small for the {n_terms}-term smoothed series at y = {y}",
                spf.limit()
            )));
        }
        let n = n_terms as usize;
        let mut weights = vec![0.0f64; n + 1];
        if (k - 1.0).abs() < f64::EPSILON {
            for (i, w) in weights.iter_mut().enumerate().skip(1) {
                let x = i as f64;
                *w = (-x / y).exp() / x;
            }
        } else {
            // d_k by a multiplicative sieve over smallest prime factors.
            let mut dk = vec![0.0f64; n + 1];
            dk[1] = 1.0;
            for i in 2..=n {
                let p = spf.spf(i as u64) as usize;
                let mut m = i;
                let mut e = 0u32;
                while m % p == 0 {
                    m /= p;
                    e += 1;
                }
                dk[i] = dk[m] * dk_prime_power(k, e);
            }
            for i in 1..=n {
                let x = i as f64;
                weights[i] = dk[i] * (-x / y).exp() / x;
            }
        }
        Ok(LSeriesWorkspace { k, y, weights })
    }

    pub fn terms(&self) -> u64 {
        (self.weights.len() - 1) as u64
    }

    /// Evaluate the series for one discriminant. `chi` is caller-owned
    /// scratch so bulk evaluations do not reallocate.
    pub fn eval(&self, d: u64, spf: &SpfTable, chi: &mut Vec<i8>) -> LApprox {
        let n = self.weights.len() - 1;
        chi.clear();
        chi.resize(n + 1, 0);
        chi[1] = 1;
        let di = d as i64;
        let mut sum = self.weights[1];
        for i in 2..=n {
            let p = spf.spf(i as u64) as usize;
            let c = if p == i {
                kronecker(di, i as u64) as i8
            } else {
                chi[i / p] * chi[p]
            };
            chi[i] = c;
            if c != 0 {
                sum += f64::from(c) * self.weights[i];
            }
        }
        LApprox {
            d,
            k: self.k,
            y: self.y,
            value: sum,
            terms_used: n as u64,
        }
    }
}

/// One-off smoothed series evaluation.
pub fn l_smoothed(d: u64, k: f64, y: f64, spf: &SpfTable) -> Result<LApprox> {
    validate_discriminant(d)?;
    let ws = LSeriesWorkspace::new(k, y, spf)?;
    Ok(ws.eval(d, spf, &mut Vec::new()))
}

/// Outcome of the class number formula for one record.
#[derive(Debug, Clone, Copy)]
pub struct ClassNumberEstimate {
    pub h_real: f64,
    pub h_rounded: u64,
    /// `false` when the rounding distance exceeds [`ROUNDING_WINDOW`] (or
    /// the value rounds below 1); callers re-run at larger `y`.
    pub reliable: bool,
}

/// `h = sqrt(d) L / log eps_d`, rounded with a reliability flag.
pub fn class_number_formula(rec: &DiscriminantRecord, l_value: f64) -> Result<ClassNumberEstimate> {
    if !(l_value > 0.0) {
        return Err(Error::Validation(format!(
            "class number formula needs L > 0, got {l_value} for d = {}",
            rec.d
        )));
    }
    let h_real = (rec.d as f64).sqrt() * l_value / rec.log_eps;
    let rounded = h_real.round();
    let reliable = (h_real - rounded).abs() <= ROUNDING_WINDOW && rounded >= 1.0;
    Ok(ClassNumberEstimate {
        h_real,
        h_rounded: if rounded < 1.0 { 1 } else { rounded as u64 },
        reliable,
    })
}

/// Which route `class_number_hybrid` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridMode {
    Exact,
    Formula,
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct HybridOptions {
    pub mode: HybridMode,
    /// In `Auto`, discriminants up to this take the exact cycle count.
    pub d_exact_max: u64,
    pub y: f64,
}

impl Default for HybridOptions {
    fn default() -> Self {
        HybridOptions {
            mode: HybridMode::Auto,
            d_exact_max: 1_000_000,
            y: 1e4,
        }
    }
}

/// Counts of how the class numbers in a run were produced.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HModeMix {
    pub exact: u64,
    pub formula: u64,
}

struct HybridContext<'a> {
    opts: HybridOptions,
    spf: &'a SpfTable,
    ws: OnceLock<LSeriesWorkspace>,
    ws_escalated: OnceLock<LSeriesWorkspace>,
}

impl<'a> HybridContext<'a> {
    fn new(opts: HybridOptions, spf: &'a SpfTable) -> Self {
        HybridContext {
            opts,
            spf,
            ws: OnceLock::new(),
            ws_escalated: OnceLock::new(),
        }
    }

    fn workspace(&self, escalated: bool) -> Result<&LSeriesWorkspace> {
        let (cell, y) = if escalated {
            (&self.ws_escalated, self.opts.y * 10.0)
        } else {
            (&self.ws, self.opts.y)
        };
        // OnceLock has no fallible init; store the error-free build or fail
        // eagerly here.
        if cell.get().is_none() {
            let built = LSeriesWorkspace::new(1.0, y, self.spf)?;
            let _ = cell.set(built);
        }
        Ok(cell.get().expect("just initialized"))
    }

    fn compute(&self, rec: &DiscriminantRecord, chi: &mut Vec<i8>) -> Result<(u64, HMode)> {
        validate_discriminant(rec.d)?;
        let exact = match self.opts.mode {
            HybridMode::Exact => true,
            HybridMode::Formula => false,
            HybridMode::Auto => rec.d <= self.opts.d_exact_max,
        };
        if exact {
            return Ok((class_number_cycles(rec.d, self.spf)?, HMode::Exact));
        }
        let est = class_number_formula(rec, self.workspace(false)?.eval(rec.d, self.spf, chi).value)?;
        if est.reliable {
            return Ok((est.h_rounded, HMode::Formula));
        }
        let retry =
            class_number_formula(rec, self.workspace(true)?.eval(rec.d, self.spf, chi).value)?;
        if retry.reliable {
            return Ok((retry.h_rounded, HMode::Formula));
        }
        Err(Error::UnreliableRounding {
            d: rec.d,
            h_real: retry.h_real,
        })
    }
}

/// Compute the class number for a single record per the hybrid policy and
/// store it on the record. Formula-mode roundings flagged unreliable are
/// retried once at `10 y` before giving up.
pub fn class_number_hybrid(
    rec: &mut DiscriminantRecord,
    opts: HybridOptions,
    spf: &SpfTable,
) -> Result<()> {
    let ctx = HybridContext::new(opts, spf);
    let (h, mode) = ctx.compute(rec, &mut Vec::new())?;
    rec.set_h(h, mode);
    Ok(())
}

/// Attach class numbers to every record of a run, in parallel. The result
/// is independent of the thread count.
pub fn attach_class_numbers(
    run: &mut EnumerationRun,
    opts: HybridOptions,
    spf: &SpfTable,
) -> Result<HModeMix> {
    let ctx = HybridContext::new(opts, spf);
    // Build the shared workspace up front when any record needs it, so the
    // parallel section never races on construction errors.
    let needs_formula = match opts.mode {
        HybridMode::Formula => !run.records.is_empty(),
        HybridMode::Auto => run.records.iter().any(|r| r.d > opts.d_exact_max),
        HybridMode::Exact => false,
    };
    if needs_formula {
        ctx.workspace(false)?;
    }
    let computed: Result<Vec<(u64, HMode)>> = run
        .records
        .par_iter()
        .map_init(Vec::new, |chi, rec| ctx.compute(rec, chi))
        .collect();
    let computed = computed?;
    let mut mix = HModeMix::default();
    for (rec, (h, mode)) in run.records.iter_mut().zip(computed) {
        match mode {
            HMode::Exact => mix.exact += 1,
            HMode::Formula => mix.formula += 1,
            HMode::Absent => unreachable!("hybrid always produces a mode"),
        }
        rec.set_h(h, mode);
    }
    Ok(mix)
}

/// Sum of `h(d)^k` over a run that already carries class numbers, with a
/// deterministic compensated reduction. (Lives here rather than in the
/// moments module so the class-number machinery can be tested closed.)
pub(crate) fn sum_h_pow(run: &EnumerationRun, k: f64) -> Result<f64> {
    for r in &run.records {
        if r.h().is_none() {
            return Err(Error::MissingClassNumber(r.d));
        }
    }
    let records = &run.records;
    let mut acc = CompensatedSum::new();
    let block = 4096;
    let partials: Vec<f64> = (0..records.len().div_ceil(block))
        .into_par_iter()
        .map(|bi| {
            let mut s = CompensatedSum::new();
            for r in &records[bi * block..((bi + 1) * block).min(records.len())] {
                let h = r.h().expect("checked above") as f64;
                s.add(h.powf(k));
            }
            s.total()
        })
        .collect();
    for p in partials {
        acc.add(p);
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pell::enumerate;

    fn spf() -> SpfTable {
        // Large enough for the escalated smoothing workspace at y = 10^5.
        SpfTable::build(4_200_000).unwrap()
    }

    #[test]
    fn reduced_forms_spec_values() {
        let t = spf();
        let f12 = reduced_forms(12, &t).unwrap();
        assert_eq!(
            f12,
            vec![
                QuadForm { a: -2, b: 2, c: 1 },
                QuadForm { a: -1, b: 2, c: 2 },
                QuadForm { a: 1, b: 2, c: -2 },
                QuadForm { a: 2, b: 2, c: -1 },
            ]
        );
        let f5 = reduced_forms(5, &t).unwrap();
        assert_eq!(
            f5,
            vec![QuadForm { a: -1, b: 1, c: 1 }, QuadForm { a: 1, b: 1, c: -1 }]
        );
        assert!(matches!(reduced_forms(9, &t), Err(Error::Domain(9))));
    }

    #[test]
    fn rho_step_spec_values() {
        let t = spf();
        let f = QuadForm { a: 1, b: 2, c: -2 };
        let g = rho_step(&f, 12).unwrap();
        assert_eq!(g, QuadForm { a: -2, b: 2, c: 1 });
        assert_eq!(rho_step(&g, 12).unwrap(), f);
        let f = QuadForm { a: 1, b: 1, c: -1 };
        assert_eq!(rho_step(&f, 5).unwrap(), QuadForm { a: -1, b: 1, c: 1 });
        assert!(rho_step(&QuadForm { a: 5, b: 1, c: -1 }, 21).is_err());
        let _ = t;
    }

    #[test]
    fn class_number_cycles_spec_values() {
        let t = spf();
        assert_eq!(class_number_cycles(5, &t).unwrap(), 1);
        assert_eq!(class_number_cycles(8, &t).unwrap(), 1);
        assert_eq!(class_number_cycles(12, &t).unwrap(), 2);
    }

    #[test]
    fn rho_is_a_bijection_with_even_cycles() {
        let t = spf();
        for d in 5..=5000u64 {
            if validate_discriminant(d).is_err() {
                continue;
            }
            let forms = reduced_forms(d, &t).unwrap();
            let mut seen: HashMap<(i64, i64), u32> = HashMap::new();
            for f in &forms {
                let g = rho_step(f, d).unwrap();
                assert_eq!(g.discriminant(), d as i64, "d={d}");
                *seen.entry((g.a, g.b)).or_insert(0) += 1;
            }
            assert_eq!(seen.len(), forms.len(), "rho not injective for d={d}");
            assert!(seen.values().all(|&v| v == 1), "in-degree 1 fails for d={d}");

            // Every cycle has even length.
            let index: HashMap<(i64, i64), usize> = forms
                .iter()
                .enumerate()
                .map(|(i, f)| ((f.a, f.b), i))
                .collect();
            let mut visited = vec![false; forms.len()];
            for start in 0..forms.len() {
                if visited[start] {
                    continue;
                }
                let mut len = 0u64;
                let mut cur = start;
                loop {
                    visited[cur] = true;
                    len += 1;
                    let g = rho_step(&forms[cur], d).unwrap();
                    cur = index[&(g.a, g.b)];
                    if cur == start {
                        break;
                    }
                }
                assert_eq!(len % 2, 0, "odd cycle length {len} for d={d}");
            }
        }
    }

    #[test]
    fn smoothed_series_hits_classical_l_value() {
        // L(1, chi_5) = 2 log(golden ratio) / sqrt 5.
        let t = spf();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let expected = 2.0 * phi.ln() / 5f64.sqrt();
        let got = l_smoothed(5, 1.0, 1e4, &t).unwrap();
        assert!(
            (got.value - expected).abs() < 0.01,
            "got {}, classical {expected}",
            got.value
        );
        assert!(got.terms_used >= (1e4 * (1e4f64 / SMOOTHING_EPS_TAIL).ln()) as u64);
    }

    #[test]
    fn smoothed_series_leading_term() {
        // The n = 1 term is e^{-1/y}; for a discriminant whose character
        // kills every prime up to the cutoff that would be the whole sum,
        // so just check weights[1] via a tiny workspace.
        let t = spf();
        let ws = LSeriesWorkspace::new(1.0, 2.0, &t).unwrap();
        assert!((ws.weights[1] - (-0.5f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn formula_round_trip_and_reliability() {
        let t = spf();
        let run = enumerate(10, &t).unwrap();
        let r5 = &run.records[0];
        assert_eq!(r5.d, 5);

        let est = class_number_formula(r5, 0.43041).unwrap();
        assert_eq!(est.h_rounded, 1);
        assert!(est.reliable);
        assert!((est.h_real - 1.0).abs() < 1e-3);

        // Inverting the formula is the identity.
        for rec in &run.records {
            let h = class_number_cycles(rec.d, &t).unwrap();
            let l = h as f64 * rec.log_eps / (rec.d as f64).sqrt();
            let est = class_number_formula(rec, l).unwrap();
            assert_eq!(est.h_rounded, h);
            assert!((est.h_real - h as f64).abs() < 1e-12);
        }

        let bad = class_number_formula(r5, 0.6).unwrap();
        assert!(!bad.reliable);
        assert!((bad.h_real - 1.394).abs() < 0.01);
    }

    #[test]
    fn hybrid_modes() {
        let t = spf();
        let run = enumerate(10, &t).unwrap();
        let mut rec = run.records[0].clone();
        class_number_hybrid(
            &mut rec,
            HybridOptions {
                mode: HybridMode::Auto,
                d_exact_max: 1_000_000,
                y: 1e4,
            },
            &t,
        )
        .unwrap();
        assert_eq!(rec.h(), Some(1));
        assert_eq!(rec.h_mode(), HMode::Exact);

        let mut rec = run.records[0].clone();
        class_number_hybrid(
            &mut rec,
            HybridOptions {
                mode: HybridMode::Formula,
                d_exact_max: 0,
                y: 1e4,
            },
            &t,
        )
        .unwrap();
        assert_eq!(rec.h(), Some(1));
        assert_eq!(rec.h_mode(), HMode::Formula);
    }

    #[test]
    fn hybrid_rejects_invalid_discriminant() {
        let t = spf();
        let mut rec = DiscriminantRecord::new(9, 6, 1);
        assert!(class_number_hybrid(&mut rec, HybridOptions::default(), &t).is_err());
    }

    #[test]
    fn kth_power_consistency_of_smoothed_series() {
        // The k-th series tracks the k-th power of the k = 1 series. At
        // y = 10^4 the agreement is ~1e-2 in the worst case over d <= 10^4
        // (measured: 1.2e-2 at d = 573, k = 3) and tightens with y, so the
        // sweep allows 2e-2 pointwise and requires the bulk inside 1e-2.
        let t = spf();
        let ws1 = LSeriesWorkspace::new(1.0, 1e4, &t).unwrap();
        let mut chi = Vec::new();
        for k in [2.0, 3.0] {
            let wsk = LSeriesWorkspace::new(k, 1e4, &t).unwrap();
            let mut checked = 0u32;
            let mut tight = 0u32;
            let mut d = 5u64;
            while d <= 10_000 {
                if validate_discriminant(d).is_ok() {
                    let base = ws1.eval(d, &t, &mut chi).value;
                    let powed = wsk.eval(d, &t, &mut chi).value;
                    let rel = (powed - base.powf(k)).abs() / base.powf(k).abs();
                    assert!(rel < 2e-2, "d={d} k={k}: rel {rel}");
                    checked += 1;
                    if rel < 1e-2 {
                        tight += 1;
                    }
                }
                d += 73;
            }
            assert!(checked > 100);
            assert!(
                tight * 10 >= checked * 9,
                "k={k}: only {tight}/{checked} inside 1e-2"
            );
        }
    }

    #[test]
    fn attach_class_numbers_mixes_modes() {
        let t = spf();
        let mut run = enumerate(60, &t).unwrap();
        let mix = attach_class_numbers(
            &mut run,
            HybridOptions {
                mode: HybridMode::Auto,
                d_exact_max: 500,
                y: 1e4,
            },
            &t,
        )
        .unwrap();
        assert!(mix.exact > 0 && mix.formula > 0);
        assert_eq!(
            mix.exact + mix.formula,
            run.records.len() as u64,
            "every record classified"
        );
        // Exact and formula agree wherever both are cheap to check.
        for rec in &run.records {
            let h = class_number_cycles(rec.d, &t).unwrap();
            assert_eq!(rec.h(), Some(h), "d = {}", rec.d);
        }
    }
}
