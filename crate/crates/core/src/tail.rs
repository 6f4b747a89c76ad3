//! Distribution of large class numbers: the empirical proportion above the
//! `tau`-scaled threshold `(e^gamma/3)(x/log x) tau` against the predicted
//! tail `exp(-e^(tau - A_0)/tau)`, extreme-value scans, the exact rational
//! invariant `E(d) <= 1`, and the conditional upper-bound ceilings.

use num_rational::Ratio;

use crate::arith::kronecker;
use crate::constants::{a0_cached, EULER_GAMMA};
use crate::pell::{DiscriminantRecord, EnumerationRun};
use crate::{Error, Result};

pub type Rational = Ratio<i64>;

/// One tail comparison at a fixed `tau`.
#[derive(Debug, Clone, Copy)]
pub struct TailReport {
    pub x: u64,
    pub tau: f64,
    /// `(e^gamma / 3) (x / log x) tau`.
    pub threshold: f64,
    pub count_above: u64,
    pub total: u64,
    pub empirical: f64,
    pub predicted: f64,
}

/// Records with `eps_d` at most this are excluded from extreme scans:
/// below `e^e` the normalizing `log log eps_d` is not meaningfully
/// positive.
pub const EXTREME_MIN_LOG_EPS: f64 = std::f64::consts::E;

fn require_h(run: &EnumerationRun) -> Result<()> {
    match run.records.iter().find(|r| r.h().is_none()) {
        Some(r) => Err(Error::MissingClassNumber(r.d)),
        None => Ok(()),
    }
}

/// Proportion of records with `h(d)` at or above the `tau` threshold,
/// with the predicted tail alongside.
pub fn empirical_tail(run: &EnumerationRun, tau: f64) -> Result<TailReport> {
    if !(tau >= 0.5) {
        return Err(Error::Validation(format!(
            "tail comparisons need tau >= 0.5, got {tau}"
        )));
    }
    require_h(run)?;
    let x = run.x as f64;
    let threshold = EULER_GAMMA.exp() / 3.0 * (x / x.ln()) * tau;
    let count_above = run
        .records
        .iter()
        .filter(|r| r.h().expect("checked") as f64 >= threshold)
        .count() as u64;
    let total = run.records.len() as u64;
    Ok(TailReport {
        x: run.x,
        tau,
        threshold,
        count_above,
        total,
        empirical: count_above as f64 / total as f64,
        predicted: predicted_tail(tau),
    })
}

/// The main term of the tail formula, `exp(-e^(tau - A_0)/tau)`; the
/// `1 + O(1/sqrt(tau))` factor inside the exponent is deliberately
/// omitted.
pub fn predicted_tail(tau: f64) -> f64 {
    debug_assert!(tau > 0.0);
    (-((tau - a0_cached()).exp()) / tau).exp()
}

/// One extreme record: `ratio = 3 h log eps / (e^gamma eps log log eps)`,
/// the quantity the conditional ceilings bound by 1 + o(1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeRecord {
    pub d: u64,
    pub t: u64,
    pub u: u64,
    pub h: u64,
    pub ratio: f64,
}

/// Result of an extreme-value scan.
#[derive(Debug, Clone)]
pub struct ExtremeScan {
    /// Top records by ratio, descending; ties broken toward smaller `d`.
    pub records: Vec<ExtremeRecord>,
    /// Records skipped because `eps_d <= e^e`.
    pub excluded: u64,
}

/// The `top_n` records by extremal ratio.
pub fn extreme_scan(run: &EnumerationRun, top_n: usize) -> Result<ExtremeScan> {
    require_h(run)?;
    let mut excluded = 0u64;
    let mut all: Vec<ExtremeRecord> = Vec::new();
    let egamma = EULER_GAMMA.exp();
    for r in &run.records {
        if r.log_eps <= EXTREME_MIN_LOG_EPS {
            excluded += 1;
            continue;
        }
        let h = r.h().expect("checked") as f64;
        let eps = r.eps();
        let ratio = 3.0 * h * r.log_eps / (egamma * eps * r.log_eps.ln());
        all.push(ExtremeRecord {
            d: r.d,
            t: r.t,
            u: r.u,
            h: h as u64,
            ratio,
        });
    }
    all.sort_by(|a, b| {
        b.ratio
            .partial_cmp(&a.ratio)
            .expect("ratios are finite")
            .then(a.d.cmp(&b.d))
    });
    all.truncate(top_n);
    Ok(ExtremeScan {
        records: all,
        excluded,
    })
}

/// `E(d) = (1/u)(1 - chi_d(2)/2)^-1 (1 - chi_d(3)/3)^-1` as an exact
/// rational; at most 1 for every enumerated discriminant.
pub fn e_of_d(rec: &DiscriminantRecord) -> Rational {
    let d = rec.d as i64;
    let chi2 = kronecker(d, 2);
    let chi3 = kronecker(d, 3);
    let f2 = match chi2 {
        1 => Rational::new(2, 1),
        0 => Rational::new(1, 1),
        _ => Rational::new(2, 3),
    };
    let f3 = match chi3 {
        1 => Rational::new(3, 2),
        0 => Rational::new(1, 1),
        _ => Rational::new(3, 4),
    };
    Rational::new(1, rec.u as i64) * f2 * f3
}

/// Which conditional regime a ceiling is computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Riemann-hypothesis ceiling `(2 e^gamma / 3) eps log log eps / log eps`.
    Grh,
    /// Short-product ceiling, exactly half the above.
    Littlewood,
}

/// The conditional ceiling for `h(d)`, asymptotic `o(1)` omitted. Needs
/// `eps_d > e^e` so `log log eps_d > 1`.
pub fn conditional_bound(rec: &DiscriminantRecord, regime: Regime) -> Result<f64> {
    if rec.log_eps <= std::f64::consts::E {
        return Err(Error::Validation(format!(
            "conditional bound needs eps_d > e^e, but d = {} has log eps = {}",
            rec.d, rec.log_eps
        )));
    }
    let eps = rec.eps();
    let base = EULER_GAMMA.exp() / 3.0 * eps * rec.log_eps.ln() / rec.log_eps;
    Ok(match regime {
        Regime::Grh => 2.0 * base,
        Regime::Littlewood => base,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::SpfTable;
    use crate::forms::{attach_class_numbers, HybridOptions};
    use crate::pell::enumerate;

    fn spf() -> SpfTable {
        // Covers the escalated smoothing workspace at y = 10^5.
        SpfTable::build(4_200_000).unwrap()
    }

    fn run_with_h(x: u64) -> EnumerationRun {
        let t = spf();
        let mut run = enumerate(x, &t).unwrap();
        attach_class_numbers(&mut run, HybridOptions::default(), &t).unwrap();
        run
    }

    #[test]
    fn predicted_tail_spec_values() {
        let a0 = a0_cached();
        let at_a0 = predicted_tail(a0);
        assert!((at_a0 - (-1.0 / a0).exp()).abs() < 1e-12);
        assert!((at_a0 - 0.2949).abs() < 2e-3, "got {at_a0}");
        let at3 = predicted_tail(3.0);
        assert!((at3 - 0.0523).abs() < 2e-3, "got {at3}");
        assert!(predicted_tail(40.0) < 1e-30);
    }

    #[test]
    fn tail_monotone_in_tau_and_well_formed() {
        let run = run_with_h(2000);
        let mut last = f64::INFINITY;
        for tau in [0.5, 0.8, 1.1, 1.4, 1.7] {
            let rep = empirical_tail(&run, tau).unwrap();
            assert!(rep.threshold > 0.0);
            assert!((0.0..=1.0).contains(&rep.empirical));
            assert!(rep.empirical <= last, "tau = {tau}");
            last = rep.empirical;
        }
        assert!(empirical_tail(&run, 0.4).is_err());
    }

    #[test]
    fn tail_requires_class_numbers() {
        let t = spf();
        let run = enumerate(100, &t).unwrap();
        assert!(matches!(
            empirical_tail(&run, 1.0),
            Err(Error::MissingClassNumber(5))
        ));
    }

    #[test]
    fn e_of_d_spec_values() {
        let t = spf();
        let run = enumerate(10, &t).unwrap();
        let r5 = &run.records[0];
        assert_eq!(e_of_d(r5), Rational::new(1, 2));
        let r8 = run.records.iter().find(|r| r.d == 8).unwrap();
        assert_eq!(e_of_d(r8), Rational::new(3, 8));
    }

    #[test]
    fn e_of_d_at_most_one_small_sweep() {
        let t = spf();
        let run = enumerate(3000, &t).unwrap();
        let one = Rational::new(1, 1);
        for r in &run.records {
            let e = e_of_d(r);
            assert!(e <= one, "E({}) = {e}", r.d);
            if r.u >= 3 {
                assert!(e <= one);
            }
            if r.u <= 2 {
                assert_ne!(kronecker(r.d as i64, 2), 1, "d = {}", r.d);
                assert_ne!(kronecker(r.d as i64, 3), 1, "d = {}", r.d);
            }
        }
    }

    #[test]
    fn extreme_scan_excludes_tiny_units_and_sorts() {
        let run = run_with_h(500);
        let scan = extreme_scan(&run, 10).unwrap();
        // eps_5 = 2.618 < e^e is excluded.
        assert!(scan.excluded >= 1);
        assert!(scan.records.len() == 10.min(run.records.len()));
        for w in scan.records.windows(2) {
            assert!(
                w[0].ratio > w[1].ratio || (w[0].ratio == w[1].ratio && w[0].d < w[1].d)
            );
        }
        // Deterministic under re-runs.
        let again = extreme_scan(&run, 10).unwrap();
        assert_eq!(scan.records, again.records);
        assert_eq!(scan.excluded, again.excluded);
    }

    #[test]
    fn conditional_bounds_ratio_is_two() {
        let run = run_with_h(500);
        let rec = run.records.iter().find(|r| r.log_eps > 3.0).unwrap();
        let grh = conditional_bound(rec, Regime::Grh).unwrap();
        let lw = conditional_bound(rec, Regime::Littlewood).unwrap();
        assert_eq!(grh, 2.0 * lw);
        // e^gamma / 3 = 0.5936908...
        assert!((EULER_GAMMA.exp() / 3.0 - 0.5936908).abs() < 1e-6);
        // Small units are refused.
        let tiny = &run.records[0];
        assert!(conditional_bound(tiny, Regime::Grh).is_err());
    }

    #[test]
    fn ceilings_hold_with_slack_at_small_scale() {
        let run = run_with_h(2000);
        for r in &run.records {
            if r.log_eps <= std::f64::consts::E {
                continue;
            }
            let ceiling = conditional_bound(r, Regime::Grh).unwrap();
            let h = r.h().unwrap() as f64;
            assert!(
                h <= ceiling * 1.5,
                "d = {}: h = {h} vs GRH ceiling {ceiling}",
                r.d
            );
        }
    }
}
