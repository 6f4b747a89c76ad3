//! Empirical moment sums over enumerated discriminants against their
//! predicted main terms: plain moments `sum h(d)^k` vs
//! `H(k) int_2^x (t/log t)^k dt`, and twisted sums
//! `sum chi_d(m) d^(k/2)` vs `C(k)/(k+1) g_k(m) x^(k+1)`.

use std::time::Instant;

use crate::arith::{kronecker, SpfTable};
use crate::constants::{c_of_k, gk, h_of_k, EULER_GAMMA};
use crate::forms::{attach_class_numbers, sum_h_pow, HModeMix, HybridOptions};
use crate::numeric::{adaptive_simpson, block_sum};
use crate::pell::{enumerate, EnumerationRun};
use crate::{Error, Result};

/// Default prime bound for the constants entering predictions.
pub fn default_p_limit(k: f64) -> u64 {
    100_000u64.max((10.0 * k * k).ceil() as u64)
}

/// One empirical-vs-predicted comparison row.
#[derive(Debug, Clone)]
pub struct MomentReport {
    pub x: u64,
    pub k: f64,
    /// Twist; 1 for plain moments.
    pub m: u64,
    pub empirical: f64,
    pub predicted: f64,
    pub ratio: f64,
    pub h_mix: HModeMix,
    pub seconds: f64,
}

/// `int_2^x (t/log t)^k dt` by adaptive quadrature, relative 1e-8.
pub fn integral_power_main(x: u64, k: f64) -> Result<f64> {
    if x < 3 {
        return Err(Error::OutOfRange {
            what: "integral bound x",
            value: x,
            range: "x >= 3",
        });
    }
    let xf = x as f64;
    let f = |t: f64| (k * (t.ln() - t.ln().ln())).exp();
    // The integrand increases, so (b - a) f(b) dominates the value.
    let scale = (xf - 2.0) * f(xf);
    let q = adaptive_simpson(f, 2.0, xf, 1e-8 * scale)?;
    Ok(q.value)
}

/// The predicted main term `H(k) * int_2^x (t/log t)^k dt`.
pub fn main_term_integral(x: u64, k: f64, spf: &SpfTable) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::Validation(format!(
            "main term needs k > 0, got {k}"
        )));
    }
    let h = h_of_k(k, default_p_limit(k).min(spf.limit()), spf)?;
    Ok(h.value * integral_power_main(x, k)?)
}

/// `sum h(d)^k` over a run that carries class numbers.
pub fn empirical_moment(run: &EnumerationRun, k: f64) -> Result<f64> {
    sum_h_pow(run, k)
}

/// Tally how the class numbers already on a run were produced.
pub fn mix_of(run: &EnumerationRun) -> HModeMix {
    let mut mix = HModeMix::default();
    for r in &run.records {
        match r.h_mode() {
            crate::pell::HMode::Exact => mix.exact += 1,
            crate::pell::HMode::Formula => mix.formula += 1,
            crate::pell::HMode::Absent => {}
        }
    }
    mix
}

/// Principal-value logarithmic integral `li(y) = PV int_0^y dt/log t`,
/// by the rapidly convergent series
/// `li(y) = gamma + log log y + sum_j (log y)^j / (j j!)`.
pub fn li(y: f64) -> f64 {
    debug_assert!(y >= 2.0, "li is used for y >= 2, got {y}");
    let l = y.ln();
    let mut sum = EULER_GAMMA + l.ln();
    let mut term = 1.0f64;
    for j in 1..400 {
        let jf = j as f64;
        term *= l / jf;
        let contrib = term / jf;
        sum += contrib;
        if contrib.abs() < 1e-17 * sum.abs() && j as f64 > l {
            break;
        }
    }
    sum
}

/// The 2-offset convention `Li(y) = li(y) - li(2)`.
pub fn li_from_2(y: f64) -> f64 {
    li(y) - li(2.0)
}

/// `sum chi_d(m) d^(k/2)` over the records of a run; needs no class
/// numbers. Deterministic fixed-block reduction.
pub fn twisted_empirical(run: &EnumerationRun, k: f64, m: u64) -> f64 {
    let records = &run.records;
    block_sum(records.len(), |i| {
        let r = &records[i];
        let chi = kronecker(r.d as i64, m);
        if chi == 0 {
            0.0
        } else {
            f64::from(chi) * (0.5 * k * (r.d as f64).ln()).exp()
        }
    })
}

/// The predicted twisted main term `C(k)/(k+1) * g_k(m) * x^(k+1)`.
pub fn twisted_predicted(x: u64, k: f64, m: u64, spf: &SpfTable) -> Result<f64> {
    let c = c_of_k(k, default_p_limit(k).min(spf.limit()), spf)?;
    let g = gk(m, k, spf)?;
    Ok(c.value / (k + 1.0) * g * (x as f64).powf(k + 1.0))
}

/// Run one full comparison: enumerate, attach class numbers where the
/// moment needs them (plain moments with `k > 0`), and report empirical
/// against predicted.
pub fn moment_report(
    x: u64,
    k: f64,
    m: u64,
    h_opts: HybridOptions,
    spf: &SpfTable,
) -> Result<MomentReport> {
    let started = Instant::now();
    let mut run = enumerate(x, spf)?;
    report_for_run(&mut run, k, m, h_opts, spf, started)
}

/// As [`moment_report`], but over an existing run (shared by callers that
/// compare several `(k, m)` against one enumeration).
pub fn report_for_run(
    run: &mut EnumerationRun,
    k: f64,
    m: u64,
    h_opts: HybridOptions,
    spf: &SpfTable,
    started: Instant,
) -> Result<MomentReport> {
    let x = run.x;
    let (empirical, predicted, h_mix);
    if m == 1 && k > 0.0 {
        if run.records.iter().any(|r| r.h().is_none()) {
            attach_class_numbers(run, h_opts, spf)?;
        }
        h_mix = mix_of(run);
        empirical = empirical_moment(run, k)?;
        predicted = main_term_integral(x, k, spf)?;
    } else {
        h_mix = HModeMix::default();
        empirical = twisted_empirical(run, k, m);
        predicted = twisted_predicted(x, k, m, spf)?;
    }
    Ok(MomentReport {
        x,
        k,
        m,
        empirical,
        predicted,
        ratio: empirical / predicted,
        h_mix,
        seconds: started.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::class_number_cycles;

    fn spf() -> SpfTable {
        // Covers the escalated smoothing workspace at y = 10^5.
        SpfTable::build(4_200_000).unwrap()
    }

    #[test]
    fn li_reference_values() {
        // Classical table values.
        assert!((li(1e4) - 1246.137) .abs() < 0.01, "li(10^4) = {}", li(1e4));
        assert!((li(2.0) - 1.04516).abs() < 1e-3, "li(2) = {}", li(2.0));
        // Leading asymptotics.
        let y = 1e10f64;
        assert!((li(y) / (y / y.ln()) - 1.0).abs() < 0.12);
    }

    #[test]
    fn li_agrees_with_principal_value_quadrature() {
        // Independent route: PV int_0^y dt/log t with the symmetric window
        // around the pole contributing delta + O(delta^3).
        let y = 1e4f64;
        let delta = 1e-4;
        let left = adaptive_simpson(|t| 1.0 / t.ln(), 1e-12, 1.0 - delta, 1e-9)
            .unwrap()
            .value;
        let right = adaptive_simpson(|t| 1.0 / t.ln(), 1.0 + delta, y, 1e-9)
            .unwrap()
            .value;
        let pv = left + right + delta;
        assert!((li(y) - pv).abs() < 1e-4, "series {} vs PV {}", li(y), pv);
    }

    #[test]
    fn integral_power_main_limits() {
        // k -> 0: the integrand tends to 1, so the integral tends to x - 2.
        let v = integral_power_main(1000, 1e-9).unwrap();
        assert!((v - 998.0).abs() < 1e-3, "got {v}");
        // Monotone in x.
        let a = integral_power_main(100, 1.3).unwrap();
        let b = integral_power_main(200, 1.3).unwrap();
        assert!(b > a);
    }

    #[test]
    fn integral_form_vs_simple_form() {
        // The simple form x^(k+1)/((k+1) log^k x) agrees to 1 + O(1/log x).
        let x = 1_000_000u64;
        let k = 1.0;
        let xf = x as f64;
        let integral = integral_power_main(x, k).unwrap();
        let simple = xf.powf(k + 1.0) / ((k + 1.0) * xf.ln().powf(k));
        let ratio = integral / simple;
        assert!((1.0..=1.2).contains(&ratio), "ratio = {ratio}");
    }

    #[test]
    fn empirical_moment_oracle_at_ten() {
        let t = spf();
        let mut run = enumerate(10, &t).unwrap();
        let missing = empirical_moment(&run, 1.0);
        assert!(matches!(missing, Err(Error::MissingClassNumber(5))));

        attach_class_numbers(&mut run, HybridOptions::default(), &t).unwrap();
        // k = 0 is the record count.
        assert_eq!(empirical_moment(&run, 0.0).unwrap(), 10.0);
        let sum = empirical_moment(&run, 1.0).unwrap();
        let oracle: u64 = run
            .records
            .iter()
            .map(|r| class_number_cycles(r.d, &t).unwrap())
            .sum();
        assert_eq!(sum, oracle as f64);
    }

    #[test]
    fn twisted_identities() {
        let t = spf();
        let run = enumerate(2000, &t).unwrap();
        // m = 1, k = 0 is the record count.
        assert_eq!(twisted_empirical(&run, 0.0, 1), run.records.len() as f64);
        // chi_d(4) = 1 iff d odd.
        let odd = run.records.iter().filter(|r| r.d % 2 == 1).count() as f64;
        assert_eq!(twisted_empirical(&run, 0.0, 4), odd);
        // m = 3 empirical is negative, matching the sign of g_0(3).
        assert!(twisted_empirical(&run, 0.0, 3) < 0.0);
        assert!(gk(3, 0.0, &t).unwrap() < 0.0);
    }

    #[test]
    fn twisted_predicted_spec_values() {
        let t = spf();
        // m = 1, k = 0 is the density prediction (35/16) x.
        let p = twisted_predicted(1000, 0.0, 1, &t).unwrap();
        assert!((p - 35.0 / 16.0 * 1000.0).abs() < 1e-6);
        // m = 3, k = 0: C(0) g_0(3) x = -(7/12) x.
        let p3 = twisted_predicted(1200, 0.0, 3, &t).unwrap();
        assert!((p3 - (-7.0 / 12.0) * 1200.0).abs() < 1e-6, "got {p3}");
        // m = 1, k = 1: C(1)/2 x^2.
        let c1 = c_of_k(1.0, 100_000, &t).unwrap().value;
        let p1 = twisted_predicted(1000, 1.0, 1, &t).unwrap();
        assert!((p1 - c1 / 2.0 * 1e6).abs() < 1e-4);
    }

    #[test]
    fn moment_report_small_smoke() {
        let t = spf();
        let r = moment_report(2000, 1.0, 1, HybridOptions::default(), &t).unwrap();
        assert!(r.ratio.is_finite() && r.ratio > 0.5 && r.ratio < 1.5);
        let count = enumerate(2000, &t).unwrap().records.len() as u64;
        assert_eq!(
            r.h_mix.exact + r.h_mix.formula,
            count,
            "every record contributes to the disclosed mix"
        );
        let tw = moment_report(2000, 0.0, 3, HybridOptions::default(), &t).unwrap();
        assert!(tw.empirical < 0.0 && tw.predicted < 0.0);
    }
}
