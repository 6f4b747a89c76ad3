//! Enumeration of the positive discriminants with fundamental unit at most
//! `x`, via the bijection between admissible Pell pairs `(t, u)` and powers
//! of fundamental units: `t` ranges over `(2, x]`, `t^2 - 4 = (t-2)(t+2)`
//! is factored with the sieve, and every `u` with `u^2 | t^2 - 4` yields a
//! candidate discriminant `d(t, u) = (t^2 - 4)/u^2`. The minimal `t` seen
//! for a discriminant marks its fundamental solution.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::num::NonZeroU64;
use std::path::Path;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::arith::{Factorization, SpfTable};
use crate::numeric::is_square;
use crate::{Error, Result};

/// Largest supported enumeration bound.
pub const MAX_ENUMERATION_X: u64 = 10_000_000;

/// How a record's class number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HMode {
    Absent,
    Exact,
    Formula,
}

/// One discriminant `d` with its fundamental Pell solution `(t, u)` of
/// `t^2 - d u^2 = 4`, the regulator `log eps_d`, and an optional class
/// number.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminantRecord {
    pub d: u64,
    pub t: u64,
    pub u: u64,
    pub log_eps: f64,
    h: Option<NonZeroU64>,
    h_mode: HMode,
}

impl DiscriminantRecord {
    pub fn new(d: u64, t: u64, u: u64) -> Self {
        DiscriminantRecord {
            d,
            t,
            u,
            log_eps: log_eps(t),
            h: None,
            h_mode: HMode::Absent,
        }
    }

    pub fn h(&self) -> Option<u64> {
        self.h.map(NonZeroU64::get)
    }

    pub fn h_mode(&self) -> HMode {
        self.h_mode
    }

    pub fn set_h(&mut self, h: u64, mode: HMode) {
        self.h = NonZeroU64::new(h);
        self.h_mode = if self.h.is_some() { mode } else { HMode::Absent };
    }

    /// The fundamental unit `(t + u sqrt d)/2` itself.
    pub fn eps(&self) -> f64 {
        self.log_eps.exp()
    }
}

/// `log((t + sqrt(t^2 - 4)) / 2)`, using `u sqrt d = sqrt(t^2 - 4)` so no
/// rounding of `sqrt d` enters.
fn log_eps(t: u64) -> f64 {
    let tf = t as f64;
    ((tf + (tf * tf - 4.0).sqrt()) / 2.0).ln()
}

/// The set `{d : eps_d <= x}` with fundamental pairs, plus the total count
/// of admissible `(t, u)` pairs seen (fundamental or not).
///
/// `pair_count` is a statistic of the enumeration itself; it is not
/// persisted by the cache format.
#[derive(Debug, Clone)]
pub struct EnumerationRun {
    pub x: u64,
    /// Sorted by `d` ascending.
    pub records: Vec<DiscriminantRecord>,
    pub pair_count: u64,
}

/// Exact boundary test `eps(t) = (t + sqrt(t^2-4))/2 <= x`, decided as
/// `t * x <= x^2 + 1` in integers (equivalent to `t <= x + 1/x`).
pub fn within_bound(t: u64, x: u64) -> bool {
    (t as u128) * (x as u128) <= (x as u128) * (x as u128) + 1
}

/// `d(t, u) = (t^2 - 4)/u^2` when that is a valid discriminant; `None`
/// otherwise.
pub fn discriminant_of_pair(t: u64, u: u64) -> Option<u64> {
    debug_assert!(t > 2 && u >= 1);
    let n = (t as u128) * (t as u128) - 4;
    let uu = (u as u128) * (u as u128);
    if n % uu != 0 {
        return None;
    }
    let d = (n / uu) as u64;
    if d % 4 > 1 || is_square(d) {
        return None;
    }
    Some(d)
}

/// Square divisors of `t^2 - 4` from the merged factorization of
/// `(t-2)(t+2)`: every `u` with `u^2 | t^2 - 4` divides the product of
/// `p^floor(e/2)`.
fn square_divisor_roots(fm2: &Factorization, fp2: &Factorization) -> Vec<u64> {
    let mut half: Vec<(u64, u32)> = Vec::with_capacity(fm2.factors.len() + fp2.factors.len());
    let (mut i, mut j) = (0, 0);
    while i < fm2.factors.len() || j < fp2.factors.len() {
        let (p, e) = if j >= fp2.factors.len()
            || (i < fm2.factors.len() && fm2.factors[i].0 < fp2.factors[j].0)
        {
            let v = fm2.factors[i];
            i += 1;
            v
        } else if i >= fm2.factors.len() || fp2.factors[j].0 < fm2.factors[i].0 {
            let v = fp2.factors[j];
            j += 1;
            v
        } else {
            let v = (fm2.factors[i].0, fm2.factors[i].1 + fp2.factors[j].1);
            i += 1;
            j += 1;
            v
        };
        if e >= 2 {
            half.push((p, e / 2));
        }
    }
    let mut out = vec![1u64];
    for (p, e) in half {
        let prev = out.len();
        let mut pw = 1u64;
        for _ in 0..e {
            pw *= p;
            for idx in 0..prev {
                out.push(out[idx] * pw);
            }
        }
    }
    out
}

/// Enumerate `{d : eps_d <= x}` exactly.
pub fn enumerate(x: u64, spf: &SpfTable) -> Result<EnumerationRun> {
    if !(3..=MAX_ENUMERATION_X).contains(&x) {
        return Err(Error::OutOfRange {
            what: "enumeration bound x",
            value: x,
            range: "3 <= x <= 10^7",
        });
    }
    if spf.limit() < x + 2 {
        return Err(Error::Validation(format!(
            "sieve limit {} too small for enumeration up to x = {x} (need x + 2)",
            spf.limit()
        )));
    }

    // For integer t >= 3 and x >= 3 the exact test reduces to t <= x.
    const CHUNK: u64 = 1 << 15;
    let chunks: Vec<(u64, u64)> = {
        let mut v = Vec::new();
        let mut lo = 3u64;
        while lo <= x {
            let hi = (lo + CHUNK - 1).min(x);
            v.push((lo, hi));
            lo = hi + 1;
        }
        v
    };

    let per_chunk: Vec<Vec<(u64, u64, u64)>> = chunks
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut triples = Vec::new();
            for t in lo..=hi {
                debug_assert!(within_bound(t, x));
                let fm2 = spf.factor(t - 2).expect("t-2 <= limit");
                let fp2 = spf.factor(t + 2).expect("t+2 <= limit");
                for u in square_divisor_roots(&fm2, &fp2) {
                    if let Some(d) = discriminant_of_pair(t, u) {
                        triples.push((d, t, u));
                    }
                }
            }
            triples
        })
        .collect();

    let pair_count: u64 = per_chunk.iter().map(|c| c.len() as u64).sum();
    let mut triples: Vec<(u64, u64, u64)> = per_chunk.into_iter().flatten().collect();
    triples.par_sort_unstable();

    let mut records: Vec<DiscriminantRecord> = Vec::new();
    for (d, t, u) in triples {
        if records.last().map(|r| r.d) != Some(d) {
            records.push(DiscriminantRecord::new(d, t, u));
        }
    }
    Ok(EnumerationRun {
        x,
        records,
        pair_count,
    })
}

/// `|records| / x` — the empirical density to compare with 35/16.
pub fn density_report(run: &EnumerationRun) -> f64 {
    run.records.len() as f64 / run.x as f64
}

fn cache_body(run: &EnumerationRun) -> String {
    let mut body = String::with_capacity(run.records.len() * 16);
    for r in &run.records {
        let _ = writeln!(body, "{},{},{}", r.d, r.t, r.u);
    }
    body
}

fn sha_hex(body: &str) -> String {
    let digest = Sha256::digest(body.as_bytes());
    let mut s = String::with_capacity(64);
    for b in digest {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// Write the run to `path` in the `pell-cache v1` format: a header line
/// `pell-cache v1 x=<x> count=<n> sha=<hex of body>` followed by one
/// `d,t,u` line per record, ascending in `d`.
pub fn cache_write(run: &EnumerationRun, path: &Path) -> Result<()> {
    let body = cache_body(run);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(
        f,
        "pell-cache v1 x={} count={} sha={}",
        run.x,
        run.records.len(),
        sha_hex(&body)
    )?;
    f.write_all(body.as_bytes())?;
    f.flush()?;
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::CacheParse {
        line,
        msg: msg.into(),
    }
}

/// Read a run back from a cache file, verifying the checksum and every
/// record against the defining conditions.
///
/// `pair_count` is not stored by the format; the restored run reports one
/// pair per record.
pub fn cache_read(path: &Path) -> Result<EnumerationRun> {
    let mut reader = BufReader::new(std::fs::File::open(path)?);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    if header.is_empty() {
        return Err(parse_err(1, "empty file"));
    }
    let header = header.trim_end_matches('\n');
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 5 || fields[0] != "pell-cache" || fields[1] != "v1" {
        return Err(parse_err(1, format!("bad header {header:?}")));
    }
    let take = |idx: usize, key: &str| -> Result<String> {
        fields[idx]
            .strip_prefix(&format!("{key}="))
            .map(str::to_owned)
            .ok_or_else(|| parse_err(1, format!("expected {key}=..., got {:?}", fields[idx])))
    };
    let x: u64 = take(2, "x")?
        .parse()
        .map_err(|e| parse_err(1, format!("bad x: {e}")))?;
    let count: usize = take(3, "count")?
        .parse()
        .map_err(|e| parse_err(1, format!("bad count: {e}")))?;
    let sha = take(4, "sha")?;

    let mut body = String::new();
    std::io::Read::read_to_string(&mut reader, &mut body)?;
    if sha_hex(&body) != sha {
        return Err(Error::CacheIntegrity {
            msg: "body checksum mismatch".into(),
        });
    }

    let mut records = Vec::with_capacity(count);
    let mut prev_d = 0u64;
    for (i, line) in body.lines().enumerate() {
        let lineno = i + 2;
        let mut it = line.split(',');
        let mut field = |name: &str| -> Result<u64> {
            it.next()
                .ok_or_else(|| parse_err(lineno, format!("missing field {name}")))?
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad {name}: {e}")))
        };
        let d = field("d")?;
        let t = field("t")?;
        let u = field("u")?;
        if it.next().is_some() {
            return Err(parse_err(lineno, "trailing fields"));
        }
        if t <= 2 || u == 0 || discriminant_of_pair(t, u) != Some(d) {
            return Err(Error::CacheIntegrity {
                msg: format!("line {lineno}: ({t},{u}) does not encode discriminant {d}"),
            });
        }
        if !within_bound(t, x) {
            return Err(Error::CacheIntegrity {
                msg: format!("line {lineno}: t = {t} violates the bound for x = {x}"),
            });
        }
        if d <= prev_d {
            return Err(Error::CacheIntegrity {
                msg: format!("line {lineno}: records not strictly ascending in d"),
            });
        }
        prev_d = d;
        records.push(DiscriminantRecord::new(d, t, u));
    }
    if records.len() != count {
        return Err(Error::CacheIntegrity {
            msg: format!("header count {} != {} records", count, records.len()),
        });
    }
    let pair_count = records.len() as u64;
    Ok(EnumerationRun {
        x,
        records,
        pair_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spf() -> SpfTable {
        SpfTable::build(4096).unwrap()
    }

    #[test]
    fn within_bound_spec_values() {
        assert!(within_bound(3, 3)); // 9 <= 10
        assert!(!within_bound(11, 10));
        assert!(within_bound(10, 10)); // 100 <= 101
    }

    #[test]
    fn discriminant_of_pair_spec_values() {
        assert_eq!(discriminant_of_pair(3, 1), Some(5));
        assert_eq!(discriminant_of_pair(6, 2), Some(8));
        assert_eq!(discriminant_of_pair(4, 2), None); // 3 = 3 mod 4
        assert_eq!(discriminant_of_pair(4, 1), Some(12));
        assert_eq!(discriminant_of_pair(5, 2), None); // 21/4 not integral
    }

    #[test]
    fn enumerate_ten_matches_hand_enumeration() {
        let run = enumerate(10, &spf()).unwrap();
        let ds: Vec<u64> = run.records.iter().map(|r| r.d).collect();
        assert_eq!(ds, vec![5, 8, 12, 21, 24, 32, 45, 60, 77, 96]);
        assert_eq!(run.pair_count, 11, "the extra pair (7,3) encodes eps_5^2");
        let r5 = &run.records[0];
        assert_eq!((r5.t, r5.u), (3, 1));
        assert!((r5.log_eps - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn enumerate_three_is_just_d5() {
        let run = enumerate(3, &spf()).unwrap();
        assert_eq!(run.records.len(), 1);
        assert_eq!((run.records[0].d, run.records[0].t, run.records[0].u), (5, 3, 1));
        assert!((density_report(&run) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn enumerate_rejects_out_of_range() {
        assert!(enumerate(2, &spf()).is_err());
        assert!(enumerate(MAX_ENUMERATION_X + 1, &spf()).is_err());
    }

    /// Brute-force oracle: for each candidate d, scan u upward until the
    /// first Pell solution t^2 = d u^2 + 4 appears; that solution is
    /// fundamental. Keep d iff its unit is within the bound.
    fn brute_force_set(x: u64) -> Vec<(u64, u64, u64)> {
        let mut out = Vec::new();
        for d in 5..=x * x {
            if d % 4 > 1 || is_square(d) {
                continue;
            }
            let mut found = None;
            let mut u = 1u64;
            loop {
                let t2 = d * u * u + 4;
                if t2 > (x + 1) * (x + 1) {
                    break;
                }
                let t = t2.isqrt();
                if t * t == t2 {
                    found = Some((t, u));
                    break;
                }
                u += 1;
            }
            if let Some((t, u)) = found {
                if within_bound(t, x) {
                    out.push((d, t, u));
                }
            }
        }
        out
    }

    /// Powers of the fundamental unit by exact integer composition:
    /// eps^(n+1) = eps * eps^n in the (t, u) representation.
    fn unit_powers_within(d: u64, t1: u64, u1: u64, x: u64) -> u64 {
        let mut count = 0u64;
        let (mut t, mut u) = (t1 as u128, u1 as u128);
        let (t1, u1, d) = (t1 as u128, u1 as u128, d as u128);
        loop {
            if (t as u64) > x || !within_bound(t as u64, x) {
                break;
            }
            count += 1;
            let nt = t1 * t + d * u1 * u;
            let nu = t1 * u + u1 * t;
            assert!(nt % 2 == 0 && nu % 2 == 0);
            t = nt / 2;
            u = nu / 2;
            if t > (x as u128) + 1 {
                break;
            }
        }
        count
    }

    #[test]
    fn enumerate_agrees_with_brute_force_up_to_200() {
        let table = SpfTable::build(256).unwrap();
        for x in [3u64, 10, 37, 100, 200] {
            let run = enumerate(x, &table).unwrap();
            let got: Vec<(u64, u64, u64)> =
                run.records.iter().map(|r| (r.d, r.t, r.u)).collect();
            let want = brute_force_set(x);
            assert_eq!(got, want, "x = {x}");
            let pairs: u64 = want
                .iter()
                .map(|&(d, t, u)| unit_powers_within(d, t, u, x))
                .sum();
            assert_eq!(run.pair_count, pairs, "pair count at x = {x}");
        }
    }

    #[test]
    fn enumeration_monotone_in_x() {
        let table = SpfTable::build(600).unwrap();
        let mut prev: std::collections::BTreeSet<u64> = Default::default();
        for x in 3u64..=120 {
            let cur: std::collections::BTreeSet<u64> = enumerate(x, &table)
                .unwrap()
                .records
                .iter()
                .map(|r| r.d)
                .collect();
            assert!(prev.is_subset(&cur), "x = {x}");
            prev = cur;
        }
    }

    #[test]
    fn cache_round_trip() {
        let dir = std::env::temp_dir().join("classlab-cache-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run10.csv");
        let run = enumerate(10, &spf()).unwrap();
        cache_write(&run, &path).unwrap();
        let back = cache_read(&path).unwrap();
        assert_eq!(back.x, run.x);
        assert_eq!(back.records, run.records);
    }

    #[test]
    fn cache_rejects_corruption() {
        let dir = std::env::temp_dir().join("classlab-cache-test");
        std::fs::create_dir_all(&dir).unwrap();

        let empty = dir.join("empty.csv");
        std::fs::write(&empty, "").unwrap();
        assert!(matches!(
            cache_read(&empty),
            Err(Error::CacheParse { line: 1, .. })
        ));

        // A record with t = 11 violates the x = 10 bound. Rebuild the
        // checksum so the integrity check, not the checksum, fires.
        let bad = dir.join("bad.csv");
        let body = "117,11,1\n";
        std::fs::write(
            &bad,
            format!("pell-cache v1 x=10 count=1 sha={}\n{body}", sha_hex(body)),
        )
        .unwrap();
        assert!(matches!(cache_read(&bad), Err(Error::CacheIntegrity { .. })));

        // Flipped byte in the body: checksum mismatch.
        let run = enumerate(10, &spf()).unwrap();
        let tampered = dir.join("tampered.csv");
        cache_write(&run, &tampered).unwrap();
        let mut text = std::fs::read_to_string(&tampered).unwrap();
        text = text.replace("5,3,1", "5,3,2");
        std::fs::write(&tampered, text).unwrap();
        assert!(matches!(
            cache_read(&tampered),
            Err(Error::CacheIntegrity { .. })
        ));
    }
}
