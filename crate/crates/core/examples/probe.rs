use classlab::arith::SpfTable;
use classlab::forms::{class_number_cycles, class_number_formula, LSeriesWorkspace};
use classlab::pell::enumerate;
use rayon::prelude::*;

fn main() {
    let t = SpfTable::build(42_000_000).unwrap();
    let run = enumerate(2000, &t).unwrap();
    println!("records: {}", run.records.len());
    let ws4 = LSeriesWorkspace::new(1.0, 1e4, &t).unwrap();
    let ws5 = LSeriesWorkspace::new(1.0, 1e5, &t).unwrap();
    let rows: Vec<(u64, u64, f64, f64)> = run
        .records
        .par_iter()
        .map_init(Vec::new, |chi, r| {
            let h = class_number_cycles(r.d, &t).unwrap();
            let f4 = class_number_formula(r, ws4.eval(r.d, &t, chi).value).unwrap();
            let f5 = class_number_formula(r, ws5.eval(r.d, &t, chi).value).unwrap();
            (r.d, h, f4.h_real, f5.h_real)
        })
        .collect();
    let window = 0.35f64;
    let (mut flagged4, mut silent4, mut flagged5, mut wrong5) = (0, 0, 0, 0);
    let mut escalate6: Vec<u64> = Vec::new();
    for &(d, h, h4, h5) in &rows {
        let r4 = h4.round();
        let r5 = h5.round();
        let f4 = (h4 - r4).abs() > window || r4 < 1.0;
        let f5 = (h5 - r5).abs() > window || r5 < 1.0;
        if f4 {
            flagged4 += 1;
            if f5 {
                flagged5 += 1;
                escalate6.push(d);
                println!("still-flagged@1e5 d={d} h={h} h5={h5:.4} -> rounds to {}", r5 as u64);
            }
            if r5 as u64 != h {
                wrong5 += 1;
                println!("WRONG@1e5 d={d} h={h} h5={h5:.4}");
            }
        } else if r4 as u64 != h {
            silent4 += 1;
            println!("SILENT-WRONG@1e4 d={d} h={h} h4={h4:.4}");
        }
    }
    let n = rows.len() as f64;
    println!("flagged@1e4: {flagged4} ({:.2}%)", 100.0 * flagged4 as f64 / n);
    println!("unflagged@1e4 but misrounded: {silent4}");
    println!("still flagged@1e5: {flagged5}; flagged@1e4 misrounded@1e5: {wrong5}");
    if !escalate6.is_empty() {
        let ws6 = LSeriesWorkspace::new(1.0, 1e6, &t).unwrap();
        let mut chi = Vec::new();
        for d in escalate6 {
            let rec = run.records.iter().find(|r| r.d == d).unwrap();
            let h = class_number_cycles(d, &t).unwrap();
            let f6 = class_number_formula(rec, ws6.eval(d, &t, &mut chi).value).unwrap();
            println!("@1e6 d={d} h={h} h6={:.4} reliable={}", f6.h_real, f6.reliable);
        }
    }
}
