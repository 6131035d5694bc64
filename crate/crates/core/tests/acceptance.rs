//! Primary acceptance criteria. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rqed::suite::{self, Check, SuiteReport};
use rqed::{PhysicalConstants, Result};

struct Criterion {
    id: u32,
    title: &'static str,
    /// Wall-clock budget in seconds, if the criterion has one.
    budget: Option<f64>,
    run: fn(&PhysicalConstants) -> Result<SuiteReport>,
}

fn bound_state(c: &PhysicalConstants) -> Result<SuiteReport> {
    let p = suite::BoundStateParams::default();
    let mut rep = suite::bound_state(&p, c)?;
    // Per-profile budget of 30 s.
    let pairs = rep.table.header.iter().position(|h| h == "node_pairs").expect("node_pairs column");
    let counts: Vec<f64> = rep.table.rows.iter().map(|r| r[pairs].parse().unwrap()).collect();
    let secs: Vec<(String, f64)> = rep.timings.clone();
    for (label, s) in secs {
        rep.checks.push(Check::below(format!("{label}.seconds"), s, 30.0));
    }
    for (i, n) in counts.into_iter().enumerate() {
        rep.checks.push(Check::above(format!("profile{i}.node_pairs"), n, 999.0));
    }
    rep.checks.push(Check::above("profiles", p.profiles.len() as f64, 2.0));
    Ok(rep)
}

/// The 5 s budget covers the 10³-point sweep; the one-off construction of
/// the 16×16 conjugation operator is checked after it.
fn spinors(c: &PhysicalConstants) -> Result<SuiteReport> {
    let p = suite::SpinorParams::default();
    let t = Instant::now();
    let mut rep = suite::spinor_suite(&suite::SpinorParams { conjugation_samples: 0, ..p.clone() }, c)?;
    rep.checks.push(Check::below("sweep.seconds", t.elapsed().as_secs_f64(), 5.0));
    rep.checks.push(Check::above("samples", p.samples as f64, 999.0));
    let conj = suite::spinor_suite(&suite::SpinorParams { samples: 0, ..p }, c)?;
    rep.checks.extend(conj.checks.into_iter().filter(|c| c.name.starts_with("conjugation.")));
    Ok(rep)
}

fn algebra(c: &PhysicalConstants) -> Result<SuiteReport> {
    suite::algebra_suite(&Default::default(), c)
}

fn gauss(c: &PhysicalConstants) -> Result<SuiteReport> {
    suite::gauss_suite(&Default::default(), c)
}

fn gauge(c: &PhysicalConstants) -> Result<SuiteReport> {
    let p = suite::GaugeParams::default();
    let mut rep = suite::gauge_suite(&p, c)?;
    rep.checks.push(Check::above("admissible.samples", p.samples as f64, 9.0));
    Ok(rep)
}

const CRITERIA: [Criterion; 10] = [
    Criterion { id: 1, title: "bound state E_int = -2 E_ph", budget: None, run: bound_state },
    Criterion { id: 2, title: "long-wavelength |U_perp|^2 ~ |k_ph|^-3", budget: Some(5.0), run: |c| suite::long_wave(&Default::default(), c) },
    Criterion { id: 3, title: "spinor suite", budget: None, run: spinors },
    Criterion { id: 4, title: "Clifford, gamma, CCR and commutator algebra", budget: None, run: algebra },
    Criterion { id: 5, title: "transversality and Gauss law", budget: None, run: gauss },
    Criterion { id: 6, title: "total charge", budget: None, run: |c| suite::total_charge_suite(&Default::default(), c) },
    Criterion { id: 7, title: "wave-vector-local gauge symmetry", budget: None, run: gauge },
    Criterion { id: 8, title: "coherent-state energies", budget: None, run: |c| suite::energy_suite(&Default::default(), c) },
    Criterion { id: 9, title: "emergent Coulomb field", budget: Some(120.0), run: |c| suite::coulomb_suite(&Default::default(), c) },
    Criterion { id: 10, title: "two-point current continuity", budget: None, run: |c| suite::continuity_suite(&Default::default(), c) },
];

fn main() -> ExitCode {
    let consts = PhysicalConstants::default();
    let mut failed = 0;
    for cr in &CRITERIA {
        let t = Instant::now();
        let outcome = (cr.run)(&consts);
        let secs = t.elapsed().as_secs_f64();
        let (ok, detail) = match outcome {
            Ok(mut rep) => {
                if let Some(b) = cr.budget {
                    rep.checks.push(Check::below("seconds", secs, b));
                }
                let bad: Vec<String> = rep.checks.iter().filter(|c| !c.passed).map(|c| format!("{}={:e}", c.name, c.value)).collect();
                let detail = if bad.is_empty() { format!("{} checks", rep.checks.len()) } else { format!("failed: {}", bad.join(", ")) };
                (bad.is_empty(), detail)
            }
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failed += 1;
        }
        println!("{} criterion {:>2} {} ({detail}, {secs:.2}s)", if ok { "PASS" } else { "FAIL" }, cr.id, cr.title);
    }
    println!("{}/{} criteria passed", CRITERIA.len() - failed, CRITERIA.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
