//! Quotient of two positive solutions vanishing on a static and on a
//! traveling half-line: oscillation over shrinking cylinders.

use fbreg::harnack::{run_harnack, HarnackScenario};

fn main() -> fbreg::Result<()> {
    for omega in [0.0, 0.5] {
        let sc = HarnackScenario::one_dimensional(0.5, omega, 0.01)?;
        let r = run_harnack(&sc)?;
        println!("ω = {omega}");
        for row in &r.rows {
            println!("  r = {:<7} osc = {:.4e} over {} cells", row.r, row.osc, row.cells);
        }
        println!(
            "  α = {:.3}, comparability ({:.3}, {:.3}), {}",
            r.alpha.unwrap_or(f64::NAN),
            r.comparability.0,
            r.comparability.1,
            if r.pass() { "pass" } else { "fail" }
        );
    }
    Ok(())
}
