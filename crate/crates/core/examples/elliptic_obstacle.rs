//! Solves a one-dimensional elliptic obstacle problem and saves the result
//! in the binary grid format.

use fbreg::free_boundary::contact_set;
use fbreg::operator::{GridFunction, Growth, KernelSpec};
use fbreg::solver::{solve_elliptic_obstacle, ObstacleProblem, SolverOptions};

fn main() -> fbreg::Result<()> {
    let k = KernelSpec::fractional_laplacian(1, 0.75)?;
    let h = 1.0 / 128.0;
    let phi = |x: &[f64]| (1.0 - x[0] * x[0]).max(0.0).powi(2);
    let p = ObstacleProblem::new(&k, phi, Growth::compact(1.0), &[513], h, &[-2.0])?;
    let (u, rep) = solve_elliptic_obstacle(&p, &SolverOptions::default())?;
    let mask = contact_set(&u, &p.obstacle, 1e-9)?;
    let contact: Vec<f64> = (0..mask.len()).filter(|i| mask[*i] && p.obstacle.values[*i] > 0.0).map(|i| u.coords(i)[0]).collect();
    println!(
        "{} sweeps, residual {:.2e}, ω = {:.3}, contact set ≈ [{:.4}, {:.4}]",
        rep.iterations,
        rep.residual,
        rep.omega,
        contact.first().unwrap_or(&f64::NAN),
        contact.last().unwrap_or(&f64::NAN)
    );
    let path = std::env::temp_dir().join("elliptic_obstacle.fbrg");
    u.save(&path)?;
    assert_eq!(GridFunction::load(&path)?, u);
    println!("saved {}", path.display());
    Ok(())
}
