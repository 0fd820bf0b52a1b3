//! Solves a parabolic obstacle problem with a moving free boundary, then
//! estimates normal, speed and growth exponent at a few boundary points and
//! fits a one-dimensional blow-up profile.

use fbreg::free_boundary::{
    analyze_point, blow_up_rescale, contact_set, extract_boundary, fit_1d_profile, gap, ClassifyThresholds, NormMode,
};
use fbreg::operator::{Growth, KernelSpec};
use fbreg::solver::{solve_parabolic_obstacle, ObstacleProblem, SolverOptions};

fn main() -> fbreg::Result<()> {
    let k = KernelSpec::fractional_laplacian(1, 0.5)?;
    let h = 1.0 / 64.0;
    let phi = |x: &[f64]| (1.0 - x[0] * x[0]).max(0.0).powi(2) * (1.0 + 0.6 * x[0]);
    let p = ObstacleProblem::new(&k, phi, Growth::compact(1.0), &[257], h, &[-2.0])?.parabolic(1.0, 64)?;
    let (u, rep) = solve_parabolic_obstacle(&p, &SolverOptions::default())?;
    println!("{} sweeps over {} steps", rep.iterations, rep.active_sizes.len());

    let w = gap(&u, &p.obstacle)?;
    let cloud: Vec<_> = extract_boundary(&contact_set(&u, &p.obstacle, 1e-9)?, &w, 1.5)?
        .into_iter()
        .filter(|q| q.t > 0.0 && q.x[0].abs() < 1.0)
        .collect();
    for t in [0.3, 0.5] {
        for pt in cloud.iter().filter(|q| (q.t - t).abs() < 1e-9) {
            let fp = analyze_point(&w, &cloud, pt, &k, 0.15, 4.0 * h, 0.25, &ClassifyThresholds::default())?;
            println!(
                "t = {t}, x = {:+.4}: v₀ = {:.3}, β = {:.3} (predicted {:.3}), {}",
                fp.x[0],
                fp.speed,
                fp.beta,
                1.0 + fp.gamma_pred,
                fp.classification
            );
            let e = [fp.nu_x[0].signum()];
            for r in [0.25, 0.125] {
                let b = blow_up_rescale(&w, pt, r, NormMode::Gradient, 33)?;
                let f = fit_1d_profile(&b, &k, Some((&e, fp.speed)))?;
                println!("    r = {r}: κ = {:.3}, v = {:.3}, lip distance {:.3}", f.profile.kappa, f.profile.v, f.lip_distance);
            }
        }
    }
    Ok(())
}
