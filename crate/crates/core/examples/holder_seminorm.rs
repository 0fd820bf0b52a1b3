//! Parabolic Hölder seminorms, exhaustive and sampled, and the time
//! regularity exponent of a parabolic obstacle solution.

use fbreg::metrics::{fit_time_regularity, parabolic_holder_seminorm, HolderMode, Region, SearchOptions};
use fbreg::operator::{GridFunction, Growth, KernelSpec};
use fbreg::solver::{solve_parabolic_obstacle, ObstacleProblem, SolverOptions};

fn main() -> fbreg::Result<()> {
    // 33² nodes over 9 time levels stays under the exhaustive-search limit
    let w = GridFunction::from_space_time_fn(&[33, 33], 1.0 / 16.0, &[-1.0, -1.0], 9, 1.0 / 32.0, 0.0, 0.5, |x, t| {
        (x[0] * x[0] + x[1] * x[1]).sqrt().powf(0.6) + t.sqrt()
    });
    for (name, force) in [("exact", false), ("sampled", true)] {
        let opts = SearchOptions { pair_budget: 200_000, seed: 1, force_sampled: force };
        let r = parabolic_holder_seminorm(&w, 0.5, HolderMode::Parabolic, &Region::all(), &opts)?;
        println!("{name:>8}: [w]_0.5 = {:.5} from {} pairs over {} nodes (exhaustive: {})", r.value, r.pairs_examined, r.nodes, r.exact);
    }

    let k = KernelSpec::fractional_laplacian(1, 0.55)?;
    let phi = |x: &[f64]| (1.0 - x[0] * x[0]).max(0.0).powi(2) * (1.0 + 0.6 * x[0]);
    let p = ObstacleProblem::new(&k, phi, Growth::compact(1.0), &[257], 1.0 / 64.0, &[-2.0])?.parabolic(1.0, 256)?;
    let (u, _) = solve_parabolic_obstacle(&p, &SolverOptions::default())?;
    let tr = fit_time_regularity(&u, 0.0, 0.25, 1.0)?;
    println!("time exponent of ∂_t u: measured {:.3}, predicted {:.3}", tr.measured, tr.predicted);
    Ok(())
}
