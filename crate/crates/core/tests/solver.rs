use fbreg::operator::{GridFunction, Growth, KernelSpec};
use fbreg::solver::{
    complementarity_residual, solve_elliptic_obstacle, solve_lcp, solve_parabolic_obstacle, DenseMatrix, LcpOptions,
    ObstacleProblem, SolverOptions,
};
use proptest::prelude::*;

fn bump(x: &[f64]) -> f64 {
    (1.0 - x[0] * x[0]).max(0.0).powi(2)
}

fn problem(s: f64, amp: f64, nh: usize) -> ObstacleProblem {
    let k = KernelSpec::fractional_laplacian(1, s).unwrap();
    ObstacleProblem::new(&k, move |x| amp * bump(x), Growth::compact(1.0), &[4 * nh + 1], 1.0 / nh as f64, &[-2.0]).unwrap()
}

fn tight() -> SolverOptions {
    SolverOptions { tol: 1e-12, ..SolverOptions::default() }
}

#[test]
fn symmetric_obstacle_gives_symmetric_solution() {
    let p = problem(0.6, 1.0, 32);
    let (u, rep) = solve_elliptic_obstacle(&p, &tight()).unwrap();
    let n = u.values.len();
    let asym = (0..n).map(|i| (u.values[i] - u.values[n - 1 - i]).abs()).fold(0.0, f64::max);
    assert!(asym < 1e-9, "{asym}");
    assert!(rep.residual <= 1e-12);
    assert!(u.values.iter().zip(&p.obstacle.values).all(|(a, b)| *a >= b - 1e-14));
    // the contact set is a proper subset of the support
    let contact = u.values.iter().zip(&p.obstacle.values).filter(|(a, b)| *a - *b <= 1e-9 && **b > 0.0).count();
    assert!(contact > 0 && contact < 63);
}

#[test]
fn solution_is_positively_homogeneous_in_the_obstacle() {
    let (u1, _) = solve_elliptic_obstacle(&problem(0.5, 1.0, 32), &tight()).unwrap();
    let (u3, _) = solve_elliptic_obstacle(&problem(0.5, 3.0, 32), &tight()).unwrap();
    let worst = u1.values.iter().zip(&u3.values).map(|(a, b)| (3.0 * a - b).abs()).fold(0.0, f64::max);
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn parabolic_solution_starts_at_the_obstacle_and_stays_above_it() {
    let p = problem(0.5, 1.0, 32).parabolic(0.5, 32).unwrap();
    let (u, rep) = solve_parabolic_obstacle(&p, &SolverOptions::default()).unwrap();
    assert_eq!(u.time_len(), 33);
    assert_eq!(rep.active_sizes.len(), 32);
    assert_eq!(u.slice(0), &p.obstacle.values[..]);
    for k in 0..u.time_len() {
        assert!(u.slice(k).iter().zip(&p.obstacle.values).all(|(a, b)| *a >= b - 1e-12));
    }
    // contact shrinks as the solution lifts off
    assert!(rep.active_sizes.windows(2).all(|w| w[1] <= w[0]), "{:?}", rep.active_sizes);
}

#[test]
fn finer_grids_converge() {
    let sample = |nh: usize| {
        let (u, _) = solve_elliptic_obstacle(&problem(0.75, 1.0, nh), &tight()).unwrap();
        (0..17).map(|i| u.sample(&[-2.0 + 0.25 * i as f64], 0.0).unwrap()).collect::<Vec<_>>()
    };
    let (a, b, c) = (sample(16), sample(32), sample(64));
    let d = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    assert!(d(&b, &c) < d(&a, &b));
}

#[test]
fn grid_round_trip_of_a_solution() {
    let (u, _) = solve_elliptic_obstacle(&problem(0.5, 1.0, 16), &tight()).unwrap();
    let mut buf = Vec::new();
    u.write_to(&mut buf).unwrap();
    assert_eq!(GridFunction::read_from(&buf[..]).unwrap(), u);
}

fn z_matrix(n: usize, off: &[f64], diag: &[f64]) -> DenseMatrix {
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = -off[(i * n + j) % off.len()] / n as f64;
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
    for i in 0..n {
        let s: f64 = (0..n).filter(|j| *j != i).map(|j| a[i * n + j].abs()).sum();
        a[i * n + i] = s + diag[i % diag.len()];
    }
    DenseMatrix::new(n, a).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lcp_solutions_are_complementary_and_ordered(
        n in 2usize..10,
        off in prop::collection::vec(0.0f64..1.0, 16),
        diag in prop::collection::vec(0.1f64..2.0, 10),
        phi in prop::collection::vec(-1.0f64..1.0, 10),
        lift in prop::collection::vec(0.0f64..0.5, 10),
        f in prop::collection::vec(-1.0f64..1.0, 10),
    ) {
        let m = z_matrix(n, &off, &diag);
        let opts = LcpOptions { tol: 1e-13, max_iter: 1_000_000, ..LcpOptions::default() };
        let (phi, f) = (&phi[..n], &f[..n]);
        let (u, rep) = solve_lcp(&m, phi, f, &opts).unwrap();
        prop_assert!(rep.residual <= 1e-13);
        prop_assert!(complementarity_residual(&m, &u, phi, f, None, 1.0) <= 1e-13);
        prop_assert!(u.iter().zip(phi).all(|(a, b)| *a >= *b));
        // raising the obstacle raises the solution for Z-matrices
        let higher: Vec<f64> = phi.iter().zip(&lift).map(|(a, b)| a + b).collect();
        let (v, _) = solve_lcp(&m, &higher, f, &opts).unwrap();
        prop_assert!(u.iter().zip(&v).all(|(a, b)| *b >= *a - 1e-10));
    }
}
