use timechange_core::bernstein::{BernsteinChar, LevyMeasure, OrderAtom, TailKernel};
use timechange_core::fpde::{
    caputo_special, interpolate_row, kernel_weights, laplace_check, solve_grid_1d, solve_grid_1d_unkilled,
    solve_scalar, DiscreteGenerator,
};
use timechange_core::models::{JumpDiffusion, TestFunction};

/// `E_beta(-x)` for `beta = 1/2`: `exp(x^2) erfc(x)`.
fn mittag_leffler_half(x: f64) -> f64 {
    (x * x).exp() * statrs::function::erf::erfc(x)
}

fn stable(a: f64, k: f64, beta: f64) -> BernsteinChar {
    BernsteinChar::new(a, k, LevyMeasure::stable(beta).unwrap()).unwrap()
}

#[test]
fn first_order_convergence_to_mittag_leffler() {
    let ch = stable(0.0, 0.0, 0.5);
    let exact = mittag_leffler_half(0.5);
    let errs: Vec<f64> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| {
            let sol = solve_scalar(&ch, 0.5, 1.0, dt).unwrap();
            (sol.scalar(sol.steps) - exact).abs()
        })
        .collect();
    assert!(errs[2] < 5e-3);
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn decay_is_monotone_and_bounded() {
    for ch in [
        stable(0.0, 0.0, 0.3),
        stable(1.0, 0.5, 0.7),
        BernsteinChar::new(2.0, 0.0, LevyMeasure::gamma(1.0, 2.0).unwrap()).unwrap(),
        BernsteinChar::new(
            0.5,
            0.1,
            LevyMeasure::distributed_order(vec![
                OrderAtom { beta: 0.2, weight: 0.5 },
                OrderAtom { beta: 0.9, weight: 0.5 },
            ])
            .unwrap(),
        )
        .unwrap(),
    ] {
        let theta = 0.8;
        let sol = solve_scalar(&ch, theta, 2.0, 1e-2).unwrap();
        let u = sol.column(0);
        assert!(u.windows(2).all(|w| w[1] <= w[0]));
        assert!(u.iter().all(|v| v.abs() <= 1.0));
    }
}

#[test]
fn toeplitz_and_telescoping_weights() {
    let kernel = TailKernel::new(&LevyMeasure::gamma(0.7, 1.3).unwrap());
    let w = kernel_weights(&kernel, 0.05, 40).unwrap();
    for n in 1..40 {
        for j in 1..=n {
            assert_eq!(w.weight(n, j), w.weight(n + 1, j + 1));
            assert!(w.weight(n, j) >= 0.0);
        }
        assert!((w.row_sum(n) - kernel.big_g(n as f64 * 0.05).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn caputo_of_constants_vanishes() {
    let d = caputo_special(0.4, &[3.0; 50], 0.01).unwrap();
    assert!(d.iter().all(|&v| v == 0.0));
    assert!(caputo_special(0.0, &[1.0, 2.0], 0.01).is_err());
}

#[test]
fn stable_laplace_identity() {
    let ch = stable(1.0, 0.0, 0.5);
    let sol = solve_scalar(&ch, 0.5, 5.0, 1e-3).unwrap();
    let res = laplace_check(&sol, &ch, 0.5, &[10.0]).unwrap();
    // phi(10) = 1 + sqrt(10)
    let phi = 1.0 + 10f64.sqrt();
    assert!((res[0].oracle - phi / (10.0 * (phi + 0.5))).abs() < 1e-12);
    assert!(res[0].residual < 1e-3, "{res:?}");
}

#[test]
fn grid_obeys_maximum_principle() {
    let ch = stable(0.7, 0.2, 0.6);
    let gen = DiscreteGenerator::periodic_half_laplacian(0.15).unwrap();
    // 1 + cos x is nonnegative with range [0, 2]
    let f = TestFunction::Cosine { mode: 1 };
    let sol = solve_grid_1d(&ch, &gen, &f, 1.0, 1e-2).unwrap();
    let shifted = solve_grid_1d(&ch, &gen, &TestFunction::Constant(1.0), 1.0, 1e-2).unwrap();
    for n in 0..=sol.steps {
        for (v, c) in sol.row(n).iter().zip(shifted.row(n)) {
            let u = v + c;
            assert!((-1e-12..=2.0 + 1e-12).contains(&u), "u = {u}");
        }
    }
}

#[test]
fn jump_diffusion_grid_obeys_maximum_principle() {
    let ch = stable(1.0, 0.0, 0.5);
    let jd = JumpDiffusion::ou_with_exp_jumps();
    let gen = DiscreteGenerator::jump_diffusion(&jd, 6.0, 0.1).unwrap();
    let f = TestFunction::Gaussian { width: 1.0 };
    let sol = solve_grid_1d(&ch, &gen, &f, 0.5, 1e-2).unwrap();
    assert!(sol.values().iter().all(|&u| (0.0..=1.0).contains(&u)));
    let mid = interpolate_row(&sol, sol.steps, 0.0).unwrap();
    assert!(mid > 0.0 && mid < 1.0);
}

#[test]
fn unkilled_grid_twin_is_bit_identical() {
    let ch = stable(0.0, 0.1, 0.5);
    let gen = DiscreteGenerator::periodic_half_laplacian(0.2).unwrap();
    let f = TestFunction::Sine { mode: 2 };
    let a = solve_grid_1d(&ch, &gen, &f, 0.5, 1e-2).unwrap();
    let b = solve_grid_1d_unkilled(&ch, &gen, &f, 0.5, 1e-2).unwrap();
    assert!(a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn coarse_grids_report_eigen_mismatch() {
    let ch = stable(1.0, 0.0, 0.5);
    let f = TestFunction::Sine { mode: 3 };
    let fine = solve_grid_1d(&ch, &DiscreteGenerator::periodic_half_laplacian(0.02).unwrap(), &f, 0.1, 1e-2).unwrap();
    let coarse = solve_grid_1d(&ch, &DiscreteGenerator::periodic_half_laplacian(0.5).unwrap(), &f, 0.1, 1e-2).unwrap();
    assert!(fine.scheme.eigen_mismatch.unwrap() < 1e-3);
    assert!(coarse.scheme.eigen_mismatch.unwrap() > 5e-2);
}

#[test]
fn dirichlet_line_grid_runs() {
    let ch = stable(1.0, 0.0, 0.5);
    let gen = DiscreteGenerator::dirichlet_half_laplacian(4.0, 0.05).unwrap();
    let sol = solve_grid_1d(&ch, &gen, &TestFunction::Gaussian { width: 0.5 }, 0.5, 1e-2).unwrap();
    assert!(sol.values().iter().all(|v| v.is_finite() && *v >= 0.0 && *v <= 1.0));
}

#[test]
fn rejects_bad_grids() {
    assert!(DiscreteGenerator::periodic_half_laplacian(-0.1).is_err());
    assert!(DiscreteGenerator::periodic_half_laplacian(10.0).is_err());
    let ch = stable(1.0, 0.0, 0.5);
    let gen = DiscreteGenerator::periodic_half_laplacian(0.1).unwrap();
    assert!(solve_grid_1d(&ch, &gen, &TestFunction::Gaussian { width: 1.0 }, 1.0, 0.1).is_err());
    assert!(solve_scalar(&ch, -1.0, 1.0, 0.1).is_err());
    assert!(solve_scalar(&ch, 1.0, 1.0, 0.0).is_err());
}
