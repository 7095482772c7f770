use std::f64::consts::FRAC_PI_2;

use timechange_core::models::{semigroup_apply, JumpDiffusion, MarkovModel, ModelKind, TestFunction};
use timechange_core::sampler::RngStream;

#[test]
fn eigen_and_torus_closed_forms() {
    let f = TestFunction::Sine { mode: 1 };
    let eigen = MarkovModel::eigen(0.5).unwrap();
    let v = semigroup_apply(&eigen, 2.0, &f, FRAC_PI_2, RngStream::new(0, 0), 1).unwrap();
    assert!((v.value - 0.367_879).abs() < 1e-6);
    assert_eq!(v.stderr, None);
    let torus = MarkovModel::brownian_torus();
    let v = semigroup_apply(&torus, 1.0, &f, FRAC_PI_2, RngStream::new(0, 0), 1).unwrap();
    assert!((v.value - 0.606_531).abs() < 1e-6);
}

#[test]
fn negative_time_and_zero_paths_are_rejected() {
    let f = TestFunction::Sine { mode: 1 };
    let torus = MarkovModel::brownian_torus();
    assert!(semigroup_apply(&torus, -1.0, &f, 0.0, RngStream::new(0, 0), 10).is_err());
    let jd = MarkovModel::new(ModelKind::JumpDiffusion(JumpDiffusion::ou_with_exp_jumps())).unwrap();
    assert!(semigroup_apply(&jd, 1.0, &f, 0.0, RngStream::new(0, 0), 0).is_err());
}

#[test]
fn semigroup_property_on_the_interval() {
    let l = 2.0;
    let line = MarkovModel::new(ModelKind::BrownianLine { half_width: l }).unwrap();
    let f = TestFunction::Gaussian { width: 0.8 };
    let (s, u, x) = (0.3, 0.5, 0.4);
    // Dirichlet heat kernel on (-l, l) by the method of images
    let kernel = |x: f64, y: f64| {
        let phi = |d: f64| (-d * d / (2.0 * s)).exp() / (2.0 * std::f64::consts::PI * s).sqrt();
        (-10..=10)
            .map(|k| {
                let shift = 4.0 * l * k as f64;
                phi(x - y - shift) - phi(x + y - 2.0 * l - shift)
            })
            .sum::<f64>()
    };
    let n = 2000;
    let h = 2.0 * l / n as f64;
    // midpoint rule; the integrand vanishes at both walls
    let composed: f64 = (0..n)
        .map(|i| {
            let y = -l + (i as f64 + 0.5) * h;
            h * kernel(x, y) * line.semigroup(u, &f, y).unwrap()
        })
        .sum();
    let direct = line.semigroup(s + u, &f, x).unwrap();
    assert!((composed - direct).abs() < 1e-6, "{composed} vs {direct}");
}

#[test]
fn semigroup_property_for_trig_data() {
    let torus = MarkovModel::brownian_torus();
    let f = TestFunction::Cosine { mode: 3 };
    let (s, u, x) = (0.7, 1.9, 1.1);
    let tu = torus.semigroup(u, &f, 0.0).unwrap();
    // T_u cos(3 .) = c cos(3 .), so T_s T_u f(x) = c T_s f(x)
    let composed = tu * torus.semigroup(s, &f, x).unwrap();
    assert!((composed - torus.semigroup(s + u, &f, x).unwrap()).abs() < 1e-12);
}

#[test]
fn constants_are_conserved() {
    let one = TestFunction::Constant(1.0);
    for m in [MarkovModel::eigen(0.4).unwrap(), MarkovModel::brownian_torus()] {
        for s in [0.0, 0.1, 2.0, 30.0] {
            assert_eq!(m.semigroup(s, &one, 0.7).unwrap(), 1.0);
        }
    }
    let jd = MarkovModel::new(ModelKind::JumpDiffusion(JumpDiffusion::ou_with_exp_jumps())).unwrap();
    let v = semigroup_apply(&jd, 0.8, &one, 0.2, RngStream::new(1, 0), 500).unwrap();
    assert!((v.value - 1.0).abs() <= 3.0 * v.stderr.unwrap());
}

#[test]
fn generator_is_first_order_limit_of_the_semigroup() {
    let torus = MarkovModel::brownian_torus();
    let f = TestFunction::Cosine { mode: 2 };
    let x = 0.3;
    let lf = torus.generator(&f, x).unwrap();
    let errs: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&h| ((torus.semigroup(h, &f, x).unwrap() - f.value(x)) / h - lf).abs())
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 0.9, "observed order {order} from {errs:?}");
    }
}

#[test]
fn torus_sine_is_an_eigenfunction_of_the_generator() {
    let torus = MarkovModel::brownian_torus();
    let f = TestFunction::Sine { mode: 1 };
    for i in 0..20 {
        let x = i as f64 * 0.31;
        assert!((torus.generator(&f, x).unwrap() + 0.5 * f.value(x)).abs() < 1e-6);
    }
    assert_eq!(f.eigenvalue(&torus), Some(0.5));
}

#[test]
fn jump_diffusion_paths_are_reproducible() {
    let jd = MarkovModel::new(ModelKind::JumpDiffusion(JumpDiffusion::ou_with_exp_jumps())).unwrap();
    let f = TestFunction::Gaussian { width: 1.0 };
    let a = jd.semigroup_mc(0.5, &f, 0.0, 200, RngStream::new(3, 1)).unwrap();
    let b = jd.semigroup_mc(0.5, &f, 0.0, 200, RngStream::new(3, 1)).unwrap();
    assert_eq!(a, b);
}
