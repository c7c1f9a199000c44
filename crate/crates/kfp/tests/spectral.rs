use kfp::quad::{gauss_normal, Rule};
use kfp::spectral::*;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::sync::Arc;

fn bessel_i(n: u32, x: f64) -> f64 {
    let mut term = (x / 2.0).powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
    let mut sum = term;
    for j in 1..200 {
        term *= (x / 2.0).powi(2) / (j as f64 * (j + n) as f64);
        sum += term;
        if term < 1e-18 * sum {
            break;
        }
    }
    sum
}

// Eighth-order central first and second differences.
fn d1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let c = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    c.iter()
        .enumerate()
        .map(|(i, ci)| ci * (f(x + (i + 1) as f64 * h) - f(x - (i + 1) as f64 * h)))
        .sum::<f64>()
        / h
}

fn d2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    let c0 = -205.0 / 72.0;
    let c = [8.0 / 5.0, -1.0 / 5.0, 8.0 / 315.0, -1.0 / 560.0];
    (c0 * f(x)
        + c.iter()
            .enumerate()
            .map(|(i, ci)| ci * (f(x + (i + 1) as f64 * h) + f(x - (i + 1) as f64 * h)))
            .sum::<f64>())
        / (h * h)
}

/// Pointwise `L f` in one dimension from finite differences of point values.
fn pointwise_l(model: &Model, f: &PhaseField, x: f64, v: f64) -> f64 {
    let a = model.friction.matrix_at(&[x])[(0, 0)];
    let mut gh = [0.0];
    model.potential.grad(&[x], &mut gh);
    let fv = |w: f64| f.eval(&[x], &[w]);
    let fx = |y: f64| f.eval(&[y], &[v]);
    -a * d2(fv, v, 1e-2) + v * a * d1(fv, v, 1e-2) - v * d1(fx, x, 1e-3) + gh[0] * d1(fv, v, 1e-2)
}

#[test]
fn operator_matches_collocation_oracle() {
    let lambda = 0.8;
    let model = Model::new(Potential::cosine(1, lambda), Friction::identity(1)).unwrap();
    let layout = Arc::new(Layout::new(1, 4, 6));
    let op = KfpOperator::assemble(&model, layout.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let f = PhaseField::random_real(layout.clone(), &mut rng, 0.7);
    let lf = op.apply(&f);

    // Project the pointwise image onto the truncated basis by quadrature.
    let m = 32;
    let vr: Rule = gauss_normal(24);
    let mut proj = PhaseField::zeros(layout.clone());
    let vals: Vec<Vec<f64>> = (0..m)
        .map(|s| {
            let x = s as f64 / m as f64;
            vr.nodes.iter().map(|&v| pointwise_l(&model, &f, x, v)).collect()
        })
        .collect();
    for (mi, k) in layout.modes().iter().enumerate() {
        for h in 0..layout.n_herm() {
            let n = layout.herm_index(h)[0] as usize;
            let mut acc = Complex64::new(0.0, 0.0);
            for (s, row) in vals.iter().enumerate() {
                let x = s as f64 / m as f64;
                let wave = Complex64::from_polar(1.0 / m as f64, -TAU * k[0] as f64 * x);
                let vint: f64 = vr
                    .nodes
                    .iter()
                    .zip(&vr.weights)
                    .zip(row)
                    .map(|((&v, &w), &l)| w * l * hermite_values(v, n)[n])
                    .sum();
                acc += wave * vint;
            }
            proj.set(mi, h, acc);
        }
    }
    let err = lf.sub(&proj).norm_flat() / lf.norm_flat();
    assert!(err < 1e-8, "relative error {err:e}");
}

#[test]
fn parseval_against_quadrature() {
    let layout = Arc::new(Layout::new(2, 2, 3));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = PhaseField::random_real(layout, &mut rng, 0.8);
    let vr = gauss_normal(8);
    let m = 16;
    let mut q = 0.0;
    for sx in 0..m {
        for sy in 0..m {
            let x = [sx as f64 / m as f64, sy as f64 / m as f64];
            for (v1, w1) in vr.nodes.iter().zip(&vr.weights) {
                for (v2, w2) in vr.nodes.iter().zip(&vr.weights) {
                    q += w1 * w2 * f.eval(&x, &[*v1, *v2]).powi(2);
                }
            }
        }
    }
    q /= (m * m) as f64;
    let p = f.norm_flat().powi(2);
    assert!((p - q).abs() < 1e-10 * p);
}

#[test]
fn gibbs_mean_of_cosine_matches_bessel_ratio() {
    for lambda in [0.5, 1.0, 2.0] {
        let model = Model::new(Potential::cosine(1, lambda), Friction::identity(1)).unwrap();
        let layout = Arc::new(Layout::new(1, 3, 2));
        let mut f = PhaseField::zeros(layout.clone());
        f.set(layout.mode_pos(&[1]).unwrap(), 0, Complex64::new(0.5, 0.0));
        f.set(layout.mode_pos(&[-1]).unwrap(), 0, Complex64::new(0.5, 0.0));
        let w = model.weight_table(6);
        let got = mean_m(&w, &f);
        let bessel = -bessel_i(1, lambda) / bessel_i(0, lambda);
        // Direct quadrature of int cos(2 pi x) e^{-H} / Z.
        let n = 2000;
        let (mut num, mut den) = (0.0, 0.0);
        for s in 0..n {
            let x = (s as f64 + 0.5) / n as f64;
            let e = (-lambda * (TAU * x).cos()).exp();
            num += (TAU * x).cos() * e;
            den += e;
        }
        assert!((got - bessel).abs() < 1e-12, "{got} vs {bessel}");
        assert!((got - num / den).abs() < 1e-12);
        let one = PhaseField::constant(layout, 1.0);
        assert!((inner_product_m(&w, &f, &one) - got).abs() < 1e-14);
    }
}

#[test]
fn free_case_solve_returns_velocity() {
    let model = Model::free(1);
    let layout = Arc::new(Layout::new(1, 2, 6));
    let solver = CellSolver::new(&model, layout.clone(), SolveOptions::default()).unwrap();
    let v = PhaseField::velocity(layout, 0);
    let (u, report) = solver.solve_mean_zero(&v).unwrap();
    assert!(u.sub(&v).max_abs() < 1e-12);
    assert!(report.residual <= 1e-10);
}

#[test]
fn incompatible_rhs_rejected() {
    let model = Model::new(Potential::cosine(1, 1.0), Friction::identity(1)).unwrap();
    let layout = Arc::new(Layout::new(1, 6, 8));
    let solver = CellSolver::new(&model, layout.clone(), SolveOptions::default()).unwrap();
    let one = PhaseField::constant(layout, 1.0);
    assert!(matches!(
        solver.solve_mean_zero(&one),
        Err(SpectralError::IncompatibleRhs { .. })
    ));
}

#[test]
fn cosine_potential_solve_residual_and_mean() {
    for dim in [1usize, 2] {
        let model = Model::new(Potential::cosine(dim, 1.0), Friction::identity(dim)).unwrap();
        let (nx, nv) = if dim == 1 { (12, 32) } else { (5, 12) };
        let layout = Arc::new(Layout::new(dim, nx, nv));
        let solver = CellSolver::new(&model, layout.clone(), SolveOptions::default()).unwrap();
        let rhs = PhaseField::velocity(layout, 0);
        let (u, report) = solver.solve_mean_zero(&rhs).unwrap();
        assert!(report.residual <= 1e-10, "residual {}", report.residual);
        assert!(solver.mean_m(&u).abs() < 1e-13);
        assert!(u.reality_defect() < 1e-13);
    }
}

#[test]
fn modulated_friction_matches_collocation() {
    let friction = Friction::new(
        vec![vec![1.5]],
        vec![FrictionTerm {
            k: vec![1],
            amplitude: vec![vec![0.4]],
            phase: 0.3,
        }],
    )
    .unwrap();
    let model = Model::new(Potential::cosine(1, 0.6), friction).unwrap();
    let layout = Arc::new(Layout::new(1, 3, 5));
    let op = KfpOperator::assemble(&model, layout.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Support strictly inside the cut so the Galerkin image is exact.
    let small = Arc::new(Layout::new(1, 2, 4));
    let f = PhaseField::random_real(small, &mut rng, 0.7).recut(layout);
    let lf = op.apply(&f);
    for &(x, v) in &[(0.1, 0.3), (0.77, -1.4), (0.5, 2.0)] {
        let got = lf.eval(&[x], &[v]);
        let want = pointwise_l(&model, &f, x, v);
        assert!((got - want).abs() < 1e-7 * (1.0 + want.abs()), "{got} vs {want}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn apply_preserves_reality_and_linearity(seed in any::<u64>(), s in -3.0f64..3.0) {
        let model = Model::new(Potential::cosine(2, 0.7), Friction::constant(vec![vec![1.2, 0.3], vec![0.3, 0.8]]).unwrap()).unwrap();
        let layout = Arc::new(Layout::new(2, 3, 4));
        let op = KfpOperator::assemble(&model, layout.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = PhaseField::random_real(layout.clone(), &mut rng, 0.6);
        let g = PhaseField::random_real(layout, &mut rng, 0.6);
        let lf = op.apply(&f);
        prop_assert!(lf.reality_defect() < 1e-12);
        let mut comb = f.clone();
        comb.axpy(s, &g);
        let mut expect = lf.clone();
        expect.axpy(s, &op.apply(&g));
        prop_assert!(op.apply(&comb).sub(&expect).norm_flat() <= 1e-12 * (1.0 + expect.norm_flat()));
    }

    #[test]
    fn gibbs_structure_of_the_operator(seed in any::<u64>(), lambda in 0.0f64..2.0) {
        // For fields supported well inside the cut the Galerkin image is exact:
        // <L f>_m = 0 and <f, L f>_m = <f, collision f>_m >= 0.
        let model = Model::new(Potential::cosine(1, lambda), Friction::identity(1)).unwrap();
        let layout = Arc::new(Layout::new(1, 6, 10));
        let inner = Arc::new(Layout::new(1, 5, 9));
        let op = KfpOperator::assemble(&model, layout.clone()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = PhaseField::random_real(inner, &mut rng, 0.7).recut(layout.clone());
        let w = model.weight_table(12);
        let lf = op.apply(&f);
        prop_assert!(mean_m(&w, &lf).abs() < 1e-11 * (1.0 + lf.norm_flat()));
        // The number operator is the collision part for a = I.
        let mut num = PhaseField::zeros(layout.clone());
        for (mi, _) in layout.modes().iter().enumerate() {
            for h in 0..layout.n_herm() {
                num.set(mi, h, f.get(mi, h) * layout.herm_index(h)[0] as f64);
            }
        }
        let q = inner_product_m(&w, &f, &lf);
        let c = inner_product_m(&w, &f, &num);
        prop_assert!(c >= -1e-12);
        prop_assert!((q - c).abs() < 1e-10 * (1.0 + c.abs()), "{} vs {}", q, c);
    }
}

#[test]
fn pointwise_local_operator_matches_galerkin_inside_cut() {
    let model = Model::new(Potential::cosine(2, 0.9), Friction::identity(2)).unwrap();
    let layout = Arc::new(Layout::new(2, 4, 6));
    let inner = Arc::new(Layout::new(2, 3, 5));
    let op = KfpOperator::assemble(&model, layout.clone()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = PhaseField::random_real(inner, &mut rng, 0.6).recut(layout.clone());
    let lf = op.apply(&f);
    let local = LocalOperator::new(&model, layout.nv());
    for x in [[0.13, 0.4], [0.9, 0.05]] {
        let (vals, grads) = f.local(&x);
        let pt = local.apply(&x, &vals, &grads);
        let (want, _) = lf.local(&x);
        for h in 0..layout.n_herm() {
            assert!((pt[h] - want[h]).abs() < 1e-10, "{h}: {} vs {}", pt[h], want[h]);
        }
        assert!(pt[layout.n_herm()..].iter().all(|c| c.abs() < 1e-10));
    }
}
