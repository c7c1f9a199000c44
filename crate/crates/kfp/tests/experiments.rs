use kfp::cell::{second_correctors, Centring, CorrectorOptions, CorrectorSet};
use kfp::experiments::*;
use kfp::langevin::HistogramSpec;
use kfp::spectral::{Friction, Model, Potential};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn cosine(lambda: f64) -> Model {
    Model::new(Potential::cosine(1, lambda), Friction::identity(1)).unwrap()
}

fn small_grid() -> ResidualGrid {
    ResidualGrid {
        times: vec![1.0, 3.0],
        half_width: 2.0,
        points: 5,
        time_step: 1e-2,
    }
}

#[test]
fn free_two_scale_residual_vanishes() {
    for d in [1, 2] {
        let model = Model::new(Potential::zero(d), Friction::identity(d)).unwrap();
        let cset = CorrectorSet::build(&model, &CorrectorOptions::new(1, 1, 4)).unwrap();
        let psi = second_correctors(&cset, Centring::Constant).unwrap();
        let q = GaussianQbar::heat_kernel(cset.diffusivity(), 0.5);
        let rep = two_scale_residual(&cset, &psi, &q, &small_grid());
        assert!(rep.residual <= 1e-8, "d = {d}: {rep:?}");
        assert!(rep.scale > 1e-3);
    }
}

#[test]
fn cosine_two_scale_residual_vanishes_for_both_centrings() {
    let cset = CorrectorSet::build(&cosine(1.0), &CorrectorOptions::new(1, 16, 64)).unwrap();
    let q = GaussianQbar::heat_kernel(cset.diffusivity(), 0.5);
    for centring in [Centring::Constant, Centring::Local] {
        let psi = second_correctors(&cset, centring).unwrap();
        let rep = two_scale_residual(&cset, &psi, &q, &small_grid());
        assert!(rep.residual <= 1e-6, "{centring:?}: {rep:?}");
        assert!(rep.scale > 1e-3);
    }
}

#[test]
fn residual_detects_the_wrong_centring() {
    let cset = CorrectorSet::build(&cosine(1.0), &CorrectorOptions::new(1, 16, 64)).unwrap();
    let q = GaussianQbar::heat_kernel(cset.diffusivity(), 0.5);
    let mut psi = second_correctors(&cset, Centring::Local).unwrap();
    psi.centring = Centring::Constant;
    let rep = two_scale_residual(&cset, &psi, &q, &small_grid());
    assert!(rep.relative > 1e-2, "{rep:?}");
}

#[test]
fn residual_is_linear_in_the_homogenized_solution() {
    let cset = CorrectorSet::build(&cosine(0.7), &CorrectorOptions::new(1, 8, 24)).unwrap();
    let psi = second_correctors(&cset, Centring::Constant).unwrap();
    let q = GaussianQbar::heat_kernel(cset.diffusivity(), 0.5);
    let a = two_scale_residual(&cset, &psi, &q, &small_grid());
    let b = two_scale_residual(&cset, &psi, &q.scaled(2.0), &small_grid());
    assert!((b.scale - 2.0 * a.scale).abs() <= 1e-12 * b.scale);
    assert!((b.residual - 2.0 * a.residual).abs() <= 1e-9 * (1.0 + b.residual));
}

/// `sup_u |He_k(u)| exp(-u^2 / 4)` on a fine grid.
fn hermite_envelope_sup(k: u32) -> f64 {
    let he = |u: f64| match k {
        0 => 1.0,
        1 => u,
        2 => u * u - 1.0,
        _ => u * u * u - 3.0 * u,
    };
    (0..=200_000).map(|i| -10.0 + i as f64 * 1e-4).map(|u| he(u).abs() * (-u * u / 4.0).exp()).fold(0.0, f64::max)
}

#[test]
fn point_mass_derivative_constants_are_explicit() {
    let abar = 0.4;
    let q = HistQbar::point(abar, 0.0);
    let times = [1.0, 4.0, 16.0];
    let grid: Vec<f64> = (0..=4000).map(|i| -40.0 + i as f64 * 0.02).collect();
    let b = qbar_derivative_bounds(&q, &times, &grid);
    assert!((b.c - 2.0 * abar).abs() <= 1e-12);
    for k in 0..=3u32 {
        // t^{k/2} |d^k G_{2 abar t}| / G_{4 abar t} = (2 abar)^{-k/2} sqrt 2 |He_k(u)| e^{-u^2/4}
        let expect = (2.0 * abar).powf(-0.5 * k as f64) * 2f64.sqrt() * hermite_envelope_sup(k);
        let got = b.constants[k as usize];
        assert!((got - expect).abs() <= 2e-3 * expect, "k = {k}: {got} vs {expect}");
    }
}

#[test]
fn histogram_data_has_unit_mass_and_exact_variance_growth() {
    let q = HistQbar {
        abar: 0.3,
        t0: 1.0,
        atoms: vec![
            Atom { lo: -1.0, hi: -0.5, mass: 0.2 },
            Atom { lo: 0.0, hi: 0.0, mass: 0.5 },
            Atom { lo: 0.25, hi: 1.5, mass: 0.3 },
        ],
    };
    for t in [1.5, 3.0, 10.0] {
        // trapezoid quadrature of the density and its second moment
        let (lo, hi, n) = (-30.0, 30.0, 60_000);
        let h = (hi - lo) / n as f64;
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for i in 0..=n {
            let x = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 * h } else { h };
            let p = q.density(t, x) * w;
            m0 += p;
            m1 += p * x;
            m2 += p * x * x;
        }
        assert!((m0 - 1.0).abs() <= 1e-10, "{m0}");
        assert!((q.cell_mass(t, -40.0, 40.0) - 1.0).abs() <= 1e-10);
        let var = m2 - m1 * m1;
        assert!((var - q.variance(t)).abs() <= 1e-8, "{var} vs {}", q.variance(t));
        assert!((m1 - q.mean()).abs() <= 1e-10);
    }
}

#[test]
fn derivatives_of_histogram_data_match_finite_differences() {
    let q = HistQbar {
        abar: 0.5,
        t0: 0.0,
        atoms: vec![Atom { lo: -0.5, hi: 0.5, mass: 1.0 }],
    };
    let (t, h) = (2.0, 1e-4);
    for x in [-1.3, 0.0, 0.8] {
        for k in 0..3 {
            let fd = (q.derivative(t, x + h, k) - q.derivative(t, x - h, k)) / (2.0 * h);
            assert!((fd - q.derivative(t, x, k + 1)).abs() < 1e-7);
        }
        let dt = (q.density(t + h, x) - q.density(t - h, x)) / (2.0 * h);
        assert!((dt - 0.5 * q.derivative(t, x, 2)).abs() < 1e-7);
    }
}

fn quick_config(n_traj: usize, seed: u64, t0: Vec<f64>) -> HomExperimentConfig {
    HomExperimentConfig {
        times: vec![4.0, 8.0],
        t0,
        n_traj,
        seed,
        batches: 20,
        record_every: 1.0,
        histogram: HistogramSpec::default(),
    }
}

#[test]
fn free_process_reaches_the_noise_floor_from_late_data() {
    let model = Model::new(Potential::zero(1), Friction::identity(1)).unwrap();
    let cfg = quick_config(20_000, 21, vec![0.0, 2.0]);
    let table = homogenization_rate(&model, 1.0, &cfg).unwrap();
    for r in table.rows.iter().filter(|r| r.t0 == 2.0) {
        assert!(r.error_xmarginal <= 4.0 * r.mc_se, "{r:?}");
    }
    let (e, se) = table.abar_mc.unwrap();
    assert!((e - 1.0).abs() <= 3.0 * se);
}

#[test]
fn cosine_rate_table_is_decreasing() {
    let model = cosine(1.0);
    let cset = CorrectorSet::build(&model, &CorrectorOptions::new(1, 16, 64)).unwrap();
    let abar = cset.diffusivity()[(0, 0)];
    let cfg = quick_config(20_000, 22, vec![0.0]);
    let table = homogenization_rate(&model, abar, &cfg).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(table.decreasing, "{table:?}");
    assert!(table.slope < 0.0);
    assert_eq!(table.csv_rows().len(), 2);
}

#[test]
fn unresolved_errors_are_reported() {
    let model = Model::new(Potential::zero(1), Friction::identity(1)).unwrap();
    let cfg = quick_config(200, 23, vec![0.0]);
    // the exact diffusivity leaves only sampling noise
    match homogenization_rate(&model, 1.0, &cfg) {
        Err(ExperimentError::InsufficientBudget { noise, error, .. }) => assert!(noise > 0.5 * error),
        other => panic!("{other:?}"),
    }
}

#[test]
fn configs_are_validated() {
    let model = cosine(1.0);
    let mut cfg = quick_config(100, 0, vec![5.0]);
    assert!(matches!(homogenization_rate(&model, 0.3, &cfg), Err(ExperimentError::InvalidInput(_))));
    cfg.t0 = vec![0.5];
    assert!(matches!(homogenization_rate(&model, 0.3, &cfg), Err(ExperimentError::InvalidInput(_))));
    let two = Model::new(Potential::zero(2), Friction::identity(2)).unwrap();
    let cfg = quick_config(100, 0, vec![0.0]);
    assert!(matches!(homogenization_rate(&two, 0.3, &cfg), Err(ExperimentError::InvalidInput(_))));
}

#[test]
fn gaussian_time_derivative_is_the_heat_operator() {
    let abar = DMatrix::from_row_slice(2, 2, &[0.8, 0.1, 0.1, 0.4]);
    let q = GaussianQbar::heat_kernel(&abar, 0.3);
    let (t, x, h) = (1.1, [0.3, -0.6], 1e-5);
    let dt = q.time_derivatives(t, &x, 1);
    for (alpha, v) in dt {
        let fd = (q.derivatives(t + h, &x, 1)[&alpha] - q.derivatives(t - h, &x, 1)[&alpha]) / (2.0 * h);
        assert!((fd - v).abs() < 1e-7, "{alpha:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn histogram_qbar_conserves_mass(
        masses in proptest::collection::vec(0.01f64..1.0, 1..6),
        t in 0.5f64..20.0,
        abar in 0.05f64..2.0,
    ) {
        let total: f64 = masses.iter().sum();
        let atoms: Vec<Atom> = masses
            .iter()
            .enumerate()
            .map(|(i, m)| Atom { lo: i as f64 - 2.0, hi: i as f64 - 1.75, mass: m / total })
            .collect();
        let q = HistQbar { abar, t0: 0.0, atoms };
        let r = 40.0 + 20.0 * (abar * t).sqrt();
        prop_assert!((q.cell_mass(t, -r, r) - 1.0).abs() <= 1e-10);
        let parts: f64 = (-60..60).map(|z| q.cell_mass(t, z as f64 - 0.5, z as f64 + 0.5)).sum();
        prop_assert!((parts - 1.0).abs() <= 1e-10);
    }
}
