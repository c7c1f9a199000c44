use std::collections::BTreeMap;
use std::sync::Arc;

use kfp::hetpoly::*;
use kfp::multi_index;
use kfp::poly::{random_poly, FloatPoly, MultiPoly};
use kfp::quad::gauss_legendre;
use kfp::spectral::{hermite_values, CosineTerm, LocalOperator};
use kfp::{CorrectorOptions, CorrectorSet, Friction, Model, Potential};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn free(d: usize, order: u32) -> Arc<CorrectorSet> {
    Arc::new(CorrectorSet::build(&Model::free(d), &CorrectorOptions::new(order, 1, 2)).unwrap())
}

fn cosine(order: u32) -> Arc<CorrectorSet> {
    let model = Model::new(Potential::cosine(1, 1.0), Friction::identity(1)).unwrap();
    Arc::new(CorrectorSet::build(&model, &CorrectorOptions::new(order, 16, 64)).unwrap())
}

/// Two harmonics with unrelated phases, so no reflection symmetry.
fn skewed(order: u32) -> Arc<CorrectorSet> {
    let terms = vec![
        CosineTerm { k: vec![1], amplitude: 0.8, phase: 0.0 },
        CosineTerm { k: vec![2], amplitude: 0.4, phase: 1.1 },
    ];
    let model = Model::new(Potential::new(1, terms).unwrap(), Friction::identity(1)).unwrap();
    Arc::new(CorrectorSet::build(&model, &CorrectorOptions::new(order, 16, 64)).unwrap())
}

fn cosine_2d(order: u32) -> Arc<CorrectorSet> {
    let model = Model::new(Potential::cosine(2, 0.5), Friction::identity(2)).unwrap();
    Arc::new(CorrectorSet::build(&model, &CorrectorOptions::new(order, 4, 10)).unwrap())
}

fn poly(d: usize, terms: &[(&[u32], f64)]) -> FloatPoly {
    MultiPoly::from_terms(d, terms.iter().map(|(a, c)| (a.to_vec(), *c)))
}

/// Cell average by tensor Gauss-Legendre on the gamma-average of psi.
fn quadrature_cell_average(psi: &HetPoly, z: &[i64]) -> f64 {
    let d = psi.dim();
    let n = 48;
    let rule = gauss_legendre(n);
    let mut total = 0.0;
    for flat in 0..n.pow(d as u32) {
        let mut r = flat;
        let mut x = vec![0.0; d];
        let mut w = 1.0;
        for j in 0..d {
            x[j] = z[j] as f64 + 0.5 * rule.nodes[r % n];
            w *= 0.5 * rule.weights[r % n];
            r /= n;
        }
        total += w * psi.local(&x).0[0];
    }
    total
}

#[test]
fn free_cell_averages() {
    let cset = free(2, 1);
    let psi = HetPoly::new(cset.clone(), poly(2, &[(&[1, 0], 1.0)])).unwrap();
    for (z, v) in psi.eval_cells(5).points() {
        assert!((v - z[0] as f64).abs() < 1e-14);
    }
    let one = HetPoly::new(cset, poly(2, &[(&[0, 0], 1.0)])).unwrap();
    assert!(one.eval_cells(5).values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
}

#[test]
fn periodic_corrector_shift_is_constant_for_linear_bases() {
    for (cset, symmetric) in [(cosine(1), true), (skewed(1), false), (cosine_2d(1), true)] {
        let d = cset.dim();
        let q = poly(d, &[(&vec![0; d], 0.3), (&multi_index::unit(d, 0), 1.2), (&multi_index::unit(d, d - 1), -0.7)]);
        let psi = HetPoly::new(cset, q.clone()).unwrap();
        let cells = psi.eval_cells(5);
        let shifts: Vec<f64> = cells
            .points()
            .map(|(z, v)| v - q.eval_f64(&z.iter().map(|&c| c as f64).collect::<Vec<_>>()))
            .collect();
        let spread = shifts.iter().cloned().fold(f64::MIN, f64::max) - shifts.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-12, "spread {spread:e}");
        // a reflection-symmetric potential makes the shift vanish
        assert_eq!(shifts[0].abs() < 1e-12, symmetric, "shift {}", shifts[0]);
    }
}

#[test]
fn closed_form_cell_averages_match_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for cset in [cosine(3), cosine_2d(2)] {
        let d = cset.dim();
        let q = random_poly(d, cset.order(), &mut rng).to_f64();
        let psi = HetPoly::new(cset, q).unwrap();
        let avg = psi.cell_average();
        for z in [vec![0i64; d], vec![2; d], vec![-3; d]] {
            let zf: Vec<f64> = z.iter().map(|&c| c as f64).collect();
            let exact = avg.eval_f64(&zf);
            let quad = quadrature_cell_average(&psi, &z);
            assert!((exact - quad).abs() < 1e-10 * (1.0 + quad.abs()), "{z:?}: {exact} vs {quad}");
        }
    }
}

#[test]
fn evaluation_agrees_with_hermite_expansion() {
    let cset = cosine(3);
    let q = poly(1, &[(&[3], 0.5), (&[1], -1.0), (&[0], 2.0)]);
    let psi = HetPoly::new(cset, q).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x = rng.random_range(-4.0..4.0);
        let v = rng.random_range(-2.0..2.0);
        let (vals, _) = psi.local(&[x]);
        let h = hermite_values(v, vals.len() - 1);
        let from_local: f64 = vals.iter().zip(&h).map(|(c, p)| c * p).sum();
        let direct = psi.eval(&[x], &[v]);
        assert!((from_local - direct).abs() < 1e-10 * (1.0 + direct.abs()));
    }
}

#[test]
fn operator_on_heterogeneous_polynomials() {
    let cset = free(2, 2);
    let lin = HetPoly::new(cset.clone(), poly(2, &[(&[1, 0], 1.0)])).unwrap();
    assert!(lin.apply_l().unwrap().is_zero());
    let quad = HetPoly::new(cset, poly(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)])).unwrap();
    let aq = quad.apply_l().unwrap();
    assert!((&aq - &poly(2, &[(&[0, 0], 4.0)])).max_coeff() < 1e-12);
    assert!(quad.operator_residual(3, 5).unwrap() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let cset = cosine(3);
    let psi = HetPoly::new(cset.clone(), random_poly(1, 3, &mut rng).to_f64()).unwrap();
    let expect = kfp::poly::macro_apply(cset.tensors(), psi.base()).unwrap();
    assert_eq!(psi.apply_l().unwrap(), expect);
    let res = psi.operator_residual(4, 32).unwrap();
    assert!(res < 1e-7, "relative residual {res:e}");
}

#[test]
fn lattice_data_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (cset, m) in [(cosine(3), 3), (cosine_2d(2), 2), (free(2, 3), 3)] {
        let d = cset.dim();
        let data: BTreeMap<Vec<u32>, f64> =
            multi_index::up_to_degree(d, m).into_iter().map(|k| (k, rng.random_range(-2.0..2.0))).collect();
        let psi = from_lattice_data(cset, m, &data).unwrap();
        let back = psi.lattice_jets(m);
        for (k, v) in &data {
            assert!((back[k] - v).abs() < 1e-10, "{k:?}: {} vs {v}", back[k]);
        }
    }
}

#[test]
fn lattice_data_trivial_cases() {
    let cset = free(1, 2);
    let zero: BTreeMap<Vec<u32>, f64> = multi_index::up_to_degree(1, 2).into_iter().map(|k| (k, 0.0)).collect();
    assert!(from_lattice_data(cset.clone(), 2, &zero).unwrap().base().max_coeff() < 1e-15);

    let mut slope = zero.clone();
    slope.insert(vec![1], 1.0);
    let psi = from_lattice_data(cset.clone(), 2, &slope).unwrap();
    // psi = x + v: the base is x and the velocity part is the first corrector
    assert!((psi.base() - &poly(1, &[(&[1], 1.0)])).max_coeff() < 1e-14);
    assert!((psi.eval(&[0.3], &[0.7]) - 1.0).abs() < 1e-12);

    let mut missing = zero.clone();
    missing.remove(&vec![2]);
    assert!(matches!(from_lattice_data(cset, 2, &missing), Err(HetPolyError::MissingData(_))));
}

#[test]
fn polynomial_right_hand_sides() {
    let cset = free(2, 2);
    let zero = solve_poly_rhs(cset.clone(), &FloatPoly::zero(2)).unwrap();
    assert!(zero.psi.base().is_zero());

    let sol = solve_poly_rhs(cset.clone(), &poly(2, &[(&[0, 0], 1.0)])).unwrap();
    let expect = poly(2, &[(&[2, 0], -0.25), (&[0, 2], -0.25)]);
    assert!((sol.psi.base() - &expect).max_coeff() < 1e-14);
    // L psi = 1 pointwise in (x, v)
    let op = LocalOperator::new(cset.model(), sol.psi.hermite_cut());
    for x in [[0.0, 0.0], [1.3, -0.4], [-2.0, 3.1]] {
        let (vals, grads) = sol.psi.local(&x);
        let out = op.apply(&x, &vals, &grads);
        assert!((out[0] - 1.0).abs() < 1e-12);
        assert!(out[1..].iter().all(|c| c.abs() < 1e-12));
    }

    let cset = cosine(3);
    let p = poly(1, &[(&[1], 0.7), (&[0], -0.2)]);
    let sol = solve_poly_rhs(cset.clone(), &p).unwrap();
    assert!(sol.residual < 1e-7, "{:e}", sol.residual);
    assert!(matches!(
        solve_poly_rhs(cset, &poly(1, &[(&[2], 1.0)])),
        Err(HetPolyError::InsufficientOrder { .. })
    ));
}

#[test]
fn norm_bound_constant_is_stable() {
    let cset = cosine(3);
    let p = poly(1, &[(&[1], 1.0), (&[0], 0.5)]);
    let sol = solve_poly_rhs(cset, &p).unwrap();
    let c = norm_bound_constant(&sol.psi, &p, &[8, 16, 32, 64]);
    // Regression lock, 10% tolerance.
    assert!((c - 1.27).abs() < 0.127, "fitted constant {c}");
}

/// Composite Simpson in x with Hermite Parseval in v, straight from the
/// defining sum.
fn dense_norm(psi: &HetPoly, r: usize, per_cell: usize) -> f64 {
    let d = psi.dim();
    let n = r * per_cell;
    let h = r as f64 / n as f64;
    let w1: Vec<f64> = (0..=n)
        .map(|i| {
            let s = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            s * h / 3.0
        })
        .collect();
    let mut total = 0.0;
    for flat in 0..(n + 1).pow(d as u32) {
        let mut rem = flat;
        let mut x = vec![0.0; d];
        let mut w = 1.0;
        for j in 0..d {
            let i = rem % (n + 1);
            x[j] = -(r as f64) / 2.0 + i as f64 * h;
            w *= w1[i];
            rem /= n + 1;
        }
        total += w * psi.local(&x).0.iter().map(|c| c * c).sum::<f64>();
    }
    (total / (r as f64).powi(d as i32)).sqrt()
}

#[test]
fn cell_quadrature_norm_matches_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cset = cosine(3);
    let psi = HetPoly::new(cset.clone(), random_poly(1, 3, &mut rng).to_f64()).unwrap();
    for r in [1, 2, 5] {
        let a = psi.norm(r);
        let b = dense_norm(&psi, r, 400);
        assert!((a - b).abs() < 1e-6 * b, "r = {r}: {a} vs {b}");
    }
    let cset = cosine_2d(2);
    let psi = HetPoly::new(cset, random_poly(2, 2, &mut rng).to_f64()).unwrap();
    for r in [1, 2] {
        let a = psi.norm(r);
        let b = dense_norm(&psi, r, 60);
        assert!((a - b).abs() < 1e-6 * b, "r = {r}: {a} vs {b}");
    }
}

#[test]
fn norm_of_free_linear_polynomial() {
    // psi = x + v: mean square over Q_r is r^2 / 12 + 1
    let psi = HetPoly::new(free(1, 1), poly(1, &[(&[1], 1.0)])).unwrap();
    for r in [1, 4, 7] {
        let exact = ((r * r) as f64 / 12.0 + 1.0).sqrt();
        assert!((psi.norm(r) - exact).abs() < 1e-12);
    }
}

#[test]
fn regularity_trivial_target_is_reproduced() {
    let cset = cosine(2);
    let opts = ScanOptions {
        target_degree: 2,
        degree: 2,
        radii: vec![2, 4, 8, 16],
        outer: 32,
        solutions: false,
        seed: 1,
    };
    let rep = regularity_scan(cset, &opts).unwrap();
    assert!(rep.rows.iter().all(|r| r.error < 1e-10), "{:?}", rep.rows);
}

#[test]
fn regularity_exponent_free_case() {
    for m in 0..=2 {
        let cset = free(1, m + 1);
        let rep = regularity_scan(cset, &ScanOptions::standard(m, 8.0, 256, 5)).unwrap();
        let want = (m + 1) as f64;
        assert!((rep.slope - want).abs() <= 0.2, "m = {m}: slope {}", rep.slope);
        assert!(rep.r_squared >= 0.98);
    }
}

#[test]
fn solutions_have_vanishing_high_differences() {
    let cset = cosine_2d(3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = random_solution_base(&cset, 3, &mut rng).unwrap();
    assert_eq!(base.degree(), Some(3));
    let f = HetPoly::new(cset.clone(), base.to_f64()).unwrap();
    assert!(f.apply_l().unwrap().max_coeff() < 1e-12);
    let cells = f.eval_cells(12);
    for k in multi_index::of_degree(2, 4) {
        let diff = cells.finite_difference(&k).unwrap();
        assert!(diff.max_abs() < 1e-8 * cells.max_abs(), "{k:?}: {}", diff.max_abs());
    }
}

#[test]
fn insufficient_order_rejected() {
    let cset = free(1, 1);
    assert!(matches!(
        HetPoly::new(cset, poly(1, &[(&[2], 1.0)])),
        Err(HetPolyError::InsufficientOrder { needed: 2, available: 1 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn jets_round_trip_for_random_bases(seed in 0u64..1000, m in 0u32..=3) {
        let cset = free(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_poly(2, m, &mut rng).to_f64();
        let psi = HetPoly::new(cset.clone(), q).unwrap();
        let back = from_lattice_data(cset, m, &psi.lattice_jets(m)).unwrap();
        prop_assert!((back.base() - psi.base()).max_coeff() < 1e-9);
    }
}

#[test]
fn norm_is_identical_across_thread_counts() {
    let psi = HetPoly::new(cosine(2), poly(1, &[(&[2], 1.0), (&[1], -0.3)])).unwrap();
    let norms: Vec<f64> = [1, 4]
        .iter()
        .map(|&n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| psi.norm(64))
        })
        .collect();
    assert_eq!(norms[0].to_bits(), norms[1].to_bits());
}
