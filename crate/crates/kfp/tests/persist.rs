use std::path::Path;

use clap::Parser;
use kfp::cell::{CorrectorOptions, CorrectorSet};
use kfp::persist::cache::{decode, encode};
use kfp::persist::*;
use kfp::spectral::{CosineTerm, Model};
use proptest::prelude::*;
use tempfile::TempDir;

fn cli(args: &[&str]) -> Cli {
    Cli::try_parse_from(std::iter::once("kfp").chain(args.iter().copied())).unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap()
}

#[test]
fn fnv1a_reference_values() {
    assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
    assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    assert_eq!(fnv1a(b"foobar"), 0x85944171f73967e8);
}

#[test]
fn empty_config_is_the_free_model() {
    let cfg = RunConfig::from_toml("").unwrap();
    assert_eq!(cfg, RunConfig::default());
    let model = cfg.model.build().unwrap();
    assert_eq!(model.dim(), 1);
    assert!(model.potential.is_zero());
}

#[test]
fn invalid_physics_is_rejected_at_load() {
    let not_pd = "[model]\ndim = 2\nfriction = [[1.0, 2.0], [2.0, 1.0]]\n";
    assert!(matches!(RunConfig::from_toml(not_pd), Err(PersistError::Spectral(_))));
    let wrong_k = "[model]\ndim = 2\n[[model.potential]]\nk = [1]\namplitude = 1.0\n";
    assert!(RunConfig::from_toml(wrong_k).is_err());
    let unknown = "[cells]\nbogus = 1\n";
    assert!(matches!(RunConfig::from_toml(unknown), Err(PersistError::Config(_))));
    let bad_t0 = "[homog]\ntimes = [4.0]\nt0 = [3.0]\n";
    assert!(matches!(RunConfig::from_toml(bad_t0), Err(PersistError::Config(_))));
}

fn small_cset() -> CorrectorSet {
    let model = Model::new(
        kfp::spectral::Potential::new(1, vec![CosineTerm { k: vec![1], amplitude: 0.8, phase: 0.3 }]).unwrap(),
        kfp::spectral::Friction::identity(1),
    )
    .unwrap();
    CorrectorSet::build(&model, &CorrectorOptions::new(2, 4, 6)).unwrap()
}

#[test]
fn cache_round_trips_bit_exactly() {
    let cset = small_cset();
    let bytes = encode(&cset);
    assert_eq!(&bytes[..5], b"KFPC1");
    let (fields, residuals) = decode(&bytes, cset.model(), cset.options()).unwrap();
    for (alpha, f) in &fields {
        let orig = cset.corrector(alpha).unwrap();
        assert_eq!(f.layout(), orig.layout());
        for (a, b) in f.coeffs().iter().zip(orig.coeffs()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
        assert_eq!(residuals[alpha], cset.reports()[alpha].residual);
    }
    let rebuilt = CorrectorSet::from_correctors(cset.model(), cset.options(), fields).unwrap();
    assert_eq!(rebuilt.diffusivity(), cset.diffusivity());
    assert_eq!(encode(&rebuilt)[..bytes.len() - 8 - 8 * residuals.len()], bytes[..bytes.len() - 8 - 8 * residuals.len()]);
}

#[test]
fn cache_rejects_a_different_model() {
    let cset = small_cset();
    let bytes = encode(&cset);
    let other = Model::free(1);
    assert!(matches!(decode(&bytes, &other, cset.options()), Err(PersistError::CacheInvalid(_))));
    let mut opts = *cset.options();
    opts.nv += 1;
    assert!(matches!(decode(&bytes, cset.model(), &opts), Err(PersistError::CacheInvalid(_))));
    assert!(matches!(decode(&bytes[..40], cset.model(), cset.options()), Err(PersistError::CacheInvalid(_))));
}

#[test]
fn every_single_bit_flip_is_detected() {
    let cset = small_cset();
    let bytes = encode(&cset);
    let mut missed = 0;
    for i in 0..bytes.len() * 8 {
        let mut b = bytes.clone();
        b[i / 8] ^= 1 << (i % 8);
        if decode(&b, cset.model(), cset.options()).is_ok() {
            missed += 1;
        }
    }
    assert_eq!(missed, 0);
}

#[test]
fn correctors_command_uses_the_cache() {
    let dir = TempDir::new().unwrap();
    let cache = dir.path().join("cache");
    let out = dir.path().join("out");
    let config = write_config(dir.path(), "[model]\ndim = 1\n[[model.potential]]\nk = [1]\namplitude = 1.0\n[cells]\norder = 2\nnx = 8\nnv = 24\n");
    let args = ["--config", &config, "--out", out.to_str().unwrap(), "correctors"];
    let first = run(&cli(&args), &cache).unwrap();
    assert_eq!(first.cache, Some(CacheOutcome::Solved));
    let csv = read(&out.join("correctors.csv"));
    let json = read(&out.join("correctors.json"));
    let second = run(&cli(&args), &cache).unwrap();
    assert_eq!(second.cache, Some(CacheOutcome::Hit));
    assert_eq!(read(&out.join("correctors.csv")), csv);
    assert_eq!(read(&out.join("correctors.json")), json);

    let file = std::fs::read_dir(&cache).unwrap().next().unwrap().unwrap().path();
    let mut bytes = std::fs::read(&file).unwrap();
    bytes[64] ^= 0x10;
    std::fs::write(&file, &bytes).unwrap();
    assert!(matches!(run(&cli(&args), &cache), Err(PersistError::CacheInvalid(_))));
    let mut forced = args.to_vec();
    forced.insert(0, "--force");
    let third = run(&cli(&forced), &cache).unwrap();
    assert_eq!(third.cache, Some(CacheOutcome::Solved));
    assert_eq!(read(&out.join("correctors.csv")), csv);
    assert_eq!(run(&cli(&args), &cache).unwrap().cache, Some(CacheOutcome::Hit));
}

#[test]
fn free_effective_diffusivity_is_the_inverse_friction() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let config = write_config(dir.path(), "[model]\ndim = 2\nfriction = [[2.0, 0.5], [0.5, 1.0]]\n[cells]\norder = 1\nnx = 0\nnv = 3\n");
    let res = run(&cli(&["--config", &config, "--out", out.to_str().unwrap(), "effdiff"]), &dir.path().join("c")).unwrap();
    assert!(res.passed);
    let v: serde_json::Value = serde_json::from_str(&read(&out.join("effdiff.json"))).unwrap();
    let inv = [[1.0 / 1.75, -0.5 / 1.75], [-0.5 / 1.75, 2.0 / 1.75]];
    for i in 0..2 {
        for j in 0..2 {
            let a = v["a_eff"][i][j].as_f64().unwrap();
            assert!((a - inv[i][j]).abs() <= 1e-10, "{a}");
        }
    }
    assert_eq!(v["meta"]["command"], "effdiff");
    assert_eq!(v["meta"]["config_hash"].as_str().unwrap().len(), 16);
}

#[test]
fn poly_selftest_passes_on_an_empty_config() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let res = run(&cli(&["--out", out.to_str().unwrap(), "poly-selftest"]), dir.path()).unwrap();
    assert!(res.passed);
    let csv = read(&out.join("poly_selftest.csv"));
    assert!(csv.starts_with("check,cases,failures,worst\n"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn mc_output_is_identical_across_thread_counts() {
    let dir = TempDir::new().unwrap();
    let config = write_config(dir.path(), "[model]\ndim = 1\n[[model.potential]]\nk = [1]\namplitude = 1.0\n[mc]\nn_traj = 3000\nt_final = 4.0\nbatches = 12\n");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("out{threads}"));
        run(&cli(&["--config", &config, "--seed", "9", "--threads", threads, "--out", out.to_str().unwrap(), "mc"]), dir.path()).unwrap();
        outputs.push((read(&out.join("mc.csv")), read(&out.join("mc_hist_x.csv")), read(&out.join("mc.json"))));
    }
    assert!(outputs[0] == outputs[1], "outputs differ across thread counts");
    let other = dir.path().join("other");
    run(&cli(&["--config", &config, "--seed", "10", "--out", other.to_str().unwrap(), "mc"]), dir.path()).unwrap();
    assert_ne!(read(&other.join("mc.csv")), outputs[0].0);
}

#[test]
fn homog_command_writes_a_monotone_rate_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let config = write_config(
        dir.path(),
        "seed = 4\n[model]\ndim = 1\n[[model.potential]]\nk = [1]\namplitude = 1.0\n[cells]\norder = 1\nnx = 12\nnv = 48\n[homog]\ntimes = [4.0, 8.0]\nt0 = [0.0]\nn_traj = 20000\nbatches = 20\n",
    );
    run(&cli(&["--config", &config, "--out", out.to_str().unwrap(), "homog"]), &dir.path().join("c")).unwrap();
    let csv = read(&out.join("homog.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,t0,error_xmarginal,error_phase,mc_se,slope_running");
    let errors: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(errors.len(), 2);
    assert!(errors[1] < errors[0], "{errors:?}");
}

#[test]
fn cli_rejects_unknown_subcommands() {
    assert!(Cli::try_parse_from(["kfp", "nope"]).is_err());
    let c = cli(&["regularity", "--threads", "2", "--seed", "5"]);
    assert_eq!(c.command, Command::Regularity);
    assert_eq!(c.threads, Some(2));
}

fn arb_config() -> impl Strategy<Value = RunConfig> {
    (
        any::<u64>(),
        1usize..=3,
        proptest::collection::vec((-3i32..=3, -2.0f64..2.0, 0.0f64..6.0), 0..3),
        0.2f64..3.0,
        (1u32..4, 0usize..20, 1usize..80, 1e-12f64..1e-6),
        (1usize..100_000, 1.0f64..100.0, proptest::option::of(1e-4f64..1e-2)),
    )
        .prop_map(|(seed, dim, terms, fric, cells, mc)| {
            let mut cfg = RunConfig { seed, ..RunConfig::default() };
            cfg.model.dim = dim;
            cfg.model.potential = terms
                .into_iter()
                .map(|(k, amplitude, phase)| {
                    let mut kv = vec![0; dim];
                    kv[dim - 1] = k;
                    CosineTerm { k: kv, amplitude, phase }
                })
                .collect();
            cfg.model.friction = Some((0..dim).map(|i| (0..dim).map(|j| if i == j { fric } else { 0.0 }).collect()).collect());
            cfg.cells = CellSpec { order: cells.0, nx: cells.1, nv: cells.2, tol: cells.3 };
            cfg.mc.n_traj = mc.0;
            cfg.mc.t_final = mc.1;
            cfg.mc.dt = mc.2;
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip_is_lossless(cfg in arb_config()) {
        let text = cfg.to_toml();
        let back = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn csv_numbers_parse_back_exactly(xs in proptest::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..20)) {
        let mut t = Table::new(&["x"]);
        for &x in &xs {
            t.push(vec![x.into()]);
        }
        let csv = t.to_csv();
        let back: Vec<f64> = csv.lines().skip(1).map(|l| l.parse().unwrap()).collect();
        prop_assert_eq!(back.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), xs.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    }
}
