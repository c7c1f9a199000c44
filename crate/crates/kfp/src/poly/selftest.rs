//! Exact identity suite over random rational polynomials.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{hermite_checks, newton_checks, pr_norm, rat, s_apply, MacroTensors, RatPoly, Rational};
use crate::multi_index;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelfTestConfig {
    pub max_dim: usize,
    /// Highest homogeneous degree fed to the inverse Laplacian and the
    /// macroscopic inverse.
    pub max_degree: u32,
    /// Random inputs per `(dim, degree)` pair.
    pub per_degree: usize,
    /// Random inputs for the inverse-Laplacian norm bound.
    pub norm_trials: usize,
    pub newton_order: u32,
    pub seed: u64,
}

impl Default for SelfTestConfig {
    fn default() -> Self {
        SelfTestConfig {
            max_dim: 3,
            max_degree: 8,
            per_degree: 2,
            norm_trials: 1000,
            newton_order: 8,
            seed: 17,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteCheck {
    pub name: String,
    pub cases: usize,
    pub failures: usize,
    /// Worst observed ratio or error, where the check has one.
    pub worst: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfTestReport {
    pub checks: Vec<SuiteCheck>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures == 0)
    }

    pub fn get(&self, name: &str) -> Option<&SuiteCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn random_homogeneous(d: usize, m: u32, rng: &mut impl Rng) -> RatPoly {
    RatPoly::from_terms(
        d,
        multi_index::of_degree(d, m)
            .into_iter()
            .map(|a| (a, rat(rng.random_range(-20..=20), rng.random_range(1..=9)))),
    )
}

/// Positive diagonal second-order part plus small off-diagonal and
/// higher-order rational tensors decaying like `4^{-n}`.
fn random_tensors(d: usize, order: u32, rng: &mut impl Rng) -> MacroTensors<Rational> {
    let mut t = MacroTensors::<Rational>::zero(d, order);
    for n in 2..=order {
        for a in multi_index::of_degree(d, n) {
            let c = if n == 2 && a.iter().any(|&k| k == 2) {
                rat(rng.random_range(8..=16), 8)
            } else {
                rat(rng.random_range(-4..=4), 1i64 << (2 * n))
            };
            t.set(a, c);
        }
    }
    t
}

/// Runs every exact identity on seeded random inputs.
pub fn identity_suite(cfg: &SelfTestConfig) -> SelfTestReport {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut checks = Vec::new();

    let mut lap = SuiteCheck {
        name: "laplacian_of_s".into(),
        cases: 0,
        failures: 0,
        worst: 0.0,
    };
    let mut inv = SuiteCheck {
        name: "macro_invert".into(),
        ..lap.clone()
    };
    for d in 1..=cfg.max_dim {
        for m in 0..=cfg.max_degree {
            for _ in 0..cfg.per_degree {
                let p = random_homogeneous(d, m, &mut rng);
                lap.cases += 1;
                match s_apply(&p) {
                    Ok(sp) if sp.laplacian() == p => {}
                    _ => lap.failures += 1,
                }
                let tensors = random_tensors(d, m + 2, &mut rng);
                inv.cases += 1;
                let ok = tensors
                    .invert(&p, 1.0)
                    .and_then(|r| tensors.apply(&r.q))
                    .is_ok_and(|back| back == p);
                if !ok {
                    inv.failures += 1;
                }
            }
        }
    }
    checks.push(lap);
    checks.push(inv);

    let mut norm = SuiteCheck {
        name: "s_norm_bound".into(),
        cases: 0,
        failures: 0,
        worst: 0.0,
    };
    let mut trial = 0;
    while norm.cases < cfg.norm_trials {
        let d = 1 + trial % cfg.max_dim.max(1);
        trial += 1;
        let m = rng.random_range(0..=6);
        let p = random_homogeneous(d, m, &mut rng);
        if p.is_zero() {
            continue;
        }
        let r = 0.5 + 4.0 * rng.random::<f64>();
        norm.cases += 1;
        let Ok(sp) = s_apply(&p) else {
            norm.failures += 1;
            continue;
        };
        let ratio = pr_norm(&sp, r) / pr_norm(&p, r) / (r * r / ((m + 1) as f64).sqrt());
        norm.worst = norm.worst.max(ratio);
        if ratio > 1.0 + 1e-12 {
            norm.failures += 1;
        }
    }
    checks.push(norm);

    let mut herm = SuiteCheck {
        name: "hermite_orthogonality".into(),
        cases: 0,
        failures: 0,
        worst: 0.0,
    };
    for d in 1..=cfg.max_dim {
        let deg = if d <= 2 { 6 } else { 3 };
        let rep = hermite_checks(d, deg);
        herm.cases += 1;
        herm.worst = herm.worst.max(rep.quadrature_error);
        if !rep.passed(1e-10) {
            herm.failures += 1;
        }
    }
    checks.push(herm);

    let mut newton = SuiteCheck {
        name: "newton_duality".into(),
        cases: 0,
        failures: 0,
        worst: 0.0,
    };
    for d in 1..=cfg.max_dim {
        let rep = newton_checks(cfg.newton_order, d, 4, 5, cfg.seed + d as u64);
        newton.cases += 1;
        if !rep.passed() {
            newton.failures += 1;
        }
    }
    checks.push(newton);

    SelfTestReport { checks }
}
