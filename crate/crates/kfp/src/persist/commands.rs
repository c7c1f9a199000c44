//! Subcommands of the `kfp` binary.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use super::cache::{load_or_build, CacheOutcome};
use super::table::{write_json, write_table, Cell, Meta, Table};
use super::{PersistError, RunConfig};
use crate::cell::CorrectorSet;
use crate::experiments::homogenization_rate;
use crate::hetpoly::regularity_scan;
use crate::langevin::{estimate_diffusivity, integrate};
use crate::multi_index;
use crate::poly::identity_suite;
use crate::spectral::Model;

#[derive(Debug, Clone, Parser)]
#[command(name = "kfp", version, about = "Homogenization of the kinetic Fokker-Planck equation")]
pub struct Cli {
    /// TOML run configuration; defaults apply when absent.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Re-solve cell problems even when a cached set exists.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve (or load) the corrector hierarchy and tabulate the macroscopic tensors.
    Correctors,
    /// Effective diffusivity matrix.
    Effdiff,
    /// Langevin Monte Carlo ensemble: moments, histograms and the Einstein estimate.
    Mc,
    /// Distance of the Monte Carlo law to the homogenized Gaussian over time.
    Homog,
    /// Large-scale regularity exponents of heterogeneous polynomials.
    Regularity,
    /// Exact polynomial identity suite.
    PolySelftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Correctors => "correctors",
            Command::Effdiff => "effdiff",
            Command::Mc => "mc",
            Command::Homog => "homog",
            Command::Regularity => "regularity",
            Command::PolySelftest => "poly-selftest",
        }
    }
}

/// Files written by a command and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub cache: Option<CacheOutcome>,
    pub passed: bool,
}

struct Ctx {
    cfg: RunConfig,
    out: PathBuf,
    cache: PathBuf,
    force: bool,
    meta: Meta,
}

impl Ctx {
    fn model(&self) -> Result<Model, PersistError> {
        self.cfg.model.build()
    }

    fn correctors(&self, min_order: u32) -> Result<(CorrectorSet, std::collections::BTreeMap<Vec<u32>, f64>, CacheOutcome), PersistError> {
        let mut opts = self.cfg.cells.options();
        opts.order = opts.order.max(min_order);
        load_or_build(&self.cache, &self.model()?, &opts, self.force)
    }
}

fn matrix_json(m: &nalgebra::DMatrix<f64>) -> Value {
    json!((0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn alpha_label(alpha: &[u32]) -> String {
    alpha.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" ")
}

/// Runs `cli.command` with `cli`'s overrides applied to the configuration,
/// writing into `cache_dir` for correctors.
pub fn run(cli: &Cli, cache_dir: &Path) -> Result<RunOutput, PersistError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.to_string_lossy().into_owned();
    }
    let out = PathBuf::from(&cfg.out);
    std::fs::create_dir_all(&out).map_err(|e| PersistError::io(&out, e))?;
    let meta = Meta::new(cli.command.name(), cfg.hash(), cfg.seed);
    let ctx = Ctx {
        cfg,
        out,
        cache: cache_dir.to_path_buf(),
        force: cli.force,
        meta,
    };
    let job = || match cli.command {
        Command::Correctors => correctors(&ctx),
        Command::Effdiff => effdiff(&ctx),
        Command::Mc => mc(&ctx),
        Command::Homog => homog(&ctx),
        Command::Regularity => regularity(&ctx),
        Command::PolySelftest => poly_selftest(&ctx),
    };
    match cli.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| PersistError::Failed(e.to_string()))?
            .install(job),
        None => job(),
    }
}

fn correctors(ctx: &Ctx) -> Result<RunOutput, PersistError> {
    let (cset, residuals, outcome) = ctx.correctors(1)?;
    let d = cset.dim();
    let mut table = Table::new(&["alpha", "degree", "abar_alpha", "residual"]);
    for level in 1..=cset.order() + 1 {
        for alpha in multi_index::of_degree(d, level) {
            let abar = if level >= 2 { cset.abar(&alpha) } else { 0.0 };
            let res = residuals.get(&alpha).copied().unwrap_or(f64::NAN);
            table.push(vec![alpha_label(&alpha).into(), level.into(), abar.into(), res.into()]);
        }
    }
    let opts = cset.options();
    let extra = json!({
        "abar": matrix_json(cset.diffusivity()),
        "order": opts.order,
        "nx": opts.nx,
        "nv": opts.nv,
        "tol": opts.solve.tol,
    });
    let csv = write_table(&ctx.out, "correctors", &table, &ctx.meta, extra)?;
    Ok(RunOutput {
        files: vec![csv, ctx.out.join("correctors.json")],
        cache: Some(outcome),
        passed: true,
    })
}

fn effdiff(ctx: &Ctx) -> Result<RunOutput, PersistError> {
    let (cset, _, outcome) = ctx.correctors(1)?;
    let a = cset.diffusivity();
    let sym = (a + a.transpose()) * 0.5;
    let eig = sym.clone().symmetric_eigen().eigenvalues;
    let mut eig: Vec<f64> = eig.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    let value = json!({
        "meta": ctx.meta,
        "a_eff": matrix_json(a),
        "symmetric_eigenvalues": eig,
        "positive_definite": eig.first().is_some_and(|&e| e > 0.0),
    });
    let path = write_json(&ctx.out, "effdiff", &value)?;
    Ok(RunOutput {
        files: vec![path],
        cache: Some(outcome),
        passed: eig.first().is_some_and(|&e| e > 0.0),
    })
}

fn mc(ctx: &Ctx) -> Result<RunOutput, PersistError> {
    let model = ctx.model()?;
    let lcfg = ctx.cfg.langevin(&model);
    let stats = integrate(&model, &lcfg)?;
    let d = stats.dim;
    let mut header = vec!["t".to_string()];
    for i in 0..d {
        for j in i..d {
            header.push(format!("msd_{i}{j}"));
            header.push(format!("msd_se_{i}{j}"));
        }
    }
    for i in 0..d {
        header.push(format!("mean_v2_{i}"));
    }
    let refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut series = Table::new(&refs);
    for (ti, &t) in stats.times.iter().enumerate() {
        let (m, se) = stats.msd(ti);
        let pooled = stats.pooled(ti);
        let mut row: Vec<Cell> = vec![t.into()];
        for i in 0..d {
            for j in i..d {
                row.push(m[(i, j)].into());
                row.push(se[(i, j)].into());
            }
        }
        for i in 0..d {
            row.push(pooled.second_v(i, i).into());
        }
        series.push(row);
    }
    let estimate = estimate_diffusivity(&stats);
    let extra = match &estimate {
        Ok(e) => json!({
            "dt": stats.dt,
            "n_traj": stats.n_traj,
            "diffusivity": matrix_json(&e.estimate),
            "diffusivity_se": matrix_json(&e.se),
            "window": [e.window.0, e.window.1],
        }),
        Err(err) => json!({ "dt": stats.dt, "n_traj": stats.n_traj, "diffusivity_error": err.to_string() }),
    };
    let mut files = vec![write_table(&ctx.out, "mc", &series, &ctx.meta, extra)?];
    if d == 1 {
        let mut hist = Table::new(&["t", "x", "mass"]);
        for (t, h) in stats.times.iter().zip(&stats.hist_x) {
            let n = h.total() as f64;
            for (i, &c) in h.counts.iter().enumerate() {
                hist.push(vec![(*t).into(), h.center(i).into(), (c as f64 / n).into()]);
            }
        }
        files.push(write_table(&ctx.out, "mc_hist_x", &hist, &ctx.meta, Value::Null)?);
    }
    Ok(RunOutput {
        files,
        cache: None,
        passed: estimate.is_ok(),
    })
}

fn homog(ctx: &Ctx) -> Result<RunOutput, PersistError> {
    let (cset, _, outcome) = ctx.correctors(1)?;
    if cset.dim() != 1 {
        return Err(PersistError::Config("homog needs a one-dimensional model".into()));
    }
    let abar = cset.diffusivity()[(0, 0)];
    let table = homogenization_rate(cset.model(), abar, &ctx.cfg.homog_config())?;
    let header = crate::experiments::RateTable::CSV_HEADER;
    let mut csv = Table::new(&header);
    for row in table.csv_rows() {
        csv.push(row.into_iter().map(Cell::from).collect());
    }
    let extra = json!({
        "abar": abar,
        "abar_mc": table.abar_mc,
        "slope": table.slope,
        "r_squared": table.r_squared,
        "decreasing": table.decreasing,
    });
    let path = write_table(&ctx.out, "homog", &csv, &ctx.meta, extra)?;
    Ok(RunOutput {
        files: vec![path],
        cache: Some(outcome),
        passed: table.decreasing && table.slope <= -0.25,
    })
}

fn regularity(ctx: &Ctx) -> Result<RunOutput, PersistError> {
    let top = ctx.cfg.regularity.degrees.iter().copied().max().unwrap_or(0);
    let (cset, _, outcome) = ctx.correctors(top + 1)?;
    let cset = Arc::new(cset);
    let mut table = Table::new(&["degree", "radius", "error", "ratio"]);
    let mut fits = Vec::new();
    let mut passed = true;
    for &m in &ctx.cfg.regularity.degrees {
        let rep = regularity_scan(cset.clone(), &ctx.cfg.scan_options(m))?;
        for r in &rep.rows {
            table.push(vec![m.into(), r.radius.into(), r.error.into(), r.ratio.into()]);
        }
        passed &= (rep.slope - (m + 1) as f64).abs() <= 0.2 && rep.r_squared >= 0.98;
        fits.push(json!({ "degree": m, "slope": rep.slope, "r_squared": rep.r_squared, "outer_norm": rep.outer_norm }));
    }
    let path = write_table(&ctx.out, "regularity", &table, &ctx.meta, json!({ "fits": fits }))?;
    Ok(RunOutput {
        files: vec![path],
        cache: Some(outcome),
        passed,
    })
}

fn poly_selftest(ctx: &Ctx) -> Result<RunOutput, PersistError> {
    let rep = identity_suite(&ctx.cfg.selftest);
    let mut table = Table::new(&["check", "cases", "failures", "worst"]);
    for c in &rep.checks {
        table.push(vec![c.name.clone().into(), c.cases.into(), c.failures.into(), c.worst.into()]);
    }
    let path = write_table(&ctx.out, "poly_selftest", &table, &ctx.meta, json!({ "passed": rep.passed() }))?;
    Ok(RunOutput {
        files: vec![path],
        cache: None,
        passed: rep.passed(),
    })
}
