//! Large-scale regularity experiment: approximation of a heterogeneous
//! polynomial of degree `M` by the one of degree `m` sharing its low lattice jets.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::norm::CellQuadrature;
use super::{from_lattice_data, random_solution_base, HetPoly, HetPolyError};
use crate::cell::CorrectorSet;
use crate::poly::{random_poly, rat};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Degree of the target.
    pub target_degree: u32,
    /// Degree of the approximant.
    pub degree: u32,
    /// Increasing radii; the fit uses all of them.
    pub radii: Vec<usize>,
    /// Outer radius for the normalization `||f||_{Q_R}`.
    pub outer: usize,
    /// Draw the target from solutions (`A q = 0`) instead of a generic base.
    pub solutions: bool,
    pub seed: u64,
}

impl ScanOptions {
    /// Integer radii from `c * m + 2` to `outer / 8`.
    pub fn standard(degree: u32, c: f64, outer: usize, seed: u64) -> Self {
        let lo = (c * degree as f64).ceil() as usize + 2;
        ScanOptions {
            target_degree: degree + 1,
            degree,
            radii: (lo..=outer / 8).collect(),
            outer,
            solutions: false,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityRow {
    pub radius: usize,
    /// `||f - psi||_{Q_r}`.
    pub error: f64,
    /// `error / ||f||_{Q_R}`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularityReport {
    pub options: ScanOptions,
    pub rows: Vec<RegularityRow>,
    pub outer_norm: f64,
    pub slope: f64,
    pub r_squared: f64,
}

/// Least-squares slope and `R^2` of `log y` against `log x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Builds a target `f` of degree `target_degree`, its degree-`degree`
/// approximant from the lattice jets of `f_hat` at the origin, and the error
/// norm on each radius.
pub fn regularity_scan(cset: Arc<CorrectorSet>, opts: &ScanOptions) -> Result<RegularityReport, HetPolyError> {
    if opts.target_degree < opts.degree {
        return Err(HetPolyError::InvalidInput("target degree below approximant degree".into()));
    }
    if opts.radii.is_empty() || opts.radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HetPolyError::InvalidInput("radii must be nonempty and increasing".into()));
    }
    let d = cset.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let base = if opts.solutions {
        random_solution_base(&cset, opts.target_degree, &mut rng)?
    } else {
        let mut b = random_poly(d, opts.target_degree, &mut rng);
        let mut top = vec![0; d];
        top[0] = opts.target_degree;
        if b.coeff(&top) == rat(0, 1) {
            b.add_term(top, rat(1, 1));
        }
        b
    };
    let f = HetPoly::new(cset.clone(), base.to_f64())?;
    let jets = f.lattice_jets(opts.degree);
    let psi = from_lattice_data(cset.clone(), opts.degree, &jets)?;
    let err = f.difference(&psi);
    let quad = CellQuadrature::new(&cset, opts.target_degree, None);
    let outer_norm = quad.norm(f.base(), opts.outer);
    let rows: Vec<RegularityRow> = opts
        .radii
        .iter()
        .map(|&r| {
            let error = quad.norm(err.base(), r);
            RegularityRow {
                radius: r,
                error,
                ratio: error / outer_norm,
            }
        })
        .collect();
    let xs: Vec<f64> = rows.iter().map(|r| r.radius as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.error).collect();
    let (slope, r_squared) = if ys.iter().all(|&y| y > 0.0) && xs.len() >= 2 {
        fit_loglog(&xs, &ys)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(RegularityReport {
        options: opts.clone(),
        rows,
        outer_norm,
        slope,
        r_squared,
    })
}
