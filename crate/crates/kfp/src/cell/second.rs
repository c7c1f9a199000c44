use std::sync::Arc;

use rayon::prelude::*;

use super::{CellError, CorrectorSet};
use crate::multi_index;
use crate::spectral::{CellSolver, PhaseField, SolveReport};

/// What `v_i phi_j` is centred at in the second-corrector equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centring {
    /// `L psi_ij = v_i phi_j - abar_ij` (constant matrix).
    #[default]
    Constant,
    /// `L psi_ij = v_i phi_j - abar_ij(x)`.
    Local,
}

/// `psi_ij` for all ordered pairs.
#[derive(Debug, Clone)]
pub struct SecondCorrectors {
    pub centring: Centring,
    dim: usize,
    psi: Vec<PhaseField>,
    reports: Vec<SolveReport>,
}

impl SecondCorrectors {
    pub fn get(&self, i: usize, j: usize) -> &PhaseField {
        &self.psi[i * self.dim + j]
    }

    pub fn reports(&self) -> &[SolveReport] {
        &self.reports
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Solves for every `psi_ij` on the Hermite cut one above the first correctors.
pub fn second_correctors(cset: &CorrectorSet, centring: Centring) -> Result<SecondCorrectors, CellError> {
    let d = cset.dim();
    let layout = Arc::new(cset.options().layout(d, 2));
    let solver = CellSolver::new(cset.model(), layout.clone(), cset.options().solve)?;
    let zero = layout.zero_mode();
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).collect();
    let solved: Vec<_> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let phi = cset.corrector(&multi_index::unit(d, j)).expect("order >= 1");
            let mut rhs = phi.mul_v_into(i, layout.clone());
            match centring {
                Centring::Constant => {
                    rhs.coeffs_mut()[layout.flat(zero, 0)] -= cset.diffusivity()[(i, j)];
                }
                Centring::Local => {
                    let local = cset.local_diffusivity(i, j);
                    for (m, k) in layout.modes().iter().enumerate() {
                        let c = local.get(k);
                        let p = layout.flat(m, 0);
                        rhs.coeffs_mut()[p] -= c;
                    }
                }
            }
            let mut alpha = multi_index::unit(d, i);
            alpha[j] += 1;
            solver.solve_mean_zero(&rhs).map_err(|e| CellError::at(&alpha, e))
        })
        .collect();
    let mut psi = Vec::with_capacity(d * d);
    let mut reports = Vec::with_capacity(d * d);
    for r in solved {
        let (p, rep) = r?;
        psi.push(p);
        reports.push(rep);
    }
    Ok(SecondCorrectors {
        centring,
        dim: d,
        psi,
        reports,
    })
}
