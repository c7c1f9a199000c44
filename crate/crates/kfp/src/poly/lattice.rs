//! Real-valued fields on boxes of the integer lattice.

use super::PolyError;

/// Values on `{z in Z^d : lo_i <= z_i <= hi_i}`, stored with the first
/// coordinate varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeField {
    lo: Vec<i64>,
    hi: Vec<i64>,
    values: Vec<f64>,
}

impl LatticeField {
    /// The centred cube `|z_i| <= radius`.
    pub fn centered(dim: usize, radius: i64, f: impl FnMut(&[i64]) -> f64) -> Self {
        Self::from_box(vec![-radius; dim], vec![radius; dim], f)
    }

    pub fn from_box(lo: Vec<i64>, hi: Vec<i64>, mut f: impl FnMut(&[i64]) -> f64) -> Self {
        assert_eq!(lo.len(), hi.len());
        assert!(lo.iter().zip(&hi).all(|(a, b)| a <= b), "empty box");
        let mut field = LatticeField {
            values: Vec::new(),
            lo,
            hi,
        };
        let n = field.len();
        let mut z = vec![0; field.dim()];
        field.values = (0..n)
            .map(|k| {
                field.point_into(k, &mut z);
                f(&z)
            })
            .collect();
        field
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a + 1) as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn point_into(&self, mut k: usize, z: &mut [i64]) {
        for (i, zi) in z.iter_mut().enumerate() {
            let w = (self.hi[i] - self.lo[i] + 1) as usize;
            *zi = self.lo[i] + (k % w) as i64;
            k /= w;
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (Vec<i64>, f64)> + '_ {
        (0..self.values.len()).map(move |k| {
            let mut z = vec![0; self.dim()];
            self.point_into(k, &mut z);
            (z, self.values[k])
        })
    }

    fn index(&self, z: &[i64]) -> Option<usize> {
        let mut k = 0usize;
        let mut stride = 1usize;
        for i in 0..self.dim() {
            if z[i] < self.lo[i] || z[i] > self.hi[i] {
                return None;
            }
            k += (z[i] - self.lo[i]) as usize * stride;
            stride *= (self.hi[i] - self.lo[i] + 1) as usize;
        }
        Some(k)
    }

    pub fn get(&self, z: &[i64]) -> Option<f64> {
        self.index(z).map(|k| self.values[k])
    }

    /// `z -> g(z + e_j) - g(z)` on the box shrunk by one in direction `j`.
    pub fn difference(&self, j: usize) -> Result<Self, PolyError> {
        if self.hi[j] <= self.lo[j] {
            return Err(PolyError::DomainTooSmall { direction: j });
        }
        let mut hi = self.hi.clone();
        hi[j] -= 1;
        Ok(Self::from_box(self.lo.clone(), hi, |z| {
            let mut up = z.to_vec();
            up[j] += 1;
            self.get(&up).expect("inside") - self.get(z).expect("inside")
        }))
    }

    /// `D^alpha g`.
    pub fn finite_difference(&self, alpha: &[u32]) -> Result<Self, PolyError> {
        if alpha.len() != self.dim() {
            return Err(PolyError::DimensionMismatch { expected: self.dim(), found: alpha.len() });
        }
        let mut g = self.clone();
        for (j, &a) in alpha.iter().enumerate() {
            for _ in 0..a {
                g = g.difference(j)?;
            }
        }
        Ok(g)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
