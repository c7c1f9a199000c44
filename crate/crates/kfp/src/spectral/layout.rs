//! Index sets for the tensor Fourier x Hermite basis.

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

const NONE: u32 = u32::MAX;

/// Truncated basis: Fourier modes `|k|_inf <= nx` and Hermite indices
/// `|n|_1 <= nv`. Flat storage is k-major, n-minor.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    dim: usize,
    nx: usize,
    nv: usize,
    modes: Vec<[i32; MAX_DIM]>,
    herm: Vec<[u16; MAX_DIM]>,
    herm_lookup: Vec<u32>,
}

impl Layout {
    pub fn new(dim: usize, nx: usize, nv: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension must be 1..=3");
        let side = 2 * nx as i32 + 1;
        let nmodes = (side as usize).pow(dim as u32);
        let mut modes = Vec::with_capacity(nmodes);
        for flat in 0..nmodes {
            let mut k = [0i32; MAX_DIM];
            let mut r = flat;
            for j in (0..dim).rev() {
                k[j] = (r % side as usize) as i32 - nx as i32;
                r /= side as usize;
            }
            modes.push(k);
        }

        let mut herm: Vec<[u16; MAX_DIM]> = Vec::new();
        let hs = nv + 1;
        let total = hs.pow(dim as u32);
        for flat in 0..total {
            let mut n = [0u16; MAX_DIM];
            let mut r = flat;
            for j in (0..dim).rev() {
                n[j] = (r % hs) as u16;
                r /= hs;
            }
            if n.iter().map(|&x| x as usize).sum::<usize>() <= nv {
                herm.push(n);
            }
        }
        // Graded order: a smaller cut is a prefix of a larger one.
        herm.sort_by(|a, b| {
            let da: u32 = a.iter().map(|&x| x as u32).sum();
            let db: u32 = b.iter().map(|&x| x as u32).sum();
            da.cmp(&db).then_with(|| b.cmp(a))
        });
        let mut herm_lookup = vec![NONE; total];
        for (i, n) in herm.iter().enumerate() {
            herm_lookup[Self::herm_key(dim, nv, n)] = i as u32;
        }
        Layout {
            dim,
            nx,
            nv,
            modes,
            herm,
            herm_lookup,
        }
    }

    fn herm_key(dim: usize, nv: usize, n: &[u16; MAX_DIM]) -> usize {
        let mut key = 0usize;
        for &nj in n.iter().take(dim) {
            key = key * (nv + 1) + nj as usize;
        }
        key
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn nv(&self) -> usize {
        self.nv
    }
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }
    pub fn n_herm(&self) -> usize {
        self.herm.len()
    }
    pub fn len(&self) -> usize {
        self.modes.len() * self.herm.len()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn modes(&self) -> &[[i32; MAX_DIM]] {
        &self.modes
    }
    pub fn hermite(&self) -> &[[u16; MAX_DIM]] {
        &self.herm
    }
    pub fn mode(&self, i: usize) -> &[i32; MAX_DIM] {
        &self.modes[i]
    }
    pub fn herm_index(&self, i: usize) -> &[u16; MAX_DIM] {
        &self.herm[i]
    }

    /// Position of Fourier mode `k`, if inside the cut.
    pub fn mode_pos(&self, k: &[i32]) -> Option<usize> {
        let nx = self.nx as i32;
        let side = 2 * nx + 1;
        let mut flat = 0usize;
        for &kj in k.iter().take(self.dim) {
            if kj.abs() > nx {
                return None;
            }
            flat = flat * side as usize + (kj + nx) as usize;
        }
        Some(flat)
    }

    /// Position of the zero mode.
    pub fn zero_mode(&self) -> usize {
        self.mode_pos(&[0; MAX_DIM]).expect("zero mode")
    }

    /// Position of Hermite index `n`, if inside the cut.
    pub fn herm_pos(&self, n: &[i64]) -> Option<usize> {
        let mut total = 0i64;
        let mut m = [0u16; MAX_DIM];
        for j in 0..self.dim {
            if n[j] < 0 {
                return None;
            }
            total += n[j];
            m[j] = n[j] as u16;
        }
        if total > self.nv as i64 {
            return None;
        }
        let p = self.herm_lookup[Self::herm_key(self.dim, self.nv, &m)];
        (p != NONE).then_some(p as usize)
    }

    /// Hermite position of the unit index `e_j`.
    pub fn herm_unit(&self, j: usize) -> Option<usize> {
        let mut n = [0i64; MAX_DIM];
        n[j] = 1;
        self.herm_pos(&n)
    }

    pub fn flat(&self, mode: usize, herm: usize) -> usize {
        mode * self.herm.len() + herm
    }

    /// Layout with the same dimension and new cuts.
    pub fn with_cuts(&self, nx: usize, nv: usize) -> Layout {
        Layout::new(self.dim, nx, nv)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let l = Layout::new(2, 3, 4);
        assert_eq!(l.n_modes(), 49);
        assert_eq!(l.n_herm(), 15);
        assert_eq!(l.len(), 49 * 15);
        assert_eq!(l.herm_index(0), &[0, 0, 0]);
        assert_eq!(l.hermite()[1], [1, 0, 0]);
    }

    #[test]
    fn lookups_invert_enumeration() {
        let l = Layout::new(3, 2, 5);
        for (i, k) in l.modes().iter().enumerate() {
            assert_eq!(l.mode_pos(k), Some(i));
        }
        for (i, n) in l.hermite().iter().enumerate() {
            let m: Vec<i64> = n.iter().map(|&x| x as i64).collect();
            assert_eq!(l.herm_pos(&m), Some(i));
        }
        assert_eq!(l.mode_pos(&[3, 0, 0]), None);
        assert_eq!(l.herm_pos(&[6, 0, 0]), None);
        assert_eq!(l.herm_pos(&[-1, 0, 0]), None);
    }

    #[test]
    fn graded_prefix_property() {
        let a = Layout::new(2, 1, 3);
        let b = Layout::new(2, 1, 6);
        assert_eq!(&b.hermite()[..a.n_herm()], a.hermite());
    }
}
