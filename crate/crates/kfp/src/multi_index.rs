//! Multi-index helpers shared by the polynomial and corrector code.

/// All multi-indices of total degree `deg` in `dim` variables, in
/// lexicographically descending order (`x1^deg` first).
pub fn of_degree(dim: usize, deg: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; dim];
    fill(dim, 0, deg, &mut cur, &mut out);
    out
}

fn fill(dim: usize, pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if dim == 0 {
        if left == 0 {
            out.push(Vec::new());
        }
        return;
    }
    if pos == dim - 1 {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for a in (0..=left).rev() {
        cur[pos] = a;
        fill(dim, pos + 1, left - a, cur, out);
    }
    cur[pos] = 0;
}

/// All multi-indices with total degree at most `deg`, graded by degree.
pub fn up_to_degree(dim: usize, deg: u32) -> Vec<Vec<u32>> {
    (0..=deg).flat_map(|k| of_degree(dim, k)).collect()
}

pub fn degree(alpha: &[u32]) -> u32 {
    alpha.iter().sum()
}

pub fn unit(dim: usize, j: usize) -> Vec<u32> {
    let mut e = vec![0; dim];
    e[j] = 1;
    e
}

/// `alpha - e_j`, or `None` when the j-th entry is zero.
pub fn lower(alpha: &[u32], j: usize) -> Option<Vec<u32>> {
    if alpha[j] == 0 {
        return None;
    }
    let mut b = alpha.to_vec();
    b[j] -= 1;
    Some(b)
}

pub fn raise(alpha: &[u32], j: usize) -> Vec<u32> {
    let mut b = alpha.to_vec();
    b[j] += 1;
    b
}

pub fn add(a: &[u32], b: &[u32]) -> Vec<u32> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Componentwise `b <= a`.
pub fn le(b: &[u32], a: &[u32]) -> bool {
    b.iter().zip(a).all(|(x, y)| x <= y)
}

pub fn factorial_f64(alpha: &[u32]) -> f64 {
    alpha
        .iter()
        .map(|&a| (1..=a).map(f64::from).product::<f64>())
        .product()
}

/// Multi-binomial `prod_i C(a_i, b_i)`.
pub fn binomial_f64(a: &[u32], b: &[u32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&n, &k)| {
            if k > n {
                0.0
            } else {
                (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
            }
        })
        .product()
}
