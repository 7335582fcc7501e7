//! Brute-force reference computations shared by unit, integration and
//! acceptance tests. Nothing in here calls into the library.

#![allow(dead_code)]

/// Advances `v` to the next lexicographic permutation of its multiset.
pub fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Calls `f` once per labeled split of `N = Σ sizes` positions into groups.
pub fn for_each_split(sizes: &[usize], mut f: impl FnMut(&[usize])) -> u64 {
    let mut labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &n)| std::iter::repeat_n(g, n)).collect();
    let mut count = 0;
    loop {
        f(&labels);
        count += 1;
        if !next_permutation(&mut labels) {
            return count;
        }
    }
}

/// Σ_{x,y} I(x<y) + ½ I(x=y), by double loop.
pub fn mw_direct(x: &[f64], y: &[f64]) -> f64 {
    let mut w = 0.0;
    for &a in x {
        for &b in y {
            if a < b {
                w += 1.0;
            } else if a == b {
                w += 0.5;
            }
        }
    }
    w
}

pub fn split_groups(pooled: &[f64], labels: &[usize], k: usize) -> Vec<Vec<f64>> {
    let mut g = vec![Vec::new(); k];
    for (&v, &l) in pooled.iter().zip(labels) {
        g[l].push(v);
    }
    g
}

/// Exact mean vector and covariance matrix of a half-integer-valued vector
/// statistic over all labeled splits.
pub struct SplitMoments {
    pub splits: u64,
    pub mean: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

pub fn split_moments(pooled: &[f64], sizes: &[usize], stat: impl Fn(&[Vec<f64>]) -> Vec<f64>) -> SplitMoments {
    let mut s1: Vec<i128> = Vec::new();
    let mut s2: Vec<Vec<i128>> = Vec::new();
    let splits = for_each_split(sizes, |labels| {
        let groups = split_groups(pooled, labels, sizes.len());
        let v: Vec<i128> = stat(&groups).iter().map(|x| (2.0 * x).round() as i128).collect();
        if s1.is_empty() {
            s1 = vec![0; v.len()];
            s2 = vec![vec![0; v.len()]; v.len()];
        }
        for i in 0..v.len() {
            s1[i] += v[i];
            for j in 0..v.len() {
                s2[i][j] += v[i] * v[j];
            }
        }
    });
    let m = splits as i128;
    let mean = s1.iter().map(|&s| s as f64 / m as f64 / 2.0).collect();
    let cov = (0..s1.len())
        .map(|i| {
            (0..s1.len())
                .map(|j| {
                    let num = s2[i][j] * m - s1[i] * s1[j];
                    num as f64 / (m * m) as f64 / 4.0
                })
                .collect()
        })
        .collect();
    SplitMoments { splits, mean, cov }
}

/// Control-versus-treatment Mann–Whitney statistics (group 0 is control).
pub fn many_to_one(groups: &[Vec<f64>]) -> Vec<f64> {
    groups[1..].iter().map(|t| mw_direct(&groups[0], t)).collect()
}

/// W*_{a,b} for all a < b, lexicographic.
pub fn all_pairs(groups: &[Vec<f64>]) -> Vec<f64> {
    let mut out = Vec::new();
    for a in 0..groups.len() {
        for b in a + 1..groups.len() {
            out.push(mw_direct(&groups[a], &groups[b]));
        }
    }
    out
}

/// Standard midranks of a tie pattern, in ascending order.
pub fn pooled_midranks(counts: &[u64]) -> Vec<f64> {
    let mut out = Vec::new();
    let mut below = 0u64;
    for &d in counts {
        let r = below as f64 + (d as f64 + 1.0) / 2.0;
        out.extend(std::iter::repeat_n(r, d as usize));
        below += d;
    }
    out
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Steel (1959): IQ of 24 girls by birth condition; control first.
pub const STEEL_IQ: [[f64; 6]; 4] = [
    [103.0, 111.0, 136.0, 106.0, 122.0, 114.0],
    [119.0, 100.0, 97.0, 89.0, 112.0, 86.0],
    [89.0, 132.0, 86.0, 114.0, 114.0, 125.0],
    [92.0, 114.0, 86.0, 119.0, 131.0, 94.0],
];
