//! Projections onto the feasible set of the constrained fit: non-decreasing
//! vectors, valid discretized CDF columns and the probability simplex.

/// Least-squares projection onto non-decreasing vectors (pool adjacent violators).
pub fn isotonic_project(v: &[f64]) -> Vec<f64> {
    // blocks of (sum, count); adjacent blocks are merged while their means decrease
    let mut sums: Vec<f64> = Vec::with_capacity(v.len());
    let mut counts: Vec<usize> = Vec::with_capacity(v.len());
    for &x in v {
        let mut s = x;
        let mut c = 1usize;
        while let (Some(&ps), Some(&pc)) = (sums.last(), counts.last()) {
            if ps / pc as f64 > s / c as f64 {
                s += ps;
                c += pc;
                sums.pop();
                counts.pop();
            } else {
                break;
            }
        }
        sums.push(s);
        counts.push(c);
    }
    let mut out = Vec::with_capacity(v.len());
    for (s, c) in sums.into_iter().zip(counts) {
        let mean = s / c as f64;
        out.extend(std::iter::repeat_n(mean, c));
    }
    out
}

/// Maps a column to a valid discretized CDF: isotonic fit, clamp to `[0,1]`,
/// then pin the last entry to 1.
///
/// The composite is not the exact Euclidean projection onto the intersection
/// of the three sets, but its output always lies in it.
pub fn valid_cdf_project(v: &[f64]) -> Vec<f64> {
    let mut out = isotonic_project(v);
    for x in &mut out {
        *x = x.clamp(0.0, 1.0);
    }
    if let Some(last) = out.last_mut() {
        *last = 1.0;
    }
    out
}

pub fn valid_cdf_project_in_place(v: &mut [f64]) {
    let p = valid_cdf_project(v);
    v.copy_from_slice(&p);
}

/// Euclidean projection onto `{w ≥ 0, Σ w = 1}` by sorting and thresholding.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cumsum += u;
        let t = (cumsum - 1.0) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    let mut w: Vec<f64> = v.iter().map(|&x| (x - theta).max(0.0)).collect();
    // absorb rounding so the weights sum to 1 to machine precision
    let s: f64 = w.iter().sum();
    if s > 0.0 {
        w.iter_mut().for_each(|x| *x /= s);
    }
    w
}
