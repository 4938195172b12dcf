//! Finite-difference weights on arbitrary node sets.

/// Fornberg's recursion: `w[k][j]` is the weight of `f(xs[j])` in the
/// approximation of the k-th derivative at `x0`, for `k = 0..=m`.
pub fn weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let npts = xs.len();
    let mut c = vec![vec![0.0; npts]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..npts {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// First and second derivatives of sampled data at node `i`, using the five
/// nearest nodes (shifted inward at the ends).
pub fn derivs5(xs: &[f64], ys: &[f64], i: usize) -> (f64, f64) {
    let n = xs.len();
    assert!(n >= 5, "need five samples");
    let start = i.saturating_sub(2).min(n - 5);
    let w = weights(xs[i], &xs[start..start + 5], 2);
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    for j in 0..5 {
        d1 += w[1][j] * ys[start + j];
        d2 += w[2][j] * ys[start + j];
    }
    (d1, d2)
}
