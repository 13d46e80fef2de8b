/// P_l(u) and P_l′(u) for l = 0..=l_max by upward recurrence.
pub fn legendre_with_derivatives(u: f64, l_max: usize, p: &mut Vec<f64>, dp: &mut Vec<f64>) {
    p.clear();
    dp.clear();
    p.push(1.0);
    dp.push(0.0);
    if l_max == 0 {
        return;
    }
    p.push(u);
    dp.push(1.0);
    for l in 1..l_max {
        let lf = l as f64;
        p.push(((2.0 * lf + 1.0) * u * p[l] - lf * p[l - 1]) / (lf + 1.0));
        dp.push(dp[l - 1] + (2.0 * lf + 1.0) * p[l]);
    }
}

/// Convenience wrapper returning fresh vectors.
pub fn legendre_table(u: f64, l_max: usize) -> (Vec<f64>, Vec<f64>) {
    let mut p = Vec::with_capacity(l_max + 1);
    let mut dp = Vec::with_capacity(l_max + 1);
    legendre_with_derivatives(u, l_max, &mut p, &mut dp);
    (p, dp)
}
