//! Test-only numerical oracles.

/// Ridders' extrapolation of central differences `(f(x+h) - f(x-h)) / 2h`
/// over a shrinking step sequence from `h0`. Returns the estimate and its
/// error bound.
pub fn ridders_from(f: &impl Fn(f64) -> f64, x: f64, h0: f64) -> (f64, f64) {
    const CON: f64 = 1.4;
    const CON2: f64 = CON * CON;
    const NTAB: usize = 12;
    let mut a = [[0.0f64; NTAB]; NTAB];
    let mut h = h0;
    a[0][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    let (mut best, mut err) = (a[0][0], f64::INFINITY);
    for i in 1..NTAB {
        h /= CON;
        a[0][i] = (f(x + h) - f(x - h)) / (2.0 * h);
        let mut fac = CON2;
        for j in 1..=i {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= CON2;
            let e = (a[j][i] - a[j - 1][i])
                .abs()
                .max((a[j][i] - a[j - 1][i - 1]).abs());
            if e <= err {
                err = e;
                best = a[j][i];
            }
        }
        if (a[i][i] - a[i - 1][i - 1]).abs() >= 2.0 * err {
            break;
        }
    }
    (best, err)
}

/// [`ridders_from`] over several starting steps, keeping the tightest bound.
pub fn ridders(f: impl Fn(f64) -> f64, x: f64) -> f64 {
    [1e-3, 1e-4, 1e-5, 1e-6]
        .iter()
        .map(|&h0| ridders_from(&f, x, h0))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
        .0
}
