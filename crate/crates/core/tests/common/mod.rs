#![allow(dead_code)]

/// Log determinant and solve of a dense positive definite system by Gaussian
/// elimination with partial pivoting.
pub fn logdet_solve(a: &[Vec<f64>], b: &[f64]) -> (f64, Vec<f64>) {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(r, &v)| {
            let mut r = r.clone();
            r.push(v);
            r
        })
        .collect();
    let mut logdet = 0.0;
    for c in 0..n {
        let piv = (c..n).max_by(|&i, &j| m[i][c].abs().partial_cmp(&m[j][c].abs()).unwrap()).unwrap();
        m.swap(c, piv);
        let d = m[c][c];
        logdet += d.abs().ln();
        for r in c + 1..n {
            let f = m[r][c] / d;
            for k in c..=n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| m[r][k] * x[k]).sum();
        x[r] = (m[r][n] - s) / m[r][r];
    }
    (logdet, x)
}

/// Log density of `N(mean, cov)` at `x`.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov: &[Vec<f64>]) -> f64 {
    let d: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let (logdet, sol) = logdet_solve(cov, &d);
    let q: f64 = d.iter().zip(&sol).map(|(a, b)| a * b).sum();
    -0.5 * (x.len() as f64 * (2.0 * std::f64::consts::PI).ln() + logdet + q)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Mean absolute correlation after greedily matching estimated rows to
/// planted rows by largest absolute correlation.
pub fn aligned_mean_abs_correlation(est: &[Vec<f64>], truth: &[Vec<f64>]) -> f64 {
    let mut pairs = Vec::new();
    for (i, e) in est.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            pairs.push((pearson(e, t).abs(), i, j));
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut used_e = vec![false; est.len()];
    let mut used_t = vec![false; truth.len()];
    let mut total = 0.0;
    for (c, i, j) in pairs {
        if !used_e[i] && !used_t[j] {
            used_e[i] = true;
            used_t[j] = true;
            total += c;
        }
    }
    total / truth.len() as f64
}
