use rand::RngExt;

use super::Factor;
use crate::rng::stream;

/// Brute-force first-order indices: for each input, the variance over
/// `n_outer` fixed values of that input of the mean output over `n_inner`
/// draws of the others, divided by the variance of all outputs.
///
/// Returns `None` when the output has no variance.
pub fn sobol_double_loop_oracle(
    model: &dyn Fn(&[f64]) -> f64,
    factors: &[Factor],
    n_outer: usize,
    n_inner: usize,
    seed: u64,
) -> Option<Vec<f64>> {
    let k = factors.len();
    let mut rng = stream(seed, 0);
    let mut all = Vec::with_capacity(k * n_outer * n_inner);
    let mut indices = Vec::with_capacity(k);
    let mut x = vec![0.0; k];
    for i in 0..k {
        let mut means = Vec::with_capacity(n_outer);
        for _ in 0..n_outer {
            x[i] = factors[i].quantile(rng.random::<f64>());
            let mut sum = 0.0;
            for _ in 0..n_inner {
                for (m, f) in factors.iter().enumerate() {
                    if m != i {
                        x[m] = f.quantile(rng.random::<f64>());
                    }
                }
                let y = model(&x);
                sum += y;
                all.push(y);
            }
            means.push(sum / n_inner as f64);
        }
        indices.push(variance(&means));
    }
    let total = variance(&all);
    (total > 0.0).then(|| indices.into_iter().map(|v| v / total).collect())
}

fn variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n
}
