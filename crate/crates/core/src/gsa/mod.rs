//! First-order Sobol indices by RBD-FAST.
//!
//! A single search curve `s_j`, equally spaced in `(−π, π]`, is shared by all
//! inputs; input `i` sees it through its own random permutation and through
//! the triangle wave `u = ½ + arcsin(sin s)/π`, which covers `[0, 1]` twice
//! per period. The power of the output at the first `M` harmonics of `s`,
//! relative to its variance, estimates the index of the input. Since the
//! Fourier coefficients are taken at the actual angles of the samples, any
//! subset of the design (feasible samples only, or a prefix for a
//! convergence check) is estimated the same way.

pub mod functions;
mod oracle;
mod pi;

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::rng::stream;
use crate::uncertainty::{DiscreteUniform, Uniform};

pub use oracle::sobol_double_loop_oracle;
pub use pi::{checkpoints, pi_sensitivity_run, GsaOptions, SensitivityResult};

/// Variances below this, relative to the squared mean, count as zero.
pub const ZERO_VARIANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GsaError {
    #[error("harmonics must be at least 1")]
    NoHarmonics,
    #[error("{got} samples are too few for {harmonics} harmonics (need at least {need})")]
    TooFewSamples { got: usize, need: usize, harmonics: usize },
    #[error("model returned {got} outputs, expected {expected}")]
    OutputArity { got: usize, expected: usize },
}

/// Distribution of one model input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    Continuous(Uniform),
    Discrete(DiscreteUniform),
}

impl Factor {
    pub fn uniform(lo: f64, hi: f64) -> Factor {
        Factor::Continuous(Uniform { lo, hi })
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Factor::Continuous(d) => d.quantile(u),
            Factor::Discrete(d) => d.quantile(u) as f64,
        }
    }
}

pub fn min_samples(harmonics: usize) -> usize {
    4 * harmonics + 2
}

pub fn check_design(n: usize, harmonics: usize) -> Result<(), GsaError> {
    if harmonics == 0 {
        return Err(GsaError::NoHarmonics);
    }
    if n < min_samples(harmonics) {
        return Err(GsaError::TooFewSamples { got: n, need: min_samples(harmonics), harmonics });
    }
    Ok(())
}

/// The sampling plan: one permutation of the search curve per input.
#[derive(Debug, Clone)]
pub struct RbdDesign {
    n: usize,
    perms: Vec<Vec<u32>>,
}

impl RbdDesign {
    pub fn new(inputs: usize, n: usize, seed: u64) -> RbdDesign {
        let perms = (0..inputs)
            .map(|i| {
                let mut p: Vec<u32> = (0..n as u32).collect();
                p.shuffle(&mut stream(seed, i as u64));
                p
            })
            .collect();
        RbdDesign { n, perms }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn inputs(&self) -> usize {
        self.perms.len()
    }

    /// Angle of sample `j` on the search curve of input `i`.
    pub fn angle(&self, i: usize, j: usize) -> f64 {
        let k = self.perms[i][j] as f64;
        -std::f64::consts::PI + 2.0 * std::f64::consts::PI * (k + 1.0) / self.n as f64
    }

    /// Quantile level of input `i` in sample `j`.
    pub fn unit(&self, i: usize, j: usize) -> f64 {
        (0.5 + self.angle(i, j).sin().asin() / std::f64::consts::PI).clamp(0.0, 1.0)
    }
}

/// Index of every input for one output, from the samples listed in `rows`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstOrder {
    /// Bias-corrected estimates, not clipped.
    pub indices: Vec<f64>,
    /// Population variance of the output over the rows.
    pub variance: f64,
    pub zero_variance: bool,
}

impl FirstOrder {
    pub fn clipped(&self) -> Vec<f64> {
        self.indices.iter().map(|s| s.clamp(0.0, 1.0)).collect()
    }
}

/// Estimates from `(sample index, output)` pairs.
pub fn first_order(design: &RbdDesign, rows: &[(usize, f64)], harmonics: usize) -> Result<FirstOrder, GsaError> {
    check_design(rows.len(), harmonics)?;
    let n = rows.len() as f64;
    let mean = rows.iter().map(|r| r.1).sum::<f64>() / n;
    let variance = rows.iter().map(|r| (r.1 - mean).powi(2)).sum::<f64>() / n;
    if variance == 0.0 || variance <= ZERO_VARIANCE * mean * mean {
        return Ok(FirstOrder { indices: vec![0.0; design.inputs()], variance, zero_variance: true });
    }
    let lambda = 2.0 * harmonics as f64 / n;
    let indices = (0..design.inputs())
        .map(|i| {
            let mut power = 0.0;
            for h in 1..=harmonics {
                let (mut a, mut b) = (0.0, 0.0);
                for &(j, y) in rows {
                    let (sin, cos) = (h as f64 * design.angle(i, j)).sin_cos();
                    a += (y - mean) * cos;
                    b += (y - mean) * sin;
                }
                let (a, b) = (2.0 * a / n, 2.0 * b / n);
                power += (a * a + b * b) / 2.0;
            }
            let s = power / variance;
            (s - lambda) / (1.0 - lambda)
        })
        .collect();
    Ok(FirstOrder { indices, variance, zero_variance: false })
}

/// Runs `model` once per sample of the design and estimates the index of
/// every input for each of its `outputs` outputs.
pub fn rbd_fast_indices(
    model: &dyn Fn(&[f64]) -> Vec<f64>,
    factors: &[Factor],
    outputs: usize,
    n: usize,
    seed: u64,
    harmonics: usize,
) -> Result<Vec<FirstOrder>, GsaError> {
    check_design(n, harmonics)?;
    let design = RbdDesign::new(factors.len(), n, seed);
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::with_capacity(n); outputs];
    let mut x = vec![0.0; factors.len()];
    for j in 0..n {
        for (i, f) in factors.iter().enumerate() {
            x[i] = f.quantile(design.unit(i, j));
        }
        let y = model(&x);
        if y.len() != outputs {
            return Err(GsaError::OutputArity { got: y.len(), expected: outputs });
        }
        for (col, v) in columns.iter_mut().zip(y) {
            col.push((j, v));
        }
    }
    columns.iter().map(|rows| first_order(&design, rows, harmonics)).collect()
}

#[cfg(test)]
mod tests {
    use super::functions::*;
    use super::*;

    fn pi_box(k: usize) -> Vec<Factor> {
        vec![Factor::uniform(-std::f64::consts::PI, std::f64::consts::PI); k]
    }

    #[test]
    fn design_covers_the_unit_interval_evenly() {
        let d = RbdDesign::new(2, 400, 3);
        let mut u: Vec<f64> = (0..400).map(|j| d.unit(1, j)).collect();
        u.sort_by(f64::total_cmp);
        assert!(u[0] >= 0.0 && u[399] <= 1.0);
        // the triangle wave visits each level twice
        assert!((u[200] - 0.5).abs() < 0.02);
    }

    #[test]
    fn single_active_input() {
        let r = rbd_fast_indices(&|x| vec![x[0]], &pi_box(3), 1, 1000, 1, 6).unwrap();
        let s = &r[0].indices;
        assert!((s[0] - 1.0).abs() < 0.05, "{s:?}");
        assert!(s[1].abs() < 0.05 && s[2].abs() < 0.05, "{s:?}");
    }

    #[test]
    fn constant_model_flags_zero_variance() {
        let r = rbd_fast_indices(&|_| vec![4.2], &pi_box(3), 1, 100, 1, 6).unwrap();
        assert!(r[0].zero_variance);
        assert_eq!(r[0].indices, vec![0.0; 3]);
    }

    #[test]
    fn output_affine_transform_leaves_indices_unchanged() {
        let f = |x: &[f64]| vec![ishigami(x, 7.0, 0.1), -3.0 * ishigami(x, 7.0, 0.1) + 11.0];
        let r = rbd_fast_indices(&f, &pi_box(3), 2, 500, 5, 6).unwrap();
        for (a, b) in r[0].indices.iter().zip(&r[1].indices) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(check_design(100, 0), Err(GsaError::NoHarmonics));
        assert!(matches!(check_design(25, 6), Err(GsaError::TooFewSamples { need: 26, .. })));
        assert!(check_design(26, 6).is_ok());
    }
}
