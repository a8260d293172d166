//! Analytic test functions with known Sobol indices.

pub fn ishigami(x: &[f64], a: f64, b: f64) -> f64 {
    x[0].sin() + a * x[1].sin().powi(2) + b * x[2].powi(4) * x[0].sin()
}

pub fn additive(x: &[f64]) -> f64 {
    x.iter().sum()
}

pub fn product(x: &[f64]) -> f64 {
    x.iter().product()
}
