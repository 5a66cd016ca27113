#![allow(dead_code)]

use candor_core::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const COEXIST_LAMBDA: f64 = 0.940489;
pub const COEXIST_KAPPA: f64 = 0.799432;

pub fn coexist_params() -> ModelParams {
    ModelParams::new(COEXIST_LAMBDA, 4.0, COEXIST_KAPPA).unwrap()
}

pub fn fast_news_params() -> ModelParams {
    ModelParams::new(9.0, 4.0, 3.0 / 13.0).unwrap()
}

/// erf by its Maclaurin series, accurate in f64 for |x| ≤ 3.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    while term.abs() > 1e-18 * sum.abs() {
        n += 1.0;
        term *= -x * x / n;
        sum += term / (2.0 * n + 1.0);
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

pub fn phi_series(x: f64) -> f64 {
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// h from the series oracle.
pub fn h_oracle(t: f64, sigma: f64) -> f64 {
    2.0 * phi_series(0.5 * sigma * (1.0 - t)) - 1.0
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let step = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let x = a + step * i as f64;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    s * step / 3.0
}

/// Random parameter sets drawn from a seeded stream.
pub struct ParamSampler {
    rng: ChaCha8Rng,
}

impl ParamSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn draw(&mut self) -> ModelParams {
        let lambda = self.rng.random_range(0.2..8.0);
        let sigma = self.rng.random_range(0.5..6.0);
        let kappa = self.rng.random_range(0.05..0.98);
        ModelParams::new(lambda, sigma, kappa).unwrap()
    }

    /// Draws until `accept` holds.
    pub fn draw_where<F: Fn(&ModelParams) -> bool>(&mut self, accept: F) -> ModelParams {
        loop {
            let p = self.draw();
            if accept(&p) {
                return p;
            }
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
