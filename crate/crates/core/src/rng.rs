//! Seeded pseudo-random draws for the Monte Carlo oracles.
//!
//! One splitmix64 generator drives everything; samplers take the seed
//! explicitly so repeated calls with the same seed reproduce bit-identical
//! streams without any global state.

/// splitmix64 generator. Small state, passes practical statistical tests,
/// and is trivially reproducible across platforms.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in the open interval (0, 1); never returns 0 or 1, so logs
    /// and Box–Muller are safe.
    pub fn next_open01(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal via Box–Muller (cosine branch only).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = self.next_open01();
        let u2 = self.next_open01();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    /// Exponential with rate 1.
    pub fn next_exp(&mut self) -> f64 {
        -self.next_open01().ln()
    }

    /// Gamma(shape a, rate 1) via Marsaglia–Tsang, with the u^(1/a) boost
    /// for a < 1.
    pub fn next_gamma(&mut self, a: f64) -> f64 {
        if a < 1.0 {
            let u = self.next_open01();
            return self.next_gamma(a + 1.0) * u.powf(1.0 / a);
        }
        let d = a - 1.0 / 3.0;
        let c = 1.0 / (9.0 * d).sqrt();
        loop {
            let x = self.next_normal();
            let t = 1.0 + c * x;
            if t <= 0.0 {
                continue;
            }
            let v = t * t * t;
            let u = self.next_open01();
            if u.ln() < 0.5 * x * x + d - d * v + d * v.ln() {
                return d * v;
            }
        }
    }

    /// Poisson(lambda) by Knuth's product-of-uniforms method. Adequate for
    /// the moderate rates used here.
    pub fn next_poisson(&mut self, lambda: f64) -> u64 {
        let l = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= self.next_open01();
            if p <= l {
                return k;
            }
            k += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_stream() {
        let mut a = SplitMix64::new(42);
        let mut b = SplitMix64::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn open01_strictly_interior() {
        let mut rng = SplitMix64::new(7);
        for _ in 0..10_000 {
            let u = rng.next_open01();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn gamma_mean_roughly_shape() {
        let mut rng = SplitMix64::new(11);
        let n = 200_000;
        let mean = (0..n).map(|_| rng.next_gamma(3.0)).sum::<f64>() / n as f64;
        assert!((mean - 3.0).abs() < 0.03, "gamma mean {mean}");
    }

    #[test]
    fn poisson_mean_roughly_lambda() {
        let mut rng = SplitMix64::new(13);
        let n = 200_000;
        let mean = (0..n).map(|_| rng.next_poisson(2.0) as f64).sum::<f64>() / n as f64;
        assert!((mean - 2.0).abs() < 0.02, "poisson mean {mean}");
    }
}
