//! Deterministic seeded RNG, distribution sampling, and special functions.
//!
//! Everything downstream (data generation, weight init, noising, permutation
//! tests) draws through [`Rng`], so a run is a pure function of its seed. Streams
//! for distinct sub-seeds are derived with [`Rng::split`]; the splitting scheme is
//! position-independent, so a parent can hand out children before or after drawing
//! from its own stream.

use ndarray::Array2;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-major dense matrix of 64-bit floats.
pub type Matrix = Array2<f64>;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function. Used for seed expansion and stream derivation.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seeded, splittable random stream backed by ChaCha8.
///
/// Splitting scheme: `split(label)` derives a child seed as
/// `splitmix64(seed ^ splitmix64(label))` and builds a fresh generator from it.
/// The derivation uses only the original seed, never the stream position, so the
/// same `(seed, label)` always names the same stream.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut key = [0u8; 32];
        let mut s = seed;
        for chunk in key.chunks_exact_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        Rng {
            seed,
            inner: ChaCha8Rng::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Independent child stream for `label`. Position-independent.
    pub fn split(&self, label: u64) -> Rng {
        Rng::new(self.derive_seed(label))
    }

    /// The seed `split(label)` would use, without constructing the generator.
    pub fn derive_seed(&self, label: u64) -> u64 {
        splitmix64(self.seed ^ splitmix64(label))
    }

    /// Uniform draw in `[0, 1)` with 53 random mantissa bits.
    pub fn uniform_01(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + self.uniform_01() * (hi - lo)
    }

    /// Standard normal draw.
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// `n` i.i.d. standard normal draws.
    pub fn standard_normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.standard_normal()).collect()
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = (self.inner.next_u64() % (i as u64 + 1)) as usize;
            xs.swap(i, j);
        }
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }
    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

/// `n` i.i.d. draws from `N(mean, variance)`.
///
/// Zero variance degenerates to the constant `mean`.
pub fn sample_gaussian(rng: &mut Rng, mean: f64, variance: f64, n: usize) -> Result<Vec<f64>> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::Parameter(format!(
            "gaussian variance must be >= 0, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(vec![mean; n]);
    }
    let sd = variance.sqrt();
    Ok((0..n).map(|_| mean + sd * rng.standard_normal()).collect())
}

/// `n` i.i.d. draws uniform on `[-c, c)` with `c = sqrt(3 * variance)`, so the
/// distribution has mean 0 and the requested variance.
pub fn sample_uniform_centered(rng: &mut Rng, variance: f64, n: usize) -> Result<Vec<f64>> {
    if !variance.is_finite() || variance < 0.0 {
        return Err(Error::Parameter(format!(
            "uniform variance must be >= 0, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let c = (3.0 * variance).sqrt();
    Ok((0..n).map(|_| rng.uniform_in(-c, c)).collect())
}

/// Noise families used throughout the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseFamily {
    Gaussian,
    Uniform,
}

impl NoiseFamily {
    /// Mean-zero draws with the given variance from this family.
    pub fn sample(&self, rng: &mut Rng, variance: f64, n: usize) -> Result<Vec<f64>> {
        match self {
            NoiseFamily::Gaussian => sample_gaussian(rng, 0.0, variance, n),
            NoiseFamily::Uniform => sample_uniform_centered(rng, variance, n),
        }
    }
}

impl std::fmt::Display for NoiseFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseFamily::Gaussian => write!(f, "gaussian"),
            NoiseFamily::Uniform => write!(f, "uniform"),
        }
    }
}

// Bernoulli-number coefficients of the asymptotic series
// psi(x) ~ ln x - 1/(2x) - sum B_{2n} / (2n x^{2n}).
const DIGAMMA_SERIES: [f64; 5] = [
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
];

/// Digamma function `psi(x)` for `x > 0`, accurate to about 1e-12.
///
/// Uses the recurrence `psi(x) = psi(x+1) - 1/x` to shift the argument above 10,
/// then the asymptotic series.
pub fn digamma(x: f64) -> Result<f64> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!("digamma requires x > 0, got {x}")));
    }
    let mut result = 0.0;
    let mut x = x;
    while x < 10.0 {
        result -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut term = inv2;
    let mut tail = 0.0;
    for c in DIGAMMA_SERIES {
        tail += c * term;
        term *= inv2;
    }
    Ok(result + x.ln() - 0.5 * inv + tail)
}

/// Matrix product, dimension-checked.
pub fn mat_mul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::Shape(format!(
            "mat_mul: ({}x{}) * ({}x{})",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a.dot(b))
}

/// Sample mean.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divides by `n`). All standardisation and the variance
/// baseline use this definition.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Pearson correlation.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    let (mx, my) = (mean(xs), mean(ys));
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mx) * (y - my);
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
    }
    cov / (vx * vy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seed_identical_stream() {
        let mut a = Rng::new(7);
        let mut b = Rng::new(7);
        let va = sample_gaussian(&mut a, 0.0, 1.0, 64).unwrap();
        let vb = sample_gaussian(&mut b, 0.0, 1.0, 64).unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn split_is_position_independent() {
        let mut parent = Rng::new(11);
        let before = parent.split(3);
        let _ = parent.standard_normal_vec(100);
        let after = parent.split(3);
        let mut x = before;
        let mut y = after;
        assert_eq!(x.next_u64(), y.next_u64());
        // distinct labels give distinct streams
        let mut z = parent.split(4);
        let mut w = parent.split(5);
        assert_ne!(z.next_u64(), w.next_u64());
    }

    #[test]
    fn gaussian_zero_variance_is_constant() {
        let mut rng = Rng::new(1);
        assert_eq!(
            sample_gaussian(&mut rng, 0.0, 0.0, 5).unwrap(),
            vec![0.0; 5]
        );
        assert_eq!(
            sample_gaussian(&mut rng, 2.5, 0.0, 3).unwrap(),
            vec![2.5; 3]
        );
    }

    #[test]
    fn gaussian_sample_variance_matches() {
        let mut rng = Rng::new(42);
        let v = sample_gaussian(&mut rng, 0.0, 1.0, 100_000).unwrap();
        let var = variance(&v);
        assert!((0.97..=1.03).contains(&var), "sample variance {var}");
        assert!(mean(&v).abs() < 0.02);
    }

    #[test]
    fn gaussian_rejects_negative_variance() {
        let mut rng = Rng::new(1);
        assert!(matches!(
            sample_gaussian(&mut rng, 0.0, -1.0, 4),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn uniform_centered_variance_and_support() {
        let mut rng = Rng::new(9);
        let v = sample_uniform_centered(&mut rng, 1.0, 100_000).unwrap();
        let var = variance(&v);
        assert!((0.97..=1.03).contains(&var), "sample variance {var}");

        // variance 1/3 gives support [-1, 1)
        let w = sample_uniform_centered(&mut rng, 1.0 / 3.0, 100_000).unwrap();
        assert!(w.iter().all(|x| (-1.0..1.0).contains(x)));
        let max = w.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max > 0.999, "support should approach +1, max {max}");

        assert_eq!(
            sample_uniform_centered(&mut rng, 0.0, 3).unwrap(),
            vec![0.0; 3]
        );
        assert!(sample_uniform_centered(&mut rng, -0.5, 3).is_err());
    }

    #[test]
    fn digamma_known_values() {
        // Reference values from the series definition, 30-digit arithmetic.
        assert!((digamma(1.0).unwrap() - (-0.5772156649015329)).abs() < 1e-12);
        assert!((digamma(2.0).unwrap() - 0.4227843350984671).abs() < 1e-12);
        assert!((digamma(10.0).unwrap() - 2.251752589066721).abs() < 1e-12);
        assert!((digamma(0.5).unwrap() - (-1.9635100260214235)).abs() < 1e-12);
    }

    #[test]
    fn digamma_recurrence() {
        for &x in &[0.5, 1.0, 2.0, 5.0, 10.0] {
            let lhs = digamma(x + 1.0).unwrap() - digamma(x).unwrap();
            assert!((lhs - 1.0 / x).abs() < 1e-12, "recurrence failed at {x}");
        }
    }

    #[test]
    fn digamma_rejects_nonpositive() {
        assert!(matches!(digamma(0.0), Err(Error::Domain(_))));
        assert!(matches!(digamma(-3.0), Err(Error::Domain(_))));
    }

    #[test]
    fn mat_mul_matches_naive_triple_loop() {
        let mut rng = Rng::new(123);
        let a = Matrix::from_shape_fn((8, 8), |_| rng.standard_normal());
        let b = Matrix::from_shape_fn((8, 8), |_| rng.standard_normal());
        let c = mat_mul(&a, &b).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let mut s = 0.0;
                for k in 0..8 {
                    s += a[[i, k]] * b[[k, j]];
                }
                assert!((c[[i, j]] - s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mat_mul_rejects_mismatch() {
        let a = Matrix::zeros((2, 3));
        let b = Matrix::zeros((2, 3));
        assert!(mat_mul(&a, &b).is_err());
    }
}
