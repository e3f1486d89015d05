//! Clutter and target distributions, decibel conversions and reproducible
//! random streams.
//!
//! Clutter intensity is exponential with rate `λ` (mean `1/λ`). A Swerling I
//! target with signal-to-clutter ratio `S` turns the cell under test into an
//! exponential with rate `λ/(1+S)`.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponential clutter intensity model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClutterModel {
    rate: f64,
}

impl ClutterModel {
    pub fn new(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::domain(format!(
                "clutter rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Mean intensity `1/λ`.
    pub fn mean(&self) -> f64 {
        1.0 / self.rate
    }

    /// Clutter power, measured as the mean square `2/λ²`.
    pub fn power(&self) -> f64 {
        2.0 / (self.rate * self.rate)
    }
}

impl Default for ClutterModel {
    fn default() -> Self {
        Self { rate: 1.0 }
    }
}

/// Signal-to-clutter ratio of the target in the cell under test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetContext {
    scr_linear: f64,
}

impl TargetContext {
    pub fn new(scr_linear: f64) -> Result<Self> {
        if !(scr_linear.is_finite() && scr_linear >= 0.0) {
            return Err(Error::domain(format!(
                "SCR must be nonnegative and finite, got {scr_linear}"
            )));
        }
        Ok(Self { scr_linear })
    }

    pub fn from_db(scr_db: f64) -> Result<Self> {
        if !scr_db.is_finite() {
            return Err(Error::domain(format!(
                "SCR in dB must be finite, got {scr_db}"
            )));
        }
        Self::new(db_to_linear(scr_db))
    }

    pub fn scr_linear(&self) -> f64 {
        self.scr_linear
    }
}

/// `P(Z ≤ t)` for an exponential variate with the given rate.
pub fn exp_cdf(t: f64, rate: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("exp_cdf needs t >= 0, got {t}")));
    }
    if !(rate > 0.0) {
        return Err(Error::domain(format!("exp_cdf needs rate > 0, got {rate}")));
    }
    Ok(-(-rate * t).exp_m1())
}

/// Power ratio in decibels to linear scale, `10^(x/10)`.
pub fn db_to_linear(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// Linear power ratio to decibels, `10·log10(x)`.
pub fn linear_to_db(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "linear_to_db needs a positive ratio, got {x}"
        )));
    }
    Ok(10.0 * x.log10())
}

/// Exponential rate of the cell under test when it holds a target.
pub fn target_rate(model: &ClutterModel, target: &TargetContext) -> f64 {
    model.rate / (1.0 + target.scr_linear)
}

/// Rate of clutter whose power has been raised by `x` dB.
pub fn boosted_rate(model: &ClutterModel, x_db: f64) -> Result<f64> {
    if !(x_db >= 0.0) || !x_db.is_finite() {
        return Err(Error::domain(format!(
            "power boost must be a nonnegative finite dB value, got {x_db}"
        )));
    }
    Ok(model.rate * 10f64.powf(-x_db / 10.0))
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn mix_from(mut h: u64, keys: &[u64]) -> u64 {
    for &k in keys {
        h = splitmix64(h ^ splitmix64(k.wrapping_add(GOLDEN_GAMMA)));
    }
    h
}

/// Order-sensitive 64-bit hash of a key sequence.
pub fn mix_keys(keys: &[u64]) -> u64 {
    mix_from(0, keys)
}

/// A named substream of a seeded generator.
///
/// The seed keys a ChaCha8 generator and `stream_id` selects its 64-bit
/// stream, so identical `(seed, stream_id)` pairs replay the same sequence on
/// every platform and distinct ids never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RandomStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RandomStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Derives a child stream keyed by `keys`. The seed is unchanged; only
    /// the stream id is remixed.
    pub fn substream(&self, keys: &[u64]) -> Self {
        Self {
            seed: self.seed,
            stream_id: mix_from(splitmix64(self.stream_id), keys),
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut inner = ChaCha8Rng::seed_from_u64(self.seed);
        inner.set_stream(self.stream_id);
        StreamRng { inner }
    }
}

/// Generator positioned at the start of a [`RandomStream`].
#[derive(Debug, Clone)]
pub struct StreamRng {
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on the open interval (0, 1) with 53 bits of resolution.
    pub fn uniform_open(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Unit-mean exponential via the inverse CDF. Multiply by a mean to get
    /// any other rate.
    #[inline]
    pub fn standard_exponential(&mut self) -> f64 {
        -self.uniform_open().ln()
    }

    pub fn exponential(&mut self, rate: f64) -> f64 {
        self.standard_exponential() / rate
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift, bias below 2^-32
    /// for the window sizes used here).
    pub fn below(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        (((self.inner.next_u64() >> 32) * n as u64) >> 32) as usize
    }
}

/// Draws `n` independent exponential variates with the model's rate.
pub fn sample_exponential(model: &ClutterModel, n: usize, stream: &RandomStream) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..n).map(|_| rng.exponential(model.rate)).collect()
}
