//! Counter-based deterministic random numbers.
//!
//! Every draw is a pure function of `(key, stream, counter)`:
//!
//! ```text
//! key'   = splitmix64(key ^ splitmix64(stream ^ STREAM_SALT))
//! value  = splitmix64(key' ^ counter.wrapping_mul(GOLDEN))  then splitmix64 again
//! ```
//!
//! `splitmix64` is the standard SplitMix64 finalizer (Steele, Lea & Flood).
//! A generator is seeded with `CounterRng::new(seed)`; `split(stream)` derives
//! an independent child key, so a matrix cell `(model, example)` can be drawn
//! as `rng.split(model).uniform(example)` on any thread in any order and the
//! result never depends on scheduling.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;
const STREAM_SALT: u64 = 0xD1B5_4A32_D192_ED03;

#[inline]
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(GOLDEN);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix64(seed),
        }
    }

    /// Child generator for an independent stream.
    #[inline]
    pub fn split(&self, stream: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(stream ^ STREAM_SALT)),
        }
    }

    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        splitmix64(splitmix64(self.key ^ counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box-Muller on counters `2c` and `2c + 1`.
    #[inline]
    pub fn normal(&self, counter: u64) -> f64 {
        let u1 = 1.0 - self.uniform(counter.wrapping_mul(2));
        let u2 = self.uniform(counter.wrapping_mul(2).wrapping_add(1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    #[inline]
    pub fn bernoulli(&self, counter: u64, p: f64) -> bool {
        self.uniform(counter) < p
    }

    /// Sequential cursor over this generator's counters, starting at 0.
    pub fn stream(&self) -> Stream {
        Stream {
            rng: *self,
            counter: 0,
        }
    }
}

/// Sequential view over a [`CounterRng`]; each call consumes one counter.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: CounterRng,
    counter: u64,
}

impl Stream {
    pub fn next_u64(&mut self) -> u64 {
        let v = self.rng.u64_at(self.counter);
        self.counter += 1;
        v
    }

    pub fn uniform(&mut self) -> f64 {
        let v = self.rng.uniform(self.counter);
        self.counter += 1;
        v
    }

    pub fn normal(&mut self) -> f64 {
        let v = self.rng.normal(self.counter);
        self.counter += 1;
        v
    }

    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splitmix_reference_values() {
        // First outputs of the reference SplitMix64 sequence seeded with 0.
        let mut state = 0u64;
        let mut next = || {
            let out = splitmix64(state);
            state = state.wrapping_add(GOLDEN);
            out
        };
        assert_eq!(next(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(next(), 0x6E78_9E6A_A1B9_65F4);
    }

    #[test]
    fn draws_are_order_independent() {
        let rng = CounterRng::new(7).split(3);
        let forward: Vec<u64> = (0..100).map(|i| rng.u64_at(i)).collect();
        let backward: Vec<u64> = (0..100).rev().map(|i| rng.u64_at(i)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }

    #[test]
    fn streams_differ() {
        let rng = CounterRng::new(1);
        assert_ne!(rng.split(0).u64_at(0), rng.split(1).u64_at(0));
        assert_ne!(CounterRng::new(1).u64_at(0), CounterRng::new(2).u64_at(0));
    }

    #[test]
    fn uniform_and_normal_moments() {
        let rng = CounterRng::new(42);
        let n = 200_000;
        let mean_u: f64 = (0..n).map(|i| rng.uniform(i)).sum::<f64>() / n as f64;
        assert!((mean_u - 0.5).abs() < 0.005);
        let zs: Vec<f64> = (0..n).map(|i| rng.normal(i)).collect();
        let m = zs.iter().sum::<f64>() / n as f64;
        let v = zs.iter().map(|z| (z - m) * (z - m)).sum::<f64>() / n as f64;
        assert!(m.abs() < 0.01, "{m}");
        assert!((v - 1.0).abs() < 0.02, "{v}");
    }
}
