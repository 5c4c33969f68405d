//! Counter-based pseudo-random generator.
//!
//! Every draw is a pure function of `(seed, counter)`, so sampling can be
//! partitioned across threads by index range and replayed exactly from the
//! recorded seed, independent of scheduling.

/// SplitMix64 increment.
const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Finalizer from SplitMix64 (Steele, Lea, Flood 2014).
#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stateless value of draw `counter` in the stream identified by `seed`.
#[inline]
pub fn value(seed: u64, counter: u64) -> u64 {
    mix(seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(GAMMA)))
}

/// Sequential view over one stream. `CounterRng::new(seed, start)` begins at
/// draw index `start`, so disjoint index ranges give disjoint subsequences of
/// the same stream.
#[derive(Clone, Copy, Debug)]
pub struct CounterRng {
    seed: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, start: u64) -> Self {
        CounterRng {
            seed,
            counter: start,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let v = value(self.seed, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in [lo, hi).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Standard normal via Box-Muller (two draws per call, one value kept).
    pub fn normal(&mut self) -> f64 {
        loop {
            let u = self.next_f64();
            if u > 0.0 {
                let v = self.next_f64();
                return (-2.0 * u.ln()).sqrt() * (2.0 * std::f64::consts::PI * v).cos();
            }
        }
    }

    /// Uniform point on the unit sphere S^{d-1}.
    pub fn unit_vector(&mut self, d: usize) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| self.normal()).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }
}
