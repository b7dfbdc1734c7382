//! Deterministic random streams for the simulator.
//!
//! Reproducibility is part of the contract: a session seed must produce
//! byte-identical results on every platform and in every future version,
//! and each detector gate must own an independent substream so that gates
//! can be evaluated in any order (or skipped) without disturbing the rest.
//! Library generators do not promise cross-version stream stability, so the
//! generator is pinned here: SplitMix64, a tiny counter-based generator
//! with a full-avalanche finalizer (Steele, Lea & Flood's `splitmix64`).
//! Each stream starts from a hash of the seed and the stream index and then
//! walks its own counter.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// One output of the SplitMix64 finalizer: full avalanche, bijective.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic pseudo-random stream. Streams created from the same
/// `(seed, stream)` pair always yield the same sequence; streams with
/// different indices are statistically independent.
#[derive(Debug, Clone)]
pub struct StreamRng {
    state: u64,
}

impl StreamRng {
    /// Stream `stream` of the generator family keyed by `seed`.
    pub fn for_stream(seed: u64, stream: u64) -> Self {
        // hash seed and stream index together so that neighbouring seeds
        // or streams start from uncorrelated points
        let state = mix64(seed ^ mix64(stream.wrapping_mul(GOLDEN_GAMMA) ^ 0x5851_f42d_4c95_7f2d));
        StreamRng { state }
    }

    /// Single-stream convenience for non-gate uses (shuffles, hashing).
    pub fn new(seed: u64) -> Self {
        Self::for_stream(seed, 0)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 bits of precision.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Bernoulli draw.
    #[inline]
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Uniform integer in [0, n), unbiased (rejection sampling).
    #[inline]
    pub fn below(&mut self, n: u64) -> u64 {
        debug_assert!(n > 0);
        let threshold = n.wrapping_neg() % n;
        loop {
            let x = self.next_u64();
            if x >= threshold {
                return x % n;
            }
        }
    }

    /// Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible() {
        let mut a = StreamRng::for_stream(42, 7);
        let mut b = StreamRng::for_stream(42, 7);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn pinned_output_vector() {
        // frozen outputs: any change here breaks byte-reproducibility of
        // recorded sessions and must be treated as a breaking change
        let mut r = StreamRng::for_stream(1, 0);
        let got: Vec<u64> = (0..4).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            vec![
                7569205296197001538,
                11245944958559713972,
                1191411612372951236,
                16090728817087239227
            ]
        );
    }

    #[test]
    fn distinct_streams_and_seeds_diverge() {
        let mut a = StreamRng::for_stream(42, 0);
        let mut b = StreamRng::for_stream(42, 1);
        let mut c = StreamRng::for_stream(43, 0);
        let (va, vb, vc) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert_ne!(va, vb);
        assert_ne!(va, vc);
        assert_ne!(vb, vc);
    }

    #[test]
    fn f64_is_uniform_enough() {
        let mut r = StreamRng::new(7);
        let n = 100_000;
        let mut sum = 0.0;
        let mut buckets = [0u32; 10];
        for _ in 0..n {
            let x = r.next_f64();
            assert!((0.0..1.0).contains(&x));
            sum += x;
            buckets[(x * 10.0) as usize] += 1;
        }
        let mean = sum / n as f64;
        assert!((mean - 0.5).abs() < 0.005, "mean {mean}");
        for (i, b) in buckets.iter().enumerate() {
            let frac = *b as f64 / n as f64;
            assert!((frac - 0.1).abs() < 0.01, "bucket {i}: {frac}");
        }
    }

    #[test]
    fn bernoulli_tracks_probability() {
        let mut r = StreamRng::new(11);
        let n = 200_000u32;
        for p in [0.01, 0.5, 0.64] {
            let hits: u32 = (0..n).map(|_| r.next_bool(p) as u32).sum();
            let sigma = (p * (1.0 - p) / n as f64).sqrt();
            let frac = hits as f64 / n as f64;
            assert!((frac - p).abs() < 5.0 * sigma, "p={p} frac={frac}");
        }
    }

    #[test]
    fn below_is_in_range_and_covers() {
        let mut r = StreamRng::new(3);
        let mut seen = [0u32; 6];
        for _ in 0..60_000 {
            let x = r.below(6);
            seen[x as usize] += 1;
        }
        for (i, s) in seen.iter().enumerate() {
            assert!(*s > 9_000, "value {i} count {s}");
        }
        assert_eq!(r.below(1), 0);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut r = StreamRng::new(5);
        let mut v: Vec<u32> = (0..100).collect();
        r.shuffle(&mut v);
        let mut sorted = v.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..100).collect::<Vec<u32>>());
        assert_ne!(v, (0..100).collect::<Vec<u32>>());
    }
}
