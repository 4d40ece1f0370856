//! Deterministic, splittable uniform streams.
//!
//! A [`SeedStream`] is a pure function of `(master_seed, path)`: the i-th
//! uniform is obtained by hashing a counter, so path derivation is O(1) and
//! streams with distinct paths never overlap. Replicate-level parallelism
//! derives one stream per replicate and cannot change outputs.

use crate::error::{Error, Result};

/// Default master seed used by the CLI when `--seed` is not given.
pub const DEFAULT_MASTER_SEED: u64 = 20240;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer. Full-avalanche 64-bit mix.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A replayable stream of uniforms on the open interval (0,1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedStream {
    master_seed: u64,
    path: Vec<u64>,
    key: u64,
    cursor: u64,
}

/// An n-by-k block of uniforms, row i holding the k uniforms consumed by
/// observation i.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformBlock {
    values: Vec<f64>,
    n: usize,
    k: usize,
}

impl UniformBlock {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Uniform j of observation i.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.k + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl SeedStream {
    /// Derives a stream from a master seed and a path of purpose/replicate ids.
    pub fn derive(master_seed: u64, path: &[u64]) -> SeedStream {
        let mut key = mix64(master_seed ^ GOLDEN);
        for &elem in path {
            // hash chain over path elements; the multiplier keeps
            // (a,b) and (b,a) paths distinct
            key = mix64(key.wrapping_mul(0xd605_bbb5_8c8a_bc03) ^ mix64(elem ^ GOLDEN));
        }
        SeedStream {
            master_seed,
            path: path.to_vec(),
            key,
            cursor: 0,
        }
    }

    /// Derives a sub-stream by extending this stream's path. Independent of
    /// the parent's cursor position.
    pub fn child(&self, path: &[u64]) -> SeedStream {
        let mut full = self.path.clone();
        full.extend_from_slice(path);
        SeedStream::derive(self.master_seed, &full)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    pub fn cursor(&self) -> u64 {
        self.cursor
    }

    /// Restores the stream to position 0.
    pub fn rewind(&mut self) {
        self.cursor = 0;
    }

    /// The next uniform, strictly inside (0,1).
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        let bits = mix64(self.key ^ mix64(self.cursor.wrapping_mul(GOLDEN).wrapping_add(1)));
        self.cursor += 1;
        // 53 significant bits, offset by half an ulp so 0 is unreachable
        ((bits >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Materializes an n-by-k block of uniforms, advancing the cursor by n*k.
    pub fn uniform_block(&mut self, n: usize, k: usize) -> Result<UniformBlock> {
        if n == 0 || k == 0 {
            return Err(Error::invalid(format!(
                "uniform_block requires n >= 1 and k >= 1, got n={n}, k={k}"
            )));
        }
        let mut values = Vec::with_capacity(n * k);
        for _ in 0..n * k {
            values.push(self.next_uniform());
        }
        Ok(UniformBlock { values, n, k })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seed_and_path_replay_identically() {
        let mut a = SeedStream::derive(42, &[0, 0]);
        let mut b = SeedStream::derive(42, &[0, 0]);
        for _ in 0..1000 {
            assert_eq!(a.next_uniform().to_bits(), b.next_uniform().to_bits());
        }
    }

    #[test]
    fn distinct_paths_decorrelated() {
        let mut a = SeedStream::derive(42, &[0, 0]);
        let mut b = SeedStream::derive(42, &[1, 0]);
        let n = 10_000;
        let (mut sa, mut sb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (x, y) = (a.next_uniform(), b.next_uniform());
            sa += x;
            sb += y;
            saa += x * x;
            sbb += y * y;
            sab += x * y;
        }
        let nf = n as f64;
        let cov = sab / nf - (sa / nf) * (sb / nf);
        let corr = cov / ((saa / nf - (sa / nf).powi(2)) * (sbb / nf - (sb / nf).powi(2))).sqrt();
        assert!(corr.abs() < 0.05, "correlation {corr} too large");
    }

    #[test]
    fn draws_strictly_inside_unit_interval() {
        let mut s = SeedStream::derive(42, &[0, 0]);
        for _ in 0..1_000_000 {
            let u = s.next_uniform();
            assert!(u > 0.0 && u < 1.0);
        }
    }

    #[test]
    fn rewind_replays_block() {
        let mut s = SeedStream::derive(7, &[3]);
        let first = s.uniform_block(3, 2).unwrap();
        s.rewind();
        let second = s.uniform_block(3, 2).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn single_value_block() {
        let mut s = SeedStream::derive(7, &[3]);
        let b = s.uniform_block(1, 1).unwrap();
        let u = b.get(0, 0);
        assert!(u > 0.0 && u < 1.0);
    }

    #[test]
    fn zero_shape_rejected() {
        let mut s = SeedStream::derive(7, &[]);
        assert!(s.uniform_block(0, 1).is_err());
        assert!(s.uniform_block(1, 0).is_err());
    }

    #[test]
    fn pooled_draws_pass_ks_against_uniform() {
        // asymptotic K-S critical value at alpha = .01 is 1.63/sqrt(n)
        let mut s = SeedStream::derive(20240, &[9]);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| s.next_uniform()).collect();
        xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let nf = n as f64;
        let mut d: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            d = d.max(((i + 1) as f64 / nf - x).abs());
            d = d.max((x - i as f64 / nf).abs());
        }
        assert!(d < 1.63 / nf.sqrt(), "K-S distance {d} rejects uniformity");
    }

    #[test]
    fn child_extends_path() {
        let parent = SeedStream::derive(11, &[2]);
        let a = parent.child(&[5]);
        let b = SeedStream::derive(11, &[2, 5]);
        assert_eq!(a, b);
    }
}
