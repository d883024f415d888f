//! Reproducible letter streams.
//!
//! Every stream is ChaCha8 keyed by a 64-bit seed (via `seed_from_u64`) and
//! addressed by a 64-bit stream number. Parallel work derives one stream per
//! chunk index from a single master seed, so results depend only on
//! `(seed, chunk)` and never on thread scheduling.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::word::{Letter, Word};

#[derive(Debug, Clone)]
pub struct WordRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl WordRng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream `stream` under master `seed`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream);
        WordRng { seed, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn letter(&mut self, k: u32) -> Letter {
        Letter::from_code(self.inner.gen_range(0..2 * k as usize))
    }

    pub fn uniform_below(&mut self, bound: usize) -> usize {
        self.inner.gen_range(0..bound)
    }
}

/// Uniform i.i.d. word of length `n` over `2k` letters.
pub fn sample_word(n: usize, k: u32, rng: &mut WordRng) -> Word {
    assert!(k >= 1, "alphabet size must be positive");
    let mut word = Word::empty(k);
    for _ in 0..n {
        word.push(rng.letter(k));
    }
    word
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sample() {
        assert!(sample_word(0, 2, &mut WordRng::new(1)).is_empty());
    }

    #[test]
    fn deterministic_given_seed() {
        let a = sample_word(500, 3, &mut WordRng::new(42));
        let b = sample_word(500, 3, &mut WordRng::new(42));
        assert_eq!(a, b);
        let c = sample_word(500, 3, &mut WordRng::new(43));
        assert_ne!(a, c);
        let d = sample_word(500, 3, &mut WordRng::with_stream(42, 1));
        assert_ne!(a, d);
    }

    #[test]
    fn letter_frequencies_within_six_sigma() {
        // Binomial(n, 1/4): sd = sqrt(n * 3/16); 6 sd at n = 1e6 is 0.0026 in frequency,
        // the band [0.2495, 0.2505] is tighter, so average over seeds as well.
        let n = 1_000_000usize;
        let seeds = 8u64;
        let mut counts = [0u64; 4];
        for seed in 0..seeds {
            for l in sample_word(n, 2, &mut WordRng::new(seed)).letters() {
                counts[l.code()] += 1;
            }
        }
        let total = (n as u64 * seeds) as f64;
        let six_sigma = 6.0 * (0.25f64 * 0.75 / total).sqrt();
        for c in counts {
            let freq = c as f64 / total;
            assert!((freq - 0.25).abs() <= six_sigma, "frequency {freq}");
            assert!((0.2495..=0.2505).contains(&freq), "frequency {freq}");
        }
    }

    #[test]
    fn chi_square_on_six_letters() {
        let n = 600_000usize;
        let mut counts = [0f64; 6];
        for l in sample_word(n, 3, &mut WordRng::new(7)).letters() {
            counts[l.code()] += 1.0;
        }
        let expected = n as f64 / 6.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        // 5 degrees of freedom; P(chi2 > 30) is below 2e-5.
        assert!(chi2 < 30.0, "chi2 = {chi2}");
    }
}
