use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::space::{Configuration, ConfigurationSpace, Param};

pub const BASE_ACCURACY: f64 = 0.55;
pub const ACCURACY_SPAN: f64 = 0.40;

/// Closed-form stand-in for distill-and-test.
///
/// ```text
/// acc = 0.55 + 0.40 · (0.5·g(h·l) + 0.3·g(i) + 0.1·g(v) + 0.1·bonus(tokenizer))
/// g(x) = clamp(ln(x/lo) / ln(hi/lo), 0, 1)   over the space's range of x
/// bonus = 1 − index/(n − 1)                  first tokenizer option scores 1
/// ```
///
/// Optional Gaussian noise is keyed on (seed, configuration), so repeated
/// calls agree. The result is clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOracle {
    capacity: (f64, f64),
    intermediate: (f64, f64),
    vocab: (f64, f64),
    tokenizers: Vec<String>,
    noise_sigma: f64,
    noise_seed: u64,
}

fn int_bounds(space: &ConfigurationSpace, p: Param) -> (f64, f64) {
    let d = space.domain(p);
    (d.int_min().expect("integer") as f64, d.int_max().expect("integer") as f64)
}

/// Saturating log ramp onto [0, 1]. A degenerate range counts as saturated.
pub(crate) fn log_ramp(x: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi <= lo {
        return 1.0;
    }
    ((x / lo).ln() / (hi / lo).ln()).clamp(0.0, 1.0)
}

impl SyntheticOracle {
    pub fn for_space(space: &ConfigurationSpace) -> Self {
        let (hlo, hhi) = int_bounds(space, Param::HiddenSize);
        let (llo, lhi) = int_bounds(space, Param::NumHiddenLayers);
        let tok = space.domain(Param::Tokenizer);
        let tokenizers = (0..tok.cardinality() as usize)
            .map(|i| tok.value_at(i).expect("in range").to_string())
            .collect();
        Self {
            capacity: (hlo * llo, hhi * lhi),
            intermediate: int_bounds(space, Param::IntermediateSize),
            vocab: int_bounds(space, Param::VocabSize),
            tokenizers,
            noise_sigma: 0.0,
            noise_seed: 0,
        }
    }

    pub fn with_noise(mut self, sigma: f64, seed: u64) -> Self {
        self.noise_sigma = sigma.max(0.0);
        self.noise_seed = seed;
        self
    }

    fn tokenizer_bonus(&self, c: &Configuration) -> f64 {
        let name = c.get(Param::Tokenizer).to_string();
        let n = self.tokenizers.len();
        match self.tokenizers.iter().position(|t| *t == name) {
            Some(_) if n == 1 => 1.0,
            Some(i) => 1.0 - i as f64 / (n - 1) as f64,
            None => 0.0,
        }
    }

    /// Noise-free pseudo-accuracy.
    pub fn clean(&self, c: &Configuration) -> f64 {
        let shape = c.shape().expect("valid configuration");
        let capacity = (shape.hidden_size * shape.num_layers) as f64;
        let score = 0.5 * log_ramp(capacity, self.capacity)
            + 0.3 * log_ramp(shape.intermediate_size as f64, self.intermediate)
            + 0.1 * log_ramp(shape.vocab_size as f64, self.vocab)
            + 0.1 * self.tokenizer_bonus(c);
        BASE_ACCURACY + ACCURACY_SPAN * score
    }

    pub fn evaluate(&self, c: &Configuration) -> f64 {
        let clean = self.clean(c);
        if self.noise_sigma == 0.0 {
            return clean;
        }
        let mut h = Sha256::new();
        h.update(self.noise_seed.to_le_bytes());
        h.update(c.to_string().as_bytes());
        let digest = h.finalize();
        let seed = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, self.noise_sigma)
            .expect("sigma is finite and non-negative")
            .sample(&mut rng);
        (clean + noise).clamp(0.0, 1.0)
    }
}
