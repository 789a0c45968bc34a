//! Seeded noise over the ground-truth oracle.
//!
//! Models imperfect language-model behaviour: coverage verdicts flip with a
//! fixed probability, and extraction omits true factors or adds spurious
//! candidates per factor. Noise draws are a pure function of the backend
//! seed and the prompt text, so transcripts are reproducible regardless of
//! call order or concurrency.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::backend::{Backend, BackendError};
use crate::backends::oracle::{parse_extraction_prompt, OracleBackend};
use crate::prompts::{detect_shape, PromptShape};

/// Oracle wrapper with seeded coverage flips and extraction noise.
#[derive(Clone)]
pub struct NoisyOracleBackend {
    inner: OracleBackend,
    flip_prob: f64,
    omit_prob: f64,
    add_prob: f64,
    seed: u64,
}

impl NoisyOracleBackend {
    /// Probabilities must be in `[0, 1]`.
    pub fn new(inner: OracleBackend, flip_prob: f64, omit_prob: f64, add_prob: f64, seed: u64) -> Self {
        for (name, p) in [("flip", flip_prob), ("omit", omit_prob), ("add", add_prob)] {
            assert!((0.0..=1.0).contains(&p), "{name} probability out of range: {p}");
        }
        NoisyOracleBackend {
            inner,
            flip_prob,
            omit_prob,
            add_prob,
            seed,
        }
    }

    /// One RNG stream per (seed, prompt) pair.
    fn rng_for(&self, prompt: &str) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(prompt.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    fn noisy_coverage(&self, prompt: &str) -> Result<String, BackendError> {
        let honest = self.inner.complete(prompt)?;
        let mut rng = self.rng_for(prompt);
        if rng.gen::<f64>() < self.flip_prob {
            Ok(if honest == "YES" { "NO" } else { "YES" }.to_string())
        } else {
            Ok(honest)
        }
    }

    fn noisy_extraction(&self, prompt: &str) -> Result<String, BackendError> {
        let honest = self.inner.complete(prompt)?;
        let kept: Vec<String> = serde_json::from_str(&honest)
            .map_err(|e| BackendError::Other(format!("oracle reply was not a JSON array: {e}")))?;
        let (_, candidates) = parse_extraction_prompt(prompt)?;
        let mut rng = self.rng_for(prompt);
        let mut out = Vec::new();
        for candidate in &candidates {
            let truly_present = kept.contains(candidate);
            let keep = if truly_present {
                rng.gen::<f64>() >= self.omit_prob
            } else {
                rng.gen::<f64>() < self.add_prob
            };
            if keep {
                out.push(candidate.clone());
            }
        }
        Ok(serde_json::to_string(&out).expect("sentence list serializes"))
    }
}

impl Backend for NoisyOracleBackend {
    fn complete(&self, prompt: &str) -> Result<String, BackendError> {
        match detect_shape(prompt) {
            Some(PromptShape::DetermineCoverage) => self.noisy_coverage(prompt),
            Some(PromptShape::ExtractFactors) => self.noisy_extraction(prompt),
            // generation, prediction and conclusion pass through untouched
            _ => self.inner.complete(prompt),
        }
    }

    fn identity(&self) -> String {
        format!(
            "noisy-oracle(flip={},omit={},add={},seed={})",
            self.flip_prob, self.omit_prob, self.add_prob, self.seed
        )
    }
}
