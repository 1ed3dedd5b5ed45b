use serde::{Deserialize, Serialize};

use crate::corpus::{Cascade, EngagementKind, TweetStore};

/// Number of dense cascade statistics.
pub const N_STATS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// Hashed n-gram space size.
    pub hash_dim: usize,
    /// Length of the dense representation (projection plus statistics).
    pub repr_dim: usize,
    pub projection_seed: u64,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            hash_dim: 1 << 14,
            repr_dim: 64,
            projection_seed: 0x5eed_cafe,
        }
    }
}

/// Sparse vector as `(index, value)` pairs sorted by index.
pub type SparseVec = Vec<(u32, f64)>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeFeatures {
    pub hashed_text: SparseVec,
    /// `log(1+size)`, unique users, `log(1+span seconds)`, retweet / reply /
    /// quote fractions among non-source engagements.
    pub stats: [f64; N_STATS],
    pub representation: Vec<f64>,
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Lowercased alphanumeric runs (underscore included).
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !(c.is_alphanumeric() || c == '_'))
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub(crate) fn unigram_bucket(token: &str, dim: usize) -> u32 {
    (fnv1a(token.as_bytes()) % dim as u64) as u32
}

pub(crate) fn bigram_bucket(a: &str, b: &str, dim: usize) -> u32 {
    let mut key = Vec::with_capacity(a.len() + b.len() + 1);
    key.extend_from_slice(a.as_bytes());
    key.push(0x1f);
    key.extend_from_slice(b.as_bytes());
    (fnv1a(&key) % dim as u64) as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Featurizer {
    config: FeatureConfig,
}

impl Featurizer {
    pub fn new(config: FeatureConfig) -> Self {
        assert!(config.repr_dim > N_STATS, "representation must exceed the statistics block");
        assert!(config.hash_dim > 0 && config.hash_dim <= u32::MAX as usize);
        Featurizer { config }
    }

    pub fn config(&self) -> &FeatureConfig {
        &self.config
    }

    /// Hashed unigram and bigram counts of one text added `weight` times.
    pub fn add_text(&self, counts: &mut Vec<f64>, text: &str, weight: f64) {
        let tokens = tokenize(text);
        let dim = self.config.hash_dim;
        for t in &tokens {
            counts[unigram_bucket(t, dim) as usize] += weight;
        }
        for pair in tokens.windows(2) {
            counts[bigram_bucket(&pair[0], &pair[1], dim) as usize] += weight;
        }
    }

    pub fn featurize(&self, cascade: &Cascade, tweets: &TweetStore) -> CascadeFeatures {
        let mut counts = vec![0.0; self.config.hash_dim];
        let (mut rt, mut rp, mut qt) = (0usize, 0usize, 0usize);
        for (i, e) in cascade.engagements.iter().enumerate() {
            let Some(t) = tweets.get(&e.tweet_id) else { continue };
            self.add_text(&mut counts, &t.text, if i == 0 { 2.0 } else { 1.0 });
            if i > 0 {
                match t.kind() {
                    EngagementKind::Retweet => rt += 1,
                    EngagementKind::Reply => rp += 1,
                    EngagementKind::Quote => qt += 1,
                    EngagementKind::Original => {}
                }
            }
        }
        let hashed_text: SparseVec = counts
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .collect();

        let mut users: Vec<&str> = cascade.engagements.iter().map(|e| e.user_id.as_str()).collect();
        users.sort_unstable();
        users.dedup();
        let first = cascade.engagements.iter().map(|e| e.timestamp).min().unwrap_or(0);
        let last = cascade.engagements.iter().map(|e| e.timestamp).max().unwrap_or(0);
        let n_eng = cascade.len().saturating_sub(1);
        let frac = |k: usize| if n_eng == 0 { 0.0 } else { k as f64 / n_eng as f64 };
        let stats = [
            (1.0 + cascade.len() as f64).ln(),
            users.len() as f64,
            (1.0 + (last - first) as f64).ln(),
            frac(rt),
            frac(rp),
            frac(qt),
        ];
        let representation = self.represent(&hashed_text, &stats);
        CascadeFeatures {
            hashed_text,
            stats,
            representation,
        }
    }

    /// Seeded ±1 random projection of the hashed counts, followed by the
    /// statistics.
    pub fn represent(&self, hashed: &SparseVec, stats: &[f64; N_STATS]) -> Vec<f64> {
        let k = self.config.repr_dim - N_STATS;
        let scale = 1.0 / (k as f64).sqrt();
        let mut out = vec![0.0; self.config.repr_dim];
        for &(bucket, value) in hashed {
            let base = splitmix(self.config.projection_seed ^ (u64::from(bucket) << 20));
            for (j, slot) in out.iter_mut().take(k).enumerate() {
                let bit = splitmix(base.wrapping_add(j as u64)) & 1;
                *slot += if bit == 1 { value * scale } else { -value * scale };
            }
        }
        out[k..].copy_from_slice(stats);
        out
    }
}
