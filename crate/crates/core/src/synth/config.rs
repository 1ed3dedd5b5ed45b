use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerClass<T> {
    pub reliable: T,
    pub unreliable: T,
    pub conspiracy: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub n_users: usize,
    /// Source posts linking a news article.
    pub n_cascades: usize,
    pub n_communities: usize,
    /// Per community, probability a member shares a misinformation source.
    /// Communities are read round-robin when shorter than `n_communities`.
    pub propensity: Vec<f64>,
    /// Follow probability within and across communities.
    pub p_in: f64,
    pub p_out: f64,
    pub n_sources: PerClass<usize>,
    /// Share of unreliable among misinformation sources picked.
    pub unreliable_share: f64,
    /// Per source class, probability an article's content class differs
    /// from its source class.
    pub article_noise: PerClass<f64>,
    /// Probability that an author whose community leans against the
    /// article's content debunks or distorts it.
    pub stance_flip: f64,
    /// Fraction of source posts linking an unlisted domain.
    pub p_unlisted: f64,
    pub mean_engagements: f64,
    pub max_engagements: usize,
    /// Engagement kind mix: retweet, reply, quote.
    pub engagement_mix: [f64; 3],
    pub text_len: usize,
    pub reply_len: usize,
    /// Probability that a token carries class content rather than topic.
    pub signal: f64,
    /// Probability that a token is a fine-label marker.
    pub marker_rate: f64,
    pub content_vocab: usize,
    pub topic_vocab: usize,
    pub marker_vocab: usize,
    pub validation_frac: f64,
    pub test_frac: f64,
    pub n_prototypes: usize,
    pub min_tweets_per_user: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 500,
            n_cascades: 5000,
            n_communities: 6,
            propensity: vec![0.85, 0.15],
            p_in: 0.15,
            p_out: 0.005,
            n_sources: PerClass {
                reliable: 30,
                unreliable: 40,
                conspiracy: 20,
            },
            unreliable_share: 0.6,
            article_noise: PerClass {
                reliable: 0.05,
                unreliable: 0.3,
                conspiracy: 0.1,
            },
            stance_flip: 0.4,
            p_unlisted: 0.1,
            mean_engagements: 3.0,
            max_engagements: 40,
            engagement_mix: [0.65, 0.25, 0.1],
            text_len: 16,
            reply_len: 8,
            signal: 0.12,
            marker_rate: 0.25,
            content_vocab: 150,
            topic_vocab: 400,
            marker_vocab: 20,
            validation_frac: 0.1,
            test_frac: 0.1,
            n_prototypes: 400,
            min_tweets_per_user: 5,
            seed: 7,
        }
    }
}

fn check_prob(key: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ConfigValue {
            key: format!("synth.{key}"),
            message: format!("probability must be in [0, 1], got {p}"),
        })
    }
}

impl SynthConfig {
    pub fn community_propensity(&self, c: usize) -> f64 {
        self.propensity[c % self.propensity.len()]
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, message: String| {
            Err(Error::ConfigValue {
                key: format!("synth.{key}"),
                message,
            })
        };
        if self.n_users == 0 {
            return bad("n_users", "must be positive".into());
        }
        if self.n_communities == 0 || self.n_communities > self.n_users {
            return bad(
                "n_communities",
                format!("must be between 1 and n_users ({}), got {}", self.n_users, self.n_communities),
            );
        }
        if self.propensity.is_empty() {
            return bad("propensity", "needs at least one value".into());
        }
        for (i, &p) in self.propensity.iter().enumerate() {
            check_prob(&format!("propensity[{i}]"), p)?;
        }
        for (key, p) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("unreliable_share", self.unreliable_share),
            ("article_noise.reliable", self.article_noise.reliable),
            ("article_noise.unreliable", self.article_noise.unreliable),
            ("article_noise.conspiracy", self.article_noise.conspiracy),
            ("stance_flip", self.stance_flip),
            ("p_unlisted", self.p_unlisted),
            ("signal", self.signal),
            ("marker_rate", self.marker_rate),
            ("validation_frac", self.validation_frac),
            ("test_frac", self.test_frac),
        ] {
            check_prob(key, p)?;
        }
        if self.signal + self.marker_rate > 1.0 {
            return bad("marker_rate", "signal + marker_rate must not exceed 1".into());
        }
        if self.validation_frac + self.test_frac >= 1.0 {
            return bad("test_frac", "validation_frac + test_frac must be below 1".into());
        }
        if self.n_sources.reliable == 0 || self.n_sources.unreliable == 0 || self.n_sources.conspiracy == 0 {
            return bad("n_sources", "every class needs at least one source".into());
        }
        if self.engagement_mix.iter().any(|&w| w < 0.0) || self.engagement_mix.iter().sum::<f64>() <= 0.0 {
            return bad("engagement_mix", "weights must be non-negative with a positive sum".into());
        }
        if self.mean_engagements < 0.0 {
            return bad("mean_engagements", "must be non-negative".into());
        }
        if self.content_vocab == 0 || self.topic_vocab == 0 || self.marker_vocab == 0 {
            return bad("content_vocab", "vocabularies must be non-empty".into());
        }
        Ok(())
    }
}
