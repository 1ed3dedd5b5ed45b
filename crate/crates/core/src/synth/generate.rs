use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::SynthConfig;
use crate::corpus::{SourceClass, SourceList, TweetRecord, MISINFO, RELIABLE};
use crate::finegrained::FineLabel;
use crate::Result;

/// Start of the generated time window (2021-01-01 UTC).
const EPOCH: i64 = 1_609_459_200;
const WINDOW_SECS: i64 = 180 * 24 * 3600;
const N_UNLISTED_DOMAINS: usize = 20;

/// Ground truth of one generated source post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub cascade_id: String,
    pub true_binary: u8,
    pub true_fine: FineLabel,
    /// `None` when the source post links an unlisted domain.
    pub weak_label: Option<u8>,
    pub source_class: Option<SourceClass>,
    /// Content class of the linked article before any stance flip.
    pub article_binary: u8,
    pub stance_flipped: bool,
    pub author: String,
    pub author_community: usize,
}

impl TruthRow {
    pub fn is_noise(&self) -> Option<bool> {
        self.weak_label.map(|w| w != self.true_binary)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub records: Vec<TweetRecord>,
    pub sources: SourceList,
    /// One row per news-linking source post, in generation order.
    pub truth: Vec<TruthRow>,
    /// Planted community per user, by user id.
    pub communities: BTreeMap<String, usize>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    /// Training-pool cascades offered as fine-label prototypes.
    pub prototypes: Vec<String>,
}

/// Misinformation share of content tokens per fine label.
fn misinfo_share(label: FineLabel) -> f64 {
    match label {
        FineLabel::True => 0.0,
        FineLabel::MostlyTrue => 0.2,
        FineLabel::Debunk => 0.35,
        FineLabel::Mixture => 0.5,
        FineLabel::MostlyFalse => 0.7,
        FineLabel::Unproven => 0.8,
        FineLabel::False => 1.0,
    }
}

fn pick_weighted<T: Copy>(rng: &mut ChaCha8Rng, options: &[(T, f64)]) -> T {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut x = rng.random::<f64>() * total;
    for &(v, w) in options {
        if x < w {
            return v;
        }
        x -= w;
    }
    options.last().expect("non-empty options").0
}

struct Vocab<'a> {
    config: &'a SynthConfig,
}

impl Vocab<'_> {
    fn text(&self, rng: &mut ChaCha8Rng, label: FineLabel, len: usize, signal: f64, marker_rate: f64) -> String {
        let c = self.config;
        let alpha = misinfo_share(label);
        let mut words = Vec::with_capacity(len);
        for _ in 0..len {
            let u: f64 = rng.random();
            let word = if u < signal {
                let pool = if rng.random_bool(alpha) { "mc" } else { "rc" };
                format!("{pool}{}", rng.random_range(0..c.content_vocab))
            } else if u < signal + marker_rate {
                format!("{}{}", label.as_str().replace('_', ""), rng.random_range(0..c.marker_vocab))
            } else {
                format!("tp{}", rng.random_range(0..c.topic_vocab))
            };
            words.push(word);
        }
        words.join(" ")
    }
}

fn domain_names(config: &SynthConfig) -> Vec<(String, SourceClass)> {
    let n = &config.n_sources;
    let mut out = Vec::new();
    out.extend((0..n.reliable).map(|k| (format!("reliable-news{k}.com"), SourceClass::Reliable)));
    out.extend((0..n.unreliable).map(|k| (format!("daily-buzz{k}.net"), SourceClass::Unreliable)));
    out.extend((0..n.conspiracy).map(|k| (format!("hidden-truth{k}.org"), SourceClass::Conspiracy)));
    out
}

fn fine_label_for(rng: &mut ChaCha8Rng, class: SourceClass, article: u8, flipped: bool) -> FineLabel {
    use FineLabel::*;
    match (article, flipped) {
        // a misinformation article called out
        (1, true) => Debunk,
        // a reliable article twisted
        (0, true) => pick_weighted(rng, &[(Mixture, 0.5), (MostlyFalse, 0.5)]),
        (0, false) => pick_weighted(rng, &[(True, 0.55), (MostlyTrue, 0.45)]),
        _ => match class {
            SourceClass::Conspiracy => pick_weighted(rng, &[(False, 0.7), (Unproven, 0.2), (MostlyFalse, 0.1)]),
            SourceClass::Unreliable => {
                pick_weighted(rng, &[(False, 0.4), (Mixture, 0.2), (MostlyFalse, 0.2), (Unproven, 0.2)])
            }
            SourceClass::Reliable => Mixture,
        },
    }
}

/// Leaning of a community: 1 misinformation, 0 reliable, none when even.
pub fn leaning(propensity: f64) -> Option<u8> {
    if propensity > 0.5 {
        Some(MISINFO)
    } else if propensity < 0.5 {
        Some(RELIABLE)
    } else {
        None
    }
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let width = config.n_users.to_string().len();
    let users: Vec<String> = (0..config.n_users).map(|i| format!("u{i:0width$}")).collect();
    let mut order: Vec<usize> = (0..config.n_users).collect();
    order.shuffle(&mut rng);
    let mut community = vec![0usize; config.n_users];
    for (rank, &u) in order.iter().enumerate() {
        community[u] = rank % config.n_communities;
    }

    // followers[u]: users who follow u
    let mut followers: Vec<Vec<usize>> = vec![Vec::new(); config.n_users];
    for u in 0..config.n_users {
        for v in 0..config.n_users {
            if u == v {
                continue;
            }
            let p = if community[u] == community[v] { config.p_in } else { config.p_out };
            if rng.random_bool(p) {
                followers[u].push(v);
            }
        }
    }

    let domains = domain_names(config);
    let sources = SourceList::from_pairs(domains.iter().map(|(d, c)| (d.as_str(), *c)))?;
    let by_class = |class: SourceClass| -> Vec<&str> {
        domains.iter().filter(|(_, c)| *c == class).map(|(d, _)| d.as_str()).collect()
    };
    let reliable_domains = by_class(SourceClass::Reliable);
    let unreliable_domains = by_class(SourceClass::Unreliable);
    let conspiracy_domains = by_class(SourceClass::Conspiracy);

    let vocab = Vocab { config };
    let mut next_id: u64 = 1_000_000_000;
    let mut new_id = || {
        next_id += 1;
        next_id.to_string()
    };
    let mut records = Vec::new();
    let mut truth = Vec::with_capacity(config.n_cascades);
    let q = config.mean_engagements / (1.0 + config.mean_engagements);

    for k in 0..config.n_cascades {
        let author = rng.random_range(0..config.n_users);
        let theta = config.community_propensity(community[author]);
        let misinfo_source = rng.random_bool(theta);
        let class = if !misinfo_source {
            SourceClass::Reliable
        } else if rng.random_bool(config.unreliable_share) {
            SourceClass::Unreliable
        } else {
            SourceClass::Conspiracy
        };
        let noise = match class {
            SourceClass::Reliable => config.article_noise.reliable,
            SourceClass::Unreliable => config.article_noise.unreliable,
            SourceClass::Conspiracy => config.article_noise.conspiracy,
        };
        let article = if rng.random_bool(noise) { 1 - class.binary() } else { class.binary() };
        let flipped = match leaning(theta) {
            Some(lean) if lean != article => rng.random_bool(config.stance_flip),
            _ => false,
        };
        let true_binary = if flipped { 1 - article } else { article };
        let fine = fine_label_for(&mut rng, class, article, flipped);
        debug_assert_eq!(fine.binarize(), true_binary);

        let unlisted = rng.random_bool(config.p_unlisted);
        let domain = if unlisted {
            format!("blog{}.example.net", rng.random_range(0..N_UNLISTED_DOMAINS))
        } else {
            let pool = match class {
                SourceClass::Reliable => &reliable_domains,
                SourceClass::Unreliable => &unreliable_domains,
                SourceClass::Conspiracy => &conspiracy_domains,
            };
            pool.choose(&mut rng).expect("validated non-empty").to_string()
        };

        let source_id = new_id();
        let source_ts = EPOCH + rng.random_range(0..WINDOW_SECS);
        records.push(TweetRecord {
            tweet_id: source_id.clone(),
            user_id: users[author].clone(),
            timestamp: source_ts,
            text: vocab.text(&mut rng, fine, config.text_len, config.signal, config.marker_rate),
            retweeted_id: None,
            replied_to_id: None,
            quoted_id: None,
            urls: vec![format!("https://www.{domain}/story/{k}")],
        });

        let mut n_eng = 0;
        while n_eng < config.max_engagements && rng.random_bool(q) {
            n_eng += 1;
        }
        // (tweet id, timestamp) of replies and quotes that can be replied to
        let mut threads: Vec<(String, i64)> = Vec::new();
        for _ in 0..n_eng {
            let engager = match followers[author].choose(&mut rng) {
                Some(&f) => f,
                None => {
                    let v = rng.random_range(0..config.n_users - 1);
                    if v >= author {
                        v + 1
                    } else {
                        v
                    }
                }
            };
            if engager == author && config.n_users == 1 {
                break;
            }
            let kind = pick_weighted(&mut rng, &[(0u8, config.engagement_mix[0]), (1, config.engagement_mix[1]), (2, config.engagement_mix[2])]);
            let (parent, parent_ts) = if kind == 1 && !threads.is_empty() && rng.random_bool(0.3) {
                threads.choose(&mut rng).expect("non-empty").clone()
            } else {
                (source_id.clone(), source_ts)
            };
            let id = new_id();
            let ts = parent_ts + 1 + (rng.random::<f64>().max(1e-12).ln() * -3600.0) as i64;
            let text = if kind == 0 {
                String::new()
            } else {
                vocab.text(&mut rng, fine, config.reply_len, config.signal / 2.0, 0.0)
            };
            records.push(TweetRecord {
                tweet_id: id.clone(),
                user_id: users[engager].clone(),
                timestamp: ts,
                text,
                retweeted_id: (kind == 0).then(|| parent.clone()),
                replied_to_id: (kind == 1).then(|| parent.clone()),
                quoted_id: (kind == 2).then(|| parent.clone()),
                urls: vec![],
            });
            if kind != 0 {
                threads.push((id, ts));
            }
        }

        truth.push(TruthRow {
            cascade_id: source_id,
            true_binary,
            true_fine: fine,
            weak_label: (!unlisted).then(|| class.binary()),
            source_class: (!unlisted).then_some(class),
            article_binary: article,
            stance_flipped: flipped,
            author: users[author].clone(),
            author_community: community[author],
        });
    }

    // Top up quiet users with plain posts so none falls below the ingest minimum.
    let mut counts = vec![0usize; config.n_users];
    let index: BTreeMap<&str, usize> = users.iter().enumerate().map(|(i, u)| (u.as_str(), i)).collect();
    for r in &records {
        counts[index[r.user_id.as_str()]] += 1;
    }
    for (u, &n) in counts.iter().enumerate() {
        for _ in n..config.min_tweets_per_user {
            records.push(TweetRecord {
                tweet_id: new_id(),
                user_id: users[u].clone(),
                timestamp: EPOCH + rng.random_range(0..WINDOW_SECS),
                text: vocab.text(&mut rng, FineLabel::True, config.reply_len, 0.0, 0.0),
                retweeted_id: None,
                replied_to_id: None,
                quoted_id: None,
                urls: vec![],
            });
        }
    }

    let mut labeled: Vec<&str> = truth.iter().filter(|t| t.weak_label.is_some()).map(|t| t.cascade_id.as_str()).collect();
    labeled.shuffle(&mut rng);
    let n_val = (labeled.len() as f64 * config.validation_frac).round() as usize;
    let n_test = (labeled.len() as f64 * config.test_frac).round() as usize;
    let sorted = |ids: &[&str]| {
        let mut v: Vec<String> = ids.iter().map(|s| s.to_string()).collect();
        v.sort();
        v
    };
    let validation = sorted(&labeled[..n_val]);
    let test = sorted(&labeled[n_val..n_val + n_test]);
    let pool = &labeled[n_val + n_test..];
    let prototypes = sorted(&pool[..config.n_prototypes.min(pool.len())]);

    Ok(SynthCorpus {
        config: config.clone(),
        records,
        sources,
        truth,
        communities: users.iter().cloned().zip(community).collect(),
        validation,
        test,
        prototypes,
    })
}
