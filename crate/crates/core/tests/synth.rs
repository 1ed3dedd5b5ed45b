use std::collections::{BTreeMap, HashMap};
use std::fs;

use misinfo_refine::corpus::{
    assign_weak_labels, extract_cascades, parse_tweet_stream, read_labeled, read_source_list, SourceClass, TweetStore,
};
use misinfo_refine::metrics::{adjusted_rand_index, noise_detection, MetricsReport};
use misinfo_refine::refinement::ActionKind;
use misinfo_refine::social::{louvain_communities, RetweetGraph};
use misinfo_refine::synth::*;
use misinfo_refine::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small(seed: u64) -> SynthConfig {
    SynthConfig {
        n_users: 200,
        n_cascades: 1500,
        n_communities: 4,
        n_prototypes: 100,
        seed,
        ..Default::default()
    }
}

fn noise_rate(corpus: &SynthCorpus) -> f64 {
    let flags: Vec<bool> = corpus.truth.iter().filter_map(|t| t.is_noise()).collect();
    flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

/// Probability that a weak label is wrong, by enumerating source class,
/// article class and stance flip for each planted community.
fn expected_noise(cfg: &SynthConfig, community_sizes: &[usize]) -> f64 {
    let n: usize = community_sizes.iter().sum();
    let mut total = 0.0;
    for (c, &size) in community_sizes.iter().enumerate() {
        let theta = cfg.community_propensity(c);
        let lean = if theta > 0.5 {
            Some(1)
        } else if theta < 0.5 {
            Some(0)
        } else {
            None
        };
        let classes = [
            (0u8, 1.0 - theta, cfg.article_noise.reliable),
            (1, theta * cfg.unreliable_share, cfg.article_noise.unreliable),
            (1, theta * (1.0 - cfg.unreliable_share), cfg.article_noise.conspiracy),
        ];
        let mut p_noise = 0.0;
        for (weak, p_class, rho) in classes {
            for (article, p_article) in [(weak, 1.0 - rho), (1 - weak, rho)] {
                let p_flip = if lean.is_some_and(|l| l != article) { cfg.stance_flip } else { 0.0 };
                for (flipped, p) in [(true, p_flip), (false, 1.0 - p_flip)] {
                    let truth = if flipped { 1 - article } else { article };
                    if truth != weak {
                        p_noise += p_class * p_article * p;
                    }
                }
            }
        }
        total += p_noise * size as f64 / n as f64;
    }
    total
}

fn community_sizes(corpus: &SynthCorpus) -> Vec<usize> {
    let mut sizes = vec![0; corpus.config.n_communities];
    for &c in corpus.communities.values() {
        sizes[c] += 1;
    }
    sizes
}

#[test]
fn no_injected_noise_means_clean_weak_labels() {
    let cfg = SynthConfig {
        stance_flip: 0.0,
        article_noise: PerClass {
            reliable: 0.0,
            unreliable: 0.0,
            conspiracy: 0.0,
        },
        ..small(3)
    };
    let corpus = generate(&cfg).unwrap();
    assert!(corpus.truth.iter().filter(|t| t.weak_label.is_some()).count() > 1000);
    assert_eq!(noise_rate(&corpus), 0.0);
}

#[test]
fn realized_noise_matches_analytic_expectation() {
    let cfg = SynthConfig {
        stance_flip: 0.05,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg).unwrap();
    let want = expected_noise(&cfg, &community_sizes(&corpus));
    let got = noise_rate(&corpus);
    assert!((got - want).abs() < 0.02, "realized {got}, expected {want}");
}

#[test]
fn default_corpus_noise_is_near_fifteen_percent() {
    let cfg = SynthConfig::default();
    let corpus = generate(&cfg).unwrap();
    let want = expected_noise(&cfg, &community_sizes(&corpus));
    let got = noise_rate(&corpus);
    assert!((0.1..0.2).contains(&want), "{want}");
    assert!((got - want).abs() < 0.02, "realized {got}, expected {want}");
}

#[test]
fn per_class_article_noise_converges() {
    let cfg = SynthConfig {
        n_cascades: 20_000,
        stance_flip: 0.0,
        ..SynthConfig::default()
    };
    let corpus = generate(&cfg).unwrap();
    for (class, rho) in [
        (SourceClass::Reliable, cfg.article_noise.reliable),
        (SourceClass::Unreliable, cfg.article_noise.unreliable),
        (SourceClass::Conspiracy, cfg.article_noise.conspiracy),
    ] {
        let rows: Vec<_> = corpus.truth.iter().filter(|t| t.source_class == Some(class)).collect();
        let noisy = rows.iter().filter(|t| t.is_noise() == Some(true)).count() as f64;
        let rate = noisy / rows.len() as f64;
        assert!((rate - rho).abs() < 0.01, "{class:?}: {rate} vs {rho}");
    }
}

#[test]
fn fine_labels_binarize_to_truth() {
    let corpus = generate(&small(5)).unwrap();
    for t in &corpus.truth {
        assert_eq!(t.true_fine.binarize(), t.true_binary, "{}", t.cascade_id);
        assert_eq!(t.stance_flipped, t.article_binary != t.true_binary);
    }
}

#[test]
fn infeasible_config_is_rejected() {
    let cfg = SynthConfig {
        n_users: 3,
        n_communities: 4,
        ..SynthConfig::default()
    };
    assert!(matches!(generate(&cfg), Err(Error::ConfigValue { key, .. }) if key == "synth.n_communities"));
    let cfg = SynthConfig {
        stance_flip: 1.5,
        ..SynthConfig::default()
    };
    assert!(matches!(generate(&cfg), Err(Error::ConfigValue { key, .. }) if key == "synth.stance_flip"));
}

fn read_dir(dir: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn same_seed_writes_identical_files() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let c = tempfile::tempdir().unwrap();
    generate(&small(11)).unwrap().write_dir(a.path()).unwrap();
    generate(&small(11)).unwrap().write_dir(b.path()).unwrap();
    generate(&small(12)).unwrap().write_dir(c.path()).unwrap();
    let (fa, fb, fc) = (read_dir(a.path()), read_dir(b.path()), read_dir(c.path()));
    assert_eq!(fa.len(), 8);
    assert_eq!(fa, fb);
    assert_ne!(fa[TWEETS_FILE], fc[TWEETS_FILE]);
}

#[test]
fn written_files_round_trip_through_corpus_readers() {
    let corpus = generate(&small(13)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write_dir(dir.path()).unwrap();

    let ingested = parse_tweet_stream(dir.path().join(TWEETS_FILE), corpus.config.min_tweets_per_user).unwrap();
    assert_eq!(ingested.records, corpus.records);
    assert_eq!(ingested.stats.users_below_min, 0);
    let sources = read_source_list(fs::File::open(dir.path().join(SOURCES_FILE)).unwrap()).unwrap();
    let extraction = extract_cascades(&ingested.records);
    let store = TweetStore::new(ingested.records);
    let labeling = assign_weak_labels(&extraction.cascades, &store, &sources);

    // Every news-linking post roots its own cascade and keeps its planted weak label.
    let planted: BTreeMap<&str, Option<u8>> =
        corpus.truth.iter().map(|t| (t.cascade_id.as_str(), t.weak_label)).collect();
    let n_planted = planted.values().filter(|w| w.is_some()).count();
    assert_eq!(labeling.labels.len(), n_planted);
    for (id, w) in &labeling.labels {
        assert_eq!(planted[id.as_str()], Some(w.value), "{id}");
    }

    let truth = read_ground_truth(fs::File::open(dir.path().join(GROUND_TRUTH_FILE)).unwrap()).unwrap();
    assert_eq!(truth, corpus.ground_truth());
    assert_eq!(truth.len(), corpus.truth.len());
    for (g, t) in truth.iter().zip(&corpus.truth) {
        assert_eq!(g.is_noise.is_none(), t.weak_label.is_none());
    }
    let val = read_labeled(fs::File::open(dir.path().join(VALIDATION_FILE)).unwrap(), "validation").unwrap();
    assert_eq!(val.len(), corpus.validation.len());
    let protos = read_labeled(fs::File::open(dir.path().join(PROTOTYPES_FILE)).unwrap(), "prototypes").unwrap();
    assert!(protos.iter().all(|r| r.fine_label.is_some()));
}

#[test]
fn holdout_sets_are_disjoint_weakly_labeled_cascades() {
    let corpus = generate(&small(17)).unwrap();
    let labeled: HashMap<&str, bool> =
        corpus.truth.iter().map(|t| (t.cascade_id.as_str(), t.weak_label.is_some())).collect();
    let h = corpus.holdout();
    let total = h.validation.len() + h.test.len() + h.prototypes.len();
    assert_eq!(h.ids().len(), total);
    assert_eq!(h.prototypes.len(), 100);
    assert!(h.ids().iter().all(|id| labeled[id.as_str()]));
}

#[test]
fn planted_communities_are_recovered() {
    let corpus = generate(&SynthConfig::default()).unwrap();
    let graph = RetweetGraph::build(&TweetStore::new(corpus.records.clone()));
    let partition = louvain_communities(&graph, 1);
    let planted: Vec<usize> = graph.users().iter().map(|u| corpus.communities[u]).collect();
    assert!(graph.n_nodes() as f64 > 0.9 * corpus.config.n_users as f64);
    let ari = adjusted_rand_index(&partition.assignment, &planted).unwrap();
    assert!(ari > 0.8, "ARI {ari}");
}

fn verdicts(corpus: &SynthCorpus, mut action: impl FnMut(&TruthRow) -> ActionKind) -> Vec<PipelineVerdict> {
    corpus
        .truth
        .iter()
        .filter_map(|t| {
            Some(PipelineVerdict {
                cascade_id: t.cascade_id.clone(),
                weak_label: t.weak_label?,
                action: action(t),
                prob_misinfo: 0.5,
            })
        })
        .collect()
}

#[test]
fn removing_exactly_the_noise_is_perfect() {
    let corpus = generate(&small(19)).unwrap();
    let v = verdicts(&corpus, |t| if t.is_noise() == Some(true) { ActionKind::Remove } else { ActionKind::Retain });
    let r = oracle_report(&corpus.ground_truth(), &v, 0.5).unwrap().noise;
    assert_eq!((r.recall, r.precision, r.frac_uq), (1.0, 1.0, 0.0));
}

#[test]
fn querying_everything_wastes_every_correct_label() {
    let corpus = generate(&small(19)).unwrap();
    let v = verdicts(&corpus, |_| ActionKind::Query);
    let r = oracle_report(&corpus.ground_truth(), &v, 0.5).unwrap().noise;
    assert_eq!(r.frac_uq, 1.0);
    assert_eq!(r.recall, 1.0);
}

#[test]
fn random_thirty_percent_query_recalls_thirty_percent() {
    let corpus = generate(&small(23)).unwrap();
    let truth = corpus.ground_truth();
    let recalls: Vec<f64> = (0..20u64)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let v = verdicts(&corpus, |_| if rng.random_bool(0.3) { ActionKind::Query } else { ActionKind::Retain });
            oracle_report(&truth, &v, 0.5).unwrap().noise.recall
        })
        .collect();
    let mean = recalls.iter().sum::<f64>() / recalls.len() as f64;
    assert!((mean - 0.3).abs() < 0.05, "mean recall {mean}");
}

#[test]
fn oracle_agrees_with_metrics_module() {
    let corpus = generate(&small(29)).unwrap();
    let truth = corpus.ground_truth();
    let by_id: HashMap<&str, u8> = truth.iter().map(|t| (t.cascade_id.as_str(), t.true_binary)).collect();
    let actions = [ActionKind::Retain, ActionKind::Flip, ActionKind::Query, ActionKind::Remove];
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut v = verdicts(&corpus, |_| ActionKind::Retain);
        for x in &mut v {
            x.action = actions[rng.random_range(0..4)];
            // coarse scores produce ties
            x.prob_misinfo = (rng.random::<f64>() * 20.0).floor() / 20.0;
        }
        let got = oracle_report(&truth, &v, 0.5).unwrap();
        let acts: Vec<ActionKind> = v.iter().map(|x| x.action).collect();
        let weak: Vec<u8> = v.iter().map(|x| x.weak_label).collect();
        let labels: Vec<u8> = v.iter().map(|x| by_id[x.cascade_id.as_str()]).collect();
        let scores: Vec<f64> = v.iter().map(|x| x.prob_misinfo).collect();
        let want = noise_detection(&acts, &weak, &labels).unwrap();
        assert_eq!(
            (got.noise.true_positives, got.noise.false_positives, got.noise.false_negatives),
            (want.true_positives, want.false_positives, want.false_negatives)
        );
        assert_eq!(got.noise.n_correct_weak_queried, want.n_correct_weak_queried);
        for (a, b) in [
            (got.noise.recall, want.recall),
            (got.noise.precision, want.precision),
            (got.noise.f1, want.f1),
            (got.noise.frac_uq, want.frac_uq),
        ] {
            approx::assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let want = MetricsReport::compute(&scores, &labels, 0.5).unwrap();
        approx::assert_abs_diff_eq!(got.metrics.ap, want.ap, epsilon = 1e-9);
        approx::assert_abs_diff_eq!(got.metrics.auc, want.auc, epsilon = 1e-9);
        assert_eq!(got.metrics.f1, want.f1);
        assert_eq!(got.metrics.macro_f1, want.macro_f1);
    }
}

#[test]
fn oracle_rejects_unknown_ids() {
    let corpus = generate(&small(31)).unwrap();
    let mut v = verdicts(&corpus, |_| ActionKind::Retain);
    v[0].cascade_id = "nope".into();
    assert!(matches!(oracle_report(&corpus.ground_truth(), &v, 0.5), Err(Error::InvalidInput(m)) if m.contains("nope")));
}
