//! Command-line front end. Every command reads its inputs from `--data-dir`
//! (or per-file flags) and writes artifacts into `--out-dir`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::corpus::{parse_tweet_stream, read_labeled, read_source_list, write_cascades_jsonl, LabeledRow, SourceClass};
use crate::detector::{self_train, CascadeFeatures, DetectorModel, LabeledSet};
use crate::finegrained::evaluate_fine;
use crate::refinement::{
    AnnotationGate, Mode, NoWait, RefinementReport, UntilDrained,
};
use crate::service::{self, ServiceState};
use crate::social::{label_communities, louvain_communities, modularity, Membership, SocialContext};
use crate::synth::{self, generate, read_ground_truth};
use crate::workflow::{evaluate, label_store, refine_corpus, EvaluationInput, EvaluationReport, Holdout, PreparedCorpus, FINE_FOLDS};

pub const REFINED_DATASET_FILE: &str = "refined_dataset.jsonl";
pub const REFINE_REPORT_FILE: &str = "refine_report.json";
pub const MODEL_FILE: &str = "model.json";
pub const WEAK_MODEL_FILE: &str = "weak_model.json";
pub const PREDICTIONS_FILE: &str = "predictions.csv";
pub const EVALUATION_FILE: &str = "evaluation.json";
pub const RUN_CONFIG_FILE: &str = "run_config.json";

const OVERRIDE_HELP: &str = "Any configuration value can also be set by its dotted key, \
for example `--refinement.max_iter 5` or `--self_train.entropy_quantile=0.9`. \
Run `misinfo-refine config` to print the resolved configuration.";

#[derive(Debug, Parser)]
#[command(name = "misinfo-refine", version, about = "Refine news-source weak labels into a misinformation dataset", after_help = OVERRIDE_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON run configuration; missing keys take their defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Refinement mode: autonomous removes QUERY items, interactive serves them to annotators.
    #[arg(long, global = true, value_parser = ["autonomous", "interactive"])]
    pub mode: Option<String>,
    /// Directory artifacts are written to.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Directory the default input files are read from.
    #[arg(long, global = true, default_value = ".")]
    pub data_dir: PathBuf,
    /// Tweet stream, JSONL [default: <data-dir>/tweets.jsonl].
    #[arg(long, global = true)]
    pub tweets: Option<PathBuf>,
    /// Source credibility list, CSV `domain,label` [default: <data-dir>/sources.csv].
    #[arg(long, global = true)]
    pub sources: Option<PathBuf>,
    /// Labeled validation split [default: <data-dir>/validation.csv].
    #[arg(long, global = true)]
    pub validation: Option<PathBuf>,
    /// Labeled test split [default: <data-dir>/test.csv].
    #[arg(long, global = true)]
    pub test: Option<PathBuf>,
    /// Fine-labeled prototypes [default: <data-dir>/prototypes.csv, used when present].
    #[arg(long, global = true)]
    pub prototypes: Option<PathBuf>,
    /// Ground truth for noise evaluation [default: <data-dir>/ground_truth.csv, used when present].
    #[arg(long, global = true)]
    pub ground_truth: Option<PathBuf>,
    /// Directory holding a finished `refine` run [default: <out-dir>].
    #[arg(long, global = true)]
    pub run_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Parse and filter the tweet stream.
    Ingest,
    /// Extract cascades and assign weak labels from the source list.
    Weaklabel,
    /// Detect and label retweet communities.
    Communities,
    /// Entropy-filtered self-training of the detector.
    Train,
    /// Full refinement: self-training, then joint detector and social-context refinement.
    Refine,
    /// Score a finished refinement against labeled test data.
    Evaluate,
    /// Cross-validated fine-grained classification of the prototypes.
    Finegrained,
    /// Generate a synthetic corpus with ground truth.
    Synth,
    /// Run an interactive refinement with the annotation service.
    Serve,
    /// Print the resolved configuration.
    Config,
}

/// Splits `--a.b value` and `--a.b=value` overrides from the arguments clap sees.
pub fn split_overrides(args: impl IntoIterator<Item = String>) -> anyhow::Result<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let Some(body) = arg.strip_prefix("--") else {
            rest.push(arg);
            continue;
        };
        let (key, inline) = match body.split_once('=') {
            Some((k, v)) => (k, Some(v.to_string())),
            None => (body, None),
        };
        if !key.contains('.') {
            rest.push(arg);
            continue;
        }
        let value = match inline {
            Some(v) => v,
            None => it.next().with_context(|| format!("--{key} needs a value"))?,
        };
        overrides.push((key.to_string(), value));
    }
    Ok((rest, overrides))
}

/// Parses `args` (program name first) and runs the command.
pub fn run(args: impl IntoIterator<Item = String>) -> anyhow::Result<()> {
    let (rest, overrides) = split_overrides(args)?;
    let cli = Cli::try_parse_from(rest)?;
    let config = resolve_config(&cli.common, &overrides)?;
    execute(cli.command, cli.common, config)
}

/// Runs `command` with an already resolved configuration.
pub fn execute(command: Command, common: Common, config: RunConfig) -> anyhow::Result<()> {
    let ctx = Runner { common, config };
    match command {
        Command::Ingest => ctx.ingest(),
        Command::Weaklabel => ctx.weaklabel(),
        Command::Communities => ctx.communities(),
        Command::Train => ctx.train(),
        Command::Refine => ctx.refine(),
        Command::Evaluate => ctx.evaluate(),
        Command::Finegrained => ctx.finegrained(),
        Command::Synth => ctx.synth(),
        Command::Serve => {
            let mut ctx = ctx;
            ctx.config.set_mode(Mode::Interactive);
            ctx.refine()
        }
        Command::Config => {
            println!("{}", serde_json::to_string_pretty(&ctx.provenance())?);
            Ok(())
        }
    }
}

impl Common {
    /// Default input files under `data_dir`, artifacts into `out_dir`.
    pub fn in_dirs(data_dir: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Common {
            data_dir: data_dir.into(),
            out_dir: out_dir.into(),
            ..Common::default()
        }
    }
}

pub fn resolve_config(common: &Common, overrides: &[(String, String)]) -> anyhow::Result<RunConfig> {
    let mut config = RunConfig::resolve(common.config.as_deref(), overrides)?;
    if let Some(seed) = common.seed {
        config.set_seed(seed);
    }
    match common.mode.as_deref() {
        Some("interactive") => config.set_mode(Mode::Interactive),
        Some("autonomous") => config.set_mode(Mode::Autonomous),
        Some(other) => bail!("unknown mode {other:?}"),
        None => {}
    }
    Ok(config)
}

/// A written report: the configuration that produced it, then the body.
#[derive(Debug, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub config: RunConfig,
    pub report: T,
}

#[derive(Debug, Serialize)]
struct IngestReport {
    n_records: usize,
    n_users: usize,
    stats: crate::corpus::IngestStats,
}

#[derive(Debug, Serialize)]
struct WeakLabelReport {
    n_cascades: usize,
    n_labeled: usize,
    unlabeled: usize,
    conflicting: usize,
    by_class: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Serialize)]
struct CommunityReport {
    n_users: usize,
    n_edges: usize,
    n_communities: usize,
    modularity: f64,
    by_label: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Serialize)]
struct TrainReport {
    n_instances: usize,
    best_iteration: usize,
    iterations: Vec<crate::detector::SelfTrainIteration>,
    warning: Option<String>,
    decision_threshold: f64,
}

struct Runner {
    common: Common,
    config: RunConfig,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).with_context(|| format!("cannot create {}", parent.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn open(path: &Path) -> anyhow::Result<File> {
    File::open(path).with_context(|| format!("missing input file {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

impl Runner {
    fn input(&self, explicit: &Option<PathBuf>, default: &str) -> PathBuf {
        explicit.clone().unwrap_or_else(|| self.common.data_dir.join(default))
    }

    fn optional_input(&self, explicit: &Option<PathBuf>, default: &str) -> Option<PathBuf> {
        match explicit {
            Some(p) => Some(p.clone()),
            None => Some(self.common.data_dir.join(default)).filter(|p| p.exists()),
        }
    }

    fn out(&self, name: &str) -> PathBuf {
        self.common.out_dir.join(name)
    }

    /// Token redacted so reports never leak it.
    fn provenance(&self) -> RunConfig {
        let mut c = self.config.clone();
        if c.service.token.is_some() {
            c.service.token = Some("<redacted>".into());
        }
        c
    }

    fn write_report<T: Serialize>(&self, name: &str, report: T) -> anyhow::Result<()> {
        write_json(&self.out(name), &Artifact {
            config: self.provenance(),
            report,
        })?;
        write_json(&self.out(RUN_CONFIG_FILE), &self.provenance())
    }

    fn labeled(&self, explicit: &Option<PathBuf>, default: &str, context: &str) -> anyhow::Result<Vec<LabeledRow>> {
        let path = self.input(explicit, default);
        Ok(read_labeled(open(&path)?, context)?)
    }

    fn optional_labeled(&self, explicit: &Option<PathBuf>, default: &str, context: &str) -> anyhow::Result<Vec<LabeledRow>> {
        match self.optional_input(explicit, default) {
            Some(path) => Ok(read_labeled(open(&path)?, context)?),
            None => Ok(Vec::new()),
        }
    }

    fn corpus(&self) -> anyhow::Result<PreparedCorpus> {
        let tweets = self.input(&self.common.tweets, synth::TWEETS_FILE);
        open(&tweets)?;
        let ingested = parse_tweet_stream(&tweets, self.config.min_tweets_per_user)?;
        let sources = self.input(&self.common.sources, synth::SOURCES_FILE);
        let sources = read_source_list(open(&sources)?)?;
        log::info!("{} tweets, {} listed domains", ingested.records.len(), sources.len());
        Ok(PreparedCorpus::new(ingested.records, &sources, self.config.features))
    }

    fn holdout(&self, need_validation: bool) -> anyhow::Result<Holdout> {
        let validation = if need_validation {
            self.labeled(&self.common.validation, synth::VALIDATION_FILE, "validation")?
        } else {
            self.optional_labeled(&self.common.validation, synth::VALIDATION_FILE, "validation")?
        };
        Ok(Holdout {
            validation,
            test: self.optional_labeled(&self.common.test, synth::TEST_FILE, "test")?,
            prototypes: self.optional_labeled(&self.common.prototypes, synth::PROTOTYPES_FILE, "prototypes")?,
        })
    }

    fn ingest(&self) -> anyhow::Result<()> {
        let tweets = self.input(&self.common.tweets, synth::TWEETS_FILE);
        open(&tweets)?;
        let ingested = parse_tweet_stream(&tweets, self.config.min_tweets_per_user)?;
        let path = self.out("ingested.jsonl");
        let mut w = create(&path)?;
        for r in &ingested.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let n_users = ingested.records.iter().map(|r| r.user_id.as_str()).collect::<HashSet<_>>().len();
        self.write_report("ingest_report.json", IngestReport {
            n_records: ingested.records.len(),
            n_users,
            stats: ingested.stats,
        })
    }

    fn weaklabel(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        write_cascades_jsonl(self.out("cascades.jsonl"), corpus.cascades(), Some(&corpus.labeling))?;
        let mut by_class = BTreeMap::new();
        for class in [SourceClass::Reliable, SourceClass::Unreliable, SourceClass::Conspiracy] {
            by_class.insert(class.as_str(), corpus.labeling.labels.values().filter(|l| l.source_class == class).count());
        }
        self.write_report("weaklabel_report.json", WeakLabelReport {
            n_cascades: corpus.cascades().len(),
            n_labeled: corpus.labeling.labels.len(),
            unlabeled: corpus.labeling.unlabeled,
            conflicting: corpus.labeling.conflicting,
            by_class,
        })
    }

    fn communities(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let graph = corpus.retweet_graph();
        graph.write_edges_csv(create(&self.out("retweet_graph.csv"))?)?;
        let partition = louvain_communities(&graph, self.config.communities.seed);
        let q = modularity(&graph, &partition.assignment);
        let membership = Membership::from_partition(&graph, &partition);
        let instances = corpus.instances(&Default::default());
        let pairs: Vec<(&str, u8)> = instances.iter().map(|i| (i.author.as_str(), i.weak_label)).collect();
        let labeled = label_communities(&membership, &pairs, &self.config.communities);
        let mut by_label = BTreeMap::new();
        for c in &labeled {
            *by_label.entry(c.label.as_str()).or_insert(0) += 1;
        }
        let social = SocialContext::new(membership, &pairs, &self.config.communities);
        social.write_csv(create(&self.out("communities.csv"))?)?;
        self.write_report("communities_report.json", CommunityReport {
            n_users: graph.n_nodes(),
            n_edges: graph.n_edges(),
            n_communities: labeled.len(),
            modularity: q,
            by_label,
        })
    }

    fn train(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let holdout = self.holdout(true)?;
        let instances = corpus.instances(&holdout.ids());
        if instances.is_empty() {
            return Err(crate::Error::NoWeakLabels.into());
        }
        let (vf, vl) = corpus.labeled_features(&holdout.validation, "validation")?;
        let vrefs: Vec<&CascadeFeatures> = vf.iter().collect();
        let feats: Vec<&CascadeFeatures> = instances.iter().map(|i| &i.features).collect();
        let weak: Vec<u8> = instances.iter().map(|i| i.weak_label).collect();
        let out = self_train(
            LabeledSet {
                features: &feats,
                labels: &weak,
            },
            LabeledSet {
                features: &vrefs,
                labels: &vl,
            },
            self.config.features.hash_dim,
            &self.config.detector,
            &self.config.self_train,
        )?;
        out.model.save(self.out(MODEL_FILE))?;
        out.initial_model.save(self.out(WEAK_MODEL_FILE))?;
        let rows = instances.iter().map(|i| {
            let p = out.model.predict(&i.features);
            (i.cascade_id.as_str(), p.prob_misinfo(), p.entropy)
        });
        write_predictions(&self.out(PREDICTIONS_FILE), rows)?;
        self.write_report("train_report.json", TrainReport {
            n_instances: instances.len(),
            best_iteration: out.best_iteration,
            decision_threshold: out.model.decision_threshold(),
            iterations: out.iterations,
            warning: out.warning,
        })
    }

    fn refine(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let holdout = self.holdout(true)?;
        let instances = corpus.instances(&holdout.ids());
        if instances.is_empty() {
            return Err(crate::Error::NoWeakLabels.into());
        }
        log::info!("{} weakly labeled training instances", instances.len());
        let store = Arc::new(label_store(&instances));
        let pipeline = self.config.pipeline();
        let (runtime, gate): (_, Box<dyn AnnotationGate>) = match pipeline.refinement.mode {
            Mode::Autonomous => (None, Box::new(NoWait)),
            Mode::Interactive => {
                let runtime = self.start_service(store.clone())?;
                let poll = Duration::from_millis(self.config.service.poll_ms);
                (Some(runtime), Box::new(UntilDrained { poll }))
            }
        };
        let outcome = refine_corpus(&corpus, &instances, &holdout, &pipeline, &store, gate.as_ref())?;
        if let Some(rt) = runtime {
            rt.shutdown_background();
        }

        let path = self.out(REFINED_DATASET_FILE);
        let mut w = create(&path)?;
        for r in &outcome.report.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        outcome.model.save(self.out(MODEL_FILE))?;
        outcome.weak_model.save(self.out(WEAK_MODEL_FILE))?;
        let rows = outcome.report.records.iter().map(|r| (r.cascade_id.as_str(), r.prob_misinfo, r.entropy));
        write_predictions(&self.out(PREDICTIONS_FILE), rows)?;
        if let Some(w) = &outcome.report.warning {
            log::warn!("{w}");
        }
        self.write_report(REFINE_REPORT_FILE, &outcome.report)
    }

    fn start_service(&self, store: Arc<crate::refinement::SharedStore>) -> anyhow::Result<tokio::runtime::Runtime> {
        let runtime = tokio::runtime::Builder::new_multi_thread().worker_threads(2).enable_all().build()?;
        let addr = self.config.service.addr.clone();
        let listener = runtime
            .block_on(tokio::net::TcpListener::bind(&addr))
            .with_context(|| format!("cannot listen on {addr}"))?;
        log::info!("annotation service listening on http://{}", listener.local_addr()?);
        let router = service::router(ServiceState {
            store,
            token: self.config.service.token.clone(),
        });
        runtime.spawn(async move {
            if let Err(e) = axum::serve(listener, router).await {
                log::error!("annotation service stopped: {e}");
            }
        });
        Ok(runtime)
    }

    fn evaluate(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let run_dir = self.common.run_dir.clone().unwrap_or_else(|| self.common.out_dir.clone());
        let model = DetectorModel::load(run_dir.join(MODEL_FILE))?;
        let weak_model = DetectorModel::load(run_dir.join(WEAK_MODEL_FILE))?;
        let report_path = run_dir.join(REFINE_REPORT_FILE);
        let text = fs::read_to_string(&report_path).with_context(|| format!("missing input file {}", report_path.display()))?;
        let refined: Artifact<RefinementReport> =
            serde_json::from_str(&text).with_context(|| format!("schema violation in {}", report_path.display()))?;

        let test = self.labeled(&self.common.test, synth::TEST_FILE, "test")?;
        let prototypes = self.optional_labeled(&self.common.prototypes, synth::PROTOTYPES_FILE, "prototypes")?;
        let truth: HashMap<String, u8> = match self.optional_input(&self.common.ground_truth, synth::GROUND_TRUTH_FILE) {
            Some(path) => read_ground_truth(open(&path)?)?.into_iter().map(|g| (g.cascade_id, g.true_binary)).collect(),
            None => HashMap::new(),
        };
        let weak: HashMap<String, u8> =
            refined.report.records.iter().map(|r| (r.cascade_id.clone(), r.weak_label)).collect();
        let report = evaluate(
            &corpus,
            EvaluationInput {
                weak_model: &weak_model,
                model: &model,
                iterations: &refined.report.iterations,
                weak: &weak,
                truth: &truth,
            },
            &test,
            &prototypes,
            &self.config.finegrained,
        )?;
        self.write_tables(&report)?;
        self.write_report(EVALUATION_FILE, &report)
    }

    fn write_tables(&self, report: &EvaluationReport) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(create(&self.out("detector.csv"))?);
        w.write_record(["training", "ap", "auc", "f1", "macro_f1"])?;
        for row in &report.detector {
            let m = row.metrics;
            w.write_record([row.training.clone(), m.ap.to_string(), m.auc.to_string(), m.f1.to_string(), m.macro_f1.to_string()])?;
        }
        w.flush()?;
        if let Some(strategies) = &report.noise_detection {
            let mut w = csv::Writer::from_writer(create(&self.out("noise_detection.csv"))?);
            w.write_record(["method", "recall", "precision", "f1", "frac_uq"])?;
            for s in strategies {
                let r = s.report;
                w.write_record([s.name.clone(), r.recall.to_string(), r.precision.to_string(), r.f1.to_string(), r.frac_uq.to_string()])?;
            }
            w.flush()?;
        }
        if let Some(fine) = &report.finegrained {
            fine.write_csv(create(&self.out("finegrained.csv"))?)?;
        }
        Ok(())
    }

    fn finegrained(&self) -> anyhow::Result<()> {
        let corpus = self.corpus()?;
        let rows = self.labeled(&self.common.prototypes, synth::PROTOTYPES_FILE, "prototypes")?;
        let eval = evaluate_fine(&corpus.prototypes(&rows)?, FINE_FOLDS, &self.config.finegrained)?;
        eval.write_csv(create(&self.out("finegrained.csv"))?)?;
        self.write_report("finegrained_report.json", &eval)
    }

    fn synth(&self) -> anyhow::Result<()> {
        let corpus = generate(&self.config.synth)?;
        corpus.write_dir(&self.common.out_dir)?;
        log::info!("wrote {} tweets to {}", corpus.records.len(), self.common.out_dir.display());
        Ok(())
    }
}

fn write_predictions<'a>(path: &Path, rows: impl Iterator<Item = (&'a str, f64, f64)>) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["cascade_id", "prob_misinfo", "entropy"])?;
    for (id, p, h) in rows {
        w.write_record([id, &p.to_string(), &h.to_string()])?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}
