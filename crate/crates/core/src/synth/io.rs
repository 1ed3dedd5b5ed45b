use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generate::SynthCorpus;
use crate::corpus::{write_labeled, LabeledRow};
use crate::finegrained::FineLabel;
use crate::workflow::Holdout;
use crate::{Error, Result};

pub const TWEETS_FILE: &str = "tweets.jsonl";
pub const SOURCES_FILE: &str = "sources.csv";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";
pub const COMMUNITIES_FILE: &str = "user_communities.csv";
pub const VALIDATION_FILE: &str = "validation.csv";
pub const TEST_FILE: &str = "test.csv";
pub const PROTOTYPES_FILE: &str = "prototypes.csv";
pub const CONFIG_FILE: &str = "synth_config.json";

/// `ground_truth.csv` row.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub cascade_id: String,
    pub true_binary: u8,
    pub true_fine: FineLabel,
    /// Empty for cascades without a weak label.
    pub is_noise: Option<u8>,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::write(path, e))?))
}

impl SynthCorpus {
    pub fn ground_truth(&self) -> Vec<GroundTruth> {
        self.truth
            .iter()
            .map(|t| GroundTruth {
                cascade_id: t.cascade_id.clone(),
                true_binary: t.true_binary,
                true_fine: t.true_fine,
                is_noise: t.is_noise().map(u8::from),
            })
            .collect()
    }

    pub fn labeled_rows(&self, ids: &[String]) -> Vec<LabeledRow> {
        let truth: HashMap<&str, _> = self.truth.iter().map(|t| (t.cascade_id.as_str(), t)).collect();
        ids.iter()
            .map(|id| LabeledRow {
                cascade_id: id.clone(),
                label: truth[id.as_str()].true_binary,
                fine_label: Some(truth[id.as_str()].true_fine),
            })
            .collect()
    }

    pub fn holdout(&self) -> Holdout {
        Holdout {
            validation: self.labeled_rows(&self.validation),
            test: self.labeled_rows(&self.test),
            prototypes: self.labeled_rows(&self.prototypes),
        }
    }

    /// True binary label of every news-linking cascade.
    pub fn truth_map(&self) -> HashMap<String, u8> {
        self.truth.iter().map(|t| (t.cascade_id.clone(), t.true_binary)).collect()
    }

    /// Writes every corpus file into `dir`, creating it if needed.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::write(dir, e))?;

        let path = dir.join(TWEETS_FILE);
        let mut w = create(&path)?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::write(&path, e))?;
        }
        w.flush().map_err(|e| Error::write(&path, e))?;

        self.sources.write_csv(create(&dir.join(SOURCES_FILE))?)?;
        write_ground_truth(create(&dir.join(GROUND_TRUTH_FILE))?, &self.ground_truth())?;

        let mut w = csv::Writer::from_writer(create(&dir.join(COMMUNITIES_FILE))?);
        w.write_record(["user_id", "community"])?;
        for (user, c) in &self.communities {
            w.write_record([user.as_str(), &c.to_string()])?;
        }
        w.flush().map_err(|e| Error::write(dir.join(COMMUNITIES_FILE), e))?;

        write_labeled(create(&dir.join(VALIDATION_FILE))?, &self.labeled_rows(&self.validation))?;
        write_labeled(create(&dir.join(TEST_FILE))?, &self.labeled_rows(&self.test))?;
        let protos: Vec<LabeledRow> = self.labeled_rows(&self.prototypes);
        write_labeled(create(&dir.join(PROTOTYPES_FILE))?, &protos)?;

        let path = dir.join(CONFIG_FILE);
        let mut w = create(&path)?;
        serde_json::to_writer_pretty(&mut w, &self.config)?;
        w.write_all(b"\n").map_err(|e| Error::write(&path, e))?;
        w.flush().map_err(|e| Error::write(&path, e))
    }
}

pub fn write_ground_truth<W: Write>(writer: W, rows: &[GroundTruth]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["cascade_id", "true_binary", "true_fine", "is_noise"])?;
    for r in rows {
        w.write_record([
            r.cascade_id.as_str(),
            &r.true_binary.to_string(),
            r.true_fine.as_str(),
            &r.is_noise.map(|n| n.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::write("ground truth", e))
}

pub fn read_ground_truth<R: Read>(reader: R) -> Result<Vec<GroundTruth>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let h = rdr.headers()?.clone();
    let col = |name: &str| {
        h.iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::schema("ground truth", name, "missing column"))
    };
    let (id, bin, fine, noise) = (col("cascade_id")?, col("true_binary")?, col("true_fine")?, col("is_noise")?);
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let at = format!("ground truth row {}", line + 2);
        let parse_bit = |field: &str, raw: &str| match raw.trim() {
            "0" => Ok(0u8),
            "1" => Ok(1u8),
            other => Err(Error::schema(&at, field, format!("expected 0 or 1, got {other:?}"))),
        };
        let raw_fine = rec.get(fine).unwrap_or("");
        out.push(GroundTruth {
            cascade_id: rec.get(id).unwrap_or("").to_string(),
            true_binary: parse_bit("true_binary", rec.get(bin).unwrap_or(""))?,
            true_fine: FineLabel::parse(raw_fine)
                .ok_or_else(|| Error::schema(&at, "true_fine", format!("unknown label {raw_fine:?}")))?,
            is_noise: match rec.get(noise).unwrap_or("").trim() {
                "" => None,
                raw => Some(parse_bit("is_noise", raw)?),
            },
        });
    }
    Ok(out)
}
