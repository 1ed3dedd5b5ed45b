use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::domain::suffixes;
use super::{host_of, normalize_domain, Cascade, Engagement, TweetStore, MISINFO, RELIABLE};
use crate::error::{Error, Result};

/// Credibility class of a news source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceClass {
    Reliable,
    Unreliable,
    Conspiracy,
}

impl SourceClass {
    pub fn binary(self) -> u8 {
        match self {
            SourceClass::Reliable => RELIABLE,
            SourceClass::Unreliable | SourceClass::Conspiracy => MISINFO,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SourceClass::Reliable => "reliable",
            SourceClass::Unreliable => "unreliable",
            SourceClass::Conspiracy => "conspiracy",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "reliable" => Some(SourceClass::Reliable),
            "unreliable" => Some(SourceClass::Unreliable),
            "conspiracy" => Some(SourceClass::Conspiracy),
            _ => None,
        }
    }
}

/// Normalized domain → credibility class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SourceList {
    entries: BTreeMap<String, SourceClass>,
}

impl SourceList {
    /// Adds a domain; a domain already listed under another class is rejected.
    pub fn insert(&mut self, domain: &str, class: SourceClass) -> Result<()> {
        let key = normalize_domain(domain);
        if key.is_empty() {
            return Err(Error::schema("source list", "domain", "empty domain"));
        }
        match self.entries.get(&key) {
            Some(&existing) if existing != class => Err(Error::schema(
                "source list",
                "label",
                format!(
                    "domain `{key}` listed as both {} and {}",
                    existing.as_str(),
                    class.as_str()
                ),
            )),
            _ => {
                self.entries.insert(key, class);
                Ok(())
            }
        }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, SourceClass)>) -> Result<Self> {
        let mut list = SourceList::default();
        for (d, c) in pairs {
            list.insert(d, c)?;
        }
        Ok(list)
    }

    /// Longest listed suffix of the URL's host, so subdomains resolve to
    /// their listed parent.
    pub fn lookup_url(&self, url: &str) -> Option<(&str, SourceClass)> {
        let host = host_of(url)?;
        let hit = suffixes(&host)
            .find_map(|s| self.entries.get_key_value(s).map(|(k, &c)| (k.as_str(), c)));
        hit
    }

    pub fn get(&self, domain: &str) -> Option<SourceClass> {
        self.entries.get(&normalize_domain(domain)).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, SourceClass)> {
        self.entries.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["domain", "label"])?;
        for (d, c) in self.iter() {
            w.write_record([d, c.as_str()])?;
        }
        w.flush().map_err(|e| Error::write("<source list>", e))?;
        Ok(())
    }
}

/// Parses a `domain,label` CSV.
pub fn read_source_list<R: Read>(reader: R) -> Result<SourceList> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::schema("source list", name, "missing column"))
    };
    let (d_col, l_col) = (col("domain")?, col("label")?);
    let mut list = SourceList::default();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let domain = rec.get(d_col).unwrap_or_default();
        let label = rec.get(l_col).unwrap_or_default();
        let class = SourceClass::parse(label).ok_or_else(|| {
            Error::schema(
                format!("source list row {}", row + 2),
                "label",
                format!("`{label}` is not one of reliable, unreliable, conspiracy"),
            )
        })?;
        list.insert(domain, class)?;
    }
    Ok(list)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakLabel {
    pub value: u8,
    pub source_class: SourceClass,
}

impl From<SourceClass> for WeakLabel {
    fn from(source_class: SourceClass) -> Self {
        WeakLabel {
            value: source_class.binary(),
            source_class,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeakLabeling {
    pub labels: BTreeMap<String, WeakLabel>,
    /// Listed domain that produced each label.
    pub domains: BTreeMap<String, String>,
    pub unlabeled: usize,
    pub conflicting: usize,
}

/// Labels each cascade from the listed domains its source post links to.
///
/// Cascades without a listed domain are left out. A source post linking
/// listed domains whose binary labels disagree is left out and counted as
/// conflicting; when they agree the first linked class is kept.
pub fn assign_weak_labels(cascades: &[Cascade], tweets: &TweetStore, sources: &SourceList) -> WeakLabeling {
    let mut out = WeakLabeling::default();
    for cascade in cascades {
        let urls = tweets
            .get(&cascade.source_tweet_id)
            .map(|t| t.urls.as_slice())
            .unwrap_or_default();
        let hits: Vec<(&str, SourceClass)> = urls.iter().filter_map(|u| sources.lookup_url(u)).collect();
        let Some(&(domain, first)) = hits.first() else {
            out.unlabeled += 1;
            continue;
        };
        if hits.iter().any(|&(_, c)| c.binary() != first.binary()) {
            out.conflicting += 1;
            continue;
        }
        out.labels.insert(cascade.cascade_id.clone(), first.into());
        out.domains.insert(cascade.cascade_id.clone(), domain.to_string());
    }
    out
}

/// Output row of the cascades JSONL file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeRecord {
    pub cascade_id: String,
    pub source_tweet_id: String,
    pub source_domain: Option<String>,
    pub weak_label: Option<u8>,
    pub source_class: Option<SourceClass>,
    pub engagements: Vec<Engagement>,
}

pub fn write_cascades_jsonl(
    path: impl AsRef<Path>,
    cascades: &[Cascade],
    labeling: Option<&WeakLabeling>,
) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::write(path, e))?;
    let mut w = BufWriter::new(file);
    for c in cascades {
        let label = labeling.and_then(|l| l.labels.get(&c.cascade_id));
        let domain = labeling
            .and_then(|l| l.domains.get(&c.cascade_id).cloned())
            .or_else(|| c.source_domain.clone());
        let rec = CascadeRecord {
            cascade_id: c.cascade_id.clone(),
            source_tweet_id: c.source_tweet_id.clone(),
            source_domain: domain,
            weak_label: label.map(|l| l.value),
            source_class: label.map(|l| l.source_class),
            engagements: c.engagements.clone(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n").map_err(|e| Error::write(path, e))?;
    }
    w.flush().map_err(|e| Error::write(path, e))
}
