use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;
use serde_json::Value;

use super::TweetRecord;
use crate::error::{Error, Result};

/// Counters collected while reading a tweet stream.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct IngestStats {
    pub lines: usize,
    pub malformed: usize,
    pub duplicates: usize,
    pub users_below_min: usize,
    pub records_below_min: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Ingested {
    pub records: Vec<TweetRecord>,
    pub stats: IngestStats,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum IdRepr {
    Text(String),
    Number(u64),
}

impl IdRepr {
    fn into_string(self) -> String {
        match self {
            IdRepr::Text(s) => s,
            IdRepr::Number(n) => n.to_string(),
        }
    }
}

#[derive(Deserialize)]
struct RawTweet {
    tweet_id: Option<IdRepr>,
    user_id: Option<IdRepr>,
    timestamp: Option<Value>,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    retweeted_id: Option<IdRepr>,
    #[serde(default)]
    replied_to_id: Option<IdRepr>,
    #[serde(default)]
    quoted_id: Option<IdRepr>,
    #[serde(default)]
    urls: Option<Vec<String>>,
}

fn nonempty(id: Option<IdRepr>) -> Option<String> {
    id.map(IdRepr::into_string).filter(|s| !s.is_empty())
}

impl RawTweet {
    fn validate(self) -> Option<TweetRecord> {
        let tweet_id = nonempty(self.tweet_id)?;
        let user_id = nonempty(self.user_id)?;
        let timestamp = match self.timestamp? {
            Value::Number(n) => n.as_i64().filter(|t| *t >= 0)?,
            _ => return None,
        };
        Some(TweetRecord {
            tweet_id,
            user_id,
            timestamp,
            text: self.text.unwrap_or_default(),
            retweeted_id: nonempty(self.retweeted_id),
            replied_to_id: nonempty(self.replied_to_id),
            quoted_id: nonempty(self.quoted_id),
            urls: self.urls.unwrap_or_default(),
        })
    }
}

/// Reads a JSONL tweet stream from `path`, see [`parse_tweet_reader`].
pub fn parse_tweet_stream(path: impl AsRef<Path>, min_tweets_per_user: usize) -> Result<Ingested> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_tweet_reader(BufReader::new(file), min_tweets_per_user).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

/// Parses newline-delimited tweet objects.
///
/// Lines that are not JSON objects, or that lack a usable `tweet_id`,
/// `user_id` or non-negative integer `timestamp`, are counted as malformed
/// and skipped. Repeated tweet ids keep their first occurrence. Finally only
/// records of users with at least `min_tweets_per_user` retained tweets are
/// returned, in input order.
pub fn parse_tweet_reader<R: BufRead>(reader: R, min_tweets_per_user: usize) -> Result<Ingested> {
    let mut stats = IngestStats::default();
    let mut seen = HashSet::new();
    let mut records = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io("<stream>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines += 1;
        let record = serde_json::from_str::<RawTweet>(&line)
            .ok()
            .and_then(RawTweet::validate);
        let Some(record) = record else {
            stats.malformed += 1;
            continue;
        };
        if !seen.insert(record.tweet_id.clone()) {
            stats.duplicates += 1;
            continue;
        }
        records.push(record);
    }

    let mut per_user: HashMap<&str, usize> = HashMap::new();
    for r in &records {
        *per_user.entry(r.user_id.as_str()).or_default() += 1;
    }
    let low: HashSet<String> = per_user
        .iter()
        .filter(|(_, &n)| n < min_tweets_per_user)
        .map(|(u, _)| u.to_string())
        .collect();
    stats.users_below_min = low.len();
    let before = records.len();
    records.retain(|r| !low.contains(&r.user_id));
    stats.records_below_min = before - records.len();

    Ok(Ingested { records, stats })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(id: &str, user: &str, ts: i64) -> String {
        format!(r#"{{"tweet_id":"{id}","user_id":"{user}","timestamp":{ts},"text":"x","urls":[]}}"#)
    }

    #[test]
    fn activity_filter_keeps_only_users_with_enough_tweets() {
        let mut lines = Vec::new();
        for i in 0..5 {
            lines.push(line(&format!("a{i}"), "A", i));
        }
        for i in 0..4 {
            lines.push(line(&format!("b{i}"), "B", i));
        }
        let out = parse_tweet_reader(lines.join("\n").as_bytes(), 5).unwrap();
        assert_eq!(out.records.len(), 5);
        assert!(out.records.iter().all(|r| r.user_id == "A"));
        assert_eq!(out.stats.users_below_min, 1);
        assert_eq!(out.stats.records_below_min, 4);
    }

    #[test]
    fn empty_input() {
        let out = parse_tweet_reader(&b""[..], 1).unwrap();
        assert!(out.records.is_empty());
        assert_eq!(out.stats.malformed, 0);
    }

    #[test]
    fn malformed_lines_are_counted() {
        let text = [
            r#"{"user_id":"u","timestamp":1}"#,
            r#"{"tweet_id":"t","timestamp":1}"#,
            r#"{"tweet_id":"t","user_id":"u"}"#,
            r#"{"tweet_id":"t","user_id":"u","timestamp":-4}"#,
            r#"{"tweet_id":"t","user_id":"u","timestamp":"yesterday"}"#,
            "not json",
            r#"{"tweet_id":"ok","user_id":"u","timestamp":3,"text":"hi","retweeted_id":null}"#,
        ]
        .join("\n");
        let out = parse_tweet_reader(text.as_bytes(), 1).unwrap();
        assert_eq!(out.stats.malformed, 6);
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].retweeted_id, None);
    }

    #[test]
    fn numeric_ids_and_missing_optionals() {
        let text = r#"{"tweet_id":12,"user_id":7,"timestamp":5}"#;
        let out = parse_tweet_reader(text.as_bytes(), 1).unwrap();
        assert_eq!(out.records[0].tweet_id, "12");
        assert_eq!(out.records[0].text, "");
        assert!(out.records[0].urls.is_empty());
    }

    #[test]
    fn duplicates_keep_first_occurrence() {
        let text = [
            r#"{"tweet_id":"t","user_id":"u","timestamp":1,"text":"first"}"#,
            r#"{"tweet_id":"t","user_id":"u","timestamp":2,"text":"second"}"#,
        ]
        .join("\n");
        let out = parse_tweet_reader(text.as_bytes(), 1).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].text, "first");
        assert_eq!(out.stats.duplicates, 1);
    }

    #[test]
    fn missing_file_is_fatal() {
        let err = parse_tweet_stream("/nonexistent/tweets.jsonl", 1).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
