use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{MISINFO, RELIABLE};

/// Fine-grained factuality label of a post, in serialization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FineLabel {
    True,
    Debunk,
    MostlyTrue,
    Mixture,
    MostlyFalse,
    False,
    Unproven,
}

pub const N_FINE: usize = 7;

impl FineLabel {
    pub const ALL: [FineLabel; N_FINE] = [
        FineLabel::True,
        FineLabel::Debunk,
        FineLabel::MostlyTrue,
        FineLabel::Mixture,
        FineLabel::MostlyFalse,
        FineLabel::False,
        FineLabel::Unproven,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FineLabel::True => "true",
            FineLabel::Debunk => "debunk",
            FineLabel::MostlyTrue => "mostly_true",
            FineLabel::Mixture => "mixture",
            FineLabel::MostlyFalse => "mostly_false",
            FineLabel::False => "false",
            FineLabel::Unproven => "unproven",
        }
    }

    /// Accepts `mostly_true`, `mostly true` and `mostly-true`, any case.
    pub fn parse(s: &str) -> Option<Self> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Self::ALL.into_iter().find(|l| l.as_str() == key)
    }

    /// `{true, debunk, mostly_true}` are reliable, the rest misinformation.
    pub fn binarize(self) -> u8 {
        match self {
            FineLabel::True | FineLabel::Debunk | FineLabel::MostlyTrue => RELIABLE,
            _ => MISINFO,
        }
    }

    /// Position on the true..false spectrum; `None` for debunk and unproven.
    pub fn truth_ordinal(self) -> Option<u8> {
        match self {
            FineLabel::True => Some(0),
            FineLabel::MostlyTrue => Some(1),
            FineLabel::Mixture => Some(2),
            FineLabel::MostlyFalse => Some(3),
            FineLabel::False => Some(4),
            FineLabel::Debunk | FineLabel::Unproven => None,
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            FineLabel::True => "True",
            FineLabel::Debunk => "Debunk",
            FineLabel::MostlyTrue => "Mostly true",
            FineLabel::Mixture => "Mixture",
            FineLabel::MostlyFalse => "Mostly false",
            FineLabel::False => "False",
            FineLabel::Unproven => "Unproven",
        }
    }

    /// Annotation guideline definition.
    pub fn definition(self) -> &'static str {
        match self {
            FineLabel::True => "Primary elements of the claim are demonstrably true.",
            FineLabel::Debunk => "Tweet calls out or debunks inaccurate information.",
            FineLabel::MostlyTrue => {
                "Primary elements of a claim are demonstrably true, but some of the ancillary details surrounding the claim may be inaccurate."
            }
            FineLabel::Mixture => {
                "Claim has significant elements of both truth and falsehood (including for e.g. significant missing context or misleading which might cause one to be misled about truth)."
            }
            FineLabel::MostlyFalse => "Primary elements of a claim are false, but ancillary details may be accurate.",
            FineLabel::False => "Primary elements of a claim are false or conspiratorial.",
            FineLabel::Unproven => {
                "Insufficient evidence that it is true, but for which declaring it false would require a difficult (if not impossible) task of proving a negative."
            }
        }
    }
}

impl fmt::Display for FineLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}
