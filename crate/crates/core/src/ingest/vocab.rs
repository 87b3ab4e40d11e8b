use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Labels known out of the box: the five hand-annotated weapon classes
/// followed by the twelve classes of the supplemental military-asset set.
pub const DEFAULT_LABELS: [&str; 17] = [
    "rpg",
    "insignia",
    "grenade",
    "land mine",
    "anti-tank",
    "military tank",
    "military aircraft",
    "soldier",
    "camouflage soldier",
    "military vehicle",
    "military warship",
    "weapon",
    "military truck",
    "military artillery",
    "civilian vehicle",
    "civilian",
    "trench",
];

/// Environment variable that may point at a vocabulary file.
pub const VOCAB_ENV: &str = "MATERIEL_PULSE_VOCAB";

/// Lowercase and collapse runs of whitespace to a single space.
pub fn normalize_label(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A normalised object class name.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassLabel(String);

impl ClassLabel {
    /// Normalise `raw` without checking vocabulary membership.
    ///
    /// Returns `None` if nothing is left after normalisation.
    pub fn new(raw: &str) -> Option<Self> {
        let norm = normalize_label(raw);
        (!norm.is_empty()).then_some(ClassLabel(norm))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for ClassLabel {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// The active set of class labels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    labels: BTreeSet<ClassLabel>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary {
            labels: DEFAULT_LABELS
                .iter()
                .filter_map(|l| ClassLabel::new(l))
                .collect(),
        }
    }
}

impl Vocabulary {
    pub fn from_labels<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let labels: BTreeSet<_> = labels
            .into_iter()
            .filter_map(|l| ClassLabel::new(l.as_ref()))
            .collect();
        if labels.is_empty() {
            return Err(Error::InvalidArgument("vocabulary is empty".into()));
        }
        Ok(Vocabulary { labels })
    }

    /// One label per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_labels(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn contains(&self, label: &ClassLabel) -> bool {
        self.labels.contains(label)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ClassLabel> {
        self.labels.iter()
    }

    /// Normalise `raw` and check membership. The error string is the reason
    /// only; callers attach position information.
    pub fn resolve(
        &self,
        raw: &str,
        allow_unknown: bool,
    ) -> std::result::Result<ClassLabel, String> {
        let label = ClassLabel::new(raw).ok_or_else(|| "empty label".to_owned())?;
        if allow_unknown || self.contains(&label) {
            Ok(label)
        } else {
            Err(format!("unknown label `{label}`"))
        }
    }
}
