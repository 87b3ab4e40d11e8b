use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, Utc};
use serde::{Deserialize, Serialize};

use super::vocab::ClassLabel;

/// Axis-aligned box in pixel coordinates.
///
/// Only constructible through [`BBox::new`], so every value satisfies
/// `0 <= min < max` on both axes with finite coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

/// Which coordinate made a box invalid, and why.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxError {
    pub field: &'static str,
    pub message: String,
}

impl fmt::Display for BoxError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for BoxError {}

impl BBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, BoxError> {
        let fields = [
            ("x_min", x_min),
            ("y_min", y_min),
            ("x_max", x_max),
            ("y_max", y_max),
        ];
        for (field, v) in fields {
            if !v.is_finite() {
                return Err(BoxError {
                    field,
                    message: format!("coordinate {v} is not finite"),
                });
            }
            if v < 0.0 {
                return Err(BoxError {
                    field,
                    message: format!("coordinate {v} is negative"),
                });
            }
        }
        if x_min >= x_max {
            return Err(BoxError {
                field: "x_max",
                message: format!("x_max {x_max} must exceed x_min {x_min}"),
            });
        }
        if y_min >= y_max {
            return Err(BoxError {
                field: "y_max",
                message: format!("y_max {y_max} must exceed y_min {y_min}"),
            });
        }
        Ok(BBox {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn y_min(&self) -> f64 {
        self.y_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn y_max(&self) -> f64 {
        self.y_max
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }
}

impl<'de> Deserialize<'de> for BBox {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            x_min: f64,
            y_min: f64,
            x_max: f64,
            y_max: f64,
        }
        let r = Raw::deserialize(d)?;
        BBox::new(r.x_min, r.y_min, r.x_max, r.y_max).map_err(serde::de::Error::custom)
    }
}

/// One box emitted by the external detector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub image_id: String,
    pub label: ClassLabel,
    pub bbox: BBox,
    pub confidence: f64,
}

/// One hand-labelled ground-truth box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub image_id: String,
    pub label: ClassLabel,
    pub bbox: BBox,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post_id: String,
    pub timestamp: DateTime<Utc>,
    pub retweets: u64,
    pub likes: u64,
    pub image_ids: Vec<String>,
}

impl PostRecord {
    /// Calendar day used for daily binning (UTC).
    pub fn date(&self) -> NaiveDate {
        self.timestamp.date_naive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Attack,
    Other,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Attack => "attack",
            EventKind::Other => "other",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "attack" => Ok(EventKind::Attack),
            "other" => Ok(EventKind::Other),
            other => Err(format!(
                "unknown event kind `{other}` (expected attack|other)"
            )),
        }
    }
}

/// A single offline conflict event (one row of an ACLED-style export).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventRecord {
    pub date: NaiveDate,
    pub kind: EventKind,
    pub fatalities: u64,
}
