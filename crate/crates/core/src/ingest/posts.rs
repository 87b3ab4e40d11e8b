use std::collections::HashSet;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use serde_json::{Map, Value};

use super::records::PostRecord;
use super::{read_source, source_name};
use crate::error::{Error, Result};

pub fn parse_posts(path: &Path) -> Result<Vec<PostRecord>> {
    parse_posts_str(&read_source(path)?, &source_name(path))
}

/// Parse JSON-lines posts. Blank lines are skipped but still counted.
pub fn parse_posts_str(text: &str, source: &str) -> Result<Vec<PostRecord>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(raw)
            .map_err(|e| Error::input(source, line, "<json>", format!("malformed JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::input(source, line, "<json>", "expected a JSON object"))?;
        let post = post_from_object(obj, source, line)?;
        if !seen.insert(post.post_id.clone()) {
            return Err(Error::input(
                source,
                line,
                "post_id",
                format!("duplicate post_id `{}`", post.post_id),
            ));
        }
        out.push(post);
    }
    Ok(out)
}

fn field<'a>(
    obj: &'a Map<String, Value>,
    source: &str,
    line: usize,
    name: &str,
) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| Error::input(source, line, name, "missing field"))
}

fn count(obj: &Map<String, Value>, source: &str, line: usize, name: &str) -> Result<u64> {
    let v = field(obj, source, line, name)?;
    if let Some(n) = v.as_u64() {
        return Ok(n);
    }
    match v.as_i64() {
        Some(n) if n < 0 => Err(Error::input(
            source,
            line,
            name,
            format!("negative count {n}"),
        )),
        _ => Err(Error::input(
            source,
            line,
            name,
            format!("expected a nonnegative integer, got {v}"),
        )),
    }
}

fn post_from_object(obj: &Map<String, Value>, source: &str, line: usize) -> Result<PostRecord> {
    let post_id = match field(obj, source, line, "post_id")? {
        Value::String(s) if !s.is_empty() => s.clone(),
        Value::Number(n) => n.to_string(),
        other => {
            return Err(Error::input(
                source,
                line,
                "post_id",
                format!("expected a non-empty string, got {other}"),
            ))
        }
    };
    let ts_raw = field(obj, source, line, "timestamp")?
        .as_str()
        .ok_or_else(|| Error::input(source, line, "timestamp", "expected a string"))?;
    let timestamp = parse_timestamp(ts_raw).ok_or_else(|| {
        Error::input(
            source,
            line,
            "timestamp",
            format!("unparseable ISO-8601 timestamp `{ts_raw}`"),
        )
    })?;
    let retweets = count(obj, source, line, "retweets")?;
    let likes = count(obj, source, line, "likes")?;
    let image_ids = field(obj, source, line, "image_ids")?
        .as_array()
        .ok_or_else(|| Error::input(source, line, "image_ids", "expected an array of strings"))?
        .iter()
        .map(|v| match v.as_str() {
            Some(s) if !s.is_empty() => Ok(s.to_owned()),
            _ => Err(Error::input(
                source,
                line,
                "image_ids",
                format!("invalid image id {v}"),
            )),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PostRecord {
        post_id,
        timestamp,
        retweets,
        likes,
        image_ids,
    })
}

/// RFC 3339 with any offset, or a naive date-time taken as UTC.
pub(crate) fn parse_timestamp(raw: &str) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt.with_timezone(&Utc));
    }
    ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(raw, fmt).ok())
        .map(|n| n.and_utc())
}

/// Serialise posts back to JSON lines in the same schema the parser reads.
pub fn write_posts(posts: &[PostRecord]) -> String {
    let mut out = String::new();
    for p in posts {
        let v = serde_json::json!({
            "post_id": p.post_id,
            "timestamp": p.timestamp.to_rfc3339_opts(SecondsFormat::AutoSi, true),
            "retweets": p.retweets,
            "likes": p.likes,
            "image_ids": p.image_ids,
        });
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}
