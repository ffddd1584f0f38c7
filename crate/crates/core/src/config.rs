//! All tunables in one place, loadable from a flat `key = value` file.
//!
//! Keys are dotted paths into [`Params`], for example `mark.target_psnr`,
//! `detect.t_ihm` or `bbox.alpha`. Values are JSON scalars; bare words are
//! taken as strings. `#` starts a comment.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bbox::BoxParams;
use crate::embedder::MarkParams;
use crate::error::{Error, Result};
use crate::localizer::DetectParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayloadParams {
    /// Number of payload bits to read back.
    pub bits: usize,
    /// Size of the marked image before capture, when known.
    pub nominal_size: Option<(usize, usize)>,
}

impl Default for PayloadParams {
    fn default() -> Self {
        Self {
            bits: 16,
            nominal_size: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub mark: MarkParams,
    pub detect: DetectParams,
    pub bbox: BoxParams,
    pub payload: PayloadParams,
}

impl Default for Params {
    fn default() -> Self {
        let mark = MarkParams::default();
        Self {
            detect: DetectParams::from_mark(&mark),
            mark,
            bbox: BoxParams::default(),
            payload: PayloadParams::default(),
        }
    }
}

fn parse_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

impl Params {
    pub fn validate(&self) -> Result<()> {
        self.mark.validate()?;
        self.detect.validate()?;
        self.bbox.validate()
    }

    /// Applies one `dotted.key = value` override.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut tree = serde_json::to_value(&*self).expect("params serialize");
        let mut node = &mut tree;
        for part in key.split('.') {
            node = node
                .as_object_mut()
                .and_then(|m| m.get_mut(part))
                .ok_or_else(|| Error::Config(format!("unknown key `{key}`")))?;
        }
        if node.is_object() {
            return Err(Error::Config(format!("`{key}` is a section, not a value")));
        }
        *node = parse_value(raw.trim());
        *self = serde_json::from_value(tree)
            .map_err(|e| Error::Config(format!("bad value for `{key}`: {e}")))?;
        Ok(())
    }

    /// Applies every `key = value` line of `text`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k.trim(), v)
                .map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut p = Self::default();
        p.apply_text(&text)?;
        p.validate()?;
        Ok(p)
    }

    /// Every key with its current value, one `key = value` line each.
    pub fn to_text(&self) -> String {
        fn walk(prefix: &str, v: &Value, out: &mut String) {
            match v {
                Value::Object(m) => {
                    for (k, child) in m {
                        let key = if prefix.is_empty() {
                            k.clone()
                        } else {
                            format!("{prefix}.{k}")
                        };
                        walk(&key, child, out);
                    }
                }
                other => out.push_str(&format!("{prefix} = {other}\n")),
            }
        }
        let mut out = String::new();
        walk("", &serde_json::to_value(self).expect("params serialize"), &mut out);
        out
    }
}
