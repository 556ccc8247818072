//! Self-describing text container for fitted models.
//!
//! Floats are stored as the hex of their IEEE-754 bits, so save → load → save
//! reproduces files byte for byte and models bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const MAGIC: &str = "fgm-ddo-model v1";

/// Kind tag, string metadata, and named flat `f64` arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelContainer {
    pub kind: String,
    pub meta: BTreeMap<String, String>,
    pub arrays: Vec<(String, Vec<f64>)>,
}

impl ModelContainer {
    pub fn meta_required(&self, key: &str) -> Result<&str> {
        self.meta
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Parse(format!("container missing meta key {key:?}")))
    }

    pub fn array_required(&self, name: &str) -> Result<&[f64]> {
        self.arrays
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, a)| a.as_slice())
            .ok_or_else(|| Error::Parse(format!("container missing array {name:?}")))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC}\nkind {}\n", self.kind);
        for (k, v) in &self.meta {
            let _ = writeln!(out, "meta {k} {v}");
        }
        for (name, values) in &self.arrays {
            let _ = writeln!(out, "array {name} {}", values.len());
            for chunk in values.chunks(8) {
                let line: Vec<String> = chunk
                    .iter()
                    .map(|v| format!("{:016x}", v.to_bits()))
                    .collect();
                let _ = writeln!(out, "{}", line.join(" "));
            }
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(l) if l == MAGIC => {}
            other => return Err(Error::Parse(format!("bad container magic: {other:?}"))),
        }
        let mut kind = String::new();
        let mut meta = BTreeMap::new();
        let mut arrays: Vec<(String, Vec<f64>)> = Vec::new();
        let mut pending: Option<(String, usize)> = None;
        for line in lines {
            if let Some((name, len)) = pending.clone() {
                let current = &mut arrays.last_mut().expect("array started").1;
                for token in line.split_whitespace() {
                    let bits = u64::from_str_radix(token, 16)
                        .map_err(|_| Error::Parse(format!("bad hex float {token:?} in {name}")))?;
                    current.push(f64::from_bits(bits));
                }
                if current.len() > len {
                    return Err(Error::Parse(format!("array {name} longer than declared")));
                }
                if current.len() == len {
                    pending = None;
                }
                continue;
            }
            if line == "end" {
                break;
            }
            let (tag, rest) = line
                .split_once(' ')
                .ok_or_else(|| Error::Parse(format!("bad container line {line:?}")))?;
            match tag {
                "kind" => kind = rest.to_string(),
                "meta" => {
                    let (k, v) = rest
                        .split_once(' ')
                        .ok_or_else(|| Error::Parse(format!("bad meta line {line:?}")))?;
                    meta.insert(k.to_string(), v.to_string());
                }
                "array" => {
                    let (name, len) = rest
                        .split_once(' ')
                        .ok_or_else(|| Error::Parse(format!("bad array line {line:?}")))?;
                    let len: usize = len
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad array length {len:?}")))?;
                    arrays.push((name.to_string(), Vec::with_capacity(len)));
                    if len > 0 {
                        pending = Some((name.to_string(), len));
                    }
                }
                _ => return Err(Error::Parse(format!("unknown container tag {tag:?}"))),
            }
        }
        if let Some((name, _)) = pending {
            return Err(Error::Parse(format!("array {name} truncated")));
        }
        if kind.is_empty() {
            return Err(Error::Parse("container missing kind".to_string()));
        }
        Ok(ModelContainer { kind, meta, arrays })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        ModelContainer::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let mut meta = BTreeMap::new();
        meta.insert("d".to_string(), "3".to_string());
        let c = ModelContainer {
            kind: "demo".to_string(),
            meta,
            arrays: vec![
                (
                    "params".to_string(),
                    vec![0.1, -2.5e-300, f64::MAX, 1.0 / 3.0, 0.0, -0.0],
                ),
                ("empty".to_string(), vec![]),
            ],
        };
        let text = c.to_text();
        let back = ModelContainer::from_text(&text).unwrap();
        assert_eq!(back.kind, "demo");
        assert_eq!(back.meta_required("d").unwrap(), "3");
        let a = c.array_required("params").unwrap();
        let b = back.array_required("params").unwrap();
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert!(back.array_required("empty").unwrap().is_empty());
        // Serialize again: byte identical.
        assert_eq!(text, back.to_text());
    }

    #[test]
    fn malformed_inputs_error() {
        assert!(ModelContainer::from_text("nope").is_err());
        assert!(ModelContainer::from_text("fgm-ddo-model v1\narray a 2\nffff\nend").is_err());
    }
}
