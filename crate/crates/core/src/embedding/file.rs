//! Plain-text embedding file: a `dim=<d>` header line followed by
//! `name<TAB>v1,v2,...,vd` lines.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::vector::Vector;

#[derive(Debug, Clone, Default)]
pub struct EmbeddingFile {
    pub dim: usize,
    pub entries: Vec<(String, Vector)>,
}

impl EmbeddingFile {
    pub fn parse<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let err = |line: usize, message: String| Error::Parse {
            source_name: source_name.to_owned(),
            line,
            message,
        };
        let dim = loop {
            let Some((idx, line)) = lines.next() else {
                return Err(err(1, "missing `dim=<d>` header".into()));
            };
            let line = line.map_err(|e| err(idx + 1, e.to_string()))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let value = line
                .strip_prefix("dim=")
                .ok_or_else(|| err(idx + 1, "expected `dim=<d>` header".into()))?;
            break value
                .trim()
                .parse::<usize>()
                .map_err(|e| err(idx + 1, format!("bad dimension: {e}")))?;
        };
        let mut entries = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| err(idx + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let (name, values) = line
                .split_once('\t')
                .ok_or_else(|| err(idx + 1, "expected `name<TAB>values`".into()))?;
            let comps = values
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| err(idx + 1, format!("bad component: {e}")))?;
            if comps.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: comps.len(),
                    context: Some(format!("{source_name}:{} `{name}`", idx + 1)),
                });
            }
            let v = Vector::new(comps);
            if !v.is_finite() {
                return Err(err(idx + 1, format!("non-finite component for `{name}`")));
            }
            entries.push((name.to_owned(), v));
        }
        Ok(EmbeddingFile { dim, entries })
    }

    pub fn render(&self) -> String {
        let mut out = format!("dim={}\n", self.dim);
        for (name, v) in &self.entries {
            out.push_str(name);
            out.push('\t');
            for (i, x) in v.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                // `Display` for f64 is the shortest exact round-trip form
                let _ = write!(out, "{x}");
            }
            out.push('\n');
        }
        out
    }

    pub fn into_map(self) -> HashMap<String, Vector> {
        self.entries.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixed_dimensions_rejected() {
        let text = "dim=3\na\t1,2,3\nb\t1,2\n";
        assert!(matches!(
            EmbeddingFile::parse(text.as_bytes(), "t"),
            Err(Error::Dimension { expected: 3, found: 2, .. })
        ));
    }

    #[test]
    fn render_round_trips_exactly() {
        let f = EmbeddingFile {
            dim: 2,
            entries: vec![("x y".into(), Vector::new(vec![0.1 + 0.2, -1e-300]))],
        };
        let back = EmbeddingFile::parse(f.render().as_bytes(), "t").unwrap();
        assert_eq!(back.entries, f.entries);
    }
}
