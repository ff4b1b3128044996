//! The metric-pair file format.
//!
//! A pair file is TOML:
//!
//! ```toml
//! name = "dini"                     # optional
//! notes = "free text"               # optional
//! dim = 2
//! coords = ["x", "y"]
//! g = [["x - y"], ["0", "x - y"]]   # full rows or lower triangle
//! gbar = [["(1/y - 1/x)/x"], ["0", "(1/y - 1/x)/y"]]
//! domain = [[1.05, 2.95], [0.05, 0.95]]
//! ```
//!
//! Matrix entries use the expression grammar of [`crate::expr`]. A full
//! matrix is symmetrised on load; mirrored entries must be the same string
//! or parse to the same expression. Diagnostics carry 1-based line and
//! column numbers into the file.

use std::ops::Range;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;
use toml::Spanned;

use crate::expr::{is_function_name, Expression};
use crate::geometry::{GeometryError, MetricField};
use crate::projective::{PairError, ProjectivePair};

#[derive(Debug, Error)]
pub enum PairFileError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{line}:{column}: {message}")]
    Invalid {
        line: usize,
        column: usize,
        message: String,
    },
}

impl PairFileError {
    /// 1-based `(line, column)` of the diagnostic, if it has one.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            PairFileError::Io { .. } => None,
            PairFileError::Invalid { line, column, .. } => Some((*line, *column)),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    name: Option<String>,
    notes: Option<String>,
    dim: Spanned<usize>,
    coords: Spanned<Vec<Spanned<String>>>,
    g: Spanned<Vec<Vec<Spanned<String>>>>,
    gbar: Spanned<Vec<Vec<Spanned<String>>>>,
    domain: Spanned<Vec<[f64; 2]>>,
}

/// A parsed pair file.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFile {
    pub name: Option<String>,
    pub notes: Option<String>,
    pub pair: ProjectivePair,
}

fn line_column(source: &str, offset: usize) -> (usize, usize) {
    let offset = offset.min(source.len());
    let before = &source[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(offset, |nl| offset - nl - 1) + 1;
    (line, column)
}

fn invalid(source: &str, offset: usize, message: impl Into<String>) -> PairFileError {
    let (line, column) = line_column(source, offset);
    PairFileError::Invalid {
        line,
        column,
        message: message.into(),
    }
}

/// Offset of character `inner` of a string literal spanning `span`.
///
/// Exact for basic strings without escapes, which is what pair files use.
fn literal_offset(span: &Range<usize>, inner: usize) -> usize {
    span.start + 1 + inner
}

fn metric(
    source: &str,
    field: &str,
    coords: &[String],
    rows: &Spanned<Vec<Vec<Spanned<String>>>>,
) -> Result<MetricField, PairFileError> {
    let texts: Vec<Vec<&str>> = rows
        .get_ref()
        .iter()
        .map(|r| r.iter().map(|e| e.get_ref().as_str()).collect())
        .collect();
    MetricField::parse(coords, &texts).map_err(|err| match err {
        GeometryError::Parse { row, col, source: e } => {
            let span = rows.get_ref()[row][col].span();
            invalid(
                source,
                literal_offset(&span, e.offset()),
                format!("{field}[{}][{}]: {e}", row + 1, col + 1),
            )
        }
        GeometryError::Asymmetric(i, j) => invalid(
            source,
            rows.get_ref()[i][j].span().start,
            format!(
                "{field}[{}][{}] and {field}[{}][{}] disagree",
                i + 1,
                j + 1,
                j + 1,
                i + 1
            ),
        ),
        other => invalid(source, rows.span().start, format!("{field}: {other}")),
    })
}

/// Parses a pair file from text.
pub fn parse_pair_file(source: &str) -> Result<PairFile, PairFileError> {
    let raw: RawPair = toml::from_str(source).map_err(|e| {
        let offset = e.span().map_or(0, |s| s.start);
        invalid(source, offset, e.message().to_string())
    })?;
    let dim = *raw.dim.get_ref();
    if dim == 0 {
        return Err(invalid(source, raw.dim.span().start, "dim must be positive"));
    }
    let coords: Vec<String> = raw.coords.get_ref().iter().map(|c| c.get_ref().clone()).collect();
    if coords.len() != dim {
        return Err(invalid(
            source,
            raw.coords.span().start,
            format!("{} coordinates declared for dim = {dim}", coords.len()),
        ));
    }
    for (k, c) in raw.coords.get_ref().iter().enumerate() {
        let name = c.get_ref();
        let valid = name
            .chars()
            .next()
            .is_some_and(|ch| ch.is_ascii_alphabetic() || ch == '_')
            && name.chars().all(|ch| ch.is_ascii_alphanumeric() || ch == '_');
        if !valid || is_function_name(name) {
            return Err(invalid(
                source,
                c.span().start,
                format!("`{name}` is not a valid coordinate name"),
            ));
        }
        if coords[..k].contains(name) {
            return Err(invalid(
                source,
                c.span().start,
                format!("duplicate coordinate `{name}`"),
            ));
        }
    }
    let g = metric(source, "g", &coords, &raw.g)?;
    let gbar = metric(source, "gbar", &coords, &raw.gbar)?;
    let domain: Vec<(f64, f64)> = raw.domain.get_ref().iter().map(|[a, b]| (*a, *b)).collect();
    let pair = ProjectivePair::new(g, gbar, domain).map_err(|e| {
        let at = match e {
            PairError::CoordinateMismatch(..) => raw.coords.span().start,
            _ => raw.domain.span().start,
        };
        invalid(source, at, e.to_string())
    })?;
    Ok(PairFile {
        name: raw.name,
        notes: raw.notes,
        pair,
    })
}

/// Reads and parses a pair file from disk.
pub fn load_pair_file(path: &Path) -> Result<PairFile, PairFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| PairFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_pair_file(&text)
}

/// Serialises a pair back to the file format (full lower triangles).
pub fn write_pair_file(name: Option<&str>, notes: Option<&str>, pair: &ProjectivePair) -> String {
    let quote = |s: &str| toml::Value::String(s.to_string()).to_string();
    let mut out = String::new();
    if let Some(name) = name {
        out.push_str(&format!("name = {}\n", quote(name)));
    }
    if let Some(notes) = notes {
        out.push_str(&format!("notes = {}\n", quote(notes)));
    }
    out.push_str(&format!("dim = {}\n", pair.dim()));
    let coords: Vec<String> = pair.coordinates().iter().map(|c| quote(c)).collect();
    out.push_str(&format!("coords = [{}]\n", coords.join(", ")));
    for (field, m) in [("g", pair.g()), ("gbar", pair.gbar())] {
        let rows: Vec<String> = (0..pair.dim())
            .map(|i| {
                let entries: Vec<String> =
                    (0..=i).map(|j| quote(&m.component(i, j).to_string())).collect();
                format!("[{}]", entries.join(", "))
            })
            .collect();
        out.push_str(&format!("{field} = [{}]\n", rows.join(", ")));
    }
    let domain: Vec<String> = pair
        .domain()
        .iter()
        .map(|(lo, hi)| format!("[{lo:?}, {hi:?}]"))
        .collect();
    out.push_str(&format!("domain = [{}]\n", domain.join(", ")));
    out
}

/// Parses an expression against a pair's coordinates (for test functions).
pub fn parse_function(pair: &ProjectivePair, text: &str) -> Result<Expression, crate::expr::ParseError> {
    Expression::parse(text, pair.coordinates())
}

#[cfg(test)]
mod tests {
    use super::*;

    const DINI: &str = r#"name = "dini"
dim = 2
coords = ["x", "y"]
g = [["x - y"], ["0", "x - y"]]
gbar = [["(1/y - 1/x)/x"], ["0", "(1/y - 1/x)/y"]]
domain = [[1.05, 2.95], [0.05, 0.95]]
"#;

    #[test]
    fn parses_lower_triangle() {
        let f = parse_pair_file(DINI).unwrap();
        assert_eq!(f.name.as_deref(), Some("dini"));
        assert_eq!(f.pair.dim(), 2);
        assert_eq!(f.pair.g().component(0, 1).to_string(), "0.0");
        assert_eq!(f.pair.domain()[1], (0.05, 0.95));
    }

    #[test]
    fn expression_error_is_positioned() {
        let bad = DINI.replace("(1/y - 1/x)/y", "(1/y - 1/x)/");
        let err = parse_pair_file(&bad).unwrap_err();
        // line 5; the entry literal starts after `gbar = [["(1/y - 1/x)/x"], ["0", `
        let (line, column) = err.position().unwrap();
        assert_eq!(line, 5);
        let literal_start = bad.lines().nth(4).unwrap().find("\"(1/y - 1/x)/\"").unwrap();
        assert_eq!(column, literal_start + 1 + 1 + "(1/y - 1/x)/".len());
        assert!(err.to_string().contains("gbar[2][2]"), "{err}");
    }

    #[test]
    fn unknown_identifier_is_positioned() {
        let bad = DINI.replace("[\"x - y\"], [\"0\"", "[\"x - z\"], [\"0\"");
        let err = parse_pair_file(&bad).unwrap_err();
        assert_eq!(err.position(), Some((4, 12)));
    }

    #[test]
    fn toml_error_is_positioned() {
        let bad = DINI.replace("dim = 2", "dim = ");
        let err = parse_pair_file(&bad).unwrap_err();
        assert_eq!(err.position().unwrap().0, 2);
    }

    #[test]
    fn structural_errors() {
        let bad = DINI.replace("coords = [\"x\", \"y\"]", "coords = [\"x\"]");
        assert!(parse_pair_file(&bad).unwrap_err().to_string().contains("coordinates declared"));
        let bad = DINI.replace("coords = [\"x\", \"y\"]", "coords = [\"x\", \"sin\"]");
        assert!(parse_pair_file(&bad).is_err());
        let bad = DINI.replace("[0.05, 0.95]", "[0.95, 0.05]");
        assert!(parse_pair_file(&bad).unwrap_err().to_string().contains("empty domain"));
        let bad = DINI.replace("g = [[\"x - y\"], [\"0\", \"x - y\"]]", "g = [[\"x - y\", \"1\"], [\"0\", \"x - y\"]]");
        assert!(parse_pair_file(&bad).unwrap_err().to_string().contains("disagree"));
    }

    #[test]
    fn write_then_parse() {
        let f = parse_pair_file(DINI).unwrap();
        let text = write_pair_file(f.name.as_deref(), None, &f.pair);
        let again = parse_pair_file(&text).unwrap();
        assert_eq!(again.pair, f.pair);
    }
}
