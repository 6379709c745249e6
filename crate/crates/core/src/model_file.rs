//! Plain-text matrix files.
//!
//! A file is a sequence of named sections. A section name sits alone on its
//! line and is followed by the matrix rows as whitespace-separated decimals.
//! `#` starts a comment. Plant models use the sections `A`, `B`, `W`, `Q`,
//! `R` and `P0`.
//!
//! ```text
//! # scalar random walk
//! A
//! 1
//! B
//! 1
//! W
//! 1
//! Q
//! 1
//! R
//! 1
//! P0
//! 1
//! ```

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;

use crate::lqr::PlantModel;
use crate::matrix::SymMatrix;
use crate::sim::fmt_num;

pub const MODEL_SECTIONS: [&str; 6] = ["A", "B", "W", "Q", "R", "P0"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    /// 1-based line of the section header.
    pub line: usize,
    pub matrix: DMatrix<f64>,
}

fn is_section_name(token: &str) -> bool {
    token
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic())
        && token.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && token.parse::<f64>().is_err()
}

/// Splits `text` into named matrices. Every row of a section must have the
/// same number of entries.
pub fn parse_sections(text: &str) -> Result<Vec<Section>, ParseError> {
    let mut sections: Vec<(String, usize, Vec<Vec<f64>>, Vec<usize>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() == 1 && is_section_name(tokens[0]) {
            let name = tokens[0].to_string();
            if sections.iter().any(|(n, ..)| *n == name) {
                return Err(ParseError::at(lineno, format!("duplicate section {name}")));
            }
            sections.push((name, lineno, Vec::new(), Vec::new()));
            continue;
        }
        let Some((name, _, rows, lines)) = sections.last_mut() else {
            return Err(ParseError::at(lineno, "matrix row before any section name"));
        };
        let row = tokens
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        ParseError::at(lineno, format!("invalid number {t:?} in section {name}"))
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(ParseError::at(
                    lineno,
                    format!(
                        "section {name}: row has {} entries, expected {}",
                        row.len(),
                        first.len()
                    ),
                ));
            }
        }
        rows.push(row);
        lines.push(lineno);
    }
    sections
        .into_iter()
        .map(|(name, line, rows, _)| {
            if rows.is_empty() {
                return Err(ParseError::at(line, format!("section {name} is empty")));
            }
            let ncols = rows[0].len();
            let matrix = DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten());
            Ok(Section { name, line, matrix })
        })
        .collect()
}

fn take<'a>(sections: &'a [Section], name: &str) -> Result<&'a Section, ParseError> {
    sections
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| ParseError::general(format!("missing section {name}")))
}

fn expect_shape(s: &Section, rows: usize, cols: usize) -> Result<(), ParseError> {
    if s.matrix.shape() != (rows, cols) {
        return Err(ParseError::at(
            s.line,
            format!(
                "section {} is {}x{}, expected {rows}x{cols}",
                s.name,
                s.matrix.nrows(),
                s.matrix.ncols()
            ),
        ));
    }
    Ok(())
}

fn symmetric(s: &Section) -> Result<SymMatrix, ParseError> {
    let m = &s.matrix;
    let scale = m.amax().max(1.0);
    if (m - m.transpose()).amax() > 1e-9 * scale {
        return Err(ParseError::at(
            s.line,
            format!("section {} is not symmetric", s.name),
        ));
    }
    Ok(SymMatrix::symmetrize(m.clone()))
}

/// The matrices of a plant model, shape-checked but not yet validated.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMatrices {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub w: SymMatrix,
    pub q: SymMatrix,
    pub r: SymMatrix,
    pub p_prior: SymMatrix,
}

impl ModelMatrices {
    pub fn into_model(self) -> crate::Result<PlantModel> {
        PlantModel::new(self.a, self.b, self.w, self.q, self.r, self.p_prior)
    }
}

pub fn parse_model(text: &str) -> Result<ModelMatrices, ParseError> {
    let sections = parse_sections(text)?;
    if let Some(s) = sections
        .iter()
        .find(|s| !MODEL_SECTIONS.contains(&s.name.as_str()))
    {
        return Err(ParseError::at(s.line, format!("unknown section {}", s.name)));
    }
    let found: Vec<&Section> = MODEL_SECTIONS
        .iter()
        .map(|n| take(&sections, n))
        .collect::<Result<_, _>>()?;
    let [a, b, w, q, r, p0] = found[..] else {
        unreachable!("six sections")
    };
    let n = a.matrix.nrows();
    expect_shape(a, n, n)?;
    let m = b.matrix.ncols();
    expect_shape(b, n, m)?;
    for s in [w, q, p0] {
        expect_shape(s, n, n)?;
    }
    expect_shape(r, m, m)?;
    Ok(ModelMatrices {
        a: a.matrix.clone(),
        b: b.matrix.clone(),
        w: symmetric(w)?,
        q: symmetric(q)?,
        r: symmetric(r)?,
        p_prior: symmetric(p0)?,
    })
}

pub fn read_model(path: &Path) -> Result<ModelMatrices, ParseError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ParseError::general(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text)
}

/// Renders one section with 12 significant digits.
pub fn format_section(name: &str, m: &DMatrix<f64>) -> String {
    let mut out = format!("{name}\n");
    for i in 0..m.nrows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| fmt_num(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn format_model(model: &PlantModel) -> String {
    [
        ("A", model.a.clone()),
        ("B", model.b.clone()),
        ("W", model.w.as_matrix().clone()),
        ("Q", model.q.as_matrix().clone()),
        ("R", model.r.as_matrix().clone()),
        ("P0", model.p_prior.as_matrix().clone()),
    ]
    .iter()
    .map(|(n, m)| format_section(n, m))
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = "# golden\nA\n1\nB\n1\nW\n1\nQ\n1\nR\n1   # control weight\nP0\n1\n";

    #[test]
    fn parses_scalar_model() {
        let m = parse_model(SCALAR).unwrap();
        assert_eq!(m.a, DMatrix::from_element(1, 1, 1.0));
        assert_eq!(m.r.as_matrix()[(0, 0)], 1.0);
        m.into_model().unwrap();
    }

    #[test]
    fn missing_section_named() {
        let text = SCALAR.replace("R\n1   # control weight\n", "");
        let err = parse_model(&text).unwrap_err();
        assert_eq!(err.to_string(), "missing section R");
    }

    #[test]
    fn ragged_row_has_line_number() {
        let err = parse_sections("A\n1 2\n3\n").unwrap_err();
        assert_eq!(err.line, Some(3));
    }

    #[test]
    fn shape_mismatch_has_line_number() {
        let text = "A\n1 0\n0 1\nB\n1\nW\n1\nQ\n1 0\n0 1\nR\n1\nP0\n1 0\n0 1\n";
        let err = parse_model(text).unwrap_err();
        assert_eq!(err.line, Some(4));
        assert!(err.message.contains("section B"));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_sections("1 2\n").is_err());
        assert_eq!(parse_sections("A\n1 x\n").unwrap_err().line, Some(2));
        assert!(parse_model(&format!("{SCALAR}Z\n1\n")).is_err());
        assert!(parse_sections("A\n1\nA\n2\n").is_err());
    }

    #[test]
    fn format_round_trips() {
        let model = parse_model(SCALAR).unwrap().into_model().unwrap();
        let again = parse_model(&format_model(&model)).unwrap().into_model().unwrap();
        assert_eq!(model.a, again.a);
        assert_eq!(model.p_prior, again.p_prior);
    }
}
