//! Strict CSV: UTF-8, LF line endings, '.' decimals, exact headers.

use std::path::Path;

use crate::error::{CliError, CliResult};

/// A cell written to CSV. `Empty` marks a value deliberately not computed.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

/// Shortest round-trip decimal; exponent form outside [1e-5, 1e16).
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_number(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Parsed strict CSV with string cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvData {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column; every cell must be a plain '.'-decimal number.
    pub fn numbers(&self, name: &str) -> CliResult<Vec<f64>> {
        let j = self
            .column(name)
            .ok_or_else(|| CliError::Data(format!("column '{name}' not present")))?;
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| parse_number(&r[j]).map_err(|m| CliError::Data(format!("row {}, column '{name}': {m}", i + 2))))
            .collect()
    }

    pub fn strings(&self, name: &str) -> CliResult<Vec<String>> {
        let j = self
            .column(name)
            .ok_or_else(|| CliError::Data(format!("column '{name}' not present")))?;
        Ok(self.rows.iter().map(|r| r[j].clone()).collect())
    }
}

/// Plain decimal or exponent notation only; no locale separators, no
/// inf/nan, no surrounding whitespace.
pub fn parse_number(s: &str) -> Result<f64, String> {
    if s.is_empty() {
        return Err("empty cell".into());
    }
    if !s.bytes().all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E')) {
        return Err(format!("'{s}' is not a '.'-decimal number"));
    }
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("'{s}' is not a finite number"))
}

/// Describe how `found` differs from `expected`.
pub fn header_diff(expected: &[&str], found: &[String]) -> String {
    let missing: Vec<&str> = expected.iter().copied().filter(|e| !found.iter().any(|f| f == e)).collect();
    let unexpected: Vec<&str> = found
        .iter()
        .map(String::as_str)
        .filter(|f| !expected.contains(f))
        .collect();
    let mut msg = format!("expected columns [{}], found [{}]", expected.join(","), found.join(","));
    if !missing.is_empty() {
        msg.push_str(&format!("; missing: {}", missing.join(",")));
    }
    if !unexpected.is_empty() {
        msg.push_str(&format!("; unexpected: {}", unexpected.join(",")));
    }
    if missing.is_empty() && unexpected.is_empty() {
        msg.push_str("; same columns in a different order");
    }
    msg
}

pub fn parse_strict(bytes: &[u8], expected: &[&str]) -> CliResult<CsvData> {
    let text = std::str::from_utf8(bytes).map_err(|e| CliError::Data(format!("input is not UTF-8: {e}")))?;
    if text.starts_with('\u{feff}') {
        return Err(CliError::Data("input starts with a byte-order mark".into()));
    }
    if let Some(pos) = text.find('\r') {
        let line = text[..pos].matches('\n').count() + 1;
        return Err(CliError::Data(format!("CR line ending at line {line}; only LF is accepted")));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Data(format!("unreadable header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(CliError::Data(format!("column mismatch: {}", header_diff(expected, &header))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data(format!("malformed CSV: {e}")))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    if rows.is_empty() {
        return Err(CliError::Data("no data rows".into()));
    }
    Ok(CsvData { header, rows })
}

pub fn read_strict(path: &Path, expected: &[&str]) -> CliResult<(CsvData, Vec<u8>)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let data = parse_strict(&bytes, expected)?;
    Ok((data, bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_lf_and_round_trip_numbers() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec![Cell::Num(0.1 + 0.2), Cell::Empty]);
        t.push(vec![Cell::Num(1e-20), Cell::Num(-3.5e20)]);
        let bytes = t.to_bytes();
        let s = String::from_utf8(bytes.clone()).unwrap();
        assert!(!s.contains('\r'));
        assert_eq!(s, "a,b\n0.30000000000000004,\n1e-20,-3.5e20\n");
        let d = parse_strict(b"a,b\n0.30000000000000004,1e-20\n", &["a", "b"]).unwrap();
        assert_eq!(d.numbers("a").unwrap()[0], 0.1 + 0.2);
        assert_eq!(d.numbers("b").unwrap()[0], 1e-20);
    }

    #[test]
    fn rejects_loose_input() {
        assert!(parse_strict(b"a,b\r\n1,2\r\n", &["a", "b"]).is_err());
        let d = parse_strict(b"a\n\"1,5\"\n", &["a"]).unwrap();
        assert!(d.numbers("a").is_err());
        let d = parse_strict(b"a\nNaN\n", &["a"]).unwrap();
        assert!(d.numbers("a").is_err());
        assert!(parse_strict(b"a\n", &["a"]).is_err());
        assert!(parse_strict(&[b'a', b'\n', 0xff, b'\n'], &["a"]).is_err());
    }

    #[test]
    fn header_mismatch_is_described() {
        let err = parse_strict(b"x,t\n1,2\n", &["detuning_hz", "transmittance"]).unwrap_err().to_string();
        assert!(err.contains("missing: detuning_hz,transmittance"), "{err}");
        assert!(err.contains("unexpected: x,t"), "{err}");
        let err = parse_strict(b"b,a\n1,2\n", &["a", "b"]).unwrap_err().to_string();
        assert!(err.contains("different order"), "{err}");
    }

    #[test]
    fn number_formats() {
        for v in [1.0, -2.5, 352_937_837.0, 1e-7, 6.02e23, f64::MIN_POSITIVE] {
            assert_eq!(parse_number(&format_number(v)).unwrap(), v);
        }
    }
}
