//! Minimal RFC 4180 CSV output: comma-separated, CRLF-free (plain `\n`),
//! fields quoted only when they contain a comma, quote, or newline.

pub fn field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn line(fields: &[String]) -> String {
    let mut out = fields
        .iter()
        .map(|f| field(f))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    out
}

/// A full CSV document: fixed header plus rows. Column sets are pinned per
/// scenario; golden-file tests hold them stable.
pub struct Table {
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width must match header");
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = line(
            &self
                .header
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>(),
        );
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}
