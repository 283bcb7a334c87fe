//! Line grammar: `[section arg]` headers, `key = value` entries, `#` comments.

use super::diagnostic::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
    pub key_col: usize,
    pub value_col: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Section {
    pub name: String,
    pub arg: Option<String>,
    pub line: usize,
    pub col: usize,
    pub entries: Vec<Entry>,
}

impl Section {
    pub fn header(&self) -> String {
        match &self.arg {
            Some(a) => format!("[{} {a}]", self.name),
            None => format!("[{}]", self.name),
        }
    }
}

/// Splits source text into sections. Syntax problems are collected and the
/// offending line skipped, so one pass reports every malformed line.
pub fn parse_sections(input: &[u8]) -> (Vec<Section>, Vec<Diagnostic>) {
    let mut diags = Vec::new();
    let text = match std::str::from_utf8(input) {
        Ok(t) => t,
        Err(e) => {
            let valid = &input[..e.valid_up_to()];
            let line = valid.iter().filter(|&&b| b == b'\n').count() + 1;
            let col = valid.iter().rev().take_while(|&&b| b != b'\n').count() + 1;
            diags.push(Diagnostic::error(line, col, "input is not valid UTF-8", ""));
            return (Vec::new(), diags);
        }
    };

    let mut sections: Vec<Section> = Vec::new();
    // Entries under a malformed header are skipped rather than attributed
    // to the previous section.
    let mut skipping = false;
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let content = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        let col_of = |byte: usize| raw[..byte].chars().count() + 1;
        let start_col = col_of(indent);

        if trimmed.starts_with('[') {
            let Some(inner) = trimmed.strip_prefix('[').and_then(|t| t.strip_suffix(']')) else {
                diags.push(Diagnostic::error(line_no, start_col, "section header is missing `]`", trimmed));
                skipping = true;
                continue;
            };
            let mut words = inner.split_whitespace();
            let Some(name) = words.next() else {
                diags.push(Diagnostic::error(line_no, start_col, "empty section header", trimmed));
                skipping = true;
                continue;
            };
            let arg = words.next().map(str::to_string);
            if words.next().is_some() {
                diags.push(Diagnostic::error(
                    line_no,
                    start_col,
                    "section header takes at most one argument",
                    trimmed,
                ));
                skipping = true;
                continue;
            }
            skipping = false;
            sections.push(Section {
                name: name.to_string(),
                arg,
                line: line_no,
                col: start_col,
                entries: Vec::new(),
            });
            continue;
        }

        if skipping {
            continue;
        }
        let Some(eq) = content.find('=') else {
            diags.push(Diagnostic::error(line_no, start_col, "expected `key = value`", trimmed));
            continue;
        };
        let key = content[..eq].trim();
        if key.is_empty() {
            diags.push(Diagnostic::error(line_no, start_col, "missing key before `=`", trimmed));
            continue;
        }
        let after = &content[eq + 1..];
        let value = after.trim();
        let value_offset = eq + 1 + (after.len() - after.trim_start().len());
        let entry = Entry {
            key: key.to_string(),
            value: value.to_string(),
            line: line_no,
            key_col: start_col,
            value_col: col_of(value_offset),
        };
        match sections.last_mut() {
            Some(s) => s.entries.push(entry),
            None => diags.push(Diagnostic::error(
                line_no,
                start_col,
                "entry appears before any section header",
                key,
            )),
        }
    }
    (sections, diags)
}
