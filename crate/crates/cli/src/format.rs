//! CSV emission with `#` comment headers.

use std::fmt::Write as _;

use crate::config::RunConfig;

/// Version stamped into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Number formatted with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV document: comment header, column names, rows and trailing summary
/// comments.
#[derive(Clone, Debug, Default)]
pub struct Table {
    header: Vec<String>,
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
    summary: Vec<String>,
    flagged: usize,
}

impl Table {
    /// Starts a table whose header echoes `config` and describes each
    /// column as `(name, unit)`.
    pub fn new(config: &RunConfig, columns: &[(&'static str, &'static str)]) -> Self {
        let mut header = vec![
            format!("ncdt {VERSION} {}", config.command.name()),
            "config:".to_string(),
        ];
        header.extend(config.echo().into_iter().map(|line| format!("  {line}")));
        header.push("units:".to_string());
        header.extend(
            columns
                .iter()
                .map(|(name, unit)| format!("  {name}: {unit}")),
        );
        Self {
            header,
            columns: columns.iter().map(|(name, _)| *name).collect(),
            ..Self::default()
        }
    }

    /// Appends a row; `flagged` marks it for the exit status.
    pub fn push(&mut self, row: Vec<String>, flagged: bool) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
        self.flagged += usize::from(flagged);
    }

    pub fn summary(&mut self, line: impl Into<String>) {
        self.summary.push(line.into());
    }

    pub fn flagged(&self) -> usize {
        self.flagged
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in &self.header {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let _ = writeln!(out, "{}", row.join(","));
        }
        let _ = writeln!(out, "# summary");
        for line in &self.summary {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "# flagged_rows={}", self.flagged);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.404825557695773, 1e-300, 0.0] {
            let text = num(x);
            assert_eq!(text.parse::<f64>().unwrap(), x);
        }
        assert_eq!(num(1.0), "1.0000000000000000e0");
    }
}
