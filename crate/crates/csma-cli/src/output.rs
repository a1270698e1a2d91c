//! Output rendering: one result document per invocation, as JSON, CSV or
//! an aligned table. Numbers are rounded to 12 significant digits before
//! emission so identical inputs give byte-identical output.

use serde_json::Value;

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific round-trip")
}

pub fn num(x: f64) -> Value {
    Value::from(sig12(x))
}

pub fn fmt(x: f64) -> String {
    format!("{}", sig12(x))
}

/// One tabular block of the document.
pub struct Section {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A rendered result: the JSON value plus the flat form used for the CSV
/// and table formats. The effective configuration rides along in both.
pub struct Document {
    pub json: Value,
    pub config: Vec<(String, String)>,
    pub sections: Vec<Section>,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

impl Document {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("valid json");
                s.push('\n');
                s
            }
            Format::Csv => self.render_csv(),
            Format::Table => self.render_table(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.config {
            out.push_str(&format!("# {key} = {value}\n"));
        }
        for section in &self.sections {
            out.push_str(&format!("# {}\n", section.title));
            out.push_str(&section.header.join(","));
            out.push('\n');
            for row in &section.rows {
                out.push_str(&row.join(","));
                out.push('\n');
            }
        }
        out
    }

    fn render_table(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.config {
            out.push_str(&format!("{key}: {value}\n"));
        }
        for section in &self.sections {
            out.push('\n');
            out.push_str(&section.title);
            out.push('\n');
            let mut widths: Vec<usize> = section.header.iter().map(String::len).collect();
            for row in &section.rows {
                for (i, cell) in row.iter().enumerate() {
                    widths[i] = widths[i].max(cell.len());
                }
            }
            let line = |cells: &[String]| -> String {
                cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| format!("{:width$}", c, width = widths[i]))
                    .collect::<Vec<_>>()
                    .join("  ")
                    .trim_end()
                    .to_string()
            };
            out.push_str(&line(&section.header));
            out.push('\n');
            for row in &section.rows {
                out.push_str(&line(row));
                out.push('\n');
            }
        }
        out
    }
}
