//! Output formatting: JSON and CSV writers with a fixed key order and every
//! float printed at 15 significant digits, so reruns with the same config
//! produce byte-identical files.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::CliError;

/// 15 significant digits in scientific form; a valid JSON number.
pub fn g15(x: f64) -> String {
    format!("{:.14e}", x)
}

pub fn g15_array(values: impl IntoIterator<Item = f64>) -> String {
    let parts: Vec<String> = values.into_iter().map(g15).collect();
    format!("[{}]", parts.join(", "))
}

/// A flat JSON object with keys emitted in insertion order.
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> Self {
        Self { fields: Vec::new() }
    }

    pub fn number(mut self, key: &str, value: f64) -> Self {
        self.fields.push((key.into(), g15(value)));
        self
    }

    pub fn integer(mut self, key: &str, value: usize) -> Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn numbers(mut self, key: &str, values: impl IntoIterator<Item = f64>) -> Self {
        self.fields.push((key.into(), g15_array(values)));
        self
    }

    /// Inserts pre-rendered JSON under `key`.
    pub fn raw(mut self, key: &str, json: String) -> Self {
        self.fields.push((key.into(), json));
        self
    }

    pub fn render(&self) -> String {
        let mut out = String::from("{\n");
        for (i, (key, value)) in self.fields.iter().enumerate() {
            out.push_str(&format!("  \"{key}\": {value}"));
            out.push_str(if i + 1 < self.fields.len() { ",\n" } else { "\n" });
        }
        out.push_str("}\n");
        out
    }
}

/// Renders a switching signal in its documented schema with g15 durations.
pub fn signal_json(signal: &flowgain::SwitchingSignal) -> String {
    let segments: Vec<String> = signal
        .segments()
        .iter()
        .map(|seg| {
            let level = match seg.level {
                flowgain::ArcLevel::Minus => "minus",
                flowgain::ArcLevel::Zero => "zero",
                flowgain::ArcLevel::Plus => "plus",
            };
            format!(
                "{{\"level\": \"{level}\", \"duration\": {}}}",
                g15(seg.duration)
            )
        })
        .collect();
    format!(
        "{{\"period\": {}, \"segments\": [{}]}}",
        g15(signal.period()),
        segments.join(", ")
    )
}

/// CSV with a header row, comma separators and LF line endings.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        Self {
            text: format!("{header}\n"),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_text(self) -> String {
        self.text
    }
}

/// Writes to the path, or to stdout when no path is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display()))),
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::config(format!("cannot write to stdout: {e}")))
        }
    }
}
