use std::fmt::Write as _;

use crate::config::Config;

/// Floats with 17 significant digits, enough to re-read them exactly.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV text preceded by `#` metadata: tool version, command, seed and the
/// normalized configuration. Call [`Csv::columns`] before the rows.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(command: &str, seed: Option<u64>, cfg: &Config) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# levyito {}", levy_ito::VERSION);
        let _ = writeln!(text, "# command = {command}");
        match seed {
            Some(s) => {
                let _ = writeln!(text, "# seed = {s}");
            }
            None => text.push_str("# seed = none\n"),
        }
        for line in cfg.to_string().lines() {
            let _ = writeln!(text, "# {line}");
        }
        Self { text }
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.text.push_str(&names.join(","));
        self.text.push('\n');
    }

    pub fn comment(&mut self, line: &str) {
        let _ = writeln!(self.text, "# {line}");
    }

    pub fn row<I: IntoIterator<Item = String>>(&mut self, cells: I) {
        let cells: Vec<String> = cells.into_iter().collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}
