//! CSV and JSON writers. CSV files start with one `# config: {...}` comment
//! line holding the resolved run configuration, followed by the header.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

pub struct Sink {
    w: Box<dyn Write>,
}

/// Round-trip float formatting with 17 significant digits.
pub fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

impl Sink {
    pub fn open(path: Option<&Path>) -> io::Result<Self> {
        let w: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        Ok(Sink { w })
    }

    pub fn header(&mut self, config: &impl Serialize, columns: &str) -> io::Result<()> {
        writeln!(self.w, "# config: {}", serde_json::to_string(config)?)?;
        writeln!(self.w, "{columns}")
    }

    pub fn row(&mut self, cells: &[String]) -> io::Result<()> {
        writeln!(self.w, "{}", cells.join(","))
    }

    pub fn json(&mut self, value: &impl Serialize) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut self.w, value)?;
        writeln!(self.w)
    }

    pub fn finish(&mut self) -> io::Result<()> {
        self.w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }
}
