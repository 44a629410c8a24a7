use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

/// 17 significant digits, positional notation for moderate magnitudes.
pub fn sig17(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let sci = format!("{v:.16e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..17).contains(&exp) {
        format!("{v:.*}", (16 - exp).max(0) as usize)
    } else {
        sci
    }
}

/// Shortest round-trip representation; exponent form outside `[1e-4, 1e15)`.
pub fn field(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Where a command's data goes: stdout, or `<dir>/<stem>.<ext>` with the
/// run metadata next to it in `<dir>/<stem>.meta.json`.
pub struct Sink {
    dir: Option<PathBuf>,
    stem: &'static str,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>, stem: &'static str) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            fs::create_dir_all(d).map_err(|e| CliError::Io(d.clone(), e))?;
        }
        Ok(Sink { dir, stem })
    }

    fn path(&self, ext: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("{}.{ext}", self.stem)))
    }

    pub fn data(&self, ext: &str, bytes: &[u8]) -> Result<(), CliError> {
        match self.path(ext) {
            Some(p) => write_file(&p, bytes),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::Io(PathBuf::from("<stdout>"), e))
            }
        }
    }

    pub fn metadata(&self, meta: &serde_json::Value) -> Result<(), CliError> {
        if let Some(p) = self.path("meta.json") {
            let mut text = serde_json::to_string_pretty(meta).map_err(CliError::Json)?;
            text.push('\n');
            write_file(&p, text.as_bytes())?;
        }
        Ok(())
    }
}

fn write_file(p: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(p, bytes).map_err(|e| CliError::Io(p.to_path_buf(), e))
}

pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).map_err(CliError::Csv)?;
    for r in rows {
        w.write_record(r).map_err(CliError::Csv)?;
    }
    w.into_inner().map_err(|e| CliError::Csv(e.into_error().into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(sig17(std::f64::consts::E), "2.7182818284590451");
        assert_eq!(sig17(0.5), "0.50000000000000000");
        assert_eq!(sig17(-1.0), "-1.0000000000000000");
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(1.5e-9), "1.5000000000000000e-9");
        assert_eq!(sig17(123456.0), "123456.00000000000");
    }

    #[test]
    fn csv_fields() {
        assert_eq!(field(0.0), "0");
        assert_eq!(field(0.25), "0.25");
        assert_eq!(field(1.5e-7), "1.5e-7");
        assert_eq!(field(f64::NAN), "NaN");
        let b = csv_bytes(&["a".into(), "b".into()], &[vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(String::from_utf8(b).unwrap(), "a,b\n1,2\n");
    }
}
