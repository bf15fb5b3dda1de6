//! Buffered output files, committed to disk only after a command succeeds.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

/// `%.12g`-style rendering: 12 significant digits, trailing zeros trimmed,
/// scientific notation outside `[1e-5, 1e12)`.
pub fn fmt_g(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..12).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) {
        let mut bytes = serde_json::to_vec_pretty(value).expect("output types serialize");
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
    }

    /// Rows are written as given; numbers should come from [`fmt_g`].
    pub fn csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) {
        let mut text = header.join(",");
        text.push('\n');
        for row in rows {
            text.push_str(&row.join(","));
            text.push('\n');
        }
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file to a temporary sibling, then renames them all into
    /// place. Temporaries are removed if any write fails.
    pub fn commit(self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let result = (|| {
            for (name, bytes) in &self.files {
                let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
                staged.push((tmp.clone(), dir.join(name)));
                fs::write(&tmp, bytes)?;
            }
            for (tmp, dest) in &staged {
                fs::rename(tmp, dest)?;
            }
            Ok(())
        })();
        if result.is_err() {
            for (tmp, _) in &staged {
                let _ = fs::remove_file(tmp);
            }
        }
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        assert_eq!(fmt_g(0.0), "0");
        assert_eq!(fmt_g(1.0), "1");
        assert_eq!(fmt_g(0.5901639344262295), "0.590163934426");
        assert_eq!(fmt_g(-0.01), "-0.01");
        assert_eq!(fmt_g(123456.0), "123456");
        assert_eq!(fmt_g(1.5e-7), "1.5e-07");
        assert_eq!(fmt_g(2.5e13), "2.5e+13");
        assert_eq!(fmt_g(0.000123), "0.000123");
        assert_eq!(fmt_g(999999999999.9), "1e+12");
        assert_eq!(fmt_g(f64::NAN), "nan");
    }

    #[test]
    fn commit_writes_all_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = Outputs::default();
        out.csv("a.csv", &["x", "y"], vec![vec![fmt_g(1.0), fmt_g(2.0)]]);
        out.json("b.json", &serde_json::json!({"k": 1.5}));
        out.commit(dir.path()).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("a.csv")).unwrap(), "x,y\n1,2\n");
        assert!(fs::read_to_string(dir.path().join("b.json")).unwrap().contains("1.5"));
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 2);
    }
}
