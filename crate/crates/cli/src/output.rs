use qedk_core::{CheckReport, Complex64};
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("refusing to write an empty series to {0}")]
    Empty(PathBuf),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Columns of numbers destined for one CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub file: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    /// `t,re,im` rows of a complex time series.
    pub fn complex(file: String, points: impl IntoIterator<Item = (f64, Complex64)>) -> Self {
        let rows = points.into_iter().map(|(t, z)| vec![t, z.re, z.im]).collect();
        Series { file, columns: vec!["t", "re", "im"], rows }
    }
}

/// Shortest decimal rendering of `x` rounded to 17 significant digits.
pub fn format_17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let digits = digits.trim_end_matches('0');
    if !(-5..=16).contains(&exp) {
        let (lead, rest) = digits.split_at(1);
        let frac = if rest.is_empty() { String::new() } else { format!(".{rest}") };
        return format!("{sign}{lead}{frac}e{exp}");
    }
    if exp < 0 {
        return format!("{sign}0.{}{digits}", "0".repeat((-exp - 1) as usize));
    }
    let point = exp as usize + 1;
    if digits.len() <= point {
        format!("{sign}{digits}{}", "0".repeat(point - digits.len()))
    } else {
        format!("{sign}{}.{}", &digits[..point], &digits[point..])
    }
}

pub fn emit_csv(series: &Series, path: &Path) -> Result<(), OutputError> {
    if series.rows.is_empty() {
        return Err(OutputError::Empty(path.to_path_buf()));
    }
    let mut text = series.columns.join(",");
    text.push('\n');
    for row in &series.rows {
        let cells: Vec<String> = row.iter().map(|v| format_17(*v)).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    write_file(path, text.as_bytes())
}

pub fn emit_report(report: &CheckReport, path: &Path) -> Result<(), OutputError> {
    let mut text = serde_json::to_string_pretty(report).expect("reports serialize");
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), OutputError> {
    let io = |source| OutputError::Io { path: path.to_path_buf(), source };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_17(0.0), "0");
        assert_eq!(format_17(-0.0), "0");
        assert_eq!(format_17(1.0), "1");
        assert_eq!(format_17(-2.5), "-2.5");
        assert_eq!(format_17(100.0), "100");
        assert_eq!(format_17(0.1), "0.10000000000000001");
        assert_eq!(format_17(1e-7), "9.9999999999999995e-8");
        assert_eq!(format_17(1.5e20), "1.5e20");
        assert_eq!(format_17(0.00025), "0.00025000000000000001");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, -1.0 / 3.0, 6.02214076e23, 1e-300, 123456.789, 0.9999999999999999] {
            assert_eq!(format_17(x).parse::<f64>().unwrap(), x, "{x}");
        }
    }

    #[test]
    fn empty_series_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.csv");
        let s = Series::complex("z.csv".into(), []);
        assert!(matches!(emit_csv(&s, &path), Err(OutputError::Empty(_))));
        assert!(!path.exists());
    }

    #[test]
    fn vacuum_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("z.csv");
        emit_csv(&Series::complex("z.csv".into(), [(0.0, Complex64::new(1.0, 0.0))]), &path).unwrap();
        assert_eq!(std::fs::read_to_string(path).unwrap(), "t,re,im\n0,1,0\n");
    }
}
