use std::fmt::Write;
use std::time::Instant;

use thiserror::Error;

use crate::engine::{EngineError, Mode, ParseOptions, Parser};

pub const CSV_HEADER: &str = "input_id,bytes,mode,steps,nanos";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchRecord {
    pub input_id: String,
    pub bytes: usize,
    pub mode: Mode,
    pub steps: u64,
    /// Best of the repetitions.
    pub nanos: u128,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("benchmark input {input_id} did not parse (fail at {offset})")]
    ParseFailed { input_id: String, offset: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
}

impl BenchError {
    pub fn code(&self) -> &'static str {
        match self {
            BenchError::ParseFailed { .. } => "E_PARSE_FAILED",
            BenchError::Engine(e) => e.code(),
        }
    }
}

/// Parses each input `repetitions` times (at least once). Every input must
/// parse successfully.
pub fn bench_run(
    parser: &Parser,
    start: &str,
    inputs: &[(String, Vec<u8>)],
    opts: &ParseOptions,
    repetitions: usize,
) -> Result<Vec<BenchRecord>, BenchError> {
    let mut records = Vec::with_capacity(inputs.len());
    for (id, input) in inputs {
        let mut best = u128::MAX;
        let mut steps = 0;
        for _ in 0..repetitions.max(1) {
            let started = Instant::now();
            let out = parser.parse(start, input, opts)?;
            best = best.min(started.elapsed().as_nanos());
            if !out.success {
                return Err(BenchError::ParseFailed {
                    input_id: id.clone(),
                    offset: out.furthest_failure.unwrap_or(0),
                });
            }
            steps = out.steps;
        }
        records.push(BenchRecord { input_id: id.clone(), bytes: input.len(), mode: opts.mode, steps, nanos: best });
    }
    Ok(records)
}

pub fn to_csv(records: &[BenchRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{},{}", r.input_id, r.bytes, r.mode, r.steps, r.nanos);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of y on x.
pub fn linear_fit(points: &[(f64, f64)]) -> LinearFit {
    let n = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    LinearFit { slope, intercept, r_squared }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let fit = linear_fit(&[(1.0, 3.0), (2.0, 5.0), (4.0, 9.0)]);
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_is_a_poor_fit() {
        let pts: Vec<(f64, f64)> = (1..=5).map(|i| (f64::from(i), f64::from(i).powi(4))).collect();
        assert!(linear_fit(&pts).r_squared < 0.95);
    }

    #[test]
    fn csv_layout() {
        let r = BenchRecord { input_id: "x-1024".into(), bytes: 1024, mode: Mode::Packrat, steps: 7, nanos: 9 };
        assert_eq!(to_csv(&[r]), "input_id,bytes,mode,steps,nanos\nx-1024,1024,packrat,7,9\n");
    }
}
