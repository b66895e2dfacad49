//! Autocorrelation of energy traces and the trace / ACF table CSV formats.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::saw::StepRecord;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("trace has {len} samples, need at least 2")]
    TooShort { len: usize },
    #[error("max lag {max_lag} must be below the trace length {len}")]
    LagTooLarge { max_lag: usize, len: usize },
    #[error("burn-in fraction {0} outside [0, 1)")]
    InvalidBurnIn(f64),
    #[error("non-finite value in trace")]
    NonFinite,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Energies of a chain, one per recorded transition.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub energies: Vec<f64>,
    /// Empty when acceptance was not recorded.
    pub accepted: Vec<bool>,
    /// Transitions between consecutive samples.
    pub stride: usize,
}

impl EnergyTrace {
    pub fn new(energies: Vec<f64>) -> Self {
        EnergyTrace {
            energies,
            accepted: Vec::new(),
            stride: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    /// Drops the leading `fraction` of samples.
    pub fn burn_in(&self, fraction: f64) -> Result<EnergyTrace, DiagnosticsError> {
        if !(0.0..1.0).contains(&fraction) {
            return Err(DiagnosticsError::InvalidBurnIn(fraction));
        }
        let skip = (fraction * self.energies.len() as f64).floor() as usize;
        Ok(EnergyTrace {
            energies: self.energies[skip..].to_vec(),
            accepted: self.accepted.get(skip..).map(<[bool]>::to_vec).unwrap_or_default(),
            stride: self.stride,
        })
    }

    /// Keeps every `stride`-th sample, starting from the first.
    pub fn thin(&self, stride: usize) -> EnergyTrace {
        let stride = stride.max(1);
        EnergyTrace {
            energies: self.energies.iter().step_by(stride).copied().collect(),
            accepted: self.accepted.iter().step_by(stride).copied().collect(),
            stride: self.stride * stride,
        }
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        (!self.accepted.is_empty())
            .then(|| self.accepted.iter().filter(|&&a| a).count() as f64 / self.accepted.len() as f64)
    }
}

impl From<&[StepRecord]> for EnergyTrace {
    fn from(records: &[StepRecord]) -> Self {
        EnergyTrace {
            energies: records.iter().map(|r| r.energy).collect(),
            accepted: records.iter().map(|r| r.accepted).collect(),
            stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcfCurve {
    /// `values[t]` is the autocorrelation at lag `t`; `values[0] = 1`.
    pub values: Vec<f64>,
    /// The trace was constant. Lags above zero are reported as 0.
    pub zero_variance: bool,
}

impl AcfCurve {
    pub fn max_lag(&self) -> usize {
        self.values.len() - 1
    }

    /// Sum of the autocorrelation over lags `1..=max_lag`, signed.
    pub fn area(&self) -> f64 {
        self.values[1..].iter().sum()
    }
}

/// Sample autocorrelation with the biased `1/n` normalization:
/// `ρ(t) = Σ_{i<n-t} (x_i - x̄)(x_{i+t} - x̄) / Σ_i (x_i - x̄)²`.
pub fn acf(trace: &EnergyTrace, max_lag: usize) -> Result<AcfCurve, DiagnosticsError> {
    let x = &trace.energies;
    let n = x.len();
    if n < 2 {
        return Err(DiagnosticsError::TooShort { len: n });
    }
    if max_lag >= n {
        return Err(DiagnosticsError::LagTooLarge { max_lag, len: n });
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(DiagnosticsError::NonFinite);
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|d| d * d).sum();
    let mut values = vec![0.0; max_lag + 1];
    values[0] = 1.0;
    // a trace that is constant up to rounding of the mean counts as constant
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if c0 <= (n as f64) * (scale * f64::EPSILON).powi(2) {
        return Ok(AcfCurve {
            values,
            zero_variance: true,
        });
    }
    for (t, v) in values.iter_mut().enumerate().skip(1) {
        let ct: f64 = centered[..n - t]
            .iter()
            .zip(&centered[t..])
            .map(|(a, b)| a * b)
            .sum();
        *v = ct / c0;
    }
    Ok(AcfCurve {
        values,
        zero_variance: false,
    })
}

/// Signed ACF area of a trace up to `max_lag`.
pub fn acf_area(trace: &EnergyTrace, max_lag: usize) -> Result<f64, DiagnosticsError> {
    Ok(acf(trace, max_lag)?.area())
}

pub const TRACE_HEADER: &str = "step,energy,accepted";

/// Writes a trace as `step,energy,accepted` rows. Floats use the shortest
/// representation that round-trips, so equal runs give equal bytes.
pub fn write_trace<W: Write>(out: &mut W, records: &[StepRecord]) -> io::Result<()> {
    let mut buf = String::with_capacity(32 * (records.len() + 1));
    buf.push_str(TRACE_HEADER);
    buf.push('\n');
    for r in records {
        let _ = writeln!(buf, "{},{},{}", r.step, r.energy, u8::from(r.accepted));
    }
    out.write_all(buf.as_bytes())
}

pub fn parse_trace<R: BufRead>(input: R) -> Result<Vec<StepRecord>, DiagnosticsError> {
    let err = |line: usize, message: &str| DiagnosticsError::Parse {
        line,
        message: message.to_string(),
    };
    let mut lines = input.lines();
    let header = lines.next().transpose()?;
    if header.as_deref().map(str::trim_end) != Some(TRACE_HEADER) {
        return Err(err(1, "expected `step,energy,accepted` header"));
    }
    let mut out = Vec::new();
    for (n, line) in lines.enumerate() {
        let line = line?;
        let line_no = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        if cols.len() != 3 {
            return Err(err(line_no, "expected 3 columns"));
        }
        let step = cols[0].parse().map_err(|_| err(line_no, "bad step"))?;
        let energy: f64 = cols[1].parse().map_err(|_| err(line_no, "bad energy"))?;
        if !energy.is_finite() {
            return Err(err(line_no, "energy must be finite"));
        }
        let accepted = match cols[2] {
            "0" => false,
            "1" => true,
            _ => return Err(err(line_no, "accepted must be 0 or 1")),
        };
        out.push(StepRecord {
            step,
            energy,
            accepted,
            walk_length: 0,
        });
    }
    Ok(out)
}

/// Writes `lag,<name>...` with one row per lag.
pub fn write_acf_table<W: Write>(out: &mut W, columns: &[(String, AcfCurve)]) -> io::Result<()> {
    let rows = columns.iter().map(|(_, c)| c.values.len()).min().unwrap_or(0);
    let mut buf = String::from("lag");
    for (name, _) in columns {
        buf.push(',');
        buf.push_str(name);
    }
    buf.push('\n');
    for t in 0..rows {
        let _ = write!(buf, "{t}");
        for (_, c) in columns {
            let _ = write!(buf, ",{}", c.values[t]);
        }
        buf.push('\n');
    }
    out.write_all(buf.as_bytes())
}
