//! Outside-air weather traces at one-minute resolution.
//!
//! CSV layout, header required verbatim:
//!
//! ```text
//! minute,t_o_c,rh_o_pct
//! 0,27.1,71.5
//! 1,27.1,71.4
//! ```
//!
//! Files ending in `.gz` are read and written gzip-compressed.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

pub const HEADER: [&str; 3] = ["minute", "t_o_c", "rh_o_pct"];
pub const MINUTES_PER_DAY: usize = 1440;
pub const T_RANGE: (f64, f64) = (15.0, 45.0);
pub const RH_RANGE: (f64, f64) = (0.0, 100.0);

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Malformed { line: usize, msg: String },
    #[error("line {line}: minute {minute} does not follow {prev} at one-minute spacing")]
    NonMonotone { line: usize, minute: u64, prev: u64 },
    #[error("line {line}: {msg}")]
    OutOfRange { line: usize, msg: String },
    #[error("trace too short: {0}")]
    TooShort(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub minute: u64,
    pub t_o: f64,
    pub rh_o: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WeatherTrace {
    rows: Vec<TraceRow>,
}

impl WeatherTrace {
    /// Validates spacing and ranges. Errors carry 1-based data line numbers
    /// counting the header as line 1.
    pub fn new(rows: Vec<TraceRow>) -> Result<Self, TraceError> {
        if rows.is_empty() {
            return Err(TraceError::TooShort("no data rows".into()));
        }
        for (i, r) in rows.iter().enumerate() {
            let line = i + 2;
            check_row(r, line)?;
            if i > 0 && r.minute != rows[i - 1].minute + 1 {
                return Err(TraceError::NonMonotone {
                    line,
                    minute: r.minute,
                    prev: rows[i - 1].minute,
                });
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Whole days covered.
    pub fn days(&self) -> usize {
        self.rows.len() / MINUTES_PER_DAY
    }

    pub fn mean_t(&self) -> f64 {
        self.rows.iter().map(|r| r.t_o).sum::<f64>() / self.rows.len() as f64
    }

    pub fn mean_rh(&self) -> f64 {
        self.rows.iter().map(|r| r.rh_o).sum::<f64>() / self.rows.len() as f64
    }
}

fn check_row(r: &TraceRow, line: usize) -> Result<(), TraceError> {
    if !(r.t_o >= T_RANGE.0 && r.t_o <= T_RANGE.1) {
        return Err(TraceError::OutOfRange {
            line,
            msg: format!("temperature {} outside [{}, {}] °C", r.t_o, T_RANGE.0, T_RANGE.1),
        });
    }
    if !(r.rh_o >= RH_RANGE.0 && r.rh_o <= RH_RANGE.1) {
        return Err(TraceError::OutOfRange {
            line,
            msg: format!("relative humidity {} outside [0, 100] %", r.rh_o),
        });
    }
    Ok(())
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("gz"))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceError + '_ {
    move |source| TraceError::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn load_csv(path: &Path) -> Result<WeatherTrace, TraceError> {
    let file = File::open(path).map_err(io_err(path))?;
    let reader: Box<dyn Read> = if is_gz(path) {
        Box::new(GzDecoder::new(BufReader::new(file)))
    } else {
        Box::new(BufReader::new(file))
    };
    read_csv(reader)
}

pub fn read_csv<R: Read>(reader: R) -> Result<WeatherTrace, TraceError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = csv.records();
    match records.next() {
        Some(Ok(h)) if h.iter().map(str::trim).eq(HEADER) => {}
        Some(Ok(_)) => {
            return Err(TraceError::Malformed {
                line: 1,
                msg: format!("expected header `{}`", HEADER.join(",")),
            })
        }
        Some(Err(e)) => return Err(TraceError::Malformed { line: 1, msg: e.to_string() }),
        None => return Err(TraceError::TooShort("empty file".into())),
    }
    let mut rows = Vec::new();
    for (i, rec) in records.enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| TraceError::Malformed { line, msg: e.to_string() })?;
        if rec.len() != 3 {
            return Err(TraceError::Malformed {
                line,
                msg: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let field = |k: usize| rec[k].trim();
        let minute = field(0)
            .parse::<u64>()
            .map_err(|_| TraceError::Malformed { line, msg: format!("bad minute `{}`", field(0)) })?;
        let num = |k: usize| {
            field(k)
                .parse::<f64>()
                .map_err(|_| TraceError::Malformed { line, msg: format!("bad number `{}`", field(k)) })
        };
        let row = TraceRow { minute, t_o: num(1)?, rh_o: num(2)? };
        check_row(&row, line)?;
        if let Some(prev) = rows.last().map(|p: &TraceRow| p.minute) {
            if minute != prev + 1 {
                return Err(TraceError::NonMonotone { line, minute, prev });
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(TraceError::TooShort("no data rows".into()));
    }
    Ok(WeatherTrace { rows })
}

pub fn save_csv(trace: &WeatherTrace, path: &Path) -> Result<(), TraceError> {
    let file = File::create(path).map_err(io_err(path))?;
    if is_gz(path) {
        let mut gz = GzEncoder::new(BufWriter::new(file), Compression::default());
        write_csv(trace, &mut gz).map_err(io_err(path))?;
        gz.finish().and_then(|mut w| w.flush()).map_err(io_err(path))
    } else {
        let mut w = BufWriter::new(file);
        write_csv(trace, &mut w).map_err(io_err(path))?;
        w.flush().map_err(io_err(path))
    }
}

/// Floats are written in shortest round-trip form, so save → load is exact.
pub fn write_csv<W: Write>(trace: &WeatherTrace, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{}", HEADER.join(","))?;
    for r in &trace.rows {
        writeln!(out, "{},{},{}", r.minute, r.t_o, r.rh_o)?;
    }
    Ok(())
}

/// Generator settings for synthetic tropical weather.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthParams {
    pub t_mean: f64,
    pub t_amp: f64,
    /// Hour of day with the temperature peak.
    pub t_peak_hour: f64,
    pub t_noise_sd: f64,
    pub t_clip: (f64, f64),
    pub rh_mean: f64,
    pub rh_amp: f64,
    /// RH trough trails the temperature peak by this many minutes.
    pub rh_lag_min: f64,
    pub rh_noise_sd: f64,
    pub rh_clip: (f64, f64),
    /// AR(1) coefficient of both noise processes, per minute.
    pub ar: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            t_mean: 27.0,
            t_amp: 4.0,
            t_peak_hour: 14.0,
            t_noise_sd: 0.3,
            t_clip: (23.0, 37.0),
            rh_mean: 70.0,
            rh_amp: 15.0,
            rh_lag_min: 60.0,
            rh_noise_sd: 0.6,
            rh_clip: (50.0, 100.0),
            ar: 0.95,
        }
    }
}

pub fn synth_weather(days: usize, seed: u64) -> Result<WeatherTrace, TraceError> {
    synth_weather_with(days, seed, &SynthParams::default())
}

pub fn synth_weather_with(days: usize, seed: u64, p: &SynthParams) -> Result<WeatherTrace, TraceError> {
    if days == 0 {
        return Err(TraceError::TooShort("synthetic trace needs at least one day".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bad = |e: rand_distr::NormalError| TraceError::Malformed { line: 0, msg: e.to_string() };
    let t_noise = Normal::new(0.0, p.t_noise_sd).map_err(bad)?;
    let rh_noise = Normal::new(0.0, p.rh_noise_sd).map_err(bad)?;
    let day = MINUTES_PER_DAY as f64;
    // sin peaks a quarter period after its zero crossing.
    let t_zero = p.t_peak_hour * 60.0 - day / 4.0;
    let (mut et, mut erh) = (0.0, 0.0);
    let n = days * MINUTES_PER_DAY;
    let mut rows = Vec::with_capacity(n);
    for m in 0..n {
        let minute = m as f64;
        et = p.ar * et + t_noise.sample(&mut rng);
        erh = p.ar * erh + rh_noise.sample(&mut rng);
        let t_phase = std::f64::consts::TAU * (minute - t_zero) / day;
        let rh_phase = std::f64::consts::TAU * (minute - t_zero - p.rh_lag_min) / day;
        rows.push(TraceRow {
            minute: m as u64,
            t_o: (p.t_mean + p.t_amp * t_phase.sin() + et).clamp(p.t_clip.0, p.t_clip.1),
            rh_o: (p.rh_mean - p.rh_amp * rh_phase.sin() + erh).clamp(p.rh_clip.0, p.rh_clip.1),
        });
    }
    WeatherTrace::new(rows)
}

/// Contiguous split into the first `train_days` and the last `test_days` days.
pub fn split(trace: &WeatherTrace, train_days: usize, test_days: usize) -> Result<(WeatherTrace, WeatherTrace), TraceError> {
    if train_days == 0 || test_days == 0 || train_days + test_days > trace.days() {
        return Err(TraceError::TooShort(format!(
            "{} whole days cannot hold {train_days} training and {test_days} test days",
            trace.days()
        )));
    }
    let n_train = train_days * MINUTES_PER_DAY;
    let n_test = test_days * MINUTES_PER_DAY;
    let train = trace.rows[..n_train].to_vec();
    let test = trace.rows[trace.len() - n_test..].to_vec();
    Ok((WeatherTrace { rows: train }, WeatherTrace { rows: test }))
}
