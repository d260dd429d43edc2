//! SimRecord streams as CSV or JSON Lines.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use dips_core::SimRecord;
use thiserror::Error;

pub const CSV_HEADER: &str =
    "height,sim_time,kind,miner_id,d_b,d_r,best_score,problem_epoch,cum_classical,cum_solution";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Jsonl => "jsonl",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            other => Err(format!("unknown format `{other}` (expected csv or jsonl)")),
        }
    }
}

#[derive(Debug, Error)]
pub enum RecordsError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("no records to write")]
    Empty,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Formats like C's `%.17g`: 17 significant digits, trailing zeros trimmed.
/// Every finite `f64` survives a round trip through this text.
pub fn format_g17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn csv_row(r: &SimRecord) -> [String; 10] {
    [
        r.height.to_string(),
        format_g17(r.sim_time),
        r.kind.as_str().to_string(),
        r.miner_id.to_string(),
        format_g17(r.d_b),
        format_g17(r.d_r),
        r.best_score.to_string(),
        r.problem_epoch.to_string(),
        r.cumulative_classical.to_string(),
        r.cumulative_solution.to_string(),
    ]
}

pub fn write_records_to<W: Write>(records: &[SimRecord], out: W, format: Format) -> Result<(), RecordsError> {
    if records.is_empty() {
        return Err(RecordsError::Empty);
    }
    let mut out = BufWriter::new(out);
    match format {
        Format::Csv => {
            let mut writer = csv::WriterBuilder::new().has_headers(false).from_writer(&mut out);
            writer
                .write_record(CSV_HEADER.split(','))
                .map_err(|e| RecordsError::Io(e.into()))?;
            for r in records {
                writer
                    .write_record(csv_row(r))
                    .map_err(|e| RecordsError::Io(e.into()))?;
            }
            writer.flush()?;
        }
        Format::Jsonl => {
            for r in records {
                serde_json::to_writer(&mut out, r).map_err(io::Error::from)?;
                out.write_all(b"\n")?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_records(records: &[SimRecord], path: &Path, format: Format) -> Result<(), RecordsError> {
    write_records_to(records, File::create(path)?, format)
}

pub fn read_records_from<R: io::Read>(input: R, format: Format) -> Result<Vec<SimRecord>, RecordsError> {
    match format {
        Format::Csv => {
            let mut reader = csv::Reader::from_reader(input);
            let header = reader
                .headers()
                .map_err(|e| RecordsError::Malformed {
                    line: 1,
                    message: e.to_string(),
                })?
                .iter()
                .collect::<Vec<_>>()
                .join(",");
            if header != CSV_HEADER {
                return Err(RecordsError::Malformed {
                    line: 1,
                    message: format!("unexpected header `{header}`"),
                });
            }
            reader
                .deserialize()
                .enumerate()
                .map(|(i, row)| {
                    row.map_err(|e| RecordsError::Malformed {
                        line: i + 2,
                        message: e.to_string(),
                    })
                })
                .collect()
        }
        Format::Jsonl => BufReader::new(input)
            .lines()
            .enumerate()
            .filter(|(_, line)| line.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|(i, line)| {
                serde_json::from_str(&line?).map_err(|e| RecordsError::Malformed {
                    line: i + 1,
                    message: e.to_string(),
                })
            })
            .collect(),
    }
}

pub fn read_records(path: &Path, format: Format) -> Result<Vec<SimRecord>, RecordsError> {
    read_records_from(File::open(path)?, format)
}
