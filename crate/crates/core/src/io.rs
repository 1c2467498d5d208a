//! CSV files written and read by the command-line tools.
//!
//! Every file starts with `# key=value` metadata lines followed by a header
//! row and numeric rows. Floats are written in shortest round-trip scientific
//! notation, so output is byte-identical for identical inputs.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::signal::{SignalUnit, TimeSeries};
use crate::spectral::{SpectrumEstimate, SpectrumUnit, Window};

pub const TIMESERIES_HEADER: [&str; 2] = ["time_s", "tilt_rad"];
pub const SPECTRUM_HEADER: [&str; 3] = ["freq_hz", "tilt_asd_rad_rthz", "phase_asd_rad_rthz"];
pub const MONTECARLO_HEADER: [&str; 3] = ["trial", "phi_hat", "theta_hat"];

/// Metadata plus a numeric table.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), ..Default::default() }
    }

    pub fn meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn get_meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.headers.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k}={v}")?;
        }
        writeln!(w, "{}", self.headers.join(","))?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let meta = text
            .lines()
            .filter_map(|l| l.strip_prefix('#'))
            .filter_map(|l| l.trim().split_once('='))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse(e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect::<Vec<_>>();
        let mut rows = Vec::new();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            let row = rec
                .iter()
                .map(|v| v.parse::<f64>().map_err(|e| Error::Parse(format!("row {i}: '{v}': {e}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Ok(Self { meta, headers, rows })
    }
}

fn parse_meta<T: std::str::FromStr>(t: &Table, key: &str) -> Result<T> {
    t.get_meta(key)
        .ok_or_else(|| Error::Parse(format!("missing metadata '{key}'")))?
        .parse()
        .map_err(|_| Error::Parse(format!("bad metadata '{key}'")))
}

fn expect_headers(t: &Table, expected: &[&str]) -> Result<()> {
    if t.headers.iter().map(String::as_str).ne(expected.iter().copied()) {
        return Err(Error::Parse(format!("expected header {:?}, got {:?}", expected, t.headers)));
    }
    Ok(())
}

pub fn timeseries_table(series: &TimeSeries) -> Table {
    let mut t = Table::new(&TIMESERIES_HEADER)
        .meta("sample_rate_hz", format!("{:e}", series.sample_rate()))
        .meta("start_time_s", format!("{:e}", series.start_time));
    if let Some(seed) = series.seed {
        t = t.meta("seed", seed);
    }
    if let SignalUnit::Amplified { gain } = series.unit {
        t = t.meta("gain", format!("{gain:e}"));
    }
    t.rows = series.samples().iter().enumerate().map(|(i, v)| vec![series.time(i), *v]).collect();
    t
}

pub fn timeseries_from_table(t: &Table) -> Result<TimeSeries> {
    expect_headers(t, &TIMESERIES_HEADER)?;
    let fs: f64 = parse_meta(t, "sample_rate_hz")?;
    let mut s = TimeSeries::new(t.rows.iter().map(|r| r[1]).collect(), fs)?;
    s.start_time = parse_meta(t, "start_time_s").unwrap_or(0.0);
    s.seed = t.get_meta("seed").and_then(|v| v.parse().ok());
    if let Some(g) = t.get_meta("gain") {
        let gain = g.parse().map_err(|_| Error::Parse("bad gain".into()))?;
        s.unit = SignalUnit::Amplified { gain };
    }
    Ok(s)
}

/// Spectrum table with tilt and phase columns; `phase_per_tilt` is √2·k₀·L.
pub fn spectrum_table(tilt: &SpectrumEstimate, phase_per_tilt: f64) -> Table {
    let mut t = Table::new(&SPECTRUM_HEADER)
        .meta("window", tilt.window.name())
        .meta("w", tilt.smoothing)
        .meta("segments", tilt.segments)
        .meta("resolution_hz", format!("{:e}", tilt.resolution))
        .meta("phase_per_tilt", format!("{phase_per_tilt:e}"));
    t.rows = tilt
        .freqs
        .iter()
        .zip(&tilt.asd)
        .map(|(f, a)| vec![*f, *a, a * phase_per_tilt])
        .collect();
    t
}

/// Reads back the tilt spectrum of a [`spectrum_table`].
pub fn spectrum_from_table(t: &Table) -> Result<SpectrumEstimate> {
    expect_headers(t, &SPECTRUM_HEADER)?;
    let window: Window = t.get_meta("window").unwrap_or("rectangular").parse()?;
    Ok(SpectrumEstimate {
        freqs: t.rows.iter().map(|r| r[0]).collect(),
        asd: t.rows.iter().map(|r| r[1]).collect(),
        resolution: parse_meta(t, "resolution_hz")?,
        window,
        smoothing: parse_meta(t, "w")?,
        segments: parse_meta(t, "segments")?,
        unit: SpectrumUnit::TiltRadPerRtHz,
    })
}
