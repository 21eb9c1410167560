//! Simulation record and its CSV form.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Sample {
    pub t: f64,
    /// `[i, v, i_a, omega]`.
    pub x: [f64; 4],
    /// Observer state; zero for laws without an observer.
    pub z: [f64; 7],
    pub wd: f64,
    /// True tracking error `wd - omega` (noise-free).
    pub e: f64,
    pub u_raw: f64,
    pub u_sat: f64,
    pub tau: f64,
    /// Lumped disturbance of the error dynamics, from plant internals.
    pub f_true: f64,
    pub f_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub samples: Vec<Sample>,
    /// Spacing of recorded samples.
    pub dt: f64,
}

pub const N_COLUMNS: usize = 19;

pub const COLUMNS: [&str; N_COLUMNS] = [
    "t", "i", "v", "i_a", "omega", "z1", "z2", "z3", "z4", "z5", "z6", "z7", "wd", "e", "u_raw", "u_sat", "tau",
    "F_true", "F_hat",
];

fn header() -> String {
    COLUMNS.join(",")
}

impl Sample {
    /// Values in [`COLUMNS`] order.
    pub fn values(&self) -> [f64; N_COLUMNS] {
        let mut v = [0.0; N_COLUMNS];
        v[0] = self.t;
        v[1..5].copy_from_slice(&self.x);
        v[5..12].copy_from_slice(&self.z);
        v[12] = self.wd;
        v[13] = self.e;
        v[14] = self.u_raw;
        v[15] = self.u_sat;
        v[16] = self.tau;
        v[17] = self.f_true;
        v[18] = self.f_hat;
        v
    }

    fn from_values(v: &[f64; N_COLUMNS]) -> Self {
        Self {
            t: v[0],
            x: v[1..5].try_into().expect("4 values"),
            z: v[5..12].try_into().expect("7 values"),
            wd: v[12],
            e: v[13],
            u_raw: v[14],
            u_sat: v[15],
            tau: v[16],
            f_true: v[17],
            f_hat: v[18],
        }
    }
}

impl Trace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.t)
    }

    /// Write with `digits` significant digits (9 is the default file format, 17 round-trips exactly).
    pub fn write_csv<W: Write>(&self, mut w: W, digits: usize) -> Result<()> {
        let io = |e: std::io::Error| Error::TraceCsv(e.to_string());
        let prec = digits.clamp(1, 17) - 1;
        writeln!(w, "{}", header()).map_err(io)?;
        let mut line = String::with_capacity(N_COLUMNS * 18);
        for s in &self.samples {
            line.clear();
            for (i, v) in s.values().iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                use std::fmt::Write as _;
                let _ = write!(line, "{v:.prec$e}");
            }
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn to_csv_string(&self, digits: usize) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, digits).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Parse a trace. The header must match exactly and the time grid must be uniform.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let bad = |m: String| Error::TraceCsv(m);
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let hdr = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        if hdr.iter().collect::<Vec<_>>() != COLUMNS {
            return Err(bad(format!("unexpected header: {}", hdr.iter().collect::<Vec<_>>().join(","))));
        }
        let mut samples = Vec::new();
        for (row, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            if rec.len() != N_COLUMNS {
                return Err(bad(format!("row {}: expected {N_COLUMNS} fields, got {}", row + 1, rec.len())));
            }
            let mut v = [0.0; N_COLUMNS];
            for (i, f) in rec.iter().enumerate() {
                v[i] =
                    f.trim().parse::<f64>().map_err(|e| bad(format!("row {}, column {}: {e}", row + 1, COLUMNS[i])))?;
            }
            if !v[0].is_finite() {
                return Err(bad(format!("row {}: time is not finite", row + 1)));
            }
            samples.push(Sample::from_values(&v));
        }
        let dt = match samples.as_slice() {
            [a, b, ..] => b.t - a.t,
            _ => 0.0,
        };
        if samples.len() > 1 {
            if dt.is_nan() || dt <= 0.0 {
                return Err(bad("time must increase".into()));
            }
            for (i, w) in samples.windows(2).enumerate() {
                let d = w[1].t - w[0].t;
                if (d - dt).abs() > 1e-6 * dt + 1e-9 * w[1].t.abs() {
                    return Err(bad(format!("non-uniform time grid at row {}", i + 2)));
                }
            }
        }
        Ok(Trace { samples, dt })
    }
}
