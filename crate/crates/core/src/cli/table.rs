//! CSV tables written by the command-line tool.

use std::io::{Read, Write};

use csv::{ReaderBuilder, Terminator, WriterBuilder};
use num_rational::Ratio;

use crate::sweep::StaircaseSample;

pub const STAIRCASE_HEADER: [&str; 9] = [
    "T", "eta_num", "eta_den", "rho_num", "rho_den", "rate", "word", "period", "converged",
];

/// A header row plus records, all fields already formatted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn staircase_table(samples: &[StaircaseSample]) -> Table {
    let mut t = Table::new(&STAIRCASE_HEADER);
    for s in samples {
        t.push(vec![
            s.period.to_string(),
            s.eta.numer().to_string(),
            s.eta.denom().to_string(),
            s.rho.numer().to_string(),
            s.rho.denom().to_string(),
            s.rate.to_string(),
            s.word.clone(),
            s.period_p.to_string(),
            s.converged.to_string(),
        ]);
    }
    t
}

/// Reads a staircase table. Amplitude and duty cycle are not stored and come
/// back as NaN; contraction is not stored and is assumed.
pub fn read_staircase<R: Read>(input: R) -> Result<Vec<StaircaseSample>, String> {
    let mut r = ReaderBuilder::new().from_reader(input);
    let header = r.headers().map_err(|e| e.to_string())?.clone();
    if header.iter().ne(STAIRCASE_HEADER.iter().copied()) {
        return Err(format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = i + 2;
        let num = |j: usize| -> Result<u64, String> {
            rec[j].parse().map_err(|_| format!("row {row}: bad integer {:?}", &rec[j]))
        };
        let real = |j: usize| -> Result<f64, String> {
            rec[j].parse().map_err(|_| format!("row {row}: bad number {:?}", &rec[j]))
        };
        let ratio = |n: u64, d: u64| -> Result<Ratio<u64>, String> {
            if d == 0 {
                Err(format!("row {row}: zero denominator"))
            } else {
                Ok(Ratio::new(n, d))
            }
        };
        out.push(StaircaseSample {
            period: real(0)?,
            amplitude: f64::NAN,
            duty: f64::NAN,
            eta: ratio(num(1)?, num(2)?)?,
            rho: ratio(num(3)?, num(4)?)?,
            rate: real(5)?,
            word: rec[6].to_string(),
            period_p: num(7)? as usize,
            converged: rec[8].parse().map_err(|_| format!("row {row}: bad flag {:?}", &rec[8]))?,
            contraction_ok: true,
        });
    }
    Ok(out)
}
