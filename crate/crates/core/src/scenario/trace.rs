//! Per-step simulation record and its CSV form.
//!
//! Columns, in order: `k, t`, one per state label, one per input label,
//! `v1..vr`, `m1..mr` (measured `BΛu`), `xi1..`, `xim1..`, `e1..`,
//! `th_i_j` for the `r × m` parameter in row-major order, `V`, `sigma_sq`.
//! Floats are written with 17 significant digits so parsing recovers them
//! bit-for-bit. An absent `V` is written as an empty field.

use std::io::{Read, Write};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub measured: Vec<f64>,
    pub xi: Vec<f64>,
    pub xi_m: Vec<f64>,
    pub e: Vec<f64>,
    /// Row-major `r × m`.
    pub theta: Vec<f64>,
    pub lyapunov: Option<f64>,
    pub sigma_sq: f64,
}

impl TraceRow {
    /// `max_i |v_i − measured_i|`.
    pub fn allocation_error(&self) -> f64 {
        self.v
            .iter()
            .zip(&self.measured)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Every vector signal in column order, excluding `k`, `t`, `V` and `sigma_sq`.
    pub fn signals(&self) -> impl Iterator<Item = &f64> {
        self.x
            .iter()
            .chain(&self.u)
            .chain(&self.v)
            .chain(&self.measured)
            .chain(&self.xi)
            .chain(&self.xi_m)
            .chain(&self.e)
            .chain(&self.theta)
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self.sigma_sq.is_finite()
            && self.lyapunov.is_none_or(f64::is_finite)
            && self.signals().all(|x| x.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioTrace {
    pub state_labels: Vec<String>,
    pub input_labels: Vec<String>,
    pub r: usize,
    pub rows: Vec<TraceRow>,
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl ScenarioTrace {
    pub fn n(&self) -> usize {
        self.state_labels.len()
    }

    pub fn m(&self) -> usize {
        self.input_labels.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn header(&self) -> Vec<String> {
        let r = self.r;
        let mut h = vec!["k".to_string(), "t".to_string()];
        h.extend(self.state_labels.iter().cloned());
        h.extend(self.input_labels.iter().cloned());
        for prefix in ["v", "m", "xi", "xim", "e"] {
            h.extend((1..=r).map(|i| format!("{prefix}{i}")));
        }
        for i in 1..=r {
            h.extend((1..=self.m()).map(|j| format!("th_{i}_{j}")));
        }
        h.push("V".into());
        h.push("sigma_sq".into());
        h
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let mut rec = Vec::with_capacity(self.header_len());
            rec.push(row.k.to_string());
            rec.push(fmt_f64(row.t));
            rec.extend(row.signals().map(|x| fmt_f64(*x)));
            rec.push(row.lyapunov.map(fmt_f64).unwrap_or_default());
            rec.push(fmt_f64(row.sigma_sq));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Trace(e.to_string()))
    }

    fn header_len(&self) -> usize {
        2 + self.n() + self.m() + 5 * self.r + self.r * self.m() + 2
    }

    /// Parses a trace written by [`ScenarioTrace::write_csv`]; dimensions are
    /// inferred from the header.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
        let bad = |msg: &str| Error::Trace(msg.to_string());

        if header.len() < 4 || header[0] != "k" || header[1] != "t" {
            return Err(bad("header must start with k,t"));
        }
        let v1 = header
            .iter()
            .position(|h| h == "v1")
            .ok_or_else(|| bad("missing v1 column"))?;
        let r = header[v1..]
            .iter()
            .take_while(|h| h.starts_with('v') && h[1..].parse::<usize>().is_ok())
            .count();
        let th_cols = header.iter().filter(|h| h.starts_with("th_")).count();
        if r == 0 || th_cols % r != 0 {
            return Err(bad("inconsistent v/theta columns"));
        }
        let m = th_cols / r;
        if v1 < 2 + m {
            return Err(bad("fewer label columns than inputs"));
        }
        let n = v1 - 2 - m;
        let trace = Self {
            state_labels: header[2..2 + n].to_vec(),
            input_labels: header[2 + n..v1].to_vec(),
            r,
            rows: Vec::new(),
        };
        if trace.header() != header {
            return Err(bad("header does not match the expected layout"));
        }

        let mut rows = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != header.len() {
                return Err(Error::Trace(format!("row {line} has {} fields", rec.len())));
            }
            let num = |i: usize| -> Result<f64> {
                rec[i]
                    .parse::<f64>()
                    .map_err(|e| Error::Trace(format!("row {line}, column {}: {e}", header[i])))
            };
            let mut col = 2;
            let mut take = |count: usize| -> Result<Vec<f64>> {
                let out = (col..col + count).map(&num).collect::<Result<Vec<_>>>()?;
                col += count;
                Ok(out)
            };
            let x = take(n)?;
            let u = take(m)?;
            let v = take(r)?;
            let measured = take(r)?;
            let xi = take(r)?;
            let xi_m = take(r)?;
            let e = take(r)?;
            let theta = take(r * m)?;
            let last = header.len() - 1;
            let lyapunov = if rec[last - 1].is_empty() {
                None
            } else {
                Some(num(last - 1)?)
            };
            rows.push(TraceRow {
                k: rec[0]
                    .parse()
                    .map_err(|e| Error::Trace(format!("row {line}, column k: {e}")))?,
                t: num(1)?,
                x,
                u,
                v,
                measured,
                xi,
                xi_m,
                e,
                theta,
                lyapunov,
                sigma_sq: num(last)?,
            });
        }
        Ok(Self { rows, ..trace })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScenarioTrace {
        ScenarioTrace {
            state_labels: vec!["x".into()],
            input_labels: vec!["a".into(), "b".into()],
            r: 1,
            rows: vec![
                TraceRow {
                    k: 0,
                    t: 0.0,
                    x: vec![0.1],
                    u: vec![1.0 / 3.0, -2.0e-300],
                    v: vec![std::f64::consts::PI],
                    measured: vec![-0.0],
                    xi: vec![1e10],
                    xi_m: vec![5e-324],
                    e: vec![0.7],
                    theta: vec![0.5, 0.5],
                    lyapunov: None,
                    sigma_sq: 1.0,
                },
                TraceRow {
                    k: 1,
                    t: 0.1,
                    x: vec![f64::MAX],
                    u: vec![0.0, 0.0],
                    v: vec![0.0],
                    measured: vec![0.0],
                    xi: vec![0.0],
                    xi_m: vec![0.0],
                    e: vec![0.0],
                    theta: vec![0.1 + 0.2, 0.0],
                    lyapunov: Some(1.0 / 7.0),
                    sigma_sq: 1.0,
                },
            ],
        }
    }

    #[test]
    fn header_layout() {
        assert_eq!(
            sample().header(),
            [
                "k", "t", "x", "a", "b", "v1", "m1", "xi1", "xim1", "e1", "th_1_1", "th_1_2", "V",
                "sigma_sq"
            ]
        );
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample();
        let text = t.to_csv_string().unwrap();
        let back = ScenarioTrace::read_csv(text.as_bytes()).unwrap();
        assert_eq!(back, t);
        for (a, b) in back.rows[0].signals().zip(t.rows[0].signals()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_malformed() {
        assert!(ScenarioTrace::read_csv("a,b\n1,2\n".as_bytes()).is_err());
        let mut text = sample().to_csv_string().unwrap();
        text.push_str("2,0.2\n");
        assert!(ScenarioTrace::read_csv(text.as_bytes()).is_err());
    }
}
