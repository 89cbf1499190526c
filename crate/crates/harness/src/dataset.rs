//! CSV datasets and seeded toy generators.
//!
//! Header: `x0,..,x{n_x-1},y0,..,y{n_y-1}`; one sample per row.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::Array1;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Array1<f64>,
    pub y: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub input_width: usize,
    pub output_width: usize,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Seeded shuffle, then the last `round(fraction·len)` samples become the test set.
    pub fn split(&self, test_fraction: f64, seed: u64) -> (Dataset, Dataset) {
        let mut order: Vec<usize> = (0..self.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        order.shuffle(&mut rng);
        let n_test = (test_fraction * self.len() as f64).round() as usize;
        let n_train = self.len() - n_test;
        let pick = |idx: &[usize]| Dataset {
            input_width: self.input_width,
            output_width: self.output_width,
            samples: idx.iter().map(|&i| self.samples[i].clone()).collect(),
        };
        (pick(&order[..n_train]), pick(&order[n_train..]))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.input_width)
            .map(|i| format!("x{i}"))
            .chain((0..self.output_width).map(|i| format!("y{i}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for s in &self.samples {
            let row: Vec<String> = s.x.iter().chain(s.y.iter()).map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut f = File::create(path).map_err(|e| HarnessError::io(path, e))?;
        f.write_all(self.to_csv_string().as_bytes()).map_err(|e| HarnessError::io(path, e))
    }
}

pub fn load_csv(path: &Path) -> Result<Dataset> {
    let f = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    parse_csv(f)
}

fn header_widths(header: &csv::StringRecord) -> Result<(usize, usize)> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let n_x = names.iter().take_while(|n| n.starts_with('x')).count();
    let n_y = names.len() - n_x;
    let expected: Vec<String> =
        (0..n_x).map(|i| format!("x{i}")).chain((0..n_y).map(|i| format!("y{i}"))).collect();
    if n_x == 0 || n_y == 0 || names != expected {
        return Err(HarnessError::Schema(format!(
            "header must be x0..x{{n_x-1}},y0..y{{n_y-1}}, got '{}'",
            names.join(",")
        )));
    }
    Ok((n_x, n_y))
}

pub fn parse_csv(reader: impl Read) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(|e| HarnessError::Parse { line: 1, message: e.to_string() })?,
        None => return Err(HarnessError::Schema("empty file: missing header".into())),
    };
    let (n_x, n_y) = header_widths(&header)?;
    let mut samples = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| HarnessError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != n_x + n_y {
            return Err(HarnessError::Schema(format!(
                "line {line}: expected {} columns, found {}",
                n_x + n_y,
                rec.len()
            )));
        }
        let values = rec
            .iter()
            .map(|field| {
                field.trim().parse::<f64>().map_err(|_| HarnessError::Parse {
                    line,
                    message: format!("'{field}' is not a number"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        samples.push(Sample {
            x: Array1::from(values[..n_x].to_vec()),
            y: Array1::from(values[n_x..].to_vec()),
        });
    }
    if samples.is_empty() {
        return Err(HarnessError::Schema("no data rows".into()));
    }
    Ok(Dataset { input_width: n_x, output_width: n_y, samples })
}

/// The four XOR points with a single 0/1 label.
pub fn xor() -> Dataset {
    let samples = [(0.0, 0.0, 0.0), (0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 0.0)]
        .into_iter()
        .map(|(a, b, y)| Sample { x: Array1::from(vec![a, b]), y: Array1::from(vec![y]) })
        .collect();
    Dataset { input_width: 2, output_width: 1, samples }
}

/// Two interleaved half circles with Gaussian noise, centered near the
/// origin, one-hot labels. Classes alternate so any prefix is balanced.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise.max(0.0)).expect("finite noise");
    let samples = (0..n)
        .map(|i| {
            let class = i % 2;
            let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
            let (px, py) = if class == 0 { (t.cos(), t.sin()) } else { (1.0 - t.cos(), 0.5 - t.sin()) };
            let x = vec![px + jitter.sample(&mut rng) - 0.5, py + jitter.sample(&mut rng) - 0.25];
            let mut y = vec![0.0, 0.0];
            y[class] = 1.0;
            Sample { x: Array1::from(x), y: Array1::from(y) }
        })
        .collect();
    Dataset { input_width: 2, output_width: 2, samples }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_round_trips() {
        let d = parse_csv(xor().to_csv_string().as_bytes()).unwrap();
        assert_eq!(d.len(), 4);
        assert_eq!((d.input_width, d.output_width), (2, 1));
        assert_eq!(d, xor());
    }

    #[test]
    fn two_moons_round_trips_exactly() {
        let d = two_moons(200, 0.1, 3);
        assert_eq!(d, two_moons(200, 0.1, 3));
        let back = parse_csv(d.to_csv_string().as_bytes()).unwrap();
        assert_eq!(back.len(), 200);
        assert_eq!(back, d);
    }

    #[test]
    fn empty_and_malformed_inputs() {
        assert!(matches!(parse_csv("".as_bytes()), Err(HarnessError::Schema(_))));
        assert!(matches!(parse_csv("x0,y0\n".as_bytes()), Err(HarnessError::Schema(_))));
        assert!(matches!(parse_csv("a,b\n1,2\n".as_bytes()), Err(HarnessError::Schema(_))));
        assert!(matches!(parse_csv("x0,x1\n1,2\n".as_bytes()), Err(HarnessError::Schema(_))));
        assert!(matches!(parse_csv("x0,y1\n1,2\n".as_bytes()), Err(HarnessError::Schema(_))));
        match parse_csv("x0,y0\n1,2\n3,oops\n".as_bytes()) {
            Err(HarnessError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(matches!(parse_csv("x0,y0\n1,2\n3\n".as_bytes()), Err(HarnessError::Schema(_))));
    }

    #[test]
    fn split_is_seeded_partition() {
        let d = two_moons(50, 0.1, 1);
        let (train, test) = d.split(0.2, 9);
        assert_eq!((train.len(), test.len()), (40, 10));
        assert_eq!(d.split(0.2, 9), (train.clone(), test));
        let (all, none) = d.split(0.0, 9);
        assert_eq!((all.len(), none.len()), (50, 0));
    }
}
