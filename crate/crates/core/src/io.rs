//! CSV serialization of fields, spectra, and jets.
//!
//! Formats (comma-separated, '.' decimal, no quoting):
//!
//! * field:    header `x,value`, one row per grid node in order;
//! * spectrum: header `n,re,im`, one row per signed frequency from
//!   -n/2 to n/2-1;
//! * jets:     rows `x,k,v0,…,vk` with no header (rows are ragged).
//!
//! Floats are printed with Rust's shortest round-trip `Display`, so
//! write → read → write is byte-identical and values survive bit-exactly.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};
use crate::jet::Jet;

fn csv_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Csv {
        line,
        msg: msg.into(),
    }
}

fn parse_f64(line: usize, s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| csv_err(line, format!("malformed number {s:?}")))?;
    if !v.is_finite() {
        return Err(csv_err(line, "non-finite value"));
    }
    Ok(v)
}

/// Serialize a field as `x,value` rows.
pub fn write_field_csv(f: &Field) -> String {
    let mut out = String::from("x,value\n");
    for (i, x) in f.grid().points().enumerate() {
        out.push_str(&format!("{x},{}\n", f.value_at_node(i)));
    }
    out
}

/// Parse a field from `x,value` rows; the row count must be a valid grid
/// size and the x column must match the grid nodes.
pub fn read_field_csv(src: &str) -> Result<Field> {
    let mut lines = src.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "x,value" => {}
        _ => return Err(csv_err(1, "expected header 'x,value'")),
    }
    let mut samples = Vec::new();
    let mut xs = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (x, v) = match (cols.next(), cols.next(), cols.next()) {
            (Some(x), Some(v), None) => (x, v),
            _ => return Err(csv_err(i + 1, "expected two columns")),
        };
        xs.push(parse_f64(i + 1, x)?);
        samples.push(parse_f64(i + 1, v)?);
    }
    let grid = GridSpec::new(samples.len())?;
    for (i, (&x, gx)) in xs.iter().zip(grid.points()).enumerate() {
        if (x - gx).abs() > grid.spacing() / 2.0 {
            return Err(csv_err(i + 2, format!("x = {x} is not the expected node {gx}")));
        }
    }
    Field::from_samples(grid, samples)
}

/// Serialize the spectrum as `n,re,im` rows, frequencies ascending from
/// -n/2 to n/2-1.
pub fn write_spectrum_csv(f: &Field) -> String {
    let n = f.grid().n_points() as i64;
    let mut out = String::from("n,re,im\n");
    for freq in -n / 2..n / 2 {
        let c = f.spectrum_at(freq);
        out.push_str(&format!("{freq},{},{}\n", c.re, c.im));
    }
    out
}

/// Parse a spectrum CSV back into (grid, coefficients in FFT bin order).
pub fn read_spectrum_csv(src: &str) -> Result<(GridSpec, Vec<Complex64>)> {
    let mut lines = src.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == "n,re,im" => {}
        _ => return Err(csv_err(1, "expected header 'n,re,im'")),
    }
    let mut rows: Vec<(i64, Complex64)> = Vec::new();
    for (i, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(csv_err(i + 1, "expected three columns"));
        }
        let freq: i64 = cols[0]
            .trim()
            .parse()
            .map_err(|_| csv_err(i + 1, "malformed frequency"))?;
        let re = parse_f64(i + 1, cols[1])?;
        let im = parse_f64(i + 1, cols[2])?;
        rows.push((freq, Complex64::new(re, im)));
    }
    let n = rows.len();
    let grid = GridSpec::new(n)?;
    let half = n as i64 / 2;
    let mut bins = vec![Complex64::default(); n];
    let mut seen = vec![false; n];
    for (i, (freq, c)) in rows.into_iter().enumerate() {
        if freq < -half || freq >= half {
            return Err(csv_err(i + 2, format!("frequency {freq} out of range")));
        }
        let idx = freq.rem_euclid(n as i64) as usize;
        if seen[idx] {
            return Err(csv_err(i + 2, format!("duplicate frequency {freq}")));
        }
        seen[idx] = true;
        bins[idx] = c;
    }
    Ok((grid, bins))
}

/// Serialize jets as `x,k,v0,…,vk` rows.
pub fn write_jets_csv(jets: &[Jet]) -> String {
    let mut out = String::new();
    for j in jets {
        out.push_str(&format!("{},{}", j.base_point(), j.order()));
        for v in j.values() {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

/// Parse jets from `x,k,v0,…,vk` rows.
pub fn read_jets_csv(src: &str) -> Result<Vec<Jet>> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(csv_err(i + 1, "expected at least x,k,v0"));
        }
        let x = parse_f64(i + 1, cols[0])?;
        let k: usize = cols[1]
            .trim()
            .parse()
            .map_err(|_| csv_err(i + 1, "malformed jet order"))?;
        if k > 64 {
            return Err(csv_err(i + 1, "jet order out of range"));
        }
        if cols.len() != k + 3 {
            return Err(csv_err(
                i + 1,
                format!("jet of order {k} needs {} value columns", k + 1),
            ));
        }
        let values = cols[2..]
            .iter()
            .map(|c| parse_f64(i + 1, c))
            .collect::<Result<Vec<f64>>>()?;
        out.push(Jet::new(x, values).map_err(|_| csv_err(i + 1, "invalid jet"))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn field_csv_round_trip_is_byte_exact() {
        let g = GridSpec::new(64).unwrap();
        let f = Field::random(g, 9, 8, 0.7).unwrap();
        let csv = write_field_csv(&f);
        let back = read_field_csv(&csv).unwrap();
        assert_eq!(back, f);
        assert_eq!(write_field_csv(&back), csv);
    }

    #[test]
    fn spectrum_csv_round_trip_is_byte_exact() {
        let g = GridSpec::new(64).unwrap();
        let f = Field::random(g, 11, 8, 0.7).unwrap();
        let csv = write_spectrum_csv(&f);
        let (grid, bins) = read_spectrum_csv(&csv).unwrap();
        assert_eq!(grid, g);
        for (i, c) in bins.iter().enumerate() {
            assert_eq!(*c, f.spectrum()[i]);
        }
    }

    #[test]
    fn jets_csv_round_trip() {
        let jets = vec![
            Jet::new(0.5, vec![1.0, -2.0, 3.5]).unwrap(),
            Jet::new(3.25, vec![0.125]).unwrap(),
        ];
        let csv = write_jets_csv(&jets);
        let back = read_jets_csv(&csv).unwrap();
        assert_eq!(back, jets);
        assert_eq!(write_jets_csv(&back), csv);
    }

    #[test]
    fn malformed_inputs_are_rejected_without_panicking() {
        assert!(read_field_csv("").is_err());
        assert!(read_field_csv("x,value\n1,2,3\n").is_err());
        assert!(read_field_csv("x,value\n0,nan\n").is_err());
        // 3 rows is not a valid grid size.
        assert!(read_field_csv("x,value\n0,1\n1,1\n2,1\n").is_err());
        assert!(read_spectrum_csv("n,re,im\n99999,0,0\n").is_err());
        assert!(read_spectrum_csv("n,re,im\nq,0,0\n").is_err());
        assert!(read_jets_csv("0,2,1\n").is_err());
        assert!(read_jets_csv("0,70,1\n").is_err());
        assert!(read_jets_csv("0,1,1,inf\n").is_err());
    }

    proptest! {
        #[test]
        fn field_round_trip_any_samples(values in proptest::collection::vec(-1e12f64..1e12, 64)) {
            let g = GridSpec::new(64).unwrap();
            let f = Field::from_samples(g, values).unwrap();
            let back = read_field_csv(&write_field_csv(&f)).unwrap();
            prop_assert_eq!(back.samples(), f.samples());
        }

        #[test]
        fn jet_round_trip_any_values(
            x in 0.0f64..6.28,
            values in proptest::collection::vec(-1e9f64..1e9, 1..8),
        ) {
            let jets = vec![Jet::new(x, values).unwrap()];
            let back = read_jets_csv(&write_jets_csv(&jets)).unwrap();
            prop_assert_eq!(back, jets);
        }
    }
}
