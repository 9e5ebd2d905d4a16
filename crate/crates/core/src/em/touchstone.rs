//! Touchstone 1.1 and CSV emission for 4-port S-parameter tables.

use std::fmt::Write as _;

use super::{db, phase_deg, SParamTable};
use crate::error::Error;

/// Touchstone v1 text. The first line is the option line
/// `# GHz S RI R <z0>`; each frequency then takes four lines holding one
/// matrix row each (the first prefixed by the frequency), entries as
/// real/imaginary pairs.
pub fn to_touchstone(table: &SParamTable) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# GHz S RI R {}", fmt_ref(table.z0));
    for row in &table.rows {
        for i in 0..4 {
            if i == 0 {
                let _ = write!(s, "{:.9}", row.frequency_ghz);
            } else {
                s.push_str("           ");
            }
            for j in 0..4 {
                let z = row.s[i][j];
                let _ = write!(s, " {:.12e} {:.12e}", z.re, z.im);
            }
            s.push('\n');
        }
    }
    s
}

fn fmt_ref(z0: f64) -> String {
    if z0.fract() == 0.0 {
        format!("{}", z0 as i64)
    } else {
        format!("{z0}")
    }
}

pub const CSV_HEADER_PREFIX: &str = "freq_GHz";

pub fn csv_header() -> String {
    let mut h = String::from(CSV_HEADER_PREFIX);
    for i in 1..=4 {
        for j in 1..=4 {
            let _ = write!(h, ",S{i}{j}_dB,S{i}{j}_deg");
        }
    }
    h
}

/// CSV with `freq_GHz` followed by `Sij_dB,Sij_deg` for all 16 entries.
pub fn to_csv(table: &SParamTable) -> String {
    let mut s = csv_header();
    s.push('\n');
    for row in &table.rows {
        let _ = write!(s, "{:.9}", row.frequency_ghz);
        for i in 0..4 {
            for j in 0..4 {
                let _ = write!(s, ",{:.6},{:.4}", db(row.s[i][j]), phase_deg(row.s[i][j]));
            }
        }
        s.push('\n');
    }
    s
}

/// One parsed CSV row: frequency and |S_ij| in dB, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub frequency_ghz: f64,
    pub db: [f64; 16],
    pub deg: [f64; 16],
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>, Error> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::format("S-parameter CSV", "empty file"))?;
    if header.trim_end() != csv_header() {
        return Err(Error::format("S-parameter CSV", "unexpected header"));
    }
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals: Result<Vec<f64>, _> = line.split(',').map(|v| v.trim().parse::<f64>()).collect();
        let vals = vals.map_err(|e| Error::format("S-parameter CSV", format!("line {}: {e}", n + 2)))?;
        if vals.len() != 33 {
            return Err(Error::format("S-parameter CSV", format!("line {}: expected 33 fields, got {}", n + 2, vals.len())));
        }
        rows.push(CsvRow {
            frequency_ghz: vals[0],
            db: std::array::from_fn(|k| vals[1 + 2 * k]),
            deg: std::array::from_fn(|k| vals[2 + 2 * k]),
        });
    }
    if rows.is_empty() {
        return Err(Error::format("S-parameter CSV", "no data rows"));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::em::SParamRow;
    use num_complex::Complex64;

    fn table() -> SParamTable {
        let rows = (0..3)
            .map(|k| SParamRow {
                frequency_ghz: 8.0 + 0.25 * k as f64,
                s: std::array::from_fn(|i| std::array::from_fn(|j| Complex64::new(0.1 * (i + 1) as f64, 0.01 * (j + k) as f64))),
            })
            .collect();
        SParamTable { z0: 50.0, rows }
    }

    #[test]
    fn touchstone_layout() {
        let text = to_touchstone(&table());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# GHz S RI R 50");
        assert_eq!(lines.len(), 1 + 3 * 4);
        assert!(lines[1].starts_with("8.000000000 1.000000000000e-1 0.000000000000e0"));
        assert_eq!(lines[2].split_whitespace().count(), 8);
    }

    #[test]
    fn csv_roundtrip() {
        let t = table();
        let rows = parse_csv(&to_csv(&t)).unwrap();
        assert_eq!(rows.len(), 3);
        assert!((rows[1].frequency_ghz - 8.25).abs() < 1e-12);
        assert!((rows[0].db[4] - db(t.rows[0].s[1][0])).abs() < 1e-6);
        assert!(to_csv(&t).lines().next().unwrap().starts_with("freq_GHz,S11_dB,S11_deg,S12_dB"));
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("a,b\n1,2\n").is_err());
        let mut bad = csv_header();
        bad.push_str("\n1,2,3\n");
        assert!(parse_csv(&bad).is_err());
    }
}
