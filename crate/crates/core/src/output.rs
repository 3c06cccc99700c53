//! CSV emission for orbits, grids and sections.
//!
//! Floats are written with 17 significant digits so every value re-parses to
//! the same double. Missing values are empty fields.

use std::io::{self, Write};

use crate::sweep::{Section, SweepCell, SweepGrid};

pub const GRID_HEADER: [&str; 12] =
    ["f0", "f1", "f0Q", "f1Qp", "outcome", "x0", "x1", "x2", "time", "log10_time", "analytic_outcome", "agreement"];

pub const SECTION_EXTRA_HEADER: [&str; 1] = ["rescaled_time"];

pub const EIGEN_HEADER: [&str; 8] =
    ["branch", "lambda1", "lambda2", "lambda3", "method", "lambda1_im", "lambda2_im", "lambda3_im"];

pub const ORBIT_HEADER: [&str; 4] = ["t", "x0", "x1", "x2"];

/// `{:.16e}` formatting: 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn cell_fields(c: &SweepCell) -> Vec<String> {
    let d = c.densities;
    vec![
        fmt_f64(c.f0),
        fmt_f64(c.f1),
        fmt_f64(c.f0q),
        fmt_f64(c.f1qp),
        c.outcome.as_str().to_string(),
        fmt_opt(d.map(|d| d.x0)),
        fmt_opt(d.map(|d| d.x1)),
        fmt_opt(d.map(|d| d.x2)),
        fmt_opt(c.time),
        fmt_opt(c.log10_time()),
        c.analytic.map(|k| crate::sweep::Outcome::from_kind(k).as_str()).unwrap_or("Degenerate").to_string(),
        if c.agreement { "1" } else { "0" }.to_string(),
    ]
}

fn write_row<W: Write>(w: &mut W, fields: &[String]) -> io::Result<()> {
    writeln!(w, "{}", fields.join(","))
}

pub fn write_grid_csv<W: Write>(grid: &SweepGrid, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", GRID_HEADER.join(","))?;
    for c in &grid.cells {
        write_row(&mut w, &cell_fields(c))?;
    }
    Ok(())
}

/// Header of a section file, with or without eigenvalue columns.
pub fn section_header(with_eigen: bool) -> Vec<&'static str> {
    let mut h: Vec<&str> = GRID_HEADER.to_vec();
    h.extend(SECTION_EXTRA_HEADER);
    if with_eigen {
        h.extend(EIGEN_HEADER);
    }
    h
}

pub fn write_section_csv<W: Write>(section: &Section, with_eigen: bool, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", section_header(with_eigen).join(","))?;
    for row in &section.rows {
        let mut f = cell_fields(&row.cell);
        f.push(fmt_opt(row.rescaled_time()));
        if with_eigen {
            f.push(section.branch.map(|b| b.name()).unwrap_or("").to_string());
            match &row.eigen {
                Some(e) => {
                    f.extend(e.values.iter().map(|v| fmt_f64(v.re)));
                    f.push(e.method.as_str().to_string());
                    f.extend(e.values.iter().map(|v| fmt_f64(v.im)));
                }
                None => {
                    f.extend(std::iter::repeat_n(String::new(), 3));
                    f.push("none".to_string());
                    f.extend(std::iter::repeat_n(String::new(), 3));
                }
            }
        }
        write_row(&mut w, &f)?;
    }
    Ok(())
}

/// Rows of `(t, x...)`; the header names subclones `x2_1, x2_2, ...` when
/// there are more than three state components.
pub fn write_orbit_csv<W: Write>(rows: &[(f64, Vec<f64>)], mut w: W) -> io::Result<()> {
    let dim = rows.first().map(|r| r.1.len()).unwrap_or(3);
    let mut header: Vec<String> = vec!["t".into(), "x0".into(), "x1".into()];
    if dim == 3 {
        header.push("x2".into());
    } else {
        header.extend((1..=dim.saturating_sub(2)).map(|i| format!("x2_{i}")));
    }
    writeln!(w, "{}", header.join(","))?;
    for (t, y) in rows {
        let mut f = vec![fmt_f64(*t)];
        f.extend(y.iter().map(|v| fmt_f64(*v)));
        write_row(&mut w, &f)?;
    }
    Ok(())
}

/// A parsed CSV table: header plus raw string fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Numeric column; empty fields become `None`.
    pub fn floats(&self, name: &str) -> Result<Vec<Option<f64>>, String> {
        let j = self.column(name).ok_or_else(|| format!("missing column {name}"))?;
        self.rows
            .iter()
            .map(|r| {
                let s = r[j].trim();
                if s.is_empty() {
                    Ok(None)
                } else {
                    s.parse::<f64>().map(Some).map_err(|e| format!("column {name}: {e} ({s:?})"))
                }
            })
            .collect()
    }

    pub fn strings(&self, name: &str) -> Result<Vec<&str>, String> {
        let j = self.column(name).ok_or_else(|| format!("missing column {name}"))?;
        Ok(self.rows.iter().map(|r| r[j].as_str()).collect())
    }
}

/// Parses comma-separated text with a header row. Every row must have as
/// many fields as the header.
pub fn parse_csv(text: &str) -> Result<Table, String> {
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let header: Vec<String> = lines.next().ok_or("empty file")?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<String> = line.split(',').map(str::to_string).collect();
        if fields.len() != header.len() {
            return Err(format!("row {} has {} fields, header has {}", i + 1, fields.len(), header.len()));
        }
        rows.push(fields);
    }
    Ok(Table { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            prop_assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn orbit_csv_parses() {
        let rows = vec![(0.0, vec![1.0, 0.0, 0.0]), (0.5, vec![0.9, 0.05, 0.05])];
        let mut buf = Vec::new();
        write_orbit_csv(&rows, &mut buf).unwrap();
        let t = parse_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(t.header, ORBIT_HEADER.to_vec());
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.floats("x1").unwrap()[1], Some(0.05));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(parse_csv("a,b\n1,2\n3\n").is_err());
    }
}
