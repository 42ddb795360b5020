//! CSV point-cloud and grid-function files.
//!
//! One row per point, one column per coordinate, `#` comment lines allowed.
//! Numbers are written in plain decimal notation with 17 significant digits,
//! which round-trips every finite `f64`.

use std::io::{Read, Write};

use crate::error::{bail, Result};
use crate::metric::{CompactSet, Point};

/// Formats a finite value in decimal notation with 17 significant digits.
pub fn fmt_decimal(v: f64) -> String {
    if v == 0.0 {
        return "0.0".to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(1) as usize;
    format!("{v:.decimals$}")
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(r)
}

/// Reads numeric rows, skipping comments and blank lines.
pub fn read_rows<R: Read>(r: R) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    for (line, record) in reader(r).records().enumerate() {
        let record = record?;
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>().map_err(|_| {
                    crate::Error::InvalidInput(format!("row {}: bad number {f:?}", line + 1))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_compact_set<R: Read>(r: R) -> Result<CompactSet> {
    let rows = read_rows(r)?;
    if rows.is_empty() {
        bail!(InvalidInput, "point cloud file has no rows");
    }
    let points = rows
        .iter()
        .map(|row| Point::new(row))
        .collect::<Result<Vec<_>>>()?;
    CompactSet::new(points)
}

pub fn write_compact_set<W: Write>(set: &CompactSet, mut w: W) -> Result<()> {
    writeln!(w, "# points={} dim={}", set.len(), set.dim())?;
    for p in set.points() {
        let line: Vec<String> = p.coords().iter().map(|&c| fmt_decimal(c)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

/// Writes `(x, y)` rows.
pub fn write_xy<W: Write>(
    rows: impl IntoIterator<Item = (f64, f64)>,
    header: &str,
    mut w: W,
) -> Result<()> {
    writeln!(w, "# {header}")?;
    for (x, y) in rows {
        writeln!(w, "{},{}", fmt_decimal(x), fmt_decimal(y))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decimal_has_enough_digits() {
        assert_eq!(fmt_decimal(0.5), "0.50000000000000000");
        assert_eq!(fmt_decimal(22.0), "22.000000000000000");
        assert!(!fmt_decimal(1e-20).contains('e'));
        assert!(!fmt_decimal(3e25).contains('e'));
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let text = "# header\n0.5, 1\n\n# mid\n2,3\n";
        let set = read_compact_set(text.as_bytes()).unwrap();
        assert_eq!(set.points(), &[Point::two(0.5, 1.0), Point::two(2.0, 3.0)]);
    }

    #[test]
    fn bad_rows_are_reported() {
        assert!(read_compact_set("1,x\n".as_bytes()).is_err());
        assert!(read_compact_set("# only comments\n".as_bytes()).is_err());
        assert!(read_compact_set("1\n1,2\n".as_bytes()).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip(coords in prop::collection::vec((-1e6f64..1e6, -1e-3f64..1e-3), 1..40)) {
            let points: Vec<Point> = coords.iter().map(|&(x, y)| Point::two(x, y)).collect();
            let set = CompactSet::new(points).unwrap();
            let mut buf = Vec::new();
            write_compact_set(&set, &mut buf).unwrap();
            let back = read_compact_set(buf.as_slice()).unwrap();
            prop_assert_eq!(back, set);
        }
    }
}
