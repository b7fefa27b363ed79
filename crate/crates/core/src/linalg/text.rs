//! Plain-text matrix format: a `m n` header, then `m` lines of `n`
//! space-separated values written with 17 significant digits.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use super::{ensure_finite, Matrix};
use crate::{Error, Result};

/// Formats a value with 17 significant digits, enough to round-trip `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_matrix<W: Write>(mut w: W, m: &Matrix) -> Result<()> {
    w.write_all(matrix_to_string(m).as_bytes())?;
    Ok(())
}

pub fn matrix_to_string(m: &Matrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    append_rows(&mut out, m);
    out
}

pub(crate) fn append_rows(out: &mut String, m: &Matrix) {
    for row in m.rows() {
        let line: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
}

pub fn read_matrix<R: BufRead>(r: R) -> Result<Matrix> {
    let mut lines = r.lines();
    let header = next_content_line(&mut lines)?.ok_or_else(|| Error::format("missing header"))?;
    let (rows, cols) = parse_dims(&header, 2)
        .map(|d| (d[0], d[1]))
        .ok_or_else(|| Error::format(format!("bad header {header:?}, expected \"m n\"")))?;
    let m = read_rows(&mut lines, rows, cols)?;
    if let Some(extra) = next_content_line(&mut lines)? {
        return Err(Error::format(format!("trailing content {extra:?}")));
    }
    Ok(m)
}

pub fn read_matrix_file(path: &Path) -> Result<Matrix> {
    let f = std::fs::File::open(path)?;
    read_matrix(std::io::BufReader::new(f))
}

pub fn write_matrix_file(path: &Path, m: &Matrix) -> Result<()> {
    std::fs::write(path, matrix_to_string(m))?;
    Ok(())
}

pub(crate) fn parse_dims(line: &str, count: usize) -> Option<Vec<usize>> {
    let dims: Vec<usize> = line.split_whitespace().map(|t| t.parse().ok()).collect::<Option<_>>()?;
    (dims.len() == count && dims.iter().all(|&d| d > 0)).then_some(dims)
}

pub(crate) fn next_content_line<I>(lines: &mut I) -> Result<Option<String>>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    for line in lines {
        let line = line?;
        if !line.trim().is_empty() {
            return Ok(Some(line));
        }
    }
    Ok(None)
}

pub(crate) fn read_rows<I>(lines: &mut I, rows: usize, cols: usize) -> Result<Matrix>
where
    I: Iterator<Item = std::io::Result<String>>,
{
    let mut values = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        let line = next_content_line(lines)?
            .ok_or_else(|| Error::format(format!("expected {rows} rows, found {i}")))?;
        let before = values.len();
        for tok in line.split_whitespace() {
            let x: f64 = tok.parse().map_err(|_| Error::format(format!("row {i}: bad value {tok:?}")))?;
            values.push(x);
        }
        if values.len() - before != cols {
            return Err(Error::format(format!(
                "row {i}: expected {cols} values, found {}",
                values.len() - before
            )));
        }
    }
    let m = Matrix::from_shape_vec((rows, cols), values).expect("length checked");
    ensure_finite(&m.view())?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reads_simple_matrix() {
        let m = read_matrix("2 3\n1 2 3\n4 5 6.5\n".as_bytes()).unwrap();
        assert_eq!(m, ndarray::array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.5]]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in [
            "",
            "2\n1 2\n",
            "2 2\n1 2\n",
            "2 2\n1 2\n3\n",
            "2 2\n1 2\n3 x\n",
            "1 1\n1\n2\n",
            "0 3\n",
            "1 2\nNaN 1\n",
        ] {
            assert!(read_matrix(bad.as_bytes()).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn seventeen_digits() {
        let s = fmt_f64(0.1);
        assert_eq!(s, "1.0000000000000001e-1");
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(rows in 1usize..5, cols in 1usize..5, vals in proptest::collection::vec(-1e300f64..1e300, 25)) {
            let m = Matrix::from_shape_fn((rows, cols), |(i, j)| vals[i * 5 + j]);
            let back = read_matrix(matrix_to_string(&m).as_bytes()).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
