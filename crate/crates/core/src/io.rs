//! Plain-text matrix dumps: a `rows cols` header, then one row per line with
//! 17 significant digits so values round-trip exactly.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Mat;

pub fn write_matrix<W: Write>(out: &mut W, m: &Mat) -> Result<()> {
    writeln!(out, "{} {}", m.nrows(), m.ncols())?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}

pub fn read_matrix<R: BufRead>(input: R) -> Result<Mat> {
    let mut tokens = Vec::new();
    for line in input.lines() {
        let line = line?;
        tokens.extend(line.split_whitespace().map(str::to_owned));
    }
    let bad = |msg: String| Error::Invalid(format!("matrix dump: {msg}"));
    if tokens.len() < 2 {
        return Err(bad("missing header".into()));
    }
    let rows: usize = tokens[0].parse().map_err(|_| bad(format!("bad row count {:?}", tokens[0])))?;
    let cols: usize = tokens[1].parse().map_err(|_| bad(format!("bad column count {:?}", tokens[1])))?;
    let data = &tokens[2..];
    if data.len() != rows * cols {
        return Err(bad(format!("expected {} entries, found {}", rows * cols, data.len())));
    }
    let vals = data
        .iter()
        .map(|t| t.parse::<f64>().map_err(|_| bad(format!("bad entry {t:?}"))))
        .collect::<Result<Vec<f64>>>()?;
    Ok(Mat::from_row_slice(rows, cols, &vals))
}

pub fn save_matrix(path: &Path, m: &Mat) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_matrix(&mut f, m)?;
    f.flush()?;
    Ok(())
}

pub fn load_matrix(path: &Path) -> Result<Mat> {
    read_matrix(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let m = Mat::from_fn(3, 4, |i, j| (i as f64 + 1.0) / (j as f64 + 3.0) - 1e-300 * j as f64);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("3 4\n"));
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn empty_matrix() {
        let m = Mat::zeros(0, 5);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap().shape(), (0, 5));
    }

    #[test]
    fn wrong_count_rejected() {
        assert!(read_matrix("2 2\n1 2 3\n".as_bytes()).is_err());
    }
}
