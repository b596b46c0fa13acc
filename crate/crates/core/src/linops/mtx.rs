//! MatrixMarket (array and coordinate, real/integer, general/symmetric)
//! reading and writing, plus single-column vector text files.
//!
//! Numbers are written with 17 significant digits so `f64` values round-trip
//! exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Layout {
    Array,
    Coordinate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

/// Formats a scalar with 17 significant digits.
pub fn format_scalar<T: Scalar>(v: T) -> String {
    format!("{v:.16e}")
}

/// Parses MatrixMarket text into `(rows, cols, row-major data)`.
///
/// `path` is only used for error messages.
pub fn parse_matrix_market<T: Scalar>(text: &str, path: &Path) -> Result<(usize, usize, Vec<T>)> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(err(hline, format!("bad MatrixMarket banner: {header:?}")));
    }
    let layout = match tokens[2].as_str() {
        "array" => Layout::Array,
        "coordinate" => Layout::Coordinate,
        other => return Err(err(hline, format!("unsupported layout {other:?}"))),
    };
    match tokens[3].as_str() {
        "real" | "double" | "integer" => {}
        other => return Err(err(hline, format!("unsupported field {other:?}"))),
    }
    let symmetry = match tokens[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(err(hline, format!("unsupported symmetry {other:?}"))),
    };

    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (sline, size) = body.next().ok_or_else(|| err(hline + 1, "missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| err(sline, format!("bad size line: {e}")))?;
    let (rows, cols) = match (layout, dims.as_slice()) {
        (Layout::Array, [r, c]) | (Layout::Coordinate, [r, c, _]) => (*r, *c),
        _ => return Err(err(sline, format!("bad size line: {size:?}"))),
    };
    if symmetry != Symmetry::General && rows != cols {
        return Err(err(sline, "symmetric matrix must be square".into()));
    }
    let mut data = vec![T::zero(); rows * cols];

    let parse_val = |line: usize, tok: &str| -> Result<T> {
        tok.parse::<T>()
            .map_err(|_| err(line, format!("bad numeric value {tok:?}")))
    };

    match layout {
        Layout::Array => {
            // column-major; symmetric variants store the lower triangle only
            let mut slots = Vec::new();
            for j in 0..cols {
                let start = match symmetry {
                    Symmetry::General => 0,
                    Symmetry::Symmetric => j,
                    Symmetry::SkewSymmetric => j + 1,
                };
                for i in start..rows {
                    slots.push((i, j));
                }
            }
            let mut last_line = sline;
            for &(i, j) in &slots {
                let (ln, l) = body
                    .next()
                    .ok_or_else(|| err(last_line + 1, format!("truncated: expected {} entries", slots.len())))?;
                last_line = ln;
                let v = parse_val(ln, l.trim())?;
                place(&mut data, cols, symmetry, i, j, v);
            }
        }
        Layout::Coordinate => {
            let nnz = dims[2];
            let mut last_line = sline;
            for _ in 0..nnz {
                let (ln, l) = body
                    .next()
                    .ok_or_else(|| err(last_line + 1, format!("truncated: expected {nnz} entries")))?;
                last_line = ln;
                let toks: Vec<&str> = l.split_whitespace().collect();
                if toks.len() != 3 {
                    return Err(err(ln, format!("expected 'row col value', got {l:?}")));
                }
                let idx = |t: &str, bound: usize| -> Result<usize> {
                    let k: usize = t.parse().map_err(|_| err(ln, format!("bad index {t:?}")))?;
                    if k == 0 || k > bound {
                        return Err(err(ln, format!("index {k} out of range 1..={bound}")));
                    }
                    Ok(k - 1)
                };
                let i = idx(toks[0], rows)?;
                let j = idx(toks[1], cols)?;
                let v = parse_val(ln, toks[2])?;
                place(&mut data, cols, symmetry, i, j, v);
            }
        }
    }
    if let Some((ln, l)) = body.next() {
        return Err(err(ln, format!("unexpected trailing data {l:?}")));
    }
    Ok((rows, cols, data))
}

fn place<T: Scalar>(data: &mut [T], cols: usize, sym: Symmetry, i: usize, j: usize, v: T) {
    data[i * cols + j] = v;
    if i != j {
        match sym {
            Symmetry::General => {}
            Symmetry::Symmetric => data[j * cols + i] = v,
            Symmetry::SkewSymmetric => data[j * cols + i] = -v,
        }
    }
}

/// Renders a row-major matrix in `array real general` format.
pub fn write_matrix_market<T: Scalar>(rows: usize, cols: usize, data: &[T]) -> String {
    let mut s = String::with_capacity(rows * cols * 25 + 64);
    s.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(s, "{rows} {cols}");
    for j in 0..cols {
        for i in 0..rows {
            s.push_str(&format_scalar(data[i * cols + j]));
            s.push('\n');
        }
    }
    s
}

pub fn read_matrix_market<T: Scalar>(path: &Path) -> Result<(usize, usize, Vec<T>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_matrix_market(&text, path)
}

/// Parses a vector stored one value per line. Blank lines and lines starting
/// with `%` or `#` are ignored.
pub fn parse_vector<T: Scalar>(text: &str, path: &Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('%') && !t.starts_with('#')
        })
        .map(|(i, l)| {
            l.trim().parse::<T>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("bad numeric value {:?}", l.trim()),
            })
        })
        .collect()
}

pub fn write_vector<T: Scalar>(v: &[T]) -> String {
    let mut s = String::with_capacity(v.len() * 25);
    for &x in v {
        s.push_str(&format_scalar(x));
        s.push('\n');
    }
    s
}

pub fn read_vector<T: Scalar>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vector(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("test.mtx")
    }

    #[test]
    fn array_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n% comment\n2 3\n1\n4\n2\n5\n3\n6\n";
        let (r, c, d) = parse_matrix_market::<f64>(text, p()).unwrap();
        assert_eq!((r, c), (2, 3));
        assert_eq!(d, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn coordinate_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 1.5\n2 1 -2\n";
        let (_, _, d) = parse_matrix_market::<f64>(text, p()).unwrap();
        assert_eq!(d, vec![1.5, -2.0, -2.0, 0.0]);
    }

    #[test]
    fn truncated_file_reports_line() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n";
        match parse_matrix_market::<f64>(text, p()) {
            Err(Error::Parse { line, msg, .. }) => {
                assert_eq!(line, 6);
                assert!(msg.contains("truncated"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_value_reports_line() {
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 1 abc\n";
        assert!(matches!(
            parse_matrix_market::<f64>(text, p()),
            Err(Error::Parse { line: 3, .. })
        ));
        let text = "%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n";
        assert!(matches!(
            parse_matrix_market::<f64>(text, p()),
            Err(Error::Parse { line: 3, .. })
        ));
    }

    #[test]
    fn bad_banner() {
        assert!(parse_matrix_market::<f64>("hello\n1 1\n1\n", p()).is_err());
        assert!(parse_matrix_market::<f64>("", p()).is_err());
    }

    #[test]
    fn write_then_parse_is_exact() {
        let d = vec![0.1, -1.0 / 3.0, 2.0f64.sqrt(), 1e-300, 12345.678, -0.0];
        let text = write_matrix_market(3, 2, &d);
        let (r, c, back) = parse_matrix_market::<f64>(&text, p()).unwrap();
        assert_eq!((r, c), (3, 2));
        assert_eq!(
            back.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            d.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
        let v = parse_vector::<f64>(&write_vector(&d), p()).unwrap();
        assert_eq!(v, d);
    }
}
