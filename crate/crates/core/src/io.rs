//! Plain-text dataset and truth-sidecar formats.
//!
//! Dataset file:
//!
//! ```text
//! m q p model              # model ∈ {ordinary, robust, logistic}
//! y z_1 .. z_p x_11 .. x_mq   # one sample per line, X in row-major order
//! ```
//!
//! Fields are single-space separated; reals are printed in scientific
//! notation with 17 significant digits, which round-trips `f64` exactly. The
//! format does not carry the Huber threshold; files tagged `robust` are read
//! back with [`DEFAULT_ROBUST_ALPHA`] (override after reading, or with the
//! fitting tool's `--alpha` flag).
//!
//! Truth sidecar:
//!
//! ```text
//! m q p
//! c_11 .. c_mq             # C* in row-major order
//! g_1 .. g_p               # γ*
//! ```

use std::fmt::Write as _;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::Error;
use crate::linalg::Mat;
use crate::model::{Dataset, LossModel};
use crate::Result;

/// Huber threshold assumed when reading a `robust` dataset file: the classic
/// 95%-efficiency choice for unit-scale noise.
pub const DEFAULT_ROBUST_ALPHA: f64 = 1.345;

fn model_token(model: &LossModel<f64>) -> &'static str {
    match model {
        LossModel::Ordinary => "ordinary",
        LossModel::Robust { .. } => "robust",
        LossModel::Logistic => "logistic",
    }
}

fn model_from_token(tok: &str, line: usize) -> Result<LossModel<f64>> {
    match tok {
        "ordinary" => Ok(LossModel::Ordinary),
        "robust" => Ok(LossModel::Robust { alpha: DEFAULT_ROBUST_ALPHA }),
        "logistic" => Ok(LossModel::Logistic),
        other => Err(Error::Parse {
            line,
            message: format!("unknown model '{other}' (expected ordinary|robust|logistic)"),
        }),
    }
}

fn push_real(buf: &mut String, v: f64) {
    // 17 significant digits: exact f64 round-trip
    write!(buf, "{v:.16e}").expect("string write");
}

/// Write a dataset in the text format.
pub fn write_dataset<W: Write>(w: W, data: &Dataset<f64>) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{} {} {} {}", data.m(), data.q(), data.p(), model_token(data.model()))?;
    let mut line = String::new();
    for i in 0..data.n() {
        line.clear();
        push_real(&mut line, data.y()[i]);
        for &z in data.z().row(i) {
            line.push(' ');
            push_real(&mut line, z);
        }
        for &x in data.x_row(i) {
            line.push(' ');
            push_real(&mut line, x);
        }
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset_file(path: &Path, data: &Dataset<f64>) -> Result<()> {
    write_dataset(std::fs::File::create(path)?, data)
}

fn parse_real(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::Parse { line, message: format!("bad {what} '{tok}'") })?;
    if !v.is_finite() {
        return Err(Error::Parse { line, message: format!("{what} '{tok}' is not finite") });
    }
    Ok(v)
}

/// Read a dataset in the text format. Parse failures name the offending
/// 1-based line number.
pub fn read_dataset<R: BufRead>(r: R) -> Result<Dataset<f64>> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty file".into() })?;
    let header = header?;
    let head: Vec<&str> = header.split(' ').collect();
    if head.len() != 4 {
        return Err(Error::Parse {
            line: 1,
            message: format!("header needs 'm q p model', got {} fields", head.len()),
        });
    }
    let dim = |tok: &str, what: &str| -> Result<usize> {
        tok.parse()
            .map_err(|_| Error::Parse { line: 1, message: format!("bad {what} '{tok}'") })
    };
    let m = dim(head[0], "m")?;
    let q = dim(head[1], "q")?;
    let p = dim(head[2], "p")?;
    if m == 0 || q == 0 {
        return Err(Error::Parse { line: 1, message: "m and q must be positive".into() });
    }
    let model = model_from_token(head[3], 1)?;

    let want = 1 + p + m * q;
    let mut x_flat = Vec::new();
    let mut z_flat = Vec::new();
    let mut y = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(' ');
        let count = line.split(' ').count();
        if count != want {
            return Err(Error::Parse {
                line: lineno,
                message: format!("expected {want} fields (1 + p + m*q), got {count}"),
            });
        }
        y.push(parse_real(fields.next().expect("counted"), lineno, "response")?);
        for _ in 0..p {
            z_flat.push(parse_real(fields.next().expect("counted"), lineno, "z value")?);
        }
        for _ in 0..m * q {
            x_flat.push(parse_real(fields.next().expect("counted"), lineno, "X value")?);
        }
    }
    let n = y.len();
    let x = Mat::new(n, m * q, x_flat)?;
    let z = Mat::new(n, p, z_flat)?;
    Dataset::from_flat(m, q, x, z, y, model)
}

pub fn read_dataset_file(path: &Path) -> Result<Dataset<f64>> {
    read_dataset(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Write the truth sidecar `(C*, γ*)`.
pub fn write_truth<W: Write>(w: W, c_star: &Mat<f64>, gamma_star: &[f64]) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{} {} {}", c_star.rows(), c_star.cols(), gamma_star.len())?;
    let mut line = String::new();
    for (k, &v) in c_star.as_slice().iter().enumerate() {
        if k > 0 {
            line.push(' ');
        }
        push_real(&mut line, v);
    }
    writeln!(w, "{line}")?;
    line.clear();
    for (k, &v) in gamma_star.iter().enumerate() {
        if k > 0 {
            line.push(' ');
        }
        push_real(&mut line, v);
    }
    writeln!(w, "{line}")?;
    w.flush()?;
    Ok(())
}

pub fn write_truth_file(path: &Path, c_star: &Mat<f64>, gamma_star: &[f64]) -> Result<()> {
    write_truth(std::fs::File::create(path)?, c_star, gamma_star)
}

/// Read a truth sidecar back as `(C*, γ*)`.
pub fn read_truth<R: BufRead>(r: R) -> Result<(Mat<f64>, Vec<f64>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or(Error::Parse { line: 1, message: "empty truth file".into() })??;
    let head: Vec<&str> = header.split(' ').collect();
    if head.len() != 3 {
        return Err(Error::Parse { line: 1, message: "truth header needs 'm q p'".into() });
    }
    let parse_dim = |tok: &str| -> Result<usize> {
        tok.parse()
            .map_err(|_| Error::Parse { line: 1, message: format!("bad dimension '{tok}'") })
    };
    let (m, q, p) = (parse_dim(head[0])?, parse_dim(head[1])?, parse_dim(head[2])?);

    let c_line = lines
        .next()
        .ok_or(Error::Parse { line: 2, message: "missing C* line".into() })??;
    let c_vals: Vec<f64> = c_line
        .split(' ')
        .map(|t| parse_real(t, 2, "C* value"))
        .collect::<Result<_>>()?;
    if c_vals.len() != m * q {
        return Err(Error::Parse {
            line: 2,
            message: format!("expected {} C* values, got {}", m * q, c_vals.len()),
        });
    }

    let g_line = match lines.next() {
        Some(l) => l?,
        None if p == 0 => String::new(),
        None => return Err(Error::Parse { line: 3, message: "missing γ* line".into() }),
    };
    let g_vals: Vec<f64> = if g_line.is_empty() {
        Vec::new()
    } else {
        g_line.split(' ').map(|t| parse_real(t, 3, "γ* value")).collect::<Result<_>>()?
    };
    if g_vals.len() != p {
        return Err(Error::Parse {
            line: 3,
            message: format!("expected {p} γ* values, got {}", g_vals.len()),
        });
    }
    Ok((Mat::new(m, q, c_vals)?, g_vals))
}

pub fn read_truth_file(path: &Path) -> Result<(Mat<f64>, Vec<f64>)> {
    read_truth(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{make_shape, sample_dataset, ShapeKind};

    #[test]
    fn dataset_round_trip_is_exact() {
        let c = make_shape::<f64>(ShapeKind::Square, 8);
        let data = sample_dataset(&c, &[1.0, -0.5], 7, None, LossModel::Ordinary, 21).unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(back.n(), data.n());
        assert_eq!(back.m(), data.m());
        assert_eq!(back.q(), data.q());
        assert_eq!(back.y(), data.y());
        assert_eq!(back.x_flat().as_slice(), data.x_flat().as_slice());
        assert_eq!(back.z().as_slice(), data.z().as_slice());
    }

    #[test]
    fn truth_round_trip_is_exact() {
        let c = Mat::new(2, 3, vec![1.0, -2.5e-17, 3.0, 0.0, 1e300, -7.25]).unwrap();
        let g = vec![0.125, -4.0];
        let mut buf = Vec::new();
        write_truth(&mut buf, &c, &g).unwrap();
        let (c2, g2) = read_truth(buf.as_slice()).unwrap();
        assert_eq!(c.as_slice(), c2.as_slice());
        assert_eq!(g, g2);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let text = "2 2 1 ordinary\n1.0 2.0 3.0 4.0 5.0 6.0\n1.0 2.0 oops 4.0 5.0 6.0\n";
        match read_dataset(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "2 2 1 ordinary\n1.0 2.0\n";
        match read_dataset(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn robust_files_read_back_with_default_alpha() {
        let x = Mat::new(1, 1, vec![1.0]).unwrap();
        let data = Dataset::from_flat(
            1,
            1,
            x,
            Mat::zeros(1, 0),
            vec![2.0],
            LossModel::Robust { alpha: 9.0 },
        )
        .unwrap();
        let mut buf = Vec::new();
        write_dataset(&mut buf, &data).unwrap();
        let back = read_dataset(buf.as_slice()).unwrap();
        assert_eq!(*back.model(), LossModel::Robust { alpha: DEFAULT_ROBUST_ALPHA });
    }

    #[test]
    fn non_finite_values_are_rejected_on_read() {
        let text = "1 1 0 ordinary\ninf 1.0\n";
        assert!(matches!(read_dataset(text.as_bytes()), Err(Error::Parse { line: 2, .. })));
    }
}
