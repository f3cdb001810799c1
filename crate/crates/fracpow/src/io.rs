//! Matrix Market import/export with a sidecar header for mass weights and
//! spectral bounds, plus plain-text vector files.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::operator::{BoundsProvenance, CsrMatrix, DiscreteOperator};
use crate::spectrum::{dense_spectrum, DENSE_LIMIT};

/// Writes the stiffness in coordinate symmetric format (lower triangle)
/// and a `<path>.meta` sidecar with the mass diagonal and bounds.
pub fn write_operator<P: AsRef<Path>>(op: &DiscreteOperator, path: P) -> Result<()> {
    let path = path.as_ref();
    let mut mm = std::fs::File::create(path)?;
    writeln!(mm, "%%MatrixMarket matrix coordinate real symmetric")?;
    let entries: Vec<(usize, usize, f64)> =
        op.stiffness().entries().filter(|&(i, j, _)| i >= j).collect();
    writeln!(mm, "{} {} {}", op.dim(), op.dim(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(mm, "{} {} {:.16e}", i + 1, j + 1, v)?;
    }
    let mut meta = std::fs::File::create(sidecar_path(path))?;
    writeln!(meta, "lambda_min {:.16e}", op.lambda_min())?;
    writeln!(meta, "lambda_max {:.16e}", op.lambda_max())?;
    let prov = match op.bounds_provenance() {
        BoundsProvenance::Analytic => "analytic",
        BoundsProvenance::Computed => "computed",
        BoundsProvenance::Fallback => "fallback",
    };
    writeln!(meta, "bounds {prov}")?;
    writeln!(meta, "mass_diag {}", op.dim())?;
    for d in op.mass_diag() {
        writeln!(meta, "{:.16e}", d)?;
    }
    Ok(())
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".meta");
    PathBuf::from(p)
}

/// Reads a coordinate-format symmetric matrix plus its sidecar.  Without a
/// sidecar the mass defaults to ones and the bounds come from a dense
/// eigensolve (small problems only).
pub fn read_operator<P: AsRef<Path>>(path: P) -> Result<DiscreteOperator> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    if !header.starts_with("%%MatrixMarket") {
        return Err(Error::Parse("missing MatrixMarket banner".into()));
    }
    let lower = header.to_lowercase();
    if !lower.contains("coordinate") || !lower.contains("real") {
        return Err(Error::Parse(format!("unsupported layout: {header}")));
    }
    let symmetric = lower.contains("symmetric");
    let mut size_line = String::new();
    for line in lines.by_ref() {
        let line = line?;
        if line.starts_with('%') || line.trim().is_empty() {
            continue;
        }
        size_line = line;
        break;
    }
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad size `{t}`"))))
        .collect::<Result<_>>()?;
    if dims.len() != 3 || dims[0] != dims[1] {
        return Err(Error::Parse(format!("bad size line `{size_line}`")));
    }
    let n = dims[0];
    let mut triplets = Vec::with_capacity(2 * dims[2]);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('%') {
            continue;
        }
        let mut it = line.split_whitespace();
        let i: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad entry `{line}`")))?;
        let j: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad entry `{line}`")))?;
        let v: f64 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::Parse(format!("bad entry `{line}`")))?;
        triplets.push((i - 1, j - 1, v));
        if symmetric && i != j {
            triplets.push((j - 1, i - 1, v));
        }
    }
    let s = CsrMatrix::from_triplets(n, &triplets);

    let meta = sidecar_path(path);
    if meta.exists() {
        let file = std::fs::File::open(&meta)?;
        let mut lambda_min = None;
        let mut lambda_max = None;
        let mut prov = BoundsProvenance::Fallback;
        let mut mass: Option<Vec<f64>> = None;
        let mut lines = BufReader::new(file).lines();
        while let Some(line) = lines.next() {
            let line = line?;
            let mut it = line.split_whitespace();
            match it.next() {
                Some("lambda_min") => {
                    lambda_min = it.next().and_then(|t| t.parse().ok());
                }
                Some("lambda_max") => {
                    lambda_max = it.next().and_then(|t| t.parse().ok());
                }
                Some("bounds") => {
                    prov = match it.next() {
                        Some("analytic") => BoundsProvenance::Analytic,
                        Some("computed") => BoundsProvenance::Computed,
                        _ => BoundsProvenance::Fallback,
                    };
                }
                Some("mass_diag") => {
                    let count: usize = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| Error::Parse("bad mass_diag count".into()))?;
                    let mut d = Vec::with_capacity(count);
                    for _ in 0..count {
                        let line = lines
                            .next()
                            .ok_or_else(|| Error::Parse("sidecar truncated".into()))??;
                        d.push(
                            line.trim()
                                .parse()
                                .map_err(|_| Error::Parse(format!("bad mass `{line}`")))?,
                        );
                    }
                    mass = Some(d);
                }
                _ => {}
            }
        }
        let (lo, hi) = match (lambda_min, lambda_max) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::Parse("sidecar misses spectral bounds".into())),
        };
        DiscreteOperator::new(s, mass.unwrap_or_else(|| vec![1.0; n]), lo, hi, prov)
    } else {
        if n > DENSE_LIMIT {
            return Err(Error::TooLarge {
                n,
                limit: DENSE_LIMIT,
            });
        }
        let tmp = DiscreteOperator::new(s.clone(), vec![1.0; n], 1.0, 1.0, BoundsProvenance::Fallback)?;
        let spec = dense_spectrum(&tmp, false)?;
        let lo = *spec.eigenvalues.first().unwrap();
        let hi = *spec.eigenvalues.last().unwrap();
        DiscreteOperator::new(s, vec![1.0; n], lo, hi, BoundsProvenance::Computed)
    }
}

/// One value per line.
pub fn write_vector<P: AsRef<Path>>(v: &[f64], path: P) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for x in v {
        writeln!(f, "{:.16e}", x)?;
    }
    Ok(())
}

pub fn read_vector<P: AsRef<Path>>(path: P) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)?;
    BufReader::new(file)
        .lines()
        .filter_map(|line| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(
                l.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad vector entry `{l}`"))),
            ),
            Err(e) => Some(Err(Error::Io(e))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretize::{assemble_1d_nonuniform, Mesh1D};
    use approx::assert_relative_eq;

    #[test]
    fn operator_round_trip_with_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("op.mtx");
        let mesh = Mesh1D::new(vec![0.0, 0.2, 0.5, 0.9, 1.0]).unwrap();
        let op = assemble_1d_nonuniform(&mesh).unwrap();
        write_operator(&op, &path).unwrap();
        let back = read_operator(&path).unwrap();
        assert_eq!(back.dim(), op.dim());
        assert_relative_eq!(back.lambda_min(), op.lambda_min(), max_relative = 1e-15);
        assert_eq!(back.mass_diag(), op.mass_diag());
        for (a, b) in back.stiffness().entries().zip(op.stiffness().entries()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn operator_without_sidecar_gets_computed_bounds() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plain.mtx");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "%%MatrixMarket matrix coordinate real symmetric").unwrap();
        writeln!(f, "2 2 3").unwrap();
        writeln!(f, "1 1 2.0").unwrap();
        writeln!(f, "2 1 -1.0").unwrap();
        writeln!(f, "2 2 2.0").unwrap();
        drop(f);
        let op = read_operator(&path).unwrap();
        assert_relative_eq!(op.lambda_min(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(op.lambda_max(), 3.0, max_relative = 1e-12);
    }

    #[test]
    fn vector_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.txt");
        let v = vec![1.5, -2.25e-7, 3.0];
        write_vector(&v, &path).unwrap();
        assert_eq!(read_vector(&path).unwrap(), v);
    }
}
