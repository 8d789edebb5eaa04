//! The GMF1 field format: a short text header, a blank line, one mask byte
//! per grid node (row-major) and the inside values as little-endian `f64`.

use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use super::{build_grid, DomainSpec, ScalarField};
use crate::error::{Error, Result};

const MAGIC: &str = "GMF1";

pub fn write_field_to(u: &ScalarField, w: &mut impl Write) -> Result<()> {
    let g = &*u.grid;
    writeln!(w, "{MAGIC}")?;
    if g.dim() == 1 {
        writeln!(w, "dim 1 {}", g.nx)?;
        writeln!(w, "origin {:?}", g.origin[0])?;
    } else {
        writeln!(w, "dim 2 {} {}", g.nx, g.ny)?;
        writeln!(w, "origin {:?} {:?}", g.origin[0], g.origin[1])?;
    }
    writeln!(w, "spacing {:?}", g.h)?;
    writeln!(w, "domain {}", g.domain)?;
    writeln!(w)?;
    let mut mask = vec![0u8; g.nx * g.ny];
    for k in 0..g.len() {
        mask[g.node_of(k)] = 1;
    }
    w.write_all(&mask)?;
    let mut buf = Vec::with_capacity(8 * g.len());
    for v in &u.values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_field(u: &ScalarField, path: impl AsRef<Path>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    write_field_to(u, &mut f)?;
    f.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Format(msg.into())
}

fn header_line(r: &mut impl BufRead, key: &str) -> Result<Vec<String>> {
    let mut line = String::new();
    if r.read_line(&mut line)? == 0 {
        return Err(bad(format!("truncated header: missing '{key}'")));
    }
    let mut parts = line.split_whitespace().map(str::to_string);
    match parts.next() {
        Some(k) if k == key => Ok(parts.collect()),
        other => Err(bad(format!("expected '{key}', found {:?}", other.unwrap_or_default()))),
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    s.parse().map_err(|_| bad(format!("bad number '{s}'")))
}

/// Reads a GMF1 stream. The grid is rebuilt from the domain and spacing and
/// must reproduce the stored shape, origin and mask exactly.
pub fn read_field_from(r: &mut impl BufRead) -> Result<ScalarField> {
    let mut magic = String::new();
    if r.read_line(&mut magic)? == 0 {
        return Err(bad("empty file"));
    }
    if magic.trim_end() != MAGIC {
        return Err(bad(format!("unsupported magic/version '{}'", magic.trim_end())));
    }
    let dims = header_line(r, "dim")?;
    let sizes: Vec<usize> =
        dims.iter().map(|s| s.parse().map_err(|_| bad(format!("bad size '{s}'")))).collect::<Result<_>>()?;
    let (dim, nx, ny) = match sizes.as_slice() {
        [1, nx] => (1, *nx, 1),
        [2, nx, ny] => (2, *nx, *ny),
        _ => return Err(bad(format!("bad dim line {dims:?}"))),
    };
    let origin: Vec<f64> = header_line(r, "origin")?.iter().map(|s| parse_f64(s)).collect::<Result<_>>()?;
    if origin.len() != dim {
        return Err(bad("origin arity does not match dim"));
    }
    let spacing = header_line(r, "spacing")?;
    let h = parse_f64(spacing.first().ok_or_else(|| bad("missing spacing"))?)?;
    let dom = header_line(r, "domain")?;
    let kind = dom.first().ok_or_else(|| bad("missing domain kind"))?;
    let params: Vec<f64> = dom[1..].iter().map(|s| parse_f64(s)).collect::<Result<_>>()?;
    let domain = DomainSpec::from_parts(kind, &params).map_err(|e| bad(e.to_string()))?;
    let mut blank = String::new();
    r.read_line(&mut blank)?;
    if !blank.trim().is_empty() {
        return Err(bad("missing blank line after header"));
    }
    let grid = build_grid(&domain, h).map_err(|e| bad(e.to_string()))?;
    let stored_origin = if dim == 1 { [origin[0], 0.0] } else { [origin[0], origin[1]] };
    if grid.nx != nx || grid.ny != ny || grid.origin != stored_origin || grid.dim() != dim {
        return Err(bad("header does not match the grid of the stated domain and spacing"));
    }
    let mut mask = vec![0u8; nx * ny];
    r.read_exact(&mut mask).map_err(|_| bad("truncated mask"))?;
    let mut expected = vec![0u8; nx * ny];
    for k in 0..grid.len() {
        expected[grid.node_of(k)] = 1;
    }
    if mask != expected {
        return Err(bad("mask does not match the domain"));
    }
    let mut data = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut data).map_err(|_| bad("truncated values"))?;
    let mut rest = [0u8; 1];
    if r.read(&mut rest)? != 0 {
        return Err(bad("trailing bytes after values"));
    }
    let values = data.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    ScalarField::new(Arc::new(grid), values).map_err(|e| bad(e.to_string()))
}

pub fn read_field(path: impl AsRef<Path>) -> Result<ScalarField> {
    let mut f = std::io::BufReader::new(fs::File::open(path)?);
    read_field_from(&mut f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScalarField {
        let g = Arc::new(build_grid(&DomainSpec::Ellipse { a: 1.0, b: 0.6 }, 0.05).unwrap());
        ScalarField::from_fn(g, |x, y| (x * 3.1).sin() * y.exp() / 7.0)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let u = sample();
        let mut buf = Vec::new();
        write_field_to(&u, &mut buf).unwrap();
        let v = read_field_from(&mut buf.as_slice()).unwrap();
        assert_eq!(u.values.len(), v.values.len());
        assert!(u.values.iter().zip(&v.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        let mut again = Vec::new();
        write_field_to(&v, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncation_and_version_are_rejected() {
        let mut buf = Vec::new();
        write_field_to(&sample(), &mut buf).unwrap();
        let cut = &buf[..buf.len() - 3];
        assert!(matches!(read_field_from(&mut &cut[..]), Err(Error::Format(_))));
        let mut v2 = buf.clone();
        v2[3] = b'2';
        assert!(matches!(read_field_from(&mut v2.as_slice()), Err(Error::Format(_))));
    }
}
