//! Cone table grid file.
//!
//! ```text
//! # spre cone table v1
//! lambda,3,3.5,...
//! pitch,0,0.0174...,...
//! speed,6,8,...
//! azimuth_nodes,24
//! blade,lambda_index,pitch_index,speed_index,cm_0,...,cm_23
//! 0,0,0,0,<24 values>
//! ```
//!
//! Rows run blade-major over `(λ, β, U_R)`; values use the shortest
//! representation that parses back to the same `f64`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use spre_core::cone::{ConeTable, GridSpec};
use spre_core::N_BLADES;

use crate::error::{Result, SpreError};

pub const TABLE_HEADER: &str = "# spre cone table v1";

pub fn write_table(table: &ConeTable, out: &mut impl Write) -> std::io::Result<()> {
    let g = table.grid();
    writeln!(out, "{TABLE_HEADER}")?;
    for (name, axis) in [("lambda", &g.lambda), ("pitch", &g.pitch), ("speed", &g.speed)] {
        write!(out, "{name}")?;
        for v in axis {
            write!(out, ",{v:e}")?;
        }
        writeln!(out)?;
    }
    writeln!(out, "azimuth_nodes,{}", g.azimuth_nodes)?;
    write!(out, "blade,lambda_index,pitch_index,speed_index")?;
    for k in 0..g.azimuth_nodes {
        write!(out, ",cm_{k}")?;
    }
    writeln!(out)?;
    let mut rows = table.values().chunks(g.azimuth_nodes);
    for b in 0..N_BLADES {
        for li in 0..g.lambda.len() {
            for bi in 0..g.pitch.len() {
                for ui in 0..g.speed.len() {
                    write!(out, "{b},{li},{bi},{ui}")?;
                    for v in rows.next().expect("table holds every row") {
                        write!(out, ",{v:e}")?;
                    }
                    writeln!(out)?;
                }
            }
        }
    }
    Ok(())
}

pub fn save_table(table: &ConeTable, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(SpreError::io(path))?;
    let mut w = std::io::BufWriter::new(file);
    write_table(table, &mut w)
        .and_then(|_| w.flush())
        .map_err(SpreError::io(path))
}

pub fn load_table(path: &Path) -> Result<ConeTable> {
    let file = std::fs::File::open(path).map_err(|source| SpreError::MissingInput {
        path: path.into(),
        source,
    })?;
    read_table(BufReader::new(file), path)
}

pub fn read_table(reader: impl BufRead, path: &Path) -> Result<ConeTable> {
    let mut lines = reader.lines().enumerate();
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((i, Ok(l))) => Ok((i + 1, l)),
            Some((i, Err(e))) => Err(parse_err(path, i + 1, e.to_string())),
            None => Err(parse_err(path, 0, format!("unexpected end of file, expected {what}"))),
        }
    };
    let (n, header) = next("header")?;
    if header.trim() != TABLE_HEADER {
        return Err(parse_err(path, n, format!("expected `{TABLE_HEADER}`")));
    }
    let mut axis = |name: &str| -> Result<Vec<f64>> {
        let (n, line) = next(name)?;
        let mut fields = line.split(',');
        if fields.next().map(str::trim) != Some(name) {
            return Err(parse_err(path, n, format!("expected the `{name}` axis")));
        }
        fields.map(|f| number(f, path, n)).collect()
    };
    let lambda = axis("lambda")?;
    let pitch = axis("pitch")?;
    let speed = axis("speed")?;
    let (n, line) = next("azimuth_nodes")?;
    let azimuth_nodes = line
        .strip_prefix("azimuth_nodes,")
        .and_then(|v| v.trim().parse::<usize>().ok())
        .ok_or_else(|| parse_err(path, n, "expected `azimuth_nodes,<count>`".into()))?;
    next("column header")?;

    let rows = N_BLADES * lambda.len() * pitch.len() * speed.len();
    let mut values = Vec::with_capacity(rows * azimuth_nodes);
    for row in 0..rows {
        let (n, line) = next("table row")?;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + azimuth_nodes {
            return Err(parse_err(path, n, format!("expected {} fields, found {}", 4 + azimuth_nodes, fields.len())));
        }
        let idx = [row / (lambda.len() * pitch.len() * speed.len()), row / (pitch.len() * speed.len()) % lambda.len(), row / speed.len() % pitch.len(), row % speed.len()];
        for (f, want) in fields[..4].iter().zip(idx) {
            if f.trim().parse::<usize>().ok() != Some(want) {
                return Err(parse_err(path, n, "rows must follow blade, lambda, pitch, speed order".into()));
            }
        }
        for f in &fields[4..] {
            values.push(number(f, path, n)?);
        }
    }
    let grid = GridSpec {
        lambda,
        pitch,
        speed,
        azimuth_nodes,
    };
    ConeTable::from_parts(grid, values).map_err(|e| parse_err(path, 0, e.to_string()))
}

fn number(field: &str, path: &Path, line: usize) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("`{field}` is not a number")))
}

fn parse_err(path: &Path, line: usize, msg: String) -> SpreError {
    SpreError::Parse {
        path: path.into(),
        line,
        msg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use spre_core::cone::{build_table, ConeSurface};
    use spre_core::config::{AirProperties, TurbineGeometry};

    fn small() -> ConeTable {
        let grid = GridSpec {
            lambda: vec![4.0, 7.5, 11.0],
            pitch: vec![0.0, 0.1],
            speed: vec![8.0, 12.0],
            azimuth_nodes: 5,
        };
        build_table(&ConeSurface::default(), &TurbineGeometry::default(), &AirProperties::default(), &grid).unwrap()
    }

    #[test]
    fn file_reproduces_the_table_exactly() {
        let t = small();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let back = read_table(buf.as_slice(), Path::new("mem")).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let mut buf = Vec::new();
        write_table(&small(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("v1", "v2");
        let e = read_table(text.as_bytes(), Path::new("mem")).unwrap_err();
        assert!(matches!(e, SpreError::Parse { line: 1, .. }), "{e}");
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mut buf = Vec::new();
        write_table(&small(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(12).map(|l| format!("{l}\n")).collect();
        assert!(read_table(cut.as_bytes(), Path::new("mem")).is_err());
    }
}
