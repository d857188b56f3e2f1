//! Plain-text CSV exports with a versioned schema line, and a small binary format for
//! reduced bases so offline and online phases can run in separate processes.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::rom::{ReducedBasis, Role};
use crate::space::NormTag;

pub const CSV_VERSION: u32 = 1;

/// Buffered CSV writer. The first line is `# himod-csv v<version> schema=<name>`, the
/// second the column header.
pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

impl CsvWriter {
    pub fn create(path: impl AsRef<Path>, schema: &str, header: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "# himod-csv v{CSV_VERSION} schema={schema}")?;
        writeln!(out, "{}", header.join(","))?;
        Ok(CsvWriter { out, columns: header.len() })
    }

    pub fn row<S: AsRef<str>>(&mut self, fields: &[S]) -> Result<()> {
        if fields.len() != self.columns {
            return Err(Error::Dimension(format!("CSV row with {} fields, header has {}", fields.len(), self.columns)));
        }
        let line: Vec<&str> = fields.iter().map(|f| f.as_ref()).collect();
        writeln!(self.out, "{}", line.join(","))?;
        Ok(())
    }

    pub fn numbers(&mut self, values: &[f64]) -> Result<()> {
        let fields: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
        self.row(&fields)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Shortest representation that round-trips.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// Reads a CSV written by [`CsvWriter`]: (schema, header, rows).
pub fn read_csv(path: impl AsRef<Path>) -> Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let first = lines.next().unwrap_or_default();
    let schema = first
        .strip_prefix("# himod-csv v")
        .and_then(|rest| rest.split_once(" schema="))
        .map(|(_, s)| s.to_string())
        .ok_or_else(|| Error::Config(format!("missing CSV schema line, found {first:?}")))?;
    let header = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    Ok((schema, header, rows))
}

const MAGIC: &[u8; 8] = b"HIMODRB\0";
const BASIS_VERSION: u32 = 1;

fn role_code(r: Role) -> u8 {
    match r {
        Role::State => 0,
        Role::Velocity => 1,
        Role::Pressure => 2,
        Role::Supremizer => 3,
    }
}

fn norm_code(n: NormTag) -> u8 {
    match n {
        NormTag::L2 => 0,
        NormTag::H1 => 1,
        NormTag::Identity => 2,
    }
}

/// Layout (little endian): magic, version u32, dim u64, N u64, role u8, norm u8, then the
/// N columns one after the other as f64.
pub fn save_basis(path: impl AsRef<Path>, basis: &ReducedBasis) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&BASIS_VERSION.to_le_bytes())?;
    out.write_all(&(basis.dim() as u64).to_le_bytes())?;
    out.write_all(&(basis.len() as u64).to_le_bytes())?;
    out.write_all(&[role_code(basis.role()), norm_code(basis.norm())])?;
    for col in basis.columns() {
        for v in col {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn load_basis(path: impl AsRef<Path>) -> Result<ReducedBasis> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let bad = |what: &str| Error::Config(format!("basis file: {what}"));
    if bytes.len() < 30 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    if u32_at(8) != BASIS_VERSION {
        return Err(bad(&format!("unsupported version {}", u32_at(8))));
    }
    let dim = u64_at(12) as usize;
    let n = u64_at(20) as usize;
    let role = match bytes[28] {
        0 => Role::State,
        1 => Role::Velocity,
        2 => Role::Pressure,
        3 => Role::Supremizer,
        c => return Err(bad(&format!("role code {c}"))),
    };
    let norm = match bytes[29] {
        0 => NormTag::L2,
        1 => NormTag::H1,
        2 => NormTag::Identity,
        c => return Err(bad(&format!("norm code {c}"))),
    };
    let payload = &bytes[30..];
    if payload.len() != dim * n * 8 {
        return Err(bad(&format!("payload of {} bytes for {dim}x{n}", payload.len())));
    }
    let values: Vec<f64> = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let columns = values.chunks(dim.max(1)).take(n).map(<[f64]>::to_vec).collect();
    ReducedBasis::from_columns(dim, columns, role, norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_round_trip() {
        let dir = std::env::temp_dir().join(format!("himod-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("b.bin");
        let b = ReducedBasis::from_columns(3, vec![vec![1.0, -2.5, 3e-300], vec![0.0, f64::MAX, -0.0]], Role::Pressure, NormTag::L2)
            .unwrap();
        save_basis(&path, &b).unwrap();
        assert_eq!(load_basis(&path).unwrap(), b);
        std::fs::write(&path, b"garbage").unwrap();
        assert!(load_basis(&path).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("himod-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut w = CsvWriter::create(&path, "spectrum", &["k", "lambda"]).unwrap();
        w.numbers(&[1.0, 0.125]).unwrap();
        assert!(w.row(&["only one"]).is_err());
        w.finish().unwrap();
        let (schema, header, rows) = read_csv(&path).unwrap();
        assert_eq!(schema, "spectrum");
        assert_eq!(header, vec!["k", "lambda"]);
        assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.125);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
