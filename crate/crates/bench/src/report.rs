//! CSV persistence for benchmark rows.

use std::io::{Read, Write};
use std::path::Path;

use crate::chain::BenchRow;

pub fn write_rows<W: Write>(writer: W, rows: &[BenchRow]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(reader: R) -> csv::Result<Vec<BenchRow>> {
    csv::Reader::from_reader(reader).deserialize().collect()
}

pub fn write_csv(path: &Path, rows: &[BenchRow]) -> csv::Result<()> {
    write_rows(std::fs::File::create(path)?, rows)
}

pub fn read_csv(path: &Path) -> csv::Result<Vec<BenchRow>> {
    read_rows(std::fs::File::open(path)?)
}
