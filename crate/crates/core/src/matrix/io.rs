//! Flat-text serialization shared by every report: a JSON header line followed by CSV rows.
//!
//! Fields are written as
//!
//! ```text
//! {"center":{...},"radius":1.0,"points_per_axis":3,"clip":"cube"}
//! x11,x12,value,mask
//! -1,-1,2,1
//! ...
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so writing is deterministic and
//! reading recovers the exact bits.

use std::io::{BufRead, BufReader, Read, Write};

use super::{Budget, Grid, GridSpec, SampledField};
use crate::error::{Error, Result};

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn write_field<W: Write>(field: &SampledField, mut out: W) -> Result<()> {
    let grid = field.grid();
    serde_json::to_writer(&mut out, grid.spec())?;
    out.write_all(b"\n")?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = grid.spec().center.shape.coord_labels();
    header.push("value".into());
    header.push("mask".into());
    w.write_record(&header)?;
    for k in 0..grid.len() {
        let mut row: Vec<String> = grid.node(k).coords().iter().map(|c| fmt_f64(*c)).collect();
        row.push(fmt_f64(field.values()[k]));
        row.push(if field.is_valid(k) { "1" } else { "0" }.into());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn field_to_string(field: &SampledField) -> Result<String> {
    let mut buf = Vec::new();
    write_field(field, &mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_field<R: Read>(input: R, name: &str) -> Result<SampledField> {
    read_field_with_budget(input, name, &Budget::default())
}

pub fn read_field_with_budget<R: Read>(input: R, name: &str, budget: &Budget) -> Result<SampledField> {
    let mut reader = BufReader::new(input);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let spec: GridSpec = serde_json::from_str(first.trim())
        .map_err(|e| Error::Parse(format!("grid header: {e}")))?;
    let grid = Grid::with_budget(spec, budget)?;
    let dim = grid.dim();
    let mut rdr = csv::Reader::from_reader(reader);
    let expected = {
        let mut h = grid.spec().center.shape.coord_labels();
        h.push("value".into());
        h.push("mask".into());
        h
    };
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != expected {
        return Err(Error::Parse(format!("unexpected columns {header:?}, wanted {expected:?}")));
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if k >= grid.len() {
            return Err(Error::Parse(format!("more rows than the {} grid nodes", grid.len())));
        }
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("row {k}: {s:?}: {e}")))
        };
        let node = grid.node(k);
        for d in 0..dim {
            let c = parse(&rec[d])?;
            if (c - node.coords()[d]).abs() > 1e-9 * (1.0 + c.abs()) {
                return Err(Error::Parse(format!(
                    "row {k} coordinate {d} is {c}, grid node has {}",
                    node.coords()[d]
                )));
            }
        }
        values.push(parse(&rec[dim])?);
        valid.push(match rec[dim + 1].trim() {
            "1" => true,
            "0" => false,
            other => return Err(Error::Parse(format!("row {k}: bad mask {other:?}"))),
        });
    }
    if values.len() != grid.len() {
        return Err(Error::Parse(format!(
            "expected {} rows, found {}",
            grid.len(),
            values.len()
        )));
    }
    SampledField::new(name, grid, values, valid)
}

/// Writes a plain CSV table.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_to_string(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut buf = Vec::new();
    write_table(&mut buf, header, rows)?;
    String::from_utf8(buf).map_err(|e| Error::Parse(e.to_string()))
}
