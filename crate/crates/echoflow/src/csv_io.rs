//! Packet-record CSV.
//!
//! Header: `ts,size,dir,src,dst,sport,dport,proto[,label]`. Timestamps are
//! seconds, `dir` is `0` (forward) or `1` (backward).

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use echoflow_core::{Direction, FlowKey, PacketRecord};

use crate::error::{IoError, Result};

const COLUMNS: [&str; 8] = ["ts", "size", "dir", "src", "dst", "sport", "dport", "proto"];

pub fn read_packets(path: &Path) -> Result<Vec<PacketRecord>> {
    let file = File::open(path).map_err(|e| IoError::open(path, e))?;
    parse_packets(file)
}

/// Parses records in file order. Errors name the 1-based line.
pub fn parse_packets<R: Read>(reader: R) -> Result<Vec<PacketRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let labeled = match names.len() {
        8 => false,
        9 if names[8] == "label" => true,
        _ => return Err(IoError::Header(headers.iter().collect::<Vec<_>>().join(","))),
    };
    if names[..8] != COLUMNS {
        return Err(IoError::Header(names.join(",")));
    }

    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |msg: String| IoError::Row { line, msg };
        let field = |i: usize| row.get(i).unwrap_or("");
        let num = |i: usize| -> std::result::Result<f64, IoError> {
            field(i).parse::<f64>().map_err(|_| bad(format!("{} is not a number: `{}`", COLUMNS[i], field(i))))
        };
        let int = |i: usize, max: u64| -> std::result::Result<u64, IoError> {
            let v: u64 = field(i)
                .parse()
                .map_err(|_| bad(format!("{} is not an integer: `{}`", COLUMNS[i], field(i))))?;
            if v > max {
                return Err(bad(format!("{} out of range: {v}", COLUMNS[i])));
            }
            Ok(v)
        };
        let expected = if labeled { 9 } else { 8 };
        if row.len() != expected {
            return Err(bad(format!("expected {expected} fields, found {}", row.len())));
        }
        let ts = num(0)?;
        let size = int(1, 65535)?;
        if size == 0 {
            return Err(bad("size must be ≥1".into()));
        }
        let dir = int(2, 1)?;
        let key = FlowKey::new(field(3), field(4), int(5, 65535)? as u16, int(6, 65535)? as u16, int(7, 255)? as u8);
        let direction = Direction::from_bit(dir as u8).expect("dir checked above");
        let mut rec = PacketRecord::new(ts, size as u16, direction, key).map_err(|e| bad(e.to_string()))?;
        if labeled && !field(8).is_empty() {
            rec = rec.with_label(field(8));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Writes records with a label column when any record carries a label.
pub fn write_packets<W: Write>(writer: W, records: &[PacketRecord]) -> Result<()> {
    let labeled = records.iter().any(|r| r.label.is_some());
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = COLUMNS.to_vec();
    if labeled {
        header.push("label");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            format!("{:.6}", r.timestamp),
            r.size.to_string(),
            r.direction.bit().to_string(),
            r.key.src_addr.clone(),
            r.key.dst_addr.clone(),
            r.key.src_port.to_string(),
            r.key.dst_port.to_string(),
            r.key.proto.to_string(),
        ];
        if labeled {
            row.push(r.label.clone().unwrap_or_default());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(IoError::from)?;
    Ok(())
}
