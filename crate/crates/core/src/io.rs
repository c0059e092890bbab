//! Matrix file formats.
//!
//! Text: comma-separated with a header row. One named column is the
//! response, every other column is a feature.
//!
//! Binary (`MPFSMAT1`): 8-byte magic, `N` and `M` as little-endian `u64`,
//! `N * M` little-endian `f64` values of `X` in row-major order, then `N`
//! values of `y`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"MPFSMAT1";

/// Reads a CSV matrix. `response` names the response column; when `None`,
/// the first column is the response.
pub fn read_csv(path: &Path, response: Option<&str>) -> Result<DataMatrix> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_csv_from(file, response)
}

pub fn read_csv_from<R: Read>(reader: R, response: Option<&str>) -> Result<DataMatrix> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::Data(format!("cannot read header: {e}")))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.len() < 2 {
        return Err(Error::Data("need a response column and at least one feature column".into()));
    }
    let y_col = match response {
        None => 0,
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Data(format!("response column `{name}` not found in header")))?,
    };
    let names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != y_col)
        .map(|(_, h)| h.clone())
        .collect();

    let mut y = Vec::new();
    let mut values = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Data(format!("row {}: {e}", row + 1)))?;
        if record.len() != header.len() {
            return Err(Error::Data(format!(
                "row {} has {} fields, header has {}",
                row + 1,
                record.len(),
                header.len()
            )));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Data(format!("row {}, column `{}`: not a number: `{field}`", row + 1, header[c])))?;
            if c == y_col {
                y.push(v);
            } else {
                values.push(v);
            }
        }
    }
    let n = y.len();
    let x = Array2::from_shape_vec((n, names.len()), values).map_err(|e| Error::Data(e.to_string()))?;
    DataMatrix::new(Array1::from(y), x, Some(names))
}

/// Writes `data` as CSV with the response first, under the header `response_name`.
/// Values use the shortest representation that parses back to the same `f64`.
pub fn write_csv(path: &Path, data: &DataMatrix, response_name: &str) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_csv_to(file, data, response_name)
}

pub fn write_csv_to<W: Write>(writer: W, data: &DataMatrix, response_name: &str) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec![response_name.to_owned()];
    header.extend((0..data.n_features()).map(|j| data.feature_name(j)));
    let to_data_err = |e: csv::Error| Error::Data(e.to_string());
    wtr.write_record(&header).map_err(to_data_err)?;
    let (y, x) = (data.y(), data.x());
    for (i, row) in x.rows().into_iter().enumerate() {
        let mut rec = Vec::with_capacity(row.len() + 1);
        rec.push(y[i].to_string());
        rec.extend(row.iter().map(f64::to_string));
        wtr.write_record(&rec).map_err(to_data_err)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_binary(path: &Path) -> Result<DataMatrix> {
    let file = File::open(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    read_binary_from(BufReader::new(file))
}

fn read_u64<R: Read>(reader: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    reader
        .read_exact(&mut buf)
        .map_err(|_| Error::Data("binary matrix truncated in header".into()))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn read_binary_from<R: Read>(mut reader: R) -> Result<DataMatrix> {
    let mut magic = [0u8; 8];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::Data("binary matrix truncated before magic".into()))?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Data("not an MPFSMAT1 file (bad magic)".into()));
    }
    let n = read_u64(&mut reader)? as usize;
    let m = read_u64(&mut reader)? as usize;
    let count = n
        .checked_mul(m)
        .and_then(|nm| nm.checked_add(n))
        .ok_or_else(|| Error::Data(format!("declared dimensions {n}x{m} overflow")))?;

    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() != count * 8 {
        return Err(Error::Data(format!(
            "declared {n}x{m} needs {} payload bytes, found {}",
            count * 8,
            payload.len()
        )));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let x: Vec<f64> = values.by_ref().take(n * m).collect();
    let y: Vec<f64> = values.collect();
    let x = Array2::from_shape_vec((n, m), x).map_err(|e| Error::Data(e.to_string()))?;
    DataMatrix::new(Array1::from(y), x, None)
}

pub fn write_binary(path: &Path, data: &DataMatrix) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    write_binary_to(&mut file, data)?;
    file.flush()?;
    Ok(())
}

pub fn write_binary_to<W: Write>(writer: &mut W, data: &DataMatrix) -> Result<()> {
    writer.write_all(BINARY_MAGIC)?;
    writer.write_all(&(data.n_obs() as u64).to_le_bytes())?;
    writer.write_all(&(data.n_features() as u64).to_le_bytes())?;
    for v in data.x().iter() {
        writer.write_all(&v.to_le_bytes())?;
    }
    for v in data.y().iter() {
        writer.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
