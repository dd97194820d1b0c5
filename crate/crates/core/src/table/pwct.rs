//! PWCT v1: a little-endian columnar container.
//!
//! ```text
//! "PWCT" | version u32 = 1 | columnCount u32 | rowCount u64
//! per column:
//!   nameLen u16 | name (UTF-8) | kind u8
//!   null mask: ceil(rowCount/8) bytes, bit i set = row i null, LSB first
//!   payload: float64/int64 8*rowCount bytes | bool ceil(rowCount/8) bytes
//!            | text rowCount * (len u32 + UTF-8 bytes)
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use super::{Column, ColumnData, ColumnKind, ColumnTable, TableError};

pub const MAGIC: &[u8; 4] = b"PWCT";
pub const VERSION: u32 = 1;
pub const FILE_HEADER_LEN: u64 = 20;

fn bitmask_len(rows: u64) -> u64 {
    rows.div_ceil(8)
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, _) in bits.iter().enumerate().filter(|(_, b)| **b) {
        out[i / 8] |= 1 << (i % 8);
    }
    out
}

fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect()
}

pub fn save_columnar(table: &ColumnTable, path: &Path) -> Result<(), TableError> {
    let ctx = || format!("writing {}", path.display());
    let file = File::create(path).map_err(|e| TableError::io(ctx(), e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    write_columnar(table, &mut w)?;
    w.flush().map_err(|e| TableError::io(ctx(), e))
}

pub fn write_columnar<W: Write>(table: &ColumnTable, w: &mut W) -> Result<(), TableError> {
    let io = |e| TableError::io("writing PWCT", e);
    let count = u32::try_from(table.columns().len())
        .map_err(|_| TableError::Schema("too many columns".into()))?;
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    w.write_all(&count.to_le_bytes()).map_err(io)?;
    w.write_all(&(table.row_count() as u64).to_le_bytes()).map_err(io)?;
    for col in table.columns() {
        let name = col.name().as_bytes();
        let name_len = u16::try_from(name.len())
            .map_err(|_| TableError::Schema(format!("column name too long: {} bytes", name.len())))?;
        w.write_all(&name_len.to_le_bytes()).map_err(io)?;
        w.write_all(name).map_err(io)?;
        w.write_all(&[col.kind().code()]).map_err(io)?;
        w.write_all(&pack_bits(col.nulls())).map_err(io)?;
        match col.data() {
            ColumnData::Float64(v) => {
                let mut buf = Vec::with_capacity(v.len() * 8);
                v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
                w.write_all(&buf).map_err(io)?;
            }
            ColumnData::Int64(v) => {
                let mut buf = Vec::with_capacity(v.len() * 8);
                v.iter().for_each(|x| buf.extend_from_slice(&x.to_le_bytes()));
                w.write_all(&buf).map_err(io)?;
            }
            ColumnData::Bool(v) => w.write_all(&pack_bits(v)).map_err(io)?,
            ColumnData::Text(v) => {
                for s in v {
                    let len = u32::try_from(s.len())
                        .map_err(|_| TableError::Schema("text cell longer than 4 GiB".into()))?;
                    w.write_all(&len.to_le_bytes()).map_err(io)?;
                    w.write_all(s.as_bytes()).map_err(io)?;
                }
            }
        }
    }
    Ok(())
}

pub fn load_columnar(path: &Path) -> Result<ColumnTable, TableError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let file = File::open(path).map_err(|e| TableError::io(format!("opening {}", path.display()), e))?;
    PwctReader::new(BufReader::with_capacity(1 << 20, file))?.read_table(name)
}

/// Location of one column inside a PWCT stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnDescriptor {
    pub name: String,
    pub kind: ColumnKind,
    /// Offset of the column's name-length field.
    pub offset: u64,
    pub mask_offset: u64,
    pub payload_offset: u64,
    /// One past the last byte of the payload.
    pub end: u64,
}

/// Random-access reader over a PWCT stream.
///
/// Reading a single column seeks past the masks and payloads of the
/// columns before it. Only their descriptors are read, plus the length
/// prefixes of any text column that has to be skipped.
pub struct PwctReader<R> {
    inner: R,
    pos: u64,
    len: u64,
    column_count: u32,
    row_count: u64,
    directory: Option<Vec<ColumnDescriptor>>,
}

impl<R: Read + Seek> PwctReader<R> {
    pub fn new(mut inner: R) -> Result<Self, TableError> {
        let io = |e| TableError::io("reading PWCT", e);
        let len = inner.seek(SeekFrom::End(0)).map_err(io)?;
        inner.seek(SeekFrom::Start(0)).map_err(io)?;
        let mut r = PwctReader {
            inner,
            pos: 0,
            len,
            column_count: 0,
            row_count: 0,
            directory: None,
        };
        let mut header = [0u8; FILE_HEADER_LEN as usize];
        r.read_exact(&mut header, None)?;
        if &header[..4] != MAGIC {
            return Err(TableError::Format {
                offset: 0,
                column: None,
                message: format!("bad magic {:?}", String::from_utf8_lossy(&header[..4])),
            });
        }
        let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(TableError::Format {
                offset: 4,
                column: None,
                message: format!("unsupported version {version}"),
            });
        }
        r.column_count = u32::from_le_bytes(header[8..12].try_into().unwrap());
        r.row_count = u64::from_le_bytes(header[12..20].try_into().unwrap());
        Ok(r)
    }

    pub fn row_count(&self) -> u64 {
        self.row_count
    }

    pub fn column_count(&self) -> u32 {
        self.column_count
    }

    fn truncated(&self, column: Option<&str>, what: &str) -> TableError {
        TableError::Format {
            offset: self.pos,
            column: column.map(str::to_string),
            message: format!("file truncated while reading {what} ({} bytes total)", self.len),
        }
    }

    fn read_exact(&mut self, buf: &mut [u8], column: Option<&str>) -> Result<(), TableError> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.pos += buf.len() as u64;
                Ok(())
            }
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Err(self.truncated(column, "data")),
            Err(e) => Err(TableError::io("reading PWCT", e)),
        }
    }

    fn read_vec(&mut self, n: u64, column: &str, what: &str) -> Result<Vec<u8>, TableError> {
        if self.pos + n > self.len {
            return Err(self.truncated(Some(column), what));
        }
        let mut buf = vec![0u8; n as usize];
        self.read_exact(&mut buf, Some(column))?;
        Ok(buf)
    }

    fn seek_to(&mut self, pos: u64) -> Result<(), TableError> {
        if pos != self.pos {
            self.inner
                .seek(SeekFrom::Start(pos))
                .map_err(|e| TableError::io("seeking PWCT", e))?;
            self.pos = pos;
        }
        Ok(())
    }

    /// Reads the column descriptor starting at the current position and
    /// leaves the reader at its null mask.
    fn read_descriptor(&mut self) -> Result<(String, ColumnKind, u64), TableError> {
        let offset = self.pos;
        let mut len = [0u8; 2];
        self.read_exact(&mut len, None)?;
        let mut name = vec![0u8; u16::from_le_bytes(len) as usize];
        self.read_exact(&mut name, None)?;
        let name = String::from_utf8(name).map_err(|_| TableError::Format {
            offset: offset + 2,
            column: None,
            message: "column name is not UTF-8".into(),
        })?;
        let mut kind = [0u8; 1];
        self.read_exact(&mut kind, Some(&name))?;
        let kind = ColumnKind::from_code(kind[0]).ok_or_else(|| TableError::Format {
            offset: self.pos - 1,
            column: Some(name.clone()),
            message: format!("unknown kind code {}", kind[0]),
        })?;
        Ok((name, kind, offset))
    }

    fn payload_len_fixed(&self, kind: ColumnKind) -> Option<u64> {
        match kind {
            ColumnKind::Float64 | ColumnKind::Int64 => Some(8 * self.row_count),
            ColumnKind::Bool => Some(bitmask_len(self.row_count)),
            ColumnKind::Text => None,
        }
    }

    /// Walks the column descriptors without touching any mask or numeric payload.
    pub fn descriptors(&mut self) -> Result<&[ColumnDescriptor], TableError> {
        if self.directory.is_none() {
            let mut dir = Vec::with_capacity(self.column_count as usize);
            self.seek_to(FILE_HEADER_LEN)?;
            for _ in 0..self.column_count {
                let (name, kind, offset) = self.read_descriptor()?;
                let mask_offset = self.pos;
                let payload_offset = mask_offset + bitmask_len(self.row_count);
                let end = match self.payload_len_fixed(kind) {
                    Some(n) => payload_offset + n,
                    None => {
                        let mut at = payload_offset;
                        for _ in 0..self.row_count {
                            if at + 4 > self.len {
                                self.pos = at;
                                return Err(self.truncated(Some(&name), "text payload"));
                            }
                            self.seek_to(at)?;
                            let mut l = [0u8; 4];
                            self.read_exact(&mut l, Some(&name))?;
                            at += 4 + u32::from_le_bytes(l) as u64;
                        }
                        at
                    }
                };
                if end > self.len {
                    self.pos = self.len;
                    return Err(self.truncated(Some(&name), "column payload"));
                }
                self.seek_to(end)?;
                dir.push(ColumnDescriptor {
                    name,
                    kind,
                    offset,
                    mask_offset,
                    payload_offset,
                    end,
                });
            }
            self.directory = Some(dir);
        }
        Ok(self.directory.as_deref().unwrap())
    }

    /// Reads one column by name, seeking straight to its bytes.
    pub fn read_column(&mut self, name: &str) -> Result<Column, TableError> {
        let desc = self
            .descriptors()?
            .iter()
            .find(|d| d.name == name)
            .cloned()
            .ok_or_else(|| TableError::unknown_column(name))?;
        self.seek_to(desc.mask_offset)?;
        self.read_body(desc.name, desc.kind)
    }

    fn read_body(&mut self, name: String, kind: ColumnKind) -> Result<Column, TableError> {
        let rows = self.row_count as usize;
        let mask = self.read_vec(bitmask_len(self.row_count), &name, "null mask")?;
        let nulls = unpack_bits(&mask, rows);
        let data = match kind {
            ColumnKind::Float64 => {
                let raw = self.read_vec(8 * self.row_count, &name, "float64 payload")?;
                ColumnData::Float64(
                    raw.chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
            ColumnKind::Int64 => {
                let raw = self.read_vec(8 * self.row_count, &name, "int64 payload")?;
                ColumnData::Int64(
                    raw.chunks_exact(8)
                        .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
                        .collect(),
                )
            }
            ColumnKind::Bool => {
                let raw = self.read_vec(bitmask_len(self.row_count), &name, "bool payload")?;
                ColumnData::Bool(unpack_bits(&raw, rows))
            }
            ColumnKind::Text => {
                let mut cells = Vec::with_capacity(rows);
                for _ in 0..rows {
                    let l = self.read_vec(4, &name, "text length")?;
                    let n = u32::from_le_bytes(l[..].try_into().unwrap()) as u64;
                    let start = self.pos;
                    let bytes = self.read_vec(n, &name, "text cell")?;
                    cells.push(String::from_utf8(bytes).map_err(|_| TableError::Format {
                        offset: start,
                        column: Some(name.clone()),
                        message: "text cell is not UTF-8".into(),
                    })?);
                }
                ColumnData::Text(cells)
            }
        };
        Column::new(name, data, nulls)
    }

    /// Reads every column in file order.
    pub fn read_table(mut self, name: impl Into<String>) -> Result<ColumnTable, TableError> {
        self.seek_to(FILE_HEADER_LEN)?;
        let mut columns = Vec::with_capacity(self.column_count as usize);
        for _ in 0..self.column_count {
            let (col_name, kind, _) = self.read_descriptor()?;
            columns.push(self.read_body(col_name, kind)?);
        }
        ColumnTable::with_row_count(name, self.row_count as usize, columns)
    }
}
