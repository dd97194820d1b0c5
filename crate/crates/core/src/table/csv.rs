use std::fs::File;
use std::io::{BufReader, Cursor, Read};
use std::path::Path;

use super::{Column, ColumnData, ColumnKind, ColumnTable, TableError};

/// Per-column record of which kinds every non-empty cell still fits.
#[derive(Clone, Copy)]
struct KindFit {
    bool_ok: bool,
    int_ok: bool,
    float_ok: bool,
    seen: bool,
}

impl KindFit {
    fn new() -> Self {
        KindFit {
            bool_ok: true,
            int_ok: true,
            float_ok: true,
            seen: false,
        }
    }

    fn observe(&mut self, cell: &str) {
        let cell = cell.trim();
        if cell.is_empty() {
            return;
        }
        self.seen = true;
        if self.bool_ok && cell != "true" && cell != "false" {
            self.bool_ok = false;
        }
        if self.int_ok && cell.parse::<i64>().is_err() {
            self.int_ok = false;
        }
        if self.float_ok && cell.parse::<f64>().is_err() {
            self.float_ok = false;
        }
    }

    fn kind(&self) -> ColumnKind {
        if !self.seen {
            // nothing to infer from; float keeps all-null columns numeric
            ColumnKind::Float64
        } else if self.bool_ok {
            ColumnKind::Bool
        } else if self.int_ok {
            ColumnKind::Int64
        } else if self.float_ok {
            ColumnKind::Float64
        } else {
            ColumnKind::Text
        }
    }
}

/// Loads a CSV file with a mandatory header row.
///
/// The file is read twice: once to infer column kinds, once to fill
/// typed columns, so no intermediate string copy of the table is held.
pub fn load_csv(path: &Path) -> Result<ColumnTable, TableError> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let open = || -> Result<Box<dyn Read>, TableError> {
        let f = File::open(path).map_err(|e| TableError::io(format!("opening {}", path.display()), e))?;
        Ok(Box::new(BufReader::with_capacity(1 << 20, f)))
    };
    load_csv_with(&name, open)
}

/// Loads CSV text held in memory.
pub fn load_csv_bytes(name: &str, bytes: &[u8]) -> Result<ColumnTable, TableError> {
    load_csv_with(name, || Ok(Box::new(Cursor::new(bytes)) as Box<dyn Read + '_>))
}

/// Rewrites blank lines outside quotes as `""` so that, in a one-column
/// file, an empty line reads as a null cell instead of being skipped.
struct BlankLinesAsEmpty<R> {
    inner: R,
    in_quotes: bool,
    line_empty: bool,
    in_header: bool,
    pending: Vec<u8>,
    buf: Vec<u8>,
}

impl<R: Read> BlankLinesAsEmpty<R> {
    fn new(inner: R) -> Self {
        BlankLinesAsEmpty {
            inner,
            in_quotes: false,
            line_empty: true,
            in_header: true,
            pending: Vec::new(),
            buf: vec![0; 64 * 1024],
        }
    }
}

impl<R: Read> Read for BlankLinesAsEmpty<R> {
    fn read(&mut self, out: &mut [u8]) -> std::io::Result<usize> {
        while self.pending.is_empty() {
            let n = self.inner.read(&mut self.buf)?;
            if n == 0 {
                return Ok(0);
            }
            for &b in &self.buf[..n] {
                match b {
                    b'"' => {
                        self.in_quotes = !self.in_quotes;
                        self.line_empty = false;
                        self.pending.push(b);
                    }
                    b'\r' if !self.in_quotes => {}
                    b'\n' if !self.in_quotes => {
                        if self.line_empty && !self.in_header {
                            self.pending.extend_from_slice(b"\"\"");
                        }
                        self.in_header = false;
                        self.line_empty = true;
                        self.pending.push(b);
                    }
                    _ => {
                        self.line_empty = false;
                        self.pending.push(b);
                    }
                }
            }
        }
        let n = out.len().min(self.pending.len());
        out[..n].copy_from_slice(&self.pending[..n]);
        self.pending.drain(..n);
        Ok(n)
    }
}

fn reader<R: Read>(src: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(src)
}

fn csv_error(e: csv::Error) -> TableError {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TableError::io("reading CSV", io),
        csv::ErrorKind::Utf8 { err, .. } => TableError::Parse {
            line,
            message: format!("invalid UTF-8: {err}"),
        },
        other => TableError::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

fn load_csv_with<'a, F>(name: &str, open: F) -> Result<ColumnTable, TableError>
where
    F: Fn() -> Result<Box<dyn Read + 'a>, TableError>,
{
    let header: Vec<String> = reader(open()?)
        .headers()
        .map_err(csv_error)?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || (header.len() == 1 && header[0].is_empty()) {
        return Err(TableError::Parse {
            line: 1,
            message: "missing header row".into(),
        });
    }
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(TableError::Schema(format!("duplicate column name '{h}'")));
        }
    }

    let width = header.len();
    let open_rows = || -> Result<csv::Reader<Box<dyn Read + 'a>>, TableError> {
        let src = open()?;
        Ok(if width == 1 {
            reader(Box::new(BlankLinesAsEmpty::new(src)) as Box<dyn Read + 'a>)
        } else {
            reader(src)
        })
    };
    let mut rdr = open_rows()?;
    let mut fits = vec![KindFit::new(); width];
    let mut rows = 0usize;
    let mut record = csv::StringRecord::new();
    while rdr.read_record(&mut record).map_err(csv_error)? {
        if record.len() != width {
            return Err(TableError::Parse {
                line: record.position().map_or(0, |p| p.line()),
                message: format!("expected {} fields, found {}", width, record.len()),
            });
        }
        for (fit, cell) in fits.iter_mut().zip(record.iter()) {
            fit.observe(cell);
        }
        rows += 1;
    }

    let mut builders: Vec<(ColumnData, Vec<bool>)> = fits
        .iter()
        .map(|f| {
            let data = match f.kind() {
                ColumnKind::Float64 => ColumnData::Float64(Vec::with_capacity(rows)),
                ColumnKind::Int64 => ColumnData::Int64(Vec::with_capacity(rows)),
                ColumnKind::Bool => ColumnData::Bool(Vec::with_capacity(rows)),
                ColumnKind::Text => ColumnData::Text(Vec::with_capacity(rows)),
            };
            (data, Vec::with_capacity(rows))
        })
        .collect();

    let mut rdr = open_rows()?;
    while rdr.read_record(&mut record).map_err(csv_error)? {
        for ((data, nulls), raw) in builders.iter_mut().zip(record.iter()) {
            let cell = raw.trim();
            let null = cell.is_empty();
            nulls.push(null);
            match data {
                ColumnData::Float64(v) => v.push(if null { f64::NAN } else { cell.parse().unwrap_or(f64::NAN) }),
                ColumnData::Int64(v) => v.push(if null { 0 } else { cell.parse().unwrap_or(0) }),
                ColumnData::Bool(v) => v.push(cell == "true"),
                ColumnData::Text(v) => v.push(if null { String::new() } else { raw.to_string() }),
            }
        }
    }

    let columns = header
        .into_iter()
        .zip(builders)
        .map(|(h, (data, nulls))| Column::new(h, data, nulls))
        .collect::<Result<Vec<_>, _>>()?;
    ColumnTable::with_row_count(name, rows, columns)
}
