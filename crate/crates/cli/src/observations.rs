//! Observation sources: CSV rows, a single column of norms, or a directory
//! of portable graymap images.

use std::fs;
use std::path::{Path, PathBuf};

use image::ImageReader;

use crate::error::{CliError, Result};

/// What one step of the monitor consumes.
#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Vector(Vec<f64>),
    Norm(f64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ObservationSource {
    CsvRows { path: PathBuf, has_header: bool },
    NormColumn { path: PathBuf, has_header: bool },
    ImageDir { path: PathBuf },
}

impl ObservationSource {
    /// Opens the source as a lazy stream. Errors surface per item.
    pub fn open(&self) -> Result<Box<dyn Iterator<Item = Result<Item>>>> {
        Ok(match self {
            ObservationSource::CsvRows { path, has_header } => Box::new(
                CsvRows::open(path, *has_header)?.map(|r| r.map(|(_, v)| Item::Vector(v))),
            ),
            ObservationSource::NormColumn { path, has_header } => {
                let path = path.clone();
                Box::new(CsvRows::open(&path, *has_header)?.map(move |r| {
                    let (line, row) = r?;
                    match row.as_slice() {
                        [d] if *d >= 0.0 => Ok(Item::Norm(*d)),
                        [_] => Err(CliError::Parse { path: path.clone(), line, msg: "norms must be nonnegative".into() }),
                        _ => Err(CliError::Parse { path: path.clone(), line, msg: "norm files hold exactly one column".into() }),
                    }
                }))
            }
            ObservationSource::ImageDir { path } => {
                Box::new(graymap_files(path)?.into_iter().map(|f| read_graymap(&f).map(Item::Vector)))
            }
        })
    }
}

/// Streaming reader of comma-separated decimal rows with a fixed width.
pub struct CsvRows {
    path: PathBuf,
    records: csv::StringRecordsIntoIter<fs::File>,
    width: Option<usize>,
}

impl CsvRows {
    pub fn open(path: &Path, has_header: bool) -> Result<Self> {
        let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        let reader = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        Ok(Self { path: path.to_path_buf(), records: reader.into_records(), width: None })
    }

    fn parse(&mut self, record: csv::StringRecord) -> Result<(u64, Vec<f64>)> {
        let line = record.position().map_or(0, |p| p.line());
        let err = |msg: String| CliError::Parse { path: self.path.clone(), line, msg };
        let width = *self.width.get_or_insert(record.len());
        if record.len() != width {
            return Err(err(format!("expected {width} fields, found {}", record.len())));
        }
        record
            .iter()
            .enumerate()
            .map(|(k, field)| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(err(format!("field {} is not a finite number: {field:?}", k + 1))),
            })
            .collect::<Result<_>>()
            .map(|v| (line, v))
    }
}

/// Yields `(line, values)` per row.
impl Iterator for CsvRows {
    type Item = Result<(u64, Vec<f64>)>;

    fn next(&mut self) -> Option<Self::Item> {
        let record = match self.records.next()? {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Some(Err(CliError::Parse { path: self.path.clone(), line, msg: e.to_string() }));
            }
        };
        Some(self.parse(record))
    }
}

/// `*.pgm` files of a directory in lexicographic file-name order.
pub fn graymap_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let path = entry.map_err(|e| CliError::io(dir, e))?.path();
        let is_pgm = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
        if is_pgm && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(CliError::format(dir, "no .pgm files found"));
    }
    Ok(files)
}

/// Reads a P2 or P5 graymap into a row-major vector of intensities on the
/// 0..=255 scale.
pub fn read_graymap(path: &Path) -> Result<Vec<f64>> {
    let img = ImageReader::open(path)
        .map_err(|e| CliError::io(path, e))?
        .with_guessed_format()
        .map_err(|e| CliError::io(path, e))?
        .decode()
        .map_err(|e| CliError::format(path, e))?;
    match img {
        image::DynamicImage::ImageLuma8(buf) => Ok(buf.into_raw().into_iter().map(f64::from).collect()),
        image::DynamicImage::ImageLuma16(buf) => Ok(buf
            .into_raw()
            .into_iter()
            .map(|v| f64::from(v) * 255.0 / 65535.0)
            .collect()),
        _ => Err(CliError::format(path, "not a single-channel graymap")),
    }
}
