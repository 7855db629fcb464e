use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureMatrix};
use crate::error::{Error, ParseError, Result};

const MFB_MAGIC: &[u8; 4] = b"MFB1";
const MFB_HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Csv,
    Mfbin,
}

impl DataFormat {
    /// `.mfbin` files are binary, anything else is read as CSV.
    pub fn from_path(path: &Path) -> DataFormat {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("mfbin") => DataFormat::Mfbin,
            _ => DataFormat::Csv,
        }
    }
}

impl FromStr for DataFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(DataFormat::Csv),
            "mfbin" => Ok(DataFormat::Mfbin),
            other => Err(Error::Config(format!("unknown data format {other:?}"))),
        }
    }
}

/// A feature file whose label column may be absent.
#[derive(Debug, Clone)]
pub struct Table {
    pub features: FeatureMatrix,
    pub labels: Option<Vec<u8>>,
}

impl Table {
    pub fn into_dataset(self) -> Result<Dataset> {
        match self.labels {
            Some(labels) => Dataset::new(self.features, labels),
            None => Err(Error::ParseBytes(ParseError::MalformedHeader(
                "missing label column".into(),
            ))),
        }
    }
}

/// Loads a labelled dataset; row ids are 0-based file positions.
pub fn load_dataset(path: &Path, format: DataFormat) -> Result<Dataset> {
    let table = load_table(path, format)?;
    table.into_dataset().map_err(|e| match e {
        Error::ParseBytes(source) => Error::Parse {
            path: path.to_path_buf(),
            source,
        },
        e => e,
    })
}

/// Loads features and, when present, labels.
pub fn load_table(path: &Path, format: DataFormat) -> Result<Table> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    let parsed = match format {
        DataFormat::Csv => parse_csv(&bytes),
        DataFormat::Mfbin => read_mfbin(&bytes),
    };
    parsed.map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads only the header to learn the feature count.
pub fn peek_feature_count(path: &Path, format: DataFormat) -> Result<usize> {
    let wrap = |source| Error::Parse {
        path: path.to_path_buf(),
        source,
    };
    let mut file = File::open(path)?;
    match format {
        DataFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(true)
                .flexible(true)
                .from_reader(file);
            let header = reader
                .headers()
                .map_err(|e| wrap(ParseError::Csv(e.to_string())))?;
            if header.is_empty() {
                return Err(wrap(ParseError::MalformedHeader(
                    "missing header row".into(),
                )));
            }
            Ok(parse_header(header).map_err(wrap)?.0)
        }
        DataFormat::Mfbin => {
            let mut head = [0u8; 8];
            file.read_exact(&mut head).map_err(|_| {
                wrap(ParseError::Truncated {
                    expected: MFB_HEADER_LEN,
                    found: 0,
                })
            })?;
            if &head[..4] != MFB_MAGIC {
                return Err(wrap(ParseError::BadMagic));
            }
            Ok(u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize)
        }
    }
}

fn parse_header(header: &csv::StringRecord) -> Result<(usize, bool), ParseError> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let has_label = names.last() == Some(&"label");
    let n_features = names.len() - usize::from(has_label);
    if n_features == 0 {
        return Err(ParseError::MalformedHeader("no feature columns".into()));
    }
    for (i, name) in names[..n_features].iter().enumerate() {
        if *name != format!("f{i}") {
            return Err(ParseError::MalformedHeader(format!(
                "column {i} is named {name:?}, expected \"f{i}\""
            )));
        }
    }
    Ok((n_features, has_label))
}

fn parse_label(cell: &str, row: usize) -> Result<u8, ParseError> {
    match cell.trim().parse::<f64>() {
        Ok(0.0) => Ok(0),
        Ok(1.0) => Ok(1),
        _ => Err(ParseError::BadLabel {
            row,
            value: cell.to_string(),
        }),
    }
}

fn parse_csv(bytes: &[u8]) -> Result<Table, ParseError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);
    let header = reader
        .headers()
        .map_err(|e| ParseError::Csv(e.to_string()))?
        .clone();
    if header.is_empty() {
        return Err(ParseError::MalformedHeader("missing header row".into()));
    }
    let (n_cols, has_label) = parse_header(&header)?;
    let width = header.len();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut row = 0usize;
    while reader
        .read_record(&mut record)
        .map_err(|e| ParseError::Csv(e.to_string()))?
    {
        if record.len() != width {
            return Err(ParseError::RowLength {
                row,
                expected: width,
                found: record.len(),
            });
        }
        for (column, cell) in record.iter().take(n_cols).enumerate() {
            let cell = cell.trim();
            // an empty cell is a missing feature
            let value = if cell.is_empty() {
                f32::NAN
            } else {
                cell.parse::<f32>().map_err(|_| ParseError::NonNumeric {
                    row,
                    column,
                    value: cell.to_string(),
                })?
            };
            values.push(value);
        }
        if has_label {
            labels.push(parse_label(&record[n_cols], row)?);
        }
        row += 1;
    }
    let features = FeatureMatrix::new(values, row, n_cols)
        .map_err(|e| ParseError::MalformedHeader(e.to_string()))?;
    Ok(Table {
        features,
        labels: has_label.then_some(labels),
    })
}

/// Decodes the `MFB1` container: magic, u32 LE column count, u64 LE row
/// count, row-major f32 LE features, then one u8 label per row.
pub fn read_mfbin(bytes: &[u8]) -> Result<Table, ParseError> {
    let found = bytes.len() as u64;
    if found < MFB_HEADER_LEN {
        if found >= 4 && &bytes[..4] != MFB_MAGIC {
            return Err(ParseError::BadMagic);
        }
        return Err(ParseError::Truncated {
            expected: MFB_HEADER_LEN,
            found,
        });
    }
    if &bytes[..4] != MFB_MAGIC {
        return Err(ParseError::BadMagic);
    }
    let n_cols = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let n_rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    if n_cols == 0 {
        return Err(ParseError::MalformedHeader("column count is zero".into()));
    }
    let expected =
        (n_rows as u128) * (n_cols as u128) * 4 + n_rows as u128 + MFB_HEADER_LEN as u128;
    if (found as u128) < expected {
        return Err(ParseError::Truncated {
            expected: expected.min(u64::MAX as u128) as u64,
            found,
        });
    }
    if found as u128 > expected {
        return Err(ParseError::TrailingBytes {
            expected: expected as u64,
            found,
        });
    }
    let n_rows = n_rows as usize;
    let n_values = n_rows * n_cols;
    let body = &bytes[MFB_HEADER_LEN as usize..];
    let values: Vec<f32> = body[..n_values * 4]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let labels = body[n_values * 4..]
        .iter()
        .enumerate()
        .map(|(row, &l)| {
            if l <= 1 {
                Ok(l)
            } else {
                Err(ParseError::BadLabel {
                    row,
                    value: l.to_string(),
                })
            }
        })
        .collect::<Result<Vec<u8>, _>>()?;
    let features = FeatureMatrix::new(values, n_rows, n_cols)
        .map_err(|e| ParseError::MalformedHeader(e.to_string()))?;
    Ok(Table {
        features,
        labels: Some(labels),
    })
}

pub fn write_mfbin<W: Write>(mut out: W, data: &Dataset) -> Result<()> {
    out.write_all(MFB_MAGIC)?;
    out.write_all(&(data.feature_count() as u32).to_le_bytes())?;
    out.write_all(&(data.n_rows() as u64).to_le_bytes())?;
    for v in data.features().values() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.write_all(data.labels())?;
    Ok(())
}

pub fn write_csv<W: Write>(mut out: W, data: &Dataset) -> Result<()> {
    let d = data.feature_count();
    let header: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    writeln!(out, "{},label", header.join(","))?;
    let mut line = String::new();
    for (row, label) in data.features().rows().zip(data.labels()) {
        line.clear();
        for v in row {
            // Display for f32 is the shortest string that parses back exactly
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&label.to_string());
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn write_dataset(path: &Path, format: DataFormat, data: &Dataset) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        DataFormat::Csv => write_csv(&mut out, data)?,
        DataFormat::Mfbin => write_mfbin(&mut out, data)?,
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_table(text: &str) -> Result<Table, ParseError> {
        parse_csv(text.as_bytes())
    }

    #[test]
    fn csv_echoes_rows_in_order() {
        let t = csv_table("f0,f1,f2,f3,label\n1,2,3,4,0\n5,6,7,8,1\n0.5,-1,1e3,2,1\n").unwrap();
        assert_eq!(t.features.n_rows(), 3);
        assert_eq!(t.features.n_cols(), 4);
        assert_eq!(t.features.row(2), &[0.5, -1.0, 1000.0, 2.0]);
        assert_eq!(t.labels.unwrap(), vec![0, 1, 1]);
    }

    #[test]
    fn csv_label_two_names_its_row() {
        let err = csv_table("f0,label\n1,0\n2,2\n").unwrap_err();
        assert_eq!(
            err,
            ParseError::BadLabel {
                row: 1,
                value: "2".into()
            }
        );
    }

    #[test]
    fn csv_distinct_errors() {
        assert!(matches!(
            csv_table("a,b,label\n1,2,0\n"),
            Err(ParseError::MalformedHeader(_))
        ));
        assert_eq!(
            csv_table("f0,f1,label\n1,x,0\n").unwrap_err(),
            ParseError::NonNumeric {
                row: 0,
                column: 1,
                value: "x".into()
            }
        );
        assert_eq!(
            csv_table("f0,f1,label\n1,2,0\n1,2\n").unwrap_err(),
            ParseError::RowLength {
                row: 1,
                expected: 3,
                found: 2
            }
        );
    }

    #[test]
    fn csv_empty_cell_is_missing() {
        let t = csv_table("f0,f1,label\n,2,0\n").unwrap();
        assert!(t.features.get(0, 0).is_nan());
    }

    #[test]
    fn csv_without_label_column() {
        let t = csv_table("f0,f1\n1,2\n").unwrap();
        assert!(t.labels.is_none());
        let header_only = csv_table("f0,f1,label\n").unwrap();
        assert_eq!(header_only.features.n_rows(), 0);
    }

    #[test]
    fn mfbin_full_static_vector_width() {
        let d = 2381;
        let rows = vec![vec![0.25f32; d], vec![-1.0f32; d]];
        let data = Dataset::from_rows(&rows, vec![0, 1]).unwrap();
        let mut bytes = Vec::new();
        write_mfbin(&mut bytes, &data).unwrap();
        assert_eq!(&bytes[..4], b"MFB1");
        assert_eq!(bytes.len(), 16 + 2 * d * 4 + 2);
        let t = read_mfbin(&bytes).unwrap();
        assert_eq!(t.features.n_cols(), 2381);
        assert_eq!(t.into_dataset().unwrap(), data);
    }

    #[test]
    fn mfbin_rejects_bad_input() {
        assert_eq!(
            read_mfbin(b"XXXX0000000000000000").unwrap_err(),
            ParseError::BadMagic
        );
        let data = Dataset::from_rows(&[vec![1.0, 2.0]], vec![1]).unwrap();
        let mut bytes = Vec::new();
        write_mfbin(&mut bytes, &data).unwrap();
        assert!(matches!(
            read_mfbin(&bytes[..bytes.len() - 1]),
            Err(ParseError::Truncated { .. })
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(
            read_mfbin(&extra),
            Err(ParseError::TrailingBytes { .. })
        ));
        *bytes.last_mut().unwrap() = 7;
        assert!(matches!(
            read_mfbin(&bytes),
            Err(ParseError::BadLabel { row: 0, .. })
        ));
    }

    #[test]
    fn csv_round_trips_floats_exactly() {
        let rows = vec![
            vec![0.1f32, 1.0e-30, -3.4028235e38],
            vec![f32::MIN_POSITIVE, 7.0, 1.0 / 3.0],
        ];
        let data = Dataset::from_rows(&rows, vec![1, 0]).unwrap();
        let mut bytes = Vec::new();
        write_csv(&mut bytes, &data).unwrap();
        let back = parse_csv(&bytes).unwrap().into_dataset().unwrap();
        assert_eq!(back, data);
    }
}
