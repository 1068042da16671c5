//! Landmark sequence files.
//!
//! The canonical format is one JSON document per sequence:
//!
//! ```json
//! {"format":"gramtraj-sequence","version":1,
//!  "meta":{"label":"wave","subject":"s01","source":"kinect","fps":30.0},
//!  "frames":[[[x,y,z],[x,y,z],...],...]}
//! ```
//!
//! Two CSV layouts are accepted for import: one row per frame
//! (`x1,y1[,z1],x2,...`, needs the dimension) or a directory with one file
//! per frame (one landmark per row). Lines starting with `#` are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "gramtraj-sequence";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SequenceMeta {
    pub label: String,
    pub subject: String,
    pub source: String,
    pub fps: Option<f64>,
}

/// A validated landmark sequence: every frame is `n×d` with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFile {
    pub meta: SequenceMeta,
    pub frames: Vec<DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceDoc {
    format: String,
    version: u32,
    meta: SequenceMeta,
    frames: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SequenceFormat {
    Json,
    /// One frame per CSV row, `dim` coordinates per landmark.
    CsvRows {
        dim: usize,
    },
    /// A directory of CSV files, one frame each.
    CsvDir,
}

impl SequenceFormat {
    /// Directories are CSV frame dumps, `.csv` files need the dimension,
    /// everything else is JSON.
    pub fn detect(path: &Path, dim: Option<usize>) -> Result<Self> {
        if path.is_dir() {
            return Ok(SequenceFormat::CsvDir);
        }
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => match dim {
                Some(dim) => Ok(SequenceFormat::CsvRows { dim }),
                None => Err(Error::InvalidParameter(format!(
                    "{}: CSV row format needs the landmark dimension",
                    path.display()
                ))),
            },
            _ => Ok(SequenceFormat::Json),
        }
    }
}

impl SequenceFile {
    pub fn new(meta: SequenceMeta, frames: Vec<DMatrix<f64>>) -> Self {
        Self { meta, frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(n, d)` of the frames.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| f.shape())
    }

    fn validate(&self, path: &Path) -> Result<()> {
        let Some(shape) = self.shape() else {
            return Err(Error::Shape {
                path: path.into(),
                frame: 0,
                message: "sequence has no frames".into(),
            });
        };
        for (i, f) in self.frames.iter().enumerate() {
            if f.shape() != shape {
                return Err(Error::Shape {
                    path: path.into(),
                    frame: i,
                    message: format!(
                        "{}x{} landmarks, expected {}x{}",
                        f.nrows(),
                        f.ncols(),
                        shape.0,
                        shape.1
                    ),
                });
            }
            if let Some(pos) = f.iter().position(|x| !x.is_finite()) {
                // column-major storage
                return Err(Error::NonFinite {
                    path: path.into(),
                    frame: i,
                    landmark: pos % f.nrows(),
                });
            }
        }
        Ok(())
    }

    /// Canonical JSON text, terminated by a newline.
    pub fn to_json(&self) -> String {
        let doc = SequenceDoc {
            format: FORMAT_TAG.into(),
            version: FORMAT_VERSION,
            meta: self.meta.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| f.row_iter().map(|r| r.iter().copied().collect()).collect())
                .collect(),
        };
        let mut s = serde_json::to_string(&doc).expect("sequence serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let doc: SequenceDoc = serde_json::from_str(text).map_err(|e| json_error(text, path, e))?;
        if doc.format != FORMAT_TAG {
            return Err(parse_err(
                path,
                "format",
                format!("unknown format tag {:?}", doc.format),
            ));
        }
        if doc.version != FORMAT_VERSION {
            return Err(parse_err(
                path,
                "version",
                format!("unsupported version {}", doc.version),
            ));
        }
        let mut frames = Vec::with_capacity(doc.frames.len());
        for (i, rows) in doc.frames.iter().enumerate() {
            frames.push(frame_from_rows(rows, path, i)?);
        }
        let seq = Self {
            meta: doc.meta,
            frames,
        };
        seq.validate(path)?;
        Ok(seq)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }
}

fn parse_err(path: &Path, location: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        location: location.into(),
        message: message.into(),
    }
}

fn json_error(text: &str, path: &Path, e: serde_json::Error) -> Error {
    let (line, col) = (e.line(), e.column());
    // JSON has no NaN/Infinity literals; name them instead of reporting a
    // bare syntax error.
    if let Some(l) = text.lines().nth(line.saturating_sub(1)) {
        let rest = l.get(col.saturating_sub(1)..).unwrap_or("");
        if ["NaN", "Infinity", "-Infinity", "inf"]
            .iter()
            .any(|t| rest.starts_with(t))
        {
            return Error::NonFinite {
                path: path.into(),
                frame: frame_index_at(text, line, col),
                landmark: 0,
            };
        }
    }
    parse_err(path, format!("line {line}, column {col}"), e.to_string())
}

/// Best-effort frame index of a byte position inside the `frames` array.
fn frame_index_at(text: &str, line: usize, col: usize) -> usize {
    let offset: usize = text
        .lines()
        .take(line.saturating_sub(1))
        .map(|l| l.len() + 1)
        .sum::<usize>()
        + col;
    let Some(start) = text.find("\"frames\"") else {
        return 0;
    };
    let mut depth = 0i32;
    let mut frame = 0usize;
    for ch in text[start..offset.min(text.len())].chars() {
        match ch {
            '[' => depth += 1,
            ']' => {
                depth -= 1;
                if depth == 1 {
                    frame += 1;
                }
            }
            _ => {}
        }
    }
    frame
}

fn frame_from_rows(rows: &[Vec<f64>], path: &Path, frame: usize) -> Result<DMatrix<f64>> {
    let d = rows.first().map(Vec::len).unwrap_or(0);
    if d == 0 {
        return Err(Error::Shape {
            path: path.into(),
            frame,
            message: "frame has no landmarks".into(),
        });
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != d) {
        return Err(Error::Shape {
            path: path.into(),
            frame,
            message: format!(
                "landmark {bad} has {} coordinates, expected {d}",
                rows[bad].len()
            ),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j]))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn csv_records(text: &str, path: &Path) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| parse_err(path, "csv", e.to_string()))?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let values = rec
            .iter()
            .enumerate()
            .map(|(col, f)| {
                f.parse::<f64>().map_err(|_| {
                    parse_err(
                        path,
                        format!("line {line}, field {}", col + 1),
                        format!("not a number: {f:?}"),
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push((line, values));
    }
    Ok(out)
}

fn load_csv_rows(path: &Path, dim: usize) -> Result<SequenceFile> {
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "landmark dimension must be positive".into(),
        ));
    }
    let records = csv_records(&read_text(path)?, path)?;
    let width = records.first().map(|(_, v)| v.len()).unwrap_or(0);
    let mut frames = Vec::with_capacity(records.len());
    for (frame, (_, values)) in records.iter().enumerate() {
        if values.len() != width || values.len() % dim != 0 {
            return Err(Error::Shape {
                path: path.into(),
                frame,
                message: format!(
                    "row has {} values, expected {width} (a multiple of {dim})",
                    values.len()
                ),
            });
        }
        frames.push(DMatrix::from_row_slice(values.len() / dim, dim, values));
    }
    let seq = SequenceFile::new(default_meta(path), frames);
    seq.validate(path)?;
    Ok(seq)
}

fn load_csv_dir(dir: &Path) -> Result<SequenceFile> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    let mut frames = Vec::with_capacity(files.len());
    for (frame, file) in files.iter().enumerate() {
        let records = csv_records(&read_text(file)?, file)?;
        let rows: Vec<Vec<f64>> = records.into_iter().map(|(_, v)| v).collect();
        frames.push(frame_from_rows(&rows, dir, frame)?);
    }
    let seq = SequenceFile::new(default_meta(dir), frames);
    seq.validate(dir)?;
    Ok(seq)
}

fn default_meta(path: &Path) -> SequenceMeta {
    SequenceMeta {
        label: String::new(),
        subject: String::new(),
        source: format!(
            "csv:{}",
            path.file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        ),
        fps: None,
    }
}

pub fn load_sequence(path: &Path, format: SequenceFormat) -> Result<SequenceFile> {
    match format {
        SequenceFormat::Json => SequenceFile::from_json(&read_text(path)?, path),
        SequenceFormat::CsvRows { dim } => load_csv_rows(path, dim),
        SequenceFormat::CsvDir => load_csv_dir(path),
    }
}

/// Every `*.json` sequence in `dir`, sorted by file name.
pub fn load_dataset_dir(dir: &Path) -> Result<Vec<(PathBuf, SequenceFile)>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| {
            let seq = load_sequence(&p, SequenceFormat::Json)?;
            Ok((p, seq))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"format":"gramtraj-sequence","version":1,"meta":{"label":"a","subject":"s1","source":"test","fps":null},"frames":[[[0.0,0.0],[1.0,0.0],[0.0,1.0]],[[0.0,0.0],[2.0,0.0],[0.0,1.0]]]}
"#;

    #[test]
    fn minimal_json() {
        let seq = SequenceFile::from_json(MINIMAL, Path::new("min.json")).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.shape(), Some((3, 2)));
        assert_eq!(seq.to_json(), MINIMAL);
    }

    #[test]
    fn json_nan_token() {
        let text = MINIMAL.replace("[2.0,0.0]", "[NaN,0.0]");
        let err = SequenceFile::from_json(&text, Path::new("nan.json")).unwrap_err();
        assert!(matches!(err, Error::NonFinite { frame: 1, .. }), "{err}");
    }

    #[test]
    fn json_ragged_frame() {
        let text = MINIMAL.replace("[[0.0,0.0],[2.0,0.0],[0.0,1.0]]", "[[0.0,0.0],[2.0,0.0]]");
        let err = SequenceFile::from_json(&text, Path::new("r.json")).unwrap_err();
        assert!(matches!(err, Error::Shape { frame: 1, .. }), "{err}");
    }

    #[test]
    fn json_syntax_error_has_location() {
        let err = SequenceFile::from_json("{\"format\": }", Path::new("bad.json")).unwrap_err();
        match err {
            Error::Parse { location, .. } => assert!(location.contains("line 1")),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn csv_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("seq.csv");
        fs::write(&p, "# x,y per landmark\n0,0,1,0,0,1\n0,0,2,0,0,1\n").unwrap();
        let seq = load_sequence(&p, SequenceFormat::CsvRows { dim: 2 }).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.frames[1][(1, 0)], 2.0);

        fs::write(&p, "0,0,1,0,0,1\n0,0,2,0,0\n").unwrap();
        let err = load_sequence(&p, SequenceFormat::CsvRows { dim: 2 }).unwrap_err();
        assert!(matches!(err, Error::Shape { frame: 1, .. }), "{err}");

        fs::write(&p, "0,0,1,0,0,1\n0,NaN,2,0,0,1\n").unwrap();
        let err = load_sequence(&p, SequenceFormat::CsvRows { dim: 2 }).unwrap_err();
        assert!(
            matches!(
                err,
                Error::NonFinite {
                    frame: 1,
                    landmark: 0,
                    ..
                }
            ),
            "{err}"
        );

        fs::write(&p, "0,0,1,0,0,1\n0,x,2,0,0,1\n").unwrap();
        let err = load_sequence(&p, SequenceFormat::CsvRows { dim: 2 }).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn csv_directory() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("f000.csv"), "0,0,0\n1,0,0\n0,1,0\n0,0,1\n").unwrap();
        fs::write(dir.path().join("f001.csv"), "0,0,0\n2,0,0\n0,1,0\n0,0,1\n").unwrap();
        let seq = load_sequence(
            dir.path(),
            SequenceFormat::detect(dir.path(), None).unwrap(),
        )
        .unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.shape(), Some((4, 3)));
    }
}
