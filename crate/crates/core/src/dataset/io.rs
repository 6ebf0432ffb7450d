//! Manifest-driven loading of UCI-style delimited files, and canonical CSV output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::DataTable;
use crate::error::{Result, WdneError};
use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    Comma,
    Semicolon,
    Tab,
    /// Any run of spaces or tabs.
    Whitespace,
}

impl Delimiter {
    fn split(self, line: &str) -> Vec<&str> {
        match self {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Semicolon => line.split(';').map(str::trim).collect(),
            Delimiter::Tab => line.split('\t').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub name: String,
    /// Label cell value as it appears in the file.
    pub value: String,
}

/// Describes how to read one dataset file.
///
/// Classes are encoded by their order in `classes`, not by first appearance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schema {
    pub name: String,
    /// Data file, relative to the manifest's directory.
    #[serde(default)]
    pub file: Option<String>,
    pub delimiter: Delimiter,
    /// Label column index; negative values count from the end (-1 = last).
    pub label_column: i64,
    pub classes: Vec<ClassSpec>,
    /// Class name treated as "positive" for stratified initial sets; defaults to the first class.
    #[serde(default)]
    pub positive_class: Option<String>,
    /// Rows whose label is listed here are skipped.
    #[serde(default)]
    pub ignored_labels: Vec<String>,
    #[serde(default)]
    pub header: bool,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Schema {
    pub fn load(path: impl AsRef<Path>) -> Result<Schema> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| WdneError::io(path, e))?;
        let mut schema: Schema = serde_json::from_str(&text)
            .map_err(|e| WdneError::Schema(format!("{}: {e}", path.display())))?;
        schema.base_dir = path.parent().map(Path::to_path_buf);
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(WdneError::Schema(format!("{}: no classes declared", self.name)));
        }
        if let Some(p) = &self.positive_class {
            if !self.classes.iter().any(|c| &c.name == p) {
                return Err(WdneError::Schema(format!(
                    "{}: positive class '{p}' is not among the declared classes",
                    self.name
                )));
            }
        }
        Ok(())
    }

    /// Location of the data file named by the manifest.
    pub fn data_path(&self) -> Result<PathBuf> {
        let file = self
            .file
            .as_ref()
            .ok_or_else(|| WdneError::Schema(format!("{}: manifest names no data file", self.name)))?;
        Ok(match &self.base_dir {
            Some(dir) => dir.join(file),
            None => PathBuf::from(file),
        })
    }

    fn positive_index(&self) -> usize {
        self.positive_class
            .as_ref()
            .and_then(|p| self.classes.iter().position(|c| &c.name == p))
            .unwrap_or(0)
    }

    fn class_of(&self, cell: &str) -> Option<usize> {
        let numeric = cell.parse::<f64>().ok();
        self.classes.iter().position(|c| {
            c.value == cell || matches!((numeric, c.value.parse::<f64>()), (Some(a), Ok(b)) if a == b)
        })
    }

    fn is_ignored(&self, cell: &str) -> bool {
        let numeric = cell.parse::<f64>().ok();
        self.ignored_labels.iter().any(|v| {
            v == cell || matches!((numeric, v.parse::<f64>()), (Some(a), Ok(b)) if a == b)
        })
    }
}

/// Reads a delimited file into a [`DataTable`]. Blank lines are skipped.
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<DataTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| WdneError::io(path, e))?;

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut row = 0;

    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (schema.header && line_no == 0) {
            continue;
        }
        let cells = schema.delimiter.split(line.trim());
        let label_col = if schema.label_column < 0 {
            cells.len() as i64 + schema.label_column
        } else {
            schema.label_column
        };
        if label_col < 0 || label_col as usize >= cells.len() {
            return Err(WdneError::Data {
                row,
                column: schema.label_column.unsigned_abs() as usize,
                message: format!("line {} has {} cells, no label column", line_no + 1, cells.len()),
            });
        }
        let label_col = label_col as usize;
        let label_cell = cells[label_col];
        if schema.is_ignored(label_cell) {
            continue;
        }
        let label = schema.class_of(label_cell).ok_or_else(|| {
            WdneError::Schema(format!(
                "unknown label '{label_cell}' on line {} of {}",
                line_no + 1,
                path.display()
            ))
        })?;

        let d = cells.len() - 1;
        match width {
            None => width = Some(d),
            Some(w) if w != d => {
                return Err(WdneError::Data {
                    row,
                    column: d.min(w),
                    message: format!("line {} has {} features, expected {w}", line_no + 1, d),
                })
            }
            _ => {}
        }
        for (column, cell) in cells.iter().enumerate().filter(|&(c, _)| c != label_col) {
            let v: f64 = cell.parse().map_err(|_| WdneError::Data {
                row,
                column,
                message: format!("cannot parse '{cell}' as a number"),
            })?;
            if !v.is_finite() {
                return Err(WdneError::Data {
                    row,
                    column,
                    message: format!("non-finite value '{cell}'"),
                });
            }
            values.push(v);
        }
        labels.push(label);
        row += 1;
    }

    if labels.is_empty() {
        return Err(WdneError::Data {
            row: 0,
            column: 0,
            message: format!("{} contains no data rows", path.display()),
        });
    }
    let features = Matrix::from_vec(labels.len(), width.unwrap_or(0), values)?;
    DataTable::with_classes(
        features,
        labels,
        schema.classes.iter().map(|c| c.name.clone()).collect(),
        schema.classes.iter().map(|c| c.value.clone()).collect(),
        schema.positive_index(),
    )
}

/// Canonical re-emission: comma-delimited, features in shortest round-trip
/// form, class value last, no header.
pub fn write_csv(table: &DataTable, mut out: impl Write) -> std::io::Result<()> {
    for (row, &label) in table.features().row_iter().zip(table.labels()) {
        for v in row {
            write!(out, "{v},")?;
        }
        writeln!(out, "{}", table.class_values()[label])?;
    }
    Ok(())
}
