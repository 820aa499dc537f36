//! Problem files: one JSON document with named dense matrices.
//!
//! ```json
//! { "A": [[0, 1], [-2, 0]], "B": [[0], [1]], "W": "w.csv",
//!   "Q": [[1, 0], [0, 1]], "R": [[10]], "lambda": 0.1 }
//! ```
//!
//! Matrices are row-major nested arrays or paths (relative to the problem
//! file) of header-free CSV files. Infinite weights are written `"inf"`.
//! When `Lambda` is present it is the full weight matrix and `lambda` is
//! kept only as the nominal scalar; otherwise `lambda` expands to `λ·1`.

use std::fs;
use std::path::{Path, PathBuf};

use faer::Mat;
use serde_json::{Map, Value};

use super::{CostSpec, Plant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub plant: Plant,
    pub cost: CostSpec,
    pub k0: Option<Mat<f64>>,
    pub lambda: Option<f64>,
}

impl ProblemFile {
    pub fn new(plant: Plant, cost: CostSpec) -> Self {
        Self {
            plant,
            cost,
            k0: None,
            lambda: None,
        }
    }

    /// Sets `Λ = λ·1` and records the scalar.
    pub fn with_uniform_lambda(mut self, lambda: f64) -> Self {
        self.cost = self.cost.with_uniform_lambda(lambda);
        self.lambda = Some(lambda);
        self
    }

    pub fn to_json(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("A".into(), matrix_to_json(&self.plant.a().to_owned()));
        obj.insert("B".into(), matrix_to_json(&self.plant.b().to_owned()));
        obj.insert("W".into(), matrix_to_json(&self.plant.w().to_owned()));
        obj.insert("Q".into(), matrix_to_json(&self.cost.q().to_owned()));
        obj.insert("R".into(), matrix_to_json(&self.cost.r().to_owned()));
        obj.insert("Lambda".into(), matrix_to_json(&self.cost.lambda().to_owned()));
        if let Some(l) = self.lambda {
            obj.insert("lambda".into(), scalar_to_json(l));
        }
        if let Some(k) = &self.k0 {
            obj.insert("K0".into(), matrix_to_json(k));
        }
        Value::Object(obj)
    }

    /// Parses a document; relative CSV paths resolve against `base`.
    pub fn from_json(value: &Value, base: &Path) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::Parse {
            field: "<root>".into(),
            message: "expected a JSON object".into(),
        })?;
        let get = |name: &str| -> Result<Mat<f64>> {
            let v = obj.get(name).ok_or_else(|| Error::Parse {
                field: name.into(),
                message: "missing".into(),
            })?;
            matrix_from_json(name, v, base)
        };
        let a = get("A")?;
        let n = a.nrows();
        let mut b = get("B")?;
        // `[]` cannot carry a row count; treat it as n×0.
        if b.nrows() == 0 && b.ncols() == 0 {
            b = Mat::zeros(n, 0);
        }
        let w = get("W")?;
        let q = get("Q")?;
        let r = get("R")?;
        let plant = Plant::new(a, b, w)?;
        let m = plant.m();
        if q.nrows() != n || q.ncols() != n {
            return Err(dim_err("Q", n, n, &q));
        }
        if r.nrows() != m || r.ncols() != m {
            return Err(dim_err("R", m, m, &r));
        }
        let lambda = match obj.get("lambda") {
            None | Some(Value::Null) => None,
            Some(v) => Some(scalar_from_json("lambda", v)?),
        };
        let weights = match obj.get("Lambda") {
            None | Some(Value::Null) => match lambda {
                Some(l) => Mat::from_fn(m, n, |_, _| l),
                None => Mat::zeros(m, n),
            },
            Some(v) => {
                let lam = matrix_from_json("Lambda", v, base)?;
                if lam.nrows() != m || lam.ncols() != n {
                    return Err(dim_err("Lambda", m, n, &lam));
                }
                lam
            }
        };
        let cost = CostSpec::new(q, r, weights)?;
        let k0 = match obj.get("K0") {
            None | Some(Value::Null) => None,
            Some(v) => {
                let k = matrix_from_json("K0", v, base)?;
                if k.nrows() != m || k.ncols() != n {
                    return Err(dim_err("K0", m, n, &k));
                }
                Some(k)
            }
        };
        Ok(Self {
            plant,
            cost,
            k0,
            lambda,
        })
    }
}

fn dim_err(field: &str, rows: usize, cols: usize, found: &Mat<f64>) -> Error {
    Error::Dimension {
        field: field.into(),
        expected: format!("{rows}x{cols}"),
        found: format!("{}x{}", found.nrows(), found.ncols()),
    }
}

pub fn write_problem(problem: &ProblemFile, path: impl AsRef<Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(&problem.to_json()).expect("JSON values always serialize");
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<ProblemFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| Error::Parse {
        field: "<document>".into(),
        message: e.to_string(),
    })?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    ProblemFile::from_json(&value, &base)
}

fn scalar_to_json(x: f64) -> Value {
    if x.is_finite() {
        Value::from(x)
    } else if x.is_nan() {
        Value::from("nan")
    } else if x > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

fn parse_scalar_text(s: &str) -> Option<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        other => other.parse().ok(),
    }
}

fn scalar_from_json(field: &str, v: &Value) -> Result<f64> {
    match v {
        Value::Number(n) => n.as_f64().ok_or_else(|| Error::Parse {
            field: field.into(),
            message: format!("unrepresentable number {n}"),
        }),
        Value::String(s) => parse_scalar_text(s).ok_or_else(|| Error::Parse {
            field: field.into(),
            message: format!("not a number: {s:?}"),
        }),
        other => Err(Error::Parse {
            field: field.into(),
            message: format!("expected a number, found {other}"),
        }),
    }
}

fn matrix_to_json(m: &Mat<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| scalar_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

fn matrix_from_json(field: &str, v: &Value, base: &Path) -> Result<Mat<f64>> {
    match v {
        Value::String(p) => {
            let path = base.join(p);
            read_matrix_csv(&path).map_err(|e| Error::Parse {
                field: field.into(),
                message: format!("{}: {e}", path.display()),
            })
        }
        Value::Array(rows) => {
            let mut data = Vec::with_capacity(rows.len());
            for (i, row) in rows.iter().enumerate() {
                let row = row.as_array().ok_or_else(|| Error::Parse {
                    field: field.into(),
                    message: format!("row {i} is not an array"),
                })?;
                let vals = row
                    .iter()
                    .map(|x| scalar_from_json(field, x))
                    .collect::<Result<Vec<f64>>>()?;
                data.push(vals);
            }
            rows_to_matrix(field, data)
        }
        other => Err(Error::Parse {
            field: field.into(),
            message: format!("expected nested arrays or a CSV path, found {other}"),
        }),
    }
}

fn rows_to_matrix(field: &str, rows: Vec<Vec<f64>>) -> Result<Mat<f64>> {
    let cols = rows.first().map_or(0, Vec::len);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != cols) {
        return Err(Error::Parse {
            field: field.into(),
            message: format!("row {i} has {} entries, expected {cols}", r.len()),
        });
    }
    Ok(Mat::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

/// Writes `m` as header-free CSV, one row per line; infinities as `inf`.
pub fn write_matrix_csv(m: faer::MatRef<'_, f64>, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path.as_ref()).map_err(|e| Error::Parse {
        field: path.as_ref().display().to_string(),
        message: e.to_string(),
    })?;
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|j| {
                let v = m[(i, j)];
                if v.is_infinite() {
                    if v > 0.0 { "inf".into() } else { "-inf".into() }
                } else {
                    format!("{v:?}")
                }
            })
            .collect();
        w.write_record(&row).map_err(|e| Error::Invalid(format!("CSV write: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a header-free, comma-separated matrix.
pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Mat<f64>> {
    let path = path.as_ref();
    let field = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| Error::Parse {
            field: field.clone(),
            message: e.to_string(),
        })?;
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            field: field.clone(),
            message: e.to_string(),
        })?;
        if rec.iter().all(|s| s.is_empty()) {
            continue;
        }
        let vals = rec
            .iter()
            .map(|s| {
                parse_scalar_text(s).ok_or_else(|| Error::Parse {
                    field: field.clone(),
                    message: format!("row {i}: not a number: {s:?}"),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(vals);
    }
    rows_to_matrix(&field, rows)
}
