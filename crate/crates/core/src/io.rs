//! Curve files (JSON) and sweep tables (CSV).

use crate::curves::{DerivativeScheme, SampledCurve, Samples};
use crate::hermitian::{PseudoVector, C64};
use crate::sphere::HeisenbergPoint;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{Map, Value};
use std::io::{self, Write};
use std::path::Path;
use thiserror::Error;

pub const CURVE_FORMAT: &str = "cr3-curve/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot access {path}: {source}")]
    File { path: String, source: io::Error },
    #[error("malformed curve file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported curve format '{0}'")]
    Format(String),
    #[error("invalid curve file: {0}")]
    Invalid(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Model {
    Heisenberg,
    Lift,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleRecord {
    Point { s: f64, x: f64, y: f64, z: f64 },
    Lift { s: f64, z1: [f64; 2], z2: [f64; 2], z3: [f64; 2] },
}

impl SampleRecord {
    pub fn param(&self) -> f64 {
        match self {
            SampleRecord::Point { s, .. } | SampleRecord::Lift { s, .. } => *s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub format: String,
    pub model: Model,
    pub periodic: bool,
    pub period: f64,
    pub samples: Vec<SampleRecord>,
    #[serde(default)]
    pub meta: Map<String, Value>,
}

/// Pretty JSON with every float written with 17 significant digits.
struct CanonicalFloats<'a>(PrettyFormatter<'a>);

impl Formatter for CanonicalFloats<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            writer.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value as canonical pretty JSON followed by a newline.
pub fn to_canonical_json<T: Serialize>(value: &T) -> Result<String, IoError> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, CanonicalFloats(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let text = to_canonical_json(value)?;
    std::fs::write(path, text).map_err(|source| IoError::File { path: path.display().to_string(), source })
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

impl CurveFile {
    pub fn from_curve(curve: &SampledCurve, model: Model, meta: Map<String, Value>) -> Result<Self, IoError> {
        let samples = match model {
            Model::Heisenberg => {
                let pts = curve.heisenberg_points().map_err(|e| IoError::Invalid(e.to_string()))?;
                curve
                    .params
                    .iter()
                    .zip(pts)
                    .map(|(&s, p)| SampleRecord::Point { s, x: p.x, y: p.y, z: p.z })
                    .collect()
            }
            Model::Lift => curve
                .params
                .iter()
                .zip(curve.lift())
                .map(|(&s, g)| SampleRecord::Lift { s, z1: pair(g[0]), z2: pair(g[1]), z3: pair(g[2]) })
                .collect(),
        };
        let mut meta = meta;
        if model == Model::Lift && curve.periodic && curve.monodromy != C64::new(1.0, 0.0) {
            meta.insert("monodromy".into(), serde_json::json!(pair(curve.monodromy)));
        }
        let period = if curve.periodic {
            curve.period.unwrap_or(0.0)
        } else {
            curve.params.last().copied().unwrap_or(0.0) - curve.params.first().copied().unwrap_or(0.0)
        };
        Ok(CurveFile {
            format: CURVE_FORMAT.into(),
            model,
            periodic: curve.periodic,
            period,
            samples,
            meta,
        })
    }

    pub fn validate(&self) -> Result<(), IoError> {
        if self.format != CURVE_FORMAT {
            return Err(IoError::Format(self.format.clone()));
        }
        if self.samples.windows(2).any(|w| w[1].param() <= w[0].param()) {
            return Err(IoError::Invalid("samples not sorted by s".into()));
        }
        if self.periodic {
            let first = self.samples.first().map(|s| s.param()).unwrap_or(0.0);
            let last = self.samples.last().map(|s| s.param()).unwrap_or(0.0);
            if !(self.period > 0.0) || last - first >= self.period {
                return Err(IoError::Invalid("periodic samples must span [0, period)".into()));
            }
        }
        let mixed = self.samples.iter().any(|s| {
            matches!(
                (self.model, s),
                (Model::Heisenberg, SampleRecord::Lift { .. }) | (Model::Lift, SampleRecord::Point { .. })
            )
        });
        if mixed {
            return Err(IoError::Invalid("sample records do not match the model".into()));
        }
        Ok(())
    }

    pub fn to_curve(&self) -> Result<SampledCurve, IoError> {
        self.validate()?;
        let params: Vec<f64> = self.samples.iter().map(|s| s.param()).collect();
        let samples = match self.model {
            Model::Heisenberg => Samples::Heisenberg(
                self.samples
                    .iter()
                    .map(|s| match s {
                        SampleRecord::Point { x, y, z, .. } => HeisenbergPoint::new(*x, *y, *z),
                        SampleRecord::Lift { .. } => unreachable!("validated"),
                    })
                    .collect(),
            ),
            Model::Lift => Samples::Lift(
                self.samples
                    .iter()
                    .map(|s| match s {
                        SampleRecord::Lift { z1, z2, z3, .. } => PseudoVector::new(
                            C64::new(z1[0], z1[1]),
                            C64::new(z2[0], z2[1]),
                            C64::new(z3[0], z3[1]),
                        ),
                        SampleRecord::Point { .. } => unreachable!("validated"),
                    })
                    .collect(),
            ),
        };
        let monodromy = self
            .meta
            .get("monodromy")
            .and_then(|v| serde_json::from_value::<[f64; 2]>(v.clone()).ok())
            .map(|[re, im]| C64::new(re, im))
            .unwrap_or(C64::new(1.0, 0.0));
        Ok(SampledCurve {
            params,
            samples,
            periodic: self.periodic,
            period: self.periodic.then_some(self.period),
            monodromy,
            scheme: DerivativeScheme::CentralFd4,
        })
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| IoError::File { path: path.display().to_string(), source })?;
        let file: CurveFile = serde_json::from_str(&text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        write_json(path, self)
    }
}

/// One row of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub kind: String,
    pub r: String,
    pub rho: f64,
    pub kappa: f64,
    pub tau: f64,
    pub p: i64,
    pub q: i64,
    pub spin: String,
    pub maslov: i64,
    pub omega: f64,
    pub strain: f64,
    pub beta_raw: Option<f64>,
    pub beta: Option<i64>,
    pub sl_raw: Option<f64>,
    pub sl: Option<i64>,
}

pub fn write_scan<W: Write>(out: W, rows: &[ScanRow]) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|source| IoError::File { path: "csv output".into(), source })?;
    Ok(())
}

pub fn read_scan<R: io::Read>(input: R) -> Result<Vec<ScanRow>, IoError> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<Result<Vec<ScanRow>, _>>()?)
}
