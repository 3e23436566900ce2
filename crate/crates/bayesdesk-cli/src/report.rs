use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A real number that survives JSON even when infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            s.serialize_f64(self.0)
        } else {
            s.serialize_str(&self.to_string())
        }
    }
}

impl<'de> Deserialize<'de> for Num {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            F(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::F(x) => Ok(Num(x)),
            Raw::S(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_nan() {
            f.write_str("nan")
        } else if self.0.is_infinite() {
            f.write_str(if self.0 > 0.0 { "inf" } else { "-inf" })
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Num {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inf" => Ok(Num(f64::INFINITY)),
            "-inf" => Ok(Num(f64::NEG_INFINITY)),
            "nan" => Ok(Num(f64::NAN)),
            _ => s.parse().map(Num).map_err(|e| format!("bad number {s:?}: {e}")),
        }
    }
}

/// Per-iteration values, written long-form as `iteration,dim,value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceData {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl TraceData {
    pub fn write_long<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["iteration", "dim", "value"])?;
        for (i, row) in self.rows.iter().enumerate() {
            for (d, v) in row.iter().enumerate() {
                out.write_record([i.to_string(), self.names[d].clone(), Num(*v).to_string()])?;
            }
        }
        out.flush()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub parameters: BTreeMap<String, String>,
    pub seed: u64,
    pub estimates: BTreeMap<String, Num>,
    pub diagnostics: BTreeMap<String, Num>,
    /// Present only when timing was requested, so default output stays reproducible.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<TraceData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            parameters: BTreeMap::new(),
            seed,
            estimates: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            wall_time_ms: None,
            trace: None,
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    pub fn estimate(&mut self, key: &str, value: f64) -> &mut Self {
        self.estimates.insert(key.to_string(), Num(value));
        self
    }

    pub fn diagnostic(&mut self, key: &str, value: f64) -> &mut Self {
        self.diagnostics.insert(key.to_string(), Num(value));
        self
    }

    /// `key,value` rows; the trace is not included (see [`TraceData::write_long`]).
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["key", "value"])?;
        out.write_record(["experiment", &self.experiment])?;
        out.write_record(["seed", &self.seed.to_string()])?;
        for (k, v) in &self.parameters {
            out.write_record([format!("parameter.{k}"), v.clone()])?;
        }
        for (k, v) in &self.estimates {
            out.write_record([format!("estimate.{k}"), v.to_string()])?;
        }
        for (k, v) in &self.diagnostics {
            out.write_record([format!("diagnostic.{k}"), v.to_string()])?;
        }
        if let Some(ms) = self.wall_time_ms {
            out.write_record(["wall_time_ms", &ms.to_string()])?;
        }
        out.flush()
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Self, String> {
        let mut rep = ExperimentReport::new("", 0);
        let mut rdr = csv::Reader::from_reader(r);
        for rec in rdr.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let (k, v) = (&rec[0], &rec[1]);
            if let Some(k) = k.strip_prefix("parameter.") {
                rep.parameters.insert(k.into(), v.into());
            } else if let Some(k) = k.strip_prefix("estimate.") {
                rep.estimates.insert(k.into(), v.parse()?);
            } else if let Some(k) = k.strip_prefix("diagnostic.") {
                rep.diagnostics.insert(k.into(), v.parse()?);
            } else {
                match k {
                    "experiment" => rep.experiment = v.into(),
                    "seed" => rep.seed = v.parse().map_err(|e| format!("bad seed: {e}"))?,
                    "wall_time_ms" => rep.wall_time_ms = Some(v.parse().map_err(|e| format!("bad time: {e}"))?),
                    _ => return Err(format!("unknown key {k:?}")),
                }
            }
        }
        Ok(rep)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> io::Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")
    }

    pub fn emit<W: Write>(&self, format: Format, w: W) -> io::Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Json => self.write_json(w),
        }
    }
}
