//! File formats: scaling CSV, params and arch-spec JSON, task JSON lines.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use hybridlab_core::archcount::ArchSpec;
use hybridlab_core::scalefit::{ScalingLawParams, ScalingPoint};
use hybridlab_core::tasks::{TaskInstance, TaskKind};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const SCALING_HEADER: [&str; 3] = ["N", "D", "loss"];

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

pub fn read_arch_spec(path: &Path) -> Result<ArchSpec> {
    let spec: ArchSpec = read_json(path)?;
    spec.layers().with_context(|| format!("invalid architecture in {}", path.display()))?;
    Ok(spec)
}

pub fn read_params(path: &Path) -> Result<ScalingLawParams> {
    let p: ScalingLawParams = read_json(path)?;
    p.validate().with_context(|| format!("invalid parameters in {}", path.display()))?;
    Ok(p)
}

/// Reads `N,D,loss` rows. The header must match exactly.
pub fn read_scaling_csv<R: Read>(reader: R) -> Result<Vec<ScalingPoint>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != SCALING_HEADER {
        bail!("expected header `N,D,loss`, found `{}`", header.iter().collect::<Vec<_>>().join(","));
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<(f64, f64, f64)>().enumerate() {
        let line = i + 2;
        let (n, d, loss) = row.with_context(|| format!("line {line}"))?;
        out.push(ScalingPoint::new(n, d, loss).with_context(|| format!("line {line}: values must be positive"))?);
    }
    Ok(out)
}

pub fn write_scaling_csv<W: Write>(writer: W, points: &[ScalingPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SCALING_HEADER)?;
    for p in points {
        w.serialize((p.n, p.d, p.loss))?;
    }
    w.flush()?;
    Ok(())
}

/// One line of `gen-tasks` output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub kind: TaskKind,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub text: String,
    pub answer: usize,
}

impl TaskRecord {
    pub fn new(inst: &TaskInstance, text: String) -> Self {
        TaskRecord { kind: inst.kind, n: inst.n, m: inst.m, seed: inst.seed, text, answer: inst.answer }
    }
}

pub fn read_task_jsonl<R: Read>(reader: R) -> Result<Vec<TaskRecord>> {
    serde_json::Deserializer::from_reader(reader)
        .into_iter::<TaskRecord>()
        .enumerate()
        .map(|(i, r)| r.with_context(|| format!("record {}", i + 1)))
        .collect()
}

/// Serializes flat rows with a header line.
pub fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<W: Write, T: Serialize>(mut writer: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writeln!(writer)?;
    Ok(())
}
