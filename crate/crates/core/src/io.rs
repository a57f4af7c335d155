//! File formats: edge lists with a JSON sidecar, coordinate and subset lists, operators as CSV
//! plus a JSON header, signal matrices, and summary tables.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, ShiftKind};
use crate::operators::{Family, SubgraphOperator};

/// Sidecar describing an edge list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMeta {
    #[serde(default)]
    pub directed: bool,
    #[serde(default)]
    pub shift_kind: ShiftKind,
    /// Vertex count; inferred from the largest id when absent.
    #[serde(default)]
    pub n: Option<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct EdgeRow {
    src: usize,
    dst: usize,
    #[serde(default = "unit")]
    weight: f64,
}

fn unit() -> f64 {
    1.0
}

/// `graph.csv` → `graph.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Reads `src,dst,weight` rows; the sidecar (same stem, `.json`) is optional.
pub fn read_edge_list(path: &Path) -> Result<Graph> {
    let side = sidecar_path(path);
    let meta: GraphMeta = if side.exists() {
        read_json(&side)?
    } else {
        GraphMeta { directed: false, shift_kind: ShiftKind::Laplacian, n: None }
    };
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let mut edges = Vec::new();
    for row in rdr.deserialize() {
        let r: EdgeRow = row?;
        edges.push(Edge::new(r.src, r.dst, r.weight));
    }
    let inferred = edges.iter().map(|e| e.src.max(e.dst) + 1).max().unwrap_or(0);
    let n = meta.n.unwrap_or(inferred);
    if n < inferred {
        return Err(Error::Parse(format!("edge endpoint {} exceeds n = {n}", inferred - 1)));
    }
    Graph::new(n, meta.directed, edges, meta.shift_kind)
}

pub fn write_edge_list(g: &Graph, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for e in g.edges() {
        w.serialize(EdgeRow { src: e.src, dst: e.dst, weight: e.weight })?;
    }
    w.flush()?;
    write_json(
        &sidecar_path(path),
        &GraphMeta { directed: g.is_directed(), shift_kind: g.shift_kind(), n: Some(g.n()) },
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct CoordRow {
    id: usize,
    x: f64,
    y: f64,
}

/// `id,x,y` rows; ids must cover 0..n exactly once.
pub fn read_coordinates(path: &Path) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let rows: Vec<CoordRow> = rdr.deserialize().collect::<std::result::Result<_, _>>()?;
    let mut out = vec![None; rows.len()];
    for r in rows {
        match out.get_mut(r.id) {
            Some(slot @ None) => *slot = Some([r.x, r.y]),
            _ => return Err(Error::Parse(format!("coordinate id {} duplicated or out of range", r.id))),
        }
    }
    Ok(out.into_iter().map(|c| c.expect("every slot filled")).collect())
}

pub fn write_coordinates(coords: &[[f64; 2]], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (id, c) in coords.iter().enumerate() {
        w.serialize(CoordRow { id, x: c[0], y: c[1] })?;
    }
    w.flush()?;
    Ok(())
}

/// One vertex id per line (commas also accepted); blank lines and `#` comments skipped.
pub fn read_subset(path: &Path) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for line in BufReader::new(open(path)?).lines() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("").trim();
        for tok in body.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            if tok == "id" {
                continue;
            }
            ids.push(tok.parse().map_err(|_| Error::Parse(format!("bad vertex id {tok:?}")))?);
        }
    }
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

pub fn write_subset(ids: &[usize], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "id")?;
    for id in ids {
        writeln!(w, "{id}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(open(path)?))?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct OperatorHeader {
    family: Family,
    v0_ids: Vec<usize>,
}

/// Dense matrix rows, no header.
pub fn write_matrix(m: &DMatrix<f64>, path: &Path) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    for i in 0..m.nrows() {
        w.write_record(m.row(i).iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.into_iter().flatten()))
}

/// Matrix to `path`, family and V0 ids to the sidecar.
pub fn write_operator(op: &SubgraphOperator, path: &Path) -> Result<()> {
    write_matrix(&op.matrix, path)?;
    write_json(&sidecar_path(path), &OperatorHeader { family: op.family, v0_ids: op.v0.clone() })
}

pub fn read_operator(path: &Path) -> Result<SubgraphOperator> {
    let header: OperatorHeader = read_json(&sidecar_path(path))?;
    let m = read_matrix(path)?;
    if m.nrows() != header.v0_ids.len() || m.ncols() != m.nrows() {
        return Err(Error::DimensionMismatch { expected: header.v0_ids.len(), got: m.nrows() });
    }
    let op = SubgraphOperator::from_matrix(header.family, &header.v0_ids, m);
    op.validate()?;
    Ok(op)
}

/// Signals as columns: first column the vertex id, one labelled column per signal.
#[derive(Clone, Debug, PartialEq)]
pub struct SignalTable {
    pub vertices: Vec<usize>,
    pub labels: Vec<String>,
    pub signals: Vec<DVector<f64>>,
}

pub fn write_signals(table: &SignalTable, path: &Path) -> Result<()> {
    if table.labels.len() != table.signals.len() {
        return Err(Error::DimensionMismatch { expected: table.signals.len(), got: table.labels.len() });
    }
    if let Some(s) = table.signals.iter().find(|s| s.len() != table.vertices.len()) {
        return Err(Error::DimensionMismatch { expected: table.vertices.len(), got: s.len() });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(std::iter::once("vertex").chain(table.labels.iter().map(String::as_str)))?;
    for (i, v) in table.vertices.iter().enumerate() {
        w.write_record(
            std::iter::once(v.to_string()).chain(table.signals.iter().map(|s| s[i].to_string())),
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_signals(path: &Path) -> Result<SignalTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(open(path)?);
    let labels: Vec<String> = rdr.headers()?.iter().skip(1).map(str::to_string).collect();
    let mut vertices = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |t: &str| t.parse::<f64>().map_err(|_| Error::Parse(format!("bad number {t:?}")));
        let v = rec.get(0).unwrap_or("");
        vertices.push(v.parse().map_err(|_| Error::Parse(format!("bad vertex id {v:?}")))?);
        if rec.len() != labels.len() + 1 {
            return Err(Error::Parse("ragged signal rows".into()));
        }
        for (c, t) in cols.iter_mut().zip(rec.iter().skip(1)) {
            c.push(parse(t)?);
        }
    }
    Ok(SignalTable { vertices, labels, signals: cols.into_iter().map(DVector::from_vec).collect() })
}

/// `operator,param,mean,stderr,trials`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub operator: String,
    pub param: f64,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

impl SummaryRow {
    /// Mean and standard error of `values`.
    pub fn from_values(operator: &str, param: f64, values: &[f64]) -> Self {
        let (mean, stderr) = mean_stderr(values);
        Self { operator: operator.into(), param, mean, stderr, trials: values.len() }
    }
}

pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Serializes any row type as a headed CSV.
pub fn write_rows<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(open(path)?);
    Ok(rdr.deserialize().collect::<std::result::Result<_, _>>()?)
}
