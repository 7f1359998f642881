//! Replayable trajectories and their JSON Lines encoding.
//!
//! The first line is a header object; every further line is one step. Field
//! names are documented in `docs/trace-format.md`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::averaging::{validate_averaging_step, AveragingParams, StepReport};
use crate::configuration::Configuration;
use crate::digraph::DiGraph;
use crate::error::{Error, Result};
use crate::graph::StepGraph;
use crate::matrix::Matrix;
use crate::twist::{validate_twist_step, TwistReport, TwistStep};

pub const FORMAT_NAME: &str = "senergy-trace";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    /// Undirected graphs; positions by agent id.
    Averaging,
    /// Directed graphs, optionally with the stochastic matrix; positions by agent id.
    Asymmetric,
    /// Twist windows; positions by rank.
    Twist,
}

/// Why a finite trace ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    /// Diameter fell below the cutoff.
    Converged,
    /// Step cap reached first.
    StepCap,
    /// The generator finished on its own (constructions, hand-written traces).
    Complete,
    /// The next step has no exactly valid representation in `f64`.
    Resolution,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepAction {
    Graph(StepGraph),
    Directed {
        graph: DiGraph,
        matrix: Option<Matrix>,
    },
    Window(TwistStep),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub action: StepAction,
    pub before: Configuration,
    pub after: Configuration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub params: AveragingParams,
    pub n: usize,
    pub kind: TraceKind,
    pub records: Vec<TraceRecord>,
    pub stop: StopReason,
}

/// First record that fails its step constraints.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordViolation {
    Averaging { t: u64, report: StepReport },
    Twist { t: u64, report: TwistReport },
    /// `after` of one record disagrees with `before` of the next.
    Chain { t: u64 },
}

impl Trace {
    pub fn new(params: AveragingParams, n: usize, kind: TraceKind) -> Self {
        Trace {
            params,
            n,
            kind,
            records: Vec::new(),
            stop: StopReason::Complete,
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, action: StepAction, before: Configuration, after: Configuration) {
        let t = self.records.len() as u64;
        self.records.push(TraceRecord {
            t,
            action,
            before,
            after,
        });
    }

    pub fn last_configuration(&self) -> Option<&Configuration> {
        self.records.last().map(|r| &r.after)
    }

    /// Structural problems are errors; the first constraint violation is returned.
    pub fn first_violation(&self) -> Result<Option<RecordViolation>> {
        for (k, rec) in self.records.iter().enumerate() {
            for c in [&rec.before, &rec.after] {
                if c.n() != self.n {
                    return Err(Error::Dimension {
                        expected: self.n,
                        found: c.n(),
                    });
                }
            }
            if k > 0 && !self.records[k - 1].after.same_placement(&rec.before) {
                return Ok(Some(RecordViolation::Chain { t: rec.t }));
            }
            match &rec.action {
                StepAction::Graph(g) => {
                    let report = validate_averaging_step(&rec.before, g, &rec.after, &self.params)?;
                    if !report.is_ok() {
                        return Ok(Some(RecordViolation::Averaging { t: rec.t, report }));
                    }
                }
                StepAction::Directed { graph, .. } => {
                    let report =
                        validate_averaging_step(&rec.before, graph, &rec.after, &self.params)?;
                    if !report.is_ok() {
                        return Ok(Some(RecordViolation::Averaging { t: rec.t, report }));
                    }
                }
                StepAction::Window(step) => {
                    let report = validate_twist_step(
                        rec.before.positions(),
                        step,
                        rec.after.positions(),
                        self.params.tolerance,
                    )?;
                    if !report.is_ok() {
                        return Ok(Some(RecordViolation::Twist { t: rec.t, report }));
                    }
                }
            }
        }
        Ok(None)
    }

    pub fn validate(&self) -> Result<()> {
        match self.first_violation()? {
            None => Ok(()),
            Some(v) => Err(Error::Trace(format!("{v:?}"))),
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            format: FORMAT_NAME.into(),
            version: FORMAT_VERSION,
            n: self.n,
            rho: self.params.rho,
            tolerance: self.params.tolerance,
            asymmetric: self.kind == TraceKind::Asymmetric,
            twist: self.kind == TraceKind::Twist,
            stop: self.stop,
        };
        serde_json::to_writer(&mut w, &header)?;
        w.write_all(b"\n")?;
        for rec in &self.records {
            serde_json::to_writer(&mut w, &Line::from_record(rec, self.kind))?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf)?;
        Ok(buf)
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Trace> {
        let mut lines = r.lines();
        let first = lines
            .next()
            .ok_or_else(|| Error::Trace("empty trace file".into()))??;
        let header: Header = serde_json::from_str(&first)?;
        if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
            return Err(Error::Trace(format!(
                "unsupported format {} v{}",
                header.format, header.version
            )));
        }
        let kind = match (header.asymmetric, header.twist) {
            (false, false) => TraceKind::Averaging,
            (true, false) => TraceKind::Asymmetric,
            (false, true) => TraceKind::Twist,
            (true, true) => return Err(Error::Trace("trace cannot be both asymmetric and twist".into())),
        };
        let params = AveragingParams::new(header.rho, header.tolerance)?;
        let mut trace = Trace::new(params, header.n, kind);
        trace.stop = header.stop;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)?;
            trace.records.push(parsed.into_record(&trace)?);
        }
        Ok(trace)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    n: usize,
    rho: f64,
    tolerance: f64,
    asymmetric: bool,
    twist: bool,
    stop: StopReason,
}

#[derive(Debug, Serialize, Deserialize)]
struct Line {
    t: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    arcs: Option<Vec<[usize; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<[usize; 2]>,
    before: Vec<f64>,
    after: Vec<f64>,
}

impl Line {
    fn from_record(rec: &TraceRecord, kind: TraceKind) -> Line {
        let (before, after) = match kind {
            TraceKind::Twist => (rec.before.positions().to_vec(), rec.after.positions().to_vec()),
            _ => (rec.before.by_id(), rec.after.by_id()),
        };
        let mut line = Line {
            t: rec.t,
            edges: None,
            arcs: None,
            matrix: None,
            window: None,
            before,
            after,
        };
        match &rec.action {
            StepAction::Graph(g) => line.edges = Some(g.edges().map(|(i, j)| [i, j]).collect()),
            StepAction::Directed { graph, matrix } => {
                line.arcs = Some(graph.arcs().map(|(i, j)| [i, j]).collect());
                line.matrix = matrix.as_ref().map(|m| m.as_row_major().to_vec());
            }
            StepAction::Window(step) => line.window = Some([step.u, step.v]),
        }
        line
    }

    fn into_record(self, trace: &Trace) -> Result<TraceRecord> {
        let n = trace.n;
        let positions = |v: &[f64]| -> Result<Configuration> {
            if v.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: v.len(),
                });
            }
            match trace.kind {
                TraceKind::Twist => Configuration::from_sorted(v.to_vec()),
                _ => Configuration::from_positions(v),
            }
        };
        let action = match (trace.kind, self.edges, self.arcs, self.window) {
            (TraceKind::Averaging, Some(edges), None, None) => {
                StepAction::Graph(StepGraph::new(n, edges.into_iter().map(|[i, j]| (i, j)))?)
            }
            (TraceKind::Asymmetric, None, Some(arcs), None) => StepAction::Directed {
                graph: DiGraph::new(n, arcs.into_iter().map(|[i, j]| (i, j)))?,
                matrix: self.matrix.map(|m| Matrix::from_row_major(n, m)).transpose()?,
            },
            (TraceKind::Twist, None, None, Some([u, v])) => {
                StepAction::Window(TwistStep::new(u, v, trace.params.rho)?)
            }
            _ => {
                return Err(Error::Trace(format!(
                    "record t={} does not match the {:?} header",
                    self.t, trace.kind
                )))
            }
        };
        Ok(TraceRecord {
            t: self.t,
            action,
            before: positions(&self.before)?.with_time(self.t),
            after: positions(&self.after)?.with_time(self.t + 1),
        })
    }
}
