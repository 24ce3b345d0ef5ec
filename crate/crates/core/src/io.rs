//! JSON-lines serialization of labeled graphs.
//!
//! One record per line:
//! `{"id","label","n","edges","attrs","content_mask","seed"}`, edges stored
//! smaller endpoint first, lines sorted by id. Parse failures name the field.

use std::collections::BTreeSet;

use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{Attr, AttributedGraph, GraphError, LabeledGraph, NodeId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("record is not valid JSON: {0}")]
    Json(String),
    #[error("record is not a JSON object")]
    NotObject,
    #[error("missing field \"{0}\"")]
    Missing(String),
    #[error("invalid field \"{field}\": {reason}")]
    Invalid { field: String, reason: String },
    #[error("line {line}: {source}")]
    Line { line: usize, source: Box<ParseError> },
}

impl ParseError {
    /// Name of the offending field, looking through line wrappers.
    pub fn field(&self) -> Option<&str> {
        match self {
            ParseError::Missing(f) => Some(f),
            ParseError::Invalid { field, .. } => Some(field),
            ParseError::Line { source, .. } => source.field(),
            _ => None,
        }
    }

    pub fn invalid(field: &str, reason: impl Into<String>) -> Self {
        ParseError::Invalid { field: field.to_string(), reason: reason.into() }
    }
}

#[derive(Serialize)]
struct GraphRecord<'a> {
    id: &'a str,
    label: usize,
    n: usize,
    edges: Vec<[NodeId; 2]>,
    attrs: &'a [Vec<Attr>],
    content_mask: Vec<NodeId>,
    seed: u64,
}

/// Serializes a graph with its label, mask and seed as a JSON object.
pub fn to_value(g: &LabeledGraph) -> Value {
    let rec = GraphRecord {
        id: g.graph.id(),
        label: g.label,
        n: g.graph.node_count(),
        edges: g.graph.edges().map(|(u, v)| [u, v]).collect(),
        attrs: g.graph.attrs(),
        content_mask: g.content_mask.iter().copied().collect(),
        seed: g.seed,
    };
    serde_json::to_value(rec).expect("graph record serializes")
}

pub fn serialize(g: &LabeledGraph) -> String {
    to_value(g).to_string()
}

pub fn deserialize(line: &str) -> Result<LabeledGraph, ParseError> {
    let value: Value = serde_json::from_str(line).map_err(|e| ParseError::Json(e.to_string()))?;
    from_value(&value)
}

pub fn object(value: &Value) -> Result<&Map<String, Value>, ParseError> {
    value.as_object().ok_or(ParseError::NotObject)
}

pub fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value, ParseError> {
    obj.get(name).ok_or_else(|| ParseError::Missing(name.to_string()))
}

pub fn uint_field(obj: &Map<String, Value>, name: &str) -> Result<u64, ParseError> {
    field(obj, name)?.as_u64().ok_or_else(|| ParseError::invalid(name, "expected a non-negative integer"))
}

pub fn str_field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a str, ParseError> {
    field(obj, name)?.as_str().ok_or_else(|| ParseError::invalid(name, "expected a string"))
}

pub fn f64_field(obj: &Map<String, Value>, name: &str) -> Result<f64, ParseError> {
    field(obj, name)?.as_f64().ok_or_else(|| ParseError::invalid(name, "expected a number"))
}

fn uint_list(value: &Value, name: &str) -> Result<Vec<usize>, ParseError> {
    value
        .as_array()
        .ok_or_else(|| ParseError::invalid(name, "expected an array"))?
        .iter()
        .map(|x| x.as_u64().map(|x| x as usize).ok_or_else(|| ParseError::invalid(name, "expected non-negative integers")))
        .collect()
}

fn graph_error_field(e: &GraphError) -> &'static str {
    match e {
        GraphError::ArityMismatch { .. } => "attrs",
        GraphError::MaskOutOfRange(_) => "content_mask",
        _ => "edges",
    }
}

pub fn from_value(value: &Value) -> Result<LabeledGraph, ParseError> {
    let obj = object(value)?;
    let id = str_field(obj, "id")?.to_string();
    let label = uint_field(obj, "label")? as usize;
    let n = uint_field(obj, "n")? as usize;
    let edges = field(obj, "edges")?
        .as_array()
        .ok_or_else(|| ParseError::invalid("edges", "expected an array of pairs"))?
        .iter()
        .map(|pair| {
            let p = uint_list(pair, "edges")?;
            match p.as_slice() {
                [u, v] => Ok((*u, *v)),
                _ => Err(ParseError::invalid("edges", "each edge must have exactly two endpoints")),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    let attrs = field(obj, "attrs")?
        .as_array()
        .ok_or_else(|| ParseError::invalid("attrs", "expected an array of attribute vectors"))?
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| ParseError::invalid("attrs", "expected an array of integers"))?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| ParseError::invalid("attrs", "expected integers")))
                .collect::<Result<Vec<Attr>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    if attrs.len() != n {
        return Err(ParseError::invalid("attrs", format!("{} rows for n = {n}", attrs.len())));
    }
    let mask: BTreeSet<NodeId> = uint_list(field(obj, "content_mask")?, "content_mask")?.into_iter().collect();
    let seed = uint_field(obj, "seed")?;
    let graph = AttributedGraph::new(id, attrs, edges)
        .map_err(|e| ParseError::invalid(graph_error_field(&e), e.to_string()))?;
    LabeledGraph::new(graph, label, mask, seed).map_err(|e| ParseError::invalid(graph_error_field(&e), e.to_string()))
}

/// Dataset as JSONL text, sorted by id, newline terminated.
pub fn write_jsonl(samples: &[LabeledGraph]) -> String {
    let mut sorted: Vec<&LabeledGraph> = samples.iter().collect();
    sorted.sort_by(|a, b| a.id().cmp(b.id()));
    let mut out = String::new();
    for g in sorted {
        out.push_str(&serialize(g));
        out.push('\n');
    }
    out
}

/// Parses JSONL text; blank lines are skipped.
pub fn read_jsonl(text: &str) -> Result<Vec<LabeledGraph>, ParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| deserialize(l).map_err(|e| ParseError::Line { line: i + 1, source: Box::new(e) }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::shapes;

    fn sample() -> LabeledGraph {
        let g = shapes::house(&[0, 3]).with_id("s-001");
        LabeledGraph::new(g, 2, BTreeSet::from([0, 1, 4]), u64::MAX).unwrap()
    }

    #[test]
    fn round_trip() {
        let g = sample();
        let back = deserialize(&serialize(&g)).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn empty_graph_round_trips() {
        let g = LabeledGraph::new(AttributedGraph::empty("e"), 0, BTreeSet::new(), 0).unwrap();
        let text = serialize(&g);
        assert_eq!(text, r#"{"id":"e","label":0,"n":0,"edges":[],"attrs":[],"content_mask":[],"seed":0}"#);
        assert_eq!(deserialize(&text).unwrap(), g);
    }

    #[test]
    fn missing_edges_names_field() {
        let err = deserialize(r#"{"id":"x","label":0,"n":0,"attrs":[],"content_mask":[],"seed":0}"#).unwrap_err();
        assert_eq!(err, ParseError::Missing("edges".into()));
        assert_eq!(err.field(), Some("edges"));
    }

    #[test]
    fn bad_endpoint_names_edges() {
        let err = deserialize(r#"{"id":"x","label":0,"n":1,"edges":[[0,1]],"attrs":[[0]],"content_mask":[],"seed":0}"#)
            .unwrap_err();
        assert_eq!(err.field(), Some("edges"));
    }

    #[test]
    fn jsonl_sorted_by_id() {
        let a = sample();
        let mut b = sample();
        b.graph = b.graph.clone().with_id("s-000");
        let text = write_jsonl(&[a.clone(), b.clone()]);
        let back = read_jsonl(&text).unwrap();
        assert_eq!(back, vec![b, a]);
    }

    #[test]
    fn line_errors_carry_line_number() {
        let text = format!("{}\nnot json\n", serialize(&sample()));
        match read_jsonl(&text).unwrap_err() {
            ParseError::Line { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
