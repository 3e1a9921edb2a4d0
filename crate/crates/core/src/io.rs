//! File formats.
//!
//! * Predictions: JSONL, one `{"gold": [...], "pred": [...]}` object per
//!   line, with an optional leading `{"labels": [...]}` header. Label ids may
//!   be strings or integers; integers are read as their decimal string.
//! * Continuous predictions: JSONL with lists of vectors in place of ids.
//! * Matrices: CSV with an empty top-left cell, label ids across the first
//!   row and down the first column.
//! * Embeddings: CSV rows `label,x1,...,xd` without a header.
//! * Hierarchy edges: CSV rows `a,b` or `a,b,weight` without a header.
//! * Scores: CSV with label ids as the header and one row per example.

use std::collections::HashMap;
use std::io::{BufRead, Read, Write};
use std::sync::Arc;

use serde_json::{json, Value};

use crate::continuous::{VectorExample, VectorLabelSet};
use crate::error::{Error, Result};
use crate::labels::{EvaluationBatch, LabelSet, LabelUniverse};
use crate::similarity::{EmbeddingTable, HierarchyGraph, SimilarityMatrix};

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

fn label_id(v: &Value, line: usize) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Number(n) if n.is_u64() || n.is_i64() => Ok(n.to_string()),
        other => Err(format_err(line, format!("label ids must be strings or integers, got {other}"))),
    }
}

fn label_list(obj: &serde_json::Map<String, Value>, key: &str, line: usize) -> Result<Vec<String>> {
    match obj.get(key) {
        Some(Value::Array(items)) => items.iter().map(|v| label_id(v, line)).collect(),
        Some(_) => Err(format_err(line, format!("`{key}` must be an array"))),
        None => Err(format_err(line, format!("missing `{key}`"))),
    }
}

/// One prediction row as raw label ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRow {
    pub line: usize,
    pub gold: Vec<String>,
    pub pred: Vec<String>,
}

/// A parsed prediction file before label resolution.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PredictionFile {
    /// Universe declared by the header line, if any.
    pub labels: Option<Vec<String>>,
    pub rows: Vec<RawRow>,
}

impl PredictionFile {
    /// Every id in first-appearance order: header labels first, then gold
    /// and predicted ids row by row.
    pub fn observed_labels(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        let header = self.labels.iter().flatten();
        let rows = self.rows.iter().flat_map(|r| r.gold.iter().chain(&r.pred));
        for l in header.chain(rows) {
            if seen.insert(l.as_str()) {
                out.push(l.clone());
            }
        }
        out
    }

    /// Resolves ids against `universe`, or against the declared header,
    /// or against the observed labels when neither is available. Unknown ids
    /// are reported with their line number as the row.
    pub fn to_batch(&self, universe: Option<Arc<LabelUniverse>>) -> Result<EvaluationBatch> {
        let universe = match (universe, &self.labels) {
            (Some(u), Some(header)) => {
                if let Some(extra) = header.iter().find(|l| u.index_of(l).is_none()) {
                    return Err(Error::invalid(format!(
                        "header label `{extra}` is not in the similarity matrix universe"
                    )));
                }
                u
            }
            (Some(u), None) => u,
            (None, Some(header)) => Arc::new(LabelUniverse::new(header.clone())?),
            (None, None) => Arc::new(LabelUniverse::new(self.observed_labels())?),
        };
        let mut gold = Vec::with_capacity(self.rows.len());
        let mut pred = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            gold.push(universe.label_set(row.gold.iter().map(String::as_str), row.line)?);
            pred.push(universe.label_set(row.pred.iter().map(String::as_str), row.line)?);
        }
        EvaluationBatch::new(universe, gold, pred)
    }
}

fn json_lines<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, serde_json::Map<String, Value>)>> {
    reader.lines().enumerate().filter_map(|(i, line)| {
        let n = i + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(e.into())),
        };
        if line.trim().is_empty() {
            return None;
        }
        Some(match serde_json::from_str::<Value>(&line) {
            Ok(Value::Object(obj)) => Ok((n, obj)),
            Ok(_) => Err(format_err(n, "expected a JSON object")),
            Err(e) => Err(format_err(n, format!("malformed JSON: {e}"))),
        })
    })
}

pub fn read_predictions<R: BufRead>(reader: R) -> Result<PredictionFile> {
    read_rows(reader, true)
}

/// Like [`read_predictions`] but `pred` may be omitted, as in the gold file
/// of a threshold sweep.
pub fn read_gold<R: BufRead>(reader: R) -> Result<PredictionFile> {
    read_rows(reader, false)
}

fn read_rows<R: BufRead>(reader: R, need_pred: bool) -> Result<PredictionFile> {
    let mut file = PredictionFile::default();
    for item in json_lines(reader) {
        let (line, obj) = item?;
        if obj.contains_key("labels") {
            if file.labels.is_some() || !file.rows.is_empty() {
                return Err(format_err(line, "the labels header must be the first line"));
            }
            file.labels = Some(label_list(&obj, "labels", line)?);
            continue;
        }
        file.rows.push(RawRow {
            line,
            gold: label_list(&obj, "gold", line)?,
            pred: if need_pred || obj.contains_key("pred") {
                label_list(&obj, "pred", line)?
            } else {
                Vec::new()
            },
        });
    }
    Ok(file)
}

fn ids(universe: &LabelUniverse, set: &LabelSet) -> Vec<String> {
    set.iter().map(|i| universe.labels()[i].clone()).collect()
}

/// Writes a header line followed by one row per example.
pub fn write_predictions<W: Write>(batch: &EvaluationBatch, mut out: W) -> Result<()> {
    let u = batch.universe();
    writeln!(out, "{}", json!({ "labels": u.labels() }))?;
    for (gold, pred) in batch.gold().iter().zip(batch.pred()) {
        writeln!(out, "{}", json!({ "gold": ids(u, gold), "pred": ids(u, pred) }))?;
    }
    Ok(())
}

fn vector_set(obj: &serde_json::Map<String, Value>, key: &str, line: usize) -> Result<VectorLabelSet> {
    let value = obj.get(key).ok_or_else(|| format_err(line, format!("missing `{key}`")))?;
    let points: Vec<Vec<f64>> =
        serde_json::from_value(value.clone()).map_err(|e| format_err(line, format!("`{key}`: {e}")))?;
    VectorLabelSet::new(points).map_err(|e| format_err(line, e.to_string()))
}

pub fn read_continuous<R: BufRead>(reader: R) -> Result<Vec<VectorExample>> {
    json_lines(reader)
        .map(|item| {
            let (line, obj) = item?;
            Ok((vector_set(&obj, "pred", line)?, vector_set(&obj, "gold", line)?))
        })
        .collect()
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader)
}

fn csv_rows<R: Read>(mut reader: R) -> Result<Vec<(usize, Vec<String>)>> {
    let mut text = Vec::new();
    reader.read_to_end(&mut text)?;
    // Record positions include any blank lines skipped before the record.
    let line_at = |byte: u64| {
        let mut at = byte as usize;
        while at < text.len() && matches!(text[at], b'\n' | b'\r') {
            at += 1;
        }
        1 + text[..at].iter().filter(|&&b| b == b'\n').count()
    };
    let mut out = Vec::new();
    for rec in csv_reader(&text[..]).records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| line_at(p.byte()));
            format_err(line, e.to_string())
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(0, |p| line_at(p.byte()));
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| format_err(line, format!("`{s}` is not a number")))
}

/// Reads a labelled square table as `(universe, row-major values)`.
pub fn read_labelled_square<R: Read>(reader: R) -> Result<(Arc<LabelUniverse>, Vec<f64>)> {
    let rows = csv_rows(reader)?;
    let ((_, header), body) = rows.split_first().ok_or_else(|| format_err(1, "empty matrix file"))?;
    let labels: Vec<String> = header.iter().skip(1).cloned().collect();
    let universe = Arc::new(LabelUniverse::new(labels.clone())?);
    let n = labels.len();
    if body.len() != n {
        return Err(Error::invalid(format!("matrix has {n} columns but {} rows", body.len())));
    }
    let mut values = Vec::with_capacity(n * n);
    for (i, (line, row)) in body.iter().enumerate() {
        if row.len() != n + 1 {
            return Err(format_err(*line, format!("expected {} fields, found {}", n + 1, row.len())));
        }
        if row[0] != labels[i] {
            return Err(format_err(
                *line,
                format!("row label `{}` does not match column label `{}`", row[0], labels[i]),
            ));
        }
        for cell in &row[1..] {
            values.push(parse_f64(cell, *line)?);
        }
    }
    Ok((universe, values))
}

pub fn read_matrix_csv<R: Read>(reader: R) -> Result<SimilarityMatrix> {
    let (universe, values) = read_labelled_square(reader)?;
    SimilarityMatrix::new(universe, values)
}

/// Writes every entry with 17 significant digits.
pub fn write_matrix_csv<W: Write>(s: &SimilarityMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let labels = s.universe().labels();
    let mut header = vec![String::new()];
    header.extend(labels.iter().cloned());
    w.write_record(&header).map_err(csv_io)?;
    for (a, label) in labels.iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend(s.row(a).iter().map(|v| format!("{v:.16e}")));
        w.write_record(&row).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(e.into())
}

pub fn read_embeddings_csv<R: Read>(reader: R) -> Result<EmbeddingTable> {
    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    for (line, row) in csv_rows(reader)? {
        if row.len() < 2 {
            return Err(format_err(line, "expected a label followed by coordinates"));
        }
        labels.push(row[0].clone());
        vectors.push(row[1..].iter().map(|v| parse_f64(v, line)).collect::<Result<Vec<_>>>()?);
    }
    EmbeddingTable::new(Arc::new(LabelUniverse::new(labels)?), vectors)
}

/// Builds a graph from an edge list. Without an explicit universe the labels
/// are taken in first-appearance order.
pub fn read_edge_list<R: Read>(reader: R, universe: Option<Arc<LabelUniverse>>) -> Result<HierarchyGraph> {
    let rows = csv_rows(reader)?;
    let universe = match universe {
        Some(u) => u,
        None => {
            let mut seen = HashMap::new();
            let mut labels = Vec::new();
            for (_, row) in &rows {
                for l in row.iter().take(2) {
                    if !seen.contains_key(l) {
                        seen.insert(l.clone(), labels.len());
                        labels.push(l.clone());
                    }
                }
            }
            Arc::new(LabelUniverse::new(labels)?)
        }
    };
    let mut graph = HierarchyGraph::new(universe.clone());
    for (line, row) in rows {
        if !(2..=3).contains(&row.len()) {
            return Err(format_err(line, "expected `a,b` or `a,b,weight`"));
        }
        let idx = |l: &str| {
            universe.index_of(l).ok_or_else(|| Error::UnknownLabel {
                label: l.to_string(),
                row: line,
            })
        };
        let weight = match row.get(2) {
            Some(w) => parse_f64(w, line)?,
            None => 1.0,
        };
        graph
            .add_edge(idx(&row[0])?, idx(&row[1])?, weight)
            .map_err(|e| format_err(line, e.to_string()))?;
    }
    Ok(graph)
}

/// Reads a score table and reorders its columns to match `universe`.
pub fn read_scores_csv<R: Read>(reader: R, universe: &LabelUniverse) -> Result<Vec<Vec<f64>>> {
    let rows = csv_rows(reader)?;
    let ((_, header), body) = rows.split_first().ok_or_else(|| format_err(1, "empty score file"))?;
    if header.len() != universe.len() {
        return Err(format_err(
            1,
            format!("score header has {} labels but the universe has {}", header.len(), universe.len()),
        ));
    }
    let mut column_of = vec![usize::MAX; universe.len()];
    for (col, label) in header.iter().enumerate() {
        let idx = universe
            .index_of(label)
            .ok_or_else(|| Error::UnknownLabel { label: label.clone(), row: 1 })?;
        if column_of[idx] != usize::MAX {
            return Err(format_err(1, format!("label `{label}` appears twice in the header")));
        }
        column_of[idx] = col;
    }
    body.iter()
        .map(|(line, row)| {
            if row.len() != header.len() {
                return Err(format_err(*line, format!("expected {} fields, found {}", header.len(), row.len())));
            }
            column_of.iter().map(|&c| parse_f64(&row[c], *line)).collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::similarity::ring_similarity;

    #[test]
    fn predictions_round_trip() {
        let text = "{\"labels\": [\"a\", \"b\", 3]}\n\n{\"gold\": [\"a\"], \"pred\": [\"b\", 3]}\n{\"gold\": [], \"pred\": []}\n";
        let file = read_predictions(text.as_bytes()).unwrap();
        assert_eq!(file.labels.as_deref(), Some(&["a".to_string(), "b".into(), "3".into()][..]));
        assert_eq!(file.rows[0].line, 3);
        let batch = file.to_batch(None).unwrap();
        let mut buf = Vec::new();
        write_predictions(&batch, &mut buf).unwrap();
        let again = read_predictions(&buf[..]).unwrap().to_batch(None).unwrap();
        assert_eq!(again.gold(), batch.gold());
        assert_eq!(again.pred(), batch.pred());
    }

    #[test]
    fn prediction_errors_name_the_line() {
        let err = read_predictions("{\"gold\": [\"a\"], \"pred\": []}\n{oops\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err}");
        let file = read_predictions("{\"labels\": [\"a\"]}\n{\"gold\": [\"a\"], \"pred\": [\"z\"]}\n".as_bytes()).unwrap();
        match file.to_batch(None).unwrap_err() {
            Error::UnknownLabel { label, row } => assert_eq!((label.as_str(), row), ("z", 2)),
            e => panic!("{e}"),
        }
        assert!(read_predictions("{\"gold\": [1.5], \"pred\": []}".as_bytes()).is_err());
        assert!(read_predictions("{\"gold\": [\"a\"]}".as_bytes()).is_err());
        assert_eq!(read_gold("{\"gold\": [\"a\"]}".as_bytes()).unwrap().rows[0].pred, Vec::<String>::new());
    }

    #[test]
    fn observed_universe_keeps_first_appearance() {
        let file = read_predictions("{\"gold\": [\"y\", \"x\"], \"pred\": [\"z\"]}".as_bytes()).unwrap();
        let batch = file.to_batch(None).unwrap();
        assert_eq!(batch.universe().labels(), &["y", "x", "z"]);
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let s = ring_similarity(7).unwrap();
        let mut buf = Vec::new();
        write_matrix_csv(&s, &mut buf).unwrap();
        let back = read_matrix_csv(&buf[..]).unwrap();
        assert_eq!(back.values(), s.values());
        assert_eq!(back.universe().labels(), s.universe().labels());
    }

    #[test]
    fn matrix_rejects_mismatched_labels() {
        assert!(read_matrix_csv(",a,b\nb,1,0\na,0,1\n".as_bytes()).is_err());
        assert!(read_matrix_csv(",a,b\na,1,0\n".as_bytes()).is_err());
        assert!(read_matrix_csv(",a,b\na,1,x\nb,0,1\n".as_bytes()).is_err());
    }

    #[test]
    fn edges_and_scores() {
        let g = read_edge_list("root,a\nroot,b,2\n".as_bytes(), None).unwrap();
        assert_eq!(g.universe().labels(), &["root", "a", "b"]);
        assert_eq!(g.shortest_paths(1), vec![1.0, 0.0, 3.0]);

        let u = LabelUniverse::new(["a", "b"]).unwrap();
        let scores = read_scores_csv("b,a\n0.25,0.75\n".as_bytes(), &u).unwrap();
        match read_scores_csv("b,a\n\n0.1,oops\n".as_bytes(), &u).unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 3),
            e => panic!("{e}"),
        }
        assert_eq!(scores, vec![vec![0.75, 0.25]]);
        assert!(read_scores_csv("b,c\n0.1,0.2\n".as_bytes(), &u).is_err());
    }

    #[test]
    fn continuous_rows() {
        let ex = read_continuous("{\"gold\": [[0, 0]], \"pred\": [[1, 0], [0, 1]]}\n".as_bytes()).unwrap();
        assert_eq!(ex[0].0.len(), 2);
        assert_eq!(ex[0].1.len(), 1);
        assert!(read_continuous("{\"gold\": [[0, 0]], \"pred\": [[1]]}\n".as_bytes()).is_ok());
        assert!(read_continuous("{\"gold\": [[0, 0], [1]], \"pred\": []}\n".as_bytes()).is_err());
    }
}
