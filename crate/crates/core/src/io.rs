//! Plain-text formats for models, samples and edge lists.
//!
//! Model file: `n`, then `n - 1` lines `u v w`, then `n` bias lines, then optionally `n` flip
//! probabilities. Sample file: `m n` followed by `m` rows of `±1`. Edge list: one `u v` per line
//! in ascending order. Floats are written in their shortest round-trip form.

use std::fmt::Write as _;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{IsingModel, NoiseSpec};
use crate::sampler::SampleBatch;
use crate::scalar::Scalar;
use crate::tree::TreeGraph;

/// Non-empty lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_field<F: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<F> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("cannot parse {what} from {tok:?}"),
    })
}

fn fields<const K: usize>(line: usize, text: &str) -> Result<[&str; K]> {
    let toks: Vec<&str> = text.split_whitespace().collect();
    toks.try_into().map_err(|t: Vec<&str>| Error::Parse {
        line,
        msg: format!("expected {K} fields, found {}", t.len()),
    })
}

pub fn write_model<T: Scalar>(model: &IsingModel<T>, noise: Option<&NoiseSpec<T>>) -> String {
    let mut out = String::new();
    writeln!(out, "{}", model.n()).unwrap();
    for (&(u, v), w) in model.tree().edges().iter().zip(model.weights()) {
        writeln!(out, "{u} {v} {w}").unwrap();
    }
    for b in model.biases() {
        writeln!(out, "{b}").unwrap();
    }
    if let Some(noise) = noise {
        for q in noise.q() {
            writeln!(out, "{q}").unwrap();
        }
    }
    out
}

/// Parses a model file and its optional bundled noise vector.
pub fn parse_model<T: Scalar>(text: &str) -> Result<(IsingModel<T>, Option<NoiseSpec<T>>)> {
    let mut lines = content_lines(text);
    let eof = |what: &str| Error::Parse {
        line: 0,
        msg: format!("unexpected end of input reading {what}"),
    };
    let (line, first) = lines.next().ok_or_else(|| eof("n"))?;
    let [n_tok] = fields::<1>(line, first)?;
    let n: usize = parse_field(n_tok, line, "n")?;
    let mut edges = Vec::with_capacity(n.saturating_sub(1));
    for _ in 1..n {
        let (line, text) = lines.next().ok_or_else(|| eof("edges"))?;
        let [u, v, w] = fields::<3>(line, text)?;
        edges.push((
            parse_field(u, line, "node")?,
            parse_field(v, line, "node")?,
            parse_field::<T>(w, line, "weight")?,
        ));
    }
    let scalars =
        |what: &str, lines: &mut dyn Iterator<Item = (usize, &str)>| -> Result<Option<Vec<T>>> {
            let mut vals = Vec::with_capacity(n);
            for k in 0..n {
                match lines.next() {
                    Some((line, text)) => {
                        let [tok] = fields::<1>(line, text)?;
                        vals.push(parse_field::<T>(tok, line, what)?);
                    }
                    None if k == 0 => return Ok(None),
                    None => return Err(eof(what)),
                }
            }
            Ok(Some(vals))
        };
    let biases = scalars("bias", &mut lines)?.ok_or_else(|| eof("biases"))?;
    let q = scalars("flip probability", &mut lines)?;
    if let Some((line, _)) = lines.next() {
        return Err(Error::Parse {
            line,
            msg: "trailing content".into(),
        });
    }
    let model = IsingModel::from_weighted_edges(n, &edges, biases)?;
    let noise = q.map(NoiseSpec::new).transpose()?;
    Ok((model, noise))
}

pub fn write_samples(batch: &SampleBatch) -> String {
    let mut out = String::with_capacity(batch.m() * batch.n() * 3 + 16);
    writeln!(out, "{} {}", batch.m(), batch.n()).unwrap();
    for row in batch.values().rows() {
        let mut first = true;
        for &v in row {
            if !first {
                out.push(' ');
            }
            out.push_str(if v == 1 { "1" } else { "-1" });
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Parses a sample file; `noisy` records whether the rows went through the flip channel.
pub fn parse_samples(text: &str, noisy: bool) -> Result<SampleBatch> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "empty sample file".into(),
    })?;
    let [m_tok, n_tok] = fields::<2>(line, header)?;
    let m: usize = parse_field(m_tok, line, "m")?;
    let n: usize = parse_field(n_tok, line, "n")?;
    let mut values = Vec::with_capacity(m * n);
    let mut rows = 0;
    for (line, text) in lines {
        let before = values.len();
        for tok in text.split_whitespace() {
            match tok {
                "1" | "+1" => values.push(1i8),
                "-1" => values.push(-1i8),
                _ => {
                    return Err(Error::Parse {
                        line,
                        msg: format!("sample entry {tok:?} is not ±1"),
                    })
                }
            }
        }
        if values.len() - before != n {
            return Err(Error::Parse {
                line,
                msg: format!("expected {n} entries, found {}", values.len() - before),
            });
        }
        rows += 1;
    }
    if rows != m {
        return Err(Error::Parse {
            line: 0,
            msg: format!("header declares {m} rows, found {rows}"),
        });
    }
    let values = Array2::from_shape_vec((m, n), values).map_err(|e| Error::Parse {
        line: 0,
        msg: e.to_string(),
    })?;
    SampleBatch::new(values, noisy)
}

pub fn write_edge_list(tree: &TreeGraph) -> String {
    tree.edges()
        .iter()
        .map(|(u, v)| format!("{u} {v}\n"))
        .collect()
}

/// Parses an edge list into a tree on `edges + 1` nodes.
pub fn parse_edge_list(text: &str) -> Result<TreeGraph> {
    let mut edges = Vec::new();
    for (line, text) in content_lines(text) {
        let [u, v] = fields::<2>(line, text)?;
        edges.push((
            parse_field::<usize>(u, line, "node")?,
            parse_field::<usize>(v, line, "node")?,
        ));
    }
    TreeGraph::new(edges.len() + 1, edges)
}
