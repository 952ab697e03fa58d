//! Network files: the native line format and a GasLib XML subset.
//!
//! Native format, one record per line, `#` starts a comment:
//!
//! ```text
//! node <id>
//! pipe <id> <from> <to> <length_m> <diameter_m> [theta_per_m]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::network::{NetworkGraph, PipeSpec, DEFAULT_THETA};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkFormat {
    Native,
    GaslibSubset,
}

impl NetworkFormat {
    /// `.xml` and `.net.xml` files are GasLib, everything else native.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("xml") => NetworkFormat::GaslibSubset,
            _ => NetworkFormat::Native,
        }
    }
}

pub fn parse_network(text: &str, format: NetworkFormat) -> Result<NetworkGraph> {
    match format {
        NetworkFormat::Native => parse_native(text),
        NetworkFormat::GaslibSubset => parse_gaslib(text),
    }
}

pub fn read_network(path: &Path) -> Result<NetworkGraph> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_network(&text, NetworkFormat::from_path(path))
}

fn number(context: &str, field: &str, raw: &str) -> Result<f64> {
    raw.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(context, format!("{field} `{raw}` is not a finite number")))
}

fn positive(context: &str, field: &str, x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(Error::parse(
            context,
            format!("{field} must be positive, got {x}"),
        ))
    }
}

fn parse_native(text: &str) -> Result<NetworkGraph> {
    let mut nodes = Vec::new();
    let mut pipes = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let context = format!("line {}", k + 1);
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.as_slice() {
            ["node", id] => nodes.push(id.to_string()),
            ["pipe", id, from, to, rest @ ..] if rest.len() == 2 || rest.len() == 3 => {
                let context = format!("{context}, pipe `{id}`");
                let length = positive(&context, "length", number(&context, "length", rest[0])?)?;
                let diameter =
                    positive(&context, "diameter", number(&context, "diameter", rest[1])?)?;
                let theta = match rest.get(2) {
                    Some(raw) => number(&context, "theta", raw)?,
                    None => DEFAULT_THETA,
                };
                pipes.push(PipeSpec::new(*id, *from, *to, length, diameter, theta));
            }
            ["node", ..] => return Err(Error::parse(context, "expected `node <id>`")),
            ["pipe", ..] => {
                return Err(Error::parse(
                    context,
                    "expected `pipe <id> <from> <to> <length_m> <diameter_m> [theta_per_m]`",
                ))
            }
            [other, ..] => return Err(Error::parse(context, format!("unknown record `{other}`"))),
            [] => unreachable!(),
        }
    }
    NetworkGraph::new(nodes, pipes)
}

/// Native text for a graph. Numbers use the shortest representation that
/// parses back to the same value, so the round trip is exact.
pub fn serialize_native(graph: &NetworkGraph) -> String {
    let mut out = String::new();
    for id in graph.nodes() {
        writeln!(out, "node {id}").unwrap();
    }
    for p in graph.pipes() {
        writeln!(
            out,
            "pipe {} {} {} {} {} {}",
            p.id, p.from, p.to, p.length, p.diameter, p.theta
        )
        .unwrap();
    }
    out
}

/// Decimal shift of a numeric literal, so `3.068 km` becomes exactly the
/// double nearest to 3068 rather than `3.068 * 1000.0`.
fn scaled(raw: &str, shift: i32) -> Option<f64> {
    let raw = raw.trim();
    let (mantissa, exp) = match raw.find(['e', 'E']) {
        Some(i) => (&raw[..i], raw[i + 1..].parse::<i32>().ok()?),
        None => (raw, 0),
    };
    format!("{mantissa}e{}", exp + shift).parse().ok()
}

fn measure(pipe: &roxmltree::Node, tag: &str, context: &str, units: &[(&str, i32)]) -> Result<f64> {
    let el = pipe
        .children()
        .find(|c| c.is_element() && c.tag_name().name() == tag)
        .ok_or_else(|| Error::parse(context, format!("missing <{tag}> element")))?;
    let value = el
        .attribute("value")
        .ok_or_else(|| Error::parse(context, format!("<{tag}> has no `value` attribute")))?;
    let unit = el
        .attribute("unit")
        .ok_or_else(|| Error::parse(context, format!("<{tag}> has no `unit` attribute")))?;
    let shift = units
        .iter()
        .find(|(u, _)| *u == unit)
        .map(|(_, s)| *s)
        .ok_or_else(|| Error::parse(context, format!("unknown unit `{unit}` for <{tag}>")))?;
    let x = scaled(value, shift)
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::parse(context, format!("<{tag}> value `{value}` is not a number")))?;
    positive(context, tag, x)
}

const NODE_TAGS: &[&str] = &["node", "source", "sink", "innode"];
const REJECTED_TAGS: &[&str] = &[
    "compressorStation",
    "valve",
    "controlValve",
    "resistor",
    "shortPipe",
];

fn parse_gaslib(text: &str) -> Result<NetworkGraph> {
    let doc =
        roxmltree::Document::parse(text).map_err(|e| Error::parse("network XML", e.to_string()))?;
    let mut nodes: Vec<String> = Vec::new();
    let mut pipes = Vec::new();
    for el in doc.descendants().filter(|n| n.is_element()) {
        let tag = el.tag_name().name();
        let id = el.attribute("id");
        if REJECTED_TAGS.contains(&tag) {
            return Err(Error::parse(
                format!("<{tag} id=\"{}\">", id.unwrap_or("?")),
                "only pipes are supported; compressors, valves and other active elements are not",
            ));
        }
        if NODE_TAGS.contains(&tag) {
            let id =
                id.ok_or_else(|| Error::parse(format!("<{tag}>"), "missing `id` attribute"))?;
            nodes.push(id.to_string());
        } else if tag == "pipe" {
            let context = format!("<pipe id=\"{}\">", id.unwrap_or("?"));
            let attr = |name: &str| {
                el.attribute(name)
                    .ok_or_else(|| Error::parse(&context, format!("missing `{name}` attribute")))
            };
            let (id, from, to) = (attr("id")?, attr("from")?, attr("to")?);
            let length = measure(&el, "length", &context, &[("m", 0), ("km", 3)])?;
            let diameter = measure(&el, "diameter", &context, &[("m", 0), ("mm", -3)])?;
            pipes.push(PipeSpec::new(id, from, to, length, diameter, DEFAULT_THETA));
        }
    }
    if nodes.is_empty() {
        // No node section: take endpoints in order of first appearance.
        for p in &pipes {
            for id in [&p.from, &p.to] {
                if !nodes.contains(id) {
                    nodes.push(id.clone());
                }
            }
        }
    }
    NetworkGraph::new(nodes, pipes)
}
