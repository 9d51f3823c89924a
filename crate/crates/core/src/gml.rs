//! Network persistence in the Graph Modelling Language.
//!
//! The on-disk convention: one `graph` record carrying `directed`,
//! `resources` (space-separated names) and `timestep`, then one `node`
//! record per agent and one `edge` record per link. Vector-valued
//! attributes (matrices, per-resource costs) are quoted strings of
//! space-separated values; `INF` marks an unavailable cost or absent
//! provider price, `UNB` an unbounded capacity. Attribute order is fixed,
//! so writing the same network twice produces identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{Agent, Capacity, Cost, InfraLink, Network, ResourceCatalog, TechnologyMatrix};

#[derive(Debug, Error)]
pub enum GmlError {
    /// The text is not well-formed GML.
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Well-formed GML that does not describe a valid network.
    #[error("{context}: {message}")]
    Schema { context: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> GmlError {
    GmlError::Parse {
        line,
        message: message.into(),
    }
}

fn schema_err(context: impl Into<String>, message: impl Into<String>) -> GmlError {
    GmlError::Schema {
        context: context.into(),
        message: message.into(),
    }
}

// ---------------------------------------------------------------------------
// Writing

fn push_vector<T: std::fmt::Display>(out: &mut String, key: &str, values: impl Iterator<Item = T>) {
    let joined = values.map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
    let _ = writeln!(out, "    {key} \"{joined}\"");
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders a network as GML text. Deterministic: agents and links are
/// emitted in id order with a fixed attribute order.
pub fn to_gml_string(net: &Network) -> String {
    let mut out = String::new();
    out.push_str("graph [\n");
    out.push_str("  directed 1\n");
    let _ = writeln!(out, "  resources \"{}\"", net.catalog.names().join(" "));
    let _ = writeln!(out, "  timestep \"{}\"", escape(&net.timestep));
    for agent in net.agents.values() {
        out.push_str("  node [\n");
        let _ = writeln!(out, "    id {}", agent.id);
        let _ = writeln!(out, "    label \"{}\"", escape(&agent.label));
        push_vector(&mut out, "techmatrix", agent.tech.row_major().iter());
        push_vector(
            &mut out,
            "providercosts",
            agent
                .provider_costs
                .iter()
                .map(|c| c.map_or(Cost::Unavailable, Cost::Finite)),
        );
        push_vector(&mut out, "finaldemand", agent.final_demand.iter());
        let _ = writeln!(out, "    fdpriority {}", agent.final_demand_priority);
        out.push_str("  ]\n");
    }
    for link in net.links.values() {
        out.push_str("  edge [\n");
        let _ = writeln!(out, "    source {}", link.from);
        let _ = writeln!(out, "    target {}", link.to);
        let _ = writeln!(out, "    linkid {}", link.id);
        push_vector(&mut out, "cost", link.transport_cost.iter());
        push_vector(&mut out, "capacity", link.capacity.iter());
        let _ = writeln!(out, "    priority {}", link.priority);
        out.push_str("  ]\n");
    }
    out.push_str("]\n");
    out
}

/// Writes a network to `path` and returns the number of bytes written.
pub fn write_gml(net: &Network, path: impl AsRef<Path>) -> Result<usize, GmlError> {
    let text = to_gml_string(net);
    fs::write(path, &text)?;
    Ok(text.len())
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Int(i64),
    Real(f64),
    Str(String),
    Record(Vec<Entry>),
}

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    key: String,
    value: Value,
    line: usize,
}

struct Lexer<'a> {
    rest: &'a str,
    line: usize,
}

#[derive(Debug, PartialEq)]
enum Token {
    Key(String),
    Int(i64),
    Real(f64),
    Str(String),
    Open,
    Close,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            rest: text,
            line: 1,
        }
    }

    fn skip_ws(&mut self) {
        loop {
            let trimmed = self.rest.trim_start_matches(|c: char| {
                if c == '\n' {
                    self.line += 1;
                }
                c.is_whitespace()
            });
            // GML comments run from '#' to end of line.
            if let Some(stripped) = trimmed.strip_prefix('#') {
                self.rest = stripped;
                if let Some(nl) = self.rest.find('\n') {
                    self.rest = &self.rest[nl..];
                } else {
                    self.rest = "";
                }
            } else {
                self.rest = trimmed;
                return;
            }
        }
    }

    fn next(&mut self) -> Result<Option<(Token, usize)>, GmlError> {
        self.skip_ws();
        let line = self.line;
        let mut chars = self.rest.chars();
        let Some(first) = chars.next() else {
            return Ok(None);
        };
        match first {
            '[' => {
                self.rest = &self.rest[1..];
                Ok(Some((Token::Open, line)))
            }
            ']' => {
                self.rest = &self.rest[1..];
                Ok(Some((Token::Close, line)))
            }
            '"' => {
                let mut value = String::new();
                let mut escaped = false;
                let mut consumed = 1;
                for c in chars {
                    consumed += c.len_utf8();
                    if escaped {
                        value.push(c);
                        escaped = false;
                    } else if c == '\\' {
                        escaped = true;
                    } else if c == '"' {
                        self.rest = &self.rest[consumed..];
                        return Ok(Some((Token::Str(value), line)));
                    } else {
                        if c == '\n' {
                            self.line += 1;
                        }
                        value.push(c);
                    }
                }
                Err(parse_err(line, "unterminated string"))
            }
            _ => {
                let end = self
                    .rest
                    .find(|c: char| c.is_whitespace() || c == '[' || c == ']' || c == '"')
                    .unwrap_or(self.rest.len());
                let word = &self.rest[..end];
                self.rest = &self.rest[end..];
                if word.starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
                    Ok(Some((Token::Key(word.to_string()), line)))
                } else if let Ok(i) = word.parse::<i64>() {
                    Ok(Some((Token::Int(i), line)))
                } else if let Ok(r) = word.parse::<f64>() {
                    Ok(Some((Token::Real(r), line)))
                } else {
                    Err(parse_err(line, format!("unrecognized token '{word}'")))
                }
            }
        }
    }
}

fn parse_record(lexer: &mut Lexer, open_line: usize) -> Result<Vec<Entry>, GmlError> {
    let mut entries = Vec::new();
    loop {
        match lexer.next()? {
            None => return Err(parse_err(open_line, "unclosed record (missing ']')")),
            Some((Token::Close, _)) => return Ok(entries),
            Some((Token::Key(key), line)) => {
                let value = match lexer.next()? {
                    Some((Token::Int(i), _)) => Value::Int(i),
                    Some((Token::Real(r), _)) => Value::Real(r),
                    Some((Token::Str(s), _)) => Value::Str(s),
                    Some((Token::Open, l)) => Value::Record(parse_record(lexer, l)?),
                    Some((Token::Close, l)) => {
                        return Err(parse_err(l, format!("key '{key}' has no value")))
                    }
                    Some((Token::Key(_), l)) => {
                        return Err(parse_err(l, format!("key '{key}' has no value")))
                    }
                    None => return Err(parse_err(line, format!("key '{key}' has no value"))),
                };
                entries.push(Entry { key, value, line });
            }
            Some((token, line)) => {
                return Err(parse_err(line, format!("expected a key, found {token:?}")))
            }
        }
    }
}

fn parse_document(text: &str) -> Result<Vec<Entry>, GmlError> {
    let mut lexer = Lexer::new(text);
    let mut entries = Vec::new();
    loop {
        match lexer.next()? {
            None => return Ok(entries),
            Some((Token::Key(key), line)) => {
                let value = match lexer.next()? {
                    Some((Token::Int(i), _)) => Value::Int(i),
                    Some((Token::Real(r), _)) => Value::Real(r),
                    Some((Token::Str(s), _)) => Value::Str(s),
                    Some((Token::Open, l)) => Value::Record(parse_record(&mut lexer, l)?),
                    _ => return Err(parse_err(line, format!("key '{key}' has no value"))),
                };
                entries.push(Entry { key, value, line });
            }
            Some((token, line)) => {
                return Err(parse_err(line, format!("expected a key, found {token:?}")))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Interpretation

struct RecordReader<'a> {
    entries: &'a [Entry],
    context: String,
    warnings: &'a mut Vec<String>,
}

impl<'a> RecordReader<'a> {
    fn get(&self, key: &str) -> Option<&'a Entry> {
        self.entries.iter().find(|e| e.key == key)
    }

    fn require(&self, key: &str) -> Result<&'a Entry, GmlError> {
        self.get(key)
            .ok_or_else(|| schema_err(&self.context, format!("missing required attribute '{key}'")))
    }

    fn int(&self, key: &str) -> Result<i64, GmlError> {
        let entry = self.require(key)?;
        match entry.value {
            Value::Int(i) => Ok(i),
            _ => Err(schema_err(
                &self.context,
                format!("attribute '{key}' must be an integer"),
            )),
        }
    }

    fn id(&self, key: &str) -> Result<usize, GmlError> {
        usize::try_from(self.int(key)?).map_err(|_| {
            schema_err(
                &self.context,
                format!("attribute '{key}' must be nonnegative"),
            )
        })
    }

    fn string(&self, key: &str) -> Result<&'a str, GmlError> {
        let entry = self.require(key)?;
        match &entry.value {
            Value::Str(s) => Ok(s),
            _ => Err(schema_err(
                &self.context,
                format!("attribute '{key}' must be a string"),
            )),
        }
    }

    /// Splits a quoted vector attribute and maps each token, checking the
    /// expected length.
    fn vector<T>(
        &self,
        key: &str,
        expected: usize,
        mut map: impl FnMut(&str) -> Option<T>,
    ) -> Result<Vec<T>, GmlError> {
        let raw = self.string(key)?;
        let tokens: Vec<&str> = raw.split_whitespace().collect();
        if tokens.len() != expected {
            return Err(schema_err(
                &self.context,
                format!(
                    "attribute '{key}' has {} values, expected {expected}",
                    tokens.len()
                ),
            ));
        }
        tokens
            .iter()
            .map(|t| {
                map(t).ok_or_else(|| {
                    schema_err(&self.context, format!("attribute '{key}': bad value '{t}'"))
                })
            })
            .collect()
    }

    /// Flags attributes outside `known` so typos surface instead of being
    /// silently dropped.
    fn warn_unknown(&mut self, known: &[&str]) {
        for entry in self.entries {
            if !known.contains(&entry.key.as_str()) {
                self.warnings.push(format!(
                    "line {}: ignoring unknown {} attribute '{}'",
                    entry.line, self.context, entry.key
                ));
            }
        }
    }
}

fn finite(token: &str) -> Option<f64> {
    token.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn cost_token(token: &str) -> Option<Cost> {
    if token == "INF" {
        Some(Cost::Unavailable)
    } else {
        finite(token).map(Cost::Finite)
    }
}

fn capacity_token(token: &str) -> Option<Capacity> {
    if token == "UNB" {
        Some(Capacity::Unbounded)
    } else {
        finite(token).map(Capacity::Finite)
    }
}

/// Parses GML text into a network plus warnings for ignored attributes.
pub fn from_gml_string(text: &str) -> Result<(Network, Vec<String>), GmlError> {
    let document = parse_document(text)?;
    let mut warnings = Vec::new();
    for entry in &document {
        if entry.key != "graph" {
            warnings.push(format!(
                "line {}: ignoring top-level key '{}'",
                entry.line, entry.key
            ));
        }
    }
    let graph = document
        .iter()
        .find(|e| e.key == "graph")
        .ok_or_else(|| schema_err("document", "no 'graph' record"))?;
    let Value::Record(graph_entries) = &graph.value else {
        return Err(schema_err("document", "'graph' must be a record"));
    };

    let mut graph_reader = RecordReader {
        entries: graph_entries,
        context: "graph".into(),
        warnings: &mut warnings,
    };
    let resources: Vec<String> = graph_reader
        .string("resources")?
        .split_whitespace()
        .map(String::from)
        .collect();
    if resources.is_empty() {
        return Err(schema_err("graph", "'resources' names no resources"));
    }
    let n_res = resources.len();
    let mut net = Network::new(ResourceCatalog::new(resources));
    if let Some(entry) = graph_reader.get("timestep") {
        match &entry.value {
            Value::Str(s) => net.timestep = s.clone(),
            _ => return Err(schema_err("graph", "attribute 'timestep' must be a string")),
        }
    }
    graph_reader.warn_unknown(&["directed", "resources", "timestep", "node", "edge"]);

    for entry in graph_entries.iter().filter(|e| e.key == "node") {
        let Value::Record(fields) = &entry.value else {
            return Err(parse_err(entry.line, "'node' must be a record"));
        };
        let mut reader = RecordReader {
            entries: fields,
            context: format!("node at line {}", entry.line),
            warnings: &mut warnings,
        };
        let id = reader.id("id")?;
        if net.agents.contains_key(&id) {
            return Err(schema_err(
                &reader.context,
                format!("duplicate node id {id}"),
            ));
        }
        let mut agent = Agent::new(id, reader.string("label")?, n_res);
        let cells = reader.vector("techmatrix", n_res * n_res, finite)?;
        agent.tech = TechnologyMatrix::from_row_major(n_res, cells);
        agent.provider_costs = reader
            .vector("providercosts", n_res, cost_token)?
            .into_iter()
            .map(Cost::value)
            .collect();
        agent.final_demand = reader.vector("finaldemand", n_res, finite)?;
        agent.final_demand_priority = reader.int("fdpriority")?;
        reader.warn_unknown(&[
            "id",
            "label",
            "techmatrix",
            "providercosts",
            "finaldemand",
            "fdpriority",
        ]);
        net.add_agent(agent);
    }

    for entry in graph_entries.iter().filter(|e| e.key == "edge") {
        let Value::Record(fields) = &entry.value else {
            return Err(parse_err(entry.line, "'edge' must be a record"));
        };
        let mut reader = RecordReader {
            entries: fields,
            context: format!("edge at line {}", entry.line),
            warnings: &mut warnings,
        };
        let id = reader.id("linkid")?;
        if net.links.contains_key(&id) {
            return Err(schema_err(
                &reader.context,
                format!("duplicate linkid {id}"),
            ));
        }
        let mut link = InfraLink::new(id, reader.id("source")?, reader.id("target")?, n_res);
        for endpoint in [link.from, link.to] {
            if !net.agents.contains_key(&endpoint) {
                return Err(schema_err(
                    &reader.context,
                    format!("references undeclared node {endpoint}"),
                ));
            }
        }
        link.transport_cost = reader.vector("cost", n_res, cost_token)?;
        link.capacity = reader.vector("capacity", n_res, capacity_token)?;
        link.priority = reader.int("priority")?;
        reader.warn_unknown(&["source", "target", "linkid", "cost", "capacity", "priority"]);
        net.add_link(link);
    }

    Ok((net, warnings))
}

/// Reads a network from a GML file, discarding warnings.
pub fn read_gml(path: impl AsRef<Path>) -> Result<Network, GmlError> {
    let text = fs::read_to_string(path)?;
    Ok(from_gml_string(&text)?.0)
}
