//! Text formats for instances and packings.
//!
//! Instance files are whitespace separated. The first line holds `n Q`,
//! then one line per item: `id weight [conflict ids...]` with 1-based ids.
//! A conflict may be listed on either endpoint (or both). Packing files
//! hold one bin per line as 1-based item ids.

use std::fmt::Write as _;

use bppc_core::{ConflictGraph, Instance, InstanceError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("malformed header, expected `n Q`")]
    MalformedHeader,
    #[error("expected {expected} item lines, found {found}")]
    MissingItems { expected: usize, found: usize },
    #[error("unexpected content after the last item")]
    TrailingContent,
    #[error("`{0}` is not a valid item id")]
    BadItemId(String),
    #[error("item {0} is out of range")]
    ItemOutOfRange(usize),
    #[error("item {0} is listed twice")]
    DuplicateItem(usize),
    #[error("missing weight")]
    MissingWeight,
    #[error("`{0}` is not an integer weight")]
    NonIntegerWeight(String),
    #[error("weight of item {0} must be positive")]
    ZeroWeight(usize),
    #[error("weight exceeds capacity ({weight} > {capacity})")]
    WeightExceedsCapacity { weight: u64, capacity: u64 },
    #[error("item {0} conflicts with itself")]
    SelfConflict(usize),
}

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_id(token: &str, n: usize, line: usize) -> Result<usize, ParseError> {
    let id: usize = token
        .parse()
        .map_err(|_| err(line, ParseErrorKind::BadItemId(token.to_string())))?;
    if id == 0 || id > n {
        return Err(err(line, ParseErrorKind::ItemOutOfRange(id)));
    }
    Ok(id - 1)
}

pub fn parse_instance(text: &str, name: &str) -> Result<Instance, ParseError> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines.next().ok_or(err(1, ParseErrorKind::MalformedHeader))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (n, capacity) = match fields.as_slice() {
        [n, q] => match (n.parse::<usize>(), q.parse::<u64>()) {
            (Ok(n), Ok(q)) if q > 0 => (n, q),
            _ => return Err(err(header_line, ParseErrorKind::MalformedHeader)),
        },
        _ => return Err(err(header_line, ParseErrorKind::MalformedHeader)),
    };

    let mut weights = vec![0u64; n];
    let mut edges = Vec::new();
    let mut last_line = header_line;
    for count in 0..n {
        let (line, content) = lines.next().ok_or(err(
            last_line + 1,
            ParseErrorKind::MissingItems { expected: n, found: count },
        ))?;
        last_line = line;
        let mut tokens = content.split_whitespace();
        let id = parse_id(tokens.next().expect("non-empty line"), n, line)?;
        if weights[id] != 0 {
            return Err(err(line, ParseErrorKind::DuplicateItem(id + 1)));
        }
        let token = tokens.next().ok_or(err(line, ParseErrorKind::MissingWeight))?;
        let weight: u64 = token
            .parse()
            .map_err(|_| err(line, ParseErrorKind::NonIntegerWeight(token.to_string())))?;
        if weight == 0 {
            return Err(err(line, ParseErrorKind::ZeroWeight(id + 1)));
        }
        if weight > capacity {
            return Err(err(line, ParseErrorKind::WeightExceedsCapacity { weight, capacity }));
        }
        weights[id] = weight;
        for token in tokens {
            let other = parse_id(token, n, line)?;
            if other == id {
                return Err(err(line, ParseErrorKind::SelfConflict(id + 1)));
            }
            edges.push((id, other));
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, ParseErrorKind::TrailingContent));
    }

    let graph = ConflictGraph::from_edges(n, edges).map_err(|e| err(last_line, core_error(e)))?;
    Instance::new(name, capacity, weights, graph).map_err(|e| err(last_line, core_error(e)))
}

fn core_error(e: InstanceError) -> ParseErrorKind {
    match e {
        InstanceError::ItemOutOfRange(i) => ParseErrorKind::ItemOutOfRange(i + 1),
        InstanceError::SelfConflict(i) => ParseErrorKind::SelfConflict(i + 1),
        InstanceError::WeightExceedsCapacity { weight, capacity, .. } => {
            ParseErrorKind::WeightExceedsCapacity { weight, capacity }
        }
        InstanceError::ZeroWeight(i) => ParseErrorKind::ZeroWeight(i + 1),
        _ => ParseErrorKind::MalformedHeader,
    }
}

/// Writes an instance; each conflict appears once, on its lower id.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    writeln!(out, "{} {}", instance.len(), instance.capacity()).unwrap();
    let graph = instance.conflicts();
    for i in 0..instance.len() {
        write!(out, "{} {}", i + 1, instance.weight(i)).unwrap();
        for &j in graph.neighbors(i).iter().filter(|&&j| j > i) {
            write!(out, " {}", j + 1).unwrap();
        }
        out.push('\n');
    }
    out
}

/// One line per bin, 1-based ids.
pub fn write_packing(packing: &[Vec<usize>]) -> String {
    let mut out = String::new();
    for bin in packing {
        let ids: Vec<String> = bin.iter().map(|i| (i + 1).to_string()).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    out
}

/// Reads a packing for an instance with `n` items. Only id syntax and
/// range are checked here; structure is the validator's job.
pub fn parse_packing(text: &str, n: usize) -> Result<Vec<Vec<usize>>, ParseError> {
    content_lines(text)
        .map(|(line, content)| {
            content
                .split_whitespace()
                .map(|t| parse_id(t, n, line))
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file() {
        let inst = parse_instance("3 10\n1 4\n2 5 3\n3 6 2\n", "x").unwrap();
        assert_eq!(inst.len(), 3);
        assert_eq!(inst.capacity(), 10);
        assert_eq!(inst.weights(), &[4, 5, 6]);
        assert_eq!(inst.conflicts().edges().collect::<Vec<_>>(), vec![(1, 2)]);
        assert_eq!(inst.name(), "x");
    }

    #[test]
    fn writer_lists_edges_on_lower_endpoint() {
        let inst = parse_instance("3 10\n1 4\n2 5\n3 6 2 1\n", "x").unwrap();
        assert_eq!(write_instance(&inst), "3 10\n1 4 3\n2 5 3\n3 6\n");
    }

    #[test]
    fn items_in_any_order() {
        let inst = parse_instance("2 10\n2 7\n1 3 2\n", "x").unwrap();
        assert_eq!(inst.weights(), &[3, 7]);
        assert!(inst.conflicts().is_conflict(0, 1));
    }

    #[test]
    fn errors_name_the_line() {
        let e = parse_instance("2 10\n1 4\n2 12\n", "x").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.to_string().contains("weight exceeds capacity"));

        let cases: &[(&str, usize, ParseErrorKind)] = &[
            ("3\n", 1, ParseErrorKind::MalformedHeader),
            ("a 10\n", 1, ParseErrorKind::MalformedHeader),
            ("2 10\n1 x\n2 3\n", 2, ParseErrorKind::NonIntegerWeight("x".into())),
            ("2 10\n1 4\n3 3\n", 3, ParseErrorKind::ItemOutOfRange(3)),
            ("2 10\n1 4 5\n2 3\n", 2, ParseErrorKind::ItemOutOfRange(5)),
            ("2 10\n1 4 1\n2 3\n", 2, ParseErrorKind::SelfConflict(1)),
            ("2 10\n1 4\n1 3\n", 3, ParseErrorKind::DuplicateItem(1)),
            ("2 10\n1 4\n", 3, ParseErrorKind::MissingItems { expected: 2, found: 1 }),
            ("1 10\n1 4\n5 5\n", 3, ParseErrorKind::TrailingContent),
            ("1 10\n1\n", 2, ParseErrorKind::MissingWeight),
            ("1 10\n1 0\n", 2, ParseErrorKind::ZeroWeight(1)),
        ];
        for (text, line, kind) in cases {
            let e = parse_instance(text, "x").unwrap_err();
            assert_eq!((&e.line, &e.kind), (line, kind), "{text:?}");
        }
    }

    #[test]
    fn packing_round_trip() {
        let packing = vec![vec![0, 4], vec![2], vec![1, 3]];
        let text = write_packing(&packing);
        assert_eq!(text, "1 5\n3\n2 4\n");
        assert_eq!(parse_packing(&text, 5).unwrap(), packing);
        assert_eq!(parse_packing("1 6\n", 5).unwrap_err().kind, ParseErrorKind::ItemOutOfRange(6));
    }
}
