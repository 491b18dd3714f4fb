use std::collections::{HashMap, HashSet};
use std::fmt;

use super::lexer::{tokenize, Span, Tok, Token};
use crate::model::{Axis, BeliefDiagram, NodeId, NodeStatus, PotentialTable};
use crate::transform::EvidenceAssertion;

#[derive(Clone, Debug, PartialEq)]
pub struct Spanned<T> {
    pub value: T,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeDecl {
    pub name: Spanned<String>,
    pub outcomes: Vec<Spanned<String>>,
    /// Set by an `@observed = outcome` annotation: the node's evidence has
    /// already been absorbed and its table is a likelihood.
    pub observed: Option<Spanned<String>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowDecl {
    pub parent_outcomes: Vec<Spanned<String>>,
    pub values: Vec<f64>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TableDecl {
    pub child: Spanned<String>,
    pub parents: Vec<Spanned<String>>,
    pub rows: Vec<RowDecl>,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvidenceDecl {
    pub node: Spanned<String>,
    pub outcome: Spanned<String>,
}

/// Parsed network file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkDocument {
    pub nodes: Vec<NodeDecl>,
    pub tables: Vec<TableDecl>,
    pub evidence: Vec<EvidenceDecl>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken {
        found: String,
        expected: &'static str,
    },
    UnexpectedEnd {
        expected: &'static str,
    },
    Keyword(String),
    DuplicateNode(String),
    DuplicateOutcome(String),
    UnknownNode(String),
    UnknownOutcome {
        node: String,
        outcome: String,
    },
    DuplicateTable(String),
    MissingTable(String),
    DuplicateParent(String),
    RowShape {
        expected: usize,
        found: usize,
    },
    ParentShape {
        expected: usize,
        found: usize,
    },
    DuplicateRow,
    RowCount {
        expected: usize,
        found: usize,
    },
    InvalidNumber(String),
    NegativeEntry(String),
    DuplicateAssertion(String),
    OutOfOrder(&'static str),
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ParseErrorKind::*;
        match self {
            UnexpectedChar(c) => write!(f, "unexpected character `{c}`"),
            UnexpectedToken { found, expected } => write!(f, "expected {expected}, found {found}"),
            UnexpectedEnd { expected } => write!(f, "expected {expected}, found end of input"),
            Keyword(w) => write!(f, "keyword `{w}` cannot be used as a name"),
            DuplicateNode(n) => write!(f, "node `{n}` declared twice"),
            DuplicateOutcome(o) => write!(f, "duplicate outcome `{o}`"),
            UnknownNode(n) => write!(f, "unknown node `{n}`"),
            UnknownOutcome { node, outcome } => {
                write!(f, "node `{node}` has no outcome `{outcome}`")
            }
            DuplicateTable(n) => write!(f, "second table for node `{n}`"),
            MissingTable(n) => write!(f, "node `{n}` has no table"),
            DuplicateParent(n) => write!(f, "parent `{n}` listed twice"),
            RowShape { expected, found } => {
                write!(f, "row has {found} values, expected {expected}")
            }
            ParentShape { expected, found } => {
                write!(f, "row names {found} parent outcomes, expected {expected}")
            }
            DuplicateRow => write!(f, "parent configuration given twice"),
            RowCount { expected, found } => {
                write!(f, "table has {found} rows, expected {expected}")
            }
            InvalidNumber(s) => write!(f, "`{s}` is not a finite number"),
            NegativeEntry(s) => write!(f, "negative entry `{s}`"),
            DuplicateAssertion(n) => write!(f, "node `{n}` observed twice"),
            OutOfOrder(what) => write!(f, "{what}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("{span}: {kind}")]
pub struct ParseError {
    pub span: Span,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn line(&self) -> usize {
        self.span.line
    }
}

fn err<T>(span: Span, kind: ParseErrorKind) -> Result<T, ParseError> {
    Err(ParseError { span, kind })
}

const KEYWORDS: [&str; 3] = ["node", "cpt", "evidence"];

struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    end: Span,
}

impl Cursor {
    fn new(text: &str) -> Result<Self, ParseError> {
        let toks = tokenize(text).map_err(|(span, c)| ParseError {
            span,
            kind: ParseErrorKind::UnexpectedChar(c),
        })?;
        let lines = text.split('\n').count().max(1);
        let last = text.rsplit('\n').next().unwrap_or("");
        let end = Span {
            line: lines,
            column: last.chars().count() + 1,
        };
        Ok(Cursor { toks, pos: 0, end })
    }

    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_word(&self) -> Option<&str> {
        match self.peek() {
            Some(Token {
                tok: Tok::Word(w), ..
            }) => Some(w.as_str()),
            _ => None,
        }
    }

    fn next_span(&self) -> Span {
        self.peek().map(|t| t.span).unwrap_or(self.end)
    }

    fn unexpected<T>(&self, expected: &'static str) -> Result<T, ParseError> {
        match self.peek() {
            Some(t) => err(
                t.span,
                ParseErrorKind::UnexpectedToken {
                    found: t.tok.to_string(),
                    expected,
                },
            ),
            None => err(self.end, ParseErrorKind::UnexpectedEnd { expected }),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &'static str) -> Result<Span, ParseError> {
        match self.peek() {
            Some(t) if t.tok == tok => {
                let span = t.span;
                self.pos += 1;
                Ok(span)
            }
            _ => self.unexpected(expected),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek().map(|t| &t.tok) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Any word, keywords included.
    fn word(&mut self, expected: &'static str) -> Result<Spanned<String>, ParseError> {
        match self.peek() {
            Some(Token {
                tok: Tok::Word(w),
                span,
            }) => {
                let out = Spanned {
                    value: w.clone(),
                    span: *span,
                };
                self.pos += 1;
                Ok(out)
            }
            _ => self.unexpected(expected),
        }
    }

    /// A word that is not a keyword.
    fn ident(&mut self, expected: &'static str) -> Result<Spanned<String>, ParseError> {
        let w = self.word(expected)?;
        if KEYWORDS.contains(&w.value.as_str()) {
            return err(w.span, ParseErrorKind::Keyword(w.value));
        }
        Ok(w)
    }

    fn at_ident(&self) -> bool {
        matches!(self.peek_word(), Some(w) if !KEYWORDS.contains(&w))
    }
}

fn parse_number(w: &Spanned<String>) -> Result<f64, ParseError> {
    let starts_ok = w
        .value
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_digit() || matches!(c, '.' | '-' | '+'));
    let v: f64 = match w.value.parse() {
        Ok(v) if starts_ok => v,
        _ => return err(w.span, ParseErrorKind::InvalidNumber(w.value.clone())),
    };
    if !v.is_finite() {
        return err(w.span, ParseErrorKind::InvalidNumber(w.value.clone()));
    }
    if v < 0.0 {
        return err(w.span, ParseErrorKind::NegativeEntry(w.value.clone()));
    }
    Ok(v)
}

/// Parses and checks a network document. Errors name the first offending
/// position.
pub fn parse_network(text: &str) -> Result<NetworkDocument, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut doc = NetworkDocument::default();
    // name -> (outcome labels, observed?)
    let mut declared: HashMap<String, (Vec<String>, bool)> = HashMap::new();
    let mut tabled: HashSet<String> = HashSet::new();
    let mut stage = 0;

    while let Some(tok) = cur.peek().cloned() {
        match &tok.tok {
            Tok::Word(w) if w == "node" => {
                if stage > 0 {
                    return err(
                        tok.span,
                        ParseErrorKind::OutOfOrder("node declarations must precede tables"),
                    );
                }
                cur.pos += 1;
                let decl = parse_node_decl(&mut cur)?;
                if declared.contains_key(&decl.name.value) {
                    return err(
                        decl.name.span,
                        ParseErrorKind::DuplicateNode(decl.name.value.clone()),
                    );
                }
                let labels: Vec<String> = decl.outcomes.iter().map(|o| o.value.clone()).collect();
                declared.insert(decl.name.value.clone(), (labels, decl.observed.is_some()));
                doc.nodes.push(decl);
            }
            Tok::Word(w) if w == "cpt" => {
                if stage > 1 {
                    return err(
                        tok.span,
                        ParseErrorKind::OutOfOrder("tables must precede the evidence block"),
                    );
                }
                stage = 1;
                cur.pos += 1;
                let table = parse_table_decl(&mut cur, tok.span, &declared)?;
                if !tabled.insert(table.child.value.clone()) {
                    return err(
                        table.child.span,
                        ParseErrorKind::DuplicateTable(table.child.value.clone()),
                    );
                }
                doc.tables.push(table);
            }
            Tok::Word(w) if w == "evidence" => {
                if stage > 1 {
                    return err(
                        tok.span,
                        ParseErrorKind::OutOfOrder("only one evidence block is allowed"),
                    );
                }
                check_tables_complete(&doc, &tabled)?;
                stage = 2;
                cur.pos += 1;
                cur.expect(Tok::LBrace, "`{`")?;
                let mut seen = HashSet::new();
                while !cur.eat(&Tok::RBrace) {
                    let node = cur.ident("a node name or `}`")?;
                    cur.expect(Tok::Equals, "`=`")?;
                    let outcome = cur.word("an outcome")?;
                    cur.expect(Tok::Semi, "`;`")?;
                    let Some((labels, observed)) = declared.get(&node.value) else {
                        return err(node.span, ParseErrorKind::UnknownNode(node.value));
                    };
                    if !labels.contains(&outcome.value) {
                        return err(
                            outcome.span,
                            ParseErrorKind::UnknownOutcome {
                                node: node.value,
                                outcome: outcome.value,
                            },
                        );
                    }
                    if *observed || !seen.insert(node.value.clone()) {
                        return err(node.span, ParseErrorKind::DuplicateAssertion(node.value));
                    }
                    doc.evidence.push(EvidenceDecl { node, outcome });
                }
            }
            _ => return cur.unexpected("`node`, `cpt` or `evidence`"),
        }
    }
    if stage < 2 {
        check_tables_complete(&doc, &tabled)?;
    }
    Ok(doc)
}

fn check_tables_complete(
    doc: &NetworkDocument,
    tabled: &HashSet<String>,
) -> Result<(), ParseError> {
    for n in &doc.nodes {
        if !tabled.contains(&n.name.value) {
            return err(
                n.name.span,
                ParseErrorKind::MissingTable(n.name.value.clone()),
            );
        }
    }
    Ok(())
}

fn parse_node_decl(cur: &mut Cursor) -> Result<NodeDecl, ParseError> {
    let name = cur.ident("a node name")?;
    cur.expect(Tok::Colon, "`:`")?;
    let mut outcomes: Vec<Spanned<String>> = Vec::new();
    while cur.at_ident() {
        let o = cur.ident("an outcome")?;
        if outcomes.iter().any(|x| x.value == o.value) {
            return err(o.span, ParseErrorKind::DuplicateOutcome(o.value));
        }
        outcomes.push(o);
    }
    if outcomes.is_empty() {
        return cur.unexpected("at least one outcome");
    }
    let mut observed = None;
    if cur.eat(&Tok::At) {
        let kw = cur.word("`observed`")?;
        if kw.value != "observed" {
            return err(
                kw.span,
                ParseErrorKind::UnexpectedToken {
                    found: format!("`{}`", kw.value),
                    expected: "`observed`",
                },
            );
        }
        cur.expect(Tok::Equals, "`=`")?;
        let o = cur.word("an outcome")?;
        if !outcomes.iter().any(|x| x.value == o.value) {
            return err(
                o.span,
                ParseErrorKind::UnknownOutcome {
                    node: name.value,
                    outcome: o.value,
                },
            );
        }
        observed = Some(o);
    }
    Ok(NodeDecl {
        name,
        outcomes,
        observed,
    })
}

fn parse_table_decl(
    cur: &mut Cursor,
    span: Span,
    declared: &HashMap<String, (Vec<String>, bool)>,
) -> Result<TableDecl, ParseError> {
    let child = cur.ident("a node name")?;
    let Some((child_outcomes, child_observed)) = declared.get(&child.value) else {
        return err(child.span, ParseErrorKind::UnknownNode(child.value));
    };
    let mut parents: Vec<Spanned<String>> = Vec::new();
    if cur.eat(&Tok::Bar) {
        while cur.at_ident() {
            let p = cur.ident("a parent name")?;
            if !declared.contains_key(&p.value) {
                return err(p.span, ParseErrorKind::UnknownNode(p.value));
            }
            if parents.iter().any(|x| x.value == p.value) {
                return err(p.span, ParseErrorKind::DuplicateParent(p.value));
            }
            parents.push(p);
        }
        if parents.is_empty() {
            return cur.unexpected("a parent name");
        }
    }
    let parent_labels: Vec<&Vec<String>> = parents.iter().map(|p| &declared[&p.value].0).collect();
    let width = if *child_observed {
        1
    } else {
        child_outcomes.len()
    };
    cur.expect(Tok::LBrace, "`{`")?;
    let mut rows: Vec<RowDecl> = Vec::new();
    let mut seen_configs: HashSet<Vec<usize>> = HashSet::new();
    loop {
        if cur.eat(&Tok::RBrace) {
            break;
        }
        let row_span = cur.expect(Tok::LBracket, "`[` or `}`")?;
        let mut labels = Vec::new();
        while let Some(Tok::Word(_)) = cur.peek().map(|t| &t.tok) {
            labels.push(cur.word("a parent outcome")?);
        }
        let close = cur.expect(Tok::RBracket, "`]`")?;
        if labels.len() != parents.len() {
            return err(
                if labels.is_empty() {
                    close
                } else {
                    labels[0].span
                },
                ParseErrorKind::ParentShape {
                    expected: parents.len(),
                    found: labels.len(),
                },
            );
        }
        let mut config = Vec::with_capacity(labels.len());
        for (k, l) in labels.iter().enumerate() {
            match parent_labels[k].iter().position(|x| *x == l.value) {
                Some(idx) => config.push(idx),
                None => {
                    return err(
                        l.span,
                        ParseErrorKind::UnknownOutcome {
                            node: parents[k].value.clone(),
                            outcome: l.value.clone(),
                        },
                    )
                }
            }
        }
        if !seen_configs.insert(config) {
            return err(row_span, ParseErrorKind::DuplicateRow);
        }
        cur.expect(Tok::Colon, "`:`")?;
        let mut values = Vec::new();
        while let Some(Tok::Word(_)) = cur.peek().map(|t| &t.tok) {
            let w = cur.word("a number")?;
            values.push(parse_number(&w)?);
        }
        if values.len() != width {
            return err(
                row_span,
                ParseErrorKind::RowShape {
                    expected: width,
                    found: values.len(),
                },
            );
        }
        cur.expect(Tok::Semi, "`;`")?;
        rows.push(RowDecl {
            parent_outcomes: labels,
            values,
            span: row_span,
        });
    }
    let expected: usize = parent_labels.iter().map(|l| l.len()).product();
    if rows.len() != expected {
        return err(
            span,
            ParseErrorKind::RowCount {
                expected,
                found: rows.len(),
            },
        );
    }
    Ok(TableDecl {
        child,
        parents,
        rows,
        span,
    })
}

fn resolve(d: &BeliefDiagram, s: &Spanned<String>) -> Result<NodeId, ParseError> {
    d.id_of(&s.value).map_err(|_| ParseError {
        span: s.span,
        kind: ParseErrorKind::UnknownNode(s.value.clone()),
    })
}

/// A diagram built from a document, plus the assertions of its evidence
/// block (not yet absorbed).
#[derive(Clone, Debug)]
pub struct LoadedNetwork {
    pub diagram: BeliefDiagram,
    pub evidence: Vec<EvidenceAssertion>,
}

impl LoadedNetwork {
    /// The diagram with evidence-block nodes marked observed but not yet
    /// absorbed, which is how [`write_network`](super::write_network) emits
    /// an evidence block.
    pub fn marked_diagram(&self) -> BeliefDiagram {
        let mut d = self.diagram.clone();
        for e in &self.evidence {
            let _ = d.set_status(
                e.node,
                NodeStatus::Observed {
                    outcome: e.outcome,
                    absorbed: false,
                },
            );
        }
        d
    }
}

impl NetworkDocument {
    /// Builds the diagram. Each row of an unobserved node is normalized to
    /// sum to one, so rows may be given in any positive scale.
    pub fn build(&self) -> Result<LoadedNetwork, ParseError> {
        let mut d = BeliefDiagram::new();
        for n in &self.nodes {
            let labels: Vec<String> = n.outcomes.iter().map(|o| o.value.clone()).collect();
            d.add_node(n.name.value.clone(), labels)
                .map_err(|_| ParseError {
                    span: n.name.span,
                    kind: ParseErrorKind::DuplicateNode(n.name.value.clone()),
                })?;
        }
        let mut staged = Vec::new();
        for t in &self.tables {
            let child = resolve(&d, &t.child)?;
            let parents: Vec<NodeId> = t
                .parents
                .iter()
                .map(|p| resolve(&d, p))
                .collect::<Result<_, _>>()?;
            let decl = self
                .nodes
                .iter()
                .find(|n| n.name.value == t.child.value)
                .expect("table child was declared");
            let observed = decl
                .observed
                .as_ref()
                .and_then(|o| decl.outcomes.iter().position(|x| x.value == o.value));
            let own = d.node(child).map(|n| n.card()).unwrap_or(0);
            let parent_axes: Vec<Axis> = parents
                .iter()
                .map(|&p| Axis::new(p, d.node(p).map(|n| n.card()).unwrap_or(0)))
                .collect();
            let configs: usize = parent_axes.iter().map(|a| a.card).product();
            let width = if observed.is_some() { 1 } else { own };
            let mut entries = vec![0.0; width * configs];
            for row in &t.rows {
                let mut config = 0;
                for (k, l) in row.parent_outcomes.iter().enumerate() {
                    let labels = &d
                        .node(parents[k])
                        .map(|n| n.outcomes.clone())
                        .unwrap_or_default();
                    let idx = labels.iter().position(|x| *x == l.value).unwrap_or(0);
                    config = config * parent_axes[k].card + idx;
                }
                let total: f64 = row.values.iter().sum();
                // Rows already summing to one are kept bit for bit, so
                // written documents read back unchanged.
                let rescale = observed.is_none() && total > 0.0 && (total - 1.0).abs() > 1e-12;
                for (x, &v) in row.values.iter().enumerate() {
                    entries[x * configs + config] = if rescale { v / total } else { v };
                }
            }
            let mut axes = Vec::with_capacity(parent_axes.len() + 1);
            if observed.is_none() {
                axes.push(Axis::new(child, own));
            }
            axes.extend(parent_axes);
            let table = PotentialTable::new(axes, entries).map_err(|_| ParseError {
                span: t.span,
                kind: ParseErrorKind::RowCount {
                    expected: configs,
                    found: t.rows.len(),
                },
            })?;
            staged.push((child, parents, table, observed));
        }
        for (child, parents, table, observed) in staged {
            let _ = d.set_node_table(child, parents, table);
            if let Some(outcome) = observed {
                let _ = d.set_status(
                    child,
                    NodeStatus::Observed {
                        outcome,
                        absorbed: true,
                    },
                );
            }
        }
        let mut evidence = Vec::new();
        for e in &self.evidence {
            let node = resolve(&d, &e.node)?;
            let outcome = d
                .node(node)
                .ok()
                .and_then(|n| n.outcome_index(&e.outcome.value))
                .ok_or_else(|| ParseError {
                    span: e.outcome.span,
                    kind: ParseErrorKind::UnknownOutcome {
                        node: e.node.value.clone(),
                        outcome: e.outcome.value.clone(),
                    },
                })?;
            evidence.push(EvidenceAssertion::new(node, outcome));
        }
        Ok(LoadedNetwork {
            diagram: d,
            evidence,
        })
    }
}

/// Parses and builds in one go.
pub fn load_network(text: &str) -> Result<LoadedNetwork, ParseError> {
    parse_network(text)?.build()
}

/// Parses an evidence file: one `Node = outcome` per line, `#` comments,
/// optional trailing `;`.
pub fn parse_evidence(text: &str, d: &BeliefDiagram) -> Result<Vec<EvidenceAssertion>, ParseError> {
    let mut cur = Cursor::new(text)?;
    let mut out: Vec<EvidenceAssertion> = Vec::new();
    while cur.peek().is_some() {
        let node = cur.word("a node name")?;
        cur.expect(Tok::Equals, "`=`")?;
        let outcome = cur.word("an outcome")?;
        cur.eat(&Tok::Semi);
        let Ok(id) = d.id_of(&node.value) else {
            return err(node.span, ParseErrorKind::UnknownNode(node.value));
        };
        let Some(idx) = d
            .node(id)
            .ok()
            .and_then(|n| n.outcome_index(&outcome.value))
        else {
            return err(
                outcome.span,
                ParseErrorKind::UnknownOutcome {
                    node: node.value,
                    outcome: outcome.value,
                },
            );
        };
        if out.iter().any(|e| e.node == id) {
            return err(node.span, ParseErrorKind::DuplicateAssertion(node.value));
        }
        out.push(EvidenceAssertion::new(id, idx));
    }
    let _ = cur.next_span();
    Ok(out)
}
