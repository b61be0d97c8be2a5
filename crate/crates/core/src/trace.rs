//! Line-numbered proof traces.
//!
//! A trace is a header line followed by one line per deduction step:
//!
//! ```text
//! #apf n=2 m=3 fp=<sha256 of the canonical order list>
//! 1|0|Premises|-|PREM|-
//! 2|1|AssumeNonDict|-|NODICT|-
//! 3|1|Prop|R[0](s,a,b)=T|SPU|1
//! ...
//! ```
//!
//! Fields are line number, depth, kind, body (a literal or `-`), rule tag
//! and a comma-separated list of referenced earlier lines (or `-`).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::axioms::{Cell, Conflict, ConflictKind, Constraint, ConstraintSet, Literal, Rule, Step};
use crate::error::{Error, Result};
use crate::model::{alt_from_letter, Config, Domain, ProfileId};
use crate::search::{Node, Refutation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LineKind {
    Premises,
    AssumeNonDict,
    Case,
    Prop,
    Conflict,
    Discharge,
    CaseClose,
    Conclude,
}

const KINDS: [(LineKind, &str); 8] = [
    (LineKind::Premises, "Premises"),
    (LineKind::AssumeNonDict, "AssumeNonDict"),
    (LineKind::Case, "Case"),
    (LineKind::Prop, "Prop"),
    (LineKind::Conflict, "Conflict"),
    (LineKind::Discharge, "Discharge"),
    (LineKind::CaseClose, "CaseClose"),
    (LineKind::Conclude, "Conclude"),
];

impl LineKind {
    pub fn token(self) -> &'static str {
        KINDS.iter().find(|(k, _)| *k == self).map(|(_, t)| *t).unwrap_or("?")
    }

    pub fn all() -> impl Iterator<Item = LineKind> {
        KINDS.iter().map(|(k, _)| *k)
    }
}

impl FromStr for LineKind {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        KINDS.iter().find(|(_, t)| *t == s).map(|(k, _)| *k).ok_or(())
    }
}

/// Justification tag of a trace line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleTag {
    Prem,
    NoDict,
    Case,
    Spu,
    Spt,
    Iia,
    Comp,
    ConfTrans,
    ConfComp,
    ConfDict(usize),
    Disch,
    Concl,
}

impl RuleTag {
    /// Tags that need no parameter, for enumeration in tests and tools.
    pub const SIMPLE: [RuleTag; 11] = [
        RuleTag::Prem,
        RuleTag::NoDict,
        RuleTag::Case,
        RuleTag::Spu,
        RuleTag::Spt,
        RuleTag::Iia,
        RuleTag::Comp,
        RuleTag::ConfTrans,
        RuleTag::ConfComp,
        RuleTag::Disch,
        RuleTag::Concl,
    ];
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleTag::Prem => write!(f, "PREM"),
            RuleTag::NoDict => write!(f, "NODICT"),
            RuleTag::Case => write!(f, "CASE"),
            RuleTag::Spu => write!(f, "SPU"),
            RuleTag::Spt => write!(f, "SPT"),
            RuleTag::Iia => write!(f, "IIA"),
            RuleTag::Comp => write!(f, "COMP"),
            RuleTag::ConfTrans => write!(f, "CONF-TRANS"),
            RuleTag::ConfComp => write!(f, "CONF-COMP"),
            RuleTag::ConfDict(k) => write!(f, "CONF-DICT:{k}"),
            RuleTag::Disch => write!(f, "DISCH"),
            RuleTag::Concl => write!(f, "CONCL"),
        }
    }
}

impl FromStr for RuleTag {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        if let Some(k) = s.strip_prefix("CONF-DICT:") {
            // reject signs, leading zeros and other non-canonical spellings
            if k.is_empty() || !k.bytes().all(|b| b.is_ascii_digit()) || (k.len() > 1 && k.starts_with('0')) {
                return Err(());
            }
            return k.parse().map(RuleTag::ConfDict).map_err(|_| ());
        }
        RuleTag::SIMPLE.iter().copied().find(|t| t.to_string() == s).ok_or(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceLine {
    pub number: u32,
    pub depth: u32,
    pub kind: LineKind,
    pub literal: Option<Literal>,
    pub rule: RuleTag,
    pub refs: Vec<u32>,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}|", self.number, self.depth, self.kind.token())?;
        match &self.literal {
            Some(l) => write!(f, "{l}")?,
            None => write!(f, "-")?,
        }
        write!(f, "|{}|", self.rule)?;
        if self.refs.is_empty() {
            write!(f, "-")
        } else {
            let refs: Vec<String> = self.refs.iter().map(|r| r.to_string()).collect();
            write!(f, "{}", refs.join(","))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceHeader {
    pub config: Config,
    /// Fingerprint of the canonical weak-order list.
    pub fingerprint: String,
}

impl fmt::Display for TraceHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "#apf n={} m={} fp={}",
            self.config.voters(),
            self.config.alternatives(),
            self.fingerprint
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTrace {
    pub header: TraceHeader,
    pub lines: Vec<TraceLine>,
}

impl ProofTrace {
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.lines.len() * 40);
        out.push_str(&self.header.to_string());
        out.push('\n');
        for l in &self.lines {
            out.push_str(&l.to_string());
            out.push('\n');
        }
        out
    }

    pub fn line(&self, number: u32) -> Option<&TraceLine> {
        self.lines.get(number.checked_sub(1)? as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed header: {0}")]
    Header(String),
    #[error("expected 6 '|'-separated fields, found {0}")]
    FieldCount(usize),
    #[error("bad integer {0:?}")]
    Integer(String),
    #[error("line number {found} out of sequence, expected {expected}")]
    LineNumber { expected: u32, found: u32 },
    #[error("unknown line kind {0:?}")]
    UnknownKind(String),
    #[error("unknown rule tag {0:?}")]
    UnknownRule(String),
    #[error("malformed literal {0:?}")]
    Literal(String),
    #[error("reference {0} does not point to an earlier line")]
    DanglingRef(u32),
    #[error("depth {found} does not match scope depth {expected}")]
    DepthMismatch { expected: u32, found: u32 },
    #[error("{0} closes a scope that is not open")]
    DepthUnderflow(&'static str),
    #[error("{0}")]
    Structure(String),
}

/// A syntactic or structural defect with its 1-based position.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(line: usize, column: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, column, kind }
    }
}

/// Parses a literal such as `R[14](s,b,c)=T`.
pub fn parse_literal(s: &str) -> Option<Literal> {
    let rest = s.strip_prefix("R[")?;
    let (pid, rest) = rest.split_once(']')?;
    if pid.is_empty() || !pid.bytes().all(|b| b.is_ascii_digit()) || (pid.len() > 1 && pid.starts_with('0')) {
        return None;
    }
    let pid: u32 = pid.parse().ok()?;
    let rest = rest.strip_prefix("(s,")?;
    let mut chars = rest.chars();
    let x = alt_from_letter(chars.next()?)?;
    if chars.next()? != ',' {
        return None;
    }
    let y = alt_from_letter(chars.next()?)?;
    let value = match chars.as_str() {
        ")=T" => true,
        ")=F" => false,
        _ => return None,
    };
    if x == y {
        return None;
    }
    Some(Literal::new(Cell::new(ProfileId(pid), x, y), value))
}

fn parse_header(text: &str) -> std::result::Result<TraceHeader, ParseErrorKind> {
    let bad = || ParseErrorKind::Header(text.to_string());
    let rest = text.strip_prefix("#apf ").ok_or_else(bad)?;
    let fields: Vec<&str> = rest.split(' ').collect();
    if fields.len() != 3 {
        return Err(bad());
    }
    let num = |f: &str, key: &str| -> std::result::Result<usize, ParseErrorKind> {
        f.strip_prefix(key).and_then(|v| v.parse().ok()).ok_or_else(bad)
    };
    let n = num(fields[0], "n=")?;
    let m = num(fields[1], "m=")?;
    let fp = fields[2].strip_prefix("fp=").ok_or_else(bad)?;
    if fp.len() != 64 || !fp.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(bad());
    }
    let config = Config::with_guard(n, m, true).map_err(|e| ParseErrorKind::Header(e.to_string()))?;
    Ok(TraceHeader { config, fingerprint: fp.to_string() })
}

/// Parses trace text, checking syntax, line numbering, reference bounds and
/// the scope discipline of depths. Semantic validity is the checker's job.
pub fn parse_trace(text: &str) -> std::result::Result<ProofTrace, ParseError> {
    let mut rows = text.lines().enumerate();
    let (_, first) = rows
        .next()
        .ok_or_else(|| ParseError::new(1, 1, ParseErrorKind::Header("empty input".into())))?;
    let header = parse_header(first).map_err(|k| ParseError::new(1, 1, k))?;

    let mut lines = Vec::new();
    // kinds of the open scopes: AssumeNonDict or Case
    let mut scopes: Vec<LineKind> = Vec::new();
    let mut last_row = 1;
    for (row, raw) in rows {
        let row = row + 1;
        if raw.is_empty() {
            continue;
        }
        last_row = row;
        let fields: Vec<&str> = raw.split('|').collect();
        if fields.len() != 6 {
            return Err(ParseError::new(row, 1, ParseErrorKind::FieldCount(fields.len())));
        }
        let mut cols = Vec::with_capacity(6);
        let mut c = 1;
        for f in &fields {
            cols.push(c);
            c += f.chars().count() + 1;
        }
        let err = |i: usize, kind| ParseError::new(row, cols[i], kind);
        let int = |i: usize| -> std::result::Result<u32, ParseError> {
            let f = fields[i];
            if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) || (f.len() > 1 && f.starts_with('0')) {
                return Err(err(i, ParseErrorKind::Integer(f.to_string())));
            }
            f.parse().map_err(|_| err(i, ParseErrorKind::Integer(f.to_string())))
        };

        let number = int(0)?;
        let expected = lines.len() as u32 + 1;
        if number != expected {
            return Err(err(0, ParseErrorKind::LineNumber { expected, found: number }));
        }
        let depth = int(1)?;
        let kind: LineKind = fields[2]
            .parse()
            .map_err(|_| err(2, ParseErrorKind::UnknownKind(fields[2].to_string())))?;
        let literal = match fields[3] {
            "-" => None,
            s => Some(parse_literal(s).ok_or_else(|| err(3, ParseErrorKind::Literal(s.to_string())))?),
        };
        let rule: RuleTag = fields[4]
            .parse()
            .map_err(|_| err(4, ParseErrorKind::UnknownRule(fields[4].to_string())))?;
        let refs = match fields[5] {
            "-" => Vec::new(),
            s => {
                let mut refs = Vec::new();
                for part in s.split(',') {
                    if part.is_empty() || !part.bytes().all(|b| b.is_ascii_digit()) || (part.len() > 1 && part.starts_with('0')) {
                        return Err(err(5, ParseErrorKind::Integer(part.to_string())));
                    }
                    let r: u32 = part.parse().map_err(|_| err(5, ParseErrorKind::Integer(part.to_string())))?;
                    if r == 0 || r >= number {
                        return Err(err(5, ParseErrorKind::DanglingRef(r)));
                    }
                    refs.push(r);
                }
                refs
            }
        };

        let expected_depth = match kind {
            LineKind::AssumeNonDict | LineKind::Case => {
                scopes.push(kind);
                scopes.len() as u32
            }
            LineKind::Discharge | LineKind::Conclude => {
                let opener = if kind == LineKind::Discharge { LineKind::Case } else { LineKind::AssumeNonDict };
                match scopes.pop() {
                    Some(k) if k == opener => scopes.len() as u32,
                    Some(_) => {
                        return Err(err(
                            2,
                            ParseErrorKind::Structure(format!("{} does not match the innermost open scope", kind.token())),
                        ))
                    }
                    None => return Err(err(1, ParseErrorKind::DepthUnderflow(kind.token()))),
                }
            }
            _ => scopes.len() as u32,
        };
        if depth != expected_depth {
            return Err(err(1, ParseErrorKind::DepthMismatch { expected: expected_depth, found: depth }));
        }
        lines.push(TraceLine { number, depth, kind, literal, rule, refs });
        if kind == LineKind::Conclude && scopes.is_empty() {
            // nothing may follow the conclusion
            if let Some((row, _)) = text.lines().enumerate().skip(row).find(|(_, l)| !l.is_empty()) {
                return Err(ParseError::new(
                    row + 1,
                    1,
                    ParseErrorKind::Structure("lines after the conclusion".into()),
                ));
            }
        }
    }
    match lines.last() {
        Some(l) if l.kind == LineKind::Conclude && scopes.is_empty() => Ok(ProofTrace { header, lines }),
        _ => Err(ParseError::new(
            last_row,
            1,
            ParseErrorKind::Structure("trace does not end with a conclusion at depth 0".into()),
        )),
    }
}

/// Serializes a refutation into a trace.
pub fn emit_trace(refutation: &Refutation, cs: &ConstraintSet) -> Result<ProofTrace> {
    if cs.config() != &refutation.config {
        return Err(Error::Structure("constraint set and refutation disagree on the configuration".into()));
    }
    let domain = cs.domain();
    let mut e = Emitter { cs, lines: Vec::new(), cell_line: HashMap::new(), depth: 1 };
    e.push(LineKind::Premises, 0, None, RuleTag::Prem, vec![]);
    e.push(LineKind::AssumeNonDict, 1, None, RuleTag::NoDict, vec![]);
    for step in &refutation.root_steps {
        e.step(step)?;
    }
    let bottom = e.node(&refutation.root)?;
    e.push(LineKind::Conclude, 0, None, RuleTag::Concl, vec![2, bottom]);
    Ok(ProofTrace {
        header: TraceHeader { config: *domain.config(), fingerprint: domain.fingerprint() },
        lines: e.lines,
    })
}

struct Emitter<'a> {
    cs: &'a ConstraintSet,
    lines: Vec<TraceLine>,
    cell_line: HashMap<Cell, u32>,
    depth: u32,
}

impl Emitter<'_> {
    fn push(&mut self, kind: LineKind, depth: u32, literal: Option<Literal>, rule: RuleTag, refs: Vec<u32>) -> u32 {
        let number = self.lines.len() as u32 + 1;
        if let Some(l) = literal {
            if matches!(kind, LineKind::Case | LineKind::Prop) {
                self.cell_line.insert(l.cell, number);
            }
        }
        self.lines.push(TraceLine { number, depth, kind, literal, rule, refs });
        number
    }

    fn line_of(&self, cell: &Cell) -> Result<u32> {
        self.cell_line
            .get(cell)
            .copied()
            .ok_or_else(|| Error::Structure(format!("antecedent {cell} has no line in scope")))
    }

    fn step(&mut self, step: &Step) -> Result<u32> {
        let ante = |e: &Self| -> Result<Vec<u32>> { step.reason.antecedents.iter().map(|c| e.line_of(c)).collect() };
        let (rule, refs) = match step.reason.rule {
            Rule::Unanimity => (RuleTag::Spu, vec![1]),
            Rule::Transitivity => (RuleTag::Spt, ante(self)?),
            Rule::Iia => (RuleTag::Iia, ante(self)?),
            Rule::Completeness => (RuleTag::Comp, ante(self)?),
            Rule::NonDictClause(_) => {
                let mut refs = vec![2];
                refs.extend(ante(self)?);
                (RuleTag::NoDict, refs)
            }
            Rule::Decision => return Err(Error::Structure(format!("decision on {} inside a propagation run", step.cell))),
        };
        Ok(self.push(LineKind::Prop, self.depth, Some(step.literal()), rule, refs))
    }

    /// Emits a node and returns the line that derives ⊥ in the current scope.
    fn node(&mut self, node: &Node) -> Result<u32> {
        match node {
            Node::Leaf(c) => self.conflict(c),
            Node::Split { cell, branches } => {
                let mut discharges = Vec::new();
                for b in branches {
                    let lit = Literal::new(*cell, b.value);
                    self.depth += 1;
                    let mark = self.cell_line.clone();
                    let case = self.push(LineKind::Case, self.depth, Some(lit), RuleTag::Case, vec![]);
                    for s in &b.steps {
                        self.step(s)?;
                    }
                    let bottom = self.node(&b.outcome)?;
                    self.cell_line = mark;
                    self.depth -= 1;
                    discharges.push(self.push(
                        LineKind::Discharge,
                        self.depth,
                        Some(lit),
                        RuleTag::Disch,
                        vec![case, bottom],
                    ));
                }
                if discharges.len() >= 2 {
                    Ok(self.push(LineKind::CaseClose, self.depth, None, RuleTag::Disch, discharges))
                } else {
                    discharges
                        .pop()
                        .ok_or_else(|| Error::Structure(format!("split on {cell} has no branches")))
                }
            }
        }
    }

    fn conflict(&mut self, c: &Conflict) -> Result<u32> {
        let rule = match (c.kind, &c.witness) {
            (ConflictKind::TransitivityViolation, Constraint::Transitivity { .. }) => RuleTag::ConfTrans,
            (ConflictKind::CompletenessViolation, Constraint::Completeness { .. }) => RuleTag::ConfComp,
            (ConflictKind::DictatorshipViolation(k), Constraint::NonDictatorship { voter }) if k == *voter => {
                RuleTag::ConfDict(k)
            }
            (kind, _) => return Err(Error::Structure(format!("conflict kind {kind} cannot close a trace branch"))),
        };
        let mut refs = if matches!(rule, RuleTag::ConfDict(_)) { vec![2] } else { vec![] };
        for cell in self.cs.constraint_cells(&c.witness) {
            refs.push(self.line_of(&cell)?);
        }
        Ok(self.push(LineKind::Conflict, self.depth, None, rule, refs))
    }
}

/// Convenience: canonical refutation and trace for `cfg`.
pub fn prove(cfg: &Config) -> Result<(Refutation, ProofTrace)> {
    let cs = crate::axioms::build_constraints(cfg, true);
    let r = crate::search::refute_with(&cs, &mut crate::axioms::PropagationOrder::Canonical)?;
    let t = emit_trace(&r, &cs)?;
    Ok((r, t))
}

/// Checks that `domain` can host the literal (profile and alternatives in
/// range).
pub fn literal_in_range(domain: &Domain, l: &Literal) -> bool {
    l.cell.profile.0 < domain.num_profiles()
        && l.cell.x() < domain.alternatives()
        && l.cell.y() < domain.alternatives()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_round_trip() {
        let l = Literal::new(Cell::new(ProfileId(14), 1, 2), true);
        assert_eq!(l.to_string(), "R[14](s,b,c)=T");
        assert_eq!(parse_literal("R[14](s,b,c)=T"), Some(l));
        for bad in ["R[014](s,b,c)=T", "R[1](s,b,b)=T", "R[1](s,b,c)=X", "R[1](p,b,c)=T", "R[](s,a,b)=F"] {
            assert_eq!(parse_literal(bad), None, "{bad}");
        }
    }

    #[test]
    fn rule_tags_round_trip() {
        for t in RuleTag::SIMPLE.iter().copied().chain([RuleTag::ConfDict(0), RuleTag::ConfDict(2)]) {
            assert_eq!(t.to_string().parse::<RuleTag>(), Ok(t));
        }
        assert!("CONF-DICT:".parse::<RuleTag>().is_err());
        assert!("CONF-DICT:01".parse::<RuleTag>().is_err());
        assert!("SPX".parse::<RuleTag>().is_err());
    }

    #[test]
    fn emitted_trace_round_trips() {
        let (_, t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        let text = t.to_text();
        assert_eq!(parse_trace(&text).unwrap(), t);
        let last = t.lines.last().unwrap();
        assert_eq!(last.kind, LineKind::Conclude);
        assert_eq!(last.depth, 0);
    }

    #[test]
    fn root_split_lines() {
        let (_, t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        let cases: Vec<_> = t.lines.iter().filter(|l| l.kind == LineKind::Case && l.depth == 2).collect();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases[0].literal.unwrap().to_string(), "R[1](s,b,c)=T");
        assert_eq!(cases[1].literal.unwrap().to_string(), "R[1](s,b,c)=F");
    }

    fn degenerate() -> String {
        "#apf n=2 m=3 fp=".to_string() + &"0".repeat(64) + "\n"
    }

    #[test]
    fn parse_errors_are_distinct() {
        let h = degenerate();
        type Expect = fn(&ParseErrorKind) -> bool;
        let cases: Vec<(String, Expect)> = vec![
            (format!("{h}1|0|Premises|-|PREM|-\n3|1|AssumeNonDict|-|NODICT|-\n"), |k| {
                matches!(k, ParseErrorKind::LineNumber { expected: 2, found: 3 })
            }),
            (format!("{h}1|0|Premises|-|PREM|-\n2|1|AssumeNonDict|-|NODICT|5\n"), |k| {
                matches!(k, ParseErrorKind::DanglingRef(5))
            }),
            (format!("{h}1|0|Premises|-|PREM|-\n2|0|Discharge|-|DISCH|-\n"), |k| {
                matches!(k, ParseErrorKind::DepthUnderflow(_))
            }),
            (format!("{h}1|0|Premises|-|PREM|-\n2|2|AssumeNonDict|-|NODICT|-\n"), |k| {
                matches!(k, ParseErrorKind::DepthMismatch { expected: 1, found: 2 })
            }),
            (format!("{h}1|0|Premises|-|SPW|-\n"), |k| matches!(k, ParseErrorKind::UnknownRule(_))),
            (format!("{h}1|0|Premises|-|PREM|-\n2|1|AssumeNonDict|-|NODICT|-\n"), |k| {
                matches!(k, ParseErrorKind::Structure(_))
            }),
            (format!("{h}1|0|Premises|-|PREM\n"), |k| matches!(k, ParseErrorKind::FieldCount(5))),
        ];
        for (text, pred) in cases {
            let e = parse_trace(&text).unwrap_err();
            assert!(pred(&e.kind), "{text}\n=> {e}");
        }
    }

    #[test]
    fn parse_error_positions() {
        let text = format!("{}1|0|Premises|-|PREM|-\n2|1|AssumeNonDict|-|NODICT|0\n", degenerate());
        let e = parse_trace(&text).unwrap_err();
        assert_eq!((e.line, e.column), (3, 28));
    }
}
