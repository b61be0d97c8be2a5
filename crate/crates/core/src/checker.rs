//! Independent proof-trace checker.
//!
//! The checker re-validates every line against the semantics of its rule
//! using only the profile domain (weak orders and profile decoding). It does
//! not call the propagation engine, so a propagation bug cannot vouch for
//! its own output.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

use crate::axioms::{Cell, Literal};
use crate::model::{Domain, ProfileId};
use crate::trace::{literal_in_range, parse_trace, LineKind, ProofTrace, RuleTag, TraceLine};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    Parse(String),
    Header(String),
    /// A rule tag used on a line kind it cannot justify, or malformed fields.
    Rule(String),
    /// References to missing, out-of-scope or wrong lines.
    Antecedents(String),
    /// The cited facts do not entail the line's literal under the rule.
    NotEntailed(String),
    /// The cited facts do not falsify the constraint the conflict names.
    Conflict(String),
    /// A case analysis that does not cover both values of its cell.
    Coverage(String),
    Scope(String),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (tag, msg) = match self {
            Violation::Parse(m) => ("parse", m),
            Violation::Header(m) => ("header", m),
            Violation::Rule(m) => ("rule", m),
            Violation::Antecedents(m) => ("antecedents", m),
            Violation::NotEntailed(m) => ("not entailed", m),
            Violation::Conflict(m) => ("conflict", m),
            Violation::Coverage(m) => ("coverage", m),
            Violation::Scope(m) => ("scope", m),
        };
        write!(f, "{tag}: {msg}")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Valid,
    /// `line` is the trace line number (0 for the header). For parse
    /// failures it is the text row instead.
    Invalid { line: usize, violation: Violation },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub status: Status,
    /// Lines checked, by rule tag.
    pub stats: BTreeMap<String, usize>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.status == Status::Valid
    }

    pub fn to_json(&self) -> serde_json::Value {
        let status = match &self.status {
            Status::Valid => json!({ "valid": true }),
            Status::Invalid { line, violation } => {
                json!({ "valid": false, "line": line, "violation": violation.to_string() })
            }
        };
        json!({ "status": status, "rules": self.stats })
    }
}

/// Parses and checks trace text.
pub fn check_text(text: &str) -> Verdict {
    match parse_trace(text) {
        Ok(t) => check_trace(&t),
        Err(e) => Verdict {
            status: Status::Invalid { line: e.line, violation: Violation::Parse(e.to_string()) },
            stats: BTreeMap::new(),
        },
    }
}

pub fn check_trace(trace: &ProofTrace) -> Verdict {
    let domain = Domain::new(trace.header.config);
    let mut c = Checker::new(&domain, trace);
    let status = if trace.header.fingerprint != domain.fingerprint() {
        Status::Invalid {
            line: 0,
            violation: Violation::Header("order fingerprint does not match the configuration".into()),
        }
    } else {
        match c.run() {
            Ok(()) => Status::Valid,
            Err((line, violation)) => Status::Invalid { line: line as usize, violation },
        }
    };
    Verdict { status, stats: c.stats }
}

struct Scope {
    start: u32,
    case: Option<(Literal, u32)>,
    bottom: Option<u32>,
    discharged: Vec<(Literal, u32)>,
}

struct Checker<'a> {
    domain: &'a Domain,
    trace: &'a ProofTrace,
    visible: Vec<bool>,
    facts: HashMap<Cell, (bool, u32)>,
    /// Earliest visible line per IIA class.
    class_first: HashMap<(usize, usize, u32), u32>,
    scopes: Vec<Scope>,
    voter_clauses: Vec<Option<HashMap<Cell, bool>>>,
    stats: BTreeMap<String, usize>,
}

type Check<T = ()> = Result<T, Violation>;

impl<'a> Checker<'a> {
    fn new(domain: &'a Domain, trace: &'a ProofTrace) -> Self {
        Checker {
            domain,
            trace,
            visible: vec![false; trace.lines.len() + 1],
            facts: HashMap::new(),
            class_first: HashMap::new(),
            scopes: Vec::new(),
            voter_clauses: vec![None; domain.voters()],
            stats: BTreeMap::new(),
        }
    }

    fn run(&mut self) -> Result<(), (u32, Violation)> {
        for line in &self.trace.lines {
            self.line(line).map_err(|v| (line.number, v))?;
            self.visible[line.number as usize] = true;
            *self.stats.entry(line.rule.to_string()).or_default() += 1;
        }
        Ok(())
    }

    fn line(&mut self, l: &TraceLine) -> Check {
        if l.number == 1 && l.kind != LineKind::Premises {
            return Err(Violation::Scope("line 1 must state the premises".into()));
        }
        if l.number == 2 && l.kind != LineKind::AssumeNonDict {
            return Err(Violation::Scope("line 2 must assume non-dictatorship".into()));
        }
        if let Some(top) = self.scopes.last() {
            if top.bottom.is_some() && !matches!(l.kind, LineKind::Discharge | LineKind::Conclude) {
                return Err(Violation::Scope("only a discharge may follow a contradiction".into()));
            }
        }
        for &r in &l.refs {
            if r >= l.number || !self.visible[r as usize] {
                return Err(Violation::Antecedents(format!("line {r} is not in scope")));
            }
        }
        if let Some(lit) = &l.literal {
            if !literal_in_range(self.domain, lit) {
                return Err(Violation::Rule(format!("{lit} is outside the domain")));
            }
        }
        let expect_literal = matches!(l.kind, LineKind::Case | LineKind::Prop | LineKind::Discharge);
        if expect_literal != l.literal.is_some() {
            return Err(Violation::Rule(format!("{} line with wrong body", l.kind.token())));
        }
        match l.kind {
            LineKind::Premises => {
                self.require_rule(l, RuleTag::Prem)?;
                self.require_refs(l, &[])
            }
            LineKind::AssumeNonDict => {
                self.require_rule(l, RuleTag::NoDict)?;
                self.require_refs(l, &[])?;
                self.scopes.push(Scope { start: l.number, case: None, bottom: None, discharged: Vec::new() });
                Ok(())
            }
            LineKind::Case => self.case(l),
            LineKind::Prop => self.prop(l),
            LineKind::Conflict => self.conflict(l),
            LineKind::Discharge => self.discharge(l),
            LineKind::CaseClose => self.case_close(l),
            LineKind::Conclude => {
                self.require_rule(l, RuleTag::Concl)?;
                let top = self.scopes.last().ok_or_else(|| Violation::Scope("nothing to conclude".into()))?;
                if top.case.is_some() {
                    return Err(Violation::Scope("conclusion inside an open case".into()));
                }
                let bottom = top
                    .bottom
                    .ok_or_else(|| Violation::Coverage("non-dictatorship assumption never contradicted".into()))?;
                self.require_refs(l, &[2, bottom])?;
                self.close_scope(l.number);
                Ok(())
            }
        }
    }

    fn require_rule(&self, l: &TraceLine, rule: RuleTag) -> Check {
        if l.rule == rule {
            Ok(())
        } else {
            Err(Violation::Rule(format!("{} line cannot be justified by {}", l.kind.token(), l.rule)))
        }
    }

    fn require_refs(&self, l: &TraceLine, refs: &[u32]) -> Check {
        if l.refs == refs {
            Ok(())
        } else {
            Err(Violation::Antecedents(format!("expected references {refs:?}, found {:?}", l.refs)))
        }
    }

    fn top(&mut self) -> Check<&mut Scope> {
        self.scopes.last_mut().ok_or_else(|| Violation::Scope("no open scope".into()))
    }

    fn assert_fact(&mut self, lit: Literal, line: u32) -> Check {
        if let Some(&(_, at)) = self.facts.get(&lit.cell) {
            return Err(Violation::Scope(format!("{} already settled on line {at}", lit.cell)));
        }
        self.facts.insert(lit.cell, (lit.value, line));
        self.class_first.entry(self.class_key(lit.cell)).or_insert(line);
        Ok(())
    }

    /// Literal stated by a referenced Case or Prop line.
    fn fact(&self, r: u32) -> Check<Literal> {
        let line = self.trace.line(r).ok_or_else(|| Violation::Antecedents(format!("no line {r}")))?;
        match (line.kind, line.literal) {
            (LineKind::Case | LineKind::Prop, Some(lit)) => Ok(lit),
            _ => Err(Violation::Antecedents(format!("line {r} states no social preference"))),
        }
    }

    fn facts_of(&self, refs: &[u32]) -> Check<Vec<Literal>> {
        let distinct: HashSet<_> = refs.iter().collect();
        if distinct.len() != refs.len() {
            return Err(Violation::Antecedents("repeated reference".into()));
        }
        refs.iter().map(|&r| self.fact(r)).collect()
    }

    fn close_scope(&mut self, end: u32) {
        if let Some(scope) = self.scopes.pop() {
            for n in scope.start..=end {
                if !self.visible[n as usize] && n != end {
                    continue;
                }
                self.visible[n as usize] = false;
                let line = &self.trace.lines[n as usize - 1];
                if let (LineKind::Case | LineKind::Prop, Some(lit)) = (line.kind, line.literal) {
                    if self.facts.get(&lit.cell).map(|f| f.1) == Some(n) {
                        self.facts.remove(&lit.cell);
                    }
                }
            }
            self.class_first.retain(|_, &mut first| first < scope.start);
        }
    }

    fn case(&mut self, l: &TraceLine) -> Check {
        self.require_rule(l, RuleTag::Case)?;
        self.require_refs(l, &[])?;
        let lit = l.literal.expect("checked above");
        let top = self.top()?;
        if let Some((first, _)) = top.discharged.first() {
            if first.cell != lit.cell {
                return Err(Violation::Scope(format!("case on {} beside a case on {}", lit.cell, first.cell)));
            }
            if top.discharged.iter().any(|(d, _)| d.value == lit.value) {
                return Err(Violation::Scope(format!("{lit} was already considered")));
            }
        }
        self.assert_fact(lit, l.number)?;
        self.scopes.push(Scope { start: l.number, case: Some((lit, l.number)), bottom: None, discharged: Vec::new() });
        Ok(())
    }

    fn prop(&mut self, l: &TraceLine) -> Check {
        let lit = l.literal.expect("checked above");
        if !self.top()?.discharged.is_empty() {
            return Err(Violation::Scope("derivation after a closed case".into()));
        }
        let (p, x, y, v) = (lit.cell.profile, lit.cell.x(), lit.cell.y(), lit.value);
        match l.rule {
            RuleTag::Spu => {
                self.require_refs(l, &[1])?;
                let holds = if v { self.unanimous(p, x, y) } else { self.unanimous(p, y, x) };
                if !holds {
                    return Err(Violation::NotEntailed(format!("voters are not unanimous for {lit}")));
                }
            }
            RuleTag::Comp => {
                let f = self.single(l)?;
                if !(v && f == Literal::new(lit.cell.converse(), false)) {
                    return Err(Violation::NotEntailed(format!("{f} does not complete to {lit}")));
                }
            }
            RuleTag::Iia => {
                let f = self.single(l)?;
                if f.cell.profile == p || (f.cell.x(), f.cell.y(), f.value) != (x, y, v) {
                    return Err(Violation::NotEntailed(format!("{f} does not carry over to {lit}")));
                }
                if !self.agree(f.cell.profile, p, x, y) {
                    return Err(Violation::NotEntailed(format!(
                        "profiles {} and {} disagree on {}{}",
                        f.cell.profile,
                        p,
                        crate::model::alt_letter(x),
                        crate::model::alt_letter(y)
                    )));
                }
                let first = self.class_first.get(&self.class_key(lit.cell)).copied();
                if first != Some(l.refs[0]) {
                    return Err(Violation::Antecedents(format!(
                        "IIA must cite the earliest line of its class ({first:?})"
                    )));
                }
            }
            RuleTag::Spt => {
                if l.refs.len() != 2 {
                    return Err(Violation::Antecedents("SPT cites exactly two lines".into()));
                }
                let fs = self.facts_of(&l.refs)?;
                if !transitivity_entails(&fs, lit) {
                    return Err(Violation::NotEntailed(format!("{} and {} do not force {lit}", fs[0], fs[1])));
                }
            }
            RuleTag::NoDict => {
                if l.refs.first() != Some(&2) {
                    return Err(Violation::Antecedents("voter-clause step must cite the assumption".into()));
                }
                let fs = self.facts_of(&l.refs[1..])?;
                let ok = (0..self.domain.voters()).any(|k| {
                    let clause = self.clause(k);
                    clause.get(&lit.cell) == Some(&v)
                        && fs.len() + 1 == clause.len()
                        && fs.iter().all(|f| clause.get(&f.cell) == Some(&!f.value))
                });
                if !ok {
                    return Err(Violation::NotEntailed(format!("no voter clause is unit on {lit}")));
                }
            }
            other => {
                return Err(Violation::Rule(format!("Prop line cannot be justified by {other}")));
            }
        }
        self.assert_fact(lit, l.number)
    }

    fn single(&self, l: &TraceLine) -> Check<Literal> {
        match l.refs.as_slice() {
            [r] => self.fact(*r),
            _ => Err(Violation::Antecedents(format!("{} cites exactly one line", l.rule))),
        }
    }

    fn conflict(&mut self, l: &TraceLine) -> Check {
        match l.rule {
            RuleTag::ConfComp => {
                let fs = self.facts_of(&l.refs)?;
                let ok = matches!(fs.as_slice(), [a, b] if !a.value && !b.value && a.cell == b.cell.converse());
                if !ok {
                    return Err(Violation::Conflict("cited lines do not reject both orientations of a pair".into()));
                }
            }
            RuleTag::ConfTrans => {
                let fs = self.facts_of(&l.refs)?;
                if fs.len() != 3 || !transitivity_violated(&fs) {
                    return Err(Violation::Conflict("cited lines do not violate transitivity".into()));
                }
            }
            RuleTag::ConfDict(k) => {
                if k >= self.domain.voters() {
                    return Err(Violation::Rule(format!("no voter {k}")));
                }
                if l.refs.first() != Some(&2) {
                    return Err(Violation::Antecedents("dictatorship conflict must cite the assumption".into()));
                }
                let fs = self.facts_of(&l.refs[1..])?;
                let clause = self.clause(k);
                let ok = fs.len() == clause.len() && fs.iter().all(|f| clause.get(&f.cell) == Some(&!f.value));
                if !ok {
                    return Err(Violation::Conflict(format!(
                        "cited lines do not show voter {} dictating",
                        crate::model::voter_name(k)
                    )));
                }
            }
            other => return Err(Violation::Rule(format!("Conflict line cannot be justified by {other}"))),
        }
        self.top()?.bottom = Some(l.number);
        Ok(())
    }

    fn discharge(&mut self, l: &TraceLine) -> Check {
        self.require_rule(l, RuleTag::Disch)?;
        let lit = l.literal.expect("checked above");
        let top = self.top()?;
        let (case, case_line) = top.case.ok_or_else(|| Violation::Scope("discharge outside a case".into()))?;
        if case != lit {
            return Err(Violation::Scope(format!("discharges {lit} but the case assumed {case}")));
        }
        let bottom = top.bottom.ok_or_else(|| Violation::Coverage(format!("case {case} is not contradicted")))?;
        self.require_refs(l, &[case_line, bottom])?;
        self.close_scope(l.number);
        self.top()?.discharged.push((lit, l.number));
        Ok(())
    }

    fn case_close(&mut self, l: &TraceLine) -> Check {
        self.require_rule(l, RuleTag::Disch)?;
        let top = self.top()?;
        let covered = match top.discharged.as_slice() {
            [(a, _), (b, _)] => a.cell == b.cell && a.value != b.value,
            _ => false,
        };
        if !covered {
            return Err(Violation::Coverage("cases do not cover both values of one cell".into()));
        }
        let lines: Vec<u32> = top.discharged.iter().map(|d| d.1).collect();
        if l.refs != lines {
            return Err(Violation::Antecedents(format!("expected references {lines:?}, found {:?}", l.refs)));
        }
        top.bottom = Some(l.number);
        Ok(())
    }

    fn unanimous(&self, p: ProfileId, x: usize, y: usize) -> bool {
        (0..self.domain.voters()).all(|k| {
            let o = self.domain.voter_order(p, k);
            o.prefers(x, y) && !o.prefers(y, x)
        })
    }

    fn agree(&self, p: ProfileId, q: ProfileId, x: usize, y: usize) -> bool {
        (0..self.domain.voters()).all(|k| {
            let (a, b) = (self.domain.voter_order(p, k), self.domain.voter_order(q, k));
            a.prefers(x, y) == b.prefers(x, y) && a.prefers(y, x) == b.prefers(y, x)
        })
    }

    fn class_key(&self, cell: Cell) -> (usize, usize, u32) {
        let mut pattern = 0u32;
        for k in 0..self.domain.voters() {
            let o = self.domain.voter_order(cell.profile, k);
            pattern = pattern * 4 + o.prefers(cell.x(), cell.y()) as u32 * 2 + o.prefers(cell.y(), cell.x()) as u32;
        }
        (cell.x(), cell.y(), pattern)
    }

    /// Voter `k`'s non-dictatorship clause: cell → value satisfying it.
    fn clause(&mut self, k: usize) -> &HashMap<Cell, bool> {
        let d = self.domain;
        self.voter_clauses[k].get_or_insert_with(|| {
            let mut out = HashMap::new();
            let m = d.alternatives();
            for p in d.profile_ids() {
                for x in 0..m {
                    for y in (0..m).filter(|&y| y != x) {
                        let o = d.voter_order(p, k);
                        if o.prefers(x, y) && !o.prefers(y, x) {
                            out.insert(Cell::new(p, x, y), false);
                            out.insert(Cell::new(p, y, x), true);
                        }
                    }
                }
            }
            out
        })
    }
}

/// Whether two facts and the clause `¬R(x,y) ∨ ¬R(y,z) ∨ R(x,z)` force `lit`.
fn transitivity_entails(fs: &[Literal], lit: Literal) -> bool {
    let p = lit.cell.profile;
    if fs.iter().any(|f| f.cell.profile != p) {
        return false;
    }
    let mut all = fs.to_vec();
    all.push(lit.negated());
    // the negation of the consequent plus the facts must violate the clause
    transitivity_violated(&all)
}

/// Whether three literals on one profile form `R(x,y), R(y,z), ¬R(x,z)`.
fn transitivity_violated(fs: &[Literal]) -> bool {
    if fs.len() != 3 || fs.iter().any(|f| f.cell.profile != fs[0].cell.profile) {
        return false;
    }
    let trues: Vec<&Literal> = fs.iter().filter(|f| f.value).collect();
    let falses: Vec<&Literal> = fs.iter().filter(|f| !f.value).collect();
    if trues.len() != 2 || falses.len() != 1 {
        return false;
    }
    let f = falses[0].cell;
    [(trues[0].cell, trues[1].cell), (trues[1].cell, trues[0].cell)]
        .iter()
        .any(|(a, b)| a.y() == b.x() && a.x() == f.x() && b.y() == f.y() && a.x() != b.y())
}

/// Kinds of single-field corruption applied by [`mutate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    FlipLiteral,
    SwapRef,
    SwapRule,
    DeleteDischarge,
}

/// Applies one random mutation and returns the mutated text, or `None` if
/// the chosen kind has no applicable site.
pub fn mutate<R: Rng>(trace: &ProofTrace, kind: MutationKind, rng: &mut R) -> Option<String> {
    let mut t = trace.clone();
    let n = t.lines.len();
    match kind {
        MutationKind::FlipLiteral => {
            let sites: Vec<usize> = (0..n).filter(|&i| t.lines[i].literal.is_some()).collect();
            let i = *sites.choose(rng)?;
            let lit = t.lines[i].literal.as_mut()?;
            lit.value = !lit.value;
        }
        MutationKind::SwapRef => {
            let sites: Vec<usize> = (0..n).filter(|&i| !t.lines[i].refs.is_empty()).collect();
            for _ in 0..64 {
                let i = *sites.choose(rng)?;
                let j = rng.gen_range(0..t.lines[i].refs.len());
                let old = t.lines[i].refs[j];
                let depth = t.lines[old as usize - 1].depth;
                let number = t.lines[i].number;
                let candidates: Vec<u32> = t.lines[..number as usize - 1]
                    .iter()
                    .filter(|l| l.depth == depth && l.number != old)
                    .map(|l| l.number)
                    .collect();
                if let Some(&new) = candidates.choose(rng) {
                    t.lines[i].refs[j] = new;
                    return Some(t.to_text());
                }
            }
            return None;
        }
        MutationKind::SwapRule => {
            let i = rng.gen_range(0..n);
            let mut tags: Vec<RuleTag> = RuleTag::SIMPLE.to_vec();
            tags.extend((0..t.header.config.voters()).map(RuleTag::ConfDict));
            tags.retain(|&r| r != t.lines[i].rule);
            t.lines[i].rule = *tags.choose(rng)?;
        }
        MutationKind::DeleteDischarge => {
            let sites: Vec<usize> = (0..n).filter(|&i| t.lines[i].kind == LineKind::Discharge).collect();
            let i = *sites.choose(rng)?;
            let gone = t.lines.remove(i).number;
            for l in &mut t.lines {
                if l.number > gone {
                    l.number -= 1;
                }
                for r in &mut l.refs {
                    if *r >= gone {
                        *r -= 1;
                    }
                }
            }
        }
    }
    Some(t.to_text())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Config;
    use crate::trace::prove;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lit(p: u32, x: usize, y: usize, v: bool) -> Literal {
        Literal::new(Cell::new(ProfileId(p), x, y), v)
    }

    #[test]
    fn transitivity_shapes() {
        // a>b, b>c, not a>c
        assert!(transitivity_violated(&[lit(3, 0, 1, true), lit(3, 1, 2, true), lit(3, 0, 2, false)]));
        assert!(transitivity_violated(&[lit(3, 0, 2, false), lit(3, 1, 2, true), lit(3, 0, 1, true)]));
        assert!(!transitivity_violated(&[lit(3, 0, 1, true), lit(3, 1, 2, true), lit(3, 2, 0, false)]));
        assert!(!transitivity_violated(&[lit(3, 0, 1, true), lit(4, 1, 2, true), lit(3, 0, 2, false)]));
        // b>c and c>a force b>a
        assert!(transitivity_entails(&[lit(5, 1, 2, true), lit(5, 2, 0, true)], lit(5, 1, 0, true)));
        // R(c,b) and ¬R(c,a) force ¬R(b,a)
        assert!(transitivity_entails(&[lit(5, 2, 1, true), lit(5, 2, 0, false)], lit(5, 1, 0, false)));
        assert!(!transitivity_entails(&[lit(5, 1, 2, true), lit(5, 2, 0, true)], lit(5, 1, 0, false)));
    }

    #[test]
    fn generated_trace_is_valid() {
        let (_, t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        let v = check_text(&t.to_text());
        assert_eq!(v.status, Status::Valid);
        assert_eq!(v.stats.values().sum::<usize>(), t.lines.len());
    }

    #[test]
    fn mutants_are_rejected() {
        let (_, t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let kinds = [
            MutationKind::FlipLiteral,
            MutationKind::SwapRef,
            MutationKind::SwapRule,
            MutationKind::DeleteDischarge,
        ];
        let mut tried = 0;
        for i in 0..200 {
            let kind = kinds[i % kinds.len()];
            let Some(text) = mutate(&t, kind, &mut rng) else { continue };
            tried += 1;
            assert!(!check_text(&text).is_valid(), "{kind:?} mutant #{i} accepted");
        }
        assert!(tried >= 150);
    }

    #[test]
    fn fingerprint_mismatch_is_rejected() {
        let (_, mut t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        t.header.fingerprint = "0".repeat(64);
        let v = check_trace(&t);
        assert!(matches!(v.status, Status::Invalid { line: 0, violation: Violation::Header(_) }));
    }

    #[test]
    fn literal_from_closed_sibling_is_rejected() {
        let (_, mut t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        // find a fact derived in the first root case and again in the second,
        // then make a line of the second case cite the first copy
        let root_cases: Vec<u32> =
            t.lines.iter().filter(|l| l.kind == LineKind::Case && l.depth == 2).map(|l| l.number).collect();
        let (first, second) = (root_cases[0], root_cases[1]);
        let mut planted = false;
        'outer: for i in second as usize..t.lines.len() {
            let refs = t.lines[i].refs.clone();
            for (j, r) in refs.iter().enumerate() {
                let Some(target) = t.lines[*r as usize - 1].literal else { continue };
                if *r <= second || t.lines[*r as usize - 1].kind != LineKind::Prop {
                    continue;
                }
                let twin = t.lines[first as usize..second as usize]
                    .iter()
                    .find(|l| l.kind == LineKind::Prop && l.literal == Some(target));
                if let Some(twin) = twin {
                    t.lines[i].refs[j] = twin.number;
                    planted = true;
                    break 'outer;
                }
            }
        }
        assert!(planted);
        let v = check_trace(&t);
        assert!(
            matches!(v.status, Status::Invalid { violation: Violation::Antecedents(_), .. }),
            "{:?}",
            v.status
        );
    }

    #[test]
    fn missing_case_is_incomplete_coverage() {
        let (_, t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        // drop the CaseClose's second discharge reference
        let mut t2 = t.clone();
        let i = t2.lines.iter().position(|l| l.kind == LineKind::CaseClose).unwrap();
        t2.lines[i].refs.pop();
        assert!(!check_trace(&t2).is_valid());
    }
}
