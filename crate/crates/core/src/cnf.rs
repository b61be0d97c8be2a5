//! DIMACS export of the premises and a small DPLL solver.
//!
//! The clauses are generated directly from the profile domain rather than
//! from [`crate::axioms::ConstraintSet`], so the solver verdict is a second
//! route to the same result.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::axioms::Cell;
use crate::error::{Error, Result};
use crate::model::{Config, Domain, ProfileId};

/// Bijection between social cells and DIMACS variables.
///
/// Variables are numbered from 1 in profile-major, pair-minor order, where
/// pairs run over ordered `(x, y)`, `x != y`, lexicographically.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarMap {
    alternatives: usize,
    profiles: u32,
}

impl VarMap {
    pub fn new(domain: &Domain) -> Self {
        VarMap { alternatives: domain.alternatives(), profiles: domain.num_profiles() }
    }

    fn per_profile(&self) -> usize {
        self.alternatives * (self.alternatives - 1)
    }

    pub fn num_vars(&self) -> u32 {
        self.profiles * self.per_profile() as u32
    }

    pub fn var(&self, cell: Cell) -> u32 {
        let m = self.alternatives;
        let (x, y) = (cell.x(), cell.y());
        let pair = x * (m - 1) + if y < x { y } else { y - 1 };
        (cell.profile.0 as usize * self.per_profile() + pair) as u32 + 1
    }

    pub fn cell(&self, var: u32) -> Option<Cell> {
        if var == 0 || var > self.num_vars() {
            return None;
        }
        let i = (var - 1) as usize;
        let pid = ProfileId((i / self.per_profile()) as u32);
        let r = i % self.per_profile();
        let x = r / (self.alternatives - 1);
        let k = r % (self.alternatives - 1);
        Some(Cell::new(pid, x, if k < x { k } else { k + 1 }))
    }

    /// `{ "R[pid](s,x,y)": var }` in variable order.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for v in 1..=self.num_vars() {
            if let Some(c) = self.cell(v) {
                map.insert(c.to_string(), v.into());
            }
        }
        serde_json::Value::Object(map)
    }
}

/// Clause counts by family, in file order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyCounts {
    pub unanimity: usize,
    pub completeness: usize,
    pub transitivity: usize,
    pub iia: usize,
    pub non_dictatorship: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfDoc {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
    pub comments: Vec<String>,
}

impl CnfDoc {
    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "c {c}");
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                let _ = write!(out, "{lit} ");
            }
            out.push_str("0\n");
        }
        out
    }

    /// Whether `model` (indexed by variable − 1) satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses.iter().all(|c| {
            c.iter().any(|&l| model.get(l.unsigned_abs() as usize - 1).copied() == Some(l > 0))
        })
    }
}

/// Parses DIMACS CNF. Clauses may span lines; `c` lines are comments.
pub fn parse_dimacs(text: &str) -> Result<CnfDoc> {
    let mut header: Option<(u32, usize)> = None;
    let mut clauses = Vec::new();
    let mut comments = Vec::new();
    let mut current = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| Error::Dimacs { line, message };
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(c) = trimmed.strip_prefix('c') {
            if c.is_empty() || c.starts_with(' ') {
                comments.push(c.trim_start().to_string());
                continue;
            }
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(err("duplicate problem line".into()));
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            match parts.as_slice() {
                ["p", "cnf", v, c] => {
                    let v = v.parse().map_err(|_| err(format!("bad variable count {v:?}")))?;
                    let c = c.parse().map_err(|_| err(format!("bad clause count {c:?}")))?;
                    header = Some((v, c));
                }
                _ => return Err(err("expected 'p cnf <vars> <clauses>'".into())),
            }
            continue;
        }
        let (vars, _) = header.ok_or_else(|| err("clause before problem line".into()))?;
        for tok in trimmed.split_whitespace() {
            let lit: i32 = tok.parse().map_err(|_| err(format!("bad literal {tok:?}")))?;
            if lit == 0 {
                clauses.push(std::mem::take(&mut current));
            } else if lit.unsigned_abs() > vars {
                return Err(err(format!("literal {lit} exceeds {vars} variables")));
            } else {
                current.push(lit);
            }
        }
    }
    let (num_vars, count) = header.ok_or(Error::Dimacs { line: 0, message: "missing problem line".into() })?;
    let end = text.lines().count();
    if !current.is_empty() {
        return Err(Error::Dimacs { line: end, message: "last clause is not terminated by 0".into() });
    }
    if clauses.len() != count {
        return Err(Error::Dimacs {
            line: end,
            message: format!("header promises {count} clauses, found {}", clauses.len()),
        });
    }
    Ok(CnfDoc { num_vars, clauses, comments })
}

/// Ordered pair plus each voter's `(x R y, y R x)` on it.
type PairPattern = (usize, usize, Vec<(bool, bool)>);

/// Exports the premises for `cfg` as CNF, optionally with the voter clauses.
pub fn export_cnf(cfg: &Config, non_dict: bool) -> (CnfDoc, VarMap, FamilyCounts) {
    let d = Domain::new(*cfg);
    let vm = VarMap::new(&d);
    let (n, m) = (d.voters(), d.alternatives());
    let v = |p: ProfileId, x: usize, y: usize| vm.var(Cell::new(p, x, y)) as i32;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut counts = FamilyCounts::default();

    for p in d.profile_ids() {
        for x in 0..m {
            for y in (0..m).filter(|&y| y != x) {
                let all = (0..n).all(|k| {
                    let o = d.voter_order(p, k);
                    o.prefers(x, y) && !o.prefers(y, x)
                });
                if all {
                    clauses.push(vec![v(p, x, y)]);
                    clauses.push(vec![-v(p, y, x)]);
                    counts.unanimity += 2;
                }
            }
        }
    }
    for p in d.profile_ids() {
        for x in 0..m {
            for y in x + 1..m {
                clauses.push(vec![v(p, x, y), v(p, y, x)]);
                counts.completeness += 1;
            }
        }
    }
    for p in d.profile_ids() {
        for x in 0..m {
            for y in (0..m).filter(|&y| y != x) {
                for z in (0..m).filter(|&z| z != x && z != y) {
                    clauses.push(vec![-v(p, x, y), -v(p, y, z), v(p, x, z)]);
                    counts.transitivity += 1;
                }
            }
        }
    }
    // IIA: link each cell to the first profile seen with the same voter
    // relations on its pair
    let mut first: HashMap<PairPattern, ProfileId> = HashMap::new();
    for p in d.profile_ids() {
        for x in 0..m {
            for y in (0..m).filter(|&y| y != x) {
                let key: Vec<(bool, bool)> = (0..n)
                    .map(|k| {
                        let o = d.voter_order(p, k);
                        (o.prefers(x, y), o.prefers(y, x))
                    })
                    .collect();
                match first.get(&(x, y, key.clone())) {
                    Some(&q) => {
                        clauses.push(vec![-v(q, x, y), v(p, x, y)]);
                        clauses.push(vec![v(q, x, y), -v(p, x, y)]);
                        counts.iia += 2;
                    }
                    None => {
                        first.insert((x, y, key), p);
                    }
                }
            }
        }
    }
    if non_dict {
        for k in 0..n {
            let mut clause = Vec::new();
            for p in d.profile_ids() {
                for x in 0..m {
                    for y in (0..m).filter(|&y| y != x) {
                        let o = d.voter_order(p, k);
                        if o.prefers(x, y) && !o.prefers(y, x) {
                            clause.push(-v(p, x, y));
                            clause.push(v(p, y, x));
                        }
                    }
                }
            }
            clauses.push(clause);
            counts.non_dictatorship += 1;
        }
    }
    let comments = vec![
        format!("social welfare premises n={n} m={m}"),
        format!(
            "families: unanimity={} completeness={} transitivity={} iia={} non_dictatorship={}",
            counts.unanimity, counts.completeness, counts.transitivity, counts.iia, counts.non_dictatorship
        ),
        format!("variable v is cell R[pid](s,x,y) with v-1 = pid*{} + pair index", m * (m - 1)),
    ];
    (CnfDoc { num_vars: vm.num_vars(), clauses, comments }, vm, counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    Decide,
    Enumerate { limit: Option<usize> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveOutcome {
    Unsat,
    Sat(Vec<bool>),
    /// All models found; `complete` is false when the limit cut the search.
    Models { models: Vec<Vec<bool>>, complete: bool },
}

/// Decides or enumerates the CNF with chronological-backtracking DPLL.
pub fn solve_cnf(doc: &CnfDoc, mode: SolveMode) -> SolveOutcome {
    match mode {
        SolveMode::Decide => match Dpll::new(&doc.clauses, doc.num_vars).solve() {
            Some(model) => SolveOutcome::Sat(model),
            None => SolveOutcome::Unsat,
        },
        SolveMode::Enumerate { limit } => {
            let mut models = Vec::new();
            let mut clauses = doc.clauses.clone();
            loop {
                if limit.is_some_and(|l| models.len() >= l) {
                    return SolveOutcome::Models { models, complete: false };
                }
                let mut solver = Dpll::new(&clauses, doc.num_vars);
                let Some(model) = solver.solve() else { break };
                models.push(model);
                // the model is the propagation closure of its decisions, so
                // negating them excludes exactly this model
                if solver.decisions.is_empty() {
                    break;
                }
                clauses.push(solver.decisions.iter().map(|&l| -l).collect());
            }
            SolveOutcome::Models { models, complete: true }
        }
    }
}

struct Dpll {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
    watches: Vec<Vec<usize>>,
    /// 0 unknown, 1 true, -1 false; indexed by variable.
    value: Vec<i8>,
    trail: Vec<i32>,
    /// `(trail position, already flipped)` per decision level.
    levels: Vec<(usize, bool)>,
    head: usize,
    trivially_unsat: bool,
    units: Vec<i32>,
    /// Decision literals of the last model.
    decisions: Vec<i32>,
}

fn code(lit: i32) -> usize {
    (lit.unsigned_abs() as usize) * 2 + (lit < 0) as usize
}

impl Dpll {
    fn new(clauses: &[Vec<i32>], num_vars: u32) -> Self {
        let n = num_vars as usize;
        let mut s = Dpll {
            num_vars: n,
            clauses: Vec::new(),
            watches: vec![Vec::new(); 2 * n + 2],
            value: vec![0; n + 1],
            trail: Vec::new(),
            levels: Vec::new(),
            head: 0,
            trivially_unsat: false,
            units: Vec::new(),
            decisions: Vec::new(),
        };
        for c in clauses {
            let mut c = c.clone();
            c.sort_unstable();
            c.dedup();
            if c.iter().any(|l| c.contains(&-l)) {
                continue; // tautology
            }
            match c.len() {
                0 => s.trivially_unsat = true,
                1 => s.units.push(c[0]),
                _ => {
                    let i = s.clauses.len();
                    s.watches[code(c[0])].push(i);
                    s.watches[code(c[1])].push(i);
                    s.clauses.push(c);
                }
            }
        }
        s
    }

    fn lit_value(&self, lit: i32) -> i8 {
        let v = self.value[lit.unsigned_abs() as usize];
        if lit > 0 {
            v
        } else {
            -v
        }
    }

    fn enqueue(&mut self, lit: i32) -> bool {
        match self.lit_value(lit) {
            1 => true,
            -1 => false,
            _ => {
                self.value[lit.unsigned_abs() as usize] = if lit > 0 { 1 } else { -1 };
                self.trail.push(lit);
                true
            }
        }
    }

    /// Returns false on conflict.
    fn propagate(&mut self) -> bool {
        while self.head < self.trail.len() {
            let falsified = -self.trail[self.head];
            self.head += 1;
            let mut ws = std::mem::take(&mut self.watches[code(falsified)]);
            let mut i = 0;
            let mut ok = true;
            while i < ws.len() {
                let ci = ws[i];
                let clause = &mut self.clauses[ci];
                if clause[0] == falsified {
                    clause.swap(0, 1);
                }
                let other = clause[0];
                let other_val = {
                    let v = self.value[other.unsigned_abs() as usize];
                    if other > 0 { v } else { -v }
                };
                if other_val == 1 {
                    i += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..clause.len() {
                    let l = clause[k];
                    let v = self.value[l.unsigned_abs() as usize];
                    let lv = if l > 0 { v } else { -v };
                    if lv != -1 {
                        clause.swap(1, k);
                        let new = clause[1];
                        self.watches[code(new)].push(ci);
                        ws.swap_remove(i);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                if other_val == -1 {
                    ok = false;
                    break;
                }
                self.enqueue(other);
                i += 1;
            }
            let rest = std::mem::replace(&mut self.watches[code(falsified)], ws);
            self.watches[code(falsified)].extend(rest);
            if !ok {
                return false;
            }
        }
        true
    }

    fn undo_to(&mut self, pos: usize) {
        for lit in self.trail.drain(pos..) {
            self.value[lit.unsigned_abs() as usize] = 0;
        }
        self.head = self.head.min(pos);
    }

    /// Conflict recovery: flips the deepest unflipped decision.
    fn backtrack(&mut self) -> bool {
        while let Some((pos, flipped)) = self.levels.pop() {
            let lit = self.trail[pos];
            self.undo_to(pos);
            if !flipped {
                self.levels.push((pos, true));
                self.enqueue(-lit);
                return true;
            }
        }
        false
    }

    fn solve(&mut self) -> Option<Vec<bool>> {
        if self.trivially_unsat {
            return None;
        }
        for lit in std::mem::take(&mut self.units) {
            if !self.enqueue(lit) {
                return None;
            }
        }
        loop {
            if !self.propagate() {
                if !self.backtrack() {
                    return None;
                }
                continue;
            }
            match (1..=self.num_vars).find(|&v| self.value[v] == 0) {
                Some(v) => {
                    self.levels.push((self.trail.len(), false));
                    self.enqueue(v as i32);
                }
                None => {
                    self.decisions = self.levels.iter().map(|&(pos, _)| self.trail[pos]).collect();
                    return Some((1..=self.num_vars).map(|v| self.value[v] == 1).collect());
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force_count(doc: &CnfDoc) -> usize {
        let n = doc.num_vars as usize;
        (0u32..1 << n)
            .filter(|bits| {
                let model: Vec<bool> = (0..n).map(|i| bits >> i & 1 == 1).collect();
                doc.satisfied_by(&model)
            })
            .count()
    }

    #[test]
    fn var_map_is_a_bijection() {
        let d = Domain::new(Config::new(2, 3).unwrap());
        let vm = VarMap::new(&d);
        assert_eq!(vm.num_vars(), 1014);
        for v in 1..=vm.num_vars() {
            assert_eq!(vm.var(vm.cell(v).unwrap()), v);
        }
        assert_eq!(vm.cell(0), None);
        assert_eq!(vm.cell(1015), None);
        assert_eq!(vm.to_json()["R[1](s,b,c)"], 6 + 3 + 1);
    }

    #[test]
    fn dimacs_round_trip() {
        let (doc, _, _) = export_cnf(&Config::new(2, 3).unwrap(), true);
        let back = parse_dimacs(&doc.to_dimacs()).unwrap();
        assert_eq!(back, doc);
    }

    #[test]
    fn dimacs_errors() {
        let bad = [
            "1 2 0\n",
            "p cnf 2 1\n1 3 0\n",
            "p cnf 2 2\n1 2 0\n",
            "p cnf 2 1\n1 x 0\n",
            "p cnf 2 1\n1 2\n",
            "p dnf 2 1\n1 2 0\n",
        ];
        for text in bad {
            assert!(matches!(parse_dimacs(text), Err(Error::Dimacs { .. })), "{text:?}");
        }
        let ok = parse_dimacs("c hi\np cnf 3 2\n1 -2\n 3 0 -1 0\n").unwrap();
        assert_eq!(ok.clauses, vec![vec![1, -2, 3], vec![-1]]);
    }

    #[test]
    fn family_counts_two_by_three() {
        let (doc, _, counts) = export_cnf(&Config::new(2, 3).unwrap(), true);
        assert_eq!(counts.completeness, 507);
        assert_eq!(counts.transitivity, 1014);
        assert_eq!(counts.non_dictatorship, 2);
        let total = counts.unanimity + counts.completeness + counts.transitivity + counts.iia + counts.non_dictatorship;
        assert_eq!(doc.clauses.len(), total);
    }

    #[test]
    fn solver_matches_brute_force_on_small_formulas() {
        let docs = [
            (3, vec![vec![1, 2], vec![-1, 3], vec![-2, -3]]),
            (3, vec![vec![1], vec![-1]]),
            (4, vec![vec![1, 2, 3, 4]]),
            (2, vec![]),
            (3, vec![vec![1, -1], vec![2, 3]]),
        ];
        for (n, clauses) in docs {
            let doc = CnfDoc { num_vars: n, clauses, comments: vec![] };
            let expected = brute_force_count(&doc);
            match solve_cnf(&doc, SolveMode::Enumerate { limit: None }) {
                SolveOutcome::Models { models, complete } => {
                    assert!(complete);
                    assert_eq!(models.len(), expected, "{doc:?}");
                    assert!(models.iter().all(|m| doc.satisfied_by(m)));
                    let distinct: std::collections::HashSet<_> = models.iter().collect();
                    assert_eq!(distinct.len(), models.len());
                }
                other => panic!("{other:?}"),
            }
            let decided = solve_cnf(&doc, SolveMode::Decide);
            assert_eq!(matches!(decided, SolveOutcome::Unsat), expected == 0);
        }
    }

    #[test]
    fn unsat_with_voter_clauses_sat_without() {
        let cfg = Config::new(2, 3).unwrap();
        let (with, _, _) = export_cnf(&cfg, true);
        assert_eq!(solve_cnf(&with, SolveMode::Decide), SolveOutcome::Unsat);
        let (without, _, _) = export_cnf(&cfg, false);
        match solve_cnf(&without, SolveMode::Decide) {
            SolveOutcome::Sat(m) => assert!(without.satisfied_by(&m)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn enumeration_limit_is_partial() {
        let (doc, _, _) = export_cnf(&Config::new(2, 3).unwrap(), false);
        match solve_cnf(&doc, SolveMode::Enumerate { limit: Some(3) }) {
            SolveOutcome::Models { models, complete } => {
                assert_eq!(models.len(), 3);
                assert!(!complete);
            }
            other => panic!("{other:?}"),
        }
    }
}
