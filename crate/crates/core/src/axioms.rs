//! Ground constraints over society's cells and the propagation engine.
//!
//! Every social-preference atom `R_P(s, x, y)` with `x != y` is a [`Cell`].
//! Voter cells are constants fixed by the profile and reflexive cells are
//! always true, so neither is represented. The constraint families are:
//!
//! * completeness, `R(x,y) ∨ R(y,x)` per profile and unordered pair;
//! * transitivity, `¬R(x,y) ∨ ¬R(y,z) ∨ R(x,z)` per profile and ordered triple;
//! * unanimity, compiled to unit literals wherever every voter strictly agrees;
//! * IIA, equivalence classes of same-pair cells over pair-agreeing profiles;
//! * non-dictatorship, one flat clause per voter.
//!
//! Propagation treats IIA classes and completeness eagerly: whenever a cell
//! is assigned its whole class follows, and a false cell immediately forces
//! its converse. Transitivity and the voter clauses run as ordinary unit
//! propagation on top of that.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{alt_letter, Config, Domain, ProfileId};

/// The atom `R_profile(s, from, to)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub profile: ProfileId,
    pub from: u8,
    pub to: u8,
}

impl Cell {
    pub fn new(profile: ProfileId, from: usize, to: usize) -> Self {
        debug_assert_ne!(from, to, "reflexive cells are constants");
        Cell { profile, from: from as u8, to: to as u8 }
    }

    pub fn converse(&self) -> Cell {
        Cell { profile: self.profile, from: self.to, to: self.from }
    }

    pub fn x(&self) -> usize {
        self.from as usize
    }

    pub fn y(&self) -> usize {
        self.to as usize
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "R[{}](s,{},{})",
            self.profile.0,
            alt_letter(self.from as usize),
            alt_letter(self.to as usize)
        )
    }
}

/// A cell together with a truth value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub cell: Cell,
    pub value: bool,
}

impl Literal {
    pub fn new(cell: Cell, value: bool) -> Self {
        Literal { cell, value }
    }

    pub fn negated(self) -> Self {
        Literal { cell: self.cell, value: !self.value }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.cell, if self.value { 'T' } else { 'F' })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriState {
    #[default]
    Unknown,
    True,
    False,
}

impl TriState {
    pub fn from_bool(b: bool) -> Self {
        if b {
            TriState::True
        } else {
            TriState::False
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            TriState::Unknown => None,
            TriState::True => Some(true),
            TriState::False => Some(false),
        }
    }

    pub fn is_unknown(self) -> bool {
        self == TriState::Unknown
    }
}

/// Which rule produced an assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    Decision,
    Unanimity,
    Transitivity,
    Completeness,
    Iia,
    /// Unit consequence of the given voter's non-dictatorship clause.
    NonDictClause(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub rule: Rule,
    /// Cells whose (earlier) values force the consequent. Unanimity has none:
    /// its antecedent is a profile constant.
    pub antecedents: Vec<Cell>,
}

impl Reason {
    fn new(rule: Rule, antecedents: Vec<Cell>) -> Self {
        Reason { rule, antecedents }
    }
}

/// One trail entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub cell: Cell,
    pub value: bool,
    pub reason: Reason,
}

impl Step {
    pub fn literal(&self) -> Literal {
        Literal::new(self.cell, self.value)
    }
}

/// Restores an assignment to an earlier point of its trail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Checkpoint {
    len: usize,
    propagated: usize,
}

/// Tri-state map over all cells plus the trail that produced it.
#[derive(Clone, Debug)]
pub struct CellAssignment {
    m: usize,
    states: Vec<TriState>,
    trail: Vec<Step>,
    trail_idx: Vec<u32>,
    /// Trail prefix already closed under propagation.
    propagated: usize,
}

impl CellAssignment {
    pub fn new(domain: &Domain) -> Self {
        CellAssignment {
            m: domain.alternatives(),
            states: vec![TriState::Unknown; domain.num_cells()],
            trail: Vec::new(),
            trail_idx: Vec::new(),
            propagated: 0,
        }
    }

    pub fn index_of(&self, cell: Cell) -> usize {
        let (x, y) = (cell.x(), cell.y());
        let pair = x * (self.m - 1) + if y < x { y } else { y - 1 };
        cell.profile.0 as usize * self.m * (self.m - 1) + pair
    }

    pub fn cell_at(&self, idx: usize) -> Cell {
        let ppp = self.m * (self.m - 1);
        let pid = ProfileId((idx / ppp) as u32);
        let r = idx % ppp;
        let x = r / (self.m - 1);
        let k = r % (self.m - 1);
        Cell::new(pid, x, if k < x { k } else { k + 1 })
    }

    pub fn num_cells(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, cell: Cell) -> TriState {
        self.states[self.index_of(cell)]
    }

    pub fn state_at(&self, idx: usize) -> TriState {
        self.states[idx]
    }

    pub fn trail(&self) -> &[Step] {
        &self.trail
    }

    pub fn len(&self) -> usize {
        self.trail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trail.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.trail.len() == self.states.len()
    }

    pub fn unknown_count(&self) -> usize {
        self.states.len() - self.trail.len()
    }

    /// Records a decision. The cell must be unassigned.
    pub fn decide(&mut self, cell: Cell, value: bool) -> Result<()> {
        let idx = self.index_of(cell);
        if !self.states[idx].is_unknown() {
            return Err(Error::State(format!("{cell} is already assigned")));
        }
        self.push(idx, value, Reason::new(Rule::Decision, Vec::new()));
        Ok(())
    }

    fn push(&mut self, idx: usize, value: bool, reason: Reason) {
        debug_assert!(self.states[idx].is_unknown());
        self.states[idx] = TriState::from_bool(value);
        self.trail.push(Step { cell: self.cell_at(idx), value, reason });
        self.trail_idx.push(idx as u32);
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { len: self.trail.len(), propagated: self.propagated }
    }

    pub fn restore(&mut self, cp: Checkpoint) {
        for idx in self.trail_idx.drain(cp.len..) {
            self.states[idx as usize] = TriState::Unknown;
        }
        self.trail.truncate(cp.len);
        self.propagated = cp.propagated.min(cp.len);
    }

    /// Cell values if every cell is assigned.
    pub fn to_bits(&self) -> Option<Vec<bool>> {
        self.states.iter().map(|s| s.as_bool()).collect()
    }

    /// Complete assignment from bits, every step recorded as a decision.
    pub fn from_bits(domain: &Domain, bits: &[bool]) -> Result<Self> {
        let mut a = CellAssignment::new(domain);
        if bits.len() != a.states.len() {
            return Err(Error::Parameter(format!(
                "{} bits for {} cells",
                bits.len(),
                a.states.len()
            )));
        }
        for (i, &b) in bits.iter().enumerate() {
            a.push(i, b, Reason::new(Rule::Decision, Vec::new()));
        }
        Ok(a)
    }
}

/// A single ground constraint instance.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Constraint {
    /// `R(x,y) ∨ R(y,x)` with `x < y`.
    Completeness { profile: ProfileId, x: u8, y: u8 },
    /// `¬R(x,y) ∨ ¬R(y,z) ∨ R(x,z)`.
    Transitivity { profile: ProfileId, x: u8, y: u8, z: u8 },
    /// The unit literal `cell = value`.
    Unanimity { cell: Cell, value: bool },
    /// `left ↔ right`.
    Iia { left: Cell, right: Cell },
    NonDictatorship { voter: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConflictKind {
    TransitivityViolation,
    CompletenessViolation,
    DictatorshipViolation(usize),
    /// Only reachable from hand-built assignments.
    UnanimityViolation,
    /// Only reachable from hand-built assignments.
    IiaViolation,
}

impl fmt::Display for ConflictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConflictKind::TransitivityViolation => write!(f, "transitivity"),
            ConflictKind::CompletenessViolation => write!(f, "completeness"),
            ConflictKind::DictatorshipViolation(k) => {
                write!(f, "dictatorship({})", crate::model::voter_name(*k))
            }
            ConflictKind::UnanimityViolation => write!(f, "unanimity"),
            ConflictKind::IiaViolation => write!(f, "iia"),
        }
    }
}

/// A falsified constraint under the current assignment.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conflict {
    pub kind: ConflictKind,
    pub witness: Constraint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildOptions {
    pub non_dictatorship: bool,
    pub unanimity: bool,
    pub iia: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { non_dictatorship: true, unanimity: true, iia: true }
    }
}

/// The literals of one voter's non-dictatorship clause.
#[derive(Clone, Debug)]
pub struct VoterClause {
    pub voter: usize,
    /// `(cell index, value that satisfies the literal)`
    lits: Vec<(u32, bool)>,
}

impl VoterClause {
    pub fn len(&self) -> usize {
        self.lits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lits.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintStats {
    pub voters: usize,
    pub alternatives: usize,
    pub orders: usize,
    pub profiles: u64,
    pub cells: usize,
    pub completeness_clauses: usize,
    pub transitivity_clauses: usize,
    pub unanimity_units: usize,
    pub iia_classes: usize,
    /// Biconditionals linking each class member to its lowest member.
    pub iia_links: usize,
    pub non_dictatorship_clauses: usize,
    pub non_dictatorship_literals: usize,
}

/// The full ground instance for one configuration.
#[derive(Clone, Debug)]
pub struct ConstraintSet {
    domain: Domain,
    options: BuildOptions,
    units: Vec<(u32, bool)>,
    class_of: Vec<u32>,
    class_start: Vec<u32>,
    class_cells: Vec<u32>,
    voter_clauses: Vec<VoterClause>,
    split_candidates: Vec<u32>,
}

/// Ground constraints for `cfg`, with or without the voter clauses.
pub fn build_constraints(cfg: &Config, non_dict: bool) -> ConstraintSet {
    ConstraintSet::build(cfg, BuildOptions { non_dictatorship: non_dict, ..BuildOptions::default() })
}

impl ConstraintSet {
    pub fn build(cfg: &Config, options: BuildOptions) -> Self {
        let domain = Domain::new(*cfg);
        let n = domain.voters();
        let ppp = domain.pairs_per_profile();
        let cells = domain.num_cells();
        let scratch = CellAssignment::new(&domain);

        let mut units = Vec::new();
        if options.unanimity {
            for pid in domain.profile_ids() {
                for (x, y) in domain.pairs() {
                    if domain.unanimous_strict(pid, x, y) {
                        units.push((scratch.index_of(Cell::new(pid, x, y)) as u32, true));
                        units.push((scratch.index_of(Cell::new(pid, y, x)) as u32, false));
                    }
                }
            }
            units.sort_unstable();
        }

        // class key: (ordered pair, per-voter pair state in base 3)
        let patterns = 3u32.pow(n as u32);
        let mut class_of = vec![0u32; cells];
        for pid in domain.profile_ids() {
            for (x, y) in domain.pairs() {
                let idx = scratch.index_of(Cell::new(pid, x, y));
                class_of[idx] = if options.iia {
                    let mut pattern = 0u32;
                    for k in (0..n).rev() {
                        let o = domain.voter_order(pid, k);
                        let state = match (o.prefers(x, y), o.prefers(y, x)) {
                            (true, false) => 0,
                            (false, true) => 1,
                            _ => 2,
                        };
                        pattern = pattern * 3 + state;
                    }
                    domain.pair_index(x, y) as u32 * patterns + pattern
                } else {
                    idx as u32
                };
            }
        }
        let num_classes = if options.iia { ppp as u32 * patterns } else { cells as u32 };
        let mut class_start = vec![0u32; num_classes as usize + 1];
        for &c in &class_of {
            class_start[c as usize + 1] += 1;
        }
        for i in 0..num_classes as usize {
            class_start[i + 1] += class_start[i];
        }
        let mut fill = class_start.clone();
        let mut class_cells = vec![0u32; cells];
        for (idx, &c) in class_of.iter().enumerate() {
            class_cells[fill[c as usize] as usize] = idx as u32;
            fill[c as usize] += 1;
        }

        let mut voter_clauses = Vec::new();
        if options.non_dictatorship {
            for d in 0..n {
                let mut lits = Vec::new();
                for pid in domain.profile_ids() {
                    for (x, y) in domain.pairs() {
                        if domain.voter_strict(pid, d, x, y) {
                            lits.push((scratch.index_of(Cell::new(pid, x, y)) as u32, false));
                            lits.push((scratch.index_of(Cell::new(pid, y, x)) as u32, true));
                        }
                    }
                }
                voter_clauses.push(VoterClause { voter: d, lits });
            }
        }

        let mut split_candidates = Vec::new();
        let m = domain.alternatives();
        for pid in domain.profile_ids() {
            for x in 0..m {
                for y in x + 1..m {
                    let forward = (0..n).filter(|&k| domain.voter_strict(pid, k, x, y)).count();
                    let backward = (0..n).filter(|&k| domain.voter_strict(pid, k, y, x)).count();
                    if forward == 1 && backward == n - 1 {
                        split_candidates.push(scratch.index_of(Cell::new(pid, x, y)) as u32);
                    }
                }
            }
        }

        ConstraintSet {
            domain,
            options,
            units,
            class_of,
            class_start,
            class_cells,
            voter_clauses,
            split_candidates,
        }
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn config(&self) -> &Config {
        self.domain.config()
    }

    pub fn options(&self) -> BuildOptions {
        self.options
    }

    pub fn new_assignment(&self) -> CellAssignment {
        CellAssignment::new(&self.domain)
    }

    pub fn voter_clauses(&self) -> &[VoterClause] {
        &self.voter_clauses
    }

    /// Unit literals compiled from unanimity.
    pub fn unanimity_units(&self, a: &CellAssignment) -> Vec<Literal> {
        self.units.iter().map(|&(i, v)| Literal::new(a.cell_at(i as usize), v)).collect()
    }

    /// Cells sharing the IIA class of `idx`, including itself.
    fn class_members(&self, idx: usize) -> &[u32] {
        let c = self.class_of[idx] as usize;
        &self.class_cells[self.class_start[c] as usize..self.class_start[c + 1] as usize]
    }

    /// Cells that IIA ties to `cell`, including `cell` itself.
    pub fn iia_class(&self, cell: Cell) -> Vec<Cell> {
        let a = self.new_assignment_shape();
        self.class_members(a.index_of(cell)).iter().map(|&i| a.cell_at(i as usize)).collect()
    }

    fn new_assignment_shape(&self) -> CellAssignment {
        CellAssignment {
            m: self.domain.alternatives(),
            states: Vec::new(),
            trail: Vec::new(),
            trail_idx: Vec::new(),
            propagated: 0,
        }
    }

    /// Candidate split cells: `(x, y)` with `x < y` in profiles where exactly
    /// one voter strictly prefers x to y and every other voter strictly
    /// prefers y to x. Sorted by profile, then pair.
    pub fn split_candidates(&self) -> Vec<Cell> {
        let a = self.new_assignment_shape();
        self.split_candidates.iter().map(|&i| a.cell_at(i as usize)).collect()
    }

    pub fn stats(&self) -> ConstraintStats {
        let m = self.domain.alternatives();
        let profiles = self.domain.num_profiles() as usize;
        let mut classes = 0;
        let mut links = 0;
        for w in self.class_start.windows(2) {
            let size = (w[1] - w[0]) as usize;
            if size > 0 {
                classes += 1;
                links += size - 1;
            }
        }
        ConstraintStats {
            voters: self.domain.voters(),
            alternatives: m,
            orders: self.domain.orders().len(),
            profiles: profiles as u64,
            cells: self.domain.num_cells(),
            completeness_clauses: profiles * m * (m - 1) / 2,
            transitivity_clauses: profiles * m * (m - 1) * (m - 2),
            unanimity_units: self.units.len(),
            iia_classes: classes,
            iia_links: links,
            non_dictatorship_clauses: self.voter_clauses.len(),
            non_dictatorship_literals: self.voter_clauses.iter().map(|c| c.lits.len()).sum(),
        }
    }

    /// Cells mentioned by a constraint, in clause order.
    pub fn constraint_cells(&self, c: &Constraint) -> Vec<Cell> {
        match *c {
            Constraint::Completeness { profile, x, y } => {
                vec![Cell::new(profile, x as usize, y as usize), Cell::new(profile, y as usize, x as usize)]
            }
            Constraint::Transitivity { profile, x, y, z } => {
                let (x, y, z) = (x as usize, y as usize, z as usize);
                vec![Cell::new(profile, x, y), Cell::new(profile, y, z), Cell::new(profile, x, z)]
            }
            Constraint::Unanimity { cell, .. } => vec![cell],
            Constraint::Iia { left, right } => vec![left, right],
            Constraint::NonDictatorship { voter } => {
                let a = self.new_assignment_shape();
                self.voter_clauses
                    .iter()
                    .find(|c| c.voter == voter)
                    .map(|c| c.lits.iter().map(|&(i, _)| a.cell_at(i as usize)).collect())
                    .unwrap_or_default()
            }
        }
    }

    /// Runs unit propagation to a fixpoint or the first conflict.
    ///
    /// New steps are appended to the assignment's trail. On conflict the
    /// assignment is left as it was when the conflict was found; callers
    /// restore a checkpoint to continue.
    pub fn propagate(&self, a: &mut CellAssignment, order: &mut PropagationOrder) -> Option<Conflict> {
        let mut queue = WorkQueue::new(a.propagated);
        if let Some(c) = self.seed_units(a, order) {
            return Some(c);
        }
        loop {
            // eager phase: IIA class and completeness closure
            while queue.eager < a.trail.len() {
                let idx = a.trail_idx[queue.eager] as usize;
                let value = a.states[idx] == TriState::True;
                queue.eager += 1;
                queue.pending.push(queue.eager - 1);
                let cell = a.trail[queue.eager - 1].cell;
                for &mate in self.class_members(idx) {
                    let mate = mate as usize;
                    match a.states[mate].as_bool() {
                        None => a.push(mate, value, Reason::new(Rule::Iia, vec![cell])),
                        Some(v) if v != value => return Some(self.classify(a)),
                        Some(_) => {}
                    }
                }
                if !value {
                    let conv = a.index_of(cell.converse());
                    match a.states[conv] {
                        TriState::Unknown => a.push(conv, true, Reason::new(Rule::Completeness, vec![cell])),
                        TriState::False => return Some(self.classify(a)),
                        TriState::True => {}
                    }
                }
            }
            if let Some(pos) = queue.next_pending(order) {
                if self.transitivity_from(a, pos, order) {
                    return Some(self.classify(a));
                }
                continue;
            }
            match self.voter_clause_step(a, order) {
                ClauseStep::Quiet => break,
                ClauseStep::Assigned => continue,
                ClauseStep::Falsified => return Some(self.classify(a)),
            }
        }
        a.propagated = a.trail.len();
        None
    }

    fn seed_units(&self, a: &mut CellAssignment, order: &mut PropagationOrder) -> Option<Conflict> {
        let mut idxs: Vec<usize> = (0..self.units.len()).collect();
        order.shuffle(&mut idxs);
        for i in idxs {
            let (cell, value) = self.units[i];
            match a.states[cell as usize].as_bool() {
                None => a.push(cell as usize, value, Reason::new(Rule::Unanimity, Vec::new())),
                Some(v) if v != value => return Some(self.classify(a)),
                Some(_) => {}
            }
        }
        None
    }

    /// Transitivity clauses in which the trail entry at `pos` falsifies a
    /// literal. Returns true on a falsified clause.
    fn transitivity_from(&self, a: &mut CellAssignment, pos: usize, order: &mut PropagationOrder) -> bool {
        let m = self.domain.alternatives();
        let cell = a.trail[pos].cell;
        let value = a.trail[pos].value;
        let (u, v, pid) = (cell.x(), cell.y(), cell.profile);
        // Each entry: (other literal A, other literal B), literals as
        // (cell, satisfying value).
        let mut clauses: Vec<[(Cell, bool); 2]> = Vec::new();
        for w in (0..m).filter(|&w| w != u && w != v) {
            if value {
                // (u,v,w): ¬R(u,v) ∨ ¬R(v,w) ∨ R(u,w)
                clauses.push([(Cell::new(pid, v, w), false), (Cell::new(pid, u, w), true)]);
                // (w,u,v): ¬R(w,u) ∨ ¬R(u,v) ∨ R(w,v)
                clauses.push([(Cell::new(pid, w, u), false), (Cell::new(pid, w, v), true)]);
            } else {
                // (u,w,v): ¬R(u,w) ∨ ¬R(w,v) ∨ R(u,v)
                clauses.push([(Cell::new(pid, u, w), false), (Cell::new(pid, w, v), false)]);
            }
        }
        order.shuffle(&mut clauses);
        for [(ca, sa), (cb, sb)] in clauses {
            let (ia, ib) = (a.index_of(ca), a.index_of(cb));
            let (va, vb) = (a.states[ia].as_bool(), a.states[ib].as_bool());
            if va == Some(sa) || vb == Some(sb) {
                continue;
            }
            match (va, vb) {
                (Some(_), Some(_)) => return true,
                (None, Some(_)) => a.push(ia, sa, Reason::new(Rule::Transitivity, vec![cell, cb])),
                (Some(_), None) => a.push(ib, sb, Reason::new(Rule::Transitivity, vec![cell, ca])),
                (None, None) => {}
            }
        }
        false
    }

    fn voter_clause_step(&self, a: &mut CellAssignment, order: &mut PropagationOrder) -> ClauseStep {
        let mut voters: Vec<usize> = (0..self.voter_clauses.len()).collect();
        order.shuffle(&mut voters);
        for i in voters {
            let clause = &self.voter_clauses[i];
            let mut open = None;
            let mut open_count = 0;
            let mut satisfied = false;
            for &(idx, want) in &clause.lits {
                match a.states[idx as usize].as_bool() {
                    Some(v) if v == want => {
                        satisfied = true;
                        break;
                    }
                    Some(_) => {}
                    None => {
                        open_count += 1;
                        open = Some((idx, want));
                    }
                }
            }
            if satisfied {
                continue;
            }
            match (open_count, open) {
                (0, _) => return ClauseStep::Falsified,
                (1, Some((idx, want))) => {
                    let antecedents = clause
                        .lits
                        .iter()
                        .filter(|&&(j, _)| j != idx)
                        .map(|&(j, _)| a.cell_at(j as usize))
                        .collect();
                    a.push(idx as usize, want, Reason::new(Rule::NonDictClause(clause.voter), antecedents));
                    return ClauseStep::Assigned;
                }
                _ => {}
            }
        }
        ClauseStep::Quiet
    }

    /// The least falsified constraint under `a`, if any.
    ///
    /// Constraints scoped to a profile come first, ordered by profile id,
    /// then lexicographic pair; voter clauses follow by voter index.
    pub fn first_falsified(&self, a: &CellAssignment) -> Option<Conflict> {
        let d = &self.domain;
        let m = d.alternatives();
        let get = |c: Cell| a.state(c).as_bool();
        let mut unit_at = std::collections::HashMap::new();
        for &(i, v) in &self.units {
            unit_at.insert(i, v);
        }
        for pid in d.profile_ids() {
            for x in 0..m {
                for y in (0..m).filter(|&y| y != x) {
                    let xy = Cell::new(pid, x, y);
                    if x < y && get(xy) == Some(false) && get(xy.converse()) == Some(false) {
                        return Some(Conflict {
                            kind: ConflictKind::CompletenessViolation,
                            witness: Constraint::Completeness { profile: pid, x: x as u8, y: y as u8 },
                        });
                    }
                    for z in (0..m).filter(|&z| z != x && z != y) {
                        if get(xy) == Some(true)
                            && get(Cell::new(pid, y, z)) == Some(true)
                            && get(Cell::new(pid, x, z)) == Some(false)
                        {
                            return Some(Conflict {
                                kind: ConflictKind::TransitivityViolation,
                                witness: Constraint::Transitivity {
                                    profile: pid,
                                    x: x as u8,
                                    y: y as u8,
                                    z: z as u8,
                                },
                            });
                        }
                    }
                    let idx = a.index_of(xy);
                    if let (Some(&want), Some(have)) = (unit_at.get(&(idx as u32)), get(xy)) {
                        if want != have {
                            return Some(Conflict {
                                kind: ConflictKind::UnanimityViolation,
                                witness: Constraint::Unanimity { cell: xy, value: want },
                            });
                        }
                    }
                    if let Some(have) = get(xy) {
                        let other = self
                            .class_members(idx)
                            .iter()
                            .map(|&j| j as usize)
                            .find(|&j| a.states[j].as_bool() == Some(!have));
                        if let Some(j) = other {
                            return Some(Conflict {
                                kind: ConflictKind::IiaViolation,
                                witness: Constraint::Iia { left: xy, right: a.cell_at(j) },
                            });
                        }
                    }
                }
            }
        }
        for clause in &self.voter_clauses {
            if clause.lits.iter().all(|&(i, want)| a.states[i as usize].as_bool() == Some(!want)) {
                return Some(Conflict {
                    kind: ConflictKind::DictatorshipViolation(clause.voter),
                    witness: Constraint::NonDictatorship { voter: clause.voter },
                });
            }
        }
        None
    }

    fn classify(&self, a: &CellAssignment) -> Conflict {
        self.first_falsified(a).expect("propagation reported a conflict with no falsified constraint")
    }
}

/// Outcome of [`propagate_to_fixpoint`].
#[derive(Clone, Debug)]
pub struct Fixpoint {
    pub assignment: CellAssignment,
    pub steps: Vec<Step>,
    pub conflict: Option<Conflict>,
}

/// Propagates `a` in canonical order, returning the new steps separately.
pub fn propagate_to_fixpoint(mut a: CellAssignment, constraints: &ConstraintSet) -> Fixpoint {
    let start = a.len();
    let conflict = constraints.propagate(&mut a, &mut PropagationOrder::Canonical);
    let steps = a.trail()[start..].to_vec();
    Fixpoint { assignment: a, steps, conflict }
}

/// Queue discipline for propagation.
#[derive(Clone, Debug)]
pub enum PropagationOrder {
    /// FIFO, deterministic; used for every emitted refutation.
    Canonical,
    /// Random choice among pending work; for confluence testing.
    Shuffled(Box<ChaCha8Rng>),
}

impl PropagationOrder {
    pub fn shuffled(seed: u64) -> Self {
        PropagationOrder::Shuffled(Box::new(ChaCha8Rng::seed_from_u64(seed)))
    }

    fn shuffle<T>(&mut self, items: &mut [T]) {
        if let PropagationOrder::Shuffled(rng) = self {
            items.shuffle(rng.as_mut());
        }
    }
}

struct WorkQueue {
    eager: usize,
    /// Trail positions whose transitivity clauses are still to be examined.
    pending: Vec<usize>,
    next: usize,
}

impl WorkQueue {
    fn new(propagated: usize) -> Self {
        WorkQueue { eager: propagated, pending: Vec::new(), next: 0 }
    }

    fn next_pending(&mut self, order: &mut PropagationOrder) -> Option<usize> {
        match order {
            PropagationOrder::Canonical => {
                let pos = self.pending.get(self.next).copied();
                self.next += pos.is_some() as usize;
                pos
            }
            PropagationOrder::Shuffled(rng) => {
                let rest = self.pending.len() - self.next;
                if rest == 0 {
                    return None;
                }
                let pick = self.next + rng.gen_range(0..rest);
                self.pending.swap(self.next, pick);
                self.next += 1;
                Some(self.pending[self.next - 1])
            }
        }
    }
}

enum ClauseStep {
    Quiet,
    Assigned,
    Falsified,
}

/// Voters whose every strict preference prevails socially in every profile.
pub fn detect_dictators(a: &CellAssignment, domain: &Domain) -> Result<BTreeSet<usize>> {
    if !a.is_complete() {
        return Err(Error::State(format!("{} cells still unassigned", a.unknown_count())));
    }
    let mut out = BTreeSet::new();
    for d in 0..domain.voters() {
        let dictates = domain.profile_ids().all(|pid| {
            domain.pairs().all(|(x, y)| {
                !domain.voter_strict(pid, d, x, y)
                    || (a.state(Cell::new(pid, x, y)) == TriState::True
                        && a.state(Cell::new(pid, y, x)) == TriState::False)
            })
        });
        if dictates {
            out.insert(d);
        }
    }
    Ok(out)
}
