//! Case-split search producing a closed refutation tree.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::axioms::{
    build_constraints, detect_dictators, Cell, CellAssignment, Conflict, ConflictKind, ConstraintSet,
    PropagationOrder, Step, TriState,
};
use crate::error::{Error, Result};
use crate::model::Config;

/// Deterministic choice of the next cell to split on.
///
/// Prefers the split candidates of the constraint set (lone-dissenter pairs,
/// lowest profile first), returning the candidate cell when it is unknown and
/// its converse otherwise. Falls back to the lowest unknown cell.
pub fn pick_split_cell(a: &CellAssignment, cs: &ConstraintSet) -> Result<Cell> {
    for cell in cs.split_candidates() {
        if a.state(cell).is_unknown() {
            return Ok(cell);
        }
        if a.state(cell.converse()).is_unknown() {
            return Ok(cell.converse());
        }
    }
    (0..a.num_cells())
        .find(|&i| a.state_at(i).is_unknown())
        .map(|i| a.cell_at(i))
        .ok_or_else(|| Error::State("no unknown cell left to split on".into()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Node {
    Leaf(Conflict),
    Split { cell: Cell, branches: Vec<Branch> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub value: bool,
    /// Propagation steps made under this decision, before `outcome`.
    pub steps: Vec<Step>,
    pub outcome: Node,
}

/// A closed case-split tree: every leaf is a conflict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refutation {
    pub config: Config,
    /// Consequences of the premises alone, before any split.
    pub root_steps: Vec<Step>,
    pub root: Node,
}

impl Node {
    pub fn leaves(&self) -> Vec<&Conflict> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Conflict>) {
        match self {
            Node::Leaf(c) => out.push(c),
            Node::Split { branches, .. } => branches.iter().for_each(|b| b.outcome.collect_leaves(out)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { branches, .. } => 1 + branches.iter().map(|b| b.outcome.depth()).max().unwrap_or(0),
        }
    }

    pub fn splits(&self) -> usize {
        match self {
            Node::Leaf(_) => 0,
            Node::Split { branches, .. } => 1 + branches.iter().map(|b| b.outcome.splits()).sum::<usize>(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Node::Leaf(c) => json!({ "conflict": c.kind.to_string(), "witness": c.witness }),
            Node::Split { cell, branches } => json!({
                "split": cell.to_string(),
                "branches": branches.iter().map(|b| json!({
                    "value": b.value,
                    "steps": b.steps.len(),
                    "outcome": b.outcome.to_json(),
                })).collect::<Vec<_>>(),
            }),
        }
    }
}

impl Refutation {
    pub fn leaves(&self) -> Vec<&Conflict> {
        self.root.leaves()
    }

    /// Leaves reached from the root by following the given branch values.
    pub fn leaf_kinds(&self) -> Vec<ConflictKind> {
        self.leaves().iter().map(|c| c.kind).collect()
    }

    /// Paths `(cell, value)*` from the root to each leaf.
    pub fn paths(&self) -> Vec<(Vec<(Cell, bool)>, &Conflict)> {
        fn walk<'a>(n: &'a Node, path: &mut Vec<(Cell, bool)>, out: &mut Vec<(Vec<(Cell, bool)>, &'a Conflict)>) {
            match n {
                Node::Leaf(c) => out.push((path.clone(), c)),
                Node::Split { cell, branches } => {
                    for b in branches {
                        path.push((*cell, b.value));
                        walk(&b.outcome, path, out);
                        path.pop();
                    }
                }
            }
        }
        let mut out = Vec::new();
        walk(&self.root, &mut Vec::new(), &mut out);
        out
    }

    pub fn total_steps(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Leaf(_) => 0,
                Node::Split { branches, .. } => {
                    branches.iter().map(|b| 1 + b.steps.len() + count(&b.outcome)).sum()
                }
            }
        }
        self.root_steps.len() + count(&self.root)
    }

    pub fn summary_json(&self) -> serde_json::Value {
        json!({
            "voters": self.config.voters(),
            "alternatives": self.config.alternatives(),
            "root_steps": self.root_steps.len(),
            "splits": self.root.splits(),
            "depth": self.root.depth(),
            "leaves": self.leaves().len(),
            "total_steps": self.total_steps(),
            "tree": self.root.to_json(),
        })
    }
}

/// Refutes the premises for `cfg` with canonical propagation.
pub fn refute(cfg: &Config) -> Result<Refutation> {
    let cs = build_constraints(cfg, true);
    refute_with(&cs, &mut PropagationOrder::Canonical)
}

/// Refutes the given constraint set. Fails with [`Error::TheoremFalsified`]
/// if some branch reaches a complete assignment without conflict.
pub fn refute_with(cs: &ConstraintSet, order: &mut PropagationOrder) -> Result<Refutation> {
    let mut a = cs.new_assignment();
    let conflict = cs.propagate(&mut a, order);
    let root_steps = a.trail().to_vec();
    let root = match conflict {
        Some(c) => Node::Leaf(c),
        None => {
            let mut s = Searcher { cs, order };
            s.expand(&mut a, 0)?
        }
    };
    Ok(Refutation { config: *cs.config(), root_steps, root })
}

struct Searcher<'a> {
    cs: &'a ConstraintSet,
    order: &'a mut PropagationOrder,
}

impl Searcher<'_> {
    fn expand(&mut self, a: &mut CellAssignment, depth: usize) -> Result<Node> {
        if a.is_complete() {
            return Err(Error::TheoremFalsified { depth, model: a.to_bits().unwrap_or_default() });
        }
        let cell = pick_split_cell(a, self.cs)?;
        self.split(a, cell, depth, true)
    }

    /// Splits on `cell`. With `pair` set and the converse still unknown,
    /// each branch immediately splits on the converse as well, and
    /// propagation runs only once both values are fixed.
    fn split(&mut self, a: &mut CellAssignment, cell: Cell, depth: usize, pair: bool) -> Result<Node> {
        let mut branches = Vec::with_capacity(2);
        for value in [true, false] {
            let cp = a.checkpoint();
            a.decide(cell, value)?;
            let converse_open = a.state(cell.converse()) == TriState::Unknown;
            let (steps, outcome) = if pair && converse_open {
                (Vec::new(), self.split(a, cell.converse(), depth + 1, false)?)
            } else {
                let start = a.len();
                let conflict = self.cs.propagate(a, self.order);
                let steps = a.trail()[start..].to_vec();
                match conflict {
                    Some(c) => (steps, Node::Leaf(c)),
                    None => {
                        let next = self.expand(a, depth + 1)?;
                        (steps, next)
                    }
                }
            };
            a.restore(cp);
            branches.push(Branch { value, steps, outcome });
        }
        Ok(Node::Split { cell, branches })
    }
}

/// A complete assignment satisfying every premise except non-dictatorship.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Model {
    pub cells: Vec<bool>,
    pub dictators: BTreeSet<usize>,
}

/// Enumerates models of the premises without the voter clauses.
///
/// Returns at most `limit` models and a flag telling whether the enumeration
/// was exhaustive.
pub fn enumerate_models(cfg: &Config, limit: usize) -> Result<(Vec<Model>, bool)> {
    let cs = build_constraints(cfg, false);
    let mut a = cs.new_assignment();
    let mut out = Vec::new();
    if cs.propagate(&mut a, &mut PropagationOrder::Canonical).is_some() {
        return Ok((out, true));
    }
    let complete = collect_models(&cs, &mut a, &mut out, limit)?;
    Ok((out, complete))
}

fn collect_models(cs: &ConstraintSet, a: &mut CellAssignment, out: &mut Vec<Model>, limit: usize) -> Result<bool> {
    if a.is_complete() {
        if out.len() >= limit {
            return Ok(false);
        }
        let dictators = detect_dictators(a, cs.domain())?;
        out.push(Model { cells: a.to_bits().unwrap_or_default(), dictators });
        return Ok(true);
    }
    let cell = pick_split_cell(a, cs)?;
    for value in [true, false] {
        let cp = a.checkpoint();
        a.decide(cell, value)?;
        let ok = cs.propagate(a, &mut PropagationOrder::Canonical).is_none();
        let exhausted = !ok || collect_models(cs, a, out, limit)?;
        a.restore(cp);
        if !exhausted {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn root_case_cell_two_voters() {
        let cs = build_constraints(&Config::new(2, 3).unwrap(), true);
        let mut a = cs.new_assignment();
        assert!(cs.propagate(&mut a, &mut PropagationOrder::Canonical).is_none());
        let cell = pick_split_cell(&a, &cs).unwrap();
        let r12 = cs.domain().profile_from_notation(&["a>b>c", "a>c>b"]).unwrap();
        assert_eq!(cell, Cell::new(r12, 1, 2));
    }

    #[test]
    fn refutation_two_voters_has_four_cases() {
        let r = refute(&Config::new(2, 3).unwrap()).unwrap();
        assert_eq!(
            r.leaf_kinds(),
            vec![
                ConflictKind::TransitivityViolation,
                ConflictKind::DictatorshipViolation(0),
                ConflictKind::DictatorshipViolation(1),
                ConflictKind::CompletenessViolation,
            ]
        );
    }

    #[test]
    fn every_model_has_one_dictator() {
        let (models, complete) = enumerate_models(&Config::new(2, 3).unwrap(), usize::MAX).unwrap();
        assert!(complete);
        assert!(!models.is_empty());
        assert!(models.iter().all(|m| m.dictators.len() == 1));
        for k in 0..2 {
            assert!(models.iter().any(|m| m.dictators == BTreeSet::from([k])));
        }
    }

    #[test]
    fn model_limit_flags_partial() {
        let (models, complete) = enumerate_models(&Config::new(2, 3).unwrap(), 1).unwrap();
        assert_eq!(models.len(), 1);
        assert!(!complete);
    }
}
