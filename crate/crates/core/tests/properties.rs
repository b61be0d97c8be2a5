use std::collections::BTreeSet;

use arrowlab::axioms::{propagate_to_fixpoint, PropagationOrder, Rule};
use arrowlab::checker::{check_text, mutate, MutationKind};
use arrowlab::cnf::{export_cnf, VarMap};
use arrowlab::model::{enumerate_weak_orders, fubini, is_weak_order};
use arrowlab::trace::prove;
use arrowlab::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cs23() -> ConstraintSet {
    build_constraints(&Config::new(2, 3).unwrap(), true)
}

/// Determined cells after propagating `decisions` in the given order, or
/// `None` on conflict.
fn closure(cs: &ConstraintSet, decisions: &[(usize, bool)], order: &mut PropagationOrder) -> Option<BTreeSet<(usize, bool)>> {
    let mut a = cs.new_assignment();
    for &(i, v) in decisions {
        if a.state_at(i).is_unknown() {
            a.decide(a.cell_at(i), v).unwrap();
        }
    }
    if cs.propagate(&mut a, order).is_some() {
        return None;
    }
    Some((0..a.num_cells()).filter_map(|i| a.state_at(i).as_bool().map(|v| (i, v))).collect())
}

/// Re-derives one propagated step from the assignment state just before it.
fn step_is_unit_consequence(d: &Domain, before: &CellAssignment, s: &Step) -> bool {
    let val = |c: Cell| before.state(c).as_bool();
    let (p, x, y) = (s.cell.profile, s.cell.x(), s.cell.y());
    match s.reason.rule {
        Rule::Unanimity => {
            if s.value {
                d.unanimous_strict(p, x, y)
            } else {
                d.unanimous_strict(p, y, x)
            }
        }
        Rule::Completeness => s.value && val(s.cell.converse()) == Some(false),
        Rule::Iia => {
            let src = s.reason.antecedents[0];
            src.profile != p
                && (src.x(), src.y()) == (x, y)
                && d.agree_on_pair(src.profile, p, x, y)
                && val(src) == Some(s.value)
        }
        Rule::Transitivity => {
            // some clause over the profile has the step as its last open literal
            let m = d.alternatives();
            let lit = |a: usize, b: usize, sat: bool| (Cell::new(p, a, b), sat);
            let mut ok = false;
            for a in 0..m {
                for b in (0..m).filter(|&b| b != a) {
                    for c in (0..m).filter(|&c| c != a && c != b) {
                        let clause = [lit(a, b, false), lit(b, c, false), lit(a, c, true)];
                        let Some(me) = clause.iter().position(|&(cell, _)| cell == s.cell) else { continue };
                        let others_false = clause
                            .iter()
                            .enumerate()
                            .all(|(i, &(cell, sat))| i == me || val(cell) == Some(!sat));
                        let ante: BTreeSet<Cell> =
                            clause.iter().enumerate().filter(|&(i, _)| i != me).map(|(_, l)| l.0).collect();
                        let cited: BTreeSet<Cell> = s.reason.antecedents.iter().copied().collect();
                        ok |= others_false && clause[me].1 == s.value && ante == cited;
                    }
                }
            }
            ok
        }
        Rule::NonDictClause(k) => {
            let strict_cells: Vec<(Cell, bool)> = d
                .profile_ids()
                .flat_map(|q| d.pairs().map(move |(a, b)| (q, a, b)))
                .filter(|&(q, a, b)| d.voter_strict(q, k, a, b))
                .flat_map(|(q, a, b)| [(Cell::new(q, a, b), false), (Cell::new(q, b, a), true)])
                .collect();
            strict_cells.iter().any(|&(c, sat)| c == s.cell && sat == s.value)
                && strict_cells.iter().all(|&(c, sat)| c == s.cell || val(c) == Some(!sat))
        }
        Rule::Decision => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn propagation_is_confluent(decisions in prop::collection::vec((0usize..1014, any::<bool>()), 0..4), seed in any::<u64>()) {
        let cs = cs23();
        let canonical = closure(&cs, &decisions, &mut PropagationOrder::Canonical);
        let shuffled = closure(&cs, &decisions, &mut PropagationOrder::shuffled(seed));
        prop_assert_eq!(canonical, shuffled);
    }

    #[test]
    fn propagation_is_idempotent_and_sound(decisions in prop::collection::vec((0usize..1014, any::<bool>()), 0..3)) {
        let cs = cs23();
        let mut a = cs.new_assignment();
        for &(i, v) in &decisions {
            if a.state_at(i).is_unknown() {
                a.decide(a.cell_at(i), v).unwrap();
            }
        }
        let start = a.len();
        let fx = propagate_to_fixpoint(a.clone(), &cs);
        // soundness, replaying the trail
        let mut replay = a.clone();
        for s in &fx.steps {
            prop_assert!(step_is_unit_consequence(cs.domain(), &replay, s), "unsound step {:?}", s);
            replay.decide(s.cell, s.value).unwrap();
        }
        prop_assert_eq!(fx.assignment.len(), start + fx.steps.len());
        if fx.conflict.is_none() {
            let again = propagate_to_fixpoint(fx.assignment.clone(), &cs);
            prop_assert!(again.steps.is_empty());
            prop_assert!(again.conflict.is_none());
            // IIA closure
            let d = cs.domain();
            let b = &fx.assignment;
            for (x, y) in d.pairs() {
                for p in d.profile_ids() {
                    let sp = b.state(Cell::new(p, x, y));
                    for q in d.profile_ids().filter(|&q| q > p) {
                        if d.agree_on_pair(p, q, x, y) {
                            prop_assert_eq!(sp, b.state(Cell::new(q, x, y)));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mutated_traces_are_rejected(seed in any::<u64>(), kind in 0usize..4) {
        let (_, t) = prove(&Config::new(2, 3).unwrap()).unwrap();
        let kind = [MutationKind::FlipLiteral, MutationKind::SwapRef, MutationKind::SwapRule, MutationKind::DeleteDischarge][kind];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if let Some(text) = mutate(&t, kind, &mut rng) {
            prop_assert!(!check_text(&text).is_valid());
        }
    }

    #[test]
    fn profile_codec_round_trips(pid in 0u32..2197) {
        let d = Domain::new(Config::new(3, 3).unwrap());
        let p = d.profile(ProfileId(pid));
        prop_assert_eq!(d.profile_id(&p).unwrap(), ProfileId(pid));
    }

    #[test]
    fn var_map_agrees_with_cell_index(var in 1u32..=1014) {
        let d = Domain::new(Config::new(2, 3).unwrap());
        let vm = VarMap::new(&d);
        let cell = vm.cell(var).unwrap();
        prop_assert_eq!(vm.var(cell), var);
        prop_assert_eq!(CellAssignment::new(&d).index_of(cell) as u32 + 1, var);
    }
}

#[test]
fn enumerated_orders_are_weak_orders() {
    for m in 1..=4 {
        let orders = enumerate_weak_orders(m).unwrap();
        assert_eq!(orders.len() as u64, fubini(m));
        assert!(orders.iter().all(|o| is_weak_order(m, o.matrix())));
    }
}

#[test]
fn twenty_orders_agree_after_r12_assumption() {
    let cs = cs23();
    let d = cs.domain();
    let r12 = d.profile_from_notation(&["a>b>c", "a>c>b"]).unwrap();
    let a = cs.new_assignment();
    let decisions = [(a.index_of(Cell::new(r12, 1, 2)), true), (a.index_of(Cell::new(r12, 2, 1)), false)];
    let reference = closure(&cs, &decisions, &mut PropagationOrder::Canonical);
    for seed in 0..20 {
        assert_eq!(closure(&cs, &decisions, &mut PropagationOrder::shuffled(seed)), reference);
    }
}

#[test]
fn engine_models_satisfy_the_exported_cnf() {
    let cfg = Config::new(2, 3).unwrap();
    let (doc, _, _) = export_cnf(&cfg, false);
    let (with_nd, _, _) = export_cnf(&cfg, true);
    let (models, complete) = enumerate_models(&cfg, usize::MAX).unwrap();
    assert!(complete);
    for m in &models {
        assert!(doc.satisfied_by(&m.cells));
        assert!(!with_nd.satisfied_by(&m.cells));
        assert_eq!(m.dictators.len(), 1);
    }
}

#[test]
fn constraint_stats_match_cnf_families() {
    for (n, m) in [(2, 3), (3, 3), (2, 4)] {
        let cfg = Config::new(n, m).unwrap();
        let s = build_constraints(&cfg, true).stats();
        let (_, _, f) = export_cnf(&cfg, true);
        assert_eq!(s.completeness_clauses, f.completeness);
        assert_eq!(s.transitivity_clauses, f.transitivity);
        assert_eq!(s.unanimity_units, f.unanimity);
        assert_eq!(2 * s.iia_links, f.iia);
        assert_eq!(s.non_dictatorship_clauses, f.non_dictatorship);
    }
}
