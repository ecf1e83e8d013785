use std::collections::BTreeSet;

use dynloop::oracle::build_loop_forest;
use dynloop::{DynamicLoopForest, IrreduciblePolicy, LoopType, Outcome, VertexId};

fn v(i: usize) -> VertexId {
    VertexId::new(i)
}

const R: usize = 0;
const A: usize = 1;
const B: usize = 2;
const C: usize = 3;

fn build(n: usize, edges: &[(usize, usize)]) -> DynamicLoopForest {
    let mut f = DynamicLoopForest::new(n, v(R), IrreduciblePolicy::Reject).unwrap();
    for &(x, y) in edges {
        let r = f.insert_edge(v(x), v(y)).unwrap();
        assert_eq!(r.outcome, Outcome::Applied, "({x}, {y})");
    }
    f
}

fn agrees_with_oracle(f: &DynamicLoopForest) -> bool {
    let oracle = build_loop_forest(f.graph(), f.tree()).unwrap();
    f.lnf().unwrap().verify_against(&oracle)
}

#[test]
fn self_edge_marks_self() {
    let mut f = build(2, &[(R, A)]);
    f.insert_edge(v(A), v(A)).unwrap();
    assert_eq!(f.loop_type(v(A)), Ok(LoopType::SelfLoop));
    assert_eq!(f.lnf().unwrap().loop_counts(), [1, 0]);
}

#[test]
fn back_edge_creates_loop() {
    let f = build(3, &[(R, A), (A, B), (B, A)]);
    assert_eq!(f.loop_type(v(A)), Ok(LoopType::Reducible));
    assert_eq!(f.loop_header(v(B)), Ok(Some(v(A))));
    assert_eq!(f.loop_header(v(A)), Ok(None));
    assert!(agrees_with_oracle(&f));
}

#[test]
fn cross_entry_is_irreducible() {
    let mut f = build(4, &[(R, A), (A, B), (B, A), (R, C)]);
    let before = f.lnf().unwrap().clone();
    let r = f.insert_edge(v(C), v(B)).unwrap();
    assert_eq!(r.outcome, Outcome::IrreducibleRejected);
    assert_eq!(f.lnf().unwrap(), &before);
    assert!(!f.graph().has_edge(v(C), v(B)));
}

#[test]
fn nested_loops_inner_first() {
    let f = build(4, &[(R, A), (A, B), (B, C), (C, B), (C, A)]);
    assert_eq!(f.loop_header(v(C)), Ok(Some(v(B))));
    assert_eq!(f.loop_header(v(B)), Ok(Some(v(A))));
    assert_eq!(f.loop_type(v(A)), Ok(LoopType::Reducible));
    assert_eq!(f.loop_type(v(B)), Ok(LoopType::Reducible));
    assert!(agrees_with_oracle(&f));
}

#[test]
fn nested_loops_outer_first() {
    let f = build(4, &[(R, A), (A, B), (B, C), (C, A), (C, B)]);
    assert_eq!(f.loop_header(v(C)), Ok(Some(v(B))));
    assert_eq!(f.loop_header(v(B)), Ok(Some(v(A))));
    assert!(agrees_with_oracle(&f));
}

#[test]
fn self_edge_removal() {
    let mut f = build(2, &[(R, A), (A, A)]);
    f.delete_edge(v(A), v(A)).unwrap();
    assert_eq!(f.loop_type(v(A)), Ok(LoopType::NonHeader));
    assert_eq!(f.lnf().unwrap().loop_counts(), [0, 0]);
}

#[test]
fn back_edge_removal_dissolves_loop() {
    let mut f = build(3, &[(R, A), (A, B), (B, A)]);
    f.delete_edge(v(B), v(A)).unwrap();
    assert_eq!(f.loop_type(v(A)), Ok(LoopType::NonHeader));
    assert_eq!(f.loop_header(v(B)), Ok(None));
}

#[test]
fn forward_edge_removal_is_cheap() {
    let mut f = build(4, &[(R, A), (A, B), (B, C), (C, A), (A, C)]);
    let before = f.lnf().unwrap().clone();
    let r = f.delete_edge(v(A), v(C)).unwrap();
    assert_eq!(f.lnf().unwrap(), &before);
    assert!(r.counters.k <= 2, "k = {}", r.counters.k);
}

#[test]
fn inner_back_edge_removal_reparents() {
    let mut f = build(4, &[(R, A), (A, B), (B, C), (C, B), (C, A)]);
    f.delete_edge(v(C), v(B)).unwrap();
    assert_eq!(f.loop_type(v(B)), Ok(LoopType::NonHeader));
    assert_eq!(f.loop_header(v(C)), Ok(Some(v(A))));
    assert_eq!(f.loop_header(v(B)), Ok(Some(v(A))));
    assert!(agrees_with_oracle(&f));
}

#[test]
fn loop_bodies() {
    let f = build(4, &[(R, A), (A, B), (B, A)]);
    let lnf = f.lnf().unwrap();
    assert_eq!(lnf.loop_body(v(A)).unwrap(), BTreeSet::from([v(A), v(B)]));
    let oracle = build_loop_forest(f.graph(), f.tree()).unwrap();
    let oracle_body: BTreeSet<_> = f
        .graph()
        .vertices()
        .filter(|&x| {
            let mut y = Some(x);
            while let Some(z) = y {
                if z == v(A) {
                    return true;
                }
                y = oracle.header(z);
            }
            false
        })
        .collect();
    assert_eq!(lnf.loop_body(v(A)).unwrap(), oracle_body);

    let f = build(4, &[(R, A), (A, B), (B, C), (C, B), (C, A)]);
    let lnf = f.lnf().unwrap();
    assert!(lnf
        .loop_body(v(A))
        .unwrap()
        .is_superset(&lnf.loop_body(v(B)).unwrap()));
    let loops = lnf.loops();
    assert_eq!(loops.len(), 2);
    assert!(loops.iter().all(|l| l.body.contains(&l.header)));
}

#[test]
fn loop_body_of_self_loop_is_an_error() {
    let f = build(2, &[(R, A), (A, A)]);
    assert!(f.lnf().unwrap().loop_body(v(A)).is_err());
}

#[test]
fn acyclic_dump() {
    let f = build(4, &[(R, A), (A, B), (R, C), (C, B)]);
    let dump = f.lnf().unwrap().dump();
    assert_eq!(dump.lines().count(), 4);
    assert!(dump.lines().all(|l| l.ends_with("NONHEADER -")));
}

#[test]
fn single_vertex_graph_only_toggles_self() {
    let mut f = DynamicLoopForest::new(1, v(0), IrreduciblePolicy::Reject).unwrap();
    for _ in 0..3 {
        f.insert_edge(v(0), v(0)).unwrap();
        assert_eq!(f.loop_type(v(0)), Ok(LoopType::SelfLoop));
        f.delete_edge(v(0), v(0)).unwrap();
        assert_eq!(f.loop_type(v(0)), Ok(LoopType::NonHeader));
    }
}
