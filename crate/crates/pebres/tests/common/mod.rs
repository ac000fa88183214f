//! Oracles shared by the integration tests and the acceptance target. They
//! are written from the definitions and share no code paths with the
//! library's truth-table machinery.
#![allow(dead_code)]

use pebres::blob::{BlobConfig, Subconfig};
use pebres::dag::{bit, members, LayeredDag, VSet};
use pebres::formula::{pebbling_contradiction, var, Clause, PebblingFormula};
use pebres::pebbling::{exact_price, Mode, SearchLimits};
use pebres::resolution::{build_from_pebbling, build_linear, DerivationTrace};
use std::collections::HashMap;

/// Plain DPLL with unit propagation.
pub fn satisfiable(clauses: &[Vec<i32>]) -> bool {
    let mut cls: Vec<Vec<i32>> = clauses.to_vec();
    loop {
        if cls.iter().any(|c| c.is_empty()) {
            return false;
        }
        match cls.iter().find(|c| c.len() == 1) {
            Some(c) => {
                let l = c[0];
                cls = assign(&cls, l);
            }
            None => break,
        }
    }
    let Some(&l) = cls.first().and_then(|c| c.first()) else { return true };
    satisfiable(&assign(&cls, l)) || satisfiable(&assign(&cls, -l))
}

fn assign(cls: &[Vec<i32>], l: i32) -> Vec<Vec<i32>> {
    cls.iter()
        .filter(|c| !c.contains(&l))
        .map(|c| c.iter().copied().filter(|&x| x != -l).collect())
        .collect()
}

/// Does C ∪ truth(S) entail All⁺(B)? Checked as unsatisfiability of
/// C ∪ truth(S) ∪ ¬All⁺(B).
pub fn oracle_entails(c: &[&Clause], s: VSet, b: VSet, d: usize) -> bool {
    let mut cls: Vec<Vec<i32>> = c.iter().map(|c| c.lits().to_vec()).collect();
    for v in members(s) {
        cls.push((1..=d).map(|i| var(d, v, i) as i32).collect());
    }
    for v in members(b) {
        for i in 1..=d {
            cls.push(vec![-(var(d, v, i) as i32)]);
        }
    }
    !satisfiable(&cls)
}

/// The induced blob configuration by direct search over (B, S, C_B) with
/// precise implication checked clause by clause, vertex by vertex.
pub fn oracle_induced(cfg: &[Clause], dag: &LayeredDag, d: usize) -> BlobConfig {
    let m = cfg.len();
    let mut memo: HashMap<(usize, VSet, VSet), bool> = HashMap::new();
    let mut ent = |c: usize, s: VSet, b: VSet| -> bool {
        *memo.entry((c, s, b)).or_insert_with(|| {
            let picked: Vec<&Clause> = (0..m).filter(|i| c >> i & 1 == 1).map(|i| &cfg[i]).collect();
            oracle_entails(&picked, s, b, d)
        })
    };
    let n = dag.len();
    let mut out = BlobConfig::new();
    for b in 1u64..1 << n {
        if !dag.is_chain(b) {
            continue;
        }
        let lpp = dag.lpp(b);
        for s in 0u64..1 << n {
            if s & b != 0 || !ent((1 << m) - 1, s, b) {
                continue;
            }
            let sc = Subconfig::new(b, s & lpp);
            if out.contains(&sc) {
                continue;
            }
            let precise = (0..1usize << m).any(|c| {
                ent(c, s, b)
                    && (0..m).filter(|i| c >> i & 1 == 1).all(|i| !ent(c & !(1 << i), s, b))
                    && members(s).all(|v| !ent(c, s & !bit(v), b))
                    && members(b).all(|v| !ent(c, s, b & !bit(v)))
            });
            if precise {
                out.insert(sc);
            }
        }
    }
    out
}

/// Builder traces of *Peb^d for a graph: linear and from an optimal black
/// pebbling.
pub fn star_traces(g: &LayeredDag, d: usize) -> Vec<(String, PebblingFormula, DerivationTrace)> {
    let f = pebbling_contradiction(g, d).unwrap().strip_targets();
    let black = exact_price(g, Mode::Black, SearchLimits::with_budget(g.height() + 3)).unwrap();
    let p = pebres::pebbling::Pebbling::from_moves(black.witness);
    vec![
        ("linear".to_string(), f.clone(), build_linear(&f)),
        ("pebbling".to_string(), f.clone(), build_from_pebbling(&f, &p).unwrap()),
    ]
}

/// Builder traces of Peb^d (with target axioms).
pub fn peb_traces(g: &LayeredDag, d: usize) -> Vec<(String, PebblingFormula, DerivationTrace)> {
    let f = pebbling_contradiction(g, d).unwrap();
    let black = exact_price(g, Mode::Black, SearchLimits::with_budget(g.height() + 3)).unwrap();
    let p = pebres::pebbling::Pebbling::from_moves(black.witness);
    vec![
        ("linear".to_string(), f.clone(), build_linear(&f)),
        ("pebbling".to_string(), f.clone(), build_from_pebbling(&f, &p).unwrap()),
    ]
}
