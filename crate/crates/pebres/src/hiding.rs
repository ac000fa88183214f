//! Hiding and blocking sets, the level measure and potentials, tight sets,
//! hiding-set graphs, the spreading inequality and white elimination.

use crate::blob::{BlobConfig, Subconfig};
use crate::dag::{bit, contains, members, size, LayeredDag, VSet};
use crate::pebbling::BwConfig;
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

/// Constant of the blob-pebbling induction step.
pub const C_K: usize = 13;
/// Factor 2·C_K + 1 bounding potential by running maximum cost.
pub const BLOB_POTENTIAL_FACTOR: usize = 2 * C_K + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HidingError {
    #[error("vertex {0} is not hidden by X")]
    NotHidden(usize),
    #[error("set is not tight")]
    NotTight,
    #[error("U does not block the configuration")]
    NotBlocking,
    #[error("search budget exceeded after {0} candidate sets")]
    Budget(usize),
}

/// Vertices w such that every source path visiting w meets U.
pub fn hidden_vertices(dag: &LayeredDag, u: VSet) -> VSet {
    let mut h = 0;
    for v in 0..dag.len() {
        let ps = dag.pred_set(v);
        if contains(u, v) || (ps != 0 && ps & !h == 0) {
            h |= bit(v);
        }
    }
    h
}

/// Vertices reachable from `start` by paths avoiding `avoid`.
fn reach(dag: &LayeredDag, start: VSet, avoid: VSet) -> VSet {
    let mut r = 0;
    for v in 0..dag.len() {
        if contains(avoid, v) {
            continue;
        }
        if contains(start, v) || dag.preds(v).iter().any(|&p| contains(r, p)) {
            r |= bit(v);
        }
    }
    r
}

/// True iff U ∪ W meets every source path containing B (paths can be
/// taken to end at top(B)).
fn blocks_chain(dag: &LayeredDag, x: VSet, b: VSet) -> bool {
    let mut r = reach(dag, dag.sources(), x);
    for v in members(b) {
        if !contains(r, v) {
            return true;
        }
        r = reach(dag, bit(v), x);
    }
    false
}

/// U blocks [B]⟨W⟩: U meets every source path via B that W misses.
pub fn blocks(dag: &LayeredDag, u: VSet, sc: &Subconfig) -> bool {
    blocks_chain(dag, u | sc.w, sc.b)
}

pub fn blocks_config(dag: &LayeredDag, u: VSet, cfg: &BlobConfig) -> bool {
    cfg.iter().all(|sc| blocks(dag, u, sc))
}

/// W alone blocks B.
pub fn self_blocking(dag: &LayeredDag, sc: &Subconfig) -> bool {
    blocks(dag, 0, sc)
}

/// U hides [B]⟨W⟩: U ∪ W hides bot(B).
pub fn hides_subconfig(dag: &LayeredDag, u: VSet, sc: &Subconfig) -> bool {
    contains(hidden_vertices(dag, u | sc.w), sc.bot())
}

fn max_level(dag: &LayeredDag, u: VSet) -> Option<usize> {
    members(u).map(|v| dag.level(v)).max()
}

fn min_level(dag: &LayeredDag, u: VSet) -> Option<usize> {
    members(u).map(|v| dag.level(v)).min()
}

/// m_j(U) = j + 2|U_{≥j}|, or 0 when U_{≥j} is empty.
pub fn partial_measure(dag: &LayeredDag, u: VSet, j: usize) -> usize {
    let k = size(u & dag.at_or_above_level(j));
    if k == 0 {
        0
    } else {
        j + 2 * k
    }
}

/// m_j(U) for j = 0, …, height.
pub fn measure_profile(dag: &LayeredDag, u: VSet) -> Vec<usize> {
    (0..=dag.height()).map(|j| partial_measure(dag, u, j)).collect()
}

pub fn measure(dag: &LayeredDag, u: VSet) -> usize {
    measure_profile(dag, u).into_iter().max().unwrap_or(0)
}

/// Measure of a multiset: repeated vertices are charged every time.
pub fn measure_multiset(dag: &LayeredDag, u: &[usize]) -> usize {
    (0..=dag.height())
        .map(|j| {
            let k = u.iter().filter(|&&v| dag.level(v) >= j).count();
            if k == 0 {
                0
            } else {
                j + 2 * k
            }
        })
        .max()
        .unwrap_or(0)
}

/// U ≼_m V: for all j ≥ 0 some i ≤ j has m_j(U) ≤ m_i(V).
pub fn measure_preorder(dag: &LayeredDag, u: VSet, v: VSet) -> bool {
    let pv = measure_profile(dag, v);
    let mut best = 0;
    for (j, mj) in measure_profile(dag, u).into_iter().enumerate() {
        best = best.max(pv[j]);
        if mj > best {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, Copy)]
pub enum Target<'a> {
    Bw(BwConfig),
    Blob(&'a BlobConfig),
}

#[derive(Debug, Clone, Serialize)]
pub struct PotentialReport {
    pub potential: usize,
    pub witness: Vec<usize>,
    /// False when the search budget ran out before the bound closed.
    pub exact: bool,
    pub sets_checked: usize,
}

/// Default cap on the candidate sets examined by [`potential`].
pub const POTENTIAL_BUDGET: usize = 50_000_000;

/// Iterate over k-subsets of `items` (as masks over `items`).
fn k_subsets(n: usize, k: usize, mut f: impl FnMut(u64) -> bool) {
    if k > n {
        return;
    }
    if k == 0 {
        f(0);
        return;
    }
    let mut c: u64 = (1u64 << k) - 1;
    let limit = if n == 64 { u64::MAX } else { 1u64 << n };
    while c < limit {
        if !f(c) {
            return;
        }
        let low = c & c.wrapping_neg();
        let r = c + low;
        if r == 0 {
            return;
        }
        c = (((r ^ c) >> 2) / low) | r;
    }
}

fn pick(items: &[usize], mask: u64) -> VSet {
    members(mask).fold(0, |acc, i| acc | bit(items[i]))
}

/// Minimum measure of a hiding set (black-white) or blocking set (blob).
/// Branch and bound: seeded with B or the blob bottoms, then subsets in
/// order of size while 2k is below the best measure found, since
/// m(U) ≥ m_0(U) = 2|U|.
pub fn potential(dag: &LayeredDag, target: Target, budget: usize) -> PotentialReport {
    let (valid, seed, cand): (Box<dyn Fn(VSet) -> bool>, VSet, VSet) = match target {
        Target::Bw(c) => {
            let cand = members(c.black).fold(0, |a, v| a | dag.below(v)) & !c.white;
            (Box::new(move |u| c.black & !hidden_vertices(dag, u | c.white) == 0), c.black, cand)
        }
        Target::Blob(cfg) => {
            let seed = cfg.iter().fold(0, |a, sc| a | bit(sc.bot()));
            let cand = cfg.iter().fold(0, |a, sc| a | dag.below(sc.top()));
            (Box::new(move |u| blocks_config(dag, u, cfg)), seed, cand)
        }
    };
    let items: Vec<usize> = members(cand).collect();
    let mut best = measure(dag, seed);
    let mut witness = seed;
    let mut checked = 0;
    let mut exact = true;
    let mut k = 0;
    while 2 * k < best && k <= items.len() {
        k_subsets(items.len(), k, |m| {
            checked += 1;
            if checked > budget {
                exact = false;
                return false;
            }
            let u = pick(&items, m);
            let mu = measure(dag, u);
            if mu < best && valid(u) {
                best = mu;
                witness = u;
            }
            true
        });
        if !exact {
            break;
        }
        k += 1;
    }
    PotentialReport { potential: best, witness: members(witness).collect(), exact, sets_checked: checked }
}

pub fn is_tight(dag: &LayeredDag, u: VSet) -> bool {
    members(u).all(|v| !contains(hidden_vertices(dag, u & !bit(v)), v))
}

/// The tight subset of U hiding the same vertices, built bottom-up: a vertex
/// is kept unless the vertices kept so far already hide it.
pub fn tight_subset(dag: &LayeredDag, u: VSet) -> VSet {
    let mut t = 0;
    for v in members(u) {
        if !contains(hidden_vertices(dag, t), v) {
            t |= bit(v);
        }
    }
    t
}

/// X⟨x⟩: the u ∈ X such that some source path ending in x meets X only in u.
pub fn necessary_hiding(dag: &LayeredDag, x_set: VSet, x: usize) -> Result<VSet, HidingError> {
    if !contains(hidden_vertices(dag, x_set), x) {
        return Err(HidingError::NotHidden(x));
    }
    Ok(members(x_set)
        .filter(|&u| {
            let others = x_set & !bit(u);
            contains(reach(dag, dag.sources(), others), u) && contains(reach(dag, bit(u), others), x)
        })
        .fold(0, |a, u| a | bit(u)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HidingSetGraph {
    pub vertices: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub components: Vec<Vec<usize>>,
}

/// Hiding set graph of a tight X. On pyramids the edge test reduces to
/// X⟨x⟩ ∩ X⟨y⟩ ≠ ∅; elsewhere the defining intersection is evaluated.
pub fn hiding_graph(dag: &LayeredDag, x_set: VSet) -> Result<HidingSetGraph, HidingError> {
    hiding_graph_with(dag, x_set, dag.is_pyramid())
}

pub fn hiding_graph_with(dag: &LayeredDag, x_set: VSet, shortcut: bool) -> Result<HidingSetGraph, HidingError> {
    if !is_tight(dag, x_set) {
        return Err(HidingError::NotTight);
    }
    let hv = hidden_vertices(dag, x_set);
    let verts: Vec<usize> = members(hv).collect();
    let nec: HashMap<usize, VSet> =
        verts.iter().map(|&v| (v, necessary_hiding(dag, x_set, v).expect("hidden"))).collect();
    let zone: HashMap<usize, VSet> =
        verts.iter().map(|&v| (v, dag.below(v) & hidden_vertices(dag, nec[&v]))).collect();
    let mut edges = Vec::new();
    for (i, &a) in verts.iter().enumerate() {
        for &b in &verts[i + 1..] {
            let adjacent = if shortcut { nec[&a] & nec[&b] != 0 } else { zone[&a] & zone[&b] != 0 };
            if adjacent {
                edges.push((a, b));
            }
        }
    }
    let mut comp: HashMap<usize, usize> = verts.iter().map(|&v| (v, v)).collect();
    fn root(c: &mut HashMap<usize, usize>, v: usize) -> usize {
        let p = c[&v];
        if p == v {
            return v;
        }
        let r = root(c, p);
        c.insert(v, r);
        r
    }
    for &(a, b) in &edges {
        let (ra, rb) = (root(&mut comp, a), root(&mut comp, b));
        if ra != rb {
            comp.insert(ra.max(rb), ra.min(rb));
        }
    }
    let mut groups: Vec<VSet> = Vec::new();
    let mut index: HashMap<usize, usize> = HashMap::new();
    for &v in &verts {
        let r = root(&mut comp, v);
        let k = *index.entry(r).or_insert_with(|| {
            groups.push(0);
            groups.len() - 1
        });
        groups[k] |= bit(v);
    }
    for g in &groups {
        debug_assert_eq!(*g, hidden_vertices(dag, x_set & *g));
    }
    Ok(HidingSetGraph {
        vertices: verts,
        edges,
        components: groups.into_iter().map(|g| members(g).collect()).collect(),
    })
}

pub fn is_hiding_connected(dag: &LayeredDag, x_set: VSet) -> bool {
    x_set != 0 && hiding_graph(dag, x_set).map(|g| g.components.len() == 1).unwrap_or(false)
}

/// mhs_j(X): least |Y| with Y on levels ≥ j hiding X_{≥j}.
pub fn mhs(dag: &LayeredDag, j: usize, x_set: VSet) -> usize {
    let t = x_set & dag.at_or_above_level(j);
    if t == 0 {
        return 0;
    }
    let cand = members(t).fold(0, |a, v| a | dag.below(v)) & dag.at_or_above_level(j);
    let items: Vec<usize> = members(cand).collect();
    for k in 1..size(t) {
        let mut found = false;
        k_subsets(items.len(), k, |m| {
            if t & !hidden_vertices(dag, pick(&items, m)) == 0 {
                found = true;
                return false;
            }
            true
        });
        if found {
            return k;
        }
    }
    size(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Partial,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpreadingReport {
    pub verdict: Verdict,
    /// Violating (X, j).
    pub counterexample: Option<(Vec<usize>, usize)>,
    pub sets_checked: usize,
    pub inequalities_checked: usize,
    pub note: String,
}

/// Largest graph checked exhaustively by [`spreading_check`].
pub const SPREADING_MAX_VERTICES: usize = 16;

/// Check |X| ≥ mhs_j(hidden(X)) + j − minlevel(X) for every tight
/// hiding-connected X and j = 1, …, maxlevel(hidden(X)).
pub fn spreading_check(dag: &LayeredDag) -> SpreadingReport {
    let n = dag.len();
    if n > SPREADING_MAX_VERTICES {
        return SpreadingReport {
            verdict: Verdict::Partial,
            counterexample: None,
            sets_checked: 0,
            inequalities_checked: 0,
            note: format!("{n} vertices exceed the exhaustive limit of {SPREADING_MAX_VERTICES}"),
        };
    }
    let mut memo: HashMap<(usize, VSet), usize> = HashMap::new();
    let mut sets = 0;
    let mut ineq = 0;
    for x in 1u64..1 << n {
        if !is_tight(dag, x) || !is_hiding_connected(dag, x) {
            continue;
        }
        sets += 1;
        let hx = hidden_vertices(dag, x);
        let lo = min_level(dag, x).expect("nonempty");
        for j in 1..=max_level(dag, hx).expect("nonempty") {
            ineq += 1;
            let key = (j, hx & dag.at_or_above_level(j));
            let m = *memo.entry(key).or_insert_with(|| mhs(dag, j, hx));
            if size(x) + lo < m + j {
                return SpreadingReport {
                    verdict: Verdict::Fail,
                    counterexample: Some((members(x).collect(), j)),
                    sets_checked: sets,
                    inequalities_checked: ineq,
                    note: format!("|X| = {} < mhs_{j} = {m} + {j} - {lo}", size(x)),
                };
            }
        }
    }
    SpreadingReport {
        verdict: Verdict::Pass,
        counterexample: None,
        sets_checked: sets,
        inequalities_checked: ineq,
        note: "exhaustive".into(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WhiteElimination {
    pub config: BlobConfig,
    pub self_blockers: Vec<Subconfig>,
    /// (subconfiguration before elimination, removed white vertex).
    pub eliminated: Vec<(Subconfig, usize)>,
    pub hidden: BlobConfig,
    pub just_blocked: BlobConfig,
    pub bl_h: Vec<usize>,
    pub bl_b: Vec<usize>,
    pub w_h: Vec<usize>,
    pub w_b: Vec<usize>,
}

/// Drop self-blockers, classify the remaining subconfigurations as hidden
/// or just blocked by U, then remove every white pebble (in id order) that
/// U and the remaining whites can do without.
pub fn white_eliminate(dag: &LayeredDag, cfg: &BlobConfig, u: VSet) -> Result<WhiteElimination, HidingError> {
    if !blocks_config(dag, u, cfg) {
        return Err(HidingError::NotBlocking);
    }
    let (self_blockers, rest): (Vec<Subconfig>, Vec<Subconfig>) =
        cfg.iter().partition(|sc| self_blocking(dag, sc));
    let (hidden, just_blocked): (BlobConfig, BlobConfig) =
        rest.iter().partition(|sc| hides_subconfig(dag, u, sc));
    let bottoms = |c: &BlobConfig| members(c.iter().fold(0, |a, sc| a | bit(sc.bot()))).collect();
    let whites =
        |c: &BlobConfig| members(c.iter().fold(0, |a, sc| a | (sc.w & dag.below(sc.bot())))).collect();
    let mut out = BlobConfig::new();
    let mut eliminated = Vec::new();
    for sc in &rest {
        let mut w = sc.w;
        for v in members(sc.w) {
            if blocks_chain(dag, u | (w & !bit(v)), sc.b) {
                w &= !bit(v);
                eliminated.push((*sc, v));
            }
        }
        out.insert(Subconfig::new(sc.b, w));
    }
    Ok(WhiteElimination {
        config: out,
        self_blockers,
        eliminated,
        bl_h: bottoms(&hidden),
        bl_b: bottoms(&just_blocked),
        w_h: whites(&hidden),
        w_b: whites(&just_blocked),
        hidden,
        just_blocked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hidden_examples() {
        let g = LayeredDag::pyramid(2).unwrap();
        assert_eq!(hidden_vertices(&g, g.vset(&["u1", "u2"])), g.vset(&["u1", "u2", "z"]));
        assert_eq!(hidden_vertices(&g, g.vset(&["s1"])), g.vset(&["s1"]));
    }

    #[test]
    fn measure_examples() {
        let g = LayeredDag::pyramid(6).unwrap();
        assert_eq!(measure(&g, g.vset(&["s1", "s2"])), 4);
        assert_eq!(measure(&g, g.vset(&["w1"])), 5);
        assert_eq!(measure(&g, g.vset(&["s1", "s2", "s3"])), 6);
        assert_eq!(measure(&g, g.vset(&["w1", "s3"])), 5);
        assert!(!measure_preorder(&g, g.vset(&["s1", "s2"]), g.vset(&["w1"])));
        let v = g.vertex("w1").unwrap();
        assert_eq!(measure_multiset(&g, &[v, v]), 7);
    }

    #[test]
    fn potentials() {
        for h in 1..=3 {
            let g = LayeredDag::pyramid(h).unwrap();
            let z = bit(g.sink());
            assert_eq!(potential(&g, Target::Bw(BwConfig::new(z, 0)), POTENTIAL_BUDGET).potential, h + 2);
            let cfg = crate::blob::complete_goal(&g);
            assert_eq!(potential(&g, Target::Blob(&cfg), POTENTIAL_BUDGET).potential, h + 2);
        }
    }

    #[test]
    fn tight_and_necessary() {
        let g = LayeredDag::pyramid(2).unwrap();
        assert_eq!(tight_subset(&g, g.vset(&["s1", "s2", "u1"])), g.vset(&["s1", "s2"]));
        assert_eq!(tight_subset(&g, g.vset(&["s2", "u1"])), g.vset(&["s2", "u1"]));
        let x = g.vset(&["u1", "u2"]);
        assert_eq!(necessary_hiding(&g, x, g.sink()).unwrap(), x);
        let u1 = g.vertex("u1").unwrap();
        assert_eq!(necessary_hiding(&g, g.vset(&["u1", "s1", "s2"]), u1).unwrap(), 0);
        assert_eq!(necessary_hiding(&g, g.vset(&["s1"]), u1), Err(HidingError::NotHidden(u1)));
    }

    #[test]
    fn graph_pi2() {
        let g = LayeredDag::pyramid(2).unwrap();
        let hg = hiding_graph(&g, g.vset(&["s1", "s2"])).unwrap();
        assert_eq!(hg.components, vec![vec![0, 1, 3]]);
        assert_eq!(hg.edges, vec![(0, 3), (1, 3)]);
        assert_eq!(hiding_graph(&g, g.vset(&["s1", "s2", "u1"])), Err(HidingError::NotTight));
    }

    #[test]
    fn mhs_examples() {
        let g = LayeredDag::pyramid(2).unwrap();
        assert_eq!(mhs(&g, 1, bit(g.sink())), 1);
        assert_eq!(mhs(&g, 0, g.vset(&["u1", "u2", "z"])), 2);
    }

    fn pi6() -> LayeredDag {
        LayeredDag::pyramid(6).unwrap()
    }

    #[test]
    fn components_of_hiding_set() {
        let g = pi6();
        let x = g.vset(&["v1", "u2", "u3", "v3", "w3", "s5", "s6", "s7"]);
        let b = g.vset(&["x1", "y1", "v5"]);
        assert_eq!(b & !hidden_vertices(&g, x), 0);
        let n = |name| necessary_hiding(&g, x, g.vertex(name).unwrap()).unwrap();
        assert_eq!(n("w1"), g.vset(&["v1", "u2", "u3"]));
        assert_eq!(n("x2"), g.vset(&["u2", "u3", "v3", "w3"]));
        assert_eq!(n("u5"), g.vset(&["s5", "s6"]));
        assert_eq!(n("u6"), g.vset(&["s6", "s7"]));
        let hg = hiding_graph(&g, x).unwrap();
        assert_eq!(hg.components.len(), 2);
        let id = |name| g.vertex(name).unwrap();
        assert!(hg.edges.contains(&(id("w1"), id("x2"))));
        assert!(hg.edges.contains(&(id("u5"), id("u6"))));
        assert_eq!(hiding_graph_with(&g, x, false).unwrap(), hg);
        let better = g.vset(&["x1", "y1", "s5"]);
        let w = g.vset(&["w3", "s6", "s7"]);
        assert_eq!(b & !hidden_vertices(&g, better | w), 0);
        let u = g.vset(&["v1", "u2", "u3", "v3", "s5"]);
        assert!(measure(&g, better) < measure(&g, u));
    }

    #[test]
    fn blob_blockers() {
        let g = pi6();
        let sc = Subconfig::new(g.vset(&["u5", "z"]), 0);
        let u = g.vset(&["v4", "y2"]);
        assert!(blocks(&g, u, &sc));
        assert!(!blocks(&g, g.vset(&["v4"]), &sc));
        assert!(!blocks(&g, g.vset(&["y2"]), &sc));
        assert!(is_tight(&g, u));
        let sc = Subconfig::new(bit(g.sink()), g.vset(&["w3", "w4"]));
        assert!(blocks(&g, bit(g.sink()), &sc));
        assert!(blocks(&g, g.vset(&["w1", "w2"]), &sc));
        assert!(!blocks(&g, g.vset(&["w1"]), &sc));
        assert!(self_blocking(&g, &Subconfig::new(bit(g.sink()), g.at_level(3))));
    }

    #[test]
    fn white_elimination_example() {
        let g = pi6();
        let cfg: BlobConfig = [
            Subconfig::new(g.vset(&["s4", "y1", "z"]), g.vset(&["v2"])),
            Subconfig::new(g.vset(&["u3", "w3"]), g.vset(&["s3"])),
            Subconfig::new(g.vset(&["w4", "x3"]), g.vset(&["v5"])),
        ]
        .into_iter()
        .collect();
        let u = g.vset(&["v3", "v4"]);
        let r = white_eliminate(&g, &cfg, u).unwrap();
        let ids = |names: &[&str]| members(g.vset(names)).collect::<Vec<_>>();
        assert_eq!(r.bl_h, ids(&["w4"]));
        assert_eq!(r.bl_b, ids(&["s4", "u3"]));
        assert_eq!(r.w_h, ids(&["v5"]));
        assert_eq!(r.w_b, ids(&["s3"]));
        assert_eq!(r.eliminated.len(), 1);
        assert_eq!(r.eliminated[0].1, g.vertex("s3").unwrap());
        assert!(r.config.contains(&Subconfig::new(g.vset(&["u3", "w3"]), 0)));
        assert!(blocks_config(&g, u, &r.config));
        assert_eq!(white_eliminate(&g, &cfg, 0).unwrap_err(), HidingError::NotBlocking);
    }

    #[test]
    fn zero_potential_when_whites_hide() {
        let g = pi6();
        let c = BwConfig::new(bit(g.sink()), g.vset(&["y1", "y2"]));
        assert_eq!(potential(&g, Target::Bw(c), POTENTIAL_BUDGET).potential, 0);
    }
}
