//! The blob-pebble game: subconfigurations [B]⟨W⟩, the introduction,
//! merger, inflation and erasure rules, chargeable-vertex cost, exact price
//! search on tiny graphs, and lifting of black pebblings.

use crate::dag::{bit, members, set_of, size, LayeredDag, VSet};
use crate::pebbling::{BwMove, Pebbling};
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};
use thiserror::Error;

/// Black blob B with supporting white pebbles W.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subconfig {
    pub b: VSet,
    pub w: VSet,
}

impl Subconfig {
    pub fn new(b: VSet, w: VSet) -> Self {
        Subconfig { b, w }
    }

    pub fn bot(&self) -> usize {
        LayeredDag::bot(self.b)
    }

    pub fn top(&self) -> usize {
        LayeredDag::top(self.b)
    }

    pub fn is_atomic(&self) -> bool {
        size(self.b) == 1
    }

    pub fn is_independent(&self) -> bool {
        self.w == 0
    }

    /// `[B]⟨W⟩` with vertex names.
    pub fn show(&self, dag: &LayeredDag) -> String {
        format!("[{}]⟨{}⟩", dag.names(self.b).join(","), dag.names(self.w).join(","))
    }

    fn key(&self) -> (usize, VSet, VSet) {
        (if self.b == 0 { usize::MAX } else { self.bot() }, self.b, self.w)
    }
}

impl Ord for Subconfig {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key().cmp(&o.key())
    }
}

impl PartialOrd for Subconfig {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

#[derive(Serialize, Deserialize)]
struct ScJson {
    #[serde(rename = "B")]
    b: Vec<usize>,
    #[serde(rename = "W")]
    w: Vec<usize>,
}

impl Serialize for Subconfig {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        ScJson { b: members(self.b).collect(), w: members(self.w).collect() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Subconfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let j = ScJson::deserialize(d)?;
        if j.b.iter().chain(&j.w).any(|&v| v >= crate::dag::MAX_VERTICES) {
            return Err(serde::de::Error::custom("vertex id out of range"));
        }
        Ok(Subconfig { b: set_of(j.b), w: set_of(j.w) })
    }
}

pub type BlobConfig = BTreeSet<Subconfig>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum BlobMove {
    Intro { vertex: usize },
    Merge { first: Subconfig, second: Subconfig, vertex: usize },
    Inflate { from: Subconfig, to: Subconfig },
    Erase { sc: Subconfig },
}

/// A move tagged with the index of the derivation step it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedMove {
    #[serde(flatten)]
    pub mv: BlobMove,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BlobError {
    #[error("blob is empty")]
    EmptyBlob,
    #[error("blob is not a chain")]
    NotAChain,
    #[error("white pebbles outside lpp(B)")]
    WhiteOutsideLpp,
    #[error("vertex {0} out of range")]
    OutOfRange(usize),
    #[error("subconfiguration not present")]
    Missing,
    #[error("merger: B1 ∪ B2 is not ordered")]
    MergeUnordered,
    #[error("merger: B1 ∩ W2 is nonempty")]
    MergeBlackOnWhite,
    #[error("merger: |B2 ∩ W1| = {0}, expected 1")]
    MergeVertexCount(usize),
    #[error("merger: vertex {given} given, merger vertex is {actual}")]
    MergeVertexMismatch { given: usize, actual: usize },
    #[error("inflation: B does not contain B'")]
    InflateNotSuperset,
    #[error("inflation: B ∩ W' is nonempty")]
    InflateBlackOnWhite,
    #[error("inflation: W misses W' ∩ lpp(B)")]
    InflateWhiteMissing,
    #[error("graph is not blob-pebblable")]
    NotBlobPebblable,
    #[error("graph has {0} vertices, search supports at most 7")]
    TooLarge(usize),
    #[error("inconclusive at (cost {cost}, size {size})")]
    Inconclusive { cost: usize, size: usize },
    #[error("move {index}: {source}")]
    AtMove { index: usize, source: Box<BlobError> },
    #[error("{0}")]
    Pebbling(String),
}

/// Check the subconfiguration invariants: B a nonempty chain, W ⊆ lpp(B).
pub fn check_subconfig(sc: &Subconfig, dag: &LayeredDag) -> Result<(), BlobError> {
    if sc.b == 0 {
        return Err(BlobError::EmptyBlob);
    }
    if (sc.b | sc.w) & !dag.all() != 0 {
        return Err(BlobError::OutOfRange(LayeredDag::top(sc.b | sc.w)));
    }
    if !dag.is_chain(sc.b) {
        return Err(BlobError::NotAChain);
    }
    if sc.w & !dag.lpp(sc.b) != 0 {
        return Err(BlobError::WhiteOutsideLpp);
    }
    Ok(())
}

/// The introduction subconfiguration [v]⟨pred(v)⟩.
pub fn intro(v: usize, dag: &LayeredDag) -> Subconfig {
    Subconfig::new(bit(v), dag.pred_set(v))
}

/// Merger of `s1` (white on v*) with `s2` (black on v*); returns the result
/// and v*.
pub fn merge(s1: &Subconfig, s2: &Subconfig, dag: &LayeredDag) -> Result<(Subconfig, usize), BlobError> {
    let union = s1.b | s2.b;
    if !dag.is_chain(union) {
        return Err(BlobError::MergeUnordered);
    }
    if s1.b & s2.w != 0 {
        return Err(BlobError::MergeBlackOnWhite);
    }
    let star = s2.b & s1.w;
    if size(star) != 1 {
        return Err(BlobError::MergeVertexCount(size(star)));
    }
    let b = union & !star;
    let w = ((s1.w | s2.w) & !star) & dag.lpp(b);
    Ok((Subconfig::new(b, w), LayeredDag::bot(star)))
}

/// Legality of inflating `from` to `to`.
pub fn check_inflation(from: &Subconfig, to: &Subconfig, dag: &LayeredDag) -> Result<(), BlobError> {
    check_subconfig(to, dag)?;
    if from.b & !to.b != 0 {
        return Err(BlobError::InflateNotSuperset);
    }
    if to.b & from.w != 0 {
        return Err(BlobError::InflateBlackOnWhite);
    }
    if from.w & dag.lpp(to.b) & !to.w != 0 {
        return Err(BlobError::InflateWhiteMissing);
    }
    Ok(())
}

/// Apply one move. Adding a subconfiguration that is already present is a
/// no-op on the set and accepted.
pub fn apply_blob(cfg: &BlobConfig, mv: &BlobMove, dag: &LayeredDag) -> Result<BlobConfig, BlobError> {
    let need = |sc: &Subconfig| {
        if cfg.contains(sc) {
            Ok(())
        } else {
            Err(BlobError::Missing)
        }
    };
    let mut out = cfg.clone();
    match mv {
        BlobMove::Intro { vertex } => {
            if *vertex >= dag.len() {
                return Err(BlobError::OutOfRange(*vertex));
            }
            out.insert(intro(*vertex, dag));
        }
        BlobMove::Merge { first, second, vertex } => {
            need(first)?;
            need(second)?;
            let (sc, star) = merge(first, second, dag)?;
            if star != *vertex {
                return Err(BlobError::MergeVertexMismatch { given: *vertex, actual: star });
            }
            out.insert(sc);
        }
        BlobMove::Inflate { from, to } => {
            need(from)?;
            check_inflation(from, to, dag)?;
            out.insert(*to);
        }
        BlobMove::Erase { sc } => {
            need(sc)?;
            out.remove(sc);
        }
    }
    Ok(out)
}

/// Subconfiguration added by a move (merger output computed), if any.
pub fn produced(mv: &BlobMove, dag: &LayeredDag) -> Option<Subconfig> {
    match mv {
        BlobMove::Intro { vertex } => Some(intro(*vertex, dag)),
        BlobMove::Merge { first, second, .. } => merge(first, second, dag).ok().map(|r| r.0),
        BlobMove::Inflate { to, .. } => Some(*to),
        BlobMove::Erase { .. } => None,
    }
}

/// |{bot(B)} ∪ (W ∩ below(bot(B)))| summed as a union over subconfigs.
pub fn blob_cost(cfg: &BlobConfig, dag: &LayeredDag) -> usize {
    cost_of(cfg.iter(), dag)
}

fn cost_of<'a>(scs: impl Iterator<Item = &'a Subconfig>, dag: &LayeredDag) -> usize {
    let charged = scs.fold(0, |acc, sc| acc | bit(sc.bot()) | (sc.w & dag.below(sc.bot())));
    size(charged)
}

/// Replay moves from `start`, returning every configuration.
pub fn replay_blob(start: &BlobConfig, moves: &[BlobMove], dag: &LayeredDag) -> Result<Vec<BlobConfig>, BlobError> {
    let mut out = vec![start.clone()];
    for (index, mv) in moves.iter().enumerate() {
        let next = apply_blob(out.last().expect("nonempty"), mv, dag)
            .map_err(|e| BlobError::AtMove { index, source: Box::new(e) })?;
        out.push(next);
    }
    Ok(out)
}

/// The final configuration of a complete blob pebbling.
pub fn complete_goal(dag: &LayeredDag) -> BlobConfig {
    BlobConfig::from([Subconfig::new(bit(dag.sink()), 0)])
}

/// Maximum cost along a replay.
pub fn pebbling_cost(configs: &[BlobConfig], dag: &LayeredDag) -> usize {
    configs.iter().map(|c| blob_cost(c, dag)).max().unwrap_or(0)
}

/// Lift a black pebbling to a blob pebbling of the same cost: placements
/// become an introduction followed by mergers with the predecessors'
/// independent atomic blobs; removals become erasures.
pub fn lift_black(p: &Pebbling, dag: &LayeredDag) -> Result<Vec<BlobMove>, BlobError> {
    if !p.is_black_only() {
        return Err(BlobError::Pebbling("only black pebblings can be lifted".into()));
    }
    p.configs(dag).map_err(|e| BlobError::Pebbling(e.to_string()))?;
    let mut out = Vec::new();
    for m in &p.moves {
        match *m {
            BwMove::PlaceBlack(v) => {
                out.push(BlobMove::Intro { vertex: v });
                let mut cur = intro(v, dag);
                for &q in dag.preds(v) {
                    let atom = Subconfig::new(bit(q), 0);
                    let (next, _) = merge(&cur, &atom, dag)?;
                    out.push(BlobMove::Merge { first: cur, second: atom, vertex: q });
                    out.push(BlobMove::Erase { sc: cur });
                    cur = next;
                }
            }
            BwMove::RemoveBlack(v) => out.push(BlobMove::Erase { sc: Subconfig::new(bit(v), 0) }),
            _ => unreachable!("black-only"),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
pub struct BlobLimits {
    pub max_cost: usize,
    pub max_subconfigs: usize,
    /// Allow inflation to any legal W instead of only W′ ∩ lpp(B).
    pub full_inflation: bool,
    pub max_states: usize,
    pub jobs: usize,
}

impl BlobLimits {
    pub fn defaults(dag: &LayeredDag) -> Self {
        BlobLimits {
            max_cost: dag.height() + 3,
            max_subconfigs: 4,
            full_inflation: false,
            max_states: 20_000_000,
            jobs: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlobPriceReport {
    pub price: usize,
    pub states_explored: usize,
    pub witness: Vec<BlobMove>,
}

type State = Vec<Subconfig>;

struct Space<'a> {
    dag: &'a LayeredDag,
    /// Every chain with its lpp.
    chains: Vec<(VSet, VSet)>,
    full: bool,
}

impl Space<'_> {
    fn inflations(&self, sc: &Subconfig) -> Vec<Subconfig> {
        let mut out = Vec::new();
        for &(b, l) in &self.chains {
            if b & sc.b != sc.b || b & sc.w != 0 {
                continue;
            }
            let base = sc.w & l;
            if self.full {
                let free = l & !base;
                let mut extra: VSet = 0;
                loop {
                    out.push(Subconfig::new(b, base | extra));
                    extra = extra.wrapping_sub(free) & free;
                    if extra == 0 {
                        break;
                    }
                }
            } else {
                out.push(Subconfig::new(b, base));
            }
        }
        out.retain(|t| t != sc);
        out
    }

    fn successors(&self, s: &State, k: usize, cap: usize) -> Vec<(BlobMove, State)> {
        let mut out = Vec::new();
        let add = |mv: BlobMove, sc: Subconfig, out: &mut Vec<(BlobMove, State)>| {
            if s.binary_search(&sc).is_ok() {
                return;
            }
            let mut n = s.clone();
            let pos = n.binary_search(&sc).unwrap_err();
            n.insert(pos, sc);
            if cost_of(n.iter(), self.dag) <= k {
                out.push((mv, n));
            }
        };
        if s.len() < cap {
            for v in 0..self.dag.len() {
                add(BlobMove::Intro { vertex: v }, intro(v, self.dag), &mut out);
            }
            for a in s {
                for b in s {
                    if let Ok((r, v)) = merge(a, b, self.dag) {
                        add(BlobMove::Merge { first: *a, second: *b, vertex: v }, r, &mut out);
                    }
                }
                for t in self.inflations(a) {
                    add(BlobMove::Inflate { from: *a, to: t }, t, &mut out);
                }
            }
        }
        for (i, sc) in s.iter().enumerate() {
            let mut n = s.clone();
            n.remove(i);
            out.push((BlobMove::Erase { sc: *sc }, n));
        }
        out
    }
}

/// Least cost of a complete blob pebbling, by breadth-first search for each
/// cost bound k = 1, …, max_cost over canonical configurations with at most
/// `max_subconfigs` subconfigurations.
pub fn blob_price_exact(dag: &LayeredDag, limits: BlobLimits) -> Result<BlobPriceReport, BlobError> {
    if dag.len() > 7 {
        return Err(BlobError::TooLarge(dag.len()));
    }
    if dag.height() == 0 {
        return Err(BlobError::NotBlobPebblable);
    }
    let all_chains = dag.chains().map_err(|_| BlobError::TooLarge(dag.len()))?;
    let space = Space {
        dag,
        chains: all_chains.iter().map(|&c| (c, dag.lpp(c))).collect(),
        full: limits.full_inflation,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(limits.jobs.max(1))
        .build()
        .expect("thread pool");
    let z = Subconfig::new(bit(dag.sink()), 0);
    let mut explored = 0;
    for k in 1..=limits.max_cost {
        let start: State = Vec::new();
        let mut parent: HashMap<State, (State, BlobMove)> = HashMap::new();
        let mut seen: HashSet<State> = HashSet::from([start.clone()]);
        let mut frontier = vec![start.clone()];
        let mut hit = None;
        'bfs: while !frontier.is_empty() {
            let expanded: Vec<Vec<(BlobMove, State)>> = pool.install(|| {
                frontier
                    .par_iter()
                    .map(|s| space.successors(s, k, limits.max_subconfigs))
                    .collect()
            });
            let mut next = Vec::new();
            for (s, succ) in frontier.iter().zip(expanded) {
                for (mv, n) in succ {
                    if seen.contains(&n) {
                        continue;
                    }
                    seen.insert(n.clone());
                    if seen.len() > limits.max_states {
                        return Err(BlobError::Inconclusive { cost: k, size: limits.max_subconfigs });
                    }
                    parent.insert(n.clone(), (s.clone(), mv));
                    if n.binary_search(&z).is_ok() {
                        hit = Some(n);
                        break 'bfs;
                    }
                    next.push(n);
                }
            }
            frontier = next;
        }
        explored += seen.len();
        if let Some(end) = hit {
            let mut witness = Vec::new();
            let mut cur = end.clone();
            while cur != start {
                let (p, mv) = parent[&cur].clone();
                witness.push(mv);
                cur = p;
            }
            witness.reverse();
            witness.extend(end.iter().filter(|&&sc| sc != z).map(|&sc| BlobMove::Erase { sc }));
            return Ok(BlobPriceReport { price: k, states_explored: explored, witness });
        }
    }
    Err(BlobError::Inconclusive { cost: limits.max_cost, size: limits.max_subconfigs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pebbling::black_strategy;

    fn sc(dag: &LayeredDag, b: &[&str], w: &[&str]) -> Subconfig {
        Subconfig::new(dag.vset(b), dag.vset(w))
    }

    #[test]
    fn rule_examples() {
        let g = LayeredDag::pyramid(2).unwrap();
        let c = apply_blob(&BlobConfig::new(), &BlobMove::Intro { vertex: g.vertex("u1").unwrap() }, &g).unwrap();
        assert_eq!(c, BlobConfig::from([sc(&g, &["u1"], &["s1", "s2"])]));
        let (m, v) = merge(&sc(&g, &["z"], &["u1"]), &sc(&g, &["u1"], &["s1", "s2"]), &g).unwrap();
        assert_eq!((m, v), (sc(&g, &["z"], &["s1", "s2"]), g.vertex("u1").unwrap()));
        check_inflation(&sc(&g, &["u1"], &[]), &sc(&g, &["u1", "z"], &[]), &g).unwrap();
        assert_eq!(
            check_inflation(&sc(&g, &["u1"], &["s1"]), &sc(&g, &["u1", "s1"], &[]), &g),
            Err(BlobError::InflateBlackOnWhite)
        );
    }

    #[test]
    fn cost_examples() {
        let g = LayeredDag::pyramid(2).unwrap();
        assert_eq!(blob_cost(&complete_goal(&g), &g), 1);
        let c = BlobConfig::from([sc(&g, &["u1"], &[]), sc(&g, &["u1", "z"], &[])]);
        assert_eq!(blob_cost(&c, &g), 1);
    }

    #[test]
    fn lifted_black_strategy_is_complete() {
        for h in 1..=3 {
            let g = LayeredDag::pyramid(h).unwrap();
            let p = black_strategy(&g);
            let moves = lift_black(&p, &g).unwrap();
            let cfgs = replay_blob(&BlobConfig::new(), &moves, &g).unwrap();
            assert_eq!(cfgs.last().unwrap(), &complete_goal(&g));
            assert_eq!(pebbling_cost(&cfgs, &g), crate::pebbling::pebbling_cost(&p, &g).unwrap());
        }
    }

    #[test]
    fn price_pi1() {
        let g = LayeredDag::pyramid(1).unwrap();
        let r = blob_price_exact(&g, BlobLimits::defaults(&g)).unwrap();
        assert_eq!(r.price, 3);
        let cfgs = replay_blob(&BlobConfig::new(), &r.witness, &g).unwrap();
        assert_eq!(cfgs.last().unwrap(), &complete_goal(&g));
    }

    #[test]
    fn json_shape() {
        let g = LayeredDag::pyramid(1).unwrap();
        let mv = BlobMove::Erase { sc: Subconfig::new(bit(g.sink()), bit(0)) };
        let s = serde_json::to_string(&AnnotatedMove { mv, step: Some(4) }).unwrap();
        assert_eq!(s, r#"{"op":"erase","sc":{"B":[2],"W":[0]},"step":4}"#);
        let back: AnnotatedMove = serde_json::from_str(&s).unwrap();
        assert_eq!(back.mv, mv);
    }
}
