//! Black and black-white pebble games: move legality, cost, exact price by
//! breadth-first search, and the tree-mimicking black strategy.

use crate::dag::{bit, contains, members, size, LayeredDag, VSet};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
pub struct BwConfig {
    pub black: VSet,
    pub white: VSet,
}

impl BwConfig {
    pub fn new(black: VSet, white: VSet) -> Self {
        BwConfig { black, white }
    }

    pub fn cost(&self) -> usize {
        size(self.black | self.white)
    }

    /// Reversal partner: colours swapped.
    pub fn swapped(&self) -> Self {
        BwConfig { black: self.white, white: self.black }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BwMove {
    PlaceBlack(usize),
    RemoveBlack(usize),
    PlaceWhite(usize),
    RemoveWhite(usize),
}

impl BwMove {
    pub fn vertex(&self) -> usize {
        match *self {
            BwMove::PlaceBlack(v)
            | BwMove::RemoveBlack(v)
            | BwMove::PlaceWhite(v)
            | BwMove::RemoveWhite(v) => v,
        }
    }

    /// The move that undoes this one after reversing time and swapping colours.
    pub fn dual(&self) -> BwMove {
        match *self {
            BwMove::PlaceBlack(v) => BwMove::RemoveWhite(v),
            BwMove::RemoveBlack(v) => BwMove::PlaceWhite(v),
            BwMove::PlaceWhite(v) => BwMove::RemoveBlack(v),
            BwMove::RemoveWhite(v) => BwMove::PlaceBlack(v),
        }
    }

    pub fn parse(line: &str) -> Option<BwMove> {
        let (op, v) = line.trim().split_once(' ')?;
        let v: usize = v.trim().parse().ok()?;
        Some(match op {
            "+b" => BwMove::PlaceBlack(v),
            "-b" => BwMove::RemoveBlack(v),
            "+w" => BwMove::PlaceWhite(v),
            "-w" => BwMove::RemoveWhite(v),
            _ => return None,
        })
    }
}

impl fmt::Display for BwMove {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            BwMove::PlaceBlack(v) => write!(f, "+b {v}"),
            BwMove::RemoveBlack(v) => write!(f, "-b {v}"),
            BwMove::PlaceWhite(v) => write!(f, "+w {v}"),
            BwMove::RemoveWhite(v) => write!(f, "-w {v}"),
        }
    }
}

impl Serialize for BwMove {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PebbleError {
    #[error("move {index}: predecessors of {vertex} uncovered")]
    PredecessorsUncovered { index: usize, vertex: usize },
    #[error("move {index}: vertex {vertex} occupied")]
    Occupied { index: usize, vertex: usize },
    #[error("move {index}: no such pebble on {vertex}")]
    NoSuchPebble { index: usize, vertex: usize },
    #[error("move {index}: vertex {vertex} out of range")]
    OutOfRange { index: usize, vertex: usize },
    #[error("no pebbling of cost at most {budget} exists")]
    ExceedsBudget { budget: usize, states_explored: usize },
    #[error("state budget of {0} exhausted")]
    StateBudget(usize),
    #[error("graph too large for exhaustive search ({0} vertices)")]
    TooLarge(usize),
    #[error("pebbling is not complete")]
    Incomplete,
    #[error("pebbling line {0} is malformed")]
    Parse(usize),
}

/// Apply one move under rules 1–4 of the black-white pebble game.
pub fn apply_bw(c: BwConfig, m: BwMove, dag: &LayeredDag) -> Result<BwConfig, PebbleError> {
    apply_indexed(c, m, dag, 0)
}

fn apply_indexed(c: BwConfig, m: BwMove, dag: &LayeredDag, index: usize) -> Result<BwConfig, PebbleError> {
    let v = m.vertex();
    if v >= dag.len() {
        return Err(PebbleError::OutOfRange { index, vertex: v });
    }
    let covered = dag.pred_set(v) & !(c.black | c.white) == 0;
    let occupied = contains(c.black | c.white, v);
    let b = bit(v);
    match m {
        BwMove::PlaceBlack(_) | BwMove::PlaceWhite(_) if occupied => {
            Err(PebbleError::Occupied { index, vertex: v })
        }
        BwMove::PlaceBlack(_) if !covered => Err(PebbleError::PredecessorsUncovered { index, vertex: v }),
        BwMove::PlaceBlack(_) => Ok(BwConfig::new(c.black | b, c.white)),
        BwMove::PlaceWhite(_) => Ok(BwConfig::new(c.black, c.white | b)),
        BwMove::RemoveBlack(_) if !contains(c.black, v) => Err(PebbleError::NoSuchPebble { index, vertex: v }),
        BwMove::RemoveBlack(_) => Ok(BwConfig::new(c.black & !b, c.white)),
        BwMove::RemoveWhite(_) if !contains(c.white, v) => Err(PebbleError::NoSuchPebble { index, vertex: v }),
        BwMove::RemoveWhite(_) if !covered => Err(PebbleError::PredecessorsUncovered { index, vertex: v }),
        BwMove::RemoveWhite(_) => Ok(BwConfig::new(c.black, c.white & !b)),
    }
}

/// A start configuration and a list of moves.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Pebbling {
    pub start: BwConfig,
    pub moves: Vec<BwMove>,
}

impl Pebbling {
    pub fn from_moves(moves: Vec<BwMove>) -> Self {
        Pebbling { start: BwConfig::default(), moves }
    }

    /// Every configuration, starting with `start`.
    pub fn configs(&self, dag: &LayeredDag) -> Result<Vec<BwConfig>, PebbleError> {
        let mut out = vec![self.start];
        let mut c = self.start;
        for (k, &m) in self.moves.iter().enumerate() {
            c = apply_indexed(c, m, dag, k)?;
            out.push(c);
        }
        Ok(out)
    }

    pub fn is_black_only(&self) -> bool {
        self.start.white == 0
            && self.moves.iter().all(|m| matches!(m, BwMove::PlaceBlack(_) | BwMove::RemoveBlack(_)))
    }

    /// True if the pebbling starts empty and reaches ({z}, ∅).
    pub fn is_complete(&self, dag: &LayeredDag) -> Result<bool, PebbleError> {
        let goal = BwConfig::new(bit(dag.sink()), 0);
        Ok(self.start == BwConfig::default() && self.configs(dag)?.contains(&goal))
    }

    /// Reverse time and swap colours.
    pub fn reversed(&self, dag: &LayeredDag) -> Result<Pebbling, PebbleError> {
        let last = *self.configs(dag)?.last().expect("configs is nonempty");
        Ok(Pebbling {
            start: last.swapped(),
            moves: self.moves.iter().rev().map(BwMove::dual).collect(),
        })
    }

    pub fn to_text(&self) -> String {
        self.moves.iter().map(|m| format!("{m}\n")).collect()
    }

    pub fn parse(text: &str) -> Result<Pebbling, PebbleError> {
        let mut moves = Vec::new();
        for (k, line) in text.lines().enumerate() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            moves.push(BwMove::parse(t).ok_or(PebbleError::Parse(k + 1))?);
        }
        Ok(Pebbling::from_moves(moves))
    }
}

/// Maximum of |B ∪ W| over the pebbling.
pub fn pebbling_cost(p: &Pebbling, dag: &LayeredDag) -> Result<usize, PebbleError> {
    Ok(p.configs(dag)?.iter().map(BwConfig::cost).max().unwrap_or(0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Black,
    Bw,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriceReport {
    pub mode: Mode,
    pub price: usize,
    pub states_explored: usize,
    pub witness: Vec<BwMove>,
}

/// Search limits. `max_states` caps the states stored for one budget.
#[derive(Debug, Clone, Copy)]
pub struct SearchLimits {
    pub budget: usize,
    pub max_states: usize,
    pub jobs: usize,
}

impl SearchLimits {
    pub fn with_budget(budget: usize) -> Self {
        SearchLimits { budget, max_states: 50_000_000, jobs: 1 }
    }
}

fn moves_from(c: BwConfig, dag: &LayeredDag, mode: Mode, k: usize) -> Vec<(BwMove, BwConfig)> {
    let mut out = Vec::new();
    let cost = c.cost();
    for v in 0..dag.len() {
        let mut cand = vec![BwMove::PlaceBlack(v), BwMove::RemoveBlack(v)];
        if mode == Mode::Bw {
            cand.push(BwMove::PlaceWhite(v));
            cand.push(BwMove::RemoveWhite(v));
        }
        for m in cand {
            if matches!(m, BwMove::PlaceBlack(_) | BwMove::PlaceWhite(_)) && cost >= k {
                continue;
            }
            if let Ok(n) = apply_bw(c, m, dag) {
                out.push((m, n));
            }
        }
    }
    out
}

/// Least k such that a complete pebbling of cost ≤ k exists, by
/// breadth-first search over (B, W) states for k = 1, 2, …, budget.
pub fn exact_price(dag: &LayeredDag, mode: Mode, limits: SearchLimits) -> Result<PriceReport, PebbleError> {
    let cap = match mode {
        Mode::Bw => 20,
        Mode::Black => 24,
    };
    if dag.len() > cap {
        return Err(PebbleError::TooLarge(dag.len()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(limits.jobs.max(1))
        .build()
        .expect("thread pool");
    let goal = BwConfig::new(bit(dag.sink()), 0);
    let mut explored = 0;
    for k in 1..=limits.budget {
        let mut parent: HashMap<BwConfig, (BwConfig, BwMove)> = HashMap::new();
        let start = BwConfig::default();
        let mut frontier = vec![start];
        let mut seen = std::collections::HashSet::from([start]);
        let mut found = false;
        'bfs: while !frontier.is_empty() {
            let expanded: Vec<Vec<(BwMove, BwConfig)>> =
                pool.install(|| frontier.par_iter().map(|&c| moves_from(c, dag, mode, k)).collect());
            let mut next = Vec::new();
            for (c, succ) in frontier.iter().zip(expanded) {
                for (m, n) in succ {
                    if seen.insert(n) {
                        parent.insert(n, (*c, m));
                        if seen.len() > limits.max_states {
                            return Err(PebbleError::StateBudget(limits.max_states));
                        }
                        if n == goal {
                            found = true;
                            break 'bfs;
                        }
                        next.push(n);
                    }
                }
            }
            frontier = next;
        }
        explored += seen.len();
        if found {
            let mut witness = Vec::new();
            let mut cur = goal;
            while cur != start {
                let (p, m) = parent[&cur];
                witness.push(m);
                cur = p;
            }
            witness.reverse();
            return Ok(PriceReport { mode, price: k, states_explored: explored, witness });
        }
    }
    Err(PebbleError::ExceedsBudget { budget: limits.budget, states_explored: explored })
}

/// Black pebbling obtained by mimicking the optimal strategy on the binary
/// tree that unfolds the graph from its sink: pebble the lower predecessor,
/// then the higher one, place the vertex and drop both predecessors. Tree
/// copies that share a graph vertex share its pebble, so the cost is at most
/// height + 2.
pub fn black_strategy(dag: &LayeredDag) -> Pebbling {
    fn visit(dag: &LayeredDag, v: usize, count: &mut [usize], moves: &mut Vec<BwMove>) {
        for &p in dag.preds(v) {
            visit(dag, p, count, moves);
        }
        count[v] += 1;
        if count[v] == 1 {
            moves.push(BwMove::PlaceBlack(v));
        }
        for &p in dag.preds(v) {
            count[p] -= 1;
            if count[p] == 0 {
                moves.push(BwMove::RemoveBlack(p));
            }
        }
    }
    let mut count = vec![0; dag.len()];
    let mut moves = Vec::new();
    visit(dag, dag.sink(), &mut count, &mut moves);
    Pebbling::from_moves(moves)
}

/// Vertices carrying pebbles in a config, for display.
pub fn describe(c: BwConfig, dag: &LayeredDag) -> String {
    format!("({{{}}}, {{{}}})", dag.names(c.black).join(","), dag.names(c.white).join(","))
}

/// Sources white-pebbled in the config (handy for assertions).
pub fn white_sources(c: BwConfig, dag: &LayeredDag) -> Vec<usize> {
    members(c.white & dag.sources()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(h: usize) -> LayeredDag {
        LayeredDag::pyramid(h).unwrap()
    }

    #[test]
    fn rules_on_pi1() {
        let g = p(1);
        let c = apply_bw(BwConfig::default(), BwMove::PlaceBlack(0), &g).unwrap();
        assert_eq!(c, BwConfig::new(1, 0));
        assert!(matches!(
            apply_bw(c, BwMove::PlaceBlack(2), &g),
            Err(PebbleError::PredecessorsUncovered { .. })
        ));
        let c = BwConfig::new(1, 2);
        let c = apply_bw(c, BwMove::PlaceBlack(2), &g).unwrap();
        let c = apply_bw(c, BwMove::RemoveWhite(1), &g).unwrap();
        assert_eq!(c, BwConfig::new(0b101, 0));
        assert!(matches!(apply_bw(c, BwMove::RemoveBlack(1), &g), Err(PebbleError::NoSuchPebble { .. })));
        assert!(matches!(apply_bw(c, BwMove::PlaceWhite(0), &g), Err(PebbleError::Occupied { .. })));
    }

    #[test]
    fn costs() {
        let g = p(1);
        let s = Pebbling::from_moves(vec![
            BwMove::PlaceBlack(0),
            BwMove::PlaceBlack(1),
            BwMove::PlaceBlack(2),
            BwMove::RemoveBlack(0),
            BwMove::RemoveBlack(1),
        ]);
        assert_eq!(pebbling_cost(&s, &g), Ok(3));
        assert_eq!(black_strategy(&g), s);
        assert_eq!(pebbling_cost(&Pebbling::default(), &g), Ok(0));
        assert_eq!(pebbling_cost(&black_strategy(&p(3)), &p(3)), Ok(5));
        let t3 = LayeredDag::tree(3).unwrap();
        assert_eq!(pebbling_cost(&black_strategy(&t3), &t3), Ok(5));
    }

    #[test]
    fn small_prices() {
        let lim = SearchLimits::with_budget(8);
        assert_eq!(exact_price(&p(2), Mode::Black, lim).unwrap().price, 4);
        assert_eq!(exact_price(&p(1), Mode::Bw, lim).unwrap().price, 3);
        let t2 = LayeredDag::tree(2).unwrap();
        assert_eq!(exact_price(&t2, Mode::Bw, lim).unwrap().price, 4);
        assert!(matches!(
            exact_price(&p(2), Mode::Black, SearchLimits::with_budget(3)),
            Err(PebbleError::ExceedsBudget { .. })
        ));
    }

    #[test]
    fn text_format() {
        let s = black_strategy(&p(1));
        assert_eq!(Pebbling::parse(&s.to_text()).unwrap(), s);
        assert!(Pebbling::parse("+x 1").is_err());
    }
}
