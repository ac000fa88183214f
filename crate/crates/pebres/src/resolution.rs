//! Configuration-style resolution: legality checking, length/width/space
//! metrics, and refutation builders for pebbling contradictions.

use crate::dag::LayeredDag;
use crate::formula::{var, Clause, CnfFormula, Lit, PebblingFormula};
use crate::pebbling::{BwConfig, BwMove, Pebbling};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Step {
    /// 1-based axiom index.
    Download(usize),
    /// Premise with the pivot positive, premise with it negative, pivot.
    Infer(usize, usize, u32),
    Erase(usize),
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Step::Download(k) => write!(f, "d {k}"),
            Step::Infer(a, b, x) => write!(f, "i {a} {b} {x}"),
            Step::Erase(k) => write!(f, "e {k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ResolutionError {
    #[error("pivot {0} missing from a premise")]
    MissingPivot(u32),
    #[error("resolvent is tautological")]
    Tautology,
    #[error("step {index}: {reason}")]
    IllegalStep { index: usize, reason: String },
    #[error("goal not reached")]
    GoalNotReached,
    #[error("trace line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Builder(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DerivationTrace {
    pub cnf_name: String,
    pub steps: Vec<Step>,
    pub goal: Clause,
}

impl DerivationTrace {
    pub fn to_text(&self) -> String {
        let mut s = format!("p drv {}\n", self.cnf_name);
        for st in &self.steps {
            s.push_str(&format!("{st}\n"));
        }
        s
    }

    /// Parse the trace text format; the goal is supplied by the caller.
    pub fn parse(text: &str, goal: Clause) -> Result<Self, ResolutionError> {
        let mut name = None;
        let mut steps = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            let err = |msg: &str| ResolutionError::Parse { line: k + 1, msg: msg.into() };
            let f: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err("bad number"));
            match (f[0], f.len()) {
                ("p", 3) if f[1] == "drv" && name.is_none() => name = Some(f[2].to_string()),
                ("d", 2) => steps.push(Step::Download(num(f[1])?)),
                ("i", 4) => steps.push(Step::Infer(num(f[1])?, num(f[2])?, num(f[3])? as u32)),
                ("e", 2) => steps.push(Step::Erase(num(f[1])?)),
                _ => return Err(err("unrecognised line")),
            }
        }
        let cnf_name = name.ok_or(ResolutionError::Parse { line: 0, msg: "missing `p drv` header".into() })?;
        Ok(DerivationTrace { cnf_name, steps, goal })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct Metrics {
    pub length: usize,
    pub width: usize,
    pub clause_space: usize,
    pub variable_space: usize,
    /// Configuration size after each step.
    pub profile: Vec<usize>,
}

/// (c1 ∖ {x}) ∪ (c2 ∖ {¬x}).
pub fn resolve(c1: &Clause, c2: &Clause, x: u32) -> Result<Clause, ResolutionError> {
    let pos = x as Lit;
    if !c1.contains(pos) || !c2.contains(-pos) {
        return Err(ResolutionError::MissingPivot(x));
    }
    let lits = c1.lits().iter().filter(|&&l| l != pos).chain(c2.lits().iter().filter(|&&l| l != -pos));
    Clause::new(lits.copied()).map_err(|_| ResolutionError::Tautology)
}

/// Clause configuration keyed by entry id.
pub type ClauseConfig = BTreeMap<usize, Clause>;

/// Replay a trace, calling `observe(step_index, config)` after every step.
pub fn replay_with<F>(f: &CnfFormula, t: &DerivationTrace, mut observe: F) -> Result<Metrics, ResolutionError>
where
    F: FnMut(usize, &ClauseConfig),
{
    let mut cfg = ClauseConfig::new();
    let mut next = 1;
    let mut m = Metrics::default();
    let mut varsp = 0usize;
    for (index, st) in t.steps.iter().enumerate() {
        let illegal = |reason: String| ResolutionError::IllegalStep { index, reason };
        match *st {
            Step::Download(k) => {
                let c = f
                    .clauses
                    .get(k.wrapping_sub(1))
                    .ok_or_else(|| illegal(format!("no axiom {k}")))?;
                m.width = m.width.max(c.len());
                m.length += 1;
                varsp += c.len();
                cfg.insert(next, c.clone());
                next += 1;
            }
            Step::Infer(a, b, x) => {
                let ca = cfg.get(&a).ok_or_else(|| illegal(format!("clause {a} not live")))?;
                let cb = cfg.get(&b).ok_or_else(|| illegal(format!("clause {b} not live")))?;
                let r = resolve(ca, cb, x).map_err(|e| illegal(e.to_string()))?;
                m.width = m.width.max(r.len());
                m.length += 1;
                varsp += r.len();
                cfg.insert(next, r);
                next += 1;
            }
            Step::Erase(k) => {
                let c = cfg.remove(&k).ok_or_else(|| illegal(format!("clause {k} not live")))?;
                varsp -= c.len();
            }
        }
        m.clause_space = m.clause_space.max(cfg.len());
        m.variable_space = m.variable_space.max(varsp);
        m.profile.push(cfg.len());
        observe(index, &cfg);
    }
    if !cfg.values().any(|c| c.is_subset_of(&t.goal)) {
        return Err(ResolutionError::GoalNotReached);
    }
    Ok(m)
}

pub fn replay(f: &CnfFormula, t: &DerivationTrace) -> Result<Metrics, ResolutionError> {
    replay_with(f, t, |_, _| {})
}

/// Every configuration of a legal trace, starting with the empty one.
pub fn configurations(f: &CnfFormula, t: &DerivationTrace) -> Result<Vec<Vec<Clause>>, ResolutionError> {
    let mut out = vec![Vec::new()];
    replay_with(f, t, |_, cfg| out.push(cfg.values().cloned().collect()))?;
    Ok(out)
}

/// Incremental trace construction with live-clause bookkeeping.
struct Writer<'a> {
    f: &'a PebblingFormula,
    steps: Vec<Step>,
    live: BTreeMap<usize, Clause>,
    next: usize,
}

impl<'a> Writer<'a> {
    fn new(f: &'a PebblingFormula) -> Self {
        Writer { f, steps: Vec::new(), live: BTreeMap::new(), next: 1 }
    }

    fn download(&mut self, axiom: usize) -> usize {
        self.steps.push(Step::Download(axiom + 1));
        self.live.insert(self.next, self.f.cnf.clauses[axiom].clone());
        self.next += 1;
        self.next - 1
    }

    /// Resolve on `x`; the premises may be given in either order.
    fn infer(&mut self, a: usize, b: usize, x: u32) -> usize {
        let (p, n) = if self.live[&a].contains(x as Lit) { (a, b) } else { (b, a) };
        let r = resolve(&self.live[&p], &self.live[&n], x).expect("builder resolution is legal");
        self.steps.push(Step::Infer(p, n, x));
        self.live.insert(self.next, r);
        self.next += 1;
        self.next - 1
    }

    fn erase(&mut self, id: usize) {
        self.live.remove(&id).expect("erasing a live clause");
        self.steps.push(Step::Erase(id));
    }

    /// Erase everything except `keep`.
    fn erase_all_but(&mut self, keep: usize) {
        let ids: Vec<usize> = self.live.keys().copied().filter(|&k| k != keep).collect();
        for id in ids {
            self.erase(id);
        }
    }

    fn var(&self, v: usize, i: usize) -> u32 {
        var(self.f.degree, v, i)
    }

    fn source(&mut self, v: usize) -> usize {
        let k = self.f.source_axiom(v).expect("source axiom present");
        self.download(k)
    }

    /// Derive All⁺(w) from All⁺(p) and All⁺(q) for pred(w) = {p < q}, using
    /// at most four scratch clauses at any time.
    fn propagate(&mut self, w: usize, all_p: usize, all_q: usize) -> usize {
        let d = self.f.degree;
        let [p, q] = self.f.dag.preds(w)[..] else { unreachable!("non-source has two preds") };
        let mut acc: Option<usize> = None;
        for i in 1..=d {
            let mut t: Option<usize> = None;
            for j in 1..=d {
                let ax = self.download(self.f.pebbling_axiom(w, i, j).expect("axiom present"));
                let nt = self.infer(t.unwrap_or(all_q), ax, self.var(q, j));
                self.erase(ax);
                if let Some(old) = t {
                    self.erase(old);
                }
                t = Some(nt);
            }
            let t = t.expect("d ≥ 1");
            let na = self.infer(acc.unwrap_or(all_p), t, self.var(p, i));
            self.erase(t);
            if let Some(old) = acc {
                self.erase(old);
            }
            acc = Some(na);
        }
        acc.expect("d ≥ 1")
    }

    /// From clauses `neg[i] = ¬x(v)_i ∨ R` (i = 1..d, R common), derive R
    /// using the axioms of v and the All⁺ clauses of its predecessors, whose
    /// ids are given in `all`. Clauses in `neg` are erased.
    fn eliminate(&mut self, v: usize, neg: &[usize], all: &BTreeMap<usize, usize>) -> usize {
        let d = self.f.degree;
        if self.f.dag.is_source(v) {
            let src = self.source(v);
            let mut acc = src;
            for (i, &n) in neg.iter().enumerate() {
                let r = self.infer(acc, n, self.var(v, i + 1));
                self.erase(acc);
                self.erase(n);
                acc = r;
            }
            return acc;
        }
        let [p, q] = self.f.dag.preds(v)[..] else { unreachable!() };
        let mut per_c = Vec::new();
        for c in 1..=d {
            let mut per_e = Vec::new();
            for e in 1..=d {
                let mut m = self.download(self.f.pebbling_axiom(v, c, e).expect("axiom present"));
                for (j, &n) in neg.iter().enumerate() {
                    let r = self.infer(m, n, self.var(v, j + 1));
                    self.erase(m);
                    m = r;
                }
                per_e.push(m);
            }
            let mut acc = all[&q];
            for (e, &m) in per_e.iter().enumerate() {
                let r = self.infer(acc, m, self.var(q, e + 1));
                if acc != all[&q] {
                    self.erase(acc);
                }
                self.erase(m);
                acc = r;
            }
            per_c.push(acc);
        }
        let mut acc = all[&p];
        for (c, &k) in per_c.iter().enumerate() {
            let r = self.infer(acc, k, self.var(p, c + 1));
            if acc != all[&p] {
                self.erase(acc);
            }
            self.erase(k);
            acc = r;
        }
        for &n in neg {
            if self.live.contains_key(&n) {
                self.erase(n);
            }
        }
        acc
    }

    fn finish(self, name: &str) -> DerivationTrace {
        DerivationTrace { cnf_name: name.into(), steps: self.steps, goal: self.f.goal.clone() }
    }

    /// Resolve All⁺(z) against the target axioms down to ∅.
    fn refute_sink(&mut self, all_z: usize) -> usize {
        let z = self.f.dag.sink();
        let mut acc = all_z;
        for i in 1..=self.f.degree {
            let t = self.download(self.f.target_axiom(i).expect("targets present"));
            let r = self.infer(acc, t, self.var(z, i));
            self.erase(acc);
            self.erase(t);
            acc = r;
        }
        acc
    }
}

const CNF_NAME: &str = "formula.cnf";

/// Derive All⁺(v) for every vertex in topological (id) order.
///
/// For Peb (targets present) the last two levels are handled top-down: the
/// target axioms turn the sink's axioms into ¬x(a)_i ∨ ¬x(b)_j, which are
/// pushed through the axioms of the sink's predecessors a and b. This keeps
/// the width at d+2 on graphs of height at most 2.
pub fn build_linear(f: &PebblingFormula) -> DerivationTrace {
    let dag = &f.dag;
    let h = dag.height();
    let mut w = Writer::new(f);
    let limit = if f.has_targets() { h as isize - 2 } else { h as isize };
    let mut all = BTreeMap::new();
    let mut uses: Vec<usize> = (0..dag.len())
        .map(|v| dag.succs(v).iter().filter(|&&s| dag.level(s) as isize <= limit).count())
        .collect();
    for v in 0..dag.len() {
        if dag.level(v) as isize > limit {
            break;
        }
        let id = if dag.is_source(v) {
            w.source(v)
        } else {
            let [p, q] = dag.preds(v)[..] else { unreachable!() };
            let id = w.propagate(v, all[&p], all[&q]);
            for x in [p, q] {
                uses[x] -= 1;
                if uses[x] == 0 && (dag.level(x) as isize) < limit {
                    w.erase(all.remove(&x).expect("live"));
                }
            }
            id
        };
        all.insert(v, id);
    }
    if !f.has_targets() {
        let z = all[&dag.sink()];
        w.erase_all_but(z);
        return w.finish(CNF_NAME);
    }
    let d = f.degree;
    let z = dag.sink();
    let [a, b] = dag.preds(z)[..] else { unreachable!() };
    let targets: Vec<usize> = (1..=d).map(|i| w.download(f.target_axiom(i).expect("targets"))).collect();
    let mut neg_a = Vec::new();
    for i in 1..=d {
        let mut neg_b = Vec::new();
        for j in 1..=d {
            let mut c = w.download(f.pebbling_axiom(z, i, j).expect("axiom"));
            for (l, &t) in targets.iter().enumerate() {
                let r = w.infer(c, t, w.var(z, l + 1));
                w.erase(c);
                c = r;
            }
            neg_b.push(c);
        }
        neg_a.push(w.eliminate(b, &neg_b, &all));
    }
    let empty = w.eliminate(a, &neg_a, &all);
    w.erase_all_but(empty);
    w.finish(CNF_NAME)
}

/// Follow a complete black pebbling: memory holds All⁺(v) for every black
/// vertex v plus at most four scratch clauses.
pub fn build_from_pebbling(f: &PebblingFormula, p: &Pebbling) -> Result<DerivationTrace, ResolutionError> {
    let dag = &f.dag;
    let bad = |m: &str| ResolutionError::Builder(format!("illegal pebbling: {m}"));
    if !p.is_black_only() || p.start != BwConfig::default() {
        return Err(bad("black moves from the empty configuration required"));
    }
    let goal = BwConfig::new(crate::dag::bit(dag.sink()), 0);
    let mut w = Writer::new(f);
    let mut all: BTreeMap<usize, usize> = BTreeMap::new();
    let mut c = BwConfig::default();
    for (k, &m) in p.moves.iter().enumerate() {
        c = crate::pebbling::apply_bw(c, m, dag).map_err(|e| bad(&format!("move {k}: {e}")))?;
        match m {
            BwMove::PlaceBlack(v) if dag.is_source(v) => {
                let id = w.source(v);
                all.insert(v, id);
            }
            BwMove::PlaceBlack(v) => {
                let [a, b] = dag.preds(v)[..] else { unreachable!() };
                let id = w.propagate(v, all[&a], all[&b]);
                all.insert(v, id);
            }
            BwMove::RemoveBlack(v) => w.erase(all.remove(&v).expect("black vertex has a clause")),
            _ => unreachable!("black-only pebbling"),
        }
        if c == goal {
            let mut last = all[&dag.sink()];
            if f.has_targets() {
                last = w.refute_sink(last);
            }
            w.erase_all_but(last);
            return Ok(w.finish(CNF_NAME));
        }
    }
    Err(bad("never reaches ({z}, ∅)"))
}

/// Tree-like refutation of Peb¹_G in clause space 3: start from the sink's
/// axiom and replace negative literals by the predecessors' axioms (highest
/// level first) or cancel them against source axioms, then finish with the
/// target axiom.
pub fn build_degree1(f: &PebblingFormula) -> Result<DerivationTrace, ResolutionError> {
    if f.degree != 1 {
        return Err(ResolutionError::Builder("degree-1 builder needs d = 1".into()));
    }
    let dag: &LayeredDag = &f.dag;
    let mut w = Writer::new(f);
    let z = dag.sink();
    let mut cur = w.download(f.pebbling_axiom(z, 1, 1).expect("sink is not a source"));
    loop {
        let negs: Vec<usize> = w.live[&cur]
            .lits()
            .iter()
            .filter(|&&l| l < 0)
            .map(|&l| crate::formula::vertex_of_var(1, l.unsigned_abs()).0)
            .collect();
        let Some(&v) = negs.iter().max_by_key(|&&v| (dag.level(v), std::cmp::Reverse(v))) else { break };
        let ax = if dag.is_source(v) {
            w.source(v)
        } else {
            w.download(f.pebbling_axiom(v, 1, 1).expect("axiom"))
        };
        let r = w.infer(ax, cur, w.var(v, 1));
        w.erase(cur);
        w.erase(ax);
        cur = r;
    }
    if f.has_targets() {
        let t = w.download(f.target_axiom(1).expect("targets"));
        let r = w.infer(cur, t, w.var(z, 1));
        w.erase(cur);
        w.erase(t);
        cur = r;
    }
    w.erase_all_but(cur);
    Ok(w.finish(CNF_NAME))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::pebbling_contradiction;
    use crate::pebbling::black_strategy;

    fn c(l: &[Lit]) -> Clause {
        Clause::new(l.iter().copied()).unwrap()
    }

    #[test]
    fn resolve_examples() {
        assert_eq!(resolve(&c(&[2, 3]), &c(&[-2]), 2).unwrap(), c(&[3]));
        assert_eq!(resolve(&c(&[1]), &c(&[-1]), 1).unwrap(), Clause::empty());
        assert_eq!(resolve(&c(&[1, 2]), &c(&[-1, -2]), 1), Err(ResolutionError::Tautology));
        assert_eq!(resolve(&c(&[2]), &c(&[-1]), 1), Err(ResolutionError::MissingPivot(1)));
    }

    #[test]
    fn hand_trace_pi1() {
        let g = LayeredDag::pyramid(1).unwrap();
        let f = pebbling_contradiction(&g, 1).unwrap();
        let text = "p drv f.cnf\nd 3\nd 1\ni 2 1 1\ne 1\ne 2\nd 2\ni 4 3 2\ne 3\ne 4\nd 4\ni 5 6 3\n";
        let t = DerivationTrace::parse(text, Clause::empty()).unwrap();
        let m = replay(&f.cnf, &t).unwrap();
        assert_eq!((m.clause_space, m.width, m.length), (3, 3, 7));
        let built = build_degree1(&f).unwrap();
        let mb = replay(&f.cnf, &built).unwrap();
        assert_eq!((mb.clause_space, mb.width, mb.length), (3, 3, 7));
        let ml = replay(&f.cnf, &build_linear(&f)).unwrap();
        assert_eq!((ml.width, ml.length), (3, 7));
    }

    #[test]
    fn empty_trace_fails() {
        let t = DerivationTrace { cnf_name: "x".into(), steps: vec![], goal: Clause::empty() };
        assert_eq!(replay(&CnfFormula::default(), &t), Err(ResolutionError::GoalNotReached));
    }

    #[test]
    fn illegal_steps_reported() {
        let g = LayeredDag::pyramid(1).unwrap();
        let f = pebbling_contradiction(&g, 1).unwrap();
        let t = DerivationTrace { cnf_name: "x".into(), steps: vec![Step::Erase(1)], goal: Clause::empty() };
        assert!(matches!(replay(&f.cnf, &t), Err(ResolutionError::IllegalStep { index: 0, .. })));
    }

    #[test]
    fn builders_reach_goals() {
        for g in [LayeredDag::pyramid(2).unwrap(), LayeredDag::tree(2).unwrap()] {
            for d in 1..=3 {
                let f = pebbling_contradiction(&g, d).unwrap();
                for strip in [false, true] {
                    let f = if strip { f.strip_targets() } else { f.clone() };
                    replay(&f.cnf, &build_linear(&f)).unwrap();
                    let t = build_from_pebbling(&f, &black_strategy(&g)).unwrap();
                    replay(&f.cnf, &t).unwrap();
                }
            }
        }
    }

    #[test]
    fn text_round_trip() {
        let g = LayeredDag::pyramid(2).unwrap();
        let f = pebbling_contradiction(&g, 2).unwrap();
        let t = build_linear(&f);
        assert_eq!(DerivationTrace::parse(&t.to_text(), Clause::empty()).unwrap(), t);
    }
}
