//! CNF formulas, pebbling contradictions, and DIMACS interchange.

use crate::dag::{members, LayeredDag};
use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Signed variable id, DIMACS style.
pub type Lit = i32;

/// A clause: literals sorted by variable, no variable repeated.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize)]
pub struct Clause(Vec<Lit>);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("literal 0 inside a clause")]
    ZeroLiteral,
    #[error("clause repeats variable {0}")]
    RepeatedVariable(u32),
    #[error("degree must be at least 1")]
    ZeroDegree,
    #[error("{0} variables overflow the variable-id width")]
    TooManyVariables(usize),
    #[error("DIMACS line {line}: {msg}")]
    Dimacs { line: usize, msg: String },
}

impl Clause {
    /// Build from literals; duplicates of the same literal are merged, a
    /// complementary pair is rejected.
    pub fn new(lits: impl IntoIterator<Item = Lit>) -> Result<Self, FormulaError> {
        let mut v: Vec<Lit> = lits.into_iter().collect();
        if v.contains(&0) {
            return Err(FormulaError::ZeroLiteral);
        }
        v.sort_by_key(|&l| (l.unsigned_abs(), l > 0));
        v.dedup();
        for w in v.windows(2) {
            if w[0].unsigned_abs() == w[1].unsigned_abs() {
                return Err(FormulaError::RepeatedVariable(w[0].unsigned_abs()));
            }
        }
        Ok(Clause(v))
    }

    pub fn empty() -> Self {
        Clause(Vec::new())
    }

    pub fn lits(&self) -> &[Lit] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, l: Lit) -> bool {
        self.0.binary_search_by_key(&(l.unsigned_abs(), l > 0), |&x| (x.unsigned_abs(), x > 0)).is_ok()
    }

    pub fn max_var(&self) -> u32 {
        self.0.iter().map(|l| l.unsigned_abs()).max().unwrap_or(0)
    }

    pub fn is_subset_of(&self, other: &Clause) -> bool {
        self.0.iter().all(|&l| other.contains(l))
    }

    /// Positive and negative literal masks over variables 1..=64.
    pub fn masks(&self) -> (u64, u64) {
        let mut pos = 0u64;
        let mut neg = 0u64;
        for &l in &self.0 {
            let b = 1u64 << (l.unsigned_abs() - 1);
            if l > 0 {
                pos |= b;
            } else {
                neg |= b;
            }
        }
        (pos, neg)
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "⊥");
        }
        let parts: Vec<String> = self.0.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

/// Vertex↔variable map carried by pebbling formulas.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VertexMap {
    pub degree: usize,
    /// (id, level, 1-based index) per vertex.
    pub vertices: Vec<(usize, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<Clause>,
    pub map: Option<VertexMap>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Self {
        CnfFormula { num_vars, clauses, map: None }
    }

    /// DIMACS text with the vertex map in comment lines.
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        if let Some(m) = &self.map {
            s.push_str(&format!("c degree {}\n", m.degree));
            for &(id, level, idx) in &m.vertices {
                s.push_str(&format!("c map v={id} level={level} idx={idx}\n"));
            }
        }
        s.push_str(&format!("p cnf {} {}\n", self.num_vars, self.clauses.len()));
        for c in &self.clauses {
            for l in c.lits() {
                s.push_str(&l.to_string());
                s.push(' ');
            }
            s.push_str("0\n");
        }
        s
    }

    pub fn from_dimacs(text: &str) -> Result<Self, FormulaError> {
        let mut header: Option<(usize, usize)> = None;
        let mut degree = None;
        let mut vertices = Vec::new();
        let mut clauses = Vec::new();
        let mut current: Vec<Lit> = Vec::new();
        let mut last_line = 0;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |msg: String| FormulaError::Dimacs { line: k + 1, msg };
            last_line = k + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('c') {
                let rest = rest.trim();
                if let Some(d) = rest.strip_prefix("degree ") {
                    degree = d.trim().parse::<usize>().ok();
                } else if let Some(m) = rest.strip_prefix("map ") {
                    vertices.push(parse_map(m).ok_or_else(|| err("malformed map comment".into()))?);
                }
                continue;
            }
            if line.starts_with('p') {
                let f: Vec<&str> = line.split_whitespace().collect();
                if header.is_some() || f.len() != 4 || f[1] != "cnf" {
                    return Err(err("malformed header".into()));
                }
                let n = f[2].parse().map_err(|_| err("malformed header".into()))?;
                let m = f[3].parse().map_err(|_| err("malformed header".into()))?;
                header = Some((n, m));
                continue;
            }
            let (n, _) = header.ok_or_else(|| err("clause before header".into()))?;
            for tok in line.split_whitespace() {
                let l: Lit = tok.parse().map_err(|_| err(format!("bad literal `{tok}`")))?;
                if l == 0 {
                    let c = Clause::new(current.drain(..)).map_err(|e| err(e.to_string()))?;
                    clauses.push(c);
                } else {
                    if l.unsigned_abs() as usize > n {
                        return Err(err(format!("literal {l} out of range")));
                    }
                    current.push(l);
                }
            }
        }
        let (n, m) = header.ok_or(FormulaError::Dimacs { line: 0, msg: "missing header".into() })?;
        if !current.is_empty() {
            return Err(FormulaError::Dimacs { line: last_line, msg: "missing terminating 0".into() });
        }
        if clauses.len() != m {
            return Err(FormulaError::Dimacs {
                line: last_line,
                msg: format!("header declares {m} clauses, found {}", clauses.len()),
            });
        }
        let map = match (degree, vertices.is_empty()) {
            (Some(d), false) => Some(VertexMap { degree: d, vertices }),
            _ => None,
        };
        Ok(CnfFormula { num_vars: n, clauses, map })
    }
}

fn parse_map(s: &str) -> Option<(usize, usize, usize)> {
    let mut id = None;
    let mut level = None;
    let mut idx = None;
    for part in s.split_whitespace() {
        let (k, v) = part.split_once('=')?;
        let v: usize = v.parse().ok()?;
        match k {
            "v" => id = Some(v),
            "level" => level = Some(v),
            "idx" => idx = Some(v),
            _ => return None,
        }
    }
    Some((id?, level?, idx?))
}

/// Concatenate `f` and `g` with g's variables shifted past f's. Returns the
/// combined formula and the renaming applied to g (old var → new var).
pub fn disjoint_conjunction(f: &CnfFormula, g: &CnfFormula) -> (CnfFormula, Vec<(u32, u32)>) {
    let shift = f.num_vars as i32;
    let mut clauses = f.clauses.clone();
    for c in &g.clauses {
        let lits = c.lits().iter().map(|&l| if l > 0 { l + shift } else { l - shift });
        clauses.push(Clause::new(lits).expect("renaming preserves clause validity"));
    }
    let renaming = (1..=g.num_vars as u32).map(|v| (v, v + shift as u32)).collect();
    (CnfFormula::new(f.num_vars + g.num_vars, clauses), renaming)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    Source,
    Pebbling,
    Target,
}

/// Peb^d_G, or *Peb^d_G once the targets are stripped.
#[derive(Debug, Clone)]
pub struct PebblingFormula {
    pub dag: LayeredDag,
    pub degree: usize,
    pub cnf: CnfFormula,
    pub groups: Vec<Group>,
    /// ∅ for Peb, All⁺(z) for *Peb.
    pub goal: Clause,
}

/// Variable id of x(v)_i for 0-based vertex id `v` and 1-based `i`.
pub fn var(d: usize, v: usize, i: usize) -> u32 {
    (d * v + i) as u32
}

/// All⁺(B): the disjunction of every variable of every vertex in B.
pub fn all_pos(d: usize, b: crate::dag::VSet) -> Clause {
    Clause(members(b).flat_map(|v| (1..=d).map(move |i| var(d, v, i) as Lit)).collect())
}

pub fn pebbling_contradiction(dag: &LayeredDag, d: usize) -> Result<PebblingFormula, FormulaError> {
    if d == 0 {
        return Err(FormulaError::ZeroDegree);
    }
    let n = dag.len() * d;
    if n > i32::MAX as usize / 2 {
        return Err(FormulaError::TooManyVariables(n));
    }
    let mut clauses = Vec::new();
    let mut groups = Vec::new();
    for v in members(dag.sources()) {
        clauses.push(all_pos(d, crate::dag::bit(v)));
        groups.push(Group::Source);
    }
    for w in 0..dag.len() {
        if let [u, v] = dag.preds(w)[..] {
            for i in 1..=d {
                for j in 1..=d {
                    let mut lits = vec![-(var(d, u, i) as Lit), -(var(d, v, j) as Lit)];
                    lits.extend((1..=d).map(|l| var(d, w, l) as Lit));
                    clauses.push(Clause(lits));
                    groups.push(Group::Pebbling);
                }
            }
        }
    }
    for i in 1..=d {
        clauses.push(Clause(vec![-(var(d, dag.sink(), i) as Lit)]));
        groups.push(Group::Target);
    }
    let map = VertexMap {
        degree: d,
        vertices: (0..dag.len()).map(|v| (v, dag.level(v), dag.index(v))).collect(),
    };
    Ok(PebblingFormula {
        dag: dag.clone(),
        degree: d,
        cnf: CnfFormula { num_vars: n, clauses, map: Some(map) },
        groups,
        goal: Clause::empty(),
    })
}

impl PebblingFormula {
    /// *Peb: drop the target axioms and make All⁺(z) the goal.
    pub fn strip_targets(&self) -> PebblingFormula {
        let mut out = self.clone();
        let keep: Vec<bool> = self.groups.iter().map(|&g| g != Group::Target).collect();
        out.cnf.clauses = self
            .cnf
            .clauses
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        out.groups.retain(|&g| g != Group::Target);
        out.goal = all_pos(self.degree, crate::dag::bit(self.dag.sink()));
        out
    }

    pub fn has_targets(&self) -> bool {
        self.groups.contains(&Group::Target)
    }

    pub fn count(&self, g: Group) -> usize {
        self.groups.iter().filter(|&&x| x == g).count()
    }

    /// 0-based position of the source axiom of `v`.
    pub fn source_axiom(&self, v: usize) -> Option<usize> {
        let target = all_pos(self.degree, crate::dag::bit(v));
        self.position(Group::Source, |c| *c == target)
    }

    /// 0-based position of ¬x(p)_i ∨ ¬x(q)_j ∨ All⁺(w).
    pub fn pebbling_axiom(&self, w: usize, i: usize, j: usize) -> Option<usize> {
        let [p, q] = self.dag.preds(w)[..] else { return None };
        let first = self.position(Group::Pebbling, |c| {
            c.lits()[0] == -(var(self.degree, p, 1) as Lit)
                && c.lits()[1] == -(var(self.degree, q, 1) as Lit)
        })?;
        Some(first + (i - 1) * self.degree + (j - 1))
    }

    /// 0-based position of ¬x(z)_i.
    pub fn target_axiom(&self, i: usize) -> Option<usize> {
        let first = self.position(Group::Target, |_| true)?;
        Some(first + i - 1)
    }

    fn position(&self, g: Group, pred: impl Fn(&Clause) -> bool) -> Option<usize> {
        (0..self.groups.len()).find(|&k| self.groups[k] == g && pred(&self.cnf.clauses[k]))
    }

    /// The vertex an axiom belongs to.
    pub fn axiom_vertex(&self, k: usize) -> usize {
        let c = &self.cnf.clauses[k];
        let l = match self.groups[k] {
            Group::Source | Group::Target => c.lits()[0],
            Group::Pebbling => *c.lits().last().expect("pebbling axioms are nonempty"),
        };
        (l.unsigned_abs() as usize - 1) / self.degree
    }
}

/// Inverse of [`var`]: (vertex id, 1-based index).
pub fn vertex_of_var(d: usize, var: u32) -> (usize, usize) {
    let k = var as usize - 1;
    (k / d, k % d + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dag::LayeredDag;

    #[test]
    fn pi1_degree1() {
        let g = LayeredDag::pyramid(1).unwrap();
        let f = pebbling_contradiction(&g, 1).unwrap();
        let got: Vec<Vec<Lit>> = f.cnf.clauses.iter().map(|c| c.lits().to_vec()).collect();
        assert_eq!(got, vec![vec![1], vec![2], vec![-1, -2, 3], vec![-3]]);
        assert_eq!(f.cnf.num_vars, 3);
        let s = f.strip_targets();
        assert_eq!(s.cnf.clauses.len(), 3);
        assert_eq!(s.goal.lits(), &[3]);
    }

    #[test]
    fn pi2_degree2_counts() {
        let g = LayeredDag::pyramid(2).unwrap();
        let f = pebbling_contradiction(&g, 2).unwrap();
        assert_eq!(f.cnf.clauses.len(), 17);
        assert_eq!(f.cnf.num_vars, 12);
        assert_eq!(
            (f.count(Group::Source), f.count(Group::Pebbling), f.count(Group::Target)),
            (3, 12, 2)
        );
        assert_eq!(f.cnf.clauses.iter().map(Clause::len).max(), Some(4));
        assert!(f.cnf.to_dimacs().contains("p cnf 12 17\n"));
        assert_eq!(f.strip_targets().cnf.clauses.len(), 15);
    }

    #[test]
    fn degree3_goal() {
        let g = LayeredDag::pyramid(1).unwrap();
        let s = pebbling_contradiction(&g, 3).unwrap().strip_targets();
        assert_eq!(s.goal.lits(), &[7, 8, 9]);
    }

    #[test]
    fn dimacs_round_trip_and_errors() {
        let g = LayeredDag::pyramid(3).unwrap();
        let f = pebbling_contradiction(&g, 2).unwrap();
        let back = CnfFormula::from_dimacs(&f.cnf.to_dimacs()).unwrap();
        assert_eq!(back, f.cnf);
        assert_eq!(CnfFormula::default().to_dimacs(), "p cnf 0 0\n");
        assert!(CnfFormula::from_dimacs("p cnf x 1\n1 0\n").is_err());
        assert!(CnfFormula::from_dimacs("p cnf 1 1\n2 0\n").is_err());
        assert!(CnfFormula::from_dimacs("p cnf 2 1\n1 2\n").is_err());
    }

    #[test]
    fn disjoint_union_shifts() {
        let g = LayeredDag::pyramid(1).unwrap();
        let f = pebbling_contradiction(&g, 1).unwrap().cnf;
        let (h, ren) = disjoint_conjunction(&f, &f);
        assert_eq!((h.num_vars, h.clauses.len()), (6, 8));
        assert_eq!(ren[0], (1, 4));
        let (same, _) = disjoint_conjunction(&f, &CnfFormula::default());
        assert_eq!(same.clauses, f.clauses);
    }

    #[test]
    fn axiom_lookup() {
        let g = LayeredDag::pyramid(2).unwrap();
        let f = pebbling_contradiction(&g, 2).unwrap();
        let z = g.sink();
        let k = f.pebbling_axiom(z, 2, 1).unwrap();
        assert_eq!(f.cnf.clauses[k].lits(), &[-8, -9, 11, 12]);
        assert_eq!(f.axiom_vertex(k), z);
        assert_eq!(f.cnf.clauses[f.target_axiom(2).unwrap()].lits(), &[-12]);
        assert_eq!(f.source_axiom(1), Some(1));
    }
}
