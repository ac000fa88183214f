//! Layered DAGs: pyramids, binary trees, and general layered graphs with
//! indegree 0/2 and a unique sink.
//!
//! Vertices carry dense ids ordered by `(level, index)`. Every vertex set is a
//! `u64` bitmask, so graphs are limited to 64 vertices.

use serde::Serialize;
use std::fmt;
use thiserror::Error;

/// Bitmask over vertex ids.
pub type VSet = u64;

pub const MAX_VERTICES: usize = 64;

/// Iterate the ids in a vertex set in increasing order.
pub fn members(s: VSet) -> impl Iterator<Item = usize> {
    let mut rest = s;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let v = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(v)
        }
    })
}

pub fn set_of<I: IntoIterator<Item = usize>>(ids: I) -> VSet {
    ids.into_iter().fold(0, |acc, v| acc | bit(v))
}

#[inline]
pub fn bit(v: usize) -> VSet {
    1u64 << v
}

#[inline]
pub fn contains(s: VSet, v: usize) -> bool {
    s & bit(v) != 0
}

#[inline]
pub fn size(s: VSet) -> usize {
    s.count_ones() as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoLevels,
    EmptyLevel { level: usize },
    TooManyVertices { count: usize },
    VertexOutOfRange { id: usize },
    NonConsecutiveEdge { from: usize, to: usize },
    DuplicateEdge { from: usize, to: usize },
    BadIndegree { vertex: usize, indegree: usize },
    SinkCount { count: usize },
    SiblingReachable { left: usize, right: usize },
    Degenerate,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLevels => write!(f, "graph has no levels"),
            Violation::EmptyLevel { level } => write!(f, "level {level} is empty"),
            Violation::TooManyVertices { count } => {
                write!(f, "{count} vertices exceed the limit of {MAX_VERTICES}")
            }
            Violation::VertexOutOfRange { id } => write!(f, "vertex {id} out of range"),
            Violation::NonConsecutiveEdge { from, to } => {
                write!(f, "non-consecutive edge {from} -> {to}")
            }
            Violation::DuplicateEdge { from, to } => write!(f, "duplicate edge {from} -> {to}"),
            Violation::BadIndegree { vertex, indegree } => {
                write!(f, "vertex {vertex} has indegree {indegree}")
            }
            Violation::SinkCount { count } => write!(f, "{count} sinks, expected exactly one"),
            Violation::SiblingReachable { left, right } => {
                write!(f, "siblings {left} and {right} are comparable")
            }
            Violation::Degenerate => write!(f, "single vertex graph has no indegree-2 structure"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("height must be at least 1")]
    ZeroHeight,
    #[error("invalid layered graph: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("vertex set is not totally ordered")]
    NotAChain,
    #[error("not a path: {0}")]
    NotAPath(String),
    #[error("enumeration guard: {0}")]
    TooLarge(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("unknown graph spec `{0}` (expected pyramid:<h>, tree:<h> or a file)")]
    UnknownSpec(String),
    #[error("graph parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Pyramid,
    Tree,
    General,
}

/// A layered, blob-pebblable DAG.
#[derive(Debug, Clone)]
pub struct LayeredDag {
    level_sizes: Vec<usize>,
    level: Vec<usize>,
    index: Vec<usize>,
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    below: Vec<VSet>,
    above: Vec<VSet>,
    sink: usize,
    shape: Shape,
}

impl PartialEq for LayeredDag {
    fn eq(&self, other: &Self) -> bool {
        self.level_sizes == other.level_sizes && self.preds == other.preds
    }
}

impl Eq for LayeredDag {}

/// Check a level/edge description against the layered blob-pebblable
/// invariants. An empty result means the graph is valid.
pub fn validate_blob_pebblable(level_sizes: &[usize], edges: &[(usize, usize)]) -> Vec<Violation> {
    let mut out = Vec::new();
    if level_sizes.is_empty() {
        out.push(Violation::NoLevels);
        return out;
    }
    for (l, &c) in level_sizes.iter().enumerate() {
        if c == 0 {
            out.push(Violation::EmptyLevel { level: l });
        }
    }
    let n: usize = level_sizes.iter().sum();
    if n > MAX_VERTICES {
        out.push(Violation::TooManyVertices { count: n });
        return out;
    }
    if n == 1 {
        out.push(Violation::Degenerate);
        return out;
    }
    let level = level_table(level_sizes);
    let mut indeg = vec![0usize; n];
    let mut outdeg = vec![0usize; n];
    let mut seen = std::collections::HashSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n {
            out.push(Violation::VertexOutOfRange { id: a.max(b) });
            continue;
        }
        if level[b] != level[a] + 1 {
            out.push(Violation::NonConsecutiveEdge { from: a, to: b });
        }
        if !seen.insert((a, b)) {
            out.push(Violation::DuplicateEdge { from: a, to: b });
            continue;
        }
        indeg[b] += 1;
        outdeg[a] += 1;
    }
    for v in 0..n {
        let want = if level[v] == 0 { 0 } else { 2 };
        if indeg[v] != want {
            out.push(Violation::BadIndegree { vertex: v, indegree: indeg[v] });
        }
    }
    let sinks = (0..n).filter(|&v| outdeg[v] == 0).count();
    if sinks != 1 {
        out.push(Violation::SinkCount { count: sinks });
    }
    if out.is_empty() {
        // Siblings share a level, so they can never reach each other; the
        // check still runs on the reachability tables.
        let (preds, _) = adjacency(n, edges);
        let below = below_table(&preds);
        for p in &preds {
            if let [a, b] = p[..] {
                if contains(below[a], b) || contains(below[b], a) {
                    out.push(Violation::SiblingReachable { left: a, right: b });
                }
            }
        }
    }
    out
}

fn level_table(level_sizes: &[usize]) -> Vec<usize> {
    level_sizes
        .iter()
        .enumerate()
        .flat_map(|(l, &c)| std::iter::repeat_n(l, c))
        .collect()
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> (Vec<Vec<usize>>, Vec<Vec<usize>>) {
    let mut preds = vec![Vec::new(); n];
    let mut succs = vec![Vec::new(); n];
    for &(a, b) in edges {
        preds[b].push(a);
        succs[a].push(b);
    }
    for l in preds.iter_mut().chain(succs.iter_mut()) {
        l.sort_unstable();
        l.dedup();
    }
    (preds, succs)
}

fn below_table(preds: &[Vec<usize>]) -> Vec<VSet> {
    let mut below = vec![0; preds.len()];
    // Ids are ordered by level, so predecessors always come first.
    for v in 0..preds.len() {
        below[v] = bit(v) | preds[v].iter().fold(0, |acc, &p| acc | below[p]);
    }
    below
}

impl LayeredDag {
    /// Build from level sizes and an edge list over dense ids.
    pub fn new(level_sizes: Vec<usize>, edges: &[(usize, usize)]) -> Result<Self, DagError> {
        let violations = validate_blob_pebblable(&level_sizes, edges);
        if !violations.is_empty() {
            return Err(DagError::Invalid(violations));
        }
        let n: usize = level_sizes.iter().sum();
        let level = level_table(&level_sizes);
        let mut index = vec![0; n];
        let mut k = 0;
        for &c in &level_sizes {
            for i in 1..=c {
                index[k] = i;
                k += 1;
            }
        }
        let (preds, succs) = adjacency(n, edges);
        let below = below_table(&preds);
        let mut above = vec![0; n];
        for v in (0..n).rev() {
            above[v] = bit(v) | succs[v].iter().fold(0, |acc, &s| acc | above[s]);
        }
        let sink = (0..n).find(|&v| succs[v].is_empty()).expect("validated");
        let mut dag = LayeredDag {
            level_sizes,
            level,
            index,
            preds,
            succs,
            below,
            above,
            sink,
            shape: Shape::General,
        };
        dag.shape = dag.detect_shape();
        Ok(dag)
    }

    fn detect_shape(&self) -> Shape {
        let h = self.height();
        let pyramid = (0..=h).all(|l| self.level_sizes[l] == h + 1 - l)
            && (0..self.len()).all(|v| {
                let l = self.level[v];
                l == 0 || {
                    let i = self.index[v];
                    self.preds[v] == vec![self.id(l - 1, i), self.id(l - 1, i + 1)]
                }
            });
        if pyramid {
            return Shape::Pyramid;
        }
        let tree = (0..=h).all(|l| self.level_sizes[l] == 1 << (h - l))
            && (0..self.len()).all(|v| {
                let l = self.level[v];
                l == 0 || {
                    let i = self.index[v];
                    self.preds[v] == vec![self.id(l - 1, 2 * i - 1), self.id(l - 1, 2 * i)]
                }
            });
        if tree {
            Shape::Tree
        } else {
            Shape::General
        }
    }

    /// The pyramid of height `h`: level L holds h+1−L vertices and (L,i) has
    /// predecessors (L−1,i) and (L−1,i+1).
    pub fn pyramid(h: usize) -> Result<Self, DagError> {
        if h == 0 {
            return Err(DagError::ZeroHeight);
        }
        let sizes: Vec<usize> = (0..=h).map(|l| h + 1 - l).collect();
        let first = firsts(&sizes);
        let mut edges = Vec::new();
        for l in 1..=h {
            for i in 0..sizes[l] {
                let v = first[l] + i;
                edges.push((first[l - 1] + i, v));
                edges.push((first[l - 1] + i + 1, v));
            }
        }
        Self::new(sizes, &edges)
    }

    /// The complete binary tree of height `h` with leaves on level 0.
    pub fn tree(h: usize) -> Result<Self, DagError> {
        if h == 0 {
            return Err(DagError::ZeroHeight);
        }
        let sizes: Vec<usize> = (0..=h).map(|l| 1usize << (h - l)).collect();
        if sizes.iter().sum::<usize>() > MAX_VERTICES {
            return Err(DagError::Invalid(vec![Violation::TooManyVertices {
                count: sizes.iter().sum(),
            }]));
        }
        let first = firsts(&sizes);
        let mut edges = Vec::new();
        for l in 1..=h {
            for i in 0..sizes[l] {
                let v = first[l] + i;
                edges.push((first[l - 1] + 2 * i, v));
                edges.push((first[l - 1] + 2 * i + 1, v));
            }
        }
        Self::new(sizes, &edges)
    }

    /// Resolve a CLI graph spec: `pyramid:<h>`, `tree:<h>`, or graph text.
    pub fn from_spec(spec: &str) -> Result<Self, DagError> {
        let parse_h = |s: &str| s.parse::<usize>().map_err(|_| DagError::UnknownSpec(spec.into()));
        if let Some(h) = spec.strip_prefix("pyramid:") {
            Self::pyramid(parse_h(h)?)
        } else if let Some(h) = spec.strip_prefix("tree:") {
            Self::tree(parse_h(h)?)
        } else {
            Err(DagError::UnknownSpec(spec.into()))
        }
    }

    /// Parse the graph text format.
    pub fn parse(text: &str) -> Result<Self, DagError> {
        let mut num_levels = None;
        let mut sizes: Vec<Option<usize>> = Vec::new();
        let mut edges = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |msg: &str| DagError::Parse { line: k + 1, msg: msg.to_string() };
            let nums: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<usize>().map_err(|_| err(&format!("bad number `{s}`")));
            match nums[0] {
                "layered" if nums.len() == 2 => {
                    if num_levels.is_some() {
                        return Err(err("repeated header"));
                    }
                    let n = num(nums[1])?;
                    num_levels = Some(n);
                    sizes = vec![None; n];
                }
                "level" if nums.len() == 3 => {
                    let l = num(nums[1])?;
                    let c = num(nums[2])?;
                    match sizes.get_mut(l) {
                        Some(slot @ None) => *slot = Some(c),
                        Some(Some(_)) => return Err(err("level declared twice")),
                        None => return Err(err("level out of range or before header")),
                    }
                }
                "edge" if nums.len() == 3 => edges.push((num(nums[1])?, num(nums[2])?)),
                _ => return Err(err("unrecognised line")),
            }
        }
        if num_levels.is_none() {
            return Err(DagError::Parse { line: 0, msg: "missing `layered` header".into() });
        }
        let sizes = sizes
            .into_iter()
            .enumerate()
            .map(|(l, s)| s.ok_or(DagError::Parse { line: 0, msg: format!("level {l} missing") }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(sizes, &edges)
    }

    /// Render in the graph text format.
    pub fn to_text(&self) -> String {
        let mut s = format!("layered {}\n", self.level_sizes.len());
        for (l, c) in self.level_sizes.iter().enumerate() {
            s.push_str(&format!("level {l} {c}\n"));
        }
        for v in 0..self.len() {
            for &p in &self.preds[v] {
                s.push_str(&format!("edge {p} {v}\n"));
            }
        }
        s
    }

    pub fn len(&self) -> usize {
        self.level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.level.is_empty()
    }

    pub fn height(&self) -> usize {
        self.level_sizes.len() - 1
    }

    pub fn level_sizes(&self) -> &[usize] {
        &self.level_sizes
    }

    pub fn all(&self) -> VSet {
        if self.len() == 64 {
            u64::MAX
        } else {
            bit(self.len()) - 1
        }
    }

    pub fn sink(&self) -> usize {
        self.sink
    }

    pub fn level(&self, v: usize) -> usize {
        self.level[v]
    }

    /// 1-based index of `v` within its level.
    pub fn index(&self, v: usize) -> usize {
        self.index[v]
    }

    pub fn id(&self, level: usize, index: usize) -> usize {
        self.level_sizes[..level].iter().sum::<usize>() + index - 1
    }

    pub fn is_source(&self, v: usize) -> bool {
        self.preds[v].is_empty()
    }

    pub fn sources(&self) -> VSet {
        set_of((0..self.len()).filter(|&v| self.is_source(v)))
    }

    pub fn preds(&self, v: usize) -> &[usize] {
        &self.preds[v]
    }

    pub fn pred_set(&self, v: usize) -> VSet {
        set_of(self.preds[v].iter().copied())
    }

    pub fn succs(&self, v: usize) -> &[usize] {
        &self.succs[v]
    }

    /// `v` together with every vertex that reaches it.
    pub fn below(&self, v: usize) -> VSet {
        self.below[v]
    }

    pub fn below_strict(&self, v: usize) -> VSet {
        self.below[v] & !bit(v)
    }

    pub fn above(&self, v: usize) -> VSet {
        self.above[v]
    }

    pub fn above_strict(&self, v: usize) -> VSet {
        self.above[v] & !bit(v)
    }

    pub fn at_level(&self, l: usize) -> VSet {
        set_of((0..self.len()).filter(|&v| self.level[v] == l))
    }

    /// Vertices on level `j` or higher.
    pub fn at_or_above_level(&self, j: usize) -> VSet {
        set_of((0..self.len()).filter(|&v| self.level[v] >= j))
    }

    pub fn is_pyramid(&self) -> bool {
        self.shape == Shape::Pyramid
    }

    pub fn is_tree(&self) -> bool {
        self.shape == Shape::Tree
    }

    /// Paper-style vertex name: level letters s, u, v, w, x, y and `z` for
    /// the sink, followed by the index. Levels beyond the sixth use `l<L>_`.
    pub fn name(&self, v: usize) -> String {
        if v == self.sink {
            return "z".into();
        }
        const LETTERS: [&str; 6] = ["s", "u", "v", "w", "x", "y"];
        match LETTERS.get(self.level[v]) {
            Some(c) => format!("{c}{}", self.index[v]),
            None => format!("l{}_{}", self.level[v], self.index[v]),
        }
    }

    /// Look up a vertex by name (`s1`, `u2`, `z`, `l6_1`) or numeric id.
    pub fn vertex(&self, name: &str) -> Result<usize, DagError> {
        if let Ok(id) = name.parse::<usize>() {
            if id < self.len() {
                return Ok(id);
            }
        }
        (0..self.len())
            .find(|&v| self.name(v) == name)
            .ok_or_else(|| DagError::UnknownVertex(name.into()))
    }

    /// Set from a list of names.
    pub fn vset(&self, names: &[&str]) -> VSet {
        set_of(names.iter().map(|n| self.vertex(n).unwrap_or_else(|e| panic!("{e}"))))
    }

    pub fn names(&self, s: VSet) -> Vec<String> {
        members(s).map(|v| self.name(v)).collect()
    }

    pub fn is_chain(&self, b: VSet) -> bool {
        members(b).all(|v| b & !(self.below[v] | self.above[v]) == 0)
    }

    /// Lowest vertex of a nonempty chain.
    pub fn bot(b: VSet) -> usize {
        b.trailing_zeros() as usize
    }

    /// Highest vertex of a nonempty chain.
    pub fn top(b: VSet) -> usize {
        63 - b.leading_zeros() as usize
    }

    /// Vertices on some path from bot(B) to top(B) passing through all of
    /// B, including B itself.
    pub fn between(&self, b: VSet) -> VSet {
        let ids: Vec<usize> = members(b).collect();
        let mut out = b;
        for w in ids.windows(2) {
            out |= self.above[w[0]] & self.below[w[1]];
        }
        out
    }

    /// Legal pebble positions: every vertex on a source path through B to
    /// top(B), minus B.
    pub fn lpp(&self, b: VSet) -> VSet {
        if b == 0 {
            return 0;
        }
        (self.below[Self::bot(b)] | self.between(b)) & !b
    }

    /// All source paths ending at `w`, each listed from the source upward.
    pub fn source_paths_to(&self, w: usize) -> Vec<Vec<usize>> {
        if self.is_source(w) {
            return vec![vec![w]];
        }
        let mut out = Vec::new();
        for &p in &self.preds[w] {
            for mut path in self.source_paths_to(p) {
                path.push(w);
                out.push(path);
            }
        }
        out
    }

    /// The source paths containing chain B and ending at top(B), together
    /// with lpp(B) computed from them.
    pub fn paths_via(&self, b: VSet) -> Result<(Vec<Vec<usize>>, VSet), DagError> {
        if b == 0 || !self.is_chain(b) {
            return Err(DagError::NotAChain);
        }
        let top = Self::top(b);
        if size(self.below[top]) > 40 || self.height() > 20 {
            return Err(DagError::TooLarge("path enumeration beyond 2^20 paths".into()));
        }
        let paths: Vec<Vec<usize>> = self
            .source_paths_to(top)
            .into_iter()
            .filter(|p| b & !set_of(p.iter().copied()) == 0)
            .collect();
        let union = paths.iter().fold(0, |acc, p| acc | set_of(p.iter().copied()));
        Ok((paths, union & !b))
    }

    /// All nonempty chains ordered by size, then lexicographically by their
    /// sorted vertex ids.
    pub fn chains(&self) -> Result<Vec<VSet>, DagError> {
        if self.len() > 28 {
            return Err(DagError::TooLarge(format!(
                "chain enumeration on {} vertices",
                self.len()
            )));
        }
        let mut out = Vec::new();
        fn extend(dag: &LayeredDag, chain: VSet, top: usize, out: &mut Vec<VSet>) {
            out.push(chain);
            for v in top + 1..dag.len() {
                if contains(dag.above[top], v) {
                    extend(dag, chain | bit(v), v, out);
                }
            }
        }
        for v in 0..self.len() {
            extend(self, bit(v), v, &mut out);
        }
        out.sort_by_key(|&c| (size(c), members(c).collect::<Vec<_>>()));
        Ok(out)
    }

    /// True iff consecutive entries of `path` are joined by edges.
    pub fn is_path(&self, path: &[usize]) -> bool {
        !path.is_empty()
            && path.iter().all(|&v| v < self.len())
            && path.windows(2).all(|w| self.succs[w[0]].contains(&w[1]))
    }

    /// Converging source paths for the path `path` from u to w: for each
    /// i = 1..K the path P_i arrives at the i-th vertex v_i of `path` through
    /// the predecessor not on `path`, descending from there in a straight
    /// line (always taking the predecessor on the same side).
    pub fn converging_paths(&self, path: &[usize]) -> Result<Vec<Vec<usize>>, DagError> {
        if !self.is_path(path) {
            return Err(DagError::NotAPath("vertices are not contiguous".into()));
        }
        if path.len() < 2 {
            return Err(DagError::NotAPath("path must climb at least one level".into()));
        }
        let mut out = Vec::new();
        for i in 1..path.len() {
            let vi = path[i];
            let ps = &self.preds[vi];
            let (other, low_side) = if ps[0] == path[i - 1] { (ps[1], false) } else { (ps[0], true) };
            let mut line = vec![vi, other];
            let mut cur = other;
            while !self.is_source(cur) {
                cur = if low_side { self.preds[cur][0] } else { self.preds[cur][1] };
                line.push(cur);
            }
            line.reverse();
            out.push(line);
        }
        Ok(out)
    }
}

fn firsts(sizes: &[usize]) -> Vec<usize> {
    let mut acc = 0;
    sizes
        .iter()
        .map(|&c| {
            let f = acc;
            acc += c;
            f
        })
        .collect()
}
