//! The projection complex over a family of axis translates in the Cayley
//! tree: projection distances `d_U`, the projection axioms with a measured
//! constant, ordered intervals, finite balls of the complex `P_K`, a
//! bottleneck verifier for quasi-tree behaviour, elliptic-action and WPD
//! spot checks, and lifted standard paths.
//!
//! Everything here is certified relative to a finite, explicitly
//! materialized family; growth-stability between radii is the finite-scale
//! substitute for statements about the full orbit family.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;
use thiserror::Error;

use crate::stallings::{StallingsError, SubgroupAutomaton};
use crate::word::{
    ball, median, project_point_to_axis, tree_distance, Axis, Footprint, Word, WordError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error("projection arguments coincide")]
    Coincident,
    #[error("family has {size} members; need at least {need}")]
    FamilyTooSmall { size: usize, need: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("vertex {vertex} does not lie on the axis")]
    NotOnAxis { vertex: String },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// Constants of the complex: `kappa` bounds the projection axioms and `K`
/// is the interval threshold, which must exceed `kappa` to be usable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjConfig {
    kappa: u64,
    k: u64,
}

impl ProjConfig {
    pub fn new(kappa: u64, k: u64) -> Result<Self, ProjError> {
        if k <= kappa {
            return Err(ProjError::BadParameter(format!(
                "interval threshold K = {k} must exceed kappa = {kappa}"
            )));
        }
        Ok(ProjConfig { kappa, k })
    }

    pub fn kappa(&self) -> u64 {
        self.kappa
    }

    pub fn k(&self) -> u64 {
        self.k
    }
}

/// A finite family of distinct axes with all pairwise projection footprints
/// precomputed. `fp[i][j]` is the footprint of member `j` on member `i`.
#[derive(Debug, Clone)]
pub struct ProjFamily {
    base_axis: Axis,
    generator_ball_radius: u32,
    members: Vec<Axis>,
    fp: Vec<Vec<Option<Footprint>>>,
}

impl ProjFamily {
    /// The translate family `{b · base : |b| <= radius}`, deduplicated by
    /// line equality and sorted canonically.
    pub fn translate_ball(base: &Axis, radius: u32) -> Result<Self, ProjError> {
        let mut members = Vec::new();
        let mut seen = HashSet::new();
        for b in ball(base.rank(), radius)? {
            let ax = base.translate(&b)?;
            if seen.insert(ax.clone()) {
                members.push(ax);
            }
        }
        Self::from_axes(base.clone(), members, radius)
    }

    /// Family over an explicit member list (fixtures and focused tests).
    pub fn from_axes(
        base_axis: Axis,
        mut members: Vec<Axis>,
        generator_ball_radius: u32,
    ) -> Result<Self, ProjError> {
        members.sort_by(|a, b| {
            a.rep()
                .shortlex_cmp(b.rep())
                .then_with(|| a.root().shortlex_cmp(b.root()))
        });
        members.dedup();
        let n = members.len();
        let mut fp = vec![vec![None; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    fp[i][j] =
                        Some(crate::word::project_axis_to_axis(&members[j], &members[i])?);
                }
            }
        }
        Ok(ProjFamily { base_axis, generator_ball_radius, members, fp })
    }

    pub fn base_axis(&self) -> &Axis {
        &self.base_axis
    }

    pub fn generator_ball_radius(&self) -> u32 {
        self.generator_ball_radius
    }

    pub fn members(&self) -> &[Axis] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn index_of(&self, axis: &Axis) -> Option<usize> {
        self.members.iter().position(|m| m == axis)
    }

    /// Footprint of an arbitrary axis on member `i` (table hit when the
    /// source is itself a member).
    fn footprint_on(&self, i: usize, source: &Axis) -> Result<Footprint, ProjError> {
        if let Some(j) = self.index_of(source) {
            if i == j {
                return Err(ProjError::Coincident);
            }
            return Ok(self.fp[i][j].expect("off-diagonal footprints are filled"));
        }
        if &self.members[i] == source {
            return Err(ProjError::Coincident);
        }
        Ok(crate::word::project_axis_to_axis(source, &self.members[i])?)
    }
}

/// Closest-point projection of the line `v` onto the line `u`, as the
/// explicit vertex set on `u` (a single vertex for disjoint lines, a
/// segment where they overlap).
pub fn project_axis_to_axis(u: &Axis, v: &Axis) -> Result<Vec<Word>, ProjError> {
    if u == v {
        return Err(ProjError::Coincident);
    }
    let fp = crate::word::project_axis_to_axis(v, u)?;
    Ok((fp.lo..=fp.hi).map(|t| u.vertex_at(t)).collect())
}

/// `d_U(V, W)`: diameter of the union of the projections of `V` and `W`
/// onto `U`. `V = W` degenerates to `diam π_U(V)`.
pub fn d_u(u: &Axis, v: &Axis, w: &Axis) -> Result<u64, ProjError> {
    if u == v || u == w {
        return Err(ProjError::Coincident);
    }
    let a = crate::word::project_axis_to_axis(v, u)?;
    let b = crate::word::project_axis_to_axis(w, u)?;
    Ok(a.union(&b).diameter())
}

fn d_u_from(a: Footprint, b: Footprint) -> u64 {
    a.union(&b).diameter()
}

/// A triple on which both cross-projections exceed the reported `kappa`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomViolation {
    pub u: Axis,
    pub v: Axis,
    pub w: Axis,
    pub d_u_vw: u64,
    pub d_v_uw: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomReport {
    pub family_size: usize,
    /// Least constant satisfying both projection axioms on the family.
    pub kappa_min: u64,
    /// Largest single projection diameter (axiom 1 extremum).
    pub max_diameter: u64,
    /// Largest over triples of `min(d_U(V,W), d_V(U,W))` (axiom 2 extremum).
    pub max_crossing: u64,
    /// The kappa the violation scan used.
    pub checked_kappa: u64,
    pub violations: Vec<AxiomViolation>,
}

/// Measures the least axiom constant on the family: axiom (1) needs
/// `diam π_U(V) <= κ` on all ordered pairs, axiom (2) forbids
/// `d_V(U,W) > κ` and `d_U(V,W) > κ` simultaneously, and axiom (3) is
/// finiteness, witnessed by the family being finite. The violation scan
/// runs at `kappa_at` when given, otherwise at the measured minimum (where
/// it must come back empty).
pub fn check_axioms(family: &ProjFamily, kappa_at: Option<u64>) -> Result<AxiomReport, ProjError> {
    let n = family.len();
    if n < 3 {
        return Err(ProjError::FamilyTooSmall { size: n, need: 3 });
    }
    let mut max_diameter = 0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                max_diameter = max_diameter.max(family.fp[i][j].unwrap().diameter());
            }
        }
    }
    let mut max_crossing = 0;
    for u in 0..n {
        for v in 0..n {
            if v == u {
                continue;
            }
            for w in 0..n {
                if w == u || w == v {
                    continue;
                }
                let duv = d_u_from(family.fp[u][v].unwrap(), family.fp[u][w].unwrap());
                let dvu = d_u_from(family.fp[v][u].unwrap(), family.fp[v][w].unwrap());
                max_crossing = max_crossing.max(duv.min(dvu));
            }
        }
    }
    let kappa_min = max_diameter.max(max_crossing);
    let checked_kappa = kappa_at.unwrap_or(kappa_min);
    let mut violations = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if v == u {
                continue;
            }
            for w in 0..n {
                if w == u || w == v {
                    continue;
                }
                let duv = d_u_from(family.fp[u][v].unwrap(), family.fp[u][w].unwrap());
                let dvu = d_u_from(family.fp[v][u].unwrap(), family.fp[v][w].unwrap());
                if duv > checked_kappa && dvu > checked_kappa {
                    violations.push(AxiomViolation {
                        u: family.members[u].clone(),
                        v: family.members[v].clone(),
                        w: family.members[w].clone(),
                        d_u_vw: duv,
                        d_v_uw: dvu,
                    });
                }
            }
        }
    }
    Ok(AxiomReport {
        family_size: n,
        kappa_min,
        max_diameter,
        max_crossing,
        checked_kappa,
        violations,
    })
}

/// The interval between two axes: every family member whose projection
/// separation exceeds `K`, listed between the endpoints in geodesic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntervalResult {
    pub v: Axis,
    pub w: Axis,
    /// `[v, interior..., w]` sorted by footprint position along the tree
    /// geodesic between the representative points.
    pub members: Vec<Axis>,
    /// `d_U(v, w)` per member; `None` on the two endpoints.
    pub d_table: Vec<Option<u64>>,
    /// Least order-consistency constant observed over ordered triples.
    pub measured_d: u64,
    /// Whether `d_mid(inner) <= d_mid(v, w)` held on every ordered triple.
    pub upper_ok: bool,
}

impl IntervalResult {
    /// Interior members (those certified to exceed the threshold).
    pub fn interior(&self) -> &[Axis] {
        &self.members[1..self.members.len() - 1]
    }
}

/// Footprint of the line `u` on the tree segment `[p, q]`, as the interval
/// of distances from `p`, by end-projection with stabilization doubling.
fn footprint_on_segment(u: &Axis, p: &Word, q: &Word) -> Result<(u64, u64), ProjError> {
    let proj = |x: &Word| -> Result<u64, WordError> {
        let m = median(p, q, x)?;
        tree_distance(p, &m)
    };
    let period = u.period() as i64;
    let mut n: i64 = 1;
    let mut prev = None;
    let mut stable = 0;
    loop {
        let lo = proj(&u.vertex_at(-n * period))?;
        let hi = proj(&u.vertex_at(n * period))?;
        let cur = (lo.min(hi), lo.max(hi));
        if prev == Some(cur) {
            stable += 1;
            if stable >= 2 {
                return Ok(cur);
            }
        } else {
            stable = 0;
        }
        prev = Some(cur);
        n *= 2;
    }
}

/// Builds `F_K(v, w)` over the family and orders it along the geodesic
/// between the representatives, then measures the order-consistency
/// constant on all ordered triples (endpoints included).
pub fn interval(
    v: &Axis,
    w: &Axis,
    family: &ProjFamily,
    cfg: &ProjConfig,
) -> Result<IntervalResult, ProjError> {
    if v == w {
        return Err(ProjError::Coincident);
    }
    // Qualifying members with their footprint positions along [p, q].
    let p = v.rep().clone();
    let q = w.rep().clone();
    let mut interior: Vec<(u64, u64, usize, u64)> = Vec::new(); // (lo+hi key, tiebreak idx, member, d_U)
    for (i, m) in family.members.iter().enumerate() {
        if m == v || m == w {
            continue;
        }
        let fv = family.footprint_on(i, v)?;
        let fw = family.footprint_on(i, w)?;
        let d = d_u_from(fv, fw);
        if d > cfg.k {
            let (lo, hi) = footprint_on_segment(m, &p, &q)?;
            interior.push((lo + hi, i as u64, i, d));
        }
    }
    interior.sort();
    let mut members = Vec::with_capacity(interior.len() + 2);
    let mut d_table = Vec::with_capacity(interior.len() + 2);
    members.push(v.clone());
    d_table.push(None);
    for &(_, _, i, d) in &interior {
        members.push(family.members[i].clone());
        d_table.push(Some(d));
    }
    members.push(w.clone());
    d_table.push(None);

    // Order consistency over every ordered triple (i < j < k): the middle
    // member sees the inner pair almost as far apart as the endpoints, and
    // the outer members see the other two within the same constant.
    let mut measured_d = 0u64;
    let mut upper_ok = true;
    let n = members.len();
    for j in 1..n.saturating_sub(1) {
        let d_vw = d_table[j].expect("middle of a triple is interior");
        for i in 0..j {
            for k in j + 1..n {
                let mid_inner = d_u(&members[j], &members[i], &members[k])?;
                if mid_inner > d_vw {
                    upper_ok = false;
                }
                measured_d = measured_d.max(d_vw.saturating_sub(mid_inner));
                let lo_outer = d_u_defined(&members[i], &members[j], &members[k])?;
                let hi_outer = d_u_defined(&members[k], &members[i], &members[j])?;
                if let Some(d) = lo_outer {
                    measured_d = measured_d.max(d);
                }
                if let Some(d) = hi_outer {
                    measured_d = measured_d.max(d);
                }
            }
        }
    }
    Ok(IntervalResult { v: v.clone(), w: w.clone(), members, d_table, measured_d, upper_ok })
}

/// `d_U` that yields `None` instead of erroring when arguments coincide
/// (an endpoint can reappear inside a triple scan).
fn d_u_defined(u: &Axis, v: &Axis, w: &Axis) -> Result<Option<u64>, ProjError> {
    if u == v || u == w {
        return Ok(None);
    }
    d_u(u, v, w).map(Some)
}

/// Finite piece of the projection complex: vertices are family members,
/// edges the pairs whose `K`-interval over the family is empty.
#[derive(Debug, Clone)]
pub struct PkGraph {
    pub axes: Vec<Axis>,
    pub center: usize,
    pub adj: Vec<Vec<usize>>,
    /// Hop distances from the center, one per vertex.
    pub dist: Vec<u64>,
}

#[derive(Serialize)]
struct GraphJson {
    vertices: Vec<AxisIdJson>,
    edges: Vec<[usize; 2]>,
}

#[derive(Serialize)]
struct AxisIdJson {
    rep: String,
    root: String,
}

impl PkGraph {
    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|a| a.len()).sum::<usize>() / 2
    }

    pub fn index_of(&self, axis: &Axis) -> Option<usize> {
        self.axes.iter().position(|a| a == axis)
    }

    /// Hop distance from the center to the axis, if it is in the ball.
    pub fn d_p(&self, axis: &Axis) -> Option<u64> {
        self.index_of(axis).map(|i| self.dist[i])
    }

    pub fn to_json(&self) -> String {
        let doc = GraphJson {
            vertices: self
                .axes
                .iter()
                .map(|a| AxisIdJson { rep: a.rep().to_string(), root: a.root().to_string() })
                .collect(),
            edges: self
                .adj
                .iter()
                .enumerate()
                .flat_map(|(i, ns)| {
                    ns.iter().filter(move |&&j| i < j).map(move |&j| [i, j])
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("graph serializes")
    }
}

/// Whether `F_K(u, v)` over the family is empty, i.e. the two axes are
/// adjacent in the projection complex.
fn pk_adjacent(
    family: &ProjFamily,
    cfg: &ProjConfig,
    i: usize,
    j: usize,
) -> Result<bool, ProjError> {
    for x in 0..family.len() {
        if x == i || x == j {
            continue;
        }
        let d = d_u_from(family.fp[x][i].unwrap(), family.fp[x][j].unwrap());
        if d > cfg.k {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Induced ball of the projection complex around `center`, out to `hops`
/// edges, with hop distances.
pub fn pk_ball(
    center: &Axis,
    hops: u32,
    family: &ProjFamily,
    cfg: &ProjConfig,
) -> Result<PkGraph, ProjError> {
    let c = family
        .index_of(center)
        .ok_or_else(|| ProjError::BadParameter("center is not a family member".into()))?;
    let n = family.len();
    // Full adjacency once, then a bounded BFS.
    let mut adj_full = vec![Vec::new(); n];
    for i in 0..n {
        for j in i + 1..n {
            if pk_adjacent(family, cfg, i, j)? {
                adj_full[i].push(j);
                adj_full[j].push(i);
            }
        }
    }
    let mut dist = vec![u64::MAX; n];
    let mut order = Vec::new();
    dist[c] = 0;
    order.push(c);
    let mut queue = VecDeque::from([c]);
    while let Some(v) = queue.pop_front() {
        if dist[v] == hops as u64 {
            continue;
        }
        for &t in &adj_full[v] {
            if dist[t] == u64::MAX {
                dist[t] = dist[v] + 1;
                order.push(t);
                queue.push_back(t);
            }
        }
    }
    // Induced subgraph on the reached set, center first then BFS order.
    let mut new_index = vec![usize::MAX; n];
    for (ni, &v) in order.iter().enumerate() {
        new_index[v] = ni;
    }
    let axes: Vec<Axis> = order.iter().map(|&v| family.members[v].clone()).collect();
    let adj: Vec<Vec<usize>> = order
        .iter()
        .map(|&v| {
            adj_full[v]
                .iter()
                .filter(|&&t| new_index[t] != usize::MAX)
                .map(|&t| new_index[t])
                .collect()
        })
        .collect();
    let dist = order.iter().map(|&v| dist[v]).collect();
    Ok(PkGraph { axes, center: 0, adj, dist })
}

/// Outcome of the bottleneck scan: the least width that always pinches
/// pairs apart, and a pair needing exactly that width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BottleneckReport {
    pub delta: u64,
    pub witness: Option<(usize, usize)>,
}

/// Cut vertices via Tarjan's low-link DFS, iterative so deep paths cannot
/// overflow the stack.
fn articulation_points(adj: &[Vec<usize>]) -> Vec<bool> {
    let n = adj.len();
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut artic = vec![false; n];
    let mut timer = 0usize;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // Frames of (vertex, parent, next neighbour index to try).
        let mut stack = vec![(root, usize::MAX, 0usize)];
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        let mut root_children = 0usize;
        while let Some(&mut (v, parent, ref mut next)) = stack.last_mut() {
            if *next < adj[v].len() {
                let t = adj[v][*next];
                *next += 1;
                if disc[t] == usize::MAX {
                    disc[t] = timer;
                    low[t] = timer;
                    timer += 1;
                    if v == root {
                        root_children += 1;
                    }
                    stack.push((t, v, 0));
                } else if t != parent {
                    low[v] = low[v].min(disc[t]);
                }
            } else {
                stack.pop();
                if let Some(&mut (p, _, _)) = stack.last_mut() {
                    low[p] = low[p].min(low[v]);
                    if p != root && low[v] >= disc[p] {
                        artic[p] = true;
                    }
                }
            }
        }
        artic[root] = root_children > 1;
    }
    artic
}

/// Manning-style bottleneck constant of a finite connected graph: the
/// least `δ` such that every vertex pair has a geodesic midpoint (middle
/// vertex, or middle edge for odd distance) whose closed `δ`-ball either
/// contains both endpoints or separates them when deleted. Small constants
/// certify tree-like geometry; a long cycle needs `δ` about a quarter of
/// its length.
pub fn bottleneck_constant(adj: &[Vec<usize>]) -> Result<BottleneckReport, ProjError> {
    let n = adj.len();
    if n == 0 {
        return Err(ProjError::Disconnected);
    }
    let bfs = |from: usize| -> Vec<u64> {
        let mut d = vec![u64::MAX; n];
        d[from] = 0;
        let mut q = VecDeque::from([from]);
        while let Some(v) = q.pop_front() {
            for &t in &adj[v] {
                if d[t] == u64::MAX {
                    d[t] = d[v] + 1;
                    q.push_back(t);
                }
            }
        }
        d
    };
    let dist: Vec<Vec<u64>> = (0..n).map(bfs).collect();
    if dist.iter().any(|row| row.iter().any(|&d| d == u64::MAX)) {
        return Err(ProjError::Disconnected);
    }
    let artic = articulation_points(adj);

    // Ball membership for a vertex midpoint or an edge midpoint.
    enum Mid {
        Vertex(usize),
        Edge(usize, usize),
    }
    let in_ball = |mid: &Mid, delta: u64, w: usize| -> bool {
        match *mid {
            Mid::Vertex(z) => dist[z][w] <= delta,
            Mid::Edge(u, v) => delta > 0 && dist[u][w].min(dist[v][w]) <= delta - 1,
        }
    };
    let separates = |mid: &Mid, delta: u64, x: usize, y: usize| -> bool {
        if in_ball(mid, delta, x) || in_ball(mid, delta, y) {
            return false;
        }
        // Removing nothing disconnects nothing; removing one vertex only
        // helps when it is an articulation point.
        match *mid {
            Mid::Edge(_, _) if delta == 0 => return false,
            Mid::Vertex(z) if delta == 0 && !artic[z] => return false,
            _ => {}
        }
        // BFS from x avoiding the ball; y must become unreachable.
        let mut seen = vec![false; n];
        seen[x] = true;
        let mut q = VecDeque::from([x]);
        while let Some(v) = q.pop_front() {
            for &t in &adj[v] {
                if !seen[t] && !in_ball(mid, delta, t) {
                    if t == y {
                        return false;
                    }
                    seen[t] = true;
                    q.push_back(t);
                }
            }
        }
        true
    };

    let mut delta = 0u64;
    let mut witness = None;
    for x in 0..n {
        for y in x + 1..n {
            let d = dist[x][y];
            let mut mids = Vec::new();
            if d % 2 == 0 {
                for z in 0..n {
                    if dist[x][z] == d / 2 && dist[y][z] == d / 2 {
                        mids.push(Mid::Vertex(z));
                    }
                }
            } else {
                for u in 0..n {
                    if dist[x][u] != (d - 1) / 2 {
                        continue;
                    }
                    for &v in &adj[u] {
                        if dist[y][v] == (d - 1) / 2 {
                            mids.push(Mid::Edge(u, v));
                        }
                    }
                }
            }
            // Least width at which some midpoint passes for this pair.
            let mut need = 0;
            'width: loop {
                for mid in &mids {
                    let both_in = in_ball(mid, need, x) && in_ball(mid, need, y);
                    if both_in || separates(mid, need, x, y) {
                        break 'width;
                    }
                }
                need += 1;
            }
            if need > delta {
                delta = need;
                witness = Some((x, y));
            }
        }
    }
    Ok(BottleneckReport { delta, witness })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EllipticReport {
    pub elliptic: bool,
    /// Largest hop distance `d_P(U, hU)` seen; 2 stands for "more than 1".
    pub max_dp: u64,
    /// Element attaining `max_dp`, when positive.
    pub witness: Option<Word>,
}

/// Checks `d_P(U, hU) <= 1` for every subgroup element within the radius:
/// equality gives distance 0, otherwise adjacency is interval emptiness
/// over the family.
pub fn elliptic_check(
    h: &SubgroupAutomaton,
    u: &Axis,
    family: &ProjFamily,
    cfg: &ProjConfig,
    radius: u32,
) -> Result<EllipticReport, ProjError> {
    let mut max_dp = 0;
    let mut witness = None;
    for elem in h.enumerate(radius)? {
        let hu = u.translate(&elem)?;
        let dp = if hu == *u {
            0
        } else {
            let iv = interval(u, &hu, family, cfg)?;
            if iv.interior().is_empty() {
                1
            } else {
                2
            }
        };
        if dp > max_dp {
            max_dp = dp;
            witness = Some(elem);
        }
    }
    Ok(EllipticReport { elliptic: max_dp <= 1, max_dp, witness })
}

/// Counts candidate WPD-violating elements: those moving both pins at most
/// `L` while lying in the radius-`R` ball.
pub fn wpd_count(x: &Word, y: &Word, l: u64, r: u32) -> Result<(u64, Vec<Word>), ProjError> {
    if (r as u64) < l {
        return Err(ProjError::BadParameter(format!(
            "ball radius {r} below displacement bound {l}"
        )));
    }
    let mut found = Vec::new();
    for h in ball(x.rank(), r)? {
        let hx = h.concat(x)?;
        let hy = h.concat(y)?;
        if tree_distance(x, &hx)? <= l && tree_distance(y, &hy)? <= l {
            found.push(h);
        }
    }
    Ok((found.len() as u64, found))
}

/// A lifted standard path: tree vertices visited in order, alternating
/// travel along interval axes with bridge geodesics between footprints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiftedPath {
    pub vertices: Vec<Word>,
    pub length: u64,
    pub interval_size: usize,
}

/// Builds the standard path from `u` on `start` to `v` on `end` through
/// the ordered `K`-interval: inside each member axis walk to the footprint
/// of the next one, then bridge to the next axis by a tree geodesic.
pub fn lift_standard_path(
    u: &Word,
    start: &Axis,
    v: &Word,
    end: &Axis,
    family: &ProjFamily,
    cfg: &ProjConfig,
) -> Result<LiftedPath, ProjError> {
    let cu = start
        .coord_of(u)
        .ok_or_else(|| ProjError::NotOnAxis { vertex: u.to_string() })?;
    let cv = end
        .coord_of(v)
        .ok_or_else(|| ProjError::NotOnAxis { vertex: v.to_string() })?;
    let mut vertices = vec![u.clone()];
    let push_axis_walk = |vertices: &mut Vec<Word>, ax: &Axis, from: i64, to: i64| {
        let step = if to >= from { 1 } else { -1 };
        let mut t = from;
        while t != to {
            t += step;
            vertices.push(ax.vertex_at(t));
        }
    };
    let push_bridge = |vertices: &mut Vec<Word>, from: &Word, to: &Word| -> Result<(), ProjError> {
        let w = from.inverse().concat(to)?;
        for i in 1..=w.len() {
            vertices.push(from.concat(&w.prefix(i))?);
        }
        Ok(())
    };

    let interval_size;
    if start == end {
        push_axis_walk(&mut vertices, start, cu, cv);
        interval_size = 1;
    } else {
        let iv = interval(start, end, family, cfg)?;
        interval_size = iv.members.len();
        let mut entry_coord = cu;
        for (i, ax) in iv.members.iter().enumerate() {
            if i + 1 < iv.members.len() {
                let next = &iv.members[i + 1];
                let fp = crate::word::project_axis_to_axis(next, ax)?;
                let exit_coord = entry_coord.clamp(fp.lo, fp.hi);
                push_axis_walk(&mut vertices, ax, entry_coord, exit_coord);
                let exit_vertex = ax.vertex_at(exit_coord);
                let (entry_vertex, c, _) = project_point_to_axis(&exit_vertex, next)?;
                push_bridge(&mut vertices, &exit_vertex, &entry_vertex)?;
                entry_coord = c;
            } else {
                push_axis_walk(&mut vertices, ax, entry_coord, cv);
            }
        }
    }
    debug_assert!(vertices
        .windows(2)
        .all(|p| tree_distance(&p[0], &p[1]).unwrap() == 1));
    let length = vertices.len() as u64 - 1;
    Ok(LiftedPath { vertices, length, interval_size })
}
