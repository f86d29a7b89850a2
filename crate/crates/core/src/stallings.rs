//! Stallings automata for finitely generated subgroups of a free group:
//! fold, trim to the core, and canonically renumber. The folded core graph
//! answers membership, index, coset geometry, and factor-avoidance queries.
//!
//! Every edge is stored in both directions: vertex `v` has one outgoing slot
//! per letter, and `v --l--> w` always coexists with `w --l^{-1}--> v`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::word::{letter, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StallingsError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("automaton JSON: {0}")]
    Json(String),
    #[error("invalid automaton: {0}")]
    Invalid(String),
    #[error("factor query undefined for the identity")]
    EmptyFactor,
}

/// Folded core Stallings automaton of a subgroup `H <= F_rank`, with a
/// canonical vertex numbering (breadth-first from the base, letters in
/// global order), so equal subgroups produce identical values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubgroupAutomaton {
    rank: u8,
    base: usize,
    /// `edges[v][slot]` is the endpoint of the `letter::from_slot(slot)`
    /// edge out of `v`, if present.
    edges: Vec<Vec<Option<usize>>>,
}

impl SubgroupAutomaton {
    /// Builds the automaton of the subgroup generated by `gens`: a wedge of
    /// loops at the base, folded to a deterministic graph, trimmed to the
    /// core, and renumbered canonically.
    pub fn build(rank: u8, gens: &[Word]) -> Result<Self, StallingsError> {
        Word::identity(rank)?; // validates the rank
        let slots = 2 * rank as usize;
        for g in gens {
            if g.rank() != rank {
                return Err(WordError::RankMismatch { left: rank, right: g.rank() }.into());
            }
        }

        // Wedge of loops, as a multigraph keyed by (vertex, slot).
        let mut multi: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); slots]];
        let add = |multi: &mut Vec<Vec<Vec<usize>>>, f: usize, l: u8, t: usize| {
            multi[f][letter::slot(l)].push(t);
            multi[t][letter::slot(letter::inverse(l))].push(f);
        };
        for g in gens {
            let ls = g.letters();
            if ls.is_empty() {
                continue;
            }
            let mut cur = 0usize;
            for (i, &l) in ls.iter().enumerate() {
                let next = if i + 1 == ls.len() {
                    0
                } else {
                    multi.push(vec![Vec::new(); slots]);
                    multi.len() - 1
                };
                add(&mut multi, cur, l, next);
                cur = next;
            }
        }

        // Fold: while some (vertex, slot) has two distinct targets, identify
        // them. Union-find keeps identification cheap; sizes here are tiny.
        let mut parent: Vec<usize> = (0..multi.len()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        'fold: loop {
            for v in 0..multi.len() {
                if find(&mut parent, v) != v {
                    continue;
                }
                for s in 0..slots {
                    let mut first: Option<usize> = None;
                    for i in 0..multi[v][s].len() {
                        let t = find(&mut parent, multi[v][s][i]);
                        match first {
                            None => first = Some(t),
                            Some(f) if f == t => {}
                            Some(f) => {
                                // Merge t into f and rescan: the merge may
                                // invalidate the lists being iterated.
                                parent[t] = f;
                                let lists = std::mem::take(&mut multi[t]);
                                for (s2, mut l2) in lists.into_iter().enumerate() {
                                    multi[f][s2].append(&mut l2);
                                }
                                continue 'fold;
                            }
                        }
                    }
                }
            }
            break;
        }

        // Freeze classes into a deterministic slot table.
        let mut index = vec![usize::MAX; multi.len()];
        let mut reps = Vec::new();
        for v in 0..multi.len() {
            if find(&mut parent, v) == v {
                index[v] = reps.len();
                reps.push(v);
            }
        }
        let mut edges: Vec<Vec<Option<usize>>> = vec![vec![None; slots]; reps.len()];
        for (new_v, &v) in reps.iter().enumerate() {
            for s in 0..slots {
                for i in 0..multi[v][s].len() {
                    let t = find(&mut parent, multi[v][s][i]);
                    edges[new_v][s] = Some(index[t]);
                }
            }
        }
        let base = index[find(&mut parent, 0)];

        let mut auto = SubgroupAutomaton { rank, base, edges };
        auto.trim();
        auto.canonicalize();
        Ok(auto)
    }

    /// Removes vertices that no reduced base loop can visit: repeatedly
    /// drop non-base vertices of degree at most one.
    fn trim(&mut self) {
        let slots = self.edges[0].len();
        loop {
            let mut victim = None;
            for v in 0..self.edges.len() {
                if v == self.base {
                    continue;
                }
                let deg = self.edges[v].iter().filter(|e| e.is_some()).count();
                if deg <= 1 {
                    victim = Some(v);
                    break;
                }
            }
            let Some(v) = victim else { break };
            for s in 0..slots {
                if let Some(t) = self.edges[v][s] {
                    let rs = letter::slot(letter::inverse(letter::from_slot(s)));
                    if t != v {
                        self.edges[t][rs] = None;
                    }
                }
            }
            // Swap-remove and patch indices.
            let last = self.edges.len() - 1;
            self.edges.swap_remove(v);
            if self.base == last {
                self.base = v;
            }
            if v < self.edges.len() {
                for row in &mut self.edges {
                    for e in row.iter_mut() {
                        if *e == Some(last) {
                            *e = Some(v);
                        }
                    }
                }
            }
        }
    }

    /// Renumbers vertices by breadth-first discovery from the base with
    /// slots scanned in letter order.
    fn canonicalize(&mut self) {
        let n = self.edges.len();
        let mut order = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        order[self.base] = 0;
        queue.push_back(self.base);
        let mut next = 1;
        while let Some(v) = queue.pop_front() {
            for e in &self.edges[v] {
                if let Some(t) = *e {
                    if order[t] == usize::MAX {
                        order[t] = next;
                        next += 1;
                        queue.push_back(t);
                    }
                }
            }
        }
        debug_assert_eq!(next, n, "folded wedge is connected");
        let mut new_edges = vec![Vec::new(); n];
        for v in 0..n {
            new_edges[order[v]] = self.edges[v]
                .iter()
                .map(|e| e.map(|t| order[t]))
                .collect();
        }
        self.edges = new_edges;
        self.base = 0;
    }

    pub fn rank(&self) -> u8 {
        self.rank
    }

    pub fn base(&self) -> usize {
        self.base
    }

    pub fn vertex_count(&self) -> usize {
        self.edges.len()
    }

    /// Undirected edge count of the core graph; the subgroup rank is
    /// `edge_count − vertex_count + 1`.
    pub fn edge_count(&self) -> usize {
        self.edges.iter().flatten().filter(|e| e.is_some()).count() / 2
    }

    fn step(&self, v: usize, l: u8) -> Option<usize> {
        self.edges[v][letter::slot(l)]
    }

    /// Traces the reduced word from the base; `None` when the path dies.
    fn trace(&self, w: &Word) -> Option<usize> {
        let mut v = self.base;
        for &l in w.letters() {
            v = self.step(v, l)?;
        }
        Some(v)
    }

    /// Membership `w \in H`: the reduced spelling traces a base loop.
    pub fn contains(&self, w: &Word) -> Result<bool, StallingsError> {
        if w.rank() != self.rank {
            return Err(WordError::RankMismatch { left: self.rank, right: w.rank() }.into());
        }
        Ok(self.trace(w) == Some(self.base))
    }

    /// `[F : H]`, which is the vertex count exactly when the automaton is
    /// complete; `None` means infinite index.
    pub fn index(&self) -> Option<u64> {
        let complete = self
            .edges
            .iter()
            .all(|row| row.iter().all(|e| e.is_some()));
        complete.then_some(self.edges.len() as u64)
    }

    fn bfs_from(&self, from: usize) -> Vec<u64> {
        let mut dist = vec![u64::MAX; self.edges.len()];
        let mut queue = VecDeque::new();
        dist[from] = 0;
        queue.push_back(from);
        while let Some(v) = queue.pop_front() {
            for e in &self.edges[v] {
                if let Some(t) = *e {
                    if dist[t] == u64::MAX {
                        dist[t] = dist[v] + 1;
                        queue.push_back(t);
                    }
                }
            }
        }
        dist
    }

    /// Eccentricity of the base: every vertex of the core lies within this
    /// graph distance of the base.
    pub fn morse_gauge(&self) -> u64 {
        self.bfs_from(self.base).into_iter().max().unwrap_or(0)
    }

    /// Largest graph distance between any two vertices.
    pub fn diameter(&self) -> u64 {
        (0..self.edges.len())
            .flat_map(|v| self.bfs_from(v))
            .max()
            .unwrap_or(0)
    }

    /// All elements of `H` of reduced length at most `radius`, in shortlex
    /// order: breadth-first over reduced words that trace base loops.
    pub fn enumerate(&self, radius: u32) -> Result<Vec<Word>, StallingsError> {
        // Frontier of reduced traceable words, grown one letter per layer.
        let mut out = Vec::new();
        let mut frontier: Vec<(usize, Vec<u8>)> = vec![(self.base, Vec::new())];
        out.push(Word::identity(self.rank)?);
        let slots = 2 * self.rank as usize;
        for _ in 0..radius {
            let mut next = Vec::new();
            for (v, w) in &frontier {
                for s in 0..slots {
                    let l = letter::from_slot(s);
                    if w.last() == Some(&letter::inverse(l)) {
                        continue;
                    }
                    if let Some(t) = self.edges[*v][s] {
                        let mut w2 = w.clone();
                        w2.push(l);
                        if t == self.base {
                            out.push(Word::from_letters(&w2, self.rank)?);
                        }
                        next.push((t, w2));
                    }
                }
            }
            frontier = next;
        }
        Ok(out)
    }

    /// Distance from the vertex `x` to the orbit `H o` in the Cayley tree:
    /// over traceable prefixes of `x`, the cheapest way to leave the core
    /// and return to the base.
    pub fn orbit_distance(&self, x: &Word) -> Result<u64, StallingsError> {
        if x.rank() != self.rank {
            return Err(WordError::RankMismatch { left: self.rank, right: x.rank() }.into());
        }
        let dist = self.bfs_from(self.base);
        let n = x.len() as u64;
        let mut v = self.base;
        let mut best = n + dist[v];
        for (i, &l) in x.letters().iter().enumerate() {
            match self.step(v, l) {
                Some(t) => {
                    v = t;
                    best = best.min(n - (i as u64 + 1) + dist[v]);
                }
                None => break,
            }
        }
        Ok(best)
    }

    /// Whether `g` lies in the double coset `S H S` for the finite set `S`.
    pub fn in_double_coset(&self, g: &Word, s: &[Word]) -> Result<bool, StallingsError> {
        for s1 in s {
            let left = s1.inverse().concat(g)?;
            for s2 in s {
                if self.contains(&left.concat(&s2.inverse())?)? {
                    return Ok(true);
                }
            }
        }
        Ok(false)
    }

    /// True when no element of `H` contains `u` or `u^{-1}` as a factor of
    /// its reduced spelling.
    pub fn factor_free(&self, u: &Word) -> Result<bool, StallingsError> {
        if u.rank() != self.rank {
            return Err(WordError::RankMismatch { left: self.rank, right: u.rank() }.into());
        }
        if u.is_identity() {
            return Err(StallingsError::EmptyFactor);
        }
        Ok(!self.occurs(u) && !self.occurs(&u.inverse()))
    }

    /// Whether some reduced base loop reads `u` somewhere. States are
    /// (vertex, last letter read): compute which states begin a reduced
    /// base path, which states can still finish one, and whether a
    /// deterministic `u`-trace connects the two sets.
    fn occurs(&self, u: &Word) -> bool {
        let slots = 2 * self.rank as usize;
        let n = self.edges.len();
        // arrive[v][s]: a reduced path base -> v ends with letter slot s.
        // Slot index `slots` is the fresh start state (no letter yet).
        let mut arrive = vec![vec![false; slots + 1]; n];
        arrive[self.base][slots] = true;
        let mut queue: VecDeque<(usize, usize)> = VecDeque::new();
        queue.push_back((self.base, slots));
        while let Some((v, s)) = queue.pop_front() {
            for s2 in 0..slots {
                if s < slots && s2 == letter::slot(letter::inverse(letter::from_slot(s))) {
                    continue;
                }
                if let Some(t) = self.edges[v][s2] {
                    if !arrive[t][s2] {
                        arrive[t][s2] = true;
                        queue.push_back((t, s2));
                    }
                }
            }
        }
        // finish[v][s]: after reading letter slot s into v, some reduced
        // continuation (possibly empty) reaches the base.
        let mut finish = vec![vec![false; slots]; n];
        let mut changed = true;
        while changed {
            changed = false;
            for v in 0..n {
                for s in 0..slots {
                    if finish[v][s] {
                        continue;
                    }
                    let mut ok = v == self.base;
                    if !ok {
                        for s2 in 0..slots {
                            if s2 == letter::slot(letter::inverse(letter::from_slot(s))) {
                                continue;
                            }
                            if let Some(t) = self.edges[v][s2] {
                                if finish[t][s2] {
                                    ok = true;
                                    break;
                                }
                            }
                        }
                    }
                    if ok {
                        finish[v][s] = true;
                        changed = true;
                    }
                }
            }
        }
        let ul = u.letters();
        for v in 0..n {
            for s in 0..=slots {
                if !arrive[v][s] {
                    continue;
                }
                if s < slots && ul[0] == letter::inverse(letter::from_slot(s)) {
                    continue;
                }
                // Deterministic trace of u from v.
                let mut cur = v;
                let mut dead = false;
                for &l in ul {
                    match self.step(cur, l) {
                        Some(t) => cur = t,
                        None => {
                            dead = true;
                            break;
                        }
                    }
                }
                if !dead && finish[cur][letter::slot(ul[ul.len() - 1])] {
                    return true;
                }
            }
        }
        false
    }

    /// Serializes to the interchange JSON shape (positive letters only).
    pub fn to_json(&self) -> String {
        let mut edges = Vec::new();
        for (v, row) in self.edges.iter().enumerate() {
            for (s, e) in row.iter().enumerate() {
                let l = letter::from_slot(s);
                if letter::is_inverse(l) {
                    continue;
                }
                if let Some(t) = *e {
                    edges.push(EdgeJson { from: v, letter: letter::to_char(l), to: t });
                }
            }
        }
        let doc = AutomatonJson {
            rank: self.rank,
            vertices: self.edges.len(),
            base: self.base,
            edges,
        };
        serde_json::to_string_pretty(&doc).expect("automaton serializes")
    }

    /// Parses and validates the interchange JSON shape: in-range letters
    /// and vertices, deterministic in both directions, connected, and core.
    pub fn from_json(s: &str) -> Result<Self, StallingsError> {
        let doc: AutomatonJson =
            serde_json::from_str(s).map_err(|e| StallingsError::Json(e.to_string()))?;
        Word::identity(doc.rank).map_err(StallingsError::Word)?;
        if doc.vertices == 0 || doc.vertices > 1_000_000 {
            return Err(StallingsError::Invalid(format!(
                "vertex count {} out of range",
                doc.vertices
            )));
        }
        if doc.base >= doc.vertices {
            return Err(StallingsError::Invalid(format!(
                "base {} out of range",
                doc.base
            )));
        }
        let slots = 2 * doc.rank as usize;
        let mut edges = vec![vec![None; slots]; doc.vertices];
        for e in &doc.edges {
            let l = letter::from_char(e.letter)
                .filter(|l| !letter::is_inverse(*l) && letter::index(*l) <= doc.rank)
                .ok_or_else(|| {
                    StallingsError::Invalid(format!("bad edge letter {:?}", e.letter))
                })?;
            if e.from >= doc.vertices || e.to >= doc.vertices {
                return Err(StallingsError::Invalid(format!(
                    "edge {}-{}-{} out of range",
                    e.from, e.letter, e.to
                )));
            }
            let (s, rs) = (letter::slot(l), letter::slot(letter::inverse(l)));
            if edges[e.from][s].is_some() || edges[e.to][rs].is_some() {
                return Err(StallingsError::Invalid(format!(
                    "duplicate {:?} edge at vertex {}",
                    e.letter,
                    if edges[e.from][s].is_some() { e.from } else { e.to }
                )));
            }
            edges[e.from][s] = Some(e.to);
            edges[e.to][rs] = Some(e.from);
        }
        let auto = SubgroupAutomaton { rank: doc.rank, base: doc.base, edges };
        let dist = auto.bfs_from(auto.base);
        if dist.iter().any(|&d| d == u64::MAX) {
            return Err(StallingsError::Invalid("graph is not connected".into()));
        }
        for v in 0..auto.edges.len() {
            if v == auto.base {
                continue;
            }
            let deg = auto.edges[v].iter().filter(|e| e.is_some()).count();
            if deg <= 1 {
                return Err(StallingsError::Invalid(format!(
                    "vertex {v} is not in the core"
                )));
            }
        }
        Ok(auto)
    }
}

#[derive(Serialize, Deserialize)]
struct AutomatonJson {
    rank: u8,
    vertices: usize,
    base: usize,
    edges: Vec<EdgeJson>,
}

#[derive(Serialize, Deserialize)]
struct EdgeJson {
    from: usize,
    letter: char,
    to: usize,
}

/// Brute-force orbit distance for cross-checking: scan `H`-elements out to
/// a radius past which no closer orbit point can exist.
#[cfg(test)]
fn orbit_distance_naive(auto: &SubgroupAutomaton, x: &Word) -> u64 {
    let radius = 2 * x.len() as u32 + 2 * auto.morse_gauge() as u32 + 2;
    auto.enumerate(radius)
        .unwrap()
        .iter()
        .map(|h| crate::word::tree_distance(x, h).unwrap())
        .min()
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::word::ball;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn auto(gens: &[&str]) -> SubgroupAutomaton {
        let gens: Vec<Word> = gens.iter().map(|g| w(g)).collect();
        SubgroupAutomaton::build(2, &gens).unwrap()
    }

    #[test]
    fn single_generator_loop() {
        let h = auto(&["a"]);
        assert_eq!(h.vertex_count(), 1);
        assert_eq!(h.index(), None);
        assert_eq!(h.morse_gauge(), 0);
        assert!(h.contains(&w("aaa")).unwrap());
        assert!(h.contains(&w("AA")).unwrap());
        assert!(!h.contains(&w("b")).unwrap());
        assert!(!h.contains(&w("ab")).unwrap());
    }

    #[test]
    fn folding_finds_finite_index() {
        let h = auto(&["aa", "b", "abA"]);
        assert_eq!(h.vertex_count(), 2);
        assert_eq!(h.index(), Some(2));
        assert_eq!(h.morse_gauge(), 1);
        // Even-a-count words with arbitrary b's: the kernel of F2 -> Z/2.
        for x in ball(2, 5).unwrap() {
            let a_parity = x
                .letters()
                .iter()
                .filter(|&&l| letter::index(l) == 1)
                .count()
                % 2;
            assert_eq!(h.contains(&x).unwrap(), a_parity == 0, "{x}");
        }
    }

    #[test]
    fn cyclic_subgroup_enumeration() {
        let h = auto(&["ab"]);
        assert_eq!(h.vertex_count(), 2);
        assert_eq!(h.index(), None);
        assert_eq!(h.morse_gauge(), 1);
        let got: Vec<String> = h.enumerate(4).unwrap().iter().map(|x| x.to_string()).collect();
        assert_eq!(got, ["", "ab", "BA", "abab", "BABA"]);
    }

    #[test]
    fn enumeration_matches_membership() {
        for gens in [vec!["a"], vec!["ab"], vec!["aa", "b", "abA"], vec!["a", "baB"]] {
            let h = auto(&gens);
            let listed = h.enumerate(4).unwrap();
            assert!(listed.windows(2).all(|p| p[0] < p[1]), "sorted, unique");
            let by_scan: Vec<Word> = ball(2, 4)
                .unwrap()
                .into_iter()
                .filter(|x| h.contains(x).unwrap())
                .collect();
            assert_eq!(listed, by_scan, "{gens:?}");
        }
    }

    #[test]
    fn orbit_distance_examples() {
        let h = auto(&["a"]);
        assert_eq!(h.orbit_distance(&w("ba")).unwrap(), 2);
        assert_eq!(h.orbit_distance(&w("ab")).unwrap(), 1);
        assert_eq!(h.orbit_distance(&w("aa")).unwrap(), 0);
        let h = auto(&["ab"]);
        assert_eq!(h.orbit_distance(&w("b")).unwrap(), 1);
    }

    #[test]
    fn orbit_distance_matches_brute_force() {
        for gens in [vec!["a"], vec!["ab"], vec!["aa", "b", "abA"], vec!["a", "baB"]] {
            let h = auto(&gens);
            for x in ball(2, 4).unwrap() {
                assert_eq!(
                    h.orbit_distance(&x).unwrap(),
                    orbit_distance_naive(&h, &x),
                    "{gens:?} x={x}"
                );
            }
        }
    }

    #[test]
    fn double_coset_examples() {
        let h = auto(&["a"]);
        let s1 = ball(2, 1).unwrap();
        assert!(h.in_double_coset(&w("bab"), &s1).unwrap());
        assert!(!h.in_double_coset(&w("bab"), &[w("")]).unwrap());
        assert!(!h.in_double_coset(&w("babab"), &s1).unwrap());
    }

    #[test]
    fn factor_free_examples() {
        let h = auto(&["a", "baB"]);
        assert!(h.factor_free(&w("bb")).unwrap());
        assert!(!h.factor_free(&w("ab")).unwrap());
        // Inverse factors count too: "BA" occurs inside (abaB)^-1 words.
        assert!(!h.factor_free(&w("ab").inverse()).unwrap());
        assert!(h.factor_free(&w("")).is_err());
    }

    #[test]
    fn factor_free_matches_enumeration() {
        let cases = [
            (vec!["a"], vec!["a", "b", "ab", "aa"]),
            (vec!["ab"], vec!["a", "ab", "ba", "aB", "abab"]),
            (vec!["a", "baB"], vec!["bb", "ab", "ba", "aab", "bab"]),
            (vec!["aa", "b", "abA"], vec!["ab", "bb", "aab"]),
        ];
        for (gens, factors) in cases {
            let h = auto(&gens);
            for f in factors {
                let u = w(f);
                let radius = (2 * u.len() as u32) + 2 * h.diameter() as u32 + 2;
                let seen = h.enumerate(radius).unwrap().iter().any(|x| {
                    let hay: Vec<u8> = x.letters().to_vec();
                    let occurs = |n: &[u8]| {
                        !n.is_empty() && hay.windows(n.len()).any(|win| win == n)
                    };
                    occurs(u.letters()) || occurs(u.inverse().letters())
                });
                assert_eq!(h.factor_free(&u).unwrap(), !seen, "{gens:?} factor {f}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        for gens in [vec!["a"], vec!["ab"], vec!["aa", "b", "abA"], vec!["a", "baB"]] {
            let h = auto(&gens);
            let s = h.to_json();
            assert_eq!(SubgroupAutomaton::from_json(&s).unwrap(), h, "{gens:?}");
        }
    }

    #[test]
    fn json_rejects_malformed_input() {
        let bad = [
            r#"{"rank":2,"vertices":0,"base":0,"edges":[]}"#,
            r#"{"rank":2,"vertices":1,"base":3,"edges":[]}"#,
            r#"{"rank":2,"vertices":1,"base":0,"edges":[{"from":0,"letter":"A","to":0}]}"#,
            r#"{"rank":2,"vertices":1,"base":0,"edges":[{"from":0,"letter":"c","to":0}]}"#,
            r#"{"rank":2,"vertices":1,"base":0,"edges":[{"from":0,"letter":"a","to":5}]}"#,
            r#"{"rank":2,"vertices":2,"base":0,"edges":[{"from":0,"letter":"a","to":0},{"from":0,"letter":"a","to":1}]}"#,
            r#"{"rank":2,"vertices":2,"base":0,"edges":[{"from":0,"letter":"a","to":0}]}"#,
            r#"{"rank":2,"vertices":2,"base":0,"edges":[{"from":0,"letter":"a","to":1}]}"#,
            "not json",
        ];
        for s in bad {
            assert!(SubgroupAutomaton::from_json(s).is_err(), "{s}");
        }
    }

    #[test]
    fn build_is_canonical_across_generating_sets() {
        // Same subgroup, different presentations.
        assert_eq!(auto(&["a"]), auto(&["A"]));
        assert_eq!(auto(&["a"]), auto(&["aa", "aaa"]));
        assert_eq!(auto(&["ab"]), auto(&["BA"]));
        assert_eq!(auto(&["aa", "b", "abA"]), auto(&["b", "abA", "aa", "aab"]));
    }
}
