//! Weighted counting quasimorphisms on a free group.
//!
//! For a reduced pattern `w` and integer weight `0 < W < |w|`, the counting
//! function is `c(g) = |g| - inf(|s| - W * n_w(s))` over all strings `s`
//! that freely reduce to `g`, where `n_w` counts non-overlapping copies of
//! `w`; the quasimorphism of interest is the antisymmetrization
//! `h = c_w - c_{w^{-1}}`.
//!
//! For `W = 1` the reduced spelling of `g` realizes the infimum — every
//! letter walked off it costs two traversals and buys at most one copy — so
//! the value collapses to the greedy non-overlapping count. Larger weights
//! genuinely profit from detours: a copy may hang an edge past the reduced
//! word, and copies of a pattern with a cyclic-conjugation tail chain
//! through backtracks (`abA·abA` reduces to `abbA`). [`c_value`] prices
//! those detours exactly with a bounded-excess dynamic program, and
//! [`oracle_c`] exposes the same program at a caller-chosen excess so tests
//! can confront the closed-form shortcuts letter for letter.

use std::cell::RefCell;
use std::collections::HashMap;

use num_rational::Ratio;
use thiserror::Error;

use crate::word::{ball, letter, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QmError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error("pattern must have at least two letters")]
    PatternTooShort,
    #[error("weight {weight} out of range: need 0 < weight < {len}")]
    WeightRange { weight: u64, len: usize },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// A pattern/weight pair defining one counting quasimorphism.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QmSpec {
    word: Word,
    weight: u64,
}

impl QmSpec {
    /// Requires `|w| >= 2` and `0 < weight < |w|`; the strict upper bound is
    /// what keeps detours through extra copies unprofitable.
    pub fn new(word: Word, weight: u64) -> Result<Self, QmError> {
        if word.len() < 2 {
            return Err(QmError::PatternTooShort);
        }
        if weight == 0 || weight >= word.len() as u64 {
            return Err(QmError::WeightRange { weight, len: word.len() });
        }
        Ok(QmSpec { word, weight })
    }

    pub fn word(&self) -> &Word {
        &self.word
    }

    pub fn weight(&self) -> u64 {
        self.weight
    }

    /// Stability window from the tree Morse property: paths realizing the
    /// counting infimum are (λ, ε)-quasi-geodesics with `λ = |w|/(|w|-W)`
    /// and `ε = 2W|w|/(|w|-W)`, and in a tree such a path stays within
    /// `λε/2` of the geodesic, giving `L0 = ceil(W |w|^2 / (|w|-W)^2)`.
    pub fn morse_window(&self) -> u64 {
        let p = self.word.len() as u64;
        let d = p - self.weight;
        (self.weight * p * p).div_ceil(d * d)
    }

    /// A priori bound `12 L0 + 6 W` on the defect of `c_w - c_{w^{-1}}`
    /// (the ambient tree is 0-hyperbolic, so no curvature term appears).
    pub fn a_priori_defect_bound(&self) -> u64 {
        12 * self.morse_window() + 6 * self.weight
    }
}

/// Greedy leftmost non-overlapping occurrence count (which is also the
/// maximum non-overlapping count) of `needle` in `hay`.
pub fn count_copies(needle: &Word, hay: &Word) -> u64 {
    count_in_bytes(needle.letters(), hay.letters())
}

fn count_in_bytes(n: &[u8], h: &[u8]) -> u64 {
    if n.is_empty() || n.len() > h.len() {
        return 0;
    }
    if n.len() <= 32 && h.len() <= 1024 {
        // Short inputs: a direct scan beats searcher construction.
        let mut count = 0;
        let mut i = 0;
        while i + n.len() <= h.len() {
            if &h[i..i + n.len()] == n {
                count += 1;
                i += n.len();
            } else {
                i += 1;
            }
        }
        count
    } else {
        memchr::memmem::find_iter(h, n).count() as u64
    }
}

/// Exact `c(g) = |g| - inf(|s| - W n_w(s))` over strings reducing to `g`.
///
/// Two regimes where the reduced spelling provably realizes the infimum
/// skip the search: an edge off the reduced word is traversed twice and a
/// copy saves at most `W`, so partially covered copies lose whenever
/// `W <= 2`; and chained copies backtrack `2|p|` per link (`p` the maximal
/// prefix with `w = p v p^{-1}`), which only a cyclically reduced pattern
/// avoids — but then its chains are plain factors already counted. All
/// remaining cases run the bounded-excess program: a walk longer than
/// `|g|·|w|/(|w|-W)` costs more than the bare reduced spelling even with
/// every letter inside a copy, so that excess is a sufficient search
/// window. Cost grows with `W·|g|/(|w|-W)` squared; small weights stay
/// cheap on arbitrarily long words.
pub fn c_value(spec: &QmSpec, g: &Word) -> u64 {
    if spec.weight == 1 || (spec.weight == 2 && spec.word.is_cyclically_reduced()) {
        return spec.weight * count_copies(&spec.word, g);
    }
    let shortfall = spec.word.len() as u64 - spec.weight;
    let excess_pairs = (spec.weight * g.len() as u64).div_ceil(2 * shortfall) as usize;
    let rank = spec.word.rank().max(g.rank());
    path_value(spec, g, excess_pairs, rank)
}

/// The antisymmetrized quasimorphism `h(g) = c_w(g) - c_{w^{-1}}(g)`.
pub fn h_value(spec: &QmSpec, g: &Word) -> i64 {
    let inverse = QmSpec { word: spec.word.inverse(), weight: spec.weight };
    c_value(spec, g) as i64 - c_value(&inverse, g) as i64
}

/// Non-overlapping pattern automaton: KMP states `0..|w|`, with a reset to
/// state 0 on completion so the count is the greedy non-overlapping one.
struct Kmp {
    states: usize,
    slots: usize,
    /// `next[j * slots + s] = (state, completed)` after reading slot `s`.
    next: Vec<(u8, u8)>,
}

impl Kmp {
    fn new(pattern: &[u8], rank: u8) -> Kmp {
        let p = pattern.len();
        let slots = 2 * rank as usize;
        let mut fail = vec![0usize; p];
        let mut k = 0;
        for i in 1..p {
            while k > 0 && pattern[i] != pattern[k] {
                k = fail[k - 1];
            }
            if pattern[i] == pattern[k] {
                k += 1;
            }
            fail[i] = k;
        }
        let mut next = vec![(0u8, 0u8); p * slots];
        for j in 0..p {
            for s in 0..slots {
                let l = letter::from_slot(s);
                let mut k = j;
                while k > 0 && pattern[k] != l {
                    k = fail[k - 1];
                }
                if pattern[k] == l {
                    k += 1;
                }
                next[j * slots + s] = if k == p { (0, 1) } else { (k as u8, 0) };
            }
        }
        Kmp { states: p, slots, next }
    }

    fn step(&self, j: usize, slot: usize) -> (usize, u64) {
        let (s, inc) = self.next[j * self.slots + slot];
        (s as usize, inc as u64)
    }
}

const NEG: i64 = i64::MIN / 4;

/// Pattern automaton plus its excursion summaries, grown on demand.
/// `x[(m * states + j) * states + j']` is the maximum copy count over
/// strings of length `2m` that freely reduce to the identity, scanned from
/// automaton state `j` to `j'`; `NEG` marks unreachable. Rows build by
/// first-return decomposition: a balanced string is `l u l^{-1} v` with
/// `u`, `v` balanced, so row `m` only reads rows below it and the table
/// extends in place when a larger window shows up.
struct DpTables {
    kmp: Kmp,
    x: Vec<i64>,
    rows: usize,
}

impl DpTables {
    fn new(pattern: &[u8], rank: u8) -> DpTables {
        let kmp = Kmp::new(pattern, rank);
        let p = kmp.states;
        let mut x = vec![NEG; p * p];
        for j in 0..p {
            x[j * p + j] = 0;
        }
        DpTables { kmp, x, rows: 0 }
    }

    fn ensure(&mut self, half_max: usize) {
        let p = self.kmp.states;
        if self.rows >= half_max {
            return;
        }
        self.x.resize((half_max + 1) * p * p, NEG);
        for m in self.rows + 1..=half_max {
            for j in 0..p {
                for s in 0..self.kmp.slots {
                    let (j1, inc1) = self.kmp.step(j, s);
                    let rs = letter::slot(letter::inverse(letter::from_slot(s)));
                    for m1 in 0..m {
                        let m2 = m - 1 - m1;
                        for j2 in 0..p {
                            let a = self.x[(m1 * p + j1) * p + j2];
                            if a == NEG {
                                continue;
                            }
                            let (j3, inc2) = self.kmp.step(j2, rs);
                            for j4 in 0..p {
                                let b = self.x[(m2 * p + j3) * p + j4];
                                if b == NEG {
                                    continue;
                                }
                                let cand = inc1 as i64 + a + inc2 as i64 + b;
                                let cell = &mut self.x[(m * p + j) * p + j4];
                                *cell = (*cell).max(cand);
                            }
                        }
                    }
                }
            }
        }
        self.rows = half_max;
    }

    fn excursion(&self, m: usize, j: usize, j2: usize) -> i64 {
        let p = self.kmp.states;
        self.x[(m * p + j) * p + j2]
    }
}

/// Exact path-side value `|g| - min(|s| - W n_w(s))` over strings `s` that
/// reduce to `g` with `|s| <= |g| + slack` (only even excess is usable).
///
/// Any such string factors as `E_0 g_1 E_1 ... g_L E_L` where `g_1..g_L` is
/// the reduced spelling and each `E_i` reduces to the identity, so a DP over
/// (spine position, automaton state, excess spent) with precomputed
/// excursion summaries covers the whole space.
pub fn oracle_c(spec: &QmSpec, g: &Word, slack: u32) -> Result<u64, QmError> {
    if g.rank() != spec.word.rank() {
        return Err(WordError::RankMismatch { left: spec.word.rank(), right: g.rank() }.into());
    }
    Ok(path_value(spec, g, slack as usize / 2, g.rank()))
}

thread_local! {
    /// Per-thread memo of pattern tables: the automaton and excursion rows
    /// depend only on (pattern, rank), while callers sweep thousands of
    /// targets per pattern.
    static DP_TABLES: RefCell<HashMap<(Box<[u8]>, u8), DpTables>> = RefCell::new(HashMap::new());
}

/// The shared program: best copy count over walks spelling `g` with up to
/// `um` excess letter pairs, turned into `|g| - min cost`.
fn path_value(spec: &QmSpec, g: &Word, um: usize, rank: u8) -> u64 {
    DP_TABLES.with(|tables| {
        let mut tables = tables.borrow_mut();
        if tables.len() > 128 {
            tables.clear();
        }
        let entry = tables
            .entry((spec.word.letters().into(), rank))
            .or_insert_with(|| DpTables::new(spec.word.letters(), rank));
        entry.ensure(um);
        spine_dp(entry, spec.weight, g, um)
    })
}

fn spine_dp(tables: &DpTables, weight: u64, g: &Word, um: usize) -> u64 {
    let kmp = &tables.kmp;
    let p = kmp.states;
    let l = g.len();

    // v[j * (um+1) + u] = max copies so far with 2u excess letters spent.
    let width = um + 1;
    let mut v = vec![NEG; p * width];
    v[0] = 0;
    let mut scratch = vec![NEG; p * width];
    for i in 0..=l {
        // Excursion at spine position i. One pass suffices: the table is
        // closed under concatenation of balanced strings.
        scratch.copy_from_slice(&v);
        for j in 0..p {
            for u in 0..width {
                let base = v[j * width + u];
                if base == NEG {
                    continue;
                }
                for m in 1..=um - u {
                    for j2 in 0..p {
                        let c = tables.excursion(m, j, j2);
                        if c == NEG {
                            continue;
                        }
                        let cell = &mut scratch[j2 * width + u + m];
                        *cell = (*cell).max(base + c);
                    }
                }
            }
        }
        std::mem::swap(&mut v, &mut scratch);
        if i < l {
            let slot = letter::slot(g.letters()[i]);
            scratch.fill(NEG);
            for j in 0..p {
                let (j2, inc) = kmp.step(j, slot);
                for u in 0..width {
                    let base = v[j * width + u];
                    if base == NEG {
                        continue;
                    }
                    let cell = &mut scratch[j2 * width + u];
                    *cell = (*cell).max(base + inc as i64);
                }
            }
            std::mem::swap(&mut v, &mut scratch);
        }
    }
    let w = weight as i64;
    let mut best = i64::MAX;
    for j in 0..p {
        for u in 0..width {
            let copies = v[j * width + u];
            if copies == NEG {
                continue;
            }
            best = best.min((l + 2 * u) as i64 - w * copies);
        }
    }
    (l as i64 - best) as u64
}

/// One extremal pair of a defect scan.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectWitness {
    pub left: Word,
    pub right: Word,
    pub value: u64,
}

/// Result of maximizing `|h(gh') - h(g) - h(h')|` over a ball.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectScan {
    pub radius: u32,
    pub max: u64,
    /// All pairs attaining the maximum, in shortlex order.
    pub witnesses: Vec<DefectWitness>,
}

/// Scans all ordered pairs from the radius ball and reports the maximal
/// defect with every attaining pair.
pub fn defect_scan(spec: &QmSpec, radius: u32) -> Result<DefectScan, QmError> {
    let pts = ball(spec.word.rank(), radius)?;
    let values: Vec<i64> = pts.iter().map(|g| h_value(spec, g)).collect();
    let mut max = 0u64;
    let mut witnesses = Vec::new();
    for (i, g) in pts.iter().enumerate() {
        for (j, k) in pts.iter().enumerate() {
            let prod = g.concat(k)?;
            let d = (h_value(spec, &prod) - values[i] - values[j]).unsigned_abs();
            if d > max {
                max = d;
                witnesses.clear();
            }
            if d == max {
                witnesses.push(DefectWitness { left: g.clone(), right: k.clone(), value: d });
            }
        }
    }
    Ok(DefectScan { radius, max, witnesses })
}

/// Defect of `h` on one ordered pair.
pub fn defect_of_pair(spec: &QmSpec, g: &Word, k: &Word) -> Result<u64, QmError> {
    let prod = g.concat(k)?;
    Ok((h_value(spec, &prod) - h_value(spec, g) - h_value(spec, k)).unsigned_abs())
}

/// Homogenization estimate `h(g^n)/n`, with the error bound `defect/n` that
/// the telescoping comparison with the true homogenization gives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HomogEstimate {
    pub value: Ratio<i64>,
    pub error_bound: Ratio<i64>,
    pub n_used: u32,
}

pub fn homogenize(
    spec: &QmSpec,
    g: &Word,
    n: u32,
    defect_bound: u64,
) -> Result<HomogEstimate, QmError> {
    if n == 0 {
        return Err(QmError::BadParameter("homogenization needs n >= 1".into()));
    }
    let hn = h_value(spec, &g.pow(n as i64));
    Ok(HomogEstimate {
        value: Ratio::new(hn, n as i64),
        error_bound: Ratio::new(defect_bound as i64, n as i64),
        n_used: n,
    })
}

/// Orbit-map displacement `d(o, g o)` in the Cayley tree; paired with
/// [`oracle_c`] mostly in tests and diagnostics.
pub fn displacement(g: &Word) -> u64 {
    g.len() as u64
}

/// Brute-force referee for [`oracle_c`]: enumerate every string over the
/// alphabet with matching parity and bounded length, keep those that reduce
/// to `g`, and minimize directly. Exponential; test-sized inputs only.
pub fn oracle_c_naive(spec: &QmSpec, g: &Word, slack: u32) -> u64 {
    let slots = 2 * g.rank() as usize;
    let target = g.letters();
    let mut best = i64::MAX;
    let mut len = target.len();
    while len <= target.len() + slack as usize {
        let mut s = vec![0usize; len];
        loop {
            let bytes: Vec<u8> = s.iter().map(|&i| letter::from_slot(i)).collect();
            let mut stack: Vec<u8> = Vec::new();
            for &b in &bytes {
                if stack.last() == Some(&letter::inverse(b)) {
                    stack.pop();
                } else {
                    stack.push(b);
                }
            }
            if stack == target {
                let copies = count_in_bytes(spec.word.letters(), &bytes) as i64;
                best = best.min(len as i64 - spec.weight as i64 * copies);
            }
            // Odometer over slot indices.
            let mut pos = len;
            loop {
                if pos == 0 {
                    break;
                }
                s[pos - 1] += 1;
                if s[pos - 1] < slots {
                    break;
                }
                s[pos - 1] = 0;
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
        }
        len += 2;
    }
    (target.len() as i64 - best) as u64
}

#[cfg(test)]
fn displacement_from(o: &Word, g: &Word) -> u64 {
    use crate::word::tree_distance;
    let img = g.concat(o).unwrap();
    tree_distance(o, &img).unwrap()
}
