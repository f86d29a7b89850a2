//! Reduced words in a free group of rank `n` and the geometry of its Cayley
//! tree: distances, medians, axes of non-trivial elements, and closest-point
//! projections onto axes.
//!
//! Letters are packed into bytes as `2 * index + inv_bit` (index `1..=26`), so
//! `a = 2, A = 3, b = 4, B = 5, ...`. Inversion is `byte ^ 1`, and plain byte
//! order coincides with the global letter order `a < A < b < B < ...` used by
//! shortlex everywhere in this crate.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

/// Errors from word parsing and arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("rank {0} out of range (must be 2..=26)")]
    RankRange(u8),
    #[error("character {0:?} is not a generator letter")]
    BadChar(char),
    #[error("letter {letter:?} exceeds rank {rank}")]
    LetterRange { letter: char, rank: u8 },
    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: u8, right: u8 },
    #[error("operation undefined for the identity")]
    IdentityArgument,
}

/// Smallest and largest admissible rank.
pub const MIN_RANK: u8 = 2;
pub const MAX_RANK: u8 = 26;

/// Packed-letter helpers.
pub mod letter {
    /// Generator index `1..=26` of a packed letter.
    pub fn index(l: u8) -> u8 {
        l >> 1
    }

    /// True for the formal inverses `A..Z`.
    pub fn is_inverse(l: u8) -> bool {
        l & 1 == 1
    }

    /// Formal inverse of a letter.
    pub fn inverse(l: u8) -> u8 {
        l ^ 1
    }

    /// Packed letter for a text character, if it is one.
    pub fn from_char(c: char) -> Option<u8> {
        match c {
            'a'..='z' => Some(2 * (c as u8 - b'a' + 1)),
            'A'..='Z' => Some(2 * (c as u8 - b'A' + 1) + 1),
            _ => None,
        }
    }

    /// Text character for a packed letter.
    pub fn to_char(l: u8) -> char {
        let base = if is_inverse(l) { b'A' } else { b'a' };
        (base + index(l) - 1) as char
    }

    /// Slot `0..2n` of a letter, used to index per-vertex edge tables.
    pub fn slot(l: u8) -> usize {
        l as usize - 2
    }

    /// Packed letter for slot `0..2n`.
    pub fn from_slot(s: usize) -> u8 {
        s as u8 + 2
    }
}

/// A reduced word over the generators of a free group of fixed rank.
///
/// The letter sequence is freely reduced at all times; constructors reduce.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    rank: u8,
    letters: Vec<u8>,
}

impl Word {
    /// The identity element.
    pub fn identity(rank: u8) -> Result<Self, WordError> {
        check_rank(rank)?;
        Ok(Word { rank, letters: Vec::new() })
    }

    /// Parses text syntax (`"abAB"`, empty string = identity) and reduces.
    pub fn parse(s: &str, rank: u8) -> Result<Self, WordError> {
        check_rank(rank)?;
        let mut letters = Vec::with_capacity(s.len());
        for c in s.chars() {
            let l = letter::from_char(c).ok_or(WordError::BadChar(c))?;
            if letter::index(l) > rank {
                return Err(WordError::LetterRange { letter: c, rank });
            }
            push_reduced(&mut letters, l);
        }
        Ok(Word { rank, letters })
    }

    /// Builds a word from raw packed letters, reducing cancelling pairs.
    pub fn from_letters(raw: &[u8], rank: u8) -> Result<Self, WordError> {
        check_rank(rank)?;
        let mut letters = Vec::with_capacity(raw.len());
        for &l in raw {
            if l < 2 || letter::index(l) > rank {
                return Err(WordError::LetterRange { letter: letter_debug(l), rank });
            }
            push_reduced(&mut letters, l);
        }
        Ok(Word { rank, letters })
    }

    pub fn rank(&self) -> u8 {
        self.rank
    }

    /// Packed letters of the reduced form.
    pub fn letters(&self) -> &[u8] {
        &self.letters
    }

    /// Word length |w| of the reduced form.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Product of two group elements, reduced.
    pub fn concat(&self, other: &Word) -> Result<Word, WordError> {
        check_same_rank(self, other)?;
        // Both sides are reduced, so cancellation happens only at the seam.
        let mut i = self.letters.len();
        let mut j = 0;
        while i > 0 && j < other.letters.len()
            && self.letters[i - 1] == letter::inverse(other.letters[j])
        {
            i -= 1;
            j += 1;
        }
        let mut letters = Vec::with_capacity(i + other.letters.len() - j);
        letters.extend_from_slice(&self.letters[..i]);
        letters.extend_from_slice(&other.letters[j..]);
        Ok(Word { rank: self.rank, letters })
    }

    /// Group inverse.
    pub fn inverse(&self) -> Word {
        let letters = self.letters.iter().rev().map(|&l| letter::inverse(l)).collect();
        Word { rank: self.rank, letters }
    }

    /// Integer power, computed through the cyclic normal form so huge
    /// exponents stay linear in the output length.
    pub fn pow(&self, n: i64) -> Word {
        if n == 0 || self.is_identity() {
            return Word { rank: self.rank, letters: Vec::new() };
        }
        let cd = self.cyclic_data();
        let total = cd.exponent as i64 * n;
        let core = repeat_root(&cd.root, total);
        // g = u c u^-1 is reduced, so the seams below cannot cancel further.
        let mut letters = Vec::with_capacity(cd.conjugator.len() * 2 + core.letters.len());
        letters.extend_from_slice(&cd.conjugator.letters);
        letters.extend_from_slice(&core.letters);
        letters.extend(cd.conjugator.letters.iter().rev().map(|&l| letter::inverse(l)));
        debug_assert!(is_reduced(&letters));
        Word { rank: self.rank, letters }
    }

    /// The prefix of the first `n` letters (a vertex on the geodesic `[1, w]`).
    pub fn prefix(&self, n: usize) -> Word {
        Word { rank: self.rank, letters: self.letters[..n].to_vec() }
    }

    /// True if the first letter is not the inverse of the last.
    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.letters.first(), self.letters.last()) {
            (Some(&f), Some(&l)) => f != letter::inverse(l),
            _ => true,
        }
    }

    /// Cyclic normal form `w = u r^e u^{-1}` with `r` cyclically reduced and
    /// primitive. The identity yields an empty root with exponent zero.
    pub fn cyclic_data(&self) -> CyclicData {
        let n = self.letters.len();
        let mut i = 0;
        let mut j = n;
        while j - i >= 2 && self.letters[i] == letter::inverse(self.letters[j - 1]) {
            i += 1;
            j -= 1;
        }
        let conjugator = Word { rank: self.rank, letters: self.letters[..i].to_vec() };
        let core = &self.letters[i..j];
        if core.is_empty() {
            return CyclicData {
                conjugator,
                root: Word { rank: self.rank, letters: Vec::new() },
                exponent: 0,
            };
        }
        let p = smallest_period(core);
        let (root, exponent) = if core.len() % p == 0 {
            (core[..p].to_vec(), (core.len() / p) as u64)
        } else {
            (core.to_vec(), 1)
        };
        CyclicData { conjugator, root: Word { rank: self.rank, letters: root }, exponent }
    }

    /// Translation length on the Cayley tree: the length of the cyclic
    /// reduction, `e * |r|`.
    pub fn translation_length(&self) -> u64 {
        let cd = self.cyclic_data();
        cd.exponent * cd.root.len() as u64
    }

    /// Shortlex comparison in the global letter order.
    pub fn shortlex_cmp(&self, other: &Word) -> Ordering {
        self.letters
            .len()
            .cmp(&other.letters.len())
            .then_with(|| self.letters.cmp(&other.letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &l in &self.letters {
            write!(f, "{}", letter::to_char(l))?;
        }
        Ok(())
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.shortlex_cmp(other)
    }
}

/// Decomposition `w = u r^e u^{-1}` from [`Word::cyclic_data`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicData {
    pub conjugator: Word,
    pub root: Word,
    pub exponent: u64,
}

fn check_rank(rank: u8) -> Result<(), WordError> {
    if !(MIN_RANK..=MAX_RANK).contains(&rank) {
        return Err(WordError::RankRange(rank));
    }
    Ok(())
}

fn check_same_rank(a: &Word, b: &Word) -> Result<(), WordError> {
    if a.rank != b.rank {
        return Err(WordError::RankMismatch { left: a.rank, right: b.rank });
    }
    Ok(())
}

fn letter_debug(l: u8) -> char {
    if (2..=53).contains(&l) {
        letter::to_char(l)
    } else {
        '?'
    }
}

fn push_reduced(letters: &mut Vec<u8>, l: u8) {
    if letters.last() == Some(&letter::inverse(l)) {
        letters.pop();
    } else {
        letters.push(l);
    }
}

pub(crate) fn is_reduced(letters: &[u8]) -> bool {
    letters.windows(2).all(|w| w[1] != letter::inverse(w[0]))
}

/// `root^n` for cyclically reduced `root`: a plain repeat, no cancellation.
fn repeat_root(root: &Word, n: i64) -> Word {
    let base: Vec<u8> = if n >= 0 {
        root.letters.clone()
    } else {
        root.inverse().letters
    };
    let k = n.unsigned_abs() as usize;
    let mut letters = Vec::with_capacity(base.len() * k);
    for _ in 0..k {
        letters.extend_from_slice(&base);
    }
    Word { rank: root.rank, letters }
}

/// Smallest period of a non-empty letter sequence (KMP border array).
fn smallest_period(s: &[u8]) -> usize {
    let n = s.len();
    let mut border = vec![0usize; n];
    let mut k = 0;
    for i in 1..n {
        while k > 0 && s[i] != s[k] {
            k = border[k - 1];
        }
        if s[i] == s[k] {
            k += 1;
        }
        border[i] = k;
    }
    n - border[n - 1]
}

/// Index of the least rotation of `s` in the global letter order (Booth).
fn least_rotation(s: &[u8]) -> usize {
    let n = s.len();
    let mut f = vec![usize::MAX; 2 * n];
    let mut k = 0;
    for j in 1..2 * n {
        let sj = s[j % n];
        let mut i = f[j - k - 1];
        while i != usize::MAX && sj != s[(k + i + 1) % n] {
            if sj < s[(k + i + 1) % n] {
                k = j - i - 1;
            }
            i = f[i];
        }
        if i == usize::MAX && sj != s[k % n] {
            if sj < s[k % n] {
                k = j;
            }
            f[j - k] = usize::MAX;
        } else {
            f[j - k] = i.wrapping_add(1);
        }
    }
    k % n
}

fn rotate(s: &[u8], d: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(s.len());
    out.extend_from_slice(&s[d..]);
    out.extend_from_slice(&s[..d]);
    out
}

/// Longest common prefix length of two letter sequences.
fn lcp_len(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b.iter()).take_while(|(x, y)| x == y).count()
}

/// Tree distance `d(x, y) = |x^{-1} y|`, via the common-prefix cancellation.
pub fn tree_distance(x: &Word, y: &Word) -> Result<u64, WordError> {
    check_same_rank(x, y)?;
    let c = lcp_len(&x.letters, &y.letters);
    Ok((x.letters.len() - c + y.letters.len() - c) as u64)
}

/// Median of three vertices: the unique point on all three pairwise
/// geodesics, computed by a three-way common prefix after basing at `a`.
pub fn median(a: &Word, b: &Word, c: &Word) -> Result<Word, WordError> {
    let ab = a.inverse().concat(b)?;
    let ac = a.inverse().concat(c)?;
    let m = lcp_len(&ab.letters, &ac.letters);
    a.concat(&ab.prefix(m))
}

/// Nearest vertex of the segment `[p, q]` to `x` (the median of the triple).
pub fn project_to_segment(x: &Word, p: &Word, q: &Word) -> Result<Word, WordError> {
    median(p, q, x)
}

/// All reduced words of length at most `radius`, in shortlex order.
pub fn ball(rank: u8, radius: u32) -> Result<Vec<Word>, WordError> {
    check_rank(rank)?;
    let letters_range: Vec<u8> = (0..2 * rank as usize).map(letter::from_slot).collect();
    let mut out = vec![Word { rank, letters: Vec::new() }];
    let mut layer_start = 0;
    for _ in 0..radius {
        let layer_end = out.len();
        for i in layer_start..layer_end {
            for &l in &letters_range {
                if out[i].letters.last() == Some(&letter::inverse(l)) {
                    continue;
                }
                let mut letters = out[i].letters.clone();
                letters.push(l);
                out.push(Word { rank, letters });
            }
        }
        layer_start = layer_end;
    }
    Ok(out)
}

/// The axis of a hyperbolic element: the bi-infinite line `{u r^k p}` in
/// canonical form. `root` is the shortlex-least rotation of the primitive
/// root or its inverse; `rep` is the shortlex-least element of the coset of
/// phase-0 vertices. Two axes are equal as lines iff they are equal values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Axis {
    rep: Word,
    root: Word,
}

impl Axis {
    /// Axis of `g` (error for the identity, which fixes no line).
    pub fn of(g: &Word) -> Result<Axis, WordError> {
        if g.is_identity() {
            return Err(WordError::IdentityArgument);
        }
        let cd = g.cyclic_data();
        Axis::from_point_and_root(&cd.conjugator, &cd.root)
    }

    /// Line through `point` spelled by the cyclically reduced `root`.
    fn from_point_and_root(point: &Word, root: &Word) -> Result<Axis, WordError> {
        let r = &root.letters;
        let ri = root.inverse().letters;
        let (fwd, d) = {
            let df = least_rotation(r);
            let db = least_rotation(&ri);
            // A word is never conjugate to its own inverse in a free group,
            // so exactly one orientation yields the least rotation.
            if rotate(r, df) <= rotate(&ri, db) {
                (true, df)
            } else {
                (false, db)
            }
        };
        let canon = Word {
            rank: root.rank,
            letters: if fwd { rotate(r, d) } else { rotate(&ri, d) },
        };
        // Phase-0 vertex for the chosen rotation: advance `point` by the
        // d-letter prefix of the travel direction.
        let shift = if fwd {
            Word { rank: root.rank, letters: r[..d].to_vec() }
        } else {
            Word { rank: root.rank, letters: ri[..d].to_vec() }
        };
        let anchor = point.concat(&shift)?;
        let rep = least_coset_rep(&anchor, &canon)?;
        Ok(Axis { rep, root: canon })
    }

    /// Canonical base vertex on the line.
    pub fn rep(&self) -> &Word {
        &self.rep
    }

    /// Canonical primitive root spelling the line.
    pub fn root(&self) -> &Word {
        &self.root
    }

    pub fn rank(&self) -> u8 {
        self.root.rank
    }

    /// Period `|root|`.
    pub fn period(&self) -> usize {
        self.root.len()
    }

    /// Vertex at signed position `t` along the line (`rep` sits at 0).
    pub fn vertex_at(&self, t: i64) -> Word {
        let p = self.root.len() as i64;
        let q = t.div_euclid(p);
        let rho = t.rem_euclid(p) as usize;
        let body = repeat_root(&self.root, q);
        let tail = self.root.prefix(rho);
        self.rep
            .concat(&body)
            .and_then(|w| w.concat(&tail))
            .expect("axis ranks agree")
    }

    /// Signed position of `v` on the line, or `None` if `v` is off it.
    pub fn coord_of(&self, v: &Word) -> Option<i64> {
        let x = self.rep.inverse().concat(v).ok()?;
        if x.is_identity() {
            return Some(0);
        }
        let r = &self.root.letters;
        let p = r.len();
        let fwd = x.letters.iter().enumerate().all(|(i, &l)| l == r[i % p]);
        if fwd {
            return Some(x.len() as i64);
        }
        let back = x
            .letters
            .iter()
            .enumerate()
            .all(|(i, &l)| l == letter::inverse(r[p - 1 - (i % p)]));
        if back {
            return Some(-(x.len() as i64));
        }
        None
    }

    /// Image of the line under left translation by `h` (same spelling, so
    /// the canonical root is unchanged; the rep is re-canonicalized).
    pub fn translate(&self, h: &Word) -> Result<Axis, WordError> {
        let anchor = h.concat(&self.rep)?;
        let rep = least_coset_rep(&anchor, &self.root)?;
        Ok(Axis { rep, root: self.root.clone() })
    }
}

/// Shortlex-least element of `{anchor root^k : k in Z}`. Lengths along the
/// line are V-shaped in `k`, so walk downhill and compare the flat bottom.
fn least_coset_rep(anchor: &Word, root: &Word) -> Result<Word, WordError> {
    let at = |k: i64| -> Result<Word, WordError> { anchor.concat(&repeat_root(root, k)) };
    let mut k = 0i64;
    let mut cur = at(0)?;
    loop {
        let down = at(k - 1)?;
        let up = at(k + 1)?;
        if down.len() < cur.len() {
            k -= 1;
            cur = down;
        } else if up.len() < cur.len() {
            k += 1;
            cur = up;
        } else {
            // Bottom of the V; a plateau has at most two equal lengths.
            let mut best = cur;
            for cand in [down, up] {
                if cand.shortlex_cmp(&best) == Ordering::Less {
                    best = cand;
                }
            }
            return Ok(best);
        }
    }
}

/// Closest-point projection of the vertex `x` to the line, computed by
/// projecting to the segment `[rep r^{-N}, rep r^{N}]` and doubling `N`
/// until the output is stable twice. Returns the projection vertex, its
/// position on the line, and `d(x, line)`.
pub fn project_point_to_axis(x: &Word, axis: &Axis) -> Result<(Word, i64, u64), WordError> {
    let p = axis.period() as i64;
    let mut n: i64 = 1;
    let mut prev: Option<Word> = None;
    let mut stable = 0;
    loop {
        let a = axis.vertex_at(-n * p);
        let b = axis.vertex_at(n * p);
        let m = project_to_segment(x, &a, &b)?;
        if prev.as_ref() == Some(&m) {
            stable += 1;
            if stable >= 2 {
                let coord = axis
                    .coord_of(&m)
                    .expect("projection to a segment of the line lies on the line");
                let dist = tree_distance(x, &m)?;
                return Ok((m, coord, dist));
            }
        } else {
            stable = 0;
        }
        prev = Some(m);
        n *= 2;
    }
}

/// Closed footprint `[lo, hi]` of positions on a line.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub lo: i64,
    pub hi: i64,
}

impl Footprint {
    pub fn diameter(&self) -> u64 {
        (self.hi - self.lo) as u64
    }

    pub fn union(&self, other: &Footprint) -> Footprint {
        Footprint { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }
}

/// Closest-point projection of the whole line `v` onto the line `u`, as a
/// footprint of positions on `u`. The two parameter-extreme representatives
/// of `v` are projected with the same doubling stabilization; projections of
/// interior vertices never leave the interval they span.
pub fn project_axis_to_axis(v: &Axis, u: &Axis) -> Result<Footprint, WordError> {
    let p = v.period() as i64;
    let mut n: i64 = 1;
    let mut prev: Option<(i64, i64)> = None;
    let mut stable = 0;
    loop {
        let (_, lo_c, _) = project_point_to_axis(&v.vertex_at(-n * p), u)?;
        let (_, hi_c, _) = project_point_to_axis(&v.vertex_at(n * p), u)?;
        let cur = (lo_c, hi_c);
        if prev == Some(cur) {
            stable += 1;
            if stable >= 2 {
                return Ok(Footprint { lo: lo_c.min(hi_c), hi: lo_c.max(hi_c) });
            }
        } else {
            stable = 0;
        }
        prev = Some(cur);
        n *= 2;
    }
}

/// Projection of the geodesic segment `[x, y]` onto a line: every vertex of
/// the segment is projected and the footprints are joined.
pub fn project_segment_to_axis(x: &Word, y: &Word, u: &Axis) -> Result<Footprint, WordError> {
    let step = x.inverse().concat(y)?;
    let mut fp: Option<Footprint> = None;
    for i in 0..=step.len() {
        let v = x.concat(&step.prefix(i))?;
        let (_, c, _) = project_point_to_axis(&v, u)?;
        let one = Footprint { lo: c, hi: c };
        fp = Some(match fp {
            None => one,
            Some(f) => f.union(&one),
        });
    }
    Ok(fp.expect("segment has at least one vertex"))
}
