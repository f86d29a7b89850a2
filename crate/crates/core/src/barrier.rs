//! Barrier detection and the search for barrier-free directions.
//!
//! An `(ε, f)`-barrier on a geodesic is a translate of the segment
//! `[o, f o]` whose endpoints both lie within `ε` of the geodesic. In a tree
//! with `ε = 0` this collapses to factor containment: the geodesic's label
//! contains `f` or `f^{-1}`. The central search, [`find_g0`], produces the
//! shortlex-least element no bounded neighborhood of the given subgroups can
//! reach, which downstream modules turn into a contracting element with
//! uniformly bounded projections.

use thiserror::Error;

use crate::stallings::{StallingsError, SubgroupAutomaton};
use crate::word::{ball, tree_distance, Axis, Word, WordError};
use crate::word::{project_segment_to_axis, Footprint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BarrierError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error("subgroup {subgroup} has finite index {index}: relative bounded cohomology vanishes and no barrier-free element exists")]
    FiniteIndex { subgroup: usize, index: u64 },
    #[error("no barrier-free element within search length {max_len}")]
    SearchExhausted { max_len: u32 },
    #[error("no spacer extends {g0} without cancellation to a cyclically reduced word")]
    NoSpacer { g0: String },
    #[error("{g} does not contain {g0} as a factor, so it cannot come from extend_to_contracting")]
    NotExtension { g: String, g0: String },
}

/// Neighborhood width for barrier detection. `0` is exact in a tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BarrierParams {
    pub epsilon: u32,
}

/// Whether the geodesic `[o, g o]` contains an `(ε, f)`-barrier.
pub fn has_barrier(g: &Word, f: &Word, p: BarrierParams) -> Result<bool, BarrierError> {
    if f.is_identity() {
        return Err(WordError::IdentityArgument.into());
    }
    if g.rank() != f.rank() {
        return Err(WordError::RankMismatch { left: g.rank(), right: f.rank() }.into());
    }
    if p.epsilon == 0 {
        return Ok(contains_factor(g, f));
    }
    // t o must lie within ε of a geodesic vertex, so t ranges over the
    // ε-balls around the prefixes of g.
    let prefixes: Vec<Word> = (0..=g.len()).map(|i| g.prefix(i)).collect();
    let near = |x: &Word| -> Result<bool, WordError> {
        for v in &prefixes {
            if tree_distance(x, v)? <= p.epsilon as u64 {
                return Ok(true);
            }
        }
        Ok(false)
    };
    let mut seen = std::collections::HashSet::new();
    for v in &prefixes {
        for u in ball(g.rank(), p.epsilon)? {
            let t = v.concat(&u)?;
            if !seen.insert(t.clone()) {
                continue;
            }
            if near(&t.concat(f)?)? {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Factor containment of `f` or `f^{-1}` in the reduced spelling of `g`.
fn contains_factor(g: &Word, f: &Word) -> bool {
    crate::countqm::count_copies(f, g) > 0 || crate::countqm::count_copies(&f.inverse(), g) > 0
}

/// Reference implementation of the ε = 0 case by direct translate search:
/// both `t o` and `t f o` must be geodesic vertices.
pub fn has_barrier_naive(g: &Word, f: &Word) -> Result<bool, BarrierError> {
    let prefixes: Vec<Word> = (0..=g.len()).map(|i| g.prefix(i)).collect();
    for t in &prefixes {
        let tf = t.concat(f)?;
        if prefixes.contains(&tf) {
            return Ok(true);
        }
        let tf = t.concat(&f.inverse())?;
        if prefixes.contains(&tf) {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Outcome of [`find_g0`]: the witness element together with the scope of
/// what was verified about each subgroup.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct G0Certificate {
    pub g0: Word,
    pub epsilon: u32,
    /// Radius `ε + max_i M_i` of the thickening ball `S`.
    pub s_radius: u32,
    /// Per-subgroup: vanishing certified for the whole subgroup (factor
    /// freeness), not merely for the scanned ball.
    pub subgroup_exact: Vec<bool>,
    pub exact_all_h: bool,
}

/// Shortlex-least `g0` with `g0 ∉ S H_i S` for every listed subgroup, where
/// `S` is the ball of radius `ε + max_i (Morse gauge of H_i)`. Subgroups of
/// finite index are refused: their double cosets exhaust the group.
pub fn find_g0(
    subgroups: &[SubgroupAutomaton],
    p: BarrierParams,
) -> Result<G0Certificate, BarrierError> {
    assert!(!subgroups.is_empty(), "need at least one subgroup");
    let rank = subgroups[0].rank();
    for (i, h) in subgroups.iter().enumerate() {
        if let Some(index) = h.index() {
            return Err(BarrierError::FiniteIndex { subgroup: i, index });
        }
    }
    let gauge = subgroups.iter().map(|h| h.morse_gauge()).max().unwrap_or(0) as u32;
    let s_radius = p.epsilon + gauge;
    let s = ball(rank, s_radius)?;
    let max_len = 2 * s_radius + 8;
    for cand in ball(rank, max_len)? {
        if cand.is_identity() {
            continue;
        }
        let mut free = true;
        for h in subgroups {
            if h.in_double_coset(&cand, &s)? {
                free = false;
                break;
            }
        }
        if !free {
            continue;
        }
        let subgroup_exact: Vec<bool> = if p.epsilon == 0 {
            subgroups
                .iter()
                .map(|h| h.factor_free(&cand))
                .collect::<Result<_, _>>()?
        } else {
            // With a positive ε only the scanned ball is certified.
            vec![false; subgroups.len()]
        };
        let exact_all_h = subgroup_exact.iter().all(|&b| b);
        return Ok(G0Certificate {
            g0: cand,
            epsilon: p.epsilon,
            s_radius,
            subgroup_exact,
            exact_all_h,
        });
    }
    Err(BarrierError::SearchExhausted { max_len })
}

/// `g = g0 · f` for the first spacer `f` that concatenates without
/// cancellation to a cyclically reduced word — in a tree, that already
/// makes `g` contracting, and `g` keeps `g0` as a factor.
pub fn extend_to_contracting(g0: &Word, spacers: &[Word]) -> Result<Word, BarrierError> {
    if g0.is_identity() {
        return Err(WordError::IdentityArgument.into());
    }
    for f in spacers {
        if f.is_identity() {
            return Err(WordError::IdentityArgument.into());
        }
        let g = g0.concat(f)?;
        if g.len() == g0.len() + f.len() && g.is_cyclically_reduced() {
            return Ok(g);
        }
    }
    Err(BarrierError::NoSpacer { g0: g0.to_string() })
}

/// One row of a projection scan: the orbit point, the translating element
/// of the axis, and the measured projection diameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanRow {
    pub h: Word,
    pub translate: Word,
    pub diameter: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanReport {
    pub radius: u32,
    pub tau_obs: u64,
    pub rows: Vec<ScanRow>,
}

/// Maximal projection diameter `diam π_{b·Ax(g)}([o, h o])` over subgroup
/// elements `h` within `radius` and translating elements `b` within
/// `radius`. Distinct translates are scanned once, labelled by the
/// shortlex-least `b` reaching them.
pub fn bounded_projection_scan(
    g: &Word,
    subgroups: &[SubgroupAutomaton],
    radius: u32,
) -> Result<ScanReport, BarrierError> {
    if g.is_identity() {
        return Err(WordError::IdentityArgument.into());
    }
    let rank = g.rank();
    let base_axis = Axis::of(g)?;
    let mut translates: Vec<(Word, Axis)> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for b in ball(rank, radius)? {
        let ax = base_axis.translate(&b)?;
        if seen.insert(ax.clone()) {
            translates.push((b, ax));
        }
    }
    let mut hs: Vec<Word> = Vec::new();
    for sub in subgroups {
        hs.extend(sub.enumerate(radius)?);
    }
    hs.sort();
    hs.dedup();

    let o = Word::identity(rank)?;
    let mut rows = Vec::new();
    let mut tau_obs = 0;
    for h in &hs {
        for (b, ax) in &translates {
            let fp: Footprint = project_segment_to_axis(&o, h, ax)?;
            let d = fp.diameter();
            tau_obs = tau_obs.max(d);
            rows.push(ScanRow { h: h.clone(), translate: b.clone(), diameter: d });
        }
    }
    Ok(ScanReport { radius, tau_obs, rows })
}

/// Result of [`barrier_implication_test`]: the least `τ` such that a
/// projection to the axis exceeding `τ` forces a barrier, and a geodesic
/// attaining `τ` without one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TauReport {
    pub tau: u64,
    pub witness: Option<(Word, Word)>,
}

/// Exhaustively measures, over all geodesics `[x, y]` with both endpoints
/// in the radius ball, the largest projection onto `Ax(g)` that occurs
/// without an `(ε, g0)`-barrier on the geodesic.
pub fn barrier_implication_test(
    g: &Word,
    g0: &Word,
    p: BarrierParams,
    radius: u32,
) -> Result<TauReport, BarrierError> {
    if !contains_factor(g, g0) {
        return Err(BarrierError::NotExtension { g: g.to_string(), g0: g0.to_string() });
    }
    let ax = Axis::of(g)?;
    let pts = ball(g.rank(), radius)?;
    let mut tau = 0u64;
    let mut witness = None;
    for x in &pts {
        for y in &pts {
            let label = x.inverse().concat(y)?;
            if has_barrier(&label, g0, p)? {
                continue;
            }
            let d = project_segment_to_axis(x, y, &ax)?.diameter();
            if d > tau || witness.is_none() {
                tau = d;
                witness = Some((x.clone(), y.clone()));
            }
        }
    }
    Ok(TauReport { tau, witness })
}
