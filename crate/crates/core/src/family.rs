//! The independent quasimorphism family: planted pair construction over a
//! shared protection factor, Schottky certificates, the commutator family
//! `f_i = g1^{n_i} g2^{m_i} g1^{-n_i} g2^{-m_i}`, exponent choice `r_i`,
//! the five-item property suite, finite independence certificates, and the
//! bounded-generation obstruction report.
//!
//! Weight 1 is used throughout, so the diagonal slope of every certificate
//! is exactly one copy per period rather than a lower bound.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::countqm::{count_copies, defect_of_pair, defect_scan, h_value, homogenize, QmError, QmSpec};
use crate::stallings::{StallingsError, SubgroupAutomaton};
use crate::word::{ball, Word, WordError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FamilyError {
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Qm(#[from] QmError),
    #[error(transparent)]
    Stallings(#[from] StallingsError),
    #[error("identity argument")]
    IdentityArgument,
    #[error("generated subgroup has rank {rank}, not Schottky")]
    NotSchottky { rank: usize },
    #[error("family member {index} is degenerate: {reason}")]
    Degenerate { index: usize, reason: String },
    #[error("no admissible r for member {index} within cap {cap}")]
    SearchExhausted { index: usize, cap: u32 },
    #[error("property suite item ({item}) failed: {witness}")]
    ItemFailed { item: u8, witness: String },
    #[error("subgroup {subgroup} has finite index {index}")]
    FiniteIndex { subgroup: usize, index: u64 },
    #[error("member {index} does not contain the protection word")]
    MissingProtection { index: usize },
    #[error("no spacer yields a pair of non-equivalent elements for {g0}")]
    SpacersExhausted { g0: String },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

/// The generating pair for the commutator family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairConfig {
    pub g1: Word,
    pub g2: Word,
    pub commutator_form: bool,
}

impl PairConfig {
    pub fn new(g1: Word, g2: Word) -> Result<Self, FamilyError> {
        if g1.is_identity() || g2.is_identity() {
            return Err(FamilyError::IdentityArgument);
        }
        if g1.rank() != g2.rank() {
            return Err(FamilyError::BadParameter("pair ranks differ".into()));
        }
        Ok(PairConfig { g1, g2, commutator_form: true })
    }
}

/// Exponent schedule `n_i = base^{2i-1}`, `m_i = base^{2i}`: strictly
/// interleaved with each exponent at least `base` times the previous.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FamilySchedule {
    pub base: u64,
    pub count: usize,
}

impl FamilySchedule {
    pub fn new(base: u64, count: usize) -> Result<Self, FamilyError> {
        if base < 2 {
            return Err(FamilyError::BadParameter(format!("schedule base {base} below 2")));
        }
        if count == 0 {
            return Err(FamilyError::BadParameter("schedule count must be positive".into()));
        }
        Ok(FamilySchedule { base, count })
    }

    pub fn exponents(&self) -> Result<Vec<(u64, u64)>, FamilyError> {
        let mut out = Vec::with_capacity(self.count);
        for i in 1..=self.count as u32 {
            let n = self
                .base
                .checked_pow(2 * i - 1)
                .ok_or_else(|| FamilyError::BadParameter("exponent overflow".into()))?;
            let m = self
                .base
                .checked_pow(2 * i)
                .ok_or_else(|| FamilyError::BadParameter("exponent overflow".into()))?;
            out.push((n, m));
        }
        Ok(out)
    }
}

/// One loxodromic family member, stored cyclically reduced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyMember {
    /// 1-based position in the family.
    pub index: usize,
    /// Cyclically reduced representative.
    pub f: Word,
    /// The original element is `conjugator · f · conjugator⁻¹`.
    pub conjugator: Word,
    /// Power exponent: the counting pattern is `f^r`.
    pub r: u32,
    /// The factor certified to sit inside `f^{±r}`, when planted.
    pub protection_word: Option<Word>,
}

impl FamilyMember {
    /// The counting quasimorphism of this member: pattern `f^r`, weight 1.
    pub fn qm_spec(&self) -> Result<QmSpec, FamilyError> {
        Ok(QmSpec::new(self.f.pow(self.r as i64), 1)?)
    }

    /// `f^{r·m}`, the m-th power of the counting pattern.
    pub fn power_word(&self, m: u32) -> Word {
        self.f.pow(self.r as i64 * m as i64)
    }
}

/// Signed exponent sum per generator; all zeros exactly when the word lies
/// in the commutator subgroup.
pub fn exponent_sums(w: &Word) -> Vec<i64> {
    let mut sums = vec![0i64; w.rank() as usize];
    for &l in w.letters() {
        let i = crate::word::letter::index(l) as usize - 1;
        if crate::word::letter::is_inverse(l) {
            sums[i] -= 1;
        } else {
            sums[i] += 1;
        }
    }
    sums
}

fn is_rotation(a: &Word, b: &Word) -> bool {
    a.len() == b.len()
        && (a.len() == 0
            || memchr::memmem::find(
                &[a.letters(), a.letters()].concat(),
                b.letters(),
            )
            .is_some())
}

/// True iff the primitive roots of the two elements are neither conjugate
/// nor conjugate-to-inverse; in the tree this decides `g1 ≁ g2^{±1}`.
pub fn non_equivalent(g1: &Word, g2: &Word) -> Result<bool, FamilyError> {
    if g1.is_identity() || g2.is_identity() {
        return Err(FamilyError::IdentityArgument);
    }
    let r1 = g1.cyclic_data().root;
    let r2 = g2.cyclic_data().root;
    Ok(!is_rotation(&r1, &r2) && !is_rotation(&r1.inverse(), &r2))
}

/// Builds `g1 = g0·s`, `g2 = g0·s'` from the first spacers that attach
/// without cancellation, advancing the second spacer until the pair is
/// non-equivalent. Planting `g0` in both factors puts it inside every
/// family member.
pub fn planted_pair(g0: &Word, spacers: &[Word]) -> Result<PairConfig, FamilyError> {
    if g0.is_identity() {
        return Err(FamilyError::IdentityArgument);
    }
    let attaches = |s: &Word| -> bool {
        !s.is_identity()
            && s.letters()[0] != crate::word::letter::inverse(*g0.letters().last().unwrap())
    };
    let mut clean = spacers.iter().filter(|s| attaches(s));
    let s1 = clean
        .next()
        .ok_or_else(|| FamilyError::SpacersExhausted { g0: g0.to_string() })?;
    let g1 = g0.concat(s1)?;
    for s2 in clean {
        let g2 = g0.concat(s2)?;
        if non_equivalent(&g1, &g2)? {
            return PairConfig::new(g1, g2);
        }
    }
    Err(FamilyError::SpacersExhausted { g0: g0.to_string() })
}

/// Rank and measured stability constant of the subgroup `⟨g1^p, g2^p⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchottkyCertificate {
    pub rank: usize,
    /// Least `L_1` with `d(o, f^m o) ≥ m(d(o, f o) − 2L_1)` over the
    /// tested cyclically reduced subgroup words.
    pub l1: Ratio<i64>,
    pub schottky: bool,
}

/// Folds the subgroup and measures its stability constant over all
/// cyclically reduced subgroup words of syllable length at most 4 and
/// powers up to 4.
pub fn schottky_certificate(
    g1: &Word,
    g2: &Word,
    p: u32,
) -> Result<SchottkyCertificate, FamilyError> {
    if p == 0 {
        return Err(FamilyError::BadParameter("power p must be positive".into()));
    }
    let x = g1.pow(p as i64);
    let y = g2.pow(p as i64);
    if x.is_identity() || y.is_identity() {
        return Err(FamilyError::IdentityArgument);
    }
    let aut = SubgroupAutomaton::build(x.rank(), &[x.clone(), y.clone()])?;
    let rank = aut.edge_count() + 1 - aut.vertex_count();

    // Syllable alphabet: x, y and inverses; reduced syllable strings with
    // no adjacent inverse pairs, cyclically reduced as syllable words.
    let letters = [x.clone(), x.inverse(), y.clone(), y.inverse()];
    let inverse_of = |i: usize| i ^ 1;
    let mut l1 = Ratio::from_integer(0);
    let mut stack: Vec<Vec<usize>> = (0..4).map(|i| vec![i]).collect();
    while let Some(syll) = stack.pop() {
        if syll.len() < 4 {
            for i in 0..4 {
                if i != inverse_of(*syll.last().unwrap()) {
                    let mut next = syll.clone();
                    next.push(i);
                    stack.push(next);
                }
            }
        }
        if inverse_of(syll[0]) == *syll.last().unwrap() && syll.len() > 1 {
            continue; // not cyclically reduced as a syllable word
        }
        let mut f = Word::identity(x.rank())?;
        for &i in &syll {
            f = f.concat(&letters[i])?;
        }
        if f.is_identity() {
            continue;
        }
        let base = f.len() as i64;
        for m in 1..=4i64 {
            let grown = f.pow(m).len() as i64;
            let candidate = Ratio::new(m * base - grown, 2 * m);
            if candidate > l1 {
                l1 = candidate;
            }
        }
    }
    Ok(SchottkyCertificate { rank, l1, schottky: rank == 2 })
}

/// One commutator member `g1^n g2^m g1^{-n} g2^{-m}` (or the plain product
/// when `commutator_form` is off), cyclically reduced with the conjugation
/// recorded.
pub fn commutator_member(
    pair: &PairConfig,
    index: usize,
    n: u64,
    m: u64,
) -> Result<FamilyMember, FamilyError> {
    let raw = if pair.commutator_form {
        pair.g1
            .pow(n as i64)
            .concat(&pair.g2.pow(m as i64))?
            .concat(&pair.g1.pow(-(n as i64)))?
            .concat(&pair.g2.pow(-(m as i64)))?
    } else {
        pair.g1.pow(n as i64).concat(&pair.g2.pow(m as i64))?
    };
    if raw.is_identity() {
        return Err(FamilyError::Degenerate {
            index,
            reason: "construction collapsed to the identity".into(),
        });
    }
    let cd = raw.cyclic_data();
    if cd.exponent != 1 {
        return Err(FamilyError::Degenerate {
            index,
            reason: format!("construction collapsed to a proper power (exponent {})", cd.exponent),
        });
    }
    let f = cd.root;
    if is_rotation(&f, &f.inverse()) {
        return Err(FamilyError::Degenerate {
            index,
            reason: "member is conjugate to its own inverse".into(),
        });
    }
    Ok(FamilyMember { index, f, conjugator: cd.conjugator, r: 1, protection_word: None })
}

/// Builds the whole family over the schedule and checks pairwise root
/// distinctness and commutator-subgroup membership.
pub fn make_family(
    pair: &PairConfig,
    sched: &FamilySchedule,
) -> Result<Vec<FamilyMember>, FamilyError> {
    let mut members: Vec<FamilyMember> = Vec::with_capacity(sched.count);
    for (idx, (n, m)) in sched.exponents()?.into_iter().enumerate() {
        let member = commutator_member(pair, idx + 1, n, m)?;
        if pair.commutator_form && exponent_sums(&member.f).iter().any(|&s| s != 0) {
            return Err(FamilyError::Degenerate {
                index: idx + 1,
                reason: "nonzero exponent sum".into(),
            });
        }
        for prev in &members {
            if !non_equivalent(&prev.f, &member.f)? {
                return Err(FamilyError::Degenerate {
                    index: idx + 1,
                    reason: format!("root conjugate to member {}", prev.index),
                });
            }
        }
        members.push(member);
    }
    Ok(members)
}

/// Search policy for [`choose_r`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChooseRParams {
    /// Powers of the other members scanned for factor collisions.
    pub m_test: u32,
    /// Largest exponent tried before giving up.
    pub cap: u32,
    /// Factor that must appear in `f^r`, when planted.
    pub protection: Option<Word>,
}

impl Default for ChooseRParams {
    fn default() -> Self {
        ChooseRParams { m_test: 3, cap: 8, protection: None }
    }
}

fn contains_factor(pattern: &Word, text: &Word) -> bool {
    count_copies(pattern, text) > 0
}

/// Least `r ≥ 1` such that `f_i^{±r}` avoids all earlier members' powers,
/// `f_i^{r·m}` avoids `f_i^{-r}`, and `f_i^r` carries the protection word.
pub fn choose_r(
    idx: usize,
    family: &[FamilyMember],
    params: &ChooseRParams,
) -> Result<u32, FamilyError> {
    let member = family
        .get(idx)
        .ok_or_else(|| FamilyError::BadParameter(format!("member index {idx} out of range")))?;
    'candidates: for r in 1..=params.cap {
        let p = member.f.pow(r as i64);
        let p_inv = p.inverse();
        for other in family.iter().take(idx) {
            for m in 1..=params.m_test {
                let text = other.f.pow(other.r as i64 * m as i64);
                if contains_factor(&p, &text) || contains_factor(&p_inv, &text) {
                    continue 'candidates;
                }
            }
        }
        for m in 1..=params.m_test {
            if contains_factor(&p_inv, &member.f.pow(r as i64 * m as i64)) {
                continue 'candidates;
            }
        }
        if let Some(g0) = &params.protection {
            if !contains_factor(g0, &p) && !contains_factor(&g0.inverse(), &p) {
                continue 'candidates;
            }
        }
        return Ok(r);
    }
    Err(FamilyError::SearchExhausted { index: member.index, cap: params.cap })
}

/// Records the planted factor on every member after verifying it really
/// occurs in `f^{±r}`.
pub fn attach_protection(family: &mut [FamilyMember], g0: &Word) -> Result<(), FamilyError> {
    for member in family.iter_mut() {
        let w = member.f.pow(member.r as i64);
        if !contains_factor(g0, &w) && !contains_factor(&g0.inverse(), &w) {
            return Err(FamilyError::MissingProtection { index: member.index });
        }
        member.protection_word = Some(g0.clone());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteRadii {
    /// Highest power of other members evaluated in the cross checks.
    pub powers: u32,
    /// Enumeration radius for the subgroup vanishing sweep.
    pub subgroup: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteItem {
    pub label: &'static str,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VanishingFlag {
    pub subgroup: usize,
    /// Ball sweep passed out to `ball_radius`.
    pub ball_radius: u32,
    pub checked: u64,
    /// True when the protection factor never occurs in the subgroup, which
    /// upgrades the ball sweep to a certificate for every element.
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertySuite {
    pub items: Vec<SuiteItem>,
    pub vanishing: Vec<VanishingFlag>,
}

/// The five-property verification, weight 1 throughout; the first failure
/// aborts with its witness.
///
/// (1) cross-evaluations vanish, (2) the diagonal grows at exactly one per
/// period, (3) exponent sums vanish (so every homomorphism to the reals
/// kills the members), (4) lengths strictly increase, (5) the
/// quasimorphisms vanish on a subgroup ball, upgraded to all of the
/// subgroup when the protection factor is absent from it.
pub fn property_suite(
    family: &[FamilyMember],
    subgroups: &[SubgroupAutomaton],
    radii: &SuiteRadii,
) -> Result<PropertySuite, FamilyError> {
    if family.is_empty() {
        return Err(FamilyError::BadParameter("empty family".into()));
    }
    let specs: Vec<QmSpec> =
        family.iter().map(|m| m.qm_spec()).collect::<Result<_, _>>()?;
    let mut items = Vec::new();

    // (1) h_i(f_j^m) = 0 for i != j.
    let mut cross = 0u64;
    for (j, other) in family.iter().enumerate() {
        for m in 1..=radii.powers {
            let text = other.f.pow(m as i64);
            for (i, spec) in specs.iter().enumerate() {
                if i == j {
                    continue;
                }
                let v = h_value(spec, &text);
                cross += 1;
                if v != 0 {
                    return Err(FamilyError::ItemFailed {
                        item: 1,
                        witness: format!(
                            "h_{}(f_{}^{}) = {v}",
                            family[i].index, other.index, m
                        ),
                    });
                }
            }
        }
    }
    items.push(SuiteItem {
        label: "cross-evaluations vanish",
        detail: format!("{cross} evaluations, powers up to {}", radii.powers),
    });

    // (2) h_i(f_i^{r_i m}) = m exactly.
    for (i, member) in family.iter().enumerate() {
        for m in 1..=radii.powers {
            let v = h_value(&specs[i], &member.power_word(m));
            if v != m as i64 {
                return Err(FamilyError::ItemFailed {
                    item: 2,
                    witness: format!(
                        "h_{0}(f_{0}^{{r·{1}}}) = {v}, expected {1}",
                        member.index, m
                    ),
                });
            }
        }
    }
    items.push(SuiteItem {
        label: "diagonal slope exact",
        detail: format!("one copy per period up to power {}", radii.powers),
    });

    // (3) exponent sums vanish.
    for member in family {
        let sums = exponent_sums(&member.f);
        if sums.iter().any(|&s| s != 0) {
            return Err(FamilyError::ItemFailed {
                item: 3,
                witness: format!("f_{} has exponent sums {sums:?}", member.index),
            });
        }
    }
    items.push(SuiteItem {
        label: "exponent sums zero",
        detail: "every real homomorphism vanishes on the family".into(),
    });

    // (4) strictly increasing lengths.
    for pair in family.windows(2) {
        if pair[0].f.len() >= pair[1].f.len() {
            return Err(FamilyError::ItemFailed {
                item: 4,
                witness: format!(
                    "|f_{}| = {} !< |f_{}| = {}",
                    pair[0].index,
                    pair[0].f.len(),
                    pair[1].index,
                    pair[1].f.len()
                ),
            });
        }
    }
    items.push(SuiteItem {
        label: "lengths strictly increase",
        detail: format!(
            "{} through {}",
            family.first().unwrap().f.len(),
            family.last().unwrap().f.len()
        ),
    });

    // (5) vanishing on the subgroups: ball sweep plus the exact upgrade.
    let mut vanishing = Vec::new();
    for (k, sub) in subgroups.iter().enumerate() {
        let elems = sub.enumerate(radii.subgroup)?;
        for h in &elems {
            for (i, spec) in specs.iter().enumerate() {
                let v = h_value(spec, h);
                if v != 0 {
                    return Err(FamilyError::ItemFailed {
                        item: 5,
                        witness: format!(
                            "h_{}({h}) = {v} on subgroup {k}",
                            family[i].index
                        ),
                    });
                }
            }
        }
        let mut exact = true;
        for member in family {
            let protected = match &member.protection_word {
                Some(g0) => {
                    let w = member.f.pow(member.r as i64);
                    (contains_factor(g0, &w) || contains_factor(&g0.inverse(), &w))
                        && sub.factor_free(g0)?
                }
                None => false,
            };
            if !protected {
                exact = false;
            }
        }
        vanishing.push(VanishingFlag {
            subgroup: k,
            ball_radius: radii.subgroup,
            checked: elems.len() as u64,
            exact,
        });
    }
    items.push(SuiteItem {
        label: "vanishing on subgroups",
        detail: format!(
            "{} subgroups, exact on {}",
            subgroups.len(),
            vanishing.iter().filter(|v| v.exact).count()
        ),
    });

    Ok(PropertySuite { items, vanishing })
}

/// Finite truncation of the independence certificate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndependenceCertificate {
    pub n: usize,
    pub m: u32,
    /// `matrix[i][j] = h_i(f_j^{r_j·m})`.
    pub matrix: Vec<Vec<i64>>,
    pub diagonal_slope: i64,
    /// `m = 0` produces the zero matrix and certifies nothing.
    pub degenerate: bool,
}

impl IndependenceCertificate {
    /// Diagonal equal to `m`, zero elsewhere: what independence needs.
    pub fn is_diagonal(&self) -> bool {
        !self.degenerate
            && self.matrix.iter().enumerate().all(|(i, row)| {
                row.iter()
                    .enumerate()
                    .all(|(j, &v)| if i == j { v == self.m as i64 } else { v == 0 })
            })
    }
}

/// Evaluates the full matrix `h_i(f_j^{r_j·m})`; a diagonal outcome forces
/// every coefficient of a vanishing combination to zero, because the
/// diagonal grows unboundedly in `m` while everything else stays put.
pub fn independence_matrix(
    family: &[FamilyMember],
    m: u32,
) -> Result<IndependenceCertificate, FamilyError> {
    let specs: Vec<QmSpec> =
        family.iter().map(|mb| mb.qm_spec()).collect::<Result<_, _>>()?;
    let mut matrix = vec![vec![0i64; family.len()]; family.len()];
    for (j, member) in family.iter().enumerate() {
        let text = member.power_word(m);
        for (i, spec) in specs.iter().enumerate() {
            matrix[i][j] = h_value(spec, &text);
        }
    }
    Ok(IndependenceCertificate {
        n: family.len(),
        m,
        matrix,
        diagonal_slope: 1,
        degenerate: m == 0,
    })
}

/// Sampling policy for the bounded-generation obstruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedGenParams {
    /// Number of conjugated subgroup factors per product.
    pub n_fold: u32,
    /// Radius for subgroup elements and conjugators.
    pub radius: u32,
    pub seed: u64,
    pub samples: u32,
    /// Radius of the short-word defect scan folded into the empirical
    /// defect.
    pub defect_probe_radius: u32,
}

impl Default for BoundedGenParams {
    fn default() -> Self {
        BoundedGenParams { n_fold: 3, radius: 4, seed: 0, samples: 200, defect_probe_radius: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundedGenReport {
    pub n_fold: u32,
    /// Homogenized growth of `h` on `f^r` per power: exactly 1 here.
    pub slope: i64,
    /// Short-pair scan maximum, augmented with conjugation probes against
    /// the family powers (the pairs the class-function argument telescopes
    /// through).
    pub empirical_defect: u64,
    /// `n_fold · empirical_defect`: what boundedly generated powers could
    /// never exceed.
    pub bound: u64,
    /// Least power with `m*·slope` above the bound: the obstruction.
    pub m_star: u64,
    /// Homogenization estimates on `f^{r·m}`, growing linearly.
    pub growth: Vec<(u32, Ratio<i64>)>,
    pub samples_tested: u64,
    pub max_product_estimate: Ratio<i64>,
    /// Every sampled `≤ n_fold`-fold conjugate product stayed within the
    /// bound.
    pub all_bounded: bool,
}

/// Measures the defect honestly on evaluated pairs: the short-ball scan
/// plus probes pairing conjugators against the member's powers.
fn probed_defect(
    spec: &QmSpec,
    member: &FamilyMember,
    probe_radius: u32,
) -> Result<u64, FamilyError> {
    let mut best = defect_scan(spec, probe_radius)?.max;
    for m in 1..=3u32 {
        let fm = member.power_word(m);
        for t in ball(member.f.rank(), probe_radius)? {
            let t_inv = t.inverse();
            let tail = fm.concat(&t_inv)?;
            best = best.max(defect_of_pair(spec, &t, &tail)?);
            best = best.max(defect_of_pair(spec, &fm, &t_inv)?);
        }
        best = best.max(defect_of_pair(spec, &fm, &member.power_word(1))?);
    }
    Ok(best)
}

/// The obstruction report: if every power of the member were a product of
/// at most `n_fold` conjugated subgroup elements, homogeneity would force
/// `m·slope ≤ n_fold·defect`; the report exhibits the power `m*` breaking
/// that, and checks the sampled products really stay below the bound.
pub fn bounded_generation_report(
    member: &FamilyMember,
    subgroups: &[SubgroupAutomaton],
    params: &BoundedGenParams,
) -> Result<BoundedGenReport, FamilyError> {
    if subgroups.is_empty() && params.n_fold > 0 {
        return Err(FamilyError::BadParameter("no subgroups to draw factors from".into()));
    }
    for (k, sub) in subgroups.iter().enumerate() {
        if let Some(index) = sub.index() {
            return Err(FamilyError::FiniteIndex { subgroup: k, index });
        }
    }
    let spec = member.qm_spec()?;
    // The slope is exact: one pattern copy per period.
    for m in 1..=3u32 {
        if h_value(&spec, &member.power_word(m)) != m as i64 {
            return Err(FamilyError::Degenerate {
                index: member.index,
                reason: "homogenization slope is not positive".into(),
            });
        }
    }
    let slope = 1i64;
    let empirical_defect = probed_defect(&spec, member, params.defect_probe_radius)?;
    let bound = params.n_fold as u64 * empirical_defect;
    let m_star = bound / slope as u64 + 1;

    let defect_bound = spec.a_priori_defect_bound();
    let mut growth = Vec::new();
    for m in 1..=3u32 {
        let est = homogenize(&spec, &member.power_word(m), 4, defect_bound)?;
        growth.push((m, est.value));
    }

    let rank = member.f.rank();
    let conjugators = ball(rank, params.radius)?;
    let pools: Vec<Vec<Word>> = subgroups
        .iter()
        .map(|s| s.enumerate(params.radius))
        .collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut max_product_estimate = Ratio::from_integer(0);
    let mut samples_tested = 0u64;
    for _ in 0..params.samples {
        let mut product = Word::identity(rank)?;
        for _ in 0..params.n_fold {
            let pool = &pools[rng.gen_range(0..pools.len())];
            let h = &pool[rng.gen_range(0..pool.len())];
            let t = &conjugators[rng.gen_range(0..conjugators.len())];
            let factor = t.concat(h)?.concat(&t.inverse())?;
            product = product.concat(&factor)?;
        }
        let est = if product.is_identity() {
            Ratio::from_integer(0)
        } else {
            homogenize(&spec, &product, 8, defect_bound)?.value
        };
        let abs = if est < Ratio::from_integer(0) { -est } else { est };
        if abs > max_product_estimate {
            max_product_estimate = abs;
        }
        samples_tested += 1;
    }
    let all_bounded = max_product_estimate <= Ratio::from_integer(bound as i64);
    Ok(BoundedGenReport {
        n_fold: params.n_fold,
        slope,
        empirical_defect,
        bound,
        m_star,
        growth,
        samples_tested,
        max_product_estimate,
        all_bounded,
    })
}

/// Deliberately broken two-member family whose second pattern is a power
/// of the first: cross-evaluations cannot vanish, so the property suite
/// must fail item (1). Negative-control fixture.
pub fn overlap_clash_fixture() -> Vec<FamilyMember> {
    let f1 = Word::parse("abAB", 2).expect("fixture word parses");
    let f2 = f1.concat(&f1).expect("fixture square reduces");
    let e = Word::identity(2).expect("rank 2 valid");
    let b = Word::parse("b", 2).expect("fixture word parses");
    vec![
        FamilyMember {
            index: 1,
            f: f1,
            conjugator: e.clone(),
            r: 1,
            protection_word: Some(b.clone()),
        },
        FamilyMember { index: 2, f: f2, conjugator: e, r: 1, protection_word: Some(b) },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Word {
        Word::parse(s, 2).unwrap()
    }

    fn flagship_pair() -> PairConfig {
        let spacers: Vec<Word> = ["ab", "ba", "aab", "abb"].iter().map(|s| w(s)).collect();
        planted_pair(&w("b"), &spacers).unwrap()
    }

    fn small_family(count: usize) -> Vec<FamilyMember> {
        let pair = flagship_pair();
        let sched = FamilySchedule::new(2, count).unwrap();
        let mut fam = make_family(&pair, &sched).unwrap();
        for i in 0..fam.len() {
            let r = choose_r(i, &fam, &ChooseRParams::default()).unwrap();
            fam[i].r = r;
        }
        attach_protection(&mut fam, &w("b")).unwrap();
        fam
    }

    #[test]
    fn non_equivalence_examples() {
        assert!(!non_equivalent(&w("ab"), &w("ba")).unwrap());
        assert!(non_equivalent(&w("abAB"), &w("aabbAABB")).unwrap());
        assert!(!non_equivalent(&w("abab"), &w("ab")).unwrap());
        // Conjugate-to-inverse is also equivalent.
        assert!(!non_equivalent(&w("ab"), &w("BA")).unwrap());
        assert!(non_equivalent(&w("bab"), &w("baab")).unwrap());
        assert!(non_equivalent(&w("ab"), &w("aabb")).unwrap());
        assert!(matches!(
            non_equivalent(&w(""), &w("a")),
            Err(FamilyError::IdentityArgument)
        ));
    }

    #[test]
    fn planted_pair_advances_past_conjugate_spacers() {
        // b·ba = "bba" is a rotation of b·ab = "bab", so the second spacer
        // must be skipped.
        let pair = flagship_pair();
        assert_eq!(pair.g1, w("bab"));
        assert_eq!(pair.g2, w("baab"));

        let spacers = vec![w("ab")];
        assert!(matches!(
            planted_pair(&w("b"), &spacers),
            Err(FamilyError::SpacersExhausted { .. })
        ));

        // A spacer beginning with the inverse of the tail is not planted.
        let pair = planted_pair(&w("ab"), &[w("Ba"), w("ab"), w("ba")]).unwrap();
        assert_eq!(pair.g1, w("abab"));
        assert_eq!(pair.g2, w("abba"));
    }

    #[test]
    fn schottky_examples() {
        let cert = schottky_certificate(&w("abAB"), &w("aabbAABB"), 1).unwrap();
        assert_eq!(cert.rank, 2);
        assert!(cert.schottky);

        let cert = schottky_certificate(&w("a"), &w("a"), 1).unwrap();
        assert_eq!(cert.rank, 1);
        assert!(!cert.schottky);

        let cert = schottky_certificate(&w("a"), &w("b"), 1).unwrap();
        assert_eq!(cert.rank, 2);
        assert_eq!(cert.l1, Ratio::from_integer(0), "free basis powers never cancel");
    }

    #[test]
    fn schottky_growth_inequality_holds_at_measured_l1() {
        // d(o, f^m o) >= m(d(o, f o) - 2 L1) for all tested subgroup words.
        let (g1, g2) = (w("abAB"), w("aabbAABB"));
        let cert = schottky_certificate(&g1, &g2, 1).unwrap();
        let letters = [g1.clone(), g1.inverse(), g2.clone(), g2.inverse()];
        for a in 0..4usize {
            for b in 0..4usize {
                if b == (a ^ 1) {
                    continue;
                }
                let f = letters[a].concat(&letters[b]).unwrap();
                if f.is_identity() {
                    continue;
                }
                for m in 1..=4i64 {
                    let lhs = Ratio::from_integer(f.pow(m).len() as i64);
                    let rhs = Ratio::from_integer(m)
                        * (Ratio::from_integer(f.len() as i64)
                            - Ratio::from_integer(2) * cert.l1);
                    assert!(lhs >= rhs, "violated at syllables {a},{b} m={m}");
                }
            }
        }
    }

    #[test]
    fn commutator_member_examples() {
        let pair = PairConfig::new(w("a"), w("b")).unwrap();
        let m = commutator_member(&pair, 1, 1, 1).unwrap();
        assert_eq!(m.f, w("abAB"));
        assert!(m.conjugator.is_identity());
        let m = commutator_member(&pair, 1, 2, 1).unwrap();
        assert_eq!(m.f, w("aabAAB"));
    }

    #[test]
    fn flagship_member_reduces_with_junction_cancellation() {
        // g2^m · g1^{-n} cancels four letters and the cyclic reduction
        // strips four more; the reconstruction must match the raw product.
        let pair = flagship_pair();
        let sched = FamilySchedule::new(4, 1).unwrap();
        let fam = make_family(&pair, &sched).unwrap();
        let m = &fam[0];
        assert_eq!(m.f.len(), 144);
        assert!(m.f.is_cyclically_reduced());
        let raw = pair
            .g1
            .pow(4)
            .concat(&pair.g2.pow(16))
            .unwrap()
            .concat(&pair.g1.pow(-4))
            .unwrap()
            .concat(&pair.g2.pow(-16))
            .unwrap();
        assert_eq!(raw.len(), 148);
        let rebuilt = m
            .conjugator
            .concat(&m.f)
            .unwrap()
            .concat(&m.conjugator.inverse())
            .unwrap();
        assert_eq!(rebuilt, raw);
        assert_eq!(exponent_sums(&m.f), vec![0, 0]);
    }

    #[test]
    fn degenerate_construction_is_refused() {
        // Commuting pair collapses the commutator to the identity.
        let pair = PairConfig::new(w("a"), w("aa")).unwrap();
        assert!(matches!(
            commutator_member(&pair, 1, 1, 1),
            Err(FamilyError::Degenerate { .. })
        ));
    }

    #[test]
    fn schedule_exponents_interleave() {
        let sched = FamilySchedule::new(4, 3).unwrap();
        assert_eq!(
            sched.exponents().unwrap(),
            vec![(4, 16), (64, 256), (1024, 4096)]
        );
        assert!(FamilySchedule::new(1, 3).is_err());
        assert!(FamilySchedule::new(4, 0).is_err());
        assert!(FamilySchedule::new(u64::MAX, 5).unwrap().exponents().is_err());
    }

    #[test]
    fn choose_r_examples() {
        let pair = PairConfig::new(w("a"), w("b")).unwrap();
        let fam = vec![commutator_member(&pair, 1, 1, 1).unwrap()];
        assert_eq!(choose_r(0, &fam, &ChooseRParams::default()).unwrap(), 1);

        let fam = small_family(2);
        assert_eq!(fam[1].r, 1, "scale separation admits r = 1");

        let capped = ChooseRParams { cap: 0, ..ChooseRParams::default() };
        assert!(matches!(
            choose_r(0, &fam, &capped),
            Err(FamilyError::SearchExhausted { .. })
        ));
    }

    #[test]
    fn protection_attachment() {
        let mut fam = small_family(2);
        for m in &fam {
            assert_eq!(m.protection_word, Some(w("b")));
        }
        // A factor absent from the members is refused.
        let long = w("abababababababababababab").concat(&w("b")).unwrap();
        assert!(matches!(
            attach_protection(&mut fam, &long),
            Err(FamilyError::MissingProtection { index: 1 })
        ));
    }

    #[test]
    fn property_suite_passes_on_small_instance() {
        let fam = small_family(3);
        let sub = SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        let radii = SuiteRadii { powers: 3, subgroup: 8 };
        let suite = property_suite(&fam, &[sub], &radii).unwrap();
        assert_eq!(suite.items.len(), 5);
        assert_eq!(suite.vanishing.len(), 1);
        assert!(suite.vanishing[0].exact, "⟨a⟩ avoids the protection letter");
    }

    #[test]
    fn property_suite_single_member_is_vacuous_on_item_one() {
        let fam = small_family(1);
        let sub = SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        let suite =
            property_suite(&fam, &[sub], &SuiteRadii { powers: 2, subgroup: 6 }).unwrap();
        assert!(suite.items[0].detail.starts_with("0 evaluations"));
    }

    #[test]
    fn clash_fixture_fails_item_one_with_witness() {
        let fam = overlap_clash_fixture();
        let sub = SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        let err = property_suite(&fam, &[sub], &SuiteRadii { powers: 3, subgroup: 4 })
            .unwrap_err();
        match err {
            FamilyError::ItemFailed { item: 1, witness } => {
                assert!(witness.contains("h_2"), "witness was {witness}");
            }
            other => panic!("expected item-1 failure, got {other:?}"),
        }
    }

    #[test]
    fn vanishing_not_exact_without_protection() {
        let pair = flagship_pair();
        let sched = FamilySchedule::new(2, 1).unwrap();
        let fam = make_family(&pair, &sched).unwrap(); // protection never attached
        let sub = SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        let suite =
            property_suite(&fam, &[sub], &SuiteRadii { powers: 2, subgroup: 6 }).unwrap();
        assert!(!suite.vanishing[0].exact);
    }

    #[test]
    fn independence_matrix_examples() {
        let fam = small_family(3);
        for m in 1..=3u32 {
            let cert = independence_matrix(&fam, m).unwrap();
            assert!(cert.is_diagonal(), "m={m}: {:?}", cert.matrix);
            for i in 0..3 {
                assert_eq!(cert.matrix[i][i], m as i64);
            }
            assert!(!cert.degenerate);
        }
        let single = small_family(1);
        let cert = independence_matrix(&single, 1).unwrap();
        assert_eq!(cert.matrix, vec![vec![1]]);

        let cert = independence_matrix(&fam, 0).unwrap();
        assert!(cert.degenerate);
        assert!(cert.matrix.iter().flatten().all(|&v| v == 0));
        assert!(!cert.is_diagonal());
    }

    #[test]
    fn bounded_generation_flagship_shape() {
        let fam = small_family(1);
        let sub = SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        let params = BoundedGenParams { radius: 3, samples: 60, ..Default::default() };
        let report = bounded_generation_report(&fam[0], &[sub], &params).unwrap();
        assert_eq!(report.slope, 1);
        assert!(report.m_star as i64 * report.slope > report.bound as i64);
        assert!(report.all_bounded, "max estimate {}", report.max_product_estimate);
        for (m, est) in &report.growth {
            assert_eq!(*est, Ratio::from_integer(*m as i64), "exact linear growth");
        }
        assert_eq!(report.samples_tested, 60);
    }

    #[test]
    fn bounded_generation_guards() {
        let fam = small_family(1);
        let full = SubgroupAutomaton::build(2, &[w("a"), w("b")]).unwrap();
        assert!(matches!(
            bounded_generation_report(&fam[0], &[full], &BoundedGenParams::default()),
            Err(FamilyError::FiniteIndex { .. })
        ));

        // Zero-fold products are all trivial.
        let sub = SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        let params = BoundedGenParams { n_fold: 0, samples: 5, ..Default::default() };
        let report = bounded_generation_report(&fam[0], &[sub], &params).unwrap();
        assert_eq!(report.max_product_estimate, Ratio::from_integer(0));
        assert_eq!(report.bound, 0);
        assert_eq!(report.m_star, 1);
    }

    #[test]
    fn bounded_generation_is_deterministic_per_seed() {
        let fam = small_family(1);
        let sub = || SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        let params = BoundedGenParams { radius: 3, samples: 40, seed: 7, ..Default::default() };
        let a = bounded_generation_report(&fam[0], &[sub()], &params).unwrap();
        let b = bounded_generation_report(&fam[0], &[sub()], &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_function_surrogate_within_probed_defect() {
        // Homogeneous quasimorphisms are class functions; at finite scale
        // conjugation moves h by at most twice the defect, measured on the
        // very pairs the telescoping argument uses.
        let fam = small_family(2);
        for member in &fam {
            let spec = member.qm_spec().unwrap();
            let delta = probed_defect(&spec, member, 3).unwrap();
            for m in 1..=4u32 {
                let f = member.power_word(m);
                let base = h_value(&spec, &f);
                for t in ball(2, 3).unwrap() {
                    let conj = t.concat(&f).unwrap().concat(&t.inverse()).unwrap();
                    let moved = h_value(&spec, &conj);
                    assert!(
                        (moved - base).unsigned_abs() <= 2 * delta,
                        "member {} m={m} t={t}: {moved} vs {base}, delta {delta}",
                        member.index
                    );
                }
            }
            // Homogenized estimates of conjugates agree within error bounds.
            let bound = spec.a_priori_defect_bound();
            let f = member.power_word(2);
            let t = w("ba");
            let conj = t.concat(&f).unwrap().concat(&t.inverse()).unwrap();
            let e1 = homogenize(&spec, &f, 8, bound).unwrap();
            let e2 = homogenize(&spec, &conj, 8, bound).unwrap();
            let diff = if e1.value > e2.value { e1.value - e2.value } else { e2.value - e1.value };
            assert!(diff <= e1.error_bound + e2.error_bound);
        }
    }

    #[test]
    fn protection_propagates_to_exact_vanishing() {
        // factor_free on the protection letter certifies vanishing for
        // every subgroup element, sampled well beyond the suite radius.
        let fam = small_family(2);
        let sub = SubgroupAutomaton::build(2, &[w("a")]).unwrap();
        assert!(sub.factor_free(&w("b")).unwrap());
        for member in &fam {
            let spec = member.qm_spec().unwrap();
            for h in sub.enumerate(12).unwrap() {
                assert_eq!(h_value(&spec, &h), 0);
            }
        }
    }
}
