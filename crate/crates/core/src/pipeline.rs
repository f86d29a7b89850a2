//! End-to-end certificate pipeline.
//!
//! Wires the stages together in a fixed order: build the subgroup automata
//! (rejecting finite index), search for a protected factor `g0`, extend it
//! to a contracting element `g`, measure projection diameters and the
//! projection-complex axioms, certify subgroup ellipticity and quasi-tree
//! bottlenecks, construct the exponent family, verify its properties, and
//! emit `certificate.json` plus CSV side tables. Property failures are
//! collected rather than aborting, so a run always leaves an inspectable
//! certificate; hard errors (bad config, finite index, internal faults)
//! abort with distinct exit codes.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::barrier::{self, BarrierError, BarrierParams};
use crate::countqm::{defect_of_pair, defect_scan};
use crate::family::{
    self, BoundedGenParams, ChooseRParams, FamilyError, FamilyMember, FamilySchedule,
    SuiteRadii,
};
use crate::projcx::{self, ProjConfig, ProjError, ProjFamily};
use crate::stallings::{StallingsError, SubgroupAutomaton};
use crate::word::{ball, Axis, Word, WordError};

/// Exit code for configuration errors, following sysexits `EX_USAGE`.
pub const EXIT_CONFIG: i32 = 64;
/// Exit code when a subgroup has finite index and no certificate can exist.
pub const EXIT_FINITE_INDEX: i32 = 2;
/// Exit code when the run completed but some certificate item failed.
pub const EXIT_FAILED: i32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    /// The configuration is malformed or out of supported range.
    #[error("configuration error: {0}")]
    Config(String),
    /// A finite-index subgroup admits no certificate: the relative
    /// second bounded cohomology is trivial, so the search is vacuous.
    #[error(
        "subgroup {subgroup} has finite index {index} in the ambient free group; \
         then H²_b(G,H;ℝ)=0 and no nontrivial certificate exists"
    )]
    FiniteIndex { subgroup: usize, index: u64 },
    /// Unexpected internal failure (I/O, arithmetic, stage contract).
    #[error("{0}")]
    Internal(String),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => EXIT_CONFIG,
            PipelineError::FiniteIndex { .. } => EXIT_FINITE_INDEX,
            PipelineError::Internal(_) => EXIT_FAILED,
        }
    }
}

impl From<WordError> for PipelineError {
    fn from(e: WordError) -> Self {
        PipelineError::Internal(e.to_string())
    }
}

impl From<StallingsError> for PipelineError {
    fn from(e: StallingsError) -> Self {
        PipelineError::Internal(e.to_string())
    }
}

impl From<BarrierError> for PipelineError {
    fn from(e: BarrierError) -> Self {
        match e {
            BarrierError::FiniteIndex { subgroup, index } => {
                PipelineError::FiniteIndex { subgroup, index }
            }
            other => PipelineError::Internal(other.to_string()),
        }
    }
}

impl From<FamilyError> for PipelineError {
    fn from(e: FamilyError) -> Self {
        match e {
            FamilyError::FiniteIndex { subgroup, index } => {
                PipelineError::FiniteIndex { subgroup, index }
            }
            other => PipelineError::Internal(other.to_string()),
        }
    }
}

impl From<ProjError> for PipelineError {
    fn from(e: ProjError) -> Self {
        PipelineError::Internal(e.to_string())
    }
}

impl From<crate::countqm::QmError> for PipelineError {
    fn from(e: crate::countqm::QmError) -> Self {
        PipelineError::Internal(e.to_string())
    }
}

impl From<io::Error> for PipelineError {
    fn from(e: io::Error) -> Self {
        PipelineError::Internal(format!("io: {e}"))
    }
}

impl From<serde_json::Error> for PipelineError {
    fn from(e: serde_json::Error) -> Self {
        PipelineError::Internal(format!("json: {e}"))
    }
}

/// Exponent schedule knobs: `n_i = base^{2i-1}`, `m_i = base^{2i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub base: u64,
    pub count: usize,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig { base: 4, count: 5 }
    }
}

/// Search and measurement radii. Every radius must be positive; upper
/// bounds keep exhaustive ball scans within memory on one core.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiiConfig {
    /// Ball radius for enumerating subgroup elements (vanishing checks,
    /// ellipticity orbits).
    pub subgroup: u32,
    /// Ball radius for the empirical defect scan.
    pub defect: u32,
    /// Largest power tested in slope and independence checks.
    pub powers: u32,
    /// Radius of the translate ball forming the projection family.
    pub projection_ball: u32,
    /// Largest radius in the projection-diameter scan; the scan runs from
    /// radius 3 (or this value if smaller) up to here and `τ_obs` must
    /// agree across the range.
    pub scan_max: u32,
    /// Group-element radius for the ellipticity orbit check.
    pub elliptic: u32,
}

impl Default for RadiiConfig {
    fn default() -> Self {
        RadiiConfig {
            subgroup: 12,
            defect: 4,
            powers: 3,
            projection_ball: 4,
            scan_max: 5,
            elliptic: 10,
        }
    }
}

/// Full run configuration. A config file is a single JSON object with
/// these fields; all are optional and default to the flagship instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Instance label copied into the certificate.
    pub name: String,
    /// Ambient free-group rank.
    pub rank: u8,
    /// Generator words of each subgroup in the malnormal collection.
    pub subgroups: Vec<Vec<String>>,
    /// Barrier neighborhood width (0 is exact in a tree).
    pub epsilon: u32,
    /// Interval threshold; `null` selects `τ_obs + 2κ + 2`.
    pub k: Option<u64>,
    /// Counting weight; the family construction pins this to 1.
    pub weight: u64,
    pub schedule: ScheduleConfig,
    pub radii: RadiiConfig,
    /// Junction words tried when planting `g0` into the pair `g1, g2`.
    pub spacers: Vec<String>,
    /// RNG seed for the bounded-generation sampler.
    pub seed: u64,
    /// Sample count for the bounded-generation product search.
    pub samples: u32,
    /// Fold count `N` for conjugate products of subgroup elements.
    pub bounded_generation_n: u32,
    /// Upper bound on the letters of any single word the run may build.
    pub word_budget: u64,
    /// Default output directory; a CLI `--out` overrides it.
    pub out_dir: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            name: "pipeline".into(),
            rank: 2,
            subgroups: vec![vec!["a".into()]],
            epsilon: 0,
            k: None,
            weight: 1,
            schedule: ScheduleConfig::default(),
            radii: RadiiConfig::default(),
            spacers: vec!["ab".into(), "ba".into(), "aab".into(), "abb".into()],
            seed: 0,
            samples: 200,
            bounded_generation_n: 3,
            word_budget: 64_000_000,
            out_dir: None,
        }
    }
}

/// Config words parsed and range-checked, ready for the stages.
#[derive(Debug, Clone)]
pub struct ValidatedConfig {
    pub subgroup_gens: Vec<Vec<Word>>,
    pub spacers: Vec<Word>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        serde_json::from_str(text).map_err(|e| PipelineError::Config(format!("parse: {e}")))
    }

    pub fn from_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks ranges and parses every word field. Radius caps are
    /// engineering limits: balls grow exponentially and the scans are
    /// exhaustive, so larger values would not finish.
    pub fn validate(&self) -> Result<ValidatedConfig, PipelineError> {
        let cfg_err = |m: String| PipelineError::Config(m);
        if !(2..=26).contains(&self.rank) {
            return Err(cfg_err(format!("rank {} outside 2..=26", self.rank)));
        }
        if self.weight != 1 {
            return Err(cfg_err(format!(
                "weight {} unsupported: the family construction counts with weight 1",
                self.weight
            )));
        }
        if self.schedule.base < 2 {
            return Err(cfg_err(format!("schedule base {} below 2", self.schedule.base)));
        }
        if self.schedule.count == 0 {
            return Err(cfg_err("schedule count must be at least 1".into()));
        }
        let radii = [
            ("subgroup", self.radii.subgroup, 24u32),
            ("defect", self.radii.defect, 6),
            ("powers", self.radii.powers, 8),
            ("projection_ball", self.radii.projection_ball, 6),
            ("scan_max", self.radii.scan_max, 8),
            ("elliptic", self.radii.elliptic, 16),
        ];
        for (key, value, cap) in radii {
            if value == 0 {
                return Err(cfg_err(format!("radius {key} must be positive")));
            }
            if value > cap {
                return Err(cfg_err(format!("radius {key}={value} exceeds supported cap {cap}")));
            }
        }
        if self.subgroups.is_empty() {
            return Err(cfg_err("at least one subgroup is required".into()));
        }
        let mut subgroup_gens = Vec::with_capacity(self.subgroups.len());
        for (i, gens) in self.subgroups.iter().enumerate() {
            if gens.is_empty() {
                return Err(cfg_err(format!("subgroup {i} has no generators")));
            }
            let mut words = Vec::with_capacity(gens.len());
            for g in gens {
                let w = Word::parse(g, self.rank)
                    .map_err(|e| cfg_err(format!("subgroup {i} generator {g:?}: {e}")))?;
                if w.is_identity() {
                    return Err(cfg_err(format!("subgroup {i} generator {g:?} is trivial")));
                }
                words.push(w);
            }
            subgroup_gens.push(words);
        }
        if self.spacers.is_empty() {
            return Err(cfg_err("at least one spacer is required".into()));
        }
        let mut spacers = Vec::with_capacity(self.spacers.len());
        for s in self.spacers.iter() {
            let w = Word::parse(s, self.rank)
                .map_err(|e| cfg_err(format!("spacer {s:?}: {e}")))?;
            if w.is_identity() {
                return Err(cfg_err(format!("spacer {s:?} is trivial")));
            }
            spacers.push(w);
        }
        if self.samples == 0 {
            return Err(cfg_err("samples must be positive".into()));
        }
        if self.word_budget == 0 {
            return Err(cfg_err("word budget must be positive".into()));
        }
        // The schedule must compute without overflow before any building.
        FamilySchedule::new(self.schedule.base, self.schedule.count)
            .and_then(|s| s.exponents())
            .map_err(|e| cfg_err(e.to_string()))?;
        Ok(ValidatedConfig { subgroup_gens, spacers })
    }
}

/// `KEY=VALUE` radius override, e.g. `scan_max=6`.
pub fn parse_radius_override(text: &str) -> Result<(String, u32), PipelineError> {
    let (key, value) = text
        .split_once('=')
        .ok_or_else(|| PipelineError::Config(format!("override {text:?} is not KEY=VALUE")))?;
    let key = key.trim();
    const KEYS: [&str; 6] =
        ["subgroup", "defect", "powers", "projection_ball", "scan_max", "elliptic"];
    if !KEYS.contains(&key) {
        return Err(PipelineError::Config(format!(
            "unknown radius {key:?}; expected one of {}",
            KEYS.join(", ")
        )));
    }
    let value: u32 = value
        .trim()
        .parse()
        .map_err(|_| PipelineError::Config(format!("radius value {value:?} is not a number")))?;
    Ok((key.to_string(), value))
}

/// Applies parsed overrides onto the config; values are range-checked by
/// the subsequent `validate`.
pub fn apply_radius_overrides(cfg: &mut PipelineConfig, overrides: &[(String, u32)]) {
    for (key, value) in overrides {
        match key.as_str() {
            "subgroup" => cfg.radii.subgroup = *value,
            "defect" => cfg.radii.defect = *value,
            "powers" => cfg.radii.powers = *value,
            "projection_ball" => cfg.radii.projection_ball = *value,
            "scan_max" => cfg.radii.scan_max = *value,
            "elliptic" => cfg.radii.elliptic = *value,
            _ => {}
        }
    }
}

/// Invocation options that live outside the config file.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    /// Automaton cache directory; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
    /// Omit wall-clock fields so reruns are byte-identical.
    pub reproducible: bool,
    pub seed_override: Option<u64>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions {
            out_dir: out_dir.into(),
            cache_dir: None,
            reproducible: false,
            seed_override: None,
        }
    }
}

/// Content-addressed store of built subgroup automata. Keys hash the rank
/// and generator list; values are the automaton JSON. Unreadable entries
/// are rebuilt and rewritten, so a stale cache can only cost time.
pub struct AutomatonCache {
    dir: PathBuf,
}

impl AutomatonCache {
    pub fn new(dir: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(dir)?;
        Ok(AutomatonCache { dir: dir.to_path_buf() })
    }

    fn key(rank: u8, gens: &[Word]) -> String {
        let mut text = format!("{rank}");
        for g in gens {
            text.push('|');
            text.push_str(&g.to_string());
        }
        let mut hasher = Sha256::new();
        hasher.update(text.as_bytes());
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            hex.push_str(&format!("{byte:02x}"));
        }
        hex
    }

    pub fn get_or_build(
        &self,
        rank: u8,
        gens: &[Word],
    ) -> Result<SubgroupAutomaton, PipelineError> {
        let path = self.dir.join(format!("automaton-{}.json", Self::key(rank, gens)));
        if let Ok(text) = fs::read_to_string(&path) {
            if let Ok(aut) = SubgroupAutomaton::from_json(&text) {
                if aut.rank() == rank {
                    return Ok(aut);
                }
            }
        }
        let aut = SubgroupAutomaton::build(rank, gens)?;
        atomic_write(&path, &aut.to_json())?;
        Ok(aut)
    }
}

/// Writes via a temp file and rename so readers never see a torn file.
fn atomic_write(path: &Path, content: &str) -> Result<(), PipelineError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct CertFamilyEntry {
    pub i: usize,
    pub f: String,
    pub len: usize,
    pub r: u32,
    pub conjugator: String,
    pub protection: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertMatrix {
    pub m: u32,
    pub entries: Vec<Vec<i64>>,
    pub diagonal: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertVanishing {
    pub exact: bool,
    pub ball_radius: u32,
    pub checked: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertConstants {
    pub kappa: u64,
    pub k: u64,
    pub tau_obs: u64,
    pub tau_stable: bool,
    pub defect: u64,
    /// Schottky growth rate as an exact rational string.
    pub l1: String,
    pub bottleneck: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertG0 {
    pub s_radius: u32,
    pub epsilon: u32,
    pub subgroup_exact: Vec<bool>,
    pub exact_all_h: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertSchottky {
    pub rank: usize,
    pub l1: String,
    pub schottky: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertScan {
    pub radius: u32,
    pub tau_obs: u64,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertAxioms {
    pub family_size: usize,
    pub kappa_min: u64,
    pub max_diameter: u64,
    pub max_crossing: u64,
    pub checked_kappa: u64,
    pub violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertElliptic {
    pub subgroup: usize,
    pub elliptic: bool,
    pub max_dp: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertBottleneck {
    pub hops3: u64,
    pub hops5: u64,
    pub stable: bool,
    pub vertices_hops3: usize,
    pub vertices_hops5: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertBoundedGen {
    pub n_fold: u32,
    pub slope: i64,
    pub empirical_defect: u64,
    pub bound: u64,
    pub m_star: u64,
    pub samples_tested: u64,
    pub max_product_estimate: String,
    pub all_bounded: bool,
}

/// The full run record: inputs, measured constants, per-stage reports,
/// the verdict, and the verbatim configuration.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub instance: String,
    pub g0: String,
    pub g: String,
    pub spacers: Vec<String>,
    pub family: Vec<CertFamilyEntry>,
    pub matrices: Vec<CertMatrix>,
    pub vanishing: BTreeMap<String, CertVanishing>,
    pub constants: CertConstants,
    pub g0_search: CertG0,
    pub schottky: CertSchottky,
    pub scans: Vec<CertScan>,
    pub axioms: CertAxioms,
    pub elliptic: Vec<CertElliptic>,
    pub bottleneck: CertBottleneck,
    pub bounded_generation: CertBoundedGen,
    pub pass: bool,
    pub failures: Vec<String>,
    pub config: PipelineConfig,
    pub versions: BTreeMap<String, String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generated_unix: Option<u64>,
}

/// What `run_pipeline` hands back to the caller.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub pass: bool,
    pub failures: Vec<String>,
    pub certificate_path: PathBuf,
    pub exit_code: i32,
}

/// Runs every stage in order and writes `certificate.json`, `defect.csv`,
/// `projections.csv`, and `matrix.csv` into the output directory. Property
/// failures are collected into the certificate and reported via exit code
/// 1; configuration and finite-index problems abort before any artifact.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    opts: &RunOptions,
) -> Result<PipelineReport, PipelineError> {
    let parsed = cfg.validate()?;
    let seed = opts.seed_override.unwrap_or(cfg.seed);
    let mut failures: Vec<String> = Vec::new();

    // Subgroup automata, cached when a cache directory is given.
    let cache = match &opts.cache_dir {
        Some(dir) => Some(AutomatonCache::new(dir)?),
        None => None,
    };
    let mut subgroups: Vec<SubgroupAutomaton> = Vec::with_capacity(parsed.subgroup_gens.len());
    for gens in &parsed.subgroup_gens {
        let aut = match &cache {
            Some(c) => c.get_or_build(cfg.rank, gens)?,
            None => SubgroupAutomaton::build(cfg.rank, gens)?,
        };
        subgroups.push(aut);
    }

    // A finite-index subgroup kills the whole statement; stop before work.
    for (i, sub) in subgroups.iter().enumerate() {
        if let Some(index) = sub.index() {
            return Err(PipelineError::FiniteIndex { subgroup: i, index });
        }
    }

    // Protected factor and contracting extension.
    let g0cert = barrier::find_g0(&subgroups, BarrierParams { epsilon: cfg.epsilon })?;
    let g0 = g0cert.g0.clone();
    if !g0cert.exact_all_h {
        failures.push("g0 search returned a factor without full protection".into());
    }
    let g = barrier::extend_to_contracting(&g0, &parsed.spacers)?;

    // Projection-diameter scans; τ_obs must be stable across radii.
    let scan_lo = cfg.radii.scan_max.min(3);
    let mut scans = Vec::new();
    for radius in scan_lo..=cfg.radii.scan_max {
        scans.push(barrier::bounded_projection_scan(&g, &subgroups, radius)?);
    }
    let tau_obs = scans.last().map(|s| s.tau_obs).unwrap_or(0);
    let tau_stable = scans.iter().all(|s| s.tau_obs == tau_obs);
    if !tau_stable {
        let seen: Vec<String> =
            scans.iter().map(|s| format!("r{}→{}", s.radius, s.tau_obs)).collect();
        failures.push(format!("τ_obs not stable across scan radii: {}", seen.join(", ")));
    }

    // Projection family over the translate ball; axioms at the least κ.
    let base_axis = Axis::of(&g)?;
    let proj_family = ProjFamily::translate_ball(&base_axis, cfg.radii.projection_ball)?;
    let axioms = projcx::check_axioms(&proj_family, None)?;
    if !axioms.violations.is_empty() {
        failures.push(format!(
            "{} projection-axiom violations at κ={}",
            axioms.violations.len(),
            axioms.checked_kappa
        ));
    }
    let kappa = axioms.kappa_min;
    let k = cfg.k.unwrap_or(tau_obs + 2 * kappa + 2);
    let proj_cfg = ProjConfig::new(kappa, k)
        .map_err(|e| PipelineError::Config(format!("threshold k={k} with κ={kappa}: {e}")))?;

    // Subgroup ellipticity on the projection complex.
    let mut elliptic_entries = Vec::with_capacity(subgroups.len());
    for (i, sub) in subgroups.iter().enumerate() {
        let rep =
            projcx::elliptic_check(sub, &base_axis, &proj_family, &proj_cfg, cfg.radii.elliptic)?;
        if !rep.elliptic {
            failures.push(format!(
                "subgroup {i} not elliptic: orbit projection distance reaches {}",
                rep.max_dp
            ));
        }
        elliptic_entries.push(CertElliptic { subgroup: i, elliptic: rep.elliptic, max_dp: rep.max_dp });
    }

    // Quasi-tree bottleneck, stable between hop limits 3 and 5.
    let ball3 = projcx::pk_ball(&base_axis, 3, &proj_family, &proj_cfg)?;
    let ball5 = projcx::pk_ball(&base_axis, 5, &proj_family, &proj_cfg)?;
    let bn3 = projcx::bottleneck_constant(&ball3.adj)?;
    let bn5 = projcx::bottleneck_constant(&ball5.adj)?;
    let bn_stable = bn3.delta == bn5.delta;
    if !bn_stable {
        failures.push(format!(
            "bottleneck constant drifts with hop limit: {} at 3 hops, {} at 5",
            bn3.delta, bn5.delta
        ));
    }
    if bn5.delta > 2 {
        failures.push(format!("bottleneck constant {} exceeds the quasi-tree bound 2", bn5.delta));
    }

    // Family construction on the planted pair.
    let pair = family::planted_pair(&g0, &parsed.spacers)?;
    let schottky = family::schottky_certificate(&pair.g1, &pair.g2, 1)?;
    if !schottky.schottky {
        failures.push("pair growth certificate failed: joint ping-pong rate not positive".into());
    }
    let sched = FamilySchedule::new(cfg.schedule.base, cfg.schedule.count)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let exps = sched.exponents().map_err(|e| PipelineError::Config(e.to_string()))?;
    if let Some(&(n_last, m_last)) = exps.last() {
        let raw = 2u128
            * (n_last as u128 * pair.g1.len() as u128 + m_last as u128 * pair.g2.len() as u128);
        if raw > cfg.word_budget as u128 {
            return Err(PipelineError::Config(format!(
                "schedule builds a {raw}-letter word; budget is {}",
                cfg.word_budget
            )));
        }
    }
    let mut members = family::make_family(&pair, &sched)?;
    for i in 0..members.len() {
        let params = ChooseRParams {
            m_test: cfg.radii.powers,
            protection: Some(g0.clone()),
            ..ChooseRParams::default()
        };
        let r = family::choose_r(i, &members, &params)?;
        members[i].r = r;
    }
    family::attach_protection(&mut members, &g0)?;
    for member in &members {
        if member.protection_word.is_none() {
            failures.push(format!("member {} lost its protected factor", member.index));
        }
        let longest = member.f.len() as u128
            * member.r as u128
            * cfg.radii.powers.max(3) as u128;
        if longest > cfg.word_budget as u128 {
            return Err(PipelineError::Config(format!(
                "power checks on member {} need {longest} letters; budget is {}",
                member.index, cfg.word_budget
            )));
        }
    }

    // Property suite; a failed item is recorded, not fatal.
    let suite_radii = SuiteRadii { powers: cfg.radii.powers, subgroup: cfg.radii.subgroup };
    let suite = match family::property_suite(&members, &subgroups, &suite_radii) {
        Ok(s) => Some(s),
        Err(FamilyError::ItemFailed { item, witness }) => {
            failures.push(format!("property suite item {item} failed: {witness}"));
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut vanishing = BTreeMap::new();
    if let Some(suite) = &suite {
        for flag in &suite.vanishing {
            let key = cfg.subgroups[flag.subgroup].join(",");
            if !flag.exact {
                failures.push(format!(
                    "vanishing on subgroup ⟨{key}⟩ is only sampled, not exact"
                ));
            }
            vanishing.insert(
                key,
                CertVanishing {
                    exact: flag.exact,
                    ball_radius: flag.ball_radius,
                    checked: flag.checked,
                },
            );
        }
    }

    // Independence matrices for the tested powers.
    let mut matrices = Vec::new();
    for m in 1..=cfg.radii.powers.max(3).min(3) {
        let cert = family::independence_matrix(&members, m)?;
        if !cert.is_diagonal() {
            failures.push(format!("independence matrix at power {m} is not diagonal"));
        }
        matrices.push(CertMatrix { m, entries: cert.matrix.clone(), diagonal: cert.is_diagonal() });
    }

    // Bounded-generation obstruction on the first member.
    let bg_params = BoundedGenParams {
        n_fold: cfg.bounded_generation_n,
        radius: cfg.radii.projection_ball,
        seed,
        samples: cfg.samples,
        ..BoundedGenParams::default()
    };
    let bg = family::bounded_generation_report(&members[0], &subgroups, &bg_params)?;
    if !bg.all_bounded {
        failures.push("a sampled bounded product exceeded the defect bound".into());
    }
    if bg.m_star.saturating_mul(bg.slope.unsigned_abs()) <= bg.bound {
        failures.push("no power escapes the bounded-generation bound".into());
    }

    // Side tables.
    fs::create_dir_all(&opts.out_dir)?;
    write_defect_csv(&opts.out_dir, &members[0], cfg.radii.defect)?;
    write_projections_csv(&opts.out_dir, &scans)?;
    write_matrix_csv(&opts.out_dir, &matrices)?;

    // The certificate itself.
    let pass = failures.is_empty();
    let mut versions = BTreeMap::new();
    versions.insert("freeqm".to_string(), env!("CARGO_PKG_VERSION").to_string());
    let certificate = Certificate {
        instance: cfg.name.clone(),
        g0: g0.to_string(),
        g: g.to_string(),
        spacers: cfg.spacers.clone(),
        family: members
            .iter()
            .map(|m| CertFamilyEntry {
                i: m.index,
                f: m.f.to_string(),
                len: m.f.len(),
                r: m.r,
                conjugator: m.conjugator.to_string(),
                protection: m.protection_word.as_ref().map(|w| w.to_string()),
            })
            .collect(),
        matrices,
        vanishing,
        constants: CertConstants {
            kappa,
            k,
            tau_obs,
            tau_stable,
            defect: bg.empirical_defect,
            l1: schottky.l1.to_string(),
            bottleneck: bn5.delta,
        },
        g0_search: CertG0 {
            s_radius: g0cert.s_radius,
            epsilon: g0cert.epsilon,
            subgroup_exact: g0cert.subgroup_exact.clone(),
            exact_all_h: g0cert.exact_all_h,
        },
        schottky: CertSchottky {
            rank: schottky.rank,
            l1: schottky.l1.to_string(),
            schottky: schottky.schottky,
        },
        scans: scans
            .iter()
            .map(|s| CertScan { radius: s.radius, tau_obs: s.tau_obs, rows: s.rows.len() })
            .collect(),
        axioms: CertAxioms {
            family_size: axioms.family_size,
            kappa_min: axioms.kappa_min,
            max_diameter: axioms.max_diameter,
            max_crossing: axioms.max_crossing,
            checked_kappa: axioms.checked_kappa,
            violations: axioms.violations.len(),
        },
        elliptic: elliptic_entries,
        bottleneck: CertBottleneck {
            hops3: bn3.delta,
            hops5: bn5.delta,
            stable: bn_stable,
            vertices_hops3: ball3.axes.len(),
            vertices_hops5: ball5.axes.len(),
        },
        bounded_generation: CertBoundedGen {
            n_fold: bg.n_fold,
            slope: bg.slope,
            empirical_defect: bg.empirical_defect,
            bound: bg.bound,
            m_star: bg.m_star,
            samples_tested: bg.samples_tested,
            max_product_estimate: bg.max_product_estimate.to_string(),
            all_bounded: bg.all_bounded,
        },
        pass,
        failures: failures.clone(),
        config: cfg.clone(),
        versions,
        seed,
        generated_unix: if opts.reproducible {
            None
        } else {
            Some(SystemTime::now().duration_since(UNIX_EPOCH).unwrap_or_default().as_secs())
        },
    };
    let mut json = serde_json::to_string_pretty(&certificate)?;
    json.push('\n');
    let certificate_path = opts.out_dir.join("certificate.json");
    atomic_write(&certificate_path, &json)?;

    Ok(PipelineReport {
        pass,
        failures,
        certificate_path,
        exit_code: if pass { 0 } else { EXIT_FAILED },
    })
}

/// Empirical defect rows for the first member: the short-ball scan plus
/// the conjugation probes the class-function bound telescopes through.
fn write_defect_csv(
    out_dir: &Path,
    member: &FamilyMember,
    scan_radius: u32,
) -> Result<(), PipelineError> {
    let spec = member.qm_spec()?;
    let mut csv = String::from("kind,left,right,value\n");
    let scan = defect_scan(&spec, scan_radius)?;
    let mut rows = 0usize;
    for w in &scan.witnesses {
        // Cap witness rows: a zero-defect scan "witnesses" every pair.
        if rows >= 200 {
            break;
        }
        csv.push_str(&format!("scan,{},{},{}\n", w.left, w.right, w.value));
        rows += 1;
    }
    for m in 1..=3u32 {
        let fm = member.power_word(m);
        for t in ball(member.f.rank(), 2)? {
            let t_inv = t.inverse();
            let tail = fm.concat(&t_inv)?;
            let v = defect_of_pair(&spec, &t, &tail)?;
            csv.push_str(&format!("probe,{t},f^{m}·{},{v}\n", t_inv));
        }
    }
    atomic_write(&out_dir.join("defect.csv"), &csv)
}

/// One row per scanned subgroup element: its translate and the projected
/// diameter, for every scan radius.
fn write_projections_csv(
    out_dir: &Path,
    scans: &[barrier::ScanReport],
) -> Result<(), PipelineError> {
    let mut csv = String::from("radius,element,translate,diameter\n");
    for scan in scans {
        for row in &scan.rows {
            csv.push_str(&format!(
                "{},{},{},{}\n",
                scan.radius, row.h, row.translate, row.diameter
            ));
        }
    }
    atomic_write(&out_dir.join("projections.csv"), &csv)
}

/// Independence matrix entries, flat: `m,row,col,value`.
fn write_matrix_csv(out_dir: &Path, matrices: &[CertMatrix]) -> Result<(), PipelineError> {
    let mut csv = String::from("m,row,col,value\n");
    for mat in matrices {
        for (i, row) in mat.entries.iter().enumerate() {
            for (j, value) in row.iter().enumerate() {
                csv.push_str(&format!("{},{},{},{}\n", mat.m, i, j, value));
            }
        }
    }
    atomic_write(&out_dir.join("matrix.csv"), &csv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config() -> PipelineConfig {
        PipelineConfig {
            name: "tiny".into(),
            schedule: ScheduleConfig { base: 2, count: 2 },
            radii: RadiiConfig {
                subgroup: 8,
                defect: 2,
                powers: 3,
                projection_ball: 2,
                scan_max: 3,
                elliptic: 6,
            },
            samples: 20,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn default_config_round_trips_and_validates() {
        let cfg = PipelineConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        let back = PipelineConfig::from_json(&json).unwrap();
        assert_eq!(cfg, back);
        cfg.validate().unwrap();
    }

    #[test]
    fn empty_json_object_is_the_default_config() {
        let cfg = PipelineConfig::from_json("{}").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = PipelineConfig::from_json(r#"{"rnak": 2}"#).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn validation_rejects_bad_ranges() {
        let mut cfg = PipelineConfig::default();
        cfg.rank = 1;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), EXIT_CONFIG);

        let mut cfg = PipelineConfig::default();
        cfg.weight = 2;
        assert!(matches!(cfg.validate().unwrap_err(), PipelineError::Config(_)));

        let mut cfg = PipelineConfig::default();
        cfg.radii.scan_max = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.radii.projection_ball = 99;
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.subgroups = vec![vec!["a?".into()]];
        assert!(cfg.validate().is_err());

        let mut cfg = PipelineConfig::default();
        cfg.schedule.count = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn radius_overrides_parse_and_apply() {
        let (key, value) = parse_radius_override("scan_max=4").unwrap();
        assert_eq!((key.as_str(), value), ("scan_max", 4));
        assert!(parse_radius_override("scanmax=4").is_err());
        assert!(parse_radius_override("scan_max").is_err());
        assert!(parse_radius_override("scan_max=four").is_err());

        let mut cfg = PipelineConfig::default();
        apply_radius_overrides(&mut cfg, &[("scan_max".into(), 4), ("defect".into(), 3)]);
        assert_eq!(cfg.radii.scan_max, 4);
        assert_eq!(cfg.radii.defect, 3);
    }

    #[test]
    fn finite_index_subgroup_aborts_with_exit_2() {
        let mut cfg = tiny_config();
        cfg.subgroups = vec![vec!["a".into(), "b".into()]];
        let dir = tempfile::tempdir().unwrap();
        let err = run_pipeline(&cfg, &RunOptions::new(dir.path())).unwrap_err();
        assert!(matches!(err, PipelineError::FiniteIndex { subgroup: 0, index: 1 }));
        assert_eq!(err.exit_code(), EXIT_FINITE_INDEX);
        assert!(err.to_string().contains("H²_b(G,H;ℝ)=0"));
    }

    #[test]
    fn word_budget_rejects_oversized_schedules() {
        let mut cfg = tiny_config();
        cfg.word_budget = 100;
        let dir = tempfile::tempdir().unwrap();
        let err = run_pipeline(&cfg, &RunOptions::new(dir.path())).unwrap_err();
        assert_eq!(err.exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn tiny_run_passes_and_writes_artifacts() {
        let cfg = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let report = run_pipeline(&cfg, &RunOptions::new(dir.path())).unwrap();
        assert!(report.pass, "failures: {:?}", report.failures);
        assert_eq!(report.exit_code, 0);

        let text = fs::read_to_string(&report.certificate_path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["instance"], "tiny");
        assert_eq!(value["g0"], "b");
        assert_eq!(value["family"].as_array().unwrap().len(), 2);
        assert_eq!(value["pass"], true);
        // Fresh runs carry a timestamp; reproducible runs must not.
        assert!(value.get("generated_unix").is_some());
        for entry in value["matrices"].as_array().unwrap() {
            assert_eq!(entry["diagonal"], true);
        }
        for name in ["defect.csv", "projections.csv", "matrix.csv"] {
            let body = fs::read_to_string(dir.path().join(name)).unwrap();
            assert!(body.lines().count() > 1, "{name} should have data rows");
        }
    }

    #[test]
    fn reproducible_runs_are_byte_identical() {
        let cfg = tiny_config();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut opts_a = RunOptions::new(dir_a.path());
        opts_a.reproducible = true;
        let mut opts_b = RunOptions::new(dir_b.path());
        opts_b.reproducible = true;
        let rep_a = run_pipeline(&cfg, &opts_a).unwrap();
        let rep_b = run_pipeline(&cfg, &opts_b).unwrap();
        let text_a = fs::read_to_string(&rep_a.certificate_path).unwrap();
        let text_b = fs::read_to_string(&rep_b.certificate_path).unwrap();
        assert_eq!(text_a, text_b);
        assert!(!text_a.contains("generated_unix"));
    }

    #[test]
    fn cache_reuse_changes_nothing() {
        let cfg = tiny_config();
        let cache = tempfile::tempdir().unwrap();
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let dir_c = tempfile::tempdir().unwrap();

        let mut opts_a = RunOptions::new(dir_a.path());
        opts_a.reproducible = true;
        let rep_a = run_pipeline(&cfg, &opts_a).unwrap();

        // Cold cache, then warm cache: all three certificates identical.
        let mut opts_b = RunOptions::new(dir_b.path());
        opts_b.reproducible = true;
        opts_b.cache_dir = Some(cache.path().to_path_buf());
        let rep_b = run_pipeline(&cfg, &opts_b).unwrap();
        let cached: Vec<_> = fs::read_dir(cache.path()).unwrap().collect();
        assert!(!cached.is_empty(), "cache should hold the built automaton");

        let mut opts_c = RunOptions::new(dir_c.path());
        opts_c.reproducible = true;
        opts_c.cache_dir = Some(cache.path().to_path_buf());
        let rep_c = run_pipeline(&cfg, &opts_c).unwrap();

        let a = fs::read_to_string(&rep_a.certificate_path).unwrap();
        let b = fs::read_to_string(&rep_b.certificate_path).unwrap();
        let c = fs::read_to_string(&rep_c.certificate_path).unwrap();
        assert_eq!(a, b);
        assert_eq!(b, c);
    }

    #[test]
    fn corrupt_cache_entries_are_rebuilt() {
        let cache_dir = tempfile::tempdir().unwrap();
        let cache = AutomatonCache::new(cache_dir.path()).unwrap();
        let gens = vec![Word::parse("a", 2).unwrap()];
        let first = cache.get_or_build(2, &gens).unwrap();
        // Clobber every cache file; the rebuild must still succeed.
        for entry in fs::read_dir(cache_dir.path()).unwrap() {
            fs::write(entry.unwrap().path(), "not json").unwrap();
        }
        let second = cache.get_or_build(2, &gens).unwrap();
        assert_eq!(first.vertex_count(), second.vertex_count());
        assert!(second.contains(&Word::parse("aaa", 2).unwrap()).unwrap());
    }

    #[test]
    fn seed_override_is_recorded() {
        let cfg = tiny_config();
        let dir = tempfile::tempdir().unwrap();
        let mut opts = RunOptions::new(dir.path());
        opts.seed_override = Some(17);
        let report = run_pipeline(&cfg, &opts).unwrap();
        let text = fs::read_to_string(&report.certificate_path).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["seed"], 17);
        assert_eq!(value["config"]["seed"], 0);
    }
}
