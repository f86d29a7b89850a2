//! `freeqm` command line: the full certificate pipeline plus direct access
//! to each measurement stage (counting functions, subgroup automata,
//! barrier scans, projection-complex probes, family construction).
//!
//! Exit codes: 0 success, 1 a certificate item failed or an internal error,
//! 2 a subgroup has finite index (the statement is vacuous), 64 bad
//! configuration or usage.

use std::fs;
use std::path::PathBuf;
use std::process::exit;

use clap::{Args, Parser, Subcommand};

use freeqm::barrier::{self, BarrierParams};
use freeqm::countqm::{c_value, defect_scan, h_value, homogenize, QmSpec};
use freeqm::family::{
    self, BoundedGenParams, ChooseRParams, FamilyError, FamilyMember, FamilySchedule, SuiteRadii,
};
use freeqm::pipeline::{
    apply_radius_overrides, parse_radius_override, run_pipeline, PipelineConfig, PipelineError,
    RunOptions,
};
use freeqm::projcx::{self, ProjConfig, ProjFamily};
use freeqm::stallings::SubgroupAutomaton;
use freeqm::word::{Axis, Word};

#[derive(Parser)]
#[command(name = "freeqm", version, about = "Counting quasimorphism certificates on free groups")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the end-to-end certificate pipeline.
    Pipeline {
        #[command(subcommand)]
        cmd: PipelineCmd,
    },
    /// Evaluate counting functions directly.
    Qm {
        #[command(subcommand)]
        cmd: QmCmd,
    },
    /// Build and query subgroup automata.
    Subgroup {
        #[command(subcommand)]
        cmd: SubgroupCmd,
    },
    /// Search for protected factors and scan projection diameters.
    Barrier {
        #[command(subcommand)]
        cmd: BarrierCmd,
    },
    /// Probe the projection complex of an axis family.
    Projcx {
        #[command(subcommand)]
        cmd: ProjcxCmd,
    },
    /// Construct and check the exponent family.
    Family {
        #[command(subcommand)]
        cmd: FamilyCmd,
    },
}

#[derive(Subcommand)]
enum PipelineCmd {
    /// Execute every stage and write certificate.json plus CSV tables.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; omitted means the flagship defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (overrides the config's out_dir; default "out").
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override the config's RNG seed.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    /// Omit wall-clock fields so reruns are byte-identical.
    #[arg(long)]
    reproducible: bool,
    /// Cache directory for built subgroup automata.
    #[arg(long, value_name = "DIR")]
    cache: Option<PathBuf>,
    /// Radius override as KEY=VALUE; repeatable. Keys: subgroup, defect,
    /// powers, projection_ball, scan_max, elliptic.
    #[arg(long = "radius-override", value_name = "KEY=VAL")]
    radius_override: Vec<String>,
}

#[derive(Subcommand)]
enum QmCmd {
    /// Count pattern occurrences: raw count and the antisymmetrized value.
    Eval(QmEvalArgs),
    /// Scan a ball for the largest empirical defect.
    Defect(QmDefectArgs),
    /// Homogenized value of the counting function on powers.
    Homog(QmHomogArgs),
}

#[derive(Args)]
struct QmEvalArgs {
    /// Pattern word w of the counting function.
    #[arg(long)]
    pattern: String,
    /// Element the function is evaluated on.
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    weight: u64,
    #[arg(long, default_value_t = 2)]
    rank: u8,
}

#[derive(Args)]
struct QmDefectArgs {
    #[arg(long)]
    pattern: String,
    #[arg(long, default_value_t = 1)]
    weight: u64,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Ball radius of the exhaustive pair scan.
    #[arg(long, default_value_t = 3)]
    radius: u32,
}

#[derive(Args)]
struct QmHomogArgs {
    #[arg(long)]
    pattern: String,
    #[arg(long)]
    target: String,
    #[arg(long, default_value_t = 1)]
    weight: u64,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Power used for the estimate h(g^n)/n.
    #[arg(long, default_value_t = 8)]
    n: u32,
    /// Defect bound for the error term; measured at radius 2 when omitted.
    #[arg(long)]
    defect_bound: Option<u64>,
}

#[derive(Subcommand)]
enum SubgroupCmd {
    /// Fold the generators into a core automaton and print its JSON.
    Build(SubgroupArgs),
    /// Print the index in the ambient free group, or "infinite".
    Index(SubgroupArgs),
    /// Decide membership of a word.
    Member(SubgroupMemberArgs),
    /// List subgroup elements up to a graph-metric radius.
    Enum(SubgroupEnumArgs),
}

#[derive(Args)]
struct SubgroupArgs {
    /// Comma-separated generator words, e.g. "aa,b,abA".
    #[arg(long)]
    gens: String,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Write the automaton JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SubgroupMemberArgs {
    #[arg(long)]
    gens: String,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Word to test.
    #[arg(long)]
    word: String,
}

#[derive(Args)]
struct SubgroupEnumArgs {
    #[arg(long)]
    gens: String,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    #[arg(long, default_value_t = 4)]
    radius: u32,
}

#[derive(Subcommand)]
enum BarrierCmd {
    /// Projection diameters of subgroup translates onto an element's axis.
    Scan(BarrierScanArgs),
    /// Shortlex-least factor avoiding every thickened subgroup.
    G0(BarrierG0Args),
}

#[derive(Args)]
struct BarrierScanArgs {
    /// The element whose axis receives the projections.
    #[arg(long)]
    element: String,
    /// Subgroup as comma-separated generators; repeatable.
    #[arg(long = "subgroup", required = true)]
    subgroups: Vec<String>,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    #[arg(long, default_value_t = 4)]
    radius: u32,
    /// How many of the largest rows to print.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct BarrierG0Args {
    #[arg(long = "subgroup", required = true)]
    subgroups: Vec<String>,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Barrier neighborhood width.
    #[arg(long, default_value_t = 0)]
    epsilon: u32,
}

#[derive(Subcommand)]
enum ProjcxCmd {
    /// Measure the projection axioms over a translate-ball family.
    Axioms(ProjcxAxiomsArgs),
    /// Interval structure between two axes: qualifying members in order.
    Interval(ProjcxIntervalArgs),
    /// Bounded-hop ball of the projection graph, as JSON.
    Ball(ProjcxBallArgs),
    /// Bottleneck constant of the bounded-hop ball.
    Bottleneck(ProjcxBallArgs),
    /// Whether a subgroup orbit stays within one interval step.
    Elliptic(ProjcxEllipticArgs),
    /// Count ball elements displacing two basepoints by at most L.
    Wpd(ProjcxWpdArgs),
}

#[derive(Args)]
struct ProjcxFamilyArgs {
    /// Element whose axis translates form the family.
    #[arg(long)]
    base: String,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Translate-ball radius of the family.
    #[arg(long, default_value_t = 3)]
    radius: u32,
    /// Distance threshold κ; measured (least) when omitted.
    #[arg(long)]
    kappa: Option<u64>,
    /// Interval threshold K; 2κ+2 when omitted.
    #[arg(long)]
    k: Option<u64>,
}

#[derive(Args)]
struct ProjcxAxiomsArgs {
    #[command(flatten)]
    family: ProjcxFamilyArgs,
}

#[derive(Args)]
struct ProjcxIntervalArgs {
    #[command(flatten)]
    family: ProjcxFamilyArgs,
    /// Element whose axis starts the interval.
    #[arg(long)]
    v: String,
    /// Element whose axis ends the interval.
    #[arg(long)]
    w: String,
}

#[derive(Args)]
struct ProjcxBallArgs {
    #[command(flatten)]
    family: ProjcxFamilyArgs,
    #[arg(long, default_value_t = 3)]
    hops: u32,
    /// Write the graph JSON here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProjcxEllipticArgs {
    #[command(flatten)]
    family: ProjcxFamilyArgs,
    /// Subgroup as comma-separated generators.
    #[arg(long)]
    subgroup: String,
    /// Orbit radius: subgroup elements up to this graph distance.
    #[arg(long, default_value_t = 6)]
    orbit: u32,
}

#[derive(Args)]
struct ProjcxWpdArgs {
    /// First basepoint (a tree vertex, as a word).
    #[arg(long)]
    x: String,
    /// Second basepoint.
    #[arg(long)]
    y: String,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Maximum allowed displacement of both basepoints.
    #[arg(long, default_value_t = 1)]
    l: u64,
    /// Ball radius to search for displacing elements.
    #[arg(long, default_value_t = 1)]
    r: u32,
}

#[derive(Subcommand)]
enum FamilyCmd {
    /// Plant g0 into a pair and build the exponent family.
    Make(FamilyMakeArgs),
    /// Run the property suite over the family.
    Verify(FamilyVerifyArgs),
    /// Print the independence matrix at a given power.
    Matrix(FamilyMatrixArgs),
}

#[derive(Args)]
struct FamilyBuildArgs {
    /// The protected factor each member keeps as a subword.
    #[arg(long)]
    g0: String,
    #[arg(long, default_value_t = 2)]
    rank: u8,
    /// Comma-separated junction words tried while planting.
    #[arg(long, default_value = "ab,ba,aab,abb")]
    spacers: String,
    #[arg(long, default_value_t = 4)]
    base: u64,
    #[arg(long, default_value_t = 3)]
    count: usize,
    /// Largest power tested when choosing each exponent r.
    #[arg(long, default_value_t = 3)]
    powers: u32,
}

#[derive(Args)]
struct FamilyMakeArgs {
    #[command(flatten)]
    build: FamilyBuildArgs,
}

#[derive(Args)]
struct FamilyVerifyArgs {
    #[command(flatten)]
    build: FamilyBuildArgs,
    /// Subgroup the functions must vanish on; repeatable.
    #[arg(long = "subgroup", required = true)]
    subgroups: Vec<String>,
    /// Ball radius for the vanishing sweep.
    #[arg(long, default_value_t = 8)]
    subgroup_radius: u32,
}

#[derive(Args)]
struct FamilyMatrixArgs {
    #[command(flatten)]
    build: FamilyBuildArgs,
    /// Power the matrix is evaluated at.
    #[arg(long, default_value_t = 1)]
    m: u32,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 64 } else { 0 };
            let _ = e.print();
            exit(code);
        }
    };
    match run(cli) {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code());
        }
    }
}

fn run(cli: Cli) -> Result<i32, PipelineError> {
    match cli.cmd {
        Cmd::Pipeline { cmd: PipelineCmd::Run(args) } => cmd_pipeline_run(args),
        Cmd::Qm { cmd } => match cmd {
            QmCmd::Eval(args) => cmd_qm_eval(args),
            QmCmd::Defect(args) => cmd_qm_defect(args),
            QmCmd::Homog(args) => cmd_qm_homog(args),
        },
        Cmd::Subgroup { cmd } => match cmd {
            SubgroupCmd::Build(args) => cmd_subgroup_build(args),
            SubgroupCmd::Index(args) => cmd_subgroup_index(args),
            SubgroupCmd::Member(args) => cmd_subgroup_member(args),
            SubgroupCmd::Enum(args) => cmd_subgroup_enum(args),
        },
        Cmd::Barrier { cmd } => match cmd {
            BarrierCmd::Scan(args) => cmd_barrier_scan(args),
            BarrierCmd::G0(args) => cmd_barrier_g0(args),
        },
        Cmd::Projcx { cmd } => match cmd {
            ProjcxCmd::Axioms(args) => cmd_projcx_axioms(args),
            ProjcxCmd::Interval(args) => cmd_projcx_interval(args),
            ProjcxCmd::Ball(args) => cmd_projcx_ball(args, false),
            ProjcxCmd::Bottleneck(args) => cmd_projcx_ball(args, true),
            ProjcxCmd::Elliptic(args) => cmd_projcx_elliptic(args),
            ProjcxCmd::Wpd(args) => cmd_projcx_wpd(args),
        },
        Cmd::Family { cmd } => match cmd {
            FamilyCmd::Make(args) => cmd_family_make(args),
            FamilyCmd::Verify(args) => cmd_family_verify(args),
            FamilyCmd::Matrix(args) => cmd_family_matrix(args),
        },
    }
}

/// Words typed on the command line are usage input: parse errors exit 64.
fn parse_word(text: &str, rank: u8) -> Result<Word, PipelineError> {
    Word::parse(text, rank).map_err(|e| PipelineError::Config(format!("word {text:?}: {e}")))
}

fn parse_gens(csv: &str, rank: u8) -> Result<Vec<Word>, PipelineError> {
    let mut gens = Vec::new();
    for part in csv.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        gens.push(parse_word(part, rank)?);
    }
    if gens.is_empty() {
        return Err(PipelineError::Config(format!("no generators in {csv:?}")));
    }
    Ok(gens)
}

fn build_subgroup(csv: &str, rank: u8) -> Result<SubgroupAutomaton, PipelineError> {
    let gens = parse_gens(csv, rank)?;
    SubgroupAutomaton::build(rank, &gens)
        .map_err(|e| PipelineError::Config(format!("subgroup {csv:?}: {e}")))
}

/// Identity renders as "1" so table rows never go blank.
fn show(w: &Word) -> String {
    if w.is_identity() {
        "1".to_string()
    } else {
        w.to_string()
    }
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<(), PipelineError> {
    match out {
        Some(path) => {
            fs::write(path, text)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_pipeline_run(args: RunArgs) -> Result<i32, PipelineError> {
    let mut cfg = match &args.config {
        Some(path) => PipelineConfig::from_file(path)?,
        None => PipelineConfig::default(),
    };
    let overrides: Vec<(String, u32)> = args
        .radius_override
        .iter()
        .map(|s| parse_radius_override(s))
        .collect::<Result<_, _>>()?;
    apply_radius_overrides(&mut cfg, &overrides);
    let out_dir = args
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions {
        out_dir,
        cache_dir: args.cache.clone(),
        reproducible: args.reproducible,
        seed_override: args.seed,
    };
    let report = run_pipeline(&cfg, &opts)?;
    if report.pass {
        println!("pass: certificate at {}", report.certificate_path.display());
    } else {
        println!(
            "failed ({} item{}): certificate at {}",
            report.failures.len(),
            if report.failures.len() == 1 { "" } else { "s" },
            report.certificate_path.display()
        );
        for f in &report.failures {
            println!("  - {f}");
        }
    }
    Ok(report.exit_code)
}

fn qm_spec(pattern: &str, weight: u64, rank: u8) -> Result<QmSpec, PipelineError> {
    let w = parse_word(pattern, rank)?;
    QmSpec::new(w, weight).map_err(|e| PipelineError::Config(format!("pattern: {e}")))
}

fn cmd_qm_eval(args: QmEvalArgs) -> Result<i32, PipelineError> {
    let spec = qm_spec(&args.pattern, args.weight, args.rank)?;
    let g = parse_word(&args.target, args.rank)?;
    println!("c = {}", c_value(&spec, &g));
    println!("h = {}", h_value(&spec, &g));
    Ok(0)
}

fn cmd_qm_defect(args: QmDefectArgs) -> Result<i32, PipelineError> {
    let spec = qm_spec(&args.pattern, args.weight, args.rank)?;
    let scan = defect_scan(&spec, args.radius)?;
    println!("radius = {}", scan.radius);
    println!("defect = {}", scan.max);
    for w in scan.witnesses.iter().take(5) {
        println!("  |h({}·{}) - h({}) - h({})| = {}", show(&w.left), show(&w.right), show(&w.left), show(&w.right), w.value);
    }
    Ok(0)
}

fn cmd_qm_homog(args: QmHomogArgs) -> Result<i32, PipelineError> {
    let spec = qm_spec(&args.pattern, args.weight, args.rank)?;
    let g = parse_word(&args.target, args.rank)?;
    let bound = match args.defect_bound {
        Some(b) => b,
        None => defect_scan(&spec, 2)?.max,
    };
    let est = homogenize(&spec, &g, args.n, bound)?;
    println!("estimate = {}", est.value);
    println!("error_bound = {}", est.error_bound);
    println!("n = {}", est.n_used);
    Ok(0)
}

fn cmd_subgroup_build(args: SubgroupArgs) -> Result<i32, PipelineError> {
    let aut = build_subgroup(&args.gens, args.rank)?;
    write_or_print(&args.out, &aut.to_json())?;
    Ok(0)
}

fn cmd_subgroup_index(args: SubgroupArgs) -> Result<i32, PipelineError> {
    let aut = build_subgroup(&args.gens, args.rank)?;
    match aut.index() {
        Some(index) => println!("index: {index}"),
        None => println!("index: infinite"),
    }
    Ok(0)
}

fn cmd_subgroup_member(args: SubgroupMemberArgs) -> Result<i32, PipelineError> {
    let aut = build_subgroup(&args.gens, args.rank)?;
    let w = parse_word(&args.word, args.rank)?;
    println!("{}", aut.contains(&w)?);
    Ok(0)
}

fn cmd_subgroup_enum(args: SubgroupEnumArgs) -> Result<i32, PipelineError> {
    let aut = build_subgroup(&args.gens, args.rank)?;
    for w in aut.enumerate(args.radius)? {
        println!("{}", show(&w));
    }
    Ok(0)
}

fn cmd_barrier_scan(args: BarrierScanArgs) -> Result<i32, PipelineError> {
    let g = parse_word(&args.element, args.rank)?;
    let subgroups: Vec<SubgroupAutomaton> = args
        .subgroups
        .iter()
        .map(|csv| build_subgroup(csv, args.rank))
        .collect::<Result<_, _>>()?;
    let scan = barrier::bounded_projection_scan(&g, &subgroups, args.radius)?;
    println!("radius = {}", scan.radius);
    println!("tau_obs = {}", scan.tau_obs);
    let mut rows = scan.rows.clone();
    rows.sort_by(|a, b| b.diameter.cmp(&a.diameter));
    for row in rows.iter().take(args.top) {
        println!("  h = {:<12} translate = {:<16} diameter = {}", show(&row.h), show(&row.translate), row.diameter);
    }
    Ok(0)
}

fn cmd_barrier_g0(args: BarrierG0Args) -> Result<i32, PipelineError> {
    let subgroups: Vec<SubgroupAutomaton> = args
        .subgroups
        .iter()
        .map(|csv| build_subgroup(csv, args.rank))
        .collect::<Result<_, _>>()?;
    let cert = barrier::find_g0(&subgroups, BarrierParams { epsilon: args.epsilon })?;
    println!("g0 = {}", show(&cert.g0));
    println!("s_radius = {}", cert.s_radius);
    println!("exact_all_h = {}", cert.exact_all_h);
    for (i, exact) in cert.subgroup_exact.iter().enumerate() {
        println!("  subgroup {i}: exact = {exact}");
    }
    Ok(0)
}

/// Family, thresholds: measured κ when unset; K defaults to 2κ+2.
fn proj_setup(args: &ProjcxFamilyArgs) -> Result<(Axis, ProjFamily, ProjConfig), PipelineError> {
    let base = parse_word(&args.base, args.rank)?;
    let axis = Axis::of(&base)
        .map_err(|e| PipelineError::Config(format!("base {:?}: {e}", args.base)))?;
    let fam = ProjFamily::translate_ball(&axis, args.radius)?;
    let report = projcx::check_axioms(&fam, None)?;
    let kappa = args.kappa.unwrap_or(report.kappa_min);
    let k = args.k.unwrap_or(2 * kappa + 2);
    let cfg = ProjConfig::new(kappa, k)
        .map_err(|e| PipelineError::Config(format!("thresholds: {e}")))?;
    Ok((axis, fam, cfg))
}

fn cmd_projcx_axioms(args: ProjcxAxiomsArgs) -> Result<i32, PipelineError> {
    let base = parse_word(&args.family.base, args.family.rank)?;
    let axis = Axis::of(&base)
        .map_err(|e| PipelineError::Config(format!("base: {e}")))?;
    let fam = ProjFamily::translate_ball(&axis, args.family.radius)?;
    let report = projcx::check_axioms(&fam, args.family.kappa)?;
    println!("family_size = {}", report.family_size);
    println!("kappa_min = {}", report.kappa_min);
    println!("max_diameter = {}", report.max_diameter);
    println!("max_crossing = {}", report.max_crossing);
    println!("checked_kappa = {}", report.checked_kappa);
    println!("violations = {}", report.violations.len());
    Ok(if report.violations.is_empty() { 0 } else { 1 })
}

fn cmd_projcx_interval(args: ProjcxIntervalArgs) -> Result<i32, PipelineError> {
    let (_, fam, cfg) = proj_setup(&args.family)?;
    let rank = args.family.rank;
    let v = Axis::of(&parse_word(&args.v, rank)?)
        .map_err(|e| PipelineError::Config(format!("v: {e}")))?;
    let w = Axis::of(&parse_word(&args.w, rank)?)
        .map_err(|e| PipelineError::Config(format!("w: {e}")))?;
    let result = projcx::interval(&v, &w, &fam, &cfg)?;
    println!("members = {}", result.members.len());
    for (axis, d) in result.members.iter().zip(&result.d_table) {
        match d {
            Some(d) => println!("  rep = {:<14} d = {d}", show(axis.rep())),
            None => println!("  rep = {:<14} (endpoint)", show(axis.rep())),
        }
    }
    println!("measured_d = {}", result.measured_d);
    println!("upper_ok = {}", result.upper_ok);
    Ok(0)
}

fn cmd_projcx_ball(args: ProjcxBallArgs, bottleneck: bool) -> Result<i32, PipelineError> {
    let (axis, fam, cfg) = proj_setup(&args.family)?;
    let graph = projcx::pk_ball(&axis, args.hops, &fam, &cfg)?;
    if bottleneck {
        let report = projcx::bottleneck_constant(&graph.adj)?;
        println!("vertices = {}", graph.axes.len());
        println!("edges = {}", graph.edge_count());
        println!("bottleneck = {}", report.delta);
        if let Some((x, y)) = report.witness {
            println!("witness = ({}, {})", show(graph.axes[x].rep()), show(graph.axes[y].rep()));
        }
        Ok(0)
    } else {
        write_or_print(&args.out, &graph.to_json())?;
        Ok(0)
    }
}

fn cmd_projcx_elliptic(args: ProjcxEllipticArgs) -> Result<i32, PipelineError> {
    let (axis, fam, cfg) = proj_setup(&args.family)?;
    let sub = build_subgroup(&args.subgroup, args.family.rank)?;
    let report = projcx::elliptic_check(&sub, &axis, &fam, &cfg, args.orbit)?;
    println!("elliptic = {}", report.elliptic);
    println!("max_dp = {}", report.max_dp);
    if let Some(w) = &report.witness {
        println!("witness = {}", show(w));
    }
    Ok(if report.elliptic { 0 } else { 1 })
}

fn cmd_projcx_wpd(args: ProjcxWpdArgs) -> Result<i32, PipelineError> {
    let x = parse_word(&args.x, args.rank)?;
    let y = parse_word(&args.y, args.rank)?;
    let (count, witnesses) = projcx::wpd_count(&x, &y, args.l, args.r)?;
    println!("count = {count}");
    for w in witnesses.iter().take(10) {
        println!("  {}", show(w));
    }
    Ok(0)
}

/// Shared family construction: plant, build, pick exponents, protect.
fn build_family(args: &FamilyBuildArgs) -> Result<(Word, Vec<FamilyMember>), PipelineError> {
    let g0 = parse_word(&args.g0, args.rank)?;
    let spacers = parse_gens(&args.spacers, args.rank)?;
    let pair = family::planted_pair(&g0, &spacers)?;
    let sched = FamilySchedule::new(args.base, args.count)
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let mut members = family::make_family(&pair, &sched)?;
    for i in 0..members.len() {
        let params = ChooseRParams {
            m_test: args.powers,
            protection: Some(g0.clone()),
            ..ChooseRParams::default()
        };
        let r = family::choose_r(i, &members, &params)?;
        members[i].r = r;
    }
    family::attach_protection(&mut members, &g0)?;
    Ok((g0, members))
}

fn cmd_family_make(args: FamilyMakeArgs) -> Result<i32, PipelineError> {
    let (g0, members) = build_family(&args.build)?;
    println!("g0 = {}", show(&g0));
    for m in &members {
        let f = m.f.to_string();
        let shown = if f.len() > 48 { format!("{}…", &f[..48]) } else { f };
        let protection = m.protection_word.as_ref().map(show).unwrap_or_else(|| "-".into());
        println!("  i = {} r = {} |f| = {:<8} protection = {:<4} f = {}", m.index, m.r, m.f.len(), protection, shown);
    }
    Ok(0)
}

fn cmd_family_verify(args: FamilyVerifyArgs) -> Result<i32, PipelineError> {
    let (_, members) = build_family(&args.build)?;
    let subgroups: Vec<SubgroupAutomaton> = args
        .subgroups
        .iter()
        .map(|csv| build_subgroup(csv, args.build.rank))
        .collect::<Result<_, _>>()?;
    let radii = SuiteRadii { powers: args.build.powers, subgroup: args.subgroup_radius };
    match family::property_suite(&members, &subgroups, &radii) {
        Ok(suite) => {
            for item in &suite.items {
                println!("ok: {} ({})", item.label, item.detail);
            }
            for flag in &suite.vanishing {
                println!(
                    "vanishing on subgroup {}: exact = {} (ball radius {}, {} elements)",
                    flag.subgroup, flag.exact, flag.ball_radius, flag.checked
                );
            }
            // Degenerate sanity bound: the obstruction report must exist.
            let bg = family::bounded_generation_report(
                &members[0],
                &subgroups,
                &BoundedGenParams::default(),
            )?;
            println!(
                "bounded generation: m* = {} beats bound {} (defect {})",
                bg.m_star, bg.bound, bg.empirical_defect
            );
            Ok(if suite.vanishing.iter().all(|f| f.exact) && bg.all_bounded { 0 } else { 1 })
        }
        Err(FamilyError::ItemFailed { item, witness }) => {
            println!("failed: item {item}: {witness}");
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_family_matrix(args: FamilyMatrixArgs) -> Result<i32, PipelineError> {
    let (_, members) = build_family(&args.build)?;
    let cert = family::independence_matrix(&members, args.m)?;
    println!("m = {}", cert.m);
    for row in &cert.matrix {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:>6}")).collect();
        println!("  [{}]", cells.join(" "));
    }
    println!("diagonal = {}", cert.is_diagonal());
    Ok(0)
}
