use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use gellmann::halfint::Half;
use gellmann::linalg::re;
use gellmann::repspace::{enumerate_space_with, export_sparse, IrrepLabel, Parity, So4Basis, SpaceError, DEFAULT_STATE_BUDGET};
use gellmann::shear::{assemble, contraction_limit, formula_generalized, formula_original, leading_param, ParamSet};
use gellmann::so3::cg_twice;
use gellmann::so4::{cg_so4, So4Label};
use gellmann::so5::{branching_so4, build_irrep, cg_so5, So5Label, CG_CONVENTION};
use gellmann::verify::{default_ladder, random_params, run_suite, VerifyError, DEFAULT_SEED, SUITES};

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_ERROR: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "gellmann", version, about = "Shear generators of sl(n,R) from Gell-Mann type formulas")]
struct Cli {
    /// Worker threads for the parallel checks.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// TOML file with defaults; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Irrep labels with dimension and quadratic Casimir.
    Dims {
        #[arg(long)]
        n: usize,
        /// Largest label component.
        #[arg(long, default_value = "2")]
        max: String,
    },
    /// Clebsch-Gordan tables as TSV.
    Cg {
        #[arg(long, value_enum)]
        algebra: Group,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// so(4) content of an so(5) irrep.
    Branch {
        #[arg(long)]
        label: String,
    },
    /// Assemble shear operators and write them as sparse matrices.
    Build {
        #[arg(long, value_enum)]
        algebra: Algebra,
        #[arg(long, value_enum, default_value = "generalized")]
        formula: FormulaKind,
        #[arg(long, value_enum, default_value = "product")]
        basis: BasisArg,
        #[command(flatten)]
        common: Common,
    },
    /// Run a verification suite and write a JSON report.
    Verify {
        #[arg(long)]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
    /// Contraction ladder for a generalized formula.
    Contract {
        #[arg(long, value_enum)]
        algebra: Algebra,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Cutoff label, e.g. `6`, `13/2`, `3,3`, `3/2,3/2`.
    #[arg(long)]
    cutoff: Option<String>,
    /// Comma-separated `name=value` representation labels.
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    parity: Option<ParityArg>,
    #[arg(long)]
    state_budget: Option<usize>,
    /// Output directory (build) or report file (verify, contract).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Group {
    So3,
    So4,
    So5,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum Algebra {
    Sl3,
    Sl4,
    Sl5,
}

impl Algebra {
    fn n(self) -> usize {
        match self {
            Algebra::Sl3 => 3,
            Algebra::Sl4 => 4,
            Algebra::Sl5 => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum FormulaKind {
    Original,
    Generalized,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
enum BasisArg {
    Product,
    Chain,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ParityArg {
    Both,
    Tensorial,
    Spinorial,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Parity {
        match p {
            ParityArg::Both => Parity::Both,
            ParityArg::Tensorial => Parity::Tensorial,
            ParityArg::Spinorial => Parity::Spinorial,
        }
    }
}

/// Keys accepted in the TOML file.
#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    threads: Option<usize>,
    cutoff: Option<String>,
    params: Option<String>,
    tol: Option<f64>,
    seed: Option<u64>,
    parity: Option<ParityArg>,
    state_budget: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Budget(String),
    Other(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Budget(s) => write!(f, "budget exceeded: {s}"),
            CliError::Other(s) => write!(f, "error: {s}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        match e {
            SpaceError::Budget { .. } => CliError::Budget(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<VerifyError> for CliError {
    fn from(e: VerifyError) -> Self {
        match e {
            VerifyError::Space(s) => s.into(),
            VerifyError::UnknownSuite(s) => CliError::Usage(format!("unknown suite {s:?}; expected one of {}", SUITES.join(", "))),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<gellmann::shear::ShearError> for CliError {
    fn from(e: gellmann::shear::ShearError) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<gellmann::so5::So5Error> for CliError {
    fn from(e: gellmann::so5::So5Error) -> Self {
        CliError::Other(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Other(e.to_string())
    }
}

#[derive(Debug, Serialize)]
struct OutputFile {
    path: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct RunManifest {
    command_line: Vec<String>,
    config: serde_json::Value,
    versions: serde_json::Value,
    seed: u64,
    input_hashes: Vec<OutputFile>,
    outputs: Vec<OutputFile>,
    wall_time_s: f64,
}

struct Run {
    start: Instant,
    config_path: Option<PathBuf>,
    file: FileConfig,
    outputs: Vec<PathBuf>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Run {
    fn write(&mut self, path: &Path, text: &str) -> Result<(), CliError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        fs::write(path, text)?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn manifest(&self, path: &Path, settings: serde_json::Value, seed: u64) -> Result<(), CliError> {
        let hash = |p: &PathBuf| -> Result<OutputFile, CliError> {
            Ok(OutputFile { path: p.display().to_string(), sha256: sha256_hex(&fs::read(p)?) })
        };
        let manifest = RunManifest {
            command_line: std::env::args().collect(),
            config: serde_json::json!({ "resolved": settings, "file": self.file }),
            versions: serde_json::json!({
                "gellmann": env!("CARGO_PKG_VERSION"),
                "cg_convention": CG_CONVENTION,
            }),
            seed,
            input_hashes: self.config_path.iter().map(hash).collect::<Result<_, _>>()?,
            outputs: self.outputs.iter().map(hash).collect::<Result<_, _>>()?,
            wall_time_s: self.start.elapsed().as_secs_f64(),
        };
        fs::write(path, serde_json::to_string_pretty(&manifest).expect("manifest json"))?;
        Ok(())
    }
}

/// Flags over file values.
fn merge(c: &Common, f: &FileConfig) -> Common {
    Common {
        cutoff: c.cutoff.clone().or_else(|| f.cutoff.clone()),
        params: c.params.clone().or_else(|| f.params.clone()),
        tol: c.tol.or(f.tol),
        seed: c.seed.or(f.seed),
        parity: c.parity.or(f.parity),
        state_budget: c.state_budget.or(f.state_budget),
        out: c.out.clone().or_else(|| f.out.clone()),
    }
}

fn settings_json(c: &Common) -> serde_json::Value {
    serde_json::json!({
        "cutoff": c.cutoff,
        "params": c.params,
        "tol": c.tol,
        "seed": c.seed,
        "parity": c.parity,
        "state_budget": c.state_budget,
        "out": c.out,
    })
}

fn parse_half(s: &str) -> Result<Half, CliError> {
    s.parse::<Half>().map_err(|e| CliError::Usage(e.to_string()))
}

/// `"6"` or `"3,3"` into twice values; a single value is repeated.
fn parse_pair(s: &str) -> Result<(i32, i32), CliError> {
    let parts: Vec<&str> = s.trim_matches(|c| c == '(' || c == ')').split(',').collect();
    match parts.as_slice() {
        [a] => {
            let a = parse_half(a)?.twice;
            Ok((a, a))
        }
        [a, b] => Ok((parse_half(a)?.twice, parse_half(b)?.twice)),
        _ => Err(CliError::Usage(format!("bad label {s:?}"))),
    }
}

fn cutoff_label(n: usize, cutoff: &str) -> Result<IrrepLabel, CliError> {
    let (a, b) = parse_pair(cutoff)?;
    Ok(match n {
        3 => IrrepLabel::So3(Half::from_twice(a)),
        4 => IrrepLabel::So4(So4Label::from_twice(a, b)),
        _ => IrrepLabel::So5(So5Label::from_twice(a, b)),
    })
}

fn so5_label(s: &str) -> Result<So5Label, CliError> {
    let (a, b) = parse_pair(s)?;
    So5Label::new(Half::from_twice(a), Half::from_twice(b)).map_err(|e| CliError::Usage(e.to_string()))
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_dims(n: usize, max: &str) -> Result<String, CliError> {
    let m = parse_half(max)?.twice;
    let mut out = String::from("label\tdim\tcasimir\n");
    let labels: Vec<IrrepLabel> = match n {
        3 => (0..=m).map(|t| IrrepLabel::So3(Half::from_twice(t))).collect(),
        4 => (0..=m).flat_map(|a| (0..=m).map(move |b| IrrepLabel::So4(So4Label::from_twice(a, b)))).collect(),
        5 => So5Label::all_up_to(m).into_iter().map(IrrepLabel::So5).collect(),
        _ => return Err(CliError::Usage(format!("n must be 3, 4 or 5, got {n}"))),
    };
    for l in labels {
        out.push_str(&format!("{l}\t{}\t{}\n", l.dim(), sci(l.casimir())));
    }
    Ok(out)
}

fn cmd_cg(group: Group, a: &str, b: &str, c: &str) -> Result<String, CliError> {
    let mut out = String::new();
    match group {
        Group::So3 => {
            let (ja, jb, jc) = (parse_half(a)?.twice, parse_half(b)?.twice, parse_half(c)?.twice);
            out.push_str("# rho=1\nm1\tm2\tm\tvalue\n");
            for m1 in (-ja..=ja).step_by(2) {
                for m2 in (-jb..=jb).step_by(2) {
                    let m = m1 + m2;
                    if m.abs() <= jc {
                        let v = cg_twice(ja, m1, jb, m2, jc, m);
                        if v != 0.0 {
                            out.push_str(&format!("{}\t{}\t{}\t{}\n", Half::from_twice(m1), Half::from_twice(m2), Half::from_twice(m), sci(v)));
                        }
                    }
                }
            }
        }
        Group::So4 => {
            let l = |s: &str| parse_pair(s).map(|(x, y)| So4Label::from_twice(x, y));
            let (la, lb, lc) = (l(a)?, l(b)?, l(c)?);
            out.push_str("# rho=1\nrowA\trowB\trowC\tvalue\n");
            for (ra1, ra2) in la.rows() {
                for (rb1, rb2) in lb.rows() {
                    for (rc1, rc2) in lc.rows() {
                        let v = cg_so4(la, (ra1, ra2), lb, (rb1, rb2), lc, (rc1, rc2));
                        if v != 0.0 {
                            out.push_str(&format!("({ra1},{ra2})\t({rb1},{rb2})\t({rc1},{rc2})\t{}\n", sci(v)));
                        }
                    }
                }
            }
        }
        Group::So5 => {
            let (la, lb, lc) = (so5_label(a)?, so5_label(b)?, so5_label(c)?);
            let tables = cg_so5(la, lb, lc)?;
            let (ia, ib, ic) = (build_irrep(la)?, build_irrep(lb)?, build_irrep(lc)?);
            out.push_str(&format!("# rho={}\n# convention={CG_CONVENTION}\nrho\trowA\trowB\trowC\tvalue\n", tables.len()));
            let row = |r: &gellmann::so5::So5Row| format!("({},{};{},{})", r.j1, r.j2, r.m1, r.m2);
            for (k, t) in tables.iter().enumerate() {
                for (a_i, ra) in ia.basis.iter().enumerate() {
                    for (b_i, rb) in ib.basis.iter().enumerate() {
                        for (c_i, rc) in ic.basis.iter().enumerate() {
                            let v = t.get(a_i, b_i, c_i);
                            if v.abs() > 1e-14 {
                                out.push_str(&format!("{k}\t{}\t{}\t{}\t{}\n", row(ra), row(rb), row(rc), sci(v)));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

fn cmd_branch(label: &str) -> Result<String, CliError> {
    let l = so5_label(label)?;
    let mut out = String::from("so4\tdim\n");
    for b in branching_so4(l)? {
        out.push_str(&format!("{b}\t{}\n", b.dim()));
    }
    Ok(out)
}

fn resolve_params(formula: &gellmann::shear::ShearFormula, c: &Common) -> Result<(ParamSet, u64), CliError> {
    let seed = c.seed.unwrap_or(DEFAULT_SEED);
    let p = match &c.params {
        Some(s) => ParamSet::parse(s).map_err(|e| CliError::Usage(e.to_string()))?,
        None => random_params(&formula.params(), 1, seed)[0],
    };
    Ok((p, seed))
}

fn default_cutoff(n: usize) -> &'static str {
    match n {
        3 => "6",
        4 => "3",
        _ => "3/2,3/2",
    }
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '=' { c } else { '_' }).collect()
}

fn cmd_build(run: &mut Run, alg: Algebra, kind: FormulaKind, basis: BasisArg, c: &Common) -> Result<u8, CliError> {
    let n = alg.n();
    let basis = match basis {
        BasisArg::Product => So4Basis::Product,
        BasisArg::Chain => So4Basis::Chain,
    };
    let formula = match kind {
        FormulaKind::Original => formula_original(n, basis)?,
        FormulaKind::Generalized => formula_generalized(n, basis)?,
    };
    let cutoff = cutoff_label(n, c.cutoff.as_deref().unwrap_or(default_cutoff(n)))?;
    let parity = c.parity.map(Parity::from).unwrap_or(Parity::Both);
    let space = enumerate_space_with(cutoff, parity, basis, c.state_budget.unwrap_or(DEFAULT_STATE_BUDGET))?;
    let (params, seed) = resolve_params(&formula, c)?;
    let ts = assemble(&formula, &space, &params)?;
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("build"));
    for (t, comp) in ts.iter().zip(&formula.components) {
        let name = format!("T_{}", sanitize(&comp.name));
        run.write(&dir.join(format!("{name}.txt")), &export_sparse(&space, t, &format!("{} {}", formula.name, comp.name)))?;
    }
    let params_json = serde_json::to_string_pretty(&params).expect("params json");
    run.write(&dir.join("params.json"), &params_json)?;
    eprintln!("{}: {} states, {} operators in {}", formula.name, space.len(), ts.len(), dir.display());
    run.manifest(&dir.join("manifest.json"), settings_json(c), seed)?;
    Ok(0)
}

fn report_path(c: &Common, default: &str) -> PathBuf {
    c.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn manifest_path(report: &Path) -> PathBuf {
    let mut s = report.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn cmd_verify(run: &mut Run, suite: &str, c: &Common) -> Result<u8, CliError> {
    let cutoff = c.cutoff.as_deref().map(parse_pair).transpose()?;
    let seed = c.seed.unwrap_or(DEFAULT_SEED);
    let rep = run_suite(suite, cutoff, c.tol, seed)?;
    for ch in &rep.checks {
        let rel = if ch.upper { "<=" } else { ">" };
        println!("{}\t{}\t{:.3e} {rel} {:.1e}", if ch.pass { "PASS" } else { "FAIL" }, ch.name, ch.value, ch.bound);
    }
    for note in &rep.notes {
        println!("note\t{note}");
    }
    let path = report_path(c, &format!("{suite}.report.json"));
    run.write(&path, &serde_json::to_string_pretty(&rep).expect("report json"))?;
    run.manifest(&manifest_path(&path), settings_json(c), seed)?;
    println!("{}\t{suite}", if rep.pass { "PASS" } else { "FAIL" });
    Ok(if rep.pass { 0 } else { EXIT_FAIL })
}

fn cmd_contract(run: &mut Run, alg: Algebra, c: &Common) -> Result<u8, CliError> {
    let n = alg.n();
    let formula = formula_generalized(n, So4Basis::Product)?;
    let cutoff = cutoff_label(n, c.cutoff.as_deref().unwrap_or(default_cutoff(n)))?;
    let space = enumerate_space_with(cutoff, Parity::Both, So4Basis::Product, c.state_budget.unwrap_or(DEFAULT_STATE_BUDGET))?;
    let (params, seed) = resolve_params(&formula, c)?;
    let sigma0 = params.get(leading_param(&formula));
    let sigma0 = if sigma0.norm() == 0.0 { re(1.0) } else { sigma0 };
    let rep = contraction_limit(&formula, &space, &params, sigma0, &default_ladder(), &space.interior())?;
    let tol = c.tol.unwrap_or(1e-10);
    let ratio_ok = rep.ratios.iter().all(|r| (r - 4.0).abs() <= 0.2);
    let pass = ratio_ok && rep.limit_commutator <= tol;
    for s in &rep.steps {
        println!("eps={}\t||[eT,eT]||={:.6e}\tdistance={:.3e}", s.epsilon, s.commutator_norm, s.distance_to_limit);
    }
    println!("ratios\t{:?}", rep.ratios);
    println!("limit commutator\t{:.3e}", rep.limit_commutator);
    let path = report_path(c, &format!("contract-{}.report.json", formula.name));
    run.write(&path, &serde_json::to_string_pretty(&rep).expect("report json"))?;
    run.manifest(&manifest_path(&path), settings_json(c), seed)?;
    println!("{}\tcontraction", if pass { "PASS" } else { "FAIL" });
    Ok(if pass { 0 } else { EXIT_FAIL })
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig, CliError> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

fn real_main(cli: Cli) -> Result<u8, CliError> {
    let file = load_config(&cli.config)?;
    if let Some(t) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(|e| CliError::Other(e.to_string()))?;
    }
    let mut run = Run { start: Instant::now(), config_path: cli.config.clone(), file: file.clone(), outputs: vec![] };
    match &cli.command {
        Command::Dims { n, max } => {
            print!("{}", cmd_dims(*n, max)?);
            Ok(0)
        }
        Command::Cg { algebra, a, b, c, out } => {
            let text = cmd_cg(*algebra, a, b, c)?;
            match out {
                Some(p) => run.write(p, &text)?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Branch { label } => {
            print!("{}", cmd_branch(label)?);
            Ok(0)
        }
        Command::Build { algebra, formula, basis, common } => cmd_build(&mut run, *algebra, *formula, *basis, &merge(common, &file)),
        Command::Verify { suite, common } => cmd_verify(&mut run, suite, &merge(common, &file)),
        Command::Contract { algebra, common } => cmd_contract(&mut run, *algebra, &merge(common, &file)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match real_main(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(match e {
                CliError::Usage(_) => EXIT_USAGE,
                CliError::Budget(_) => EXIT_BUDGET,
                CliError::Other(_) => EXIT_ERROR,
            })
        }
    }
}
