//! `pencil`: build, verify and convert structure-constant tensors.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use pencil_core::battery::{
    build_degeneration, degenerate_battery, elliptic_battery, profile_scale, vector_battery, Degeneration, EllipticConfig,
    ExactTensors, Tolerances, VectorConfig,
};
use pencil_core::bundle::MultiPencil;
use pencil_core::degenerate::cyclotomic::Cyclotomic;
use pencil_core::elliptic::PencilData;
use pencil_core::error::check_coprime;
use pencil_core::json::{JsonScalar, Meta, TensorDocument};
use pencil_core::lie::{compatibility_residual, compatibility_violations, jacobi_violations, jacobiator, BracketPencil, LieStructure};
use pencil_core::report::{Check, Report};
use pencil_core::scalar::Scalar;
use pencil_core::shift::{q83_battery, Family, Q83Config};
use pencil_core::C64;

const PROFILE_ENV: &str = "PENCIL_TOLERANCE_PROFILE";

#[derive(Parser)]
#[command(name = "pencil", version, about = "Compatible Lie brackets from elliptic theta functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build structure constants and write them as a JSON document.
    #[command(visible_alias = "export")]
    Build {
        #[command(flatten)]
        params: Params,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the residual battery and print a pass/fail report.
    Verify(VerifyArgs),
    /// Read a JSON document, validate it and write it back in canonical form.
    Import {
        /// Schema 1 tensor document.
        file: PathBuf,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Debug)]
struct Params {
    /// Matrix size.
    #[arg(long, default_value_t = 2)]
    n: usize,
    /// Order of the theta functions used as sections.
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// Twist, coprime to n.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Modulus in the upper half plane, e.g. `0+1i` or `0.3+1.2i`.
    #[arg(long, default_value = "0+1i", value_parser = parse_complex, allow_hyphen_values = true)]
    tau: C64,
    /// Seed for the random sections and sample points.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Rank of the vector-valued family; builds l + 1 brackets.
    #[arg(long)]
    l: Option<usize>,
    /// Exact degeneration instead of the elliptic construction.
    #[arg(long, value_parser = parse_degeneration)]
    degenerate: Option<Degeneration>,
    /// Coordinates of the first section in the theta basis, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true)]
    mu1: Vec<C64>,
    /// Coordinates of the second section.
    #[arg(long, value_delimiter = ',', value_parser = parse_complex, allow_hyphen_values = true)]
    mu2: Vec<C64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ShiftInstance {
    Q83,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    params: Params,
    /// Verify the argument-shift pipeline on a quadratic Poisson algebra.
    #[arg(long, value_enum)]
    shift: Option<ShiftInstance>,
    /// First structure parameter of the quadratic algebra.
    #[arg(long, default_value_t = 1.0)]
    k1: f64,
    /// Second structure parameter.
    #[arg(long, default_value_t = 1.0)]
    k2: f64,
    /// Admissible family: a+, a-, b+ or b-.
    #[arg(long, default_value = "a+", value_parser = parse_family)]
    family: Family,
    /// Coordinates of the shift vector within its family.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
    t2: f64,
    /// Check tensors read from a JSON document instead of building them.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Add seeded noise of this size to the first bracket.
    #[arg(long)]
    perturb: Option<f64>,
    /// Number of regular parameters sampled for the splitting checks.
    #[arg(long, default_value_t = 3)]
    samples: usize,
    /// Tolerance profile: desk, strict or loose.
    #[arg(long, env = PROFILE_ENV, default_value = "desk")]
    profile: String,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn parse_complex(s: &str) -> std::result::Result<C64, String> {
    C64::from_str(s.trim()).map_err(|e| format!("cannot parse complex number {s:?}: {e}"))
}

fn parse_degeneration(s: &str) -> std::result::Result<Degeneration, String> {
    s.parse().map_err(|e: pencil_core::Error| e.to_string())
}

fn parse_family(s: &str) -> std::result::Result<Family, String> {
    s.parse().map_err(|e: pencil_core::Error| e.to_string())
}

impl Params {
    /// Rejects inconsistent parameters before any numerical work.
    fn validate(&self) -> Result<()> {
        check_coprime(self.n, self.k)?;
        if self.m < 1 {
            bail!("--m must be at least 1");
        }
        if !(self.tau.im > 0.0) {
            bail!("--tau must lie in the upper half plane, got Im(tau) = {}", self.tau.im);
        }
        let explicit = !self.mu1.is_empty() || !self.mu2.is_empty();
        if explicit {
            if self.l.is_some() || self.degenerate.is_some() {
                bail!("--mu1/--mu2 apply only to the elliptic construction");
            }
            if self.mu1.len() != self.m || self.mu2.len() != self.m {
                bail!("--mu1 and --mu2 need exactly m = {} coordinates, got {} and {}", self.m, self.mu1.len(), self.mu2.len());
            }
        }
        if let Some(l) = self.l {
            if self.degenerate.is_some() {
                bail!("--l and --degenerate are exclusive");
            }
            if l < 1 || l >= self.m || pencil_core::error::gcd(self.m, l) != 1 {
                bail!("--l needs 1 <= l < m with gcd(m, l) = 1, got m = {}, l = {l}", self.m);
            }
        }
        if self.degenerate == Some(Degeneration::Trigonometric) && (self.m < 2 || !(2..=3).contains(&self.n)) {
            bail!("the trigonometric degeneration is available for n in {{2, 3}} and m >= 2");
        }
        Ok(())
    }

    fn sections(&self) -> Option<(Vec<C64>, Vec<C64>)> {
        (!self.mu1.is_empty()).then(|| (self.mu1.clone(), self.mu2.clone()))
    }

    fn meta(&self, model: &str) -> Meta {
        let exact = self.degenerate.is_some();
        Meta {
            n: Some(self.n),
            m: Some(self.m),
            k: (!exact).then_some(self.k),
            l: self.l,
            tau: (!exact).then_some([self.tau.re, self.tau.im]),
            seed: (!exact).then_some(self.seed),
            field: None,
            model: Some(model.into()),
        }
    }
}

fn relabel<S: Scalar>(mut tensors: Vec<LieStructure<S>>) -> Vec<LieStructure<S>> {
    for (i, t) in tensors.iter_mut().enumerate() {
        t.label = format!("c{}", i + 1);
    }
    tensors
}

fn exact_document<S: JsonScalar>(c1: &LieStructure<S>, c2: &LieStructure<S>, meta: Meta) -> Result<TensorDocument> {
    let pair = relabel(vec![c1.clone(), c2.clone()]);
    Ok(TensorDocument::from_structures(&[&pair[0], &pair[1]], meta)?)
}

fn build_document(p: &Params) -> Result<TensorDocument> {
    p.validate()?;
    if let Some(kind) = p.degenerate {
        let model = match kind {
            Degeneration::Rational => "rational",
            Degeneration::Trigonometric => "trigonometric",
        };
        let meta = p.meta(model);
        return match build_degeneration(kind, p.n, p.m)? {
            ExactTensors::Rational(e) => exact_document(&e.c1, &e.c2, meta),
            ExactTensors::Cyclotomic2(e) => exact_document(&e.c1, &e.c2, meta),
            ExactTensors::Cyclotomic3(e) => exact_document(&e.c1, &e.c2, meta),
        };
    }
    if let Some(l) = p.l {
        let family = MultiPencil::seeded(p.n, p.m, l, p.k, p.tau, p.seed)?;
        let tensors = relabel(family.brackets.clone());
        let refs: Vec<&LieStructure> = tensors.iter().collect();
        return Ok(TensorDocument::from_structures(&refs, p.meta("vector"))?);
    }
    let pencil = match p.sections() {
        Some((mu1, mu2)) => PencilData::from_coefficients(p.n, p.k, p.tau, &mu1, &mu2, p.seed)?,
        None => PencilData::seeded(p.n, p.m, p.k, p.tau, p.seed)?,
    };
    let pair = relabel(vec![pencil.c1, pencil.c2]);
    Ok(TensorDocument::from_structures(&[&pair[0], &pair[1]], p.meta("elliptic"))?)
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn canonical<S: JsonScalar>(doc: &TensorDocument) -> Result<TensorDocument> {
    let tensors = doc.to_structures::<S>()?;
    let refs: Vec<&LieStructure<S>> = tensors.iter().collect();
    Ok(TensorDocument::from_structures(&refs, doc.meta.clone())?)
}

/// Rebuilds the document through typed tensors so that malformed entries are rejected.
fn import(doc: &TensorDocument) -> Result<TensorDocument> {
    match doc.meta.field.as_deref() {
        None => canonical::<C64>(doc),
        Some("rational") => canonical::<BigRational>(doc),
        Some("cyclotomic-2") => canonical::<Cyclotomic<2>>(doc),
        Some("cyclotomic-3") => canonical::<Cyclotomic<3>>(doc),
        Some(other) => bail!("unsupported coefficient field {other:?}"),
    }
}

fn exact_document_report<S: JsonScalar>(doc: &TensorDocument, report: &mut Report) -> Result<()> {
    let tensors = doc.to_structures::<S>()?;
    for t in &tensors {
        let v = jacobi_violations(t);
        report.push(Check::holds(format!("jacobi {} exact", t.label), v == 0, format!("{v} violations")));
    }
    for a in 0..tensors.len() {
        for b in a + 1..tensors.len() {
            let v = compatibility_violations(&BracketPencil::new(tensors[a].clone(), tensors[b].clone()));
            report.push(Check::holds(format!("compatibility {} {} exact", tensors[a].label, tensors[b].label), v == 0, format!("{v} violations")));
        }
    }
    Ok(())
}

fn document_report(doc: &TensorDocument, tol: &Tolerances, perturb: Option<f64>, seed: u64) -> Result<Report> {
    let mut report = Report::new(format!("document with {} tensors of dim {}", doc.tensors.len(), doc.dim));
    match doc.meta.field.as_deref() {
        None => {
            report.note("jacobi tolerance", format!("{:.0e}", tol.jacobi));
            let mut tensors = doc.to_structures::<C64>()?;
            if let (Some(scale), Some(first)) = (perturb, tensors.first_mut()) {
                *first = first.perturbed(scale, seed);
            }
            for t in &tensors {
                report.push(Check::below(format!("jacobi {}", t.label), jacobiator(t), tol.jacobi));
            }
            for a in 0..tensors.len() {
                for b in a + 1..tensors.len() {
                    let r = compatibility_residual(&BracketPencil::new(tensors[a].clone(), tensors[b].clone()));
                    report.push(Check::below(format!("compatibility {} {}", tensors[a].label, tensors[b].label), r, tol.jacobi));
                }
            }
        }
        Some(field) => {
            if perturb.is_some() {
                bail!("--perturb applies to floating-point tensors only");
            }
            report.note("field", field);
            match field {
                "rational" => exact_document_report::<BigRational>(doc, &mut report)?,
                "cyclotomic-2" => exact_document_report::<Cyclotomic<2>>(doc, &mut report)?,
                "cyclotomic-3" => exact_document_report::<Cyclotomic<3>>(doc, &mut report)?,
                other => bail!("unsupported coefficient field {other:?}"),
            }
        }
    }
    Ok(report)
}

fn verify(args: &VerifyArgs) -> Result<Report> {
    let scale = profile_scale(&args.profile)?;
    let tol = Tolerances::profile(&args.profile)?;
    if let Some(path) = &args.input {
        let doc = TensorDocument::read(path).with_context(|| format!("reading {}", path.display()))?;
        return document_report(&doc, &tol, args.perturb, args.params.seed);
    }
    if let Some(ShiftInstance::Q83) = args.shift {
        let cfg = Q83Config {
            k1: args.k1,
            k2: args.k2,
            family: args.family,
            t1: args.t1,
            t2: args.t2,
            seed: args.params.seed,
            tolerance_scale: scale,
        };
        return Ok(q83_battery(&cfg)?);
    }
    let p = &args.params;
    p.validate()?;
    if let Some(kind) = p.degenerate {
        if args.perturb.is_some() {
            bail!("--perturb applies to floating-point constructions only");
        }
        return Ok(degenerate_battery(kind, p.n, p.m)?);
    }
    if let Some(l) = p.l {
        let cfg = VectorConfig { n: p.n, m: p.m, l, k: p.k, tau: p.tau, seed: p.seed, tolerance: tol.vector, ..Default::default() };
        return Ok(vector_battery(&cfg)?);
    }
    let cfg = EllipticConfig {
        n: p.n,
        m: p.m,
        k: p.k,
        tau: p.tau,
        seed: p.seed,
        sections: p.sections(),
        samples: args.samples,
        perturb: args.perturb,
        tolerances: tol,
    };
    Ok(elliptic_battery(&cfg)?)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Build { params, out } => {
            let doc = build_document(&params)?;
            emit(&doc.to_text()?, out.as_ref())?;
            Ok(true)
        }
        Command::Import { file, out } => {
            let doc = TensorDocument::read(&file).with_context(|| format!("reading {}", file.display()))?;
            emit(&import(&doc)?.to_text()?, out.as_ref())?;
            Ok(true)
        }
        Command::Verify(args) => {
            let report = verify(&args)?;
            if args.json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{report}");
            }
            Ok(report.all_passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
