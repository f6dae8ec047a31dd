use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use spectral_bounds::bounds::BoundKind;
use spectral_bounds::fdm::{self, FdmError};
use spectral_bounds::fourier::{self, FourierError, GridSpec};
use spectral_bounds::geometry::{load_mask, DomainSpec, Shape};
use spectral_bounds::numfmt::sig17;
use spectral_bounds::report::{self, CaseFile, DomainInput, ReportError, SpectrumSource, Tolerances};
use spectral_bounds::scan::{self, ScanQuantity};
use spectral_bounds::special::SpecialError;
use spectral_bounds::spectrum::SpectrumError;

const EXIT_VIOLATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "spectral-bounds", version, about = "Dirichlet Laplacian spectra and eigenvalue lower bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the first eigenvalues of a domain.
    Spectrum {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        grid: Grid,
        #[arg(short = 'n', long = "count", default_value_t = 10)]
        count: usize,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a case file and report every bound evaluation.
    Verify {
        case: PathBuf,
        /// Constant for Melas requests that do not carry one.
        #[arg(long = "melas-c")]
        melas_c: Option<f64>,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate a bound-related quantity over n.
    Scan {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        grid: Grid,
        #[arg(long)]
        quantity: String,
        #[arg(long = "n-max", default_value_t = 1000)]
        n_max: usize,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mass deficit of the first k eigenfunctions and the parametrized bound.
    Eta {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        grid: Grid,
        #[arg(short = 'k')]
        k: usize,
        /// Write g on the frequency grid as TSV.
        #[arg(long = "dump-profile")]
        dump_profile: Option<PathBuf>,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run case files (the built-in matrix when none is given) and summarize.
    Report {
        cases: Vec<PathBuf>,
        #[arg(long = "melas-c")]
        melas_c: Option<f64>,
        #[command(flatten)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct DomainArgs {
    /// Box side lengths, comma separated.
    #[arg(long = "box", value_delimiter = ',', num_args = 1..)]
    box_: Option<Vec<f64>>,
    /// Ball dimension and radius.
    #[arg(long, num_args = 2, value_names = ["D", "R"])]
    ball: Option<Vec<f64>>,
    /// MASK2D file.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(Args, Default)]
#[group(multiple = false)]
struct Format {
    #[arg(long)]
    json: bool,
    #[arg(long)]
    csv: bool,
    #[arg(long)]
    tsv: bool,
}

#[derive(Args, Default)]
struct Grid {
    /// Finite differences with this many cells along the longer side.
    #[arg(long)]
    grid: Option<usize>,
    /// Richardson extrapolation from the grid and its node refinement.
    #[arg(long)]
    richardson: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

fn special_code(e: &SpecialError) -> u8 {
    match e {
        SpecialError::NoConvergence { .. } => EXIT_NUMERICAL,
        _ => EXIT_USAGE,
    }
}

fn fdm_code(e: &FdmError) -> u8 {
    match e {
        FdmError::NoConvergence { .. } | FdmError::CountMismatch { .. } => EXIT_NUMERICAL,
        FdmError::Spectrum(SpectrumError::Special(s)) => special_code(s),
        _ => EXIT_USAGE,
    }
}

impl From<ReportError> for Failure {
    fn from(e: ReportError) -> Self {
        let code = if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_USAGE
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<FourierError> for Failure {
    fn from(e: FourierError) -> Self {
        let code = match &e {
            FourierError::Quadrature { .. } | FourierError::RadiusOutsideGrid { .. } => EXIT_NUMERICAL,
            FourierError::Fdm(f) => fdm_code(f),
            FourierError::Spectrum(SpectrumError::Special(s)) => special_code(s),
            _ => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<spectral_bounds::bounds::BoundsError> for Failure {
    fn from(e: spectral_bounds::bounds::BoundsError) -> Self {
        ReportError::from(e).into()
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::usage(format!("cannot write output: {e}")))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("output serializes") + "\n"
}

/// Domain plus the spectrum source the flags select.
fn resolve_domain(args: &DomainArgs, grid: &Grid) -> Result<(DomainSpec, SpectrumSource), Failure> {
    let fdm = || SpectrumSource::Fdm {
        grid: grid.grid,
        richardson: grid.richardson,
    };
    if let Some(lengths) = &args.box_ {
        let input = DomainInput::Box {
            lengths: lengths.clone(),
        };
        let source = if grid.grid.is_some() { fdm() } else { SpectrumSource::Analytic };
        return Ok((input.build(Path::new("."))?, source));
    }
    if let Some(ball) = &args.ball {
        let (d, r) = (ball[0], ball[1]);
        if d.fract() != 0.0 || d < 1.0 {
            return Err(Failure::usage(format!("ball dimension must be a positive integer, got {d}")));
        }
        if grid.grid.is_some() {
            return Err(Failure::usage("--grid applies to masks and 2D boxes"));
        }
        let input = DomainInput::Ball {
            dim: d as usize,
            radius: r,
        };
        return Ok((input.build(Path::new("."))?, SpectrumSource::Analytic));
    }
    let path = args.mask.as_ref().expect("clap enforces one domain flag");
    let mask = load_mask(path).map_err(|e| Failure::usage(e.to_string()))?;
    let mask = match grid.grid {
        Some(g) => mask.resample(g).map_err(|e| Failure::usage(e.to_string()))?,
        None => mask,
    };
    Ok((
        DomainSpec::new_mask(mask),
        SpectrumSource::Fdm {
            grid: None,
            richardson: grid.richardson,
        },
    ))
}

fn cmd_spectrum(domain: &DomainArgs, grid: &Grid, count: usize, format: &Format, out: Option<&Path>) -> Result<u8, Failure> {
    if format.tsv {
        return Err(Failure::usage("spectrum supports --csv and --json"));
    }
    if count == 0 {
        return Err(Failure::usage("--count must be at least 1"));
    }
    let (dom, source) = resolve_domain(domain, grid)?;
    let spectrum = report::build_spectrum(&source, &Tolerances::default(), &dom, count, Path::new("."))?;
    let spectrum = spectrum.truncated(count);
    let text = if format.json {
        to_json(&spectrum)
    } else {
        spectrum.to_csv()
    };
    write_output(out, &text)?;
    Ok(0)
}

fn fill_melas(file: &mut CaseFile, c: Option<f64>) {
    let Some(c) = c else { return };
    for case in &mut file.cases {
        for b in &mut case.bounds {
            if b.kind == BoundKind::Melas && b.c_melas.is_none() {
                b.c_melas = Some(c);
            }
        }
    }
}

fn load_cases(path: &Path, melas_c: Option<f64>) -> Result<(CaseFile, PathBuf), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    let mut file: CaseFile = serde_json::from_str(&text).map_err(ReportError::from)?;
    fill_melas(&mut file, melas_c);
    file.validate()?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((file, base))
}

fn cmd_verify(case: &Path, melas_c: Option<f64>, format: &Format, out: Option<&Path>) -> Result<u8, Failure> {
    if format.csv || format.tsv {
        return Err(Failure::usage("verify writes JSON"));
    }
    let (file, base) = load_cases(case, melas_c)?;
    let report = report::run_cases(&file, &base)?;
    write_output(out, &report.to_json())?;
    for rec in &report.records {
        for f in &rec.failures {
            eprintln!(
                "violated: case {} {} n={}{}{} lhs={} rhs={}",
                rec.case_id,
                f.kind.as_str(),
                f.params.n,
                f.params.k.map(|k| format!(" k={k}")).unwrap_or_default(),
                f.params.l.map(|l| format!(" l={l}")).unwrap_or_default(),
                sig17(f.lhs),
                sig17(f.rhs)
            );
        }
    }
    Ok(if report.all_verified() { 0 } else { EXIT_VIOLATION })
}

fn cmd_report(cases: &[PathBuf], melas_c: Option<f64>, format: &Format, out: Option<&Path>) -> Result<u8, Failure> {
    if format.csv {
        return Err(Failure::usage("report supports --json and --tsv"));
    }
    let mut reports = Vec::new();
    if cases.is_empty() {
        let mut file = report::default_matrix();
        fill_melas(&mut file, melas_c);
        reports.push(report::run_cases(&file, Path::new("."))?);
    }
    for path in cases {
        let (file, base) = load_cases(path, melas_c)?;
        reports.push(report::run_cases(&file, &base)?);
    }
    let mut merged = reports.remove(0);
    for r in reports {
        merged.records.extend(r.records);
    }
    merged.records.sort_by(|a, b| a.case_id.cmp(&b.case_id));
    merged.summary = report::Summary::of(merged.records.iter().flat_map(|r| &r.evaluations));

    let text = if format.tsv {
        let mut t = String::from("case\tkind\ttotal\tverified\tmin_sharpness\n");
        for rec in &merged.records {
            for k in &rec.summary.by_kind {
                t.push_str(&format!(
                    "{}\t{}\t{}\t{}\t{}\n",
                    rec.case_id,
                    k.kind.as_str(),
                    k.total,
                    k.verified,
                    sig17(k.min_sharpness)
                ));
            }
        }
        t
    } else {
        merged.to_json()
    };
    write_output(out, &text)?;
    Ok(if merged.all_verified() { 0 } else { EXIT_VIOLATION })
}

#[derive(Serialize)]
struct ScanRow {
    n: usize,
    value: f64,
}

fn cmd_scan(
    domain: &DomainArgs,
    grid: &Grid,
    quantity: &str,
    n_max: usize,
    format: &Format,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    if format.csv {
        return Err(Failure::usage("scan supports --tsv and --json"));
    }
    let q = ScanQuantity::parse(quantity).ok_or_else(|| {
        let names: Vec<&str> = ScanQuantity::ALL.iter().map(|q| q.as_str()).collect();
        Failure::usage(format!("unknown quantity {quantity:?}; one of {}", names.join(", ")))
    })?;
    if n_max == 0 {
        return Err(Failure::usage("--n-max must be at least 1"));
    }
    let (dom, source) = resolve_domain(domain, grid)?;
    let count = q.required_count(n_max).max(1);
    let spectrum = report::build_spectrum(&source, &Tolerances::default(), &dom, count, Path::new("."))?;
    let rows = scan::scan(&spectrum, q, n_max)?;
    let text = if format.json {
        to_json(&rows.iter().map(|&(n, value)| ScanRow { n, value }).collect::<Vec<_>>())
    } else {
        scan::to_tsv(q, &rows)
    };
    write_output(out, &text)?;
    Ok(0)
}

#[derive(Serialize)]
struct EtaOutput {
    diagnostic: fourier::EtaDiagnostic,
    profile: fourier::ProfileSummary,
}

fn cmd_eta(
    domain: &DomainArgs,
    grid: &Grid,
    k: usize,
    dump: Option<&Path>,
    format: &Format,
    out: Option<&Path>,
) -> Result<u8, Failure> {
    if format.csv || format.tsv {
        return Err(Failure::usage("eta writes JSON; use --dump-profile for the grid"));
    }
    if k == 0 {
        return Err(Failure::usage("k >= 1 required"));
    }
    if domain.ball.is_some() {
        return Err(Failure::usage("eta supports --box and --mask domains"));
    }
    if grid.richardson {
        return Err(Failure::usage("eta does not extrapolate; drop --richardson"));
    }
    let (dom, _) = resolve_domain(domain, grid)?;
    // a box with --grid is rasterized and treated like a mask
    let dom = match (dom.shape(), grid.grid) {
        (Shape::Box { lengths }, Some(g)) if lengths.len() == 2 => {
            let h = lengths[0].max(lengths[1]) / g as f64;
            let mask = fdm::rectangle_mask(lengths[0], lengths[1], h).map_err(ReportError::from)?;
            DomainSpec::new_mask(mask)
        }
        _ => dom,
    };
    let profile = fourier::g_profile(&dom, k, &GridSpec::default())?;
    let diag = fourier::eta(&profile)?;
    let invariants = (0.0..=1.0).contains(&diag.eta) && diag.s >= diag.r && diag.lemma1_factor >= 1.0;
    if !invariants {
        return Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!("diagnostic invariants failed: {diag:?}"),
        });
    }
    if let Some(p) = dump {
        profile.write_tsv(p)?;
    }
    let verified = diag.lemma1_verified;
    write_output(
        out,
        &to_json(&EtaOutput {
            diagnostic: diag,
            profile: profile.summary(),
        }),
    )?;
    Ok(if verified { 0 } else { EXIT_VIOLATION })
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SPECTRAL_BOUNDS_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("SPECTRAL_BOUNDS_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Spectrum {
            domain,
            grid,
            count,
            format,
            out,
        } => cmd_spectrum(domain, grid, *count, format, out.as_deref()),
        Command::Verify {
            case,
            melas_c,
            format,
            out,
        } => cmd_verify(case, *melas_c, format, out.as_deref()),
        Command::Scan {
            domain,
            grid,
            quantity,
            n_max,
            format,
            out,
        } => cmd_scan(domain, grid, quantity, *n_max, format, out.as_deref()),
        Command::Eta {
            domain,
            grid,
            k,
            dump_profile,
            format,
            out,
        } => cmd_eta(domain, grid, *k, dump_profile.as_deref(), format, out.as_deref()),
        Command::Report {
            cases,
            melas_c,
            format,
            out,
        } => cmd_report(cases, *melas_c, format, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
