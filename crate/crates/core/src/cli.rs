//! The `qnm` command line.
//!
//! Exit codes: 0 success, 2 input or validation error, 3 numerical
//! failure, 4 internal invariant breach.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::design::{self, ProfileFamily};
use crate::error::{Error, Result};
use crate::evolution::{evolve_reference, reference_grid, relative_l2, ModalBasis};
use crate::jordan::{build_block_with, default_grid, BlockScale, JordanBlock};
use crate::model::{builtin_double_pole_model, double_pole_gamma, load_model, Kind, SystemModel};
use crate::perturbation::{
    block_matrix, direct_root_track, second_order_shift, split_block, Perturbation, RootTrack,
};
use crate::ptmodel;
use crate::spectral::{fmt_num, RefineOptions, SearchBox, SpectrumOptions, Wronskian, DEFAULT_CONTOUR_TOLERANCE};
use crate::C64;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INTERNAL: i32 = 4;

/// Distance of the default search box from the real axis.
const NOTCH: f64 = 1e-3;

#[derive(Debug, Parser)]
#[command(name = "qnm", version, about = "Quasinormal modes, Jordan blocks and modal expansions of 1-d open systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Contour tolerance for zero counting, or convergence tolerance for
    /// pt-critical.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Structured,
}

#[derive(Debug, Args)]
pub struct ModelSource {
    /// Model file.
    #[arg(long, conflicts_with = "builtin")]
    pub model: Option<PathBuf>,
    /// Built-in double-pole cavity with the given K.
    #[arg(long, allow_hyphen_values = true)]
    pub builtin: Option<f64>,
}

#[derive(Debug, Args)]
pub struct BoxArgs {
    /// `re_min,re_max,im_min,im_max`.
    #[arg(long = "box", allow_hyphen_values = true)]
    pub search_box: Option<String>,
    /// Default box half-width Ω in Re ω.
    #[arg(long, default_value_t = 20.0)]
    pub omega_max: f64,
    /// Default box depth Γ in Im ω.
    #[arg(long, default_value_t = 5.0)]
    pub gamma_max: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// All zeros of the Wronskian in a box.
    Spectrum {
        #[command(flatten)]
        source: ModelSource,
        #[command(flatten)]
        search: BoxArgs,
    },
    /// Jordan block basis samples and the bi-orthogonality matrix.
    Jordan {
        #[command(flatten)]
        source: ModelSource,
        /// Seed `re,im` for the zero; defaults to −iγ for built-in models.
        #[arg(long, allow_hyphen_values = true)]
        omega: Option<String>,
        /// Number of sample points across the cavity.
        #[arg(long, default_value_t = 101)]
        samples: usize,
    },
    /// Modal evolution of a pulse against the reference solver.
    Evolve {
        #[command(flatten)]
        source: ModelSource,
        #[command(flatten)]
        search: BoxArgs,
        /// Comma-separated output times.
        #[arg(long, default_value = "1,2,5")]
        times: String,
        /// Exponent p of the initial pulse `sin^p(π(x − x_l)/(a − x_l))`.
        #[arg(long, default_value_t = 5)]
        pulse_power: i32,
        #[arg(long, default_value_t = 1e-3)]
        dx: f64,
        /// Reference time step; the largest stable step dividing unity by default.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_enum, default_value_t = EvolveMode::Compare)]
        mode: EvolveMode,
    },
    /// Splitting of a double pole under ρ⁻¹ → ρ⁻¹ + λ or a shift of K.
    Perturb {
        /// K of the built-in double-pole cavity.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Comma-separated λ values.
        #[arg(long, allow_hyphen_values = true, default_value = "1e-3,-1e-3,1e-4,-1e-4,1e-5,-1e-5")]
        lambda: String,
        #[arg(long, value_enum, default_value_t = PerturbationKind::InverseDensity)]
        perturbation: PerturbationKind,
        /// Also track the split zeros of the perturbed models directly.
        #[arg(long)]
        track: bool,
    },
    /// Model whose mode at −iγ is a given profile.
    Construct {
        /// `sinh:K`, `power:ALPHA:N` or `linear`.
        #[arg(long)]
        profile: String,
        #[arg(long, default_value_t = design::DEFAULT_SEGMENTS)]
        segments: usize,
    },
    /// Third-order poles of the family `x + αxⁿ`.
    Search3 {
        #[arg(long)]
        n: u32,
        /// `lo,hi` range of α.
        #[arg(long, default_value = "0.5,10")]
        range: String,
        #[arg(long, default_value_t = design::DEFAULT_SEGMENTS)]
        segments: usize,
    },
    /// Critical point of the truncated Pöschl–Teller potential.
    PtCritical {
        /// Comma-separated truncation half-widths L.
        #[arg(long = "L", alias = "l", allow_hyphen_values = true, default_value = "5")]
        l: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EvolveMode {
    Compare,
    Modal,
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbationKind {
    InverseDensity,
    KShift,
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. }
        | Error::Parse(_)
        | Error::Validation(_)
        | Error::Domain(_)
        | Error::IndexOutOfRange { .. }
        | Error::Cfl { .. }
        | Error::InadmissibleProfile { .. }
        | Error::NonGeneric => EXIT_INPUT,
        Error::ContourTooClose { .. }
        | Error::NonConvergence(_)
        | Error::SingularJacobian(_)
        | Error::MultiplicityMismatch { .. }
        | Error::SingularMetric { .. }
        | Error::TrackingLost(_) => EXIT_NUMERICAL,
        Error::Invariant(_) => EXIT_INTERNAL,
    }
}

/// Parses `std::env::args`, configures the worker pool and runs.
pub fn main() -> i32 {
    if let Err(e) = configure_workers() {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    run(std::env::args_os())
}

fn configure_workers() -> Result<()> {
    let Ok(v) = std::env::var("QNM_WORKERS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Validation(format!("QNM_WORKERS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Invariant(format!("worker pool: {e}")))
}

/// Runs one command line. Usage errors print clap's message and return 2.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    if let Some(t) = c.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Validation(format!("tolerance must be positive, got {t}")));
        }
    }
    let text = match &cli.command {
        Command::Spectrum { source, search } => cmd_spectrum(c, source, search)?,
        Command::Jordan { source, omega, samples } => cmd_jordan(c, source, omega.as_deref(), *samples)?,
        Command::Evolve {
            source,
            search,
            times,
            pulse_power,
            dx,
            dt,
            mode,
        } => cmd_evolve(c, source, search, times, *pulse_power, *dx, *dt, *mode)?,
        Command::Perturb {
            k,
            lambda,
            perturbation,
            track,
        } => cmd_perturb(c, *k, lambda, *perturbation, *track)?,
        Command::Construct { profile, segments } => cmd_construct(c, profile, *segments)?,
        Command::Search3 { n, range, segments } => cmd_search3(c, *n, range, *segments)?,
        Command::PtCritical { l } => cmd_pt_critical(c, l)?,
    };
    emit(c, &text)
}

fn emit(c: &Common, text: &str) -> Result<()> {
    match &c.out {
        Some(p) => std::fs::write(p, text).map_err(|source| Error::Io { path: p.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse(format!("{what}: cannot parse {t:?} as a number")))
        })
        .collect()
}

fn parse_complex(s: &str) -> Result<C64> {
    match parse_list(s, "omega")?[..] {
        [re, im] => Ok(C64::new(re, im)),
        _ => Err(Error::Parse(format!("omega must be `re,im`, got {s:?}"))),
    }
}

impl ModelSource {
    fn load(&self) -> Result<SystemModel> {
        match (&self.model, self.builtin) {
            (Some(p), None) => load_model(p),
            (None, Some(k)) => builtin_double_pole_model(k),
            _ => Err(Error::Validation("give exactly one of --model or --builtin".into())),
        }
    }
}

impl BoxArgs {
    fn resolve(&self) -> Result<SearchBox> {
        match &self.search_box {
            Some(s) => match parse_list(s, "box")?[..] {
                [a, b, c, d] => SearchBox::new(a, b, c, d),
                _ => Err(Error::Parse(format!("box must be `re_min,re_max,im_min,im_max`, got {s:?}"))),
            },
            None => SearchBox::new(-self.omega_max, self.omega_max, -self.gamma_max, -NOTCH),
        }
    }
}

fn spectrum_options(c: &Common) -> SpectrumOptions {
    SpectrumOptions {
        contour_tolerance: c.tolerance.unwrap_or(DEFAULT_CONTOUR_TOLERANCE),
        ..SpectrumOptions::default()
    }
}

fn cmd_spectrum(c: &Common, source: &ModelSource, search: &BoxArgs) -> Result<String> {
    let model = source.load()?;
    let b = search.resolve()?;
    let rep = Wronskian::new(&model).spectrum(&b, &spectrum_options(c))?;
    Ok(match c.format {
        Format::Csv => rep.to_csv(),
        Format::Structured => rep.to_structured(),
    })
}

fn cmd_jordan(c: &Common, source: &ModelSource, omega: Option<&str>, samples: usize) -> Result<String> {
    let model = source.load()?;
    let seed = match (omega, source.builtin) {
        (Some(s), _) => parse_complex(s)?,
        (None, Some(k)) => C64::new(0.0, -double_pole_gamma(k)),
        (None, None) => return Err(Error::Validation("--omega is required for model files".into())),
    };
    if samples < 2 {
        return Err(Error::Validation(format!("at least two samples are needed, got {samples}")));
    }
    let z = Wronskian::new(&model).refine_zero(seed, &RefineOptions::default())?;
    let block = build_block_with(&model, z.omega, z.multiplicity, BlockScale::Preferred, &default_grid(&model))?;
    let l = model.domain_left();
    let xs: Vec<f64> = (0..samples)
        .map(|i| l + (model.a() - l) * i as f64 / (samples - 1) as f64)
        .collect();
    Ok(match c.format {
        Format::Csv => block.to_csv(&xs),
        Format::Structured => {
            let mut s = block.to_structured();
            let _ = writeln!(s, "anti_diagonal_residual = {}", fmt_num(anti_diagonal_residual(&block)));
            s
        }
    })
}

/// Largest deviation of the product matrix from `−W_M` on the
/// anti-diagonal and zero elsewhere, relative to `|W_M|`.
fn anti_diagonal_residual(block: &JordanBlock) -> f64 {
    let m = block.size();
    let pm = block.product_matrix();
    let w = block.w_lead();
    let mut worst: f64 = 0.0;
    for a in 0..m {
        for b in 0..m {
            let target = if a + b == m - 1 { -w } else { C64::new(0.0, 0.0) };
            worst = worst.max((pm[(a, b)] - target).norm() / w.norm());
        }
    }
    worst
}

/// Largest stable step of the form `1/n`.
fn default_dt(model: &SystemModel, dx: f64) -> f64 {
    let min_speed_inv = match model.kind() {
        Kind::Wave => model
            .segments()
            .iter()
            .map(|s| s.value)
            .chain(std::iter::once(model.exterior_value()))
            .fold(f64::INFINITY, f64::min)
            .sqrt(),
        Kind::KleinGordon => 1.0,
    };
    1.0 / (1.0 / (dx * min_speed_inv)).ceil()
}

#[allow(clippy::too_many_arguments)]
fn cmd_evolve(
    c: &Common,
    source: &ModelSource,
    search: &BoxArgs,
    times: &str,
    pulse_power: i32,
    dx: f64,
    dt: Option<f64>,
    mode: EvolveMode,
) -> Result<String> {
    let model = source.load()?;
    let times = parse_list(times, "times")?;
    if times.iter().any(|&t| t < 0.0) {
        return Err(Error::Validation("times must be non-negative".into()));
    }
    if !(dx > 0.0) || pulse_power < 1 {
        return Err(Error::Validation("dx must be positive and the pulse power at least 1".into()));
    }
    let dt = dt.unwrap_or_else(|| default_dt(&model, dx));
    let (l, a) = (model.domain_left(), model.a());
    let pulse = move |x: f64| {
        if x <= l || x >= a {
            0.0
        } else {
            (std::f64::consts::PI * (x - l) / (a - l)).sin().powi(pulse_power)
        }
    };
    // The modal expansion starts from the reference solver's t = 0 state.
    let mut all = vec![0.0];
    if mode != EvolveMode::Modal {
        all.extend(times.iter().copied().filter(|&t| t != 0.0));
    }
    let snaps = evolve_reference(&model, pulse, |_| 0.0, &all, dx, dt)?;
    let snap_at = |t: f64| snaps.iter().find(|s| s.t == t).expect("snapshot for every requested time");
    if mode == EvolveMode::Reference {
        let mut s = String::from("t,");
        s.push_str(snaps[0].to_csv().lines().next().unwrap_or_default());
        s.push('\n');
        for &t in &times {
            for line in snap_at(t).to_csv().lines().skip(1) {
                let _ = writeln!(s, "{},{line}", fmt_num(t));
            }
        }
        return Ok(s);
    }
    let grid = reference_grid(&model, dx);
    let rep = Wronskian::new(&model).spectrum(&search.resolve()?, &spectrum_options(c))?;
    let blocks = rep
        .zeros
        .iter()
        .map(|z| build_block_with(&model, z.omega, z.multiplicity, BlockScale::Preferred, &grid))
        .collect::<Result<Vec<_>>>()?;
    let basis = ModalBasis::new(blocks)?;
    let a0 = basis.project(&snap_at(0.0).to_state(&model, &grid)?);
    let w = snap_at(0.0).weights();
    let mut rows = Vec::new();
    for &t in &times {
        let u = basis.evolve(&a0, t)?;
        let err = if mode == EvolveMode::Compare {
            let reference: Vec<C64> = snap_at(t).phi.iter().map(|&v| C64::new(v, 0.0)).collect();
            relative_l2(u.phi(), &reference, &w)
        } else {
            f64::NAN
        };
        rows.push((t, u.phi().to_vec(), err));
    }
    if mode == EvolveMode::Modal {
        let mut s = String::from("t,x,re_phi,im_phi\n");
        for (t, phi, _) in &rows {
            for (x, v) in grid.points().iter().zip(phi) {
                let _ = writeln!(s, "{},{},{},{}", fmt_num(*t), fmt_num(*x), fmt_num(v.re), fmt_num(v.im));
            }
        }
        return Ok(s);
    }
    Ok(match c.format {
        Format::Csv => {
            let mut s = String::from("t,relative_l2\n");
            for (t, _, e) in &rows {
                let _ = writeln!(s, "{},{}", fmt_num(*t), fmt_num(*e));
            }
            s
        }
        Format::Structured => {
            let mut s = String::new();
            let _ = writeln!(s, "modes = {}", basis.blocks().len());
            let _ = writeln!(s, "dx = {}\ndt = {}\n", fmt_num(dx), fmt_num(dt));
            for (t, _, e) in &rows {
                let _ = writeln!(s, "[[error]]\nt = {}\nrelative_l2 = {}\n", fmt_num(*t), fmt_num(*e));
            }
            // Secular term: a_{j,n}(t) = Σ_k a_{j,n+k}(0)(−it)^k/k! e^{−iω_j t}.
            for (j, b) in basis.blocks().iter().enumerate().filter(|(_, b)| b.size() > 1) {
                let _ = writeln!(
                    s,
                    "[[jordan_block]]\nomega = [{}, {}]\nmultiplicity = {}",
                    fmt_num(b.omega().re),
                    fmt_num(b.omega().im),
                    b.size()
                );
                let co: Vec<String> = a0.blocks[j]
                    .iter()
                    .map(|z| format!("[{}, {}]", fmt_num(z.re), fmt_num(z.im)))
                    .collect();
                let _ = writeln!(s, "coefficients_t0 = [{}]\n", co.join(", "));
            }
            s
        }
    })
}

fn perturbation_for(kind: PerturbationKind, k: f64) -> Result<Perturbation> {
    Ok(match kind {
        PerturbationKind::InverseDensity => Perturbation::InverseDensity(vec![1.0]),
        PerturbationKind::KShift => {
            let h = 1e-5 * k.max(1.0);
            let mp = builtin_double_pole_model(k + h)?;
            let mm = builtin_double_pole_model(k - h)?;
            Perturbation::Density {
                segments: vec![(mp.segments()[0].value - mm.segments()[0].value) / (2.0 * h)],
                deltas: vec![(mp.deltas()[0].mu - mm.deltas()[0].mu) / (2.0 * h)],
            }
        }
    })
}

/// Relative size below which α counts as zero against the largest entry
/// of the block matrix.
const NONGENERIC_RATIO: f64 = 1e-6;

fn cmd_perturb(c: &Common, k: f64, lambdas: &str, kind: PerturbationKind, track: bool) -> Result<String> {
    let model = builtin_double_pole_model(k)?;
    let lambdas = parse_list(lambdas, "lambda")?;
    let gamma = double_pole_gamma(k);
    let z = Wronskian::new(&model).refine_zero(C64::new(0.0, -gamma), &RefineOptions::default())?;
    if z.multiplicity != 2 {
        return Err(Error::Invariant(format!("expected a double zero at −iγ, found order {}", z.multiplicity)));
    }
    let block = build_block_with(&model, z.omega, 2, BlockScale::Preferred, &default_grid(&model))?;
    let p = perturbation_for(kind, k)?;
    let h = block_matrix(&block, &p)?;
    let alpha = h[(1, 0)];
    let hmax = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let generic = alpha.norm() > NONGENERIC_RATIO * hmax;
    let h00 = second_order_shift(&block, &p)?;
    let cz = |z: C64| format!("[{}, {}]", fmt_num(z.re), fmt_num(z.im));

    let rt: Option<RootTrack> = if track && generic && kind == PerturbationKind::InverseDensity {
        let family = |lambda: f64| -> Result<SystemModel> {
            let values: Vec<f64> = model.segments().iter().map(|s| 1.0 / (1.0 / s.value + lambda)).collect();
            model.with_segment_values(&values)
        };
        let nonzero: Vec<f64> = lambdas.iter().copied().filter(|&l| l != 0.0).collect();
        Some(direct_root_track(&family, &block, &nonzero)?)
    } else {
        None
    };

    let mut s = String::new();
    match c.format {
        Format::Structured => {
            let _ = writeln!(s, "K = {}", fmt_num(k));
            let _ = writeln!(s, "omega = {}", cz(block.omega()));
            let _ = writeln!(s, "alpha = {}", cz(alpha));
            let _ = writeln!(s, "h00 = {}", cz(h00));
            let _ = writeln!(s, "generic = {generic}\n");
            if generic {
                for &lambda in &lambdas {
                    let mut rep = split_block(&block, lambda, alpha)?;
                    rep.second_order = Some(h00);
                    let _ = writeln!(s, "[[split]]\n{}", rep.to_structured());
                }
            }
            if let Some(rt) = &rt {
                let _ = writeln!(s, "[root_track]");
                let _ = writeln!(s, "omega1_squared = {}", cz(rt.omega1_squared));
                let _ = writeln!(s, "omega2 = {}", cz(rt.omega2));
                let _ = writeln!(s, "omega1_squared_relative_error = {}", fmt_num(((rt.omega1_squared - alpha) / alpha).norm()));
                let _ = writeln!(s, "omega2_relative_error = {}", fmt_num(((rt.omega2 - h00) / h00).norm()));
            }
        }
        Format::Csv => {
            s.push_str("lambda,root,re_predicted,im_predicted");
            if rt.is_some() {
                s.push_str(",re_tracked,im_tracked");
            }
            s.push('\n');
            if !generic {
                return Ok(s);
            }
            for &lambda in &lambdas {
                let rep = split_block(&block, lambda, alpha)?;
                let mut pred: Vec<C64> = rep.frequencies.iter().map(|&w| w + lambda * h00).collect();
                sort_c(&mut pred);
                let tracked = rt.as_ref().and_then(|r| r.tracked.iter().find(|t| t.lambda == lambda));
                for (n, w) in pred.iter().enumerate() {
                    let _ = write!(s, "{},{n},{},{}", fmt_num(lambda), fmt_num(w.re), fmt_num(w.im));
                    if rt.is_some() {
                        match tracked {
                            Some(t) => {
                                let r = nearest_pairing(&pred, &t.roots)[n];
                                let _ = write!(s, ",{},{}", fmt_num(r.re), fmt_num(r.im));
                            }
                            None => s.push_str(",,"),
                        }
                    }
                    s.push('\n');
                }
            }
        }
    }
    Ok(s)
}

/// Orders by Re ω, treating real parts at roundoff level as equal.
fn sort_c(v: &mut [C64]) {
    v.sort_by(|p, q| {
        if (p.re - q.re).abs() > 1e-12 * (p.norm() + q.norm()) {
            p.re.total_cmp(&q.re)
        } else {
            p.im.total_cmp(&q.im)
        }
    });
}

/// `roots` reordered so that entry n is the one nearest `pred[n]`.
fn nearest_pairing(pred: &[C64], roots: &[C64]) -> Vec<C64> {
    let mut left = roots.to_vec();
    pred.iter()
        .map(|p| {
            let i = (0..left.len())
                .min_by(|&a, &b| (left[a] - p).norm().total_cmp(&(left[b] - p).norm()))
                .expect("as many tracked roots as predicted ones");
            left.swap_remove(i)
        })
        .collect()
}

fn parse_profile(s: &str) -> Result<ProfileFamily> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| -> Result<f64> {
        t.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Parse(format!("profile: cannot parse {t:?}")))
    };
    match parts[..] {
        ["sinh", k] => Ok(ProfileFamily::Sinh { k: num(k)? }),
        ["power", alpha, n] => Ok(ProfileFamily::Power {
            alpha: num(alpha)?,
            n: n.parse().map_err(|_| Error::Parse(format!("profile: bad exponent {n:?}")))?,
        }),
        ["linear"] => Ok(ProfileFamily::Linear),
        _ => Err(Error::Parse(format!(
            "profile must be sinh:K, power:ALPHA:N or linear, got {s:?}"
        ))),
    }
}

fn cmd_construct(c: &Common, profile: &str, segments: usize) -> Result<String> {
    let f = parse_profile(profile)?;
    let gamma = design::gamma_from_profile(&f)?;
    let mu = design::delta_mass(&f, gamma);
    if mu < 0.0 {
        return Err(Error::InadmissibleProfile { mu });
    }
    // A profile with f″ ≡ 0 has γ and μ but no density.
    let model = match design::rho_from_profile(&f, gamma, segments) {
        Ok(m) => Some(m),
        Err(Error::Validation(_)) if f == ProfileFamily::Linear => None,
        Err(e) => return Err(e),
    };
    Ok(match c.format {
        Format::Csv => format!(
            "gamma,mu,segments,has_model\n{},{},{segments},{}\n",
            fmt_num(gamma),
            fmt_num(mu),
            model.is_some()
        ),
        Format::Structured => {
            let mut s = format!("# gamma = {}\n# mu = {}\n", fmt_num(gamma), fmt_num(mu));
            match model {
                Some(m) => s.push_str(&m.to_toml_string()),
                None => s.push_str("# no model: the density f″/(γ²f) vanishes identically\n"),
            }
            s
        }
    })
}

fn cmd_search3(c: &Common, n: u32, range: &str, segments: usize) -> Result<String> {
    let (lo, hi) = match parse_list(range, "range")?[..] {
        [lo, hi] => (lo, hi),
        _ => return Err(Error::Parse(format!("range must be `lo,hi`, got {range:?}"))),
    };
    let roots = design::third_order_search_with(n, (lo, hi), segments)?;
    Ok(match c.format {
        Format::Csv => design::roots_to_csv(&roots),
        Format::Structured => {
            let mut s = format!("n = {n}\nroots = {}\n\n", roots.len());
            for r in &roots {
                let _ = writeln!(
                    s,
                    "[[root]]\nalpha = {}\nW02 = {}\ngamma = {}\nmu = {}\nadmissible = {}",
                    fmt_num(r.alpha),
                    fmt_num(r.w02),
                    fmt_num(r.gamma),
                    fmt_num(r.mu),
                    r.admissible
                );
                if let Some(m) = &r.multiplicity {
                    let _ = writeln!(s, "winding = {}\nwinding_radius = {}", m.winding, fmt_num(m.radius));
                }
                s.push('\n');
            }
            s
        }
    })
}

fn cmd_pt_critical(c: &Common, ls: &str) -> Result<String> {
    let ls = parse_list(ls, "L")?;
    let tol = c.tolerance.unwrap_or(ptmodel::CONVERGENCE_TOL);
    let points = ls
        .iter()
        .map(|&l| ptmodel::pt_critical_point_with(l, tol))
        .collect::<Result<Vec<_>>>()?;
    Ok(match c.format {
        Format::Csv => {
            let mut s = String::from("L,V0_star,re_omega,im_omega\n");
            for p in &points {
                s.extend(p.to_csv().lines().skip(1).map(|l| format!("{l}\n")));
            }
            s
        }
        Format::Structured => points
            .iter()
            .map(|p| format!("[[critical_point]]\n{}", p.to_structured()))
            .collect::<Vec<_>>()
            .join("\n"),
    })
}
