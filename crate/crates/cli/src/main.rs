use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use oscerr::bseries::{modified_equation_coeffs, order4_combination, rk_bseries, Rational};
use oscerr::estimator::elementary_integrals_numeric;
use oscerr::oscillators::{fit_action_angle, wn_build, ElementaryDifferentials, SD_SCALE, WAVE_RESOLUTION};
use oscerr::rk::{builtin, design_tuned_3stage, integrate, ButcherTableau};
use oscerr::trees::{catalog, enumerate_trees, RootedTree};
use oscerr_cli::config::{ExperimentConfig, FileConfig};
use oscerr_cli::estimate::estimate_series;
use oscerr_cli::experiment::run_experiment;
use oscerr_cli::output::write_csv;
use oscerr_cli::problem::{parse_pair, Problem, ProblemSpec, System};
use oscerr_cli::{CliError, Result};

#[derive(Parser, Debug)]
#[command(name = "oscerr", version, about = "A priori global-error estimates for Runge-Kutta methods on oscillators")]
struct Cli {
    /// Directory for output files; relative --output paths are placed here.
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads for experiment cells.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// TOML file with defaults (see `oscerr experiment --help`).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List rooted trees with rho, alpha, sigma, gamma and d'.
    Trees {
        #[arg(long, default_value_t = 4)]
        max_order: usize,
    },
    /// B-series coefficients a(τ) of a method, and b(τ) of its modified equation.
    Coeffs {
        #[command(flatten)]
        method: MethodArg,
        #[arg(long, default_value_t = 4)]
        max_order: usize,
        #[arg(long)]
        modified: bool,
    },
    /// Fixed-step integration; CSV columns t,y1,y2.
    Integrate {
        #[command(flatten)]
        method: MethodArg,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// CSV file; standard output when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Elementary integrals I_τ(t) from the variational equation.
    Elint {
        /// Tree as a level sequence such as 0121; repeat for several trees.
        #[arg(long = "tree", required = true)]
        trees: Vec<String>,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 2e-4)]
        h_fine: f64,
        #[arg(long)]
        t_end: f64,
        #[arg(long, default_value_t = 100)]
        stride: usize,
        /// Use the leading-order recurrences instead of the full differentials (Emden-Fowler only).
        #[arg(long)]
        leading: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimated global error; CSV columns t,est1,est2,est1_leading_only.
    Estimate {
        #[command(flatten)]
        method: MethodArg,
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        h: f64,
        #[arg(long)]
        t_end: f64,
        /// Sample spacing in time units.
        #[arg(long, default_value_t = 0.02)]
        dt: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Measured errors, estimates, fits, breakdown times and plots for every (method, h).
    Experiment(ExperimentArgs),
    /// Third-order three-stage method satisfying the tuning condition, from c2.
    DesignTuned {
        /// Second abscissa as a fraction such as 1/2.
        #[arg(long)]
        c2: String,
    },
    /// Problem constants; with --fit, the fitted asymptotic parameters.
    Problem {
        #[arg(value_enum)]
        kind: ProblemKind,
        #[arg(long, default_value_t = 3)]
        n: u32,
        #[arg(long, default_value_t = 1.0)]
        nu: f64,
        #[arg(long, default_value = "1,0")]
        y0: String,
        #[arg(long)]
        fit: bool,
        /// Length of the accurate run used by --fit.
        #[arg(long, default_value_t = 200.0)]
        t_fit: f64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProblemKind {
    Emden,
    Airy,
}

#[derive(Args, Debug)]
struct MethodArg {
    /// runge2, heun3, tuned3 or rk4.
    #[arg(long, default_value = "runge2")]
    method: String,
    /// Use the tuned three-stage method with this c2 instead of a named method.
    #[arg(long, conflicts_with = "method")]
    tuned_c2: Option<String>,
}

impl MethodArg {
    fn tableau(&self) -> Result<ButcherTableau> {
        match &self.tuned_c2 {
            Some(c2) => Ok(design_tuned_3stage(&parse_fraction(c2)?)?),
            None => Ok(builtin(&self.method)?),
        }
    }
}

#[derive(Args, Debug)]
struct ProblemArgs {
    /// emden:n=3,nu=1, airy or harmonic:omega2=W.
    #[arg(long, default_value = "emden:n=3,nu=1")]
    problem: String,
    /// Initial y and y'.
    #[arg(long, default_value = "1,0")]
    y0: String,
}

impl ProblemArgs {
    fn build(&self) -> Result<Problem> {
        Problem::new(self.problem.parse()?, parse_pair(&self.y0)?)
    }
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    y0: Option<String>,
    /// Comma-separated method names; an empty string runs nothing.
    #[arg(long)]
    methods: Option<String>,
    /// Comma-separated step sizes.
    #[arg(long)]
    h: Option<String>,
    #[arg(long)]
    t_end: Option<f64>,
    /// Method steps between samples.
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long)]
    reference_method: Option<String>,
    #[arg(long)]
    reference_h: Option<f64>,
    /// Skip the SVG plots.
    #[arg(long)]
    no_plot: bool,
    /// Envelope-fit window as lo,hi.
    #[arg(long)]
    fit_window: Option<String>,
}

fn parse_fraction(s: &str) -> Result<Rational> {
    let bad = || CliError::Usage(format!("{s:?} is not a fraction like 1/2"));
    let (n, d) = s.split_once('/').unwrap_or((s, "1"));
    let n: i64 = n.trim().parse().map_err(|_| bad())?;
    let d: i64 = d.trim().parse().map_err(|_| bad())?;
    if d == 0 {
        return Err(bad());
    }
    Ok(Rational::new(n.into(), d.into()))
}

fn resolve(output_dir: &Path, path: Option<&PathBuf>) -> Option<PathBuf> {
    path.map(|p| if p.is_absolute() { p.clone() } else { output_dir.join(p) })
}

fn trees(max_order: usize) -> Result<()> {
    for tree in enumerate_trees(max_order)?.iter().flatten() {
        let s = tree.stats();
        println!("{}\t{}\t{}\t{}\t{}\t{}", tree.encoding(), s.rho, s.alpha, s.sigma, s.gamma, s.d_prime);
    }
    Ok(())
}

fn coeffs(method: &MethodArg, max_order: usize, modified: bool) -> Result<()> {
    let tab = method.tableau()?;
    let a = rk_bseries(&tab, max_order)?;
    let b = if modified { Some(modified_equation_coeffs(&a, max_order)?) } else { None };
    println!("{}", if modified { "tree\ta\tb" } else { "tree\ta" });
    println!("∅\t{}{}", a.empty_value(), b.as_ref().map_or(String::new(), |b| format!("\t{}", b.empty_value())));
    for id in 0..catalog().count_up_to(max_order) {
        let t = catalog().tree(id);
        match &b {
            Some(b) => println!("{t}\t{}\t{}", a.get(t)?, b.get(t)?),
            None => println!("{t}\t{}", a.get(t)?),
        }
    }
    Ok(())
}

fn design_tuned(c2: &str) -> Result<()> {
    let tab = design_tuned_3stage(&parse_fraction(c2)?)?;
    let b = modified_equation_coeffs(&rk_bseries(&tab, 4)?, 4)?;
    let join = |v: &[Rational]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join("\t");
    println!("c\t{}", join(tab.c()));
    for (i, row) in tab.a().iter().enumerate() {
        println!("a{}\t{}", i + 1, join(row));
    }
    println!("b\t{}", join(tab.b()));
    println!("order\t{}", tab.order()?);
    let combo = order4_combination(&b)?;
    println!("tuning\t{combo}");
    Ok(())
}

fn problem(kind: ProblemKind, n: u32, nu: f64, y0: &str, fit: bool, t_fit: f64) -> Result<()> {
    let y0 = parse_pair(y0)?;
    let spec = match kind {
        ProblemKind::Emden => ProblemSpec::Emden { n, nu },
        ProblemKind::Airy => ProblemSpec::Airy,
    };
    let problem = Problem::new(spec, y0)?;
    let accurate = |t_end: f64| integrate(&builtin("rk4")?, &problem.system(), &problem.initial_state(), 0.0, 1e-3, t_end, 10);
    match &problem {
        Problem::Emden(p) => {
            println!("problem\t{spec}");
            println!("gamma\t{}\nbeta\t{}\nscale\t{}", p.gamma(), p.beta(), p.scale());
            let wave = Arc::new(wn_build(n, WAVE_RESOLUTION)?);
            if fit {
                let r = fit_action_angle(p, &accurate(t_fit)?, wave.clone())?;
                println!("c1\t{}\nc2\t{}", r.c1, r.c2);
                if n == 3 {
                    let (c1, c2, chi, four_k) = r.sd_parameters();
                    println!("c1_sd\t{c1}\nc2_sd\t{c2}\n4K_sd\t{four_k}\nchi_sd\t{chi}");
                }
            }
            println!("4K\t{}\nchi\t{}", wave.period(), wave.chi());
            if n == 3 {
                println!("sd_scale\t{SD_SCALE}");
            }
        }
        Problem::Linear(p) => {
            println!("problem\t{spec}\nt_min\t{}", p.t_min);
            if fit {
                let s0 = p.fit_s0(&accurate(t_fit)?, (0.1 * t_fit).max(p.t_min))?;
                println!("s0\t{}\t{}", s0[0], s0[1]);
            }
        }
    }
    Ok(())
}

fn elint(
    trees: &[String],
    problem: &Problem,
    h_fine: f64,
    t_end: f64,
    stride: usize,
    leading: bool,
    output: Option<&Path>,
) -> Result<()> {
    let trees: Vec<RootedTree> = trees.iter().map(|t| t.parse()).collect::<oscerr::Result<_>>()?;
    let sys = problem.system();
    let differentials: &dyn ElementaryDifferentials = match (&sys, leading) {
        (System::Emden(s), true) => &s.leading_order(),
        (_, true) => return Err(CliError::Usage("--leading applies to Emden-Fowler problems only".into())),
        (s, false) => s,
    };
    let (_, samples) = elementary_integrals_numeric(&sys, differentials, &trees, &problem.initial_state(), 0.0, t_end, h_fine, stride)?;
    let mut header = vec!["t".to_string()];
    for t in &trees {
        header.push(format!("I_{t}_1"));
        header.push(format!("I_{t}_2"));
    }
    let rows = (0..samples.first().map_or(0, |s| s.times.len())).map(|k| {
        let mut row = vec![samples[0].times[k]];
        for s in &samples {
            row.extend_from_slice(&s.values[k][..2]);
        }
        row
    });
    write_csv(output, &header, rows)
}

fn estimate(method: &ButcherTableau, problem: &Problem, h: f64, t_end: f64, dt: f64, output: Option<&Path>) -> Result<()> {
    if !(dt > 0.0) || !(h > 0.0) || !(t_end > 0.0) {
        return Err(CliError::Usage("h, t-end and dt must be positive".into()));
    }
    // an accurate run on the sample grid supplies the fitted constants
    let steps = ((dt / 1e-4).round() as usize).max(1);
    let reference = integrate(&builtin("rk4")?, &problem.system(), &problem.initial_state(), 0.0, dt / steps as f64, t_end, steps)?;
    let times: Vec<f64> = (0..reference.len()).map(|k| k as f64 * dt).collect();
    let reference = oscerr::rk::Trajectory { t0: 0.0, h: dt, stride: 1, states: reference.states };
    let (_, est) = estimate_series(problem, method, h, &times, &reference)?;
    write_csv(
        output,
        &["t".into(), "est1".into(), "est2".into(), "est1_leading_only".into()],
        est.times.iter().zip(&est.full).zip(&est.leading).map(|((t, f), l)| vec![*t, f[0], f[1], l[0]]),
    )
}

fn experiment_config(args: &ExperimentArgs, file: &FileConfig, cli: &Cli) -> Result<ExperimentConfig> {
    let mut c = ExperimentConfig::from_file(file)?;
    let list = |s: &str| s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(str::to_string).collect::<Vec<_>>();
    if let Some(p) = &args.problem {
        c.problem = p.parse()?;
    }
    if let Some(y0) = &args.y0 {
        c.y0 = parse_pair(y0)?;
    }
    if let Some(m) = &args.methods {
        c.methods = list(m);
    }
    if let Some(h) = &args.h {
        c.step_sizes = list(h)
            .iter()
            .map(|x| x.parse().map_err(|_| CliError::Usage(format!("{x:?} is not a step size"))))
            .collect::<Result<_>>()?;
    }
    if let Some(w) = &args.fit_window {
        c.fit_window = parse_pair(w)?;
    }
    c.t_end = args.t_end.unwrap_or(c.t_end);
    c.stride = args.stride.or(c.stride);
    c.reference_method = args.reference_method.clone().unwrap_or(c.reference_method);
    c.reference_h = args.reference_h.unwrap_or(c.reference_h);
    c.plot &= !args.no_plot;
    if let Some(d) = &cli.output_dir {
        c.output_dir = d.clone();
    }
    if let Some(w) = cli.workers {
        c.workers = w;
    }
    Ok(c)
}

/// Runs the command; `Ok(true)` when some experiment cell failed.
fn run(cli: &Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    let output_dir = cli.output_dir.clone().or_else(|| file.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."));
    if cli.workers == Some(0) {
        return Err(CliError::Usage("--workers must be at least 1".into()));
    }
    match &cli.command {
        Command::Trees { max_order } => trees(*max_order)?,
        Command::Coeffs { method, max_order, modified } => coeffs(method, *max_order, *modified)?,
        Command::Integrate { method, problem, h, t_end, stride, output } => {
            let problem = problem.build()?;
            let traj = integrate(&method.tableau()?, &problem.system(), &problem.initial_state(), 0.0, *h, *t_end, *stride)?;
            let rows = traj.states.iter().enumerate().map(|(k, y)| vec![traj.time(k), y[0], y[1]]);
            write_csv(resolve(&output_dir, output.as_ref()).as_deref(), &["t".into(), "y1".into(), "y2".into()], rows)?;
        }
        Command::Elint { trees, problem, h_fine, t_end, stride, leading, output } => {
            let out = resolve(&output_dir, output.as_ref());
            elint(trees, &problem.build()?, *h_fine, *t_end, *stride, *leading, out.as_deref())?;
        }
        Command::Estimate { method, problem, h, t_end, dt, output } => {
            let out = resolve(&output_dir, output.as_ref());
            estimate(&method.tableau()?, &problem.build()?, *h, *t_end, *dt, out.as_deref())?;
        }
        Command::Experiment(args) => {
            let config = experiment_config(args, &file, cli)?;
            let report = run_experiment(&config)?;
            for c in &report.cells {
                let status = c.failure.as_deref().map_or("ok".to_string(), |f| format!("FAILED: {f}"));
                let fit = c.fit.as_ref().map_or("-".into(), |f| format!("{:.3e} t^{:.4}", f.amplitude, f.exponent));
                let breakdown = c.breakdown.map_or("-".into(), |t| format!("{t}"));
                println!("{}\th={}\tfit {fit}\tbreakdown {breakdown}\t{status}", c.method, c.h);
                for w in &c.warnings {
                    eprintln!("warning: {} h={}: {w}", c.method, c.h);
                }
            }
            println!("report\t{}", config.output_dir.join("report.toml").display());
            return Ok(report.failed_cells() > 0);
        }
        Command::DesignTuned { c2 } => design_tuned(c2)?,
        Command::Problem { kind, n, nu, y0, fit, t_fit } => problem(*kind, *n, *nu, y0, *fit, *t_fit)?,
    }
    Ok(false)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
