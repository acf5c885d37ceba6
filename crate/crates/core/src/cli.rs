//! Command-line front end: `run` executes one transient solve, `convergence`
//! sweeps a refinement parameter and tabulates observed orders, `check` runs
//! the structural property suite.
//!
//! Configuration is layered: built-in defaults, then a flat key=value config
//! file, then command-line flags, then the output-directory environment
//! variable. A preset assignment is applied before the other keys of its
//! layer so individual fields can still be overridden next to it.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{conv_order, emit_table, ConvergenceRecord};
use crate::checks::all_checks;
use crate::error::{Error, Result};
use crate::forms::{
    assemble_operators, HydraulicTensor, PhysicalParams, PressureKind, QuadOrders, Spaces,
};
use crate::mesh::build_structured;
use crate::mms::ManufacturedSolution;
use crate::timestep::{Scheme, Starter, Transient};

/// Environment variable that overrides the output directory after all other
/// configuration layers.
pub const OUT_DIR_ENV: &str = "STOKES_DARCY_OUTDIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Test1,
    Test2,
    Test3,
    Custom,
}

impl Preset {
    pub fn token(self) -> &'static str {
        match self {
            Preset::Test1 => "test1",
            Preset::Test2 => "test2",
            Preset::Test3 => "test3",
            Preset::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub test: Preset,
    pub params: PhysicalParams,
    pub k: HydraulicTensor,
    pub n: usize,
    pub sigma: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub pressure: PressureKind,
    pub starter: Starter,
    pub interface_consistency: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut cfg = RunConfig {
            test: Preset::Test1,
            params: PhysicalParams {
                nu: 0.1,
                eta: 0.01,
                rho: 1000.0,
                g: 10.0,
                s0: 1e-3,
                alpha: 1.0,
            },
            k: HydraulicTensor {
                k_min: 0.01,
                k_max: 1.0,
                theta: 0.0,
            },
            n: 8,
            sigma: 0.0625,
            t_end: 1.0,
            scheme: Scheme::Bdf2,
            pressure: PressureKind::Q1,
            starter: Starter::Taylor,
            interface_consistency: true,
            out_dir: PathBuf::from("."),
        };
        cfg.apply_preset(Preset::Test1);
        cfg
    }
}

impl RunConfig {
    /// Pins the published parameter set; later assignments in the same layer
    /// may still override single fields.
    pub fn apply_preset(&mut self, preset: Preset) {
        self.test = preset;
        if preset == Preset::Custom {
            return;
        }
        self.params = PhysicalParams {
            nu: 0.1,
            eta: 0.01,
            rho: 1000.0,
            g: 10.0,
            s0: 1e-3,
            alpha: 1.0,
        };
        self.k = HydraulicTensor {
            k_min: 0.01,
            k_max: 1.0,
            theta: 0.0,
        };
        self.t_end = 1.0;
        match preset {
            Preset::Test1 | Preset::Custom => {}
            Preset::Test2 => self.params.s0 = 1e-7,
            Preset::Test3 => {
                self.params.s0 = 1e-10;
                self.params.eta = 0.1;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        let positive: [(&str, f64); 10] = [
            ("nu", self.params.nu),
            ("eta", self.params.eta),
            ("rho", self.params.rho),
            ("g", self.params.g),
            ("s0", self.params.s0),
            ("k_min", self.k.k_min),
            ("k_max", self.k.k_max),
            ("sigma", self.sigma),
            ("t_end", self.t_end),
            ("n", self.n as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                bad.push(format!("{name} must be positive, got {v}"));
            }
        }
        if self.params.alpha < 0.0 {
            bad.push(format!("alpha must be nonnegative, got {}", self.params.alpha));
        }
        if self.k.k_min > self.k.k_max {
            bad.push(format!(
                "k_min {} exceeds k_max {}",
                self.k.k_min, self.k.k_max
            ));
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: expected a number, got '{v}'")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: expected a positive integer, got '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "on" | "1" => Ok(true),
        "false" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected true or false, got '{v}'"
        ))),
    }
}

fn parse_preset(v: &str) -> Result<Preset> {
    match v {
        "test1" => Ok(Preset::Test1),
        "test2" => Ok(Preset::Test2),
        "test3" => Ok(Preset::Test3),
        "custom" => Ok(Preset::Custom),
        _ => Err(Error::Config(format!(
            "test: expected test1 | test2 | test3 | custom, got '{v}'"
        ))),
    }
}

fn parse_scheme(v: &str) -> Result<Scheme> {
    match v {
        "bdf2" => Ok(Scheme::Bdf2),
        "backward-euler" => Ok(Scheme::BackwardEuler),
        _ => Err(Error::Config(format!(
            "scheme: expected bdf2 | backward-euler, got '{v}'"
        ))),
    }
}

fn parse_pressure(v: &str) -> Result<PressureKind> {
    match v {
        "q1" => Ok(PressureKind::Q1),
        "q1q0" => Ok(PressureKind::Q1Q0),
        _ => Err(Error::Config(format!(
            "pressure: expected q1 | q1q0, got '{v}'"
        ))),
    }
}

fn parse_starter(v: &str) -> Result<Starter> {
    match v {
        "taylor" => Ok(Starter::Taylor),
        "backward-euler" => Ok(Starter::BackwardEuler),
        _ => Err(Error::Config(format!(
            "starter: expected taylor | backward-euler, got '{v}'"
        ))),
    }
}

/// One configuration layer: ordered key=value assignments.
type Pairs = Vec<(String, String)>;

fn parse_config_file(path: &Path) -> Result<Pairs> {
    let text = fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "{}:{}: expected key = value, got '{line}'",
                path.display(),
                i + 1
            ))
        })?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

/// Applies one layer. The preset key acts first so that other keys of the
/// same layer override the preset rather than being clobbered by it.
fn apply_pairs(cfg: &mut RunConfig, pairs: &Pairs, explicit: &mut HashSet<&'static str>) -> Result<()> {
    if let Some((_, v)) = pairs.iter().find(|(k, _)| k == "test") {
        cfg.apply_preset(parse_preset(v)?);
    }
    for (k, v) in pairs {
        match k.as_str() {
            "test" => {}
            "nu" => cfg.params.nu = parse_f64(k, v)?,
            "eta" => cfg.params.eta = parse_f64(k, v)?,
            "rho" => cfg.params.rho = parse_f64(k, v)?,
            "g" => cfg.params.g = parse_f64(k, v)?,
            "s0" => cfg.params.s0 = parse_f64(k, v)?,
            "alpha" => cfg.params.alpha = parse_f64(k, v)?,
            "k_min" => cfg.k.k_min = parse_f64(k, v)?,
            "k_max" => cfg.k.k_max = parse_f64(k, v)?,
            "theta" => cfg.k.theta = parse_f64(k, v)?,
            "n" => {
                cfg.n = parse_usize(k, v)?;
                explicit.insert("n");
            }
            "sigma" => {
                cfg.sigma = parse_f64(k, v)?;
                explicit.insert("sigma");
            }
            "t_end" => cfg.t_end = parse_f64(k, v)?,
            "scheme" => cfg.scheme = parse_scheme(v)?,
            "pressure" => cfg.pressure = parse_pressure(v)?,
            "starter" => cfg.starter = parse_starter(v)?,
            "interface_consistency" => cfg.interface_consistency = parse_bool(k, v)?,
            "out_dir" => cfg.out_dir = PathBuf::from(v),
            _ => {
                return Err(Error::Config(format!("unknown configuration key '{k}'")));
            }
        }
    }
    Ok(())
}

#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// Flat key=value configuration file, applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Parameter preset: test1 | test2 | test3 | custom.
    #[arg(long)]
    test: Option<String>,
    #[arg(long)]
    nu: Option<String>,
    #[arg(long)]
    eta: Option<String>,
    #[arg(long)]
    rho: Option<String>,
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    s0: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    k_min: Option<String>,
    #[arg(long)]
    k_max: Option<String>,
    /// Conductivity principal-axis angle in radians.
    #[arg(long)]
    theta: Option<String>,
    /// Cells per unit length; the reported grid spacing is 1/n.
    #[arg(long)]
    n: Option<String>,
    /// Time step.
    #[arg(long)]
    sigma: Option<String>,
    /// Final time.
    #[arg(long)]
    t_end: Option<String>,
    /// Marching scheme: bdf2 | backward-euler.
    #[arg(long)]
    scheme: Option<String>,
    /// Pressure space: q1 | q1q0.
    #[arg(long)]
    pressure: Option<String>,
    /// Start-up for the three-level scheme: taylor | backward-euler.
    #[arg(long)]
    starter: Option<String>,
    /// Include the interface defect loads of the reference fields.
    #[arg(long)]
    interface_consistency: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

impl CommonArgs {
    fn pairs(&self) -> Pairs {
        let mut p = Pairs::new();
        let mut push = |k: &str, v: &Option<String>| {
            if let Some(v) = v {
                p.push((k.to_string(), v.clone()));
            }
        };
        push("test", &self.test);
        push("nu", &self.nu);
        push("eta", &self.eta);
        push("rho", &self.rho);
        push("g", &self.g);
        push("s0", &self.s0);
        push("alpha", &self.alpha);
        push("k_min", &self.k_min);
        push("k_max", &self.k_max);
        push("theta", &self.theta);
        push("n", &self.n);
        push("sigma", &self.sigma);
        push("t_end", &self.t_end);
        push("scheme", &self.scheme);
        push("pressure", &self.pressure);
        push("starter", &self.starter);
        push("interface_consistency", &self.interface_consistency);
        if let Some(d) = &self.out_dir {
            p.push(("out_dir".to_string(), d.display().to_string()));
        }
        p
    }

    /// Defaults, then config file, then flags, then the environment override.
    fn resolve(&self) -> Result<(RunConfig, HashSet<&'static str>)> {
        let mut cfg = RunConfig::default();
        let mut explicit = HashSet::new();
        if let Some(path) = &self.config {
            apply_pairs(&mut cfg, &parse_config_file(path)?, &mut explicit)?;
        }
        apply_pairs(&mut cfg, &self.pairs(), &mut explicit)?;
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                cfg.out_dir = PathBuf::from(dir);
            }
        }
        Ok((cfg, explicit))
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "stokes-darcy",
    about = "Coupled free-flow/porous-medium transient solver",
    version
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Execute one transient solve and write per-step diagnostics.
    Run(RunArgs),
    /// Sweep a refinement parameter and tabulate observed orders.
    Convergence(ConvArgs),
    /// Run the structural property suite.
    Check,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args, Debug)]
struct ConvArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Parameter to refine: h | sigma.
    #[arg(long)]
    vary: String,
    /// Dyadic exponents l, comma separated; each level uses 2^-l.
    #[arg(long, value_delimiter = ',')]
    levels: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Vary {
    H,
    Sigma,
}

fn parse_vary(v: &str) -> Result<Vary> {
    match v {
        "h" => Ok(Vary::H),
        "sigma" => Ok(Vary::Sigma),
        _ => Err(Error::Config(format!("vary: expected h | sigma, got '{v}'"))),
    }
}

/// Build the discrete problem a configuration describes and march it,
/// returning the per-step error record.
pub fn solve_once(cfg: &RunConfig) -> Result<crate::timestep::RunResult> {
    let mesh = build_structured(Default::default(), cfg.n)?;
    let spaces = Spaces::build(&mesh, cfg.pressure);
    let ops = assemble_operators(&mesh, &spaces, &cfg.params, &cfg.k, &QuadOrders::default())?;
    let problem = ManufacturedSolution::new(cfg.params, cfg.k);
    let tr = Transient {
        mesh: &mesh,
        spaces: &spaces,
        ops: &ops,
        params: &cfg.params,
        quad: QuadOrders::default(),
        scheme: cfg.scheme,
        starter: cfg.starter,
        sigma: cfg.sigma,
        t_end: cfg.t_end,
        consistency_load: cfg.interface_consistency,
    };
    tr.run(&problem)
}

fn write_output(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let (cfg, _) = args.common.resolve()?;
    cfg.validate()?;
    let out = solve_once(&cfg)?;
    let mut csv = String::from("n, t, err_w, err_p, div_residual\n");
    for s in &out.steps {
        csv.push_str(&format!(
            "{}, {:.6e}, {:.6e}, {:.6e}, {:.6e}\n",
            s.n, s.t, s.err_w, s.err_p, s.div_residual
        ));
    }
    let path = write_output(&cfg.out_dir, &format!("run_{}.csv", cfg.test.token()), &csv)?;
    println!(
        "steps={} max_err_w={:.6e} max_err_p={:.6e} max_div_residual={:.3e} cpu_s={:.3}",
        out.steps.len() - 1,
        out.max_err_w,
        out.max_err_p,
        out.max_div_residual,
        out.cpu_s
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_convergence(args: &ConvArgs) -> Result<()> {
    let vary = parse_vary(&args.vary)?;
    let (mut cfg, explicit) = args.common.resolve()?;
    if args.levels.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 refinement levels, got {}",
            args.levels.len()
        )));
    }
    // Fixed-parameter defaults matching the published sweeps; explicit
    // settings from any layer win.
    match vary {
        Vary::H => {
            if !explicit.contains("sigma") {
                cfg.sigma = 2f64.powi(-6);
            }
        }
        Vary::Sigma => {
            if !explicit.contains("n") {
                cfg.n = 32;
            }
        }
    }
    cfg.validate()?;

    let mut records = Vec::new();
    for &l in &args.levels {
        let value = 2f64.powi(-(l as i32));
        let mut level_cfg = cfg.clone();
        match vary {
            Vary::H => level_cfg.n = 1 << l,
            Vary::Sigma => level_cfg.sigma = value,
        }
        let out = solve_once(&level_cfg)?;
        records.push(ConvergenceRecord {
            param: value,
            norm_w_exact: out.max_w_exact,
            norm_w_h: out.max_w_h,
            err_w: out.max_err_w,
            err_p: out.max_err_p,
            cpu_s: out.cpu_s,
        });
        if let Some(prev) = records.len().checked_sub(2).map(|i| &records[i]) {
            let span = (prev.param / value).log2();
            println!(
                "level 2^-{l}: err_w={:.6e} (order {:.3}) err_p={:.6e} (order {:.3})",
                out.max_err_w,
                conv_order(prev.err_w, out.max_err_w) / span,
                out.max_err_p,
                conv_order(prev.err_p, out.max_err_p) / span,
            );
        } else {
            println!(
                "level 2^-{l}: err_w={:.6e} err_p={:.6e}",
                out.max_err_w, out.max_err_p
            );
        }
    }
    let table = emit_table(&records)?;
    let name = format!(
        "table_{}_{}.csv",
        cfg.test.token(),
        match vary {
            Vary::H => "h",
            Vary::Sigma => "sigma",
        }
    );
    let path = write_output(&cfg.out_dir, &name, &table)?;
    print!("{table}");
    println!("wrote {}", path.display());
    Ok(())
}

fn cmd_check() -> Result<()> {
    let mut failures = 0usize;
    for check in all_checks() {
        match (check.run)() {
            Ok(()) => println!("{}: pass", check.name),
            Err(msg) => {
                failures += 1;
                println!("{}: FAIL ({msg})", check.name);
            }
        }
    }
    if failures == 0 {
        Ok(())
    } else {
        Err(Error::Numerical(format!("{failures} properties failed")))
    }
}

/// Exit status contract: 0 success, 1 invalid input, 2 numerical failure.
pub fn main_entry<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successful terminations.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Convergence(a) => cmd_convergence(a),
        Cmd::Check => cmd_check(),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}
