//! Command-line front end. Each subcommand runs one study and writes a JSON
//! document or a CSV table.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::analysis::{self, HolderFit};
use crate::energy::{self, linear_fit};
use crate::geom::{voluminous_eta, Point3, Tetra, Vec3};
use crate::goodtetra::{self, GoodTetraParams};
use crate::integrand::{IntegrandSpec, Mean};
use crate::minimize::{self, AnnealParams, DiscreteEnergyConfig, Quadrature};
use crate::rng::{self, domain};
use crate::surface::io::{load_mesh, write_mesh, MeshFormat};
use crate::surface::{shapes, AnalyticSurface, SurfaceOracle, TriMesh};

#[derive(Parser, Debug)]
#[command(name = "menger-surf", version, about = "Integral Menger curvature studies of surfaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// Master seed; every random stream is derived from it.
    #[arg(long, env = "MENGER_SEED", default_value_t = 0, global = true)]
    pub seed: u64,
    /// Worker threads (default: available parallelism).
    #[arg(long, env = "MENGER_THREADS", global = true)]
    pub threads: Option<usize>,
    /// Output file (default: stdout).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Output format; CSV carries the result rows only.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json, global = true)]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate an integrand on one quadruple.
    Integrand(IntegrandArgs),
    /// Monte-Carlo estimate of the energy of a whole surface.
    Energy(EnergyArgs),
    /// Energy restricted to quadruples inside a ball.
    LocalEnergy(LocalEnergyArgs),
    /// Sphere energies over a list of radii.
    Scaling(ScalingArgs),
    /// Patch integrals of the non-symmetric integrand near a shrinking triple.
    Diverge(DivergeArgs),
    /// Area density quotient of a ball patch.
    Density(DensityArgs),
    /// Beta numbers over a list of radii.
    Beta(BetaArgs),
    /// Normal oscillation against scale, with a power-law fit.
    Oscillation(OscillationArgs),
    /// Cone-growing search for a voluminous tetrahedron.
    Goodtetra(GoodTetraArgs),
    /// Simulated annealing of a mesh under an area or energy cap.
    Minimize(MinimizeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Integrand(_) => "integrand",
            Command::Energy(_) => "energy",
            Command::LocalEnergy(_) => "local-energy",
            Command::Scaling(_) => "scaling",
            Command::Diverge(_) => "diverge",
            Command::Density(_) => "density",
            Command::Beta(_) => "beta",
            Command::Oscillation(_) => "oscillation",
            Command::Goodtetra(_) => "goodtetra",
            Command::Minimize(_) => "minimize",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AnalyticKind {
    Sphere,
    Torus,
    Saddle,
    Capsule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeKind {
    Icosahedron,
    Icosphere,
    Ellipsoid,
    Cube,
    Plane,
}

#[derive(Args, Debug, Clone, Serialize)]
#[group(id = "surface", required = true, multiple = false)]
pub struct SurfaceSource {
    /// Triangle mesh file.
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Analytic surface.
    #[arg(long, value_enum)]
    pub analytic: Option<AnalyticKind>,
    /// Built-in mesh.
    #[arg(long, value_enum)]
    pub shape: Option<ShapeKind>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct SurfaceArgs {
    #[command(flatten)]
    pub source: SurfaceSource,
    /// Mesh file format (default: from the file extension).
    #[arg(long, value_enum)]
    pub mesh_format: Option<MeshFormat>,
    /// Sphere, capsule, icosahedron and icosphere radius.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Torus centre-line radius.
    #[arg(long, default_value_t = 2.0)]
    pub major: f64,
    /// Torus tube radius.
    #[arg(long, default_value_t = 1.0)]
    pub minor: f64,
    /// Half-width of the saddle patch, edge of the cube and plane.
    #[arg(long, default_value_t = 1.0)]
    pub extent: f64,
    /// Capsule length, tip to tip.
    #[arg(long, default_value_t = 10.0)]
    pub length: f64,
    /// Subdivision level of the icosphere and ellipsoid, cells per side of
    /// the plane.
    #[arg(long, default_value_t = 3)]
    pub subdiv: u32,
    /// Ellipsoid semi-axes.
    #[arg(long, value_delimiter = ',', default_value = "1.3,1,0.8")]
    pub axes: Vec<f64>,
}

impl SurfaceArgs {
    fn mesh(&self) -> Result<TriMesh, CliError> {
        let s = &self.source;
        if let Some(path) = &s.mesh {
            let format = self
                .mesh_format
                .or_else(|| MeshFormat::from_path(path))
                .ok_or_else(|| CliError::Usage(format!("cannot infer mesh format of {}", path.display())))?;
            return Ok(load_mesh(path, format)?);
        }
        let kind = s.shape.ok_or_else(|| CliError::Usage("this command needs --mesh or --shape".into()))?;
        Ok(match kind {
            ShapeKind::Icosahedron => shapes::icosahedron(self.radius),
            ShapeKind::Icosphere => shapes::icosphere(self.subdiv, self.radius),
            ShapeKind::Ellipsoid => match self.axes[..] {
                [a, b, c] => shapes::ellipsoid(a, b, c, self.subdiv),
                _ => return Err(CliError::Usage("--axes needs three values".into())),
            },
            ShapeKind::Cube => shapes::cube(self.extent),
            ShapeKind::Plane => shapes::flat_grid(self.subdiv.max(1) as usize, self.extent),
        })
    }

    fn oracle(&self) -> Result<SurfaceOracle, CliError> {
        let Some(kind) = self.source.analytic else {
            return Ok(self.mesh()?.into());
        };
        let s = match kind {
            AnalyticKind::Sphere => AnalyticSurface::sphere(self.radius),
            AnalyticKind::Torus => AnalyticSurface::torus(self.major, self.minor),
            AnalyticKind::Saddle => AnalyticSurface::saddle(self.extent),
            AnalyticKind::Capsule => AnalyticSurface::capsule(self.length, self.radius),
        }?;
        Ok(s.into())
    }
}

fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v: Vec<f64> = s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [x, y, z] if v.iter().all(|c| c.is_finite()) => Ok([x, y, z]),
        _ => Err(format!("expected three finite numbers x,y,z, got {s:?}")),
    }
}

fn parse_points(s: &str) -> Result<[[f64; 3]; 4], String> {
    let v: Vec<[f64; 3]> = s.split(';').map(parse_point).collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<_>| format!("expected four points separated by ';', got {}", v.len()))
}

fn parse_spec(s: &str) -> Result<IntegrandSpec, String> {
    IntegrandSpec::from_json(s).map_err(|e| e.to_string())
}

fn vec3(p: [f64; 3]) -> Vec3 {
    Vec3::new(p[0], p[1], p[2])
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct IntegrandArgs {
    /// Four points `x,y,z;x,y,z;x,y,z;x,y,z`.
    #[arg(long, value_parser = parse_points, allow_hyphen_values = true)]
    pub points: [[f64; 3]; 4],
    /// Integrand as JSON, e.g. `{"kind":"menger"}`.
    #[arg(long, value_parser = parse_spec)]
    pub integrand: Option<IntegrandSpec>,
    /// Also report the value raised to this power.
    #[arg(long)]
    pub p: Option<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnergyArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Integrand as JSON (default `{"kind":"menger"}`).
    #[arg(long, value_parser = parse_spec)]
    pub integrand: Option<IntegrandSpec>,
    /// Energy exponent.
    #[arg(long)]
    pub p: f64,
    /// Quadruples drawn.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct LocalEnergyArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub center: [f64; 3],
    #[arg(long)]
    pub ball_radius: f64,
    /// Integrand as JSON (default `{"kind":"menger"}`).
    #[arg(long, value_parser = parse_spec)]
    pub integrand: Option<IntegrandSpec>,
    /// Energy exponent.
    #[arg(long)]
    pub p: f64,
    /// Quadruples drawn.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ScalingArgs {
    /// Energy exponent.
    #[arg(long)]
    pub p: f64,
    /// Sphere radii.
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    pub radii: Vec<f64>,
    /// Integrand as JSON (default `{"kind":"menger"}`).
    #[arg(long, value_parser = parse_spec)]
    pub integrand: Option<IntegrandSpec>,
    /// Quadruples drawn per radius.
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DivergeArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_enum, default_value_t = Mean::Geometric)]
    pub mean: Mean,
    /// Cap radius relative to `r_n²`.
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 5)]
    pub nmax: u32,
    #[arg(long, default_value_t = 200_000)]
    pub samples: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Projected onto the surface first.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub center: [f64; 3],
    #[arg(long)]
    pub ball_radius: f64,
    #[arg(long, default_value_t = 8)]
    pub depth: u32,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct BetaArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub center: [f64; 3],
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.2,0.1,0.05")]
    pub radii: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub patch_samples: usize,
    #[arg(long, default_value_t = 2)]
    pub grid_level: u32,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct OscillationArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub center: [f64; 3],
    #[arg(long, value_delimiter = ',', default_value = "0.025,0.05,0.1,0.2,0.4")]
    pub scales: Vec<f64>,
    #[arg(long, default_value_t = 2000)]
    pub pairs: usize,
    /// Exponents to compare the fitted rate against.
    #[arg(long = "p", value_delimiter = ',', default_value = "9,10,16,24")]
    pub p_values: Vec<f64>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct GoodTetraArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub center: [f64; 3],
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub phi0: f64,
    #[arg(long, default_value_t = 4096)]
    pub rays: usize,
    #[arg(long, default_value_t = 64)]
    pub max_iterations: u32,
    /// Segments used by the projection check.
    #[arg(long, default_value_t = 2000)]
    pub projection_rays: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MinimizeMode {
    /// Minimize energy with area capped.
    Energy,
    /// Minimize area with energy capped.
    Area,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct MinimizeArgs {
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, value_enum, default_value_t = MinimizeMode::Energy)]
    pub mode: MinimizeMode,
    #[arg(long)]
    pub p: f64,
    /// Area cap (energy mode, default: start area) or energy cap (area mode,
    /// default: twice the start energy).
    #[arg(long)]
    pub cap: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub iters: u64,
    /// Random radial displacement of every start vertex, relative.
    #[arg(long, default_value_t = 0.0)]
    pub radial_noise: f64,
    /// Sampled quadrature with this many draws instead of all quadruples.
    #[arg(long)]
    pub quadrature_samples: Option<usize>,
    /// Where to write the per-iteration audit CSV.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    /// Where to write the final mesh as OBJ.
    #[arg(long)]
    pub mesh_out: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

macro_rules! runtime_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Runtime(e.to_string())
            }
        }
    )*};
}
runtime_from!(
    crate::surface::SurfaceError,
    crate::energy::EnergyError,
    crate::analysis::AnalysisError,
    crate::goodtetra::GoodTetraError,
    crate::minimize::MinimizeError,
    std::io::Error,
    serde_json::Error
);

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

enum Cell {
    F(f64),
    U(u64),
    S(String),
    B(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

/// A fixed-header table for CSV output.
struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<Cell>>,
}

impl Table {
    fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::F(x) if x.is_finite() => format!("{x:.16e}"),
                    Cell::F(x) => x.to_string(),
                    Cell::U(n) => n.to_string(),
                    Cell::S(s) => s.clone(),
                    Cell::B(b) => b.to_string(),
                })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

struct Outcome {
    result: Value,
    table: Table,
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, &argv) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli, argv: &[OsString]) -> Result<(), CliError> {
    let threads = match cli.run.threads {
        Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let start = Instant::now();
    let seed = cli.run.seed;
    let (config, outcome) = pool.install(|| dispatch(&cli.command, seed))?;
    let text = match cli.run.format {
        OutputFormat::Csv => outcome.table.render(),
        OutputFormat::Json => {
            let doc = json!({
                "command": cli.command.name(),
                "version": env!("CARGO_PKG_VERSION"),
                "seed": seed,
                "config": config,
                "result": outcome.result,
                "run": {
                    "argv": argv.iter().map(|a| a.to_string_lossy().into_owned()).collect::<Vec<_>>(),
                    "threads": threads,
                    "elapsed_ms": start.elapsed().as_secs_f64() * 1e3,
                },
            });
            serde_json::to_string_pretty(&doc)? + "\n"
        }
    };
    match &cli.run.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn dispatch(command: &Command, seed: u64) -> Result<(Value, Outcome), CliError> {
    let config = match command {
        Command::Integrand(a) => serde_json::to_value(a)?,
        Command::Energy(a) => serde_json::to_value(a)?,
        Command::LocalEnergy(a) => serde_json::to_value(a)?,
        Command::Scaling(a) => serde_json::to_value(a)?,
        Command::Diverge(a) => serde_json::to_value(a)?,
        Command::Density(a) => serde_json::to_value(a)?,
        Command::Beta(a) => serde_json::to_value(a)?,
        Command::Oscillation(a) => serde_json::to_value(a)?,
        Command::Goodtetra(a) => serde_json::to_value(a)?,
        Command::Minimize(a) => serde_json::to_value(a)?,
    };
    let outcome = match command {
        Command::Integrand(a) => integrand(a)?,
        Command::Energy(a) => energy(a, seed)?,
        Command::LocalEnergy(a) => local_energy(a, seed)?,
        Command::Scaling(a) => scaling(a, seed)?,
        Command::Diverge(a) => diverge(a, seed)?,
        Command::Density(a) => density(a)?,
        Command::Beta(a) => beta(a, seed)?,
        Command::Oscillation(a) => oscillation(a, seed)?,
        Command::Goodtetra(a) => good_tetra(a, seed)?,
        Command::Minimize(a) => minimize(a, seed)?,
    };
    Ok((config, outcome))
}

fn integrand(a: &IntegrandArgs) -> Result<Outcome, CliError> {
    let [p0, p1, p2, p3] = a.points;
    let t = Tetra::new(vec3(p0), vec3(p1), vec3(p2), vec3(p3));
    let spec = a.integrand.unwrap_or(IntegrandSpec::Menger);
    let value = spec.eval(&t);
    let powered = a.p.map(|p| value.powf(p));
    let diameter = t.diameter();
    let eta = voluminous_eta(&t, diameter);
    Ok(Outcome {
        result: json!({ "spec": spec, "value": value, "powered": powered, "diameter": diameter, "voluminous_eta": eta }),
        table: Table {
            header: &["value", "powered", "diameter"],
            rows: vec![vec![value.into(), powered.unwrap_or(f64::NAN).into(), diameter.into()]],
        },
    })
}

fn estimate_table(e: &energy::EnergyEstimate) -> Table {
    Table {
        header: &["value", "std_error", "n_samples", "seed", "p"],
        rows: vec![vec![e.value.into(), e.std_error.into(), Cell::U(e.n_samples), Cell::U(e.seed), e.p.into()]],
    }
}

fn energy(a: &EnergyArgs, seed: u64) -> Result<Outcome, CliError> {
    let oracle = a.surface.oracle()?;
    let spec = a.integrand.unwrap_or(IntegrandSpec::Menger);
    let e = energy::estimate_mp(&oracle, spec, a.p, a.samples, seed)?;
    Ok(Outcome { result: serde_json::to_value(e)?, table: estimate_table(&e) })
}

fn local_energy(a: &LocalEnergyArgs, seed: u64) -> Result<Outcome, CliError> {
    let oracle = a.surface.oracle()?;
    let spec = a.integrand.unwrap_or(IntegrandSpec::Menger);
    let e = energy::local_energy(&oracle, vec3(a.center), a.ball_radius, spec, a.p, a.samples, seed)?;
    Ok(Outcome { result: serde_json::to_value(e)?, table: estimate_table(&e) })
}

fn scaling(a: &ScalingArgs, seed: u64) -> Result<Outcome, CliError> {
    let spec = a.integrand.unwrap_or(IntegrandSpec::Menger);
    let rows = energy::scaling_study(spec, a.p, &a.radii, a.samples, seed)?;
    let table = Table {
        header: &["radius", "value", "std_error", "normalized"],
        rows: rows
            .iter()
            .map(|r| vec![r.radius.into(), r.estimate.value.into(), r.estimate.std_error.into(), r.normalized.into()])
            .collect(),
    };
    Ok(Outcome { result: json!({ "rows": rows }), table })
}

fn diverge(a: &DivergeArgs, seed: u64) -> Result<Outcome, CliError> {
    let s = energy::divergence_study(a.alpha, a.p, a.mean, a.eps, a.nmax, a.samples, seed)?;
    let table = Table {
        header: &["n", "r_n", "patch_integral", "std_error", "min_dist_ratio"],
        rows: s
            .rows
            .iter()
            .map(|r| {
                vec![Cell::U(r.n.into()), r.r_n.into(), r.patch_integral.into(), r.std_error.into(), r.min_dist_ratio.into()]
            })
            .collect(),
    };
    Ok(Outcome { result: serde_json::to_value(&s)?, table })
}

fn on_surface(oracle: &SurfaceOracle, c: [f64; 3]) -> Point3 {
    oracle.closest_point(vec3(c)).position
}

fn density(a: &DensityArgs) -> Result<Outcome, CliError> {
    let oracle = a.surface.oracle()?;
    let x = on_surface(&oracle, a.center);
    let r = analysis::density_quotient(&oracle, x, a.ball_radius, a.depth)?;
    let table = Table {
        header: &["radius", "patch_area", "quotient", "passes_theorem31", "error_bound"],
        rows: vec![vec![r.radius.into(), r.patch_area.into(), r.quotient.into(), Cell::B(r.passes_theorem31), r.error_bound.into()]],
    };
    Ok(Outcome { result: serde_json::to_value(r)?, table })
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || ys.iter().any(|&y| !(y > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    Some(linear_fit(&lx, &ly).0)
}

fn beta(a: &BetaArgs, seed: u64) -> Result<Outcome, CliError> {
    let oracle = a.surface.oracle()?;
    let x = on_surface(&oracle, a.center);
    let rows = a
        .radii
        .iter()
        .enumerate()
        .map(|(i, &r)| analysis::beta_number(&oracle, x, r, a.patch_samples, a.grid_level, rng::derive(seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let betas: Vec<f64> = rows.iter().map(|r| r.beta).collect();
    let slope = log_log_slope(&a.radii, &betas);
    let table = Table {
        header: &["radius", "beta", "normal_x", "normal_y", "normal_z"],
        rows: rows
            .iter()
            .map(|r| vec![r.radius.into(), r.beta.into(), r.best_normal.x.into(), r.best_normal.y.into(), r.best_normal.z.into()])
            .collect(),
    };
    Ok(Outcome { result: json!({ "center": x, "rows": rows, "log_log_slope": slope }), table })
}

fn oscillation(a: &OscillationArgs, seed: u64) -> Result<Outcome, CliError> {
    let oracle = a.surface.oracle()?;
    let x = on_surface(&oracle, a.center);
    let rows = analysis::normal_oscillation_profile(&oracle, x, &a.scales, a.pairs, seed)?;
    let profile: Vec<(f64, f64)> = rows.iter().map(|r| (r.d, r.max_oscillation)).collect();
    let fit: Option<HolderFit> = analysis::holder_exponent_fit(&profile).ok();
    let comparisons = a
        .p_values
        .iter()
        .map(|&p| {
            let e = analysis::exponents(p)?;
            Ok(json!({
                "p": p,
                "kappa": e.kappa,
                "lambda": e.lambda,
                "fit_dominates_lambda": fit.map(|f| f.exponent >= e.lambda),
            }))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let table = Table {
        header: &["d", "max_oscillation", "pairs"],
        rows: rows.iter().map(|r| vec![r.d.into(), r.max_oscillation.into(), Cell::U(r.pairs as u64)]).collect(),
    };
    Ok(Outcome { result: json!({ "center": x, "rows": rows, "fit": fit, "exponents": comparisons }), table })
}

fn good_tetra(a: &GoodTetraArgs, seed: u64) -> Result<Outcome, CliError> {
    let oracle = a.surface.oracle()?;
    let x0 = oracle.closest_point(vec3(a.center));
    let params = GoodTetraParams { phi0: a.phi0, ray_count: a.rays, max_iterations: a.max_iterations, ..Default::default() };
    let r = goodtetra::find_good_tetra(&oracle, x0, &params)?;
    let fraction =
        goodtetra::verify_projection(&oracle, x0.position, r.stopping_distance / 2.0, r.witness_plane_normal, a.projection_rays, seed);
    let label = serde_json::to_value(r.case_label)?.as_str().unwrap_or_default().to_owned();
    let table = Table {
        header: &["stopping_distance", "case_label", "eta_achieved", "iterations", "projection_fraction"],
        rows: vec![vec![
            r.stopping_distance.into(),
            Cell::S(label),
            r.eta_achieved.into(),
            Cell::U(r.iterations.into()),
            fraction.into(),
        ]],
    };
    let mut result = serde_json::to_value(&r)?;
    result["projection_fraction"] = json!(fraction);
    Ok(Outcome { result, table })
}

fn write_audit(path: &Path, audit: &[minimize::AuditRow]) -> Result<(), CliError> {
    let mut s = String::from("iteration,objective,constraint_value,accepted\n");
    for r in audit {
        let _ = writeln!(s, "{},{:.16e},{:.16e},{}", r.iteration, r.objective, r.constraint_value, r.accepted);
    }
    Ok(std::fs::write(path, s)?)
}

fn minimize(a: &MinimizeArgs, seed: u64) -> Result<Outcome, CliError> {
    let mut mesh = a.surface.mesh()?;
    if a.radial_noise > 0.0 {
        let mut r = rng::stream(seed, domain::MINIMIZE, 1);
        let noise = a.radial_noise;
        let v: Vec<Point3> = mesh.vertices().iter().map(|&x| x * (1.0 + noise * (2.0 * r.random::<f64>() - 1.0))).collect();
        mesh = TriMesh::new(v, mesh.faces().to_vec())?;
    }
    let quadrature = match a.quadrature_samples {
        Some(n) => Quadrature::Sampled { n, seed: rng::derive(seed, domain::DISCRETE) },
        None => Quadrature::AllVertexQuadruples,
    };
    let config = DiscreteEnergyConfig { p: a.p, quadrature };
    let params = AnnealParams::default();
    let state = match a.mode {
        MinimizeMode::Energy => {
            let cap = a.cap.unwrap_or(mesh.total_area());
            minimize::minimize_energy_area_cap(&mesh, &config, cap, a.iters, seed, &params)?
        }
        MinimizeMode::Area => {
            let cap = match a.cap {
                Some(c) => c,
                None => 2.0 * minimize::discrete_energy(&mesh, &config)?,
            };
            minimize::minimize_area_energy_cap(&mesh, &config, cap, a.iters, seed, &params)?
        }
    };
    if let Some(path) = &a.audit {
        write_audit(path, &state.audit)?;
    }
    if let Some(path) = &a.mesh_out {
        write_mesh(&state.mesh, path, MeshFormat::Obj)?;
    }
    let table = Table {
        header: &["iteration", "objective", "constraint_value", "accepted"],
        rows: state
            .audit
            .iter()
            .map(|r| vec![Cell::U(r.iteration), r.objective.into(), r.constraint_value.into(), Cell::B(r.accepted)])
            .collect(),
    };
    let result = json!({
        "mode": a.mode,
        "initial_objective": state.initial_objective,
        "initial_constraint": state.initial_constraint,
        "objective": state.objective,
        "best_objective": state.best_objective,
        "constraint_value": state.constraint_value,
        "temperature": state.temperature,
        "iteration": state.iteration,
        "accepted_moves": state.accepted_moves,
        "self_intersecting": state.self_intersecting,
        "vertices": state.mesh.vertices().len(),
    });
    Ok(Outcome { result, table })
}
