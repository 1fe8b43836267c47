//! Command-line front end: every library capability as a subcommand with
//! JSON results on stdout (or a file) and CSV/PGM side outputs.

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex;
use polyabs::placement::{ClusterSolution, PlacementResult};
use polyabs::{
    certify_local_min_with, closed_loop_poly, cluster_all_poles, fragility_experiment,
    is_hurwitz_stable, minimize_abscissa, objective, place_poles, pseudozero_grid_with,
    pseudozero_perturbation, step_response, CertifyOptions, Controller64, Error, OptOptions,
    Plant64, Poly64, PseudozeroOptions, Region, RootSet64,
};
use serde::Serialize;

const SCHEMA_VERSION: &str = "1";

#[derive(Parser)]
#[command(
    name = "polyabs",
    version,
    about = "Spectral abscissa tools: stability tests, pole placement and \
             clustering, nonsmooth minimization, optimality certificates, \
             step responses, pseudozero sets"
)]
struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hurwitz stability report for a polynomial or a closed loop.
    Stability(TargetInput),
    /// Roots, clusters, and spectral abscissa.
    Abscissa(TargetInput),
    /// Exact pole placement (controller order >= plant order - 1).
    Place(PlaceArgs),
    /// Controllers putting every closed-loop pole at one point.
    Cluster(ClusterArgs),
    /// Gradient-sampling minimization of the closed-loop abscissa.
    Optimize(OptimizeArgs),
    /// Sharp-local-minimum certificate at a controller.
    Certify(CertifyArgs),
    /// Unit-step response of the closed loop.
    Step(StepArgs),
    /// Real pseudozero distance at a point or over a grid.
    Pseudozero(PseudozeroArgs),
    /// Root movement under significant-digit rounding of the controller.
    Fragility(FragilityArgs),
}

/// A polynomial given directly, or a plant/controller pair whose closed
/// loop is analyzed.
#[derive(Args)]
struct TargetInput {
    /// Polynomial coefficients, ascending; inline JSON or a file path.
    #[arg(long)]
    poly: Option<String>,
    /// "benchmark", a plant JSON file, or inline JSON.
    #[arg(long)]
    plant: Option<String>,
    /// Controller JSON, inline or a file path.
    #[arg(long)]
    controller: Option<String>,
}

#[derive(Args)]
struct PlaceArgs {
    #[arg(long)]
    plant: Option<String>,
    /// Controller order m.
    #[arg(long)]
    order: usize,
    /// Target closed-loop polynomial; inline JSON or a file path.
    #[arg(long)]
    target: Option<String>,
    /// Real target roots, comma separated; expands to the monic product.
    #[arg(long, conflicts_with = "target", allow_hyphen_values = true)]
    roots: Option<String>,
}

#[derive(Args)]
struct ClusterArgs {
    #[arg(long)]
    plant: Option<String>,
    /// Controller order m.
    #[arg(long)]
    order: usize,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    plant: Option<String>,
    /// Controller order m.
    #[arg(long)]
    order: usize,
    /// Starting controller; inline JSON or a file path. Zeros when omitted.
    #[arg(long)]
    start: Option<String>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    sample_count: Option<usize>,
    #[arg(long)]
    termination_tol: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sampling radii, comma separated, strictly decreasing.
    #[arg(long, allow_hyphen_values = true)]
    radius_schedule: Option<String>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    plant: Option<String>,
    #[arg(long)]
    controller: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Random directions used for the growth-rate probe.
    #[arg(long)]
    tau_samples: Option<usize>,
}

#[derive(Args)]
struct StepArgs {
    #[arg(long)]
    plant: Option<String>,
    #[arg(long)]
    controller: Option<String>,
    /// Simulation length in seconds.
    #[arg(long, default_value_t = 30.0)]
    horizon: f64,
    /// Integration step in seconds.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Write the sampled series as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct PseudozeroArgs {
    #[command(flatten)]
    input: TargetInput,
    /// Query a single point "re,im" instead of a grid.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    /// Grid rectangle "re_min,re_max,im_min,im_max".
    #[arg(long, allow_hyphen_values = true)]
    region: Option<String>,
    /// Grid resolution "nx,ny".
    #[arg(long, default_value = "200,200")]
    resolution: String,
    /// Membership threshold on the perturbation norm.
    #[arg(long, default_value_t = 1e-4)]
    epsilon: f64,
    /// Keep the leading coefficient fixed.
    #[arg(long)]
    fix_leading: bool,
    /// Write the distance field as CSV here.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Write the membership raster as PGM here.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct FragilityArgs {
    #[arg(long)]
    plant: Option<String>,
    #[arg(long)]
    controller: Option<String>,
    /// Significant decimal digits kept in each coefficient.
    #[arg(long, default_value_t = 5)]
    digits: u32,
}

enum CliError {
    Usage(String),
    Domain(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidOptions(_)
            | Error::InvalidPlant(_)
            | Error::InvalidController(_)
            | Error::DegreeMismatch { .. }
            | Error::ZeroPolynomial
            | Error::ConstantPolynomial => CliError::Usage(e.to_string()),
            other => CliError::Domain(other.to_string()),
        }
    }
}

/// Optional defaults picked up from the file named by POLYABS_CONFIG.
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    plant: Option<String>,
    controller: Option<String>,
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Domain(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = load_config()?;
    let out = cli.output.as_ref();
    match cli.command {
        Command::Stability(args) => {
            let poly = args.resolve(&cfg)?;
            let report = is_hurwitz_stable(&poly)?;
            #[derive(Serialize)]
            struct Out {
                stable: bool,
                minors: Vec<f64>,
                matrix: Vec<Vec<f64>>,
            }
            emit(
                "stability",
                Out { stable: report.stable, minors: report.minors, matrix: report.matrix.to_rows() },
                out,
            )
        }
        Command::Abscissa(args) => {
            let poly = args.resolve(&cfg)?;
            let roots = poly.roots()?;
            #[derive(Serialize)]
            struct Out {
                poly: Poly64,
                roots: RootSet64,
            }
            emit("abscissa", Out { poly, roots }, out)
        }
        Command::Place(args) => {
            let plant = parse_plant(required(&args.plant, &cfg.plant, "--plant")?)?;
            let target = match (&args.target, &args.roots) {
                (Some(spec), None) => parse_poly(spec)?,
                (None, Some(list)) => {
                    let roots = parse_float_list(list, "--roots")?;
                    let mut p = Poly64::one();
                    for r in roots {
                        p = &p * &Poly64::linear(Complex::new(r, 0.0));
                    }
                    p
                }
                _ => {
                    return Err(CliError::Usage(
                        "place needs exactly one of --target or --roots".into(),
                    ))
                }
            };
            let placement = place_poles(&plant, args.order, &target)?;
            let objective = objective(&plant, &placement.controller)?;
            #[derive(Serialize)]
            struct Out {
                placement: PlacementResult<f64>,
                objective: f64,
            }
            emit("place", Out { placement, objective }, out)
        }
        Command::Cluster(args) => {
            let plant = parse_plant(required(&args.plant, &cfg.plant, "--plant")?)?;
            let solutions = cluster_all_poles(&plant, args.order)?;
            let best = solutions
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.z.partial_cmp(&b.1.z).expect("finite cluster locations"))
                .map(|(i, _)| i);
            #[derive(Serialize)]
            struct Out<'a> {
                best: Option<&'a ClusterSolution<f64>>,
                solutions: &'a [ClusterSolution<f64>],
            }
            emit("cluster", Out { best: best.map(|i| &solutions[i]), solutions: &solutions }, out)
        }
        Command::Optimize(args) => {
            let plant = parse_plant(required(&args.plant, &cfg.plant, "--plant")?)?;
            let dim = 2 * args.order + 1;
            let start = match &args.start {
                Some(spec) => parse_controller(spec)?,
                None => Controller64::from_parameters(args.order, &vec![0.0; dim]),
            };
            let mut opts = OptOptions::default_for(dim);
            if let Some(v) = args.max_iters {
                opts.max_iters = v;
            }
            if let Some(v) = args.sample_count {
                opts.sample_count = v;
            }
            if let Some(v) = args.termination_tol {
                opts.termination_tol = v;
            }
            if let Some(v) = args.seed.or(cfg.seed) {
                opts.seed = v;
            }
            if let Some(list) = &args.radius_schedule {
                opts.radius_schedule = parse_float_list(list, "--radius-schedule")?;
            }
            let result = minimize_abscissa(&plant, args.order, &start, &opts)?;
            emit("optimize", result, out)
        }
        Command::Certify(args) => {
            let plant = parse_plant(required(&args.plant, &cfg.plant, "--plant")?)?;
            let k = parse_controller(required(&args.controller, &cfg.controller, "--controller")?)?;
            let mut opts = CertifyOptions::default();
            if let Some(v) = args.seed.or(cfg.seed) {
                opts.seed = v;
            }
            if let Some(v) = args.tau_samples {
                opts.tau_samples = v;
            }
            let report = certify_local_min_with(&plant, &k, &opts)?;
            emit("certify", report, out)
        }
        Command::Step(args) => {
            let plant = parse_plant(required(&args.plant, &cfg.plant, "--plant")?)?;
            let k = parse_controller(required(&args.controller, &cfg.controller, "--controller")?)?;
            let resp = step_response(&plant, &k, args.horizon, args.dt)?;
            if let Some(path) = &args.csv {
                let mut file = create_file(path)?;
                resp.write_csv(&mut file).map_err(|e| write_error(path, e))?;
            }
            #[derive(Serialize)]
            struct Out {
                final_value: f64,
                settling_time: Option<f64>,
                samples: usize,
                horizon: f64,
                dt: f64,
            }
            emit(
                "step",
                Out {
                    final_value: resp.final_value,
                    settling_time: resp.settling_time,
                    samples: resp.times.len(),
                    horizon: args.horizon,
                    dt: args.dt,
                },
                out,
            )
        }
        Command::Pseudozero(args) => {
            let poly = args.input.resolve(&cfg)?;
            let popts = PseudozeroOptions { perturb_leading: !args.fix_leading };
            if let Some(point) = &args.point {
                let xy = parse_floats(point, 2, "--point")?;
                let z = Complex::new(xy[0], xy[1]);
                let (distance, perturbation) = pseudozero_perturbation(&poly, z, &popts)?;
                #[derive(Serialize)]
                struct Out {
                    point: [f64; 2],
                    distance: f64,
                    perturbation: Vec<f64>,
                }
                return emit(
                    "pseudozero",
                    Out { point: [z.re, z.im], distance, perturbation },
                    out,
                );
            }

            let region = match &args.region {
                Some(spec) => {
                    let r = parse_floats(spec, 4, "--region")?;
                    Region::new(r[0], r[1], r[2], r[3])?
                }
                None => {
                    return Err(CliError::Usage(
                        "pseudozero needs --point for a single query or --region for a grid"
                            .into(),
                    ))
                }
            };
            let res = parse_floats(&args.resolution, 2, "--resolution")?;
            let (nx, ny) = (res[0] as usize, res[1] as usize);
            let grid = pseudozero_grid_with(&poly, region, (nx, ny), args.epsilon, &popts)?;
            if let Some(path) = &args.csv {
                let mut file = create_file(path)?;
                grid.write_distances_csv(&mut file).map_err(|e| write_error(path, e))?;
            }
            if let Some(path) = &args.pgm {
                let mut file = create_file(path)?;
                grid.write_membership_pgm(&mut file).map_err(|e| write_error(path, e))?;
            }
            let member_count: usize =
                grid.membership().iter().map(|row| row.iter().filter(|&&m| m).count()).sum();
            let mut min_distance = f64::INFINITY;
            for iy in 0..ny {
                for ix in 0..nx {
                    min_distance = min_distance.min(grid.distances.at(iy, ix));
                }
            }
            #[derive(Serialize)]
            struct RegionOut {
                re_min: f64,
                re_max: f64,
                im_min: f64,
                im_max: f64,
            }
            #[derive(Serialize)]
            struct Out {
                region: RegionOut,
                resolution: [usize; 2],
                epsilon: f64,
                member_count: usize,
                min_distance: f64,
            }
            emit(
                "pseudozero",
                Out {
                    region: RegionOut {
                        re_min: region.re_min,
                        re_max: region.re_max,
                        im_min: region.im_min,
                        im_max: region.im_max,
                    },
                    resolution: [nx, ny],
                    epsilon: args.epsilon,
                    member_count,
                    min_distance,
                },
                out,
            )
        }
        Command::Fragility(args) => {
            let plant = parse_plant(required(&args.plant, &cfg.plant, "--plant")?)?;
            let k = parse_controller(required(&args.controller, &cfg.controller, "--controller")?)?;
            let report = fragility_experiment(&plant, &k, args.digits)?;
            #[derive(Serialize)]
            struct Out {
                digits: u32,
                rounded: Controller64,
                nominal_roots: Vec<[f64; 2]>,
                rounded_roots: Vec<[f64; 2]>,
                max_displacement: f64,
            }
            emit(
                "fragility",
                Out {
                    digits: args.digits,
                    rounded: report.rounded,
                    nominal_roots: report.nominal_roots.iter().map(|r| [r.re, r.im]).collect(),
                    rounded_roots: report.rounded_roots.iter().map(|r| [r.re, r.im]).collect(),
                    max_displacement: report.max_displacement,
                },
                out,
            )
        }
    }
}

impl TargetInput {
    /// Either the polynomial itself or the closed loop of plant and
    /// controller, with config fallbacks for the latter.
    fn resolve(&self, cfg: &ConfigFile) -> Result<Poly64, CliError> {
        if let Some(spec) = &self.poly {
            if self.plant.is_some() || self.controller.is_some() {
                return Err(CliError::Usage(
                    "--poly conflicts with --plant/--controller".into(),
                ));
            }
            return parse_poly(spec);
        }
        let plant = parse_plant(required(&self.plant, &cfg.plant, "--plant")?)?;
        let k = parse_controller(required(&self.controller, &cfg.controller, "--controller")?)?;
        Ok(closed_loop_poly(&plant, &k))
    }
}

fn load_config() -> Result<ConfigFile, CliError> {
    match std::env::var_os("POLYABS_CONFIG") {
        None => Ok(ConfigFile::default()),
        Some(path) => {
            let path = PathBuf::from(path);
            let text = fs::read_to_string(&path).map_err(|e| {
                CliError::Usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("malformed config {}: {e}", path.display())))
        }
    }
}

fn required<'a>(
    flag: &'a Option<String>,
    fallback: &'a Option<String>,
    name: &str,
) -> Result<&'a str, CliError> {
    flag.as_deref()
        .or(fallback.as_deref())
        .ok_or_else(|| CliError::Usage(format!("{name} is required (flag or config file)")))
}

/// Inline JSON passes through; anything else is read as a file.
fn read_spec(spec: &str) -> Result<String, CliError> {
    let trimmed = spec.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        Ok(spec.to_string())
    } else {
        fs::read_to_string(spec)
            .map_err(|e| CliError::Usage(format!("cannot read {spec}: {e}")))
    }
}

fn parse_plant(spec: &str) -> Result<Plant64, CliError> {
    if spec == "benchmark" {
        return Ok(Plant64::benchmark());
    }
    let text = read_spec(spec)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid plant: {e}")))
}

fn parse_controller(spec: &str) -> Result<Controller64, CliError> {
    let text = read_spec(spec)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid controller: {e}")))
}

fn parse_poly(spec: &str) -> Result<Poly64, CliError> {
    let text = read_spec(spec)?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid polynomial: {e}")))
}

fn parse_floats(s: &str, n: usize, name: &str) -> Result<Vec<f64>, CliError> {
    let values = parse_float_list(s, name)?;
    if values.len() != n {
        return Err(CliError::Usage(format!(
            "{name} needs {n} comma-separated values, got {}",
            values.len()
        )));
    }
    Ok(values)
}

fn parse_float_list(s: &str, name: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|part| {
            part.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("{name}: bad number {part:?}: {e}")))
        })
        .collect()
}

fn create_file(path: &PathBuf) -> Result<fs::File, CliError> {
    fs::File::create(path)
        .map_err(|e| CliError::Usage(format!("cannot create {}: {e}", path.display())))
}

fn write_error(path: &PathBuf, e: io::Error) -> CliError {
    CliError::Domain(format!("writing {} failed: {e}", path.display()))
}

/// JSON formatter printing every float with 17 significant digits so that
/// outputs re-read bit for bit.
struct SciFormatter;

impl serde_json::ser::Formatter for SciFormatter {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(writer, "{value:.16e}")
        } else {
            // Matches serde_json's own convention for non-finite values.
            writer.write_all(b"null")
        }
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

fn emit<R: Serialize>(
    command: &'static str,
    result: R,
    output: Option<&PathBuf>,
) -> Result<(), CliError> {
    #[derive(Serialize)]
    struct Envelope<R: Serialize> {
        schema_version: &'static str,
        command: &'static str,
        result: R,
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter);
    Envelope { schema_version: SCHEMA_VERSION, command, result }
        .serialize(&mut ser)
        .map_err(|e| CliError::Domain(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    match output {
        None => io::stdout()
            .write_all(&buf)
            .map_err(|e| CliError::Domain(format!("writing stdout failed: {e}"))),
        Some(path) => fs::write(path, &buf)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display()))),
    }
}
