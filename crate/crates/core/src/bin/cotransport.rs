use clap::{Parser, Subcommand, ValueEnum};
use cotransport::planning::{
    generate_min_snap, plan_waypoints, Boundary, OccupancyGrid, PlannerConfig, PlanningError, Pose, TrajectorySpec, Waypoint,
};
use cotransport::sim::{format_sig6, run_to_dir, ScenarioConfig, SimError};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_ERROR: u8 = 1;
const EXIT_NO_PATH: u8 = 3;
const EXIT_FAULT: u8 = 4;

#[derive(Parser)]
#[command(name = "cotransport", version, about = "Leader-follower bar transport simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. `plan` and `traj` print to stdout when omitted.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write `<name>.csv` and `<name>.metrics.json`.
    Run { scenario: PathBuf },
    /// Plan waypoints over an occupancy grid. Poses are `x,y,theta`.
    Plan {
        grid: PathBuf,
        #[arg(allow_hyphen_values = true)]
        start: String,
        #[arg(allow_hyphen_values = true)]
        goal: String,
        /// Planner settings as a TOML file.
        #[arg(long)]
        settings: Option<PathBuf>,
    },
    /// Fit a rest-to-rest minimum-snap trajectory through `x y t` waypoints.
    Traj {
        waypoints: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        altitude: f64,
        /// Sample rate for CSV output [Hz].
        #[arg(long, default_value_t = 10.0)]
        rate: f64,
    },
    /// Parse and check a scenario without running it.
    Validate { scenario: PathBuf },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl ToString) -> Self {
        Self { code, message: message.to_string() }
    }
}

impl From<SimError> for Failure {
    fn from(e: SimError) -> Self {
        let code = match &e {
            SimError::Planning(PlanningError::NoPath) => EXIT_NO_PATH,
            SimError::Fault { .. } | SimError::EstimatorFault { .. } => EXIT_FAULT,
            _ => EXIT_ERROR,
        };
        Self::new(code, e)
    }
}

impl From<PlanningError> for Failure {
    fn from(e: PlanningError) -> Self {
        let code = if e == PlanningError::NoPath { EXIT_NO_PATH } else { EXIT_ERROR };
        Self::new(code, e)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Run { scenario } => run(cli, scenario),
        Command::Plan { grid, start, goal, settings } => plan(cli, grid, start, goal, settings.as_deref()),
        Command::Traj { waypoints, altitude, rate } => traj(cli, waypoints, *altitude, *rate),
        Command::Validate { scenario } => {
            let cfg = load(cli, scenario)?;
            cfg.validate()?;
            cfg.waypoints()?;
            println!("{}: ok", scenario.display());
            Ok(())
        }
    }
}

fn load(cli: &Cli, path: &Path) -> Result<ScenarioConfig, Failure> {
    let mut cfg = ScenarioConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn run(cli: &Cli, scenario: &Path) -> Result<(), Failure> {
    let cfg = load(cli, scenario)?;
    let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    let out = run_to_dir(&cfg, &dir)?;
    match cli.format {
        Format::Json => print!("{}", out.metrics.to_json()),
        Format::Csv => {
            let show = |v: Option<f64>| v.map_or("nan".into(), format_sig6);
            println!("name,rows,rmse_x,rmse_y,rmse_eta1,rmse_eta2");
            println!(
                "{},{},{},{},{},{}",
                out.metrics.name,
                out.rows,
                show(out.metrics.rmse_x),
                show(out.metrics.rmse_y),
                show(out.metrics.rmse_eta1),
                show(out.metrics.rmse_eta2)
            );
        }
    }
    Ok(())
}

fn parse_pose(s: &str) -> Result<Pose, Failure> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| Failure::new(EXIT_ERROR, format!("pose `{s}`: {e}")))?;
    match v[..] {
        [x, y, theta] => Ok(Pose::new(x, y, theta)),
        [x, y] => Ok(Pose::new(x, y, 0.0)),
        _ => Err(Failure::new(EXIT_ERROR, format!("pose `{s}` must be `x,y[,theta]`"))),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(EXIT_ERROR, format!("{}: {e}", path.display())))
}

fn emit(cli: &Cli, file: &str, text: &str) -> Result<(), Failure> {
    match &cli.out_dir {
        Some(dir) => {
            let path = dir.join(file);
            std::fs::create_dir_all(dir)
                .and_then(|_| std::fs::write(&path, text))
                .map_err(|e| Failure::new(EXIT_ERROR, format!("{}: {e}", path.display())))
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::new(EXIT_ERROR, e)),
    }
}

fn plan(cli: &Cli, grid: &Path, start: &str, goal: &str, settings: Option<&Path>) -> Result<(), Failure> {
    let map = OccupancyGrid::parse(&read(grid)?)?;
    let cfg: PlannerConfig = match settings {
        Some(p) => toml::from_str(&read(p)?).map_err(|e| Failure::new(EXIT_ERROR, format!("{}: {e}", p.display())))?,
        None => PlannerConfig::default(),
    };
    let points = plan_waypoints(&map, parse_pose(start)?, parse_pose(goal)?, &cfg)?;
    match cli.format {
        Format::Json => emit(cli, "waypoints.json", &(json(&points) + "\n")),
        Format::Csv => emit(cli, "waypoints.csv", &waypoints_text(&points)),
    }
}

fn waypoints_text(points: &[Waypoint]) -> String {
    let mut s = String::from("x,y,t\n");
    for p in points {
        s += &format!("{},{},{}\n", format_sig6(p.x), format_sig6(p.y), format_sig6(p.t));
    }
    s
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

/// Reads `x y t` rows separated by whitespace or commas; `#` starts a comment.
fn parse_waypoints(text: &str) -> Result<Vec<Waypoint>, Failure> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| Failure::new(EXIT_ERROR, format!("line {}: {e}", n + 1)))?;
        match v[..] {
            [x, y, t] => out.push(Waypoint::new(x, y, t)),
            _ => return Err(Failure::new(EXIT_ERROR, format!("line {}: expected `x y t`", n + 1))),
        }
    }
    Ok(out)
}

fn traj(cli: &Cli, path: &Path, altitude: f64, rate: f64) -> Result<(), Failure> {
    let points = parse_waypoints(&read(path)?)?;
    let spec = generate_min_snap(&points, &Boundary::default(), altitude)?;
    match cli.format {
        Format::Json => emit(cli, "trajectory.json", &(json(&spec) + "\n")),
        Format::Csv => {
            if !(rate > 0.0 && rate.is_finite()) {
                return Err(Failure::new(EXIT_ERROR, "--rate must be positive"));
            }
            emit(cli, "trajectory.csv", &sample_text(&spec, rate)?)
        }
    }
}

fn sample_text(spec: &TrajectorySpec, rate: f64) -> Result<String, Failure> {
    let mut s = String::from("t,x,y,vx,vy,ax,ay,theta,speed,omega\n");
    let (t0, t1) = (spec.start_time(), spec.end_time());
    let n = ((t1 - t0) * rate + 1e-9).floor() as usize;
    let mut heading = 0.0;
    for k in 0..=n {
        let t = (t0 + k as f64 / rate).min(t1);
        let r = spec.sample(t, heading);
        heading = r.theta;
        let row =
            [t, r.position.x, r.position.y, r.velocity.x, r.velocity.y, r.acceleration.x, r.acceleration.y, r.theta, r.speed, r.omega];
        s += &row.iter().map(|v| format_sig6(*v)).collect::<Vec<_>>().join(",");
        s.push('\n');
    }
    Ok(s)
}
