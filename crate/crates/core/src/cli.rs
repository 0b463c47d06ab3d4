//! Command-line front end. Exit codes: 0 success, 1 usage error, 2 bad input data.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::adam::AdamConfig;
use crate::analysis::{clusters_from_labels, ols_fit, planning_distance_matrix, ward_cluster};
use crate::baselines::optimal_plan_length;
use crate::error::Error;
use crate::maze::{four_rooms_maze, parse_maze, serialize_maze, Cell, GridMaze, GridWorld, MazeRewards};
use crate::meta::{optimize, pareto_sweep, MetaPlanConfig};
use crate::output::{
    atomic_write, dendrogram_rows, fmt_f64, heatmap_svg, predictor_row, read_csv, teleport_row, write_csv, write_json,
    CsvMeta, DEFAULT_DISPLAY_THRESHOLD, DENDROGRAM_COLUMNS,
};
use crate::probes::DEFAULT_SMOOTHING;
use crate::stimuli::{
    compute_all_predictors, generate_mazes, select_spanning_costs, teleport_experiment, NamedMaze, PredictorConfig,
    PredictorRecord, TeleportRecord,
};

#[derive(Debug, Parser)]
#[command(name = "metaplan", version, about = "Meta-planning over partial plans in tabular MDPs and grid mazes")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimize temperatures on one maze and write plans, costs and a heatmap.
    Solve(SolveArgs),
    /// Sweep lambda and write the (planning cost, value) frontier at a probe state.
    Pareto(ParetoArgs),
    /// Per-maze or per-teleport predictor tables.
    #[command(subcommand)]
    Predictors(PredictorsCommand),
    /// Generate random solvable mazes.
    GenMazes(GenArgs),
    /// Pick mazes spanning a range of start-state planning costs.
    SelectStimuli(SelectArgs),
    /// Ward clustering of states by symmetric planning distance.
    Cluster(ClusterArgs),
    /// Least-squares fit of one CSV column on another.
    Regress(RegressArgs),
}

#[derive(Debug, Subcommand)]
enum PredictorsCommand {
    /// Start-state predictors for every maze in a directory.
    Exp1(Exp1Args),
    /// Teleport predictors on the symmetry expansion of base mazes.
    Exp2(Exp2Args),
}

#[derive(Debug, Args)]
struct MazeSource {
    /// Maze file in the text format.
    #[arg(long, conflicts_with = "four_rooms")]
    maze: Option<PathBuf>,
    /// Use the built-in Four Rooms layout.
    #[arg(long)]
    four_rooms: bool,
}

impl MazeSource {
    fn load(&self) -> Result<(String, GridMaze), CliError> {
        match (&self.maze, self.four_rooms) {
            (Some(path), false) => Ok((path.display().to_string(), read_maze(path)?)),
            (None, true) => Ok(("four_rooms".into(), four_rooms_maze())),
            _ => Err(CliError::Usage("pass exactly one of --maze FILE or --four-rooms".into())),
        }
    }
}

#[derive(Debug, Args)]
struct MetaArgs {
    /// Planning-cost weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Soft-Bellman sweeps per partial plan.
    #[arg(long)]
    horizon: Option<usize>,
    /// Adam iterations.
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    step_size: Option<f64>,
    /// Lower end of the initial raw-temperature interval.
    #[arg(long, allow_hyphen_values = true)]
    init_low: Option<f64>,
    /// Upper end of the initial raw-temperature interval.
    #[arg(long, allow_hyphen_values = true)]
    init_high: Option<f64>,
}

impl MetaArgs {
    fn config(&self, base: MetaPlanConfig) -> Result<MetaPlanConfig, CliError> {
        let cfg = MetaPlanConfig {
            lambda: self.lambda.unwrap_or(base.lambda),
            horizon: self.horizon.unwrap_or(base.horizon),
            outer_iterations: self.iters.unwrap_or(base.outer_iterations),
            seed: self.seed,
            adam: AdamConfig { step_size: self.step_size.unwrap_or(base.adam.step_size), ..base.adam },
            init_range: (self.init_low.unwrap_or(base.init_range.0), self.init_high.unwrap_or(base.init_range.1)),
            ..base
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    source: MazeSource,
    #[command(flatten)]
    meta: MetaArgs,
    /// Ground state of the heatmap as ROW,COL; the start by default.
    #[arg(long)]
    ground: Option<String>,
    #[arg(long, default_value_t = DEFAULT_DISPLAY_THRESHOLD)]
    display_threshold: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ParetoArgs {
    #[command(flatten)]
    source: MazeSource,
    #[command(flatten)]
    meta: MetaArgs,
    /// Comma-separated lambda values (at least two).
    #[arg(long, value_delimiter = ',', required = true)]
    lambdas: Vec<f64>,
    /// lower-left, start, or ROW,COL.
    #[arg(long, default_value = "lower-left")]
    probe_state: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Exp1Args {
    /// Directory of maze files (*.txt).
    #[arg(long)]
    mazes: PathBuf,
    #[command(flatten)]
    meta: MetaArgs,
    /// Bounded-rational resource parameter; 1/lambda by default.
    #[arg(long)]
    itbr_alpha: Option<f64>,
    #[arg(long, default_value_t = crate::baselines::DEFAULT_TURN_SAMPLES)]
    turn_samples: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct Exp2Args {
    /// Directory of square base maze files (*.txt).
    #[arg(long)]
    base_mazes: PathBuf,
    #[arg(long, default_value_t = 10)]
    events_per_maze: usize,
    #[command(flatten)]
    meta: MetaArgs,
    /// Uniform mixing weight for occupancies and plan rows.
    #[arg(long, default_value_t = DEFAULT_SMOOTHING)]
    epsilon: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(long, default_value_t = 9)]
    width: usize,
    #[arg(long, default_value_t = 9)]
    height: usize,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    density_low: f64,
    #[arg(long, default_value_t = 0.4)]
    density_high: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[arg(long)]
    mazes: PathBuf,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    meta: MetaArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    source: MazeSource,
    #[command(flatten)]
    meta: MetaArgs,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct RegressArgs {
    /// Predictor column.
    #[arg(long)]
    x: String,
    /// Response column.
    #[arg(long)]
    y: String,
    #[arg(long)]
    csv: PathBuf,
    /// Write the fit here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

/// Parses `args` (program name first), runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(a) => solve(a),
        Command::Pareto(a) => pareto(a),
        Command::Predictors(PredictorsCommand::Exp1(a)) => exp1(a),
        Command::Predictors(PredictorsCommand::Exp2(a)) => exp2(a),
        Command::GenMazes(a) => gen_mazes(a),
        Command::SelectStimuli(a) => select_stimuli(a),
        Command::Cluster(a) => cluster(a),
        Command::Regress(a) => regress(a),
    }
}

fn read_maze(path: &Path) -> Result<GridMaze, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_maze(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn read_maze_dir(dir: &Path) -> Result<Vec<NamedMaze>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| CliError::Data(format!("cannot read {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Data(format!("no *.txt maze files in {}", dir.display())));
    }
    paths
        .iter()
        .map(|p| {
            let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok(NamedMaze { id, maze: read_maze(p)? })
        })
        .collect()
}

fn parse_cell(text: &str) -> Result<Cell, CliError> {
    let bad = || CliError::Usage(format!("expected ROW,COL, got {text:?}"));
    let (r, c) = text.split_once(',').ok_or_else(bad)?;
    Ok(Cell::new(r.trim().parse().map_err(|_| bad())?, c.trim().parse().map_err(|_| bad())?))
}

fn state_of(world: &GridWorld, cell: Cell) -> Result<usize, CliError> {
    world.state(cell).ok_or_else(|| CliError::Usage(format!("{cell} is not an open cell")))
}

#[derive(Serialize)]
struct RunSummary<'a> {
    maze: &'a str,
    config: &'a MetaPlanConfig,
    n_states: usize,
    ground: Cell,
    ground_cost: f64,
    final_loss: Option<f64>,
    loss_history: &'a [f64],
    wall_time_seconds: f64,
}

fn solve(a: SolveArgs) -> Result<(), CliError> {
    let (name, maze) = a.source.load()?;
    let cfg = a.meta.config(MetaPlanConfig::default())?;
    let world = GridWorld::new(maze, MazeRewards::default())?;
    let ground_cell = match &a.ground {
        Some(text) => parse_cell(text)?,
        None => world.maze.start(),
    };
    let ground = state_of(&world, ground_cell)?;
    let result = optimize(&world.mdp, &cfg)?;
    let meta = CsvMeta::new(cfg.seed, &cfg)?.with("maze", &name);

    let n = world.mdp.n_states();
    let mut kl_rows = Vec::with_capacity(n * n);
    for g in 0..n {
        let gc = world.cell(g);
        for (x, kl) in result.kl_map(g).iter().enumerate() {
            let xc = world.cell(x);
            kl_rows.push(vec![
                gc.row.to_string(),
                gc.col.to_string(),
                xc.row.to_string(),
                xc.col.to_string(),
                fmt_f64(*kl),
            ]);
        }
    }
    write_csv(&a.out.join("kl.csv"), &meta, &["ground_row", "ground_col", "sim_row", "sim_col", "kl_nats"], &kl_rows)?;

    let cost_rows: Vec<Vec<String>> = (0..n)
        .map(|s| {
            let c = world.cell(s);
            vec![c.row.to_string(), c.col.to_string(), fmt_f64(result.costs[s]), fmt_f64(result.v_lambda[s])]
        })
        .collect();
    write_csv(&a.out.join("costs.csv"), &meta, &["row", "col", "planning_cost_nats", "meta_value"], &cost_rows)?;

    let title = format!("KL per simulated state, ground {ground_cell}, lambda {}", cfg.lambda);
    let svg = heatmap_svg(&world.maze, result.kl_map(ground), a.display_threshold, &title);
    atomic_write(&a.out.join("heatmap.svg"), svg.as_bytes())?;

    write_json(
        &a.out.join("run.json"),
        &RunSummary {
            maze: &name,
            config: &cfg,
            n_states: n,
            ground: ground_cell,
            ground_cost: result.costs[ground],
            final_loss: result.loss_history.last().copied(),
            loss_history: &result.loss_history,
            wall_time_seconds: result.wall_time,
        },
    )?;
    println!("ground {ground_cell}: planning cost {:.6} nats", result.costs[ground]);
    Ok(())
}

fn pareto(a: ParetoArgs) -> Result<(), CliError> {
    if a.lambdas.len() < 2 {
        return Err(CliError::Usage("pareto needs at least two lambda values".into()));
    }
    let (name, maze) = a.source.load()?;
    let cfg = a.meta.config(MetaPlanConfig::default())?;
    let world = GridWorld::new(maze, MazeRewards::default())?;
    let probe = match a.probe_state.as_str() {
        "start" => world.maze.start(),
        "lower-left" => Cell::new(world.maze.height() - 1, 0),
        text => parse_cell(text)?,
    };
    let probe_state = state_of(&world, probe)?;
    let points = pareto_sweep(&world.mdp, &a.lambdas, probe_state, &cfg)?;
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| vec![fmt_f64(p.lambda), fmt_f64(p.planning_cost), fmt_f64(p.expected_value)])
        .collect();
    let meta = CsvMeta::new(cfg.seed, &(&cfg, &a.lambdas))?.with("maze", &name).with("probe", format!("{},{}", probe.row, probe.col));
    write_csv(&a.out.join("frontier.csv"), &meta, &["lambda", "planning_cost_nats", "expected_value"], &rows)?;
    Ok(())
}

fn exp1(a: Exp1Args) -> Result<(), CliError> {
    let mazes = read_maze_dir(&a.mazes)?;
    let meta_cfg = a.meta.config(MetaPlanConfig::default())?;
    let config = PredictorConfig {
        itbr_alpha: a.itbr_alpha.unwrap_or(1.0 / meta_cfg.lambda),
        turn_samples: a.turn_samples,
        seed: a.meta.seed,
        meta: meta_cfg,
        ..PredictorConfig::default()
    };
    let records = compute_all_predictors(&mazes, &config)?;
    let rows: Vec<Vec<String>> = records.iter().map(predictor_row).collect();
    write_csv(&a.out, &CsvMeta::new(config.seed, &config)?, &PredictorRecord::COLUMNS, &rows)?;
    Ok(())
}

fn exp2(a: Exp2Args) -> Result<(), CliError> {
    let base = read_maze_dir(&a.base_mazes)?;
    let cfg = a.meta.config(MetaPlanConfig::default())?;
    let records = teleport_experiment(&base, a.events_per_maze, a.meta.seed, &cfg, a.epsilon)?;
    let rows: Vec<Vec<String>> = records.iter().map(teleport_row).collect();
    let meta = CsvMeta::new(a.meta.seed, &(&cfg, a.events_per_maze, a.epsilon))?.with("smoothing", fmt_f64(a.epsilon));
    write_csv(&a.out, &meta, &TeleportRecord::COLUMNS, &rows)?;
    Ok(())
}

fn gen_mazes(a: GenArgs) -> Result<(), CliError> {
    let mazes = generate_mazes(a.width, a.height, a.count, a.seed, (a.density_low, a.density_high))?;
    let mut rows = Vec::with_capacity(mazes.len());
    for m in &mazes {
        atomic_write(&a.out.join(format!("{}.txt", m.id)), serialize_maze(&m.maze).as_bytes())?;
        rows.push(vec![m.id.clone(), m.maze.wall_count().to_string(), optimal_plan_length(&m.maze)?.to_string()]);
    }
    let cfg = (a.width, a.height, a.count, a.density_low, a.density_high);
    write_csv(&a.out.join("index.csv"), &CsvMeta::new(a.seed, &cfg)?, &["maze_id", "walls", "optimal_plan_length"], &rows)?;
    Ok(())
}

fn select_stimuli(a: SelectArgs) -> Result<(), CliError> {
    let mazes = read_maze_dir(&a.mazes)?;
    let cfg = a.meta.config(MetaPlanConfig::default())?;
    let grids: Vec<GridMaze> = mazes.iter().map(|m| m.maze.clone()).collect();
    let selection = select_spanning_costs(&grids, &cfg, a.k, a.meta.seed)?;
    let mut rows = Vec::with_capacity(mazes.len());
    for (i, m) in mazes.iter().enumerate() {
        let picks = selection.indices.iter().filter(|&&j| j == i).count();
        rows.push(vec![m.id.clone(), fmt_f64(selection.costs[i]), picks.to_string()]);
        if picks > 0 {
            atomic_write(&a.out.join(format!("{}.txt", m.id)), serialize_maze(&m.maze).as_bytes())?;
        }
    }
    if selection.fallback {
        eprintln!("warning: fewer distinct costs than k; sampled with replacement");
    }
    let meta = CsvMeta::new(a.meta.seed, &(&cfg, a.k))?.with("fallback", selection.fallback);
    write_csv(&a.out.join("selection.csv"), &meta, &["maze_id", "start_cost_nats", "times_selected"], &rows)?;
    Ok(())
}

fn cluster(a: ClusterArgs) -> Result<(), CliError> {
    let (name, maze) = a.source.load()?;
    let cfg = a.meta.config(MetaPlanConfig::gentle())?;
    let world = GridWorld::new(maze, MazeRewards::default())?;
    let result = optimize(&world.mdp, &cfg)?;
    let matrix = planning_distance_matrix(&result.plans)?;
    let dendrogram = ward_cluster(&matrix);
    let labels = dendrogram.cut(a.k)?;
    let meta = CsvMeta::new(cfg.seed, &(&cfg, a.k))?.with("maze", &name);
    write_csv(&a.out.join("dendrogram.csv"), &meta, &DENDROGRAM_COLUMNS, &dendrogram_rows(&dendrogram))?;
    let rows: Vec<Vec<String>> = labels
        .iter()
        .enumerate()
        .map(|(s, l)| {
            let c = world.cell(s);
            vec![s.to_string(), c.row.to_string(), c.col.to_string(), l.to_string()]
        })
        .collect();
    write_csv(&a.out.join("clusters.csv"), &meta, &["state", "row", "col", "cluster"], &rows)?;
    for (l, members) in clusters_from_labels(&labels).iter().enumerate() {
        println!("cluster {l}: {} states", members.len());
    }
    Ok(())
}

fn regress(a: RegressArgs) -> Result<(), CliError> {
    let (header, rows) = read_csv(&a.csv)?;
    let column = |name: &str| -> Result<Vec<f64>, CliError> {
        let i = header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Data(format!("{}: no column {name:?}", a.csv.display())))?;
        rows.iter()
            .enumerate()
            .map(|(r, row)| {
                row.get(i)
                    .and_then(|v| v.trim().parse::<f64>().ok())
                    .ok_or_else(|| CliError::Data(format!("{}: row {} column {name:?} is not a number", a.csv.display(), r + 1)))
            })
            .collect()
    };
    let (x, y) = (column(&a.x)?, column(&a.y)?);
    let fit = ols_fit(&x, &y).map_err(|e| CliError::Data(e.to_string()))?;
    let row = vec![a.x.clone(), a.y.clone(), x.len().to_string(), fmt_f64(fit.slope), fmt_f64(fit.intercept), fmt_f64(fit.r_squared)];
    let header = ["x", "y", "n", "slope", "intercept", "r_squared"];
    let meta = CsvMeta::new(0, &(&a.x, &a.y))?;
    match &a.out {
        Some(path) => write_csv(path, &meta, &header, &[row])?,
        None => print!("{}", crate::output::csv_string(&meta, &header, &[row])?),
    }
    Ok(())
}
