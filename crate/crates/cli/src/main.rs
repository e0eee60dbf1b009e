use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use iconforge::bench::{self, Ablation, Manifest, RunMode, SizeNorm};
use iconforge::dsl::{self, ConstraintProgram};
use iconforge::llm::{self, LlmConfig};
use iconforge::raster::RgbImage;
use iconforge::relations;
use iconforge::render::{depth_order, export_svg, rasterize, OrderMode};
use iconforge::scene::{load_motions, load_scene, MotionParams, Scene};
use iconforge::{pipeline, Config, Error};

#[derive(Parser)]
#[command(name = "iconforge", version, about = "Constraint-driven spatial editing of segmented icon scenes")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Global {
    /// Recorded in outputs; the pipeline itself is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// `key = value` file overriding the defaults.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Errors only.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Debug logging, including every search candidate.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a program against a scene.
    Validate { scene: PathBuf, program: PathBuf },
    /// Detect and print pairwise relations.
    Relations {
        scene: PathBuf,
        /// Print the edges as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the state search and write the motions.
    Solve {
        scene: PathBuf,
        program: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        output: Option<PathBuf>,
        /// Print every flip with its score and verdict to stderr.
        #[arg(long)]
        trace: bool,
    },
    /// Draw a scene, optionally moved by a motions file.
    Render {
        scene: PathBuf,
        #[arg(long, value_name = "FILE")]
        motions: Option<PathBuf>,
        /// PNG or SVG, chosen by extension.
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
        #[command(flatten)]
        draw: DrawArgs,
    },
    /// The whole pipeline: request or program in, edited image out.
    Edit {
        scene: PathBuf,
        /// Plain-language request sent to the language model.
        #[arg(long, conflicts_with = "program", required_unless_present = "program")]
        request: Option<String>,
        #[arg(long, value_name = "FILE")]
        program: Option<PathBuf>,
        /// PNG or SVG, chosen by extension.
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
        /// Also write the solved motions here.
        #[arg(long, value_name = "FILE")]
        motions_out: Option<PathBuf>,
        /// Also write the program that was solved here.
        #[arg(long, value_name = "FILE")]
        program_out: Option<PathBuf>,
        #[command(flatten)]
        draw: DrawArgs,
    },
    /// Compare a prediction with a ground truth.
    Eval {
        pred: PathBuf,
        gt: PathBuf,
        #[arg(long, value_enum, default_value_t = Metric::Cd)]
        metric: Metric,
        /// Treat both files as motions over this scene instead of as scenes.
        #[arg(long, value_name = "FILE")]
        scene: Option<PathBuf>,
    },
    /// Run a benchmark manifest and print a table.
    Bench {
        manifest: PathBuf,
        /// Also run without relation search and without motion search.
        #[arg(long)]
        ablations: bool,
        /// Generate programs from the requests with the language model.
        #[arg(long)]
        llm: bool,
        /// Write the full reports as JSON.
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DrawArgs {
    /// Output size as WIDTHxHEIGHT; defaults to the scene canvas.
    #[arg(long, value_parser = parse_size)]
    size: Option<(usize, usize)>,
    #[arg(long, value_name = "MODE")]
    order_mode: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Cd,
    Mse,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WIDTHxHEIGHT")?;
    let w: usize = w.trim().parse().map_err(|_| format!("bad width `{w}`"))?;
    let h: usize = h.trim().parse().map_err(|_| format!("bad height `{h}`"))?;
    if w == 0 || h == 0 || w > 16384 || h > 16384 {
        return Err("width and height must lie in 1..=16384".into());
    }
    Ok((w, h))
}

enum Failure {
    Usage(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Res<T = ()> = Result<T, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_config(g: &Global) -> Res<Config> {
    let mut cfg = Config {
        llm: LlmConfig::from_env(),
        ..Config::default()
    };
    if let Some(path) = &g.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        cfg.apply_text(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config error: "))))?;
    }
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    cfg.sync();
    Ok(cfg)
}

fn read(path: &Path) -> Res<String> {
    Ok(fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn read_program(path: &Path, scene: &Scene) -> Res<ConstraintProgram> {
    let text = read(path)?;
    dsl::parse(&text, scene).map_err(|e| Failure::Domain(Error::Parse(format!("{}: {e}", path.display()))))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Res {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    info!("wrote {}", path.display());
    Ok(())
}

enum Format {
    Png,
    Svg,
}

fn format_of(path: &Path) -> Res<Format> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => Ok(Format::Png),
        Some("svg") => Ok(Format::Svg),
        _ => Err(usage(format!("{}: output must end in .png or .svg", path.display()))),
    }
}

fn apply_draw(cfg: &mut Config, d: &DrawArgs) -> Res {
    if let Some(m) = &d.order_mode {
        cfg.render.order_mode = m.parse::<OrderMode>().map_err(|e| usage(e.to_string()))?;
    }
    Ok(())
}

fn draw(scene: &Scene, motions: &[MotionParams], cfg: &Config, d: &DrawArgs, out: &Path) -> Res {
    let fmt = format_of(out)?;
    let order = depth_order(scene, motions, &cfg.render)?;
    if !order.broken.is_empty() {
        warn!("{} depth constraint(s) dropped to break cycles", order.broken.len());
    }
    match fmt {
        Format::Png => rasterize(scene, motions, &order, d.size)?
            .write_png(out)
            .map(|_| info!("wrote {}", out.display()))?,
        Format::Svg => write(out, export_svg(scene, motions, &order)?)?,
    }
    Ok(())
}

fn motions_json(cfg: &Config, motions: &[MotionParams], extra: serde_json::Value) -> String {
    let mut doc = json!({ "seed": cfg.seed, "motions": motions });
    if let (Some(d), serde_json::Value::Object(e)) = (doc.as_object_mut(), extra) {
        d.extend(e);
    }
    serde_json::to_string_pretty(&doc).expect("motions always serialize") + "\n"
}

fn run(cli: Cli) -> Res {
    let mut cfg = load_config(&cli.global)?;
    match cli.cmd {
        Command::Validate { scene, program } => {
            let scene = load_scene(&scene, &cfg.scene)?;
            let p = read_program(&program, &scene)?;
            let report = dsl::validate(&p, &scene);
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            if !report.is_ok() {
                for e in &report.errors {
                    eprintln!("error: {e}");
                }
                return Err(Failure::Domain(Error::Invalid(format!(
                    "{}: {} error(s)",
                    program.display(),
                    report.errors.len()
                ))));
            }
            print!("{}", dsl::serialize(&p));
            eprintln!(
                "ok: {} constraint(s), {} segment(s) referenced",
                report.constraint_count,
                report.referenced.len()
            );
        }
        Command::Relations { scene, json } => {
            let scene = load_scene(&scene, &cfg.scene)?;
            let graph = pipeline::relations(&scene, &cfg);
            if json {
                println!("{}", serde_json::to_string_pretty(&graph.edges).expect("edges always serialize"));
            } else {
                print!("{}", relations::dump(&graph, &scene));
            }
        }
        Command::Solve {
            scene,
            program,
            output,
            trace,
        } => {
            let scene = load_scene(&scene, &cfg.scene)?;
            let p = read_program(&program, &scene)?;
            let (_, out) = pipeline::solve_program(&scene, &p, &cfg)?;
            if trace {
                for t in &out.report.trace {
                    let verdict = if t.accepted { "accepted" } else { "rejected" };
                    eprintln!("{:<8} {}  score {:.6}  {verdict}", t.pass, t.candidate, t.score);
                }
            }
            let text = motions_json(
                &cfg,
                &out.result.motions,
                json!({
                    "score": out.result.score,
                    "states": out.states.to_string(),
                    "solves": out.report.solves,
                    "flags": out.result.flags,
                }),
            );
            match output {
                Some(path) => write(&path, text)?,
                None => print!("{text}"),
            }
        }
        Command::Render {
            scene,
            motions,
            output,
            draw: d,
        } => {
            format_of(&output)?;
            apply_draw(&mut cfg, &d)?;
            let scene = load_scene(&scene, &cfg.scene)?;
            let motions = match &motions {
                Some(p) => load_motions(p, &scene)?,
                None => scene.rest_motions(),
            };
            draw(&scene, &motions, &cfg, &d, &output)?;
        }
        Command::Edit {
            scene,
            request,
            program,
            output,
            motions_out,
            program_out,
            draw: d,
        } => {
            format_of(&output)?;
            apply_draw(&mut cfg, &d)?;
            let scene = load_scene(&scene, &cfg.scene)?;
            let p = match (&program, &request) {
                (Some(path), _) => read_program(path, &scene)?,
                (None, Some(req)) => {
                    let graph = pipeline::relations(&scene, &cfg);
                    let mut got = llm::request_program(req, &scene, &graph, &cfg.llm).map_err(Error::from)?;
                    if got.retries > 0 {
                        info!("program accepted after {} retr{}", got.retries, if got.retries == 1 { "y" } else { "ies" });
                    }
                    got.programs.remove(0)
                }
                (None, None) => return Err(usage("give --request or --program")),
            };
            info!("program:\n{}", dsl::serialize(&p).trim_end());
            let (_, out) = pipeline::solve_program(&scene, &p, &cfg)?;
            for t in &out.report.trace {
                info!("{}: {} score {:.6} {}", t.pass, t.candidate, t.score, if t.accepted { "accepted" } else { "rejected" });
            }
            let motions = &out.result.motions;
            draw(&scene, motions, &cfg, &d, &output)?;
            if let Some(path) = motions_out {
                let extra = json!({ "score": out.result.score, "states": out.states.to_string(), "flags": out.result.flags });
                write(&path, motions_json(&cfg, motions, extra))?;
            }
            if let Some(path) = program_out {
                write(&path, dsl::serialize(&p))?;
            }
        }
        Command::Eval {
            pred,
            gt,
            metric,
            scene,
        } => {
            let value = match &scene {
                Some(scene_path) => {
                    let scene = load_scene(scene_path, &cfg.scene)?;
                    let (pm, gm) = (load_motions(&pred, &scene)?, load_motions(&gt, &scene)?);
                    match metric {
                        Metric::Cd => bench::chamfer_scene(&scene, &pm, &gm, cfg.size_norm)?,
                        Metric::Mse => bench::image_mse(&image_of(&scene, &pm, &cfg)?, &image_of(&scene, &gm, &cfg)?)?,
                    }
                }
                None => {
                    let (ps, gs) = (load_scene(&pred, &cfg.scene)?, load_scene(&gt, &cfg.scene)?);
                    match metric {
                        Metric::Cd => {
                            let side = |s: &Scene| s.segments.iter().map(|g| g.samples.clone()).collect::<Vec<_>>();
                            bench::chamfer_segments(&side(&ps), &side(&gs), cfg.size_norm)?
                        }
                        Metric::Mse => bench::image_mse(
                            &image_of(&ps, &ps.rest_motions(), &cfg)?,
                            &image_of(&gs, &gs.rest_motions(), &cfg)?,
                        )?,
                    }
                }
            };
            println!("{value}");
        }
        Command::Bench {
            manifest,
            ablations,
            llm,
            json,
        } => {
            let m = Manifest::load(&manifest)?;
            let mode = if llm { RunMode::Llm(cfg.llm.clone()) } else { RunMode::Offline };
            let reports = if ablations {
                bench::run_ablations(&m, &mode, &cfg)
            } else {
                vec![bench::run_manifest(&m, &mode, &cfg, Ablation::Full)]
            };
            for r in &reports {
                println!("{}", r.table());
            }
            if reports.len() > 1 {
                println!("relative CD ({})", if cfg.size_norm == SizeNorm::SqrtArea { "sqrt area" } else { "bbox diagonal" });
                print!("{}", bench::comparison_table(&reports));
            }
            if let Some(path) = json {
                let doc = json!({ "manifest": m.path, "seed": cfg.seed, "reports": reports });
                write(&path, serde_json::to_string_pretty(&doc).expect("reports always serialize") + "\n")?;
            }
            if reports.iter().all(|r| r.mean_cd.is_none()) && !m.cases.is_empty() {
                return Err(Failure::Domain(Error::Invalid("every benchmark case failed".into())));
            }
        }
    }
    Ok(())
}

fn image_of(scene: &Scene, motions: &[MotionParams], cfg: &Config) -> Result<RgbImage, Error> {
    let order = depth_order(scene, motions, &cfg.render)?;
    rasterize(scene, motions, &order, None)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet {
        "error"
    } else if cli.global.verbose {
        "debug"
    } else {
        "info"
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .format_target(false)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
    }
}
