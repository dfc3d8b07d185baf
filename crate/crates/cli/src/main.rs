mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use tilefab::attractor::{cell_cloud_with, chaos_game, hausdorff_dimension, Driver, MarkovSampler, DEFAULT_BURN_IN};
use tilefab::io::{format_map, read_cloud_binary, tiling_from_json, tiling_to_json, write_cloud_binary, write_cloud_csv};
use tilefab::rigidity::{check_rigidity, decide_equal, deflate_pi, deflate_tiling, inflate_tiling, verify_certificate, DeflationGuard};
use tilefab::symbolic::{is_coprime, omega, parse_dagger, parse_word, relative_to_absolute, Coprimality};
use tilefab::system::{validate, GraphIfs, SystemError};
use tilefab::tiling::{canonical_tiling, pi_tiling, Group, GroupFilter, TileRealizer, Tiling};

use render::{Mode, RenderSpec};

#[derive(Parser)]
#[command(name = "tilefab", version, about = "Tilings from graph-directed iterated function systems")]
struct Cli {
    /// System configuration (JSON); may also be given positionally.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    #[arg(long, global = true, default_value_t = tilefab::DEFAULT_TOL)]
    tol: f64,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Svg,
    Bin,
}

#[derive(Args, Clone)]
struct Config {
    config: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct PathArgs {
    /// Dagger path such as `12(2)`.
    #[arg(long)]
    theta: String,
    /// Truncation depth; defaults to the whole (finite) path.
    #[arg(long)]
    depth: Option<usize>,
}

#[derive(Args, Clone)]
struct RigidityArgs {
    #[arg(long, default_value = "translations")]
    group: Group,
    #[arg(long, default_value_t = 2)]
    depth: usize,
    /// Samples per component used for contact tests.
    #[arg(long, default_value_t = 4000)]
    points: usize,
}

#[derive(Args, Clone)]
struct EqualArgs {
    #[arg(long)]
    theta: String,
    #[arg(long)]
    psi: String,
    #[arg(long, default_value = "translations")]
    group: Group,
    #[arg(long)]
    bound: Option<usize>,
    /// Re-check tile sets up to this truncation.
    #[arg(long, default_value_t = 8)]
    verify_depth: usize,
}

#[derive(Args, Clone)]
struct CoprimeArgs {
    #[arg(long)]
    bound: Option<usize>,
}

#[derive(Args, Clone)]
struct DeflateArgs {
    /// Tiling dump to deflate by partner copies.
    #[arg(long, conflicts_with = "theta")]
    dump: Option<PathBuf>,
    /// Deflate `Π(θ|depth)` symbolically instead.
    #[arg(long)]
    theta: Option<String>,
    #[arg(long)]
    depth: Option<usize>,
    /// Number of deflation steps for `--theta`.
    #[arg(long, default_value_t = 1)]
    power: i64,
    #[arg(long, default_value = "translations")]
    group: Group,
    /// Skip the rigidity audit (ambiguous partners are still refused).
    #[arg(long)]
    force: bool,
}

#[derive(Subcommand, Clone)]
enum Analysis {
    Dimension,
    Rigidity(RigidityArgs),
    Coprime(CoprimeArgs),
    Equal(EqualArgs),
    Deflate(DeflateArgs),
}

#[derive(Subcommand)]
enum Command {
    /// Check the configuration invariants.
    Validate {
        #[command(flatten)]
        cfg: Config,
        /// Samples per component for the sample-based checks.
        #[arg(long, default_value_t = 20_000)]
        points: usize,
    },
    /// List `Ω_k`.
    Omega {
        #[command(flatten)]
        cfg: Config,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        vertex: Option<String>,
    },
    /// Build `Π(θ|k)`.
    Tile {
        #[command(flatten)]
        cfg: Config,
        #[command(flatten)]
        path: PathArgs,
    },
    /// Build the canonical tiling `T_k^v`.
    Canonical {
        #[command(flatten)]
        cfg: Config,
        #[arg(long)]
        k: i64,
        #[arg(long)]
        vertex: Option<String>,
    },
    Deflate {
        #[command(flatten)]
        cfg: Config,
        #[command(flatten)]
        args: DeflateArgs,
    },
    Inflate {
        #[command(flatten)]
        cfg: Config,
        #[arg(long)]
        dump: PathBuf,
    },
    /// Locate `π(σ)`, or convert an address relative to `Π(θ)`.
    Address {
        #[command(flatten)]
        cfg: Config,
        #[arg(long)]
        word: String,
        #[arg(long)]
        theta: Option<String>,
    },
    /// Sample the attractor by the chaos game.
    Chaos {
        #[command(flatten)]
        cfg: Config,
        #[arg(long, default_value_t = 100_000)]
        points: usize,
        /// Drive by this dagger path instead of the Markov chain.
        #[arg(long)]
        theta: Option<String>,
    },
    Dimension {
        #[command(flatten)]
        cfg: Config,
    },
    Rigidity {
        #[command(flatten)]
        cfg: Config,
        #[command(flatten)]
        args: RigidityArgs,
    },
    Coprime {
        #[command(flatten)]
        cfg: Config,
        #[command(flatten)]
        args: CoprimeArgs,
    },
    Equal {
        #[command(flatten)]
        cfg: Config,
        #[command(flatten)]
        args: EqualArgs,
    },
    /// Draw a tiling as SVG.
    Render {
        #[command(flatten)]
        cfg: Config,
        #[arg(long, conflicts_with = "theta")]
        dump: Option<PathBuf>,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        /// `xmin,ymin,xmax,ymax`
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = Mode::Tiles)]
        mode: Mode,
        /// Pixels per unit.
        #[arg(long)]
        resolution: Option<f64>,
        /// Render a previously dumped point cloud as dots.
        #[arg(long)]
        cloud: Option<PathBuf>,
    },
    /// Analyses grouped under one command.
    Analyze {
        config: PathBuf,
        #[command(subcommand)]
        what: Analysis,
    },
}

/// Failure classes, each with its exit code.
enum Failure {
    Check(String),
    Input(anyhow::Error),
    Unsupported(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

type Res = Result<(), Failure>;

struct Ctx {
    config: Option<PathBuf>,
    seed: u64,
    tol: f64,
    out: Option<PathBuf>,
    format: Option<Format>,
}

impl Ctx {
    fn config_path(&self, local: &Option<PathBuf>) -> anyhow::Result<PathBuf> {
        local.clone().or_else(|| self.config.clone()).ok_or_else(|| anyhow!("no configuration given"))
    }

    fn load(&self, local: &Option<PathBuf>) -> anyhow::Result<GraphIfs> {
        let path = self.config_path(local)?;
        tilefab::system::load_system_file(&path).with_context(|| format!("loading {}", path.display()))
    }

    /// Write to `--out` or stdout.
    fn emit(&self, text: &str) -> anyhow::Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn json(&self) -> bool {
        self.format == Some(Format::Json)
    }
}

fn vertex_arg(sys: &GraphIfs, name: &Option<String>) -> anyhow::Result<Option<usize>> {
    name.as_ref().map(|n| sys.vertex_index(n).ok_or_else(|| anyhow!("unknown vertex {n:?}"))).transpose()
}

fn path_tiling(sys: &GraphIfs, theta: &str, depth: Option<usize>) -> anyhow::Result<Tiling> {
    let t = parse_dagger(sys, theta, 0)?;
    let t = match depth {
        Some(d) => t.truncate(d)?,
        None if t.is_finite() => t,
        None => bail!("infinite path {theta:?} needs --depth"),
    };
    Ok(pi_tiling(sys, &t)?)
}

fn load_dump(sys: &GraphIfs, path: &Path) -> anyhow::Result<Tiling> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(tiling_from_json(sys, &text)?)
}

fn tiling_stats(sys: &GraphIfs, t: &Tiling) -> String {
    let geo = TileRealizer::new(&cell_cloud_with(sys, 2000), usize::MAX);
    let mut s = format!("tiles: {}\n", t.len());
    if let Some(b) = geo.support_bbox(sys, t) {
        s += &format!("support bbox: {:?} .. {:?}\n", b.lo, b.hi);
    }
    let classes: Vec<String> = t.class_counts().iter().map(|(m, n)| format!("m={m}: {n}")).collect();
    s += &format!("classes: {}\n", classes.join(", "));
    s
}

/// Dump to `--out` (stats on stdout), to stdout with `--format json`, else stats only.
fn output_tiling(ctx: &Ctx, sys: &GraphIfs, t: &Tiling) -> Res {
    if let Some(p) = &ctx.out {
        fs::write(p, tiling_to_json(sys, t)).with_context(|| format!("writing {}", p.display()))?;
        print!("{}", tiling_stats(sys, t));
    } else if ctx.json() {
        println!("{}", tiling_to_json(sys, t));
    } else {
        print!("{}", tiling_stats(sys, t));
    }
    Ok(())
}

fn cmd_validate(ctx: &Ctx, cfg: &Config, points: usize) -> Res {
    let path = ctx.config_path(&cfg.config)?;
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let sys = match GraphIfs::parse_unchecked(&text) {
        Ok(s) => s,
        Err(e @ SystemError::Parse { .. }) | Err(e @ SystemError::Field { .. }) => return Err(Failure::Input(e.into())),
        Err(e) => return Err(Failure::Check(e.to_string())),
    };
    let pre = validate(&sys, None);
    let report = if pre.passed() { validate(&sys, Some(&cell_cloud_with(&sys, points))) } else { pre };
    print!("{report}");
    if report.passed() {
        Ok(())
    } else {
        let failed: Vec<String> = report
            .checks
            .iter()
            .filter(|c| c.status == tilefab::system::CheckStatus::Fail)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect();
        Err(Failure::Check(failed.join("; ")))
    }
}

fn cmd_rigidity(ctx: &Ctx, sys: &GraphIfs, a: &RigidityArgs) -> Res {
    let geo = TileRealizer::new(&cell_cloud_with(sys, a.points), usize::MAX);
    let r = check_rigidity(sys, a.group, a.depth, &geo).map_err(anyhow::Error::from)?;
    if ctx.json() {
        ctx.emit(&(serde_json::to_string_pretty(&r).map_err(anyhow::Error::from)? + "\n"))?;
        return Ok(());
    }
    let mut s = format!("{}\n", r.verdict());
    for (label, v) in [("A(i)", &r.a1), ("A(ii)", &r.a2), ("A(iii)", &r.a3)] {
        s += &format!("{label}: {}", v.label());
        if let Some(w) = v.witness() {
            s += &format!(
                " witness E={} k={} v={} w={} level={}",
                format_map(&w.e),
                w.k,
                sys.vertex_name(w.v),
                sys.vertex_name(w.w),
                w.level
            );
        }
        s.push('\n');
    }
    s += &format!("group: {}, depth: {}, candidates: {}\n", r.group, r.depth, r.candidates);
    ctx.emit(&s)?;
    Ok(())
}

fn cmd_equal(ctx: &Ctx, sys: &GraphIfs, a: &EqualArgs) -> Res {
    let theta = parse_dagger(sys, &a.theta, 0).map_err(anyhow::Error::from)?;
    let psi = parse_dagger(sys, &a.psi, 0).map_err(anyhow::Error::from)?;
    let filter = GroupFilter::new(sys, a.group);
    match decide_equal(sys, &theta, &psi, &filter, a.bound).map_err(anyhow::Error::from)? {
        Some(mut cert) => {
            let ok = verify_certificate(sys, &theta, &psi, &mut cert, a.verify_depth).map_err(anyhow::Error::from)?;
            if ctx.json() {
                ctx.emit(&(serde_json::to_string_pretty(&cert).map_err(anyhow::Error::from)? + "\n"))?;
            } else {
                ctx.emit(&format!(
                    "certificate p={} q={} E=\"{}\" verified to depth {}: {}\n",
                    cert.p,
                    cert.q,
                    format_map(&cert.e),
                    a.verify_depth,
                    if ok { "yes" } else { "no" }
                ))?;
            }
            if ok {
                Ok(())
            } else {
                Err(Failure::Check("certificate failed tile-set verification".into()))
            }
        }
        None => {
            ctx.emit("none within bound\n")?;
            Ok(())
        }
    }
}

fn cmd_coprime(ctx: &Ctx, sys: &GraphIfs, a: &CoprimeArgs) -> Res {
    match is_coprime(sys, a.bound) {
        Coprimality::Coprime { sigma, omega } => ctx.emit(&format!(
            "coprime: {} (ξ={}) and {} (ξ={})\n",
            sigma.label(sys),
            sigma.xi(),
            omega.label(sys),
            omega.xi()
        ))?,
        Coprimality::Unknown { bound } => ctx.emit(&format!("unknown: no coprime pair among words of length ≤ {bound}\n"))?,
    }
    Ok(())
}

fn cmd_dimension(ctx: &Ctx, sys: &GraphIfs) -> Res {
    let d = hausdorff_dimension(sys, ctx.tol.min(1e-10)).map_err(anyhow::Error::from)?;
    ctx.emit(&format!("{d:.6}\n"))?;
    Ok(())
}

fn cmd_deflate(ctx: &Ctx, sys: &GraphIfs, a: &DeflateArgs) -> Res {
    let out = if let Some(dump) = &a.dump {
        let t = load_dump(sys, dump)?;
        let filter = GroupFilter::new(sys, a.group);
        if a.force {
            deflate_tiling(sys, &t, &filter, DeflationGuard::Override)
        } else {
            let geo = TileRealizer::new(&cell_cloud_with(sys, 4000), usize::MAX);
            let report = check_rigidity(sys, a.group, 2, &geo).map_err(anyhow::Error::from)?;
            deflate_tiling(sys, &t, &filter, DeflationGuard::Audited(&report))
        }
        .map_err(|e| Failure::Check(e.to_string()))?
    } else if let Some(theta) = &a.theta {
        let t = parse_dagger(sys, theta, 0).map_err(anyhow::Error::from)?;
        let depth = a.depth.or(t.len()).ok_or_else(|| anyhow!("infinite path needs --depth"))?;
        deflate_pi(sys, &t, a.power, depth).map_err(anyhow::Error::from)?
    } else {
        return Err(Failure::Input(anyhow!("give --dump or --theta")));
    };
    output_tiling(ctx, sys, &out)
}

fn run_analysis(ctx: &Ctx, sys: &GraphIfs, what: &Analysis) -> Res {
    match what {
        Analysis::Dimension => cmd_dimension(ctx, sys),
        Analysis::Rigidity(a) => cmd_rigidity(ctx, sys, a),
        Analysis::Coprime(a) => cmd_coprime(ctx, sys, a),
        Analysis::Equal(a) => cmd_equal(ctx, sys, a),
        Analysis::Deflate(a) => cmd_deflate(ctx, sys, a),
    }
}

fn run(cli: Cli) -> Res {
    let ctx = Ctx { config: cli.config, seed: cli.seed, tol: cli.tol, out: cli.out, format: cli.format };
    match &cli.command {
        Command::Validate { cfg, points } => cmd_validate(&ctx, cfg, *points),
        Command::Omega { cfg, k, vertex } => {
            let sys = ctx.load(&cfg.config)?;
            let v = vertex_arg(&sys, vertex)?;
            if *k < 0 {
                return Err(Failure::Input(anyhow!("k must be nonnegative")));
            }
            let words = omega(&sys, *k, v);
            let labels: Vec<String> = words.iter().map(|w| w.label(&sys)).collect();
            if ctx.json() {
                ctx.emit(&(serde_json::to_string(&labels).map_err(anyhow::Error::from)? + "\n"))?;
            } else {
                ctx.emit(&format!("{}\n{} words\n", labels.join(" "), labels.len()))?;
            }
            Ok(())
        }
        Command::Tile { cfg, path } => {
            let sys = ctx.load(&cfg.config)?;
            let t = path_tiling(&sys, &path.theta, path.depth)?;
            output_tiling(&ctx, &sys, &t)
        }
        Command::Canonical { cfg, k, vertex } => {
            let sys = ctx.load(&cfg.config)?;
            let t = canonical_tiling(&sys, *k, vertex_arg(&sys, vertex)?).map_err(anyhow::Error::from)?;
            output_tiling(&ctx, &sys, &t)
        }
        Command::Deflate { cfg, args } => {
            let sys = ctx.load(&cfg.config)?;
            cmd_deflate(&ctx, &sys, args)
        }
        Command::Inflate { cfg, dump } => {
            let sys = ctx.load(&cfg.config)?;
            let t = inflate_tiling(&sys, &load_dump(&sys, dump)?).map_err(anyhow::Error::from)?;
            output_tiling(&ctx, &sys, &t)
        }
        Command::Address { cfg, word, theta } => {
            let sys = ctx.load(&cfg.config)?;
            let mut text = String::new();
            let (f, v, xi) = match theta {
                Some(th) => {
                    let th = parse_dagger(&sys, th, 0).map_err(anyhow::Error::from)?;
                    let w = parse_word(&sys, word, th.terminal(&sys)).map_err(anyhow::Error::from)?;
                    let abs = relative_to_absolute(&sys, &th, &w).map_err(anyhow::Error::from)?;
                    text += &format!("absolute: {}\n", abs.label(&sys));
                    (abs.map(&sys), w.end(), w.xi())
                }
                None => {
                    let w = parse_word(&sys, word, 0).map_err(anyhow::Error::from)?;
                    (w.map(&sys), w.end(), w.xi())
                }
            };
            let cloud = cell_cloud_with(&sys, 20_000);
            let region = cloud.vertex(v).transformed(&f);
                        text += &format!("ξ: {}\nratio: {}\n", xi, f.ratio());
            if let Some(b) = region.bbox() {
                text += &format!("bbox: {:?} .. {:?} (±{:.1e})\n", b.lo, b.hi, cloud.resolution() * f.ratio());
            }
            ctx.emit(&text)?;
            Ok(())
        }
        Command::Chaos { cfg, points, theta } => {
            let sys = ctx.load(&cfg.config)?;
            let n = points + DEFAULT_BURN_IN;
            let cloud = match theta {
                Some(t) => {
                    let p = parse_dagger(&sys, t, 0).map_err(anyhow::Error::from)?;
                    chaos_game(&sys, Driver::Path(&p), n, DEFAULT_BURN_IN, None)
                }
                None => chaos_game(&sys, Driver::Markov(&MarkovSampler::natural(&sys, ctx.seed)), n, DEFAULT_BURN_IN, None),
            }
            .map_err(anyhow::Error::from)?;
            let mut buf = Vec::new();
            match ctx.format.unwrap_or(Format::Csv) {
                Format::Bin => write_cloud_binary(&cloud, &mut buf),
                Format::Csv => write_cloud_csv(&sys, &cloud, &mut buf),
                _ => return Err(Failure::Unsupported("chaos writes csv or bin".into())),
            }
            .map_err(anyhow::Error::from)?;
            match &ctx.out {
                Some(p) => {
                    fs::write(p, &buf).with_context(|| format!("writing {}", p.display()))?;
                    println!("{} points, resolution {:.3e}", cloud.sample_count(), cloud.resolution());
                }
                None => std::io::stdout().write_all(&buf).map_err(anyhow::Error::from)?,
            }
            Ok(())
        }
        Command::Dimension { cfg } => cmd_dimension(&ctx, &ctx.load(&cfg.config)?),
        Command::Rigidity { cfg, args } => cmd_rigidity(&ctx, &ctx.load(&cfg.config)?, args),
        Command::Coprime { cfg, args } => cmd_coprime(&ctx, &ctx.load(&cfg.config)?, args),
        Command::Equal { cfg, args } => cmd_equal(&ctx, &ctx.load(&cfg.config)?, args),
        Command::Render { cfg, dump, theta, depth, window, mode, resolution, cloud } => {
            let sys = ctx.load(&cfg.config)?;
            if sys.dim() > 2 {
                return Err(Failure::Unsupported(format!("cannot render {}-dimensional systems", sys.dim())));
            }
            let tiling = match (dump, theta) {
                (Some(p), _) => load_dump(&sys, p)?,
                (None, Some(t)) => path_tiling(&sys, t, *depth)?,
                (None, None) => return Err(Failure::Input(anyhow!("give --dump or --theta"))),
            };
            let points = match cloud {
                Some(p) => Some(read_cloud_binary(fs::File::open(p).map_err(anyhow::Error::from)?).map_err(anyhow::Error::from)?),
                None => None,
            };
            let spec = RenderSpec::new(&sys, &tiling, window.as_deref(), *mode, *resolution).map_err(Failure::Input)?;
            let svg = render::render(&sys, &tiling, &spec, points.as_ref());
            ctx.emit(&svg)?;
            Ok(())
        }
        Command::Analyze { config, what } => {
            let sys = ctx.load(&Some(config.clone()))?;
            run_analysis(&ctx, &sys, what)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("check failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) if matches!(e.downcast_ref::<SystemError>(), Some(SystemError::Invariant(_))) => {
            eprintln!("check failed: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Unsupported(msg)) => {
            eprintln!("unsupported: {msg}");
            ExitCode::from(3)
        }
    }
}
