use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64 as C64;
use serde_json::{json, Value};

use antipode::calculus::{
    balanced_angle, balanced_pair, critical_gap, dynamic_rotation_number, phi, phi_pm, psi, rho_discontinuity,
    rho_graph, rho_inverse_minus, rho_inverse_plus,
};
use antipode::dynamics::{classify_orbit, classify_parameter, critical_points, fixed_points};
use antipode::rays::{
    default_schedule, external_ray, internal_ray_side, parameter_ray, ParamRayOptions, RaySide, RayTrace,
};
use antipode::render::{render_julia, render_param, Coloring, ImageSpec, Palette, ParamPlane, PlaneImage, Projection};
use antipode::rotation::{goldberg_orbit, x_d_of};
use antipode::{checks, Angle, CircleInterval};

mod parse;

use parse::parse_complex;

#[derive(Parser, Debug)]
#[command(name = "antipode", version, about = "Rotation sets, angle calculus and numerics for antipode-preserving cubic maps")]
struct Cli {
    /// Worker threads (ANTIPODE_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Iteration budget per orbit.
    #[arg(long, global = true, default_value_t = 500)]
    budget: usize,
    /// Trap radius around 0 and infinity.
    #[arg(long, global = true, default_value_t = 1e-3)]
    eps: f64,
    /// Where to write the JSON sidecar; defaults to `<out>.json` when an
    /// output file is given.
    #[arg(long, global = true)]
    sidecar: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rotation sets: doubly visible set of Θ, the set avoiding given gaps,
    /// or the doubling orbit of a rotation number.
    Rot(RotArgs),
    /// Angle calculus.
    #[command(subcommand)]
    Angle(AngleCmd),
    /// Classify a parameter, or the orbit of a point with --z.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
    },
    /// Dynamic and parameter rays.
    #[command(subcommand)]
    Ray(RayCmd),
    /// Render the dynamical plane of f_q.
    Julia {
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Render the q or q^2 parameter plane.
    ParamPlane {
        #[arg(long, value_enum, default_value_t = PlaneArg::Q)]
        plane: PlaneArg,
        #[arg(long, value_enum, default_value_t = ColoringArg::Component)]
        coloring: ColoringArg,
        #[command(flatten)]
        image: ImageArgs,
    },
    /// Run the acceptance checks.
    Selftest {
        /// Comma-separated criterion numbers; all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u32>,
    },
}

#[derive(Args, Debug)]
struct RotArgs {
    /// Doubly visible set of this Θ.
    #[arg(long, conflicts_with_all = ["gap", "goldberg"])]
    theta: Option<String>,
    /// Open gap `lo,hi` of an m_d rotation set (repeat for each gap).
    #[arg(long)]
    gap: Vec<String>,
    #[arg(long, default_value_t = 3)]
    d: u64,
    /// Doubling orbit with this rotation number.
    #[arg(long)]
    goldberg: Option<String>,
}

#[derive(Subcommand, Debug)]
enum AngleCmd {
    /// Critical gap of Θ.
    Gap { theta: String },
    /// Dynamic rotation number of Θ.
    Rho { theta: String },
    /// Ends of rho^{-1}(t).
    RhoInv { t: String },
    /// Balanced angle (odd denominator) or pair (even denominator).
    Balanced { t: String },
    /// phi_Θ(θ), or both one-sided limits with --sides.
    Phi {
        theta_c: String,
        theta: String,
        #[arg(long)]
        sides: bool,
    },
    /// psi_Θ(x).
    Psi { theta_c: String, x: String },
    /// Samples of rho on a grid, as CSV.
    RhoGraph {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SideArg {
    Exact,
    Minus,
    Plus,
}

#[derive(Subcommand, Debug)]
enum RayCmd {
    /// Internal ray of angle θ (or the external one with --external).
    Internal {
        #[arg(long, allow_hyphen_values = true)]
        q: String,
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 24)]
        depth: usize,
        #[arg(long, value_enum, default_value_t = SideArg::Exact)]
        side: SideArg,
        #[arg(long)]
        external: bool,
        /// CSV with columns k, re, im, potential.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter ray of Θ.
    Param {
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 0.999)]
        rmax: f64,
        #[arg(long, default_value_t = 60)]
        steps: usize,
        /// Continue along the level set until |q^2| reaches this.
        #[arg(long)]
        extend_to: Option<f64>,
        #[arg(long, default_value_t = 50)]
        max_entry: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ProjectionArg {
    Plane,
    Sphere,
    Circled,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PlaneArg {
    Q,
    Q2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ColoringArg {
    Component,
    Rotation,
}

#[derive(Args, Debug)]
struct ImageArgs {
    #[arg(long, default_value_t = 512)]
    width: usize,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    center: String,
    #[arg(long, default_value_t = 4.0)]
    extent: f64,
    #[arg(long, value_enum, default_value_t = ProjectionArg::Plane)]
    projection: ProjectionArg,
    /// JSON palette file.
    #[arg(long)]
    palette: Option<PathBuf>,
    /// Output image; `.png` writes PNG, anything else binary PPM.
    #[arg(long)]
    out: PathBuf,
}

type CliResult<T> = std::result::Result<T, String>;

fn angle(s: &str) -> CliResult<Angle> {
    s.parse::<Angle>().map_err(|e| format!("bad angle {s:?}: {e}"))
}

fn complex(s: &str) -> CliResult<C64> {
    parse_complex(s).ok_or_else(|| format!("bad complex number {s:?}"))
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn cjson(z: C64) -> Value {
    json!([z.re, z.im])
}

struct Ctx {
    threads: usize,
    budget: usize,
    eps: f64,
    sidecar: Option<PathBuf>,
}

impl Ctx {
    /// Writes the sidecar: explicit path, else next to `out`.
    fn sidecar(&self, out: Option<&Path>, config: Value, result: Value) -> CliResult<()> {
        let path = match (&self.sidecar, out) {
            (Some(p), _) => p.clone(),
            (None, Some(o)) => {
                let mut s = o.as_os_str().to_owned();
                s.push(".json");
                PathBuf::from(s)
            }
            (None, None) => return Ok(()),
        };
        let doc = json!({
            "version": env!("CARGO_PKG_VERSION"),
            "threads": self.threads,
            "budget": self.budget,
            "eps": self.eps,
            "config": config,
            "result": result,
        });
        fs::write(&path, serde_json::to_string_pretty(&doc).map_err(err)? + "\n").map_err(err)
    }
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string(v).expect("JSON value"));
}

fn run_rot(ctx: &Ctx, a: &RotArgs) -> CliResult<()> {
    let (set, config) = if let Some(th) = &a.theta {
        let th = angle(th)?;
        (antipode::calculus::doubly_visible_set(&th).map_err(err)?, json!({"theta": th.to_string()}))
    } else if let Some(t) = &a.goldberg {
        let t = angle(t)?;
        (goldberg_orbit(&t).map_err(err)?, json!({"goldberg": t.to_string()}))
    } else if !a.gap.is_empty() {
        let mut gaps = Vec::new();
        for g in &a.gap {
            let (lo, hi) = g.split_once(',').ok_or_else(|| format!("gap {g:?} is not lo,hi"))?;
            gaps.push(CircleInterval::open(angle(lo.trim())?, angle(hi.trim())?));
        }
        let x = x_d_of(&gaps, a.d).map_err(err)?;
        (x.skeleton, json!({"d": a.d, "gaps": a.gap}))
    } else {
        return Err("rot needs --theta, --goldberg or --gap".into());
    };
    let out = set.to_json();
    print_json(&out);
    ctx.sidecar(None, config, out)
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> CliResult<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path).map_err(err)?);
    writeln!(f, "{header}").map_err(err)?;
    for r in rows {
        writeln!(f, "{r}").map_err(err)?;
    }
    Ok(())
}

fn run_angle(ctx: &Ctx, cmd: &AngleCmd) -> CliResult<()> {
    let out = match cmd {
        AngleCmd::Gap { theta } => critical_gap(&angle(theta)?).to_json(),
        AngleCmd::Rho { theta } => {
            let th = angle(theta)?;
            json!({"theta": th.to_string(), "rho": dynamic_rotation_number(&th).map_err(err)?.to_string()})
        }
        AngleCmd::RhoInv { t } => {
            let t = angle(t)?;
            let plus = rho_inverse_plus(&t).map_err(err)?;
            let minus = rho_inverse_minus(&t).map_err(err)?;
            if plus == minus {
                json!({"t": t.to_string(), "theta": plus.to_string()})
            } else {
                json!({
                    "t": t.to_string(),
                    "theta_minus": minus.to_string(),
                    "theta_plus": plus.to_string(),
                    "jump": rho_discontinuity(&t).to_string(),
                })
            }
        }
        AngleCmd::Balanced { t } => {
            let t = angle(t)?;
            if !t.den().bit(0) {
                let (x, y) = balanced_pair(&t).map_err(err)?;
                json!({"t": t.to_string(), "pair": [x.to_string(), y.to_string()]})
            } else {
                json!({"t": t.to_string(), "theta": balanced_angle(&t).map_err(err)?.to_string()})
            }
        }
        AngleCmd::Phi { theta_c, theta, sides } => {
            let (tc, th) = (angle(theta_c)?, angle(theta)?);
            if *sides {
                let (m, p) = phi_pm(&tc, &th).map_err(err)?;
                json!({"minus": m.to_string(), "plus": p.to_string()})
            } else {
                let (x, ds) = phi(&tc, &th).map_err(err)?;
                json!({"x": x.to_string(), "digits": ds})
            }
        }
        AngleCmd::Psi { theta_c, x } => {
            json!({"theta": psi(&angle(theta_c)?, &angle(x)?).map_err(err)?.to_string()})
        }
        AngleCmd::RhoGraph { samples, out } => {
            let g = rho_graph(*samples).map_err(err)?;
            let rows = g.iter().map(|(th, t)| format!("{th},{t}"));
            match out {
                Some(p) => {
                    write_csv(p, "theta,t", rows)?;
                    let summary = json!({"samples": samples, "out": p});
                    ctx.sidecar(Some(p), json!({"command": "angle rho-graph", "samples": samples}), summary.clone())?;
                    summary
                }
                None => {
                    println!("theta,t");
                    for r in rows {
                        println!("{r}");
                    }
                    return Ok(());
                }
            }
        }
    };
    print_json(&out);
    ctx.sidecar(None, json!({"command": format!("{cmd:?}")}), out)
}

fn run_classify(ctx: &Ctx, q: &str, z: Option<&str>) -> CliResult<()> {
    let q = complex(q)?;
    let out = match z {
        Some(z) => {
            let z = complex(z)?;
            let oc = classify_orbit(q, z, ctx.budget, ctx.eps);
            json!({"q": cjson(q), "z": cjson(z), "orbit": oc})
        }
        None => {
            let (class, oc) = classify_parameter(q, ctx.budget, ctx.eps).map_err(err)?;
            let (c0, cinf) = critical_points(q).map_err(err)?;
            let (fp, fm, (mp, mm)) = fixed_points(q);
            json!({
                "q": cjson(q),
                "class": class.label(),
                "critical_orbit": oc,
                "critical_points": [cjson(c0), cjson(cinf)],
                "fixed_points": [cjson(fp), cjson(fm)],
                "fixed_multipliers": [mp.norm(), mm.norm()],
            })
        }
    };
    print_json(&out);
    ctx.sidecar(None, json!({"command": "classify"}), out)
}

fn trace_json(t: &RayTrace) -> Value {
    json!({
        "theta": t.theta.to_string(),
        "side": t.side,
        "points": t.points.len(),
        "landed": t.landed,
        "landing_point": t.landing_point.map(cjson),
        "bifurcated": t.bifurcated,
    })
}

fn run_ray(ctx: &Ctx, cmd: &RayCmd) -> CliResult<()> {
    match cmd {
        RayCmd::Internal { q, theta, depth, side, external, out } => {
            let (q, th) = (complex(q)?, angle(theta)?);
            let side = match side {
                SideArg::Exact => RaySide::Exact,
                SideArg::Minus => RaySide::Minus,
                SideArg::Plus => RaySide::Plus,
            };
            let tr = match (side, external) {
                (RaySide::Exact, true) => external_ray(q, &th, *depth),
                (s, true) => internal_ray_side(q, &th, s, *depth).map(|t| t.antipodal()),
                (s, false) => internal_ray_side(q, &th, s, *depth),
            }
            .map_err(err)?;
            let summary = trace_json(&tr);
            if let Some(p) = out {
                write_csv(
                    p,
                    "k,re,im,potential",
                    tr.points.iter().zip(&tr.potentials).enumerate().map(|(k, (z, r))| format!("{k},{},{},{r}", z.re, z.im)),
                )?;
            }
            print_json(&summary);
            ctx.sidecar(
                out.as_deref(),
                json!({"command": "ray internal", "q": cjson(q), "theta": th.to_string(), "depth": depth, "external": external}),
                summary,
            )
        }
        RayCmd::Param { theta, rmax, steps, extend_to, max_entry, out } => {
            let th = angle(theta)?;
            let mut opts = ParamRayOptions::new(default_schedule(*rmax, *steps));
            opts.extend_to = *extend_to;
            opts.max_entry = *max_entry;
            let ray = parameter_ray(&th, &opts).map_err(err)?;
            let last = ray.last();
            let summary = json!({
                "theta": th.to_string(),
                "points": ray.points.len(),
                "status": ray.status,
                "message": ray.message,
                "last_q2": last.map(|p| cjson(p.q2)),
                "last_phi": last.map(|p| cjson(p.phi)),
            });
            if let Some(p) = out {
                write_csv(
                    p,
                    "k,q_re,q_im,q2_re,q2_im,phi_re,phi_im,entry",
                    ray.points.iter().enumerate().map(|(k, pt)| {
                        format!("{k},{},{},{},{},{},{},{}", pt.q.re, pt.q.im, pt.q2.re, pt.q2.im, pt.phi.re, pt.phi.im, pt.entry)
                    }),
                )?;
            }
            print_json(&summary);
            ctx.sidecar(
                out.as_deref(),
                json!({"command": "ray param", "theta": th.to_string(), "rmax": rmax, "steps": steps, "extend_to": extend_to, "max_entry": max_entry}),
                summary,
            )
        }
    }
}

fn image_spec(ctx: &Ctx, a: &ImageArgs) -> CliResult<ImageSpec> {
    Ok(ImageSpec {
        width: a.width,
        height: a.height.unwrap_or(a.width),
        center: complex(&a.center)?,
        half_extent: a.extent,
        projection: match a.projection {
            ProjectionArg::Plane => Projection::Plane,
            ProjectionArg::Sphere => Projection::SphereOrthonormal,
            ProjectionArg::Circled => Projection::CircledDisk,
        },
        budget: ctx.budget,
        eps: ctx.eps,
        threads: Some(ctx.threads),
    })
}

fn write_image(ctx: &Ctx, img: &PlaneImage, a: &ImageArgs) -> CliResult<()> {
    let palette = match &a.palette {
        Some(p) => Palette::from_json(&fs::read_to_string(p).map_err(err)?).map_err(err)?,
        None => Palette::default(),
    };
    let is_png = a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        img.write_png(&a.out, &palette).map_err(err)?;
    } else {
        img.write_ppm(&a.out, &palette).map_err(err)?;
    }
    let meta = img.sidecar(&palette);
    print_json(&json!({"out": a.out, "width": img.spec.width, "height": img.spec.height, "counts": meta["counts"]}));
    ctx.sidecar(Some(&a.out), meta, json!({"out": a.out}))
}

fn run_selftest(only: &[u32]) -> CliResult<bool> {
    let runners: [fn() -> checks::CheckResult; 9] = [
        checks::criterion_1,
        checks::criterion_2,
        checks::criterion_3,
        checks::criterion_4,
        checks::criterion_5,
        checks::criterion_6,
        checks::criterion_7,
        checks::criterion_8,
        checks::criterion_9,
    ];
    let mut all = true;
    for (i, run) in runners.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i as u32 + 1)) {
            continue;
        }
        let r = run();
        println!("{}", r.line());
        all &= r.passed();
    }
    Ok(all)
}

fn thread_count(flag: Option<usize>) -> usize {
    std::env::var("ANTIPODE_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .or(flag)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
        .max(1)
}

fn run(cli: Cli) -> CliResult<bool> {
    let threads = thread_count(cli.threads);
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    let ctx = Ctx { threads, budget: cli.budget, eps: cli.eps, sidecar: cli.sidecar };
    match &cli.command {
        Command::Rot(a) => run_rot(&ctx, a)?,
        Command::Angle(cmd) => run_angle(&ctx, cmd)?,
        Command::Classify { q, z } => run_classify(&ctx, q, z.as_deref())?,
        Command::Ray(cmd) => run_ray(&ctx, cmd)?,
        Command::Julia { q, image } => {
            let q = complex(q)?;
            let img = render_julia(q, &image_spec(&ctx, image)?).map_err(err)?;
            write_image(&ctx, &img, image)?;
        }
        Command::ParamPlane { plane, coloring, image } => {
            let plane = match plane {
                PlaneArg::Q => ParamPlane::Q,
                PlaneArg::Q2 => ParamPlane::QSquared,
            };
            let coloring = match coloring {
                ColoringArg::Component => Coloring::ComponentType,
                ColoringArg::Rotation => Coloring::RotationNumber,
            };
            let img = render_param(plane, coloring, &image_spec(&ctx, image)?).map_err(err)?;
            write_image(&ctx, &img, image)?;
        }
        Command::Selftest { only } => return run_selftest(only),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
