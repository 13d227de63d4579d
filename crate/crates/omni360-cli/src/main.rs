//! Batch command-line front end: scene rendering, trajectory planning,
//! pedestrian simulation, and metric evaluation.
//!
//! Every subcommand is a pure function of its configuration and seed; reruns
//! reproduce outputs byte-for-byte. Each run writes a `run_config.json` echo
//! next to its outputs. The environment variable `OMNI360_SEED` overrides
//! any configured seed.

use clap::{Args, Parser, Subcommand};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use omni360::io::{
    load_palette_file, read_depth_file, read_entity_png, read_semantic_png, write_depth_file,
    write_entity_png, write_rgb_png, write_semantic_png, SampleManifest,
};
use omni360::metrics::{
    default_iou_thresholds, depth_metrics, entity_ap, entity_masks, miou, mpde_aggregate,
    vln_metrics, MetricReport, MpdeSet, MpdeSubset, VlnEpisode,
};
use omni360::ped::{event_log_text, PedParams, PedestrianWorld, Rect};
use omni360::scene::{render_cube, Aabb, CameraPose, Scene};
use omni360::sphere::Face;
use omni360::stitch::stitch;
use omni360::traj::{
    allocate_times, enforce_limits, gen_waypoint_routes, routes_from_json, routes_to_json, sample,
    solve_min_snap, trajectory_csv, KinematicLimits, Waypoint, DEFAULT_KINEMATIC_SETS,
};

#[derive(Parser)]
#[command(
    name = "omni360",
    about = "Panoramic data-generation toolkit: render, plan, simulate, evaluate",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a scene into an ERP sample (RGB, depth, semantic, entity).
    Render(RenderArgs),
    /// Plan minimum-snap trajectories for routes and kinematic sets.
    Plan(PlanArgs),
    /// Generate seeded waypoint routes.
    GenWaypoints(GenWaypointsArgs),
    /// Simulate pedestrians and export per-frame keypoints.
    Pedestrians(PedestriansArgs),
    /// Evaluate metric families from files on disk.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(Args)]
struct RenderArgs {
    /// Scene description JSON.
    #[arg(long)]
    scene: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Cube face resolution (pixels per side).
    #[arg(long, default_value_t = 512)]
    cube_res: usize,
    /// ERP height in pixels (width is twice this).
    #[arg(long, default_value_t = 256)]
    erp_height: usize,
    /// Camera position "x,y,z" in meters.
    #[arg(long, default_value = "0,0,0", allow_hyphen_values = true)]
    pos: String,
    /// Camera yaw in degrees.
    #[arg(long, default_value_t = 0.0)]
    yaw: f64,
    /// Camera pitch in degrees (positive looks down).
    #[arg(long, default_value_t = 0.0)]
    pitch: f64,
    /// Camera roll in degrees.
    #[arg(long, default_value_t = 0.0)]
    roll: f64,
    /// Also write the 24 per-face rasters.
    #[arg(long)]
    faces: bool,
    /// Optional semantic palette CSV; scene semantic ids must appear in it.
    #[arg(long)]
    palette: Option<PathBuf>,
    /// Frame id recorded in the manifest.
    #[arg(long, default_value_t = 0)]
    frame_id: u64,
}

#[derive(Args)]
struct PlanArgs {
    /// Route file: JSON list of `[x,y,z]` triples, or a list of such routes.
    #[arg(long, conflicts_with = "gen_count")]
    routes: Option<PathBuf>,
    /// Generate this many seeded routes instead of reading a file.
    #[arg(long)]
    gen_count: Option<usize>,
    /// Seed for route generation.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Route length range "min,max" in meters (generation only).
    #[arg(long, default_value = "50,150")]
    length_range: String,
    /// Generation bounds "x0,y0,z0,x1,y1,z1" in meters.
    #[arg(long, default_value = "-100,5,-100,100,60,100", allow_hyphen_values = true)]
    bounds: String,
    /// Minimum leg length in meters (generation only).
    #[arg(long, default_value_t = 2.0)]
    min_leg: f64,
    /// Kinematic set "a_max,v_max,dt"; repeatable. Defaults to the two stock sets.
    #[arg(long = "kinematics")]
    kinematics: Vec<String>,
    /// Output directory for trajectory CSVs.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenWaypointsArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    count: usize,
    /// Route length range "min,max" in meters.
    #[arg(long, default_value = "50,150")]
    length_range: String,
    /// Bounds "x0,y0,z0,x1,y1,z1" in meters.
    #[arg(long, default_value = "-100,5,-100,100,60,100", allow_hyphen_values = true)]
    bounds: String,
    #[arg(long, default_value_t = 2.0)]
    min_leg: f64,
    /// Output route JSON file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PedestriansArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of agents.
    #[arg(long)]
    agents: usize,
    /// Active area "WxD" in meters, centered on the origin.
    #[arg(long, default_value = "20x20")]
    area: String,
    /// Number of simulation steps.
    #[arg(long)]
    steps: u64,
    /// Step interval in seconds.
    #[arg(long, default_value_t = 0.1)]
    dt: f64,
    /// Camera "x,y,z,yaw,pitch,roll" (meters and degrees).
    #[arg(long, default_value = "0,3,-8,0,20,0", allow_hyphen_values = true)]
    camera: String,
    /// Optional scene used for keypoint occlusion tests.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// AbsRel / RMSE / delta1 between two PFM depth rasters.
    Depth(EvalDepthArgs),
    /// Semantic mIoU (and optional entity mask AP) between label PNGs.
    Seg(EvalSegArgs),
    /// Weighted pedestrian distance/angle error aggregation.
    Mpde(EvalMpdeArgs),
    /// Navigation SR / SPL / NE over an episode file.
    Vln(EvalVlnArgs),
}

#[derive(Args)]
struct EvalDepthArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Optional output directory for report.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalSegArgs {
    /// Predicted semantic PNG (8-bit grayscale ids).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth semantic PNG.
    #[arg(long)]
    gt: PathBuf,
    /// Number of semantic classes.
    #[arg(long, default_value_t = 256)]
    classes: usize,
    /// Predicted entity PNG (24-bit packed ids); enables mask AP.
    #[arg(long, requires = "gt_entity")]
    pred_entity: Option<PathBuf>,
    /// Ground-truth entity PNG.
    #[arg(long, requires = "pred_entity")]
    gt_entity: Option<PathBuf>,
    /// Optional JSON object of per-entity scores {"id": score}; default 1.0.
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalMpdeArgs {
    /// JSON list of result sets: {name, public, dist_err, ang_err, count}
    /// or {name, public, samples: [[dist, ang], ...]}.
    #[arg(long)]
    sets: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalVlnArgs {
    /// JSON list of episodes:
    /// {goal, success_radius, path, shortest_path_length}.
    #[arg(long)]
    episodes: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> omni360::Result<()> {
    match command {
        Command::Render(args) => cmd_render(args),
        Command::Plan(args) => cmd_plan(args),
        Command::GenWaypoints(args) => cmd_gen_waypoints(args),
        Command::Pedestrians(args) => cmd_pedestrians(args),
        Command::Eval(kind) => match kind {
            EvalCommand::Depth(args) => cmd_eval_depth(args),
            EvalCommand::Seg(args) => cmd_eval_seg(args),
            EvalCommand::Mpde(args) => cmd_eval_mpde(args),
            EvalCommand::Vln(args) => cmd_eval_vln(args),
        },
    }
}

// ---------------------------------------------------------------------------
// Argument parsing helpers

fn bad(msg: String) -> omni360::Error {
    omni360::Error::Format(msg)
}

fn parse_floats(text: &str, n: usize, what: &str) -> omni360::Result<Vec<f64>> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad(format!("{what}: expected {n} comma-separated numbers, got {text:?}")))?;
    if parts.len() != n {
        return Err(bad(format!(
            "{what}: expected {n} comma-separated numbers, got {}",
            parts.len()
        )));
    }
    Ok(parts)
}

fn parse_bounds(text: &str) -> omni360::Result<Aabb> {
    let v = parse_floats(text, 6, "bounds")?;
    Ok(Aabb::new([v[0], v[1], v[2]], [v[3], v[4], v[5]]))
}

fn parse_range(text: &str) -> omni360::Result<(f64, f64)> {
    let v = parse_floats(text, 2, "length range")?;
    Ok((v[0], v[1]))
}

fn parse_kinematics(text: &str) -> omni360::Result<KinematicLimits> {
    let v = parse_floats(text, 3, "kinematics")?;
    if v.iter().any(|x| !x.is_finite() || *x <= 0.0) {
        return Err(bad(format!(
            "kinematics: a_max, v_max, and dt must all be positive, got {text:?}"
        )));
    }
    Ok(KinematicLimits::new(v[0], v[1], v[2]))
}

fn parse_area(text: &str) -> omni360::Result<Rect> {
    let parts: Vec<f64> = text
        .split(['x', 'X'])
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| bad(format!("area: expected WxD, got {text:?}")))?;
    if parts.len() != 2 {
        return Err(bad(format!("area: expected WxD, got {text:?}")));
    }
    Ok(Rect::centered(parts[0], parts[1]))
}

fn parse_camera(text: &str) -> omni360::Result<CameraPose> {
    let v = parse_floats(text, 6, "camera")?;
    Ok(CameraPose::new([v[0], v[1], v[2]], v[3], v[4], v[5]))
}

fn seed_override(configured: u64) -> omni360::Result<u64> {
    match std::env::var("OMNI360_SEED") {
        Ok(text) => text
            .trim()
            .parse::<u64>()
            .map_err(|_| bad(format!("OMNI360_SEED must be an unsigned integer, got {text:?}"))),
        Err(_) => Ok(configured),
    }
}

fn write_config_echo(out_dir: &Path, config: &serde_json::Value) -> omni360::Result<()> {
    let text = serde_json::to_string_pretty(config).expect("config echo");
    std::fs::write(out_dir.join("run_config.json"), text)?;
    Ok(())
}

fn emit_report(
    report: &MetricReport,
    out: Option<&Path>,
    config: &serde_json::Value,
) -> omni360::Result<()> {
    let json = report.to_json()?;
    print!("{json}");
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), &json)?;
        write_config_echo(dir, config)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Subcommands

fn cmd_render(args: RenderArgs) -> omni360::Result<()> {
    let scene = Scene::load(&args.scene)?;
    if let Some(palette_path) = &args.palette {
        let palette = load_palette_file(palette_path)?;
        for prim in scene.primitives() {
            if palette.get(prim.semantic_id).is_none() {
                return Err(bad(format!(
                    "scene semantic id {} missing from palette {:?}",
                    prim.semantic_id, palette_path
                )));
            }
        }
    }
    let pos = parse_floats(&args.pos, 3, "pos")?;
    let pose = CameraPose::new([pos[0], pos[1], pos[2]], args.yaw, args.pitch, args.roll);
    std::fs::create_dir_all(&args.out)?;

    let cube = render_cube(&scene, &pose, args.cube_res)?;
    let erp = stitch(&cube, args.erp_height)?;

    write_rgb_png(&erp.rgb, &args.out.join("erp_rgb.png"))?;
    write_depth_file(&erp.depth, &args.out.join("erp_depth.pfm"))?;
    write_semantic_png(&erp.semantic, &args.out.join("erp_semantic.png"))?;
    write_entity_png(&erp.entity, &args.out.join("erp_entity.png"))?;

    if args.faces {
        for face in Face::ALL {
            let layers = cube.face(face);
            let name = face.name();
            write_rgb_png(&layers.rgb, &args.out.join(format!("face_{name}_rgb.png")))?;
            write_depth_file(
                &layers.zdepth,
                &args.out.join(format!("face_{name}_depth.pfm")),
            )?;
            write_semantic_png(
                &layers.semantic,
                &args.out.join(format!("face_{name}_semantic.png")),
            )?;
            write_entity_png(
                &layers.entity,
                &args.out.join(format!("face_{name}_entity.png")),
            )?;
        }
    }

    let manifest = SampleManifest {
        frame_id: args.frame_id,
        camera: pose,
        rgb: "erp_rgb.png".into(),
        depth: "erp_depth.pfm".into(),
        semantic: "erp_semantic.png".into(),
        entity: "erp_entity.png".into(),
        keypoints: None,
    };
    manifest.save(&args.out.join("manifest.json"))?;

    write_config_echo(
        &args.out,
        &serde_json::json!({
            "command": "render",
            "scene": args.scene,
            "cube_res": args.cube_res,
            "erp_height": args.erp_height,
            "camera": pose,
            "faces": args.faces,
            "frame_id": args.frame_id,
        }),
    )
}

fn kinematic_sets(args: &[String]) -> omni360::Result<Vec<KinematicLimits>> {
    if args.is_empty() {
        return Ok(DEFAULT_KINEMATIC_SETS.to_vec());
    }
    args.iter().map(|t| parse_kinematics(t)).collect()
}

fn cmd_plan(args: PlanArgs) -> omni360::Result<()> {
    let sets = kinematic_sets(&args.kinematics)?;
    let seed = seed_override(args.seed)?;
    let routes: Vec<Vec<Waypoint>> = match (&args.routes, args.gen_count) {
        (Some(path), None) => routes_from_json(&std::fs::read_to_string(path)?)?,
        (None, Some(count)) => {
            let range = parse_range(&args.length_range)?;
            let bounds = parse_bounds(&args.bounds)?;
            gen_waypoint_routes(seed, count, range, &bounds, args.min_leg)?
        }
        _ => {
            return Err(bad(
                "plan needs exactly one of --routes or --gen-count".into(),
            ))
        }
    };
    std::fs::create_dir_all(&args.out)?;
    for (r, route) in routes.iter().enumerate() {
        for (k, lim) in sets.iter().enumerate() {
            let times = allocate_times(route, lim)?;
            let traj = enforce_limits(&solve_min_snap(route, &times)?, lim);
            let rows = sample(&traj, lim.dt);
            let path = args.out.join(format!("traj_{r:04}_k{k}.csv"));
            std::fs::write(path, trajectory_csv(&rows))?;
        }
    }
    write_config_echo(
        &args.out,
        &serde_json::json!({
            "command": "plan",
            "routes": args.routes,
            "gen_count": args.gen_count,
            "seed": seed,
            "length_range": args.length_range,
            "bounds": args.bounds,
            "min_leg": args.min_leg,
            "kinematic_sets": sets,
            "route_count": routes.len(),
            "csv_count": routes.len() * sets.len(),
        }),
    )
}

fn cmd_gen_waypoints(args: GenWaypointsArgs) -> omni360::Result<()> {
    let seed = seed_override(args.seed)?;
    let range = parse_range(&args.length_range)?;
    let bounds = parse_bounds(&args.bounds)?;
    let routes = gen_waypoint_routes(seed, args.count, range, &bounds, args.min_leg)?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
        write_config_echo(
            parent,
            &serde_json::json!({
                "command": "gen-waypoints",
                "seed": seed,
                "count": args.count,
                "length_range": args.length_range,
                "bounds": args.bounds,
                "min_leg": args.min_leg,
                "out": args.out,
            }),
        )?;
    }
    std::fs::write(&args.out, routes_to_json(&routes))?;
    Ok(())
}

fn cmd_pedestrians(args: PedestriansArgs) -> omni360::Result<()> {
    let seed = seed_override(args.seed)?;
    let area = parse_area(&args.area)?;
    let camera = parse_camera(&args.camera)?;
    let scene = match &args.scene {
        Some(path) => Some(Scene::load(path)?),
        None => None,
    };
    if !args.dt.is_finite() || args.dt <= 0.0 {
        return Err(bad(format!("dt must be positive, got {}", args.dt)));
    }

    let mut world = PedestrianWorld::spawn(seed, args.agents, area, PedParams::default())?;
    let frames_dir = args.out.join("frames");
    std::fs::create_dir_all(&frames_dir)?;

    let write_frame = |world: &PedestrianWorld| -> omni360::Result<()> {
        let frame = world.export_frame(&camera, scene.as_ref());
        let path = frames_dir.join(format!("frame_{:06}.json", world.tick()));
        std::fs::write(path, serde_json::to_string_pretty(&frame)?)?;
        Ok(())
    };

    write_frame(&world)?;
    for _ in 0..args.steps {
        world.step(args.dt);
        write_frame(&world)?;
    }
    std::fs::write(args.out.join("events.log"), event_log_text(world.events()))?;

    write_config_echo(
        &args.out,
        &serde_json::json!({
            "command": "pedestrians",
            "seed": seed,
            "agents": args.agents,
            "area": args.area,
            "steps": args.steps,
            "dt": args.dt,
            "camera": camera,
            "scene": args.scene,
            "params": world.params(),
        }),
    )
}

fn cmd_eval_depth(args: EvalDepthArgs) -> omni360::Result<()> {
    let pred = read_depth_file(&args.pred)?;
    let gt = read_depth_file(&args.gt)?;
    let m = depth_metrics(&pred, &gt, None)?;
    let mut report = MetricReport::new();
    report.push("absrel", m.absrel);
    report.push("rmse", m.rmse);
    report.push("delta1", m.delta1);
    emit_report(
        &report,
        args.out.as_deref(),
        &serde_json::json!({
            "command": "eval depth",
            "pred": args.pred,
            "gt": args.gt,
        }),
    )
}

fn cmd_eval_seg(args: EvalSegArgs) -> omni360::Result<()> {
    let pred = read_semantic_png(&args.pred)?;
    let gt = read_semantic_png(&args.gt)?;
    let mut report = MetricReport::new();
    report.push("miou", miou(&pred, &gt, args.classes)?);

    if let (Some(pred_path), Some(gt_path)) = (&args.pred_entity, &args.gt_entity) {
        let pred_ids = read_entity_png(pred_path)?;
        let gt_ids = read_entity_png(gt_path)?;
        let scores: HashMap<u32, f64> = match &args.scores {
            Some(path) => {
                let raw: HashMap<String, f64> =
                    serde_json::from_str(&std::fs::read_to_string(path)?)?;
                raw.into_iter()
                    .map(|(k, v)| {
                        k.parse::<u32>()
                            .map(|id| (id, v))
                            .map_err(|_| bad(format!("scores: bad entity id {k:?}")))
                    })
                    .collect::<omni360::Result<_>>()?
            }
            None => HashMap::new(),
        };
        let preds: Vec<_> = entity_masks(&pred_ids)
            .into_iter()
            .map(|(id, mask)| (mask, scores.get(&id).copied().unwrap_or(1.0)))
            .collect();
        let gts: Vec<_> = entity_masks(&gt_ids).into_iter().map(|(_, m)| m).collect();
        report.push(
            "entity_map",
            entity_ap(&preds, &gts, &default_iou_thresholds())?,
        );
    }

    emit_report(
        &report,
        args.out.as_deref(),
        &serde_json::json!({
            "command": "eval seg",
            "pred": args.pred,
            "gt": args.gt,
            "classes": args.classes,
            "pred_entity": args.pred_entity,
            "gt_entity": args.gt_entity,
        }),
    )
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum MpdeSetSpec {
    Means {
        name: String,
        public: bool,
        dist_err: f64,
        ang_err: f64,
        count: usize,
    },
    Samples {
        name: String,
        public: bool,
        samples: Vec<(f64, f64)>,
    },
}

fn cmd_eval_mpde(args: EvalMpdeArgs) -> omni360::Result<()> {
    let specs: Vec<MpdeSetSpec> = serde_json::from_str(&std::fs::read_to_string(&args.sets)?)?;
    let sets: Vec<MpdeSet> = specs
        .into_iter()
        .map(|spec| match spec {
            MpdeSetSpec::Means {
                name,
                public,
                dist_err,
                ang_err,
                count,
            } => MpdeSet::from_means(name, public, dist_err, ang_err, count),
            MpdeSetSpec::Samples {
                name,
                public,
                samples,
            } => MpdeSet::new(name, public, samples),
        })
        .collect();

    let (dist_all, ang_all) = mpde_aggregate(&sets, MpdeSubset::All)?;
    let mut report = MetricReport::new();
    report.push("dist_err_all", dist_all);
    report.push("ang_err_all", ang_all);
    if sets.iter().any(|s| s.public) {
        let (dist_pub, ang_pub) = mpde_aggregate(&sets, MpdeSubset::Public)?;
        report.push("dist_err_public", dist_pub);
        report.push("ang_err_public", ang_pub);
    }
    emit_report(
        &report,
        args.out.as_deref(),
        &serde_json::json!({
            "command": "eval mpde",
            "sets": args.sets,
        }),
    )
}

fn cmd_eval_vln(args: EvalVlnArgs) -> omni360::Result<()> {
    let episodes: Vec<VlnEpisode> =
        serde_json::from_str(&std::fs::read_to_string(&args.episodes)?)?;
    let m = vln_metrics(&episodes)?;
    let mut report = MetricReport::new();
    report.push("sr", m.sr);
    report.push("spl", m.spl);
    report.push("ne", m.ne);
    emit_report(
        &report,
        args.out.as_deref(),
        &serde_json::json!({
            "command": "eval vln",
            "episodes": args.episodes,
        }),
    )
}
