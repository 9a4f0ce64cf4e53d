//! Command-line front end: quadric encodings, contact checks, grid analyses
//! with structured reports, and OBJ mesh export of Euclidean projections.
//!
//! Exit codes: 0 completed, 2 usage error, 3 numerical failure (partial
//! report written when possible), 4 empty output.

mod mesh;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use liesphere::zoo::build_generator;
use liesphere::{
    decode, encode, lift_euclidean, oriented_contact_lie, parse_grid_surface, run_analysis_partial,
    Criterion, DupinSettings, LieVector, SphereElement,
};

#[derive(Parser)]
#[command(
    name = "liesphere",
    version,
    about = "Lie sphere geometry: quadric encodings, Dupin analysis, and mesh export"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a Euclidean element as homogeneous quadric coordinates.
    Encode(ElementArgs),
    /// Decode quadric coordinates back to a Euclidean element.
    Decode {
        /// Comma-separated homogeneous coordinates (length n + 3).
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        coords: Vec<f64>,
        /// Relative decode tolerance.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Check oriented contact of exactly two elements.
    Contact(ElementArgs),
    /// Run analyses on a generator or a sampled-grid surface file.
    Analyze(AnalyzeArgs),
    /// Export a surface mesh (OBJ) of a generator's Euclidean projection.
    ExportMesh(MeshArgs),
    /// List the available generators with their parameters.
    Generators,
}

#[derive(Args)]
struct ElementArgs {
    /// Point: comma-separated coordinates, e.g. 1,0,0 (repeatable).
    #[arg(long, value_name = "X,Y,..", allow_hyphen_values = true)]
    point: Vec<String>,
    /// Sphere: center:signed-radius, e.g. 0,0,0:1 (repeatable).
    #[arg(long, value_name = "C:R", allow_hyphen_values = true)]
    sphere: Vec<String>,
    /// Plane: unit-normal:offset, e.g. 0,0,1:-1 (repeatable).
    #[arg(long, value_name = "N:H", allow_hyphen_values = true)]
    plane: Vec<String>,
    /// The point at infinity (needs --dim).
    #[arg(long)]
    infinity: bool,
    /// Ambient dimension (inferred from coordinates when omitted).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Generator id with optional parameters: name[:k=v,... | :v1,v2,...].
    #[arg(long = "gen")]
    generator: Option<String>,
    /// Sampled-grid surface file (see README for the format).
    #[arg(long = "grid-file")]
    grid_file: Option<PathBuf>,
    /// Grid resolution, e.g. 20x20x20.
    #[arg(long, default_value = "8x8")]
    grid: String,
    /// Comma-separated criteria: dupin, reduce, isopara.
    #[arg(long, value_delimiter = ',', default_value = "dupin")]
    criteria: Vec<String>,
    /// Report output path.
    #[arg(long, default_value = "report.json")]
    out: PathBuf,
    /// Seed for all randomized internals.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Leaf-constancy threshold for a Dupin verdict.
    #[arg(long, default_value_t = 1e-5)]
    deviation_yes: f64,
    /// Deviation above this is a definite non-Dupin verdict.
    #[arg(long, default_value_t = 1e-3)]
    deviation_no: f64,
    /// Arclength of each traced curvature line.
    #[arg(long, default_value_t = 1.0)]
    leaf_length: f64,
    /// Include wall-clock timing in the report (breaks byte determinism).
    #[arg(long)]
    timing: bool,
    /// JSON config file overriding the defaults of the flags above.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct MeshArgs {
    /// Generator id with optional parameters.
    #[arg(long = "gen")]
    generator: String,
    /// Mesh resolution, e.g. 64x64.
    #[arg(long, default_value = "64x64")]
    resolution: String,
    /// Projection frame: "standard" or "random:SEED".
    #[arg(long, default_value = "standard")]
    frame: String,
    /// Fix a parameter axis for maps with more than two parameters, e.g. 2=0.5.
    #[arg(long)]
    slice: Vec<String>,
    /// Use the spherical projection and flatten stereographically.
    #[arg(long)]
    flatten: bool,
    /// Output OBJ path.
    #[arg(long, default_value = "mesh.obj")]
    out: PathBuf,
}

fn fmt_num(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x}")
    }
}

fn parse_vector(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

fn parse_elements(args: &ElementArgs) -> Result<Vec<SphereElement>, String> {
    let mut out = Vec::new();
    for p in &args.point {
        out.push(SphereElement::point(parse_vector(p)?));
    }
    for s in &args.sphere {
        let (c, r) = s
            .split_once(':')
            .ok_or_else(|| format!("sphere '{s}' needs center:radius"))?;
        out.push(SphereElement::sphere(
            parse_vector(c)?,
            r.trim().parse::<f64>().map_err(|e| e.to_string())?,
        ));
    }
    for p in &args.plane {
        let (n, h) = p
            .split_once(':')
            .ok_or_else(|| format!("plane '{p}' needs normal:offset"))?;
        out.push(SphereElement::plane(
            parse_vector(n)?,
            h.trim().parse::<f64>().map_err(|e| e.to_string())?,
        ));
    }
    if args.infinity {
        let dim = args
            .dim
            .ok_or_else(|| "--infinity needs --dim".to_string())?;
        out.push(SphereElement::Infinity { dim });
    }
    if out.is_empty() {
        return Err("no element given (use --point / --sphere / --plane / --infinity)".into());
    }
    Ok(out)
}

fn element_json(e: &SphereElement) -> serde_json::Value {
    match e {
        SphereElement::Point(u) => serde_json::json!({
            "kind": "point", "coords": u.iter().cloned().collect::<Vec<f64>>()
        }),
        SphereElement::Infinity { dim } => serde_json::json!({
            "kind": "infinity", "dim": dim
        }),
        SphereElement::Sphere { center, radius } => serde_json::json!({
            "kind": "sphere",
            "center": center.iter().cloned().collect::<Vec<f64>>(),
            "radius": radius
        }),
        SphereElement::Plane { normal, offset } => serde_json::json!({
            "kind": "plane",
            "normal": normal.iter().cloned().collect::<Vec<f64>>(),
            "offset": offset
        }),
    }
}

fn element_text(e: &SphereElement) -> String {
    match e {
        SphereElement::Point(u) => format!(
            "point {}",
            u.iter().map(|&x| fmt_num(x)).collect::<Vec<_>>().join(" ")
        ),
        SphereElement::Infinity { .. } => "infinity".to_string(),
        SphereElement::Sphere { center, radius } => format!(
            "sphere {} radius {}",
            center
                .iter()
                .map(|&x| fmt_num(x))
                .collect::<Vec<_>>()
                .join(" "),
            fmt_num(*radius)
        ),
        SphereElement::Plane { normal, offset } => format!(
            "plane {} offset {}",
            normal
                .iter()
                .map(|&x| fmt_num(x))
                .collect::<Vec<_>>()
                .join(" "),
            fmt_num(*offset)
        ),
    }
}

/// Parses "name[:k=v,...|:v1,v2,...]" against the registry's parameter list.
fn parse_generator(spec: &str) -> Result<(String, BTreeMap<String, f64>), String> {
    let (id, rest) = match spec.split_once(':') {
        Some((id, rest)) => (id.to_string(), Some(rest)),
        None => (spec.to_string(), None),
    };
    let registry = liesphere::zoo::generator_ids();
    let decl = registry
        .iter()
        .find(|(name, _)| *name == id)
        .ok_or_else(|| format!("unknown generator '{id}'"))?;
    let mut params = BTreeMap::new();
    if let Some(rest) = rest {
        for (pos, token) in rest.split(',').enumerate() {
            let token = token.trim();
            if token.is_empty() {
                continue;
            }
            if let Some((k, v)) = token.split_once('=') {
                params.insert(
                    k.trim().to_string(),
                    v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"))?,
                );
            } else {
                let name = decl
                    .1
                    .get(pos)
                    .ok_or_else(|| format!("too many positional parameters for '{id}'"))?
                    .0;
                params.insert(
                    name.to_string(),
                    token
                        .parse::<f64>()
                        .map_err(|e| format!("'{token}': {e}"))?,
                );
            }
        }
    }
    Ok((id, params))
}

fn parse_counts(text: &str) -> Result<Vec<usize>, String> {
    text.split(['x', 'X'])
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("'{t}': {e}")))
        .collect()
}

fn cmd_encode(args: &ElementArgs) -> Result<(), String> {
    let elements = parse_elements(args)?;
    if elements.len() != 1 {
        return Err("encode takes exactly one element".into());
    }
    let e = &elements[0];
    let n = args.dim.unwrap_or_else(|| e.dim());
    let x = encode(e, n).map_err(|e| e.to_string())?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "coords": x.coords().iter().cloned().collect::<Vec<f64>>()
            })
        );
    } else {
        println!(
            "{}",
            x.coords()
                .iter()
                .map(|&v| fmt_num(v))
                .collect::<Vec<_>>()
                .join(" ")
        );
    }
    Ok(())
}

fn cmd_decode(coords: &[f64], tol: f64, json: bool) -> Result<(), String> {
    let x = LieVector::new(coords.to_vec()).map_err(|e| e.to_string())?;
    let e = decode(&x, tol).map_err(|e| e.to_string())?;
    if json {
        println!("{}", element_json(&e));
    } else {
        println!("{}", element_text(&e));
    }
    Ok(())
}

fn cmd_contact(args: &ElementArgs) -> Result<(), String> {
    let elements = parse_elements(args)?;
    if elements.len() != 2 {
        return Err("contact takes exactly two elements".into());
    }
    let n = args.dim.unwrap_or_else(|| elements[0].dim());
    let k1 = encode(&elements[0], n).map_err(|e| e.to_string())?;
    let k2 = encode(&elements[1], n).map_err(|e| e.to_string())?;
    let verdict = oriented_contact_lie(&k1, &k2, 1e-9).map_err(|e| e.to_string())?;
    if args.json {
        println!("{}", serde_json::json!({ "contact": verdict }));
    } else {
        println!("contact: {verdict}");
    }
    Ok(())
}

#[derive(serde::Deserialize, Default)]
struct ConfigFile {
    grid: Option<String>,
    criteria: Option<Vec<String>>,
    seed: Option<u64>,
    deviation_yes: Option<f64>,
    deviation_no: Option<f64>,
    leaf_length: Option<f64>,
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), (u8, String)> {
    let usage = |m: String| (2u8, m);
    let mut grid_text = args.grid.clone();
    let mut criteria_text = args.criteria.clone();
    let mut settings = DupinSettings {
        seed: args.seed,
        deviation_yes: args.deviation_yes,
        deviation_no: args.deviation_no,
        leaf_length: args.leaf_length,
        ..DupinSettings::default()
    };
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        let cfg: ConfigFile =
            serde_json::from_str(&text).map_err(|e| usage(format!("config: {e}")))?;
        if let Some(g) = cfg.grid {
            grid_text = g;
        }
        if let Some(c) = cfg.criteria {
            criteria_text = c;
        }
        if let Some(s) = cfg.seed {
            settings.seed = s;
        }
        if let Some(v) = cfg.deviation_yes {
            settings.deviation_yes = v;
        }
        if let Some(v) = cfg.deviation_no {
            settings.deviation_no = v;
        }
        if let Some(v) = cfg.leaf_length {
            settings.leaf_length = v;
        }
    }
    let grid = parse_counts(&grid_text).map_err(usage)?;
    let criteria: Vec<Criterion> = criteria_text
        .iter()
        .map(|t| t.parse::<Criterion>())
        .collect::<Result<_, _>>()
        .map_err(usage)?;

    let started = Instant::now();
    let (generated, params) = match (&args.generator, &args.grid_file) {
        (Some(spec), None) => {
            let (id, params) = parse_generator(spec).map_err(usage)?;
            let generated = build_generator(&id, &params).map_err(|e| usage(e.to_string()))?;
            (generated, params)
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            let oracle = parse_grid_surface(&text).map_err(|e| usage(e.to_string()))?;
            // Validate the lift up front so malformed data fails fast.
            lift_euclidean(&oracle).map_err(|e| (3u8, e.to_string()))?;
            (
                liesphere::zoo::Generated::Surface {
                    oracle,
                    name: format!("grid-file:{}", path.display()),
                },
                BTreeMap::new(),
            )
        }
        _ => {
            return Err(usage(
                "analyze needs exactly one of --gen or --grid-file".into(),
            ))
        }
    };

    let mut run = run_analysis_partial(&generated, &params, &grid, &criteria, &settings)
        .map_err(|e| (3u8, format!("numerical failure: {e}")))?;
    if args.timing {
        run.report.timing_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    std::fs::write(&args.out, run.report.to_json())
        .map_err(|e| (3u8, format!("{}: {e}", args.out.display())))?;
    println!("{}", run.report.summary_line());
    println!("report written to {}", args.out.display());
    if !run.errors.is_empty() {
        return Err((
            3u8,
            format!(
                "numerical failure (partial report written): {}",
                run.errors.join("; ")
            ),
        ));
    }
    Ok(())
}

fn cmd_export_mesh(args: &MeshArgs) -> Result<(), (u8, String)> {
    let usage = |m: String| (2u8, m);
    let (id, params) = parse_generator(&args.generator).map_err(usage)?;
    let generated = build_generator(&id, &params).map_err(|e| usage(e.to_string()))?;
    let resolution = parse_counts(&args.resolution).map_err(usage)?;
    if resolution.len() != 2 || resolution.iter().any(|&r| r < 2) {
        return Err(usage("resolution must be RxC with R, C >= 2".into()));
    }
    let mut slices = Vec::new();
    for s in &args.slice {
        let (axis, value) = s
            .split_once('=')
            .ok_or_else(|| usage(format!("slice '{s}' needs axis=value")))?;
        slices.push((
            axis.trim()
                .parse::<usize>()
                .map_err(|e| usage(format!("{e}")))?,
            value
                .trim()
                .parse::<f64>()
                .map_err(|e| usage(format!("{e}")))?,
        ));
    }
    let mesh = mesh::build_mesh(
        &generated,
        (resolution[0], resolution[1]),
        &args.frame,
        &slices,
        args.flatten,
    )
    .map_err(|e| match e {
        mesh::MeshError::Usage(m) => (2u8, m),
        mesh::MeshError::Numerical(m) => (3u8, m),
        mesh::MeshError::Empty(m) => (4u8, m),
    })?;
    let mut file = std::fs::File::create(&args.out)
        .map_err(|e| (3u8, format!("{}: {e}", args.out.display())))?;
    file.write_all(mesh.obj_text.as_bytes())
        .map_err(|e| (3u8, format!("{}: {e}", args.out.display())))?;
    println!(
        "mesh written to {}: {} vertices, {} faces, {} skipped cells",
        args.out.display(),
        mesh.vertices,
        mesh.faces,
        mesh.skipped
    );
    Ok(())
}

fn cmd_generators() {
    for (id, params) in liesphere::zoo::generator_ids() {
        let rendered: Vec<String> = params
            .iter()
            .map(|(name, default)| format!("{name}={default}"))
            .collect();
        println!("{id}: {}", rendered.join(", "));
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<(), (u8, String)> = match &cli.command {
        Command::Encode(args) => cmd_encode(args).map_err(|m| (2, m)),
        Command::Decode { coords, tol, json } => {
            cmd_decode(coords, *tol, *json).map_err(|m| (2, m))
        }
        Command::Contact(args) => cmd_contact(args).map_err(|m| (2, m)),
        Command::Analyze(args) => cmd_analyze(args),
        Command::ExportMesh(args) => cmd_export_mesh(args),
        Command::Generators => {
            cmd_generators();
            Ok(())
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
