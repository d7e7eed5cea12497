//! Command line front end. Results go to stdout as JSON (or a bare value
//! for scalar queries); failures go to stderr as `{"error": kind, ...}`.
//!
//! Exit codes: 0 all requested certificates pass, 1 a certificate fails or a
//! computation errors, 2 integrity failure on replay, 64 usage error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use thicklam::flatsurf::cover::TorusCover;
use thicklam::flatsurf::expansion::{build_slit_family, flow_factor, unit_grid, ExpansionParams};
use thicklam::flatsurf::{
    find_vertical_saddle, saddle_census, sheared_square_family, verify_expansion, SlitConfig, TranslationSurface,
};
use thicklam::hypgraph::{
    hyperbolicity_estimate, seeded_slopes, seeded_words, Backend, CertificateConfig, FareyGraph, TreeGraph,
};
use thicklam::manifest::{Certificate, SessionManifest};
use thicklam::markov::fan::verify_fan;
use thicklam::markov::graph::sample_classes;
use thicklam::markov::{
    bridge, build_fan, build_graphs, chain_packages, fan_limit_path, matching_report, sample_limit, subshift_encode,
    twin_rays, MarkovConfig, MarkovFixture,
};
use thicklam::modular::Slope;
use thicklam::numeric::{fmt_q, parse_q, q_int, HalfInt, Q};
use thicklam::splitting::{calibrate_depth, divide_fixture, package_for_path, sample_psi, verify_divide};
use thicklam::thickpath::{
    admissible_limit, build_levels, endpoint_sequences, grid_sequence, prefix_modulus, thick_config, ModulusParams,
};
use thicklam::traintrack::torus::{euclid_digits, split_sequence};
use thicklam::{Error, Result};

#[derive(Parser)]
#[command(name = "thicklam", version, about = "Certificates for thick laminations")]
struct Cli {
    /// Seed of the single generator used by every randomized step.
    #[arg(long, global = true, default_value_t = 7)]
    seed: u64,
    /// Write a replayable certificate for this command.
    #[arg(long, global = true)]
    cert: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Distances, geodesics and products in a hyperbolic graph.
    #[command(subcommand)]
    Graph(GraphCmd),
    /// Torus train-track splitting and splitting packages.
    #[command(subcommand)]
    Track(TrackCmd),
    /// Depth and hyperbolicity calibration.
    #[command(subcommand)]
    Calibrate(CalibrateCmd),
    /// Markov graphs, limit samples, fans and the subshift encoding.
    #[command(subcommand)]
    Markov(MarkovCmd),
    /// Refinement levels, admissible limits and the prefix modulus.
    #[command(subcommand)]
    Thickpath(ThickpathCmd),
    /// Flat surfaces: the slit family, flow, census and verifiers.
    #[command(subcommand)]
    Flatsurf(FlatsurfCmd),
    /// Re-verify a certificate file.
    Replay { file: PathBuf },
}

#[derive(Args)]
struct BackendArgs {
    /// `farey`, `tree`, or a backend JSON file.
    #[arg(long, default_value = "farey")]
    backend: String,
    #[arg(long)]
    basepoint: Option<String>,
}

#[derive(Subcommand)]
enum GraphCmd {
    /// Distance between two vertices (an interval on the interval backend)
    Dist {
        #[command(flatten)]
        b: BackendArgs,
        a: String,
        c: String,
    },
    /// Canonical geodesic between two vertices
    Geodesic {
        #[command(flatten)]
        b: BackendArgs,
        a: String,
        c: String,
    },
    /// Gromov product at the basepoint
    Product {
        #[command(flatten)]
        b: BackendArgs,
        a: String,
        c: String,
    },
}

#[derive(Subcommand)]
enum TrackCmd {
    /// Full splits toward a slope, compared with Euclid's digits.
    Split {
        slope: String,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
    },
    /// Splitting package of a sampled path at a depth.
    Package {
        #[arg(long)]
        depth: usize,
        #[arg(required = true, num_args = 2..)]
        slopes: Vec<String>,
    },
}

#[derive(Subcommand)]
enum CalibrateCmd {
    /// Smallest splitting depth for the divide fixture, then the divide check.
    Depth {
        #[arg(long, default_value_t = 6)]
        prefix_len: usize,
        #[arg(long, default_value_t = 7)]
        refine: usize,
        #[arg(long, default_value_t = 12)]
        max_n: usize,
        #[arg(long, default_value_t = 100)]
        psi: usize,
    },
    /// Four-point constant over a seeded vertex sample.
    Hyperbolicity {
        #[command(flatten)]
        b: BackendArgs,
        #[arg(long, default_value_t = 40)]
        sample: usize,
    },
}

#[derive(Args, Clone)]
struct FixtureArgs {
    /// Connection points per face.
    #[arg(long, default_value_t = 20)]
    points: usize,
}

#[derive(Subcommand)]
enum MarkovCmd {
    /// Fixture and graph sizes; `--dot` emits Graphviz instead.
    Build {
        #[command(flatten)]
        fx: FixtureArgs,
        #[arg(long)]
        dot: bool,
    },
    /// Endpoints removed when passing from G' to G''.
    Prune {
        #[command(flatten)]
        fx: FixtureArgs,
    },
    /// Health of G: out-degrees and the matching property.
    Final {
        #[command(flatten)]
        fx: FixtureArgs,
        #[arg(long, default_value_t = 100)]
        matches: usize,
    },
    /// A seeded walk in G with its certified boundary approximants.
    Sample {
        #[command(flatten)]
        fx: FixtureArgs,
        #[arg(long, default_value_t = 40)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        start: usize,
        #[arg(long, default_value = "10")]
        b: String,
    },
    /// Bridge over a twin chain from a start vertex.
    Bridge {
        #[command(flatten)]
        fx: FixtureArgs,
        #[arg(long, default_value_t = 0)]
        start: usize,
    },
    /// Fan over two twin rays and its limit path on a grid.
    Fan {
        #[command(flatten)]
        fx: FixtureArgs,
        #[arg(long, default_value_t = 4)]
        depth: usize,
        #[arg(long, default_value_t = 8)]
        grid: i64,
        #[arg(long, default_value = "20")]
        b: String,
    },
    /// Subshift encoding of G.
    Encode {
        #[command(flatten)]
        fx: FixtureArgs,
    },
}

#[derive(Subcommand)]
enum ThickpathCmd {
    /// Builds and verifies refinement levels.
    Refine {
        #[arg(long, default_value_t = 2)]
        depth: usize,
    },
    /// Admissible limit at a parameter.
    Limit {
        #[arg(long, default_value_t = 2)]
        depth: usize,
        #[arg(long, default_value = "1/3")]
        t: String,
        #[arg(long, default_value = "10")]
        b: String,
    },
    /// Prefix modulus bounds.
    Modulus {
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20")]
        n: Vec<usize>,
        #[arg(long, default_value = "10")]
        b: String,
    },
}

#[derive(Args, Clone)]
struct SlitArgs {
    #[arg(long, default_value_t = 2)]
    sheets: usize,
    #[arg(long, default_value_t = 33)]
    samples: usize,
    #[arg(long, default_value = "8")]
    t_max: String,
    #[arg(long, default_value = "1/4")]
    t_step: String,
}

impl SlitArgs {
    fn config(&self) -> Result<SlitConfig> {
        Ok(SlitConfig {
            sheets: self.sheets,
            s_samples: self.samples,
            t_max: parse_q(&self.t_max)?,
            t_step: parse_q(&self.t_step)?,
            ..SlitConfig::default()
        })
    }
}

#[derive(Subcommand)]
enum FlatsurfCmd {
    /// Polygon model of the slit family at a parameter.
    Build {
        #[command(flatten)]
        slit: SlitArgs,
        #[arg(long, default_value = "0")]
        s: String,
    },
    /// The polygon model flowed by `diag(e^t, e^-t)`.
    Flow {
        #[command(flatten)]
        slit: SlitArgs,
        #[arg(long, default_value = "0")]
        s: String,
        #[arg(long)]
        t: String,
    },
    /// Saddle connections up to a length.
    Census {
        #[command(flatten)]
        slit: SlitArgs,
        #[arg(long, default_value = "0")]
        s: String,
        #[arg(long, default_value = "0")]
        t: String,
        #[arg(long, default_value = "3/2")]
        bound: String,
        /// A surface JSON file instead of the slit family.
        #[arg(long)]
        surface: Option<PathBuf>,
        /// Enumerate lattice lifts instead of developing polygons.
        #[arg(long)]
        lattice: bool,
    },
    /// Expansion harness over the slit family.
    Verify {
        #[command(flatten)]
        slit: SlitArgs,
        /// Also write the per-sample CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-3)]
        systole_min: f64,
    },
    /// Vertical saddle connection along a family.
    Findvertical {
        #[arg(long, default_value = "1/2")]
        plant: String,
        #[arg(long, default_value = "1/2")]
        rate: String,
        #[arg(long, default_value_t = 33)]
        samples: usize,
        #[arg(long, default_value = "2")]
        l: String,
        /// Search the slit family instead of the sheared square.
        #[arg(long)]
        slit: bool,
    },
}

type ManifestEdit = Box<dyn FnOnce(&mut SessionManifest)>;

/// What a command produced: text for stdout and an optional certificate.
struct Outcome {
    text: String,
    cert: Option<(&'static str, bool, Value)>,
    manifest_extra: Option<ManifestEdit>,
}

impl Outcome {
    fn text(text: String) -> Self {
        Outcome { text, cert: None, manifest_extra: None }
    }

    fn json(v: &Value, kind: &'static str, pass: bool) -> Self {
        Outcome { text: pretty(v), cert: Some((kind, pass, v.clone())), manifest_extra: None }
    }

    fn with_manifest(mut self, f: impl FnOnce(&mut SessionManifest) + 'static) -> Self {
        self.manifest_extra = Some(Box::new(f));
        self
    }
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values serialize")
}

fn to_json<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("library types serialize")
}

fn backend(b: &BackendArgs) -> Result<Backend> {
    let mut be = match b.backend.as_str() {
        "farey" => Backend::Farey(FareyGraph::default()),
        "tree" => Backend::Tree(TreeGraph::default()),
        path => Backend::from_json(&fs::read_to_string(path)?)?,
    };
    if let Some(bp) = &b.basepoint {
        be = match be {
            Backend::Farey(_) => Backend::Farey(FareyGraph { basepoint: bp.parse()? }),
            Backend::Tree(_) => Backend::Tree(TreeGraph { basepoint: bp.parse()? }),
            Backend::Interval { surface, .. } => {
                surface.validate_label(bp)?;
                Backend::Interval { surface, basepoint: bp.clone() }
            }
        };
    }
    Ok(be)
}

fn fixture(args: &FixtureArgs, seed: u64) -> Result<(MarkovFixture, thicklam::markov::MarkovGraphs)> {
    let config = MarkovConfig { connection_points: args.points, seed, ..MarkovConfig::default() };
    let fx = MarkovFixture::generate(&config)?;
    let gr = build_graphs(&fx)?;
    Ok((fx, gr))
}

fn work_limit() -> usize {
    std::env::var("THICKLAM_WORK_LIMIT").ok().and_then(|s| s.parse().ok()).unwrap_or(20_000_000)
}

fn run_graph(cmd: &GraphCmd) -> Result<Outcome> {
    match cmd {
        GraphCmd::Dist { b, a, c } => {
            let d = backend(b)?.distance(a, c)?;
            Ok(Outcome::text(match d.hi {
                Some(hi) if hi == d.lo => hi.to_string(),
                Some(hi) => format!("[{}, {hi}]", d.lo),
                None => format!("[{}, inf)", d.lo),
            }))
        }
        GraphCmd::Geodesic { b, a, c } => {
            let be = backend(b)?;
            let path = be.geodesic(a, c)?;
            let v = json!({ "backend": be.to_doc(), "path": path });
            let doc = be.to_doc();
            Ok(Outcome::json(&v, "graph.geodesic", true).with_manifest(move |m| m.backend = Some(doc)))
        }
        GraphCmd::Product { b, a, c } => Ok(Outcome::text(backend(b)?.product(a, c)?.to_string())),
    }
}

fn run_track(cmd: &TrackCmd) -> Result<Outcome> {
    match cmd {
        TrackCmd::Split { slope, max_steps } => {
            let s: Slope = slope.parse()?;
            let seq = split_sequence(&s, *max_steps);
            let digits = seq.digits();
            let euclid: Vec<String> = euclid_digits(s.p(), s.q()).iter().map(|d| d.to_string()).collect();
            let agree = s.is_infinity() || digits.iter().map(u64::to_string).collect::<Vec<_>>() == euclid;
            let v = json!({
                "slope": s.to_string(),
                "model": seq.model,
                "word": seq.word(),
                "digits": digits,
                "euclid": euclid,
                "agree": agree,
                "terminal_face": seq.terminal_face,
            });
            Ok(Outcome::json(&v, "track.split", agree))
        }
        TrackCmd::Package { depth, slopes } => {
            let samples = slopes.iter().map(|s| s.parse()).collect::<Result<Vec<Slope>>>()?;
            let pkg = package_for_path(&samples, *depth)?;
            let report = pkg.verify();
            let ok = report.ok();
            Ok(Outcome::json(&json!({ "package": pkg, "report": report }), "track.package", ok))
        }
    }
}

fn run_calibrate(cmd: &CalibrateCmd, seed: u64) -> Result<Outcome> {
    match cmd {
        CalibrateCmd::Depth { prefix_len, refine, max_n, psi } => {
            let paths = divide_fixture(*prefix_len, *refine);
            let cfg = CertificateConfig::calibrated(HalfInt::from_int(1), 3, Q::new(1.into(), 50.into()));
            let cal = calibrate_depth(&paths, &cfg, *max_n)?;
            let pkgs = paths.iter().map(|p| package_for_path(p, cal.depth)).collect::<Result<Vec<_>>>()?;
            let psis = sample_psi(&pkgs, &cfg, *psi, seed);
            let divide = verify_divide(&pkgs, &psis, &cfg)?;
            let ok = divide.violations.is_empty() && pkgs.iter().all(|p| p.verify().ok());
            let v = json!({ "config": cfg, "calibration": cal, "divide": divide });
            Ok(Outcome::json(&v, "calibrate.depth", ok).with_manifest(move |m| m.certificate = Some(cfg)))
        }
        CalibrateCmd::Hyperbolicity { b, sample } => {
            let est = match backend(b)? {
                Backend::Farey(g) => hyperbolicity_estimate(&g, &seeded_slopes(*sample, 12, seed)),
                Backend::Tree(g) => hyperbolicity_estimate(&g, &seeded_words(*sample, 8, seed)),
                Backend::Interval { .. } => return Err(Error::Indeterminate),
            };
            Ok(Outcome::json(&to_json(&est), "calibrate.hyperbolicity", est.warning.is_none()))
        }
    }
}

fn run_markov(cmd: &MarkovCmd, seed: u64) -> Result<Outcome> {
    let fx_args = match cmd {
        MarkovCmd::Build { fx, .. }
        | MarkovCmd::Prune { fx }
        | MarkovCmd::Final { fx, .. }
        | MarkovCmd::Sample { fx, .. }
        | MarkovCmd::Bridge { fx, .. }
        | MarkovCmd::Fan { fx, .. }
        | MarkovCmd::Encode { fx } => fx.clone(),
    };
    let (fx, gr) = fixture(&fx_args, seed)?;
    let config = fx.config.clone();
    let out = match cmd {
        MarkovCmd::Build { dot: true, .. } => return Ok(Outcome::text(gr.to_dot(&fx, 200))),
        MarkovCmd::Build { .. } => {
            let v = json!({ "stats": gr.stats(), "graph": gr.to_json(&fx, 50) });
            Outcome::json(&v, "markov.build", true)
        }
        MarkovCmd::Prune { .. } => {
            let pruned: Vec<Value> = gr
                .bad_endpoints
                .iter()
                .enumerate()
                .filter(|(_, b)| !b.is_empty())
                .map(|(v, b)| json!({ "vertex": v, "bad_endpoints": b }))
                .collect();
            let limit = (&config.prune_fraction * Q::from_integer(config.connection_points.into())).floor();
            let ok = gr.bad_endpoints.iter().all(|b| Q::from_integer(b.len().into()) <= limit);
            Outcome::json(&json!({ "stats": gr.stats(), "pruned": pruned }), "markov.prune", ok)
        }
        MarkovCmd::Final { matches, .. } => {
            let dead: Vec<usize> = (0..gr.vertices.len()).filter(|&v| gr.g_edges_from(v).next().is_none()).collect();
            let report = matching_report(&fx, &gr, &sample_classes(*matches, 12, seed));
            let ok = dead.is_empty() && report.ok();
            Outcome::json(&json!({ "stats": gr.stats(), "dead_ends": dead, "matching": report }), "markov.final", ok)
        }
        MarkovCmd::Sample { length, start, b, .. } => {
            let cfg = fx.certificate_config(parse_q(b)?);
            let s = sample_limit(&gr, *start, *length, seed, &cfg)?;
            let orbit: Vec<String> = s.approx.vertices.iter().map(|w| w.to_string()).collect();
            let ok = s.certificate.is_l_backtracking;
            let v = json!({ "config": cfg, "orbit": orbit, "sample": s });
            Outcome::json(&v, "markov.sample", ok).with_manifest(move |m| m.certificate = Some(cfg))
        }
        MarkovCmd::Bridge { start, .. } => {
            let [c0, c1] = twin_rays(&fx, &gr, *start, 2)?;
            let chain = vec![c0[1], c1[1], c0[1]];
            let b = bridge(&fx, &gr, &chain, c0[2], c1[2])?;
            let chained = chain_packages(&gr, &b);
            let ok = chained.ok();
            Outcome::json(&json!({ "bridge": b, "packages": chained }), "markov.bridge", ok)
        }
        MarkovCmd::Fan { depth, grid, b, .. } => {
            let [c0, c1] = twin_rays(&fx, &gr, 0, *depth)?;
            let fan = build_fan(&fx, &gr, &c0, &c1)?;
            let report = verify_fan(&fx, &gr, &fan);
            let ts: Vec<Q> = (0..=*grid).map(|k| Q::new(k.into(), (*grid).into())).collect();
            let limit = fan_limit_path(&gr, &fan, &ts, &fx.certificate_config(parse_q(b)?))?;
            let ok = report.ok();
            let rows: Vec<usize> = fan.levels.iter().map(|l| l.row.len()).collect();
            Outcome::json(&json!({ "rows": rows, "report": report, "limit": limit }), "markov.fan", ok)
        }
        MarkovCmd::Encode { .. } => {
            let enc = subshift_encode(&fx, &gr)?;
            let ok = enc.collisions.is_empty() && enc.psi_backtracking_ok;
            Outcome::json(&to_json(&enc), "markov.encode", ok)
        }
    };
    Ok(out.with_manifest(move |m| m.markov = Some(config)))
}

fn run_thickpath(cmd: &ThickpathCmd, seed: u64) -> Result<Outcome> {
    let config = thick_config(seed);
    let fx = MarkovFixture::generate(&config)?;
    let out = match cmd {
        ThickpathCmd::Refine { depth } => {
            let ends = endpoint_sequences(&fx, *depth)?;
            let (levels, reports) = build_levels(&fx, &ends, *depth)?;
            let ok = reports.iter().all(|r| r.ok());
            Outcome::json(&json!({ "levels": levels, "reports": reports }), "thickpath.refine", ok)
        }
        ThickpathCmd::Limit { depth, t, b } => {
            let ends = endpoint_sequences(&fx, *depth)?;
            let (levels, _) = build_levels(&fx, &ends, *depth)?;
            let seq = grid_sequence(&levels, &parse_q(t)?)?;
            let lim = admissible_limit(&levels, &seq, &fx.certificate_config(parse_q(b)?))?;
            Outcome::json(&to_json(&lim), "thickpath.limit", lim.certificate.is_l_backtracking)
        }
        ThickpathCmd::Modulus { n, b } => {
            let depth = 2;
            let ends = endpoint_sequences(&fx, depth)?;
            let params = ModulusParams::from_fixture(&fx, &ends);
            let cfg = fx.certificate_config(parse_q(b)?);
            let bounds: Vec<_> = n.iter().map(|&k| prefix_modulus(k, &params, &cfg)).collect();
            let decreasing = bounds.windows(2).all(|w| w[1].epsilon <= w[0].epsilon);
            Outcome::json(&json!({ "params": params, "bounds": bounds, "decreasing": decreasing }), "thickpath.modulus", decreasing)
        }
    };
    Ok(out.with_manifest(move |m| m.markov = Some(config)))
}

fn slit_surface(slit: &SlitArgs, s: &str) -> Result<(TorusCover, TranslationSurface)> {
    let path = build_slit_family(&slit.config()?)?;
    let x = path.family.at(&parse_q(s)?)?;
    let surf = x.to_translation_surface()?;
    Ok((x, surf))
}

fn surface_json(surf: &TranslationSurface) -> Value {
    json!({
        "polygons": surf.polygons,
        "gluings": surf.gluings,
        "singularities": surf.singularities,
        "area": fmt_q(&surf.area()),
        "stratum": surf.stratum(),
    })
}

fn run_flatsurf(cmd: &FlatsurfCmd) -> Result<Outcome> {
    match cmd {
        FlatsurfCmd::Build { slit, s } => {
            let (_, surf) = slit_surface(slit, s)?;
            Ok(Outcome::json(&surface_json(&surf), "flatsurf.build", true))
        }
        FlatsurfCmd::Flow { slit, s, t } => {
            let (_, surf) = slit_surface(slit, s)?;
            let a = flow_factor(&parse_q(t)?);
            let mut v = surface_json(&surf.flow(&a));
            v["flow_factor"] = json!(fmt_q(&a));
            Ok(Outcome::json(&v, "flatsurf.flow", true))
        }
        FlatsurfCmd::Census { slit, s, t, bound, surface, lattice } => {
            let bound = parse_q(bound)?;
            let a = flow_factor(&parse_q(t)?);
            let hols: Vec<Value> = if let Some(file) = surface {
                let raw: TranslationSurface = serde_json::from_str(&fs::read_to_string(file)?)?;
                let surf = TranslationSurface::new(raw.polygons, raw.gluings)?.flow(&a);
                saddle_census(&surf, &bound, work_limit())?.iter().map(to_json).collect()
            } else if *lattice {
                let (x, _) = slit_surface(slit, s)?;
                x.flow(&a).census(&bound)?.iter().map(to_json).collect()
            } else {
                let (_, surf) = slit_surface(slit, s)?;
                saddle_census(&surf.flow(&a), &bound, work_limit())?.iter().map(to_json).collect()
            };
            let v = json!({ "bound": fmt_q(&bound), "count": hols.len(), "connections": hols });
            Ok(Outcome::json(&v, "flatsurf.census", true))
        }
        FlatsurfCmd::Verify { slit, csv, systole_min } => {
            let path = build_slit_family(&slit.config()?)?;
            let params = ExpansionParams { systole_min: *systole_min, ..ExpansionParams::default() };
            let report = verify_expansion(&path, &params)?;
            if let Some(file) = csv {
                fs::write(file, report.csv())?;
            }
            Ok(Outcome::json(&to_json(&report), "flatsurf.verify", report.pass))
        }
        FlatsurfCmd::Findvertical { plant, rate, samples, l, slit } => {
            let l = parse_q(l)?;
            let (family, grid) = if *slit {
                let path = build_slit_family(&SlitConfig { s_samples: *samples, ..SlitConfig::default() })?;
                (path.family, path.s_grid)
            } else {
                (sheared_square_family(&parse_q(plant)?, &parse_q(rate)?), unit_grid(*samples))
            };
            let found = find_vertical_saddle(&family, &grid, &l)?;
            let ok = found.connection.hol.x == q_int(0) && found.connection.hol.y >= l.recip() && found.connection.hol.y <= l;
            let mut v = to_json(&found);
            v["family"] = to_json(&family);
            Ok(Outcome::json(&v, "flatsurf.findvertical", ok))
        }
    }
}

fn replay(file: &PathBuf) -> Result<(String, bool)> {
    let text = fs::read_to_string(file)?;
    let cert = Certificate::from_json(&text)?;
    let out = cert.replay()?;
    Ok((pretty(&to_json(&out)), out.pass))
}

fn command_line() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn error_exit(e: &Error) -> ExitCode {
    let v = json!({ "error": e.kind(), "message": e.to_string() });
    eprintln!("{v}");
    match e {
        Error::Integrity(_) => ExitCode::from(2),
        _ => ExitCode::from(1),
    }
}

/// Prints to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = writeln!(out, "{text}") {
        if e.kind() != std::io::ErrorKind::BrokenPipe {
            eprintln!("{}", json!({ "error": "io", "message": e.to_string() }));
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.to_string() }));
            return ExitCode::from(64);
        }
    };
    if let Command::Replay { file } = &cli.command {
        return match replay(file) {
            Ok((text, pass)) => {
                emit(&text);
                if pass {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => error_exit(&e),
        };
    }
    let result = match &cli.command {
        Command::Graph(c) => run_graph(c),
        Command::Track(c) => run_track(c),
        Command::Calibrate(c) => run_calibrate(c, cli.seed),
        Command::Markov(c) => run_markov(c, cli.seed),
        Command::Thickpath(c) => run_thickpath(c, cli.seed),
        Command::Flatsurf(c) => run_flatsurf(c),
        Command::Replay { .. } => unreachable!("handled above"),
    };
    let outcome = match result {
        Ok(o) => o,
        Err(e) => return error_exit(&e),
    };
    emit(&outcome.text);
    let pass = outcome.cert.as_ref().is_none_or(|c| c.1);
    if let Some(path) = &cli.cert {
        let Some((kind, ok, payload)) = outcome.cert else {
            return error_exit(&Error::Invalid("this command issues no certificate".into()));
        };
        let mut manifest = SessionManifest::new(cli.seed, command_line());
        if let Some(f) = outcome.manifest_extra {
            f(&mut manifest);
        }
        let cert = Certificate::issue(manifest, kind, ok, payload);
        if let Err(e) = fs::write(path, cert.to_json()) {
            return error_exit(&e.into());
        }
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
