//! Subcommand runners. Each validates its inputs, delegates to the library,
//! writes the requested outputs and returns the material recorded in the
//! run manifest.

use std::fs;
use std::path::{Path, PathBuf};

use blaschke_div_core::blaschke::{degenerate_limit, psi_forward, psi_inverse};
use blaschke_div_core::dimension::{julia_pressure_dimension, pressure_dimension, RepellingSystem};
use blaschke_div_core::divisor::Divisor;
use blaschke_div_core::io::{csv_cell, raster_to_gray, write_csv, write_json, write_pgm};
use blaschke_div_core::model::{internal_ray, stretch_divisor, track_prerepelling};
use blaschke_div_core::parabolic::{
    horn_map_samples, return_multiplier_check, ChartKind, FatouChart, LocalMap, PerturbedParabolic,
};
use blaschke_div_core::polydyn::{
    basin_raster, external_ray, julia_raster, motion_hyperbolic_set, HyperbolicSetMotion,
};
use blaschke_div_core::scheme::{MappingScheme, SchemeDivisor};
use blaschke_div_core::C64;
use serde_json::json;

use crate::error::CliError;
use crate::parse::{
    parse_angle, parse_complex, parse_complex_list, parse_interval, parse_polynomial, parse_window,
};
use crate::spec::SystemSpec;
use crate::{
    DegenerateArgs, DimArgs, FatouArgs, MotionArgs, PsiArgs, RasterArgs, RayArgs, SchemeInfoArgs,
    StretchArgs, TrackArgs,
};

/// Everything the manifest needs to record about a finished run.
pub struct Outcome {
    pub subcommand: &'static str,
    pub inputs: Vec<String>,
    pub parameters: serde_json::Value,
    pub outputs: Vec<String>,
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn read_divisor(path: &Path) -> Result<Divisor, CliError> {
    Divisor::from_json(&read_text(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_scheme(path: &Path) -> Result<MappingScheme, CliError> {
    MappingScheme::from_json(&read_text(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn read_scheme_divisor(path: &Path) -> Result<SchemeDivisor, CliError> {
    SchemeDivisor::from_json(&read_text(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Numeric(format!("cannot write {}: {e}", path.display())))
}

fn sidecar(path: &Path) -> PathBuf {
    path.with_extension("audit.json")
}

fn shown(path: &Path) -> String {
    path.display().to_string()
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

pub fn run_psi(args: &PsiArgs) -> Result<Outcome, CliError> {
    let input = read_divisor(&args.divisor)?;
    let (result, round_trip) = if args.inverse {
        let preimage = psi_inverse(&input)?;
        let forward = psi_forward(&preimage)?;
        (preimage, forward.matching_distance(&input)?)
    } else {
        let image = psi_forward(&input)?;
        let preimage = psi_inverse(&image)?;
        (image, preimage.matching_distance(&input)?)
    };
    if !(round_trip <= args.tol) {
        return Err(CliError::Numeric(format!(
            "round-trip residual {round_trip:e} exceeds tolerance {:e}",
            args.tol
        )));
    }
    write_text(&args.out, &format!("{}\n", result.to_json()))?;
    let audit = sidecar(&args.out);
    write_json(
        &audit,
        &json!({
            "inverse": args.inverse,
            "round_trip_residual": round_trip,
            "tolerance": args.tol,
            "degree": result.degree(),
        }),
    )?;
    Ok(Outcome {
        subcommand: "psi",
        inputs: vec![shown(&args.divisor)],
        parameters: json!({"inverse": args.inverse, "tol": args.tol}),
        outputs: vec![shown(&args.out), shown(&audit)],
    })
}

fn degeneration_schedule(steps: usize) -> Vec<u32> {
    if steps <= 1 {
        return vec![10_000];
    }
    let mut schedule: Vec<u32> = (0..steps)
        .map(|k| 10f64.powf(1.0 + 3.0 * k as f64 / (steps - 1) as f64).round() as u32)
        .collect();
    schedule.dedup();
    schedule
}

fn compact_samples(target: &Divisor, margin: f64) -> Result<Vec<C64>, CliError> {
    let split = target.split_disk(1e-9)?;
    let escaped = split.boundary.support();
    let mut out = Vec::new();
    let n = 25;
    for a in 0..n {
        for b in 0..n {
            let z = C64::new(
                -2.0 + 4.0 * a as f64 / (n - 1) as f64,
                -2.0 + 4.0 * b as f64 / (n - 1) as f64,
            );
            if z.norm() <= 2.0 && escaped.iter().all(|&q| (z - q).norm() >= margin) {
                out.push(z);
            }
        }
    }
    if out.is_empty() {
        return Err(CliError::Validation(
            "compact sample set is empty; lower --compact-margin".into(),
        ));
    }
    Ok(out)
}

pub fn run_degenerate(args: &DegenerateArgs) -> Result<Outcome, CliError> {
    let mut inputs = Vec::new();
    let target = match (&args.target, &args.scheme, &args.divisor, &args.vertex) {
        (Some(path), None, None, None) => {
            inputs.push(shown(path));
            read_divisor(path)?
        }
        (None, Some(scheme_path), Some(divisor_path), Some(vertex)) => {
            let scheme = read_scheme(scheme_path)?;
            let sd = read_scheme_divisor(divisor_path)?;
            if scheme.ids().ne(sd.scheme().ids()) {
                return Err(CliError::Validation(
                    "scheme file and divisor file disagree on the vertex set".into(),
                ));
            }
            let u = sd
                .scheme()
                .index_of(vertex)
                .ok_or_else(|| CliError::Validation(format!("unknown vertex id {vertex:?}")))?;
            inputs.push(shown(scheme_path));
            inputs.push(shown(divisor_path));
            sd.factor_divisor(u)
        }
        _ => {
            return Err(CliError::Validation(
                "pass either --target, or --scheme with --divisor and --vertex".into(),
            ))
        }
    };
    let schedule = degeneration_schedule(args.steps);
    let samples = compact_samples(&target, args.compact_margin)?;
    let (limit, report) = degenerate_limit(&target, &schedule, &samples, args.final_tol)?;
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| vec![row.n.to_string(), csv_cell(row.sup_deviation)])
        .collect();
    write_csv(&args.out, &["n", "sup_deviation"], &rows)?;
    let audit = sidecar(&args.out);
    let escaped: serde_json::Value =
        serde_json::from_str(&limit.escaped.to_json()).unwrap_or_default();
    write_json(
        &audit,
        &json!({
            "rows": report.rows,
            "converged": report.converged,
            "trending_down": report.trending_down,
            "escaped": escaped,
            "compact_samples": samples.len(),
            "final_tol": args.final_tol,
        }),
    )?;
    Ok(Outcome {
        subcommand: "degenerate",
        inputs,
        parameters: json!({
            "steps": args.steps,
            "schedule": schedule,
            "final_tol": args.final_tol,
            "compact_margin": args.compact_margin,
            "vertex": args.vertex,
        }),
        outputs: vec![shown(&args.out), shown(&audit)],
    })
}

pub fn run_dim(args: &DimArgs) -> Result<Outcome, CliError> {
    match (&args.system, &args.julia) {
        (Some(path), None) => {
            let spec: SystemSpec = serde_json::from_str(&read_text(path)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let depth = args.depth.or(spec.depth).unwrap_or(12);
            let bracket = match (&args.bracket, spec.bracket) {
                (Some(text), _) => parse_interval(text).map_err(CliError::Validation)?,
                (None, Some([lo, hi])) => (lo, hi),
                (None, None) => (0.05, 1.95),
            };
            let region = spec.region.build();
            let branches = spec.branches.iter().map(|b| b.build()).collect();
            let system = RepellingSystem::new(region, branches)?;
            let dimension = pressure_dimension(&system, depth, bracket)?;
            let cert = system.certification();
            write_json(
                &args.out,
                &json!({
                    "dimension": dimension,
                    "depth": depth,
                    "bracket": [bracket.0, bracket.1],
                    "certification": {
                        "containment_margin": cert.containment_margin,
                        "min_separation": cert.min_separation,
                        "expansion": cert.expansion,
                        "boundary_residual": cert.boundary_residual,
                    },
                }),
            )?;
            Ok(Outcome {
                subcommand: "dim",
                inputs: vec![shown(path)],
                parameters: json!({"depth": depth, "bracket": [bracket.0, bracket.1]}),
                outputs: vec![shown(&args.out)],
            })
        }
        (None, Some(text)) => {
            let f = parse_polynomial(text).map_err(CliError::Validation)?;
            if f.degree() != 2 {
                return Err(CliError::Validation(
                    "--julia expects a quadratic of the form z^2+c".into(),
                ));
            }
            let c = f.eval(C64::new(0.0, 0.0));
            let depth = args.depth.unwrap_or(10);
            let dimension = julia_pressure_dimension(c, depth)?;
            write_json(
                &args.out,
                &json!({"dimension": dimension, "c": pair(c), "depth": depth}),
            )?;
            Ok(Outcome {
                subcommand: "dim",
                inputs: Vec::new(),
                parameters: json!({"julia": text, "depth": depth}),
                outputs: vec![shown(&args.out)],
            })
        }
        _ => Err(CliError::Validation(
            "pass exactly one of --system or --julia".into(),
        )),
    }
}

pub fn run_ray(args: &RayArgs) -> Result<Outcome, CliError> {
    match (&args.poly, &args.divisor) {
        (Some(poly_text), None) => {
            let angle_text = args.angle.as_deref().ok_or_else(|| {
                CliError::Validation("--angle is required for external rays".into())
            })?;
            let f = parse_polynomial(poly_text).map_err(CliError::Validation)?;
            let theta = parse_angle(angle_text).map_err(CliError::Validation)?;
            let ray = external_ray(&f, theta, args.g_min)?;
            let rows: Vec<Vec<String>> = ray
                .samples
                .iter()
                .map(|&(g, z)| vec![csv_cell(g), csv_cell(z.re), csv_cell(z.im)])
                .collect();
            write_csv(&args.out, &["potential", "re", "im"], &rows)?;
            let audit = sidecar(&args.out);
            write_json(
                &audit,
                &json!({
                    "angle": angle_text,
                    "g_min": args.g_min,
                    "samples": ray.samples.len(),
                    "landing": ray.landing.map(pair),
                }),
            )?;
            Ok(Outcome {
                subcommand: "ray",
                inputs: Vec::new(),
                parameters: json!({"poly": poly_text, "angle": angle_text, "g_min": args.g_min}),
                outputs: vec![shown(&args.out), shown(&audit)],
            })
        }
        (None, Some(path)) => {
            let vertex = args.vertex.as_deref().ok_or_else(|| {
                CliError::Validation("--vertex is required for internal rays".into())
            })?;
            let point_text = args.boundary_point.as_deref().ok_or_else(|| {
                CliError::Validation("--boundary-point is required for internal rays".into())
            })?;
            let sd = read_scheme_divisor(path)?;
            let u = sd
                .scheme()
                .index_of(vertex)
                .ok_or_else(|| CliError::Validation(format!("unknown vertex id {vertex:?}")))?;
            let q = parse_complex(point_text).map_err(CliError::Validation)?;
            let tag = sd.classify_preperiodic(u, q, args.horizon)?;
            let ray = internal_ray(&sd, u, q, tag, args.t_lo, args.t_hi)?;
            let rows: Vec<Vec<String>> = ray
                .samples
                .iter()
                .map(|&(t, z)| vec![csv_cell(t), csv_cell(z.re), csv_cell(z.im)])
                .collect();
            write_csv(&args.out, &["potential", "re", "im"], &rows)?;
            let audit = sidecar(&args.out);
            write_json(
                &audit,
                &json!({
                    "vertex": vertex,
                    "boundary_point": pair(q),
                    "landing": pair(ray.landing),
                    "inner_endpoint": pair(ray.inner_endpoint),
                    "potential_residual": ray.potential_residual,
                    "landing_gap": ray.landing_gap,
                }),
            )?;
            Ok(Outcome {
                subcommand: "ray",
                inputs: vec![shown(path)],
                parameters: json!({
                    "vertex": vertex,
                    "boundary_point": point_text,
                    "t_lo": args.t_lo,
                    "t_hi": args.t_hi,
                    "horizon": args.horizon,
                }),
                outputs: vec![shown(&args.out), shown(&audit)],
            })
        }
        _ => Err(CliError::Validation(
            "pass exactly one of --poly (external ray) or --divisor (internal ray)".into(),
        )),
    }
}

pub fn run_fatou(args: &FatouArgs) -> Result<Outcome, CliError> {
    let map = match (&args.map, &args.coeffs) {
        (Some(name), None) => {
            if name == "moebius" {
                LocalMap::MoebiusParabolic
            } else {
                return Err(CliError::Validation(format!(
                    "unknown map {name:?}; use --map moebius or --coeffs"
                )));
            }
        }
        (None, Some(text)) => LocalMap::Series(parse_complex_list(text).map_err(CliError::Validation)?),
        _ => {
            return Err(CliError::Validation(
                "pass exactly one of --map or --coeffs".into(),
            ))
        }
    };
    let perturbed = match &args.alpha {
        Some(text) => {
            let alpha = parse_complex(text).map_err(CliError::Validation)?;
            PerturbedParabolic::new(map, args.p, args.q, alpha)?
        }
        None => PerturbedParabolic::parabolic(map, args.p, args.q)?,
    };
    let unperturbed = perturbed.alpha.norm() == 0.0;
    let mut report = serde_json::Map::new();
    if unperturbed {
        let chart = FatouChart::attracting(&perturbed, args.petal, args.samples)?;
        let kind = match chart.kind {
            ChartKind::Attracting => "attracting",
            ChartKind::Repelling => "repelling",
        };
        report.insert(
            "chart".into(),
            json!({
                "kind": kind,
                "petal": chart.petal,
                "residual": chart.residual,
                "samples": chart.samples.iter().map(|&(z, w)| json!([z.re, z.im, w.re, w.im])).collect::<Vec<_>>(),
            }),
        );
        if args.horn {
            let band = match &args.band {
                Some(text) => parse_interval(text).map_err(CliError::Validation)?,
                None => (8.0, 12.0),
            };
            let horn = horn_map_samples(&perturbed, band, args.samples)?;
            report.insert(
                "horn".into(),
                json!({
                    "band": [band.0, band.1],
                    "normalization": pair(horn.normalization),
                    "periodicity_residual": horn.periodicity_residual,
                    "drift": horn.drift,
                    "samples": horn.samples.iter().map(|&(w, v)| json!([w.re, w.im, v.re, v.im])).collect::<Vec<_>>(),
                }),
            );
        }
    } else if args.horn {
        return Err(CliError::Validation(
            "horn maps require the unperturbed parabolic; omit --alpha".into(),
        ));
    }
    if args.return_check {
        if unperturbed {
            return Err(CliError::Validation(
                "--return-check requires a nonzero --alpha".into(),
            ));
        }
        let check = return_multiplier_check(&perturbed)?;
        report.insert(
            "return_multiplier".into(),
            json!({
                "alpha": pair(check.alpha),
                "sigma": pair(check.sigma),
                "steps": check.steps,
                "measured_log": pair(check.measured_log),
                "expected_log": pair(check.expected_log),
                "modulus_ratio": check.modulus_ratio,
                "arg_offset_turns": check.arg_offset_turns,
                "passed": check.passed,
            }),
        );
    }
    if report.is_empty() {
        return Err(CliError::Validation(
            "nothing to compute: pass --alpha with --return-check, or omit --alpha for charts".into(),
        ));
    }
    write_json(&args.out, &serde_json::Value::Object(report))?;
    Ok(Outcome {
        subcommand: "fatou",
        inputs: Vec::new(),
        parameters: json!({
            "map": args.map,
            "coeffs": args.coeffs,
            "p": args.p,
            "q": args.q,
            "alpha": args.alpha,
            "petal": args.petal,
            "samples": args.samples,
            "horn": args.horn,
            "band": args.band,
            "return_check": args.return_check,
        }),
        outputs: vec![shown(&args.out)],
    })
}

pub fn run_raster(args: &RasterArgs) -> Result<Outcome, CliError> {
    let f = parse_polynomial(&args.poly).map_err(CliError::Validation)?;
    let window = parse_window(&args.window).map_err(CliError::Validation)?;
    let raster = match &args.attractor {
        Some(text) => {
            let attractor = parse_complex(text).map_err(CliError::Validation)?;
            basin_raster(
                &f,
                attractor,
                args.capture_radius,
                window,
                args.width,
                args.height,
                args.budget,
            )?
        }
        None => julia_raster(&f, window, args.width, args.height, args.budget)?,
    };
    let gray = raster_to_gray(&raster);
    write_pgm(&args.out, raster.width, raster.height, &gray)?;
    Ok(Outcome {
        subcommand: "raster",
        inputs: Vec::new(),
        parameters: json!({
            "poly": args.poly,
            "window": window,
            "width": args.width,
            "height": args.height,
            "budget": args.budget,
            "attractor": args.attractor,
            "capture_radius": args.capture_radius,
        }),
        outputs: vec![shown(&args.out)],
    })
}

pub fn run_scheme_info(args: &SchemeInfoArgs) -> Result<Outcome, CliError> {
    let scheme = read_scheme(&args.scheme)?;
    let report = scheme.validate()?;
    write_json(
        &args.out,
        &json!({
            "vertices": scheme.len(),
            "periodic": report.periodic,
            "aperiodic": report.aperiodic,
            "cycles": report.cycles,
            "depths": report.depths,
            "periods": report.periods,
            "markings": scheme.count_markings(),
        }),
    )?;
    Ok(Outcome {
        subcommand: "scheme-info",
        inputs: vec![shown(&args.scheme)],
        parameters: json!({}),
        outputs: vec![shown(&args.out)],
    })
}

pub fn run_stretch(args: &StretchArgs) -> Result<Outcome, CliError> {
    let sd = read_scheme_divisor(&args.divisor)?;
    let outcome = stretch_divisor(&sd, args.delta)?;
    write_text(&args.out, &format!("{}\n", outcome.divisor.to_json()))?;
    let audit = sidecar(&args.out);
    let records: Vec<serde_json::Value> = outcome
        .records
        .iter()
        .map(|r| {
            json!({
                "vertex": r.vertex,
                "boundary_point": pair(r.boundary_point),
                "interior_zero": pair(r.interior_zero),
                "critical_point": pair(r.critical_point),
                "critical_value": pair(r.critical_value),
                "ray_distance": r.ray_distance,
            })
        })
        .collect();
    write_json(&audit, &json!({"delta": args.delta, "records": records}))?;
    Ok(Outcome {
        subcommand: "stretch",
        inputs: vec![shown(&args.divisor)],
        parameters: json!({"delta": args.delta}),
        outputs: vec![shown(&args.out), shown(&audit)],
    })
}

pub fn run_track(args: &TrackArgs) -> Result<Outcome, CliError> {
    let base = read_scheme_divisor(&args.base)?;
    let perturbed = read_scheme_divisor(&args.perturbed)?;
    let u = base
        .scheme()
        .index_of(&args.vertex)
        .ok_or_else(|| CliError::Validation(format!("unknown vertex id {:?}", args.vertex)))?;
    let b = parse_complex(&args.point).map_err(CliError::Validation)?;
    let tracked = track_prerepelling(&base, u, b, args.l, args.n, &perturbed)?;
    write_json(&args.out, &json!({"tracked": pair(tracked)}))?;
    Ok(Outcome {
        subcommand: "track",
        inputs: vec![shown(&args.base), shown(&args.perturbed)],
        parameters: json!({
            "vertex": args.vertex,
            "point": args.point,
            "l": args.l,
            "n": args.n,
        }),
        outputs: vec![shown(&args.out)],
    })
}

pub fn run_motion(args: &MotionArgs) -> Result<Outcome, CliError> {
    let base = parse_polynomial(&args.base).map_err(CliError::Validation)?;
    let target = parse_polynomial(&args.target).map_err(CliError::Validation)?;
    let points = parse_complex_list(&args.points).map_err(CliError::Validation)?;
    let motion = HyperbolicSetMotion::new(base, points, args.m, args.radius)?;
    let moved = motion_hyperbolic_set(&motion, &target)?;
    write_json(
        &args.out,
        &json!({"points": moved.iter().map(|&z| pair(z)).collect::<Vec<_>>()}),
    )?;
    Ok(Outcome {
        subcommand: "motion",
        inputs: Vec::new(),
        parameters: json!({
            "base": args.base,
            "target": args.target,
            "points": args.points,
            "m": args.m,
            "radius": args.radius,
        }),
        outputs: vec![shown(&args.out)],
    })
}
