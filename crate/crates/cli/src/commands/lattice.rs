//! Subcommands on lattice fields: minimize, verify, report.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use ymvac::invariance::{all_pass, datum_digest, parse_battery, run_suite, InvarianceReport};
use ymvac::lattice::datum::{localized_bump, random_smooth, single_mode, u1_vector_field};
use ymvac::lattice::{load_field, load_field_any, save_field, AnyField, BoundaryData, GaugeField, Geometry};
use ymvac::lie::{Algebra, GroupKind, LieGroup, Su2, U1};
use ymvac::maxwell::abelian_mode_oracle;
use ymvac::minimizer::{decay_diagnostic, evaluate, gauss_residual, hje_residual, minimize, MinimizeReport};
use ymvac::Exec;

use crate::config::{DatumSpec, RunConfig};
use crate::output::{emit_json, CliError, Exit};
use crate::{Globals, MinimizeArgs, ReportArgs, VerifyArgs};

fn group_override(cfg: &RunConfig, flag: Option<&str>) -> Result<GroupKind, CliError> {
    match flag {
        Some(s) => s.parse().map_err(|e: ymvac::Error| CliError::usage(e.to_string())),
        None => Ok(cfg.group),
    }
}

fn build_datum<G: LieGroup>(cfg: &RunConfig) -> Result<BoundaryData<G>, CliError> {
    let sg = cfg.geometry.slice_geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let bd = match &cfg.datum {
        DatumSpec::Flat => BoundaryData::identity(sg),
        DatumSpec::SingleMode { mode, amplitude, polarization } => single_mode(sg, *amplitude, *mode, *polarization)?,
        DatumSpec::LocalizedBump { center, width, amplitude } => localized_bump(sg, *center, *width, *amplitude, &mut rng)?,
        DatumSpec::RandomSmooth { max_log } => random_smooth(sg, *max_log, &mut rng)?,
        DatumSpec::File(path) => {
            let f: GaugeField<G> = load_field(path)?;
            f.slice(0)
        }
    };
    bd.check_compatible(&cfg.geometry)?;
    Ok(bd)
}

fn datum_json(spec: &DatumSpec) -> Value {
    match spec {
        DatumSpec::Flat => json!({ "kind": "flat" }),
        DatumSpec::SingleMode { mode, amplitude, polarization } => {
            json!({ "kind": "single-mode", "mode": mode, "amplitude": amplitude, "polarization": polarization })
        }
        DatumSpec::LocalizedBump { center, width, amplitude } => {
            json!({ "kind": "localized-bump", "center": center, "width": width, "amplitude": amplitude })
        }
        DatumSpec::RandomSmooth { max_log } => json!({ "kind": "random-smooth", "max_log": max_log }),
        DatumSpec::File(p) => json!({ "kind": "file", "path": p.display().to_string() }),
    }
}

/// Continuum oracle of an abelian datum on a cubic slice, with the finite
/// time extent of the lattice.
fn u1_oracle(bd: &BoundaryData<U1>, geom: &Geometry) -> Option<f64> {
    let v = u1_vector_field(bd).ok()?;
    Some(abelian_mode_oracle(&v, Some((geom.n_t - 1) as f64 * geom.a), Exec::Parallel))
}

fn diagnostics<G: LieGroup>(r: &MinimizeReport<G>) -> Value {
    let hje = match hje_residual(r) {
        Ok(h) => json!(h),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let gauss = gauss_residual(r).iter().map(|v| v.norm()).fold(0.0, f64::max);
    json!({ "hje": hje, "gauss_max": gauss })
}

fn minimize_group<G: LieGroup>(
    g: &Globals,
    cfg: &RunConfig,
    args: &MinimizeArgs,
    oracle: impl Fn(&BoundaryData<G>, &Geometry) -> Option<f64>,
) -> Result<Exit, CliError> {
    let bd = build_datum::<G>(cfg)?;
    let r = minimize(&bd, &cfg.geometry, &cfg.minimizer, None)?;
    let mut out = r.to_json();
    out["command"] = json!("minimize");
    out["datum"] = datum_json(&cfg.datum);
    out["datum"]["crc32"] = json!(datum_digest(&bd));
    out["diagnostics"] = diagnostics(&r);
    out["boundary_exact"] = json!(r.final_field.slice(0).links() == bd.links());
    if let Some(o) = oracle(&bd, &cfg.geometry) {
        out["oracle"] = json!({ "S": o, "ratio": r.s / o.max(f64::MIN_POSITIVE) });
    }
    let field_path = args.field_out.as_ref().or(cfg.output.field.as_ref());
    if let Some(p) = field_path {
        if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
        }
        save_field(&r.final_field, p)?;
    }
    let report_path = args.report.as_ref().or(cfg.output.report.as_ref());
    emit_json(out, report_path.map(|p| p.as_path()), g.timestamp)?;
    Ok(if r.converged { Exit::Ok } else { Exit::NonConvergence })
}

pub fn minimize_cmd(g: &Globals, args: MinimizeArgs) -> Result<Exit, CliError> {
    let mut cfg = g.config.clone();
    cfg.group = group_override(&cfg, args.group.as_deref())?;
    if let Some(n) = args.max_iters {
        cfg.minimizer.max_iters = n;
    }
    if let Some(t) = args.grad_tol {
        cfg.minimizer.grad_tol = t;
    }
    cfg.minimizer.validate()?;
    match cfg.group {
        GroupKind::U1 => minimize_group::<U1>(g, &cfg, &args, u1_oracle),
        GroupKind::Su2 => minimize_group::<Su2>(g, &cfg, &args, |_, _| None),
    }
}

fn suite_json(cfg: &RunConfig, reports: &[InvarianceReport], source: Value) -> Value {
    json!({
        "command": "verify",
        "battery": cfg.suite.battery,
        "source": source,
        "reports": reports,
        "all_pass": all_pass(reports),
    })
}

fn verify_field<G: LieGroup>(cfg: &RunConfig, field: &GaugeField<G>) -> Result<Vec<InvarianceReport>, CliError> {
    let bd = field.slice(0);
    let base = evaluate(field, &cfg.minimizer)?;
    Ok(run_suite(&bd, field.geometry(), &cfg.minimizer, &cfg.suite, Some(base)))
}

fn verify_datum<G: LieGroup>(cfg: &RunConfig) -> Result<Vec<InvarianceReport>, CliError> {
    let bd = build_datum::<G>(cfg)?;
    Ok(run_suite(&bd, &cfg.geometry, &cfg.minimizer, &cfg.suite, None))
}

/// Stored fields are checked as they stand. A file that cannot be decoded
/// (bad checksum, truncation) is a failed check, not a usage error.
pub fn verify(g: &Globals, args: VerifyArgs) -> Result<Exit, CliError> {
    let mut cfg = g.config.clone();
    if let Some(b) = &args.battery {
        cfg.suite.battery = parse_battery(b).map_err(|e| CliError::usage(e.to_string()))?;
    }
    cfg.group = group_override(&cfg, args.group.as_deref())?;
    let report_path = args.report.as_ref().or(cfg.output.report.as_ref()).cloned();
    let (reports, source) = match &args.field {
        Some(path) => {
            let source = json!({ "field": path.display().to_string() });
            match load_field_any(path) {
                Ok(AnyField::U1(f)) => (verify_field(&cfg, &f)?, source),
                Ok(AnyField::Su2(f)) => (verify_field(&cfg, &f)?, source),
                Err(ymvac::Error::Io(e)) => return Err(CliError::usage(format!("{}: {e}", path.display()))),
                Err(e) => {
                    let out = json!({
                        "command": "verify",
                        "source": source,
                        "reports": [{ "check": "integrity", "pass": false, "error": e.to_string() }],
                        "all_pass": false,
                    });
                    emit_json(out, report_path.as_deref(), g.timestamp)?;
                    return Ok(Exit::CheckFailed);
                }
            }
        }
        None => {
            let source = json!({ "group": cfg.group, "geometry": cfg.geometry, "datum": datum_json(&cfg.datum) });
            match cfg.group {
                GroupKind::U1 => (verify_datum::<U1>(&cfg)?, source),
                GroupKind::Su2 => (verify_datum::<Su2>(&cfg)?, source),
            }
        }
    };
    let pass = all_pass(&reports);
    emit_json(suite_json(&cfg, &reports, source), report_path.as_deref(), g.timestamp)?;
    Ok(if pass { Exit::Ok } else { Exit::CheckFailed })
}

fn report_group<G: LieGroup>(g: &Globals, field: &GaugeField<G>, path: &Path, out_path: Option<&Path>) -> Result<Exit, CliError> {
    let r = evaluate(field, &g.config.minimizer)?;
    let decay = match decay_diagnostic(&r) {
        Ok(d) => json!(d),
        Err(e) => json!({ "error": e.to_string() }),
    };
    let out = json!({
        "command": "report",
        "field": path.display().to_string(),
        "group": G::KIND,
        "geometry": field.geometry(),
        "S": r.s,
        "grad_norm": r.grad_norm,
        "grad_tol": r.grad_tol,
        "stationary": r.converged,
        "weyl_gauge": field.is_weyl(),
        "max_unitarity_defect": field.max_unitarity_defect(),
        "max_link_log": field.max_link_log().ok(),
        "datum_crc32": datum_digest(&field.slice(0)),
        "diagnostics": diagnostics(&r),
        "decay": decay,
    });
    emit_json(out, out_path, g.timestamp)?;
    Ok(Exit::Ok)
}

pub fn report(g: &Globals, args: ReportArgs) -> Result<Exit, CliError> {
    let out_path = args.report.as_ref().or(g.config.output.report.as_ref()).cloned();
    match load_field_any(&args.field)? {
        AnyField::U1(f) => report_group(g, &f, &args.field, out_path.as_deref()),
        AnyField::Su2(f) => report_group(g, &f, &args.field, out_path.as_deref()),
    }
}
