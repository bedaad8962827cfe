use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use ymvac::maxwell::{
    boost_identity_check, localized_bumps, localized_gradient, wheeler_s_kernel, wheeler_s_spectral, VectorFieldGrid,
    REL_FLOOR,
};
use ymvac::Exec;

use crate::config::FieldKind;
use crate::output::{emit_json, CliError, Exit};
use crate::{Globals, MaxwellArgs};

/// Smallest grid on which the kernel comparison is meaningful.
pub const MIN_KERNEL_N: usize = 16;

/// A field counts as pure gradient when its transverse functional is below
/// this fraction of [`reference_scale`].
const LONGITUDINAL_FRACTION: f64 = 1e-8;

/// Residual allowed for the kernel value and the boost moments of a pure
/// gradient, relative to [`reference_scale`] (the kernel sees the
/// finite-difference curl of a gradient, which is not exactly zero).
const GRADIENT_FLOOR: f64 = 1e-2;

/// `½ Σ a³|A|² / σ`: the functional of a transverse field of the same
/// norm whose wavenumbers are of order `1/σ`.
fn reference_scale(f: &VectorFieldGrid, sigma: f64) -> f64 {
    let a3 = f.spacing().powi(3);
    let sum: f64 = (0..f.len()).map(|s| f.at(s).iter().map(|v| v * v).sum::<f64>()).sum();
    0.5 * a3 * sum / sigma
}

pub fn run(g: &Globals, args: MaxwellArgs) -> Result<Exit, CliError> {
    let mut m = g.config.maxwell.clone();
    m.n = args.n.unwrap_or(m.n);
    m.fields = args.fields.unwrap_or(m.fields);
    m.sigma = args.sigma.unwrap_or(m.sigma);
    if let Some(k) = &args.kind {
        m.kind = match k.as_str() {
            "bumps" => FieldKind::Bumps,
            "gradient" => FieldKind::Gradient,
            other => return Err(CliError::usage(format!("--kind must be bumps or gradient, got {other:?}"))),
        };
    }
    m.kernel &= !args.no_kernel;
    m.boost &= !args.no_boost;
    let report_path = args.report.or_else(|| g.config.output.report.clone());

    if m.kernel && m.n < MIN_KERNEL_N {
        return Err(CliError::usage(format!("kernel comparison needs n >= {MIN_KERNEL_N}, got {}", m.n)));
    }
    if m.fields == 0 {
        return Err(CliError::usage("fields must be >= 1"));
    }
    if !(m.sigma > 0.0 && m.sigma < 0.5) {
        return Err(CliError::usage(format!("sigma must lie in (0, 0.5), got {}", m.sigma)));
    }

    let exec = Exec::Parallel;
    let sigma_len = m.sigma * m.n as f64 * m.a;
    let mut all_pass = true;
    let mut any_delocalized = false;
    let mut rows = Vec::new();
    for i in 0..m.fields {
        let mut rng = ChaCha8Rng::seed_from_u64(g.config.seed.wrapping_add(i as u64));
        let f = match m.kind {
            FieldKind::Bumps => localized_bumps(m.n, m.a, m.sigma, &mut rng)?,
            FieldKind::Gradient => localized_gradient(m.n, m.a, m.sigma, &mut rng)?,
        };
        let scale = reference_scale(&f, sigma_len);
        let s_spec = wheeler_s_spectral(&f, exec);
        let longitudinal = s_spec <= LONGITUDINAL_FRACTION * scale;
        let delocalized = !f.is_localized();
        any_delocalized |= delocalized;
        let mut row = json!({
            "field": i,
            "S_spectral": s_spec,
            "reference_scale": scale,
            "longitudinal": longitudinal,
            "delocalized": delocalized,
        });
        let mut pass = true;
        if m.kernel {
            let k = wheeler_s_kernel(&f, exec);
            let rel_gap = (k.s - s_spec).abs() / s_spec.max(REL_FLOOR);
            let ok = if longitudinal { k.s.abs() <= GRADIENT_FLOOR * scale } else { rel_gap <= m.kernel_tolerance };
            pass &= ok;
            row["S_kernel"] = json!(k.s);
            row["kernel_rel_gap"] = json!(rel_gap);
            row["kernel_pass"] = json!(ok);
        }
        if m.boost {
            let mut boosts = Vec::new();
            for axis in 0..3 {
                let b = boost_identity_check(&f, axis, exec)?;
                let moment_scale = scale * m.n as f64 * m.a;
                let ok = if longitudinal {
                    b.lhs.abs().max(b.rhs.abs()) <= GRADIENT_FLOOR * moment_scale
                } else {
                    b.rel_gap <= m.boost_tolerance
                };
                pass &= ok;
                boosts.push(json!({ "axis": axis, "lhs": b.lhs, "rhs": b.rhs, "rel_gap": b.rel_gap, "pass": ok }));
            }
            row["boost"] = Value::Array(boosts);
        }
        row["pass"] = json!(pass);
        all_pass &= pass;
        rows.push(row);
    }

    let strict_fail = g.strict && any_delocalized;
    let summary = json!({
        "command": "maxwell",
        "n": m.n,
        "a": m.a,
        "sigma": m.sigma,
        "kind": match m.kind { FieldKind::Bumps => "bumps", FieldKind::Gradient => "gradient" },
        "seed": g.config.seed,
        "kernel_tolerance": m.kernel_tolerance,
        "boost_tolerance": m.boost_tolerance,
        "fields": rows,
        "delocalized": any_delocalized,
        "pass": all_pass && !strict_fail,
    });
    emit_json(summary, report_path.as_deref(), g.timestamp)?;
    Ok(if all_pass && !strict_fail { Exit::Ok } else { Exit::CheckFailed })
}
