use serde_json::json;

use ymvac::hjqm::{
    anharmonic_principal, conventional_energy, convergence_order, ground_state, hje_residual_1d, nno_residual,
    nno_residual_samples, solve_hje_1d, wavefunction_from_exponent, DiffOrder, Grid1D, PotentialGrid,
    SERIES_SWITCH,
};

use crate::output::{emit_json, write_file, CliError, Exit};
use crate::{Globals, QmArgs};

fn residual_at(lambda: f64, x_min: f64, x_max: f64, h: f64, order: DiffOrder) -> Result<f64, CliError> {
    let grid = Grid1D::new(x_min, x_max, h)?;
    let v = PotentialGrid::anharmonic(grid, lambda)?;
    let s = anharmonic_principal(grid, lambda)?;
    Ok(nno_residual(&v, &s, &ground_state(&s)?, order)?)
}

pub fn run(g: &Globals, args: QmArgs) -> Result<Exit, CliError> {
    let mut q = g.config.qm.clone();
    q.lambda = args.lambda.unwrap_or(q.lambda);
    q.h = args.h.unwrap_or(q.h);
    q.x_min = args.x_min.unwrap_or(q.x_min);
    q.x_max = args.x_max.unwrap_or(q.x_max);
    q.order = args.order.unwrap_or(q.order);
    q.study &= !args.no_study;
    let csv_path = args.csv.or_else(|| g.config.output.csv.clone());
    let report_path = args.report.or_else(|| g.config.output.report.clone());

    if !(q.lambda > 0.0 && q.lambda.is_finite()) {
        return Err(CliError::usage(format!("lambda must be a positive number, got {}", q.lambda)));
    }
    let order = match q.order {
        2 => DiffOrder::Second,
        4 => DiffOrder::Fourth,
        o => return Err(CliError::usage(format!("order must be 2 or 4, got {o}"))),
    };

    let grid = Grid1D::new(q.x_min, q.x_max, q.h)?;
    let v = PotentialGrid::anharmonic(grid, q.lambda)?;
    let s = anharmonic_principal(grid, q.lambda)?;
    let psi = ground_state(&s)?;
    let r_samples = nno_residual_samples(&v, &s, &psi, order)?;
    let residual = nno_residual(&v, &s, &psi, order)?;
    let quadrature = solve_hje_1d(&v);
    let quadrature_dev = s.values().iter().zip(quadrature.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let harmonic_dev = grid
        .points()
        .iter()
        .zip(s.values())
        .map(|(x, sv)| (sv - 0.5 * x * x).abs())
        .fold(0.0, f64::max);
    let reach = q.x_min.abs().max(q.x_max.abs());
    let branch = if 0.5 * q.lambda * reach * reach < SERIES_SWITCH { "harmonic-limit" } else { "closed-form" };
    let neg: Vec<f64> = s.values().iter().map(|x| -x).collect();
    let wrong_sign = nno_residual(&v, &s, &wavefunction_from_exponent(grid, &neg)?, order)?;

    let study = if q.study {
        let hs = [4.0 * grid.h, 2.0 * grid.h, grid.h];
        let rs = hs
            .iter()
            .map(|&h| residual_at(q.lambda, q.x_min, q.x_max, h, order))
            .collect::<Result<Vec<_>, _>>()?;
        let slope = convergence_order(&hs, &rs)?;
        json!({ "h": hs, "nno_residual": rs, "order": slope })
    } else {
        serde_json::Value::Null
    };

    if let Some(path) = &csv_path {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| CliError::usage(format!("csv: {e}"));
        w.write_record(["x", "V", "S", "psi", "residual"]).map_err(io)?;
        for j in 0..grid.n {
            w.serialize((grid.x(j), v.values()[j], s.values()[j], psi.values()[j], r_samples[j])).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?;
        write_file(path, &bytes)?;
    }

    let pass = residual <= q.tolerance;
    let summary = json!({
        "command": "qm",
        "lambda": q.lambda,
        "h": grid.h,
        "points": grid.n,
        "interval": [q.x_min, q.x_max],
        "stencil_order": q.order,
        "branch": branch,
        "nno_residual": residual,
        "tolerance": q.tolerance,
        "hje_residual": hje_residual_1d(&v, &s, order)?,
        "quadrature_max_deviation": quadrature_dev,
        "harmonic_max_deviation": harmonic_dev,
        "conventional_energy": conventional_energy(&v, &psi)?,
        "wrong_sign_nno_residual": wrong_sign,
        "study": study,
        "pass": pass,
    });
    emit_json(summary, report_path.as_deref(), g.timestamp)?;
    Ok(if pass { Exit::Ok } else { Exit::CheckFailed })
}
