//! The table-producing subcommands.

use num_rational::BigRational;
use num_traits::Zero;

use crate::exact::{
    central_binomial_ratio, convolve_first_return, first_return_catalan, first_return_dp,
    pn_return_dp, Arithmetic, ExactError, Prob, ProbTable, ProbValues, RATIONAL_STEP_CAP,
};
use crate::genfun::{
    f_asymptotic_scaled, f_asymptotic_stirling_scaled, p_asymptotic_scaled,
    p_asymptotic_singularity_scaled, return_probability, series_g, series_u, spectral_radius,
};
use crate::model::{Lambda, Regime, WalkParams};
use crate::montecarlo::{estimate_pn_return, simulate_first_return, SimConfig};
use crate::scaled::ScaledFloat;

use super::record::{Cell, OutputRecord};
use super::{AsymptoteArgs, CliError, ExactArgs, Precision, SeriesArgs, SimulateArgs, SweepArgs};

/// Relative agreement demanded between float-mode routes.
const FLOAT_CROSS_CHECK: f64 = 1e-9;

fn params(d: u32, lambda: &Lambda) -> Result<WalkParams, CliError> {
    WalkParams::new(d, lambda.clone()).map_err(|e| CliError::Usage(e.to_string()))
}

fn arithmetic(precision: Precision, params: &WalkParams) -> Result<Arithmetic, CliError> {
    match precision {
        Precision::Rational if !params.lambda().is_exact() => Err(CliError::Usage(format!(
            "rational precision needs lambda as a fraction or decimal, got {}",
            params.lambda()
        ))),
        Precision::Rational => Ok(Arithmetic::Rational),
        Precision::Float => Ok(Arithmetic::ScaledFloat),
    }
}

fn exact_error(e: ExactError) -> CliError {
    match e {
        ExactError::CapacityExceeded { .. } => CliError::Capacity(e.to_string()),
        other => CliError::Usage(other.to_string()),
    }
}

fn prob_cell(p: &Prob) -> Cell {
    match p {
        Prob::Exact(r) => Cell::text(r.to_string()),
        Prob::Scaled(s) => scaled_cell(*s),
    }
}

/// Plain number while it fits in an `f64`, decimal text beyond that.
fn scaled_cell(s: ScaledFloat) -> Cell {
    let x = s.to_f64();
    if s.is_zero() || x.is_normal() {
        Cell::Float(x)
    } else {
        Cell::text(s.to_sci_string())
    }
}

fn ratio(num: ScaledFloat, den: ScaledFloat) -> f64 {
    (num.ln() - den.ln()).exp()
}

fn agree(a: &Prob, b: &Prob) -> bool {
    match (a, b) {
        (Prob::Exact(x), Prob::Exact(y)) => x == y,
        _ => a.to_scaled().rel_diff(&b.to_scaled()) <= FLOAT_CROSS_CHECK,
    }
}

fn precision_name(a: Arithmetic) -> &'static str {
    match a {
        Arithmetic::Rational => "rational",
        Arithmetic::ScaledFloat => "float",
    }
}

/// Overwrites `table[step]` with a wrong value, for exercising the
/// cross-check path.
fn corrupt(table: &mut ProbTable, step: usize) {
    match table.values_mut() {
        ProbValues::Rational(v) => {
            if let Some(x) = v.get_mut(step) {
                *x += BigRational::new(1.into(), 1000.into());
            }
        }
        ProbValues::Scaled(v) => {
            if let Some(x) = v.get_mut(step) {
                *x = *x + ScaledFloat::from_f64(1e-3);
            }
        }
    }
}

pub fn cmd_exact(args: &ExactArgs) -> Result<OutputRecord, CliError> {
    let params = params(args.d, &args.lambda)?;
    let arith = arithmetic(args.precision, &params)?;
    let n_max = args.n_max;
    let mut p = pn_return_dp(&params, n_max, arith).map_err(exact_error)?;
    let f = first_return_dp(&params, n_max.max(2), arith).map_err(exact_error)?;
    let conv = convolve_first_return(&f).map_err(exact_error)?;
    if let Some(step) = args.inject_fault {
        corrupt(&mut p, step);
    }

    let mut record = OutputRecord::new(
        "exact",
        &["n", "p_exact", "f_exact", "f_catalan", "p_from_convolution"],
    )
    .param("d", params.d())
    .param("lambda", params.lambda());
    record.meta("precision", precision_name(arith));

    let zero = match arith {
        Arithmetic::Rational => Prob::Exact(BigRational::zero()),
        Arithmetic::ScaledFloat => Prob::Scaled(ScaledFloat::ZERO),
    };
    let mut failures = Vec::new();
    for n in 0..=n_max {
        let p_n = p.get(n).expect("table covers n_max");
        let f_n = f.get(n).expect("table covers n_max");
        let conv_n = conv.get(n).expect("table covers n_max");
        let cat_n = if n >= 2 && n % 2 == 0 {
            first_return_catalan(&params, (n / 2) as u64, arith).map_err(exact_error)?
        } else {
            zero.clone()
        };
        if !agree(&f_n, &cat_n) {
            failures.push(format!("n={n}: f_exact {f_n} != f_catalan {cat_n}"));
        }
        if !agree(&p_n, &conv_n) {
            failures.push(format!(
                "n={n}: p_exact {p_n} != p_from_convolution {conv_n}"
            ));
        }
        record.push_row(vec![
            Cell::Int(n as i64),
            prob_cell(&p_n),
            prob_cell(&f_n),
            prob_cell(&cat_n),
            prob_cell(&conv_n),
        ]);
    }
    let bound = return_probability(&params);
    for (name, table, bound) in [("p_exact", &p, 1.0), ("f_exact", &f, bound)] {
        if let Err(e) = table.check_invariants(bound) {
            failures.push(format!("{name}: {e}"));
        }
    }
    if !failures.is_empty() {
        return Err(CliError::CrossCheck(failures.join("; ")));
    }
    Ok(record)
}

/// Evenly spaced λ values, computed exactly when both ends are exact.
fn lambda_grid(min: &Lambda, max: &Lambda, points: usize) -> Vec<Lambda> {
    let steps = (points - 1) as i64;
    match (min.as_exact(), max.as_exact()) {
        (Some(lo), Some(hi)) => (0..points as i64)
            .map(|i| {
                let t = BigRational::new(i.into(), steps.into());
                Lambda::Exact(lo + (hi - lo) * t)
            })
            .collect(),
        _ => {
            let (lo, hi) = (min.to_f64(), max.to_f64());
            (0..points)
                .map(|i| Lambda::Float(lo + (hi - lo) * i as f64 / steps as f64))
                .collect()
        }
    }
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<OutputRecord, CliError> {
    let (lo, hi) = (&args.lambda_min, &args.lambda_max);
    if args.points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let positive = |l: &Lambda| l.to_f64() > 0.0;
    let ordered = match (lo.as_exact(), hi.as_exact()) {
        (Some(a), Some(b)) => a < b,
        _ => lo.to_f64() < hi.to_f64(),
    };
    if !positive(lo) || !ordered {
        return Err(CliError::Usage(format!(
            "need 0 < lambda-min < lambda-max, got [{lo}, {hi}]"
        )));
    }
    let mut record = OutputRecord::new("sweep", &["lambda", "rho", "regime", "return_probability"])
        .param("d", args.d)
        .param("lambda_min", lo)
        .param("lambda_max", hi)
        .param("points", args.points);
    record.meta("precision", "float");

    let mut previous = 0.0;
    for lambda in lambda_grid(lo, hi, args.points) {
        let p = params(args.d, &lambda)?;
        let rho = spectral_radius(&p);
        if rho < previous {
            return Err(CliError::CrossCheck(format!(
                "spectral radius decreased to {rho} at lambda={lambda}"
            )));
        }
        previous = rho;
        record.push_row(vec![
            Cell::Float(lambda.to_f64()),
            Cell::Float(rho),
            Cell::text(p.regime().as_str()),
            Cell::Float(return_probability(&p)),
        ]);
    }
    Ok(record)
}

pub fn cmd_asymptote(args: &AsymptoteArgs) -> Result<OutputRecord, CliError> {
    let params = params(args.d, &args.lambda)?;
    let mut ns = args.n.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() || ns[0] == 0 {
        return Err(CliError::Usage("--n needs positive step indices".into()));
    }
    let regime = params.regime();
    let with_p = regime.below_or_at_critical();

    let mut columns = vec!["n"];
    if with_p {
        columns.extend([
            "p_exact",
            "p_asym",
            "ratio_p",
            "p_asym_singular",
            "ratio_p_singular",
        ]);
    }
    columns.extend([
        "f_exact",
        "f_asym",
        "ratio_f",
        "f_asym_stirling",
        "ratio_f_stirling",
    ]);
    let mut record = OutputRecord::new("asymptote", &columns)
        .param("d", params.d())
        .param("lambda", params.lambda());
    record.meta("precision", "float");
    if !with_p {
        let warning = "p columns omitted: no step-return asymptotic for recurrent walks";
        eprintln!("warning: {warning}");
        record.meta("warning", warning);
    }

    let p_table = match regime {
        Regime::Transient => {
            let max_n = *ns.last().expect("non-empty");
            Some(
                pn_return_dp(&params, 2 * max_n as usize, Arithmetic::ScaledFloat)
                    .map_err(exact_error)?,
            )
        }
        _ => None,
    };
    let asym_err = |e: crate::genfun::GenfunError| CliError::Usage(e.to_string());
    for &n in &ns {
        let mut row = vec![Cell::Int(n as i64)];
        if with_p {
            let exact = match &p_table {
                Some(t) => t.get(2 * n as usize).expect("covered").to_scaled(),
                None => central_binomial_ratio(n),
            };
            let asym = p_asymptotic_scaled(&params, n).map_err(asym_err)?;
            let singular = p_asymptotic_singularity_scaled(&params, n).map_err(asym_err)?;
            row.extend([
                scaled_cell(exact),
                scaled_cell(asym),
                Cell::Float(ratio(exact, asym)),
                scaled_cell(singular),
                Cell::Float(ratio(exact, singular)),
            ]);
        }
        let f_exact = first_return_catalan(&params, n, Arithmetic::ScaledFloat)
            .map_err(exact_error)?
            .to_scaled();
        let f_asym = f_asymptotic_scaled(&params, n).map_err(asym_err)?;
        let f_stirling = f_asymptotic_stirling_scaled(&params, n).map_err(asym_err)?;
        row.extend([
            scaled_cell(f_exact),
            scaled_cell(f_asym),
            Cell::Float(ratio(f_exact, f_asym)),
            scaled_cell(f_stirling),
            Cell::Float(ratio(f_exact, f_stirling)),
        ]);
        record.push_row(row);
    }
    Ok(record)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<OutputRecord, CliError> {
    let params = params(args.d, &args.lambda)?;
    let seed = args.seed.unwrap_or_else(rand::random);
    let config = SimConfig::new(params.clone(), args.paths, args.max_steps, seed)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let sim = simulate_first_return(&config).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut record = OutputRecord::new(
        "simulate",
        &[
            "quantity",
            "step",
            "estimate",
            "std_error",
            "exact",
            "z_score",
        ],
    )
    .param("d", params.d())
    .param("lambda", params.lambda());
    record.meta("seed", seed);
    record.meta("paths", args.paths);
    record.meta("max_steps", args.max_steps);
    record.meta("truncated_fraction", sim.return_estimate.truncated_fraction);
    record.meta(
        "rng",
        "ChaCha8 (rand_chacha 0.9), key from master seed, stream = path index",
    );
    record.meta("precision", "float");

    let push = |record: &mut OutputRecord,
                quantity: &str,
                step: u64,
                est: &crate::montecarlo::McEstimate,
                exact: f64| {
        record.push_row(vec![
            Cell::text(quantity),
            Cell::Int(step as i64),
            Cell::Float(est.estimate),
            Cell::Float(est.std_error),
            Cell::Float(exact),
            Cell::Float(est.z_score(exact)),
        ]);
    };
    push(
        &mut record,
        "return_probability",
        args.max_steps,
        &sim.return_estimate,
        return_probability(&params),
    );

    let last = args.report_steps.min(args.max_steps);
    let reference = pn_return_dp(&params, last.max(2) as usize, Arithmetic::ScaledFloat)
        .map_err(exact_error)?;
    for step in (2..=last).step_by(2) {
        let exact = first_return_catalan(&params, step / 2, Arithmetic::ScaledFloat)
            .map_err(exact_error)?
            .to_f64();
        push(
            &mut record,
            "first_return",
            step,
            &sim.first_return_at(step),
            exact,
        );
    }
    for step in (2..=last).step_by(2) {
        let est = estimate_pn_return(&config, step).map_err(|e| CliError::Usage(e.to_string()))?;
        let exact = reference.get(step as usize).expect("covered").to_f64();
        push(&mut record, "step_return", step, &est, exact);
    }
    Ok(record)
}

fn series_rows<T, F>(
    record: &mut OutputRecord,
    u: &[T],
    g: &[T],
    dp: &ProbTable,
    cell: F,
    agree: impl Fn(&T, &Prob) -> bool,
) -> Vec<String>
where
    F: Fn(&T) -> Cell,
{
    let mut failures = Vec::new();
    for (n, (u_n, g_n)) in u.iter().zip(g).enumerate() {
        let p_n = dp.get(n).expect("table covers order");
        if !agree(g_n, &p_n) {
            failures.push(format!(
                "n={n}: series coefficient disagrees with DP value {p_n}"
            ));
        }
        record.push_row(vec![
            Cell::Int(n as i64),
            cell(u_n),
            cell(g_n),
            prob_cell(&p_n),
        ]);
    }
    failures
}

pub fn cmd_series(args: &SeriesArgs) -> Result<OutputRecord, CliError> {
    let params = params(args.d, &args.lambda)?;
    let arith = arithmetic(args.precision, &params)?;
    if arith == Arithmetic::Rational && args.order > RATIONAL_STEP_CAP {
        return Err(CliError::Capacity(format!(
            "rational series are capped at order {RATIONAL_STEP_CAP}"
        )));
    }
    let dp = pn_return_dp(&params, args.order, arith).map_err(exact_error)?;
    let mut record = OutputRecord::new("series", &["n", "u_coefficient", "g_coefficient", "p_dp"])
        .param("d", params.d())
        .param("lambda", params.lambda());
    record.meta("precision", precision_name(arith));
    record.meta(
        "g_method",
        "series division 1/(1-U), U from the binomial series of sqrt(1-w)",
    );

    let usage = |e: crate::genfun::GenfunError| CliError::Usage(e.to_string());
    let failures = match arith {
        Arithmetic::Rational => {
            let u = series_u::<BigRational>(&params, args.order).map_err(usage)?;
            let g = series_g::<BigRational>(&params, args.order).map_err(usage)?;
            series_rows(
                &mut record,
                u.coefficients(),
                g.coefficients(),
                &dp,
                |c| Cell::text(c.to_string()),
                |g, p| p.as_rational() == Some(g),
            )
        }
        Arithmetic::ScaledFloat => {
            let u = series_u::<f64>(&params, args.order).map_err(usage)?;
            let g = series_g::<f64>(&params, args.order).map_err(usage)?;
            series_rows(
                &mut record,
                u.coefficients(),
                g.coefficients(),
                &dp,
                |c| Cell::Float(*c),
                |g, p| {
                    let p = p.to_f64();
                    (g - p).abs() <= FLOAT_CROSS_CHECK * p.abs()
                        || (g.abs() < 1e-290 && p.abs() < 1e-290)
                },
            )
        }
    };
    if !failures.is_empty() {
        return Err(CliError::CrossCheck(failures.join("; ")));
    }
    Ok(record)
}
