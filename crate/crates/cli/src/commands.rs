//! The four subcommands: solve, compare, sweep, autoselect.

use rayon::prelude::*;
use vpal_core::problems::ProblemInstance;
use vpal_core::regselect::{bisect_lambda, bisect_mu, BisectionOutcome};
use vpal_core::solver::{admm_solve, vpal_solve, SolveResult};
use vpal_core::{Chi2Config, SolverOptions};

use crate::config::{RunConfig, SelectTarget, SolverKind};
use crate::error::CliError;
use crate::report::{final_error, fmt_f64, opt_f64, write_iteration_csv, write_reconstruction};

fn run_solver(
    kind: SolverKind,
    problem: &ProblemInstance,
    opts: &SolverOptions,
) -> Result<SolveResult, CliError> {
    Ok(match kind {
        SolverKind::Vpal => vpal_solve(problem, opts)?,
        SolverKind::Admm => admm_solve(problem, opts)?,
    })
}

/// Data-fit plus weighted penalty, `||A x - b||^2 + mu ||D x||_1`, the
/// quantity whose distance from `dof * sigma^2` scores a parameter choice.
fn penalized_residual(problem: &ProblemInstance, mu: f64, x: &[f64]) -> f64 {
    let ax = problem.a.forward(x);
    let fit: f64 = ax
        .iter()
        .zip(&problem.b)
        .map(|(&ai, &bi)| (ai - bi) * (ai - bi))
        .sum();
    let dx = problem.d.forward(x);
    fit + mu * dx.iter().map(|v| v.abs()).sum::<f64>()
}

fn instance_label(cfg: &RunConfig) -> String {
    format!(
        "{} {}x{} noise={} reg={} seed={}",
        match cfg.problem.family {
            crate::config::FamilyKind::Denoise => "denoise",
            crate::config::FamilyKind::Blur => "blur",
            crate::config::FamilyKind::Tomo => "tomo",
        },
        cfg.problem.size,
        cfg.problem.size,
        cfg.problem.noise,
        match cfg.problem.reg {
            crate::config::RegKind::Tv => "tv",
            crate::config::RegKind::Laplacian => "laplacian",
            crate::config::RegKind::Identity => "identity",
        },
        cfg.problem.seed,
    )
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = cfg.build_problem()?;
    let opts = cfg.solver.options()?;
    let result = run_solver(cfg.solver.solver, &problem, &opts)?;

    let out = &cfg.output.out;
    write_iteration_csv(&out.join("solve.csv"), &result)?;
    write_reconstruction(out, cfg.problem.size, &result.x_hat)?;

    println!(
        "solve {} solver={} mu={} lambda={} outer={} inner={} matvecs={} converged={} \
         objective={:.6e} error={} residual={:.6e}",
        instance_label(cfg),
        cfg.solver.solver.name(),
        opts.mu,
        opts.lambda,
        result.outer_iterations,
        result.total_inner_iterations,
        result.matvecs.total(),
        result.converged,
        result.objective_history.last().unwrap(),
        final_error(&result).map(|e| format!("{e:.6e}")).unwrap_or_else(|| "n/a".into()),
        result.residual_history.last().unwrap(),
    );
    Ok(())
}

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = cfg.build_problem()?;
    let opts = cfg.solver.options()?;
    let vp = vpal_solve(&problem, &opts)?;
    let ad = admm_solve(&problem, &opts)?;

    let vp_norm = vp.x_hat.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff = vp
        .x_hat
        .iter()
        .zip(&ad.x_hat)
        .map(|(p, q)| (p - q) * (p - q))
        .sum::<f64>()
        .sqrt();
    let relative_difference = if vp_norm > 0.0 { diff / vp_norm } else { diff };
    let matvec_ratio = ad.matvecs.total() as f64 / vp.matvecs.total() as f64;

    let out = &cfg.output.out;
    write_iteration_csv(&out.join("compare_vpal.csv"), &vp)?;
    write_iteration_csv(&out.join("compare_admm.csv"), &ad)?;

    let mut w = csv::Writer::from_path(out.join("compare.csv"))?;
    let mut header = vec!["mu".to_string(), "lambda".to_string()];
    let mut row = vec![fmt_f64(opts.mu), fmt_f64(opts.lambda)];
    for (name, r) in [("vpal", &vp), ("admm", &ad)] {
        header.extend(
            [
                "outer",
                "inner",
                "objective",
                "relative_error",
                "relative_residual",
                "forward_count",
                "adjoint_count",
                "matvecs",
                "converged",
                "termination",
            ]
            .map(|c| format!("{name}_{c}")),
        );
        row.extend([
            r.outer_iterations.to_string(),
            r.total_inner_iterations.to_string(),
            fmt_f64(*r.objective_history.last().unwrap()),
            opt_f64(final_error(r)),
            fmt_f64(*r.residual_history.last().unwrap()),
            (r.matvecs.a_forward + r.matvecs.d_forward).to_string(),
            (r.matvecs.a_adjoint + r.matvecs.d_adjoint).to_string(),
            r.matvecs.total().to_string(),
            r.converged.to_string(),
            r.termination.name().to_string(),
        ]);
    }
    header.extend(["matvec_ratio".to_string(), "relative_difference".to_string()]);
    row.extend([fmt_f64(matvec_ratio), fmt_f64(relative_difference)]);
    w.write_record(&header)?;
    w.write_record(&row)?;
    w.flush()?;

    write_reconstruction(out, cfg.problem.size, &vp.x_hat)?;

    println!(
        "compare {} mu={} lambda={}: vpal outer={} matvecs={} ({}) | admm outer={} matvecs={} \
         ({}) | matvec_ratio={:.2} relative_difference={:.3e}",
        instance_label(cfg),
        opts.mu,
        opts.lambda,
        vp.outer_iterations,
        vp.matvecs.total(),
        vp.termination.name(),
        ad.outer_iterations,
        ad.matvecs.total(),
        ad.termination.name(),
        matvec_ratio,
        relative_difference,
    );
    Ok(())
}

struct SweepRow {
    mu_index: usize,
    lambda_index: usize,
    mu: f64,
    lambda: f64,
    objective: f64,
    relative_error: Option<f64>,
    chi2_departure: f64,
    converged: bool,
    termination: &'static str,
    outer: usize,
}

pub fn sweep(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = cfg.build_problem()?;
    let base = cfg.solver.options()?;
    let sigma = cfg.select.sigma.unwrap_or(problem.sigma);
    let dof = cfg.select.dof.unwrap_or(problem.rows());
    if !(sigma > 0.0) {
        return Err(CliError::usage(
            "sweep needs a positive noise level; pass --sigma when the instance has none",
        ));
    }
    let target = dof as f64 * sigma * sigma;

    let mus = cfg.sweep.grid_mu.points();
    let lambdas = cfg.sweep.grid_lambda.points();
    let mut points = Vec::with_capacity(mus.len() * lambdas.len());
    for (i, &mu) in mus.iter().enumerate() {
        for (j, &lambda) in lambdas.iter().enumerate() {
            points.push((i, j, mu, lambda));
        }
    }

    let solve_point = |&(i, j, mu, lambda): &(usize, usize, f64, f64)| {
        let mut opts = base.clone();
        opts.mu = mu;
        opts.lambda = lambda;
        let result = run_solver(cfg.solver.solver, &problem, &opts)?;
        let f = penalized_residual(&problem, mu, &result.x_hat);
        Ok(SweepRow {
            mu_index: i,
            lambda_index: j,
            mu,
            lambda,
            objective: *result.objective_history.last().unwrap(),
            relative_error: final_error(&result),
            chi2_departure: (f / target - 1.0).abs(),
            converged: result.converged,
            termination: result.termination.name(),
            outer: result.outer_iterations,
        })
    };

    // Grid points are independent; run them in parallel but keep the output
    // ordered by grid index regardless of completion order.
    let outcomes: Vec<Result<SweepRow, CliError>> = match cfg.sweep.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot build thread pool: {e}")))?
            .install(|| points.par_iter().map(solve_point).collect()),
        None => points.par_iter().map(solve_point).collect(),
    };
    let rows: Vec<SweepRow> = outcomes.into_iter().collect::<Result<_, _>>()?;

    let argmin = |values: Vec<Option<f64>>| -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (idx, value) in values.into_iter().enumerate() {
            if let Some(v) = value {
                if v.is_finite() && best.map_or(true, |(_, bv)| v < bv) {
                    best = Some((idx, v));
                }
            }
        }
        best.map(|(idx, _)| idx)
    };
    let min_error = argmin(rows.iter().map(|r| r.relative_error).collect());
    let min_chi2 = argmin(rows.iter().map(|r| Some(r.chi2_departure)).collect());

    let mut w = csv::Writer::from_path(cfg.output.out.join("sweep.csv"))?;
    w.write_record([
        "mu_index",
        "lambda_index",
        "mu",
        "lambda",
        "objective",
        "relative_error",
        "chi2_departure",
        "converged",
        "termination",
        "outer",
        "min_error",
        "min_chi2",
    ])?;
    for (idx, r) in rows.iter().enumerate() {
        w.write_record([
            r.mu_index.to_string(),
            r.lambda_index.to_string(),
            fmt_f64(r.mu),
            fmt_f64(r.lambda),
            fmt_f64(r.objective),
            opt_f64(r.relative_error),
            fmt_f64(r.chi2_departure),
            r.converged.to_string(),
            r.termination.to_string(),
            r.outer.to_string(),
            u8::from(min_error == Some(idx)).to_string(),
            u8::from(min_chi2 == Some(idx)).to_string(),
        ])?;
    }
    w.flush()?;

    let describe = |picked: Option<usize>| match picked {
        Some(idx) => {
            let r = &rows[idx];
            format!(
                "mu={:.4e} lambda={:.4e} error={}",
                r.mu,
                r.lambda,
                r.relative_error.map(|e| format!("{e:.4e}")).unwrap_or_else(|| "n/a".into())
            )
        }
        None => "n/a".to_string(),
    };
    println!(
        "sweep {} grid {}x{}: min_error at {} | min_chi2 at {}",
        instance_label(cfg),
        mus.len(),
        lambdas.len(),
        describe(min_error),
        describe(min_chi2),
    );
    Ok(())
}

pub fn autoselect(cfg: &RunConfig) -> Result<(), CliError> {
    let problem = cfg.build_problem()?;
    let opts = cfg.solver.options()?;
    let sigma = cfg.select.sigma.unwrap_or(problem.sigma);
    let dof = cfg.select.dof.unwrap_or(problem.rows());
    let gamma = opts.gamma();
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(CliError::usage(
            "autoselect needs a positive shrinkage level; set --gamma, or --mu with --lambda",
        ));
    }
    if cfg.select.target == SelectTarget::Lambda && opts.mu <= 0.0 {
        return Err(CliError::usage("--target lambda needs a positive fixed --mu"));
    }

    let mut chi2 = Chi2Config::new(sigma, dof, gamma);
    chi2.eta = cfg.select.eta;
    chi2.tau1 = cfg.select.tau1;
    chi2.tau2 = cfg.select.tau2;
    chi2.max_evals = cfg.select.max_evals;

    let outcome: BisectionOutcome = match cfg.select.target {
        SelectTarget::Mu => bisect_mu(&problem, &chi2, &opts)?,
        SelectTarget::Lambda => bisect_lambda(&problem, opts.mu, &chi2, &opts)?,
    };

    let out = &cfg.output.out;
    let mut w = csv::Writer::from_path(out.join("autoselect.csv"))?;
    w.write_record([
        "eval",
        "parameter",
        "value",
        "statistic",
        "outer_iterations",
        "inner_iterations",
        "converged",
    ])?;
    for (idx, e) in outcome.evaluations.iter().enumerate() {
        w.write_record([
            idx.to_string(),
            fmt_f64(e.parameter),
            fmt_f64(e.value),
            fmt_f64(e.statistic),
            e.outer_iterations.to_string(),
            e.inner_iterations.to_string(),
            e.converged.to_string(),
        ])?;
    }
    w.flush()?;

    // Re-solve at the selection for the reported reconstruction.
    let (mu_sel, lambda_sel) = match cfg.select.target {
        SelectTarget::Mu => (outcome.selected, (outcome.selected / gamma).sqrt()),
        SelectTarget::Lambda => (opts.mu, outcome.selected),
    };
    let mut final_opts = opts.clone();
    final_opts.mu = mu_sel;
    final_opts.lambda = lambda_sel;
    let result = run_solver(cfg.solver.solver, &problem, &final_opts)?;
    write_reconstruction(out, cfg.problem.size, &result.x_hat)?;

    let selected_eval = outcome
        .evaluations
        .iter()
        .find(|e| e.parameter == outcome.selected)
        .expect("the selected parameter was evaluated");
    let target_value = match cfg.select.target {
        SelectTarget::Mu => chi2.eta * dof as f64 * sigma * sigma,
        SelectTarget::Lambda => 0.0,
    };

    let mut s = csv::Writer::from_path(out.join("autoselect_summary.csv"))?;
    s.write_record([
        "target",
        "selected",
        "mu",
        "lambda",
        "gamma",
        "statistic",
        "target_value",
        "termination",
        "evaluations",
        "bracket_lo",
        "bracket_hi",
        "relative_error",
    ])?;
    s.write_record([
        cfg.select.target.name().to_string(),
        fmt_f64(outcome.selected),
        fmt_f64(mu_sel),
        fmt_f64(lambda_sel),
        fmt_f64(gamma),
        fmt_f64(selected_eval.value),
        fmt_f64(target_value),
        outcome.termination.name().to_string(),
        outcome.evaluations.len().to_string(),
        fmt_f64(outcome.bracket.0),
        fmt_f64(outcome.bracket.1),
        opt_f64(final_error(&result)),
    ])?;
    s.flush()?;

    println!(
        "autoselect {} {}: selected {}={:.6e} (mu={:.4e} lambda={:.4e} gamma={:.4e}) \
         statistic={:.6e} target={:.6e} termination={} evals={} error={}",
        cfg.select.target.name(),
        instance_label(cfg),
        cfg.select.target.name(),
        outcome.selected,
        mu_sel,
        lambda_sel,
        gamma,
        selected_eval.value,
        target_value,
        outcome.termination.name(),
        outcome.evaluations.len(),
        final_error(&result).map(|e| format!("{e:.4e}")).unwrap_or_else(|| "n/a".into()),
    );
    Ok(())
}
