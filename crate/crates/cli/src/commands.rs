//! Subcommand execution. Each command returns a [`Report`]; rows are emitted in
//! canonical parameter order whatever order the solves finish in.

use glvortex::abrikosov::{check_eab, AbrikosovEstimate, AbrikosovResult};
use glvortex::field::side_for_quanta;
use glvortex::gl3d::{density_row, DensityRow, PartitionSpec, ReducedParams};
use glvortex::minimize::{dirichlet_counts, MinResult};
use glvortex::spectral::{lll_basis, Spectrum};
use glvortex::verify::{CheckReport, STABILITY_FACTOR};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{
    AbrikosovArgs, BoxArgs, Command, EabArgs, GArgs, Gl3dArgs, LllArgs, SpectrumArgs, Suite, VerifyArgs,
};
use crate::context::Context;
use crate::error::{CliError, CliResult};
use crate::report::{Cell, Report, Series, Table};
use crate::suites::{self, CrossCheck, GSummary, MinSummary, SweepReport};

pub const MIN_COLUMNS: &[&str] = &[
    "problem", "b", "R", "counts", "seed", "tolerance", "value", "residual", "iterations", "converged", "kinetic",
    "l2_pow2", "l4_pow4",
];

pub const G_COLUMNS: &[&str] = &[
    "b", "R", "counts", "m0", "m0_over_R2", "residual", "converged", "g_hat", "fitted_c", "fit_residual",
];

pub const SPECTRUM_COLUMNS: &[&str] = &["index", "eigenvalue", "cluster", "index2d", "mode"];

pub const LLL_COLUMNS: &[&str] = &[
    "n", "R", "counts", "dimension", "cluster_max", "next_eigenvalue", "max_deviation", "gram_defect", "cluster_tol",
];

pub const ABRIKOSOV_COLUMNS: &[&str] = &[
    "n", "R", "c", "c_over_R2", "stationarity", "pairing_defect", "l2_pow2", "l4_pow4", "spread", "iterations",
    "converged", "restarts", "seed",
];

pub const EAB_COLUMNS: &[&str] = &["n", "R", "c_over_R2", "difference", "eab", "cross_check_eab"];

pub const CHECK_COLUMNS: &[&str] = &["check", "kind", "name", "lhs", "rhs", "slack", "holds", "asserted"];

pub const GL3D_COLUMNS: &[&str] = &[
    "b", "n", "R", "L", "counts", "counts3", "value", "residual", "converged", "mean_l2", "mean_l4", "rho4", "rho2",
    "lll_distance", "virial_defect", "x3_variation", "l4_spread",
];

fn min_row(m: &MinResult) -> Vec<Cell> {
    let s = MinSummary::from(m);
    vec![
        format!("{:?}", s.problem).into(),
        s.b.into(),
        s.r.into(),
        s.counts.first().copied().unwrap_or(0).into(),
        s.seed.into(),
        s.grad_tolerance.into(),
        s.value.into(),
        s.residual.into(),
        s.iterations.into(),
        s.converged.into(),
        s.kinetic.into(),
        s.l2_pow2.into(),
        s.l4_pow4.into(),
    ]
}

fn counts_for(args: &BoxArgs) -> usize {
    args.n.unwrap_or_else(|| dirichlet_counts(args.r, args.h))
}

fn min_report(stem: String, m: &MinResult) -> Report {
    let mut table = Table::new(MIN_COLUMNS);
    table.push(min_row(m));
    Report {
        stem,
        table,
        json: serde_json::to_value(MinSummary::from(m)).expect("summary serializes"),
        series: vec![],
        passed: None,
    }
}

fn g_tables(summaries: &[GSummary]) -> (Table, Vec<Series>) {
    let mut table = Table::new(G_COLUMNS);
    for g in summaries {
        for m in &g.minima {
            table.push(vec![
                g.b.into(),
                m.r.into(),
                m.counts.first().copied().unwrap_or(0).into(),
                m.value.into(),
                (m.value / (m.r * m.r)).into(),
                m.residual.into(),
                m.converged.into(),
                g.extrapolated_g.into(),
                g.fitted_c.into(),
                g.fit_residual.into(),
            ]);
        }
    }
    let mut r_values: Vec<f64> = summaries.iter().flat_map(|g| g.values.iter().map(|v| v.0)).collect();
    r_values.sort_by(f64::total_cmp);
    r_values.dedup();
    let mut series: Vec<Series> = r_values
        .iter()
        .map(|&r| Series {
            name: format!("m0_over_R2[R={r}]"),
            points: summaries
                .iter()
                .filter_map(|g| g.values.iter().find(|v| v.0 == r).map(|v| (g.b, v.1)))
                .collect(),
        })
        .collect();
    if !summaries.is_empty() {
        series.push(Series {
            name: "g".into(),
            points: summaries.iter().map(|g| (g.b, g.extrapolated_g)).collect(),
        });
    }
    (table, series)
}

fn spectrum_report(stem: String, s: &Spectrum) -> Report {
    let mut table = Table::new(SPECTRUM_COLUMNS);
    for (i, v) in s.eigenvalues.iter().enumerate() {
        let cluster = s.clusters.iter().position(|c| c.contains(&i)).unwrap_or(0);
        let (i2, mode) = s.labels.get(i).copied().unwrap_or((i, 0));
        table.push(vec![i.into(), (*v).into(), cluster.into(), i2.into(), mode.into()]);
    }
    let json = json!({
        "spectrum": s,
        "lowest_cluster_size": s.lowest_cluster().len(),
        "first_above_cluster": s.first_above_cluster(),
    });
    Report {
        stem,
        table,
        json,
        series: vec![Series {
            name: "eigenvalues".into(),
            points: s.eigenvalues.iter().enumerate().map(|(i, v)| (i as f64, *v)).collect(),
        }],
        passed: None,
    }
}

fn abrikosov_row(a: &AbrikosovResult) -> Vec<Cell> {
    vec![
        a.n.into(),
        a.r.into(),
        a.value.into(),
        (a.value / (a.r * a.r)).into(),
        a.stationarity_defect.into(),
        a.pairing_defect.into(),
        a.l2_pow2.into(),
        a.l4_pow4.into(),
        a.spread.into(),
        a.iterations.into(),
        a.converged.into(),
        a.restarts.into(),
        a.seed.into(),
    ]
}

fn eab_series(est: &AbrikosovEstimate) -> Series {
    Series {
        name: "c_over_R2".into(),
        points: est.sequence.iter().map(|&(n, _, v)| (n as f64, v)).collect(),
    }
}

fn eab_json(est: &AbrikosovEstimate, check: &CheckReport) -> serde_json::Value {
    json!({
        "sequence": est.sequence,
        "extrapolated_eab": est.extrapolated_eab,
        "differences": est.differences,
        "cross_check_eab": est.cross_check_eab,
        "g_estimates": est.g_estimates.iter().map(GSummary::from).collect::<Vec<_>>(),
        "results": est.results,
        "check": check,
    })
}

fn check_table(checks: &[CheckReport]) -> Table {
    let mut table = Table::new(CHECK_COLUMNS);
    for c in checks {
        for r in &c.reports {
            table.push(vec![
                c.name.as_str().into(),
                "inequality".into(),
                r.name.as_str().into(),
                r.lhs.into(),
                r.rhs.into(),
                r.slack_used.into(),
                r.holds.into(),
                r.asserted.into(),
            ]);
        }
        for f in &c.fitted {
            table.push(vec![
                c.name.as_str().into(),
                "fitted".into(),
                f.name.as_str().into(),
                f.ratio.into(),
                STABILITY_FACTOR.into(),
                0.0.into(),
                f.stable.into(),
                f.asserted.into(),
            ]);
        }
    }
    table
}

fn density_series(rows: &[DensityRow]) -> Vec<Series> {
    vec![
        Series {
            name: "rho4".into(),
            points: rows.iter().map(|r| (r.b, r.rho4)).collect(),
        },
        Series {
            name: "rho2".into(),
            points: rows.iter().map(|r| (r.b, r.rho2)).collect(),
        },
        Series {
            name: "lll_distance".into(),
            points: rows.iter().map(|r| (r.b, r.lll_distance)).collect(),
        },
    ]
}

/// `E_Ab` from the tail of `c(R)/R^2` at the default flux list.
fn default_eab(ctx: &Context, grid: usize) -> CliResult<f64> {
    Ok(suites::abrikosov_estimate(ctx, &[1, 2, 3, 4, 5, 6], grid, None)?.extrapolated_eab)
}

fn or_default<T: Clone>(given: &[T], default: &[T]) -> Vec<T> {
    if given.is_empty() {
        default.to_vec()
    } else {
        given.to_vec()
    }
}

fn verify(ctx: &Context, args: &VerifyArgs, stem: String) -> CliResult<Report> {
    let mut series = Vec::new();
    let report: SweepReport = match args.suite {
        Suite::Lemmas => {
            let b = or_default(&args.b, &[0.9]);
            let r = or_default(&args.r, &[8.0, 12.0, 16.0]);
            suites::lemma_suite(ctx, &b, &r, args.h.unwrap_or(0.5))?.1
        }
        Suite::G => {
            let b = or_default(&args.b, &[0.0, 0.5, 0.7, 0.9, 1.1]);
            let r = or_default(&args.r, &[8.0, 12.0, 16.0]);
            let (_, rep) = suites::g_suite(ctx, &b, &r, args.h.unwrap_or(0.25))?;
            series = g_tables(&rep.g_estimates).1;
            rep
        }
        Suite::Abrikosov => {
            let n = or_default(&args.n_list, &[1, 2, 3, 4, 5, 6]);
            let b = or_default(&args.b, &[0.85, 0.9, 0.95]);
            let r = or_default(&args.r, &[8.0, 12.0, 16.0]);
            let cross = CrossCheck {
                b_list: &b,
                r_list: &r,
                h: args.h.unwrap_or(0.125),
            };
            let (est, rep) = suites::abrikosov_suite(ctx, &n, args.grid, Some(cross))?;
            series.push(eab_series(&est));
            rep
        }
        Suite::Ka => {
            let b = or_default(&args.b, &[0.9, 0.95]);
            let n = or_default(&args.n_list, &[2, 4]);
            suites::ka_suite(ctx, &b, &n, args.grid, args.h.unwrap_or(0.125))?
        }
        Suite::Density => {
            let b = or_default(&args.b, &[0.85, 0.9, 0.95]);
            let n = or_default(&args.n_list, &[4]);
            if n.len() != 1 {
                return Err(CliError::Usage("the density suite takes a single --n-list value".into()));
            }
            let eab = match args.eab {
                Some(e) => e,
                None => default_eab(ctx, args.grid)?,
            };
            let out = suites::density_suite(ctx, &b, n[0], args.grid, args.grid_coarse, args.grid3, eab)?;
            series = density_series(&out.extrapolated);
            out.report
        }
    };
    Ok(Report {
        stem,
        table: check_table(&report.checks),
        json: serde_json::to_value(&report).expect("report serializes"),
        series,
        passed: Some(report.passed),
    })
}

fn gl3d(ctx: &Context, args: &Gl3dArgs, stem: String) -> CliResult<Report> {
    let r = side_for_quanta(args.n_quanta);
    let l = args.l.unwrap_or(r);
    let eab = match args.eab {
        Some(e) => e,
        None => default_eab(ctx, args.grid)?,
    };
    let basis = lll_basis(r, args.grid, glvortex::abrikosov::DEFAULT_CLUSTER_TOL)?;
    let solved: Vec<(MinResult, DensityRow, f64)> = args
        .b
        .par_iter()
        .map(|&b| {
            let params = ReducedParams::new(b, r, l)?;
            let m = ctx.periodic(&params, args.grid, args.grid3)?;
            let row = density_row(&m, eab, &basis)?;
            let spread = glvortex::gl3d::cell_statistics(&m, &PartitionSpec::uniform(args.tiles))?.l4_spread;
            Ok((m, row, spread))
        })
        .collect::<CliResult<_>>()?;
    let mut table = Table::new(GL3D_COLUMNS);
    for (m, row, spread) in &solved {
        table.push(vec![
            row.b.into(),
            row.n.into(),
            r.into(),
            l.into(),
            args.grid.into(),
            args.grid3.into(),
            m.value.into(),
            m.residual.into(),
            m.converged.into(),
            row.mean_l2.into(),
            row.mean_l4.into(),
            row.rho4.into(),
            row.rho2.into(),
            row.lll_distance.into(),
            row.diagnostics.virial_defect.into(),
            row.diagnostics.x3_variation.into(),
            (*spread).into(),
        ]);
    }
    let rows: Vec<DensityRow> = solved.iter().map(|(_, r, _)| r.clone()).collect();
    let json = json!({
        "eab": eab,
        "tiles": args.tiles,
        "rows": rows,
        "minima": solved.iter().map(|(m, _, _)| MinSummary::from(m)).collect::<Vec<_>>(),
        "l4_spread": solved.iter().map(|s| s.2).collect::<Vec<_>>(),
    });
    Ok(Report {
        stem,
        table,
        json,
        series: density_series(&rows),
        passed: None,
    })
}

/// Run every subcommand except `report`, which replays a manifest (see [`crate::run`]).
pub fn execute(cmd: &Command, ctx: &Context) -> CliResult<Report> {
    let stem = cmd.stem();
    match cmd {
        Command::SquareM0(a) => Ok(min_report(stem, &ctx.m0(a.b, a.r, counts_for(a))?)),
        Command::CubeM0(a) => Ok(min_report(stem, &ctx.m0_cube(a.b, a.r, counts_for(a))?)),
        Command::Quotient(a) => Ok(min_report(stem, &ctx.quotient(a.b, a.r, counts_for(a))?)),
        Command::G(GArgs { b, r, h }) => {
            let gs: Vec<GSummary> = b
                .iter()
                .map(|&b| ctx.g(b, r, *h).map(|g| GSummary::from(&g)))
                .collect::<CliResult<_>>()?;
            let (table, series) = g_tables(&gs);
            Ok(Report {
                stem,
                table,
                json: serde_json::to_value(&gs).expect("estimates serialize"),
                series,
                passed: None,
            })
        }
        Command::Spectrum2d(SpectrumArgs { n_quanta, grid, k, .. }) => {
            let k = k.unwrap_or(*n_quanta as usize + 2);
            Ok(spectrum_report(stem, &ctx.spectrum2d(*n_quanta, *grid, k)?))
        }
        Command::Spectrum3d(SpectrumArgs { n_quanta, grid, k, l }) => {
            let k = k.unwrap_or(*n_quanta as usize + 2);
            let l = l.unwrap_or_else(|| side_for_quanta(*n_quanta));
            Ok(spectrum_report(stem, &ctx.spectrum3d(*n_quanta, l, *grid, k)?))
        }
        Command::Lll(LllArgs {
            n_quanta,
            grid,
            cluster_tol,
        }) => {
            let r = side_for_quanta(*n_quanta);
            let basis = lll_basis(r, *grid, *cluster_tol)?;
            let ev = basis.eigenvalues().to_vec();
            let cluster_max = ev.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut table = Table::new(LLL_COLUMNS);
            table.push(vec![
                (*n_quanta).into(),
                r.into(),
                (*grid).into(),
                basis.dimension().into(),
                cluster_max.into(),
                basis.next_eigenvalue().into(),
                basis.max_eigenvalue_deviation().into(),
                basis.gram_defect().into(),
                basis.cluster_tol().into(),
            ]);
            let json = json!({
                "n": n_quanta,
                "R": r,
                "counts": grid,
                "dimension": basis.dimension(),
                "eigenvalues": ev,
                "next_eigenvalue": basis.next_eigenvalue(),
                "max_deviation": basis.max_eigenvalue_deviation(),
                "gram_defect": basis.gram_defect(),
                "cluster_tol": basis.cluster_tol(),
            });
            Ok(Report {
                stem,
                table,
                json,
                series: vec![Series {
                    name: "lll_eigenvalues".into(),
                    points: basis.eigenvalues().iter().enumerate().map(|(i, v)| (i as f64, *v)).collect(),
                }],
                passed: None,
            })
        }
        Command::Abrikosov(AbrikosovArgs { n_quanta, grid }) => {
            let a = ctx.abrikosov(*n_quanta, *grid)?;
            let mut table = Table::new(ABRIKOSOV_COLUMNS);
            table.push(abrikosov_row(&a));
            Ok(Report {
                stem,
                table,
                json: serde_json::to_value(&a).expect("result serializes"),
                series: vec![],
                passed: None,
            })
        }
        Command::Eab(EabArgs {
            n_list,
            grid,
            cross_check,
            cross_b,
            cross_r,
            cross_h,
        }) => {
            let cross = cross_check.then_some(CrossCheck {
                b_list: cross_b,
                r_list: cross_r,
                h: *cross_h,
            });
            let est = suites::abrikosov_estimate(ctx, n_list, *grid, cross)?;
            let check = check_eab(&est);
            let mut table = Table::new(EAB_COLUMNS);
            for (i, &(n, r, v)) in est.sequence.iter().enumerate() {
                let diff = if i == 0 { None } else { est.differences.get(i - 1).copied() };
                table.push(vec![
                    n.into(),
                    r.into(),
                    v.into(),
                    diff.into(),
                    est.extrapolated_eab.into(),
                    est.cross_check_eab.into(),
                ]);
            }
            Ok(Report {
                stem,
                table,
                json: eab_json(&est, &check),
                series: vec![eab_series(&est)],
                passed: None,
            })
        }
        Command::Verify(a) => verify(ctx, a, stem),
        Command::Gl3d(a) => gl3d(ctx, a, stem),
        Command::Report(_) => Err(CliError::Usage("report is handled by the runner".into())),
    }
}
