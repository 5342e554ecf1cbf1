use std::collections::BTreeSet;
use std::path::Path;

use ndarray::ArrayView2;
use rayon::prelude::*;
use tfavar::error::{Error, Result};
use tfavar::evaluate::{
    fluctuation_test, rme_report, simulate_critical_values, MatrixNorm, RmeReport,
};
use tfavar::experiment::{run_replication, summarise, ExperimentConfig, ReplicationRecord};
use tfavar::factors::BaiNgCriterion;
use tfavar::forecast::{rolling_forecast, ForecastRun, RollingOptions};
use tfavar::panel::{load_csv, mad_scales, PanelSeries};
use tfavar::pipeline::{choose_rule, fit, sparsity_summary, FavarFit, TauMode};
use tfavar::simulate::{derive_seed, simulate_panel, DgpSpec};
use tfavar::trunc::{self, build_tau_grid, TauCvReport};

use super::output::{fluctuation_svg, fmt_f64, read_text, Context, RunDir, Table};
use super::{
    CriticalValuesArgs, CvTauArgs, EstimateArgs, EvaluateArgs, ExperimentArgs, ForecastArgs, SimulateArgs,
};

fn numbered(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

fn load_dgp(path: &Path) -> Result<DgpSpec> {
    DgpSpec::from_toml(&read_text(path)?)
}

pub fn simulate(ctx: &Context, args: &SimulateArgs) -> Result<()> {
    let spec = load_dgp(&args.dgp)?;
    if args.reps == 0 {
        return Err(Error::InvalidArgument("--reps must be at least 1".into()));
    }
    let run = RunDir::create(&args.out)?;
    run.write_text("dgp.toml", &spec.to_toml())?;
    let seeds: Vec<u64> = (0..args.reps).map(|i| derive_seed(args.seed, i as u64)).collect();
    let sims = seeds
        .par_iter()
        .map(|&s| simulate_panel(&spec.with_seed(s)))
        .collect::<Result<Vec<_>>>()?;

    for (i, sim) in sims.iter().enumerate() {
        let dir = format!("rep_{i:03}");
        let names = sim.x.names();
        run.write_matrix(&format!("{dir}/x.csv"), names, sim.x.values())?;
        run.write_matrix(&format!("{dir}/a.csv"), names, sim.a.view())?;
        run.write_matrix(&format!("{dir}/chi.csv"), names, sim.chi.view())?;
        run.write_matrix(&format!("{dir}/xi.csv"), names, sim.xi.view())?;
        let r = sim.loadings.ncols();
        if r > 0 {
            let f = numbered("F", r);
            run.write_matrix(&format!("{dir}/loadings.csv"), &f, sim.loadings.view())?;
            run.write_matrix(&format!("{dir}/factors.csv"), &f, sim.factors.view())?;
        }
    }
    let rows: Vec<Vec<String>> = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| vec![format!("rep_{i:03}"), s.to_string()])
        .collect();
    run.write_rows("seeds.csv", &["replication", "seed"], &rows)?;
    run.finish(ctx, "simulate", args)?;
    eprintln!("simulated {} panel(s) of {} x {} into {}", args.reps, spec.n, spec.p, args.out.display());
    Ok(())
}

fn tau_cv_rows(report: &TauCvReport) -> Vec<Vec<String>> {
    report
        .grid
        .values()
        .iter()
        .zip(&report.scores)
        .enumerate()
        .map(|(k, (t, s))| vec![fmt_f64(*t), fmt_f64(*s), u8::from(k == report.chosen).to_string()])
        .collect()
}

fn fit_summary(fit: &FavarFit, input: &Path) -> String {
    let (per_row, total) = sparsity_summary(fit.var.coef());
    let p = fit.truncated.p();
    let mut s = String::new();
    let mut line = |k: &str, v: String| s.push_str(&format!("{k:<18}{v}\n"));
    line("input", input.display().to_string());
    line("n", fit.truncated.n().to_string());
    line("p", p.to_string());
    line("d", fit.var.order().to_string());
    line("tau", fmt_f64(fit.tau()));
    line("tau_selection", if fit.tau_cv.is_some() { "cv" } else { "fixed" }.into());
    line("r", fit.r().to_string());
    if let Some(rep) = &fit.factor_report {
        let picks: Vec<String> = BaiNgCriterion::ALL
            .iter()
            .map(|c| format!("{}={}", c.name(), rep.chosen_by(*c)))
            .collect();
        line("r_selection", picks.join(" "));
    }
    line("lambda", fmt_f64(fit.var.lambda()));
    line("lambda_selection", if fit.lambda_cv.is_some() { "cv" } else { "fixed" }.into());
    line("nonzeros", format!("{total} of {}", p * p * fit.var.order()));
    line("max_row_nonzeros", per_row.iter().max().copied().unwrap_or(0).to_string());
    let iters = fit.var.iterations().iter().max().copied().unwrap_or(0);
    line("max_sweeps", iters.to_string());
    let gap = fit.var.kkt_gaps().iter().fold(0.0_f64, |m, g| m.max(*g));
    line("max_kkt_gap", format!("{gap:e}"));
    s
}

pub fn estimate(ctx: &Context, args: &EstimateArgs) -> Result<()> {
    let x = load_csv(&args.input, !args.no_header)?;
    let opts = args.model.fit_options(0)?;
    let f = fit(&x, &opts)?;
    let run = RunDir::create(&args.out)?;
    let names = x.names();

    for (l, block) in f.var.blocks().into_iter().enumerate() {
        run.write_matrix(&format!("A_{}.csv", l + 1), names, block)?;
    }
    let (per_row, _) = sparsity_summary(f.var.coef());
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(per_row.iter())
        .map(|(n, k)| vec![n.clone(), k.to_string()])
        .collect();
    run.write_rows("sparsity.csv", &["variable", "nonzeros"], &rows)?;

    if let Some(ff) = &f.factors {
        let cols = numbered("F", ff.r());
        run.write_matrix("loadings.csv", &cols, ff.loadings())?;
        run.write_matrix("factors.csv", &cols, ff.factors())?;
    }
    if let Some(rep) = &f.tau_cv {
        run.write_rows("tau_cv.csv", &["tau", "score", "chosen"], &tau_cv_rows(rep))?;
    }
    if let Some(rep) = &f.lambda_cv {
        let folds = numbered("fold_", rep.fold_scores.len());
        let mut header = vec!["lambda", "mean_mse"];
        header.extend(folds.iter().map(String::as_str));
        header.push("chosen");
        let rows: Vec<Vec<String>> = (0..rep.grid.len())
            .map(|k| {
                let mut r = vec![fmt_f64(rep.grid[k]), fmt_f64(rep.mean_scores[k])];
                r.extend(rep.fold_scores.iter().map(|f| fmt_f64(f[k])));
                r.push(u8::from(k == rep.chosen).to_string());
                r
            })
            .collect();
        run.write_rows("lambda_cv.csv", &header, &rows)?;
    }
    if let Some(rep) = &f.factor_report {
        let rows: Vec<Vec<String>> = (0..=rep.r_max)
            .map(|k| {
                let mut r = vec![k.to_string(), fmt_f64(rep.residual_variance[k])];
                r.extend(rep.criteria.iter().map(|c| fmt_f64(c[k])));
                r
            })
            .collect();
        run.write_rows("factor_ic.csv", &["k", "residual_variance", "icp1", "icp2", "icp3"], &rows)?;
    }
    let summary = fit_summary(&f, &args.input);
    run.write_text("summary.txt", &summary)?;
    run.finish(ctx, "estimate", args)?;
    print!("{summary}");
    Ok(())
}

fn origin_columns(run: &ForecastRun, values: ArrayView2<f64>) -> Vec<Vec<String>> {
    run.origins
        .iter()
        .zip(values.rows())
        .map(|(o, row)| {
            let mut r = vec![o.to_string(), (o + run.horizon).to_string()];
            r.extend(row.iter().map(|v| fmt_f64(*v)));
            r
        })
        .collect()
}

fn write_run(out: &RunDir, run: &ForecastRun, names: &[String], suffix: &str) -> Result<()> {
    let mut header = vec!["origin", "target"];
    header.extend(names.iter().map(String::as_str));
    out.write_rows(&format!("forecasts{suffix}.csv"), &header, &origin_columns(run, run.combined.view()))?;
    out.write_rows(&format!("common{suffix}.csv"), &header, &origin_columns(run, run.common.view()))?;
    out.write_rows(&format!("idio{suffix}.csv"), &header, &origin_columns(run, run.idio.view()))?;
    out.write_rows(&format!("fe{suffix}.csv"), &header, &origin_columns(run, run.abs_errors().view()))?;
    let params: Vec<Vec<String>> = run
        .origins
        .iter()
        .zip(run.taus.iter().zip(&run.lambdas))
        .map(|(o, (t, l))| vec![o.to_string(), fmt_f64(*t), fmt_f64(*l)])
        .collect();
    out.write_rows(&format!("params{suffix}.csv"), &["origin", "tau", "lambda"], &params)
}

pub fn forecast(ctx: &Context, args: &ForecastArgs) -> Result<()> {
    let x = load_csv(&args.input, !args.no_header)?;
    let mut fit_opts = args.model.fit_options(0)?;
    if args.fixed_tau {
        if let TauMode::Cv { .. } = fit_opts.tau {
            let first = x.slice_rows(0, args.window.min(x.n()))?;
            let (rule, _) = choose_rule(&first, fit_opts.tau, fit_opts.d)?;
            fit_opts.tau = TauMode::Fixed(rule.tau());
        }
    }
    let opts = RollingOptions {
        window: args.window,
        horizon: args.horizon,
        fit: fit_opts,
        reselect_r: args.reselect_r,
    };
    let main = rolling_forecast(&x, &opts)?;
    let baseline = if args.baseline {
        Some(rolling_forecast(&x, &opts.baseline())?)
    } else {
        None
    };

    let out = RunDir::create(&args.out)?;
    write_run(&out, &main, x.names(), "")?;
    let mut failures: Vec<Vec<String>> = main
        .failures
        .iter()
        .map(|f| vec!["truncated".into(), f.origin.to_string(), f.message.clone()])
        .collect();
    if let Some(b) = &baseline {
        write_run(&out, b, x.names(), "_baseline")?;
        failures.extend(
            b.failures
                .iter()
                .map(|f| vec!["baseline".into(), f.origin.to_string(), f.message.clone()]),
        );
    }
    out.write_rows("failures.csv", &["arm", "origin", "message"], &failures)?;
    out.finish(ctx, "forecast", args)?;
    eprintln!(
        "{} origin(s) forecast, {} failure(s); r = {}",
        main.origins.len(),
        failures.len(),
        main.r.map_or_else(|| "per window".to_string(), |r| r.to_string())
    );
    Ok(())
}

const KEY_COLUMNS: [&str; 3] = ["origin", "target", "replication"];

/// Error columns of two tables, aligned on `origin` when both carry it.
fn aligned_error_columns(a: &Table, b: &Table) -> Result<(Vec<String>, Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    let value_cols = |t: &Table| -> Vec<usize> {
        (0..t.header.len()).filter(|&k| !KEY_COLUMNS.contains(&t.header[k].as_str())).collect()
    };
    let (ca, cb) = (value_cols(a), value_cols(b));
    let names_a: Vec<String> = ca.iter().map(|&k| a.header[k].clone()).collect();
    let names_b: Vec<String> = cb.iter().map(|&k| b.header[k].clone()).collect();
    if names_a != names_b {
        return Err(Error::DimensionMismatch {
            expected: format!("columns {names_a:?}"),
            found: format!("{names_b:?}"),
        });
    }
    let (rows_a, rows_b): (Vec<usize>, Vec<usize>) = match (a.column_index("origin"), b.column_index("origin")) {
        (Some(oa), Some(ob)) => {
            let keys_b: BTreeSet<i64> = b.rows.iter().map(|r| r[ob] as i64).collect();
            let common: Vec<i64> = a
                .rows
                .iter()
                .map(|r| r[oa] as i64)
                .filter(|k| keys_b.contains(k))
                .collect();
            let find = |t: &Table, col: usize, k: i64| t.rows.iter().position(|r| r[col] as i64 == k).unwrap();
            (
                common.iter().map(|&k| find(a, oa, k)).collect(),
                common.iter().map(|&k| find(b, ob, k)).collect(),
            )
        }
        _ => {
            if a.rows.len() != b.rows.len() {
                return Err(Error::DimensionMismatch {
                    expected: format!("{} rows", a.rows.len()),
                    found: b.rows.len().to_string(),
                });
            }
            ((0..a.rows.len()).collect(), (0..b.rows.len()).collect())
        }
    };
    let pick = |t: &Table, cols: &[usize], rows: &[usize]| -> Vec<Vec<f64>> {
        cols.iter().map(|&c| rows.iter().map(|&r| t.rows[r][c]).collect()).collect()
    };
    Ok((names_a, pick(a, &ca, &rows_a), pick(b, &cb, &rows_b)))
}

fn table_row(label: &str, norm: &str, rep: &RmeReport) -> String {
    let label = if label.is_empty() { "-" } else { label };
    format!("{label:<24} {norm:<12} {:>7.3}  (n={})", rep.ratio, rep.count)
}

pub fn evaluate(ctx: &Context, args: &EvaluateArgs) -> Result<()> {
    let a = Table::read(&args.a)?;
    let b = Table::read(&args.b)?;
    let (names, cols_a, cols_b) = aligned_error_columns(&a, &b)?;
    match args.metric.as_str() {
        "rme" => {
            // A column named after the norm selects it; otherwise all error
            // columns are pooled.
            let (ea, eb): (Vec<f64>, Vec<f64>) = match names.iter().position(|n| *n == args.norm) {
                Some(k) => (cols_a[k].clone(), cols_b[k].clone()),
                None => {
                    args.norm.parse::<MatrixNorm>()?;
                    (cols_a.concat(), cols_b.concat())
                }
            };
            let rep = rme_report(&ea, &eb)?;
            let line = table_row(&args.label, &args.norm, &rep);
            println!("{line}");
            if let Some(out) = &args.out {
                let run = RunDir::create(out)?;
                let row = vec![
                    args.label.clone(),
                    args.norm.clone(),
                    fmt_f64(rep.numerator),
                    fmt_f64(rep.denominator),
                    fmt_f64(rep.ratio),
                    rep.count.to_string(),
                ];
                run.write_rows("rme.csv", &["label", "norm", "numerator", "denominator", "rme", "count"], &[row])?;
                run.write_text("rme.txt", &format!("{line}\n"))?;
                run.finish(ctx, "evaluate", args)?;
            }
            Ok(())
        }
        "fluctuation" => {
            let out = args
                .out
                .as_ref()
                .ok_or_else(|| Error::InvalidArgument("--metric fluctuation needs --out".into()))?;
            let run = RunDir::create(out)?;
            let mut paths: Vec<Option<Vec<f64>>> = Vec::new();
            let mut summary = Vec::new();
            let mut width = 0;
            for (k, name) in names.iter().enumerate() {
                match fluctuation_test(&cols_a[k], &cols_b[k], args.mu) {
                    Ok(res) => {
                        let peak = res.path.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
                        summary.push(vec![
                            name.clone(),
                            "ok".into(),
                            res.window.to_string(),
                            fmt_f64(res.sigma),
                            fmt_f64(peak),
                            fmt_f64(res.critical_value),
                            u8::from(res.any_reject()).to_string(),
                        ]);
                        if args.plot {
                            let title = format!("{name}: fluctuation statistic, mu = {}", args.mu);
                            run.write_text(
                                &format!("plots/{name}.svg"),
                                &fluctuation_svg(&title, &res.path, res.critical_value),
                            )?;
                        }
                        width = res.path.len();
                        paths.push(Some(res.path));
                    }
                    Err(e) => {
                        summary.push(vec![name.clone(), e.to_string(), String::new(), String::new(), String::new(), String::new(), String::new()]);
                        paths.push(None);
                    }
                }
            }
            let mut header = vec!["window_start"];
            header.extend(names.iter().map(String::as_str));
            let rows: Vec<Vec<String>> = (0..width)
                .map(|j| {
                    let mut r = vec![j.to_string()];
                    r.extend(paths.iter().map(|p| p.as_ref().map_or_else(String::new, |p| fmt_f64(p[j]))));
                    r
                })
                .collect();
            run.write_rows("fluctuation_paths.csv", &header, &rows)?;
            run.write_rows(
                "fluctuation_summary.csv",
                &["variable", "status", "window", "sigma", "max_abs", "critical_value", "reject"],
                &summary,
            )?;
            let rejected = summary.iter().filter(|r| r[6] == "1").count();
            run.finish(ctx, "evaluate", args)?;
            println!(
                "fluctuation test, mu = {}: {rejected} of {} variable(s) reject at 5%",
                args.mu,
                names.len()
            );
            Ok(())
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown metric {other:?}; expected rme or fluctuation"
        ))),
    }
}

pub fn cv_tau(ctx: &Context, args: &CvTauArgs) -> Result<()> {
    let x: PanelSeries = load_csv(&args.input, !args.no_header)?;
    let scales = mad_scales(&x)?;
    let grid = build_tau_grid(&x, &scales, args.grid_size)?;
    let report = trunc::cv_tau(&x, &scales, args.d, &grid)?;
    let run = RunDir::create(&args.out)?;
    run.write_rows("tau_cv.csv", &["tau", "score", "chosen"], &tau_cv_rows(&report))?;
    let sc: Vec<Vec<String>> = x
        .names()
        .iter()
        .zip(scales.as_slice())
        .map(|(n, s)| vec![n.clone(), fmt_f64(*s)])
        .collect();
    run.write_rows("scales.csv", &["variable", "mad"], &sc)?;
    run.finish(ctx, "cv-tau", args)?;
    println!("tau = {}", report.chosen_tau());
    Ok(())
}

const REPLICATIONS: &str = "replications.csv";
const FAILURES: &str = "failures.csv";

fn replication_header(norms: &[MatrixNorm]) -> Vec<String> {
    let mut h = vec!["replication".to_string(), "seed".into(), "tau".into()];
    h.extend(norms.iter().map(|n| format!("trunc_{}", n.name())));
    h.extend(norms.iter().map(|n| format!("plain_{}", n.name())));
    h
}

fn record_line(rec: &ReplicationRecord) -> String {
    let mut f = vec![rec.index.to_string(), rec.seed.to_string(), fmt_f64(rec.tau)];
    f.extend(rec.trunc.iter().map(|v| fmt_f64(*v)));
    f.extend(rec.plain.iter().map(|v| fmt_f64(*v)));
    f.join(",") + "\n"
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Completed records and failed indices already on disk.
fn load_progress(run: &RunDir, norms: &[MatrixNorm]) -> Result<(Vec<ReplicationRecord>, BTreeSet<usize>)> {
    let mut records = Vec::new();
    let path = run.path(REPLICATIONS);
    if path.exists() {
        let text = read_text(&path)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != replication_header(norms).join(",") {
            return Err(Error::InvalidArgument(format!(
                "{} has header {header:?}, which does not match the requested norms",
                path.display()
            )));
        }
        let k = norms.len();
        for (i, line) in lines.enumerate() {
            let parse_err = || Error::Parse {
                row: i + 1,
                column: 0,
                value: line.to_string(),
            };
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 + 2 * k {
                return Err(parse_err());
            }
            let nums = f[2..]
                .iter()
                .map(|v| v.parse::<f64>().map_err(|_| parse_err()))
                .collect::<Result<Vec<_>>>()?;
            records.push(ReplicationRecord {
                index: f[0].parse().map_err(|_| parse_err())?,
                seed: f[1].parse().map_err(|_| parse_err())?,
                tau: nums[0],
                trunc: nums[1..=k].to_vec(),
                plain: nums[k + 1..].to_vec(),
            });
        }
    } else {
        run.write_text(REPLICATIONS, &(replication_header(norms).join(",") + "\n"))?;
    }
    let mut failed = BTreeSet::new();
    let fpath = run.path(FAILURES);
    if fpath.exists() {
        let text = read_text(&fpath)?;
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            if let Some(i) = rec.get(0).and_then(|v| v.parse().ok()) {
                failed.insert(i);
            }
        }
    } else {
        run.write_text(FAILURES, "replication,seed,category,stage,message\n")?;
    }
    Ok((records, failed))
}

pub fn experiment(ctx: &Context, args: &ExperimentArgs) -> Result<()> {
    let dgp = load_dgp(&args.dgp)?;
    if args.reps == 0 {
        return Err(Error::InvalidArgument("--reps must be at least 1".into()));
    }
    let norms = args
        .norms
        .split(',')
        .map(|s| s.trim().parse::<MatrixNorm>())
        .collect::<Result<Vec<_>>>()?;
    let mut cfg = ExperimentConfig::standard(dgp.clone(), args.reps, args.seed);
    cfg.fit = args.model.fit_options(dgp.n_factors())?;
    cfg.norms = norms.clone();

    let run = RunDir::create(&args.out)?;
    // A resumed run must continue the same experiment.
    let snapshot = toml::to_string(args).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let cfg_path = run.path("config.toml");
    if cfg_path.exists() {
        let old: toml::Table = toml::from_str(&read_text(&cfg_path)?).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        let new: toml::Table = toml::from_str(&snapshot).expect("snapshot parses");
        let strip = |mut t: toml::Table| {
            t.remove("reps");
            t.remove("out");
            t
        };
        if strip(old) != strip(new) {
            return Err(Error::InvalidArgument(format!(
                "{} holds a different experiment; use a fresh --out",
                args.out.display()
            )));
        }
    }
    run.write_text("config.toml", &snapshot)?;
    run.write_text("dgp.toml", &dgp.to_toml())?;

    let (mut records, mut failed) = load_progress(&run, &norms)?;
    let done: BTreeSet<usize> = records.iter().map(|r| r.index).chain(failed.iter().copied()).collect();
    let todo: Vec<usize> = (0..args.reps).filter(|i| !done.contains(i)).collect();
    if !done.is_empty() {
        eprintln!("resuming: {} replication(s) already on disk", done.len());
    }
    let batch = (ctx.threads * 2).max(4);
    for chunk in todo.chunks(batch) {
        let results: Vec<(usize, Result<ReplicationRecord>)> =
            chunk.par_iter().map(|&i| (i, run_replication(&cfg, i))).collect();
        let mut ok = String::new();
        let mut bad = String::new();
        for (i, res) in results {
            match res {
                Ok(rec) => {
                    ok.push_str(&record_line(&rec));
                    records.push(rec);
                }
                Err(e) => {
                    let stage = e.stage().map_or_else(String::new, |s| s.to_string());
                    bad.push_str(&format!(
                        "{i},{},{},{stage},{}\n",
                        cfg.replication_seed(i),
                        e.category(),
                        csv_field(&e.to_string())
                    ));
                    failed.insert(i);
                }
            }
        }
        run.append_text(REPLICATIONS, &ok)?;
        run.append_text(FAILURES, &bad)?;
        eprintln!("{} / {} replications", records.len() + failed.len(), args.reps);
    }

    records.retain(|r| r.index < args.reps);
    records.sort_by_key(|r| r.index);
    if records.is_empty() {
        return Err(Error::InsufficientData {
            what: "successful replications",
            needed: 1,
            available: 0,
        });
    }
    let reports = summarise(&cfg, &records)?;

    let mut header = vec!["replication".to_string()];
    header.extend(norms.iter().map(|n| n.name().to_string()));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let errs = |pick: fn(&ReplicationRecord) -> &Vec<f64>| -> Vec<Vec<String>> {
        records
            .iter()
            .map(|r| {
                let mut row = vec![r.index.to_string()];
                row.extend(pick(r).iter().map(|v| fmt_f64(*v)));
                row
            })
            .collect()
    };
    run.write_rows("errors_trunc.csv", &header, &errs(|r| &r.trunc))?;
    run.write_rows("errors_plain.csv", &header, &errs(|r| &r.plain))?;

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|(n, r)| {
            vec![
                n.name().to_string(),
                fmt_f64(r.numerator),
                fmt_f64(r.denominator),
                fmt_f64(r.ratio),
                r.count.to_string(),
            ]
        })
        .collect();
    run.write_rows("rme.csv", &["norm", "numerator", "denominator", "rme", "count"], &rows)?;

    let label = format!("{:?}/{} ({},{})", dgp.var_design, dgp.innovation, dgp.n, dgp.p);
    let mut text = String::new();
    for (n, r) in &reports {
        text.push_str(&table_row(&label, n.name(), r));
        text.push('\n');
    }
    text.push_str(&format!("failed replications: {}\n", failed.iter().filter(|&&i| i < args.reps).count()));
    run.write_text("summary.txt", &text)?;
    run.finish(ctx, "experiment", args)?;
    print!("{text}");
    Ok(())
}

pub fn critical_values(_ctx: &Context, args: &CriticalValuesArgs) -> Result<()> {
    let mus: Vec<f64> = (1..=19).map(|k| k as f64 / 20.0).collect();
    let alphas = [0.10, 0.05, 0.01];
    let table = simulate_critical_values(&mus, &alphas, args.paths, args.steps, args.seed)?;
    let csv = table.to_csv();
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(&args.out, &csv).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    print!("{csv}");
    Ok(())
}
