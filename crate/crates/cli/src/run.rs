use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use ugat::reliability::{box_grid, joint_survival, hazard_component, reliability_report};
use ugat::{
    fit_mle, parse_count_csv, parse_count_vector, parse_real_list, CountVector, Dataset, ExponentMode, FitConfig,
    FitResult, SeriesAccuracy, Support, UgatParams,
};

use crate::args::{Cli, Command, EvalArgs, FitArgs, ReliabilityArgs, SampleArgs};
use crate::docs::*;
use crate::error::{CliError, CliResult};
use crate::model::Model;

/// Text for stdout plus the exit status.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub stdout: String,
    pub code: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Self { stdout, code: 0 }
    }
}

pub fn run(cli: &Cli) -> CliResult<Output> {
    let acc = SeriesAccuracy::new(cli.tol, cli.max_terms)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    match &cli.command {
        Command::Eval(a) => eval(cli, a, acc),
        Command::Fit(a) => fit(cli, a, acc),
        Command::Compare(a) => compare(cli, a, acc),
        Command::Sample(a) => sample(cli, a, acc),
        Command::Reliability(a) => reliability(cli, a, acc),
    }
}

fn to_json<T: Serialize>(cli: &Cli, input: Option<&[u8]>, result: &T) -> String {
    let doc = Document {
        manifest: RunManifest::new(cli, input),
        result,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("documents serialize");
    s.push('\n');
    s
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))
}

fn load_dataset(bytes: &[u8]) -> CliResult<Dataset> {
    let text = std::str::from_utf8(bytes).map_err(|_| CliError::Usage("input is not valid UTF-8".into()))?;
    Ok(parse_count_csv(text)?)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| format!("{v:.6}"))
}

fn eval(cli: &Cli, args: &EvalArgs, acc: SeriesAccuracy) -> CliResult<Output> {
    let model = args.model.build(acc)?;
    let result = match &model {
        Model::Ugat(p) => eval_ugat(p, &args.x)?,
        Model::Named(d) => {
            let points = args
                .x
                .iter()
                .map(|text| {
                    let x: u64 = text
                        .trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("--x {text:?} is not a nonnegative integer")))?;
                    let h = d.hazard(x)?;
                    Ok(NamedPoint {
                        x,
                        pmf: d.pmf(x)?,
                        cdf: d.cdf(x)?,
                        sf: d.sf(x)?,
                        hazard: h.is_finite().then_some(h),
                    })
                })
                .collect::<CliResult<Vec<_>>>()?;
            EvalResult::Named {
                name: d.name.to_owned(),
                support: if d.support_offset == 0 { Support::N0 } else { Support::N },
                alpha: d.base.alphas().as_slice()[0],
                beta: d.base.beta(),
                s: d.base.s(),
                mean: d.mean().ok(),
                points,
            }
        }
    };
    if cli.json {
        return Ok(Output::ok(to_json(cli, None, &result)));
    }
    let mut out = String::new();
    match &result {
        EvalResult::Ugat {
            alphas,
            beta,
            s,
            ln_normalizer,
            means,
            variances,
            points,
        } => {
            let _ = writeln!(out, "model ugat  alpha={alphas:?}  beta={beta}  s={s}  ln S={ln_normalizer:.10}");
            for (i, (m, v)) in means.iter().zip(variances).enumerate() {
                let _ = writeln!(out, "  X{}: mean {}  variance {}", i + 1, opt(*m), opt(*v));
            }
            let _ = writeln!(out, "{:<16} {:>14} {:>14} {:>14}  hazard", "x", "pmf", "cdf", "survival");
            for p in points {
                let _ = writeln!(
                    out,
                    "{:<16} {:>14.8e} {:>14} {:>14.8e}  {:?}",
                    format!("{:?}", p.x.as_slice()),
                    p.pmf,
                    p.cdf.map_or("-".into(), |c| format!("{c:.8e}")),
                    p.survival,
                    p.hazard
                );
            }
        }
        EvalResult::Named {
            name,
            support,
            alpha,
            beta,
            s,
            mean,
            points,
        } => {
            let _ = writeln!(
                out,
                "model {name} on {support:?}  (alpha={alpha}, beta={beta}, s={s})  mean {}",
                opt(*mean)
            );
            let _ = writeln!(out, "{:>8} {:>16} {:>16} {:>16} {:>16}", "x", "pmf", "cdf", "sf", "hazard");
            for p in points {
                let _ = writeln!(
                    out,
                    "{:>8} {:>16.10e} {:>16.10e} {:>16.10e} {:>16}",
                    p.x,
                    p.pmf,
                    p.cdf,
                    p.sf,
                    p.hazard.map_or("-".into(), |h| format!("{h:.10e}"))
                );
            }
        }
    }
    Ok(Output::ok(out))
}

fn eval_ugat(p: &UgatParams, xs: &[String]) -> CliResult<EvalResult> {
    let r = p.dim();
    let points = xs
        .iter()
        .map(|text| {
            let x = parse_count_vector(text)?;
            let cdf = match p.joint_cdf_exact(&x) {
                Ok(v) => Some(v),
                Err(ugat::Error::BoxTooLarge { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(UgatPoint {
                pmf: p.joint_pmf(&x)?,
                log_pmf: p.log_joint_pmf(&x)?,
                cdf,
                survival: joint_survival(p, &x)?,
                hazard: (0..r).map(|i| hazard_component(p, i, &x)).collect::<ugat::Result<_>>()?,
                marginal_pmf: (0..r)
                    .map(|i| p.marginal_pmf(i, x.as_slice()[i]))
                    .collect::<ugat::Result<_>>()?,
                x,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let means: Vec<Option<f64>> = (0..r).map(|i| p.raw_moment(i, 1).ok()).collect();
    let variances = (0..r)
        .map(|i| {
            let m = means[i]?;
            let f2 = p.factorial_moment(i, 2).ok()?;
            Some(f2 + m - m * m)
        })
        .collect();
    Ok(EvalResult::Ugat {
        alphas: p.alphas().as_slice().to_vec(),
        beta: p.beta(),
        s: p.s(),
        ln_normalizer: p.ln_normalizer(),
        means,
        variances,
        points,
    })
}

fn fit_config(cli: &Cli, args: &FitArgs, acc: SeriesAccuracy) -> CliResult<FitConfig> {
    let exponent = if args.estimate_s {
        ExponentMode::Free
    } else if let Some(s) = args.s {
        ExponentMode::Fixed(s)
    } else {
        ExponentMode::Grid(parse_real_list(&args.s_grid)?)
    };
    if args.multistart == 0 {
        return Err(CliError::Usage("--multistart must be at least 1".into()));
    }
    if args.gtol.is_nan() || args.gtol <= 0.0 {
        return Err(CliError::Usage("--gtol must be > 0".into()));
    }
    Ok(FitConfig {
        exponent,
        gtol: args.gtol,
        max_iter: args.max_iter,
        multistart: args.multistart,
        seed: cli.seed,
        accuracy: acc,
        ..FitConfig::default()
    })
}

fn render_fit(out: &mut String, fit: &FitResult) {
    let _ = writeln!(out, "{:<8} {:>14} {:>14} {:>30}", "param", "estimate", "std.error", "95% interval");
    for p in &fit.params {
        let upper = p.ci95.upper.map_or("inf".into(), |u| format!("{u:.6}"));
        let _ = writeln!(
            out,
            "{:<8} {:>14.6} {:>14} {:>30}",
            p.name,
            p.value,
            opt(p.std_error),
            format!("[{:.6}, {upper}]", p.ci95.lower)
        );
    }
    if !fit.params.iter().any(|p| p.name == "s") {
        let _ = writeln!(out, "{:<8} {:>14} (not estimated)", "s", fit.s);
    }
    let _ = writeln!(
        out,
        "-L {:.6}  AIC {:.6}  BIC {:.6}  p {}  N {}",
        fit.neg_log_likelihood, fit.aic, fit.bic, fit.n_params, fit.n_obs
    );
    let _ = writeln!(
        out,
        "converged {}  iterations {}  method {}  start {}",
        fit.converged, fit.iterations, fit.method, fit.start_index
    );
    for w in &fit.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    if fit.s_profile.len() > 1 {
        let _ = writeln!(out, "s profile:");
        for (s, nll) in &fit.s_profile {
            let _ = writeln!(out, "  s = {s:<6} -L = {nll:.6}");
        }
    }
}

fn fit(cli: &Cli, args: &FitArgs, acc: SeriesAccuracy) -> CliResult<Output> {
    let bytes = read_input(&args.csv)?;
    let data = load_dataset(&bytes)?;
    let cfg = fit_config(cli, args, acc)?;
    let result = fit_mle(&data.stats(), &cfg)?;
    let code = if result.converged { 0 } else { 2 };
    let stdout = if cli.json {
        to_json(cli, Some(&bytes), &result)
    } else {
        let mut out = format!("fit of {} rows x {} columns ({})\n", data.len(), data.dim(), data.columns.join(","));
        render_fit(&mut out, &result);
        out
    };
    Ok(Output { stdout, code })
}

fn compare(cli: &Cli, args: &FitArgs, acc: SeriesAccuracy) -> CliResult<Output> {
    let bytes = read_input(&args.csv)?;
    let data = load_dataset(&bytes)?;
    let st = data.stats();
    let cfg = fit_config(cli, args, acc)?;
    let ugat_fit = fit_mle(&st, &cfg)?;
    let geo_cfg = FitConfig {
        exponent: ExponentMode::Fixed(0.0),
        ..cfg.clone()
    };
    let geo = fit_mle(&st, &geo_cfg)?;
    let computed = |model: &str, f: &FitResult| CompareRow {
        model: model.to_owned(),
        parameters: f.n_params,
        neg_log_likelihood: f.neg_log_likelihood,
        aic: f.aic,
        bic: f.bic,
        source: "computed".to_owned(),
    };
    let reference = reference_table();
    let mut rows = vec![
        computed("UGAT (this fit)", &ugat_fit),
        computed("independent geometric (s = 0)", &geo),
    ];
    rows.extend(reference.rows.iter().map(|r| CompareRow {
        model: r.model.clone(),
        parameters: r.parameters,
        neg_log_likelihood: r.neg_log_likelihood,
        aic: r.aic,
        bic: r.bic,
        source: reference.label.clone(),
    }));
    let code = if ugat_fit.converged { 0 } else { 2 };
    let result = CompareResult { rows, fit: ugat_fit };
    if cli.json {
        return Ok(Output {
            stdout: to_json(cli, Some(&bytes), &result),
            code,
        });
    }
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<32} {:>10} {:>12} {:>12} {:>12}  source",
        "model", "parameters", "-L", "AIC", "BIC"
    );
    for r in &result.rows {
        let (l, a, b) = if r.source == "computed" {
            (
                format!("{:.3}", r.neg_log_likelihood),
                format!("{:.3}", r.aic),
                format!("{:.3}", r.bic),
            )
        } else {
            (r.neg_log_likelihood.to_string(), r.aic.to_string(), r.bic.to_string())
        };
        let _ = writeln!(out, "{:<32} {:>10} {:>12} {:>12} {:>12}  {}", r.model, r.parameters, l, a, b, r.source);
    }
    let _ = writeln!(out, "\nUGAT fit detail:");
    render_fit(&mut out, &result.fit);
    Ok(Output { stdout: out, code })
}

/// Header and rows of a sample as CSV text.
pub fn sample_csv(rows: &[CountVector], r: usize) -> (Vec<String>, String) {
    let columns: Vec<String> = (1..=r).map(|i| format!("x{i}")).collect();
    let mut text = columns.join(",");
    text.push('\n');
    for row in rows {
        let line: Vec<String> = row.as_slice().iter().map(u64::to_string).collect();
        text.push_str(&line.join(","));
        text.push('\n');
    }
    (columns, text)
}

fn sample(cli: &Cli, args: &SampleArgs, acc: SeriesAccuracy) -> CliResult<Output> {
    if args.n == 0 {
        return Err(CliError::Usage("--n must be at least 1".into()));
    }
    let model = args.model.build(acc)?;
    let offset = match &model {
        Model::Named(d) => d.support_offset,
        Model::Ugat(_) => 0,
    };
    let p = model.params();
    let rows: Vec<CountVector> = p
        .sample(args.n, cli.seed)
        .into_iter()
        .map(|x| CountVector::new(x.as_slice().iter().map(|v| v + offset).collect()))
        .collect();
    let (columns, text) = sample_csv(&rows, p.dim());
    let Some(path) = &args.out else {
        return Ok(Output::ok(text));
    };
    std::fs::write(path, &text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    let summary = SampleSummary {
        path: path.display().to_string(),
        rows: rows.len(),
        columns,
        sha256: sha256_hex(text.as_bytes()),
    };
    if cli.json {
        return Ok(Output::ok(to_json(cli, None, &summary)));
    }
    Ok(Output::ok(format!(
        "wrote {} rows to {} (sha256 {})\n",
        summary.rows, summary.path, summary.sha256
    )))
}

fn reliability(cli: &Cli, args: &ReliabilityArgs, acc: SeriesAccuracy) -> CliResult<Output> {
    let model = args.model.build(acc)?;
    let p = model.params();
    let grid = if args.points.is_empty() {
        box_grid(p.dim(), args.grid_max, args.grid_cap)?
    } else {
        if args.points.len() > args.grid_cap {
            return Err(ugat::Error::GridTooLarge {
                points: args.points.len(),
                cap: args.grid_cap,
            }
            .into());
        }
        args.points
            .iter()
            .map(|t| parse_count_vector(t))
            .collect::<ugat::Result<Vec<_>>>()?
    };
    let report = reliability_report(p, &grid)?;
    let result = ReliabilityResult {
        alphas: p.alphas().as_slice().to_vec(),
        beta: p.beta(),
        s: p.s(),
        support_offset: match &model {
            Model::Named(d) => d.support_offset,
            Model::Ugat(_) => 0,
        },
        report,
    };
    if cli.json {
        return Ok(Output::ok(to_json(cli, None, &result)));
    }
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:>14}  hazard / mmrl", "x", "survival");
    for pt in &result.report.points {
        let mmrl: Vec<String> = pt.mmrl.iter().map(|m| opt(*m)).collect();
        let _ = writeln!(
            out,
            "{:<16} {:>14.8e}  {:?} / [{}]",
            format!("{:?}", pt.x.as_slice()),
            pt.survival,
            pt.hazard,
            mmrl.join(", ")
        );
    }
    for c in &result.report.aging {
        let _ = writeln!(
            out,
            "{:<6} {:?}  (dual {}; gap range [{}, {}] over {} comparisons)",
            serde_json::to_value(c.class).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default(),
            c.verdict,
            c.class.dual_name(),
            opt(c.min_gap),
            opt(c.max_gap),
            c.comparisons
        );
    }
    Ok(Output::ok(out))
}
