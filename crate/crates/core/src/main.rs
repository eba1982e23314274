use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use ptess::analytics::{self, Rate, ScalingConfig, SeparationKind, VertexSide};
use ptess::cellgeom;
use ptess::codec::{self, Decoder, DistortionConfig};
use ptess::experiments::{self, Metric, SweepSpec};
use ptess::processes::{self, Model};
use ptess::specfun;
use ptess::stats::EstimateWithCI;

#[derive(Parser)]
#[command(name = "ptess", version, about = "Zero cells of hyperplane tessellations and their one-bit codes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dump one tessellation sample as JSON.
    Sample(Settings),
    /// Monte Carlo estimate of a metric next to its closed form.
    Estimate(Settings),
    /// Evaluate a named closed form.
    Analytic {
        /// Formula name; run with `list` to see them all.
        #[arg(id = "formula", value_name = "NAME")]
        name: Option<String>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Sweep dimensions along gamma_n = rho * n^alpha.
    Sweep(Settings),
    /// Grid, Manhattan and isotropic zero cells side by side.
    Compare(Settings),
    /// Encode and decode random points; one JSON line per trial.
    Codec(Settings),
    /// Facet frequency of beta-prime hulls against its closed form.
    FacetCheck(Settings),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OutFormat {
    Csv,
    Json,
}

/// Every flag can also come from `--config`; flags win over the file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
struct Settings {
    /// JSON file with any of these settings (kebab-case keys).
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// With --alpha, sets gamma = rho * n^alpha when --gamma is absent.
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    window_r: Option<f64>,
    #[arg(long, value_enum)]
    out: Option<OutFormat>,
    #[arg(long)]
    threads: Option<usize>,
    /// e.g. zero_volume, point_in_Z0:1, palm_max_distance:2,1
    #[arg(long)]
    metric: Option<String>,
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    #[arg(long)]
    decoder: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    /// Radius (R, r or a, depending on the formula).
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    hulls: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<u32>,
    #[arg(long)]
    x: Option<f64>,
    #[arg(long)]
    side: Option<String>,
    /// Separation law as name:value, e.g. contact:0.5.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long)]
    rate: Option<String>,
    #[arg(long)]
    name: Option<String>,
}

macro_rules! overlay {
    ($cli:expr, $file:expr, $($f:ident),*) => {
        Settings { config: None, $($f: $cli.$f.or($file.$f)),* }
    };
}

impl Settings {
    fn resolve(self) -> anyhow::Result<Settings> {
        let Some(path) = self.config.clone() else { return Ok(self) };
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let file: Settings = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(overlay!(
            self, file, n, gamma, rho, alpha, model, reps, seed, window_r, out, threads, metric, n_list, decoder,
            trials, m, sigma, r, hulls, lambda, k, x, side, kind, rate, name
        ))
    }

    fn n(&self) -> usize {
        self.n.unwrap_or(2)
    }

    fn model(&self) -> Model {
        self.model.unwrap_or(Model::IsotropicPoisson)
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    fn reps(&self) -> usize {
        self.reps.unwrap_or(1000)
    }

    fn out(&self) -> OutFormat {
        self.out.unwrap_or(OutFormat::Csv)
    }

    fn rho(&self) -> f64 {
        self.rho.unwrap_or(1.0)
    }

    fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(0.0)
    }

    fn gamma_for(&self, n: usize) -> f64 {
        self.gamma.unwrap_or_else(|| self.rho() * (n as f64).powf(self.alpha()))
    }

    fn gamma(&self) -> f64 {
        self.gamma_for(self.n())
    }

    fn metric(&self) -> anyhow::Result<Metric> {
        let s = self.metric.as_deref().context("--metric is required")?;
        Ok(s.parse()?)
    }

    fn scaling(&self) -> ScalingConfig {
        let d = ScalingConfig::default();
        ScalingConfig {
            rho: self.rho(),
            alpha: self.alpha(),
            lambda_exp: self.lambda.unwrap_or(d.lambda_exp),
            r: self.r.unwrap_or(d.r),
            sigma: self.sigma.unwrap_or(d.sigma),
            delta: self.x.unwrap_or(d.delta),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(v: &T) -> anyhow::Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

const EST_HEADER: [&str; 6] = ["mean", "std_err", "ci_lo", "ci_hi", "reps", "excluded_fraction"];

fn est_cells(e: &EstimateWithCI) -> Vec<String> {
    vec![
        e.mean.to_string(),
        opt(e.std_err),
        opt(e.ci95.map(|c| c.0)),
        opt(e.ci95.map(|c| c.1)),
        e.reps.to_string(),
        e.excluded_fraction.to_string(),
    ]
}

fn flag(b: Option<bool>) -> String {
    b.map(|b| b.to_string()).unwrap_or_default()
}

fn header(pre: &[&'static str], post: &[&'static str]) -> Vec<&'static str> {
    pre.iter().chain(EST_HEADER.iter()).chain(post).copied().collect()
}

/// Returns whether every oracle check passed.
fn run(command: Command) -> anyhow::Result<bool> {
    match command {
        Command::Sample(s) => {
            let s = s.resolve()?;
            let (n, gamma) = (s.n(), s.gamma());
            let w = s.window_r.unwrap_or_else(|| cellgeom::initial_window(n, gamma, 0.0));
            let ts = processes::sample_model(s.model(), n, gamma, w, s.seed())?;
            writeln!(io::stdout().lock(), "{}", ts.to_json())?;
            Ok(true)
        }
        Command::Estimate(s) => {
            let s = s.resolve()?;
            let r = experiments::estimate_report(s.metric()?, s.model(), s.n(), s.gamma(), s.reps(), s.seed())?;
            match s.out() {
                OutFormat::Json => write_json(&r)?,
                OutFormat::Csv => {
                    let mut row = vec![r.metric.clone(), r.model.name().into(), r.n.to_string(), r.gamma.to_string(), r.seed.to_string()];
                    row.extend(est_cells(&r.estimate));
                    row.extend([opt(r.oracle), opt(r.z_score), flag(r.within_3se), r.bias_noted.to_string()]);
                    let h = header(&["metric", "model", "n", "gamma", "seed"], &["oracle", "z_score", "within_3se", "bias_noted"]);
                    write_csv(&h, &[row])?;
                }
            }
            Ok(r.passed())
        }
        Command::Analytic { name, settings } => {
            let s = settings.resolve()?;
            let name = name.or_else(|| s.name.clone()).context("formula name required (try `list`)")?;
            write_json(&analytic(&name, &s)?)?;
            Ok(true)
        }
        Command::Sweep(s) => {
            let s = s.resolve()?;
            let spec = SweepSpec {
                model: s.model(),
                rho: s.rho(),
                alpha: s.alpha(),
                n_list: s.n_list.clone().context("--n-list is required")?,
                metric: s.metric()?,
                reps: s.reps.unwrap_or(0),
                master_seed: s.seed(),
            };
            let out = experiments::sweep(&spec)?;
            let passed = out.rows.iter().all(|r| r.within_3se != Some(false));
            match s.out() {
                OutFormat::Json => write_json(&out)?,
                OutFormat::Csv => {
                    let verdict = serde_json::to_value(out.verdict)?.as_str().unwrap_or_default().to_string();
                    let rows: Vec<Vec<String>> = out
                        .rows
                        .iter()
                        .map(|r| {
                            vec![
                                r.n.to_string(),
                                r.gamma.to_string(),
                                r.seed.to_string(),
                                opt(r.estimate.as_ref().map(|e| e.mean)),
                                opt(r.estimate.as_ref().and_then(|e| e.std_err)),
                                opt(r.analytic),
                                flag(r.within_3se),
                                opt(r.trend),
                                opt(r.prediction),
                                r.error.clone().unwrap_or_default(),
                                opt(out.kendall_tau),
                                verdict.clone(),
                            ]
                        })
                        .collect();
                    let h = ["n", "gamma", "seed", "mean", "std_err", "analytic", "within_3se", "trend", "prediction", "error", "kendall_tau", "verdict"];
                    write_csv(&h, &rows)?;
                }
            }
            Ok(passed)
        }
        Command::Compare(s) => {
            let s = s.resolve()?;
            let rows = experiments::compare_models(s.n(), s.gamma(), s.reps(), s.seed())?;
            match s.out() {
                OutFormat::Json => write_json(&rows)?,
                OutFormat::Csv => {
                    let mut out = Vec::new();
                    for r in &rows {
                        let ub = r.upper_bound_style;
                        for (quantity, est, reference, ub) in [
                            ("zero_cell_volume", &r.volume, Some(r.volume_analytic), false),
                            ("separation", &r.separation, r.separation_analytic, false),
                            ("rms_uniform_norm", &r.rms_uniform_norm, Some(r.rms_uniform_norm_table), ub),
                            ("rms_r_max", &r.rms_r_max, Some(r.rms_r_max_table), ub),
                        ] {
                            let mut row = vec![r.model.name().to_string(), quantity.to_string()];
                            row.extend(est_cells(est));
                            row.extend([opt(reference), ub.to_string()]);
                            out.push(row);
                        }
                    }
                    write_csv(&header(&["model", "quantity"], &["reference", "upper_bound_style"]), &out)?;
                }
            }
            Ok(rows.iter().all(|r| r.passed()))
        }
        Command::Codec(s) => {
            let s = s.resolve()?;
            let decoder: Decoder = s.decoder.as_deref().unwrap_or("chebyshev").parse()?;
            let trials = s.trials.or(s.reps).unwrap_or(100);
            let mut cfg = DistortionConfig::new(s.model(), s.n(), s.gamma(), decoder, trials, s.seed());
            cfg.far_radius = s.r;
            let records = codec::distortion_trials(&cfg)?;
            let mut out = io::stdout().lock();
            match s.out.unwrap_or(OutFormat::Json) {
                OutFormat::Json => {
                    for (i, rec) in records.iter().enumerate() {
                        let line = match rec {
                            Some(t) => json!({"trial": i, "x": t.x, "code_hash": t.code_hash, "x_hat": t.x_hat, "distortion": t.distortion}),
                            None => json!({"trial": i, "excluded": true}),
                        };
                        writeln!(out, "{line}")?;
                    }
                }
                OutFormat::Csv => {
                    let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(" ");
                    let mut w = csv::Writer::from_writer(&mut out);
                    w.write_record(["trial", "x", "code_hash", "x_hat", "distortion"])?;
                    for (i, rec) in records.iter().enumerate() {
                        match rec {
                            Some(t) => w.write_record([i.to_string(), join(&t.x), t.code_hash.clone(), join(&t.x_hat), t.distortion.to_string()])?,
                            None => w.write_record([i.to_string(), String::new(), String::new(), String::new(), String::new()])?,
                        }
                    }
                    w.flush()?;
                }
            }
            drop(out);
            let report = codec::summarize_trials(&cfg, &records)?;
            eprintln!(
                "median distortion {} (95% CI {:?}), mean {} ± {}, fixed-point violations {}",
                report.median,
                report.median_ci95,
                report.mean.mean,
                opt(report.mean.std_err),
                report.fixed_point_violations
            );
            Ok(report.fixed_point_violations == 0)
        }
        Command::FacetCheck(s) => {
            let s = s.resolve()?;
            let hulls = s.hulls.or(s.reps).unwrap_or(10_000);
            let r = experiments::facet_check(
                s.n(),
                s.m.context("--m is required")?,
                s.sigma.unwrap_or(1.0),
                s.r.unwrap_or(f64::INFINITY),
                hulls,
                s.seed(),
            )?;
            match s.out() {
                OutFormat::Json => write_json(&r)?,
                OutFormat::Csv => {
                    let mut row = vec![r.n.to_string(), r.m.to_string(), r.sigma.to_string(), r.r.to_string(), r.subsets_per_hull.to_string()];
                    row.extend(est_cells(&r.frequency));
                    row.extend([r.analytic.to_string(), flag(r.within_3se), r.degenerate_resampled.to_string()]);
                    let h = header(&["n", "m", "sigma", "r", "subsets_per_hull"], &["analytic", "within_3se", "degenerate_resampled"]);
                    write_csv(&h, &[row])?;
                }
            }
            Ok(r.within_3se != Some(false))
        }
    }
}

const FORMULAS: &[&str] = &[
    "log_kappa",
    "log_omega",
    "mean_chord_coeff",
    "reg_gamma_upper",
    "reg_gamma_lower",
    "zero_cell_volume",
    "zero_cell_moment_bounds",
    "zero_cell_variance_bracket",
    "cell_intensity",
    "typical_cell_volume",
    "separation",
    "gaussian_separation",
    "gaussian_separation_limit",
    "expected_vertices",
    "facet_probability",
    "sigma_to_gamma",
    "rho_thresholds",
    "rate",
    "poisson_rho_star",
    "farthest_point_rho_u",
    "poisson_data_expectations",
    "comparison_table",
    "section_expectations",
    "section_moment_bounds",
];

fn analytic(name: &str, s: &Settings) -> anyhow::Result<Value> {
    let n = s.n();
    let gamma = s.gamma();
    let need = |v: Option<f64>, flag: &str| v.with_context(|| format!("{name} needs --{flag}"));
    let scalar = |params: Value, v: f64| json!({"name": name, "params": params, "value": v, "log_value": v.ln()});
    let logv = |params: Value, v: specfun::LogValue| {
        json!({"name": name, "params": params, "value": v.value(), "log_value": v.ln()})
    };
    let pair = |params: Value, lo: specfun::LogValue, hi: specfun::LogValue| {
        json!({"name": name, "params": params, "value": [lo.value(), hi.value()], "log_value": [lo.ln(), hi.ln()]})
    };
    let other = |params: Value, v: Value| json!({"name": name, "params": params, "value": v, "log_value": null});
    Ok(match name {
        "list" => json!(FORMULAS),
        "log_kappa" => {
            let v = specfun::log_kappa(n as u64)?;
            json!({"name": name, "params": {"n": n}, "value": v.exp(), "log_value": v})
        }
        "log_omega" => {
            let v = specfun::log_omega(n as u64)?;
            json!({"name": name, "params": {"n": n}, "value": v.exp(), "log_value": v})
        }
        "mean_chord_coeff" => scalar(json!({"n": n, "gamma": gamma}), specfun::mean_chord_coeff(n as u64, gamma)?),
        "reg_gamma_upper" | "reg_gamma_lower" => {
            let (x, r) = (need(s.x, "x")?, need(s.r, "r")?);
            let v = if name == "reg_gamma_upper" { specfun::reg_gamma_upper(x, r)? } else { specfun::reg_gamma_lower(x, r)? };
            scalar(json!({"x": x, "r": r}), v)
        }
        "zero_cell_volume" => logv(json!({"n": n, "gamma": gamma}), analytics::expected_zero_cell_volume(n, gamma)?),
        "zero_cell_moment_bounds" => {
            let k = s.k.unwrap_or(2);
            let (lo, hi) = analytics::zero_cell_moment_bounds(n, gamma, k)?;
            pair(json!({"n": n, "gamma": gamma, "k": k}), lo, hi)
        }
        "zero_cell_variance_bracket" => {
            logv(json!({"n": n, "gamma": gamma}), analytics::zero_cell_variance_bracket(n, gamma)?)
        }
        "cell_intensity" => logv(json!({"n": n, "gamma": gamma}), analytics::cell_intensity(n, gamma)?),
        "typical_cell_volume" => logv(json!({"n": n, "gamma": gamma}), analytics::expected_typical_cell_volume(n, gamma)?),
        "separation" => {
            let kind: SeparationKind = s.kind.as_deref().context("separation needs --kind name:value")?.parse()?;
            scalar(json!({"n": n, "gamma": gamma, "kind": kind}), analytics::separation_probability(n, gamma, kind)?)
        }
        "gaussian_separation" => {
            let sigma = s.sigma.unwrap_or(1.0);
            scalar(json!({"n": n, "gamma": gamma, "sigma": sigma}), analytics::gaussian_separation(n, gamma, sigma)?)
        }
        "gaussian_separation_limit" => {
            let sigma = s.sigma.unwrap_or(1.0);
            scalar(json!({"rho": s.rho(), "sigma": sigma}), analytics::gaussian_separation_limit(s.rho(), sigma))
        }
        "expected_vertices" => {
            let r = s.r.unwrap_or(0.0);
            let side: VertexSide = s.side.as_deref().unwrap_or("beyond").parse()?;
            let ln = analytics::ln_expected_vertices(n, gamma, r, side)?;
            json!({"name": name, "params": {"n": n, "gamma": gamma, "r": r, "side": side}, "value": ln.exp(), "log_value": ln})
        }
        "facet_probability" => {
            let (m, sigma, r) = (s.m.context("needs --m")?, s.sigma.unwrap_or(1.0), s.r.unwrap_or(f64::INFINITY));
            scalar(json!({"n": n, "m": m, "sigma": sigma, "r": r.to_string()}), analytics::facet_probability(n, m, sigma, r)?)
        }
        "sigma_to_gamma" => {
            let sigma = s.sigma.unwrap_or(1.0);
            scalar(json!({"n": n, "sigma": sigma}), analytics::sigma_to_gamma(n, sigma)?)
        }
        "rho_thresholds" => {
            let r = s.r.unwrap_or(1.0);
            other(json!({"r": r}), serde_json::to_value(analytics::rho_thresholds(r)?)?)
        }
        "rate" => {
            let which: Rate = s.rate.as_deref().context("rate needs --rate")?.parse()?;
            let cfg = s.scaling();
            cfg.validate()?;
            let v = analytics::rate_function(&cfg, which);
            json!({"name": name, "params": {"rate": which, "scaling": cfg}, "value": v, "log_value": null})
        }
        "poisson_rho_star" => {
            let l = s.lambda.unwrap_or(0.0);
            scalar(json!({"lambda": l}), analytics::poisson_rho_star(l))
        }
        "farthest_point_rho_u" => {
            let (r, l) = (s.r.unwrap_or(1.0), s.lambda.unwrap_or(0.0));
            scalar(json!({"r": r, "lambda": l}), analytics::farthest_point_rho_u(r, l)?)
        }
        "poisson_data_expectations" => {
            let (l, r) = (s.lambda.unwrap_or(1.0), s.r.unwrap_or(1.0));
            let e = analytics::poisson_data_expectations(n, gamma, l.ln(), r)?;
            other(json!({"n": n, "gamma": gamma, "lambda": l, "r": r}), serde_json::to_value(e)?)
        }
        "comparison_table" => {
            other(json!({"n": n, "gamma": gamma, "model": s.model()}), serde_json::to_value(analytics::comparison_table(n, gamma, s.model())?)?)
        }
        "section_expectations" => {
            let m = s.m.context("needs --m")?;
            let e = analytics::section_expectations(n, m, gamma)?;
            json!({"name": name, "params": {"n": n, "m": m, "gamma": gamma}, "value": e, "log_value": e.expected_volume.ln()})
        }
        "section_moment_bounds" => {
            let (m, k) = (s.m.context("needs --m")?, s.k.unwrap_or(2));
            let (lo, hi) = analytics::section_moment_bounds(n, m, gamma, k)?;
            pair(json!({"n": n, "m": m, "gamma": gamma, "k": k}), lo, hi)
        }
        _ => bail!("unknown formula `{name}`; run `ptess analytic list`"),
    })
}

/// A closed stdout (e.g. piping into `head`) is not an error.
fn broken_pipe(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        let io_err = c.downcast_ref::<io::Error>().or_else(|| match c.downcast_ref::<csv::Error>()?.kind() {
            csv::ErrorKind::Io(e) => Some(e),
            _ => None,
        });
        let json_kind = c.downcast_ref::<serde_json::Error>().and_then(serde_json::Error::io_error_kind);
        io_err.map(io::Error::kind).or(json_kind) == Some(io::ErrorKind::BrokenPipe)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = match &cli.command {
        Command::Sample(s)
        | Command::Estimate(s)
        | Command::Sweep(s)
        | Command::Compare(s)
        | Command::Codec(s)
        | Command::FacetCheck(s)
        | Command::Analytic { settings: s, .. } => s.clone().resolve().ok().and_then(|s| s.threads),
    };
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("oracle check failed");
            ExitCode::from(1)
        }
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::Cli;

    #[test]
    fn argument_definitions_are_consistent() {
        Cli::command().debug_assert();
    }
}
