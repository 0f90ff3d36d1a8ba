use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use ouexact::calibration::{calibrate, CalibrationProblem, ModelTemplate, NelderMeadConfig, OptionQuote, MIN_TRIALS};
use ouexact::cftp::sample_exact_composite;
use ouexact::ggc::{dirichlet_mean_moments, BaseLaw, DirichletMeanSpec, KernelKind, ScaleVariable};
use ouexact::mc;
use ouexact::model::{
    calibrated, sample_path, sample_transition_with_coupling, unit_gl, unit_ou_gamma, LeverageCoupling, ModelSpec,
    Sampler, Variant,
};
use ouexact::pricing::{
    price_european, price_forward_start, Estimator, EuropeanCall, ForwardStartOption, McConfig, MonteCarloResult,
};
use ouexact::stats::Moments;
use ouexact::truncation::{sample_truncated, TruncationRule};
use ouexact::validation::{resolve_suite, run_criteria, ValidationConfig};
use ouexact::RandomStream;

use crate::error::{usage, CliError, CliResult};
use crate::output::{headers, metadata, num, write_csv, write_json};
use crate::{
    CalibrateArgs, Cli, Command, CouplingArg, DmeanArgs, DmeanSampler, Format, GlobalArgs, KernelArg, ModelArgs,
    PathsArgs, Payoff, Preset, PriceArgs, ReturnsArgs, SamplerArg, SamplerArgs, ValidateArgs, VariantArg,
};

pub fn run(cli: Cli) -> CliResult<()> {
    let g = &cli.global;
    if g.threads == Some(0) {
        return Err(usage("--threads must be at least 1"));
    }
    if g.trials == Some(0) {
        return Err(usage("--trials must be at least 1"));
    }
    let started = Instant::now();
    let result = mc::with_threads(g.threads, || match &cli.command {
        Command::Dmean(a) => dmean(g, a),
        Command::Returns(a) => returns(g, a),
        Command::Price(a) => price(g, a),
        Command::Paths(a) => paths(g, a),
        Command::Calibrate(a) => calibrate_cmd(g, a),
        Command::Validate(a) => validate(g, a),
    })?;
    metadata(started.elapsed().as_secs_f64());
    result
}

fn trials(g: &GlobalArgs, default: u64) -> u64 {
    g.trials.unwrap_or(default)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn sampler(a: &SamplerArgs) -> CliResult<Sampler> {
    Ok(match a.sampler {
        SamplerArg::Exact => Sampler::Exact,
        SamplerArg::Fixed => {
            if a.n == 0 {
                return Err(usage("--n must be at least 1"));
            }
            Sampler::Truncated(TruncationRule::FixedN { n: a.n })
        }
        SamplerArg::Stopping => Sampler::Truncated(TruncationRule::default()),
    })
}

fn model(a: &ModelArgs) -> CliResult<ModelSpec> {
    let mut m = match &a.model {
        Some(path) => read_json::<ModelSpec>(path)?,
        None => match a.preset {
            Preset::UnitOuGamma => unit_ou_gamma(0.0),
            Preset::UnitGl => unit_gl(a.alpha, a.beta, 0.0),
            Preset::CalibratedOuGamma1 => calibrated(Variant::OuGamma, 1),
            Preset::CalibratedOuGamma2 => calibrated(Variant::OuGamma, 2),
            Preset::CalibratedGl1 => calibrated(Variant::GlOuGgc, 1),
            Preset::CalibratedGl2 => calibrated(Variant::GlOuGgc, 2),
        },
    };
    if let Some(rho) = a.rho {
        m.rho = rho;
    }
    if let Some(theta) = a.theta {
        m.theta = theta;
    }
    if let Some(r) = a.r {
        m.r = r;
    }
    if let Some(q) = a.q {
        m.q = q;
    }
    m.validate()?;
    Ok(m)
}

fn positive(name: &str, x: f64) -> CliResult<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(usage(format!("{name} must be positive and finite, got {x}")))
    }
}

#[derive(Serialize)]
struct DmeanRow {
    delta: f64,
    trials: u64,
    mean: f64,
    mean_std_error: f64,
    variance: f64,
    exact_mean: f64,
    exact_variance: f64,
    /// Average CFTP stack size, or average stick count for truncation.
    average_cost: f64,
    cost: &'static str,
}

fn dmean(g: &GlobalArgs, a: &DmeanArgs) -> CliResult<()> {
    for &d in &a.delta {
        positive("--delta", d)?;
    }
    positive("--lambda", a.lambda)?;
    positive("--horizon", a.horizon)?;
    positive("--c", a.c)?;
    let scale = if a.constant {
        ScaleVariable::Constant { c: a.c }
    } else {
        positive("--a", a.a)?;
        positive("--b", a.b)?;
        ScaleVariable::ScaledBeta { c: a.c, a: a.a, b: a.b }
    };
    let kernel = match a.kernel {
        KernelArg::Unit => KernelKind::Unit,
        KernelArg::Decay => KernelKind::Decay,
        KernelArg::OneMinusDecay => KernelKind::OneMinusDecay,
    };
    let rule = match a.sampler {
        DmeanSampler::Cftp => None,
        DmeanSampler::Fixed => Some(TruncationRule::FixedN { n: a.n }),
        DmeanSampler::Stopping => Some(TruncationRule::StoppingBounded { epsilon: a.epsilon }),
    };
    if let Some(rule) = &rule {
        rule.validate().map_err(|e| usage(e.to_string()))?;
    }
    let n = trials(g, 100_000);
    let mut rows = Vec::new();
    for (i, &delta) in a.delta.iter().enumerate() {
        let spec = DirichletMeanSpec::new(delta, kernel, a.lambda, a.horizon, scale).map_err(|e| usage(e.to_string()))?;
        if rule.is_none() && spec.is_degenerate() {
            return Err(usage("the exact sampler needs a non-degenerate base law"));
        }
        let root = RandomStream::with_stream(g.seed, i as u64);
        let m = mc::simulate(n, &root, 2, |s, out| {
            let (value, cost) = match &rule {
                None => {
                    let (v, st) = sample_exact_composite(&spec, s)?;
                    (v, st.stack_size)
                }
                Some(rule) => sample_truncated(&spec, rule, s)?,
            };
            out[0] = value;
            out[1] = cost as f64;
            Ok(())
        })?;
        let (exact_mean, exact_variance) = dirichlet_mean_moments(&spec, delta);
        rows.push(DmeanRow {
            delta,
            trials: n,
            mean: m[0].mean,
            mean_std_error: m[0].std_error(),
            variance: m[0].variance(),
            exact_mean,
            exact_variance,
            average_cost: m[1].mean,
            cost: if rule.is_none() { "stack_size" } else { "stick_count" },
        });
    }
    match g.format {
        Format::Json => write_json(g.out.as_deref(), &serde_json::json!({ "seed": g.seed, "rows": rows })),
        Format::Csv => {
            let header = headers(&[
                "delta", "trials", "mean", "mean_std_error", "variance", "exact_mean", "exact_variance",
                "average_cost", "cost",
            ]);
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        num(r.delta),
                        r.trials.to_string(),
                        num(r.mean),
                        num(r.mean_std_error),
                        num(r.variance),
                        num(r.exact_mean),
                        num(r.exact_variance),
                        num(r.average_cost),
                        r.cost.to_string(),
                    ]
                })
                .collect();
            write_csv(g.out.as_deref(), &header, &body)
        }
    }
}

#[derive(Serialize)]
struct ReturnsReport<'a> {
    model: &'a ModelSpec,
    dt: f64,
    sampler: Sampler,
    coupling: LeverageCoupling,
    seed: u64,
    trials: u64,
    mean: f64,
    mean_std_error: f64,
    sd: f64,
    skewness: f64,
    kurtosis: f64,
}

fn returns(g: &GlobalArgs, a: &ReturnsArgs) -> CliResult<()> {
    let m = model(&a.model)?;
    let smp = sampler(&a.sampler)?;
    positive("--dt", a.dt)?;
    if a.histogram.is_some() && a.bins == 0 {
        return Err(usage("--bins must be at least 1"));
    }
    let coupling = match a.coupling {
        CouplingArg::Shared => LeverageCoupling::Shared,
        CouplingArg::Independent => LeverageCoupling::Independent,
    };
    let n = trials(g, 100_000);
    let root = RandomStream::new(g.seed);
    let draw = |s: &mut RandomStream| -> ouexact::Result<f64> {
        Ok(sample_transition_with_coupling(&m, 1.0, a.dt, s, &smp, coupling)?.1.log_return)
    };
    let mom = mc::simulate(n, &root, 1, |s, out| {
        out[0] = draw(s)?;
        Ok(())
    })?;
    let mom: &Moments = &mom[0];
    if let Some(path) = &a.histogram {
        let xs = mc::collect(n, &root, draw)?;
        write_histogram(path, &xs, a.bins)?;
    }
    let report = ReturnsReport {
        model: &m,
        dt: a.dt,
        sampler: smp,
        coupling,
        seed: g.seed,
        trials: n,
        mean: mom.mean,
        mean_std_error: mom.std_error(),
        sd: mom.std_dev(),
        skewness: mom.skewness(),
        kurtosis: mom.excess_kurtosis() + 3.0,
    };
    match g.format {
        Format::Json => write_json(g.out.as_deref(), &report),
        Format::Csv => write_csv(
            g.out.as_deref(),
            &headers(&["trials", "mean", "mean_std_error", "sd", "skewness", "kurtosis"]),
            &[vec![
                n.to_string(),
                num(report.mean),
                num(report.mean_std_error),
                num(report.sd),
                num(report.skewness),
                num(report.kurtosis),
            ]],
        ),
    }
}

fn write_histogram(path: &Path, xs: &[f64], bins: usize) -> CliResult<()> {
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0u64; bins];
    for &x in xs {
        let k = (((x - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let total = xs.len() as f64;
    let rows: Vec<Vec<String>> = counts
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let left = lo + k as f64 * width;
            vec![num(left), num(left + width), c.to_string(), num(c as f64 / (total * width))]
        })
        .collect();
    write_csv(Some(path), &headers(&["bin_lo", "bin_hi", "count", "density"]), &rows)
}

#[derive(Serialize)]
#[serde(tag = "payoff", rename_all = "snake_case")]
enum OptionEcho {
    European(EuropeanCall),
    ForwardStart(ForwardStartOption),
}

#[derive(Serialize)]
struct PriceReport<'a> {
    option: OptionEcho,
    s0: f64,
    model_echo: &'a ModelSpec,
    sampler: Sampler,
    seed: u64,
    results: Vec<MonteCarloResult>,
}

fn price(g: &GlobalArgs, a: &PriceArgs) -> CliResult<()> {
    let m = model(&a.model)?;
    let smp = sampler(&a.sampler)?;
    positive("--s0", a.s0)?;
    let cfg = McConfig::new(trials(g, 100_000), g.seed).with_sampler(smp);
    let (option, results) = match a.payoff {
        Payoff::European => {
            let opt = EuropeanCall { strike: a.strike, maturity: a.maturity };
            opt.validate()?;
            let r = [Estimator::Psp, Estimator::Fsp]
                .into_iter()
                .map(|e| price_european(&m, a.s0, &opt, &cfg, e))
                .collect::<ouexact::Result<Vec<_>>>()?;
            (OptionEcho::European(opt), r)
        }
        Payoff::ForwardStart => {
            let opt = ForwardStartOption { k: a.k, t1: a.t1, t2: a.t2 };
            opt.validate()?;
            let r = [Estimator::Psp, Estimator::Fsp]
                .into_iter()
                .map(|e| price_forward_start(&m, a.s0, &opt, &cfg, e))
                .collect::<ouexact::Result<Vec<_>>>()?;
            (OptionEcho::ForwardStart(opt), r)
        }
    };
    let report = PriceReport { option, s0: a.s0, model_echo: &m, sampler: smp, seed: g.seed, results };
    match g.format {
        Format::Json => write_json(g.out.as_deref(), &report),
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .results
                .iter()
                .map(|r| {
                    let est = match r.estimator {
                        Estimator::Psp => "PSP",
                        Estimator::Fsp => "FSP",
                    };
                    vec![est.to_string(), num(r.estimate), num(r.std_error), r.trials.to_string()]
                })
                .collect();
            write_csv(g.out.as_deref(), &headers(&["estimator", "estimate", "std_error", "trials"]), &rows)
        }
    }
}

fn paths(g: &GlobalArgs, a: &PathsArgs) -> CliResult<()> {
    let m = model(&a.model)?;
    let smp = sampler(&a.sampler)?;
    positive("--s0", a.s0)?;
    let mut prev = 0.0;
    for &t in &a.times {
        if !(t > prev && t.is_finite()) {
            return Err(usage("--times must be positive and strictly increasing"));
        }
        prev = t;
    }
    let n = trials(g, 10);
    let root = RandomStream::new(g.seed);
    let l = m.factors.len();
    let all = mc::collect(n, &root, |s| sample_path(&m, a.s0, &a.times, s, &smp))?;
    let mut rows = Vec::with_capacity(all.len() * a.times.len());
    for (id, path) in all.iter().enumerate() {
        for p in path {
            let mut row = vec![id.to_string(), num(p.time), num(p.price), num(p.draw.tau), num(p.draw.lev)];
            match p.draw.v_end() {
                Some(v) => row.extend(v.iter().map(|x| num(*x))),
                None => row.extend(std::iter::repeat_n(String::new(), l)),
            }
            rows.push(row);
        }
    }
    let mut header = headers(&["path_id", "time", "price", "tau", "lev"]);
    header.extend((1..=l).map(|j| format!("v_{j}")));
    write_csv(g.out.as_deref(), &header, &rows)
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct QuoteRow {
    strike: f64,
    maturity_years: f64,
    price: f64,
}

fn read_quotes(path: &Path) -> CliResult<Vec<OptionQuote>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in rdr.deserialize::<QuoteRow>() {
        let r = row?;
        out.push(OptionQuote { strike: r.strike, maturity_years: r.maturity_years, market_price: r.price });
    }
    Ok(out)
}

fn calibrate_cmd(g: &GlobalArgs, a: &CalibrateArgs) -> CliResult<()> {
    if a.factors == 0 || a.factors > 2 {
        return Err(usage("--factors must be 1 or 2"));
    }
    let variant = match a.variant {
        VariantArg::OuGamma => Variant::OuGamma,
        VariantArg::GlOuGgc => Variant::GlOuGgc,
    };
    let problem = CalibrationProblem {
        quotes: read_quotes(&a.quotes)?,
        s0: a.s0,
        r: a.r,
        q: a.q,
        template: ModelTemplate { variant, factors: a.factors, jump_free: a.jump_free },
        trials: trials(g, MIN_TRIALS),
        seed: g.seed,
        threads: None,
    };
    problem.validate()?;
    let start = match &a.start {
        Some(p) => read_json::<ModelSpec>(p)?,
        None => {
            let mut m = calibrated(variant, a.factors);
            if a.jump_free {
                m.theta = 0.0;
            }
            m
        }
    };
    let nm = NelderMeadConfig { max_iter: a.max_iter, tol: a.tol, ..NelderMeadConfig::default() };
    let fit = calibrate(&problem, &start, &nm)?;
    match g.format {
        Format::Json => write_json(g.out.as_deref(), &fit),
        Format::Csv => {
            let f = &fit.fitted;
            let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
            write_csv(
                g.out.as_deref(),
                &headers(&[
                    "rho", "theta", "c", "alpha", "beta", "v0_1", "lambda_1", "v0_2", "lambda_2", "mse", "noise_floor",
                    "iterations", "converged",
                ]),
                &[vec![
                    num(f.rho),
                    num(f.theta),
                    num(f.c),
                    opt(f.alpha),
                    opt(f.beta),
                    num(f.v0_1),
                    num(f.lambda_1),
                    opt(f.v0_2),
                    opt(f.lambda_2),
                    num(fit.mse),
                    num(fit.noise_floor),
                    fit.iterations.to_string(),
                    fit.converged.to_string(),
                ]],
            )
        }
    }
}

fn validate(g: &GlobalArgs, a: &ValidateArgs) -> CliResult<()> {
    let ids = resolve_suite(&a.suite).ok_or_else(|| usage(format!("unknown suite {:?}", a.suite)))?;
    positive("--trial-scale", a.trial_scale)?;
    let cfg = ValidationConfig { seed: g.seed, threads: None, trial_scale: a.trial_scale };
    let reports = run_criteria(&ids, &cfg)?;
    for r in &reports {
        eprintln!("{}", r.summary_line());
    }
    let passed = reports.iter().all(|r| r.passed);
    match g.format {
        Format::Json => write_json(
            g.out.as_deref(),
            &serde_json::json!({
                "suite": a.suite,
                "seed": g.seed,
                "trial_scale": a.trial_scale,
                "passed": passed,
                "criteria": reports,
            }),
        )?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = reports
                .iter()
                .flat_map(|r| {
                    r.checks.iter().map(move |c| {
                        vec![r.id.to_string(), r.name.clone(), c.label.clone(), c.passed.to_string(), num(c.value)]
                    })
                })
                .collect();
            write_csv(g.out.as_deref(), &headers(&["criterion", "name", "check", "passed", "value"]), &rows)?;
        }
    }
    if passed {
        Ok(())
    } else {
        let failed: Vec<String> = reports.iter().filter(|r| !r.passed).map(|r| r.name.clone()).collect();
        Err(CliError::ValidationFailed(failed.join(", ")))
    }
}
