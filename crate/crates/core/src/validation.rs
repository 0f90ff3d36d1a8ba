//! Reproducible validation suites, one per acceptance criterion.

use serde::Serialize;

use crate::calibration::{
    calibrate, model_prices, mse_objective, nelder_mead, CalibrationProblem, ModelTemplate,
    NelderMeadConfig, OptionQuote, ParameterTransform,
};
use crate::cftp::sample_exact_composite;
use crate::error::{Error, Result};
use crate::ggc::{
    bfry_cdf, sample_bfry, sample_tilted_bfry, tilted_bfry_cdf,
    BaseLaw, DirichletMeanSpec, KernelKind, ScaleVariable,
};
use crate::mc;
use crate::model::{
    calibrated, model_return_moments, sample_transition, unit_gl, unit_ou_gamma, Factor, ModelSpec,
    Sampler, Variant,
};
use crate::pricing::{
    black_scholes_call, price_european, price_forward_start, EuropeanCall, Estimator,
    ForwardStartOption, McConfig,
};
use crate::rng::RandomStream;
use crate::stats::{ks_one_sample, Moments};
use crate::truncation::{
    l1_error_bound, sample_truncated, StickBreaker, TruncationRule, MACHINE_EPSILON,
};

/// Criterion identifiers and suite names.
pub const CRITERIA: [(u32, &str); 11] = [
    (1, "dmean-moments"),
    (2, "dmean-stack"),
    (3, "dmean-stopping"),
    (4, "truncation"),
    (5, "stack-shape"),
    (6, "returns"),
    (7, "forward-start"),
    (8, "martingale"),
    (9, "black-scholes-limit"),
    (10, "ggc-examples"),
    (11, "calibration"),
];

const DELTA_GRID: [f64; 7] = [0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0];
const STACK_TARGETS: [f64; 7] = [76.14, 38.08, 15.22, 7.615, 15.23, 38.08, 76.15];
const STOPPING_TARGETS: [f64; 7] = [4.74, 8.49, 19.77, 38.70, 77.41, 217.5, 1406.5];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub value: f64,
    pub target: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    pub fn abs(label: impl Into<String>, value: f64, target: f64, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            value,
            target,
            tolerance,
            passed: (value - target).abs() <= tolerance,
        }
    }

    pub fn rel(label: impl Into<String>, value: f64, target: f64, rel: f64) -> Self {
        Self::abs(label, value, target, rel * target.abs())
    }

    pub fn below(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            label: label.into(),
            value,
            target: limit,
            tolerance: 0.0,
            passed: value < limit,
        }
    }

    pub fn above(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            label: label.into(),
            value,
            target: limit,
            tolerance: 0.0,
            passed: value > limit,
        }
    }

    pub fn flag(label: impl Into<String>, ok: bool) -> Self {
        Self {
            label: label.into(),
            value: ok as u8 as f64,
            target: 1.0,
            tolerance: 0.0,
            passed: ok,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl CriterionReport {
    fn new(id: u32, checks: Vec<Check>, notes: Vec<String>) -> Self {
        let name = CRITERIA
            .iter()
            .find(|c| c.0 == id)
            .map(|c| c.1)
            .unwrap_or("unknown")
            .to_string();
        Self {
            id,
            name,
            passed: checks.iter().all(|c| c.passed),
            checks,
            notes,
        }
    }

    /// One line: `PASS|FAIL [id] name (k/n checks)`.
    pub fn summary_line(&self) -> String {
        let ok = self.checks.iter().filter(|c| c.passed).count();
        format!(
            "{} [{:>2}] {} ({}/{} checks)",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            ok,
            self.checks.len()
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationConfig {
    pub seed: u64,
    pub threads: Option<usize>,
    /// Multiplier on every stated trial count.
    pub trial_scale: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            threads: None,
            trial_scale: 1.0,
        }
    }
}

impl ValidationConfig {
    fn trials(&self, stated: u64) -> u64 {
        ((stated as f64 * self.trial_scale).round() as u64).max(1_000)
    }

    fn run<F>(&self, tag: u64, trials: u64, width: usize, f: F) -> Result<Vec<Moments>>
    where
        F: Fn(&mut RandomStream, &mut [f64]) -> Result<()> + Sync + Send,
    {
        let root = RandomStream::with_stream(self.seed, tag);
        mc::with_threads(self.threads, || mc::simulate(trials, &root, width, f))?
    }

    fn mc(&self, trials: u64, tag: u64) -> McConfig {
        McConfig::new(self.trials(trials), self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
            .with_threads(self.threads)
    }
}

/// Suite names accepted by [`resolve_suite`]: criterion names, their numbers,
/// `dmean` (criteria 1-4) and `all`.
pub fn resolve_suite(name: &str) -> Option<Vec<u32>> {
    match name {
        "all" => Some(CRITERIA.iter().map(|c| c.0).collect()),
        "dmean" => Some(vec![1, 2, 3, 4]),
        _ => {
            if let Ok(id) = name.parse::<u32>() {
                return CRITERIA.iter().any(|c| c.0 == id).then(|| vec![id]);
            }
            CRITERIA.iter().find(|c| c.1 == name).map(|c| vec![c.0])
        }
    }
}

pub fn run_criteria(ids: &[u32], cfg: &ValidationConfig) -> Result<Vec<CriterionReport>> {
    let needs_benchmark = ids.iter().any(|id| (1..=4).contains(id));
    let rows = if needs_benchmark { Some(benchmark_rows(cfg)?) } else { None };
    let mut out = Vec::with_capacity(ids.len());
    for &id in ids {
        let report = match id {
            1 => criterion_moments(rows.as_deref().unwrap()),
            2 => criterion_stack(rows.as_deref().unwrap()),
            3 => criterion_stopping(rows.as_deref().unwrap()),
            4 => criterion_truncation(rows.as_deref().unwrap(), cfg)?,
            5 => criterion_stack_shape(cfg)?,
            6 => criterion_returns(cfg)?,
            7 => criterion_forward_start(cfg)?,
            8 => criterion_martingale(cfg)?,
            9 => criterion_black_scholes_limit(cfg)?,
            10 => criterion_ggc_examples(cfg)?,
            11 => criterion_calibration(cfg)?,
            other => return Err(Error::Domain(format!("unknown criterion {other}"))),
        };
        out.push(report);
    }
    Ok(out)
}

/// Benchmark law `Y = R (1 - e^{-U})` with `R ~ Uniform(0, 1)`.
pub fn reference_law(delta: f64) -> DirichletMeanSpec {
    DirichletMeanSpec {
        delta,
        kernel: KernelKind::OneMinusDecay,
        lambda: 1.0,
        horizon: 1.0,
        scale: ScaleVariable::ScaledBeta { c: 1.0, a: 1.0, b: 1.0 },
    }
}

struct BenchmarkRow {
    delta: f64,
    cftp: Moments,
    stack: Moments,
    fixed: Moments,
    stopping: Moments,
    n_used: Moments,
}

fn benchmark_rows(cfg: &ValidationConfig) -> Result<Vec<BenchmarkRow>> {
    let trials = cfg.trials(1_000_000);
    let mut rows = Vec::with_capacity(DELTA_GRID.len());
    for (i, &delta) in DELTA_GRID.iter().enumerate() {
        let spec = reference_law(delta);
        let exact = cfg.run(100 + i as u64, trials, 2, |s, out| {
            let (m, st) = sample_exact_composite(&spec, s)?;
            out[0] = m;
            out[1] = st.stack_size as f64;
            Ok(())
        })?;
        let fixed = cfg.run(200 + i as u64, trials, 1, |s, out| {
            out[0] = sample_truncated(&spec, &TruncationRule::FixedN { n: 100 }, s)?.0;
            Ok(())
        })?;
        let stopping = cfg.run(300 + i as u64, trials, 2, |s, out| {
            let (m, n) = sample_truncated(&spec, &TruncationRule::default(), s)?;
            out[0] = m;
            out[1] = n as f64;
            Ok(())
        })?;
        rows.push(BenchmarkRow {
            delta,
            cftp: exact[0],
            stack: exact[1],
            fixed: fixed[0],
            stopping: stopping[0],
            n_used: stopping[1],
        });
    }
    Ok(rows)
}

fn criterion_moments(rows: &[BenchmarkRow]) -> CriterionReport {
    let mut checks = Vec::new();
    for row in rows {
        checks.push(Check::abs(format!("mean, delta={}", row.delta), row.cftp.mean, 0.18393, 0.001));
        checks.push(Check::rel(
            format!("variance, delta={}", row.delta),
            row.cftp.variance(),
            0.02220 / (row.delta + 1.0),
            0.03,
        ));
    }
    CriterionReport::new(1, checks, vec![])
}

fn criterion_stack(rows: &[BenchmarkRow]) -> CriterionReport {
    let checks = rows
        .iter()
        .zip(STACK_TARGETS)
        .map(|(row, target)| Check::rel(format!("E[stack], delta={}", row.delta), row.stack.mean, target, 0.03))
        .collect();
    CriterionReport::new(2, checks, vec![])
}

fn criterion_stopping(rows: &[BenchmarkRow]) -> CriterionReport {
    let c_y = reference_law(1.0).y_bound();
    let mut notes = vec![format!(
        "with the residual kept as a product, N - 1 is Poisson with mean delta*ln(c_Y/eps) = delta*{:.4}",
        (c_y / MACHINE_EPSILON).ln()
    )];
    let mut checks = Vec::new();
    for (row, target) in rows.iter().zip(STOPPING_TARGETS) {
        let derived = 1.0 + row.delta * (c_y / MACHINE_EPSILON).ln();
        notes.push(format!(
            "delta={}: simulated {:.3}, derived {:.3}, reference {}",
            row.delta, row.n_used.mean, derived, target
        ));
        checks.push(Check::rel(format!("E[N], delta={}", row.delta), row.n_used.mean, target, 0.05));
    }
    CriterionReport::new(3, checks, notes)
}

fn within_se(label: String, a: f64, se_a: f64, b: f64, se_b: f64, k: f64) -> Check {
    Check::abs(label, a, b, k * (se_a * se_a + se_b * se_b).sqrt())
}

fn criterion_truncation(rows: &[BenchmarkRow], cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut checks = Vec::new();
    for row in rows {
        for (name, m) in [("fixed-100", &row.fixed), ("stopping", &row.stopping)] {
            checks.push(within_se(
                format!("{name} mean, delta={}", row.delta),
                m.mean,
                m.std_error(),
                row.cftp.mean,
                row.cftp.std_error(),
                4.0,
            ));
            checks.push(within_se(
                format!("{name} variance, delta={}", row.delta),
                m.variance(),
                m.variance_std_error(),
                row.cftp.variance(),
                row.cftp.variance_std_error(),
                4.0,
            ));
        }
    }
    let trials = cfg.trials(100_000);
    for (i, &delta) in [0.5, 1.0, 2.0].iter().enumerate() {
        let spec = reference_law(delta);
        for (j, &n) in [1u64, 5, 10].iter().enumerate() {
            let err = cfg.run(400 + 10 * i as u64 + j as u64, trials, 1, |s, out| {
                out[0] = coupled_truncation_error(&spec, n, s)?;
                Ok(())
            })?;
            checks.push(Check::below(
                format!("coupled L1 error, delta={delta}, N={n}"),
                err[0].mean,
                l1_error_bound(&spec, delta, n),
            ));
        }
    }
    Ok(CriterionReport::new(4, checks, vec![]))
}

/// `|M - M^N|` with the first `N + 1` sticks and atoms shared.
pub fn coupled_truncation_error(spec: &DirichletMeanSpec, n: u64, s: &mut RandomStream) -> Result<f64> {
    let mut sticks = StickBreaker::new(spec.delta)?;
    let mut head = 0.0;
    for _ in 0..n {
        head += sticks.next_weight(s) * spec.sample_y(s);
    }
    let y_next = spec.sample_y(s);
    let closed = head + sticks.residual() * y_next;
    let mut exact = head + sticks.next_weight(s) * y_next;
    let bound = spec.y_bound();
    while bound * sticks.residual() >= MACHINE_EPSILON {
        exact += sticks.next_weight(s) * spec.sample_y(s);
    }
    exact += sticks.residual() * spec.sample_y(s);
    Ok((exact - closed).abs())
}

fn criterion_stack_shape(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let trials = cfg.trials(1_000_000);
    let mut means = Vec::new();
    let mut notes = Vec::new();
    for k in 1..=10 {
        let delta = k as f64 / 10.0;
        let spec = reference_law(delta);
        let m = cfg.run(500 + k, trials, 1, |s, out| {
            out[0] = sample_exact_composite(&spec, s)?.1.stack_size as f64;
            Ok(())
        })?;
        notes.push(format!("delta={delta:.1}: E[stack] = {:.4} (s.e. {:.4})", m[0].mean, m[0].std_error()));
        means.push(m[0].mean);
    }
    let decreasing = means.windows(2).all(|w| w[1] < w[0]);
    let convex = means.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] > 0.0);
    let argmin = means
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let checks = vec![
        Check::flag("decreasing in delta", decreasing),
        Check::flag("convex in delta", convex),
        Check::flag("minimum at delta=1", argmin == means.len() - 1),
    ];
    Ok(CriterionReport::new(5, checks, notes))
}

fn return_moments(cfg: &ValidationConfig, model: &ModelSpec, trials: u64, tag: u64) -> Result<Moments> {
    let m = cfg.run(tag, trials, 1, |s, out| {
        out[0] = sample_transition(model, 1.0, 1.0, s, &Sampler::Exact)?.1.log_return;
        Ok(())
    })?;
    Ok(m[0])
}

fn criterion_returns(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let big = cfg.trials(10_000_000);
    let small = cfg.trials(1_000_000);

    let mut cells: Vec<(String, ModelSpec, u64)> = Vec::new();
    for rho in [0.0, -1.0] {
        cells.push((format!("OU-Gamma rho={rho}"), unit_ou_gamma(rho), big));
        for (a, b) in [(1.0, 0.01), (1.0, 0.1), (1.0, 1.0), (1.0, 10.0), (0.5, 0.5)] {
            cells.push((format!("GL Beta({a},{b}) rho={rho}"), unit_gl(a, b, rho), small));
        }
    }
    let mut kurt = std::collections::HashMap::new();
    for (i, (label, model, trials)) in cells.iter().enumerate() {
        let m = return_moments(cfg, model, *trials, 600 + i as u64)?;
        let (mean, var) = model_return_moments(model, 1.0)?;
        checks.push(Check::abs(format!("{label}: mean vs closed form"), m.mean, mean, 4.0 * m.std_error()));
        checks.push(Check::abs(
            format!("{label}: variance vs closed form"),
            m.variance(),
            var,
            4.0 * m.variance_std_error(),
        ));
        notes.push(format!(
            "{label}: mean {:.4} sd {:.4} skew {:.4} kurt {:.4} ({} draws)",
            m.mean,
            m.std_dev(),
            m.skewness(),
            m.excess_kurtosis() + 3.0,
            m.n
        ));
        if label == "OU-Gamma rho=0" {
            checks.push(Check::abs("OU-Gamma rho=0: sd", m.std_dev(), 0.6404, 0.005));
        }
        if label == "OU-Gamma rho=-1" {
            checks.push(Check::abs("OU-Gamma rho=-1: mean", m.mean, -0.4912, 0.005));
        }
        kurt.insert(label.clone(), m.excess_kurtosis());
    }
    checks.push(Check::above(
        "kurtosis GL Beta(1,10) exceeds OU-Gamma at rho=0",
        kurt["GL Beta(1,10) rho=0"],
        kurt["OU-Gamma rho=0"],
    ));
    notes.push(
        "reference rho=0 means (about 0.51) and the rho=-1 sd (1.1876) are not reproducible: the drift forces E[X] = -E[tau]/2 = -0.18394 at rho=0, and a shared gamma factor gives sd 1.3333 at rho=-1"
            .into(),
    );
    Ok(CriterionReport::new(6, checks, notes))
}

fn criterion_forward_start(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let model = calibrated(Variant::OuGamma, 1);
    let option = ForwardStartOption { k: 1.0, t1: 1.0, t2: 2.0 };
    let exact = cfg.mc(100_000, 7);
    let approx = cfg.mc(100_000, 8).with_sampler(Sampler::Truncated(TruncationRule::FixedN { n: 100 }));
    let fsp = price_forward_start(&model, 100.0, &option, &exact, Estimator::Fsp)?;
    let psp = price_forward_start(&model, 100.0, &option, &exact, Estimator::Psp)?;
    let fsp_app = price_forward_start(&model, 100.0, &option, &approx, Estimator::Fsp)?;
    let psp_app = price_forward_start(&model, 100.0, &option, &approx, Estimator::Psp)?;
    let se_target = 0.0094 * (1e5 / fsp.trials as f64).sqrt();
    let ratio = psp.std_error / fsp.std_error;
    let checks = vec![
        Check::abs("FSP estimate", fsp.estimate, 5.983, 0.05),
        Check::rel("FSP standard error", fsp.std_error, se_target, 0.15),
        Check::abs("PSP/FSP s.e. ratio", ratio, 2.3, 0.5),
        within_se("PSP vs FSP".into(), psp.estimate, psp.std_error, fsp.estimate, fsp.std_error, 3.0),
        within_se("exact vs truncated FSP".into(), fsp.estimate, fsp.std_error, fsp_app.estimate, fsp_app.std_error, 3.0),
        within_se("exact vs truncated PSP".into(), psp.estimate, psp.std_error, psp_app.estimate, psp_app.std_error, 3.0),
    ];
    let notes = vec![format!(
        "FSP {:.5} ({:.5}), PSP {:.5} ({:.5}), truncated FSP {:.5} ({:.5}), truncated PSP {:.5} ({:.5})",
        fsp.estimate, fsp.std_error, psp.estimate, psp.std_error, fsp_app.estimate, fsp_app.std_error,
        psp_app.estimate, psp_app.std_error
    )];
    Ok(CriterionReport::new(7, checks, notes))
}

/// Checks `E[exp(-(r - q) dt) S(dt) / S(0)] = 1` over one step.
pub fn martingale_ratio(
    model: &ModelSpec,
    sampler: Sampler,
    trials: u64,
    root: &RandomStream,
    threads: Option<usize>,
) -> Result<Moments> {
    let growth = (-(model.r - model.q)).exp();
    let m = mc::with_threads(threads, || {
        mc::simulate(trials, root, 1, |s, out| {
            out[0] = growth * sample_transition(model, 1.0, 1.0, s, &sampler)?.0;
            Ok(())
        })
    })??;
    Ok(m[0])
}

fn criterion_martingale(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let trials = cfg.trials(100_000);
    let mut checks = Vec::new();
    let mut tag = 800;
    for variant in [Variant::OuGamma, Variant::GlOuGgc] {
        for l in [1, 2] {
            for rho in [0.0, -1.0, -4.88] {
                for (sname, sampler) in [
                    ("exact", Sampler::Exact),
                    ("stopping", Sampler::Truncated(TruncationRule::default())),
                ] {
                    let mut model = calibrated(variant, l);
                    model.rho = rho;
                    tag += 1;
                    let root = RandomStream::with_stream(cfg.seed, tag);
                    let m = martingale_ratio(&model, sampler, trials, &root, cfg.threads)?;
                    checks.push(Check::abs(
                        format!("{variant:?} l={l} rho={rho} {sname}"),
                        m.mean,
                        1.0,
                        4.0 * m.std_error(),
                    ));
                }
            }
        }
    }
    Ok(CriterionReport::new(8, checks, vec![]))
}

fn criterion_black_scholes_limit(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut checks = Vec::new();
    for variant in [Variant::OuGamma, Variant::GlOuGgc] {
        let mut model = calibrated(variant, 2);
        model.theta = 0.0;
        model.q = 0.01;
        for maturity in [0.5, 1.0] {
            let sigma = (model.deterministic_tau(maturity) / maturity).sqrt();
            for strike in [80.0, 100.0, 120.0] {
                let option = EuropeanCall { strike, maturity };
                let r = price_european(&model, 100.0, &option, &cfg.mc(10_000, 9), Estimator::Fsp)?;
                let bs = black_scholes_call(100.0, strike, model.r, model.q, sigma, maturity)?;
                let label = format!("{variant:?} K={strike} T={maturity}");
                checks.push(Check::abs(format!("{label}: relative error"), (r.estimate - bs).abs() / bs, 0.0, 1e-10));
                checks.push(Check::flag(format!("{label}: zero standard error"), r.std_error == 0.0));
            }
        }
    }
    Ok(CriterionReport::new(9, checks, vec![]))
}

fn criterion_ggc_examples(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let trials = cfg.trials(100_000);
    let mut checks = Vec::new();
    for (i, &alpha) in [0.3, 0.5, 0.8].iter().enumerate() {
        let root = RandomStream::with_stream(cfg.seed, 1000 + i as u64);
        let xs = mc::collect(trials, &root, |s| sample_bfry(alpha, s))?;
        let ks = ks_one_sample(&xs, |x| bfry_cdf(alpha, x));
        checks.push(Check::above(format!("BFRY alpha={alpha}: KS p-value"), ks.p_value, 0.001));
        for (j, &c) in [0.5, 1.0, 4.0].iter().enumerate() {
            let root = RandomStream::with_stream(cfg.seed, 1100 + 10 * i as u64 + j as u64);
            let xs = mc::collect(trials, &root, |s| sample_tilted_bfry(alpha, c, s))?;
            let ks = ks_one_sample(&xs, |x| tilted_bfry_cdf(alpha, c, x));
            checks.push(Check::above(format!("tilted BFRY alpha={alpha} c={c}: KS p-value"), ks.p_value, 0.001));
        }
    }
    Ok(CriterionReport::new(10, checks, vec![]))
}

/// Synthetic quote set: four maturities by five strikes priced by `model`.
pub fn synthetic_quotes(model: &ModelSpec, s0: f64, trials: u64, seed: u64, threads: Option<usize>) -> Result<CalibrationProblem> {
    let mut quotes = Vec::new();
    for &t in &[0.25, 0.5, 1.0, 2.0] {
        for &k in &[85.0, 95.0, 100.0, 105.0, 115.0] {
            quotes.push(OptionQuote { strike: k, maturity_years: t, market_price: 1.0 });
        }
    }
    let mut problem = CalibrationProblem {
        quotes,
        s0,
        r: model.r,
        q: model.q,
        template: ModelTemplate {
            variant: model.variant,
            factors: model.factors.len(),
            jump_free: model.theta == 0.0,
        },
        trials,
        seed,
        threads,
    };
    let prices = model_prices(&problem, model)?;
    for (q, p) in problem.quotes.iter_mut().zip(prices) {
        q.market_price = p.0;
    }
    Ok(problem)
}

fn criterion_calibration(cfg: &ValidationConfig) -> Result<CriterionReport> {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    let nm = NelderMeadConfig::default();

    let quad = nelder_mead(|x| x.iter().map(|v| (v - 3.0).powi(2)).sum(), &[0.0; 4], &nm)?;
    let quad_err = quad.point.iter().map(|v| (v - 3.0).abs()).fold(0.0, f64::max);
    checks.push(Check::below("quadratic: max coordinate error", quad_err, 1e-6));
    let rosen = nelder_mead(
        |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
        &[-1.2, 1.0],
        &nm,
    )?;
    let rosen_err = rosen.point.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
    checks.push(Check::below("Rosenbrock: max coordinate error", rosen_err, 1e-4));
    checks.push(Check::flag("Rosenbrock: at most 5000 iterations", rosen.iterations <= 5_000));
    let abs = nelder_mead(|x| x[0].abs(), &[2.0], &nm)?;
    checks.push(Check::below("|x|: distance to 0", abs.point[0].abs(), nm.tol));

    let truth = ModelSpec {
        variant: Variant::OuGamma,
        rho: -4.9,
        theta: 0.8,
        scale: ScaleVariable::Constant { c: 0.01 },
        factors: vec![Factor { lambda: 2.2, v0: 0.0044 }],
        r: 0.0319,
        q: 0.0,
    };
    let trials = cfg.trials(10_000).max(crate::calibration::MIN_TRIALS);
    let problem = synthetic_quotes(&truth, 100.0, trials, cfg.seed, cfg.threads)?;
    let mut start = truth.clone();
    start.rho = -4.2;
    start.theta = 0.95;
    start.scale = ScaleVariable::Constant { c: 0.0115 };
    start.factors[0] = Factor { lambda: 1.9, v0: 0.005 };
    let start_mse = mse_objective(&problem, &start);
    let fit = calibrate(&problem, &start, &NelderMeadConfig { max_iter: 150, tol: 1e-6, ..nm })?;
    checks.push(Check::below("roundtrip MSE vs 10x noise floor", fit.mse, 10.0 * fit.noise_floor));
    checks.push(Check::below("roundtrip MSE improves on start", fit.mse, start_mse));
    notes.push(format!(
        "roundtrip: start MSE {start_mse:.3e}, fitted MSE {:.3e}, noise floor {:.3e}, {} iterations",
        fit.mse, fit.noise_floor, fit.iterations
    ));

    let mut flat = truth.clone();
    flat.theta = 0.0;
    flat.factors[0] = Factor { lambda: 1.5, v0: 0.04 };
    let problem = synthetic_quotes(&flat, 100.0, crate::calibration::MIN_TRIALS, cfg.seed, cfg.threads)?;
    let mut flat_start = flat.clone();
    flat_start.factors[0] = Factor { lambda: 1.0, v0: 0.03 };
    let flat_fit = calibrate(&problem, &flat_start, &nm)?;
    checks.push(Check::below("jump-free template MSE", flat_fit.mse, 1e-10));

    let t2 = ParameterTransform::new(ModelTemplate { variant: Variant::GlOuGgc, factors: 2, jump_free: false });
    let mut ordered = true;
    let mut s = RandomStream::with_stream(cfg.seed, 1200);
    for _ in 0..1_000 {
        let u: Vec<f64> = (0..t2.dim()).map(|_| 10.0 * (s.uniform() - 0.5)).collect();
        let m = t2.to_model(&u, 0.0, 0.0)?;
        ordered &= m.factors[0].lambda >= m.factors[1].lambda && m.validate().is_ok();
    }
    checks.push(Check::flag("two-factor template keeps lambda_1 >= lambda_2", ordered));
    notes.push("MSE 0.00870 on the original quote set is not checked: the data set is not available".into());
    Ok(CriterionReport::new(11, checks, notes))
}
