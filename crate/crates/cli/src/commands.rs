use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use cherlb::baseline::{approx_threshold, fit_regression, poly_lb_noncentral, ApproximationMethod};
use cherlb::cdf::cdf;
use cherlb::mimo::{
    experiment_power, experiment_reliability, experiment_rho_probability, MarkovChannelParams, MimoConfig,
};
use cherlb::output::{mimo_row, power_rows, ris_row, Cell, RunManifest, Table, MIMO_COLUMNS, RIS_COLUMNS};
use cherlb::quantile::numeric_quantile;
use cherlb::ris::ris_sweep;
use cherlb::solver::{solve_general, solve_noncentral};
use cherlb::{selftest, BoundReport, Error, GeneralizedChiSquare, NoncentralChiSquare, ReliabilityTarget};
use cherlb::{SolverConfig, Tolerance};

use crate::{BoundArgs, Method, MimoArgs, MimoStat, RisArgs, SelftestArgs, SweepArgs, SweepVariable};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Core(Error),
    Io(io::Error),
    SelftestFailed,
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Core(Error::InvalidParameter(_) | Error::Domain(_)) => 2,
            Failure::Core(Error::IterationCap { .. }) => 3,
            Failure::Core(Error::InsufficientSamples { .. }) => 4,
            Failure::Core(_) | Failure::Io(_) | Failure::SelftestFailed => 1,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => f.write_str(m),
            Failure::Core(e) => e.fmt(f),
            Failure::Io(e) => write!(f, "i/o: {e}"),
            Failure::SelftestFailed => f.write_str("self-test failed"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn solver_config(delta_beta: f64) -> Result<SolverConfig, Failure> {
    let cfg = SolverConfig::default().with_delta_beta(Tolerance::Relative(delta_beta));
    cfg.validate()?;
    Ok(cfg)
}

fn manifest(command: &str, seed: Option<u64>, params: &[(&str, String)], started: String) -> RunManifest {
    RunManifest {
        command: command.into(),
        parameters: params.iter().map(|(k, v)| (k.to_string(), v.clone())).collect::<BTreeMap<_, _>>(),
        seed,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        started,
        finished: now(),
    }
}

fn write_file(path: &Path, m: &RunManifest, table: &Table) -> Result<(), Failure> {
    let mut out = BufWriter::new(File::create(path)?);
    table.write_to(m, &mut out)?;
    out.flush()?;
    Ok(())
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Cherlb => "cherlb",
        Method::Polylb => "polylb",
        Method::Quantile => "quantile",
        Method::Z1 => "z1",
        Method::Z2 => "z2",
        Method::Aty1 => "aty1",
        Method::Aty2 => "aty2",
        Method::Zar => "zar",
        Method::Goldstein => "goldstein",
    }
}

struct Evaluated {
    value: f64,
    valid: bool,
    report: Option<BoundReport>,
}

fn evaluate(
    method: Method,
    d: &NoncentralChiSquare,
    target: ReliabilityTarget,
    solver: &SolverConfig,
) -> Result<Evaluated, Failure> {
    let approx = |m| {
        let a = approx_threshold(m, d, target);
        Evaluated { value: a.value, valid: a.valid, report: None }
    };
    Ok(match method {
        Method::Cherlb => {
            let r = solve_noncentral(d, target, solver)?;
            Evaluated { value: r.bound, valid: true, report: Some(r) }
        }
        Method::Polylb => Evaluated { value: poly_lb_noncentral(d, target), valid: true, report: None },
        Method::Quantile => Evaluated { value: numeric_quantile(d, target)?, valid: true, report: None },
        Method::Z1 => approx(ApproximationMethod::SankaranZ1),
        Method::Z2 => approx(ApproximationMethod::SankaranZ2),
        Method::Aty1 => approx(ApproximationMethod::AbdelAtyFirst),
        Method::Aty2 => approx(ApproximationMethod::AbdelAtyCloser),
        Method::Zar => approx(ApproximationMethod::Zar),
        Method::Goldstein => approx(ApproximationMethod::Goldstein),
    })
}

fn verified(d: &NoncentralChiSquare, value: f64) -> Option<f64> {
    (value > 0.0).then(|| cdf(d, value))
}

const BOUND_COLUMNS: [&str; 9] =
    ["method", "dof", "noncentrality", "variance", "epsilon", "value", "lambda", "verified_cdf", "valid"];

fn parse_components(list: &str) -> Result<Vec<(f64, f64)>, Failure> {
    list.split(',')
        .map(|p| {
            let (m, v) = p.split_once(':').ok_or_else(|| usage(format!("component '{p}' is not mean:variance")))?;
            let m: f64 = m.trim().parse().map_err(|_| usage(format!("bad mean in '{p}'")))?;
            let v: f64 = v.trim().parse().map_err(|_| usage(format!("bad variance in '{p}'")))?;
            Ok((m, v))
        })
        .collect()
}

fn print_report(r: &BoundReport) {
    println!("nu*            {:.11e}", r.nu_star);
    println!("objective      {:.11e}", r.objective_at_bound);
    println!(
        "iterations     outer {}, nu growth {}, nu bisection {}, refinement {}",
        r.iterations.outer, r.iterations.nu_growth, r.iterations.nu_bisection, r.iterations.refinement
    );
    if r.below_resolution {
        println!("note           bound is below the requested resolution and was refined by halving");
    }
}

pub fn bound(a: &BoundArgs) -> Result<(), Failure> {
    let started = now();
    let target = ReliabilityTarget::new(a.gain.epsilon)?;
    let solver = solver_config(a.gain.delta_beta)?;
    let mut table = Table::new(&BOUND_COLUMNS);

    if let Some(list) = &a.components {
        if a.method != Method::Cherlb {
            return Err(usage("--components supports only --method cherlb"));
        }
        let g = GeneralizedChiSquare::new(parse_components(list)?)?;
        let mut r = solve_general(&g, target, &solver)?;
        if a.verify {
            r = r.verified_general(&g);
            if r.verified_cdf.is_none() {
                eprintln!("note: exact CDF needs equal component variances; not verified");
            }
        }
        let m2: f64 = g.components().iter().map(|c| c.mean * c.mean).sum();
        println!("method         cherlb (generalized, {} components)", g.dof());
        println!("bound          {:.11e}", r.bound);
        print_report(&r);
        if let Some(f) = r.verified_cdf {
            println!("verified cdf   {f:.11e}");
        }
        table.push(vec![
            "cherlb".into(),
            g.dof().into(),
            m2.into(),
            Cell::Empty,
            a.gain.epsilon.into(),
            r.bound.into(),
            (r.bound / g.mean()).into(),
            r.verified_cdf.into(),
            true.into(),
        ]);
    } else {
        let d = NoncentralChiSquare::new(a.gain.dof, a.gain.noncentrality, a.gain.variance)?;
        let e = evaluate(a.method, &d, target, &solver)?;
        let check = if a.verify { verified(&d, e.value) } else { None };
        println!("method         {}", method_name(a.method));
        println!("value          {:.11e}", e.value);
        println!("lambda         {:.11e}", e.value / d.mean());
        if let Some(r) = &e.report {
            print_report(r);
        }
        if !e.valid {
            println!("note           the approximation's normalizing transform was inverted at a negative base");
        }
        if a.verify {
            match check {
                Some(f) => println!("verified cdf   {f:.11e} (target {:.11e})", a.gain.epsilon),
                None => println!("verified cdf   undefined for a non-positive value"),
            }
        }
        table.push(vec![
            method_name(a.method).into(),
            a.gain.dof.into(),
            a.gain.noncentrality.into(),
            a.gain.variance.into(),
            a.gain.epsilon.into(),
            e.value.into(),
            (e.value / d.mean()).into(),
            check.into(),
            e.valid.into(),
        ]);
    }
    println!();
    print!("{}", table.data());
    if let Some(path) = &a.output {
        let params = [
            ("dof", a.gain.dof.to_string()),
            ("noncentrality", a.gain.noncentrality.to_string()),
            ("variance", a.gain.variance.to_string()),
            ("epsilon", a.gain.epsilon.to_string()),
            ("delta_beta", a.gain.delta_beta.to_string()),
            ("components", a.components.clone().unwrap_or_default()),
            ("method", method_name(a.method).into()),
        ];
        write_file(path, &manifest("bound", None, &params, started), &table)?;
    }
    Ok(())
}

#[derive(Clone, Copy, PartialEq)]
enum SweepMethod {
    Direct(Method),
    Regression { anchored: bool },
}

impl SweepMethod {
    fn name(self) -> &'static str {
        match self {
            SweepMethod::Direct(m) => method_name(m),
            SweepMethod::Regression { anchored: false } => "regression",
            SweepMethod::Regression { anchored: true } => "regression-anchored",
        }
    }
}

const ALL_SWEEP_METHODS: &str = "cherlb,polylb,quantile,aty1,aty2,z1,z2,zar,goldstein,regression,regression-anchored";

fn parse_methods(list: &str) -> Result<Vec<SweepMethod>, Failure> {
    let list = if list.trim() == "all" { ALL_SWEEP_METHODS } else { list };
    list.split(',')
        .map(|s| {
            let s = s.trim();
            Ok(match s {
                "regression" => SweepMethod::Regression { anchored: false },
                "regression-anchored" => SweepMethod::Regression { anchored: true },
                _ => SweepMethod::Direct(
                    <Method as clap::ValueEnum>::from_str(s, true).map_err(|_| usage(format!("unknown method '{s}'")))?,
                ),
            })
        })
        .collect()
}

fn grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(from.is_finite() && to.is_finite() && step > 0.0 && step.is_finite()) || to < from {
        return Err(usage(format!("empty range: from {from} to {to} step {step}")));
    }
    let n = ((to - from) / step + 1e-9).floor() as u64 + 1;
    if n > 1_000_000 {
        return Err(usage("sweep grid has more than 10^6 points"));
    }
    Ok((0..n).map(|i| from + i as f64 * step).collect())
}

const SWEEP_COLUMNS: [&str; 11] = [
    "variable",
    "x",
    "dof",
    "noncentrality",
    "variance",
    "epsilon",
    "method",
    "value",
    "lambda",
    "verified_cdf",
    "valid",
];

struct Point {
    x: f64,
    dist: NoncentralChiSquare,
    target: ReliabilityTarget,
}

pub fn sweep(a: &SweepArgs) -> Result<(), Failure> {
    let started = now();
    let solver = solver_config(a.gain.delta_beta)?;
    let mut methods = parse_methods(&a.methods)?;
    if a.methods.trim() == "all" && a.variable != SweepVariable::M2 {
        methods.retain(|m| !matches!(m, SweepMethod::Regression { .. }));
    }
    let has_regression = methods.iter().any(|m| matches!(m, SweepMethod::Regression { .. }));
    if has_regression && a.variable != SweepVariable::M2 {
        return Err(usage("regression methods need --variable m2"));
    }
    if a.rho_per_dof.is_some() && a.variable != SweepVariable::Dof {
        return Err(usage("--rho-per-dof applies to --variable dof"));
    }
    let g = &a.gain;
    let points = grid(a.from, a.to, a.step)?
        .into_iter()
        .map(|x| -> Result<Point, Failure> {
            let (dof, m2, eps) = match a.variable {
                SweepVariable::M2 => (g.dof, x, g.epsilon),
                SweepVariable::Rho => (g.dof, x * g.variance, g.epsilon),
                SweepVariable::Epsilon => (g.dof, g.noncentrality, 10f64.powf(x)),
                SweepVariable::Dof => {
                    if x.fract() != 0.0 || x < 1.0 || x > u32::MAX as f64 {
                        return Err(usage(format!("dof grid point {x} is not a positive integer")));
                    }
                    let k = x as u32;
                    let m2 = a.rho_per_dof.map_or(g.noncentrality, |r| r * k as f64 * g.variance);
                    (k, m2, g.epsilon)
                }
            };
            Ok(Point {
                x,
                dist: NoncentralChiSquare::new(dof, m2, g.variance)?,
                target: ReliabilityTarget::new(eps)?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let fits = if has_regression {
        let pairs = points
            .iter()
            .map(|p| Ok((p.x, numeric_quantile(&p.dist, p.target)?)))
            .collect::<Result<Vec<_>, Failure>>()?;
        let free = fit_regression(&pairs, false)?;
        let anchored = methods.contains(&SweepMethod::Regression { anchored: true });
        Some((free, if anchored { Some(fit_regression(&pairs, true)?) } else { None }))
    } else {
        None
    };

    let variable = match a.variable {
        SweepVariable::M2 => "m2",
        SweepVariable::Rho => "rho",
        SweepVariable::Epsilon => "log10_epsilon",
        SweepVariable::Dof => "dof",
    };
    let mut table = Table::new(&SWEEP_COLUMNS);
    for p in &points {
        for &m in &methods {
            let (value, valid) = match m {
                SweepMethod::Direct(m) => {
                    let e = evaluate(m, &p.dist, p.target, &solver)?;
                    (e.value, e.valid)
                }
                SweepMethod::Regression { anchored } => {
                    let (free, anch) = fits.as_ref().expect("fitted above");
                    let f = if anchored { anch.expect("fitted above") } else { *free };
                    let v = f.predict(p.x);
                    (v, v > 0.0)
                }
            };
            table.push(vec![
                variable.into(),
                p.x.into(),
                p.dist.dof().into(),
                p.dist.noncentrality().into(),
                p.dist.var().into(),
                p.target.epsilon().into(),
                m.name().into(),
                value.into(),
                (value / p.dist.mean()).into(),
                verified(&p.dist, value).into(),
                valid.into(),
            ]);
        }
    }
    let params = [
        ("variable", variable.to_string()),
        ("from", a.from.to_string()),
        ("to", a.to.to_string()),
        ("step", a.step.to_string()),
        ("dof", g.dof.to_string()),
        ("noncentrality", g.noncentrality.to_string()),
        ("variance", g.variance.to_string()),
        ("epsilon", g.epsilon.to_string()),
        ("delta_beta", g.delta_beta.to_string()),
        ("rho_per_dof", a.rho_per_dof.map(|r| r.to_string()).unwrap_or_default()),
        ("methods", a.methods.clone()),
    ];
    let m = manifest("sweep", None, &params, started);
    match &a.output {
        Some(path) => write_file(path, &m, &table)?,
        None => {
            let stdout = io::stdout();
            table.write_to(&m, stdout.lock())?;
        }
    }
    Ok(())
}

pub fn mimo(a: &MimoArgs) -> Result<(), Failure> {
    let started = now();
    let cfg = MimoConfig::new(a.tx, a.rx, a.trials, a.seed)?;
    let params = MarkovChannelParams::new(a.carrier_hz, a.velocity_mps, a.lag_s)?;
    let target = ReliabilityTarget::new(a.epsilon)?;
    let solver = solver_config(a.delta_beta)?;
    if !(a.threshold > 0.0 && a.threshold.is_finite()) {
        return Err(usage("--threshold must be positive"));
    }

    let clock = Instant::now();
    let mut table = Table::new(&MIMO_COLUMNS);
    let want = |s| a.stat == s || a.stat == MimoStat::All;
    if want(MimoStat::RhoProb) {
        eprintln!("mimo: P(rho < {}) over {} channel draws, M={} N={}", a.threshold, a.trials, a.tx, a.rx);
        let e = experiment_rho_probability(&cfg, &params, a.threshold)?;
        table.push(mimo_row(a.tx, a.rx, None, "p_rho_below_threshold", &e));
    }
    if want(MimoStat::Power) {
        eprintln!("mimo: per-draw bounds and power over {} channel draws", a.trials);
        let p = experiment_power(&cfg, &params, target, &solver)?;
        for r in power_rows(a.tx, a.rx, a.epsilon, &p) {
            table.push(r);
        }
    }
    if want(MimoStat::Reliability) {
        eprintln!("mimo: single-shot outage over {} joint draws", a.trials);
        let e = experiment_reliability(&cfg, &params, target, &solver)?;
        table.push(mimo_row(a.tx, a.rx, Some(a.epsilon), "outage_rate", &e));
    }
    eprintln!("mimo: done in {:.1} s, writing {}", clock.elapsed().as_secs_f64(), a.output.display());

    let p = [
        ("tx", a.tx.to_string()),
        ("rx", a.rx.to_string()),
        ("trials", a.trials.to_string()),
        ("epsilon", a.epsilon.to_string()),
        ("stat", format!("{:?}", a.stat)),
        ("threshold", a.threshold.to_string()),
        ("carrier_hz", a.carrier_hz.to_string()),
        ("velocity_mps", a.velocity_mps.to_string()),
        ("lag_s", a.lag_s.to_string()),
        ("delta_beta", a.delta_beta.to_string()),
    ];
    write_file(&a.output, &manifest("mimo", Some(a.seed), &p, started), &table)
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, Failure> {
    s.split(',')
        .map(|v| v.trim().parse().map_err(|_| usage(format!("--{flag}: cannot parse '{v}'"))))
        .collect()
}

pub fn ris(a: &RisArgs) -> Result<(), Failure> {
    let started = now();
    let nr: Vec<usize> = parse_list("nr", &a.nr)?;
    let kappas: Vec<f64> = parse_list("kappa", &a.kappa)?;
    if let Some(k) = kappas.iter().find(|k| !(**k >= 0.0 && k.is_finite())) {
        return Err(usage(format!("--kappa: {k} is not a nonnegative K-factor")));
    }
    if nr.is_empty() || nr[0] == 0 || nr.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("--nr must be positive and strictly increasing"));
    }
    let target = ReliabilityTarget::new(a.epsilon)?;
    let solver = solver_config(a.delta_beta)?;

    let clock = Instant::now();
    eprintln!("ris: {} surfaces x {} K-factors, {} exact draws each", nr.len(), kappas.len(), a.trials);
    let pairs: Vec<(f64, f64)> = kappas.iter().map(|&k| (k, k)).collect();
    let out = ris_sweep(&nr, &pairs, a.trials, a.seed, target, &solver)?;
    eprintln!("ris: done in {:.1} s, writing {}", clock.elapsed().as_secs_f64(), a.output.display());

    let mut table = Table::new(&RIS_COLUMNS);
    for o in &out {
        table.push(ris_row(o));
    }
    let p = [
        ("nr", a.nr.clone()),
        ("kappa", a.kappa.clone()),
        ("epsilon", a.epsilon.to_string()),
        ("trials", a.trials.to_string()),
        ("delta_beta", a.delta_beta.to_string()),
    ];
    write_file(&a.output, &manifest("ris", Some(a.seed), &p, started), &table)
}

pub fn selftest(a: &SelftestArgs) -> Result<(), Failure> {
    let s = selftest::run(a.seed);
    print!("{}", s.render());
    if s.passed() {
        Ok(())
    } else {
        Err(Failure::SelftestFailed)
    }
}
