use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use patternlab::domain_sim::{simulate, DomainSimConfig};
use patternlab::fit::{fit, FitConfig, ObservedCurve};
use patternlab::moddiv::{self, Split};
use patternlab::random::{random_scenario, random_time};
use patternlab::{
    test_accuracy_exact, test_accuracy_mc, train_accuracy, Axis, Curve, Grid, GridSpec, McSettings,
    Pattern, Preset, Scenario,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{sidecar, Artifacts};
use crate::{
    AxisArg, Cli, Command, DatasetArgs, FitArgs, Format, InterpolateArgs,
    McCheckArgs, Param, PresetArg, ScenarioSource, ServeArgs, SimulateArgs, SweepArgs,
};

pub fn run(cli: Cli) -> Result<ExitCode> {
    let seed = cli.seed;
    match cli.command {
        Command::Simulate(args) => simulate_cmd(args, seed),
        Command::Sweep(args) => sweep(args),
        Command::Interpolate(args) => interpolate(args),
        Command::Fit(args) => fit_cmd(args, seed),
        Command::Dataset(args) => dataset(args, seed),
        Command::McCheck(args) => mc_check(args, seed),
        Command::Serve(args) => serve(args),
    }
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Time => Axis::Time,
            AxisArg::Capacity => Axis::Capacity,
        }
    }
}

fn load_scenario(source: &ScenarioSource) -> Result<Scenario> {
    match (&source.preset, &source.scenario) {
        (Some(PresetArg::Grokking), _) => Ok(Preset::Grokking.scenario()),
        (Some(PresetArg::DoubleDescent), _) => Ok(Preset::DoubleDescent.scenario()),
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))
        }
        (None, None) => bail!("either --preset or --scenario is required"),
    }
}

fn parse_grid(spec: &str) -> Result<Grid> {
    spec.parse().with_context(|| format!("bad --grid {spec:?}"))
}

fn curve_bytes(curve: &Curve, format: Format) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => curve.write_csv(&mut buf)?,
        Format::Json => {
            serde_json::to_writer_pretty(&mut buf, curve)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Adds the curve file, plus a metadata sidecar for CSV.
fn add_curve(artifacts: &mut Artifacts, path: &Path, curve: &Curve, format: Format) -> Result<()> {
    artifacts.add(path, curve_bytes(curve, format)?);
    if format == Format::Csv {
        artifacts.add_json(sidecar(path, ".meta.json"), &curve.meta())?;
    }
    Ok(())
}

fn report(written: &[PathBuf]) {
    for path in written {
        eprintln!("wrote {}", path.display());
    }
}

fn simulate_cmd(args: SimulateArgs, seed: u64) -> Result<ExitCode> {
    let scenario = load_scenario(&args.source)?;
    let grid = parse_grid(&args.curve.grid)?;
    let mc = McSettings {
        samples: args.curve.samples,
        seed,
    };
    let curve = patternlab::curve(&scenario, &grid, args.curve.axis.into(), Some(mc))?;
    match args.out {
        Some(path) => {
            let mut artifacts = Artifacts::default();
            add_curve(&mut artifacts, &path, &curve, args.curve.format)?;
            report(&artifacts.commit()?);
        }
        None => std::io::stdout().write_all(&curve_bytes(&curve, args.curve.format)?)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn with_param(pattern: &Pattern, param: Param, value: f64) -> patternlab::Result<Pattern> {
    let (mut gamma, mut alpha, mut b, mut g) = (pattern.gamma(), pattern.alpha(), pattern.b(), pattern.g());
    match param {
        Param::Gamma => gamma = value,
        Param::Alpha => alpha = value,
        Param::B => b = value,
        Param::G => g = value,
    }
    Pattern::new(gamma, alpha, b, g)
}

fn sweep(args: SweepArgs) -> Result<ExitCode> {
    let base = load_scenario(&args.source)?;
    if args.pattern >= base.len() {
        bail!("--pattern {} out of range for {} patterns", args.pattern, base.len());
    }
    let values: Vec<f64> = args
        .values
        .parse::<GridSpec>()
        .and_then(|s| s.build())
        .with_context(|| format!("bad --values {:?}", args.values))?
        .into_inner();
    let grid = parse_grid(&args.grid)?;
    let curves = values
        .par_iter()
        .map(|&value| {
            let mut patterns = base.patterns().to_vec();
            patterns[args.pattern] = with_param(&patterns[args.pattern], args.param, value)?;
            let scenario = Scenario::new(patterns, base.preferred(), base.baseline())?;
            patternlab::curve(&scenario, &grid, Axis::Time, None)
        })
        .collect::<patternlab::Result<Vec<_>>>()?;

    let mut out = String::from("value,t,train_acc,test_acc\n");
    for (value, curve) in values.iter().zip(&curves) {
        for i in 0..curve.len() {
            out.push_str(&format!("{value},{},{},{}\n", curve.grid[i], curve.train[i], curve.test[i]));
        }
    }
    let mut artifacts = Artifacts::default();
    artifacts.add(&args.out, out.into_bytes());
    report(&artifacts.commit()?);
    Ok(ExitCode::SUCCESS)
}

fn interpolate(args: InterpolateArgs) -> Result<ExitCode> {
    let grid = parse_grid(&args.grid)?;
    let axis: Axis = args.axis.into();
    let ext = match args.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let mut artifacts = Artifacts::default();
    if let Some(lambda) = args.target.lambda {
        let scenario = patternlab::interpolate(lambda)?;
        let curve = patternlab::curve(&scenario, &grid, axis, None)?;
        let out = args.out.expect("clap enforces --out");
        add_curve(&mut artifacts, &out, &curve, args.format)?;
    } else {
        let steps = args.target.steps.expect("clap enforces one target");
        if steps < 2 {
            bail!("--steps must be at least 2");
        }
        let dir = args.out_dir.expect("clap enforces --out-dir");
        let lambdas: Vec<f64> = (0..steps).map(|i| i as f64 / (steps - 1) as f64).collect();
        let curves = lambdas
            .par_iter()
            .map(|&l| patternlab::curve(&patternlab::interpolate(l)?, &grid, axis, None))
            .collect::<patternlab::Result<Vec<_>>>()?;
        for (i, (lambda, curve)) in lambdas.iter().zip(&curves).enumerate() {
            let path = dir.join(format!("interp_{i:03}_lambda_{lambda:.4}.{ext}"));
            add_curve(&mut artifacts, &path, curve, args.format)?;
        }
    }
    report(&artifacts.commit()?);
    Ok(ExitCode::SUCCESS)
}

fn fit_cmd(args: FitArgs, seed: u64) -> Result<ExitCode> {
    let file = fs::File::open(&args.input).with_context(|| format!("opening {}", args.input.display()))?;
    let observed = ObservedCurve::read_csv(file).with_context(|| format!("reading {}", args.input.display()))?;
    let config = FitConfig {
        n_patterns: args.n_patterns,
        preferred: args.preferred,
        baseline: args.baseline,
        restarts: args.restarts,
        max_evals: args.max_evals,
        tol: args.tol,
        seed,
        bounds: None,
    };
    let result = fit(&observed, &config)?;
    eprintln!(
        "loss {:.3e} after {} evaluations (restart {})",
        result.loss, result.evals, result.best_restart
    );
    emit_json(args.out.as_deref(), &result)
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<ExitCode> {
    match out {
        Some(path) => {
            let mut artifacts = Artifacts::default();
            artifacts.add_json(path, value)?;
            report(&artifacts.commit()?);
        }
        None => {
            serde_json::to_writer_pretty(std::io::stdout(), value)?;
            println!();
        }
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PeakAccuracy {
    train: Option<f64>,
    test: Option<f64>,
    all: Option<f64>,
}

#[derive(Serialize)]
struct DatasetSummary {
    p: u64,
    examples: usize,
    train_examples: usize,
    train_fraction: f64,
    seed: u64,
    zero_dividend: moddiv::ZeroDividendStats,
    predicted_peak_accuracy: PeakAccuracy,
}

fn dataset(args: DatasetArgs, seed: u64) -> Result<ExitCode> {
    let data = moddiv::generate(args.p, args.train_fraction, seed)?;
    let peak = |split| data.predicted_peak_accuracy(split).ok();
    let summary = DatasetSummary {
        p: data.p(),
        examples: data.len(),
        train_examples: data.in_train().iter().filter(|&&t| t).count(),
        train_fraction: data.train_fraction(),
        seed,
        zero_dividend: data.zero_dividend_stats(),
        predicted_peak_accuracy: PeakAccuracy {
            train: peak(Split::Train),
            test: peak(Split::Test),
            all: peak(Split::All),
        },
    };
    if let Some(path) = &args.out {
        let mut tokens = Vec::new();
        data.write_tokens(&mut tokens)?;
        let mut artifacts = Artifacts::default();
        artifacts.add(path, tokens);
        artifacts.add_json(sidecar(path, ".json"), &data.export_meta())?;
        report(&artifacts.commit()?);
    }
    serde_json::to_writer_pretty(std::io::stdout(), &summary)?;
    println!();
    Ok(ExitCode::SUCCESS)
}

/// Agreement required between an estimate and the exact value.
fn within(estimate: f64, stderr: f64, exact: f64) -> bool {
    (estimate - exact).abs() <= (3.0 * stderr).max(0.005)
}

#[derive(Serialize)]
struct EstimatorCheck {
    estimate: f64,
    stderr: f64,
    pass: bool,
}

#[derive(Serialize)]
struct ScenarioCheck {
    index: usize,
    t: f64,
    scenario: Scenario,
    exact_train: f64,
    exact_test: f64,
    mc_test: EstimatorCheck,
    domain_sim_test: EstimatorCheck,
    domain_sim_train: EstimatorCheck,
}

#[derive(Serialize)]
struct McReport {
    n: usize,
    samples: u64,
    seed: u64,
    all_passed: bool,
    scenarios: Vec<ScenarioCheck>,
}

const DOMAIN_SIM_TRIALS: u64 = 10;

fn mc_check(args: McCheckArgs, seed: u64) -> Result<ExitCode> {
    if args.n == 0 || args.n > patternlab::EXACT_CAP {
        bail!("--n must be in 1..={}", patternlab::EXACT_CAP);
    }
    if args.samples == 0 {
        bail!("--samples must be >= 1");
    }
    let trials = DOMAIN_SIM_TRIALS.min(args.samples);
    let points = args.samples.div_ceil(trials);
    let checks = (0..args.scenarios)
        .into_par_iter()
        .map(|index| -> Result<ScenarioCheck> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(index as u64);
            let scenario = random_scenario(&mut rng, args.n);
            let t = random_time(&mut rng);
            let (mc_seed, sim_seed): (u64, u64) = (rng.gen(), rng.gen());
            let exact_test = test_accuracy_exact(&scenario, t)?;
            let exact_train = train_accuracy(&scenario, t);
            let mc = test_accuracy_mc(&scenario, t, args.samples, mc_seed)?;
            let sim = simulate(&DomainSimConfig::new(scenario.clone(), t, points, trials, sim_seed)?)?;
            Ok(ScenarioCheck {
                index,
                t,
                exact_train,
                exact_test,
                mc_test: EstimatorCheck {
                    estimate: mc.estimate,
                    stderr: mc.stderr,
                    pass: within(mc.estimate, mc.stderr, exact_test),
                },
                domain_sim_test: EstimatorCheck {
                    estimate: sim.test_acc,
                    stderr: sim.stderr_test,
                    pass: within(sim.test_acc, sim.stderr_test, exact_test),
                },
                domain_sim_train: EstimatorCheck {
                    estimate: sim.train_acc,
                    stderr: sim.stderr_train,
                    pass: within(sim.train_acc, sim.stderr_train, exact_train),
                },
                scenario,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all_passed = checks
        .iter()
        .all(|c| c.mc_test.pass && c.domain_sim_test.pass && c.domain_sim_train.pass);
    for c in &checks {
        eprintln!(
            "scenario {:>3}: exact {:.5}  mc {:.5} ± {:.5}  domain-sim {:.5} ± {:.5}  {}",
            c.index,
            c.exact_test,
            c.mc_test.estimate,
            c.mc_test.stderr,
            c.domain_sim_test.estimate,
            c.domain_sim_test.stderr,
            if c.mc_test.pass && c.domain_sim_test.pass && c.domain_sim_train.pass {
                "pass"
            } else {
                "FAIL"
            }
        );
    }
    let report = McReport {
        n: args.n,
        samples: args.samples,
        seed,
        all_passed,
        scenarios: checks,
    };
    emit_json(args.out.as_deref(), &report)?;
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn serve(args: ServeArgs) -> Result<ExitCode> {
    let addr = std::net::SocketAddr::new(args.host, args.port);
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("listening on http://{addr}");
    runtime.block_on(patternlab_service::serve(addr))?;
    Ok(ExitCode::SUCCESS)
}
