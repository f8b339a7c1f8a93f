//! `setmatch`: train, gradient-check, match and self-test from the shell.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 runtime abort.

mod config;

use std::fs;
use std::io::Write;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use setmatch::assignment::{format_solution, parse_cost_matrix, solve_rectangular};
use setmatch::autodiff::DEFAULT_STEP;
use setmatch::gradbridge::{certify_gradient, GradCheckReport};
use setmatch::selftest::{aligned_cost, run_selftest, wrong_sign_cost, SelftestCounts};
use setmatch::setloss::predictions_from_params;
use setmatch::toytask::random_model_gradcheck;
use setmatch::trainer::{evaluate, metrics_csv, train};
use setmatch::{Error, Instance, LossConfig, TrainConfig};

use config::{apply, parse_config_text, Setting, KEYS};

const ABS_TOL: f64 = 1e-6;
const REL_TOL: f64 = 1e-4;

enum Failure {
    Usage(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

type Outcome = Result<bool, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Configuration problems are the caller's fault; anything else is a
/// runtime abort.
fn classify(e: Error) -> Failure {
    match e {
        Error::Config(_) | Error::Parse { .. } | Error::MoreTargetsThanSlots { .. } => {
            usage(e.to_string())
        }
        other => Failure::Runtime(other.to_string()),
    }
}

fn cli() -> Command {
    let train_keys = KEYS.iter().map(|(key, help)| {
        Arg::new(*key)
            .long(key.replace('_', "-"))
            .value_name("VALUE")
            .help(*help)
    });
    Command::new("setmatch")
        .about("Set-prediction loss with gradients through an exact assignment solver")
        .subcommand_required(true)
        .subcommand(
            Command::new("train")
                .about("Train the toy model and write per-step metrics as CSV")
                .arg(
                    Arg::new("config")
                        .long("config")
                        .value_name("FILE")
                        .help("flat `key = value` file; flags override it"),
                )
                .arg(
                    Arg::new("out")
                        .long("out")
                        .value_name("FILE")
                        .help("metrics CSV path (default: stdout)"),
                )
                .arg(
                    Arg::new("save-params")
                        .long("save-params")
                        .value_name("FILE")
                        .help("write the trained parameters"),
                )
                .arg(
                    Arg::new("eval-scenes")
                        .long("eval-scenes")
                        .value_name("N")
                        .value_parser(value_parser!(usize))
                        .help("evaluate on N held-out scenes after training (report on stderr)"),
                )
                .args(train_keys),
        )
        .subcommand(
            Command::new("gradcheck")
                .about("Compare the set-loss gradient with finite differences")
                .arg(
                    Arg::new("seeds")
                        .long("seeds")
                        .value_name("N")
                        .value_parser(value_parser!(usize))
                        .default_value("20"),
                )
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_name("S")
                        .value_parser(value_parser!(u64))
                        .default_value("0")
                        .help("first seed"),
                )
                .arg(
                    Arg::new("size")
                        .long("size")
                        .value_name("N,M,K")
                        .default_value("5,3,3"),
                )
                .arg(
                    Arg::new("instance")
                        .long("instance")
                        .value_name("FILE")
                        .help("check one instance file instead of random cases"),
                ),
        )
        .subcommand(
            Command::new("match")
                .about("Solve one assignment problem from a cost-matrix file")
                .arg(Arg::new("file").required(true).value_name("FILE")),
        )
        .subcommand(
            Command::new("selftest")
                .about("Run the property suites at reduced sample counts")
                .arg(
                    Arg::new("seed")
                        .long("seed")
                        .value_name("S")
                        .value_parser(value_parser!(u64))
                        .default_value("0"),
                )
                .arg(
                    Arg::new("inject-wrong-sign")
                        .long("inject-wrong-sign")
                        .action(ArgAction::SetTrue)
                        .hide(true),
                ),
        )
}

fn read(path: &str) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| usage(format!("cannot read {path}: {e}")))
}

fn write_to(path: Option<&String>, text: &str) -> Result<(), Failure> {
    let result = match path {
        Some(p) => fs::write(p, text).map_err(|e| format!("cannot write {p}: {e}")),
        None => std::io::stdout()
            .lock()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    result.map_err(Failure::Runtime)
}

fn train_config(m: &ArgMatches) -> Result<TrainConfig, Failure> {
    let mut settings = match m.get_one::<String>("config") {
        Some(path) => parse_config_text(&read(path)?, path).map_err(usage)?,
        None => Vec::new(),
    };
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            settings.push(Setting {
                key: key.to_string(),
                value: v.clone(),
                origin: format!("--{}", key.replace('_', "-")),
            });
        }
    }
    let mut cfg = TrainConfig::default();
    for s in &settings {
        apply(&mut cfg, s).map_err(usage)?;
    }
    cfg.validate().map_err(classify)?;
    Ok(cfg)
}

fn cmd_train(m: &ArgMatches) -> Outcome {
    let cfg = train_config(m)?;
    let out = train(&cfg).map_err(classify)?;
    write_to(m.get_one("out"), &metrics_csv(&out.metrics))?;
    if let Some(path) = m.get_one::<String>("save-params") {
        fs::write(path, out.params.to_text())
            .map_err(|e| Failure::Runtime(format!("cannot write {path}: {e}")))?;
    }
    if let Some(&n) = m.get_one::<usize>("eval-scenes") {
        if n > 0 {
            let e = evaluate(&out.params, &cfg.scene, &cfg.loss, n, cfg.seed).map_err(classify)?;
            eprintln!(
                "eval scenes={n} mean_matched_iou={} class_accuracy={}",
                e.mean_matched_iou, e.class_accuracy
            );
        }
    }
    Ok(true)
}

fn parse_size(text: &str) -> Result<(usize, usize, usize), Failure> {
    let bad = || {
        usage(format!(
            "--size must be N,M,K with positive N and K, got `{text}`"
        ))
    };
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    let [n, m, k] = parts[..] else {
        return Err(bad());
    };
    if n == 0 || k == 0 {
        return Err(bad());
    }
    if m > n {
        return Err(usage(format!(
            "--size: more targets ({m}) than slots ({n})"
        )));
    }
    Ok((n, m, k))
}

/// Prints one report line; returns whether it counts as a failure.
fn report_line(label: &str, r: &GradCheckReport<f64>) -> bool {
    let verdict = match (r.conclusive(), r.within(ABS_TOL, REL_TOL)) {
        (false, _) => "inconclusive",
        (true, true) => "pass",
        (true, false) => "FAIL",
    };
    println!(
        "{label} max_rel_err={:e} degenerate={} stable={} result={verdict}",
        r.max_relative_error, r.degenerate, r.stable
    );
    !r.passes(ABS_TOL, REL_TOL)
}

fn cmd_gradcheck(m: &ArgMatches) -> Outcome {
    if let Some(path) = m.get_one::<String>("instance") {
        let inst = Instance::parse(&read(path)?).map_err(classify)?;
        let (n, k) = (inst.num_slots(), inst.num_classes);
        let r = certify_gradient(
            |p| predictions_from_params(p, n, k),
            &inst.truth,
            &LossConfig::default(),
            &inst.params(),
            DEFAULT_STEP,
        )
        .map_err(classify)?;
        return Ok(!report_line(&format!("instance={path}"), &r));
    }

    let seeds = *m.get_one::<usize>("seeds").expect("defaulted");
    if seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let first = *m.get_one::<u64>("seed").expect("defaulted");
    let (n, mm, k) = parse_size(m.get_one::<String>("size").expect("defaulted"))?;
    let mut failures = 0;
    let mut inconclusive = 0;
    for seed in first..first + seeds as u64 {
        let r = random_model_gradcheck(seed, n, mm, k).map_err(classify)?;
        failures += usize::from(report_line(&format!("seed={seed}"), &r));
        inconclusive += usize::from(!r.conclusive());
    }
    println!(
        "summary seeds={seeds} failures={failures} inconclusive={inconclusive} tolerance=rel {REL_TOL:e} abs {ABS_TOL:e}"
    );
    Ok(failures == 0)
}

fn cmd_match(m: &ArgMatches) -> Outcome {
    let path = m.get_one::<String>("file").expect("required");
    let costs = parse_cost_matrix(&read(path)?).map_err(|e| usage(format!("{path}: {e}")))?;
    let solution = solve_rectangular(&costs).map_err(classify)?;
    write_to(None, &format_solution(&solution))?;
    Ok(true)
}

fn cmd_selftest(m: &ArgMatches) -> Outcome {
    let seed = *m.get_one::<u64>("seed").expect("defaulted");
    let builder = if m.get_flag("inject-wrong-sign") {
        wrong_sign_cost
    } else {
        aligned_cost
    };
    let reports = run_selftest(SelftestCounts::default(), seed, builder).map_err(classify)?;
    for r in &reports {
        println!("{r}");
    }
    let ok = reports.iter().all(|r| r.passed());
    println!("selftest {}", if ok { "passed" } else { "FAILED" });
    Ok(ok)
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match matches.subcommand() {
        Some(("train", m)) => cmd_train(m),
        Some(("gradcheck", m)) => cmd_gradcheck(m),
        Some(("match", m)) => cmd_match(m),
        Some(("selftest", m)) => cmd_selftest(m),
        _ => unreachable!("subcommand is required"),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            let (Failure::Usage(msg) | Failure::Runtime(msg)) = &f;
            eprintln!("error: {msg}");
            ExitCode::from(f.code())
        }
    }
}
