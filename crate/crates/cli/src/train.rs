//! Subgradient descent that stops once the robust test certifies an
//! `(epsilon, delta)` pair below the targets.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::json;

use stattest_core::exact::TestKind;
use stattest_core::model::{eval_loss, subgradient, Dataset, LossModel, Network, Unit};
use stattest_core::robust::line_search;

use crate::commands::num;
use crate::config::RunConfig;
use crate::error::{exit, CliError};
use crate::formats::{load_dataset, load_loss, load_network, write_json, NetworkFile};
use crate::{KindArg, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Schedule {
    /// `c / t`
    Harmonic,
    /// `c / sqrt(t)`
    Sqrt,
    Constant,
}

impl Schedule {
    fn step(self, c: f64, t: usize) -> f64 {
        match self {
            Schedule::Harmonic => c / t as f64,
            Schedule::Sqrt => c / (t as f64).sqrt(),
            Schedule::Constant => c,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub loss: PathBuf,
    /// Starting point; drawn from N(0, init_scale^2) with the run seed when omitted.
    #[arg(long)]
    pub net: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub hidden: usize,
    #[arg(long, default_value_t = 1.0)]
    pub init_scale: f64,
    #[arg(long, value_enum, default_value_t = KindArg::Clarke)]
    pub kind: KindArg,
    #[arg(long, value_enum, default_value_t = Schedule::Harmonic)]
    pub schedule: Schedule,
    #[arg(long, default_value_t = 0.5)]
    pub step_size: f64,
    #[arg(long, default_value_t = 1000)]
    pub iters: usize,
    #[arg(long, default_value_t = 10)]
    pub probe_every: usize,
    #[arg(long, default_value_t = 1e-6)]
    pub eps_target: f64,
    #[arg(long, default_value_t = 1e-2)]
    pub delta_target: f64,
    #[arg(long, default_value_t = 1.0)]
    pub delta0: f64,
    /// Halvings per line search.
    #[arg(long, default_value_t = 40)]
    pub max_halvings: usize,
    /// Final iterate as network JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub epsilon: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub iter: usize,
    pub loss: f64,
    /// Best finite certificate with `delta <= delta_target`, else the best
    /// finite one.
    pub best: Option<Certificate>,
    pub met: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub probes: Vec<Probe>,
    pub iterations: usize,
    pub certified: Option<Certificate>,
    pub stalled: bool,
    pub net: Network,
}

fn initial_net(args: &TrainArgs, data: &Dataset, seed: u64) -> Result<Network, CliError> {
    if let Some(path) = &args.net {
        return load_network(path);
    }
    if args.hidden == 0 || !(args.init_scale.is_finite() && args.init_scale > 0.0) {
        return Err(CliError::input("--hidden and --init-scale must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        args.init_scale * z
    };
    let units = (0..args.hidden)
        .map(|_| Unit::new(gauss(), (0..data.dim()).map(|_| gauss()).collect()))
        .collect();
    Ok(Network::new(units)?)
}

fn probe(
    args: &TrainArgs,
    cfg: &RunConfig,
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    iter: usize,
) -> Result<Probe, CliError> {
    let kind: TestKind = args.kind.into();
    let trace = line_search(kind, net, data, loss, args.delta0, args.max_halvings, &cfg.tolerances())?;
    let finite = trace.steps.iter().filter(|r| r.is_finite());
    let within = finite.clone().filter(|r| r.delta <= args.delta_target);
    // smallest epsilon, then smallest delta
    let pick = |it: &mut dyn Iterator<Item = &stattest_core::robust::RobustResult>| {
        it.map(|r| Certificate {
            epsilon: r.value(),
            delta: r.delta,
        })
        .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.delta.total_cmp(&b.delta)))
    };
    let best = pick(&mut within.clone()).or_else(|| pick(&mut finite.clone()));
    let met = best.is_some_and(|c| c.epsilon <= args.eps_target && c.delta <= args.delta_target);
    Ok(Probe {
        iter,
        loss: eval_loss(net, data, loss)?,
        best,
        met,
    })
}

pub fn train(
    args: &TrainArgs,
    cfg: &RunConfig,
    data: &Dataset,
    loss: &LossModel,
    start: Network,
) -> Result<TrainOutcome, CliError> {
    for (name, v) in [
        ("--step-size", args.step_size),
        ("--delta0", args.delta0),
        ("--delta-target", args.delta_target),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(CliError::input(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if !(args.eps_target >= 0.0) || args.probe_every == 0 || args.max_halvings == 0 {
        return Err(CliError::input(
            "--eps-target must be nonnegative; --probe-every and --max-halvings positive",
        ));
    }
    let mut net = start;
    let mut probes = Vec::new();
    let mut stalled = false;
    let mut t = 0;
    loop {
        let grad = subgradient(&net, data, loss)?;
        let zero = grad.iter().all(|&g| g == 0.0);
        if t % args.probe_every == 0 || t == args.iters || zero {
            let p = probe(args, cfg, &net, data, loss, t)?;
            let met = p.met;
            let certified = p.best;
            probes.push(p);
            if met {
                return Ok(TrainOutcome {
                    probes,
                    iterations: t,
                    certified,
                    stalled,
                    net,
                });
            }
        }
        if t == args.iters || zero {
            // a zero selection never moves again
            stalled = zero;
            break;
        }
        t += 1;
        net = net.shifted(&grad, -args.schedule.step(args.step_size, t))?;
    }
    Ok(TrainOutcome {
        probes,
        iterations: t,
        certified: None,
        stalled,
        net,
    })
}

pub fn run(cfg: &RunConfig, args: &TrainArgs) -> Result<Report, CliError> {
    let data = load_dataset(&args.data)?;
    let loss = load_loss(&args.loss)?;
    let start = initial_net(args, &data, cfg.seed)?;
    if start.dim() != data.dim() {
        return Err(CliError::input(format!(
            "dimension mismatch: network inner weights have {} entries, data points have {}",
            start.dim(),
            data.dim()
        )));
    }
    let outcome = train(args, cfg, &data, &loss, start)?;
    if let Some(path) = &args.out {
        write_json(path, &NetworkFile::from(&outcome.net))?;
    }

    let kind: TestKind = args.kind.into();
    let mut text = format!(
        "subgradient training, {kind} certificates, targets epsilon <= {}, delta <= {}\n",
        args.eps_target, args.delta_target
    );
    for p in &outcome.probes {
        let cert = p
            .best
            .map_or("none".to_string(), |c| format!("({}, {})", c.epsilon, c.delta));
        let _ = writeln!(text, "  iter {:5}  loss {:<24} certificate {cert}", p.iter, p.loss);
    }
    let best_so_far = outcome
        .probes
        .iter()
        .filter_map(|p| p.best)
        .min_by(|a, b| a.epsilon.total_cmp(&b.epsilon).then(a.delta.total_cmp(&b.delta)));
    let code = match outcome.certified {
        Some(c) => {
            let _ = writeln!(
                text,
                "certified after {} iterations: (epsilon, delta) = ({}, {})",
                outcome.iterations, c.epsilon, c.delta
            );
            exit::OK
        }
        None => {
            let why = if outcome.stalled {
                "subgradient vanished"
            } else {
                "iteration cap reached"
            };
            let best = best_so_far.map_or("none".to_string(), |c| format!("({}, {})", c.epsilon, c.delta));
            let _ = writeln!(
                text,
                "{why} after {} iterations; best certificate so far {best}",
                outcome.iterations
            );
            exit::CAP
        }
    };
    let cert_json = |c: Option<Certificate>| c.map(|c| json!({"epsilon": num(c.epsilon), "delta": c.delta}));
    let json = json!({
        "kind": kind.to_string(),
        "seed": cfg.seed,
        "iterations": outcome.iterations,
        "certified": cert_json(outcome.certified),
        "best_so_far": cert_json(best_so_far),
        "stalled": outcome.stalled,
        "probes": outcome.probes.iter().map(|p| json!({
            "iter": p.iter,
            "loss": num(p.loss),
            "certificate": cert_json(p.best),
        })).collect::<Vec<_>>(),
        "net": NetworkFile::from(&outcome.net),
    });
    Ok(Report { code, text, json })
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Parser;

    #[derive(Parser)]
    struct Wrap {
        #[command(flatten)]
        args: TrainArgs,
    }

    fn args(extra: &[&str]) -> TrainArgs {
        let mut argv = vec!["t", "--data", "d.json", "--loss", "l.json"];
        argv.extend(extra);
        Wrap::parse_from(argv).args
    }

    fn abs_problem(w: f64) -> (Network, Dataset, LossModel) {
        let net = Network::new(vec![Unit::new(1.0, vec![w])]).unwrap();
        let data = Dataset::new(vec![vec![1.0], vec![-1.0]], vec![0.0, 0.0]).unwrap();
        (net, data, LossModel::identity())
    }

    #[test]
    fn schedules() {
        assert_eq!(Schedule::Harmonic.step(0.5, 4), 0.125);
        assert_eq!(Schedule::Sqrt.step(0.5, 4), 0.25);
        assert_eq!(Schedule::Constant.step(0.5, 4), 0.5);
    }

    #[test]
    fn harmonic_steps_enter_the_rounding_basin() {
        let (net, data, loss) = abs_problem(0.7);
        let out = train(&args(&[]), &RunConfig::default(), &data, &loss, net).unwrap();
        let c = out.certified.unwrap();
        assert_eq!(c.epsilon, 0.0);
        assert!(c.delta <= 1e-2);
        assert!(out.net.unit(0).w[0].abs() <= c.delta);
    }

    #[test]
    fn vanishing_selection_stops_early() {
        // at the kink the tied-inactive selection is zero, and with delta
        // targets below every finite certificate nothing is certified
        let (net, data, loss) = abs_problem(0.0);
        let a = args(&["--eps-target", "0", "--delta-target", "1e-300", "--max-halvings", "3"]);
        let out = train(&a, &RunConfig::default(), &data, &loss, net).unwrap();
        assert!(out.stalled);
        assert_eq!(out.iterations, 0);
        assert!(out.certified.is_none());
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let (net, data, loss) = abs_problem(0.7);
        let a = args(&["--step-size", "0"]);
        assert!(train(&a, &RunConfig::default(), &data, &loss, net).is_err());
    }
}
