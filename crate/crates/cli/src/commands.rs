//! The `exact`, `robust`, `oracle` and `hardness` commands.

use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use stattest_core::chain::SqReport;
use stattest_core::exact::{etest_clarke, etest_frechet, ExactStatus, ExactTestResult, TestKind};
use stattest_core::hardness::{
    anft_witness, brute_sat, parse_dimacs, plt_stationary, plt_to_abs_normal, random_cnf3, sat_to_plt, AbsNormalForm,
    Cnf3, PltInstance, PltMode,
};
use stattest_core::model::{rho_and_partition, Dataset, LossModel, Network};
use stattest_core::oracle::{clarke_oracle_distance, frechet_oracle_check};
use stattest_core::robust::{
    constants_for, frechet_degenerate_points, line_search, ConstantBundle, LineSearchTrace, RobustResult, RobustStatus,
    StopReason,
};

use crate::config::{GuardConfig, RunConfig};
use crate::error::{exit, CliError};
use crate::formats::{
    load_dataset, load_loss, load_network, loss_name, read_json, read_text, write_json, write_text, AnfFile,
    NetworkFile, PltFile,
};
use crate::{CheckMode, HardnessCommand, ProblemArgs, Report};

/// `null` for non-finite values.
pub(crate) fn num(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

pub(crate) fn load_problem(p: &ProblemArgs) -> Result<(Network, Dataset, LossModel), CliError> {
    let net = load_network(&p.net)?;
    let data = load_dataset(&p.data)?;
    let loss = load_loss(&p.loss)?;
    if net.dim() != data.dim() {
        return Err(CliError::input(format!(
            "dimension mismatch: network inner weights have {} entries, data points have {}",
            net.dim(),
            data.dim()
        )));
    }
    Ok((net, data, loss))
}

fn sq_json(sq: &SqReport) -> Value {
    json!({
        "holds": sq.overall,
        "units": sq.units.iter().map(|u| json!({
            "holds": u.holds,
            "rank_plus": u.rank_plus,
            "rank_minus": u.rank_minus,
            "rank_joint": u.rank_joint,
        })).collect::<Vec<_>>(),
    })
}

fn sq_text(out: &mut String, sq: &SqReport) {
    let _ = writeln!(out, "SQ: {}", if sq.overall { "holds" } else { "fails" });
    for (k, u) in sq.units.iter().enumerate() {
        let _ = writeln!(
            out,
            "  unit {k}: rank(I+) = {}, rank(I-) = {}, rank(joint) = {}{}",
            u.rank_plus,
            u.rank_minus,
            u.rank_joint,
            if u.holds { "" } else { "  <- fails" }
        );
    }
}

pub(crate) fn exact_json(res: &ExactTestResult) -> Value {
    json!({
        "kind": res.kind.to_string(),
        "status": res.status.to_string(),
        "epsilon": res.epsilon.map(num),
        "sq": sq_json(&res.sq),
        "units": res.units.iter().map(|u| json!({
            "eps1": num(u.eps1),
            "eps2": num(u.eps2),
            "xi": u.xi,
        })).collect::<Vec<_>>(),
        "minimizer": res.minimizer,
    })
}

fn run_exact(
    kind: TestKind,
    net: &Network,
    data: &Dataset,
    loss: &LossModel,
    cfg: &RunConfig,
) -> Result<ExactTestResult, CliError> {
    let tol = cfg.tolerances();
    Ok(match kind {
        TestKind::Clarke => etest_clarke(net, data, loss, &tol)?,
        TestKind::Frechet => etest_frechet(net, data, loss, &tol)?,
    })
}

pub fn exact(cfg: &RunConfig, kind: TestKind, problem: &ProblemArgs) -> Result<Report, CliError> {
    let (net, data, loss) = load_problem(problem)?;
    let res = run_exact(kind, &net, &data, &loss, cfg)?;
    let mut text = format!(
        "exact {kind} test ({} loss, N = {}, H = {}, d = {})\n",
        loss_name(loss.kind()),
        data.len(),
        net.hidden(),
        net.dim()
    );
    sq_text(&mut text, &res.sq);
    let _ = writeln!(text, "status: {}", res.status);
    if let Some(eps) = res.epsilon {
        let _ = writeln!(text, "epsilon: {eps}");
        for (k, u) in res.units.iter().enumerate() {
            let _ = writeln!(text, "  unit {k}: eps1 = {}, eps2 = {}", u.eps1, u.eps2);
        }
    }
    Ok(Report {
        code: if res.status == ExactStatus::NotSq {
            exit::NOT_SQ
        } else {
            exit::OK
        },
        text,
        json: exact_json(&res),
    })
}

fn step_label(r: &RobustResult) -> String {
    match (&r.status, &r.exact) {
        (RobustStatus::RoundingInfeasible, _) => "infinite (rounding infeasible)".into(),
        (RobustStatus::TooFar, _) => format!("infinite (rounding moved {} > delta)", r.moved),
        (RobustStatus::Tested, Some(e)) => match e.status {
            ExactStatus::Value => format!("epsilon = {}", e.value()),
            ExactStatus::Infinite => "infinite (empty Frechet set)".into(),
            ExactStatus::NotSq => "infinite (rounded point not SQ)".into(),
        },
        (RobustStatus::Tested, None) => "infinite".into(),
    }
}

fn status_name(s: RobustStatus) -> &'static str {
    match s {
        RobustStatus::RoundingInfeasible => "rounding-infeasible",
        RobustStatus::TooFar => "too-far",
        RobustStatus::Tested => "tested",
    }
}

pub(crate) fn trace_json(trace: &LineSearchTrace) -> Value {
    json!({
        "steps": trace.steps.iter().map(|r| json!({
            "delta": r.delta,
            "status": status_name(r.status),
            "moved": num(r.moved),
            "value": num(r.value()),
            "rounded": r.rounded.as_ref().map(NetworkFile::from),
            "exact": r.exact.as_ref().map(exact_json),
        })).collect::<Vec<_>>(),
        "best": trace.best,
        "stop": match trace.stop {
            StopReason::IdentityRounding => "identity-rounding",
            StopReason::MaxIters => "max-iters",
        },
        "min_clearance": num(trace.min_clearance),
    })
}

fn constants_json(c: &ConstantBundle) -> Value {
    json!({
        "R": c.r, "B": c.b, "N": c.n, "H": c.h,
        "lip_value": num(c.lip_value), "lip_grad": num(c.lip_grad),
        "C1": num(c.c1), "C2": num(c.c2), "C3": num(c.c3), "C4": num(c.c4), "C5": num(c.c5),
        "C_mu_clarke": num(c.c_mu_clarke),
        "C1_frechet": num(c.c1_frechet), "C2_frechet": num(c.c2_frechet),
        "C4_frechet": num(c.c4_frechet), "C5_frechet": num(c.c5_frechet),
        "C_mu_frechet": num(c.c_mu_frechet),
        "C_u": num(c.c_u),
    })
}

pub fn robust(
    cfg: &RunConfig,
    kind: TestKind,
    problem: &ProblemArgs,
    delta0: f64,
    max_iters: usize,
) -> Result<Report, CliError> {
    if !(delta0.is_finite() && delta0 > 0.0) {
        return Err(CliError::input(format!(
            "--delta0 must be positive and finite, got {delta0}"
        )));
    }
    if max_iters == 0 {
        return Err(CliError::input("--max-iters must be positive"));
    }
    let (net, data, loss) = load_problem(problem)?;
    let tol = cfg.tolerances();
    let mut warnings = Vec::new();
    if kind == TestKind::Frechet {
        let bad = frechet_degenerate_points(&net, &data, &loss, 0.0)?;
        if !bad.is_empty() {
            warnings.push(format!(
                "Frechet nondegeneracy assumption (loss' != 0 at every tied point) fails at points {bad:?}; the certificate may be infinite"
            ));
        }
    }
    let trace = line_search(kind, &net, &data, &loss, delta0, max_iters, &tol)?;
    let constants = constants_for(&net, &data, &loss, delta0);
    let c_mu = constants.c_mu(kind);

    let mut text = format!(
        "robust {kind} test, delta0 = {delta0}, R = {}, min clearance = {}\n",
        data.radius(),
        trace.min_clearance
    );
    for w in &warnings {
        let _ = writeln!(text, "warning: {w}");
    }
    for (t, r) in trace.steps.iter().enumerate() {
        let _ = writeln!(text, "  t = {t:2}  delta = {:<12} {}", r.delta, step_label(r));
    }
    let _ = writeln!(
        text,
        "stop: {} after {} halvings",
        match trace.stop {
            StopReason::IdentityRounding => "rounding is the identity",
            StopReason::MaxIters => "iteration cap",
        },
        trace.steps.len() - 1
    );
    let best = trace.best_result();
    let bound = best.map(|b| c_mu * b.delta);
    match best {
        Some(b) => {
            let _ = writeln!(text, "certificate: (epsilon, delta) = ({}, {})", b.value(), b.delta);
            let _ = writeln!(
                text,
                "bound: C_mu * delta = {} (C_mu = {c_mu}); epsilon <= C_mu * delta: {}",
                c_mu * b.delta,
                b.value() <= c_mu * b.delta
            );
        }
        None => {
            let _ = writeln!(text, "certificate: none (every step infinite)");
        }
    }
    let _ = writeln!(
        text,
        "constants: C1 = {}, C2 = {}, C3 = {}, C4 = {}, C5 = {}, C_mu(clarke) = {}, C_mu(frechet) = {}, C_u = {}",
        constants.c1,
        constants.c2,
        constants.c3,
        constants.c4,
        constants.c5,
        constants.c_mu_clarke,
        constants.c_mu_frechet,
        constants.c_u
    );
    let json = json!({
        "kind": kind.to_string(),
        "delta0": delta0,
        "warnings": warnings,
        "trace": trace_json(&trace),
        "certificate": best.map(|b| json!({"epsilon": num(b.value()), "delta": b.delta})),
        "bound": bound.map(num),
        "constants": constants_json(&constants),
    });
    Ok(Report {
        code: exit::OK,
        text,
        json,
    })
}

pub fn oracle_compare(cfg: &RunConfig, problem: &ProblemArgs) -> Result<Report, CliError> {
    let (net, data, loss) = load_problem(problem)?;
    let tol = cfg.tolerances();
    let ties = rho_and_partition(&net, &data, &loss)?.partition.tie_count();
    GuardConfig::check("simultaneous ties", ties, cfg.guards.oracle_ties)?;

    let clarke = etest_clarke(&net, &data, &loss, &tol)?;
    let oracle = clarke_oracle_distance(&net, &data, &loss, &tol)?;
    let frechet = etest_frechet(&net, &data, &loss, &tol)?;
    // the Frechet set is empty exactly when the origin's test fails too
    let frechet_oracle = match &frechet.minimizer {
        Some(g) if frechet.status == ExactStatus::Value => frechet_oracle_check(g, &net, &data, &loss, &tol)?,
        _ => frechet_oracle_check(&vec![0.0; net.param_len()], &net, &data, &loss, &tol)?,
    };
    let scale = 1.0 + oracle.abs();
    let gap = (clarke.value() - oracle).abs();
    let clarke_ok = clarke.status == ExactStatus::NotSq || gap <= 1e3 * tol.qp_tol * scale;
    let frechet_ok = match frechet.status {
        ExactStatus::Value => frechet_oracle,
        ExactStatus::Infinite => !frechet_oracle,
        ExactStatus::NotSq => true,
    };
    let not_sq = clarke.status == ExactStatus::NotSq;

    let mut text = format!("oracle comparison ({ties} tied pre-activations)\n");
    sq_text(&mut text, &clarke.sq);
    if not_sq {
        let _ = writeln!(text, "clarke: formula not-SQ (skipped), oracle distance {oracle}");
    } else {
        let _ = writeln!(text, "clarke: formula {}, oracle {oracle}, gap {gap:e}", clarke.value());
    }
    match frechet.status {
        ExactStatus::Value => {
            let _ = writeln!(
                text,
                "frechet: formula {}, minimizer in oracle Frechet set: {frechet_oracle}",
                frechet.value()
            );
        }
        ExactStatus::Infinite => {
            let _ = writeln!(
                text,
                "frechet: formula infinite, origin in oracle Frechet set: {frechet_oracle}"
            );
        }
        ExactStatus::NotSq => {
            let _ = writeln!(text, "frechet: formula not-SQ (skipped)");
        }
    }
    let agree = clarke_ok && frechet_ok;
    let _ = writeln!(text, "agreement: {agree}");
    let json = json!({
        "ties": ties,
        "sq": sq_json(&clarke.sq),
        "clarke": {"formula": num(clarke.value()), "status": clarke.status.to_string(), "oracle": num(oracle), "gap": num(gap)},
        "frechet": {"formula": num(frechet.value()), "status": frechet.status.to_string(), "oracle_member": frechet_oracle},
        "agreement": agree,
    });
    let code = if !agree {
        exit::IO
    } else if not_sq {
        exit::NOT_SQ
    } else {
        exit::OK
    };
    Ok(Report { code, text, json })
}

fn load_cnf(path: &Path) -> Result<Cnf3, CliError> {
    Ok(parse_dimacs(&read_text(path)?)?)
}

pub fn hardness(cfg: &RunConfig, command: &HardnessCommand) -> Result<Report, CliError> {
    match command {
        HardnessCommand::Gen {
            cnf,
            random_vars,
            random_clauses,
            out,
            anf_out,
            dimacs_out,
        } => {
            let formula = match (cnf, random_vars, random_clauses) {
                (Some(path), _, _) => load_cnf(path)?,
                (None, Some(m), Some(n)) => {
                    if *m == 0 || *n == 0 {
                        return Err(CliError::input(
                            "random formulas need at least one variable and one clause",
                        ));
                    }
                    random_cnf3(&mut ChaCha8Rng::seed_from_u64(cfg.seed), *m, *n)
                }
                _ => return Err(CliError::input("give --cnf FILE or --random-vars M --random-clauses N")),
            };
            gen(&formula, out.as_deref(), anf_out.as_deref(), dimacs_out.as_deref())
        }
        HardnessCommand::Check { cnf, mode, eps } => check(cfg, &load_cnf(cnf)?, *mode, *eps),
        HardnessCommand::Anft { anf, plt, cnf } => {
            let (form, formula) = match (anf, plt, cnf) {
                (Some(p), _, _) => (AbsNormalForm::try_from(read_json::<AnfFile>(p)?)?, None),
                (None, Some(p), _) => (
                    plt_to_abs_normal(&PltInstance::try_from(read_json::<PltFile>(p)?)?),
                    None,
                ),
                (None, None, Some(p)) => {
                    let f = load_cnf(p)?;
                    (plt_to_abs_normal(&sat_to_plt(&f)?), Some(f))
                }
                _ => return Err(CliError::input("give one of --anf, --plt or --cnf")),
            };
            anft(cfg, &form, formula.as_ref())
        }
    }
}

fn gen(
    formula: &Cnf3,
    out: Option<&Path>,
    anf_out: Option<&Path>,
    dimacs_out: Option<&Path>,
) -> Result<Report, CliError> {
    let inst = sat_to_plt(formula)?;
    let file = PltFile::from(&inst);
    let mut text = String::new();
    if let Some(path) = dimacs_out {
        write_text(path, &formula.to_dimacs())?;
        let _ = writeln!(text, "wrote formula to {}", path.display());
    }
    if let Some(path) = anf_out {
        let anf = plt_to_abs_normal(&inst);
        write_json(path, &AnfFile::from(&anf))?;
        let _ = writeln!(
            text,
            "wrote abs-normal form with {} switches to {}",
            anf.switches(),
            path.display()
        );
    }
    match out {
        Some(path) => {
            write_json(path, &file)?;
            let _ = writeln!(
                text,
                "wrote PLT instance (m = {}, {} vectors) to {}",
                file.m,
                file.vectors.len(),
                path.display()
            );
        }
        None => {
            let _ = writeln!(text, "{}", serde_json::to_string_pretty(&file).unwrap_or_default());
        }
    }
    Ok(Report {
        code: exit::OK,
        text,
        json: json!({"m": file.m, "clauses": formula.num_clauses(), "plt": file}),
    })
}

fn check(cfg: &RunConfig, formula: &Cnf3, mode: CheckMode, eps: f64) -> Result<Report, CliError> {
    let tol = cfg.tolerances();
    let g = &cfg.guards;
    let inst = sat_to_plt(formula)?;
    let m = inst.dim();
    GuardConfig::check("variables for brute-force SAT", formula.num_vars(), g.sat_vars)?;
    let sat = brute_sat(formula)?;
    let modes: &[PltMode] = match mode {
        CheckMode::Exhaustive => &[PltMode::Exhaustive],
        CheckMode::Certificate => &[PltMode::Certificate],
        CheckMode::Both => &[PltMode::Exhaustive, PltMode::Certificate],
    };
    let mut verdicts = Vec::new();
    for &mode in modes {
        match mode {
            PltMode::Exhaustive if eps == 0.0 => GuardConfig::check("variables for sign enumeration", m, g.sign_vars)?,
            PltMode::Exhaustive => GuardConfig::check("variables for orthant enumeration", m, g.orthant_vars)?,
            PltMode::Certificate => GuardConfig::check(
                "clauses for selection enumeration",
                inst.num_clauses(),
                g.certificate_clauses,
            )?,
        }
        verdicts.push((mode, plt_stationary(&inst, eps, mode, &tol)?));
    }
    let stationary = verdicts[0].1;
    if verdicts.iter().any(|v| v.1 != stationary) {
        return Err(CliError::Failure(format!(
            "exhaustive and certificate modes disagree: {verdicts:?}"
        )));
    }
    // the reduction is exact only below the threshold 1/sqrt(m)
    let asserted = eps * eps * (m as f64) < 1.0;
    if asserted && sat == stationary {
        return Err(CliError::Failure(format!(
            "complement relation violated: satisfiable = {sat}, stationary = {stationary}"
        )));
    }
    let mut text = format!("{} / stationary: {stationary}\n", if sat { "SAT" } else { "UNSAT" });
    let _ = writeln!(text, "m = {m}, clauses = {}, eps = {eps}", formula.num_clauses());
    for (mode, v) in &verdicts {
        let _ = writeln!(text, "  {mode:?}: stationary = {v}");
    }
    let _ = writeln!(
        text,
        "relation: {}",
        if asserted {
            "satisfiable <=> not stationary holds"
        } else {
            "not asserted (eps >= 1/sqrt(m))"
        }
    );
    Ok(Report {
        code: exit::OK,
        text,
        json: json!({
            "satisfiable": sat,
            "stationary": stationary,
            "eps": eps,
            "modes": verdicts.iter().map(|(m, v)| json!({"mode": format!("{m:?}").to_lowercase(), "stationary": v})).collect::<Vec<_>>(),
            "relation_asserted": asserted,
        }),
    })
}

fn anft(cfg: &RunConfig, form: &AbsNormalForm, formula: Option<&Cnf3>) -> Result<Report, CliError> {
    GuardConfig::check("switching variables", form.switches(), cfg.guards.anft_switches)?;
    let witness = anft_witness(form, &cfg.tolerances())?;
    let minimal = witness.is_none();
    let mut text = format!("abs-normal form: n = {}, s = {}\n", form.dim(), form.switches());
    match &witness {
        Some(sigma) => {
            let _ = writeln!(text, "incompatible signature: {sigma:?}");
        }
        None => {
            let _ = writeln!(text, "every signature is compatible");
        }
    }
    let _ = writeln!(text, "first-order minimal: {minimal}");
    let mut json = json!({"n": form.dim(), "s": form.switches(), "first_order_minimal": minimal, "witness": witness});
    if let Some(f) = formula {
        GuardConfig::check("variables for brute-force SAT", f.num_vars(), cfg.guards.sat_vars)?;
        let sat = brute_sat(f)?;
        if sat == minimal {
            return Err(CliError::Failure(format!(
                "complement relation violated: satisfiable = {sat}, first-order minimal = {minimal}"
            )));
        }
        let _ = writeln!(
            text,
            "{} (satisfiable <=> not first-order minimal holds)",
            if sat { "SAT" } else { "UNSAT" }
        );
        json["satisfiable"] = json!(sat);
    }
    Ok(Report {
        code: exit::OK,
        text,
        json,
    })
}
