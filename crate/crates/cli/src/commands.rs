//! One function per subcommand. Each resolves its settings (flag, then
//! config file, then default), runs the pipeline and returns an [`Output`].

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use stablegw::analysis::{
    beta_formula1, beta_formula2, beta_value, c0_constant, c1_identity, conductance_mean_scan_pools, conductance_moment_scan,
    dimension_bound, discrete_dimension_scan, kappa_consistency, level_size_check, mean_transfer, moment_identity, ode_residual,
    solve_grid, speed_monotonicity_pools, KappaTable, KappaWeight, ScanReport, ScanRow,
};
use stablegw::battery::{Battery, BatteryConfig, Scale, DEFAULT_GRID};
use stablegw::ctgw::{level_laplace_check, level_mean_check, martingale_check, sample_ctgw, DEFAULT_EVENT_CAP, DEFAULT_NODE_CAP as CTGW_CAP};
use stablegw::discrete::{reduce, sample_conditioned, DEFAULT_NODE_CAP, DEFAULT_RETRY_BUDGET};
use stablegw::offspring::{coupled_sample, OffspringDist};
use stablegw::rde::{contraction_constant, fit_shape_on_12, solve_gamma, ConductancePool, Noise, SolveOptions, StopRule, DEFAULT_MAX_ITER, DEFAULT_POOL_SIZE, DEFAULT_TOL};
use stablegw::streams::{child_seed, substream, Tag};

use crate::config::{pick, FileConfig};
use crate::output::{Format, Output};
use crate::{
    BetaArgs, BetaMethod, Cli, Command, CoupleArgs, CtgwArgs, DiscreteArgs, DiscreteScan, IdentitiesArgs, NoiseArg, OdeArgs, PoolArgs,
    SpeedArgs, VerifyArgs, EXIT_FAILURE, EXIT_OK, EXIT_USAGE, EXIT_WARNINGS,
};

pub const DEFAULT_SEED: u64 = 1;
const DEFAULT_SAMPLES: usize = 1_000_000;
const DEFAULT_KAPPA_TABLE: usize = 400_000;

#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Failure(String),
}

impl From<stablegw::Error> for CmdError {
    fn from(e: stablegw::Error) -> Self {
        use stablegw::Error as E;
        match e {
            E::Param(_) | E::Io(_) | E::Json(_) | E::PoolFormat(_) | E::SizeMismatch(..) => CmdError::Usage(e.to_string()),
            _ => CmdError::Failure(e.to_string()),
        }
    }
}

type Res<T> = Result<T, CmdError>;

struct Ctx<'a> {
    file: &'a FileConfig,
    seed: u64,
    out: Option<PathBuf>,
}

impl Ctx<'_> {
    fn sub(&self, k: u64) -> u64 {
        child_seed(self.seed, Tag::Scan, k)
    }
}

pub fn run(cli: &Cli, file: &FileConfig) -> u8 {
    let format = match (cli.global.format, &file.format) {
        (Some(f), _) => f,
        (None, Some(s)) => match s.parse::<Format>() {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: bad format in config: {e}");
                return EXIT_USAGE;
            }
        },
        (None, None) => Format::Json,
    };
    let ctx = Ctx { file, seed: pick(cli.global.seed, file.seed, DEFAULT_SEED), out: cli.global.out.clone().or(file.out.clone()) };
    let result = match &cli.command {
        Command::Gamma(a) => gamma(&ctx, a),
        Command::Beta(a) => beta(&ctx, a),
        Command::Ode(a) => ode(&ctx, a),
        Command::Identities(a) => identities(&ctx, a),
        Command::Discrete(a) => discrete(&ctx, a),
        Command::Couple(a) => couple(&ctx, a),
        Command::Ctgw(a) => ctgw(&ctx, a),
        Command::Speed(a) => speed(&ctx, a),
        Command::Verify(a) => return verify(&ctx, a, format),
    };
    let mut out = match result {
        Ok(o) => o,
        Err(CmdError::Usage(m)) => {
            eprintln!("error: {m}");
            return EXIT_USAGE;
        }
        Err(CmdError::Failure(m)) => {
            eprintln!("error: {m}");
            return EXIT_FAILURE;
        }
    };
    out.gather_warnings();
    let text = out.raw.clone().unwrap_or_else(|| out.render(format));
    // gamma writes its pool to --out, so its report always goes to stdout
    let target = if matches!(cli.command, Command::Gamma(_)) { None } else { ctx.out.as_deref() };
    if let Err(e) = emit(target, &text) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    if out.warnings.is_empty() {
        EXIT_OK
    } else {
        EXIT_WARNINGS
    }
}

fn emit(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            use std::io::Write;
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.flush()
        }
    }
}

fn need<T>(v: Option<T>, what: &str) -> Res<T> {
    v.ok_or_else(|| CmdError::Usage(format!("missing --{what}")))
}

fn solve_options(ctx: &Ctx, a: &PoolArgs, seed: u64) -> Res<SolveOptions> {
    let f = ctx.file;
    let noise = match (a.noise, &f.noise) {
        (Some(NoiseArg::Fresh), _) => Noise::Fresh,
        (Some(NoiseArg::Frozen), _) => Noise::Frozen,
        (None, Some(s)) if s == "fresh" => Noise::Fresh,
        (None, Some(s)) if s == "frozen" => Noise::Frozen,
        (None, Some(s)) => return Err(CmdError::Usage(format!("noise must be frozen or fresh, got {s:?}"))),
        (None, None) => Noise::Frozen,
    };
    Ok(SolveOptions {
        pool_size: pick(a.pool_size, f.pool_size, DEFAULT_POOL_SIZE),
        max_iter: pick(a.max_iter, f.max_iter, DEFAULT_MAX_ITER),
        tol: pick(a.tol, f.tol, DEFAULT_TOL),
        seed,
        noise,
    })
}

fn opts_json(o: &SolveOptions) -> Value {
    json!({ "pool_size": o.pool_size, "max_iter": o.max_iter, "tol": o.tol, "seed": o.seed, "noise": o.noise })
}

/// Load `--pool` or solve at `--alpha`, with a record of where it came from.
fn obtain_pool(ctx: &Ctx, a: &PoolArgs) -> Res<(ConductancePool, Value)> {
    if let Some(path) = a.pool.clone().or(ctx.file.pool.clone()) {
        let pool = ConductancePool::load(&path)?;
        let cfg = json!({ "pool": path.display().to_string(), "alpha": pool.alpha, "pool_size": pool.len(), "pool_seed": pool.seed });
        return Ok((pool, cfg));
    }
    let alpha = need(a.alpha.or(ctx.file.alpha), "alpha (or --pool)")?;
    let opts = solve_options(ctx, a, ctx.seed)?;
    let pool = solve_gamma(alpha, &opts)?;
    let mut cfg = opts_json(&opts);
    cfg["alpha"] = json!(alpha);
    Ok((pool, cfg))
}

fn pool_warnings(pool: &ConductancePool) -> Vec<String> {
    match pool.stop_rule {
        StopRule::Converged => vec![],
        rule => vec![format!("pool at alpha = {} stopped by {rule:?} after {} iterations", pool.alpha, pool.iterations)],
    }
}

fn pool_summary(pool: &ConductancePool) -> Value {
    let m = moment_identity(pool);
    let shape = fit_shape_on_12(pool);
    json!({
        "alpha": pool.alpha,
        "pool_size": pool.len(),
        "seed": pool.seed,
        "iterations": pool.iterations,
        "stop_rule": pool.stop_rule,
        "last_d1": pool.last_d1,
        "min": pool.min(),
        "max": pool.max(),
        "mean": pool.mean(),
        "mean_se": pool.moment_se(1),
        "second_moment": pool.moment(2),
        "moment_identity": m,
        "shape_fit": shape,
        "contraction_constant": contraction_constant(pool.alpha).ok(),
    })
}

fn gamma(ctx: &Ctx, a: &PoolArgs) -> Res<Output> {
    let (pool, mut cfg) = obtain_pool(ctx, a)?;
    let mut result = pool_summary(&pool);
    if let Some(path) = &ctx.out {
        if path.extension().is_some_and(|e| e == "csv") {
            pool.save_csv(path)?;
        } else {
            pool.save_bin(path)?;
        }
        result["pool_file"] = json!(path.display().to_string());
        cfg["out"] = json!(path.display().to_string());
    }
    let mut out = Output::new("gamma", ctx.seed, cfg);
    out.warnings = pool_warnings(&pool);
    out.result = result;
    Ok(out)
}

fn beta(ctx: &Ctx, a: &BetaArgs) -> Res<Output> {
    let f = ctx.file;
    let (pool, mut cfg) = obtain_pool(ctx, &a.pool)?;
    let n = pick(a.samples, f.samples, DEFAULT_SAMPLES);
    let table_size = pick(a.kappa_table, f.kappa_table, DEFAULT_KAPPA_TABLE);
    cfg["method"] = json!(format!("{:?}", a.method).to_lowercase());
    cfg["samples"] = json!(n);
    cfg["kappa_table"] = json!(table_size);
    cfg["independent_pool"] = json!(a.independent_pool);
    let mut out = Output::new("beta", ctx.seed, cfg);
    out.warnings = pool_warnings(&pool);
    let wants = |m: BetaMethod| a.method == m || (a.method == BetaMethod::All && m != BetaMethod::Unweighted);
    let table = if wants(BetaMethod::Formula2) || a.method == BetaMethod::Unweighted {
        let table_pool = if a.independent_pool {
            let opts = solve_options(ctx, &a.pool, ctx.sub(40))?;
            let p = solve_gamma(pool.alpha, &opts)?;
            out.warnings.extend(pool_warnings(&p));
            p
        } else {
            pool.clone()
        };
        Some(KappaTable::build(&table_pool, table_size, ctx.sub(33))?)
    } else {
        None
    };
    if wants(BetaMethod::Value) {
        out.reports.push(beta_value(&pool, ctx.sub(31)));
    }
    if wants(BetaMethod::Formula1) {
        out.reports.push(beta_formula1(&pool, n, ctx.sub(32))?);
    }
    if let Some(t) = &table {
        if wants(BetaMethod::Formula2) {
            out.reports.push(beta_formula2(&pool, t, KappaWeight::Table, n, ctx.sub(34))?);
        }
        if a.method == BetaMethod::Unweighted {
            out.reports.push(beta_formula2(&pool, t, KappaWeight::One, n, ctx.sub(34))?);
        }
    }
    let agreement = out.reports.iter().enumerate().all(|(i, r)| out.reports[i + 1..].iter().all(|s| r.overlaps(s)));
    let bound = dimension_bound(&out.reports);
    if out.reports.len() > 1 && !agreement {
        out.warnings.push("estimator intervals do not all overlap".into());
    }
    out.result = json!({ "reports": out.reports, "agreement": agreement, "dimension_bound": bound });
    Ok(out)
}

fn ode(ctx: &Ctx, a: &OdeArgs) -> Res<Output> {
    let (pool, mut cfg) = obtain_pool(ctx, &a.pool)?;
    let ell = a.ell.clone().or(ctx.file.ell.clone()).unwrap_or_else(|| vec![0.25, 1.0, 4.0]);
    if ell.iter().any(|&l| !(l > 0.0)) {
        return Err(CmdError::Usage("every --ell must be positive".into()));
    }
    cfg["ell"] = json!(ell);
    cfg["control"] = json!(a.control);
    let rows = ode_residual(&pool, &ell);
    let mut out = Output::new("ode", ctx.seed, cfg);
    out.warnings = pool_warnings(&pool);
    let mut result = json!({ "residuals": rows, "within_3se": rows.iter().all(|r| r.residual.abs() < 3.0 * r.std_error) });
    if a.control {
        let ones = ConductancePool::ones(pool.alpha, pool.len())?;
        result["control"] = json!(ode_residual(&ones, &ell));
    }
    out.result = result;
    Ok(out)
}

fn identities(ctx: &Ctx, a: &IdentitiesArgs) -> Res<Output> {
    let f = ctx.file;
    let (pool, mut cfg) = obtain_pool(ctx, &a.pool)?;
    let rs = a.r_list.clone().or(f.r_list.clone()).unwrap_or_else(|| vec![1.0, 2.0, 5.0]);
    let n = pick(a.samples, f.samples, DEFAULT_SAMPLES);
    let table_size = pick(a.kappa_table, f.kappa_table, DEFAULT_KAPPA_TABLE);
    cfg["r_list"] = json!(rs);
    cfg["samples"] = json!(n);
    cfg["kappa_table"] = json!(table_size);
    let mut out = Output::new("identities", ctx.seed, cfg);
    out.warnings = pool_warnings(&pool);
    let c1 = c1_identity(&pool, ctx.sub(51));
    out.warnings.extend(c1.warnings.iter().map(|w| format!("c1 identity: {w}")));
    let table = KappaTable::build(&pool, table_size, ctx.sub(52))?;
    let kappa = rs
        .iter()
        .enumerate()
        .map(|(i, &r)| kappa_consistency(&pool, r, n, &table, ctx.sub(60 + i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    out.result = json!({
        "c1_identity": c1,
        "moment_identity": moment_identity(&pool),
        "mean_transfer": mean_transfer(&pool, n, ctx.sub(53))?,
        "kappa_consistency": kappa,
        "c0": c0_constant(),
    });
    Ok(out)
}

fn discrete(ctx: &Ctx, a: &DiscreteArgs) -> Res<Output> {
    let f = ctx.file;
    let alpha = need(a.alpha.or(f.alpha), "alpha")?;
    let n_list = a.n_list.clone().or(f.n_list.clone()).unwrap_or_else(|| vec![16, 32, 64]);
    if n_list.is_empty() || n_list.contains(&0) {
        return Err(CmdError::Usage("--n-list needs positive levels".into()));
    }
    let replicas = pick(a.replicas, f.replicas, 1000);
    let exps = a.exponents.clone().or(f.exponents.clone()).unwrap_or_else(|| vec![1.0, (alpha + 1.0) / 2.0]);
    let cfg = json!({ "alpha": alpha, "n_list": n_list, "replicas": replicas, "scan": format!("{:?}", a.scan).to_lowercase(), "exponents": exps });
    let mut out = Output::new("discrete", ctx.seed, cfg);
    let seed = ctx.sub(70);
    match a.scan {
        DiscreteScan::Dimension => {
            let s = discrete_dimension_scan(alpha, &n_list, replicas, seed)?;
            out.result = serde_json::to_value(&s).unwrap();
            out.scans.push(s.scan);
        }
        DiscreteScan::Moments => {
            let s = conductance_moment_scan(alpha, &n_list, &exps, replicas, seed)?;
            out.result = serde_json::to_value(&s).unwrap();
            out.scans.push(s);
        }
        DiscreteScan::Levels => {
            let mut scan = ScanReport::new("level_size_scan", "n").with_param("alpha", alpha);
            let mut checks = Vec::new();
            for &n in &n_list {
                let c = level_size_check(alpha, n, replicas, seed)?;
                let mut row = ScanRow { x: n as f64, estimate: c.scaled_mean, stderr: c.scaled_se, replicas, seed, extra: Default::default() };
                row.extra.insert("q_n".into(), c.q_n);
                row.extra.insert("z".into(), c.z);
                scan.rows.push(row);
                if c.discards > 0 {
                    scan.warnings.push(format!("n = {n}: {} attempts dropped at the node cap", c.discards));
                }
                checks.push(c);
            }
            out.result = json!({ "checks": checks, "scan": scan });
            out.scans.push(scan);
        }
        DiscreteScan::Dump => {
            let n = n_list[0];
            let rho = OffspringDist::rho_canonical(alpha)?;
            let mut rng = substream(seed, Tag::Discrete, n as u64, 0);
            let c = sample_conditioned(&rho, n, DEFAULT_NODE_CAP, DEFAULT_RETRY_BUDGET, &mut rng)?;
            let t = reduce(&c.tree, n)?;
            out.result = json!({ "n": n, "vertices": t.len(), "conductance": t.conductance_n(), "entropy": t.entropy() });
            out.raw = Some(t.dump_csv());
        }
    }
    Ok(out)
}

fn grid(a: &Option<Vec<f64>>, f: &FileConfig) -> Res<Vec<f64>> {
    let mut g = a.clone().or(f.alpha_grid.clone()).unwrap_or_else(|| DEFAULT_GRID.to_vec());
    if g.is_empty() {
        return Err(CmdError::Usage("empty --alpha-grid".into()));
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    Ok(g)
}

fn couple(ctx: &Ctx, a: &CoupleArgs) -> Res<Output> {
    let alphas = grid(&a.alpha_grid, ctx.file)?;
    if a.grid_points == 0 {
        return Err(CmdError::Usage("--grid-points must be positive".into()));
    }
    let opts = solve_options(ctx, &a.pool, ctx.seed)?;
    let mut cfg = opts_json(&opts);
    cfg["alpha_grid"] = json!(alphas);
    cfg["grid_points"] = json!(a.grid_points);
    let mut violations = 0usize;
    for i in 0..a.grid_points {
        let u = (i as f64 + 0.5) / a.grid_points as f64;
        let ks = alphas.iter().map(|&al| coupled_sample(u, al)).collect::<Result<Vec<_>, _>>()?;
        violations += ks.windows(2).filter(|w| w[1] > w[0]).count();
    }
    let pools = solve_grid(&alphas, &opts)?;
    let means = conductance_mean_scan_pools(&pools);
    let mut out = Output::new("couple", ctx.seed, cfg);
    for p in &pools {
        out.warnings.extend(pool_warnings(p));
    }
    if violations > 0 {
        out.warnings.push(format!("{violations} coupling violations"));
    }
    out.result = json!({ "coupling": { "violations": violations, "monotone": violations == 0 }, "means": means });
    out.scans.push(means.scan);
    Ok(out)
}

fn ctgw(ctx: &Ctx, a: &CtgwArgs) -> Res<Output> {
    let f = ctx.file;
    let alpha = need(a.alpha.or(f.alpha), "alpha")?;
    let r = pick(a.r, f.r, 4.0);
    let replicas = pick(a.replicas, f.replicas, 2000);
    let us = a.u.clone().or(f.u.clone()).unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let cfg = json!({ "alpha": alpha, "r": r, "replicas": replicas, "u": us, "dump": a.dump, "delta": a.delta });
    let mut out = Output::new("ctgw", ctx.seed, cfg);
    if a.dump {
        let mut rng = substream(ctx.sub(80), Tag::Ctgw, 0, 2);
        let t = sample_ctgw(alpha, r, CTGW_CAP, &mut rng)?;
        if t.overflow {
            out.warnings.push(format!("tree truncated at {} nodes", t.len()));
        }
        let t = if a.delta { t.map_to_delta() } else { t };
        out.raw = Some(t.dump());
        return Ok(out);
    }
    let level = level_mean_check(alpha, r, replicas, CTGW_CAP, ctx.sub(81))?;
    let laplace = us
        .iter()
        .enumerate()
        .map(|(i, &u)| level_laplace_check(alpha, r, u, replicas, ctx.sub(82 + i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    let mart = martingale_check(alpha, r, &us, replicas, DEFAULT_EVENT_CAP, ctx.sub(90))?;
    if level.discards > 0 {
        out.warnings.push(format!("{} trees dropped at the node cap", level.discards));
    }
    if mart.discards > 0 {
        out.warnings.push(format!("{} count-process runs dropped at the event cap", mart.discards));
    }
    out.result = json!({ "level_mean": level, "level_laplace": laplace, "martingale": mart });
    Ok(out)
}

fn speed(ctx: &Ctx, a: &SpeedArgs) -> Res<Output> {
    let alphas = grid(&a.alpha_grid, ctx.file)?;
    let opts = solve_options(ctx, &a.pool, ctx.seed)?;
    let mut cfg = opts_json(&opts);
    cfg["alpha_grid"] = json!(alphas);
    let pools = solve_grid(&alphas, &opts)?;
    let s = speed_monotonicity_pools(&pools, ctx.sub(100));
    let mut out = Output::new("speed", ctx.seed, cfg);
    for p in &pools {
        out.warnings.extend(pool_warnings(p));
    }
    out.result = serde_json::to_value(&s).unwrap();
    out.reports = s.speeds;
    out.scans.push(s.scan);
    Ok(out)
}

/// Exit 0 when every criterion passes, 1 when only statistical checks
/// fail, 3 when a hard check fails.
fn verify(ctx: &Ctx, a: &VerifyArgs, format: Format) -> u8 {
    let scale = if a.quick { Scale::Quick } else { Scale::Full };
    let mut cfg = BatteryConfig::new(scale, ctx.seed);
    if let Some(alpha) = a.alpha.or(ctx.file.alpha) {
        if !(alpha > 1.0 && alpha <= 2.0) {
            eprintln!("error: alpha must lie in (1, 2], got {alpha}");
            return EXIT_USAGE;
        }
        cfg = cfg.focus(alpha);
    }
    let mut battery = Battery::new(cfg);
    let report = battery.run(|c, dt| {
        eprintln!("{} [{:.1}s]", c.line(), dt.as_secs_f64());
        for k in c.failed() {
            eprintln!("    {}: {}", k.label, k.detail);
        }
    });
    let report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_FAILURE;
        }
    };
    for (label, secs) in &battery.timings {
        eprintln!("time {label}: {secs:.2}s");
    }
    let mut out = Output::new("verify", ctx.seed, serde_json::to_value(&report.config).unwrap());
    out.result = serde_json::to_value(&report).unwrap();
    let text = match format {
        Format::Csv => {
            let mut s = String::from("criterion,check,hard,pass,detail\n");
            for c in &report.criteria {
                for k in &c.checks {
                    s.push_str(&format!("{},\"{}\",{},{},\"{}\"\n", c.id, k.label.replace('"', "\"\""), k.hard, k.pass, k.detail.replace('"', "\"\"")));
                }
            }
            s
        }
        Format::Table => report.criteria.iter().map(|c| c.line() + "\n").collect(),
        Format::Json => out.render(Format::Json),
    };
    if let Err(e) = emit(ctx.out.as_deref(), &text) {
        eprintln!("error: {e}");
        return EXIT_USAGE;
    }
    if !report.hard_pass {
        EXIT_FAILURE
    } else if !report.pass {
        EXIT_WARNINGS
    } else {
        EXIT_OK
    }
}
