//! Experiment execution per kind.

use std::path::Path;

use morbit::decomp::{lift_witness, verify_decomposition};
use morbit::dynsys::{DiscreteMeasure, Point, System};
use morbit::periodic::{
    check_closable, check_density_convex, check_density_ergodic, check_linkable_pair, PeriodicOrbit, Target,
};
use morbit::pseudometric::{ebar_estimate, vset_estimate, Coarsening};
use morbit::shadowing::{
    build_aapo, capped_horizons, chain_realization, is_aapo, schedule_validate, trace_error, BlockSchedule,
};
use morbit::transport::w1_discrete;
use serde_json::json;

use crate::config::*;
use crate::output::{cells, error_value, Artifacts, Csv, Stamp};
use crate::CliError;

/// Exit status of a finished run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Status {
    Ok,
    Invalid,
    Exhausted,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Invalid => "validation_failed",
            Status::Exhausted => "cap_exhausted",
        }
    }

    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::Invalid => 2,
            Status::Exhausted => 3,
        }
    }
}

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    stamp: Stamp,
    out: Artifacts,
    resolver: Resolver,
}

impl Ctx<'_> {
    fn name(&self, ext: &str) -> String {
        format!("{}.{ext}", self.cfg.stem())
    }

    fn named(&self, suffix: &str, ext: &str) -> String {
        format!("{}_{suffix}.{ext}", self.cfg.stem())
    }

    fn report<T: serde::Serialize>(&mut self, status: Status, result: &T) -> Result<Status, CliError> {
        let name = self.name("json");
        self.out.json(&self.stamp, name, status.label(), result)?;
        Ok(status)
    }

    fn system(&self) -> &System {
        &self.cfg.system
    }
}

/// Runs the experiment and writes its artifacts into `out_dir`.
pub fn run(bytes: &[u8], cfg: &ExperimentConfig, out_dir: &Path) -> Result<u8, CliError> {
    let mut ctx = Ctx {
        cfg,
        stamp: Stamp::new(bytes, cfg),
        out: Artifacts::default(),
        resolver: Resolver::new(cfg.seed, cfg.arithmetic),
    };
    let status = match dispatch(&mut ctx) {
        Ok(s) => s,
        Err(e) if e.exit_code() == 3 => {
            ctx.out = Artifacts::default();
            ctx.report(Status::Exhausted, &error_value(&e))?;
            eprintln!("morbit: {e}");
            Status::Exhausted
        }
        Err(e) => return Err(e),
    };
    for name in ctx.out.write(out_dir)? {
        println!("{}", out_dir.join(name).display());
    }
    Ok(status.code())
}

/// Parses kind-specific parameters and checks what can be checked without
/// running the experiment.
pub fn validate(cfg: &ExperimentConfig) -> Result<(), CliError> {
    let mut r = Resolver::new(cfg.seed, cfg.arithmetic);
    let s = &cfg.system;
    let check = |p: &Point| s.check_point(p).map_err(CliError::from);
    match cfg.kind.as_str() {
        "dist" => {
            let p: DistParams = params(cfg)?;
            p.mu.support().iter().chain(p.nu.support()).try_for_each(check)?;
        }
        "ebar" => {
            let p: EbarParams = params(cfg)?;
            check(&r.point(&p.x)?)?;
            check(&r.point(&p.y)?)?;
            p.horizons.resolve()?;
        }
        "vset" => {
            let p: VsetParams = params(cfg)?;
            check(&r.point(&p.x)?)?;
            p.checkpoints.resolve()?;
        }
        "density" => {
            let p: DensityParams = params(cfg)?;
            let targets = r.points(&p.targets)?;
            targets.iter().try_for_each(check)?;
            r.source(&p.source, targets.first())?;
            positive_eps(p.eps)?;
        }
        "closable" => {
            let p: ClosableParams = params(cfg)?;
            let x = r.point(&p.x)?;
            check(&x)?;
            r.source(&p.source, Some(&x))?;
            positive_eps(p.eps)?;
        }
        "linkable" => {
            let p: LinkableParams = params(cfg)?;
            check(&r.point(&p.y1)?)?;
            check(&r.point(&p.y2)?)?;
            r.source(&p.source, None)?;
            positive_eps(p.eps)?;
        }
        "aapo" => {
            let p: AapoParams = params(cfg)?;
            schedule_ok(s, &p.schedule)?;
        }
        "trace" => {
            let p: TraceParams = params(cfg)?;
            match &p.sequence {
                SequenceSpec::Points { points } => r.points(points)?.iter().try_for_each(check)?,
                SequenceSpec::Schedule { schedule, .. } => schedule_ok(s, schedule)?,
            }
            check(&r.point(&p.x)?)?;
            p.horizons.resolve()?;
        }
        "decomp" => {
            let p: DecompParams = params(cfg)?;
            p.decomposition.check()?;
        }
        other => return Err(CliError::config("kind", format!("unknown experiment kind `{other}`"))),
    }
    Ok(())
}

fn positive_eps(eps: f64) -> Result<(), CliError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(CliError::config("params.eps", "must be a positive number"))
    }
}

fn schedule_ok(system: &System, s: &BlockSchedule) -> Result<(), CliError> {
    let report = schedule_validate(system, s)?;
    if report.valid {
        Ok(())
    } else {
        let mut why = report.growth_violations;
        why.extend(report.errors);
        Err(CliError::config("params.schedule", why.join("; ")))
    }
}

fn dispatch(ctx: &mut Ctx) -> Result<Status, CliError> {
    match ctx.cfg.kind.as_str() {
        "dist" => dist(ctx),
        "ebar" => ebar(ctx),
        "vset" => vset(ctx),
        "density" => density(ctx),
        "closable" => closable(ctx),
        "linkable" => linkable(ctx),
        "aapo" => aapo(ctx),
        "trace" => trace(ctx),
        "decomp" => decomp(ctx),
        other => Err(CliError::config("kind", format!("unknown experiment kind `{other}`"))),
    }
}

fn cast_measure(ctx: &Ctx, m: &DiscreteMeasure) -> Result<DiscreteMeasure, CliError> {
    let support = m.support().iter().map(|p| ctx.resolver.cast(p.clone())).collect();
    Ok(DiscreteMeasure::new(support, m.weights().to_vec())?)
}

fn dist(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: DistParams = params(ctx.cfg)?;
    let mu = cast_measure(ctx, &p.mu)?;
    let nu = cast_measure(ctx, &p.nu)?;
    let (_, plan) = w1_discrete(&mu, &nu, ctx.system())?;
    ctx.report(Status::Ok, &plan)
}

fn ebar(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: EbarParams = params(ctx.cfg)?;
    let x = ctx.resolver.point(&p.x)?;
    let y = ctx.resolver.point(&p.y)?;
    let horizons = p.horizons.resolve()?;
    let est = ebar_estimate(ctx.system(), &x, &y, &horizons, p.tail_window)?;
    let mut csv = Csv::new(vec!["horizon", "value", "value_exact"]);
    for (h, v) in est.horizons.iter().zip(&est.values) {
        let [a, b] = cells(v);
        csv.push(vec![h.to_string(), a, b]);
    }
    let name = ctx.name("csv");
    ctx.out.csv(&ctx.stamp, name, &csv);
    ctx.report(Status::Ok, &json!({ "x": x, "y": y, "estimate": est }))
}

fn vset(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: VsetParams = params(ctx.cfg)?;
    let x = ctx.resolver.point(&p.x)?;
    let checkpoints = p.checkpoints.resolve()?;
    let c = p.coarsening.unwrap_or_else(|| Coarsening::default_for(ctx.system()));
    let est = vset_estimate(ctx.system(), &x, &checkpoints, &c)?;
    let mut csv = Csv::new(vec!["i", "j", "checkpoint_i", "checkpoint_j", "gamma", "gamma_exact"]);
    for (i, row) in est.pairwise_gamma.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            let [a, b] = cells(v);
            csv.push(vec![
                i.to_string(),
                j.to_string(),
                est.checkpoints[i].to_string(),
                est.checkpoints[j].to_string(),
                a,
                b,
            ]);
        }
    }
    let name = ctx.name("csv");
    ctx.out.csv(&ctx.stamp, name, &csv);
    ctx.report(Status::Ok, &json!({ "x": x, "estimate": est }))
}

fn search_status(found: bool) -> Status {
    if found {
        Status::Ok
    } else {
        Status::Exhausted
    }
}

fn density(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: DensityParams = params(ctx.cfg)?;
    positive_eps(p.eps)?;
    let points = ctx.resolver.points(&p.targets)?;
    let source = ctx.resolver.source(&p.source, points.first())?;
    let targets: Vec<Target> = points.into_iter().map(Target::point).collect();
    let caps = &ctx.cfg.caps;
    let outcome = match targets.as_slice() {
        [] => return Err(CliError::config("params.targets", "need at least one target")),
        [y] => check_density_ergodic(ctx.system(), &source, y, p.eps, p.min_n, caps)?,
        ys => check_density_convex(ctx.system(), &source, ys, p.eps, p.min_n, caps)?,
    };
    let status = search_status(outcome.is_success());
    ctx.report(status, &json!({ "eps": p.eps, "min_n": p.min_n, "outcome": outcome }))
}

fn closable(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: ClosableParams = params(ctx.cfg)?;
    positive_eps(p.eps)?;
    let x = ctx.resolver.point(&p.x)?;
    let source = ctx.resolver.source(&p.source, Some(&x))?;
    let outcome = check_closable(ctx.system(), &source, &x, p.eps, p.min_n, &ctx.cfg.caps)?;
    let status = search_status(outcome.is_success());
    ctx.report(status, &json!({ "x": x, "eps": p.eps, "min_n": p.min_n, "outcome": outcome }))
}

fn linkable(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: LinkableParams = params(ctx.cfg)?;
    positive_eps(p.eps)?;
    let y1 = ctx.resolver.point(&p.y1)?;
    let y2 = ctx.resolver.point(&p.y2)?;
    let source = ctx.resolver.source(&p.source, None)?;
    let max = ctx.cfg.caps.max_horizon;
    let o1 = PeriodicOrbit::of_point(ctx.system(), &y1, max)?;
    let o2 = PeriodicOrbit::of_point(ctx.system(), &y2, max)?;
    let outcome = check_linkable_pair(ctx.system(), &o1, &o2, &p.lambda, p.eps, &source, &ctx.cfg.caps)?;
    let status = search_status(outcome.is_success());
    ctx.report(
        status,
        &json!({ "y1": y1, "y2": y2, "lambda": p.lambda.to_string(), "eps": p.eps, "outcome": outcome }),
    )
}

fn aapo(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: AapoParams = params(ctx.cfg)?;
    let system = ctx.system().clone();
    let validation = schedule_validate(&system, &p.schedule)?;
    if !validation.valid {
        return ctx.report(Status::Invalid, &json!({ "validation": validation }));
    }
    let total = p.schedule.q_mark(p.schedule.len());
    let horizon = p.horizon.unwrap_or(total);
    let seq = build_aapo(&system, &p.schedule, horizon)?;
    let horizons = match &p.horizons {
        Some(h) => h.resolve()?,
        None => {
            let mut v: Vec<usize> = seq.q_marks.iter().map(|&q| q.min(horizon - 1)).filter(|&q| q > 0).collect();
            v.dedup();
            v
        }
    };
    let report = is_aapo(&system, &seq.points, &horizons, p.threshold)?;
    let c = p.coarsening.unwrap_or_else(|| Coarsening::default_for(&system));
    let chain = chain_realization(&system, &p.schedule, &seq, &c)?;
    let violations = seq.bound_violations();
    let mut csv = Csv::new(vec!["n", "jump_average", "jump_average_exact", "prefix_bound"]);
    for (i, v) in seq.jump_averages.iter().enumerate() {
        let [a, b] = cells(v);
        let bound = seq
            .prefix_bounds
            .as_ref()
            .map(|bs| cells(&bs[i])[0].clone())
            .unwrap_or_default();
        csv.push(vec![(i + 1).to_string(), a, b, bound]);
    }
    let name = ctx.name("csv");
    ctx.out.csv(&ctx.stamp, name, &csv);
    if matches!(system, System::FullShift { .. }) {
        let name = ctx.named("symbols", "bin");
        ctx.out.raw(&ctx.stamp, name, seq.symbol_stream()?)?;
    } else {
        let name = ctx.named("points", "json");
        ctx.out.json(&ctx.stamp, name, "ok", &seq.points)?;
    }
    ctx.report(
        Status::Ok,
        &json!({
            "validation": validation,
            "horizon": horizon,
            "q_marks": seq.q_marks,
            "aapo": report,
            "prefix_bound_violations": violations,
            "chain": chain,
            "coarsening": c,
        }),
    )
}

fn trace(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: TraceParams = params(ctx.cfg)?;
    let system = ctx.system().clone();
    let seq = match &p.sequence {
        SequenceSpec::Points { points } => ctx.resolver.points(points)?,
        SequenceSpec::Schedule { schedule, horizon } => build_aapo(&system, schedule, *horizon)?.points,
    };
    let x = ctx.resolver.point(&p.x)?;
    let requested = p.horizons.resolve()?;
    let cap = ctx.cfg.caps.assignment;
    let horizons = capped_horizons(&requested, cap);
    let dropped: Vec<usize> = requested.iter().copied().filter(|h| *h > cap).collect();
    let report = trace_error(&system, &seq, &x, &horizons, cap)?;
    let mut csv = Csv::new(vec!["horizon", "value", "value_exact"]);
    for (h, v) in report.horizons.iter().zip(&report.values) {
        let [a, b] = cells(v);
        csv.push(vec![h.to_string(), a, b]);
    }
    let name = ctx.name("csv");
    ctx.out.csv(&ctx.stamp, name, &csv);
    let status = if dropped.is_empty() { Status::Ok } else { Status::Exhausted };
    ctx.report(
        status,
        &json!({ "x": x, "assignment_cap": cap, "dropped_horizons": dropped, "trace": report }),
    )
}

fn decomp(ctx: &mut Ctx) -> Result<Status, CliError> {
    let p: DecompParams = params(ctx.cfg)?;
    let system = ctx.system().clone();
    let report = verify_decomposition(&system, &p.decomposition)?;
    let lift = match &p.lift {
        Some(l) => {
            let x = ctx.resolver.point(&l.x)?;
            let y = ctx.resolver.point(&l.y)?;
            let k = p.decomposition.k;
            Some(lift_witness(&system, &p.decomposition, &x, &y, l.n, k, ctx.cfg.caps.assignment)?)
        }
        None => None,
    };
    ctx.report(
        Status::Ok,
        &json!({ "decomposition": p.decomposition, "verification": report, "lift": lift }),
    )
}
