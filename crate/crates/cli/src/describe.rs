//! Text for `morbit describe <kind>`.

use crate::config::KINDS;
use crate::CliError;

const COMMON: &str = "\
Common fields: kind, system, seed (u64, default 0), arithmetic (exact|float),
caps {max_period, max_horizon, assignment, multiples}, params, output (file stem).
Points: {\"kind\":\"interval\",\"value\":\"2/5\"}, {\"kind\":\"circle\",\"angle\":\"1/3\"},
{\"kind\":\"shift\",\"pre\":\"01\",\"period\":\"10\",\"alphabet\":2}, or seeded
{\"kind\":\"random_shift\",\"length\":N}, {\"kind\":\"random_interval\"}, {\"kind\":\"random_circle\"}.
Horizons: a strictly increasing list, or {\"start\":S,\"count\":C} for doublings.
Every JSON artifact carries morbit_version, config_sha256, seed and status;
every CSV starts with a '# morbit <version> config_sha256=<hash>' line.
Floats are printed with 17 significant digits; exact values as p/q.
Exit codes: 0 success, 2 invalid configuration, 3 cap exhausted (report still written).
";

fn body(kind: &str) -> &'static str {
    match kind {
        "dist" => "\
dist: optimal transport between two discrete measures.
params: mu, nu: {support: [point], weights: [\"p/q\"]}
outputs: <stem>.json  result = {cost, arcs: [{from, to, mass}]}
",
        "ebar" => "\
ebar: min-permutation orbit distance of x and y at each horizon.
params: x, y: point; horizons; tail_window (default 3)
outputs: <stem>.csv   horizon,value,value_exact
         <stem>.json  result = {x, y, estimate: {horizons, values, limsup_estimate, tail_window}}
",
        "vset" => "\
vset: coarsened empirical snapshots of the orbit of x and their pairwise distances.
params: x: point; checkpoints: horizons; coarsening (optional, {kind, size})
outputs: <stem>.csv   i,j,checkpoint_i,checkpoint_j,gamma,gamma_exact
         <stem>.json  result = {x, estimate}
",
        "density" => "\
density: bounded search for a periodic orbit matching the target orbit(s).
params: source: {kind: explicit|shift_necklaces|interval_branches|shift_truncations};
        targets: [point] (one target: plain form; several: stitched form);
        eps; min_n (default 1)
outputs: <stem>.json  result = {eps, min_n, outcome: {found, best, candidates_examined, caps}}
",
        "closable" => "\
closable: bounded search for a periodic orbit shadowing x with small period overshoot.
params: source; x: point; eps; min_n (default 1)
outputs: <stem>.json  result = {x, eps, min_n, outcome}
",
        "linkable" => "\
linkable: bounded search linking two periodic orbits in proportion lambda.
params: y1, y2: periodic points; lambda: \"p/q\"; eps; source
outputs: <stem>.json  result = {y1, y2, lambda, eps, outcome}
",
        "aapo" => "\
aapo: block construction of an average pseudo-orbit from a schedule of stages.
params: schedule: {stages: [{measure, generic_points, q, eps?}], mode: strict|relaxed, tail_repeats};
        horizon (default: whole schedule); threshold (default 0.02); horizons (default: each Q_n);
        coarsening (optional)
outputs: <stem>.csv          n,jump_average,jump_average_exact,prefix_bound
         <stem>.json         result = {validation, horizon, q_marks, aapo, prefix_bound_violations, chain, coarsening}
         <stem>_points.json  built points (interval and circle systems)
         <stem>_symbols.bin  one symbol per byte (shift systems), with a .json sidecar
",
        "trace" => "\
trace: min-permutation distance between a sequence and the orbit of x.
params: sequence: {kind: points, points} | {kind: schedule, schedule, horizon}; x: point; horizons
        horizons above caps.assignment are dropped and the run exits with 3
outputs: <stem>.csv   horizon,value,value_exact
         <stem>.json  result = {x, assignment_cap, dropped_horizons, trace}
",
        "decomp" => "\
decomp: checks a periodic decomposition and optionally lifts a witness.
params: decomposition: {k, sets: [[{lo, hi}]]}; lift (optional): {x, y, n}
outputs: <stem>.json  result = {decomposition, verification, lift}
",
        _ => "",
    }
}

pub fn describe(kind: &str) -> Result<String, CliError> {
    if !KINDS.contains(&kind) {
        return Err(CliError::config(
            "kind",
            format!("unknown experiment kind `{kind}`; expected one of {}", KINDS.join(", ")),
        ));
    }
    Ok(format!("{}\n{COMMON}", body(kind)))
}
