//! Block schedules realizing a chain of measures by an asymptotic average
//! pseudo-orbit, and finite-horizon orbital tracing checks.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynsys::{convex_combination, DiscreteMeasure, Point, System};
use crate::error::{cap_check, Error, Result};
use crate::num::{Num, Rational};
use crate::pseudometric::{coarsen, vset_estimate_seq, Coarsening};
use crate::transport::{gamma, matching_cost, matching_cost_capped, DEFAULT_ASSIGNMENT_CAP, SUPPORT_CAP};

/// Whether the growth conditions on `p_n`, `q_n` are enforced.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleMode {
    /// `p_{n+1} ≥ 2^n p_n q_n` and `q_{n+1} ≥ 2 p_{n+1}` are required.
    Strict,
    /// Violations of the growth conditions are recorded as warnings.
    Relaxed,
}

/// One stage: the target measure `μ_n`, the generic points `y^n_1..y^n_{p_n}`
/// and the block length `q_n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub measure: DiscreteMeasure,
    pub generic_points: Vec<Point>,
    pub q: usize,
    /// `ε_n`; defaults to `γ(μ_n, μ_{n+1})`, and on the last stage to the
    /// previous stage's value (or 1 for a single stage).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<Num>,
}

/// The stage data of the block construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSchedule {
    pub stages: Vec<Stage>,
    pub mode: ScheduleMode,
    /// Superblock repetitions in the last stage, standing in for
    /// `p_{S+1} q_{S+1}`.
    #[serde(default = "one")]
    pub tail_repeats: usize,
}

fn one() -> usize {
    1
}

impl BlockSchedule {
    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// `p_n` for `n = 1..=S` (index `n - 1`).
    pub fn p(&self, n: usize) -> usize {
        self.stages[n - 1].generic_points.len()
    }

    pub fn q(&self, n: usize) -> usize {
        self.stages[n - 1].q
    }

    /// Superblock repetitions of stage `n`: `p_{n+1} q_{n+1}`, or `tail_repeats`.
    pub fn repeats(&self, n: usize) -> usize {
        if n < self.len() {
            self.p(n + 1) * self.q(n + 1)
        } else {
            self.tail_repeats
        }
    }

    /// `P_n = p_n q_n · repeats(n)`.
    pub fn block_len(&self, n: usize) -> usize {
        self.p(n) * self.q(n) * self.repeats(n)
    }

    /// `Q_0 = 0, Q_n = P_1 + … + P_n`.
    pub fn q_mark(&self, n: usize) -> usize {
        (1..=n).map(|i| self.block_len(i)).sum()
    }

    /// Stage `n`, superblock `k`, block `j` and offset `r` of index `i`.
    pub fn decompose(&self, i: usize) -> Option<(usize, usize, usize, usize)> {
        let mut start = 0;
        for n in 1..=self.len() {
            let len = self.block_len(n);
            if i < start + len {
                let t = i - start;
                let (pq, q) = (self.p(n) * self.q(n), self.q(n));
                return Some((n, t / pq, (t % pq) / q, t % q));
            }
            start += len;
        }
        None
    }

    /// The prefix bound `(1/N)(Σ_{i<n} p_i p_{i+1} q_{i+1} + (k+1) p_n)` on the
    /// average jump of the first `N` steps.
    pub fn prefix_bound(&self, big_n: usize) -> Option<Rational> {
        if big_n == 0 {
            return None;
        }
        let (n, k, _, _) = self.decompose(big_n)?;
        let seams: usize = (1..n).map(|i| self.p(i) * self.repeats(i)).sum::<usize>() + (k + 1) * self.p(n);
        Some(Rational::new(seams.into(), big_n.into()))
    }

    fn check_shape(&self, system: &System) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::InvalidSchedule("no stages".into()));
        }
        if self.tail_repeats == 0 {
            return Err(Error::InvalidSchedule("tail_repeats must be positive".into()));
        }
        for (i, s) in self.stages.iter().enumerate() {
            if s.q == 0 || s.generic_points.is_empty() {
                return Err(Error::InvalidSchedule(format!(
                    "stage {} needs q >= 1 and at least one generic point",
                    i + 1
                )));
            }
            for y in &s.generic_points {
                system.check_point(y)?;
            }
            for p in s.measure.support() {
                system.check_point(p)?;
            }
            if let Some(e) = &s.eps {
                if e.cmp_value(&Num::zero()).is_le() {
                    return Err(Error::InvalidSchedule(format!("stage {} has eps <= 0", i + 1)));
                }
            }
        }
        Ok(())
    }
}

/// Per-stage numbers checked by [`schedule_validate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageReport {
    pub n: usize,
    pub p: usize,
    pub q: usize,
    pub big_p: usize,
    pub big_q: usize,
    pub eps: Num,
    /// `γ(μ_n, μ_{n+1})`, when there is a next stage.
    pub gamma_next: Option<Num>,
    /// `γ(μ_n, (1/p_n) Σ_j m_T(y^n_j, q_n))`.
    pub certified_gap: Num,
    pub certified: bool,
}

/// Outcome of [`schedule_validate`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub mode: ScheduleMode,
    pub stages: Vec<StageReport>,
    /// Growth-condition failures (errors in strict mode).
    pub growth_violations: Vec<String>,
    pub warnings: Vec<String>,
    /// Certification and ε consistency failures.
    pub errors: Vec<String>,
    pub valid: bool,
}

/// Checks growth conditions, `Q_n` arithmetic, `ε_n` consistency and
/// certifies `γ(μ_n, (1/p_n) Σ_j m_T(y^n_j, q_n)) < ε_n`.
pub fn schedule_validate(system: &System, s: &BlockSchedule) -> Result<ScheduleReport> {
    s.check_shape(system)?;
    let big_s = s.len();
    let mut growth = Vec::new();
    for n in 1..big_s {
        let need_p = (1usize << (n.min(63))).saturating_mul(s.p(n)).saturating_mul(s.q(n));
        if s.p(n + 1) < need_p {
            growth.push(format!("p_{} = {} < 2^{n}·p_{n}·q_{n} = {need_p}", n + 1, s.p(n + 1)));
        }
        if s.q(n + 1) < 2 * s.p(n + 1) {
            growth.push(format!("q_{} = {} < 2·p_{} = {}", n + 1, s.q(n + 1), n + 1, 2 * s.p(n + 1)));
        }
    }
    let mut errors = Vec::new();
    let mut marks = vec![0usize];
    for n in 1..=big_s {
        let next = marks[n - 1].checked_add(
            s.p(n)
                .checked_mul(s.q(n))
                .and_then(|v| v.checked_mul(s.repeats(n)))
                .ok_or_else(|| Error::InvalidSchedule(format!("P_{n} overflows")))?,
        );
        let next = next.ok_or_else(|| Error::InvalidSchedule(format!("Q_{n} overflows")))?;
        if next <= marks[n - 1] {
            errors.push(format!("Q_{n} does not increase"));
        }
        marks.push(next);
    }
    let gammas_next: Vec<Option<Num>> = (1..=big_s)
        .map(|n| {
            if n < big_s {
                gamma(system, &s.stages[n - 1].measure, &s.stages[n].measure).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let mut reports = Vec::with_capacity(big_s);
    let mut prev_eps: Option<Num> = None;
    for n in 1..=big_s {
        let st = &s.stages[n - 1];
        let eps = match (&st.eps, &gammas_next[n - 1]) {
            (Some(e), Some(g)) => {
                if e != g && e.cmp_value(g).is_ne() {
                    errors.push(format!("eps_{n} = {e} differs from γ(μ_{n}, μ_{}) = {g}", n + 1));
                }
                e.clone()
            }
            (Some(e), None) => e.clone(),
            (None, Some(g)) => g.clone(),
            (None, None) => prev_eps.clone().unwrap_or_else(Num::one),
        };
        if eps.is_zero() {
            errors.push(format!("eps_{n} is zero: consecutive measures coincide"));
        }
        let parts: Vec<(Rational, DiscreteMeasure)> = st
            .generic_points
            .iter()
            .map(|y| {
                let m = DiscreteMeasure::uniform(&system.orbit(y, st.q)?)?;
                Ok((Rational::new(1.into(), st.generic_points.len().into()), m))
            })
            .collect::<Result<_>>()?;
        let average = convex_combination(&parts)?;
        let certified_gap = gamma(system, &st.measure, &average)?;
        let certified = certified_gap.cmp_value(&eps).is_lt();
        if !certified {
            errors.push(format!("stage {n}: certified gap {certified_gap} is not below eps {eps}"));
        }
        reports.push(StageReport {
            n,
            p: s.p(n),
            q: s.q(n),
            big_p: marks[n] - marks[n - 1],
            big_q: marks[n],
            eps: eps.clone(),
            gamma_next: gammas_next[n - 1].clone(),
            certified_gap,
            certified,
        });
        prev_eps = Some(eps);
    }
    let (growth_violations, warnings) = match s.mode {
        ScheduleMode::Strict => (growth, Vec::new()),
        ScheduleMode::Relaxed => (Vec::new(), growth),
    };
    Ok(ScheduleReport {
        mode: s.mode,
        valid: growth_violations.is_empty() && errors.is_empty(),
        stages: reports,
        growth_violations,
        warnings,
        errors,
    })
}

/// A built pseudo-orbit and its prefix jump averages.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PseudoOrbitSeq {
    pub points: Vec<Point>,
    /// `Q_1, …, Q_S` of the schedule.
    pub q_marks: Vec<usize>,
    /// Entry `N - 1` is `(1/N) Σ_{i<N} d(T x_i, x_{i+1})`, for `N < len`.
    pub jump_averages: Vec<Num>,
    /// The analytic prefix bound at each `N` (strict schedules only).
    pub prefix_bounds: Option<Vec<Num>>,
}

impl PseudoOrbitSeq {
    /// Indices `N` at which the jump average exceeds the analytic bound.
    pub fn bound_violations(&self) -> Vec<usize> {
        let Some(bounds) = &self.prefix_bounds else {
            return Vec::new();
        };
        self.jump_averages
            .iter()
            .zip(bounds)
            .enumerate()
            .filter(|(_, (avg, b))| avg.cmp_value(b).is_gt())
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// One byte per symbol: the leading symbol of each shift point.
    pub fn symbol_stream(&self) -> Result<Vec<u8>> {
        self.points
            .iter()
            .map(|p| {
                p.as_shift()
                    .map(|s| s.symbol(0))
                    .ok_or_else(|| Error::InvalidArgument("symbol streams need shift points".into()))
            })
            .collect()
    }
}

/// `x_i = T^r y^n_{j+1}` for `i = Q_{n-1} + k p_n q_n + j q_n + r`, `i < horizon`.
pub fn build_aapo(system: &System, s: &BlockSchedule, horizon: usize) -> Result<PseudoOrbitSeq> {
    let report = schedule_validate(system, s)?;
    if !report.valid {
        let mut why = report.growth_violations.clone();
        why.extend(report.errors.iter().cloned());
        return Err(Error::InvalidSchedule(why.join("; ")));
    }
    let total = s.q_mark(s.len());
    if horizon == 0 || horizon > total {
        return Err(Error::InvalidSchedule(format!("horizon {horizon} outside 1..={total}")));
    }
    let blocks: Vec<Vec<Vec<Point>>> = s
        .stages
        .iter()
        .map(|st| st.generic_points.iter().map(|y| system.orbit(y, st.q)).collect())
        .collect::<Result<_>>()?;
    let points: Vec<Point> = (0..horizon)
        .map(|i| {
            let (n, _, j, r) = s.decompose(i).expect("inside schedule");
            blocks[n - 1][j][r].clone()
        })
        .collect();
    let jump_averages = jump_averages(system, &points)?;
    let prefix_bounds = match s.mode {
        ScheduleMode::Strict => Some(
            (1..points.len())
                .map(|n| Num::Exact(s.prefix_bound(n).expect("inside schedule")))
                .collect(),
        ),
        ScheduleMode::Relaxed => None,
    };
    Ok(PseudoOrbitSeq {
        points,
        q_marks: (1..=s.len()).map(|n| s.q_mark(n)).collect(),
        jump_averages,
        prefix_bounds,
    })
}

/// `(1/N) Σ_{i<N} d(T x_i, x_{i+1})` for `N = 1..len-1`.
pub fn jump_averages(system: &System, seq: &[Point]) -> Result<Vec<Num>> {
    let jumps = (0..seq.len().saturating_sub(1))
        .into_par_iter()
        .map(|i| system.dist(&system.apply(&seq[i])?, &seq[i + 1]))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(jumps.len());
    let mut acc = Num::zero();
    for (i, j) in jumps.iter().enumerate() {
        acc = acc.add(j);
        out.push(acc.div_int(i + 1));
    }
    Ok(out)
}

/// Per-horizon average jumps and a verdict.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AapoReport {
    pub horizons: Vec<usize>,
    pub averages: Vec<Num>,
    pub threshold: f64,
    /// The last average is below `threshold`.
    pub verdict: bool,
    /// Averages never increase from one horizon to the next.
    pub non_increasing: bool,
}

/// Average one-step error `(1/n) Σ_{i<n} d(T x_i, x_{i+1})` at each horizon.
pub fn is_aapo(system: &System, seq: &[Point], horizons: &[usize], threshold: f64) -> Result<AapoReport> {
    if horizons.is_empty() {
        return Err(Error::InvalidArgument("no horizons".into()));
    }
    if let Some(&h) = horizons.iter().find(|&&h| h == 0 || h >= seq.len()) {
        return Err(Error::SizeMismatch(format!(
            "horizon {h} needs 1 <= h < sequence length {}",
            seq.len()
        )));
    }
    let max = *horizons.iter().max().expect("nonempty");
    let avgs = jump_averages(system, &seq[..=max])?;
    let averages: Vec<Num> = horizons.iter().map(|&h| avgs[h - 1].clone()).collect();
    let last = averages.last().expect("nonempty").to_f64();
    let non_increasing = averages.windows(2).all(|w| w[1].cmp_value(&w[0]).is_le());
    Ok(AapoReport {
        horizons: horizons.to_vec(),
        averages,
        threshold,
        verdict: last < threshold,
        non_increasing,
    })
}

/// `min_σ (1/n) Σ d(x_i, T^σ(i) x)` at each horizon.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceReport {
    pub horizons: Vec<usize>,
    pub values: Vec<Num>,
}

/// Orbital tracing error of `seq` by the orbit of `x`; horizons above `cap`
/// are rejected (use [`capped_horizons`] to subsample).
pub fn trace_error(
    system: &System,
    seq: &[Point],
    x: &Point,
    horizons: &[usize],
    cap: usize,
) -> Result<TraceReport> {
    if let Some(&h) = horizons.iter().find(|&&h| h == 0 || h > seq.len()) {
        return Err(Error::SizeMismatch(format!(
            "horizon {h} outside 1..={}",
            seq.len()
        )));
    }
    for &h in horizons {
        cap_check("trace horizon", h, cap)?;
    }
    let max = horizons.iter().copied().max().unwrap_or(0);
    let orbit = system.orbit(x, max.max(1))?;
    let values = horizons
        .par_iter()
        .map(|&n| matching_cost_capped(system, &seq[..n], &orbit[..n], cap))
        .collect::<Result<Vec<_>>>()?;
    Ok(TraceReport {
        horizons: horizons.to_vec(),
        values,
    })
}

/// The horizons not above `cap`.
pub fn capped_horizons(horizons: &[usize], cap: usize) -> Vec<usize> {
    horizons.iter().copied().filter(|&h| h <= cap).collect()
}

/// [`trace_error`] with the default assignment cap.
pub fn trace_error_default(system: &System, seq: &[Point], x: &Point, horizons: &[usize]) -> Result<TraceReport> {
    trace_error(system, seq, x, horizons, DEFAULT_ASSIGNMENT_CAP)
}

/// Realization of each stage measure by the pseudo-orbit at `Q_n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainCheck {
    pub n: usize,
    pub big_q: usize,
    /// `γ(μ_n, m(seq, Q_n))`, when computed without coarsening.
    pub gamma: Option<Num>,
    /// γ between the coarsened measures.
    pub coarse_gamma: Num,
    /// Sum of both coarsening error bounds.
    pub coarsening_error: Num,
    /// `2ε_n + 2Q_{n-1}/Q_n`.
    pub bound: Num,
    pub holds: bool,
}

/// Checks `γ(μ_n, m(seq, Q_n)) < 2ε_n + 2Q_{n-1}/Q_n` at every `Q_n ≤ len`.
pub fn chain_realization(
    system: &System,
    s: &BlockSchedule,
    seq: &PseudoOrbitSeq,
    coarsening: &Coarsening,
) -> Result<Vec<ChainCheck>> {
    let report = schedule_validate(system, s)?;
    let mut out = Vec::new();
    for n in 1..=s.len() {
        let big_q = s.q_mark(n);
        if big_q > seq.points.len() {
            break;
        }
        let prev = s.q_mark(n - 1);
        let emp = DiscreteMeasure::uniform(&seq.points[..big_q])?;
        let mu = &s.stages[n - 1].measure;
        let ca = coarsen(system, &emp, coarsening)?;
        let cb = coarsen(system, mu, coarsening)?;
        let coarse_gamma = gamma(system, &ca.measure, &cb.measure)?;
        let coarsening_error = ca.error_bound.add(&cb.error_bound);
        let exact_ok = !matches!(system, System::FullShift { .. }) || emp.len() <= SUPPORT_CAP;
        let raw = if exact_ok { Some(gamma(system, mu, &emp)?) } else { None };
        let eps = &report.stages[n - 1].eps;
        let bound = eps
            .add(eps)
            .add(&Num::Exact(Rational::new((2 * prev).into(), big_q.into())));
        let value = match &raw {
            Some(g) => g.clone(),
            None => coarse_gamma.add(&coarsening_error),
        };
        out.push(ChainCheck {
            n,
            big_q,
            gamma: raw,
            coarse_gamma,
            coarsening_error,
            holds: value.cmp_value(&bound).is_lt(),
            bound,
        });
    }
    Ok(out)
}

/// Finite-scale transfer between two sequences' limit-set snapshots.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransferReport {
    pub checkpoints: Vec<usize>,
    /// `γ(m(seq_a, n), m(seq_b, n))` by matching.
    pub values: Vec<Num>,
    pub tau: f64,
    pub all_below_tau: bool,
    /// `max_{i,j} |Γ_a(i,j) - Γ_b(i,j)|` over snapshot distance matrices.
    pub max_snapshot_difference: f64,
    /// `max_{i,j} (v_i + v_j + coarsening errors at i and j)`.
    pub triangle_bound: f64,
    pub bound_holds: bool,
    /// Whether the differences are also below `tau` itself.
    pub within_tau: bool,
}

/// Compares the matching distance of two sequences at checkpoints with the
/// snapshot distance matrices of their limit-set estimates. By the triangle
/// inequality each entry moves by at most `v_i + v_j` plus coarsening errors.
pub fn vset_transfer_check(
    system: &System,
    seq_a: &[Point],
    seq_b: &[Point],
    checkpoints: &[usize],
    tau: f64,
    coarsening: &Coarsening,
) -> Result<TransferReport> {
    if seq_a.len() != seq_b.len() {
        return Err(Error::SizeMismatch(format!("{} vs {} points", seq_a.len(), seq_b.len())));
    }
    let va = vset_estimate_seq(system, seq_a, checkpoints, coarsening)?;
    let vb = vset_estimate_seq(system, seq_b, checkpoints, coarsening)?;
    let values = checkpoints
        .par_iter()
        .map(|&n| matching_cost(system, &seq_a[..n], &seq_b[..n]))
        .collect::<Result<Vec<_>>>()?;
    let k = checkpoints.len();
    let mut max_diff: f64 = 0.0;
    let mut bound: f64 = 0.0;
    let mut holds = true;
    for i in 0..k {
        for j in 0..k {
            let d = (va.pairwise_gamma[i][j].to_f64() - vb.pairwise_gamma[i][j].to_f64()).abs();
            let b = values[i].to_f64()
                + values[j].to_f64()
                + va.coarsening_errors[i].to_f64()
                + vb.coarsening_errors[i].to_f64()
                + va.coarsening_errors[j].to_f64()
                + vb.coarsening_errors[j].to_f64();
            if d > b + crate::transport::FLOAT_TOL {
                holds = false;
            }
            max_diff = max_diff.max(d);
            bound = bound.max(b);
        }
    }
    Ok(TransferReport {
        checkpoints: checkpoints.to_vec(),
        all_below_tau: values.iter().all(|v| v.to_f64() < tau),
        values,
        tau,
        max_snapshot_difference: max_diff,
        triangle_bound: bound,
        bound_holds: holds,
        within_tau: max_diff < tau,
    })
}

/// Two sequences compared through a common measure `mu` at each checkpoint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommonMeasureCheck {
    pub n: usize,
    pub gamma_a: Num,
    pub gamma_b: Num,
    pub matching: Num,
    /// `matching ≤ gamma_a + gamma_b`.
    pub holds: bool,
}

/// At each checkpoint, the matching cost of the two prefixes is at most the
/// sum of their γ-distances to `mu`.
pub fn common_measure_check(
    system: &System,
    seq_a: &[Point],
    seq_b: &[Point],
    mu: &DiscreteMeasure,
    checkpoints: &[usize],
) -> Result<Vec<CommonMeasureCheck>> {
    checkpoints
        .par_iter()
        .map(|&n| {
            if n == 0 || n > seq_a.len() || n > seq_b.len() {
                return Err(Error::SizeMismatch(format!("checkpoint {n} beyond the sequences")));
            }
            let ga = gamma(system, &DiscreteMeasure::uniform(&seq_a[..n])?, mu)?;
            let gb = gamma(system, &DiscreteMeasure::uniform(&seq_b[..n])?, mu)?;
            let m = matching_cost(system, &seq_a[..n], &seq_b[..n])?;
            let sum = ga.add(&gb);
            let holds = match (&m, &sum) {
                (Num::Exact(a), Num::Exact(b)) => a <= b,
                _ => m.to_f64() <= sum.to_f64() + crate::transport::FLOAT_TOL,
            };
            Ok(CommonMeasureCheck {
                n,
                gamma_a: ga,
                gamma_b: gb,
                matching: m,
                holds,
            })
        })
        .collect()
}
