use crate::data::Dataset;
use crate::dynamics::{loss_grad_into, IterateRecord, LossKind, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::MarginGeometry;
use crate::linalg::{dot, norm};
use crate::potential::{log_add_exp, PotentialContext};

use super::envelope::envelope;
use super::{CheckResult, VerifyMode};

/// Absolute slack for inequalities with explicit constants.
pub const EXACT_TOL: f64 = 1e-9;
/// Absolute slack for the gradient comparison.
pub const GRAD_TOL: f64 = 1e-10;
pub const MIN_RATE_RECORDS: usize = 100;
pub const RATIO_TOL: f64 = 1.05;
pub const SAMPLED_STEPS: usize = 100;
/// Early window inspected for loss ascents.
pub const OSCILLATION_WINDOW: u64 = 1000;

/// Tracks the tightest `bound - measured` slack over the checked steps.
struct Slack {
    worst: Option<(u64, f64, f64, f64)>,
    failures: usize,
    checked: usize,
}

impl Slack {
    fn new() -> Self {
        Slack { worst: None, failures: 0, checked: 0 }
    }

    /// Records `measured <= bound + tol`; a NaN on either side fails.
    fn upper(&mut self, t: u64, measured: f64, bound: f64, tol: f64) {
        self.push(t, measured, bound, bound - measured, measured <= bound + tol);
    }

    /// Records `measured >= bound - tol`.
    fn lower(&mut self, t: u64, measured: f64, bound: f64, tol: f64) {
        self.push(t, measured, bound, measured - bound, measured >= bound - tol);
    }

    fn push(&mut self, t: u64, measured: f64, bound: f64, slack: f64, ok: bool) {
        self.checked += 1;
        if !ok {
            self.failures += 1;
        }
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        if self.worst.map_or(true, |w| slack < w.3) {
            self.worst = Some((t, measured, bound, slack));
        }
    }

    fn finish(self, name: &str, what: &str) -> CheckResult {
        let (t, m, b, _) = self.worst.unwrap_or((0, f64::NAN, f64::NAN, 0.0));
        let detail = if self.failures == 0 {
            format!("{what} held at all {} checked steps", self.checked)
        } else {
            format!("{what} violated at {} of {} checked steps", self.failures, self.checked)
        };
        CheckResult {
            name: name.into(),
            passed: self.failures == 0 && self.checked > 0,
            worst_t: t,
            measured: m,
            bound: b,
            detail,
        }
    }
}

fn failed(name: &str, t: u64, detail: String) -> CheckResult {
    CheckResult { name: name.into(), passed: false, worst_t: t, measured: f64::NAN, bound: f64::NAN, detail }
}

/// `(1/gamma) log(1 + eta gamma^2 t / 2)`.
pub fn mm_lower_bound(gamma: f64, eta: f64, t: u64) -> f64 {
    (eta * gamma * gamma * t as f64 / 2.0).ln_1p() / gamma
}

/// Lower bound on the max-margin coordinate at every recorded step.
pub fn check_mm_lower(traj: &Trajectory, geo: &MarginGeometry) -> CheckResult {
    let mut s = Slack::new();
    for r in &traj.records {
        s.lower(r.t, r.proj_mm, mm_lower_bound(geo.gamma, traj.eta, r.t), EXACT_TOL);
    }
    s.finish("mm_lower", "logarithmic lower bound on the max-margin coordinate")
}

/// `(1/gamma) log((e eta gamma^2 G_max + e eta gamma H_max)(t + 1))`, in log space.
pub fn mm_upper_bound(ctx: &PotentialContext, t: u64) -> f64 {
    let eta = ctx.eta;
    let g = ctx.gamma;
    let log_c =
        log_add_exp(1.0 + (eta * g * g).ln() + ctx.bounds.log_g_max, 1.0 + (eta * g).ln() + ctx.bounds.log_h_max);
    (log_c + (t as f64 + 1.0).ln()) / g
}

pub fn check_mm_upper(traj: &Trajectory, ctx: &PotentialContext) -> CheckResult {
    let mut s = Slack::new();
    for r in &traj.records {
        s.upper(r.t, r.proj_mm, mm_upper_bound(ctx, r.t), EXACT_TOL);
    }
    s.finish("mm_upper", "logarithmic upper bound on the max-margin coordinate")
}

/// Complement norm stays within `W_max`.
pub fn check_ns_bounded(traj: &Trajectory, ctx: &PotentialContext) -> CheckResult {
    let mut s = Slack::new();
    for r in &traj.records {
        s.upper(r.t, r.ns_norm, ctx.w_max(), EXACT_TOL);
    }
    s.finish("ns_bounded", "complement norm within W_max")
}

/// Sine of the angle to the max-margin direction is at most `W_max / proj_mm`.
pub fn check_angle_bound(traj: &Trajectory, ctx: &PotentialContext) -> CheckResult {
    let mut s = Slack::new();
    for r in traj.records.iter().filter(|r| r.proj_mm > 0.0) {
        s.upper(r.t, r.ns_norm / r.w_norm(), ctx.w_max() / r.proj_mm, EXACT_TOL);
    }
    s.finish("angle_bound", "angle to the max-margin direction within W_max / proj_mm")
}

/// `(t, sin angle(w_t, w_hat))` for every record after the start.
pub fn angle_to_max_margin(traj: &Trajectory) -> Result<Vec<(u64, f64)>> {
    traj.records
        .iter()
        .filter(|r| r.t > 0)
        .map(|r| {
            if r.w_norm() == 0.0 {
                return Err(Error::InvalidParameter(format!("zero iterate at t={}", r.t)));
            }
            if !(r.proj_mm > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "max-margin coordinate {} is not positive at t={}",
                    r.proj_mm, r.t
                )));
            }
            Ok((r.t, r.ns_norm / r.w_norm()))
        })
        .collect()
}

fn require_density(traj: &Trajectory, name: &str) -> Result<()> {
    if traj.records.len() < MIN_RATE_RECORDS {
        return Err(Error::NotApplicable(format!(
            "{name} needs at least {MIN_RATE_RECORDS} records, got {}",
            traj.records.len()
        )));
    }
    Ok(())
}

/// `t L(w_t)` stays bounded under the envelope rule.
pub fn check_risk_rate(traj: &Trajectory) -> Result<CheckResult> {
    require_density(traj, "risk_rate")?;
    if !traj.terminated.is_completed() {
        return Ok(failed("risk_rate", traj.final_t(), format!("run ended early: {}", traj.terminated)));
    }
    let pts: Vec<(u64, f64)> = traj.records.iter().map(|r| (r.t, r.t as f64 * r.loss)).collect();
    let e = envelope(&pts, 3);
    Ok(CheckResult {
        name: "risk_rate".into(),
        passed: e.passed,
        worst_t: e.argmax_t,
        measured: e.last_decade_max,
        bound: super::ENVELOPE_RATIO * e.prev_decade_max,
        detail: format!("t * loss: {}", e.detail),
    })
}

/// `log(2 (G_max + H_max) / (eta gamma^2))`, the explicit constant bounding
/// `t L(w_t)` once the max-margin coordinate obeys its lower bound.
pub fn log_risk_constant(ctx: &PotentialContext) -> f64 {
    (2.0 / (ctx.eta * ctx.gamma * ctx.gamma)).ln() + log_add_exp(ctx.bounds.log_g_max, ctx.bounds.log_h_max)
}

/// `t L(w_t)` against the explicit constant, compared in log space.
pub fn check_risk_bound(traj: &Trajectory, ctx: &PotentialContext) -> CheckResult {
    let c = log_risk_constant(ctx);
    let mut s = Slack::new();
    for r in traj.records.iter().filter(|r| r.t > 0) {
        let m = (r.t as f64).ln() + r.loss.ln();
        s.upper(r.t, m, c, EXACT_TOL);
    }
    s.finish("risk_bound", "log(t * loss) within log(2 (G_max + H_max) / (eta gamma^2))")
}

/// `log(t) (G - G_min)` stays bounded and `G` ends no higher above `G_min`
/// than at `t = 3`.
pub fn check_g_convergence(traj: &Trajectory, ctx: &PotentialContext) -> Result<CheckResult> {
    require_density(traj, "G_convergence")?;
    if !traj.terminated.is_completed() {
        return Ok(failed("G_convergence", traj.final_t(), format!("run ended early: {}", traj.terminated)));
    }
    let pts: Vec<(u64, f64)> = traj.records.iter().map(|r| (r.t, (r.t as f64).ln() * (r.g_val - ctx.g_min))).collect();
    let e = envelope(&pts, 3);
    let Some(g3) = traj.records.iter().find(|r| r.t >= 3) else {
        return Err(Error::NotApplicable("no record at t >= 3".into()));
    };
    let last = traj.last();
    let net = last.g_val - ctx.g_min <= g3.g_val - ctx.g_min + EXACT_TOL;
    let mut detail = format!("log(t) * (G - G_min): {}", e.detail);
    if !net {
        detail.push_str(&format!(
            "; G - G_min rose from {:.6e} at t={} to {:.6e} at t={}",
            g3.g_val - ctx.g_min,
            g3.t,
            last.g_val - ctx.g_min,
            last.t
        ));
    }
    Ok(CheckResult {
        name: "G_convergence".into(),
        passed: e.passed && net,
        worst_t: e.argmax_t,
        measured: e.last_decade_max,
        bound: super::ENVELOPE_RATIO * e.prev_decade_max,
        detail,
    })
}

/// Up to `k` evenly spread indices from `0..len`.
fn sample_indices(len: usize, k: usize) -> Vec<usize> {
    if len <= k {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..k).map(|i| i * (len - 1) / (k - 1)).collect();
    out.dedup();
    out
}

fn theta_for(ctx: &PotentialContext) -> Result<Option<f64>> {
    match (ctx.theta, ctx.potential.nonsupport.is_empty()) {
        (Some(t), false) => Ok(Some(t)),
        (None, true) => Ok(None),
        (None, false) => Err(Error::InvalidParameter("second margin missing while non-support samples exist".into())),
        (Some(_), true) => {
            Err(Error::InvalidParameter("second margin present but every sample is a support vector".into()))
        }
    }
}

/// Complement gradient against the scaled potential gradient at sampled
/// steps: `|P grad L - e^{-gamma w} grad G| <= e^{-2 gamma w} G^2 + e^{-theta w} H`
/// with per-iterate `G` and `H`.
pub fn check_grad_comparison(
    traj: &Trajectory,
    geo: &MarginGeometry,
    ds: &Dataset,
    ctx: &PotentialContext,
) -> Result<CheckResult> {
    let theta = theta_for(ctx)?;
    let full: Vec<&IterateRecord> = traj.records.iter().filter(|r| !r.w.is_empty()).collect();
    if full.is_empty() {
        return Err(Error::NotApplicable("no iterate vectors stored".into()));
    }
    let mut grad = vec![0.0; ds.d()];
    let mut s = Slack::new();
    for i in sample_indices(full.len(), SAMPLED_STEPS) {
        let r = full[i];
        loss_grad_into(ds, LossKind::Logistic, &r.w, &mut grad);
        let ns_grad: Vec<f64> = geo.basis.iter().map(|f| dot(f, &grad)).collect();
        let g_grad = ctx.potential.grad(&r.ns_coords);
        let scale = (-geo.gamma * r.proj_mm).exp();
        let diff: Vec<f64> = ns_grad.iter().zip(&g_grad).map(|(a, b)| a - scale * b).collect();
        let lhs = norm(&diff);
        let h_term = theta.map_or(0.0, |th| (-th * r.proj_mm).exp() * r.h_val);
        let rhs = (-2.0 * geo.gamma * r.proj_mm).exp() * r.g_val * r.g_val + h_term;
        s.upper(r.t, lhs, rhs, GRAD_TOL);
    }
    Ok(s.finish("grad_comparison", "gradient comparison inequality"))
}

/// Log of the one-step increase allowed for `G` from a step at max-margin
/// coordinate `w`.
pub fn descent_log_allowance(ctx: &PotentialContext, w: f64) -> f64 {
    let eta = ctx.eta;
    let b = &ctx.bounds;
    let log_sq = log_add_exp(2.0 * b.log_g_max, 2.0 * b.log_h_max);
    let log_decay = match ctx.theta {
        Some(th) => log_add_exp(-2.0 * ctx.gamma * w, -th * w),
        None => -2.0 * ctx.gamma * w,
    };
    (2.0 * (eta + eta * eta)).ln() + b.log_g_max + log_sq + log_decay
}

/// `G(w_{t+1}) <= G(w_t) + 2(eta + eta^2) G_max (G_max^2 + H_max^2)(e^{-2 gamma w_t} + e^{-theta w_t})`
/// over sampled consecutive record pairs.
pub fn check_descent_g(traj: &Trajectory, ctx: &PotentialContext) -> Result<CheckResult> {
    theta_for(ctx)?;
    let pairs: Vec<(&IterateRecord, &IterateRecord)> =
        traj.records.windows(2).filter(|p| p[1].t == p[0].t + 1).map(|p| (&p[0], &p[1])).collect();
    if pairs.is_empty() {
        return Err(Error::NotApplicable("no consecutive record pairs".into()));
    }
    let mut s = Slack::new();
    for i in sample_indices(pairs.len(), SAMPLED_STEPS) {
        let (a, b) = pairs[i];
        let bound = a.g_val + descent_log_allowance(ctx, a.proj_mm).exp();
        s.upper(a.t, b.g_val, bound, EXACT_TOL);
    }
    Ok(s.finish("descent_G", "modified descent inequality for G"))
}

/// Ratios `exp(-<a_i, P w_T>) / alpha_i` over the support set.
pub fn proportionality_ratios(traj: &Trajectory, geo: &MarginGeometry, ctx: &PotentialContext) -> Result<Vec<f64>> {
    let last = traj.last();
    if last.ns_coords.len() != ctx.potential.dim() {
        return Err(Error::NotApplicable("final iterate vector unavailable".into()));
    }
    geo.support
        .iter()
        .zip(&ctx.potential.support)
        .map(|(&i, feat)| {
            let a = geo.alphas[i];
            if !(a > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "dual coefficient {a} of sample {} is not positive",
                    i + 1
                )));
            }
            Ok((-dot(feat, &last.ns_coords)).exp() / a)
        })
        .collect()
}

/// `max r_i / min r_i <= 1.05`: the complement limit weights support vectors
/// in proportion to their dual coefficients.
pub fn check_dual_proportionality(
    traj: &Trajectory,
    geo: &MarginGeometry,
    ctx: &PotentialContext,
) -> Result<CheckResult> {
    let r = proportionality_ratios(traj, geo, ctx)?;
    let hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = r.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = hi / lo;
    Ok(CheckResult {
        name: "dual_proportionality".into(),
        passed: spread <= RATIO_TOL,
        worst_t: traj.final_t(),
        measured: spread,
        bound: RATIO_TOL,
        detail: format!("ratio spread {spread:.6} over {} support vectors", r.len()),
    })
}

/// The four divergence conditions for any trajectory.
///
/// The loss strictly increases from step 1, the max-margin coordinate
/// strictly increases, `|w_bar| >= 2 gamma w`, and the first complement
/// coordinate flips sign every step with magnitude at least 1.
pub fn exp_divergence_conditions(traj: &Trajectory, gamma: f64) -> CheckResult {
    let recs: Vec<&IterateRecord> =
        traj.records.iter().filter(|r| r.proj_mm.is_finite() && r.ns_norm.is_finite()).collect();
    let mut problems = Vec::new();
    let mut first_bad: Option<u64> = None;
    let mut note = |t: u64, what: String, problems: &mut Vec<String>| {
        first_bad.get_or_insert(t);
        if problems.len() < 4 {
            problems.push(what);
        }
    };
    if recs.len() < 2 {
        return failed("exp_divergence", 0, "fewer than two finite records".into());
    }

    let mut min_slack = f64::INFINITY;
    let mut worst_t = 0;
    for r in &recs {
        let slack = r.ns_norm - 2.0 * gamma * r.proj_mm;
        if slack < min_slack {
            min_slack = slack;
            worst_t = r.t;
        }
        if slack < -EXACT_TOL {
            note(
                r.t,
                format!(
                    "complement |w_bar|={:.4e} < 2 gamma w={:.4e} at t={}",
                    r.ns_norm,
                    2.0 * gamma * r.proj_mm,
                    r.t
                ),
                &mut problems,
            );
        }
        if r.ns_sign.abs() < 1.0 {
            note(r.t, format!("flip |w_bar|={:.4e} < 1 at t={}", r.ns_sign.abs(), r.t), &mut problems);
        }
    }
    for p in recs.windows(2) {
        let (a, b) = (p[0], p[1]);
        if b.t != a.t + 1 {
            continue;
        }
        if a.t >= 1 && !(b.loss > a.loss) {
            note(b.t, format!("loss fell {:.4e} -> {:.4e} at t={}", a.loss, b.loss, b.t), &mut problems);
        }
        if !(b.proj_mm > a.proj_mm) {
            note(b.t, format!("w fell {:.4e} -> {:.4e} at t={}", a.proj_mm, b.proj_mm, b.t), &mut problems);
        }
        if !(a.ns_sign * b.ns_sign < 0.0) {
            note(b.t, format!("no sign flip at t={}", b.t), &mut problems);
        }
    }

    let passed = problems.is_empty();
    CheckResult {
        name: "exp_divergence".into(),
        passed,
        worst_t: first_bad.unwrap_or(worst_t),
        measured: min_slack,
        bound: 0.0,
        detail: if passed {
            format!("all four conditions held over {} records; {}", recs.len(), traj.terminated)
        } else {
            problems.join("; ")
        },
    }
}

/// Divergence conditions; only exponential-loss trajectories are accepted.
pub fn check_exp_divergence(traj: &Trajectory, gamma: f64) -> Result<CheckResult> {
    if traj.loss_kind != LossKind::Exponential {
        return Err(Error::InvalidParameter(format!(
            "divergence conditions need an exponential-loss trajectory, got {}",
            traj.loss_kind
        )));
    }
    Ok(exp_divergence_conditions(traj, gamma))
}

/// Early ascent steps and sharpness above `2/eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationSummary {
    pub ascents: usize,
    pub first_ascent: Option<u64>,
    pub largest_rise: f64,
    pub pairs: usize,
    pub sharpness_above: bool,
}

pub fn oscillation_summary(traj: &Trajectory) -> Result<OscillationSummary> {
    let pairs: Vec<(&IterateRecord, &IterateRecord)> = traj
        .records
        .windows(2)
        .filter(|p| p[1].t == p[0].t + 1 && p[0].t < OSCILLATION_WINDOW)
        .map(|p| (&p[0], &p[1]))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("insufficient density: no consecutive early records".into()));
    }
    let mut ascents = 0;
    let mut first_ascent = None;
    let mut largest_rise = f64::NEG_INFINITY;
    for (a, b) in &pairs {
        let rise = b.loss - a.loss;
        largest_rise = largest_rise.max(rise);
        if rise > 0.0 {
            ascents += 1;
            first_ascent.get_or_insert(a.t);
        }
    }
    let threshold = 2.0 / traj.eta;
    Ok(OscillationSummary {
        ascents,
        first_ascent,
        largest_rise,
        pairs: pairs.len(),
        sharpness_above: traj.records.iter().any(|r| r.hess_top.is_some_and(|h| h > threshold)),
    })
}

pub fn check_oscillation(traj: &Trajectory, mode: VerifyMode) -> Result<CheckResult> {
    let s = oscillation_summary(traj)?;
    let passed = match mode {
        VerifyMode::ExpectEos => s.ascents > 0,
        VerifyMode::ExpectStable => s.ascents == 0,
        VerifyMode::ExpDivergence => {
            return Err(Error::InvalidParameter("oscillation has no exp-divergence mode".into()))
        }
    };
    let detail = format!(
        "{mode}: {} ascent steps in {} early pairs{}; Hessian top {} 2/eta",
        s.ascents,
        s.pairs,
        s.first_ascent.map(|t| format!(", first at t={t}")).unwrap_or_default(),
        if s.sharpness_above { "exceeded" } else { "stayed within" },
    );
    Ok(CheckResult {
        name: "oscillation".into(),
        passed,
        worst_t: s.first_ascent.unwrap_or(0),
        measured: s.largest_rise,
        bound: 0.0,
        detail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::make_two_point;
    use crate::dynamics::{gd_run, RunOptions, Termination};
    use crate::geometry::{solve_hard_margin, DEFAULT_TOL};

    fn setup() -> (Dataset, MarginGeometry) {
        let ds = make_two_point(0.2).unwrap();
        let geo = solve_hard_margin(&ds, DEFAULT_TOL).unwrap();
        (ds, geo)
    }

    #[test]
    fn lower_bound_values() {
        assert!((mm_lower_bound(0.2, 2.0, 100) - 8.047190).abs() < 1e-6);
        assert!((mm_lower_bound(0.2, 2.0, 50) - 5.493061).abs() < 1e-6);
        assert!((mm_lower_bound(0.2, 2.0, 1) - 0.196104).abs() < 1e-6);
        assert_eq!(mm_lower_bound(0.2, 2.0, 0), 0.0);
    }

    #[test]
    fn two_point_logistic_checks() {
        let (ds, geo) = setup();
        let ctx = PotentialContext::new(&geo, &ds, 2.0).unwrap();
        let tr = gd_run(&ds, LossKind::Logistic, 2.0, 5000, &[0.0, 1.0], &geo, &RunOptions::default()).unwrap();
        for c in [
            check_mm_lower(&tr, &geo),
            check_mm_upper(&tr, &ctx),
            check_ns_bounded(&tr, &ctx),
            check_angle_bound(&tr, &ctx),
            check_risk_bound(&tr, &ctx),
            check_descent_g(&tr, &ctx).unwrap(),
            check_grad_comparison(&tr, &geo, &ds, &ctx).unwrap(),
        ] {
            assert!(c.passed, "{c:?}");
        }
        assert_eq!(ctx.w_max(), 12.0);
    }

    #[test]
    fn grad_comparison_at_single_point() {
        // w = 0, w_bar = 1: left side |sigma(-1) - sigma(1) - (e - 1/e)|.
        let (ds, geo) = setup();
        let ctx = PotentialContext::new(&geo, &ds, 2.0).unwrap();
        let mut tr = gd_run(&ds, LossKind::Logistic, 2.0, 1, &[0.0, 1.0], &geo, &RunOptions::default()).unwrap();
        tr.records.truncate(1);
        let c = check_grad_comparison(&tr, &geo, &ds, &ctx).unwrap();
        let s = |m: f64| 1.0 / (1.0 + m.exp());
        let e = std::f64::consts::E;
        let lhs = ((s(-1.0) - s(1.0)) - (e - 1.0 / e)).abs();
        assert!((c.measured - lhs).abs() < 1e-12);
        assert!((c.bound - (e + 1.0 / e).powi(2)).abs() < 1e-12);
        assert!(c.passed);
    }

    #[test]
    fn exponential_run_diverges() {
        let (ds, geo) = setup();
        let tr = gd_run(&ds, LossKind::Exponential, 4.0, 200, &[0.0, 1.0], &geo, &RunOptions::default()).unwrap();
        let c = check_exp_divergence(&tr, geo.gamma).unwrap();
        assert!(c.passed, "{c:?}");
        assert!(matches!(tr.terminated, Termination::Overflow(_)));
        let lg = gd_run(&ds, LossKind::Logistic, 4.0, 200, &[0.0, 1.0], &geo, &RunOptions::default()).unwrap();
        assert!(check_exp_divergence(&lg, geo.gamma).is_err());
        assert!(!exp_divergence_conditions(&lg, geo.gamma).passed);
    }

    #[test]
    fn short_trajectories_are_not_rated() {
        let (ds, geo) = setup();
        let tr = gd_run(&ds, LossKind::Logistic, 2.0, 10, &[0.0, 0.0], &geo, &RunOptions::default()).unwrap();
        assert!(matches!(check_risk_rate(&tr), Err(Error::NotApplicable(_))));
        let mut one = tr.clone();
        one.records.truncate(1);
        assert!(oscillation_summary(&one).is_err());
    }

    #[test]
    fn fake_descent_violation_fails() {
        let (ds, geo) = setup();
        let ctx = PotentialContext::new(&geo, &ds, 2.0).unwrap();
        let mut tr = gd_run(&ds, LossKind::Logistic, 2.0, 3, &[0.0, 1.0], &geo, &RunOptions::default()).unwrap();
        tr.records[2].g_val = tr.records[1].g_val + 2.0 * descent_log_allowance(&ctx, tr.records[1].proj_mm).exp();
        assert!(!check_descent_g(&tr, &ctx).unwrap().passed);
    }

    #[test]
    fn risk_constant_two_point() {
        // No non-support samples: the constant is 2 G_max / (eta gamma^2).
        let (ds, geo) = setup();
        let ctx = PotentialContext::new(&geo, &ds, 2.0).unwrap();
        let want = (2.0f64 / (2.0 * 0.04)).ln() + ctx.bounds.log_g_max;
        assert!((log_risk_constant(&ctx) - want).abs() < 1e-12);
        let mut tr = gd_run(&ds, LossKind::Logistic, 2.0, 10, &[0.0, 0.0], &geo, &RunOptions::default()).unwrap();
        tr.records[5].loss = 2.0 * log_risk_constant(&ctx).exp();
        assert!(!check_risk_bound(&tr, &ctx).passed);
    }

    #[test]
    fn sample_indices_cover_ends() {
        assert_eq!(sample_indices(5, 100), vec![0, 1, 2, 3, 4]);
        let s = sample_indices(1000, 100);
        assert_eq!(s.len(), 100);
        assert_eq!((s[0], s[99]), (0, 999));
    }
}
