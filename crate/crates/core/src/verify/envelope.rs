//! Boundedness test for quantities whose bounding constant is not explicit.

/// Allowed growth of the running maximum from one decade to the next.
pub const ENVELOPE_RATIO: f64 = 1.05;

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub passed: bool,
    /// Global maximum and the first step attaining it.
    pub max: f64,
    pub argmax_t: u64,
    pub last_decade_max: f64,
    pub prev_decade_max: f64,
    pub detail: String,
}

/// Accepts `f(t)` over `t >= t_min` as bounded when the global maximum is
/// attained in the first half of the horizon `T`, or when the maximum over
/// `(T/10, T]` is within [`ENVELOPE_RATIO`] of the maximum over `(T/100, T/10]`.
pub fn envelope(points: &[(u64, f64)], t_min: u64) -> Envelope {
    let pts: Vec<(u64, f64)> = points.iter().copied().filter(|(t, _)| *t >= t_min).collect();
    let fail = |detail: String| Envelope {
        passed: false,
        max: f64::NAN,
        argmax_t: 0,
        last_decade_max: f64::NAN,
        prev_decade_max: f64::NAN,
        detail,
    };
    if pts.is_empty() {
        return fail("no points".into());
    }
    if let Some((t, v)) = pts.iter().find(|(_, v)| !v.is_finite()) {
        return fail(format!("value {v} at t={t}"));
    }
    let horizon = pts.last().map(|p| p.0).unwrap_or(0) as f64;
    let (argmax_t, max) = pts.iter().fold((0, f64::NEG_INFINITY), |acc, &(t, v)| if v > acc.1 { (t, v) } else { acc });
    let decade_max = |lo: f64, hi: f64| {
        pts.iter().filter(|(t, _)| (*t as f64) > lo && (*t as f64) <= hi).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    };
    let last = decade_max(horizon / 10.0, horizon);
    let prev = decade_max(horizon / 100.0, horizon / 10.0);

    let early = (argmax_t as f64) <= horizon / 2.0;
    let stable = prev.is_finite() && last <= ENVELOPE_RATIO * prev;
    let detail = if early {
        format!("maximum {max:.6e} at t={argmax_t} in the first half of T={horizon}")
    } else if stable {
        format!("last-decade maximum {last:.6e} within {ENVELOPE_RATIO} of previous {prev:.6e}")
    } else {
        format!("last-decade maximum {last:.6e} exceeds {ENVELOPE_RATIO} x previous {prev:.6e}")
    };
    Envelope { passed: early || stable, max, argmax_t, last_decade_max: last, prev_decade_max: prev, detail }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(f: impl Fn(f64) -> f64) -> Vec<(u64, f64)> {
        (1..=100_000u64).step_by(7).map(|t| (t, f(t as f64))).collect()
    }

    #[test]
    fn decaying_passes() {
        assert!(envelope(&series(|t| 1.0 / t), 3).passed);
    }

    #[test]
    fn saturating_passes() {
        let e = envelope(&series(|t| 1.0 - 1.0 / t), 3);
        assert!(e.passed && e.argmax_t > 50_000);
    }

    #[test]
    fn linear_growth_fails() {
        assert!(!envelope(&series(|t| t), 3).passed);
        assert!(!envelope(&series(|t| t.ln()), 3).passed);
    }

    #[test]
    fn constant_passes_and_infinite_fails() {
        assert!(envelope(&series(|_| 2.0), 3).passed);
        assert!(!envelope(&[(3, 1.0), (4, f64::INFINITY)], 3).passed);
        assert!(!envelope(&[], 3).passed);
    }
}
