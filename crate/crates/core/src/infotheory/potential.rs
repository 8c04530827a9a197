//! Mirror-map potentials `F(p) = sum_i f(p_i)`.

use std::fmt;
use std::sync::Arc;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Number of interior grid points used by the admissibility check.
pub const ADMISSIBILITY_GRID: usize = 1000;
const FD_STEP: f64 = 1e-4;
const FD_TOL: f64 = 1e-6;

/// A potential function with its first two derivatives.
#[derive(Clone)]
pub struct PotentialFn {
    name: String,
    f: Scalar,
    df: Scalar,
    d2f: Scalar,
    admissible: bool,
}

impl fmt::Debug for PotentialFn {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("PotentialFn").field("name", &self.name).field("admissible", &self.admissible).finish()
    }
}

impl PotentialFn {
    /// Build from evaluators; admissibility is checked on construction.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        d2f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let mut pot = PotentialFn { name: name.into(), f: Arc::new(f), df: Arc::new(df), d2f: Arc::new(d2f), admissible: false };
        pot.admissible = check_admissible(&pot).admissible;
        pot
    }

    /// `x log x`.
    pub fn negentropy() -> Self {
        Self::custom(
            "negentropy",
            |x| if x > 0.0 { x * x.ln() } else { 0.0 },
            |x| x.ln() + 1.0,
            |x| 1.0 / x,
        )
    }

    /// `-x^alpha`.
    pub fn tsallis(alpha: f64) -> Self {
        Self::custom(
            format!("tsallis_{alpha}"),
            move |x| -x.powf(alpha),
            move |x| -alpha * x.powf(alpha - 1.0),
            move |x| alpha * (1.0 - alpha) * x.powf(alpha - 2.0),
        )
    }

    /// `-log(T x + 1)`.
    pub fn log_barrier(horizon: f64) -> Self {
        Self::custom(
            format!("logbarrier_{horizon}"),
            move |x| -(horizon * x + 1.0).ln(),
            move |x| -horizon / (horizon * x + 1.0),
            move |x| {
                let y = x + 1.0 / horizon;
                1.0 / (y * y)
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn admissible(&self) -> bool {
        self.admissible
    }

    pub fn f(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    pub fn df(&self, x: f64) -> f64 {
        (self.df)(x)
    }

    pub fn d2f(&self, x: f64) -> f64 {
        (self.d2f)(x)
    }

    /// `F(p) = sum_i f(p_i)`.
    pub fn value(&self, p: &[f64]) -> f64 {
        p.iter().map(|&x| self.f(x)).sum()
    }
}

/// Value of `F` at `p` together with its extreme values on the simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialStats {
    pub value: f64,
    pub max: f64,
    pub min: f64,
    pub diam: f64,
}

/// `F(p)`, `Max = f(1) + (d-1) f(0)`, `Min = d f(1/d)` and their difference.
pub fn potential_stats(pot: &PotentialFn, d: usize, p: &[f64]) -> PotentialStats {
    let n = d as f64;
    let max = pot.f(1.0) + (n - 1.0) * pot.f(0.0);
    let min = n * pot.f(1.0 / n);
    PotentialStats { value: pot.value(p), max, min, diam: max - min }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub x: f64,
    /// `"f'"`, `"f''"` or `"f'''"`.
    pub condition: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub violations: Vec<Violation>,
}

/// Check `f' <= 0`, `f'' >= 0` and `f''' <= 0` on the grid `k/1001`,
/// `k = 1..=1000`. The third derivative is a centred difference of `f''`.
pub fn check_admissible(pot: &PotentialFn) -> AdmissibilityReport {
    let mut violations = Vec::new();
    for k in 1..=ADMISSIBILITY_GRID {
        let x = k as f64 / (ADMISSIBILITY_GRID + 1) as f64;
        let d1 = pot.df(x);
        if d1.is_nan() || d1 > 0.0 {
            violations.push(Violation { x, condition: "f'", value: d1 });
        }
        let d2 = pot.d2f(x);
        if d2.is_nan() || d2 < 0.0 {
            violations.push(Violation { x, condition: "f''", value: d2 });
        }
        let d3 = (pot.d2f(x + FD_STEP) - pot.d2f(x - FD_STEP)) / (2.0 * FD_STEP);
        if d3.is_nan() || d3 > FD_TOL {
            violations.push(Violation { x, condition: "f'''", value: d3 });
        }
    }
    AdmissibilityReport { admissible: violations.is_empty(), violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stats_examples() {
        let s = potential_stats(&PotentialFn::negentropy(), 2, &[0.5, 0.5]);
        assert!((s.diam - std::f64::consts::LN_2).abs() < 1e-15);
        let s = potential_stats(&PotentialFn::tsallis(0.5), 4, &[0.25; 4]);
        assert!((s.max + 1.0).abs() < 1e-15 && (s.min + 2.0).abs() < 1e-15 && (s.diam - 1.0).abs() < 1e-15);
        let s = potential_stats(&PotentialFn::log_barrier(100.0), 2, &[1.0, 0.0]);
        assert!((s.diam - (2.0 * 51f64.ln() - 101f64.ln())).abs() < 1e-12);
        assert!((s.diam - 3.25).abs() < 0.01);
    }

    #[test]
    fn admissibility_examples() {
        let neg = check_admissible(&PotentialFn::negentropy());
        assert!(!neg.admissible);
        assert!(neg.violations.iter().all(|v| v.condition == "f'" && v.x > (-1f64).exp() - 1e-3));
        assert!(PotentialFn::tsallis(0.5).admissible());
        assert!(PotentialFn::log_barrier(100.0).admissible());
        let sqrt = PotentialFn::custom("sqrt", |x: f64| x.sqrt(), |x: f64| 0.5 / x.sqrt(), |x: f64| -0.25 * x.powf(-1.5));
        let report = check_admissible(&sqrt);
        assert!(!report.admissible);
        assert!(report.violations.iter().any(|v| v.condition == "f''"));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for pot in [PotentialFn::negentropy(), PotentialFn::tsallis(0.3), PotentialFn::log_barrier(50.0)] {
            for &x in &[0.1, 0.4, 0.9] {
                let h = 1e-6;
                let fd1 = (pot.f(x + h) - pot.f(x - h)) / (2.0 * h);
                let fd2 = (pot.df(x + h) - pot.df(x - h)) / (2.0 * h);
                assert!((fd1 - pot.df(x)).abs() < 1e-6 * (1.0 + fd1.abs()), "{}", pot.name());
                assert!((fd2 - pot.d2f(x)).abs() < 1e-4 * (1.0 + fd2.abs()), "{}", pot.name());
            }
        }
    }
}
