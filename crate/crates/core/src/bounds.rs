//! Closed-form calculators: the truncation schedule, sample-size bounds,
//! VC bounds and the MLE maximum-value threshold. Every unnamed asymptotic
//! constant is pinned (to 1) and listed in [`constants_ledger`].

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// Derived truncation parameters for `n` samples at accuracy `eps` and
/// confidence `1 - tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleParams {
    pub n: u64,
    pub eps: f64,
    pub tau: f64,
    pub d: usize,
    /// `ln(100 n^4 / tau^2)`
    pub z: f64,
    /// `eps / (32 z)`
    pub delta: f64,
    /// `p_min / M_{f0} = e^{-z}`
    pub p_min_ratio: f64,
}

fn check_unit(name: &str, v: f64) -> Result<(), BoundsError> {
    if !(v > 0.0 && v < 1.0) {
        return Err(BoundsError::Domain(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

pub fn schedule(n: u64, eps: f64, tau: f64, d: usize) -> Result<ScheduleParams, BoundsError> {
    if n == 0 {
        return Err(BoundsError::Domain("n must be at least 1".into()));
    }
    if d == 0 {
        return Err(BoundsError::Domain("d must be at least 1".into()));
    }
    check_unit("eps", eps)?;
    check_unit("tau", tau)?;
    let nf = n as f64;
    let z = 100f64.ln() + 4.0 * nf.ln() - 2.0 * tau.ln();
    Ok(ScheduleParams {
        n,
        eps,
        tau,
        d,
        z,
        delta: eps / (32.0 * z),
        p_min_ratio: tau * tau / (100.0 * nf.powi(4)),
    })
}

/// `ln(M_f / p_min)` threshold for the size of the MLE maximum: `4 z`.
pub fn mle_max_threshold(s: &ScheduleParams) -> f64 {
    4.0 * s.z
}

/// A sample count that may exceed `u64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Count {
    Value(u64),
    Saturated,
}

impl Count {
    fn from_real(x: f64) -> Count {
        let c = x.ceil();
        if c.is_finite() && c < u64::MAX as f64 {
            Count::Value(c as u64)
        } else {
            Count::Saturated
        }
    }

    pub fn value(self) -> Option<u64> {
        match self {
            Count::Value(v) => Some(v),
            Count::Saturated => None,
        }
    }
}

impl std::fmt::Display for Count {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Count::Value(v) => write!(f, "{v}"),
            Count::Saturated => write!(f, "saturated"),
        }
    }
}

/// `((d^2/eps) ln^3(d/(eps tau)))^{(d+3)/2}` with the Θ-constant 1.
pub fn n1_real(d: usize, eps: f64, tau: f64) -> f64 {
    let df = d as f64;
    let l = (df / (eps * tau)).ln();
    (df * df / eps * l.powi(3)).powf((df + 3.0) / 2.0)
}

/// `((2^d d^{2d+3}/eps) ln^{d+1}(d^{d+1}/(eps tau)))^{(d+5)/2}` with the
/// Θ and O constants 1.
pub fn n2_real(d: usize, eps: f64, tau: f64) -> f64 {
    let df = d as f64;
    let l = (df + 1.0) * df.ln() - (eps * tau).ln();
    (2f64.powf(df) * df.powf(2.0 * df + 3.0) / eps * l.powf(df + 1.0)).powf((df + 5.0) / 2.0)
}

/// `ceil(2 (d+1) h log((d+1) h))` in the given log base.
pub fn vc_polytope_bound_base(d: usize, h: u64, base: f64) -> u64 {
    let k = (d as f64 + 1.0) * h as f64;
    (2.0 * k * k.ln() / base.ln()).ceil().max(0.0) as u64
}

/// Smallest `V >= 3` with `V / log2(V) >= target`. `V/log V` decreases
/// below `e`, so the search starts on the increasing branch.
pub fn combo_bound_for(target: f64) -> u64 {
    let ratio = |v: f64| v / v.log2();
    if ratio(3.0) >= target {
        return 3;
    }
    let mut hi = 4.0f64;
    while ratio(hi) < target {
        hi *= 2.0;
    }
    let (mut lo, mut hi) = ((hi / 2.0) as u64, hi as u64);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ratio(mid as f64) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VcBounds {
    /// `log2` convention.
    pub polytope_bound: u64,
    /// Natural-log convention of the same formula.
    pub polytope_bound_ln: u64,
    pub combo_bound: u64,
}

pub fn vc_bounds(d: usize, h: u64, l: u64) -> VcBounds {
    VcBounds {
        polytope_bound: vc_polytope_bound_base(d, h, 2.0),
        polytope_bound_ln: vc_polytope_bound_base(d, h, std::f64::consts::E),
        combo_bound: combo_bound_for(d as f64 * l as f64 * h as f64),
    }
}

/// Facet budget `ceil((10 kappa d / delta)^{(d-1)/2})` of the sandwich.
pub fn sandwich_facets(d: usize, delta: f64, kappa: f64) -> f64 {
    (10.0 * kappa * d as f64 / delta).powf((d as f64 - 1.0) / 2.0).ceil()
}

/// Facet budget `ceil((10 kappa d z^d / delta)^{(d-1)/2})` of the warm-up.
pub fn warmup_facets(s: &ScheduleParams, kappa: f64) -> f64 {
    let d = s.d as f64;
    (10.0 * kappa * d * s.z.powf(d) / s.delta).powf((d - 1.0) / 2.0).ceil()
}

/// Number of levels `ceil(ln(100 n^4 / tau))` of the sandwich.
pub fn sandwich_levels(n: u64, tau: f64) -> u64 {
    (100f64.ln() + 4.0 * (n as f64).ln() - tau.ln()).ceil() as u64
}

/// A pinned constant and the statement it stands in for.
#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub name: &'static str,
    pub value: f64,
    pub replaces: &'static str,
}

pub fn constants_ledger() -> Vec<Constant> {
    vec![
        Constant { name: "theta_N1", value: 1.0, replaces: "Theta(.) in the definition of N1" },
        Constant { name: "theta_N2", value: 1.0, replaces: "Theta(.) in the definition of N2" },
        Constant { name: "O_N2", value: 1.0, replaces: "2^{O(d)} in N2, taken as 2^d" },
        Constant { name: "kappa", value: 1.0, replaces: "polytope approximation constant (facet budgets)" },
        Constant { name: "C_vc", value: 1.0, replaces: "VC inequality E||f - f_n|| <= C sqrt(V/n)" },
        Constant { name: "alpha", value: 1.0, replaces: "alpha in sqrt(alpha V / n) <= delta/10" },
        Constant { name: "O_combo", value: 1.0, replaces: "V / log V = O(d L H)" },
        Constant { name: "c", value: 1.0, replaces: "c in the N2 simplification" },
        Constant { name: "c_prime", value: 1.0, replaces: "c' in the N1 simplification" },
        Constant { name: "b", value: 1.0, replaces: "b in the N2 simplification" },
        Constant { name: "tail_O_d", value: 1.0, replaces: "O(d)^d in the level-set tail bound" },
        Constant { name: "omega_lower", value: 1.0, replaces: "Omega((1/eps)^{(d+1)/2}) minimax lower bound (external result)" },
    ]
}

/// One line of the internal-consistency check `sqrt(V/n) <= delta/10`.
#[derive(Debug, Clone, PartialEq)]
pub struct VcConsistency {
    pub family: &'static str,
    pub d: usize,
    pub eps: f64,
    pub tau: f64,
    pub n: Count,
    pub v: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks the pinned constants against the two VC claims: the warm-up
/// polytope family at `n = N2` and the Boolean-combination family at
/// `n = N1`.
pub fn vc_consistency(d: usize, eps: f64, tau: f64) -> Result<Vec<VcConsistency>, BoundsError> {
    let mut out = Vec::new();
    for (family, n) in [("warmup-polytopes", n2_real(d, eps, tau)), ("boolean-combos", n1_real(d, eps, tau))] {
        let count = Count::from_real(n);
        let n_int = count.value().unwrap_or(u64::MAX);
        let s = schedule(n_int, eps, tau, d)?;
        let v = if family == "warmup-polytopes" {
            let h = warmup_facets(&s, 1.0);
            let k = (d as f64 + 1.0) * h;
            2.0 * k * k.log2()
        } else {
            let h = sandwich_facets(d, s.delta, 1.0);
            let l = sandwich_levels(n_int, tau) as f64;
            combo_bound_for(d as f64 * 2.0 * l * h) as f64
        };
        let lhs = (v / n).sqrt();
        let rhs = s.delta / 10.0;
        out.push(VcConsistency { family, d, eps, tau, n: count, v, lhs, rhs, holds: lhs <= rhs });
    }
    Ok(out)
}

/// Sample-size report for `(d, eps, tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub d: usize,
    pub eps: f64,
    pub tau: f64,
    pub n1: Count,
    pub n2: Count,
    /// `(1/eps)^{(d+3)/2}`, the rate exponent of the upper bound.
    pub rate_exponent: f64,
    /// `(1/eps)^{(d+1)/2}`, the cited minimax lower bound (external result).
    pub lower_bound: f64,
    pub vc: VcBounds,
    pub facets: u64,
    pub levels: u64,
    pub mle_max_threshold: f64,
    pub ledger: Vec<Constant>,
}

/// N1, N2, and the VC/threshold quantities evaluated at `n = N1`.
pub fn sample_bounds(d: usize, eps: f64, tau: f64) -> Result<BoundReport, BoundsError> {
    if d == 0 {
        return Err(BoundsError::Domain("d must be at least 1".into()));
    }
    check_unit("eps", eps)?;
    check_unit("tau", tau)?;
    let n1 = Count::from_real(n1_real(d, eps, tau));
    let n2 = Count::from_real(n2_real(d, eps, tau));
    let n = n1.value().unwrap_or(u64::MAX);
    let s = schedule(n, eps, tau, d)?;
    let facets = sandwich_facets(d, s.delta, 1.0).min(u64::MAX as f64) as u64;
    let levels = sandwich_levels(n, tau);
    Ok(BoundReport {
        d,
        eps,
        tau,
        n1,
        n2,
        rate_exponent: (d as f64 + 3.0) / 2.0,
        lower_bound: (1.0 / eps).powf((d as f64 + 1.0) / 2.0),
        vc: vc_bounds(d, facets, 2 * levels),
        facets,
        levels,
        mle_max_threshold: mle_max_threshold(&s),
        ledger: constants_ledger(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_at_hundred_samples() {
        let s = schedule(100, 0.1, 0.1, 1).unwrap();
        let z = (1e12f64).ln();
        assert!((s.z - z).abs() < 1e-13);
        assert!((s.delta - 0.1 / (32.0 * z)).abs() < 1e-19);
        assert!((s.p_min_ratio - 1e-12).abs() < 1e-27);
        assert!((mle_max_threshold(&s) - 110.52408446371).abs() < 1e-9);
    }

    #[test]
    fn domain_errors() {
        assert!(schedule(0, 0.1, 0.1, 1).is_err());
        assert!(schedule(10, 1.0, 0.1, 1).is_err());
        assert!(schedule(10, 0.1, 0.0, 1).is_err());
        assert!(sample_bounds(0, 0.1, 0.1).is_err());
    }

    #[test]
    fn vc_examples() {
        assert_eq!(vc_bounds(1, 2, 1).polytope_bound, 16);
        assert_eq!(vc_bounds(2, 1, 1).combo_bound, 4);
        assert!(vc_bounds(1, 1, 1).polytope_bound >= 1);
        assert_eq!(combo_bound_for(1.0), 3);
    }

    #[test]
    fn n1_grows_as_eps_shrinks() {
        for d in 1..=4 {
            for &tau in &[0.1, 0.01] {
                assert!(n1_real(d, 0.05, tau) > n1_real(d, 0.1, tau));
            }
        }
        assert_eq!(sample_bounds(4, 0.1, 0.1).unwrap().rate_exponent, 3.5);
    }
}
