use serde::{Deserialize, Serialize};

use super::params::GameParams;
use super::utility::{jc_utilities, verify_gain};
use super::GameError;

/// A mixing probability with a flag for whether it is a proper interior
/// probability. Values outside `[0, 1]` are reported, never clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mixing {
    pub value: f64,
    pub in_unit_interval: bool,
}

impl Mixing {
    fn new(value: f64) -> Mixing {
        Mixing {
            value,
            in_unit_interval: (0.0..=1.0).contains(&value),
        }
    }
}

/// Verification rate that leaves the provider indifferent between executing
/// and deceiving: `(c_e - c_d) / (p_a^(n+1) pi_c (theta + n + 1))`.
pub fn equilibrium_pv(p: &GameParams) -> Result<Mixing, GameError> {
    if p.p_a == 0.0 {
        return Err(GameError::ZeroProbability);
    }
    let denom = p.p_a.powi(p.n as i32 + 1) * p.pi_c * p.big_n();
    if denom == 0.0 {
        return Err(GameError::ZeroDenominator);
    }
    Ok(Mixing::new((p.c_e - p.c_d) / denom))
}

/// Execution rate that leaves the creator indifferent between verifying and
/// passing: `(L - c_v) / (p_a L)` with `L` from [`verify_gain`].
pub fn equilibrium_pe(p: &GameParams) -> Result<Mixing, GameError> {
    if p.p_a == 0.0 {
        return Err(GameError::ZeroProbability);
    }
    let l = verify_gain(p);
    let denom = p.p_a * l;
    if denom == 0.0 {
        return Err(GameError::ZeroDenominator);
    }
    Ok(Mixing::new((l - p.c_v) / denom))
}

/// Creator utility when both players mix with `p_e` and `p_v`.
pub fn jc_total_utility(p: &GameParams) -> f64 {
    let u = jc_utilities(p);
    let (v, e) = (p.p_v, p.p_e);
    v * e * u.ev + v * (1.0 - e) * u.dv + (1.0 - v) * e * u.ep + (1.0 - v) * (1.0 - e) * u.dp
}

/// `d jc_total_utility / d p_a` with every other symbol held fixed.
pub fn jc_utility_derivative_pa(p: &GameParams) -> f64 {
    let n = p.n as i32;
    let q = p.q();
    let dq = if n == 0 {
        0.0
    } else {
        p.n as f64 * p.p_a.powi(n - 1)
    };
    let miss = 1.0 - p.p_a;
    let d_ev = -p.pi_c + p.g_m + p.d * ((1.0 - q) + miss * dq) + p.pi_d * (miss * dq - q);
    let d_dv = dq * (p.d + p.pi_d);
    p.p_v * p.p_e * d_ev + p.p_v * (1.0 - p.p_e) * d_dv
}

/// Inputs of the stationarity condition for the creator's best `p_a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryInputs {
    pub n: u32,
    pub theta: f64,
    pub pi_c: f64,
    pub g_m: f64,
    pub p_e: f64,
}

impl StationaryInputs {
    pub fn worst_case(n: u32, theta: f64) -> StationaryInputs {
        StationaryInputs {
            n,
            theta,
            pi_c: 1.0,
            g_m: 0.0,
            p_e: 1.0,
        }
    }

    pub fn from_params(p: &GameParams) -> StationaryInputs {
        StationaryInputs {
            n: p.n,
            theta: p.theta,
            pi_c: p.pi_c,
            g_m: p.g_m,
            p_e: p.p_e,
        }
    }

    /// `1 - p^n + n p^(n-1) / p_e - n p^n - (2 pi_c - g_m) / (pi_c (n + theta + 1))`.
    /// Positive where the creator gains by raising `p_a`.
    pub fn residual(&self, p_a: f64) -> f64 {
        let n = self.n as i32;
        let nf = self.n as f64;
        let pn = p_a.powi(n);
        let lhs = (2.0 * self.pi_c - self.g_m) / (self.pi_c * (nf + self.theta + 1.0));
        1.0 - pn + nf * p_a.powi(n - 1) / self.p_e - nf * pn - lhs
    }
}

const EPS: f64 = 1e-9;
const TOLERANCE: f64 = 1e-10;

/// Root of the stationarity condition in `(0, 1)` by bisection.
pub fn optimal_pa(s: &StationaryInputs) -> Result<f64, GameError> {
    if s.n == 0 || !(s.p_e > 0.0 && s.p_e <= 1.0) {
        return Err(GameError::InvalidInput("need n >= 1 and p_e in (0, 1]"));
    }
    let (mut lo, mut hi) = (EPS, 1.0 - EPS);
    let (f_lo, f_hi) = (s.residual(lo), s.residual(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(GameError::NoRootInUnitInterval);
    }
    let rising = f_lo < 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let f = s.residual(mid);
        if f.abs() < TOLERANCE || (hi - lo).abs() < f64::EPSILON {
            return Ok(mid);
        }
        if (f < 0.0) == rising {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Optimal `p_a` at the worst case for the platform (`g_m = 0`, `p_e = 1`).
pub fn min_optimal_pa(n: u32, theta: f64) -> Result<f64, GameError> {
    optimal_pa(&StationaryInputs::worst_case(n, theta))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub n: u32,
    pub p_a: f64,
    pub derivative: f64,
}

/// `d U_JC / d p_a` over a grid of `p_a` for each `n`, with deposits and
/// mediation fees rescaled to each `n`.
pub fn derivative_curve(base: &GameParams, ns: &[u32], points: usize) -> Vec<CurvePoint> {
    let mut out = Vec::with_capacity(ns.len() * points);
    for &n in ns {
        let nf = n as f64;
        for i in 1..=points {
            let p_a = i as f64 / (points + 1) as f64;
            let p = GameParams {
                n,
                p_a,
                d: base.pi_c_hat * (base.theta + nf),
                pi_m: base.pi_c_hat * nf,
                ..*base
            };
            out.push(CurvePoint {
                n,
                p_a,
                derivative: jc_utility_derivative_pa(&p),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::params::{fixtures, GameInputs};
    use crate::game::utility::{rp_utilities, UtilityTable};
    use proptest::prelude::*;

    #[test]
    fn calibration_verification_rate() {
        let p = GameParams {
            pi_c: 1.0,
            c_e: 1.0,
            c_d: 0.0,
            p_a: 0.99,
            n: 2,
            theta: 50.0,
            ..fixtures::valid()
        };
        let pv = equilibrium_pv(&p).unwrap();
        assert!((pv.value - 1.0 / (0.99f64.powi(3) * 53.0)).abs() < 1e-15);
        assert!((pv.value - 0.0194).abs() < 1e-3);
        assert!(pv.in_unit_interval);
    }

    #[test]
    fn pv_examples() {
        let p = GameParams {
            c_d: 1.0,
            c_e: 1.0,
            ..fixtures::valid()
        };
        assert_eq!(equilibrium_pv(&p).unwrap().value, 0.0);
        let p = GameParams {
            c_e: 1.0,
            c_d: 0.0,
            pi_c: 2.0,
            p_a: 1.0,
            n: 1,
            theta: 0.0,
            ..fixtures::valid()
        };
        assert_eq!(equilibrium_pv(&p).unwrap().value, 0.25);
        let p = GameParams {
            p_a: 0.0,
            ..fixtures::valid()
        };
        assert_eq!(equilibrium_pv(&p), Err(GameError::ZeroProbability));
    }

    #[test]
    fn pv_above_one_is_flagged() {
        let p = GameParams {
            p_a: 0.1,
            ..fixtures::valid()
        };
        let pv = equilibrium_pv(&p).unwrap();
        assert!(pv.value > 1.0);
        assert!(!pv.in_unit_interval);
    }

    #[test]
    fn free_verification_on_deterministic_jobs_gives_pe_one() {
        let p = GameParams {
            c_v: 0.0,
            p_a: 1.0,
            ..fixtures::valid()
        };
        assert_eq!(equilibrium_pe(&p).unwrap().value, 1.0);
    }

    #[test]
    fn calibrated_pe_satisfies_indifference() {
        let p = GameParams::table_convention(GameInputs {
            theta: 50.0,
            n: 2,
            pi_c: 2.0,
            pi_a: 0.2,
            g_j: 0.1,
            g_r: 0.1,
            g_m: 0.1,
            b: 4.0,
            c_v: 0.5,
            c_e: 1.0,
            c_d: 0.2,
            p_a: 0.99,
            p_e: 0.5,
            p_v: 0.5,
        });
        let pe = equilibrium_pe(&p).unwrap();
        assert!(pe.in_unit_interval);
        let u = jc_utilities(&p);
        let verify = pe.value * u.ev + (1.0 - pe.value) * u.dv;
        let pass = pe.value * u.ep + (1.0 - pe.value) * u.dp;
        assert!((verify - pass).abs() < 1e-9);
    }

    #[test]
    fn negative_bracket_is_flagged() {
        let p = GameParams {
            d: 500.0,
            p_a: 0.5,
            c_v: 0.5,
            ..fixtures::valid()
        };
        assert!(verify_gain(&p) < 0.0);
        assert!(!equilibrium_pe(&p).unwrap().in_unit_interval);
    }

    #[test]
    fn zero_bracket_is_a_zero_denominator() {
        let mut p = fixtures::valid();
        // Solve pi_c - g_m - (1 - q) d + q pi_d = 0 for d.
        let q = p.q();
        p.d = (p.pi_c - p.g_m + q * p.pi_d) / (1.0 - q);
        assert_eq!(equilibrium_pe(&p), Err(GameError::ZeroDenominator));
    }

    #[test]
    fn no_verification_leaves_only_the_pass_column() {
        let p = GameParams {
            p_v: 0.0,
            ..fixtures::valid()
        };
        let u = jc_utilities(&p);
        let expect = p.p_e * u.ep + (1.0 - p.p_e) * u.dp;
        assert!((jc_total_utility(&p) - expect).abs() < 1e-12);
    }

    #[test]
    fn worst_case_endpoints() {
        assert!((min_optimal_pa(1, 0.0).unwrap() - 0.5).abs() < 1e-6);
        assert!((min_optimal_pa(4, 0.0).unwrap() - 0.943).abs() < 5e-4);
    }

    #[test]
    fn calibration_root_is_the_quadratic_root() {
        // n = 2: 3p^2 - 2p - (1 - 2/53) = 0.
        let c = 1.0 - 2.0 / 53.0;
        let exact = (2.0 + (4.0f64 + 12.0 * c).sqrt()) / 6.0;
        let root = min_optimal_pa(2, 50.0).unwrap();
        assert!((root - exact).abs() < 1e-9);
        assert!((root - 0.9905).abs() < 1e-3);
    }

    #[test]
    fn intermediate_worst_case_roots() {
        // n = 2, theta = 0: 9p^2 - 6p - 1 = 0.
        let exact = (6.0 + (36.0f64 + 36.0).sqrt()) / 18.0;
        assert!((min_optimal_pa(2, 0.0).unwrap() - exact).abs() < 1e-9);
        let r3 = min_optimal_pa(3, 0.0).unwrap();
        assert!((r3 - 0.9033).abs() < 1e-3);
    }

    #[test]
    fn root_is_a_maximum() {
        for n in 1..=6 {
            let s = StationaryInputs::worst_case(n, 10.0);
            let r = optimal_pa(&s).unwrap();
            assert!(s.residual(r).abs() < 1e-10);
            assert!(s.residual(r - 1e-3) > 0.0);
            assert!(s.residual(r + 1e-3) < 0.0);
        }
    }

    #[test]
    fn missing_root_is_an_error() {
        let s = StationaryInputs {
            n: 2,
            theta: 0.0,
            pi_c: 1.0,
            g_m: 0.0,
            p_e: 1.0 / 3.0,
        };
        assert_eq!(optimal_pa(&s), Err(GameError::NoRootInUnitInterval));
        let bad = StationaryInputs { p_e: 0.0, ..s };
        assert!(matches!(optimal_pa(&bad), Err(GameError::InvalidInput(_))));
    }

    #[test]
    fn min_optimal_pa_is_monotone() {
        for theta in [0.0, 10.0, 50.0] {
            let roots: Vec<f64> = (1..=6).map(|n| min_optimal_pa(n, theta).unwrap()).collect();
            assert!(roots.windows(2).all(|w| w[0] <= w[1]), "{roots:?}");
        }
        for n in 1..=6 {
            let roots: Vec<f64> = [0.0, 10.0, 50.0]
                .iter()
                .map(|&t| min_optimal_pa(n, t).unwrap())
                .collect();
            assert!(roots.windows(2).all(|w| w[0] <= w[1]), "{roots:?}");
        }
    }

    #[test]
    fn derivative_changes_sign_around_the_root() {
        let base = GameParams::table_convention(GameInputs {
            theta: 0.0,
            n: 1,
            pi_c: 1.0,
            pi_a: 0.0,
            g_j: 0.0,
            g_r: 0.0,
            g_m: 0.0,
            b: 2.0,
            c_v: 0.0,
            c_e: 1.0,
            c_d: 0.0,
            p_a: 0.5,
            p_e: 1.0,
            p_v: 1.0,
        });
        for n in 1..=4 {
            let root = min_optimal_pa(n, 0.0).unwrap();
            let at = |p_a: f64| {
                let mut p = base;
                p.n = n;
                p.p_a = p_a;
                p.d = p.pi_c * n as f64;
                p.pi_m = p.pi_c * n as f64;
                jc_utility_derivative_pa(&p)
            };
            assert!(at(root - 1e-3) > 0.0 && at(root + 1e-3) < 0.0, "n = {n}");
        }
        let curve = derivative_curve(&base, &[1, 2], 99);
        assert_eq!(curve.len(), 198);
        assert!((curve[49].p_a - 0.5).abs() < 1e-12);
        assert!(curve[49].derivative.abs() < 1e-12);
    }

    fn draw() -> impl Strategy<Value = GameParams> {
        (
            0.0f64..60.0,
            1u32..6,
            0.5f64..10.0,
            0.0f64..1.0,
            0.05f64..0.999,
            0.05f64..0.95,
            0.05f64..0.95,
            0.0f64..1.0,
        )
            .prop_map(|(theta, n, pi_c, g_m, p_a, p_e, p_v, x)| {
                GameParams::table_convention(GameInputs {
                    theta,
                    n,
                    pi_c,
                    pi_a: 0.1,
                    g_j: 0.1,
                    g_r: 0.1,
                    g_m,
                    b: pi_c + 1.0,
                    c_v: 0.3 * pi_c * x,
                    c_e: pi_c * (0.5 + 0.4 * x),
                    c_d: 0.1 * pi_c,
                    p_a,
                    p_e,
                    p_v,
                })
            })
    }

    fn rp_gap_at(p: &GameParams, p_v: f64) -> f64 {
        let u: UtilityTable = rp_utilities(p);
        (p_v * u.ev + (1.0 - p_v) * u.ep) - (p_v * u.dv + (1.0 - p_v) * u.dp)
    }

    proptest! {
        #[test]
        fn pv_makes_the_provider_indifferent(p in draw()) {
            let pv = equilibrium_pv(&p).unwrap().value;
            let scale = p.d + p.pi_c;
            prop_assert!(rp_gap_at(&p, pv).abs() <= 1e-9 * scale.max(1.0));
        }

        #[test]
        fn pe_makes_the_creator_indifferent(p in draw()) {
            let pe = equilibrium_pe(&p).unwrap().value;
            let u = jc_utilities(&p);
            let gap = pe * (u.ev - u.ep) + (1.0 - pe) * (u.dv - u.dp);
            let scale = p.d + p.b;
            prop_assert!(gap.abs() <= 1e-9 * scale.max(1.0));
        }

        #[test]
        fn derivative_matches_central_difference(p in draw()) {
            let h = 1e-6;
            let at = |p_a: f64| jc_total_utility(&GameParams { p_a, ..p });
            let numeric = (at(p.p_a + h) - at(p.p_a - h)) / (2.0 * h);
            let analytic = jc_utility_derivative_pa(&p);
            let scale = analytic.abs().max(p.d * 1e-3).max(1.0);
            prop_assert!((numeric - analytic).abs() <= 1e-6 * scale,
                "numeric {numeric} analytic {analytic}");
        }
    }
}
