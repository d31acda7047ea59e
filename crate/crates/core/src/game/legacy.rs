//! The earlier two-strategy model where both sides either comply or disobey.

use serde::{Deserialize, Serialize};

use super::GameError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LegacyParams {
    /// Verification probability.
    pub p: f64,
    /// Probability the provider's honest execution succeeds.
    #[serde(rename = "Q")]
    pub q: f64,
    /// Creator's detection probability.
    #[serde(rename = "P_j")]
    pub p_j: f64,
    /// Mediator correctness probability.
    #[serde(rename = "P_m")]
    pub p_m: f64,
    pub r: f64,
    pub f: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C_d")]
    pub c_d: f64,
    #[serde(rename = "C_j")]
    pub c_j: f64,
    #[serde(rename = "M")]
    pub m: f64,
}

impl LegacyParams {
    /// The published parameter list with mediation cost `M = 0`, the only
    /// value that reproduces the published table.
    pub fn published() -> LegacyParams {
        LegacyParams {
            p: 0.1,
            q: 0.999,
            p_j: 0.999,
            p_m: 0.75,
            r: 1.5,
            f: 150.0,
            b: 2.0,
            c: 1.0,
            c_d: 0.1,
            c_j: 1.0,
            m: 0.0,
        }
    }

    pub fn is_valid(&self) -> bool {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        unit(self.p)
            && unit(self.q)
            && unit(self.p_j)
            && unit(self.p_m)
            && self.r >= 0.0
            && self.f >= 0.0
            && self.c >= 0.0
            && self.c_j >= 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LegacyAction {
    Comply,
    Disobey,
}

/// `(jc, rp)` utilities indexed `[creator action][provider action]`, comply
/// first.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegacyTable {
    pub jc: [[f64; 2]; 2],
    pub rp: [[f64; 2]; 2],
}

impl LegacyTable {
    pub fn get(&self, jc: LegacyAction, rp: LegacyAction) -> (f64, f64) {
        let (i, j) = (jc as usize, rp as usize);
        (self.jc[i][j], self.rp[i][j])
    }
}

pub fn legacy_utilities(lp: &LegacyParams) -> LegacyTable {
    let LegacyParams {
        p,
        q,
        p_j,
        p_m,
        r,
        f,
        b,
        c,
        c_d,
        c_j,
        m,
    } = *lp;
    let caught = p * p_j;
    let jc_cc = q * (b - r) + (1.0 - q) * f - p * c_j;
    let rp_cc = q * r - (1.0 - q) * (f + m) - c;
    let jc_cd = -(1.0 - caught) * r + caught * f - p * c_j;
    let rp_cd = (1.0 - caught) * r - caught * (f + m) - c_d;
    let jc_dc = q * (b + (1.0 - p_m) * f - p_m * (f + m + r)) + (1.0 - q) * f;
    let rp_dc = q * (p_m * (f + r) - (1.0 - p_m) * (f + m)) - (1.0 - q) * (f + m) - c;
    let jc_dd = (1.0 - p_m) * f - p_m * (f + m + r);
    let rp_dd = p_m * (f + r) - (1.0 - p_m) * (f + m) - c_d;
    LegacyTable {
        jc: [[jc_cc, jc_cd], [jc_dc, jc_dd]],
        rp: [[rp_cc, rp_cd], [rp_dc, rp_dd]],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegacyEquilibrium {
    pub is_equilibrium: bool,
    pub p_lower: f64,
    pub p_upper: f64,
}

/// Bounds on `p` within which mutual compliance is a Nash equilibrium.
pub fn legacy_honest_equilibrium(lp: &LegacyParams) -> Result<LegacyEquilibrium, GameError> {
    if lp.c_j <= 0.0 || lp.p_j <= 0.0 {
        return Err(GameError::InvalidInput("need C_j > 0 and P_j > 0"));
    }
    let stake = lp.r + lp.f + lp.m;
    if stake == 0.0 {
        return Err(GameError::ZeroDenominator);
    }
    let p_upper = lp.q * (lp.p_m * (2.0 * lp.f + lp.m + lp.r) - lp.r - lp.f) / lp.c_j;
    let p_lower = (1.0 - lp.q) / lp.p_j + (lp.c - lp.c_d) / (lp.p_j * stake);
    Ok(LegacyEquilibrium {
        is_equilibrium: p_lower <= lp.p && lp.p <= p_upper,
        p_lower,
        p_upper,
    })
}

/// Whether neither side gains by deviating alone from mutual compliance.
pub fn honest_is_best_response(t: &LegacyTable) -> bool {
    t.jc[0][0] >= t.jc[1][0] && t.rp[0][0] >= t.rp[0][1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn published_table() {
        let t = legacy_utilities(&LegacyParams::published());
        let published = [
            [(0.550, 0.349), (13.535, -13.735)],
            [(-73.901, 74.899), (-76.125, 76.025)],
        ];
        for (i, row) in published.iter().enumerate() {
            for (j, &(jc, rp)) in row.iter().enumerate() {
                assert!((t.jc[i][j] - jc).abs() <= 0.002);
                assert!((t.rp[i][j] - rp).abs() <= 0.002);
            }
        }
        assert!((t.jc[0][0] - 0.5495).abs() < 1e-12);
        assert!((t.rp[0][0] - 0.3485).abs() < 1e-12);
    }

    #[test]
    fn nonzero_mediation_cost_misses_the_table() {
        let lp = LegacyParams {
            m: 3.0,
            ..LegacyParams::published()
        };
        let t = legacy_utilities(&lp);
        assert!((t.rp[0][0] - 0.349).abs() > 0.002);
    }

    #[test]
    fn failure_and_verification_free_limit() {
        let lp = LegacyParams {
            q: 1.0,
            p: 0.0,
            ..LegacyParams::published()
        };
        let t = legacy_utilities(&lp);
        assert!((t.jc[0][0] - (lp.b - lp.r)).abs() < 1e-12);
        assert!((t.rp[0][0] - (lp.r - lp.c)).abs() < 1e-12);
    }

    #[test]
    fn bounds_with_mediation_cost() {
        let lp = LegacyParams {
            m: 3.0,
            ..LegacyParams::published()
        };
        let eq = legacy_honest_equilibrium(&lp).unwrap();
        assert!((eq.p_lower - 0.00683).abs() < 1e-5);
        assert!((eq.p_upper - 76.80).abs() < 1e-2);
        assert!(eq.is_equilibrium);
    }

    #[test]
    fn verification_above_the_upper_bound_breaks_equilibrium() {
        let base = LegacyParams {
            m: 3.0,
            ..LegacyParams::published()
        };
        let upper = legacy_honest_equilibrium(&base).unwrap().p_upper;
        // Push p past the bound by making verification costly.
        let lp = LegacyParams {
            c_j: base.c_j * upper * 4.0,
            p: 0.5,
            ..base
        };
        let eq = legacy_honest_equilibrium(&lp).unwrap();
        assert!(!eq.is_equilibrium);
        let t = legacy_utilities(&lp);
        assert!(t.jc[1][0] > t.jc[0][0]);
    }

    #[test]
    fn certain_success_with_equal_costs_zeroes_the_lower_bound() {
        let lp = LegacyParams {
            q: 1.0,
            c_d: 1.0,
            c: 1.0,
            ..LegacyParams::published()
        };
        assert_eq!(legacy_honest_equilibrium(&lp).unwrap().p_lower, 0.0);
    }

    #[test]
    fn guards() {
        let lp = LegacyParams {
            c_j: 0.0,
            ..LegacyParams::published()
        };
        assert!(legacy_honest_equilibrium(&lp).is_err());
        let lp = LegacyParams {
            r: 0.0,
            f: 0.0,
            m: 0.0,
            ..LegacyParams::published()
        };
        assert_eq!(
            legacy_honest_equilibrium(&lp),
            Err(GameError::ZeroDenominator)
        );
    }

    proptest! {
        #[test]
        fn bounds_agree_with_best_responses(
            p in 0.0f64..1.0, q in 0.5f64..1.0, p_j in 0.1f64..1.0, p_m in 0.0f64..1.0,
            r in 0.0f64..5.0, f in 0.0f64..200.0, c in 0.0f64..3.0, c_d in 0.0f64..1.0,
            c_j in 0.01f64..3.0, m in 0.0f64..5.0,
        ) {
            let lp = LegacyParams { p, q, p_j, p_m, r, f, b: 2.0, c, c_d, c_j, m };
            prop_assume!(r + f + m > 0.0);
            let eq = legacy_honest_equilibrium(&lp).unwrap();
            let t = legacy_utilities(&lp);
            // Skip draws sitting on a boundary within rounding.
            let margin = (lp.p - eq.p_lower).abs().min((lp.p - eq.p_upper).abs());
            prop_assume!(margin > 1e-9);
            prop_assert_eq!(eq.is_equilibrium, honest_is_best_response(&t));
        }
    }
}
