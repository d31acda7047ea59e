use serde::{Deserialize, Serialize};

use super::params::GameParams;
use super::tree::{JcAction, RpAction};
use super::GameError;

/// Expected utilities over {execute, deceive} x {verify, pass}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UtilityTable {
    pub ev: f64,
    pub ep: f64,
    pub dv: f64,
    pub dp: f64,
}

impl UtilityTable {
    pub fn get(&self, rp: RpAction, jc: JcAction) -> f64 {
        match (rp, jc) {
            (RpAction::Execute, JcAction::Verify) => self.ev,
            (RpAction::Execute, JcAction::Pass) => self.ep,
            (RpAction::Deceive, JcAction::Verify) => self.dv,
            (RpAction::Deceive, JcAction::Pass) => self.dp,
        }
    }

    pub fn entries(&self) -> [f64; 4] {
        [self.ev, self.ep, self.dv, self.dp]
    }
}

/// Provider's closed-form expected utilities.
pub fn rp_utilities(p: &GameParams) -> UtilityTable {
    let q = p.q();
    let base = -p.g_r - p.pi_a;
    UtilityTable {
        ev: base - p.c_e + p.p_a * p.pi_c - (1.0 - p.p_a) * q * p.d
            + p.pi_d * (1.0 - p.p_a) * (1.0 - q),
        ep: base + p.pi_c - p.c_e,
        dv: base - p.c_d - q * p.d + p.pi_d * (1.0 - q),
        dp: base + p.pi_c - p.c_d,
    }
}

/// Creator's closed-form expected utilities.
pub fn jc_utilities(p: &GameParams) -> UtilityTable {
    let q = p.q();
    let miss = 1.0 - p.p_a;
    UtilityTable {
        ev: p.b - p.g_j - p.c_v - p.pi_a - p.p_a * p.pi_c - miss * p.g_m - miss * (1.0 - q) * p.d
            + miss * q * p.pi_d,
        ep: p.b - p.g_j - p.pi_a - p.pi_c,
        dv: -p.c_v - p.g_j - p.g_m - p.pi_a - (1.0 - q) * p.d + q * p.pi_d,
        dp: -p.g_j - p.pi_a - p.pi_c,
    }
}

/// `(provider, creator)` tables.
pub fn expected_utilities(p: &GameParams) -> (UtilityTable, UtilityTable) {
    (rp_utilities(p), jc_utilities(p))
}

/// Utilities with every term common to a player's rows dropped, valid when
/// `pi_d = pi_c` and `d = pi_c * (theta + n)`. Only differences within a
/// column (provider) or row (creator) are meaningful.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dominance {
    pub rp: UtilityTable,
    pub jc: UtilityTable,
}

pub fn simplified_dominance(p: &GameParams) -> Result<Dominance, GameError> {
    if !p.is_table_convention() {
        return Err(GameError::NotTableConvention);
    }
    let big_n = p.big_n();
    let rp = UtilityTable {
        ev: -p.c_e + p.p_a.powi(p.n as i32 + 1) * p.pi_c * big_n,
        ep: -p.c_e,
        dv: -p.c_d,
        dp: -p.c_d,
    };
    let k = verify_gain(p);
    let jc = UtilityTable {
        ev: (1.0 - p.p_a) * k,
        ep: p.c_v,
        dv: k,
        dp: p.c_v,
    };
    Ok(Dominance { rp, jc })
}

/// `pi_c - g_m - (1 - q) d + q pi_d`: what verification returns against a
/// forger before its cost.
pub fn verify_gain(p: &GameParams) -> f64 {
    let q = p.q();
    p.pi_c - p.g_m - (1.0 - q) * p.d + q * p.pi_d
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RpExecuteCondition {
    /// `p_a^(n+1) pi_c (n + theta + 1) > c_e - c_d`.
    pub exact: bool,
    /// `p_a^(n+1) > 1/2`.
    pub sufficient: bool,
}

pub fn rp_execute_condition(p: &GameParams) -> RpExecuteCondition {
    let reach = p.p_a.powi(p.n as i32 + 1);
    RpExecuteCondition {
        exact: reach * p.pi_c * p.big_n() > p.c_e - p.c_d,
        sufficient: reach > 0.5,
    }
}

/// Creator preference classes by which action wins against each provider
/// action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JcType {
    /// Verifies against both actions.
    Type1,
    /// Verifies only against an executing provider.
    Type2,
    /// Verifies only against a deceiving provider.
    Type3,
    /// Never verifies; the provider then always deceives, so this creator
    /// should not participate.
    Type4,
}

impl JcType {
    pub fn participates(self) -> bool {
        self != JcType::Type4
    }
}

pub fn classify_jc_type(p: &GameParams) -> JcType {
    let u = jc_utilities(p);
    match (u.ev > u.ep, u.dv > u.dp, u.dv < u.dp) {
        (true, true, _) => JcType::Type1,
        (true, _, true) => JcType::Type2,
        (false, true, _) if u.ev < u.ep => JcType::Type3,
        _ => JcType::Type4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::params::{fixtures, GameInputs};
    use crate::game::tree::{tree_expectation, Player};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn execute_pass_ignores_p_a() {
        for p_a in [0.0, 0.3, 0.99, 1.0] {
            let p = GameParams {
                p_a,
                ..fixtures::valid()
            };
            let u = rp_utilities(&p);
            assert!(close(u.ep, p.pi_c - p.c_e - p.g_r - p.pi_a, 1e-12));
        }
    }

    #[test]
    fn deterministic_job_removes_mediation_terms() {
        let p = GameParams {
            p_a: 1.0,
            ..fixtures::valid()
        };
        let u = jc_utilities(&p);
        assert!(close(u.ev, p.b - p.g_j - p.c_v - p.pi_c - p.pi_a, 1e-12));
    }

    #[test]
    fn fixture_table_matches_tree() {
        let p = fixtures::valid();
        let (rp, jc) = expected_utilities(&p);
        for r in [RpAction::Execute, RpAction::Deceive] {
            for j in [JcAction::Verify, JcAction::Pass] {
                assert!(close(
                    rp.get(r, j),
                    tree_expectation(r, j, Player::Rp, &p),
                    1e-12
                ));
                assert!(close(
                    jc.get(r, j),
                    tree_expectation(r, j, Player::Jc, &p),
                    1e-12
                ));
            }
        }
    }

    #[test]
    fn dominance_rejects_other_conventions() {
        let p = GameParams {
            pi_d: 1.0,
            ..fixtures::valid()
        };
        assert_eq!(simplified_dominance(&p), Err(GameError::NotTableConvention));
        let p = GameParams {
            d: 100.0,
            ..fixtures::valid()
        };
        assert_eq!(simplified_dominance(&p), Err(GameError::NotTableConvention));
    }

    #[test]
    fn dominance_provider_gap() {
        let p = fixtures::valid();
        let dom = simplified_dominance(&p).unwrap();
        let expect = p.p_a.powi(3) * p.pi_c * p.big_n() - (p.c_e - p.c_d);
        assert!(close(dom.rp.ev - dom.rp.dv, expect, 1e-12));
    }

    #[test]
    fn dominance_substitution_example() {
        // p_a^(n+1) = 0.6 and pi_c (n + theta + 1) = 8 with n = 1, theta = 2.
        let p = GameParams {
            n: 1,
            theta: 2.0,
            pi_c: 2.0,
            d: 6.0,
            pi_d: 2.0,
            p_a: 0.6f64.sqrt(),
            c_e: 1.2,
            c_d: 0.2,
            ..fixtures::valid()
        };
        let dom = simplified_dominance(&p).unwrap();
        assert!(close(dom.rp.ev - dom.rp.dv, 0.6 * 8.0 - 1.0, 1e-12));
        assert!(dom.rp.ev > dom.rp.dv);
    }

    #[test]
    fn execute_condition_examples() {
        let p = GameParams {
            p_a: 0.99,
            n: 2,
            ..fixtures::valid()
        };
        assert!(rp_execute_condition(&p).sufficient);
        let p = GameParams {
            p_a: 0.7,
            n: 2,
            ..fixtures::valid()
        };
        let c = rp_execute_condition(&p);
        assert!(!c.sufficient);
        assert!(c.exact);
        let p = GameParams {
            p_a: 0.5,
            n: 0,
            ..fixtures::valid()
        };
        assert!(!rp_execute_condition(&p).sufficient);
    }

    #[test]
    fn free_verification_is_type1() {
        let p = GameParams::table_convention(GameInputs {
            theta: 50.0,
            n: 2,
            pi_c: 2.0,
            pi_a: 0.2,
            g_j: 0.1,
            g_r: 0.1,
            g_m: 0.1,
            b: 4.0,
            c_v: 0.0,
            c_e: 1.0,
            c_d: 0.2,
            p_a: 0.99,
            p_e: 0.5,
            p_v: 0.5,
        });
        assert!(verify_gain(&p) > 0.0);
        assert_eq!(classify_jc_type(&p), JcType::Type1);
    }

    #[test]
    fn expensive_verification_is_type4() {
        let mut p = fixtures::valid();
        p.c_v = verify_gain(&p).abs() + 10.0;
        assert_eq!(classify_jc_type(&p), JcType::Type4);
        assert!(!JcType::Type4.participates());
    }

    #[test]
    fn type3_between_the_column_gaps() {
        let mut p = fixtures::valid();
        let k = verify_gain(&p);
        assert!(k > 0.0);
        p.c_v = (1.0 - p.p_a) * k + 0.5 * p.p_a * k;
        assert_eq!(classify_jc_type(&p), JcType::Type3);
    }

    #[test]
    fn type2_needs_negative_verification_cost() {
        // Make verification against a forger lose money (gain L < 0), then
        // pay the creator to verify.
        let mut p = fixtures::valid();
        p.d = 200.0;
        p.p_a = 0.5;
        let l = verify_gain(&p);
        assert!(l < 0.0);
        p.c_v = 0.5 * ((1.0 - p.p_a) * l + l);
        assert!(p.c_v < 0.0);
        let u = jc_utilities(&p);
        assert!(u.ev > u.ep && u.dv < u.dp);
        assert_eq!(classify_jc_type(&p), JcType::Type2);
    }

    fn draw() -> impl Strategy<Value = GameParams> {
        (
            0.0f64..100.0,
            1u32..6,
            0.5f64..10.0,
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
            0.0f64..1.0,
        )
            .prop_map(|(theta, n, pi_c, g_m, c_v, p_a, x, y, z)| {
                GameParams::table_convention(GameInputs {
                    theta,
                    n,
                    pi_c,
                    pi_a: 0.1,
                    g_j: 0.1,
                    g_r: 0.1,
                    g_m,
                    b: pi_c + 1.0,
                    c_v: c_v * pi_c,
                    c_e: pi_c * (0.5 + 0.4 * x),
                    c_d: pi_c * 0.4 * x * y + 1e-3,
                    p_a,
                    p_e: y,
                    p_v: z,
                })
            })
    }

    proptest! {
        #[test]
        fn dominance_signs_agree_with_full_tables(p in draw()) {
            let (rp, jc) = expected_utilities(&p);
            let dom = simplified_dominance(&p).unwrap();
            let gap = |a: f64, b: f64| a - b;
            let tol = 1e-9 * (p.d + p.pi_c + 1.0);
            prop_assert!((gap(rp.ev, rp.dv) - gap(dom.rp.ev, dom.rp.dv)).abs() < tol);
            prop_assert!((gap(rp.ep, rp.dp) - gap(dom.rp.ep, dom.rp.dp)).abs() < tol);
            prop_assert!((gap(jc.ev, jc.ep) - gap(dom.jc.ev, dom.jc.ep)).abs() < tol);
            prop_assert!((gap(jc.dv, jc.dp) - gap(dom.jc.dv, dom.jc.dp)).abs() < tol);
        }

        #[test]
        fn type2_never_occurs_with_nonnegative_verification_cost(p in draw()) {
            prop_assert_ne!(classify_jc_type(&p), JcType::Type2);
        }
    }
}
