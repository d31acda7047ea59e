use std::fmt;

use serde::{Deserialize, Serialize};

/// Every symbol of the game, as reals in one currency unit.
///
/// `d` is the part of a deposit that a faulted party forfeits after fees, so
/// the payoff tables hold with `d = pi_c_hat * (theta + n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameParams {
    pub theta: f64,
    pub n: u32,
    pub d: f64,
    pub pi_c: f64,
    pub pi_c_hat: f64,
    pub pi_r: f64,
    pub pi_d: f64,
    pub pi_m: f64,
    pub pi_a: f64,
    pub g_j: f64,
    pub g_r: f64,
    pub g_m: f64,
    pub b: f64,
    pub c_v: f64,
    pub c_e: f64,
    pub c_d: f64,
    pub p_a: f64,
    pub p_e: f64,
    pub p_v: f64,
}

/// A system constraint that a parameter set breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constraint {
    BenefitCoversCosts,
    ThetaNonNegative,
    NPositive,
    ExecuteCostsMore,
    DeceiveCostPositive,
    EstimateCoversPrice,
    PriceCoversAsk,
    AskCoversExecution,
    DepositCoversMinimum,
    ProbabilityRange,
}

impl Constraint {
    pub fn as_str(self) -> &'static str {
        match self {
            Constraint::BenefitCoversCosts => "b > pi_c + pi_a + g_j",
            Constraint::ThetaNonNegative => "theta >= 0",
            Constraint::NPositive => "n > 0",
            Constraint::ExecuteCostsMore => "c_e > c_d",
            Constraint::DeceiveCostPositive => "c_d > 0",
            Constraint::EstimateCoversPrice => "pi_c_hat >= pi_c",
            Constraint::PriceCoversAsk => "pi_c >= pi_r",
            Constraint::AskCoversExecution => "pi_r > c_e",
            Constraint::DepositCoversMinimum => "d >= pi_c_hat * (theta + n)",
            Constraint::ProbabilityRange => "p_a, p_e, p_v in [0, 1]",
        }
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl GameParams {
    /// Parameters under the analysis convention: `pi_c_hat = pi_r = pi_d =
    /// pi_c`, `pi_m = pi_c * n` and `d = pi_c * (theta + n)`.
    pub fn table_convention(base: GameInputs) -> GameParams {
        let GameInputs {
            theta,
            n,
            pi_c,
            pi_a,
            g_j,
            g_r,
            g_m,
            b,
            c_v,
            c_e,
            c_d,
            p_a,
            p_e,
            p_v,
        } = base;
        GameParams {
            theta,
            n,
            d: pi_c * (theta + n as f64),
            pi_c,
            pi_c_hat: pi_c,
            pi_r: pi_c,
            pi_d: pi_c,
            pi_m: pi_c * n as f64,
            pi_a,
            g_j,
            g_r,
            g_m,
            b,
            c_v,
            c_e,
            c_d,
            p_a,
            p_e,
            p_v,
        }
    }

    /// `n + theta + 1`.
    pub fn big_n(&self) -> f64 {
        self.n as f64 + self.theta + 1.0
    }

    /// Probability that all `n` mediator replicas return the normal result.
    pub fn q(&self) -> f64 {
        self.p_a.powi(self.n as i32)
    }

    /// Whether `pi_d = pi_c` and `d = pi_c * (theta + n)`, up to rounding.
    pub fn is_table_convention(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        close(self.pi_d, self.pi_c) && close(self.d, self.pi_c * (self.theta + self.n as f64))
    }

    /// Constraints this parameter set breaks; empty when valid.
    pub fn violations(&self) -> Vec<Constraint> {
        let mut v = Vec::new();
        let mut check = |ok: bool, c: Constraint| {
            if !ok {
                v.push(c);
            }
        };
        check(
            self.b > self.pi_c + self.pi_a + self.g_j,
            Constraint::BenefitCoversCosts,
        );
        check(self.theta >= 0.0, Constraint::ThetaNonNegative);
        check(self.n > 0, Constraint::NPositive);
        check(self.c_e > self.c_d, Constraint::ExecuteCostsMore);
        check(self.c_d > 0.0, Constraint::DeceiveCostPositive);
        check(self.pi_c_hat >= self.pi_c, Constraint::EstimateCoversPrice);
        check(self.pi_c >= self.pi_r, Constraint::PriceCoversAsk);
        check(self.pi_r > self.c_e, Constraint::AskCoversExecution);
        check(
            self.d >= self.pi_c_hat * (self.theta + self.n as f64),
            Constraint::DepositCoversMinimum,
        );
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        check(
            unit(self.p_a) && unit(self.p_e) && unit(self.p_v),
            Constraint::ProbabilityRange,
        );
        v
    }

    pub fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

/// The free symbols of [`GameParams::table_convention`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameInputs {
    pub theta: f64,
    pub n: u32,
    pub pi_c: f64,
    pub pi_a: f64,
    pub g_j: f64,
    pub g_r: f64,
    pub g_m: f64,
    pub b: f64,
    pub c_v: f64,
    pub c_e: f64,
    pub c_d: f64,
    pub p_a: f64,
    pub p_e: f64,
    pub p_v: f64,
}

/// File form of [`GameParams`]: derived symbols may be omitted and then
/// follow the table convention.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameParamsFile {
    pub theta: f64,
    pub n: u32,
    pub pi_c: f64,
    pub d: Option<f64>,
    pub pi_c_hat: Option<f64>,
    pub pi_r: Option<f64>,
    pub pi_d: Option<f64>,
    pub pi_m: Option<f64>,
    #[serde(default)]
    pub pi_a: f64,
    #[serde(default)]
    pub g_j: f64,
    #[serde(default)]
    pub g_r: f64,
    #[serde(default)]
    pub g_m: f64,
    #[serde(default)]
    pub b: f64,
    #[serde(default)]
    pub c_v: f64,
    pub c_e: f64,
    #[serde(default)]
    pub c_d: f64,
    pub p_a: f64,
    #[serde(default = "one")]
    pub p_e: f64,
    #[serde(default = "one")]
    pub p_v: f64,
}

fn one() -> f64 {
    1.0
}

impl GameParamsFile {
    pub fn resolve(&self) -> GameParams {
        let pi_c_hat = self.pi_c_hat.unwrap_or(self.pi_c);
        let n = self.n as f64;
        GameParams {
            theta: self.theta,
            n: self.n,
            d: self.d.unwrap_or(pi_c_hat * (self.theta + n)),
            pi_c: self.pi_c,
            pi_c_hat,
            pi_r: self.pi_r.unwrap_or(self.pi_c),
            pi_d: self.pi_d.unwrap_or(self.pi_c),
            pi_m: self.pi_m.unwrap_or(pi_c_hat * n),
            pi_a: self.pi_a,
            g_j: self.g_j,
            g_r: self.g_r,
            g_m: self.g_m,
            b: self.b,
            c_v: self.c_v,
            c_e: self.c_e,
            c_d: self.c_d,
            p_a: self.p_a,
            p_e: self.p_e,
            p_v: self.p_v,
        }
    }
}
