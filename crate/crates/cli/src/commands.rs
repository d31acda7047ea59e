use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use compute_market::game::{
    classify_jc_type, derivative_curve, equilibrium_pe, equilibrium_pv, expected_utilities,
    honest_is_best_response, legacy_honest_equilibrium, legacy_utilities, min_optimal_pa,
    optimal_pa, payoff_row, rp_execute_condition, simplified_dominance, GameError, GameParams,
    GameParamsFile, JcAction, LegacyParams, Outcome, Player, RpAction, StationaryInputs,
    UtilityTable,
};
use compute_market::sim::{self, run_scenario, GridAxis, ScenarioConfig, SimError};
use thiserror::Error;

use crate::format::sig6;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Game(#[from] GameError),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "Io",
            CliError::Parse { .. } => "ConfigInvalid",
            CliError::Sim(e) => e.kind(),
            CliError::Game(_) => "Game",
        }
    }

    /// Single-line form for standard error.
    pub fn line(&self) -> String {
        let message = self.to_string().replace(['\n', '\r'], " ");
        format!("error: kind={} message={}", self.kind(), message.trim())
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    toml::from_str(&read(path)?).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        message: e.message().to_string(),
    })
}

fn load_scenario(path: &Path) -> Result<ScenarioConfig, CliError> {
    ScenarioConfig::from_toml(&read(path)?).map_err(|e| match e {
        SimError::ConfigInvalid(message) => CliError::Parse {
            path: path.to_path_buf(),
            message,
        },
        other => other.into(),
    })
}

fn load_game(path: &Path) -> Result<GameParams, CliError> {
    Ok(parse_toml::<GameParamsFile>(path)?.resolve())
}

fn write_out(dir: &Option<PathBuf>, name: &str, contents: &str) -> Result<(), CliError> {
    let Some(dir) = dir else { return Ok(()) };
    let io = |source| CliError::Io {
        path: dir.clone(),
        source,
    };
    fs::create_dir_all(dir).map_err(io)?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|source| CliError::Io { path, source })
}

fn warn_violations(p: &GameParams) {
    for c in p.violations() {
        eprintln!("warning: constraint violated: {c}");
    }
}

pub fn simulate(config: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let scenario = load_scenario(config)?;
    let seed = seed.unwrap_or(scenario.seed);
    let run = run_scenario(&scenario, seed)?;
    let text = run.metrics.to_text();
    write_out(&out, "trace.csv", &run.trace_csv())?;
    write_out(&out, "metrics.txt", &text)?;
    print!("{text}");
    Ok(())
}

fn utility_rows(s: &mut String, who: &str, t: &UtilityTable) {
    for (rp, jc) in [
        (RpAction::Execute, JcAction::Verify),
        (RpAction::Execute, JcAction::Pass),
        (RpAction::Deceive, JcAction::Verify),
        (RpAction::Deceive, JcAction::Pass),
    ] {
        let _ = writeln!(s, "{who},{rp:?},{jc:?},{}", t.get(rp, jc));
    }
}

pub fn analyze(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let p = load_game(config)?;
    warn_violations(&p);

    let mut outcomes = String::from("outcome,player,contract_payoff,self_benefit,reward\n");
    println!("outcome  player    contract   self       reward");
    for o in Outcome::ALL {
        for (who, name) in [
            (Player::Rp, "rp"),
            (Player::Jc, "jc"),
            (Player::Mediator, "mediator"),
        ] {
            let r = payoff_row(o, who, &p);
            let _ = writeln!(
                outcomes,
                "{o},{name},{},{},{}",
                r.contract_payoff, r.self_benefit, r.reward
            );
            println!(
                "{o:<8} {name:<9} {:<10} {:<10} {}",
                sig6(r.contract_payoff),
                sig6(r.self_benefit),
                sig6(r.reward)
            );
        }
    }

    let (rp, jc) = expected_utilities(&p);
    let mut utilities = String::from("player,rp_action,jc_action,expected_utility\n");
    utility_rows(&mut utilities, "rp", &rp);
    utility_rows(&mut utilities, "jc", &jc);
    println!();
    println!("expected utilities   EV         EP         DV         DP");
    for (name, t) in [("rp", &rp), ("jc", &jc)] {
        let [ev, ep, dv, dp] = t.entries().map(sig6);
        println!("{name:<20} {ev:<10} {ep:<10} {dv:<10} {dp}");
    }

    println!();
    println!("rp_prefers_deceive_when_passed={}", rp.dp > rp.ep);
    let cond = rp_execute_condition(&p);
    println!(
        "rp_execute_when_verified={} (sufficient p_a^(n+1) > 1/2: {})",
        cond.exact, cond.sufficient
    );
    match simplified_dominance(&p) {
        Ok(d) => {
            let [ev, ep, dv, dp] = d.jc.entries().map(sig6);
            println!("simplified_jc EV={ev} EP={ep} DV={dv} DP={dp}");
        }
        Err(e) => println!("simplified_jc unavailable: {e}"),
    }
    let ty = classify_jc_type(&p);
    println!("jc_type={ty:?} participates={}", ty.participates());

    write_out(&out, "outcomes.csv", &outcomes)?;
    write_out(&out, "utilities.csv", &utilities)?;
    Ok(())
}

fn mixing_line(name: &str, r: Result<compute_market::game::Mixing, GameError>) -> String {
    match r {
        Ok(m) if m.in_unit_interval => format!("{name}={}", sig6(m.value)),
        Ok(m) => format!(
            "{name}={} (outside [0, 1]: no interior equilibrium)",
            sig6(m.value)
        ),
        Err(e) => format!("{name}=undefined ({e})"),
    }
}

pub fn equilibrium(config: &Path, out: Option<PathBuf>) -> Result<(), CliError> {
    let p = load_game(config)?;
    warn_violations(&p);
    let mut lines = vec![
        mixing_line("p_v", equilibrium_pv(&p)),
        mixing_line("p_e", equilibrium_pe(&p)),
    ];
    lines.push(match optimal_pa(&StationaryInputs::from_params(&p)) {
        Ok(x) => format!("optimal_p_a={}", sig6(x)),
        Err(e) => format!("optimal_p_a=undefined ({e})"),
    });
    lines.push(match min_optimal_pa(p.n, p.theta) {
        Ok(x) => format!("min_optimal_p_a={}", sig6(x)),
        Err(e) => format!("min_optimal_p_a=undefined ({e})"),
    });
    let text = lines.join("\n") + "\n";
    print!("{text}");
    write_out(&out, "equilibrium.txt", &text)
}

pub fn sweep(
    config: &Path,
    seed: Option<u64>,
    grid: &[String],
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let mut template = load_scenario(config)?;
    if let Some(seed) = seed {
        template.seed = seed;
    }
    let axes = grid
        .iter()
        .map(|g| GridAxis::parse(g))
        .collect::<Result<Vec<_>, _>>()?;
    let table = sim::sweep(&template, &axes)?;
    let csv = table.to_csv();
    write_out(&out, "sweep.csv", &csv)?;
    print!("{csv}");
    Ok(())
}

pub fn legacy_ne(config: Option<&Path>, out: Option<PathBuf>) -> Result<(), CliError> {
    let lp = match config {
        Some(path) => parse_toml::<LegacyParams>(path)?,
        None => LegacyParams::published(),
    };
    let t = legacy_utilities(&lp);
    let eq = legacy_honest_equilibrium(&lp)?;
    let cell = |i: usize, j: usize| format!("({}, {})", sig6(t.jc[i][j]), sig6(t.rp[i][j]));
    let mut text = String::new();
    let _ = writeln!(text, "jc \\ rp   {:<24} disobey", "comply");
    let _ = writeln!(text, "comply    {:<24} {}", cell(0, 0), cell(0, 1));
    let _ = writeln!(text, "disobey   {:<24} {}", cell(1, 0), cell(1, 1));
    let _ = writeln!(text, "equilibrium: {}", eq.is_equilibrium);
    let _ = writeln!(text, "best_response_check: {}", honest_is_best_response(&t));
    let _ = writeln!(
        text,
        "p_lower={} p_upper={} p={}",
        sig6(eq.p_lower),
        sig6(eq.p_upper),
        sig6(lp.p)
    );
    let _ = writeln!(
        text,
        "note: M={} (the published table is reproduced only with M=0)",
        sig6(lp.m)
    );
    print!("{text}");
    write_out(&out, "legacy_ne.txt", &text)
}

pub fn dump_derivative_curve(
    config: &Path,
    ns: &[u32],
    points: usize,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let p = load_game(config)?;
    warn_violations(&p);
    let mut csv = String::from("n,p_a,derivative\n");
    for c in derivative_curve(&p, ns, points) {
        let _ = writeln!(csv, "{},{},{}", c.n, c.p_a, c.derivative);
    }
    for &n in ns {
        let s = StationaryInputs {
            n,
            ..StationaryInputs::from_params(&p)
        };
        match optimal_pa(&s) {
            Ok(root) => eprintln!("n={n} root={}", sig6(root)),
            Err(e) => eprintln!("n={n} root=undefined ({e})"),
        }
    }
    if out.is_some() {
        write_out(&out, "derivative_curve.csv", &csv)
    } else {
        print!("{csv}");
        Ok(())
    }
}
