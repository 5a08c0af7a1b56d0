use std::fs;
use std::path::{Path, PathBuf};

use cfqkd_core::nocloning::{self, BipartiteState, Subsystem};
use cfqkd_core::oracle::{self, Scenario, MIN_VALIDATION_ROUNDS};
use cfqkd_core::protocol::{run_session, simulate};
use cfqkd_core::{report, EveStrategy, Polarization};
use serde_json::json;

use crate::config::{Format, RunArgs, RunConfig, OUTPUT_DIR_ENV};
use crate::error::CliError;
use crate::{GridArgs, NoCloningArgs, OracleArgs, SweepArgs};

fn write_output(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn env_out_dir() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)
}

fn unsupported(format: Format, command: &str) -> CliError {
    CliError::Config(format!("format {format:?} is not supported by '{command}'").to_lowercase())
}

pub fn run(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    let session = cfg.session()?;
    let rep = run_session(&session)?;
    let (text, file) = match cfg.format {
        Format::Json => (report::summary_json(&rep)? + "\n", "summary.json"),
        Format::Kv => (report::summary_kv(&rep)?, "summary.txt"),
        Format::Csv => return Err(unsupported(cfg.format, "run")),
    };
    print!("{text}");
    if let Some(dir) = &cfg.out_dir {
        write_output(dir, file, &text)?;
        if cfg.log_rounds {
            fs::create_dir_all(dir)?;
            let records = simulate(&session)?;
            let out = fs::File::create(dir.join("rounds.jsonl"))?;
            report::write_round_log(std::io::BufWriter::new(out), &records)?;
        }
    }
    Ok(())
}

pub fn compare(args: &RunArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(args)?;
    if cfg.rounds < MIN_VALIDATION_ROUNDS {
        return Err(CliError::Config(format!(
            "compare needs at least {MIN_VALIDATION_ROUNDS} rounds, got {}",
            cfg.rounds
        )));
    }
    let rep = run_session(&cfg.session()?)?;
    let expected = oracle::expectations(cfg.reflectivity, cfg.strategy)?;
    let verdict = oracle::cross_validate(&rep, &expected)?;
    let format = args.format.unwrap_or(Format::Kv);
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&verdict).map_err(|e| CliError::Failed(e.to_string()))? + "\n",
        Format::Kv => format!("{verdict}\n"),
        Format::Csv => return Err(unsupported(format, "compare")),
    };
    print!("{text}");
    if let Some(dir) = &cfg.out_dir {
        write_output(
            dir,
            if format == Format::Json {
                "verdict.json"
            } else {
                "verdict.txt"
            },
            &text,
        )?;
    }
    if verdict.passed {
        Ok(())
    } else {
        let names: Vec<&str> = verdict.failures().map(|c| c.name.as_str()).collect();
        Err(CliError::Failed(format!("comparison failed: {}", names.join(", "))))
    }
}

fn grid(args: &GridArgs) -> Result<Vec<f64>, CliError> {
    if args.reflectivities.is_empty() {
        return Ok(oracle::reflectivity_grid(args.grid_step)?);
    }
    for &r in &args.reflectivities {
        if !(r.is_finite() && (0.0..=1.0).contains(&r)) {
            return Err(CliError::Config(format!("reflectivity must lie in [0, 1], got {r}")));
        }
    }
    Ok(args.reflectivities.clone())
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let grid = grid(&args.grid)?;
    let strategies: Vec<EveStrategy> = if args.strategies.is_empty() {
        EveStrategy::ALL.to_vec()
    } else {
        args.strategies.iter().map(|s| s.parse()).collect::<Result<_, _>>()?
    };
    let (text, file) = match args.format {
        Format::Csv => (report::oracle_csv(&grid, &strategies)?, "oracle.csv"),
        Format::Json => {
            let mut rows = Vec::with_capacity(grid.len());
            for &r in &grid {
                let expectations = strategies
                    .iter()
                    .map(|&s| oracle::expectations(r, s))
                    .collect::<Result<Vec<_>, _>>()?;
                rows.push(json!({
                    "reflectivity": r,
                    "blocked": oracle::detection_table(r, Scenario::Blocked)?,
                    "unblocked": oracle::detection_table(r, Scenario::Unblocked)?,
                    "qci": oracle::qci_table(r)?,
                    "strategies": expectations,
                }));
            }
            let text = serde_json::to_string_pretty(&rows).map_err(|e| CliError::Failed(e.to_string()))?;
            (text + "\n", "oracle.json")
        }
        Format::Kv => return Err(unsupported(args.format, "oracle")),
    };
    print!("{text}");
    if let Some(dir) = args.out_dir.clone().or_else(env_out_dir) {
        write_output(&dir, file, &text)?;
    }
    Ok(())
}

fn read_state(path: &Path) -> Result<BipartiteState, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read state file {}: {e}", path.display())))?;
    nocloning::parse_state(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn nocloning(args: &NoCloningArgs) -> Result<(), CliError> {
    let (psi0, psi1, source) = match (&args.state0, &args.state1) {
        (Some(p0), Some(p1)) => {
            let (s0, s1) = (read_state(p0)?, read_state(p1)?);
            let (a0, b0) = s0.dims();
            let (a1, b1) = s1.dims();
            let (da, db) = (a0.max(a1), b0.max(b1));
            (s0.padded(da, db)?, s1.padded(da, db)?, "files".to_string())
        }
        _ => (
            BipartiteState::protocol_state(Polarization::H, args.reflectivity)?,
            BipartiteState::protocol_state(Polarization::V, args.reflectivity)?,
            format!("protocol R={}", args.reflectivity),
        ),
    };
    let l0 = nocloning::schmidt_decompose(&psi0)?.coefficients;
    let l1 = nocloning::schmidt_decompose(&psi1)?.coefficients;
    let d = nocloning::distinguishable_without_disturbance(&psi0, &psi1, Subsystem::B)?;
    let verdict = if d.distinguishable {
        "distinguishable without disturbance"
    } else {
        "not distinguishable without disturbance"
    };
    let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let text = match args.format {
        Format::Kv => format!(
            "source={source}\nschmidt_0={}\nschmidt_1={}\noverlap={}\ndistinguishable={}\nverdict={verdict}\n",
            join(&l0),
            join(&l1),
            d.overlap,
            d.distinguishable
        ),
        Format::Json => {
            let v = json!({
                "source": source,
                "schmidt_0": l0,
                "schmidt_1": l1,
                "overlap": d.overlap,
                "distinguishable": d.distinguishable,
                "verdict": verdict,
            });
            serde_json::to_string_pretty(&v).map_err(|e| CliError::Failed(e.to_string()))? + "\n"
        }
        Format::Csv => return Err(unsupported(args.format, "nocloning")),
    };
    print!("{text}");
    Ok(())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    let cfg = RunConfig::resolve(&args.run)?;
    let grid = oracle::reflectivity_grid(args.grid_step)?;
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &r) in grid.iter().enumerate() {
        let session = cfg.session_at(r, cfg.seed.wrapping_add(i as u64))?;
        let rep = run_session(&session)?;
        let verdict = if cfg.rounds >= MIN_VALIDATION_ROUNDS {
            Some(oracle::cross_validate(&rep, &oracle::expectations(r, cfg.strategy)?)?)
        } else {
            None
        };
        rows.push((rep, verdict));
    }
    let format = args.run.format.unwrap_or(Format::Csv);
    let (text, file) = match format {
        Format::Csv => (report::sweep_csv(&rows)?, "sweep.csv"),
        Format::Json => {
            let v: Vec<_> = rows
                .iter()
                .map(|(rep, verdict)| json!({ "report": rep, "verdict": verdict }))
                .collect();
            let text = serde_json::to_string_pretty(&v).map_err(|e| CliError::Failed(e.to_string()))?;
            (text + "\n", "sweep.json")
        }
        Format::Kv => return Err(unsupported(format, "sweep")),
    };
    print!("{text}");
    if let Some(dir) = &cfg.out_dir {
        write_output(dir, file, &text)?;
    }
    Ok(())
}
