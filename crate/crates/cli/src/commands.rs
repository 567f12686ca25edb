use std::fs;
use std::io::Write;

use anyhow::{anyhow, Context};
use irm_core::ccp::{self, CcpCurve};
use irm_core::lru::{self, MissRateCurve};
use irm_core::montecarlo::{self, SimEstimate};
use irm_core::quadrature::{self, i_integral};
use irm_core::subsets::{subset_prob_mass, subsets_of_size};
use irm_core::{BigRational, CapacityRange, DistSpec, ITable, Popularity};
use serde::Serialize;

use crate::{Command, DistArg, Format, RunConfig, SimKind};

#[derive(Debug)]
pub enum Failure {
    /// exit 2
    Config(anyhow::Error),
    /// exit 1
    Verification(String),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(err: E) -> Self {
        Failure::Config(err.into())
    }
}

pub fn run(config: &RunConfig) -> Result<(), Failure> {
    let format = config.format;
    let (report, verdict) = match &config.command {
        Command::Mr { dist, j, rational } => (mr(dist, *j, *rational, format)?, Ok(())),
        Command::Ccp { dist, j, rational } => (ccp(dist, *j, *rational, format)?, Ok(())),
        Command::Verify { dist, jmax, tol } => verify(dist, *jmax, *tol, format)?,
        Command::Simulate {
            dist,
            kind,
            j,
            samples,
            warmup,
            seed,
        } => (simulate(dist, *kind, *j, *samples, *warmup, *seed, format)?, Ok(())),
        Command::Itable { dist, k } => (itable(dist, *k, format)?, Ok(())),
    };
    emit(config, &report)?;
    verdict.map_err(Failure::Verification)
}

fn emit(config: &RunConfig, report: &str) -> anyhow::Result<()> {
    match &config.out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(format!(
                "{}.{}",
                config.command.name(),
                config.format.extension()
            ));
            fs::write(&path, report).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(report.as_bytes())?;
            if !report.ends_with('\n') {
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

pub fn load_popularity(arg: &DistArg) -> anyhow::Result<Popularity> {
    let text = if arg.dist.trim_start().starts_with('{') {
        arg.dist.clone()
    } else {
        fs::read_to_string(&arg.dist).with_context(|| format!("reading distribution {}", arg.dist))?
    };
    let spec = DistSpec::from_json(&text)?;
    Ok(spec.build()?)
}

fn to_json<T: Serialize>(value: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn mr(dist: &DistArg, j: Option<CapacityRange>, rational: bool, format: Format) -> anyhow::Result<String> {
    let pop = load_popularity(dist)?;
    let m = pop.m();
    let range = j.unwrap_or(CapacityRange { lo: 1, hi: m });
    range.check_within(0, m)?;
    let depth = range.hi.min(m - 1);
    let curve = if rational {
        MissRateCurve::compute(&ITable::<BigRational>::build(&pop, depth)?, range.lo, range.hi)?
    } else {
        MissRateCurve::compute(&ITable::<f64>::build(&pop, depth)?, range.lo, range.hi)?
    };
    Ok(match format {
        Format::Csv => curve.to_csv(),
        Format::Json => curve.to_json(),
    })
}

fn ccp(dist: &DistArg, j: Option<CapacityRange>, rational: bool, format: Format) -> anyhow::Result<String> {
    let pop = load_popularity(dist)?;
    let m = pop.m();
    let range = j.unwrap_or(CapacityRange { lo: 0, hi: m });
    range.check_within(0, m)?;
    let depth = range.hi.min(m - 1);
    let curve = if rational {
        CcpCurve::compute(&ITable::<BigRational>::build(&pop, depth)?, range.lo, range.hi)?
    } else {
        CcpCurve::compute(&ITable::<f64>::build(&pop, depth)?, range.lo, range.hi)?
    };
    Ok(match format {
        Format::Csv => curve.to_csv(),
        Format::Json => curve.to_json(),
    })
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    detail: String,
    value: f64,
    reference: f64,
    discrepancy: f64,
    limit: f64,
    passed: bool,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    curve: MissRateCurve,
    checks: Vec<Check>,
    passed: bool,
}

/// Subsets per layer handed to the quadrature oracle.
const QUADRATURE_SAMPLES: usize = 4;
const QUADRATURE_MAX_SIZE: usize = 5;
const BRUTEFORCE_MAX_J: usize = 6;

fn verify(
    dist: &DistArg,
    jmax: Option<usize>,
    tol: f64,
    format: Format,
) -> anyhow::Result<(String, Result<(), String>)> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(anyhow!("tolerance must be positive and finite, got {tol}"));
    }
    let pop = load_popularity(dist)?;
    let m = pop.m();
    if m < 2 {
        return Err(anyhow!("verification needs at least two items"));
    }
    let jmax = jmax.unwrap_or(m - 1);
    CapacityRange::single(jmax).check_within(1, m - 1)?;
    let table = ITable::<f64>::build(&pop, jmax)?;
    let curve = MissRateCurve::compute(&table, 1, jmax)?;
    let mut checks = Vec::new();

    for e in &curve.entries {
        checks.push(Check {
            name: "identity",
            detail: format!("j={}", e.capacity),
            value: e.mr_king,
            reference: e.mr_flajolet,
            discrepancy: e.max_discrepancy,
            limit: tol,
            passed: e.max_discrepancy <= tol,
        });
    }

    let quad_tol = tol.clamp(quadrature::MIN_TOL, quadrature::MAX_TOL);
    for k in 1..=jmax.min(QUADRATURE_MAX_SIZE) {
        let layer: Vec<_> = subsets_of_size(m, k)?.collect();
        let step = (layer.len() / QUADRATURE_SAMPLES).max(1);
        for s in layer.into_iter().step_by(step).take(QUADRATURE_SAMPLES) {
            let dp = *table.get(s).expect("within depth");
            let (value, limit) = match i_integral(&pop, s, quad_tol) {
                Ok(r) => (r.value, 1e-6f64.max(10.0 * r.error_estimate)),
                Err(err) => {
                    log_check_error(&err);
                    (f64::NAN, 0.0)
                }
            };
            let discrepancy = (value - dp).abs();
            checks.push(Check {
                name: "quadrature",
                detail: format!("mask={} q_J={:?}", s.mask(), subset_prob_mass(&pop, s)?),
                value,
                reference: dp,
                discrepancy,
                limit,
                passed: discrepancy <= limit,
            });
        }
    }

    for j in 1..=jmax.min(BRUTEFORCE_MAX_J) {
        let Ok(bf) = lru::king_miss_rate_bruteforce::<f64>(&pop, j) else {
            break;
        };
        let king = curve.entries[j - 1].mr_king;
        let discrepancy = (bf - king).abs() / king.abs().max(f64::MIN_POSITIVE);
        checks.push(Check {
            name: "bruteforce",
            detail: format!("j={j}"),
            value: bf,
            reference: king,
            discrepancy,
            limit: tol,
            passed: discrepancy <= tol,
        });
    }

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} {} ({:e} > {:e})", c.name, c.detail, c.discrepancy, c.limit))
        .collect();
    for c in &checks {
        eprintln!(
            "{:<10} {:<28} {} discrepancy {:e} (limit {:e})",
            c.name,
            c.detail,
            if c.passed { "ok  " } else { "FAIL" },
            c.discrepancy,
            c.limit
        );
    }
    let verdict = if failed.is_empty() {
        Ok(())
    } else {
        Err(failed.join("; "))
    };
    let report = match format {
        Format::Csv => curve.to_csv(),
        Format::Json => to_json(&VerifyReport {
            passed: verdict.is_ok(),
            curve,
            checks,
        })?,
    };
    Ok((report, verdict))
}

fn log_check_error(err: &irm_core::Error) {
    eprintln!("quadrature: {err}");
}

#[derive(Debug, Serialize)]
struct SimReport {
    kind: SimKind,
    j: usize,
    exact: Option<f64>,
    estimate: SimEstimate,
    /// `(mean - exact) / std_error`
    z: Option<f64>,
}

fn simulate(
    dist: &DistArg,
    kind: SimKind,
    j: usize,
    samples: usize,
    warmup: Option<usize>,
    seed: u64,
    format: Format,
) -> anyhow::Result<String> {
    let pop = load_popularity(dist)?;
    let m = pop.m();
    let (estimate, exact) = match kind {
        SimKind::Lru => {
            let estimate = montecarlo::simulate_lru(&pop, j, warmup, samples, seed)?;
            let exact = ITable::<f64>::build(&pop, j.saturating_sub(1).min(m - 1))
                .and_then(|t| lru::flajolet_miss_rate(&t, j))
                .ok();
            (estimate, exact)
        }
        SimKind::Ccp => {
            let estimate = montecarlo::simulate_ccp(&pop, j, samples, seed)?;
            let exact = ITable::<f64>::build(&pop, j.saturating_sub(1).min(m - 1))
                .and_then(|t| ccp::expected_partial_time(&t, j))
                .ok();
            (estimate, exact)
        }
    };
    let z = exact
        .filter(|_| estimate.std_error > 0.0)
        .map(|x| (estimate.mean - x) / estimate.std_error);
    let report = SimReport {
        kind,
        j,
        exact,
        estimate,
        z,
    };
    Ok(match format {
        Format::Json => to_json(&report)?,
        Format::Csv => {
            let cell = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
            format!(
                "kind,j,exact,mean,std_error,samples,seed\n{},{},{},{:?},{:?},{},{}\n",
                kind.as_str(),
                j,
                cell(report.exact),
                estimate.mean,
                estimate.std_error,
                estimate.samples,
                estimate.seed
            )
        }
    })
}

#[derive(Debug, Serialize)]
struct LayerRow {
    mask: u64,
    size: usize,
    #[serde(rename = "q_J")]
    q_j: f64,
    #[serde(rename = "I_J")]
    i_j: f64,
}

fn itable(dist: &DistArg, k: usize, format: Format) -> anyhow::Result<String> {
    let pop = load_popularity(dist)?;
    let table = ITable::<f64>::build(&pop, k)?;
    Ok(match format {
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_layer_csv(k, &mut buf)?;
            String::from_utf8(buf)?
        }
        Format::Json => {
            let rows = table
                .layer_entries(k)?
                .map(|(s, v)| {
                    Ok(LayerRow {
                        mask: s.mask(),
                        size: s.size(),
                        q_j: subset_prob_mass(&pop, s)?,
                        i_j: *v,
                    })
                })
                .collect::<irm_core::Result<Vec<_>>>()?;
            to_json(&rows)?
        }
    })
}
