use anyhow::{bail, Context, Result};
use serde::Serialize;

use evident::algebra::{parse_process, validity_check};
use evident::boundary::sample_complexity;
use evident::codes::{
    liftability_check, nml_fixed_horizon_family, nml_horizon_conditional,
    nml_horizon_conditional_exact, nml_normalizer, nml_sequence_family, prequential_family,
    LiftabilityReport,
};
use evident::eprocess::Smoothing;
use evident::extras::{
    conformal_exhaustive_suite, pac_bayes_suite, DistanceToMean, NearestNeighbor,
};
use evident::harness::{
    accumulation_checks, all_pass, experiment_accumulation, experiment_misspec, experiment_type1,
    misspec_checks, table2_checks, to_csv, to_json, type1_checks, verify_table2, Check,
    ExperimentResult, MisspecConfig, TABLE2_REFERENCE,
};
use evident::prob::Distribution;
use evident::scoring::{decay_curve, decay_points, one_step_evidence_expectation, ScoringRule};
use evident::Rational;

use crate::args::{Command, Experiment, Family, Format, Global};

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

/// What a command produced; the first artifact is the one printed when no
/// output directory is given.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub pass: Option<bool>,
}

enum Style {
    Text,
    Csv,
    Json,
}

fn style(g: &Global, natural: Style) -> Style {
    match g.format {
        Some(Format::Csv) => Style::Csv,
        Some(Format::Json) => Style::Json,
        None => natural,
    }
}

fn artifact(stem: &str, style: &Style, bytes: Vec<u8>) -> Artifact {
    let ext = match style {
        Style::Text => "txt",
        Style::Csv => "csv",
        Style::Json => "json",
    };
    Artifact {
        name: format!("{stem}.{ext}"),
        bytes,
    }
}

fn text(s: String) -> Vec<u8> {
    let mut b = s.into_bytes();
    b.push(b'\n');
    b
}

pub fn run(g: &Global, cmd: &Command) -> Result<Outcome> {
    match cmd {
        Command::Table2 { reps } => table2(g, *reps),
        Command::NmlHorizon { max_n } => nml_horizon(g, *max_n),
        Command::NmlConstants { n } => nml_constants(g, *n),
        Command::Liftability { family, depth } => liftability(g, *family, *depth),
        Command::Experiment {
            which,
            reps,
            horizon,
            b,
        } => experiment(g, *which, *reps, *horizon, *b),
        Command::ScoringDecay { p1, p0, n_max } => scoring_decay(g, *p1, *p0, *n_max),
        Command::ConformalCheck { max_size, levels } => conformal(g, *max_size, *levels),
        Command::PacbayesCheck {
            instances,
            length,
            grid,
            enum_length,
        } => pacbayes(g, *instances, *length, *grid, *enum_length),
        Command::Validity { spec, depth, null } => validity(g, spec, *depth, *null),
        Command::SampleComplexity { alpha, mu } => complexity(g, *alpha, *mu),
    }
}

fn table2(g: &Global, reps: Option<usize>) -> Result<Outcome> {
    let reps = reps.unwrap_or_else(|| g.reps_tier.reps(200_000));
    let table = verify_table2(g.seed, reps)?;
    let checks = table2_checks(&table, g.reps_tier.widen());
    let pass = all_pass(&checks);
    let s = style(g, Style::Csv);
    let bytes = match s {
        Style::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                seed: u64,
                reps: usize,
                horizon_cap: usize,
                rows: Vec<evident::boundary::StoppingRow>,
                mean_stderr: Vec<f64>,
                reference: &'a [evident::harness::Table2Reference],
                checks: &'a [Check],
            }
            to_json(&Doc {
                seed: table.seed,
                reps: table.reps,
                horizon_cap: table.horizon_cap,
                rows: table.rows(),
                mean_stderr: table.reports.iter().map(|r| r.mean_stderr).collect(),
                reference: &TABLE2_REFERENCE,
                checks: &checks,
            })?
        }
        _ => to_csv(table.rows())?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("table2", &s, bytes)],
        pass: Some(pass),
    })
}

/// Published step-2 conditionals for N = 2..7.
const TABLE5: [f64; 6] = [0.800, 0.795, 0.791, 0.789, 0.786, 0.785];

fn nml_horizon(g: &Global, max_n: usize) -> Result<Outcome> {
    if max_n < 2 {
        bail!("--max-n must be at least 2");
    }
    #[derive(Serialize)]
    struct Row {
        n: usize,
        q: f64,
        numerator: String,
        denominator: String,
        rounded: f64,
        reference: Option<f64>,
    }
    let mut rows = Vec::new();
    let mut pass = true;
    for n in 2..=max_n {
        let q: Rational = nml_horizon_conditional_exact(n, 2, &[0], 0)?;
        let v = nml_horizon_conditional(n, 2, &[0], 0)?;
        let rounded = (v * 1000.0).round() / 1000.0;
        let reference = TABLE5.get(n - 2).copied();
        if let Some(r) = reference {
            pass &= rounded == r;
        }
        rows.push(Row {
            n,
            q: v,
            numerator: q.numer().to_string(),
            denominator: q.denom().to_string(),
            rounded,
            reference,
        });
    }
    let s = style(g, Style::Csv);
    let bytes = match s {
        Style::Json => to_json(&rows)?,
        _ => to_csv(&rows)?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("nml_horizon", &s, bytes)],
        pass: Some(pass),
    })
}

fn nml_constants(g: &Global, n: usize) -> Result<Outcome> {
    #[derive(Serialize)]
    struct Row {
        n: usize,
        numerator: String,
        denominator: String,
        value: f64,
    }
    let mut rows = Vec::new();
    for k in 1..=n {
        let c: Rational = nml_normalizer(k)?;
        rows.push(Row {
            n: k,
            numerator: c.numer().to_string(),
            denominator: c.denom().to_string(),
            value: nml_normalizer::<f64>(k)?,
        });
    }
    let s = style(g, Style::Text);
    let bytes = match s {
        Style::Text => text(
            rows.iter()
                .map(|r| {
                    if r.denominator == "1" {
                        format!("{}:{}", r.n, r.numerator)
                    } else {
                        format!("{}:{}/{}", r.n, r.numerator, r.denominator)
                    }
                })
                .collect::<Vec<_>>()
                .join(" "),
        ),
        Style::Csv => to_csv(&rows)?,
        Style::Json => to_json(&rows)?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("nml_constants", &s, bytes)],
        pass: None,
    })
}

fn liftability(g: &Global, family: Family, depth: usize) -> Result<Outcome> {
    let report: LiftabilityReport = match family {
        Family::Kt => liftability_check(
            &prequential_family::<Rational>(Smoothing::KrichevskyTrofimov, depth)?,
            depth,
        )?,
        Family::Laplace => liftability_check(
            &prequential_family::<Rational>(Smoothing::Laplace, depth)?,
            depth,
        )?,
        Family::NmlSeq => liftability_check(&nml_sequence_family::<Rational>(depth)?, depth)?,
        Family::NmlFixed => {
            liftability_check(&nml_fixed_horizon_family::<Rational>(depth)?, depth)?
        }
    };
    let s = style(g, Style::Json);
    let bytes = match s {
        Style::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                prefix: String,
                mass: f64,
                mass_numerator: String,
                mass_denominator: &'a str,
            }
            if report.violations.is_empty() {
                b"prefix,mass,mass_numerator,mass_denominator\n".to_vec()
            } else {
                let dens: Vec<String> = report
                    .violations
                    .iter()
                    .map(|v| v.mass_denominator.to_string())
                    .collect();
                to_csv(report.violations.iter().zip(&dens).map(|(v, d)| Row {
                    prefix: join(&v.prefix),
                    mass: v.mass,
                    mass_numerator: v.mass_numerator.to_string(),
                    mass_denominator: d,
                }))?
            }
        }
        _ => to_json(&report)?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("liftability", &s, bytes)],
        pass: Some(report.pass),
    })
}

fn join(xs: &[usize]) -> String {
    xs.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn experiment(
    g: &Global,
    which: Experiment,
    reps: Option<usize>,
    horizon: Option<usize>,
    b: f64,
) -> Result<Outcome> {
    let widen = g.reps_tier.widen();
    let (stem, result, checks): (&str, ExperimentResult, Vec<Check>) = match which {
        Experiment::Accumulation => {
            let r = experiment_accumulation(
                g.seed,
                reps.unwrap_or_else(|| g.reps_tier.reps(500)),
                horizon.unwrap_or(200),
            )?;
            let c = accumulation_checks(&r, widen);
            ("accumulation", r, c)
        }
        Experiment::Type1 => {
            let r = experiment_type1(
                g.seed,
                reps.unwrap_or_else(|| g.reps_tier.reps(10_000)),
                horizon.unwrap_or(500),
                b,
            )?;
            let c = type1_checks(&r, widen);
            ("type1", r, c)
        }
        Experiment::Misspec => {
            let cfg = MisspecConfig {
                reps: reps.unwrap_or_else(|| g.reps_tier.reps(500)),
                horizon: horizon.unwrap_or(300),
                b,
                ..MisspecConfig::default()
            };
            let r = experiment_misspec(g.seed, &cfg)?;
            let c = misspec_checks(&r, widen);
            ("misspec", r, c)
        }
    };
    let pass = all_pass(&checks);
    let s = style(g, Style::Json);
    let main = match s {
        Style::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                metric: &'a str,
                value: f64,
                mc_stderr: f64,
            }
            to_csv(result.metrics.iter().map(|(k, v)| Row {
                metric: k,
                value: *v,
                mc_stderr: result.stderr(k),
            }))?
        }
        _ => {
            #[derive(Serialize)]
            struct Doc<'a> {
                result: &'a ExperimentResult,
                checks: &'a [Check],
            }
            to_json(&Doc {
                result: &result,
                checks: &checks,
            })?
        }
    };
    let mut artifacts = vec![artifact(stem, &s, main)];
    if !result.trajectories.is_empty() {
        let points = result.trajectories.iter().flat_map(|t| t.points());
        artifacts.push(artifact(
            &format!("{stem}_trajectories"),
            &Style::Csv,
            to_csv(points)?,
        ));
    }
    Ok(Outcome {
        artifacts,
        pass: Some(pass),
    })
}

fn bern(p: f64) -> Result<Distribution<f64>> {
    Distribution::bernoulli(p).with_context(|| format!("invalid Bernoulli parameter {p}"))
}

fn scoring_decay(g: &Global, p1: f64, p0: f64, n_max: usize) -> Result<Outcome> {
    if n_max == 0 {
        bail!("--n-max must be at least 1");
    }
    let (q1, q0) = (bern(p1)?, bern(p0)?);
    let curve = decay_curve(ScoringRule::Brier, &q1, &q0, n_max);
    let r = one_step_evidence_expectation(ScoringRule::Brier, &q1, &q0);
    let pass = if p1 == p0 { r == 1.0 } else { r < 1.0 };
    let s = style(g, Style::Csv);
    let points = decay_points(&curve);
    let bytes = match s {
        Style::Json => to_json(&points)?,
        _ => to_csv(points)?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("scoring_decay", &s, bytes)],
        pass: Some(pass),
    })
}

fn conformal(g: &Global, max_size: usize, levels: usize) -> Result<Outcome> {
    if levels < 1 || max_size < 2 {
        bail!("need --levels >= 1 and --max-size >= 2");
    }
    let reports = vec![
        conformal_exhaustive_suite(&DistanceToMean, max_size, levels)?,
        conformal_exhaustive_suite(&NearestNeighbor, max_size, levels)?,
    ];
    let pass = reports.iter().all(|r| r.pass);
    let s = style(g, Style::Json);
    let bytes = match s {
        Style::Csv => to_csv(&reports)?,
        _ => to_json(&reports)?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("conformal_check", &s, bytes)],
        pass: Some(pass),
    })
}

fn pacbayes(
    g: &Global,
    instances: usize,
    length: usize,
    grid: usize,
    enum_length: usize,
) -> Result<Outcome> {
    if grid == 0 {
        bail!("--grid must be at least 1");
    }
    let report = pac_bayes_suite(g.seed, instances, length, grid, enum_length)?;
    let s = style(g, Style::Json);
    let bytes = match s {
        Style::Csv => {
            #[derive(Serialize)]
            struct Row {
                rule: &'static str,
                n: usize,
                expected_exp_rhs: f64,
            }
            to_csv(report.enumeration.iter().map(|(rule, n, v)| Row {
                rule: rule.name(),
                n: *n,
                expected_exp_rhs: *v,
            }))?
        }
        _ => to_json(&report)?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("pacbayes_check", &s, bytes)],
        pass: Some(report.pass),
    })
}

fn validity(g: &Global, spec: &str, depth: usize, null: f64) -> Result<Outcome> {
    let process = parse_process(spec).with_context(|| format!("cannot build `{spec}`"))?;
    let report = validity_check(process.as_ref(), &bern(null)?, depth)?;
    let s = style(g, Style::Json);
    let bytes = match s {
        Style::Csv => {
            #[derive(Serialize)]
            struct Row<'a> {
                combinator: &'a str,
                depth: usize,
                max_expectation: f64,
                worst_history: String,
                initial_evidence: f64,
                histories_checked: usize,
                pass: bool,
            }
            to_csv([Row {
                combinator: &report.combinator,
                depth: report.depth,
                max_expectation: report.max_expectation,
                worst_history: join(&report.worst_history),
                initial_evidence: report.initial_evidence,
                histories_checked: report.histories_checked,
                pass: report.pass,
            }])?
        }
        _ => to_json(&report)?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("validity", &s, bytes)],
        pass: Some(report.pass),
    })
}

fn complexity(g: &Global, alpha: f64, mu: f64) -> Result<Outcome> {
    let n = sample_complexity(alpha, mu)?;
    #[derive(Serialize)]
    struct Doc {
        alpha: f64,
        mu: f64,
        n: f64,
    }
    let s = style(g, Style::Text);
    let bytes = match s {
        Style::Text => text(format!("{n:.1}")),
        Style::Csv => to_csv([Doc { alpha, mu, n }])?,
        Style::Json => to_json(&Doc { alpha, mu, n })?,
    };
    Ok(Outcome {
        artifacts: vec![artifact("sample_complexity", &s, bytes)],
        pass: None,
    })
}
