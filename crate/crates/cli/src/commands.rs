use std::fmt::Write as _;

use ghz_core::baseline::{enumerate_assignments, search, SearchSummary};
use ghz_core::harness::{
    compare, estimate_mermin, run_grandma, run_grandma_parallel, MerminEstimate, RunConfig,
    TallyTable,
};
use ghz_core::polarization::{
    born_distribution, context_expectation, expand, ghz_state, mermin_value,
};
use ghz_core::report::{SheetDocument, SimulationDocument};
use ghz_core::sampler::{example_sheet_entries, sample_sheet, validate_sheet};
use ghz_core::{Context, Policy, RandomStream, SystemOutcome};
use serde::Serialize;

use crate::{Format, Output};

/// Rounds exact-algebra results to 12 decimals so rounding noise such as
/// `0.12499999999999997` or `-0.0` does not leak into the output.
fn snap(x: f64) -> f64 {
    let r = (x * 1e12).round() / 1e12;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn csv_line(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

#[derive(Serialize)]
struct PredictRow {
    outcome: String,
    amplitude_re: f64,
    amplitude_im: f64,
    probability: f64,
    parity: i8,
}

#[derive(Serialize)]
struct PredictContext {
    context: String,
    expectation: f64,
    rows: Vec<PredictRow>,
}

fn predict_context(context: Context) -> PredictContext {
    let ghz = ghz_state();
    let table = expand(&ghz, context);
    let dist = born_distribution(&table);
    let rows = table
        .entries()
        .zip(dist.probabilities())
        .map(|((outcome, amp), &p)| PredictRow {
            outcome: outcome.to_string(),
            amplitude_re: snap(amp.re),
            amplitude_im: snap(amp.im),
            probability: snap(p),
            parity: outcome.parity_product(),
        })
        .collect();
    PredictContext {
        context: context.to_string(),
        expectation: snap(context_expectation(&ghz, context)),
        rows,
    }
}

pub fn predict(context: Option<Context>, format: Format) -> Output {
    let contexts: Vec<Context> = context.map_or(Context::ALL.to_vec(), |c| vec![c]);
    let docs: Vec<PredictContext> = contexts.into_iter().map(predict_context).collect();
    let text = match format {
        Format::JsonLike => json(&docs),
        Format::Csv => {
            let mut out = csv_line(&["context", "outcome", "amplitude_re", "amplitude_im", "probability", "parity"].map(String::from));
            for d in &docs {
                for r in &d.rows {
                    out += &csv_line(&[
                        d.context.clone(),
                        r.outcome.clone(),
                        r.amplitude_re.to_string(),
                        r.amplitude_im.to_string(),
                        r.probability.to_string(),
                        r.parity.to_string(),
                    ]);
                }
            }
            out
        }
        Format::Table => {
            let mut out = String::new();
            for (i, d) in docs.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                let _ = writeln!(out, "context {}  (expected parity product {:+})", d.context, d.expectation);
                let _ = writeln!(out, "{:<10} {:>22} {:>12} {:>7}", "outcome", "amplitude", "probability", "parity");
                for r in &d.rows {
                    let amp = format!("{:+.6}{:+.6}i", r.amplitude_re, r.amplitude_im);
                    let _ = writeln!(out, "{:<10} {:>22} {:>12.6} {:>+7}", r.outcome, amp, r.probability, r.parity);
                }
            }
            out
        }
    };
    Output { text, pass: true }
}

fn simulation_table(doc: &SimulationDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "runs {}  seed {}  policy {}  tolerance {}",
        doc.runs, doc.seed, doc.policy, doc.tolerance
    );
    let _ = writeln!(
        out,
        "{:<7} {:>8} {:>10} {:>10} {:>3} {:>10} {:>7}  result",
        "context", "runs", "tv", "chisq", "df", "chisq.999", "outside"
    );
    for c in &doc.contexts {
        match (c.tv, c.chisq, c.df, c.chisq_critical, c.out_of_support, c.pass) {
            (Some(tv), Some(chisq), Some(df), Some(crit), Some(outside), Some(pass)) => {
                let _ = writeln!(
                    out,
                    "{:<7} {:>8} {:>10.6} {:>10.4} {:>3} {:>10.4} {:>7}  {}",
                    c.context,
                    c.runs,
                    tv,
                    chisq,
                    df,
                    crit,
                    outside,
                    if pass { "pass" } else { "FAIL" }
                );
            }
            _ => {
                let _ = writeln!(out, "{:<7} {:>8}  not evaluated", c.context, c.runs);
            }
        }
    }
    match &doc.mermin {
        Some(m) => {
            let _ = writeln!(out, "mermin estimate: {} +/- {}", m.value, m.stderr);
        }
        None => {
            let _ = writeln!(out, "mermin estimate: not available (a Mermin context has no runs)");
        }
    }
    let _ = writeln!(out, "chi-square 99.9% check: {}", if doc.chisq_pass { "pass" } else { "FAIL" });
    let _ = writeln!(out, "overall: {}", if doc.pass { "PASS" } else { "FAIL" });
    out
}

/// Experimental runs needed for `per_context` runs of every context the
/// policy measures: one context for a fixed policy, all eight otherwise.
pub fn total_runs(per_context: u64, policy: Policy) -> ghz_core::Result<u64> {
    let contexts = match policy {
        Policy::FixedContext(_) => 1,
        Policy::RoundRobin | Policy::UniformRandom => Context::ALL.len() as u64,
    };
    per_context
        .checked_mul(contexts)
        .ok_or_else(|| ghz_core::Error::InvalidConfig(format!("--runs {per_context} overflows")))
}

pub fn simulate(
    runs: u64,
    seed: u64,
    policy: Policy,
    tolerance: f64,
    partitions: u64,
    format: Format,
) -> ghz_core::Result<Output> {
    let config = RunConfig::new(total_runs(runs, policy)?, seed, policy, tolerance)?;
    let ghz = ghz_state();
    let tally = if partitions == 1 {
        run_grandma(&config, &ghz)
    } else {
        run_grandma_parallel(&config, &ghz, partitions)
    };
    let report = compare(&tally, &ghz, &config);
    let doc = SimulationDocument::new(&config, &ghz, &tally, &report);
    let text = match format {
        Format::JsonLike => doc.to_json() + "\n",
        Format::Csv => doc.to_csv(),
        Format::Table => simulation_table(&doc),
    };
    Ok(Output { text, pass: report.pass() })
}

pub fn sheet(seed: Option<u64>, format: Format) -> Output {
    let ghz = ghz_state();
    let entries = match seed {
        Some(s) => *sample_sheet(&ghz, &mut RandomStream::new(s)).entries(),
        None => example_sheet_entries(),
    };
    let report = validate_sheet(&entries, &ghz);
    let doc = SheetDocument::new(seed, &report);
    let text = match format {
        Format::JsonLike => doc.to_json() + "\n",
        Format::Csv => doc.to_csv(),
        Format::Table => {
            let header = match seed {
                Some(s) => format!("pre-existing states for one run (seed {s})\n"),
                None => "pre-existing states for the worked example run\n".to_string(),
            };
            header + &doc.to_text()
        }
    };
    Output { text, pass: report.pass() }
}

#[derive(Serialize)]
struct SearchDocument {
    assignments: usize,
    satisfying: usize,
    best_constraints: usize,
    constraints: usize,
    classical_max: i32,
    classical_min: i32,
    best_assignment: String,
    quantum: f64,
}

fn search_document(s: &SearchSummary) -> SearchDocument {
    SearchDocument {
        assignments: s.assignments,
        satisfying: s.satisfying,
        best_constraints: s.best_constraints,
        constraints: ghz_core::baseline::GHZ_CONSTRAINTS.len(),
        classical_max: s.mermin_max,
        classical_min: s.mermin_min,
        best_assignment: s.best_assignment.to_string(),
        quantum: snap(mermin_value(&ghz_state())),
    }
}

fn search_text(d: &SearchDocument) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "assignments enumerated: {}", d.assignments);
    let _ = writeln!(out, "satisfying: {}/{}", d.satisfying, d.assignments);
    let _ = writeln!(out, "best: {} of {} constraints", d.best_constraints, d.constraints);
    let _ = writeln!(out, "classical max: {}, quantum: {}", d.classical_max, d.quantum);
    let _ = writeln!(out, "classical min: {}", d.classical_min);
    let _ = writeln!(out, "first optimal assignment: {}", d.best_assignment);
    out
}

pub fn lhv_search(format: Format) -> Output {
    let doc = search_document(&search(&enumerate_assignments()));
    let text = match format {
        Format::JsonLike => json(&doc),
        Format::Table => search_text(&doc),
        Format::Csv => {
            csv_line(&["assignments", "satisfying", "best_constraints", "classical_max", "classical_min", "quantum"].map(String::from))
                + &csv_line(&[
                    doc.assignments.to_string(),
                    doc.satisfying.to_string(),
                    doc.best_constraints.to_string(),
                    doc.classical_max.to_string(),
                    doc.classical_min.to_string(),
                    doc.quantum.to_string(),
                ])
        }
    };
    Output { text, pass: true }
}

#[derive(Serialize)]
struct MerminTerm {
    context: String,
    exact: f64,
    simulated: f64,
    runs: u64,
}

#[derive(Serialize)]
struct MerminReport {
    terms: Vec<MerminTerm>,
    quantum: f64,
    classical_max: i32,
    simulated: f64,
    simulated_stderr: f64,
}

/// One fixed-context run of `runs` per Mermin context, seeded `seed + i`.
fn mermin_tally(runs: u64, seed: u64) -> ghz_core::Result<TallyTable> {
    let ghz = ghz_state();
    let mut tally = TallyTable::new();
    for (i, c) in Context::MERMIN.iter().enumerate() {
        let config = RunConfig::new(runs, seed.wrapping_add(i as u64), Policy::FixedContext(*c), 0.01)?;
        tally += &run_grandma(&config, &ghz);
    }
    Ok(tally)
}

fn empirical_mean(tally: &TallyTable, c: Context) -> f64 {
    let signed: i64 = c
        .outcomes()
        .zip(tally.counts(c))
        .map(|(o, &n)| i64::from(o.parity_product()) * n as i64)
        .sum();
    signed as f64 / tally.runs_per_context(c) as f64
}

pub fn mermin(runs: u64, seed: u64, format: Format) -> ghz_core::Result<Output> {
    let ghz = ghz_state();
    let tally = mermin_tally(runs, seed)?;
    let MerminEstimate { value, stderr } = estimate_mermin(&tally)?;
    let classical_max = search(&enumerate_assignments()).mermin_max;
    let report = MerminReport {
        terms: Context::MERMIN
            .iter()
            .map(|c| MerminTerm {
                context: c.to_string(),
                exact: snap(context_expectation(&ghz, *c)),
                simulated: empirical_mean(&tally, *c),
                runs: tally.runs_per_context(*c),
            })
            .collect(),
        quantum: snap(mermin_value(&ghz)),
        classical_max,
        simulated: value,
        simulated_stderr: stderr,
    };
    let text = match format {
        Format::JsonLike => json(&report),
        Format::Csv => {
            let mut out = csv_line(&["context", "exact", "simulated", "runs"].map(String::from));
            for t in &report.terms {
                out += &csv_line(&[t.context.clone(), t.exact.to_string(), t.simulated.to_string(), t.runs.to_string()]);
            }
            out
        }
        Format::Table => {
            let mut out = String::new();
            let _ = writeln!(out, "M = E(xxx) - E(xyy) - E(yxy) - E(yyx)");
            let _ = writeln!(out, "{:<7} {:>6} {:>10} {:>8}", "context", "exact", "simulated", "runs");
            for t in &report.terms {
                let _ = writeln!(out, "{:<7} {:>+6} {:>+10} {:>8}", t.context, t.exact, t.simulated, t.runs);
            }
            let _ = writeln!(out, "quantum: {}", report.quantum);
            let _ = writeln!(out, "simulated: {} +/- {}", report.simulated, report.simulated_stderr);
            let _ = writeln!(out, "classical max: {}", report.classical_max);
            out
        }
    };
    let pass = value > f64::from(classical_max);
    Ok(Output { text, pass })
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

fn outcomes(list: &[&str]) -> Vec<SystemOutcome> {
    list.iter().map(|s| s.parse().expect("valid literal")).collect()
}

fn check_expansion() -> Check {
    let table = expand(&ghz_state(), Context::YYX);
    let support = outcomes(&["R L H'", "L R H'", "R R V'", "L L V'"]);
    let worst = table
        .entries()
        .map(|(o, a)| {
            let want = if support.contains(&o) { 0.5 } else { 0.0 };
            (a - num_complex_from(want)).norm()
        })
        .fold(0.0, f64::max);
    Check {
        name: "yyx expansion",
        pass: worst <= 1e-12,
        detail: format!("amplitude 1/2 on R L H', L R H', R R V', L L V'; max deviation {worst:.1e}"),
    }
}

fn num_complex_from(re: f64) -> ghz_core::polarization::ComplexAmplitude {
    ghz_core::polarization::ComplexAmplitude::new(re, 0.0)
}

fn check_support() -> Check {
    let ghz = ghz_state();
    let mut failures = Vec::new();
    for c in Context::ALL {
        let dist = born_distribution(&expand(&ghz, c));
        let (size, p, parity) = if c.is_mermin() {
            (4, 0.25, Some(if c == Context::XXX { 1 } else { -1 }))
        } else {
            (8, 0.125, None)
        };
        let ok = dist.support_size() == size
            && dist.support().all(|(o, q)| {
                (q - p).abs() <= 1e-12 && parity.is_none_or(|t| o.parity_product() == t)
            });
        if !ok {
            failures.push(c.to_string());
        }
    }
    Check {
        name: "support structure",
        pass: failures.is_empty(),
        detail: if failures.is_empty() {
            "xxx/xyy/yxy/yyx: 4 outcomes at 1/4 with parity +1/-1/-1/-1; others uniform at 1/8".into()
        } else {
            format!("mismatch in {}", failures.join(", "))
        },
    }
}

fn check_search() -> Check {
    let s = search(&enumerate_assignments());
    let quantum = snap(mermin_value(&ghz_state()));
    Check {
        name: "non-contextual search",
        pass: s.assignments == 64 && s.satisfying == 0 && s.best_constraints == 3 && s.mermin_max == 2 && quantum == 4.0,
        detail: format!(
            "satisfying {}/{}, best {} of 4, classical max {}, quantum {}",
            s.satisfying, s.assignments, s.best_constraints, s.mermin_max, quantum
        ),
    }
}

fn check_example_sheet() -> Check {
    let ghz = ghz_state();
    let entries = example_sheet_entries();
    let ok = validate_sheet(&entries, &ghz).pass();
    let mut mutated = entries;
    mutated[Context::YYX.index()] = "R R H'".parse().expect("valid literal");
    let rejected = !validate_sheet(&mutated, &ghz).pass();
    Check {
        name: "example sheet",
        pass: ok && rejected,
        detail: format!(
            "worked example {}; with yyx -> R R H' {}",
            if ok { "valid" } else { "INVALID" },
            if rejected { "rejected" } else { "ACCEPTED" }
        ),
    }
}

pub fn verify(runs: u64, seed: u64, tolerance: f64, format: Format) -> ghz_core::Result<Output> {
    let ghz = ghz_state();
    let config = RunConfig::new(total_runs(runs, Policy::RoundRobin)?, seed, Policy::RoundRobin, tolerance)?;
    let tally = run_grandma(&config, &ghz);
    let report = compare(&tally, &ghz, &config);
    let worst_tv = report
        .contexts
        .iter()
        .filter_map(|r| r.stats.map(|s| s.tv))
        .fold(0.0, f64::max);
    let mermin = report.mermin;

    let checks = vec![
        check_expansion(),
        check_support(),
        check_search(),
        check_example_sheet(),
        Check {
            name: "simulation",
            pass: report.pass() && report.chisq_pass(),
            detail: format!("{} round-robin runs, seed {seed}: max tv {worst_tv:.6} (tolerance {tolerance})", config.runs()),
        },
        Check {
            name: "simulated mermin",
            pass: mermin.is_some_and(|m| m.value == 4.0 && m.stderr == 0.0),
            detail: match mermin {
                Some(m) => format!("{} +/- {}", m.value, m.stderr),
                None => "a Mermin context has no runs".into(),
            },
        },
    ];
    let pass = checks.iter().all(|c| c.pass);
    let text = match format {
        Format::JsonLike => {
            #[derive(Serialize)]
            struct Doc<'a> {
                pass: bool,
                checks: &'a [Check],
            }
            json(&Doc { pass, checks: &checks })
        }
        Format::Csv => {
            let mut out = csv_line(&["check", "pass", "detail"].map(String::from));
            for c in &checks {
                out += &csv_line(&[c.name.to_string(), c.pass.to_string(), format!("\"{}\"", c.detail.replace('"', "\"\""))]);
            }
            out
        }
        Format::Table => {
            let mut out = String::new();
            for c in &checks {
                let _ = writeln!(out, "{}  {:<22} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            let _ = writeln!(out, "overall: {}", if pass { "PASS" } else { "FAIL" });
            out
        }
    };
    Ok(Output { text, pass })
}
