//! Structured and delimited renderings of tallies, comparison reports and
//! sheets.
//!
//! Documents are plain serde structs, so key order is fixed by field order
//! and output is byte-stable for a given input.

use std::fmt::Write as _;

use serde::Serialize;

use crate::harness::{ComparisonReport, RunConfig, TallyTable};
use crate::polarization::{born_distribution, expand, Context, StateVector, SystemOutcome};
use crate::sampler::{SheetReport, SheetRow};

#[derive(Debug, Clone, Serialize)]
pub struct OutcomeCount {
    pub outcome: String,
    pub count: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextDocument {
    pub context: String,
    pub runs: u64,
    pub evaluated: bool,
    pub tv: Option<f64>,
    pub chisq: Option<f64>,
    pub df: Option<usize>,
    pub chisq_critical: Option<f64>,
    pub out_of_support: Option<u64>,
    pub pass: Option<bool>,
    pub outcomes: Vec<OutcomeCount>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MerminDocument {
    pub value: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationDocument {
    pub runs: u64,
    pub seed: u64,
    pub policy: String,
    pub tolerance: f64,
    pub pass: bool,
    pub chisq_pass: bool,
    pub contexts: Vec<ContextDocument>,
    pub mermin: Option<MerminDocument>,
}

impl SimulationDocument {
    pub fn new(
        config: &RunConfig,
        state: &StateVector,
        tally: &TallyTable,
        report: &ComparisonReport,
    ) -> SimulationDocument {
        let contexts = report
            .contexts
            .iter()
            .map(|record| {
                let dist = born_distribution(&expand(state, record.context));
                let outcomes = record
                    .context
                    .outcomes()
                    .zip(tally.counts(record.context))
                    .zip(dist.probabilities())
                    .map(|((o, &count), &expected)| OutcomeCount {
                        outcome: o.to_string(),
                        count,
                        expected,
                    })
                    .collect();
                let s = record.stats;
                ContextDocument {
                    context: record.context.to_string(),
                    runs: record.runs,
                    evaluated: s.is_some(),
                    tv: s.map(|s| s.tv),
                    chisq: s.map(|s| s.chisq),
                    df: s.map(|s| s.df),
                    chisq_critical: s.map(|s| s.chisq_critical),
                    out_of_support: s.map(|s| s.out_of_support),
                    pass: s.map(|s| s.pass),
                    outcomes,
                }
            })
            .collect();
        SimulationDocument {
            runs: config.runs(),
            seed: config.seed(),
            policy: config.policy().to_string(),
            tolerance: config.tolerance(),
            pass: report.pass(),
            chisq_pass: report.chisq_pass(),
            contexts,
            mermin: report.mermin.map(|m| MerminDocument { value: m.value, stderr: m.stderr }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document is serializable")
    }

    /// One row per (context, outcome); per-context figures repeat on each row
    /// and are empty for contexts that were not evaluated.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["context", "outcome", "count", "expected", "tv", "chisq", "df", "pass"])
            .expect("in-memory write");
        let opt = |v: Option<String>| v.unwrap_or_default();
        for c in &self.contexts {
            for o in &c.outcomes {
                w.write_record([
                    c.context.clone(),
                    o.outcome.clone(),
                    o.count.to_string(),
                    o.expected.to_string(),
                    opt(c.tv.map(|v| v.to_string())),
                    opt(c.chisq.map(|v| v.to_string())),
                    opt(c.df.map(|v| v.to_string())),
                    opt(c.pass.map(|v| v.to_string())),
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SheetRowDocument {
    pub context: String,
    pub outcome: String,
    pub probability: f64,
    pub valid: bool,
    pub reason: &'static str,
}

impl From<&SheetRow> for SheetRowDocument {
    fn from(row: &SheetRow) -> Self {
        SheetRowDocument {
            context: row.context.to_string(),
            outcome: row.outcome.to_string(),
            probability: row.probability,
            valid: row.pass(),
            reason: row.reason(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SheetDocument {
    pub seed: Option<u64>,
    pub valid: bool,
    pub rows: Vec<SheetRowDocument>,
}

impl SheetDocument {
    /// Rows follow the canonical context order.
    pub fn new(seed: Option<u64>, report: &SheetReport) -> SheetDocument {
        SheetDocument {
            seed,
            valid: report.pass(),
            rows: report.rows().iter().map(SheetRowDocument::from).collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("document is serializable")
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["context", "outcome", "probability", "valid", "reason"])
            .expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.context.clone(),
                r.outcome.clone(),
                r.probability.to_string(),
                r.valid.to_string(),
                r.reason.to_string(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    /// Two-column table: system measurement and pre-existing state, plus
    /// validation status.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} {:<24} {:>11}  status",
            "measurement", "pre-existing state", "probability"
        );
        for r in &self.rows {
            let outcome: SystemOutcome = r.outcome.parse().expect("rendered from a SystemOutcome");
            let status = if r.valid { "valid".to_string() } else { format!("INVALID ({})", r.reason) };
            let _ = writeln!(
                out,
                "{:<12} {:<24} {:>11.4}  {}",
                r.context,
                ket(&outcome),
                r.probability,
                status
            );
        }
        let _ = writeln!(out, "sheet: {}", if self.valid { "valid" } else { "INVALID" });
        out
    }
}

/// `|R>1|L>2|H'>3` rendering of a system polarization state.
pub fn ket(outcome: &SystemOutcome) -> String {
    outcome
        .outcomes()
        .iter()
        .enumerate()
        .map(|(i, o)| format!("|{o}>{}", i + 1))
        .collect()
}

/// Parses `context outcome...` lines (e.g. `yyx R L H'`) into sheet rows.
/// Blank lines and `#` comments are skipped.
pub fn parse_sheet_rows(text: &str) -> crate::Result<Vec<(Context, SystemOutcome)>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|line| {
            let (ctx, rest) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| crate::Error::InvalidSheet(format!("malformed row {line:?}")))?;
            Ok((ctx.parse()?, rest.parse()?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{compare, run_grandma, Policy};
    use crate::polarization::ghz_state;
    use crate::sampler::{example_sheet_entries, validate_sheet};

    #[test]
    fn simulation_json_keys_in_order() {
        let ghz = ghz_state();
        let config = RunConfig::new(80, 1, Policy::RoundRobin, 0.5).unwrap();
        let tally = run_grandma(&config, &ghz);
        let report = compare(&tally, &ghz, &config);
        let json = SimulationDocument::new(&config, &ghz, &tally, &report).to_json();
        let keys = ["\"runs\"", "\"seed\"", "\"policy\"", "\"tolerance\"", "\"pass\"", "\"contexts\"", "\"mermin\""];
        let mut last = 0;
        for k in keys {
            let pos = json.find(k).unwrap_or_else(|| panic!("missing {k}"));
            assert!(pos >= last, "{k} out of order");
            last = pos;
        }
        assert!(json.contains("\"context\": \"yyx\""));
        assert!(json.contains("\"outcome\": \"R L H'\""));
    }

    #[test]
    fn csv_has_row_per_outcome() {
        let ghz = ghz_state();
        let config = RunConfig::new(16, 2, Policy::FixedContext(Context::XXX), 0.5).unwrap();
        let tally = run_grandma(&config, &ghz);
        let report = compare(&tally, &ghz, &config);
        let csv = SimulationDocument::new(&config, &ghz, &tally, &report).to_csv();
        assert_eq!(csv.lines().count(), 1 + 64);
        assert!(csv.starts_with("context,outcome,count,expected,tv,chisq,df,pass\n"));
        // Contexts never chosen leave the per-context columns blank.
        let row = csv.lines().find(|l| l.starts_with("yyy,R R R,")).unwrap();
        assert!(row.ends_with(",,,,"), "{row}");
    }

    #[test]
    fn sheet_text_and_rows_round_trip() {
        let report = validate_sheet(&example_sheet_entries(), &ghz_state());
        let doc = SheetDocument::new(None, &report);
        let text = doc.to_text();
        assert_eq!(text.lines().count(), 10);
        assert!(text.contains("|R>1|L>2|H'>3"));
        assert!(text.ends_with("sheet: valid\n"));

        let listing: String = doc.rows.iter().map(|r| format!("{} {}\n", r.context, r.outcome)).collect();
        let rows = parse_sheet_rows(&listing).unwrap();
        let entries = crate::sampler::entries_from_rows(rows).unwrap();
        assert_eq!(entries, example_sheet_entries());
        assert!(parse_sheet_rows("yyx").is_err());
        assert!(parse_sheet_rows("zzz R L H'").is_err());
    }
}
