//! Pre-existing-state sampler.
//!
//! Before any measurement is chosen, a run holds one system polarization
//! state for each of the eight possible contexts, each drawn from that
//! context's Born distribution. Measuring a context reads back its entry and
//! touches nothing else.
//!
//! The eight entries are drawn independently, in canonical context order, by
//! inverse-transform sampling over the outcomes in canonical order. Only the
//! per-context marginals are observable, so the coupling between entries is
//! a free choice.

use crate::error::{Error, Result};
use crate::polarization::{
    born_distribution, expand, BornDistribution, Context, StateVector, SystemOutcome,
};
use crate::rng::RandomStream;

/// One pre-existing system polarization state per context.
///
/// Only constructible from entries that pass [`validate_sheet`] against the
/// generating state, or from a [`SheetSampler`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Sheet {
    entries: [SystemOutcome; 8],
}

impl Sheet {
    /// `entries` is indexed by [`Context::index`].
    pub fn new(entries: [SystemOutcome; 8], state: &StateVector) -> Result<Sheet> {
        let report = validate_sheet(&entries, state);
        if !report.pass() {
            let failed: Vec<String> = report
                .rows()
                .iter()
                .filter(|r| !r.pass())
                .map(|r| format!("{} -> {} ({})", r.context, r.outcome, r.reason()))
                .collect();
            return Err(Error::InvalidSheet(failed.join(", ")));
        }
        Ok(Sheet { entries })
    }

    /// Reads the pre-existing state for `chosen`. No other entry is touched.
    pub fn reveal(&self, chosen: Context) -> SystemOutcome {
        self.entries[chosen.index()]
    }

    pub fn entries(&self) -> &[SystemOutcome; 8] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (Context, SystemOutcome)> + '_ {
        Context::ALL.into_iter().zip(self.entries.iter().copied())
    }
}

/// Free-function form of [`Sheet::reveal`].
pub fn reveal(sheet: &Sheet, chosen: Context) -> SystemOutcome {
    sheet.reveal(chosen)
}

/// Collects `(context, outcome)` rows into sheet order. Every context must
/// appear exactly once.
pub fn entries_from_rows(
    rows: impl IntoIterator<Item = (Context, SystemOutcome)>,
) -> Result<[SystemOutcome; 8]> {
    let mut slots: [Option<SystemOutcome>; 8] = [None; 8];
    for (context, outcome) in rows {
        let slot = &mut slots[context.index()];
        if slot.is_some() {
            return Err(Error::InvalidSheet(format!("context {context} listed twice")));
        }
        *slot = Some(outcome);
    }
    let mut entries = [SystemOutcome::new(crate::Outcome::Hp, crate::Outcome::Hp, crate::Outcome::Hp); 8];
    for (i, slot) in slots.iter().enumerate() {
        entries[i] = slot.ok_or_else(|| {
            Error::InvalidSheet(format!("context {} missing", Context::ALL[i]))
        })?;
    }
    Ok(entries)
}

/// Worked example of a sheet for one hypothetical GHZ run.
///
/// The source listing labels two rows `xyx`. The row `V' H' L` has an x
/// outcome in photon 2's slot, so it is read here as `xxy`; `H' L V'` stays
/// `xyx`.
pub fn example_sheet_entries() -> [SystemOutcome; 8] {
    let rows = [
        ("yyx", "R L H'"),
        ("yyy", "L L R"),
        ("yxx", "L V' H'"),
        ("yxy", "L H' R"),
        ("xyy", "H' R L"),
        ("xxx", "V' V' H'"),
        ("xxy", "V' H' L"),
        ("xyx", "H' L V'"),
    ];
    entries_from_rows(
        rows.iter()
            .map(|(c, o)| (c.parse().expect("valid context"), o.parse().expect("valid outcome"))),
    )
    .expect("each context once")
}

/// Validation result for one sheet entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SheetRow {
    pub context: Context,
    pub outcome: SystemOutcome,
    pub consistent: bool,
    /// Born probability of the entry; zero when inconsistent.
    pub probability: f64,
}

impl SheetRow {
    pub fn supported(&self) -> bool {
        self.probability > crate::polarization::SUPPORT_THRESHOLD
    }

    pub fn pass(&self) -> bool {
        self.consistent && self.supported()
    }

    pub fn reason(&self) -> &'static str {
        if !self.consistent {
            "basis-inconsistent"
        } else if !self.supported() {
            "zero Born probability"
        } else {
            "ok"
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SheetReport {
    rows: [SheetRow; 8],
}

impl SheetReport {
    pub fn rows(&self) -> &[SheetRow; 8] {
        &self.rows
    }

    pub fn pass(&self) -> bool {
        self.rows.iter().all(SheetRow::pass)
    }
}

/// Checks each entry for basis consistency and nonzero Born probability.
pub fn validate_sheet(entries: &[SystemOutcome; 8], state: &StateVector) -> SheetReport {
    let rows = Context::ALL.map(|context| {
        let outcome = entries[context.index()];
        let consistent = context.is_consistent(&outcome);
        let probability = if consistent {
            born_distribution(&expand(state, context)).probability(&outcome)
        } else {
            0.0
        };
        SheetRow { context, outcome, consistent, probability }
    });
    SheetReport { rows }
}

/// Per-context cumulative tables over the Born support of one state.
#[derive(Debug, Clone)]
struct SupportTable {
    outcomes: Vec<SystemOutcome>,
    cumulative: Vec<f64>,
}

impl SupportTable {
    fn new(dist: &BornDistribution) -> SupportTable {
        let mut outcomes = Vec::with_capacity(8);
        let mut cumulative = Vec::with_capacity(8);
        let mut acc = 0.0;
        for (outcome, p) in dist.support() {
            acc += p;
            outcomes.push(outcome);
            cumulative.push(acc);
        }
        SupportTable { outcomes, cumulative }
    }

    fn draw(&self, rng: &mut RandomStream) -> SystemOutcome {
        let total = *self.cumulative.last().expect("normalized state has support");
        let u = rng.next_f64() * total;
        let pos = self.cumulative.iter().position(|c| u < *c);
        self.outcomes[pos.unwrap_or(self.outcomes.len() - 1)]
    }
}

/// Draws sheets for a fixed state. Distributions are computed once.
#[derive(Debug, Clone)]
pub struct SheetSampler {
    tables: [SupportTable; 8],
    distributions: [BornDistribution; 8],
}

impl SheetSampler {
    pub fn new(state: &StateVector) -> SheetSampler {
        let distributions = Context::ALL.map(|c| born_distribution(&expand(state, c)));
        let tables = distributions.each_ref().map(SupportTable::new);
        SheetSampler { tables, distributions }
    }

    pub fn distribution(&self, context: Context) -> &BornDistribution {
        &self.distributions[context.index()]
    }

    /// Consumes exactly eight draws from `rng`, one per context in
    /// canonical order.
    pub fn sample(&self, rng: &mut RandomStream) -> Sheet {
        Sheet { entries: self.tables.each_ref().map(|t| t.draw(rng)) }
    }
}

pub fn sample_sheet(state: &StateVector, rng: &mut RandomStream) -> Sheet {
    SheetSampler::new(state).sample(rng)
}
