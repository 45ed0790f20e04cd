//! Exact quantum predictions for three polarized photons.
//!
//! Basis conventions, in terms of the horizontal/vertical basis:
//!
//! ```text
//! |H'> = (|H> + |V>)/√2      |R> = (|H> + i|V>)/√2
//! |V'> = (|H> - |V>)/√2      |L> = (|H> - i|V>)/√2
//! ```
//!
//! Amplitude vectors are indexed by H/V triples in binary order with H = 0
//! and photon 1 as the most significant bit (HHH, HHV, ..., VVV). Outcomes
//! within a context use the same scheme, with H'/R = 0 and V'/L = 1.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Expansion coefficient of a system polarization state.
pub type ComplexAmplitude = Complex64;

/// Tolerance for normalization checks on exact amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Probabilities at or below this are outside the Born support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Per-photon measurement: `X` is linear polarization at 45°, `Y` is circular.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Setting {
    X,
    Y,
}

impl Setting {
    pub const ALL: [Setting; 2] = [Setting::X, Setting::Y];

    /// The two outcomes of this measurement, in canonical order.
    pub fn outcomes(self) -> [Outcome; 2] {
        match self {
            Setting::X => [Outcome::Hp, Outcome::Vp],
            Setting::Y => [Outcome::R, Outcome::L],
        }
    }

    pub fn token(self) -> char {
        match self {
            Setting::X => 'x',
            Setting::Y => 'y',
        }
    }

    fn from_token(c: char) -> Option<Setting> {
        match c {
            'x' => Some(Setting::X),
            'y' => Some(Setting::Y),
            _ => None,
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

/// Single-photon outcome. `Hp` and `Vp` render as `H'` and `V'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Outcome {
    Hp,
    Vp,
    R,
    L,
}

impl Outcome {
    pub fn setting(self) -> Setting {
        match self {
            Outcome::Hp | Outcome::Vp => Setting::X,
            Outcome::R | Outcome::L => Setting::Y,
        }
    }

    /// Dichotomic value: H' and R are +1, V' and L are -1.
    pub fn parity(self) -> i8 {
        match self {
            Outcome::Hp | Outcome::R => 1,
            Outcome::Vp | Outcome::L => -1,
        }
    }

    /// Position within [`Setting::outcomes`].
    pub fn bit(self) -> usize {
        match self {
            Outcome::Hp | Outcome::R => 0,
            Outcome::Vp | Outcome::L => 1,
        }
    }

    /// Inverse of [`Outcome::parity`] for a given setting.
    pub fn from_parity(setting: Setting, parity: i8) -> Outcome {
        let [plus, minus] = setting.outcomes();
        if parity >= 0 {
            plus
        } else {
            minus
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Outcome::Hp => "H'",
            Outcome::Vp => "V'",
            Outcome::R => "R",
            Outcome::L => "L",
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Outcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "H'" => Ok(Outcome::Hp),
            "V'" => Ok(Outcome::Vp),
            "R" => Ok(Outcome::R),
            "L" => Ok(Outcome::L),
            other => Err(Error::InvalidOutcome(other.to_string())),
        }
    }
}

/// Horizontal/vertical basis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Hv {
    H,
    V,
}

/// A system measurement: one setting per photon.
///
/// The derived ordering is lexicographic with `X < Y`, which matches
/// [`Context::index`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context([Setting; 3]);

impl Context {
    /// All eight contexts in canonical order.
    pub const ALL: [Context; 8] = {
        use Setting::{X, Y};
        [
            Context([X, X, X]),
            Context([X, X, Y]),
            Context([X, Y, X]),
            Context([X, Y, Y]),
            Context([Y, X, X]),
            Context([Y, X, Y]),
            Context([Y, Y, X]),
            Context([Y, Y, Y]),
        ]
    };

    pub const XXX: Context = Context::ALL[0];
    pub const XXY: Context = Context::ALL[1];
    pub const XYX: Context = Context::ALL[2];
    pub const XYY: Context = Context::ALL[3];
    pub const YXX: Context = Context::ALL[4];
    pub const YXY: Context = Context::ALL[5];
    pub const YYX: Context = Context::ALL[6];
    pub const YYY: Context = Context::ALL[7];

    /// The contexts entering the Mermin combination, in the order
    /// `E(xxx) - E(xyy) - E(yxy) - E(yyx)`.
    pub const MERMIN: [Context; 4] = [Context::XXX, Context::XYY, Context::YXY, Context::YYX];

    pub const fn new(settings: [Setting; 3]) -> Context {
        Context(settings)
    }

    pub fn settings(&self) -> [Setting; 3] {
        self.0
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .fold(0, |acc, s| (acc << 1) | (*s == Setting::Y) as usize)
    }

    pub fn from_index(index: usize) -> Option<Context> {
        Context::ALL.get(index).copied()
    }

    /// The basis-consistent outcome at canonical position `index` (0..8).
    pub fn outcome(&self, index: usize) -> SystemOutcome {
        assert!(index < 8, "outcome index {index} out of range");
        let mut outcomes = [Outcome::Hp; 3];
        for (photon, setting) in self.0.iter().enumerate() {
            outcomes[photon] = setting.outcomes()[(index >> (2 - photon)) & 1];
        }
        SystemOutcome(outcomes)
    }

    /// All eight basis-consistent outcomes in canonical order.
    pub fn outcomes(&self) -> impl Iterator<Item = SystemOutcome> + '_ {
        (0..8).map(move |i| self.outcome(i))
    }

    pub fn is_consistent(&self, outcome: &SystemOutcome) -> bool {
        self.0
            .iter()
            .zip(outcome.0.iter())
            .all(|(s, o)| o.setting() == *s)
    }

    /// Canonical position of `outcome`, or `None` if it is not
    /// basis-consistent with this context.
    pub fn outcome_index(&self, outcome: &SystemOutcome) -> Option<usize> {
        self.is_consistent(outcome)
            .then(|| outcome.0.iter().fold(0, |acc, o| (acc << 1) | o.bit()))
    }

    pub fn is_mermin(&self) -> bool {
        Context::MERMIN.contains(self)
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Context {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let settings: Vec<Setting> = s.chars().filter_map(Setting::from_token).collect();
        if settings.len() != 3 || s.chars().count() != 3 {
            return Err(Error::InvalidContext(s.to_string()));
        }
        Ok(Context([settings[0], settings[1], settings[2]]))
    }
}

/// A system polarization state `|o1>|o2>|o3>`.
///
/// Any triple is representable; consistency with a context is checked where
/// the two are paired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SystemOutcome(pub [Outcome; 3]);

impl SystemOutcome {
    pub fn new(o1: Outcome, o2: Outcome, o3: Outcome) -> SystemOutcome {
        SystemOutcome([o1, o2, o3])
    }

    pub fn outcomes(&self) -> [Outcome; 3] {
        self.0
    }

    pub fn parity_product(&self) -> i8 {
        self.0.iter().map(|o| o.parity()).product()
    }

    /// Occurrences of `outcome` among the three photons.
    pub fn count(&self, outcome: Outcome) -> usize {
        self.0.iter().filter(|o| **o == outcome).count()
    }
}

impl fmt::Display for SystemOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.0[0], self.0[1], self.0[2])
    }
}

impl FromStr for SystemOutcome {
    type Err = Error;

    /// Accepts `"R L H'"` as well as the compact `"RLH'"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidOutcome(s.to_string());
        let mut outcomes = Vec::with_capacity(3);
        let mut chars = s.chars().filter(|c| !c.is_whitespace()).peekable();
        while let Some(c) = chars.next() {
            let token = match c {
                'H' | 'V' => {
                    if chars.next() != Some('\'') {
                        return Err(bad());
                    }
                    if c == 'H' {
                        Outcome::Hp
                    } else {
                        Outcome::Vp
                    }
                }
                'R' => Outcome::R,
                'L' => Outcome::L,
                _ => return Err(bad()),
            };
            outcomes.push(token);
        }
        match outcomes[..] {
            [a, b, c] => Ok(SystemOutcome([a, b, c])),
            _ => Err(bad()),
        }
    }
}

/// Normalized three-photon pure state in the H/V product basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateVector {
    amplitudes: [ComplexAmplitude; 8],
}

impl StateVector {
    /// Rejects non-finite or unnormalized amplitudes. No silent renormalization.
    pub fn new(amplitudes: [ComplexAmplitude; 8]) -> Result<StateVector> {
        if let Some(index) = amplitudes
            .iter()
            .position(|a| !(a.re.is_finite() && a.im.is_finite()))
        {
            return Err(Error::NonFinite { index });
        }
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Unnormalized { norm_sqr });
        }
        Ok(StateVector { amplitudes })
    }

    /// The product state `|hv1>|hv2>|hv3>`.
    pub fn product(hv: [Hv; 3]) -> StateVector {
        let mut amplitudes = [Complex64::new(0.0, 0.0); 8];
        amplitudes[hv_index(hv)] = Complex64::new(1.0, 0.0);
        StateVector { amplitudes }
    }

    pub fn amplitudes(&self) -> &[ComplexAmplitude; 8] {
        &self.amplitudes
    }

    pub fn amplitude(&self, hv: [Hv; 3]) -> ComplexAmplitude {
        self.amplitudes[hv_index(hv)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

fn hv_index(hv: [Hv; 3]) -> usize {
    hv.iter().fold(0, |acc, h| (acc << 1) | (*h == Hv::V) as usize)
}

/// `(|HHH> + |VVV>)/√2`.
pub fn ghz_state() -> StateVector {
    let mut amplitudes = [Complex64::new(0.0, 0.0); 8];
    amplitudes[0] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amplitudes[7] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    StateVector { amplitudes }
}

/// `<outcome|hv>` under the module's basis conventions.
pub fn single_photon_amplitude(setting: Setting, outcome: Outcome, hv: Hv) -> Result<ComplexAmplitude> {
    if outcome.setting() != setting {
        return Err(Error::InconsistentOutcome { setting, outcome });
    }
    let s = FRAC_1_SQRT_2;
    Ok(match (outcome, hv) {
        (_, Hv::H) => Complex64::new(s, 0.0),
        (Outcome::Hp, Hv::V) => Complex64::new(s, 0.0),
        (Outcome::Vp, Hv::V) => Complex64::new(-s, 0.0),
        (Outcome::R, Hv::V) => Complex64::new(0.0, -s),
        (Outcome::L, Hv::V) => Complex64::new(0.0, s),
    })
}

/// 2x2 change-of-basis matrix for one photon: rows are outcomes in canonical
/// order, columns are H, V.
pub fn change_of_basis(setting: Setting) -> [[ComplexAmplitude; 2]; 2] {
    setting.outcomes().map(|o| {
        [Hv::H, Hv::V].map(|hv| single_photon_amplitude(setting, o, hv).expect("consistent by construction"))
    })
}

/// Expansion coefficients of a state in the product basis of one context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionTable {
    context: Context,
    amplitudes: [ComplexAmplitude; 8],
}

impl ExpansionTable {
    pub fn context(&self) -> Context {
        self.context
    }

    /// Coefficients in canonical outcome order.
    pub fn amplitudes(&self) -> &[ComplexAmplitude; 8] {
        &self.amplitudes
    }

    /// `None` if `outcome` is not basis-consistent with the context.
    pub fn amplitude(&self, outcome: &SystemOutcome) -> Option<ComplexAmplitude> {
        self.context
            .outcome_index(outcome)
            .map(|i| self.amplitudes[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (SystemOutcome, ComplexAmplitude)> + '_ {
        self.context.outcomes().zip(self.amplitudes.iter().copied())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Rewrites `state` in the basis of `context`.
///
/// Each coefficient is `Σ_hv state[hv] · Π_i <o_i|hv_i>`.
pub fn expand(state: &StateVector, context: Context) -> ExpansionTable {
    let factors = context.settings().map(change_of_basis);
    let mut amplitudes = [Complex64::new(0.0, 0.0); 8];
    for (out, slot) in amplitudes.iter_mut().enumerate() {
        for (basis, amp) in state.amplitudes.iter().enumerate() {
            let mut term = *amp;
            for (photon, factor) in factors.iter().enumerate() {
                let shift = 2 - photon;
                term *= factor[(out >> shift) & 1][(basis >> shift) & 1];
            }
            *slot += term;
        }
    }
    let table = ExpansionTable { context, amplitudes };
    debug_assert!((table.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE);
    table
}

/// Born probabilities over the eight outcomes of one context.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BornDistribution {
    context: Context,
    probabilities: [f64; 8],
}

impl BornDistribution {
    pub fn context(&self) -> Context {
        self.context
    }

    /// Probabilities in canonical outcome order.
    pub fn probabilities(&self) -> &[f64; 8] {
        &self.probabilities
    }

    /// Zero for outcomes that are not basis-consistent with the context.
    pub fn probability(&self, outcome: &SystemOutcome) -> f64 {
        self.context
            .outcome_index(outcome)
            .map_or(0.0, |i| self.probabilities[i])
    }

    pub fn is_supported(&self, index: usize) -> bool {
        self.probabilities[index] > SUPPORT_THRESHOLD
    }

    /// Outcomes with nonzero probability, in canonical order.
    pub fn support(&self) -> impl Iterator<Item = (SystemOutcome, f64)> + '_ {
        (0..8)
            .filter(|i| self.is_supported(*i))
            .map(|i| (self.context.outcome(i), self.probabilities[i]))
    }

    pub fn support_size(&self) -> usize {
        (0..8).filter(|i| self.is_supported(*i)).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (SystemOutcome, f64)> + '_ {
        self.context.outcomes().zip(self.probabilities.iter().copied())
    }
}

pub fn born_distribution(table: &ExpansionTable) -> BornDistribution {
    BornDistribution {
        context: table.context,
        probabilities: table.amplitudes.map(|a| a.norm_sqr()),
    }
}

/// Expected parity product of `context` under the Born rule.
pub fn context_expectation(state: &StateVector, context: Context) -> f64 {
    born_distribution(&expand(state, context))
        .iter()
        .map(|(o, p)| p * f64::from(o.parity_product()))
        .sum()
}

/// `E(xxx) - E(xyy) - E(yxy) - E(yyx)`.
pub fn mermin_value(state: &StateVector) -> f64 {
    mermin_combination(Context::MERMIN.map(|c| context_expectation(state, c)))
}

/// Combines expectations given in [`Context::MERMIN`] order.
pub fn mermin_combination(e: [f64; 4]) -> f64 {
    e[0] - e[1] - e[2] - e[3]
}
