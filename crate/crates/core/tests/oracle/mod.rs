//! Dense basis-change oracle.
//!
//! Builds the full 8x8 change-of-basis matrix for a context as a Kronecker
//! product of literal 2x2 matrices and applies it to the GHZ amplitude
//! vector. Deliberately shares nothing with the library: contexts, outcomes
//! and parities are plain strings and integers here.

#![allow(dead_code)]

use num_complex::Complex64;

const S: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Rows are outcomes (first row = H' for x, R for y), columns are H, V.
/// Entry = <outcome|basis>.
fn single(setting: char) -> [[Complex64; 2]; 2] {
    match setting {
        'x' => [
            [Complex64::new(S, 0.0), Complex64::new(S, 0.0)],
            [Complex64::new(S, 0.0), Complex64::new(-S, 0.0)],
        ],
        'y' => [
            [Complex64::new(S, 0.0), Complex64::new(0.0, -S)],
            [Complex64::new(S, 0.0), Complex64::new(0.0, S)],
        ],
        other => panic!("bad setting {other}"),
    }
}

fn kron(a: &[Vec<Complex64>], b: &[[Complex64; 2]; 2]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    let mut out = vec![vec![Complex64::new(0.0, 0.0); 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..2 {
                for l in 0..2 {
                    out[2 * i + k][2 * j + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matrix(context: &str) -> Vec<Vec<Complex64>> {
    let mut m = vec![vec![Complex64::new(1.0, 0.0)]];
    for c in context.chars() {
        m = kron(&m, &single(c));
    }
    m
}

pub fn ghz() -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); 8];
    v[0] = Complex64::new(S, 0.0);
    v[7] = Complex64::new(S, 0.0);
    v
}

pub fn apply(m: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    m.iter()
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Outcome label for row `index` of `context`, e.g. "R L H'".
pub fn label(context: &str, index: usize) -> String {
    context
        .chars()
        .enumerate()
        .map(|(photon, s)| {
            let second = (index >> (2 - photon)) & 1 == 1;
            match (s, second) {
                ('x', false) => "H'",
                ('x', true) => "V'",
                ('y', false) => "R",
                ('y', true) => "L",
                _ => unreachable!(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Parity product of row `index`: -1 per second-listed outcome.
pub fn parity(index: usize) -> i32 {
    if index.count_ones().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub const CONTEXTS: [&str; 8] = ["xxx", "xxy", "xyx", "xyy", "yxx", "yxy", "yyx", "yyy"];

/// Probabilities of the GHZ state in `context`, by outcome index.
pub fn ghz_probabilities(context: &str) -> Vec<f64> {
    apply(&matrix(context), &ghz())
        .iter()
        .map(|a| a.norm_sqr())
        .collect()
}

pub fn ghz_expectation(context: &str) -> f64 {
    ghz_probabilities(context)
        .iter()
        .enumerate()
        .map(|(i, p)| p * parity(i) as f64)
        .sum()
}
