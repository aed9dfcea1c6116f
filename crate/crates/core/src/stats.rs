//! Integer histograms and the chi-squared goodness-of-fit machinery.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts per integer value over `[lo, hi]`, plus values that fell outside.
///
/// Histograms form a commutative monoid under [`merge`]; the empty histogram
/// over the same support is the identity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Histogram {
    pub lo: i64,
    pub hi: i64,
    pub counts: Vec<u64>,
    pub underflow: u64,
    pub overflow: u64,
    /// Sum of every recorded value, in or out of support.
    pub value_sum: i64,
}

impl Histogram {
    pub fn new(lo: i64, hi: i64) -> Self {
        assert!(hi >= lo, "histogram support [{lo}, {hi}] is empty");
        Self {
            lo,
            hi,
            counts: vec![0; (hi - lo + 1) as usize],
            underflow: 0,
            overflow: 0,
            value_sum: 0,
        }
    }

    pub fn record(&mut self, value: i64) {
        self.value_sum += value;
        if value < self.lo {
            self.underflow += 1;
        } else if value > self.hi {
            self.overflow += 1;
        } else {
            self.counts[(value - self.lo) as usize] += 1;
        }
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    /// Every recorded value, including under- and overflow.
    pub fn total(&self) -> u64 {
        self.in_support() + self.underflow + self.overflow
    }

    pub fn in_support(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Mean of all recorded values; `None` when empty.
    pub fn mean(&self) -> Option<f64> {
        let n = self.total();
        (n > 0).then(|| self.value_sum as f64 / n as f64)
    }

    /// Relative frequencies of the in-support bins.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.in_support();
        self.counts
            .iter()
            .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
            .collect()
    }

    /// `bin,observed,expected` rows with expected counts `N·p`, N the
    /// in-support total.
    pub fn to_csv(&self, expected_probs: &[f64]) -> String {
        let n = self.in_support() as f64;
        let mut out = String::from("bin,observed,expected\n");
        for (i, &c) in self.counts.iter().enumerate() {
            let e = expected_probs.get(i).copied().unwrap_or(0.0) * n;
            out.push_str(&format!("{},{},{}\n", self.lo + i as i64, c, e));
        }
        out
    }
}

/// Bin-wise sum of two histograms over the same support.
pub fn merge(a: &Histogram, b: &Histogram) -> Result<Histogram> {
    if a.lo != b.lo || a.hi != b.hi {
        return Err(Error::SupportMismatch(a.lo, a.hi, b.lo, b.hi));
    }
    Ok(Histogram {
        lo: a.lo,
        hi: a.hi,
        counts: a.counts.iter().zip(&b.counts).map(|(x, y)| x + y).collect(),
        underflow: a.underflow + b.underflow,
        overflow: a.overflow + b.overflow,
        value_sum: a.value_sum + b.value_sum,
    })
}

/// Lower and upper 5% quantiles of the chi-squared distribution for 1..=30
/// degrees of freedom: `(x with upper-tail mass 0.95, x with upper-tail mass 0.05)`.
const CRITICAL: [(f64, f64); 30] = [
    (0.004, 3.841),
    (0.103, 5.991),
    (0.352, 7.815),
    (0.711, 9.488),
    (1.145, 11.070),
    (1.635, 12.592),
    (2.167, 14.067),
    (2.733, 15.507),
    (3.325, 16.919),
    (3.940, 18.307),
    (4.575, 19.675),
    (5.226, 21.026),
    (5.892, 22.362),
    (6.571, 23.685),
    (7.261, 24.996),
    (7.962, 26.296),
    (8.672, 27.587),
    (9.390, 28.869),
    (10.117, 30.144),
    (10.851, 31.410),
    (11.591, 32.671),
    (12.338, 33.924),
    (13.091, 35.172),
    (13.848, 36.415),
    (14.611, 37.652),
    (15.379, 38.885),
    (16.151, 40.113),
    (16.928, 41.337),
    (17.708, 42.557),
    (18.493, 43.773),
];

/// Tabulated chi-squared quantile: the `x` whose upper-tail mass is
/// `upper_tail_mass` (0.95 or 0.05).
pub fn critical_value(dof: usize, upper_tail_mass: f64) -> Result<f64> {
    if !(1..=CRITICAL.len()).contains(&dof) {
        return Err(Error::DofOutOfRange(dof));
    }
    let (lower, upper) = CRITICAL[dof - 1];
    if upper_tail_mass == 0.95 {
        Ok(lower)
    } else if upper_tail_mass == 0.05 {
        Ok(upper)
    } else {
        Err(Error::UnsupportedTail(upper_tail_mass))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquaredReport {
    pub statistic: f64,
    pub dof: usize,
    /// Quantile with upper-tail mass 0.95.
    pub critical_lower_0_95: f64,
    /// Quantile with upper-tail mass 0.05.
    pub critical_upper_0_05: f64,
    /// `statistic < critical_lower_0_95`: the strict near-perfect-fit reading.
    pub pass_paper_convention: bool,
    /// `statistic < critical_upper_0_05`: the usual 5% significance test.
    pub pass_standard: bool,
    /// Observations the statistic was computed from.
    pub observed_total: f64,
}

/// Default pooling threshold as a fraction of the total.
pub const DEFAULT_E_MIN_FRACTION: f64 = 1e-9;

/// Goodness of fit of `observed` against `expected_probs`, with expected
/// counts `N·p_i` where `N` is the in-support total. Bins whose expected
/// count is at most `1e-9·N` are pooled into a neighbour.
pub fn chi_squared(observed: &Histogram, expected_probs: &[f64]) -> Result<ChiSquaredReport> {
    let obs: Vec<f64> = observed.counts.iter().map(|&c| c as f64).collect();
    chi_squared_weights(&obs, expected_probs, DEFAULT_E_MIN_FRACTION)
}

/// Same test over real-valued observations (e.g. run-averaged counts).
pub fn chi_squared_weights(
    observed: &[f64],
    expected_probs: &[f64],
    e_min_fraction: f64,
) -> Result<ChiSquaredReport> {
    if observed.len() != expected_probs.len() {
        return Err(Error::BinMismatch {
            expected: expected_probs.len(),
            got: observed.len(),
        });
    }
    let psum: f64 = expected_probs.iter().sum();
    if (psum - 1.0).abs() > 1e-9 {
        return Err(Error::ProbabilitiesNotNormalized(psum));
    }
    let n: f64 = observed.iter().sum();
    if n <= 0.0 {
        return Err(Error::ZeroTotal);
    }
    let e_min = e_min_fraction * n;

    // Pool forward: a thin bin carries its mass into the next one; a thin
    // trailing group is folded back into the last emitted bin.
    let mut pooled: Vec<(f64, f64)> = Vec::with_capacity(observed.len());
    let mut carry = (0.0, 0.0);
    for (&o, &p) in observed.iter().zip(expected_probs) {
        carry.0 += o;
        carry.1 += n * p;
        if carry.1 > e_min {
            pooled.push(carry);
            carry = (0.0, 0.0);
        }
    }
    if carry.0 != 0.0 || carry.1 != 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += carry.0;
                last.1 += carry.1;
            }
            None => pooled.push(carry),
        }
    }

    let statistic: f64 = pooled
        .iter()
        .filter(|(_, e)| *e > 0.0)
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = pooled.len().saturating_sub(1);
    let critical_lower_0_95 = critical_value(dof, 0.95)?;
    let critical_upper_0_05 = critical_value(dof, 0.05)?;
    Ok(ChiSquaredReport {
        statistic,
        dof,
        critical_lower_0_95,
        critical_upper_0_05,
        pass_paper_convention: statistic < critical_lower_0_95,
        pass_standard: statistic < critical_upper_0_05,
        observed_total: n,
    })
}
