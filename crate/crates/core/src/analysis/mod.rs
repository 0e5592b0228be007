//! Closed-form variances, an exact small-instance oracle, the exact-size
//! construction for independent schemes, and the priority-vs-threshold
//! comparator.

mod conjecture;
mod exactify;
mod oracle;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use conjecture::{conjecture_compare, ConjectureComparison, PriorityVarianceMethod};
pub use exactify::{draw_exact, exactify, inclusion_probabilities, ExactKEvent, InclusionScheme};
pub use oracle::{
    exact_oracle, OracleMethod, OracleResult, Statistic, ORACLE_MAX_ITEMS, QUADRATURE_DEGREE,
};

/// Which estimator a with-replacement sample uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WrMode {
    /// `w / p` if present, with `p = 1 - (1 - w/W)^k`.
    Presence,
    /// `(slots holding the item) * W / k`.
    Count,
}

/// The sampling schemes under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum SchemeTag {
    /// Priority sampling.
    Pri,
    /// Threshold sampling with expected size `k`.
    Thr,
    /// Uniform sampling without replacement.
    Uwr,
    /// Weighted sampling with replacement.
    Wwr(WrMode),
}

impl SchemeTag {
    pub const ALL: [SchemeTag; 5] = [
        SchemeTag::Pri,
        SchemeTag::Thr,
        SchemeTag::Uwr,
        SchemeTag::Wwr(WrMode::Presence),
        SchemeTag::Wwr(WrMode::Count),
    ];

    /// Schemes whose sample never repeats an item.
    pub fn without_replacement(self) -> bool {
        !matches!(self, SchemeTag::Wwr(_))
    }
}

impl fmt::Display for SchemeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeTag::Pri => "pri",
            SchemeTag::Thr => "thr",
            SchemeTag::Uwr => "uwr",
            SchemeTag::Wwr(WrMode::Presence) => "wwr",
            SchemeTag::Wwr(WrMode::Count) => "wwr-count",
        })
    }
}

impl FromStr for SchemeTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pri" => Ok(SchemeTag::Pri),
            "thr" => Ok(SchemeTag::Thr),
            "uwr" => Ok(SchemeTag::Uwr),
            "wwr" | "wwr-presence" => Ok(SchemeTag::Wwr(WrMode::Presence)),
            "wwr-count" => Ok(SchemeTag::Wwr(WrMode::Count)),
            other => Err(Error::InvalidArgument(format!("unknown scheme {other:?}"))),
        }
    }
}

impl From<SchemeTag> for String {
    fn from(tag: SchemeTag) -> String {
        tag.to_string()
    }
}

impl TryFrom<String> for SchemeTag {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A variance that may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Variance {
    Finite(f64),
    Infinite,
}

impl Variance {
    pub fn is_finite(self) -> bool {
        matches!(self, Variance::Finite(_))
    }

    /// The value, with `Infinite` mapped to `f64::INFINITY`.
    pub fn value(self) -> f64 {
        match self {
            Variance::Finite(v) => v,
            Variance::Infinite => f64::INFINITY,
        }
    }
}

/// Per-item variance of the weight estimate when all `n` weights are 1.
pub fn unit_variance(scheme: SchemeTag, n: usize, k: usize) -> Result<Variance> {
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "unit variance needs 1 <= k <= n, got n={n}, k={k}"
        )));
    }
    let (nf, kf) = (n as f64, k as f64);
    let v = match scheme {
        SchemeTag::Uwr | SchemeTag::Thr => (nf - kf) / kf,
        SchemeTag::Pri => {
            if n == k {
                0.0
            } else if k == 1 {
                return Ok(Variance::Infinite);
            } else {
                (nf - kf) / (kf - 1.0)
            }
        }
        SchemeTag::Wwr(WrMode::Presence) => {
            let miss = (1.0 - 1.0 / nf).powi(k as i32);
            miss / (1.0 - miss)
        }
        // binomial slot count: (W/k)^2 * k * p (1 - p) with W = n, p = 1/n
        SchemeTag::Wwr(WrMode::Count) => (nf - 1.0) / kf,
    };
    Ok(Variance::Finite(v))
}

/// `v(w, tau) = w * max(0, tau - w)`: the variance of a single item's
/// estimate under a fixed threshold `tau`.
#[inline]
pub fn fixed_thr_item_variance(w: f64, tau: f64) -> f64 {
    w * (tau - w).max(0.0)
}

/// Probability that the lighter of two items outranks the heavier one:
/// `1 / (2r)` with `r = w_large / w_small`.
pub fn pair_inversion_prob(w_small: f64, w_large: f64) -> Result<f64> {
    if !(w_small > 0.0 && w_small <= w_large && w_large.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < w_small <= w_large, got {w_small}, {w_large}"
        )));
    }
    Ok(1.0 / (2.0 * (w_large / w_small)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(v: Variance) -> f64 {
        match v {
            Variance::Finite(x) => x,
            Variance::Infinite => panic!("expected finite"),
        }
    }

    #[test]
    fn unit_closed_forms() {
        assert_eq!(finite(unit_variance(SchemeTag::Uwr, 20, 5).unwrap()), 3.0);
        assert_eq!(finite(unit_variance(SchemeTag::Thr, 20, 5).unwrap()), 3.0);
        assert_eq!(finite(unit_variance(SchemeTag::Pri, 4, 2).unwrap()), 2.0);
        assert_eq!(finite(unit_variance(SchemeTag::Pri, 20, 5).unwrap()), 3.75);
        let wr = finite(unit_variance(SchemeTag::Wwr(WrMode::Presence), 20, 5).unwrap());
        assert!((wr - 3.4205).abs() < 5e-5, "{wr}");
        let wr2 = finite(unit_variance(SchemeTag::Wwr(WrMode::Presence), 2, 1).unwrap());
        assert!((wr2 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn no_replacement_schemes_vanish_at_n_equals_k() {
        for scheme in [SchemeTag::Pri, SchemeTag::Thr, SchemeTag::Uwr] {
            assert_eq!(unit_variance(scheme, 7, 7).unwrap(), Variance::Finite(0.0));
        }
        assert!(finite(unit_variance(SchemeTag::Wwr(WrMode::Presence), 7, 7).unwrap()) > 0.0);
    }

    #[test]
    fn single_priority_sample_is_infinite() {
        assert_eq!(
            unit_variance(SchemeTag::Pri, 5, 1).unwrap(),
            Variance::Infinite
        );
        assert!(unit_variance(SchemeTag::Pri, 5, 0).is_err());
        assert!(unit_variance(SchemeTag::Pri, 5, 6).is_err());
    }

    #[test]
    fn fixed_threshold_variance() {
        assert_eq!(fixed_thr_item_variance(1.0, 4.0), 3.0);
        assert_eq!(fixed_thr_item_variance(5.0, 3.0), 0.0);
        let (n, k) = (20.0, 5.0);
        assert_eq!(fixed_thr_item_variance(1.0, n / k), (n - k) / k);
    }

    #[test]
    fn inversion_probability() {
        assert_eq!(pair_inversion_prob(1.0, 1.0).unwrap(), 0.5);
        assert!((pair_inversion_prob(1.0, 3.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(pair_inversion_prob(3.0, 1.0).is_err());
    }

    #[test]
    fn scheme_tag_round_trips_through_strings() {
        for tag in SchemeTag::ALL {
            assert_eq!(tag.to_string().parse::<SchemeTag>().unwrap(), tag);
        }
        assert!("nope".parse::<SchemeTag>().is_err());
    }
}
