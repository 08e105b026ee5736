use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CellError, ErrorCode, ObservationSeries, Timestamp};

/// How two series are paired onto a common timestamp sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentPolicy {
    /// Keep only timestamps present in both inputs.
    #[default]
    Intersect,
    /// Union of timestamps; gaps take the latest earlier observation. A
    /// timestamp before a side's first observation is dropped.
    UnionFillForward,
    /// Union of timestamps; gaps are 0.0.
    UnionFillZero,
    /// Timestamps must match exactly, otherwise `#ALIGN`.
    Strict,
}

impl AlignmentPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            AlignmentPolicy::Intersect => "intersect",
            AlignmentPolicy::UnionFillForward => "union-fill-forward",
            AlignmentPolicy::UnionFillZero => "union-fill-zero",
            AlignmentPolicy::Strict => "strict",
        }
    }
}

impl fmt::Display for AlignmentPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlignmentPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            AlignmentPolicy::Intersect,
            AlignmentPolicy::UnionFillForward,
            AlignmentPolicy::UnionFillZero,
            AlignmentPolicy::Strict,
        ]
        .into_iter()
        .find(|p| p.as_str() == s)
        .ok_or_else(|| format!("unknown alignment policy {s:?}"))
    }
}

/// Pairs `a` and `b` onto one timestamp sequence. Both outputs share the
/// same timestamps.
pub fn align(
    a: &ObservationSeries,
    b: &ObservationSeries,
    policy: AlignmentPolicy,
) -> Result<(ObservationSeries, ObservationSeries), CellError> {
    if a.times() == b.times() {
        return Ok((a.clone(), b.clone()));
    }
    match policy {
        AlignmentPolicy::Strict => Err(CellError::new(
            ErrorCode::Align,
            format!(
                "strict alignment requires identical timestamps ({} vs {} points)",
                a.len(),
                b.len()
            ),
        )),
        AlignmentPolicy::Intersect => Ok(intersect(a, b)),
        AlignmentPolicy::UnionFillZero => Ok(union_with(a, b, |_, _| Some(0.0), |_, _| Some(0.0))),
        AlignmentPolicy::UnionFillForward => Ok(union_with(a, b, |last, _| last, |last, _| last)),
    }
}

fn intersect(a: &ObservationSeries, b: &ObservationSeries) -> (ObservationSeries, ObservationSeries) {
    let (at, av) = (a.times(), a.values());
    let (bt, bv) = (b.times(), b.values());
    let cap = at.len().min(bt.len());
    let mut times = Vec::with_capacity(cap);
    let mut left = Vec::with_capacity(cap);
    let mut right = Vec::with_capacity(cap);
    let (mut i, mut j) = (0, 0);
    while i < at.len() && j < bt.len() {
        match at[i].cmp(&bt[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                times.push(at[i]);
                left.push(av[i]);
                right.push(bv[j]);
                i += 1;
                j += 1;
            }
        }
    }
    (
        ObservationSeries::from_columns_unchecked(times.clone(), left),
        ObservationSeries::from_columns_unchecked(times, right),
    )
}

/// Walks the union of timestamps. When a side has no observation at `t`,
/// its fill function receives that side's latest earlier value (if any) and
/// decides the filled value; `None` drops `t` from the output.
fn union_with(
    a: &ObservationSeries,
    b: &ObservationSeries,
    fill_a: impl Fn(Option<f64>, Timestamp) -> Option<f64>,
    fill_b: impl Fn(Option<f64>, Timestamp) -> Option<f64>,
) -> (ObservationSeries, ObservationSeries) {
    let (at, av) = (a.times(), a.values());
    let (bt, bv) = (b.times(), b.values());
    let cap = at.len() + bt.len();
    let mut times = Vec::with_capacity(cap);
    let mut left = Vec::with_capacity(cap);
    let mut right = Vec::with_capacity(cap);
    let (mut i, mut j) = (0, 0);
    let (mut last_a, mut last_b) = (None, None);
    while i < at.len() || j < bt.len() {
        let t = match (at.get(i), bt.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        let va = if at.get(i) == Some(&t) {
            last_a = Some(av[i]);
            i += 1;
            last_a
        } else {
            fill_a(last_a, t)
        };
        let vb = if bt.get(j) == Some(&t) {
            last_b = Some(bv[j]);
            j += 1;
            last_b
        } else {
            fill_b(last_b, t)
        };
        if let (Some(va), Some(vb)) = (va, vb) {
            times.push(t);
            left.push(va);
            right.push(vb);
        }
    }
    (
        ObservationSeries::from_columns_unchecked(times.clone(), left),
        ObservationSeries::from_columns_unchecked(times, right),
    )
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use proptest::prelude::*;

    use super::*;

    fn s(points: &[(i64, f64)]) -> ObservationSeries {
        ObservationSeries::from_pairs(points).unwrap()
    }

    #[test]
    fn intersect_example() {
        let a = s(&[(1, 10.0), (2, 20.0), (3, 30.0)]);
        let b = s(&[(2, 5.0), (3, 6.0), (4, 7.0)]);
        let (x, y) = align(&a, &b, AlignmentPolicy::Intersect).unwrap();
        assert_eq!(x, s(&[(2, 20.0), (3, 30.0)]));
        assert_eq!(y, s(&[(2, 5.0), (3, 6.0)]));
    }

    #[test]
    fn fill_forward_example() {
        let a = s(&[(1, 10.0), (3, 30.0)]);
        let b = s(&[(1, 1.0), (2, 2.0), (3, 3.0)]);
        let (x, y) = align(&a, &b, AlignmentPolicy::UnionFillForward).unwrap();
        assert_eq!(x, s(&[(1, 10.0), (2, 10.0), (3, 30.0)]));
        assert_eq!(y, b);
    }

    #[test]
    fn fill_forward_drops_leading_gap() {
        let a = s(&[(2, 20.0)]);
        let b = s(&[(1, 1.0), (3, 3.0)]);
        let (x, y) = align(&a, &b, AlignmentPolicy::UnionFillForward).unwrap();
        assert_eq!(x, s(&[(2, 20.0), (3, 20.0)]));
        assert_eq!(y, s(&[(2, 1.0), (3, 3.0)]));
    }

    #[test]
    fn fill_zero() {
        let a = s(&[(1, 10.0), (3, 30.0)]);
        let b = s(&[(2, 2.0)]);
        let (x, y) = align(&a, &b, AlignmentPolicy::UnionFillZero).unwrap();
        assert_eq!(x, s(&[(1, 10.0), (2, 0.0), (3, 30.0)]));
        assert_eq!(y, s(&[(1, 0.0), (2, 2.0), (3, 0.0)]));
    }

    #[test]
    fn strict_requires_identical_timestamps() {
        let a = s(&[(1, 10.0), (2, 20.0)]);
        let b = s(&[(1, 1.0), (2, 2.0)]);
        assert_eq!(align(&a, &b, AlignmentPolicy::Strict).unwrap(), (a.clone(), b));
        let c = s(&[(1, 1.0)]);
        assert_eq!(align(&a, &c, AlignmentPolicy::Strict).unwrap_err().code, ErrorCode::Align);
    }

    #[test]
    fn identical_inputs_are_already_aligned() {
        let a = s(&[(1, 10.0), (5, 20.0)]);
        for p in ["intersect", "union-fill-forward", "union-fill-zero", "strict"] {
            let p: AlignmentPolicy = p.parse().unwrap();
            assert_eq!(align(&a, &a, p).unwrap(), (a.clone(), a.clone()));
        }
    }

    #[test]
    fn empty_inputs() {
        let e = ObservationSeries::empty();
        let a = s(&[(1, 1.0)]);
        let (x, y) = align(&a, &e, AlignmentPolicy::Intersect).unwrap();
        assert!(x.is_empty() && y.is_empty());
        let (x, _) = align(&a, &e, AlignmentPolicy::UnionFillForward).unwrap();
        assert!(x.is_empty());
        let (x, y) = align(&a, &e, AlignmentPolicy::UnionFillZero).unwrap();
        assert_eq!((x, y), (a.clone(), s(&[(1, 0.0)])));
    }

    fn arb_series() -> impl Strategy<Value = ObservationSeries> {
        prop::collection::btree_map(0i64..60, -100i32..100, 0..30).prop_map(|m| {
            ObservationSeries::new(m.into_iter().map(|(t, v)| (Timestamp(t), v as f64 / 4.0))).unwrap()
        })
    }

    // Brute-force oracle for fill-forward: latest observation at or before t.
    fn last_at_or_before(s: &ObservationSeries, t: Timestamp) -> Option<f64> {
        s.iter().filter(|&(u, _)| u <= t).last().map(|(_, v)| v)
    }

    proptest! {
        #[test]
        fn intersect_matches_set_intersection(a in arb_series(), b in arb_series()) {
            let (x, y) = align(&a, &b, AlignmentPolicy::Intersect).unwrap();
            let sa: BTreeSet<_> = a.times().iter().copied().collect();
            let sb: BTreeSet<_> = b.times().iter().copied().collect();
            let expected: Vec<_> = sa.intersection(&sb).copied().collect();
            prop_assert_eq!(x.times(), &expected[..]);
            prop_assert_eq!(y.times(), &expected[..]);
            let ma: BTreeMap<_, _> = a.iter().collect();
            let mb: BTreeMap<_, _> = b.iter().collect();
            for ((t, va), (_, vb)) in x.iter().zip(y.iter()) {
                prop_assert_eq!(va, ma[&t]);
                prop_assert_eq!(vb, mb[&t]);
            }
        }

        #[test]
        fn fill_forward_matches_oracle(a in arb_series(), b in arb_series()) {
            let (x, y) = align(&a, &b, AlignmentPolicy::UnionFillForward).unwrap();
            let union: BTreeSet<_> = a.times().iter().chain(b.times()).copied().collect();
            let mut expected = Vec::new();
            for t in union {
                if let (Some(va), Some(vb)) = (last_at_or_before(&a, t), last_at_or_before(&b, t)) {
                    expected.push((t, va, vb));
                }
            }
            let got: Vec<_> = x.iter().zip(y.iter()).map(|((t, va), (_, vb))| (t, va, vb)).collect();
            prop_assert_eq!(got, expected);
        }

        #[test]
        fn outputs_share_timestamps(a in arb_series(), b in arb_series()) {
            for p in [AlignmentPolicy::Intersect, AlignmentPolicy::UnionFillForward, AlignmentPolicy::UnionFillZero] {
                let (x, y) = align(&a, &b, p).unwrap();
                prop_assert_eq!(x.times(), y.times());
                prop_assert_eq!(align(&a, &b, p).unwrap(), (x, y));
            }
        }
    }
}
