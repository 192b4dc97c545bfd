use std::fmt;

/// Integer time point (a frame index).
pub type TimePoint = u64;

/// Right-open interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    pub start: TimePoint,
    pub end: TimePoint,
}

impl Interval {
    pub fn new(start: TimePoint, end: TimePoint) -> Self {
        Interval { start, end }
    }

    pub fn point(t: TimePoint) -> Self {
        Interval { start: t, end: t + 1 }
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn len(&self) -> u64 {
        self.end.saturating_sub(self.start)
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        self.start <= t && t < self.end
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.start.max(other.start), self.end.min(other.end))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{})", self.start, self.end)
    }
}

/// Sorted, disjoint, maximal set of right-open intervals.
///
/// Every constructor and mutator re-normalizes, so two adjacent intervals
/// such as `[0,60)` and `[60,90)` are always stored as `[0,90)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IntervalSet {
    spans: Vec<Interval>,
}

impl IntervalSet {
    pub fn new() -> Self {
        IntervalSet { spans: Vec::new() }
    }

    pub fn from_intervals<I: IntoIterator<Item = Interval>>(intervals: I) -> Self {
        let mut spans: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        spans.sort_unstable();
        let mut merged: Vec<Interval> = Vec::with_capacity(spans.len());
        for iv in spans {
            match merged.last_mut() {
                Some(last) if iv.start <= last.end => last.end = last.end.max(iv.end),
                _ => merged.push(iv),
            }
        }
        IntervalSet { spans: merged }
    }

    pub fn from_points<I: IntoIterator<Item = TimePoint>>(points: I) -> Self {
        Self::from_intervals(points.into_iter().map(Interval::point))
    }

    pub fn single(iv: Interval) -> Self {
        Self::from_intervals([iv])
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.spans.iter()
    }

    pub fn as_slice(&self) -> &[Interval] {
        &self.spans
    }

    /// Total number of time points covered.
    pub fn total_len(&self) -> u64 {
        self.spans.iter().map(Interval::len).sum()
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        let idx = self.spans.partition_point(|iv| iv.end <= t);
        self.spans.get(idx).is_some_and(|iv| iv.contains(t))
    }

    /// True if any point of `range` is covered.
    pub fn overlaps(&self, range: Interval) -> bool {
        if range.is_empty() {
            return false;
        }
        let idx = self.spans.partition_point(|iv| iv.end <= range.start);
        self.spans.get(idx).is_some_and(|iv| iv.start < range.end)
    }

    pub fn insert(&mut self, iv: Interval) {
        if iv.is_empty() {
            return;
        }
        let mut all = std::mem::take(&mut self.spans);
        all.push(iv);
        *self = Self::from_intervals(all);
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        Self::from_intervals(self.spans.iter().chain(other.spans.iter()).copied())
    }

    pub fn intersect(&self, other: &IntervalSet) -> IntervalSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.spans.len() && j < other.spans.len() {
            let a = self.spans[i];
            let b = other.spans[j];
            let cut = a.intersect(&b);
            if !cut.is_empty() {
                out.push(cut);
            }
            if a.end <= b.end {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet { spans: out }
    }

    /// Points of `bounds` not covered by this set.
    pub fn complement_within(&self, bounds: Interval) -> IntervalSet {
        let mut out = Vec::new();
        let mut cursor = bounds.start;
        for iv in &self.spans {
            if iv.end <= cursor {
                continue;
            }
            if iv.start >= bounds.end {
                break;
            }
            if iv.start > cursor {
                out.push(Interval::new(cursor, iv.start.min(bounds.end)));
            }
            cursor = cursor.max(iv.end);
        }
        if cursor < bounds.end {
            out.push(Interval::new(cursor, bounds.end));
        }
        IntervalSet { spans: out }
    }

    pub fn difference(&self, other: &IntervalSet, bounds: Interval) -> IntervalSet {
        self.intersect(&other.complement_within(bounds))
    }

    pub fn clip(&self, bounds: Interval) -> IntervalSet {
        self.intersect(&IntervalSet::single(bounds))
    }
}

impl FromIterator<Interval> for IntervalSet {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        Self::from_intervals(iter)
    }
}

impl<'a> IntoIterator for &'a IntervalSet {
    type Item = &'a Interval;
    type IntoIter = std::slice::Iter<'a, Interval>;

    fn into_iter(self) -> Self::IntoIter {
        self.spans.iter()
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (k, iv) in self.spans.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},{})", iv.start, iv.end)?;
        }
        f.write_str("]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn iv(a: u64, b: u64) -> Interval {
        Interval::new(a, b)
    }

    #[test]
    fn adjacent_intervals_merge() {
        let s = IntervalSet::from_intervals([iv(0, 60), iv(60, 90)]);
        assert_eq!(s.as_slice(), &[iv(0, 90)]);
    }

    #[test]
    fn overlapping_unsorted_input_is_normalized() {
        let s = IntervalSet::from_intervals([iv(50, 70), iv(0, 10), iv(5, 20), iv(30, 30)]);
        assert_eq!(s.as_slice(), &[iv(0, 20), iv(50, 70)]);
    }

    #[test]
    fn right_open_membership() {
        let s = IntervalSet::single(iv(0, 60));
        assert!(s.contains(59));
        assert!(!s.contains(60));
    }

    #[test]
    fn complement_covers_gaps_and_edges() {
        let s = IntervalSet::from_intervals([iv(2, 4), iv(6, 8)]);
        let c = s.complement_within(iv(0, 10));
        assert_eq!(c.as_slice(), &[iv(0, 2), iv(4, 6), iv(8, 10)]);
        assert_eq!(IntervalSet::new().complement_within(iv(3, 5)).as_slice(), &[iv(3, 5)]);
    }

    #[test]
    fn overlap_query() {
        let s = IntervalSet::from_intervals([iv(10, 20)]);
        assert!(s.overlaps(iv(0, 11)));
        assert!(!s.overlaps(iv(0, 10)));
        assert!(!s.overlaps(iv(20, 30)));
    }

    fn arb_set() -> impl Strategy<Value = IntervalSet> {
        prop::collection::vec((0u64..200, 0u64..30), 0..12)
            .prop_map(|v| IntervalSet::from_intervals(v.into_iter().map(|(s, l)| iv(s, s + l))))
    }

    proptest! {
        #[test]
        fn normalized_after_every_operation(a in arb_set(), b in arb_set()) {
            for s in [a.union(&b), a.intersect(&b), a.complement_within(iv(0, 250))] {
                for w in s.as_slice().windows(2) {
                    prop_assert!(w[0].end < w[1].start);
                }
                prop_assert!(s.iter().all(|i| !i.is_empty()));
            }
        }

        #[test]
        fn set_algebra_matches_pointwise(a in arb_set(), b in arb_set()) {
            let u = a.union(&b);
            let n = a.intersect(&b);
            let c = a.complement_within(iv(0, 250));
            for t in 0..250 {
                prop_assert_eq!(u.contains(t), a.contains(t) || b.contains(t));
                prop_assert_eq!(n.contains(t), a.contains(t) && b.contains(t));
                prop_assert_eq!(c.contains(t), !a.contains(t));
            }
        }
    }
}
