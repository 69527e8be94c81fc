use std::ops::Range;

/// Set of packet ids stored as sorted, disjoint, non-adjacent half-open ranges.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdSet {
    ranges: Vec<Range<u64>>,
}

impl IdSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn len(&self) -> u64 {
        self.ranges.iter().map(|r| r.end - r.start).sum()
    }

    pub fn ranges(&self) -> &[Range<u64>] {
        &self.ranges
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.ranges.iter().flat_map(|r| r.clone())
    }

    pub fn contains(&self, id: u64) -> bool {
        let i = self.ranges.partition_point(|r| r.end <= id);
        self.ranges.get(i).is_some_and(|r| r.start <= id)
    }

    pub fn insert(&mut self, id: u64) {
        self.insert_range(id..id + 1);
    }

    pub fn insert_range(&mut self, r: Range<u64>) {
        if r.start >= r.end {
            return;
        }
        // first range that could touch r, last range that could touch r
        let lo = self.ranges.partition_point(|x| x.end < r.start);
        let hi = self.ranges.partition_point(|x| x.start <= r.end);
        let mut merged = r;
        if lo < hi {
            merged.start = merged.start.min(self.ranges[lo].start);
            merged.end = merged.end.max(self.ranges[hi - 1].end);
        }
        self.ranges.splice(lo..hi, std::iter::once(merged));
    }

    pub fn remove_range(&mut self, r: Range<u64>) {
        if r.start >= r.end {
            return;
        }
        let lo = self.ranges.partition_point(|x| x.end <= r.start);
        let hi = self.ranges.partition_point(|x| x.start < r.end);
        if lo >= hi {
            return;
        }
        let mut keep = Vec::with_capacity(2);
        if self.ranges[lo].start < r.start {
            keep.push(self.ranges[lo].start..r.start);
        }
        if self.ranges[hi - 1].end > r.end {
            keep.push(r.end..self.ranges[hi - 1].end);
        }
        self.ranges.splice(lo..hi, keep);
    }

    /// Number of ids of `r` present in the set.
    pub fn count_in(&self, r: Range<u64>) -> u64 {
        let lo = self.ranges.partition_point(|x| x.end <= r.start);
        self.ranges[lo..]
            .iter()
            .take_while(|x| x.start < r.end)
            .map(|x| x.end.min(r.end) - x.start.max(r.start))
            .sum()
    }

    /// Parts of `r` absent from the set.
    pub fn gaps_in(&self, r: Range<u64>) -> Vec<Range<u64>> {
        let mut out = Vec::new();
        let mut cursor = r.start;
        let lo = self.ranges.partition_point(|x| x.end <= r.start);
        for x in self.ranges[lo..].iter().take_while(|x| x.start < r.end) {
            if x.start > cursor {
                out.push(cursor..x.start);
            }
            cursor = cursor.max(x.end);
        }
        if cursor < r.end {
            out.push(cursor..r.end);
        }
        out
    }

    /// Parts of `r` present in the set.
    pub fn runs_in(&self, r: Range<u64>) -> Vec<Range<u64>> {
        let lo = self.ranges.partition_point(|x| x.end <= r.start);
        self.ranges[lo..]
            .iter()
            .take_while(|x| x.start < r.end)
            .map(|x| x.start.max(r.start)..x.end.min(r.end))
            .collect()
    }

    /// Removes and returns up to `n` of the smallest ids.
    pub fn take_front(&mut self, mut n: u64) -> Vec<Range<u64>> {
        let mut out = Vec::new();
        while n > 0 {
            let Some(first) = self.ranges.first_mut() else { break };
            let len = first.end - first.start;
            if len <= n {
                out.push(first.clone());
                n -= len;
                self.ranges.remove(0);
            } else {
                out.push(first.start..first.start + n);
                first.start += n;
                n = 0;
            }
        }
        out
    }
}

impl FromIterator<u64> for IdSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        let mut s = IdSet::new();
        for id in iter {
            s.insert(id);
        }
        s
    }
}
