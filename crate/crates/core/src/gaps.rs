//! Per-AID inter-message times.

use std::collections::BTreeMap;

use crate::frame::{Aid, CanFrame};

/// Replacement for a zero gap between two same-AID frames that share a timestamp.
pub const TIE_EPSILON: f64 = 1e-6;

/// Inter-message times of one AID, in arrival order.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSeries {
    pub aid: Aid,
    /// Seconds between consecutive frames; strictly positive.
    pub gaps: Vec<f64>,
    /// Input index of the later frame of each gap.
    pub frame_refs: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapTable {
    pub series: BTreeMap<Aid, GapSeries>,
    /// AIDs seen exactly once, which have no gap.
    pub singletons: Vec<Aid>,
}

impl GapTable {
    pub fn total_gaps(&self) -> usize {
        self.series.values().map(|s| s.gaps.len()).sum()
    }

    /// Concatenates another capture's gaps (gaps never straddle two captures).
    pub fn merge(&mut self, other: GapTable) {
        for (aid, s) in other.series {
            let entry =
                self.series.entry(aid).or_insert_with(|| GapSeries { aid, gaps: Vec::new(), frame_refs: Vec::new() });
            entry.gaps.extend(s.gaps);
            entry.frame_refs.extend(s.frame_refs);
        }
        for aid in other.singletons {
            if !self.series.contains_key(&aid) && !self.singletons.contains(&aid) {
                self.singletons.push(aid);
            }
        }
        self.singletons.retain(|a| !self.series.contains_key(a));
        self.singletons.sort();
    }
}

/// Splits a capture into per-AID gap series.
///
/// Frames are stably sorted by timestamp first, so same-timestamp frames keep
/// file order; their zero gap is recorded as [`TIE_EPSILON`].
pub fn extract_gaps(frames: &[CanFrame]) -> GapTable {
    let mut order: Vec<usize> = (0..frames.len()).collect();
    order.sort_by(|&a, &b| frames[a].timestamp.total_cmp(&frames[b].timestamp));

    let mut last: BTreeMap<Aid, f64> = BTreeMap::new();
    let mut table = GapTable::default();
    for idx in order {
        let f = &frames[idx];
        match last.insert(f.aid, f.timestamp) {
            None => {}
            Some(prev) => {
                let gap = (f.timestamp - prev).max(0.0);
                let gap = if gap > 0.0 { gap } else { TIE_EPSILON };
                let s = table.series.entry(f.aid).or_insert_with(|| GapSeries {
                    aid: f.aid,
                    gaps: Vec::new(),
                    frame_refs: Vec::new(),
                });
                s.gaps.push(gap);
                s.frame_refs.push(idx);
            }
        }
    }
    table.singletons = last.keys().copied().filter(|a| !table.series.contains_key(a)).collect();
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(t: f64, aid: u32) -> CanFrame {
        CanFrame::new(t, aid, &[]).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn single_aid() {
        let t = extract_gaps(&[f(0.0, 1), f(0.1, 1), f(0.2, 1)]);
        assert!(close(&t.series[&Aid(1)].gaps, &[0.1, 0.1]));
        assert_eq!(t.series[&Aid(1)].frame_refs, vec![1, 2]);
    }

    #[test]
    fn interleaved_aids_are_separated() {
        let t = extract_gaps(&[f(0.0, 0xA), f(0.01, 0xB), f(0.1, 0xA), f(0.11, 0xB)]);
        assert!(close(&t.series[&Aid(0xA)].gaps, &[0.1]));
        assert!(close(&t.series[&Aid(0xB)].gaps, &[0.1]));
    }

    #[test]
    fn singletons_listed_separately() {
        let t = extract_gaps(&[f(0.0, 1), f(0.5, 2), f(1.0, 1)]);
        assert_eq!(t.singletons, vec![Aid(2)]);
        assert_eq!(t.series.len(), 1);
    }

    #[test]
    fn equal_timestamps_become_epsilon() {
        let t = extract_gaps(&[f(1.0, 7), f(1.0, 7), f(1.5, 7)]);
        assert!(close(&t.series[&Aid(7)].gaps, &[TIE_EPSILON, 0.5]));
        assert!(t.series[&Aid(7)].gaps.iter().all(|&g| g > 0.0));
    }

    #[test]
    fn unsorted_input_is_stably_sorted() {
        let t = extract_gaps(&[f(0.2, 1), f(0.0, 1), f(0.1, 1)]);
        assert!(close(&t.series[&Aid(1)].gaps, &[0.1, 0.1]));
        assert_eq!(t.series[&Aid(1)].frame_refs, vec![2, 0]);
    }

    #[test]
    fn empty_input() {
        let t = extract_gaps(&[]);
        assert!(t.series.is_empty() && t.singletons.is_empty());
    }

    #[test]
    fn merge_keeps_captures_apart() {
        let mut a = extract_gaps(&[f(0.0, 1), f(0.1, 1), f(0.0, 2)]);
        let b = extract_gaps(&[f(5.0, 1), f(5.2, 1), f(5.0, 2), f(5.3, 2)]);
        a.merge(b);
        assert!(close(&a.series[&Aid(1)].gaps, &[0.1, 0.2]));
        assert!(close(&a.series[&Aid(2)].gaps, &[0.3]));
        assert!(a.singletons.is_empty());
    }
}
