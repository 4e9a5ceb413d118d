use crate::assignment::{hungarian, Objective};
use crate::dataset::{Rle, TrackSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub prev_track_id: i64,
    pub next_track_id: i64,
    pub iou: f64,
}

/// Identity transfer across one chunk boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMatch {
    pub boundary_frame: u32,
    /// Accepted pairs, ordered by next track id.
    pub assignment: Vec<MatchedPair>,
    /// Next-chunk tracks without an accepted predecessor, ascending.
    pub flags: Vec<i64>,
    /// Previous-chunk tracks with no accepted successor, ascending.
    pub unmatched_prev: Vec<i64>,
    /// Optimal pairing before thresholding, including pairs below tau.
    pub proposals: Vec<MatchedPair>,
    /// Total IoU of the optimal pairing before thresholding.
    pub total_iou: f64,
}

impl BoundaryMatch {
    pub fn is_flagged(&self, next_track_id: i64) -> bool {
        self.flags.binary_search(&next_track_id).is_ok()
    }

    pub fn proposal_for(&self, next_track_id: i64) -> Option<&MatchedPair> {
        self.proposals
            .iter()
            .find(|p| p.next_track_id == next_track_id)
    }
}

/// Masks of every track at `frame` of `video_id`, ordered by track id.
pub fn boundary_masks<'a>(tracks: &'a TrackSet, video_id: &str, frame: u32) -> Vec<(i64, &'a Rle)> {
    let mut out: Vec<(i64, &Rle)> = tracks
        .records()
        .iter()
        .filter(|r| r.video_id == video_id && r.frame == frame)
        .filter_map(|r| r.mask.as_ref().map(|m| (r.track_id, m)))
        .collect();
    out.sort_by_key(|m| m.0);
    out
}

/// Pairs the final masks of one chunk with the first masks of the next by
/// maximum total IoU; pairs below `tau` are dropped and their next track is
/// flagged for review.
pub fn match_identities(
    boundary_frame: u32,
    prev: &[(i64, &Rle)],
    next: &[(i64, &Rle)],
    tau: f64,
) -> BoundaryMatch {
    let mut prev: Vec<&(i64, &Rle)> = prev.iter().collect();
    let mut next: Vec<&(i64, &Rle)> = next.iter().collect();
    prev.sort_by_key(|m| m.0);
    next.sort_by_key(|m| m.0);
    let ious: Vec<Vec<f64>> = prev
        .iter()
        .map(|p| next.iter().map(|n| p.1.iou(n.1)).collect())
        .collect();
    let solved = hungarian(&ious, Objective::Maximize);
    let mut proposals: Vec<MatchedPair> = solved
        .pairs
        .iter()
        .map(|&(i, j)| MatchedPair {
            prev_track_id: prev[i].0,
            next_track_id: next[j].0,
            iou: ious[i][j],
        })
        .collect();
    proposals.sort_by_key(|p| p.next_track_id);
    let assignment: Vec<MatchedPair> = proposals
        .iter()
        .copied()
        .filter(|p| p.iou >= tau && p.iou > 0.0)
        .collect();
    let flags = next
        .iter()
        .map(|n| n.0)
        .filter(|id| !assignment.iter().any(|p| p.next_track_id == *id))
        .collect();
    let unmatched_prev = prev
        .iter()
        .map(|p| p.0)
        .filter(|id| !assignment.iter().any(|p| p.prev_track_id == *id))
        .collect();
    BoundaryMatch {
        boundary_frame,
        assignment,
        flags,
        unmatched_prev,
        proposals,
        total_iou: solved.total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BinaryMask;

    fn blob(x0: usize) -> Rle {
        BinaryMask::from_fn(100, 40, |x, y| {
            (x0..x0 + 15).contains(&x) && (10..25).contains(&y)
        })
        .encode()
    }

    #[test]
    fn identical_sets_match_identically() {
        let masks = [blob(0), blob(30), blob(60)];
        let side: Vec<(i64, &Rle)> = masks
            .iter()
            .enumerate()
            .map(|(i, m)| (i as i64 + 1, m))
            .collect();
        let m = match_identities(1500, &side, &side, 0.3);
        assert_eq!(m.assignment.len(), 3);
        assert!(m
            .assignment
            .iter()
            .all(|p| p.prev_track_id == p.next_track_id && p.iou == 1.0));
        assert!(m.flags.is_empty());
        assert_eq!(m.total_iou, 3.0);
    }

    #[test]
    fn swapped_positions_give_crossed_assignment() {
        let (a, b) = (blob(0), blob(50));
        let (a2, b2) = (blob(2), blob(48));
        let m = match_identities(10, &[(1, &a), (2, &b)], &[(1, &b2), (2, &a2)], 0.3);
        let pairs: Vec<(i64, i64)> = m
            .assignment
            .iter()
            .map(|p| (p.prev_track_id, p.next_track_id))
            .collect();
        assert_eq!(pairs, vec![(2, 1), (1, 2)]);
        // Enumerate both bijections.
        let straight = a.iou(&b2) + b.iou(&a2);
        let crossed = a.iou(&a2) + b.iou(&b2);
        assert!(crossed > straight);
        assert_eq!(m.total_iou, crossed);
    }

    #[test]
    fn disjoint_sets_flag_everything() {
        let (a, b, c) = (blob(0), blob(30), blob(70));
        let m = match_identities(10, &[(1, &a), (2, &b)], &[(5, &c)], 0.3);
        assert!(m.assignment.is_empty());
        assert_eq!(m.flags, vec![5]);
        assert_eq!(m.unmatched_prev, vec![1, 2]);
    }

    #[test]
    fn weak_overlap_is_flagged() {
        let (a, b) = (blob(0), blob(12));
        let m = match_identities(10, &[(1, &a)], &[(1, &b)], 0.3);
        assert!(m.assignment.is_empty());
        assert!(m.is_flagged(1));
        assert!(m.proposal_for(1).unwrap().iou > 0.0);
    }
}
