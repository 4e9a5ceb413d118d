use crate::dataset::DatasetManifest;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

pub const LOCO_CAGES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSpec {
    pub fold_id: usize,
    pub test_cage: u32,
    pub val_cage: u32,
    pub train_cages: Vec<u32>,
}

impl FoldSpec {
    /// Leakage guard: the three cage sets must be pairwise disjoint.
    pub fn assert_disjoint(&self) -> Result<()> {
        if self.test_cage == self.val_cage
            || self
                .train_cages
                .iter()
                .any(|&c| c == self.test_cage || c == self.val_cage)
        {
            return Err(Error::Validation(format!(
                "fold {} leaks cages between splits: {self:?}",
                self.fold_id
            )));
        }
        Ok(())
    }
}

/// Fold `i` tests on the `i`-th cage (ascending id) and validates on the next
/// cage in circular order. Exactly five cages are required unless
/// `allow_any_count` is set, in which case at least three are.
pub fn make_loco_folds(manifest: &DatasetManifest, allow_any_count: bool) -> Result<Vec<FoldSpec>> {
    folds_for_cages(&manifest.cages(), allow_any_count)
}

pub fn folds_for_cages(cages: &[u32], allow_any_count: bool) -> Result<Vec<FoldSpec>> {
    let cages: Vec<u32> = cages
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let n = cages.len();
    if allow_any_count {
        if n < 3 {
            return Err(Error::Validation(format!(
                "need at least 3 cages for test/val/train, found {n}"
            )));
        }
    } else if n != LOCO_CAGES {
        return Err(Error::Validation(format!(
            "leave-one-cage-out needs {LOCO_CAGES} cages, found {n}"
        )));
    }
    let folds: Vec<FoldSpec> = (0..n)
        .map(|i| FoldSpec {
            fold_id: i + 1,
            test_cage: cages[i],
            val_cage: cages[(i + 1) % n],
            train_cages: (0..n)
                .filter(|&j| j != i && j != (i + 1) % n)
                .map(|j| cages[j])
                .collect(),
        })
        .collect();
    for f in &folds {
        f.assert_disjoint()?;
    }
    Ok(folds)
}
