use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_SPLIT_LEN: usize = 10;

/// Contiguous train / validation / test ranges in temporal order (80/10/10).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplits {
    pub train: Range<usize>,
    pub validation: Range<usize>,
    pub test: Range<usize>,
}

impl DatasetSplits {
    pub fn for_len(len: usize) -> Result<Self> {
        if len < MIN_SPLIT_LEN {
            return Err(Error::InvalidArgument(format!(
                "cannot split {len} records, need at least {MIN_SPLIT_LEN}"
            )));
        }
        let train_end = len * 8 / 10;
        let val_end = len * 9 / 10;
        Ok(Self {
            train: 0..train_end,
            validation: train_end..val_end,
            test: val_end..len,
        })
    }
}
