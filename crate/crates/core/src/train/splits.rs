use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One fold: train on `train`, evaluate on `test`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<String>,
    pub test: String,
}

/// One split per scene, holding that scene out.
pub fn leave_one_out_splits(scene_ids: &[String]) -> Result<Vec<Split>> {
    if scene_ids.len() < 2 {
        return Err(Error::invalid(
            "scenes",
            format!("leave-one-out needs at least 2 scenes, got {}", scene_ids.len()),
        ));
    }
    if scene_ids.iter().collect::<BTreeSet<_>>().len() != scene_ids.len() {
        return Err(Error::invalid("scenes", "duplicate scene ids"));
    }
    Ok(scene_ids
        .iter()
        .map(|test| Split {
            train: scene_ids.iter().filter(|s| *s != test).cloned().collect(),
            test: test.clone(),
        })
        .collect())
}
