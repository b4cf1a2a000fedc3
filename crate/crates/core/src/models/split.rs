use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// How samples are divided into train and test sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitPlan {
    pub test_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        SplitPlan {
            test_fraction: 0.2,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidParam(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// Sorted, disjoint train and test indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn test_count(fraction: f64, total: usize) -> usize {
    seed::scaled_count(fraction, total).clamp(1, total - 1)
}

pub fn make_split(labels: &[usize], classes: usize, plan: &SplitPlan) -> Result<Split> {
    plan.validate()?;
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::InvalidLabel { label: l, classes });
        }
        by_class[l].push(i);
    }
    for (c, members) in by_class.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::SplitInfeasible(format!(
                "class {c} has {} samples; at least 2 are needed",
                members.len()
            )));
        }
    }

    let mut rng = seed::rng(plan.seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    if plan.stratified {
        for mut members in by_class {
            members.shuffle(&mut rng);
            let t = test_count(plan.test_fraction, members.len());
            test.extend_from_slice(&members[..t]);
            train.extend_from_slice(&members[t..]);
        }
    } else {
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        let t = test_count(plan.test_fraction, all.len());
        test.extend_from_slice(&all[..t]);
        train.extend_from_slice(&all[t..]);
        for (name, part) in [("train", &train), ("test", &test)] {
            let mut seen = vec![false; classes];
            part.iter().for_each(|&i| seen[labels[i]] = true);
            if let Some(c) = seen.iter().position(|s| !s) {
                return Err(Error::SplitInfeasible(format!(
                    "class {c} missing from the {name} split"
                )));
            }
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}
