//! Batch loss and Min-of-N loss over externally supplied predictions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chamfer::{self, Backend};
use crate::emd;
use crate::error::{Error, Result};
use crate::geom::{DistanceResult, PointSet};
use crate::numeric::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Cd,
    Emd,
}

impl Metric {
    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Cd => "cd",
            Metric::Emd => "emd",
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "cd" => Ok(Metric::Cd),
            "emd" => Ok(Metric::Emd),
            other => Err(format!("unknown metric `{other}` (expected cd|emd)")),
        }
    }
}

/// Brute force wins below roughly this many point pairs.
const BRUTE_PAIRS: usize = 1 << 18;

/// The metric's value (and gradients if asked). Chamfer picks its backend by
/// size; both backends return identical values. EMD goes through the dispatcher.
pub fn distance(a: &PointSet, b: &PointSet, metric: Metric, want_grad: bool) -> Result<DistanceResult> {
    match metric {
        Metric::Cd => {
            let backend = if a.len().saturating_mul(b.len()) <= BRUTE_PAIRS { Backend::Brute } else { Backend::KdTree };
            chamfer::chamfer_distance(a, b, want_grad, backend)
        }
        Metric::Emd => emd::emd(a, b, want_grad).map(|r| r.result),
    }
}

/// `Σ_i d(pred_i, gt_i)`, summed pairwise in the given order.
pub fn batch_loss(pairs: &[(PointSet, PointSet)], metric: Metric) -> Result<f64> {
    let values: Vec<f64> = pairs
        .par_iter()
        .enumerate()
        .map(|(index, (pred, gt))| {
            distance(pred, gt, metric, false)
                .map(|r| r.value)
                .map_err(|e| Error::Pair { index, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    Ok(pairwise_sum(&values))
}

/// `n` candidate predictions for one input, plus its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateBundle {
    pub candidates: Vec<PointSet>,
    pub groundtruth: PointSet,
    pub metric: Metric,
}

impl CandidateBundle {
    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::invalid("candidates", "at least one candidate is required"));
        }
        if self.metric == Metric::Emd {
            for (index, c) in self.candidates.iter().enumerate() {
                if c.len() != self.groundtruth.len() {
                    return Err(Error::Candidate {
                        index,
                        source: Box::new(Error::SizeMismatch { a: c.len(), b: self.groundtruth.len() }),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Per-candidate distances to the ground truth.
pub fn candidate_distances(bundle: &CandidateBundle) -> Result<Vec<f64>> {
    bundle.validate()?;
    bundle
        .candidates
        .par_iter()
        .enumerate()
        .map(|(index, c)| {
            distance(c, &bundle.groundtruth, bundle.metric, false)
                .map(|r| r.value)
                .map_err(|e| Error::Candidate { index, source: Box::new(e) })
        })
        .collect()
}

/// Min-of-N: the smallest candidate distance and the first index attaining it.
pub fn mon_loss(bundle: &CandidateBundle) -> Result<(f64, usize)> {
    let d = candidate_distances(bundle)?;
    Ok(d.iter()
        .enumerate()
        .fold((f64::INFINITY, 0), |best, (i, &v)| if v < best.0 { (v, i) } else { best }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ps(v: &[[f64; 3]]) -> PointSet {
        PointSet::from_arrays(v)
    }

    #[test]
    fn batch_loss_examples() {
        let a = ps(&[[0.0, 0.0, 0.0]]);
        let b = ps(&[[1.0, 0.0, 0.0]]);
        assert_eq!(batch_loss(&[(a.clone(), b.clone())], Metric::Cd).unwrap(), 2.0);
        assert_eq!(batch_loss(&[(a.clone(), b.clone()), (a.clone(), b.clone())], Metric::Cd).unwrap(), 4.0);
        let c = ps(&[[0.0, 0.0, 0.0], [10.0, 0.0, 0.0]]);
        let d = ps(&[[0.0, 3.0, 0.0]]);
        // 2 + 83 + (9 + 109 + 9)
        let v = batch_loss(&[(a.clone(), b.clone()), (c.clone(), b.clone()), (c, d)], Metric::Cd).unwrap();
        assert_eq!(v, 2.0 + 83.0 + 127.0);
        assert_eq!(batch_loss(&[(a.clone(), b.clone())], Metric::Emd).unwrap(), 1.0);
    }

    #[test]
    fn batch_loss_annotates_pair_index() {
        let a = ps(&[[0.0, 0.0, 0.0]]);
        let err = batch_loss(&[(a.clone(), a.clone()), (a.clone(), PointSet::default())], Metric::Cd).unwrap_err();
        assert!(matches!(err, Error::Pair { index: 1, .. }));
        assert_eq!(err.to_string(), "pair 1: empty point set");
    }

    #[test]
    fn mon_examples() {
        let gt = ps(&[[0.0, 0.0, 0.0]]);
        let far = ps(&[[2.0, 0.0, 0.0]]);
        let near = ps(&[[1.0, 0.0, 0.0]]);
        let one = CandidateBundle { candidates: vec![far.clone()], groundtruth: gt.clone(), metric: Metric::Cd };
        assert_eq!(mon_loss(&one).unwrap(), (8.0, 0));
        let two = CandidateBundle { candidates: vec![far.clone(), near], groundtruth: gt.clone(), metric: Metric::Cd };
        assert_eq!(mon_loss(&two).unwrap(), (2.0, 1));
        let hit = CandidateBundle { candidates: vec![far, gt.clone(), gt.clone()], groundtruth: gt, metric: Metric::Emd };
        assert_eq!(mon_loss(&hit).unwrap(), (0.0, 1));
    }

    #[test]
    fn mon_errors() {
        let gt = ps(&[[0.0, 0.0, 0.0]]);
        let empty = CandidateBundle { candidates: vec![], groundtruth: gt.clone(), metric: Metric::Cd };
        assert!(matches!(mon_loss(&empty), Err(Error::InvalidParameter { .. })));
        let wrong = CandidateBundle {
            candidates: vec![gt.clone(), ps(&[[0.0; 3], [1.0, 0.0, 0.0]])],
            groundtruth: gt,
            metric: Metric::Emd,
        };
        assert!(matches!(mon_loss(&wrong), Err(Error::Candidate { index: 1, .. })));
    }

    #[test]
    fn metric_parsing() {
        assert_eq!("cd".parse::<Metric>().unwrap(), Metric::Cd);
        assert_eq!("emd".parse::<Metric>().unwrap(), Metric::Emd);
        assert!("l2".parse::<Metric>().is_err());
    }
}
