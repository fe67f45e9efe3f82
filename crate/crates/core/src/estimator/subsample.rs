use rand::seq::index::sample;

use crate::dataset::{ShotRecord, SweepDataset};
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng};

/// Re-estimates every point from a random subset of its recorded shots so
/// that the whole sweep fits in `budget` seconds of sequence time.
///
/// Each point keeps k = ⌊budget / Σᵢ τᵢ⌋ shots (τᵢ the per-shot sequence
/// duration), drawn uniformly without replacement. A budget at or above the
/// recorded total returns the dataset unchanged.
pub fn subsample_time_budget(ds: &SweepDataset, budget: f64, seed: u64) -> Result<SweepDataset> {
    if !(budget > 0.0) {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    if ds.points.iter().any(|p| p.shots.is_none()) {
        return Err(Error::InvalidArgument(
            "subsampling needs per-shot records on every point".into(),
        ));
    }
    let per_round: f64 = ds.points.iter().map(|p| p.seq_duration).sum();
    if !(per_round > 0.0) {
        return Err(Error::InvalidArgument("sequence durations are not recorded".into()));
    }
    if budget >= ds.total_time() {
        return Ok(ds.clone());
    }
    let k = (budget / per_round).floor() as usize;
    if k < 1 {
        return Err(Error::BudgetTooSmall {
            budget,
            required: per_round,
        });
    }
    let mut out = ds.clone();
    for (i, p) in out.points.iter_mut().enumerate() {
        let shots = p.shots.as_ref().expect("checked");
        let keep = k.min(shots.n_shots());
        let mut r = rng(derive_seed(seed, i as u64));
        let mut idx = sample(&mut r, shots.n_shots(), keep).into_vec();
        idx.sort_unstable();
        let sub = ShotRecord {
            values: idx.iter().map(|&j| shots.values[j]).collect(),
            threshold: shots.threshold,
        };
        let (pe, se) = sub.estimate();
        p.p_e = pe;
        p.stderr = se;
        p.n_shots = keep;
        p.shots = Some(sub);
    }
    out.flag(format!("subsampled to a {budget:e} s budget ({k} shots per point)"));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Axis, PointRecord};

    fn dataset(n_points: usize, n_shots: usize) -> SweepDataset {
        let axes = vec![Axis::new("x", "1", (0..n_points).map(|i| i as f64).collect())];
        let points = (0..n_points)
            .map(|i| {
                let values: Vec<f64> = (0..n_shots).map(|k| ((k * 7 + i) % 10) as f64 / 10.0).collect();
                let s = ShotRecord { values, threshold: 0.45 };
                let (p_e, stderr) = s.estimate();
                PointRecord {
                    coords: vec![i as f64],
                    p_e,
                    stderr,
                    n_shots,
                    seq_duration: 1e-3,
                    shots: Some(s),
                }
            })
            .collect();
        SweepDataset::new("d", axes, points).unwrap()
    }

    #[test]
    fn half_budget_halves_shots() {
        let ds = dataset(5, 101);
        let sub = subsample_time_budget(&ds, 0.5 * ds.total_time(), 1).unwrap();
        for p in &sub.points {
            assert!((p.n_shots as i64 - 50).abs() <= 1);
        }
        assert!(sub.total_time() <= 0.5 * ds.total_time());
    }

    #[test]
    fn full_budget_is_identity_and_seed_is_deterministic() {
        let ds = dataset(3, 40);
        assert_eq!(subsample_time_budget(&ds, ds.total_time(), 9).unwrap(), ds);
        let a = subsample_time_budget(&ds, 0.3 * ds.total_time(), 9).unwrap();
        let b = subsample_time_budget(&ds, 0.3 * ds.total_time(), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_budget_fails() {
        let ds = dataset(4, 10);
        let err = subsample_time_budget(&ds, 1e-3, 0).unwrap_err();
        assert!(matches!(err, Error::BudgetTooSmall { .. }));
    }
}
