use cater_core::rng::mix64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};
use crate::format::{SplitManifest, SCHEMA_VERSION};

/// Random train/test split with a validation set carved out of train.
///
/// `|test| = round(test_fraction * n)` and `|val| = round(val_fraction * |train|)`.
pub fn split(ids: &[u64], test_fraction: f64, val_fraction: f64, seed: u64) -> Result<SplitManifest> {
    for (name, f) in [("test", test_fraction), ("val", val_fraction)] {
        if !(0.0..=1.0).contains(&f) {
            return Err(CliError::Validation(format!("{name} fraction {f} outside [0, 1]")));
        }
    }
    let mut ids = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    ids.shuffle(&mut rng);
    let n_test = (test_fraction * ids.len() as f64).round() as usize;
    let mut test = ids[..n_test].to_vec();
    let mut train = ids[n_test..].to_vec();
    let mut pool = train.clone();
    pool.shuffle(&mut rng);
    let n_val = (val_fraction * pool.len() as f64).round() as usize;
    let mut val = pool[..n_val].to_vec();
    let mut final_train = pool[n_val..].to_vec();
    for v in [&mut test, &mut train, &mut val, &mut final_train] {
        v.sort_unstable();
    }
    Ok(SplitManifest {
        schema_version: SCHEMA_VERSION,
        seed,
        test_fraction,
        val_fraction,
        train,
        val,
        final_train,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn benchmark_sized_split() {
        let ids: Vec<u64> = (0..5500).collect();
        let s = split(&ids, 0.3, 0.2, 7).unwrap();
        assert_eq!((s.test.len(), s.train.len(), s.val.len(), s.final_train.len()), (1650, 3850, 770, 3080));
        let test: BTreeSet<_> = s.test.iter().collect();
        let train: BTreeSet<_> = s.train.iter().collect();
        assert!(test.is_disjoint(&train));
        assert_eq!(test.len() + train.len(), 5500);
        let val: BTreeSet<_> = s.val.iter().collect();
        let fin: BTreeSet<_> = s.final_train.iter().collect();
        assert!(val.is_disjoint(&fin));
        assert_eq!(val.union(&fin).copied().collect::<BTreeSet<_>>(), train);
        assert_eq!(split(&ids, 0.3, 0.2, 7).unwrap(), s);
        assert_ne!(split(&ids, 0.3, 0.2, 8).unwrap(), s);
    }

    #[test]
    fn rejects_bad_fractions() {
        assert!(split(&[1, 2], 1.5, 0.2, 0).is_err());
    }
}
