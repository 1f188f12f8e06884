use std::collections::BTreeMap;

use rand::seq::SliceRandom;

use super::record::RecordTable;
use crate::error::{Error, Result};
use crate::rng;

/// A stratified train/test partition.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitResult {
    pub train: RecordTable,
    pub test: RecordTable,
    /// Indices into the input table, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Number of test records for `n` samples: `ceil(n · fraction)`, with a
/// small tolerance so that products landing a hair above an integer are not
/// bumped up.
pub fn test_size(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction) - 1e-9).ceil().max(0.0) as usize
}

/// Per-class test counts. Each class gets `floor(n_c · f)` plus at most one
/// extra record; extras go to the classes with the largest fractional
/// remainders until the overall test size is reached. Classes with two or
/// more records always keep one in train, and singleton classes receive an
/// extra only when nothing else can take it.
pub(crate) fn allocate(counts: &[usize], fraction: f64) -> Result<Vec<usize>> {
    let total: usize = counts.iter().sum();
    let target = test_size(total, fraction);
    let mut alloc: Vec<usize> = counts
        .iter()
        .map(|&n| (n as f64 * fraction).floor() as usize)
        .collect();
    let assigned: usize = alloc.iter().sum();
    let mut deficit = target.saturating_sub(assigned);

    let mut order: Vec<usize> = (0..counts.len())
        .filter(|&i| {
            let n = counts[i];
            let cap = if n >= 2 { n - 1 } else { n };
            alloc[i] < cap
        })
        .collect();
    order.sort_by(|&a, &b| {
        let (na, nb) = (counts[a], counts[b]);
        let ra = na as f64 * fraction - alloc[a] as f64;
        let rb = nb as f64 * fraction - alloc[b] as f64;
        (na == 1)
            .cmp(&(nb == 1))
            .then(rb.total_cmp(&ra))
            .then(nb.cmp(&na))
            .then(a.cmp(&b))
    });
    for i in order {
        if deficit == 0 {
            break;
        }
        alloc[i] += 1;
        deficit -= 1;
    }
    if deficit > 0 {
        return Err(Error::Split(format!(
            "cannot place {target} of {total} records in test while keeping every class in train"
        )));
    }
    Ok(alloc)
}

/// Stratified index split over per-row class ids. Class `c` is shuffled
/// with stream `c` of `seed` and its first `k_c` shuffled rows go to test.
/// Both index lists come back ascending.
pub fn stratified_indices(classes: &[usize], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Split(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in classes.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let counts: Vec<usize> = by_class.values().map(Vec::len).collect();
    let alloc = allocate(&counts, test_fraction)?;

    let mut train = Vec::with_capacity(classes.len());
    let mut test = Vec::new();
    for ((class, mut indices), k) in by_class.into_iter().zip(alloc) {
        indices.shuffle(&mut rng::derive(seed, class as u64));
        test.extend_from_slice(&indices[..k]);
        train.extend_from_slice(&indices[k..]);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::Split(format!(
            "fraction {test_fraction} of {} records leaves an empty partition",
            classes.len()
        )));
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Stratified split by specific class.
pub fn stratified_split(table: &RecordTable, test_fraction: f64, seed: u64) -> Result<SplitResult> {
    let classes: Vec<usize> = table
        .records()
        .iter()
        .map(|r| r.specific_class as usize)
        .collect();
    let (train_indices, test_indices) = stratified_indices(&classes, test_fraction, seed)?;
    Ok(SplitResult {
        train: table.select(&train_indices),
        test: table.select(&test_indices),
        train_indices,
        test_indices,
        seed,
        ratio: test_fraction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::record::{CanFrameRecord, SpecificClass};

    fn table(counts: &[(SpecificClass, usize)]) -> RecordTable {
        let mut out = RecordTable::new();
        let mut id = 0u16;
        for &(class, n) in counts {
            for _ in 0..n {
                out.push(CanFrameRecord::new(id % 2048, [0; 8], class).unwrap(), "t");
                id += 1;
            }
        }
        out
    }

    #[test]
    fn published_split_counts() {
        // 3,568 rows at 30% -> 2,497 / 1,071 regardless of class mix.
        let t = table(&[
            (SpecificClass::Benign, 3547),
            (SpecificClass::Gas, 4),
            (SpecificClass::Rpm, 9),
            (SpecificClass::Speed, 4),
            (SpecificClass::SteeringWheel, 4),
        ]);
        let s = stratified_split(&t, 0.30, 42).unwrap();
        assert_eq!(s.train.len(), 2497);
        assert_eq!(s.test.len(), 1071);
    }

    #[test]
    fn single_class_rounding() {
        let t = table(&[(SpecificClass::Benign, 10)]);
        let s = stratified_split(&t, 0.30, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (7, 3));
    }

    #[test]
    fn deterministic_per_seed() {
        let t = table(&[(SpecificClass::Benign, 50), (SpecificClass::Dos, 7)]);
        let a = stratified_split(&t, 0.3, 9).unwrap();
        let b = stratified_split(&t, 0.3, 9).unwrap();
        assert_eq!(a.test_indices, b.test_indices);
        let c = stratified_split(&t, 0.3, 10).unwrap();
        assert_ne!(a.test_indices, c.test_indices);
    }

    #[test]
    fn classes_keep_a_training_record() {
        let t = table(&[(SpecificClass::Benign, 20), (SpecificClass::Gas, 2)]);
        let s = stratified_split(&t, 0.9, 3).unwrap();
        let gas_train = s
            .train
            .records()
            .iter()
            .filter(|r| r.specific_class == SpecificClass::Gas)
            .count();
        assert!(gas_train >= 1);
    }

    #[test]
    fn degenerate_fractions_rejected() {
        let t = table(&[(SpecificClass::Benign, 3)]);
        assert!(stratified_split(&t, 0.0, 1).is_err());
        assert!(stratified_split(&t, 1.0, 1).is_err());
        let one = table(&[(SpecificClass::Benign, 1)]);
        assert!(matches!(stratified_split(&one, 0.3, 1), Err(Error::Split(_))));
    }
}
