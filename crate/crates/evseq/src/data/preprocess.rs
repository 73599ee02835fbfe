use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::data::schema::PAD_CODE;
use crate::data::sequence::{Dataset, EventSequence, Split};
use crate::error::{Error, Result};

/// Default minimum occurrence count below which a category is consolidated.
pub const RARE_MIN_COUNT: usize = 500;

/// Remaps every categorical value occurring fewer than `min_count` times
/// across the whole dataset to one reserved RARE code, compacting the
/// vocabulary. A feature whose values all clear the threshold is left
/// untouched, which makes the operation idempotent.
pub fn consolidate_rare_categories(dataset: &Dataset, min_count: usize) -> Dataset {
    let mut schema = dataset.schema.clone();
    let mut sequences = dataset.sequences.clone();

    for (f, feature) in schema.categorical.iter_mut().enumerate() {
        let mut counts: HashMap<u32, usize> = HashMap::new();
        for seq in &sequences {
            for &code in &seq.cat_values[f] {
                *counts.entry(code).or_insert(0) += 1;
            }
        }
        // The RARE code itself is exempt: re-running must be the identity.
        let consolidated: Vec<u32> = (1..feature.vocab_size)
            .filter(|code| Some(*code) != feature.rare_code)
            .filter(|code| counts.get(code).copied().unwrap_or(0) < min_count)
            .collect();
        if consolidated.is_empty() {
            continue;
        }

        let rare_code = 1u32;
        let mut remap: HashMap<u32, u32> = HashMap::new();
        let mut next = rare_code + 1;
        for old in 1..feature.vocab_size {
            if consolidated.contains(&old) {
                remap.insert(old, rare_code);
            } else if Some(old) == feature.rare_code {
                remap.insert(old, rare_code);
            } else {
                remap.insert(old, next);
                next += 1;
            }
        }

        let mut values = None;
        if let Some(old_values) = &feature.values {
            let mut kept = vec![String::from("<rare>"); (next - 2) as usize + 1];
            kept[0] = "<rare>".into();
            for (pos, name) in old_values.iter().enumerate() {
                let old_code = pos as u32 + 1;
                let new_code = remap[&old_code];
                if new_code != rare_code {
                    kept[(new_code - 1) as usize] = name.clone();
                }
            }
            values = Some(kept);
        }

        for seq in &mut sequences {
            for code in &mut seq.cat_values[f] {
                *code = remap[code];
            }
        }
        feature.vocab_size = next;
        feature.rare_code = Some(rare_code);
        feature.values = values;
    }

    Dataset {
        schema,
        sequences,
        split_tags: dataset.split_tags.clone(),
    }
}

/// Whether time normalization runs per sequence or over the whole dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeNorm {
    PerSequence,
    Global,
}

/// Maps event times affinely onto [0, 1], per sequence by default.
/// A sequence with a single distinct timestamp maps to all zeros.
pub fn normalize_time(dataset: &Dataset) -> Dataset {
    normalize_time_with(dataset, TimeNorm::PerSequence)
}

pub fn normalize_time_with(dataset: &Dataset, mode: TimeNorm) -> Dataset {
    let mut sequences = dataset.sequences.clone();
    match mode {
        TimeNorm::PerSequence => {
            for seq in &mut sequences {
                rescale(&mut seq.times);
            }
        }
        TimeNorm::Global => {
            let lo = sequences
                .iter()
                .flat_map(|s| s.times.iter().copied())
                .fold(f64::INFINITY, f64::min);
            let hi = sequences
                .iter()
                .flat_map(|s| s.times.iter().copied())
                .fold(f64::NEG_INFINITY, f64::max);
            let span = hi - lo;
            for seq in &mut sequences {
                for t in &mut seq.times {
                    *t = if span > 0.0 { (*t - lo) / span } else { 0.0 };
                }
            }
        }
    }
    Dataset {
        schema: dataset.schema.clone(),
        sequences,
        split_tags: dataset.split_tags.clone(),
    }
}

fn rescale(times: &mut [f64]) {
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for t in times.iter_mut() {
        *t = if span > 0.0 { ((*t - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
    }
}

/// Keeps only the `n` most recent events of each sequence.
pub fn truncate_recent(dataset: &Dataset, n: usize) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation length must be >= 1".into()));
    }
    let sequences = dataset
        .sequences
        .iter()
        .map(|seq| {
            let keep = seq.len().min(n);
            seq.slice(seq.len() - keep, keep)
        })
        .collect();
    Ok(Dataset {
        schema: dataset.schema.clone(),
        sequences,
        split_tags: dataset.split_tags.clone(),
    })
}

/// Groups events into consecutive fixed-width time windows.
///
/// Within a window, numeric features average over their non-missing values
/// and fall back to `missing_fill` when absent; categorical features take the
/// last observed code. One event is emitted per non-empty window, stamped
/// with the window start time.
pub fn aggregate_intervals(dataset: &Dataset, window: f64, missing_fill: f64) -> Result<Dataset> {
    if window <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "aggregation window must be positive, got {window}"
        )));
    }
    let n_cat = dataset.schema.n_categorical();
    let n_num = dataset.schema.n_numeric();
    let sequences = dataset
        .sequences
        .iter()
        .map(|seq| {
            let mut times = Vec::new();
            let mut cat: Vec<Vec<u32>> = vec![Vec::new(); n_cat];
            let mut num: Vec<Vec<f64>> = vec![Vec::new(); n_num];
            let mut j = 0;
            while j < seq.len() {
                let w = (seq.times[j] / window).floor();
                let end_time = (w + 1.0) * window;
                let start = j;
                while j < seq.len() && seq.times[j] < end_time {
                    j += 1;
                }
                times.push(w * window);
                for (f, col) in cat.iter_mut().enumerate() {
                    col.push(seq.cat_values[f][j - 1]);
                }
                for (f, col) in num.iter_mut().enumerate() {
                    let mut sum = 0.0;
                    let mut count = 0usize;
                    for k in start..j {
                        let v = seq.num_values[f][k];
                        if !v.is_nan() {
                            sum += v;
                            count += 1;
                        }
                    }
                    col.push(if count > 0 { sum / count as f64 } else { missing_fill });
                }
            }
            EventSequence {
                id: seq.id.clone(),
                times,
                cat_values: cat,
                num_values: num,
                target: seq.target,
            }
        })
        .collect();
    Ok(Dataset {
        schema: dataset.schema.clone(),
        sequences,
        split_tags: dataset.split_tags.clone(),
    })
}

/// Deterministically partitions a dataset into train/val/test.
///
/// Ratios must be positive and sum to 1 (within 1e-9). When the dataset
/// already carries test tags, those are respected and only train/val are
/// drawn from the remaining sequences.
pub fn split(dataset: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<(Dataset, Dataset, Dataset)> {
    let (r_train, r_val, r_test) = ratios;
    if r_train <= 0.0 || r_val <= 0.0 || r_test <= 0.0 || (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(r_train, r_val, r_test));
    }

    let has_test_tags = dataset
        .split_tags
        .as_ref()
        .is_some_and(|tags| tags.iter().any(|t| *t == Split::Test));

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();

    if has_test_tags {
        let tags = dataset.split_tags.as_ref().unwrap();
        let mut rest: Vec<usize> = Vec::new();
        for (i, tag) in tags.iter().enumerate() {
            if *tag == Split::Test {
                test.push(dataset.sequences[i].clone());
            } else {
                rest.push(i);
            }
        }
        rest.shuffle(&mut rng);
        let n_train = largest_remainder(rest.len(), &[r_train, r_val])[0];
        for (k, &i) in rest.iter().enumerate() {
            if k < n_train {
                train.push(dataset.sequences[i].clone());
            } else {
                val.push(dataset.sequences[i].clone());
            }
        }
    } else {
        let mut indices: Vec<usize> = (0..dataset.len()).collect();
        indices.shuffle(&mut rng);
        let counts = largest_remainder(indices.len(), &[r_train, r_val, r_test]);
        for (k, &i) in indices.iter().enumerate() {
            let seq = dataset.sequences[i].clone();
            if k < counts[0] {
                train.push(seq);
            } else if k < counts[0] + counts[1] {
                val.push(seq);
            } else {
                test.push(seq);
            }
        }
    }

    let wrap = |sequences| Dataset {
        schema: dataset.schema.clone(),
        sequences,
        split_tags: None,
    };
    Ok((wrap(train), wrap(val), wrap(test)))
}

/// Tags sequences in place instead of materializing three copies.
pub fn assign_split_tags(dataset: &mut Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<()> {
    let (r_train, r_val, r_test) = ratios;
    if r_train <= 0.0 || r_val <= 0.0 || r_test <= 0.0 || (r_train + r_val + r_test - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(r_train, r_val, r_test));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    indices.shuffle(&mut rng);
    let counts = largest_remainder(indices.len(), &[r_train, r_val, r_test]);
    let mut tags = vec![Split::Train; dataset.len()];
    for (k, &i) in indices.iter().enumerate() {
        tags[i] = if k < counts[0] {
            Split::Train
        } else if k < counts[0] + counts[1] {
            Split::Val
        } else {
            Split::Test
        };
    }
    dataset.split_tags = Some(tags);
    Ok(())
}

/// Apportions `n` into integer counts proportional to `ratios` (which need
/// not sum to 1; the final bucket absorbs the remainder when they do not).
fn largest_remainder(n: usize, ratios: &[f64]) -> Vec<usize> {
    let total: f64 = ratios.iter().sum();
    let quotas: Vec<f64> = ratios.iter().map(|r| r / total * n as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for k in 0..(n - assigned) {
        counts[order[k % ratios.len()]] += 1;
    }
    counts
}

/// Frequency table of one categorical feature across a dataset,
/// indexed by code. Code 0 (padding) never occurs in valid data.
pub fn category_counts(dataset: &Dataset, feature_index: usize) -> Vec<usize> {
    let vocab = dataset.schema.categorical[feature_index].vocab_size as usize;
    let mut counts = vec![0usize; vocab];
    for seq in &dataset.sequences {
        for &code in &seq.cat_values[feature_index] {
            if (code as usize) < vocab && code != PAD_CODE {
                counts[code as usize] += 1;
            }
        }
    }
    counts
}
