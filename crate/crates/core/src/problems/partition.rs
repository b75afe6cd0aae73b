use rand::seq::SliceRandom;

use super::{Dataset, ProblemError, Sample};
use crate::rng;

/// Samples of each label one agent receives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassCounts {
    pub positive: usize,
    pub negative: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PartitionScheme {
    /// Shuffle, then split as evenly as possible (earlier agents take the remainder).
    Uniform,
    /// Explicit per-agent label counts, drawn from shuffled per-label pools.
    ByClass(Vec<ClassCounts>),
}

impl PartitionScheme {
    /// Every agent receives the same class mix.
    pub fn mixed(m: usize, positive: usize, negative: usize) -> Self {
        PartitionScheme::ByClass(vec![ClassCounts { positive, negative }; m])
    }

    /// The first `pure_agents` agents hold only `first_label` samples, the rest
    /// only the other label; each agent holds `per_agent` samples.
    pub fn segregated(m: usize, pure_agents: usize, per_agent: usize, first_label: f64) -> Self {
        let (one, other) = if first_label > 0.0 {
            (
                ClassCounts { positive: per_agent, negative: 0 },
                ClassCounts { positive: 0, negative: per_agent },
            )
        } else {
            (
                ClassCounts { positive: 0, negative: per_agent },
                ClassCounts { positive: per_agent, negative: 0 },
            )
        };
        PartitionScheme::ByClass(
            (0..m)
                .map(|i| if i < pure_agents { one } else { other })
                .collect(),
        )
    }
}

/// Deterministically split samples across `m` agents.
pub fn partition_dataset(
    samples: Vec<Sample>,
    m: usize,
    scheme: &PartitionScheme,
    seed: u64,
) -> Result<Dataset, ProblemError> {
    let d = samples
        .first()
        .map(|s| s.features.len())
        .ok_or_else(|| ProblemError::Partition("no samples".into()))?;
    if m == 0 {
        return Err(ProblemError::Partition("m must be positive".into()));
    }
    let mut rng = rng::seeded(seed);
    let per_agent = match scheme {
        PartitionScheme::Uniform => {
            if samples.len() < m {
                return Err(ProblemError::Partition(format!(
                    "{} samples cannot cover {m} agents",
                    samples.len()
                )));
            }
            let mut samples = samples;
            samples.shuffle(&mut rng);
            let base = samples.len() / m;
            let extra = samples.len() % m;
            let mut it = samples.into_iter();
            (0..m)
                .map(|i| it.by_ref().take(base + usize::from(i < extra)).collect())
                .collect::<Vec<Vec<Sample>>>()
        }
        PartitionScheme::ByClass(counts) => {
            if counts.len() != m {
                return Err(ProblemError::Partition(format!(
                    "{} class-count entries for {m} agents",
                    counts.len()
                )));
            }
            let (mut pos, mut neg): (Vec<Sample>, Vec<Sample>) =
                samples.into_iter().partition(|s| s.label > 0.0);
            let need_pos: usize = counts.iter().map(|c| c.positive).sum();
            let need_neg: usize = counts.iter().map(|c| c.negative).sum();
            if need_pos > pos.len() || need_neg > neg.len() {
                return Err(ProblemError::Partition(format!(
                    "insufficient class counts: need {need_pos}/{need_neg}, have {}/{}",
                    pos.len(),
                    neg.len()
                )));
            }
            if counts.iter().any(|c| c.positive + c.negative == 0) {
                return Err(ProblemError::Partition("an agent would receive no samples".into()));
            }
            pos.shuffle(&mut rng);
            neg.shuffle(&mut rng);
            let mut pos = pos.into_iter();
            let mut neg = neg.into_iter();
            counts
                .iter()
                .map(|c| {
                    pos.by_ref()
                        .take(c.positive)
                        .chain(neg.by_ref().take(c.negative))
                        .collect()
                })
                .collect()
        }
    };
    Dataset::from_samples(d, per_agent)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(pos: usize, neg: usize) -> Vec<Sample> {
        (0..pos + neg)
            .map(|i| Sample {
                features: vec![i as f64],
                label: if i < pos { 1.0 } else { -1.0 },
            })
            .collect()
    }

    #[test]
    fn uniform_split() {
        let ds = partition_dataset(samples(60, 40), 4, &PartitionScheme::Uniform, 1).unwrap();
        assert_eq!(ds.sample_counts(), vec![25; 4]);
        let again = partition_dataset(samples(60, 40), 4, &PartitionScheme::Uniform, 1).unwrap();
        assert_eq!(ds, again);
        let uneven = partition_dataset(samples(5, 5), 3, &PartitionScheme::Uniform, 1).unwrap();
        assert_eq!(uneven.sample_counts(), vec![4, 3, 3]);
    }

    #[test]
    fn low_heterogeneity_mix() {
        let scheme = PartitionScheme::mixed(50, 230, 70);
        let ds = partition_dataset(samples(11_500, 3_500), 50, &scheme, 2).unwrap();
        for a in ds.agents() {
            assert_eq!(a.targets.iter().filter(|&&y| y > 0.0).count(), 230);
            assert_eq!(a.targets.iter().filter(|&&y| y < 0.0).count(), 70);
        }
    }

    #[test]
    fn segregated_and_impossible() {
        let scheme = PartitionScheme::segregated(5, 3, 10, 1.0);
        let ds = partition_dataset(samples(30, 20), 5, &scheme, 3).unwrap();
        assert!(ds.agent(0).targets.iter().all(|&y| y == 1.0));
        assert!(ds.agent(4).targets.iter().all(|&y| y == -1.0));
        let too_many = PartitionScheme::mixed(4, 10, 0);
        assert!(matches!(
            partition_dataset(samples(30, 0), 4, &too_many, 0),
            Err(ProblemError::Partition(_))
        ));
    }
}
