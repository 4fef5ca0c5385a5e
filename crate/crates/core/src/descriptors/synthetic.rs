use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{normalize_in_place, Descriptor, DescriptorSet, Point, DESCRIPTOR_LEN};
use crate::error::DescriptorError;

/// Image extent used for random keypoint locations.
const IMAGE_WIDTH: u16 = 512;
const IMAGE_HEIGHT: u16 = 384;

/// Two descriptor sets with planted correspondences.
#[derive(Debug, Clone)]
pub struct SyntheticPair {
    pub queries: DescriptorSet,
    pub database: DescriptorSet,
    /// `(query_index, database_index)` for every planted pair, ascending.
    pub ground_truth: Vec<(usize, usize)>,
}

/// Generates `count` database descriptors and `count` queries, of which
/// `floor(match_fraction * count)` are noisy copies of the database entry at
/// the same index. Deterministic in `seed`.
pub fn generate_synthetic(
    count: usize,
    seed: u64,
    match_fraction: f64,
    noise_sigma: f64,
) -> Result<SyntheticPair, DescriptorError> {
    if count == 0 {
        return Err(DescriptorError::EmptySet);
    }
    if !(0.0..=1.0).contains(&match_fraction) {
        return Err(DescriptorError::InvalidParameter(format!(
            "match fraction {match_fraction} is outside [0, 1]"
        )));
    }
    let bad_sigma =
        || DescriptorError::InvalidParameter(format!("noise sigma {noise_sigma} must be >= 0"));
    if !(noise_sigma.is_finite() && noise_sigma >= 0.0) {
        return Err(bad_sigma());
    }
    let noise = Normal::new(0.0, noise_sigma).map_err(|_| bad_sigma())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let database: Vec<Descriptor> = (0..count).map(|_| random_descriptor(&mut rng)).collect();

    let planted_count = ((match_fraction * count as f64).floor() as usize).min(count);
    let mut planted: Vec<usize> = index::sample(&mut rng, count, planted_count).into_vec();
    planted.sort_unstable();

    let mut is_planted = vec![false; count];
    for &i in &planted {
        is_planted[i] = true;
    }
    let queries = (0..count)
        .map(|i| {
            if is_planted[i] {
                noisy_copy(&database[i], &noise, &mut rng)
            } else {
                random_descriptor(&mut rng)
            }
        })
        .collect();

    Ok(SyntheticPair {
        queries: DescriptorSet::new(format!("synthetic-{seed}-queries"), queries),
        database: DescriptorSet::new(format!("synthetic-{seed}-database"), database),
        ground_truth: planted.into_iter().map(|i| (i, i)).collect(),
    })
}

fn random_location(rng: &mut impl Rng) -> Point {
    Point::new(
        rng.random_range(0..IMAGE_WIDTH),
        rng.random_range(0..IMAGE_HEIGHT),
    )
}

/// Unit vector of absolute Gaussian magnitudes.
fn random_descriptor(rng: &mut impl Rng) -> Descriptor {
    let mut elements = [0.0; DESCRIPTOR_LEN];
    loop {
        for e in elements.iter_mut() {
            let g: f64 = StandardNormal.sample(rng);
            *e = g.abs();
        }
        if normalize_in_place(&mut elements).is_ok() {
            break;
        }
    }
    Descriptor::from_elements(&elements, random_location(rng))
        .expect("normalized elements lie in [0, 1]")
}

fn noisy_copy(source: &Descriptor, noise: &Normal<f64>, rng: &mut impl Rng) -> Descriptor {
    if noise.std_dev() == 0.0 {
        return Descriptor::from_elements(source.elements(), random_location(rng))
            .expect("source elements are valid");
    }
    let mut elements = *source.elements();
    for e in elements.iter_mut() {
        *e = (*e + noise.sample(rng)).clamp(0.0, 1.0);
    }
    if normalize_in_place(&mut elements).is_err() {
        elements = *source.elements();
    }
    Descriptor::from_elements(&elements, random_location(rng))
        .expect("normalized elements lie in [0, 1]")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptors::FLOAT_NORM_TOLERANCE;

    #[test]
    fn exact_copies_with_identity_truth() {
        let pair = generate_synthetic(10, 42, 1.0, 0.0).unwrap();
        assert_eq!(
            pair.ground_truth,
            (0..10).map(|i| (i, i)).collect::<Vec<_>>()
        );
        for (q, d) in pair.queries.iter().zip(&pair.database) {
            assert_eq!(q.elements(), d.elements());
            assert_eq!(q.fixed(), d.fixed());
        }
    }

    #[test]
    fn zero_fraction_has_no_truth() {
        let pair = generate_synthetic(10, 42, 0.0, 0.0).unwrap();
        assert!(pair.ground_truth.is_empty());
        assert_eq!(pair.queries.len(), 10);
    }

    #[test]
    fn partial_fraction_plants_floor_count() {
        let pair = generate_synthetic(10, 3, 0.55, 0.01).unwrap();
        assert_eq!(pair.ground_truth.len(), 5);
        assert!(pair.ground_truth.windows(2).all(|w| w[0].0 < w[1].0));
    }

    #[test]
    fn deterministic_in_seed() {
        let a = generate_synthetic(50, 9, 0.5, 0.02).unwrap();
        let b = generate_synthetic(50, 9, 0.5, 0.02).unwrap();
        assert_eq!(a.queries, b.queries);
        assert_eq!(a.database, b.database);
        assert_eq!(a.ground_truth, b.ground_truth);
        let c = generate_synthetic(50, 10, 0.5, 0.02).unwrap();
        assert_ne!(a.database, c.database);
    }

    #[test]
    fn outputs_are_normalized() {
        let pair = generate_synthetic(40, 1, 0.5, 0.1).unwrap();
        for d in pair.queries.iter().chain(&pair.database) {
            assert!(d.is_normalized(FLOAT_NORM_TOLERANCE));
            assert!(d.elements().iter().all(|e| (0.0..=1.0).contains(e)));
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(generate_synthetic(0, 1, 0.5, 0.1).is_err());
        assert!(generate_synthetic(5, 1, 1.5, 0.1).is_err());
        assert!(generate_synthetic(5, 1, 0.5, -0.1).is_err());
    }
}
