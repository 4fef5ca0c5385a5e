use siftmatch_core::agreement::{compare, CORDIC_BOUND_LSB};
use siftmatch_core::descriptors::{
    generate_synthetic, load_descriptor_set, save_descriptor_set, Descriptor,
};
use siftmatch_core::pipeline::{run_functional, run_pipeline};
use siftmatch_core::reference::{angular_distance, match_all};
use siftmatch_core::{
    DescriptorSet, FileFormat, LoadOptions, PipelineConfig, Point, ThresholdMode,
};

#[test]
fn pipeline_argmin_follows_float_argmin_when_well_separated() {
    let cfg = PipelineConfig::default();
    let gap = 2.0 * CORDIC_BOUND_LSB * cfg.cordic.angle_lsb();
    let mut checked = 0;
    for seed in 0..4 {
        let pair = generate_synthetic(200, seed, 0.5, 0.05).unwrap();
        let fixed = run_functional(&pair.queries, &pair.database, &cfg).unwrap();
        for (k, q) in pair.queries.iter().enumerate() {
            let mut angles: Vec<(f64, usize)> = pair
                .database
                .iter()
                .enumerate()
                .map(|(j, d)| (angular_distance(q, d), j))
                .collect();
            angles.sort_by(|a, b| a.0.total_cmp(&b.0));
            if angles[1].0 - angles[0].0 > gap {
                checked += 1;
                assert_eq!(
                    fixed[k].best_index,
                    Some(angles[0].1),
                    "seed {seed} query {k}"
                );
            }
        }
    }
    assert!(checked > 500);
}

#[test]
fn planted_pairs_are_found_by_both_engines() {
    let pair = generate_synthetic(150, 21, 0.6, 0.02).unwrap();
    let cfg = PipelineConfig::default();
    let float = match_all(&pair.queries, &pair.database, 0.6).unwrap();
    let fixed = run_pipeline(&pair.queries, &pair.database, &cfg).unwrap();
    for &(q, d) in &pair.ground_truth {
        assert!(float[q].matched && float[q].best_index == Some(d));
        assert!(fixed.matches[q].matched && fixed.matches[q].best_index == Some(d));
    }
}

#[test]
fn engines_agree_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let pair = generate_synthetic(80, 2, 0.5, 0.02).unwrap();
    let qp = dir.path().join("queries.siftdb");
    let dp = dir.path().join("database.siftd");
    save_descriptor_set(&pair.queries, &qp, FileFormat::Binary).unwrap();
    save_descriptor_set(&pair.database, &dp, FileFormat::Text).unwrap();
    let q = load_descriptor_set(&qp, FileFormat::Binary, LoadOptions::default()).unwrap();
    let d = load_descriptor_set(&dp, FileFormat::Text, LoadOptions::default()).unwrap();
    // the binary format stores UQ1.15 raws, so only the fixed view survives
    for (loaded, original) in q.iter().zip(&pair.queries) {
        assert_eq!(loaded.fixed(), original.fixed());
        assert_eq!(loaded.location(), original.location());
    }

    let cfg = PipelineConfig {
        threshold_mode: ThresholdMode::Exact0_6,
        ..PipelineConfig::default()
    };
    let fixed = run_pipeline(&q, &d, &cfg).unwrap();
    let float = match_all(&q, &d, 0.6).unwrap();
    let report = compare(&float, &fixed.matches, 0.6).unwrap();
    assert!(report.agreement_percent >= 98.0);
}

#[test]
fn later_blocks_ignore_earlier_data() {
    let pair = generate_synthetic(66, 13, 0.5, 0.02).unwrap();
    let cfg = PipelineConfig::default();
    let all = run_pipeline(&pair.queries, &pair.database, &cfg).unwrap();

    // Replace the first block by arbitrary other descriptors: the second
    // block's verdicts must not move.
    let other = generate_synthetic(33, 99, 0.0, 0.0).unwrap();
    let mut swapped: Vec<Descriptor> = other.queries.descriptors.clone();
    swapped.extend(pair.queries.descriptors[33..].iter().cloned());
    let swapped = DescriptorSet::new("swapped", swapped);
    let rerun = run_pipeline(&swapped, &pair.database, &cfg).unwrap();
    assert_eq!(all.matches[33..], rerun.matches[33..]);
}

#[test]
fn identical_descriptors_tie_to_lowest_index() {
    let d = Descriptor::one_hot(5, Point::new(1, 1));
    let db = DescriptorSet::new(
        "db",
        vec![
            d.clone(),
            d.clone(),
            Descriptor::one_hot(6, Point::new(2, 2)),
        ],
    );
    let q = DescriptorSet::new("q", vec![d]);
    let cfg = PipelineConfig::default();
    let fixed = run_pipeline(&q, &db, &cfg).unwrap();
    let float = match_all(&q, &db, 0.6).unwrap();
    assert_eq!(fixed.matches[0].best_index, Some(0));
    assert_eq!(float[0].best_index, Some(0));
    // min == second_min == 0: no match in either engine
    assert!(!fixed.matches[0].matched);
    assert!(!float[0].matched);
}
