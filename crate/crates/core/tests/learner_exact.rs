//! The learner on exact noisy moments must always land in the true equivalence class.

use std::time::Instant;

use noisy_tree::equivalence::is_member;
use noisy_tree::generate::{random_model, random_noise, random_weights};
use noisy_tree::learner::find_tree;
use noisy_tree::noise::{exact_clean_moments, noisy_moments};
use noisy_tree::oracle::{exact_joint, exact_moments, free_trees, noisy_joint};
use noisy_tree::{AssumptionParams, IsingModel, MomentEstimate, NoiseSpec, TreeGraph};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn oracle_noisy(model: &IsingModel, noise: &NoiseSpec) -> MomentEstimate {
    exact_moments(&noisy_joint(&exact_joint(model).unwrap(), noise).unwrap())
}

fn learns(model: &IsingModel, noise: &NoiseSpec, moments: &MomentEstimate) -> Result<bool, String> {
    let params = AssumptionParams::fitted(model, noise).unwrap();
    let learned = find_tree(moments, &params).map_err(|e| e.to_string())?;
    Ok(is_member(&learned.tree().unwrap(), model.tree()).unwrap())
}

#[test]
fn every_shape_up_to_eight_nodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for n in 2..=8 {
        for shape in free_trees(n).unwrap() {
            for _ in 0..3 {
                let mut perm: Vec<usize> = (0..n).collect();
                perm.shuffle(&mut rng);
                let tree = shape.relabeled(&perm).unwrap();
                let model = random_model(tree, (0.5, 1.2), (-0.3, 0.3), &mut rng).unwrap();
                let noise = random_noise(n, 0.0, 0.2, &mut rng).unwrap();
                let ok = learns(&model, &noise, &oracle_noisy(&model, &noise));
                assert_eq!(ok, Ok(true), "tree {:?}", model.tree().edges());
                checked += 1;
            }
        }
    }
    // 1 + 1 + 2 + 3 + 6 + 11 + 23 shapes
    assert_eq!(checked, 3 * 47);
}

#[test]
fn random_trees_with_zero_bias_and_no_noise() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in 2..=8 {
        for shape in free_trees(n).unwrap() {
            let model = random_weights(shape, 0.6, 1.2, 0.0, &mut rng).unwrap();
            let noise = NoiseSpec::zero(n);
            assert_eq!(
                learns(&model, &noise, &oracle_noisy(&model, &noise)),
                Ok(true)
            );
        }
    }
}

#[test]
fn two_hundred_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for trial in 0..200 {
        let n = 4 + trial % 7;
        let tree = TreeGraph::random(n, &mut rng).unwrap();
        let model = random_model(tree, (0.5, 1.2), (-0.3, 0.3), &mut rng).unwrap();
        let noise = random_noise(n, 0.0, 0.2, &mut rng).unwrap();
        let ok = learns(&model, &noise, &oracle_noisy(&model, &noise));
        assert_eq!(ok, Ok(true), "trial {trial}: {:?}", model.tree().edges());
    }
}

#[test]
fn larger_trees_from_closed_form_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [15, 30, 60] {
        for _ in 0..5 {
            let tree = TreeGraph::random(n, &mut rng).unwrap();
            let model = random_model(tree, (0.5, 1.2), (-0.3, 0.3), &mut rng).unwrap();
            let noise = random_noise(n, 0.0, 0.2, &mut rng).unwrap();
            let moments = noisy_moments(&exact_clean_moments(&model), &noise).unwrap();
            assert_eq!(learns(&model, &noise, &moments), Ok(true));
        }
    }
    let chain = random_weights(TreeGraph::chain(40).unwrap(), 0.7, 1.2, 0.0, &mut rng).unwrap();
    let noise = random_noise(40, 0.0, 0.15, &mut rng).unwrap();
    let moments = noisy_moments(&exact_clean_moments(&chain), &noise).unwrap();
    assert_eq!(learns(&chain, &noise, &moments), Ok(true));
}

#[test]
fn named_examples() {
    let chain7 = IsingModel::new(TreeGraph::chain(7).unwrap(), vec![0.8; 6], vec![0.0; 7]).unwrap();
    let noise = NoiseSpec::new(vec![0.1, 0.05, 0.15, 0.0, 0.2, 0.1, 0.05]).unwrap();
    assert_eq!(
        learns(&chain7, &noise, &oracle_noisy(&chain7, &noise)),
        Ok(true)
    );

    let caterpillar = TreeGraph::new(
        10,
        [
            (0, 1),
            (1, 2),
            (2, 3),
            (3, 4),
            (0, 5),
            (1, 6),
            (2, 7),
            (3, 8),
            (4, 9),
        ],
    )
    .unwrap();
    let model = IsingModel::new(caterpillar, vec![0.9; 9], vec![0.1; 10]).unwrap();
    let noise = NoiseSpec::new(vec![0.1; 10]).unwrap();
    assert_eq!(
        learns(&model, &noise, &oracle_noisy(&model, &noise)),
        Ok(true)
    );
}

#[test]
fn learned_edges_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let tree = TreeGraph::random(12, &mut rng).unwrap();
    let model = random_model(tree, (0.5, 1.2), (-0.3, 0.3), &mut rng).unwrap();
    let noise = random_noise(12, 0.0, 0.2, &mut rng).unwrap();
    let moments = noisy_moments(&exact_clean_moments(&model), &noise).unwrap();
    let params = AssumptionParams::fitted(&model, &noise).unwrap();
    let a = find_tree(&moments, &params).unwrap();
    let b = find_tree(&moments, &params).unwrap();
    assert_eq!(a.edges(), b.edges());
    assert_eq!(a.edges().len(), 11);
}

#[test]
fn runtime_grows_at_most_cubically() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut times = Vec::new();
    for n in [20usize, 40, 80] {
        let model = random_weights(TreeGraph::chain(n).unwrap(), 0.7, 1.2, 0.0, &mut rng).unwrap();
        let noise = random_noise(n, 0.0, 0.15, &mut rng).unwrap();
        let moments = noisy_moments(&exact_clean_moments(&model), &noise).unwrap();
        let params = AssumptionParams::fitted(&model, &noise).unwrap();
        let best = (0..5)
            .map(|_| {
                let start = Instant::now();
                find_tree(&moments, &params).unwrap();
                start.elapsed().as_secs_f64()
            })
            .fold(f64::INFINITY, f64::min);
        times.push(best);
    }
    // doubling n may cost at most 8x, with a 2x allowance and a floor against timer noise
    let floor = 2e-4;
    for k in 1..times.len() {
        assert!(times[k] <= 2.0 * 8.0 * times[k - 1].max(floor), "{times:?}");
    }
}
