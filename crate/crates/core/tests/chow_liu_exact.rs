use noisy_tree::baseline::{chow_liu, max_spanning_tree};
use noisy_tree::equivalence::is_member;
use noisy_tree::generate::random_model;
use noisy_tree::oracle::{exact_joint, exact_mutual_information, noisy_joint};
use noisy_tree::sampler::sample_clean;
use noisy_tree::{IsingModel, NoiseSpec, TreeGraph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn exact_information_recovers_clean_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let n = rng.random_range(2..=9);
        let tree = TreeGraph::random(n, &mut rng).unwrap();
        let model = random_model(tree.clone(), (0.3, 1.2), (-0.3, 0.3), &mut rng).unwrap();
        let dist = exact_joint(&model).unwrap();
        let learned = max_spanning_tree(n, |i, j| exact_mutual_information(&dist, i, j)).unwrap();
        assert_eq!(learned, tree);
    }
}

#[test]
fn unequal_noise_misleads_exact_information() {
    let model = IsingModel::new(TreeGraph::chain(5).unwrap(), vec![1.2; 4], vec![0.0; 5]).unwrap();
    let noise = NoiseSpec::new(vec![0.0, 0.0, 0.3, 0.0, 0.0]).unwrap();
    let dist = noisy_joint(&exact_joint(&model).unwrap(), &noise).unwrap();
    let learned = max_spanning_tree(5, |i, j| exact_mutual_information(&dist, i, j)).unwrap();
    assert!(
        !is_member(&learned, model.tree()).unwrap(),
        "{:?}",
        learned.edges()
    );
}

#[test]
fn sampled_chow_liu_converges_without_noise() {
    let model =
        IsingModel::new(TreeGraph::star(6, 3).unwrap(), vec![0.8; 5], vec![0.1; 6]).unwrap();
    let batch = sample_clean(&model, 20_000, 4).unwrap();
    assert_eq!(&chow_liu(&batch).unwrap(), model.tree());
}
