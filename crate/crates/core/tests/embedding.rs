use ipd_core::embed::{
    prediction_loss, sgd_prediction, EmbeddingModel, EmbeddingParams, WalkCorpus,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// About a thousand tokens is far less than the default ten epochs need, so
/// the cluster tests train for twenty.
const CLUSTER_EPOCHS: usize = 20;

fn two_cluster_corpus(seed: u64) -> (WalkCorpus, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sentences = Vec::new();
    let mut cluster = Vec::new();
    for c in 0..2 {
        for _ in 0..50 {
            let len = rng.random_range(8..=12);
            sentences.push(
                (0..len)
                    .map(|_| format!("{}{}", ["a", "b"][c], rng.random_range(0..20)))
                    .collect(),
            );
            cluster.push(c);
        }
    }
    (WalkCorpus::from_sentences(sentences), cluster)
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

#[test]
fn inferred_vectors_separate_token_disjoint_clusters() {
    for seed in [1, 2, 3] {
        let (corpus, cluster) = two_cluster_corpus(100 + seed);
        let params = EmbeddingParams {
            dim: 16,
            epochs: CLUSTER_EPOCHS,
            seed,
            ..Default::default()
        };
        let model = EmbeddingModel::train(&corpus, params).unwrap();
        let vectors: Vec<Vec<f64>> = corpus
            .sentences
            .iter()
            .map(|s| model.infer_tokens(s).unwrap().vector.to_dense())
            .collect();
        let (mut intra, mut n_intra, mut inter, mut n_inter) = (0.0, 0, 0.0, 0);
        for i in 0..vectors.len() {
            for j in i + 1..vectors.len() {
                let c = cosine(&vectors[i], &vectors[j]);
                if cluster[i] == cluster[j] {
                    intra += c;
                    n_intra += 1;
                } else {
                    inter += c;
                    n_inter += 1;
                }
            }
        }
        let margin = intra / n_intra as f64 - inter / n_inter as f64;
        assert!(margin > 0.1, "seed {seed}: margin {margin}");
    }
}

#[test]
fn epoch_loss_does_not_increase_early() {
    let (corpus, _) = two_cluster_corpus(7);
    let params = EmbeddingParams {
        dim: 16,
        epochs: CLUSTER_EPOCHS,
        ..Default::default()
    };
    let model = EmbeddingModel::train(&corpus, params).unwrap();
    let losses = model.epoch_losses();
    assert!(
        losses[1] <= losses[0] && losses[2] <= losses[1],
        "{losses:?}"
    );
}

#[test]
fn vocabulary_is_exactly_the_corpus_tokens() {
    let (corpus, _) = two_cluster_corpus(9);
    let mut distinct: Vec<&String> = corpus.sentences.iter().flatten().collect();
    distinct.sort();
    distinct.dedup();
    let model = EmbeddingModel::train(
        &corpus,
        EmbeddingParams {
            dim: 4,
            epochs: 1,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(model.vocabulary().len(), distinct.len());
    for t in distinct {
        assert!(model.word_vector(t).is_some());
    }
}

/// Loss of one (paragraph, context words, targets) prediction as a function
/// of every trainable input, for finite differencing.
fn triple_loss(
    paragraph: &[f64],
    words: &[Vec<f64>],
    output: &[f64],
    targets: &[(usize, bool)],
    d: usize,
) -> f64 {
    let count = (words.len() + 1) as f64;
    let hidden: Vec<f64> = (0..d)
        .map(|k| (paragraph[k] + words.iter().map(|w| w[k]).sum::<f64>()) / count)
        .collect();
    prediction_loss(&hidden, targets, output, d)
}

fn relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    let diff: f64 = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).powi(2))
        .sum::<f64>()
        .sqrt();
    let scale: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    diff / scale.max(1e-12)
}

#[test]
fn negative_sampling_gradient_matches_finite_differences() {
    let d = 5;
    let rows = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rand_vec = |n: usize| {
        (0..n)
            .map(|_| rng.random_range(-0.8..0.8))
            .collect::<Vec<f64>>()
    };
    let paragraph = rand_vec(d);
    let words = vec![rand_vec(d), rand_vec(d)];
    let output = rand_vec(rows * d);
    let targets = [(1, true), (0, false), (3, false)];
    let count = (words.len() + 1) as f64;
    let h = 1e-6;

    // analytic: one step at step size 1 moves by minus the gradient
    let hidden: Vec<f64> = (0..d)
        .map(|k| (paragraph[k] + words[0][k] + words[1][k]) / count)
        .collect();
    let mut stepped = output.clone();
    let mut neu1e = vec![0.0; d];
    sgd_prediction(&hidden, &targets, &mut stepped, d, 1.0, &mut neu1e);
    let grad_hidden_input: Vec<f64> = neu1e.iter().map(|g| -g / count).collect();
    let grad_output: Vec<f64> = output
        .iter()
        .zip(&stepped)
        .map(|(before, after)| before - after)
        .collect();

    let numeric_paragraph: Vec<f64> = (0..d)
        .map(|k| {
            let (mut plus, mut minus) = (paragraph.clone(), paragraph.clone());
            plus[k] += h;
            minus[k] -= h;
            (triple_loss(&plus, &words, &output, &targets, d)
                - triple_loss(&minus, &words, &output, &targets, d))
                / (2.0 * h)
        })
        .collect();
    assert!(relative_error(&grad_hidden_input, &numeric_paragraph) < 1e-4);

    for w in 0..words.len() {
        let numeric_word: Vec<f64> = (0..d)
            .map(|k| {
                let (mut plus, mut minus) = (words.clone(), words.clone());
                plus[w][k] += h;
                minus[w][k] -= h;
                (triple_loss(&paragraph, &plus, &output, &targets, d)
                    - triple_loss(&paragraph, &minus, &output, &targets, d))
                    / (2.0 * h)
            })
            .collect();
        assert!(relative_error(&grad_hidden_input, &numeric_word) < 1e-4);
    }

    let numeric_output: Vec<f64> = (0..rows * d)
        .map(|i| {
            let (mut plus, mut minus) = (output.clone(), output.clone());
            plus[i] += h;
            minus[i] -= h;
            (triple_loss(&paragraph, &words, &plus, &targets, d)
                - triple_loss(&paragraph, &words, &minus, &targets, d))
                / (2.0 * h)
        })
        .collect();
    assert!(relative_error(&grad_output, &numeric_output) < 1e-4);
}
