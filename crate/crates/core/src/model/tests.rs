use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::autograd::softmax_rows;
use crate::model::params::QueryEncoder;

fn config(dim: usize, heads: usize, layers: usize, max_frames: usize) -> ModelConfig {
    let mut c = ModelConfig::new(dim);
    c.heads = heads;
    c.layers = layers;
    c.max_frames = max_frames;
    c
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, dim: usize) -> EmbeddingMatrix {
    let data = (0..rows * dim).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    EmbeddingMatrix::new(rows, dim, data).unwrap()
}

fn video(id: &str, frames: EmbeddingMatrix) -> VideoRecord {
    VideoRecord::new(id, frames).unwrap()
}

fn query(id: &str, turns: EmbeddingMatrix, mode: DialogueMode) -> DialogueQuery {
    DialogueQuery::new(id, turns, mode).unwrap()
}

fn randomized(cfg: ModelConfig, seed: u64) -> ModelParams {
    let mut p = ModelParams::init(cfg, InitScheme::Random, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let (rows, cols) = (p.weights.positional.rows(), p.weights.positional.cols());
    p.weights.positional = Tensor::uniform(rows, cols, 0.5, &mut rng);
    for layer in &mut p.weights.layers {
        layer.norm_gain = Tensor::uniform(1, cols, 0.5, &mut rng).map(|v| v + 1.0);
        layer.norm_bias = Tensor::uniform(1, cols, 0.2, &mut rng);
    }
    p
}

#[test]
fn inject_positions_zero_table_is_identity() {
    let p = ModelParams::init(config(4, 2, 1, 8), InitScheme::Aligned, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let frames = random_matrix(&mut rng, 3, 4);
    let out = p.inject_positions(&frames).unwrap();
    assert_eq!(out, frames.to_tensor().unwrap());
}

#[test]
fn inject_positions_zero_frames_returns_table_rows() {
    let p = randomized(config(4, 2, 1, 8), 2);
    let zeros = EmbeddingMatrix::new(5, 4, vec![0.0; 20]).unwrap();
    let out = p.inject_positions(&zeros).unwrap();
    assert_eq!(out, p.weights.positional.slice_rows(0, 5).unwrap());
}

#[test]
fn inject_positions_matches_elementwise_oracle() {
    let p = randomized(config(4, 2, 1, 8), 3);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let frames = random_matrix(&mut rng, 3, 4);
    let out = p.inject_positions(&frames).unwrap();
    for r in 0..3 {
        for c in 0..4 {
            let expect = f64::from(frames.row(r)[c]) + p.weights.positional.get(r, c);
            assert_eq!(out.get(r, c), expect);
        }
    }
}

#[test]
fn too_many_frames_is_error() {
    let p = ModelParams::init(config(4, 2, 1, 2), InitScheme::Aligned, 0).unwrap();
    let frames = EmbeddingMatrix::new(3, 4, vec![0.1; 12]).unwrap();
    let err = p.encode_frames(&video("v", frames)).unwrap_err();
    assert!(matches!(err, ModelError::TooManyFrames { frames: 3, max: 2 }));
    assert!(err.to_string().contains("subsample"));
}

#[test]
fn subsampling_is_uniform() {
    let rows: Vec<Vec<f32>> = (0..10).map(|i| vec![i as f32]).collect();
    let v = video("v", EmbeddingMatrix::from_rows(&rows).unwrap());
    let s = v.subsampled(4);
    let picked: Vec<f32> = (0..4).map(|r| s.frames.row(r)[0]).collect();
    assert_eq!(picked, vec![0.0, 2.0, 5.0, 7.0]);
    assert_eq!(v.subsampled(32), v);
}

#[test]
fn zero_layers_is_position_injection() {
    let p = randomized(config(6, 3, 0, 8), 5);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let v = video("v", random_matrix(&mut rng, 4, 6));
    assert_eq!(p.encode_frames(&v).unwrap(), p.inject_positions(&v.frames).unwrap());
}

#[test]
fn dimension_mismatch_is_error() {
    let p = ModelParams::init(config(8, 2, 1, 8), InitScheme::Aligned, 0).unwrap();
    let v = video("v", EmbeddingMatrix::new(2, 4, vec![0.0; 8]).unwrap());
    assert!(matches!(
        p.encode_frames(&v),
        Err(ModelError::DimensionMismatch { expected: 8, got: 4 })
    ));
}

/// Applies `perm` to frame rows and to the first `n` positional rows.
fn permute_jointly(p: &ModelParams, frames: &EmbeddingMatrix, perm: &[usize]) -> (ModelParams, EmbeddingMatrix) {
    let mut q = p.clone();
    for (dst, &src) in perm.iter().enumerate() {
        q.weights
            .positional
            .row_mut(dst)
            .copy_from_slice(p.weights.positional.row(src));
    }
    (q, frames.select_rows(perm))
}

#[test]
fn encode_frames_is_permutation_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let p = randomized(config(8, 2, 2, 6), 8);
    let frames = random_matrix(&mut rng, 6, 8);
    let perm = [3, 0, 5, 1, 4, 2];
    let base = p.encode_frames(&video("v", frames.clone())).unwrap();
    let (q, permuted) = permute_jointly(&p, &frames, &perm);
    let out = q.encode_frames(&video("v", permuted)).unwrap();
    for (dst, &src) in perm.iter().enumerate() {
        for c in 0..8 {
            assert!((out.get(dst, c) - base.get(src, c)).abs() <= 1e-9);
        }
    }
}

#[test]
fn single_head_layer_matches_scalar_oracle() {
    let mut p = ModelParams::init(config(4, 1, 1, 2), InitScheme::Aligned, 0).unwrap();
    let m = |vals: [f64; 16]| Tensor::new(4, 4, vals.to_vec()).unwrap();
    p.weights.positional = Tensor::new(2, 4, vec![0.1, 0.0, -0.1, 0.2, 0.0, 0.3, 0.1, -0.2]).unwrap();
    {
        let l = &mut p.weights.layers[0];
        l.query = m([0.5, 0.1, 0.0, 0.2, -0.3, 0.4, 0.1, 0.0, 0.2, 0.0, 0.3, -0.1, 0.1, 0.2, 0.0, 0.4]);
        l.key = m([0.3, -0.2, 0.1, 0.0, 0.1, 0.5, 0.0, 0.2, 0.0, 0.1, 0.4, 0.0, -0.2, 0.0, 0.1, 0.3]);
        l.value = m([0.2, 0.0, 0.1, 0.3, 0.0, 0.4, -0.1, 0.0, 0.5, 0.1, 0.0, 0.2, 0.1, -0.3, 0.2, 0.0]);
        l.output = m([0.6, 0.0, 0.1, 0.0, 0.0, 0.5, 0.0, -0.2, 0.1, 0.0, 0.4, 0.0, 0.0, 0.2, 0.0, 0.3]);
        l.norm_gain = Tensor::new(1, 4, vec![1.0, 0.9, 1.1, 1.2]).unwrap();
        l.norm_bias = Tensor::new(1, 4, vec![0.0, 0.1, -0.1, 0.05]).unwrap();
    }
    let frames = EmbeddingMatrix::new(2, 4, vec![1.0, -0.5, 0.25, 0.0, 0.5, 0.5, -1.0, 2.0]).unwrap();
    let got = p.encode_frames(&video("v", frames.clone())).unwrap();

    // Scalar-by-scalar evaluation of one attention block.
    let l = &p.weights.layers[0];
    let x: Vec<Vec<f64>> = (0..2)
        .map(|i| (0..4).map(|c| f64::from(frames.row(i)[c]) + p.weights.positional.get(i, c)).collect())
        .collect();
    let proj = |w: &Tensor, row: &Vec<f64>| -> Vec<f64> {
        (0..4).map(|j| (0..4).map(|k| row[k] * w.get(k, j)).sum()).collect()
    };
    let q: Vec<Vec<f64>> = x.iter().map(|r| proj(&l.query, r)).collect();
    let k: Vec<Vec<f64>> = x.iter().map(|r| proj(&l.key, r)).collect();
    let v: Vec<Vec<f64>> = x.iter().map(|r| proj(&l.value, r)).collect();
    for i in 0..2 {
        let logits: Vec<f64> = (0..2)
            .map(|j| (0..4).map(|c| q[i][c] * k[j][c]).sum::<f64>() / 2.0)
            .collect();
        let z: f64 = logits.iter().map(|a| a.exp()).sum();
        let alpha: Vec<f64> = logits.iter().map(|a| a.exp() / z).collect();
        let mixed: Vec<f64> = (0..4).map(|c| alpha[0] * v[0][c] + alpha[1] * v[1][c]).collect();
        let out = proj(&l.output, &mixed);
        let resid: Vec<f64> = (0..4).map(|c| x[i][c] + out[c]).collect();
        let mean = resid.iter().sum::<f64>() / 4.0;
        let var = resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / 4.0;
        for c in 0..4 {
            let expect = (resid[c] - mean) / (var + 1e-5).sqrt() * l.norm_gain.get(0, c) + l.norm_bias.get(0, c);
            assert!((got.get(i, c) - expect).abs() <= 1e-9, "row {i} col {c}");
        }
    }
}

fn recurrent_cell(p: &ModelParams) -> &crate::model::params::RecurrenceCell<Tensor> {
    match &p.weights.query_encoder {
        QueryEncoder::Recurrent(c) => c,
        _ => panic!("expected recurrent encoder"),
    }
}

#[test]
fn per_turn_single_turn_applies_cell_once() {
    let p = randomized(config(4, 2, 1, 4), 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let turns = random_matrix(&mut rng, 1, 4);
    let out = p.encode_dialogue(&query("q", turns.clone(), DialogueMode::PerTurn)).unwrap();
    let cell = recurrent_cell(&p);
    let t = turns.to_tensor().unwrap();
    let expect = cell
        .initial_state
        .matmul(&cell.state_weight)
        .unwrap()
        .zip_map(&t.matmul(&cell.input_weight).unwrap(), "x", |a, b| a + b)
        .unwrap()
        .zip_map(&cell.bias, "x", |a, b| a + b)
        .unwrap();
    assert!(out.max_abs_diff(&expect) <= 1e-12);
}

#[test]
fn per_turn_matches_unrolled_recurrence() {
    let mut p = ModelParams::init(config(3, 1, 0, 4), InitScheme::Aligned, 0).unwrap();
    if let QueryEncoder::Recurrent(cell) = &mut p.weights.query_encoder {
        cell.state_weight = Tensor::new(3, 3, vec![0.5, 0.1, 0.0, 0.0, 0.4, -0.2, 0.3, 0.0, 0.6]).unwrap();
        cell.input_weight = Tensor::new(3, 3, vec![1.0, 0.0, 0.2, -0.1, 0.9, 0.0, 0.0, 0.3, 0.7]).unwrap();
        cell.bias = Tensor::new(1, 3, vec![0.01, -0.02, 0.03]).unwrap();
        cell.initial_state = Tensor::new(1, 3, vec![0.1, 0.2, -0.1]).unwrap();
    }
    let turns = EmbeddingMatrix::new(3, 3, vec![1.0, 0.0, -1.0, 0.5, 0.5, 0.5, -0.25, 1.0, 0.0]).unwrap();
    let out = p.encode_dialogue(&query("q", turns.clone(), DialogueMode::PerTurn)).unwrap();

    let cell = recurrent_cell(&p);
    let mut state: Vec<f64> = cell.initial_state.data().to_vec();
    for i in 0..3 {
        let mut next = vec![0.0; 3];
        for j in 0..3 {
            let mut s = cell.bias.get(0, j);
            for k in 0..3 {
                s += state[k] * cell.state_weight.get(k, j);
                s += f64::from(turns.row(i)[k]) * cell.input_weight.get(k, j);
            }
            next[j] = s;
        }
        state = next;
        for j in 0..3 {
            assert!((out.get(i, j) - state[j]).abs() <= 1e-9);
        }
    }
}

#[test]
fn prefix_mode_with_identity_projection_is_identity() {
    let mut cfg = config(4, 2, 1, 4);
    cfg.dialogue_mode = DialogueMode::CumulativePrefix;
    let p = ModelParams::init(cfg, InitScheme::Aligned, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let turns = random_matrix(&mut rng, 5, 4);
    let out = p
        .encode_dialogue(&query("q", turns.clone(), DialogueMode::CumulativePrefix))
        .unwrap();
    assert_eq!(out, turns.to_tensor().unwrap());
}

#[test]
fn mode_mismatch_is_error() {
    let p = ModelParams::init(config(4, 2, 1, 4), InitScheme::Aligned, 0).unwrap();
    let turns = EmbeddingMatrix::new(2, 4, vec![0.0; 8]).unwrap();
    let err = p
        .encode_dialogue(&query("q", turns, DialogueMode::CumulativePrefix))
        .unwrap_err();
    assert!(matches!(err, ModelError::ModeMismatch { .. }));
}

#[test]
fn fusion_modes() {
    let mut cfg = config(2, 1, 0, 4);
    let mean = ModelParams::init(cfg.clone(), InitScheme::Aligned, 0).unwrap();
    cfg.fusion = Fusion::Last;
    let last = ModelParams::init(cfg, InitScheme::Aligned, 0).unwrap();

    let single = Tensor::new(1, 2, vec![0.3, -0.7]).unwrap();
    assert_eq!(mean.fuse_dialogue(&single).unwrap(), single);
    assert_eq!(last.fuse_dialogue(&single).unwrap(), single);

    let two = Tensor::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    assert_eq!(mean.fuse_dialogue(&two).unwrap().data(), &[0.5, 0.5]);

    let many = Tensor::new(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    assert_eq!(last.fuse_dialogue(&many).unwrap().data(), &[5.0, 6.0]);
}

#[test]
fn pool_single_frame() {
    let p = ModelParams::init(config(3, 1, 0, 4), InitScheme::Aligned, 0).unwrap();
    let d = Tensor::new(1, 3, vec![0.2, -0.4, 1.0]).unwrap();
    let f = Tensor::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
    let pooled = p.pool_video(&d, &f).unwrap();
    assert_eq!(pooled.weights, vec![1.0]);
    assert_eq!(pooled.video_rep, f.data());
}

#[test]
fn pool_identical_frames() {
    let p = ModelParams::init(config(3, 1, 0, 4), InitScheme::Aligned, 0).unwrap();
    let d = Tensor::new(1, 3, vec![0.2, -0.4, 1.0]).unwrap();
    let f = Tensor::new(2, 3, vec![1.0, 2.0, 3.0, 1.0, 2.0, 3.0]).unwrap();
    let pooled = p.pool_video(&d, &f).unwrap();
    assert_eq!(pooled.weights, vec![0.5, 0.5]);
    for (a, b) in pooled.video_rep.iter().zip(f.row(0)) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn pool_two_axis_frames() {
    let p = ModelParams::init(config(2, 1, 0, 4), InitScheme::Aligned, 0).unwrap();
    let d = Tensor::new(1, 2, vec![1.0, 0.0]).unwrap();
    let f = Tensor::new(2, 2, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
    let pooled = p.pool_video(&d, &f).unwrap();
    // softmax([1, 0]) = [e/(e+1), 1/(e+1)]
    let e = std::f64::consts::E;
    let (w0, w1) = (e / (e + 1.0), 1.0 / (e + 1.0));
    assert!((w0 - 0.7311).abs() < 1e-4 && (w1 - 0.2689).abs() < 1e-4);
    assert!((pooled.weights[0] - w0).abs() < 1e-4);
    assert!((pooled.weights[1] - w1).abs() < 1e-4);
    assert!((pooled.video_rep[0] - w0).abs() < 1e-4);
    assert!((pooled.video_rep[1] - w1).abs() < 1e-4);
    assert!((pooled.score - 0.7311).abs() < 1e-4);
}

#[test]
fn pool_properties_hold_for_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let p = randomized(config(8, 2, 1, 8), 22);
    for _ in 0..100 {
        let n = rng.random_range(1..=8);
        let d_h = Tensor::uniform(1, 8, 2.0, &mut rng);
        let frames = Tensor::uniform(n, 8, 2.0, &mut rng);
        let pooled = p.pool_video(&d_h, &frames).unwrap();
        let total: f64 = pooled.weights.iter().sum();
        assert!((total - 1.0).abs() <= 1e-6);
        assert!(pooled.weights.iter().all(|&w| w > 0.0));
        let s: f64 = d_h.data().iter().zip(&pooled.video_rep).map(|(a, b)| a * b).sum();
        assert!((pooled.score - s).abs() <= 1e-9);

        // Shift every similarity by the same constant via a frame offset
        // along D^h; the weights must not move.
        let c = rng.random_range(-3.0..3.0);
        let norm_sq = d_h.sum_sq();
        let mut shifted = frames.clone();
        for r in 0..n {
            for (v, dv) in shifted.row_mut(r).iter_mut().zip(d_h.data()) {
                *v += c * dv / norm_sq;
            }
        }
        let again = p.pool_video(&d_h, &shifted).unwrap();
        for (a, b) in pooled.weights.iter().zip(&again.weights) {
            assert!((a - b).abs() <= 1e-9);
        }
    }
}

#[test]
fn zero_query_gives_uniform_weights_and_zero_score() {
    let p = ModelParams::init(config(4, 1, 0, 8), InitScheme::Aligned, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let frames = Tensor::uniform(5, 4, 1.0, &mut rng);
    let pooled = p.pool_video(&Tensor::zeros(1, 4), &frames).unwrap();
    for w in &pooled.weights {
        assert!((w - 0.2).abs() < 1e-15);
    }
    assert_eq!(pooled.score, 0.0);
}

#[test]
fn joint_permutation_leaves_pooled_score_unchanged() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let p = randomized(config(8, 4, 2, 8), 25);
    let frames = random_matrix(&mut rng, 7, 8);
    let d_h = Tensor::uniform(1, 8, 1.0, &mut rng);
    let base = p.pool_video(&d_h, &p.encode_frames(&video("v", frames.clone())).unwrap()).unwrap();
    let perm = [6, 2, 0, 4, 1, 5, 3];
    let (q, permuted) = permute_jointly(&p, &frames, &perm);
    let moved = q.pool_video(&d_h, &q.encode_frames(&video("v", permuted)).unwrap()).unwrap();
    assert!((base.score - moved.score).abs() <= 1e-9);
    for (a, b) in base.video_rep.iter().zip(&moved.video_rep) {
        assert!((a - b).abs() <= 1e-9);
    }
}

#[test]
fn reversing_frames_changes_score_with_positions() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let p = randomized(config(8, 2, 2, 8), 27);
    let mut changed = 0;
    for _ in 0..100 {
        let frames = random_matrix(&mut rng, 6, 8);
        let reversed: Vec<usize> = (0..6).rev().collect();
        let d_h = Tensor::uniform(1, 8, 1.0, &mut rng);
        let a = p.pool_video(&d_h, &p.encode_frames(&video("v", frames.clone())).unwrap()).unwrap();
        let b = p
            .pool_video(&d_h, &p.encode_frames(&video("v", frames.select_rows(&reversed))).unwrap())
            .unwrap();
        if (a.score - b.score).abs() > 1e-9 {
            changed += 1;
        }
    }
    assert!(changed >= 95, "only {changed}/100 trials changed");
}

fn sample_corpus(rng: &mut ChaCha8Rng, q: usize, v: usize, dim: usize) -> (Vec<DialogueQuery>, Vec<VideoRecord>) {
    let queries = (0..q)
        .map(|i| query(&format!("q{i}"), random_matrix(rng, 3, dim), DialogueMode::PerTurn))
        .collect();
    let videos = (0..v)
        .map(|i| video(&format!("v{i}"), random_matrix(rng, 4 + i % 3, dim)))
        .collect();
    (queries, videos)
}

#[test]
fn score_matrix_single_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let p = randomized(config(8, 2, 1, 8), 31);
    let (qs, vs) = sample_corpus(&mut rng, 1, 1, 8);
    let s = p.score_matrix(&qs, &vs).unwrap();
    assert_eq!(s.shape(), [1, 1]);
    let pair = p
        .pool_video(&p.query_representation(&qs[0]).unwrap(), &p.encode_frames(&vs[0]).unwrap())
        .unwrap();
    assert!((s.item() - pair.score).abs() <= 1e-12);
}

#[test]
fn score_matrix_equals_pairwise_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let mut cfg = config(8, 2, 2, 8);
    cfg.ffn_hidden = Some(12);
    let p = randomized(cfg, 33);
    let (qs, vs) = sample_corpus(&mut rng, 3, 4, 8);
    let batched = p.score_matrix(&qs, &vs).unwrap();
    for (i, q) in qs.iter().enumerate() {
        let d_h = p.query_representation(q).unwrap();
        for (j, v) in vs.iter().enumerate() {
            let pair = p.pool_video(&d_h, &p.encode_frames(v).unwrap()).unwrap();
            assert!((batched.get(i, j) - pair.score).abs() <= 1e-9);
        }
    }
}

#[test]
fn duplicated_video_duplicates_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let p = randomized(config(8, 2, 1, 8), 35);
    let (qs, mut vs) = sample_corpus(&mut rng, 3, 2, 8);
    vs.push(vs[0].clone());
    let s = p.score_matrix(&qs, &vs).unwrap();
    for i in 0..3 {
        assert_eq!(s.get(i, 0), s.get(i, 2));
    }
}

#[test]
fn score_matrix_rejects_empty_lists() {
    let p = ModelParams::init(config(4, 1, 0, 4), InitScheme::Aligned, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let (qs, vs) = sample_corpus(&mut rng, 1, 1, 4);
    assert!(p.score_matrix(&[], &vs).is_err());
    assert!(p.score_matrix(&qs, &[]).is_err());
}

#[test]
fn cosine_similarity_weights_are_normalized() {
    let mut cfg = config(8, 2, 1, 8);
    cfg.similarity = Similarity::Cosine;
    let p = ModelParams::init(cfg, InitScheme::Random, 40).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let d_h = Tensor::uniform(1, 8, 1.0, &mut rng);
    let frames = Tensor::uniform(5, 8, 1.0, &mut rng);
    let pooled = p.pool_video(&d_h, &frames).unwrap();
    let total: f64 = pooled.weights.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
    // Scaling the query leaves cosine weights unchanged.
    let bigger = p.pool_video(&d_h.map(|v| v * 3.0), &frames).unwrap();
    for (a, b) in pooled.weights.iter().zip(&bigger.weights) {
        assert!((a - b).abs() < 1e-9);
    }
}

#[test]
fn softmax_weights_match_direct_evaluation() {
    let p = randomized(config(4, 1, 0, 8), 50);
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let d_h = Tensor::uniform(1, 4, 1.0, &mut rng);
    let frames = Tensor::uniform(3, 4, 1.0, &mut rng);
    let sims = d_h.matmul(&frames.transpose()).unwrap();
    let expect = softmax_rows(&sims).unwrap();
    let pooled = p.pool_video(&d_h, &frames).unwrap();
    for (a, b) in pooled.weights.iter().zip(expect.data()) {
        assert!((a - b).abs() < 1e-15);
    }
}
