use super::*;
use crate::diff::{enumerate_operation_paths, ChangeOperator, OperationPath};
use crate::lang::parse;
use crate::PatchRecord;

fn record(buggy: &str) -> PatchRecord {
    PatchRecord {
        id: "t".to_string(),
        buggy_src: buggy.to_string(),
        fixed_src: buggy.to_string(),
        oracle: Vec::new(),
    }
}

fn toy_hp() -> HyperParams {
    HyperParams {
        d_t: 4,
        d_p: 4,
        d_o: 4,
        d_hidden: 4,
        max_l: 6,
        max_k: 150,
        lr: 0.01,
        epochs: 4,
        batch_size: 4,
        ablation: AblationFlags::default(),
    }
}

/// Independent straight-line re-implementation of the scoring equations in
/// plain vector arithmetic. Shares nothing with the tape machinery.
mod straightline {
    use super::*;

    fn matvec(w: &Tensor, x: &[f64]) -> Vec<f64> {
        let (m, k) = (w.shape()[0], w.shape()[1]);
        assert_eq!(k, x.len());
        (0..m)
            .map(|i| w.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    fn sigmoid(v: &mut [f64]) {
        for x in v {
            *x = 1.0 / (1.0 + (-*x).exp());
        }
    }

    fn tanh(v: &mut [f64]) {
        for x in v {
            *x = x.tanh();
        }
    }

    fn lstm_run(
        p: &LstmParams,
        inputs: &[Vec<f64>],
        start: Option<(Vec<f64>, Vec<f64>)>,
    ) -> (Vec<Vec<f64>>, (Vec<f64>, Vec<f64>)) {
        let hidden = p.hidden_width();
        let (mut h, mut c) = start.unwrap_or((vec![0.0; hidden], vec![0.0; hidden]));
        let mut states = Vec::new();
        for x in inputs {
            let mut xs = x.clone();
            xs.extend_from_slice(&h);
            let mut gi = matvec(&p.w_i, &xs);
            let mut gf = matvec(&p.w_f, &xs);
            let mut go = matvec(&p.w_o, &xs);
            let mut gg = matvec(&p.w_g, &xs);
            for (v, b) in [
                (&mut gi, &p.b_i),
                (&mut gf, &p.b_f),
                (&mut go, &p.b_o),
                (&mut gg, &p.b_g),
            ] {
                for (x, b) in v.iter_mut().zip(b.data()) {
                    *x += b;
                }
            }
            sigmoid(&mut gi);
            sigmoid(&mut gf);
            sigmoid(&mut go);
            tanh(&mut gg);
            let mut c_next = vec![0.0; hidden];
            for j in 0..hidden {
                c_next[j] = gf[j] * c[j] + gi[j] * gg[j];
            }
            let mut h_next = c_next.clone();
            tanh(&mut h_next);
            for j in 0..hidden {
                h_next[j] *= go[j];
            }
            h = h_next;
            c = c_next;
            states.push(h.clone());
        }
        (states, (h, c))
    }

    pub fn probs(
        cands: &[&OperationPath],
        params: &ModelParams,
        vocab: &Vocab,
        hp: &HyperParams,
    ) -> Vec<f64> {
        let mut fused = Vec::new();
        for cand in cands {
            let mut v_t = vec![0.0; hp.d_t];
            for r in vocab.token_rows(&cand.token) {
                for (o, v) in v_t.iter_mut().zip(params.e_t.row(r)) {
                    *o += v;
                }
            }
            let kinds = cand.path.truncated_kinds(hp.max_l);
            let v_p: Vec<f64> = if let Some(e_paths) = &params.e_paths {
                e_paths.row(vocab.path_row(kinds)).to_vec()
            } else {
                let embeds: Vec<Vec<f64>> = kinds
                    .iter()
                    .map(|k| params.e_p.row(k.index()).to_vec())
                    .collect();
                let (_, (hf, _)) = lstm_run(&params.path_fwd, &embeds, None);
                let rev: Vec<Vec<f64>> = embeds.iter().rev().cloned().collect();
                let (_, (hb, _)) = lstm_run(&params.path_bwd, &rev, None);
                let mut v = hf;
                v.extend_from_slice(&hb);
                v
            };
            let v_o = params.e_o.row(cand.operator.index()).to_vec();
            let mut cat = v_t;
            cat.extend_from_slice(&v_p);
            cat.extend_from_slice(&v_o);
            let z = if hp.ablation.no_fc_layer {
                cat
            } else {
                let mut z = matvec(&params.w_in, &cat);
                tanh(&mut z);
                z
            };
            fused.push(z);
        }
        let (enc_states, enc_final) = lstm_run(&params.enc, &fused, None);
        let (dec_states, _) = lstm_run(&params.dec, &enc_states, Some(enc_final));
        let mut scores = Vec::new();
        for (e, b) in enc_states.iter().zip(dec_states.iter()) {
            let mut mix = matvec(&params.w1, e);
            let wb = matvec(&params.w2, b);
            for (m, w) in mix.iter_mut().zip(&wb) {
                *m += w;
            }
            tanh(&mut mix);
            scores.push(params.v.data().iter().zip(&mix).map(|(a, b)| a * b).sum());
        }
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s: &f64| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / z).collect()
    }
}

#[test]
fn forward_matches_straightline_reimplementation() {
    let src = "int pick(int left, int right) { if (left < right) { return left; } return right; }";
    let rec = record(src);
    for ablation in [
        AblationFlags::default(),
        AblationFlags { no_token_split: true, ..Default::default() },
        AblationFlags { whole_path_embedding: true, ..Default::default() },
        AblationFlags { no_fc_layer: true, ..Default::default() },
    ] {
        let mut hp = toy_hp();
        hp.ablation = ablation;
        let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
        let params = ModelParams::init(&hp, &vocab, 12345);
        let ast = parse(src).unwrap();
        let cands: Vec<OperationPath> =
            enumerate_operation_paths(&ast).into_iter().take(5).collect();
        let refs: Vec<&OperationPath> = cands.iter().collect();

        let expected = straightline::probs(&refs, &params, &vocab, &hp);
        let pred = forward(&cands, &params, &vocab, &hp).unwrap();
        for entry in &pred.entries {
            let idx = cands.iter().position(|c| c == &entry.op).unwrap();
            assert!(
                (entry.probability - expected[idx]).abs() < 1e-10,
                "ablation {:?}: candidate {} prob {} vs straightline {}",
                ablation,
                idx,
                entry.probability,
                expected[idx]
            );
        }
    }
}

#[test]
fn singleton_input_gets_probability_one() {
    let src = "int f() { return 0; }";
    let rec = record(src);
    let hp = toy_hp();
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::init(&hp, &vocab, 7);
    let ast = parse(src).unwrap();
    let one = vec![enumerate_operation_paths(&ast).remove(0)];
    let pred = forward(&one, &params, &vocab, &hp).unwrap();
    assert_eq!(pred.len(), 1);
    assert!((pred.entries[0].probability - 1.0).abs() < 1e-12);
}

#[test]
fn zero_parameters_rank_uniformly_in_tie_order() {
    let src = "int f() { return 0; }";
    let rec = record(src);
    let hp = toy_hp();
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::zeros(&hp, &vocab);
    let pred = predict_ranked(src, &params, &vocab, &hp, PredictScope::WholeMethod).unwrap();
    assert_eq!(pred.len(), 9);
    for e in &pred.entries {
        assert!((e.probability - 1.0 / 9.0).abs() < 1e-12);
    }
    // Tie order: (leaf_index, operator).
    for (i, e) in pred.entries.iter().enumerate() {
        assert_eq!(e.op.leaf_index(), i / 3);
        assert_eq!(e.op.operator.index(), i % 3);
    }
    let sum: f64 = pred.entries.iter().map(|e| e.probability).sum();
    assert!((sum - 1.0).abs() < 1e-6);
}

#[test]
fn line_scope_restricts_candidates() {
    let src = "int f() {\n  return 0;\n}";
    let rec = record(src);
    let hp = toy_hp();
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::init(&hp, &vocab, 3);
    let pred = predict_ranked(src, &params, &vocab, &hp, PredictScope::Line(2)).unwrap();
    // The line holds one leaf ('0'), three operators.
    assert_eq!(pred.len(), 3);
    for e in &pred.entries {
        assert_eq!(e.op.token, "0");
    }
    let empty = predict_ranked(src, &params, &vocab, &hp, PredictScope::Line(3));
    assert!(matches!(empty, Err(ModelError::EmptyScope { line: 3 })));
}

#[test]
fn permuted_candidates_yield_identical_probability_map() {
    let src = "int mix(int a, int b) { if (a < b) { a = b; } return a; }";
    let rec = record(src);
    let hp = toy_hp();
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::init(&hp, &vocab, 99);
    let ast = parse(src).unwrap();
    let cands = enumerate_operation_paths(&ast);
    let pred = forward(&cands, &params, &vocab, &hp).unwrap();

    let mut shuffled = cands.clone();
    let mut rng = crate::rng::Rng::new(5);
    rng.shuffle(&mut shuffled);
    let pred2 = forward(&shuffled, &params, &vocab, &hp).unwrap();

    for (a, b) in pred.entries.iter().zip(pred2.entries.iter()) {
        assert_eq!(a.op, b.op);
        assert_eq!(a.probability, b.probability);
    }
}

#[test]
fn too_many_paths_is_an_error_and_windowing_handles_it() {
    let src = "int mix(int a, int b) { if (a < b) { a = b; } return a; }";
    let rec = record(src);
    let mut hp = toy_hp();
    hp.max_k = 10;
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::init(&hp, &vocab, 11);
    let ast = parse(src).unwrap();
    let cands = enumerate_operation_paths(&ast);
    assert!(cands.len() > hp.max_k);
    assert!(matches!(
        forward(&cands, &params, &vocab, &hp),
        Err(ModelError::TooManyPaths { .. })
    ));
    // predict_ranked windows and normalizes globally.
    let pred = predict_ranked(src, &params, &vocab, &hp, PredictScope::WholeMethod).unwrap();
    assert_eq!(pred.len(), cands.len());
    let sum: f64 = pred.entries.iter().map(|e| e.probability).sum();
    assert!((sum - 1.0).abs() < 1e-9);
}

#[test]
fn loss_examples() {
    let src = "int f() { return 0; }";
    let rec = record(src);
    let hp = toy_hp();
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::init(&hp, &vocab, 1);
    let ast = parse(src).unwrap();
    let one = vec![enumerate_operation_paths(&ast).remove(0)];
    let pred = forward(&one, &params, &vocab, &hp).unwrap();
    // Single candidate: P = 1 (clamped), perfect prediction, loss near 0.
    let l = loss(&pred, &[1]).unwrap();
    assert!(l < 1e-6, "loss {}", l);

    // Hand arithmetic: Y=[1,0], P=[0.5,0.5].
    let two = RankedPrediction {
        entries: vec![
            RankedEntry { op: one[0].clone(), probability: 0.5, score: 0.0 },
            RankedEntry { op: one[0].clone(), probability: 0.5, score: 0.0 },
        ],
    };
    let l = loss(&two, &[1, 0]).unwrap();
    assert!((l - 2.0 * 0.5f64.recip().ln()).abs() < 1e-12);
    assert!((l - 1.3862943611198906).abs() < 1e-10);

    assert!(matches!(
        loss(&two, &[1]),
        Err(ModelError::LengthMismatch { .. })
    ));
}

#[test]
fn loss_matches_scalar_formula_on_random_case() {
    let src = "int mix(int a, int b) { return a.plus(b); }";
    let rec = record(src);
    let hp = toy_hp();
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::init(&hp, &vocab, 42);
    let ast = parse(src).unwrap();
    let cands: Vec<OperationPath> =
        enumerate_operation_paths(&ast).into_iter().take(6).collect();
    let pred = forward(&cands, &params, &vocab, &hp).unwrap();
    let labels = [0u8, 1, 0, 0, 1, 0];
    let got = loss(&pred, &labels).unwrap();
    let mut expect = 0.0;
    for (e, y) in pred.entries.iter().zip(labels) {
        let p = e.probability.clamp(1e-7, 1.0 - 1e-7);
        expect -= f64::from(y) * p.ln() + (1.0 - f64::from(y)) * (1.0 - p).ln();
    }
    assert!((got - expect).abs() < 1e-12);
}

#[test]
fn token_embedding_sums_subtoken_rows() {
    let src = "int f(int fooBar) { return fooBar; }";
    let rec = record(src);
    let hp = toy_hp();
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let params = ModelParams::init(&hp, &vocab, 8);
    let ast = parse(src).unwrap();
    let cands = enumerate_operation_paths(&ast);
    // Single-part token: V_t is exactly that row.
    let f_cand = cands.iter().find(|c| c.token == "f").unwrap();
    let (v_t, _, v_o) = embed_operation_path(f_cand, &params, &vocab, &hp).unwrap();
    let row = vocab.token_rows("f");
    assert_eq!(row.len(), 1);
    assert_eq!(v_t, params.e_t.row(row[0]));
    assert_eq!(v_o, params.e_o.row(f_cand.operator.index()));

    // Two-part token: the sum of both rows.
    let foo = cands.iter().find(|c| c.token == "fooBar").unwrap();
    let (v_t, _, _) = embed_operation_path(foo, &params, &vocab, &hp).unwrap();
    let rows = vocab.token_rows("fooBar");
    assert_eq!(rows.len(), 2);
    let expect: Vec<f64> = params
        .e_t
        .row(rows[0])
        .iter()
        .zip(params.e_t.row(rows[1]))
        .map(|(a, b)| a + b)
        .collect();
    for (a, b) in v_t.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn zero_kind_embeddings_make_paths_indistinguishable_by_length() {
    // With E_p all zero the path LSTM sees zero inputs, so V_p depends only
    // on the step count; a hand evaluation of the recurrence checks it.
    let src = "int f(int a) { return a + 1; }";
    let rec = record(src);
    let mut hp = toy_hp();
    hp.d_p = 2;
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    let mut params = ModelParams::init(&hp, &vocab, 21);
    params.e_p = Tensor::zeros(&[crate::NodeKind::COUNT, 2]);
    // Freeze the recurrence weights to zero so gates are pure biases, and
    // give the gates known biases.
    for lstm in [&mut params.path_fwd, &mut params.path_bwd] {
        lstm.w_i = Tensor::zeros(&[2, 4]);
        lstm.w_f = Tensor::zeros(&[2, 4]);
        lstm.w_o = Tensor::zeros(&[2, 4]);
        lstm.w_g = Tensor::zeros(&[2, 4]);
        lstm.b_i = Tensor::from_vec(&[2], vec![0.1, -0.2]);
        lstm.b_f = Tensor::from_vec(&[2], vec![0.3, 0.0]);
        lstm.b_o = Tensor::from_vec(&[2], vec![-0.1, 0.4]);
        lstm.b_g = Tensor::from_vec(&[2], vec![0.5, -0.5]);
    }
    let ast = parse(src).unwrap();
    let cands = enumerate_operation_paths(&ast);
    // Both header leaves have two-kind paths.
    let int_c = &cands[0];
    let name_c = &cands[3];
    assert_eq!(int_c.path.kinds.len(), 2);
    assert_eq!(name_c.path.kinds.len(), 2);
    let (_, vp_a, _) = embed_operation_path(int_c, &params, &vocab, &hp).unwrap();
    let (_, vp_b, _) = embed_operation_path(name_c, &params, &vocab, &hp).unwrap();
    assert_eq!(vp_a, vp_b);

    // Hand evaluation of two steps with constant gates.
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let mut expect = Vec::new();
    for j in 0..2 {
        let (bi, bf, bo, bg) = (
            [0.1, -0.2][j],
            [0.3, 0.0][j],
            [-0.1, 0.4][j],
            [0.5, -0.5][j],
        );
        let (i, f, o, g) = (sig(bi), sig(bf), sig(bo), f64::tanh(bg));
        let c1 = i * g;
        let c2 = f * c1 + i * g;
        expect.push(o * f64::tanh(c2));
    }
    for (got, want) in vp_a[..2].iter().zip(&expect) {
        assert!((got - want).abs() < 1e-12, "fwd state {} vs {}", got, want);
    }
    // The backward direction has the same weights here, so the second half
    // matches too.
    for (got, want) in vp_a[2..].iter().zip(&expect) {
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn whole_path_ablation_uses_one_row_per_chain() {
    let src = "int f(int a) { return a + 1; }";
    let rec = record(src);
    let mut hp = toy_hp();
    hp.ablation.whole_path_embedding = true;
    let vocab = Vocab::build(std::slice::from_ref(&rec), &hp).unwrap();
    assert!(vocab.path_count() > 1);
    let params = ModelParams::init(&hp, &vocab, 5);
    let ast = parse(src).unwrap();
    let cands = enumerate_operation_paths(&ast);
    let (_, v_p, _) = embed_operation_path(&cands[0], &params, &vocab, &hp).unwrap();
    let row = vocab.path_row(cands[0].path.truncated_kinds(hp.max_l));
    assert_eq!(v_p, params.e_paths.as_ref().unwrap().row(row));
    assert_eq!(v_p.len(), 2 * hp.d_p);
}

fn tiny_corpus() -> Vec<PatchRecord> {
    // Boolean flips over distinct seed methods.
    let seeds = [
        "boolean a() { return true; }",
        "boolean b() { return false; }",
        "boolean c(int x) { if (x > 0) { return true; } return false; }",
        "boolean d(int x) { if (x < 1) { return false; } return true; }",
    ];
    let mut out = Vec::new();
    for (i, fixed_src) in seeds.iter().enumerate() {
        let fixed = parse(fixed_src).unwrap();
        let flip_at = (0..fixed.leaf_count())
            .find(|j| matches!(fixed.leaf_token(*j), "true" | "false"))
            .unwrap();
        let flipped = if fixed.leaf_token(flip_at) == "true" { "false" } else { "true" };
        let buggy_ast = crate::lang::update_leaf(&fixed, flip_at, flipped);
        let buggy_src = crate::lang::render(&buggy_ast);
        let buggy = parse(&buggy_src).unwrap();
        let oracle = crate::diff::extract_oracle(&buggy, &fixed).unwrap();
        out.push(PatchRecord {
            id: format!("tiny-{i}"),
            buggy_src,
            fixed_src: fixed_src.to_string(),
            oracle,
        });
    }
    out
}

#[test]
fn training_reduces_loss_and_is_deterministic() {
    let corpus = tiny_corpus();
    let mut hp = toy_hp();
    hp.d_t = 8;
    hp.d_p = 8;
    hp.d_o = 8;
    hp.d_hidden = 8;
    hp.epochs = 12;
    hp.lr = 0.02;
    let (params_a, vocab_a, stats_a) = train(&corpus, &hp, 77).unwrap();
    assert!(stats_a.last().unwrap().mean_loss < stats_a.first().unwrap().mean_loss);

    let (params_b, vocab_b, _) = train(&corpus, &hp, 77).unwrap();
    let mut bytes_a = Vec::new();
    let mut bytes_b = Vec::new();
    save_checkpoint(&mut bytes_a, &params_a, &hp, &vocab_a).unwrap();
    save_checkpoint(&mut bytes_b, &params_b, &hp, &vocab_b).unwrap();
    assert_eq!(bytes_a, bytes_b, "same seed must give bit-identical checkpoints");

    let (params_c, _, _) = train(&corpus, &hp, 78).unwrap();
    let mut bytes_c = Vec::new();
    save_checkpoint(&mut bytes_c, &params_c, &hp, &vocab_a).unwrap();
    assert_ne!(bytes_a, bytes_c);
}

#[test]
fn checkpoint_round_trips_through_bytes() {
    let corpus = tiny_corpus();
    let mut hp = toy_hp();
    hp.epochs = 1;
    let (params, vocab, _) = train(&corpus, &hp, 5).unwrap();
    let mut bytes = Vec::new();
    save_checkpoint(&mut bytes, &params, &hp, &vocab).unwrap();
    let (params2, hp2, vocab2) = load_checkpoint(&bytes[..]).unwrap();
    assert_eq!(hp2, hp);
    assert_eq!(vocab2.subtoken_count(), vocab.subtoken_count());
    // Same prediction before and after the round trip.
    let src = &corpus[0].buggy_src;
    let a = predict_ranked(src, &params, &vocab, &hp, PredictScope::WholeMethod).unwrap();
    let b = predict_ranked(src, &params2, &vocab2, &hp2, PredictScope::WholeMethod).unwrap();
    for (x, y) in a.entries.iter().zip(b.entries.iter()) {
        assert_eq!(x.op, y.op);
        assert_eq!(x.probability, y.probability);
    }
}

#[test]
fn empty_dataset_is_rejected() {
    let hp = toy_hp();
    assert!(matches!(train(&[], &hp, 1), Err(ModelError::EmptyDataset)));
}

#[test]
fn gradient_check_at_toy_dims() {
    let hp = toy_hp();
    let report = gradient_check(&hp, 31).unwrap();
    assert!(
        report.max_rel_err < 1e-4,
        "max relative error {}",
        report.max_rel_err
    );
    assert!(report.scalar_count > 500);
}
