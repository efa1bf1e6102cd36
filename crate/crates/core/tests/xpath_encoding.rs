use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wie_core::dom::{XPath, XPathUnit};
use wie_core::xpath_encoding::{init_encoder, EncoderConfig, EncoderParams, TagVocab, DEFAULT_TAGS};
use wie_core::Error;

fn config() -> EncoderConfig {
    EncoderConfig {
        max_depth: 6,
        tag_dim: 4,
        sub_dim: 3,
        out_dim: 5,
        max_subscript: 4,
        tag_vocab: TagVocab::default(),
    }
}

fn random_xpath(rng: &mut impl Rng) -> XPath {
    let n = rng.random_range(0..10);
    let tags: Vec<&str> = DEFAULT_TAGS.iter().copied().chain(["custom-tag", "zz"]).collect();
    XPath::from_units(
        (0..n)
            .map(|_| XPathUnit::new(tags[rng.random_range(0..tags.len())], rng.random_range(1..8)).unwrap())
            .collect(),
    )
}

/// Scalar loops over the documented layout: the last `max_depth` units,
/// front-padded, each contributing its tag then subscript embedding.
fn naive_encode(p: &EncoderParams, x: &XPath) -> Vec<f64> {
    let c = &p.config;
    let units = x.units();
    let kept = &units[units.len().saturating_sub(c.max_depth)..];
    let pad = c.max_depth - kept.len();
    let ud = c.tag_dim + c.sub_dim;
    let mut out = vec![0.0; c.out_dim];
    for (j, o) in out.iter_mut().enumerate() {
        let mut acc = p.bias[[0, j]];
        for pos in 0..c.max_depth {
            let (t, s) = if pos < pad {
                (0, c.max_subscript + 1)
            } else {
                let u = &kept[pos - pad];
                let t = c.tag_vocab.entries().iter().skip(2).position(|e| *e == u.tag).map_or(1, |i| i + 2);
                let k = u.subscript as usize;
                let s = if (1..=c.max_subscript).contains(&k) { k - 1 } else { c.max_subscript };
                (t, s)
            };
            for k in 0..c.tag_dim {
                acc += p.tag_embeddings[[t, k]] * p.weight[[pos * ud + k, j]];
            }
            for k in 0..c.sub_dim {
                acc += p.sub_embeddings[[s, k]] * p.weight[[pos * ud + c.tag_dim + k, j]];
            }
        }
        *o = acc.tanh();
    }
    out
}

#[test]
fn encoding_matches_naive_loops() {
    let p = init_encoder(config(), 17).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let x = random_xpath(&mut rng);
        let got = p.encode_xpath(&x);
        let want = naive_encode(&p, &x);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9, "{x}: {a} vs {b}");
        }
        let batch = p.forward_batch(&[&x]);
        for (a, b) in batch.output().row(0).iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}

#[test]
fn units_beyond_depth_limit_are_ignored() {
    let p = init_encoder(config(), 3).unwrap();
    let tail: Vec<XPathUnit> = (1..=6).map(|k| XPathUnit::new("div", k % 4 + 1).unwrap()).collect();
    let mut a = vec![XPathUnit::new("html", 1).unwrap()];
    a.extend(tail.iter().cloned());
    let mut b = vec![XPathUnit::new("table", 3).unwrap()];
    b.extend(tail.iter().cloned());
    assert_eq!(
        p.encode_xpath(&XPath::from_units(a)),
        p.encode_xpath(&XPath::from_units(b))
    );
}

#[test]
fn output_is_bounded_and_shaped() {
    let p = init_encoder(EncoderConfig::default(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random_xpath(&mut rng);
    let v = p.encode_xpath(&x);
    assert_eq!(v.len(), EncoderConfig::default().out_dim);
    assert!(v.iter().all(|e| e.abs() < 1.0));
}

fn weighted_sum(p: &EncoderParams, xs: &[&XPath], c: &Array2<f64>) -> f64 {
    (p.forward_batch(xs).output() * c).sum()
}

#[test]
fn backward_matches_finite_differences() {
    let p = init_encoder(config(), 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let xs: Vec<XPath> = (0..6).map(|_| random_xpath(&mut rng)).collect();
    let refs: Vec<&XPath> = xs.iter().collect();
    let c = Array2::from_shape_fn((xs.len(), p.config.out_dim), |_| rng.random_range(-1.0..1.0));
    let mut grads = p.zeros_like();
    p.backward(&p.forward_batch(&refs), &c, &mut grads);

    let eps = 1e-6;
    for ti in 0..4 {
        let g = grads.tensors()[ti].1.clone();
        let mut checked = 0;
        for flat in 0..g.len() {
            let analytic = g.as_slice().unwrap()[flat];
            if analytic.abs() < 1e-6 {
                continue;
            }
            let mut plus = p.clone();
            plus.tensors_mut()[ti].1.as_slice_mut().unwrap()[flat] += eps;
            let mut minus = p.clone();
            minus.tensors_mut()[ti].1.as_slice_mut().unwrap()[flat] -= eps;
            let numeric = (weighted_sum(&plus, &refs, &c) - weighted_sum(&minus, &refs, &c)) / (2.0 * eps);
            let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs());
            assert!(rel < 1e-5, "{}[{flat}] {analytic} vs {numeric}", g.len());
            checked += 1;
            if checked == 10 {
                break;
            }
        }
        assert!(checked > 0);
    }
}

#[test]
fn malformed_encoder_text_is_rejected() {
    let p = init_encoder(config(), 1).unwrap();
    let text = p.to_text();
    assert_eq!(EncoderParams::from_text(&text).unwrap(), p);
    assert!(EncoderParams::from_text("").is_err());
    assert!(EncoderParams::from_text(&text[..text.len() - 10]).is_err());
    let huge = text.replacen("max_depth 6", "max_depth 99999999999", 1);
    assert!(matches!(EncoderParams::from_text(&huge), Err(Error::InvalidConfig(_)) | Err(Error::MalformedCheckpoint(_))));
}
