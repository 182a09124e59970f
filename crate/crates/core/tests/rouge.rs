mod common;

use common::{fixture, read_fixture};
use courtside::rouge::{
    evaluate_corpus, lcs_len, load_pairs, rouge_l, rouge_n, tokenize, Metric, RougeError,
};
use proptest::prelude::*;
use serde_json::Value;

fn toks(s: &str) -> Vec<String> {
    tokenize(s)
}

#[test]
fn trivial_cases() {
    let a = toks("Joel Embiid scored 13 points.");
    for m in [Metric::N(1), Metric::N(2), Metric::L] {
        assert_eq!(m.score(&a, &a).unwrap().f1, 1.0);
        assert_eq!(m.score(&a, &toks("nothing shared here")).unwrap().f1, 0.0);
    }
    assert_eq!(rouge_l(&a, &[]).f1, 0.0);
    assert_eq!(rouge_l(&[], &a).f1, 0.0);
    assert!(matches!(rouge_n(&a, &a, 0), Err(RougeError::ZeroOrder)));
    // reference shorter than n scores zero
    assert_eq!(rouge_n(&a, &toks("points"), 2).unwrap().f1, 0.0);
}

#[test]
fn hand_counted_examples() {
    let s = rouge_n(&toks("the cat sat"), &toks("the cat ran"), 2).unwrap();
    assert!((s.precision - 0.5).abs() <= 1e-12);
    assert!((s.recall - 0.5).abs() <= 1e-12);
    assert!((s.f1 - 0.5).abs() <= 1e-12);

    assert_eq!(lcs_len(&toks("a b c d"), &toks("a x c y")), 2);
    let s = rouge_l(&toks("a b c d"), &toks("a x c y"));
    assert!((s.precision - 0.5).abs() <= 1e-12);
    assert!((s.recall - 0.5).abs() <= 1e-12);
}

#[test]
fn tokenization_rules() {
    assert_eq!(
        toks("  Hello, WORLD!  it's 22:37. "),
        ["hello", "world", "its", "2237"]
    );
    assert!(toks("... !!!").is_empty());
}

#[test]
fn corpus_means() {
    let one = evaluate_corpus(&[("a b c".into(), "a b d".into())], &[Metric::N(1)]).unwrap();
    let s = rouge_n(&toks("a b c"), &toks("a b d"), 1).unwrap();
    assert_eq!(one.rows[0].f1, s.f1);
    assert_eq!(one.rows[0].precision, s.precision);

    // F1 of 0.2 then 0.6
    let pairs = vec![
        ("a b c d e".to_owned(), "a f g h i".to_owned()),
        ("a b c d e".to_owned(), "a b c x y".to_owned()),
    ];
    let r = evaluate_corpus(&pairs, &[Metric::N(1)]).unwrap();
    assert!((r.per_pair[0][0] - 0.2).abs() < 1e-12);
    assert!((r.per_pair[1][0] - 0.6).abs() < 1e-12);
    assert!((r.f1(Metric::N(1)).unwrap() - 0.4).abs() < 1e-12);
}

#[test]
fn fixture_corpus_matches_recorded_oracle() {
    let oracle: Value = serde_json::from_str(&read_fixture("rouge/oracle.json")).unwrap();
    let pairs = load_pairs(&fixture("rouge/cand"), &fixture("rouge/ref")).unwrap();
    assert_eq!(pairs.len(), 5);
    let metrics = Metric::parse_list("1,2,L").unwrap();
    let report = evaluate_corpus(&pairs, &metrics).unwrap();
    for row in &report.rows {
        let want = &oracle["mean"][&row.name];
        for (got, key) in [
            (row.precision, "precision"),
            (row.recall, "recall"),
            (row.f1, "f1"),
        ] {
            let w = want[key].as_f64().unwrap();
            assert!((got - w).abs() <= 1e-9, "{} {key}: {got} vs {w}", row.name);
        }
    }
    for (i, pair) in oracle["per_pair"].as_array().unwrap().iter().enumerate() {
        for (j, m) in metrics.iter().enumerate() {
            let w = pair["f1"][m.to_string()].as_f64().unwrap();
            assert!((report.per_pair[i][j] - w).abs() <= 1e-9);
        }
    }
}

#[test]
fn directory_errors() {
    let dir = tempfile::tempdir().unwrap();
    let (c, r) = (dir.path().join("c"), dir.path().join("r"));
    std::fs::create_dir_all(&c).unwrap();
    std::fs::create_dir_all(&r).unwrap();
    std::fs::write(c.join("x.txt"), "a").unwrap();
    assert!(matches!(
        load_pairs(&c, &r),
        Err(RougeError::LengthMismatch { .. })
    ));
    std::fs::write(r.join("y.txt"), "a").unwrap();
    assert!(matches!(
        load_pairs(&c, &r),
        Err(RougeError::MissingReference(_))
    ));
    assert!(matches!(
        Metric::parse_list("1,Q"),
        Err(RougeError::UnknownMetric(_))
    ));
}

fn words() -> impl Strategy<Value = Vec<String>> {
    proptest::collection::vec(
        prop_oneof!["a", "b", "c", "d", "e"].prop_map(String::from),
        0..25,
    )
}

proptest! {
    #[test]
    fn swapping_sides_keeps_f1(c in words(), r in words(), n in 1usize..4) {
        let ab = rouge_n(&c, &r, n).unwrap();
        let ba = rouge_n(&r, &c, n).unwrap();
        prop_assert!((ab.f1 - ba.f1).abs() < 1e-12);
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
        let ab = rouge_l(&c, &r);
        let ba = rouge_l(&r, &c);
        prop_assert!((ab.f1 - ba.f1).abs() < 1e-12);
        prop_assert!((ab.precision - ba.recall).abs() < 1e-12);
    }

    #[test]
    fn scores_stay_in_range(c in words(), r in words(), n in 1usize..4) {
        for s in [rouge_n(&c, &r, n).unwrap(), rouge_l(&c, &r)] {
            for v in [s.precision, s.recall, s.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }

    #[test]
    fn appending_a_reference_ngram_never_lowers_recall(
        c in words(), r in words(), n in 1usize..4, pick in 0usize..100
    ) {
        prop_assume!(r.len() >= n);
        let start = pick % (r.len() + 1 - n);
        let before = rouge_n(&c, &r, n).unwrap().recall;
        let mut longer = c.clone();
        longer.extend_from_slice(&r[start..start + n]);
        prop_assert!(rouge_n(&longer, &r, n).unwrap().recall >= before);
    }
}
