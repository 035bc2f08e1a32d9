use std::collections::{BTreeMap, BTreeSet};

use ontogoal::ontology::{Annotation, Relation, Term};
use ontogoal::similarity::{
    cosine_tf, jaro, jaro_winkler, soft_tfidf, tsm_concept, tsm_concept_traced, Branch, Corpus, SimilarityMatrix,
    TokenDoc, ALGORITHM_RELATIONS, INNER_THRESHOLD,
};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CASES: usize = 10_000;
const EPS: f64 = 1e-12;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn word(r: &mut ChaCha8Rng, alphabet: &[u8], max: usize) -> String {
    let n = r.random_range(1..=max);
    (0..n).map(|_| alphabet[r.random_range(0..alphabet.len())] as char).collect()
}

fn words(r: &mut ChaCha8Rng, alphabet: &[u8], max_len: usize, max_words: usize) -> Vec<String> {
    let n = r.random_range(0..=max_words);
    (0..n).map(|_| word(r, alphabet, max_len)).collect()
}

fn in_unit(v: f64) -> bool {
    (0.0..=1.0).contains(&v) && v.is_finite()
}

#[test]
fn cosine_tf_range_reflexive_symmetric() {
    let mut r = rng(1);
    for _ in 0..CASES {
        let a = TokenDoc::from_tokens(words(&mut r, b"abcd", 3, 6));
        let b = TokenDoc::from_tokens(words(&mut r, b"abcd", 3, 6));
        let v = cosine_tf(&a, &b);
        assert!(in_unit(v), "{a:?} {b:?} {v}");
        assert!((v - cosine_tf(&b, &a)).abs() < EPS);
        if !a.is_empty() {
            assert!((cosine_tf(&a, &a) - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn cosine_tf_matches_dense_vectors() {
    let mut r = rng(2);
    for _ in 0..500 {
        let (x, y) = (words(&mut r, b"abc", 2, 8), words(&mut r, b"abc", 2, 8));
        if x.is_empty() || y.is_empty() {
            continue;
        }
        let vocab: BTreeSet<&String> = x.iter().chain(&y).collect();
        let count = |d: &[String], t: &String| d.iter().filter(|w| *w == t).count() as f64;
        let (mut dot, mut nx, mut ny) = (0.0, 0.0, 0.0);
        for t in vocab {
            let (a, b) = (count(&x, t), count(&y, t));
            dot += a * b;
            nx += a * a;
            ny += b * b;
        }
        let want = dot / (nx.sqrt() * ny.sqrt());
        let got = cosine_tf(&TokenDoc::from_tokens(&x), &TokenDoc::from_tokens(&y));
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn jaro_winkler_range_reflexive_symmetric() {
    let mut r = rng(3);
    for _ in 0..CASES {
        let a = word(&mut r, b"abcde", 9);
        let b = word(&mut r, b"abcde", 9);
        let v = jaro_winkler(&a, &b);
        assert!(in_unit(v), "{a} {b} {v}");
        assert!((v - jaro_winkler(&b, &a)).abs() < EPS, "{a} {b}");
        assert!((jaro_winkler(&a, &a) - 1.0).abs() < EPS);
        assert!(v >= jaro(&a, &b) - EPS);
    }
}

#[test]
fn martha_marhta() {
    // m = 6, t = 1: jaro = (1 + 1 + 5/6) / 3, prefix 3
    let j = (1.0 + 1.0 + 5.0 / 6.0) / 3.0;
    let jw = j + 3.0 * 0.1 * (1.0 - j);
    assert!((jaro("martha", "marhta") - j).abs() < 1e-12);
    assert!((jaro_winkler("martha", "marhta") - jw).abs() < 1e-12);
    assert!((jaro_winkler("martha", "marhta") - 0.9611).abs() < 1e-4);
}

fn corpus_of(r: &mut ChaCha8Rng, alphabet: &[u8]) -> (Corpus, Vec<Vec<String>>) {
    let n = r.random_range(1..6);
    let docs: Vec<Vec<String>> = (0..n).map(|_| words(r, alphabet, 3, 5)).collect();
    (Corpus::from_docs(docs.iter()), docs)
}

#[test]
fn soft_tfidf_range_reflexive_symmetric() {
    let mut r = rng(4);
    for _ in 0..CASES {
        let (c, _) = corpus_of(&mut r, b"abcde");
        let a = words(&mut r, b"abcde", 4, 4);
        let b = words(&mut r, b"abcde", 4, 4);
        let v = soft_tfidf(&a, &b, &c, INNER_THRESHOLD);
        assert!(in_unit(v), "{a:?} {b:?} {v}");
        assert!((v - soft_tfidf(&b, &a, &c, INNER_THRESHOLD)).abs() < EPS);
        if !a.is_empty() {
            assert!((soft_tfidf(&a, &a, &c, INNER_THRESHOLD) - 1.0).abs() < 1e-9);
        }
    }
}

/// Plain TF-IDF cosine with `log(tf + 1) * (ln((N + 1) / (df + 1)) + 1)` weights.
fn tfidf_cosine(a: &[String], b: &[String], docs: &[Vec<String>]) -> f64 {
    let n = docs.len() as f64;
    let df = |t: &str| docs.iter().filter(|d| d.iter().any(|w| w == t)).count() as f64;
    let vector = |d: &[String]| -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, f64> = BTreeMap::new();
        for w in d {
            *tf.entry(w.clone()).or_default() += 1.0;
        }
        tf.into_iter()
            .map(|(t, k)| {
                let idf = ((n + 1.0) / (df(&t) + 1.0)).ln() + 1.0;
                let w = (k + 1.0).ln() * idf;
                (t, w)
            })
            .collect()
    };
    let (va, vb) = (vector(a), vector(b));
    let dot: f64 = va.iter().map(|(t, x)| x * vb.get(t).copied().unwrap_or(0.0)).sum();
    let norm = |v: &BTreeMap<String, f64>| v.values().map(|x| x * x).sum::<f64>().sqrt();
    dot / (norm(&va) * norm(&vb))
}

#[test]
fn soft_tfidf_with_strict_threshold_is_tfidf_cosine() {
    let mut r = rng(5);
    for _ in 0..100 {
        let (c, docs) = corpus_of(&mut r, b"abc");
        let a = words(&mut r, b"abc", 2, 5);
        let b = words(&mut r, b"abc", 2, 5);
        if a.is_empty() || b.is_empty() {
            continue;
        }
        let got = soft_tfidf(&a, &b, &c, 1.0);
        let want = tfidf_cosine(&a, &b, &docs);
        assert!((got - want).abs() < 1e-9, "{a:?} {b:?} {docs:?}: {got} vs {want}");
    }
}

const NAMES: [&str; 8] = ["range", "oven", "stove", "fridge", "cooker", "box", "boxes", "tvs"];
const RELATIONS: [Relation; 5] = [
    Relation::Synonym,
    Relation::IsA,
    Relation::UsedFor,
    Relation::AtLocation,
    Relation::PartOf,
];

fn annotations(r: &mut ChaCha8Rng) -> Vec<Annotation> {
    let n = r.random_range(0..5);
    (0..n)
        .map(|_| {
            let rel = RELATIONS[r.random_range(0..RELATIONS.len())];
            let k = r.random_range(1..3);
            let value: Vec<String> = (0..k).map(|_| NAMES[r.random_range(0..NAMES.len())].to_string()).collect();
            Annotation::new(rel, &value.join(" "))
        })
        .collect()
}

#[test]
fn tsm_concept_range_reflexive_symmetric() {
    let mut r = rng(6);
    let corpus = Corpus::from_docs(NAMES.iter().map(|n| [*n]));
    for _ in 0..CASES {
        let (na, nb) = (NAMES[r.random_range(0..NAMES.len())], NAMES[r.random_range(0..NAMES.len())]);
        let (xa, xb) = (annotations(&mut r), annotations(&mut r));
        let a = Term {
            name: na,
            annotations: &xa,
        };
        let b = Term {
            name: nb,
            annotations: &xb,
        };
        let v = tsm_concept(a, b, &corpus);
        assert!(in_unit(v), "{na} {nb} {v}");
        assert!((v - tsm_concept(b, a, &corpus)).abs() < EPS, "{na} {xa:?} / {nb} {xb:?}");
        assert_eq!(tsm_concept(a, a, &corpus), 1.0);
    }
}

#[test]
fn inflection_and_listed_synonyms_take_the_exact_branch() {
    let c = Corpus::new();
    let noise = [Annotation::new(Relation::IsA, "zzz")];
    let t = |name, annotations| Term { name, annotations };
    let tr = tsm_concept_traced(t("box", &noise), t("boxes", &[]), &c);
    assert_eq!((tr.branch, tr.value), (Branch::Exact, 1.0));
    let syn = [Annotation::new(Relation::Synonym, "stove")];
    let tr = tsm_concept_traced(t("stove", &[]), t("cooker", &syn), &c);
    assert_eq!(tr.branch, Branch::Exact);
}

#[test]
fn synonym_branch_precedes_the_relation_average() {
    let c = Corpus::from_docs([["kitchen", "range"], ["oven", "range"]]);
    let a = [
        Annotation::new(Relation::Synonym, "kitchen range"),
        Annotation::new(Relation::IsA, "appliance"),
    ];
    let b = [
        Annotation::new(Relation::Synonym, "kitchen range"),
        Annotation::new(Relation::IsA, "vehicle"),
    ];
    let tr = tsm_concept_traced(
        Term {
            name: "stove",
            annotations: &a,
        },
        Term {
            name: "cooker",
            annotations: &b,
        },
        &c,
    );
    assert_eq!(tr.branch, Branch::Synonym);
    assert!((tr.value - 1.0).abs() < 1e-9);
}

#[test]
fn relation_average_over_shared_relations_only() {
    let c = Corpus::from_docs([["appliance"], ["kitchen"], ["vehicle"]]);
    let a = [
        Annotation::new(Relation::IsA, "appliance"),
        Annotation::new(Relation::AtLocation, "kitchen"),
        Annotation::new(Relation::PartOf, "kitchen"),
    ];
    let b = [
        Annotation::new(Relation::IsA, "appliance"),
        Annotation::new(Relation::AtLocation, "vehicle"),
    ];
    let tr = tsm_concept_traced(
        Term {
            name: "stove",
            annotations: &a,
        },
        Term {
            name: "cooker",
            annotations: &b,
        },
        &c,
    );
    assert_eq!(tr.branch, Branch::RelationAverage);
    assert_eq!(tr.relations_evaluated, vec![Relation::IsA, Relation::AtLocation]);
    assert!(tr.relations_evaluated.iter().all(|r| ALGORITHM_RELATIONS.contains(r)));
    assert!((tr.value - 0.5).abs() < 1e-12);
}

#[test]
fn matrix_maxima_match_brute_force() {
    let mut r = rng(7);
    for _ in 0..200 {
        let (n, m) = (r.random_range(1..6), r.random_range(1..6));
        let cells: Vec<Vec<f64>> = (0..n).map(|_| (0..m).map(|_| r.random_range(0.0..1.0)).collect()).collect();
        let mx = SimilarityMatrix::build(
            (0..n).map(|i| format!("r{i}")).collect(),
            (0..m).map(|j| format!("c{j}")).collect(),
            |i, j| cells[i][j],
        );
        for (i, v) in mx.row_max().iter().enumerate() {
            let mut best = f64::MIN;
            for &x in &cells[i] {
                if x > best {
                    best = x;
                }
            }
            assert_eq!(*v, best);
        }
        for (j, v) in mx.col_max().iter().enumerate() {
            let best = (0..n).map(|i| cells[i][j]).fold(f64::MIN, f64::max);
            assert_eq!(*v, best);
        }
    }
}
