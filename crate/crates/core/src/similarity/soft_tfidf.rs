use std::collections::{BTreeMap, HashMap};

use super::jaro_winkler;

/// Jaro-Winkler value from which two tokens count as the same word.
pub const INNER_THRESHOLD: f64 = 0.9;

/// Document frequencies for TF-IDF weighting.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    docs: usize,
    df: HashMap<String, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Corpus::default()
    }

    pub fn from_docs<I, D, S>(docs: I) -> Self
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut c = Corpus::new();
        for d in docs {
            c.add_doc(d);
        }
        c
    }

    pub fn add_doc<S: AsRef<str>>(&mut self, tokens: impl IntoIterator<Item = S>) {
        self.docs += 1;
        let mut seen: Vec<String> = tokens.into_iter().map(|t| t.as_ref().to_string()).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *self.df.entry(t).or_default() += 1;
        }
    }

    pub fn len(&self) -> usize {
        self.docs
    }

    pub fn is_empty(&self) -> bool {
        self.docs == 0
    }

    pub fn df(&self, token: &str) -> usize {
        self.df.get(token).copied().unwrap_or(0)
    }

    /// Smoothed inverse document frequency, always positive.
    pub fn idf(&self, token: &str) -> f64 {
        ((self.docs as f64 + 1.0) / (self.df(token) as f64 + 1.0)).ln() + 1.0
    }

    /// Unit-length `log(tf + 1) * idf` weights, keyed by token.
    pub fn weights<S: AsRef<str>>(&self, tokens: &[S]) -> BTreeMap<String, f64> {
        let mut tf: BTreeMap<String, usize> = BTreeMap::new();
        for t in tokens {
            *tf.entry(t.as_ref().to_string()).or_default() += 1;
        }
        let mut w: BTreeMap<String, f64> = tf
            .into_iter()
            .map(|(t, n)| {
                let x = ((n as f64) + 1.0).ln() * self.idf(&t);
                (t, x)
            })
            .collect();
        let norm = w.values().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in w.values_mut() {
                *x /= norm;
            }
        }
        w
    }
}

/// Cohen's SoftTFIDF from `s` towards `t`.
pub fn soft_tfidf_directed<S: AsRef<str>>(s: &[S], t: &[S], corpus: &Corpus, theta: f64) -> f64 {
    let ws = corpus.weights(s);
    let wt = corpus.weights(t);
    let mut sum = 0.0;
    for (w, a) in &ws {
        let mut best: Option<(f64, f64)> = None;
        for (v, b) in &wt {
            let sim = jaro_winkler(w, v);
            if best.is_none_or(|(s0, _)| sim > s0) {
                best = Some((sim, *b));
            }
        }
        if let Some((sim, b)) = best {
            if sim >= theta {
                sum += a * b * sim;
            }
        }
    }
    sum
}

/// Mean of both directions, clamped to `[0, 1]`.
pub fn soft_tfidf<S: AsRef<str>>(s: &[S], t: &[S], corpus: &Corpus, theta: f64) -> f64 {
    if s.is_empty() || t.is_empty() {
        return 0.0;
    }
    let v = (soft_tfidf_directed(s, t, corpus, theta) + soft_tfidf_directed(t, s, corpus, theta)) / 2.0;
    v.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(str::to_string).collect()
    }

    #[test]
    fn identical_lists_score_one() {
        let c = Corpus::from_docs([toks("kitchen range"), toks("tv set")]);
        let v = soft_tfidf(&toks("kitchen range"), &toks("kitchen range"), &c, INNER_THRESHOLD);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nothing_close_scores_zero() {
        let c = Corpus::from_docs([toks("abc"), toks("xyz")]);
        assert_eq!(soft_tfidf(&toks("abc"), &toks("xyz"), &c, INNER_THRESHOLD), 0.0);
    }

    #[test]
    fn plural_token_matches_by_hand_computed_value() {
        // three toy documents; "kitchen" occurs in two, "range" and "ranges" in one each
        let c = Corpus::from_docs([toks("kitchen range"), toks("kitchen ranges"), toks("oven")]);
        let s = toks("kitchen range");
        let t = toks("kitchen ranges");
        let idf = |df: f64| (4.0f64 / (df + 1.0)).ln() + 1.0;
        let l2 = std::f64::consts::LN_2;
        let (k, r) = (l2 * idf(2.0), l2 * idf(1.0));
        let n = (k * k + r * r).sqrt();
        let (wk, wr) = (k / n, r / n);
        let jw = jaro_winkler("range", "ranges");
        assert!(jw >= INNER_THRESHOLD);
        let expected = wk * wk + wr * wr * jw;
        let got = soft_tfidf(&s, &t, &c, INNER_THRESHOLD);
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }
}
