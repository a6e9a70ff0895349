use std::collections::{BTreeMap, HashMap};

use entrocone::distributions::Point;
use entrocone::polycone::in_gamma_n;
use entrocone::subset::{canonical_order, permutations};
use entrocone::{EntropyVector, JointPMF, LogLinear};
use proptest::prelude::*;

/// Random distributions on up to three variables with alphabets of size at most four.
fn pmf_strategy() -> impl Strategy<Value = JointPMF> {
    (1usize..=3)
        .prop_flat_map(|n| prop::collection::vec(1usize..=4, n))
        .prop_flat_map(|sizes| {
            let cells: usize = sizes.iter().product();
            (Just(sizes), prop::collection::vec(0u64..=5, cells))
        })
        .prop_filter_map("empty support", |(sizes, weights)| {
            let mut counts = BTreeMap::new();
            for (idx, &w) in weights.iter().enumerate() {
                if w > 0 {
                    counts.insert(unrank(idx, &sizes), w);
                }
            }
            let total: u64 = counts.values().sum();
            (total > 0).then(|| JointPMF::from_counts(sizes, counts, total).unwrap())
        })
}

/// Uniform distributions on random supports.
fn uniform_strategy() -> impl Strategy<Value = JointPMF> {
    (1usize..=3)
        .prop_flat_map(|n| prop::collection::vec(1usize..=4, n))
        .prop_flat_map(|sizes| {
            let cells: usize = sizes.iter().product();
            (Just(sizes), prop::collection::vec(any::<bool>(), cells))
        })
        .prop_filter_map("empty support", |(sizes, keep)| {
            let support: Vec<Point> =
                keep.iter().enumerate().filter(|(_, &k)| k).map(|(idx, _)| unrank(idx, &sizes)).collect();
            (!support.is_empty()).then(|| JointPMF::uniform(sizes, support).unwrap())
        })
}

fn unrank(mut idx: usize, sizes: &[usize]) -> Point {
    let mut p = vec![0u32; sizes.len()];
    for i in (0..sizes.len()).rev() {
        p[i] = (idx % sizes[i]) as u32;
        idx /= sizes[i];
    }
    p
}

/// Marginal masses as floats, recomputed from the support.
fn float_marginal(pmf: &JointPMF, positions: &[usize]) -> HashMap<Vec<u32>, f64> {
    let denom = pmf.denominator() as f64;
    let mut out = HashMap::new();
    for (p, c) in pmf.weights() {
        let key: Vec<u32> = positions.iter().map(|&i| p[i]).collect();
        *out.entry(key).or_insert(0.0) += c as f64 / denom;
    }
    out
}

fn float_entropy(masses: impl Iterator<Item = f64>) -> f64 {
    masses.map(|p| -p * p.ln()).sum()
}

proptest! {
    #[test]
    fn coordinates_match_shannon_entropy(pmf in pmf_strategy()) {
        let h = pmf.entropy_vector();
        for (k, alpha) in canonical_order(pmf.n()).into_iter().enumerate() {
            let expected = float_entropy(float_marginal(&pmf, &alpha.positions()).into_values());
            let got = h.coords()[k].to_f64_nats();
            prop_assert!((got - expected).abs() < 1e-9, "{}: {} vs {}", alpha, got, expected);
            prop_assert_eq!(&pmf.marginal_entropy(alpha).unwrap(), &h.coords()[k]);
            prop_assert_eq!(pmf.marginalize(alpha).unwrap().entropy(), h.coords()[k].clone());
        }
    }

    #[test]
    fn entropy_vectors_are_polymatroids(pmf in pmf_strategy()) {
        let verdict = in_gamma_n(&pmf.entropy_vector()).unwrap();
        prop_assert!(verdict.member, "{:?}", verdict.violations);
    }

    #[test]
    fn product_adds_entropy_vectors(a in pmf_strategy(), b in pmf_strategy()) {
        prop_assume!(a.n() == b.n());
        let prod = a.independent_product(&b).unwrap();
        prop_assert_eq!(prod.entropy_vector(), a.entropy_vector().add(&b.entropy_vector()).unwrap());
        prop_assert_eq!(prod.support_len(), a.support_len() * b.support_len());
    }

    #[test]
    fn permutation_relabels_coordinates(pmf in pmf_strategy(), pick in any::<prop::sample::Index>()) {
        let n = pmf.n();
        let perms = permutations(n);
        let perm = pick.get(&perms);
        let moved = pmf.permute(perm).unwrap();
        let (h, g) = (pmf.entropy_vector(), moved.entropy_vector());
        for alpha in canonical_order(n) {
            prop_assert_eq!(g.get(alpha.permute(perm)), h.get(alpha));
        }
        prop_assert_eq!(g, h.permute(perm).unwrap());
    }

    #[test]
    fn quasi_uniform_coordinates_are_log_support_sizes(pmf in uniform_strategy()) {
        let verdict = pmf.is_quasi_uniform();
        let h = pmf.entropy_vector();
        let mut constant = true;
        for alpha in canonical_order(pmf.n()) {
            let marginal = float_marginal(&pmf, &alpha.positions());
            let first = *marginal.values().next().unwrap();
            if marginal.values().any(|&m| (m - first).abs() > 1e-12) {
                constant = false;
            }
        }
        prop_assert_eq!(verdict.is_qu, constant);
        if verdict.is_qu {
            for alpha in canonical_order(pmf.n()) {
                let m = verdict.support_sizes[&alpha];
                prop_assert_eq!(m as usize, float_marginal(&pmf, &alpha.positions()).len());
                prop_assert_eq!(h.get(alpha), LogLinear::from_log_int(m).unwrap());
            }
        } else {
            let w = verdict.witness.unwrap();
            prop_assert!(w.low_mass < w.high_mass);
        }
    }

    #[test]
    fn text_format_round_trips(pmf in pmf_strategy()) {
        let back = JointPMF::parse(&pmf.serialize()).unwrap();
        prop_assert_eq!(back.entropy_vector(), pmf.entropy_vector());
        for p in pmf.support() {
            prop_assert_eq!(back.mass(p), pmf.mass(p));
        }
        prop_assert_eq!(back.support_len(), pmf.support_len());
    }

    #[test]
    fn vector_json_round_trips(pmf in pmf_strategy()) {
        let h = pmf.entropy_vector();
        let text = serde_json::to_string(&h).unwrap();
        prop_assert_eq!(EntropyVector::from_json(&text).unwrap(), h);
    }
}
