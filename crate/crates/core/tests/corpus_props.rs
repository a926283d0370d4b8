//! Property tests over treebank ingestion and evaluation.

use proptest::prelude::*;

use gaplap_core::chart::is_projective_tree;
use gaplap_core::corpus::{parse_conllu, split_labeled, uas, write_conllu};

/// A random well-formed sentence: forms/POS from small alphabets and a
/// projective gold tree grown left to right. Each word attaches to a node
/// on the current right frontier (the ROOT-to-last-word path), which keeps
/// arcs non-crossing; attaching to an arbitrary earlier word would not.
fn arb_sentence() -> impl Strategy<Value = Vec<(String, String, usize)>> {
    (1usize..8)
        .prop_flat_map(|n| {
            (
                proptest::collection::vec((0u8..5, 0u8..3), n..=n),
                proptest::collection::vec(any::<u32>(), n..=n),
            )
        })
        .prop_map(|(word_tags, head_choices)| {
            let n = word_tags.len();
            let mut rows = Vec::with_capacity(n);
            let mut spine = vec![0usize];
            for (i, ((w, t), hc)) in word_tags.iter().zip(&head_choices).enumerate() {
                let pick = (*hc as usize) % spine.len();
                let head = spine[pick];
                spine.truncate(pick + 1);
                spine.push(i + 1);
                rows.push((format!("w{w}"), format!("P{t}"), head));
            }
            rows
        })
}

fn render(sentences: &[Vec<(String, String, usize)>]) -> String {
    let mut out = String::new();
    for rows in sentences {
        for (i, (form, upos, head)) in rows.iter().enumerate() {
            out.push_str(&format!("{}\t{form}\t_\t{upos}\t_\t_\t{head}\t_\t_\t_\n", i + 1));
        }
        out.push('\n');
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// parse -> serialize -> parse preserves forms, POS, and heads.
    #[test]
    fn parse_serialize_round_trip(sentences in proptest::collection::vec(arb_sentence(), 1..6)) {
        let text = render(&sentences);
        let bank = parse_conllu(&text).unwrap();
        let rendered = write_conllu(&bank);
        let bank2 = parse_conllu(&rendered).unwrap();
        prop_assert_eq!(bank.len(), bank2.len());
        for (a, b) in bank.sentences.iter().zip(&bank2.sentences) {
            prop_assert_eq!(a.len(), b.len());
            for (ta, tb) in a.tokens.iter().zip(&b.tokens) {
                prop_assert_eq!(&ta.form, &tb.form);
                prop_assert_eq!(&ta.upos, &tb.upos);
                prop_assert_eq!(ta.gold_head, tb.gold_head);
            }
        }
    }

    /// The random chain-attachment trees really are projective (guards the
    /// generator the other properties rely on).
    #[test]
    fn generated_gold_trees_are_projective(sentence in arb_sentence()) {
        let text = render(std::slice::from_ref(&sentence));
        let bank = parse_conllu(&text).unwrap();
        let heads = bank.sentences[0].gold_heads().unwrap();
        prop_assert!(is_projective_tree(&heads));
    }

    /// split_labeled partitions: sizes add up, nothing duplicated, and the
    /// labeled share matches the ceiling rule.
    #[test]
    fn split_is_a_partition(
        sentences in proptest::collection::vec(arb_sentence(), 2..20),
        fraction in 0.05f64..1.0,
        seed in any::<u64>(),
    ) {
        let text = render(&sentences);
        let bank = parse_conllu(&text).unwrap();
        let n = bank.len();
        let (labeled, unlabeled) = split_labeled(&bank, fraction, seed).unwrap();
        prop_assert_eq!(labeled.len() + unlabeled.len(), n);
        prop_assert_eq!(labeled.len(), ((fraction * n as f64).ceil() as usize).clamp(1, n));
        // every original sentence appears exactly once (multiset of forms)
        let key = |s: &gaplap_core::corpus::Sentence| {
            s.tokens[1..].iter().map(|t| t.form.clone()).collect::<Vec<_>>().join(" ")
        };
        let mut original: Vec<String> = bank.sentences.iter().map(key).collect();
        let mut recombined: Vec<String> =
            labeled.sentences.iter().chain(&unlabeled.sentences).map(key).collect();
        original.sort();
        recombined.sort();
        prop_assert_eq!(original, recombined);
    }

    /// UAS is bounded and invariant under sentence-order permutation.
    #[test]
    fn uas_bounded_and_permutation_invariant(
        sentences in proptest::collection::vec(arb_sentence(), 1..8),
        seed in any::<u64>(),
    ) {
        let text = render(&sentences);
        let bank = parse_conllu(&text).unwrap();
        // predictions: attach everything to ROOT
        let predictions: Vec<Vec<usize>> =
            bank.sentences.iter().map(|s| vec![0usize; s.len()]).collect();
        let score = uas(&predictions, &bank.sentences, false).unwrap();
        prop_assert!((0.0..=1.0).contains(&score));

        // permute sentences together with their predictions
        let mut order: Vec<usize> = (0..bank.len()).collect();
        let mut state = seed;
        for i in (1..order.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            order.swap(i, j);
        }
        let permuted_sentences: Vec<_> = order.iter().map(|&i| bank.sentences[i].clone()).collect();
        let permuted_predictions: Vec<_> = order.iter().map(|&i| predictions[i].clone()).collect();
        let permuted_score = uas(&permuted_predictions, &permuted_sentences, false).unwrap();
        prop_assert!((score - permuted_score).abs() < 1e-12);
    }
}
