//! RougeLSum against a brute-force subsequence oracle.

mod support {
    pub mod rouge_oracle;
}

use blueprint_core::eval::rouge::{lcs_positions, rouge_lsum};
use blueprint_core::eval::{blueprint_rouge, blueprint_rouge_with, BlueprintLayout};
use blueprint_core::{Blueprint, QAPair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::rouge_oracle::{all_texts, brute_lcs, brute_rouge_lsum};

const TOL: f64 = 1e-9;

#[test]
fn pinned_example() {
    let got = rouge_lsum("a b c\nd", "a b\nc d");
    assert!((got - brute_rouge_lsum("a b c\nd", "a b\nc d")).abs() < TOL);
    assert!((got - 1.0).abs() < TOL);
}

#[test]
fn lcs_positions_match_brute_force() {
    let texts = all_texts(1, 6, &["a", "b"]);
    for r in &texts {
        let r: Vec<&str> = r.split_whitespace().collect();
        for c in &texts {
            let c: Vec<&str> = c.split_whitespace().collect();
            assert_eq!(lcs_positions(&r, &c), brute_lcs(&r, &c), "{r:?} / {c:?}");
        }
    }
}

#[test]
fn exhaustive_single_sentences_up_to_six_tokens() {
    let texts = all_texts(1, 6, &["a", "b"]);
    for c in &texts {
        for r in &texts {
            let (got, want) = (rouge_lsum(c, r), brute_rouge_lsum(c, r));
            assert!((got - want).abs() < TOL, "{c:?} vs {r:?}: {got} != {want}");
        }
    }
}

#[test]
fn exhaustive_three_sentences_up_to_two_tokens() {
    let texts = all_texts(3, 2, &["a", "b"]);
    assert_eq!(texts.len(), 7 + 49 + 343);
    for c in &texts {
        for r in &texts {
            let (got, want) = (rouge_lsum(c, r), brute_rouge_lsum(c, r));
            assert!((got - want).abs() < TOL, "{c:?} vs {r:?}: {got} != {want}");
        }
    }
}

fn random_text(rng: &mut ChaCha8Rng) -> String {
    let sentences = rng.random_range(1..=3);
    (0..sentences)
        .map(|_| {
            let len = rng.random_range(0..=6);
            (0..len)
                .map(|_| ["a", "b", "c"][rng.random_range(0..3)])
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn random_three_by_six() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..20_000 {
        let (c, r) = (random_text(&mut rng), random_text(&mut rng));
        let (got, want) = (rouge_lsum(&c, &r), brute_rouge_lsum(&c, &r));
        assert!((got - want).abs() < TOL, "{c:?} vs {r:?}: {got} != {want}");
    }
}

#[test]
fn identity_is_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..500 {
        let t = random_text(&mut rng);
        if t.split_whitespace().next().is_some() {
            assert_eq!(rouge_lsum(&t, &t), 1.0);
        }
    }
}

#[test]
fn reversed_worked_blueprint() {
    let b = Blueprint::new(vec![
        QAPair::new("Who built the Shelby Mustang from 1969 to 1970?", "Ford"),
        QAPair::new("During what years was the Shelby Mustang built by Shelby American?", "1965 to 1968"),
        QAPair::new("In what year was the fifth generation of the Ford Mustang introduced?", "2005"),
        QAPair::new("What was the Shelby Mustang revived as?", "a new high-performance model"),
    ]);
    let rev = Blueprint::new(b.pairs.iter().rev().cloned().collect());
    // whole lines move freely under the per-pair layout
    assert_eq!(blueprint_rouge(&rev, &b), 1.0);
    let single = blueprint_rouge_with(&rev, &b, BlueprintLayout::SingleLine);
    let lin = |bp: &Blueprint| {
        bp.iter()
            .map(|p| format!("{} {}", p.question, p.answer))
            .collect::<Vec<_>>()
            .join(" ")
            .to_lowercase()
            .replace(|c: char| !c.is_ascii_alphanumeric(), " ")
    };
    let lin = |bp: &Blueprint| lin(bp).split_whitespace().map(str::to_string).collect::<Vec<_>>();
    // one sentence per side: hits equal the plain LCS length
    let (x, y) = (lin(&rev), lin(&b));
    let lcs = textbook_lcs(&x, &y) as f64;
    let (p, r) = (lcs / x.len() as f64, lcs / y.len() as f64);
    assert!((single - 2.0 * p * r / (p + r)).abs() < TOL);
    assert!(single < 1.0);
}

fn textbook_lcs(x: &[String], y: &[String]) -> usize {
    fn go(x: &[String], y: &[String], memo: &mut std::collections::HashMap<(usize, usize), usize>) -> usize {
        if x.is_empty() || y.is_empty() {
            return 0;
        }
        if let Some(&v) = memo.get(&(x.len(), y.len())) {
            return v;
        }
        let v = if x[0] == y[0] {
            1 + go(&x[1..], &y[1..], memo)
        } else {
            go(&x[1..], y, memo).max(go(x, &y[1..], memo))
        };
        memo.insert((x.len(), y.len()), v);
        v
    }
    go(x, y, &mut std::collections::HashMap::new())
}
