//! Seeded synthetic corpus plus mock fixtures that let every heuristic
//! candidate survive the round trip.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use blueprint_core::candidates::heuristic_backend;
use blueprint_core::Summary;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const NAMES: &[&str] = &["Ada Lovelace", "Grace Hopper", "Alan Turing", "Edsger Dijkstra", "Barbara Liskov"];
const THINGS: &[&str] = &["the analytical engine", "a compiler", "the test machine", "a sorting method", "a new language"];
const PLACES: &[&str] = &["London", "Boston", "Manchester", "Amsterdam", "Cambridge"];

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let name = NAMES.choose(rng).unwrap();
    let thing = THINGS.choose(rng).unwrap();
    let place = PLACES.choose(rng).unwrap();
    let year = rng.random_range(1840..2000);
    match rng.random_range(0..3) {
        0 => format!("{name} designed {thing} in {year}."),
        1 => format!("In {place}, {name} described {thing} from {year} to {}.", year + 3),
        _ => format!("{name} moved to {place} and later built {thing}."),
    }
}

/// `n` corpus records; summaries have 1-3 sentences and inputs 1-2 sources.
pub fn corpus(n: usize, seed: u64) -> Vec<Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let k = rng.random_range(1..=3);
            let summary: Vec<String> = (0..k).map(|_| sentence(&mut rng)).collect();
            let sources: Vec<Value> = (0..rng.random_range(1..=2))
                .map(|j| {
                    let mut text = summary.clone();
                    text.push(sentence(&mut rng));
                    json!({"id": format!("doc{j}"), "text": text.join(" ")})
                })
                .collect();
            json!({
                "example_id": format!("ex{i:03}"),
                "sources": sources,
                "summary": summary.join(" "),
            })
        })
        .collect()
}

/// QA entries answering "What is X?" with X wherever X occurs, and NLI
/// entries entailing every summary sentence except those mentioning Boston.
pub fn fixtures(records: &[Value]) -> Value {
    let mut qa = Vec::new();
    let mut nli = Vec::new();
    for r in records {
        let summary = Summary::new(r["summary"].as_str().unwrap()).unwrap();
        for c in heuristic_backend(&summary) {
            qa.push(json!({
                "request": {"question": format!("What is {}?", c.text)},
                "response": {"answer": c.text, "score": 0.9, "no_answer": false},
            }));
        }
        for s in summary.sentence_texts() {
            let p = if s.contains("Boston") { 0.2 } else { 0.9 };
            nli.push(json!({"request": {"hypothesis": s}, "response": {"entail_prob": p}}));
        }
    }
    json!({"qa": qa, "nli": nli})
}

pub fn write_jsonl(path: &Path, records: &[Value]) {
    let text: String = records.iter().map(|r| format!("{r}\n")).collect();
    std::fs::write(path, text).unwrap();
}

/// Write the corpus and its fixtures into `dir`.
pub fn write(dir: &Path, n: usize, seed: u64) -> (PathBuf, PathBuf) {
    let records = corpus(n, seed);
    let corpus_path = dir.join("corpus.jsonl");
    let fixtures_path = dir.join("fixtures.json");
    write_jsonl(&corpus_path, &records);
    std::fs::write(&fixtures_path, fixtures(&records).to_string()).unwrap();
    (corpus_path, fixtures_path)
}
