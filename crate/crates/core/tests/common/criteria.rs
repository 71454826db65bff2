//! One check per acceptance criterion, shared by the focused test files and
//! the acceptance gate.

use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::Value as J;

use vita_core::coord::EffectKind;
use vita_core::ops::{self, lda, tfidf, LdaParams, TfidfParams};
use vita_core::session::{Session, Source};
use vita_core::spec::{parse_command, parse_json, serialize, OperatorNode};
use vita_core::state::SessionState;
use vita_core::version::replay;
use vita_core::SpecError;

// ---------------------------------------------------------------------------
// Kernels

pub fn docs() -> Vec<Vec<&'static str>> {
    super::TFIDF_DOCS.iter().map(|d| d.split_whitespace().collect()).collect()
}

/// Largest absolute entry difference between the engine and the oracle.
pub fn tfidf_max_error() -> f64 {
    let docs = docs();
    let (rows, model) = tfidf::tfidf(&docs, TfidfParams::default()).unwrap();
    let (vocab, expected) = super::tfidf_oracle(&docs);
    assert_eq!(model.vocabulary, vocab);
    rows.iter().flatten().zip(expected.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// `(purity, max |row sum - 1|, deterministic)` for the separability corpus.
pub fn lda_separability() -> (f64, f64, bool) {
    let corpus = super::two_vocabulary_corpus();
    let params = LdaParams::new(2, 7);
    let model = lda::lda(&corpus, &params).unwrap();
    let again = lda::lda(&corpus, &params).unwrap();
    let bitwise = model.theta.iter().flatten().zip(again.theta.iter().flatten()).all(|(a, b)| a.to_bits() == b.to_bits())
        && model.phi.iter().flatten().zip(again.phi.iter().flatten()).all(|(a, b)| a.to_bits() == b.to_bits());
    let clusters: Vec<usize> = model.theta.iter().map(|row| ops::argmax(row).unwrap()).collect();
    let groups: Vec<usize> = (0..10).map(|d| d / 5).collect();
    let sum_err = model.theta.iter().map(|row| (row.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
    (super::purity(&clusters, &groups), sum_err, bitwise)
}

// ---------------------------------------------------------------------------
// Operator laws

pub fn run(state: &SessionState, cmd: &str) -> SessionState {
    let node = parse_command(cmd).unwrap_or_else(|e| panic!("{cmd}: {e}"));
    let plan = state.compile(&node).unwrap_or_else(|e| panic!("{cmd}: {e}"));
    state.execute(&plan).unwrap_or_else(|e| panic!("{cmd}: {e}")).state
}

pub fn messy() -> SessionState {
    SessionState::new(super::text_frame("Review", &super::MESSY_REVIEWS))
}

/// Sequential commands equivalent to `combine Review <action> [steps]`.
pub fn sequential(steps: &[&str], action: &str) -> Vec<String> {
    let mut column = "Review".to_string();
    let mut cmds = Vec::new();
    for udf in steps {
        let out = if action == "update" { column.clone() } else { format!("{column}_{udf}") };
        let kind = super::udf_kind(udf);
        cmds.push(if action == "update" {
            format!("{kind} {column} update {udf}")
        } else {
            format!("{kind} {column} create {udf} with out=\"{out}\"")
        });
        column = out;
    }
    cmds
}

pub fn combine_law_holds(seed: u64) -> Result<(), String> {
    let mut rng = super::rng(seed);
    let steps = super::random_pipeline(&mut rng);
    let action = if rng.random_bool(0.5) { "update" } else { "create" };
    let base = messy();
    let combined = run(&base, &format!("combine Review {action} [{}]", steps.join("; ")));
    let mut seq = base;
    for cmd in sequential(&steps, action) {
        seq = run(&seq, &cmd);
    }
    if combined.frame.snapshot_hash() == seq.frame.snapshot_hash() {
        Ok(())
    } else {
        Err(format!("seed {seed}: {action} {steps:?}"))
    }
}

pub fn synthesize_law_holds(seed: u64) -> Result<(), String> {
    let mut rng = super::rng(seed);
    let steps = super::random_pipeline(&mut rng);
    let action = if rng.random_bool(0.5) { "update" } else { "create" };
    let body = steps.join("; ");
    let s = run(&messy(), &format!("synthesize op{seed} {action} [{body}]"));
    let named = s.compile(&parse_command(&format!("op{seed} Review {action}")).unwrap()).map_err(|e| e.to_string())?;
    let combined = s.compile(&parse_command(&format!("combine Review {action} [{body}]")).unwrap()).map_err(|e| e.to_string())?;
    if named == combined {
        Ok(())
    } else {
        Err(format!("seed {seed}: {action} [{body}]"))
    }
}

/// `(command, json)` pairs from `tests/data/parser_corpus.txt`.
pub fn corpus_pairs() -> Vec<(String, String)> {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/parser_corpus.txt")).unwrap();
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#')).collect();
    assert_eq!(lines.len() % 2, 0, "corpus lines must pair up");
    lines.chunks(2).map(|p| (p[0].to_string(), p[1].to_string())).collect()
}

pub fn check_command(input: &str) {
    match parse_command(input) {
        Ok(_) => {}
        Err(SpecError::Syntax { position, .. }) => assert!(position <= input.len(), "{input:?} -> {position}"),
        Err(other) => panic!("{input:?} gave an unpositioned error {other:?}"),
    }
}

pub fn check_json(input: &[u8]) {
    match parse_json(input) {
        Ok(node) => {
            let again: OperatorNode = parse_json(&serialize(&node)).unwrap();
            assert_eq!(again, node);
        }
        Err(SpecError::Syntax { position, .. }) => assert!(position <= input.len()),
        Err(SpecError::Schema { path, .. }) => assert!(path.starts_with('$'), "{path}"),
    }
}

pub const ALPHABET: &[u8] = b" \t\n[];,=()\"'-><!.0123456789abcdefghijklmnopqrstuvwxyzABCXYZ_{}:\\";

pub const WORDS: &[&str] = &[
    "project", "mutate", "aggregate", "set", "visualize", "combine", "synthesize", "select", "coordinate",
    "load", "undo", "checkout", "clear", "update", "create", "add", "with", "where", "as", "on", "->", "text",
    "single", "list", "interval", "multi", "in", "contains", "==", ">=", "[", "]", ";", ",", "=", "(", ")",
    "\"Review Text\"", "tokens", "lowercase", "tfidf", "lda", "bar", "v1", "table", "k=3", "1.5", "-2", "true",
];

pub fn mutate(rng: &mut impl Rng, base: &str) -> String {
    let mut bytes = base.as_bytes().to_vec();
    for _ in 0..rng.random_range(1..=4) {
        let at = rng.random_range(0..=bytes.len());
        match rng.random_range(0..3) {
            0 if at < bytes.len() => {
                bytes.remove(at);
            }
            1 => bytes.insert(at, *ALPHABET.choose(rng).unwrap()),
            _ if at < bytes.len() => bytes[at] = *ALPHABET.choose(rng).unwrap(),
            _ => bytes.push(*ALPHABET.choose(rng).unwrap()),
        }
    }
    String::from_utf8_lossy(&bytes).into_owned()
}

/// Runs `n` random inputs through both parsers; returns how many parsed.
pub fn fuzz(n: usize, seed: u64) -> usize {
    let mut rng = super::rng(seed);
    let pairs = corpus_pairs();
    let mut accepted = 0;
    for i in 0..n {
        let (cmd, json) = pairs.choose(&mut rng).unwrap();
        let input = match i % 4 {
            0 => mutate(&mut rng, cmd),
            1 => (0..rng.random_range(1..12)).map(|_| *WORDS.choose(&mut rng).unwrap()).collect::<Vec<_>>().join(" "),
            2 => (0..rng.random_range(0..40)).map(|_| *ALPHABET.choose(&mut rng).unwrap() as char).collect(),
            _ => {
                let json = mutate(&mut rng, json);
                check_json(json.as_bytes());
                continue;
            }
        };
        check_command(&input);
        if parse_command(&input).is_ok() {
            accepted += 1;
        }
        if i % 7 == 0 {
            let raw: Vec<u8> = (0..rng.random_range(0..24)).map(|_| rng.random()).collect();
            check_json(&raw);
        }
    }
    accepted
}

/// Operators a random session draws from; some fail depending on state.
pub const POOL: &[&str] = &[
    "project Review update lowercase",
    "project Review update strip_punct",
    "project Review update remove_stopwords",
    "project Review create lowercase",
    "mutate Review create tokenize with out=\"tok\"",
    "mutate tok create tfidf with out=\"tf\"",
    "mutate tok create lda with k=2, seed=3, iterations=30, out=\"topics\"",
    "mutate topics create cluster_assign with out=\"cluster\"",
    "project topics create pca2 with out=\"xy\"",
    "aggregate tf add mean_score_per_token",
    "set tok add unique_tokens",
    "aggregate Review add count",
    "visualize tf create bar",
    "visualize xy create scatter",
    "coordinate v1 -> table on token",
    "select v1 list where score > 0.05",
    "select table list where Review contains \"comfy\"",
    "clear",
    "synthesize tidy update [lowercase; strip_punct]",
    "tidy Review update",
    "undo",
    "checkout 1",
];

pub const REVIEWS: [&str; 8] = [
    "So comfy and soft, I love these leggings",
    "The zipper broke after one wash",
    "Comfy sweater, runs a bit large",
    "Returned it, the seam ripped",
    "Soft fabric and a great fit",
    "Too long for me but the color is lovely",
    "comfy comfy comfy",
    "Great dress for summer evenings",
];

/// Applies up to 20 random operators; returns the table page (as JSON bytes)
/// observed right after each version was reached.
pub fn random_session(seed: u64) -> (Session, Vec<(u64, Vec<u8>)>) {
    let mut rng = super::rng(seed);
    let mut s = Session::create("r", super::text_frame("Review", &REVIEWS), None).unwrap();
    let mut pages = vec![(0, serde_json::to_vec(&s.table(0, 50).unwrap()).unwrap())];
    for _ in 0..rng.random_range(5..=20) {
        let op = POOL.choose(&mut rng).unwrap();
        if s.apply(Source::Command, op).is_ok() {
            pages.push((s.head(), serde_json::to_vec(&s.table(0, 50).unwrap()).unwrap()));
        }
    }
    (s, pages)
}

/// Checks replay and checkout for one random session; returns versions checked.
pub fn replay_case(seed: u64) -> Result<usize, String> {
    let (mut s, pages) = random_session(seed);
    let store = s.store();
    for node in store.history() {
        let trace = replay(store, node.version_id).map_err(|e| format!("seed {seed}: {e}"))?;
        for (id, digests) in trace {
            if store.node(id).unwrap().snapshot != digests {
                return Err(format!("seed {seed}: replay diverges at version {id}"));
            }
        }
    }
    for (version, page) in &pages {
        s.checkout(*version).map_err(|e| e.to_string())?;
        let now = serde_json::to_vec(&s.table(0, 50).unwrap()).unwrap();
        if now != *page {
            return Err(format!("seed {seed}: table of version {version} changed after checkout"));
        }
    }
    Ok(s.history().len())
}

pub fn cmd(s: &mut Session, c: &str) -> vita_core::session::ApplyResponse {
    s.apply(Source::Command, c).unwrap_or_else(|e| panic!("{c}: {e}"))
}

/// Structural checks a Vega-Lite v5 renderer relies on.
pub fn is_valid_vegalite(doc: &J) -> bool {
    let has = |p: &str| doc.pointer(p).is_some();
    doc["$schema"].as_str().is_some_and(|s| s.contains("vega-lite/v5"))
        && doc["mark"].is_string() | doc["mark"].is_object()
        && doc["data"]["values"].as_array().is_some_and(|v| !v.is_empty())
        && has("/encoding/x/field")
        && has("/encoding/y/field")
        && doc["params"].as_array().is_some_and(|p| p.iter().all(|x| x["name"].is_string() && x["select"].is_object()))
}

pub fn comfy_rows_by_scan() -> Vec<u64> {
    let mut reader = csv::Reader::from_path(super::corpus_path()).unwrap();
    let col = reader.headers().unwrap().iter().position(|h| h == "Review Text").unwrap();
    reader
        .records()
        .enumerate()
        .filter(|(_, r)| r.as_ref().unwrap()[col].to_lowercase().contains("comfy"))
        .map(|(i, _)| i as u64)
        .collect()
}

/// Rows the table shows after selecting the "comfy" bar.
pub fn comfy_filter() -> (Vec<u64>, Vec<u64>) {
    let mut s = super::workflow_session();
    cmd(&mut s, "coordinate v1 -> table on token");
    let out = cmd(&mut s, "select v1 single where token == \"comfy\"");
    let table = out.effects.iter().find(|e| e.view == "table").expect("table effect");
    assert_eq!(table.effect, EffectKind::Filter);
    let page: Vec<u64> = s.table(0, 100).unwrap().rows.iter().map(|r| r.row_id).collect();
    assert_eq!(page, table.row_ids);
    (table.row_ids.clone(), comfy_rows_by_scan())
}
