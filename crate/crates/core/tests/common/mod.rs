//! Shared fixtures, brute-force oracles and random case generators.
#![allow(dead_code)]

pub mod criteria;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vita_core::coord::{CoordinationGraph, Effect, EffectKind, LinkRequest, ViewCatalog, TABLE_VIEW};
use vita_core::CoordError;
use vita_core::load::{load_csv_path, LoadOptions};
use vita_core::session::Session;
use vita_core::spec::{CmpOp, Literal, MappingTag, Predicate, Selection, SelectionKind};
use vita_core::viz::{DataField, Mark, SourceBinding, Transforms, VizSpec};
use vita_core::{DomainType, RowId, Value, VitaFrame};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn corpus_path() -> PathBuf {
    data_dir().join("reviews.csv")
}

pub fn corpus_options() -> LoadOptions {
    LoadOptions::default().with_text_columns(["Review Text"])
}

/// The bundled 20-review corpus.
pub fn corpus() -> VitaFrame {
    load_csv_path(&corpus_path(), &corpus_options()).expect("bundled corpus loads")
}

/// Clean, featurize, topic model, cluster and chart the corpus.
pub const REVIEW_WORKFLOW: [&str; 9] = [
    "synthesize clean update [lowercase; remove_stopwords]",
    "clean \"Review Text\" update",
    "mutate \"Review Text\" create tokenize with out=\"tokens\"",
    "mutate tokens create tfidf with out=\"tfidf\"",
    "mutate tokens create lda with k=3, seed=7, out=\"topics\"",
    "mutate topics create cluster_assign with out=\"cluster\"",
    "project topics create pca2 with out=\"xy\"",
    "combine tfidf create [mean_score_per_token; bar]",
    "visualize xy create scatter",
];

/// Session over the corpus with [`REVIEW_WORKFLOW`] applied.
pub fn workflow_session() -> Session {
    let mut s = Session::create("reviews", corpus(), None).unwrap();
    for cmd in REVIEW_WORKFLOW {
        s.apply(vita_core::session::Source::Command, cmd).unwrap_or_else(|e| panic!("{cmd}: {e}"));
    }
    s
}

pub fn text_frame(column: &str, docs: &[&str]) -> VitaFrame {
    VitaFrame::empty(docs.len())
        .add_column(column, DomainType::Text, docs.iter().map(|d| Value::Text(d.to_string())).collect())
        .unwrap()
}

/// Textbook smoothed TF-IDF with L2 rows, computed one cell at a time.
pub fn tfidf_oracle(docs: &[Vec<&str>]) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut vocab: Vec<String> = docs.iter().flatten().map(|t| t.to_string()).collect();
    vocab.sort();
    vocab.dedup();
    let n = docs.len() as f64;
    let mut rows = Vec::new();
    for doc in docs {
        let mut row = Vec::new();
        for term in &vocab {
            let count = doc.iter().filter(|t| *t == term).count() as f64;
            let tf = if doc.is_empty() { 0.0 } else { count / doc.len() as f64 };
            let df = docs.iter().filter(|d| d.iter().any(|t| t == term)).count() as f64;
            let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
            row.push(tf * idf);
        }
        let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in &mut row {
                *x /= norm;
            }
        }
        rows.push(row);
    }
    (vocab, rows)
}

pub const CLEANERS: [&str; 3] = ["lowercase", "strip_punct", "remove_stopwords"];

/// 2 to 4 udfs from the cleaning set; `tokenize` may only come last.
pub fn random_pipeline(rng: &mut ChaCha8Rng) -> Vec<&'static str> {
    let len = rng.random_range(2..=4);
    let mut steps: Vec<&str> = (0..len).map(|_| *CLEANERS.choose(rng).unwrap()).collect();
    if rng.random_bool(0.5) {
        *steps.last_mut().unwrap() = "tokenize";
    }
    steps
}

pub fn udf_kind(udf: &str) -> &'static str {
    if udf == "tokenize" {
        "mutate"
    } else {
        "project"
    }
}

pub const MESSY_REVIEWS: [&str; 6] = [
    "So COMFY!!! I wear it every day, and the fabric is soft.",
    "The dress was TOO long; returned it.",
    "",
    "Love the color... but the zipper broke :(",
    "It's a great buy. Comfy, warm & cheap!",
    "Not what I expected at all",
];

// ---------------------------------------------------------------------------
// Coordination cases

/// A table plus up to four synthetic charts, candidate links and selections.
pub struct CoordCase {
    pub frame: VitaFrame,
    pub charts: BTreeMap<String, VizSpec>,
    pub requests: Vec<LinkRequest>,
    pub selections: Vec<(String, Selection)>,
}

fn synthetic_chart(rng: &mut ChaCha8Rng, id: &str, rows: usize) -> VizSpec {
    let n_marks = rng.random_range(1..=6);
    let mut marks = BTreeMap::new();
    let mut records = Vec::new();
    for m in 0..n_marks {
        let key = format!("k{m}");
        let size = rng.random_range(1..=4.min(rows));
        let mut ids: Vec<RowId> = (0..size).map(|_| rng.random_range(0..rows as u64)).collect();
        ids.sort_unstable();
        ids.dedup();
        records.push(vec![Value::Str(key.clone()), Value::Float(rng.random_range(0..10) as f64)]);
        marks.insert(key, ids);
    }
    VizSpec {
        view_id: id.to_string(),
        mark: Mark::Bar,
        fields: vec![
            DataField { name: "key".into(), dtype: DomainType::String },
            DataField { name: "value".into(), dtype: DomainType::Float },
        ],
        rows: records,
        encodings: BTreeMap::new(),
        transforms: Transforms { sort_descending: false, top_k: None },
        signals: Vec::new(),
        source: SourceBinding { column: "a".into(), metadata: None, key_field: "key".into(), row_id_field: None },
        marks,
    }
}

fn random_tag(rng: &mut ChaCha8Rng) -> MappingTag {
    if rng.random_bool(0.5) {
        MappingTag::Single
    } else {
        MappingTag::Multi
    }
}

fn sel(kind: SelectionKind, field: &str, op: CmpOp, value: Literal) -> Selection {
    Selection { kind, predicate: Predicate { field: field.into(), op, value }, mapping_tag: None }
}

fn random_selection(rng: &mut ChaCha8Rng, views: &[String]) -> (String, Selection) {
    let view = views.choose(rng).unwrap().clone();
    let s = if view == TABLE_VIEW {
        let x = rng.random_range(0..10);
        match rng.random_range(0..5) {
            0 => sel(SelectionKind::Single, "a", CmpOp::Eq, Literal::Int(x)),
            1 => sel(SelectionKind::List, "a", CmpOp::Lt, Literal::Int(x)),
            2 => sel(SelectionKind::List, "a", CmpOp::In, Literal::List(vec![Literal::Int(x), Literal::Int((x + 3) % 10)])),
            3 => sel(SelectionKind::Interval, "a", CmpOp::In, Literal::List(vec![Literal::Int(x), Literal::Float(x as f64 + 2.5)])),
            _ => sel(SelectionKind::Single, "row_id", CmpOp::Eq, Literal::Int(rng.random_range(0..50))),
        }
    } else {
        let k = rng.random_range(0..6);
        match rng.random_range(0..4) {
            0 => sel(SelectionKind::Single, "key", CmpOp::Eq, Literal::Str(format!("k{k}"))),
            1 => sel(SelectionKind::List, "key", CmpOp::In, Literal::List(vec![Literal::Str(format!("k{k}")), Literal::Str("k0".into())])),
            2 => sel(SelectionKind::List, "value", CmpOp::Ge, Literal::Int(rng.random_range(0..10))),
            _ => sel(SelectionKind::Interval, "value", CmpOp::In, Literal::List(vec![Literal::Int(k), Literal::Int(k + 3)])),
        }
    };
    (view, s)
}

pub fn random_coord_case(rng: &mut ChaCha8Rng) -> CoordCase {
    let rows = rng.random_range(1..=50);
    let a: Vec<Value> = (0..rows).map(|_| Value::Int(rng.random_range(0..10))).collect();
    let frame = VitaFrame::empty(rows).add_column("a", DomainType::Int, a).unwrap();
    let n_charts = rng.random_range(1..=4);
    let mut charts = BTreeMap::new();
    for i in 1..=n_charts {
        let id = format!("v{i}");
        charts.insert(id.clone(), synthetic_chart(rng, &id, rows));
    }
    let mut views: Vec<String> = vec![TABLE_VIEW.to_string()];
    views.extend(charts.keys().cloned());
    let requests = (0..rng.random_range(1..=8))
        .map(|_| {
            let source = views.choose(rng).unwrap().clone();
            let target = views.choose(rng).unwrap().clone();
            let on = if source == TABLE_VIEW { "a" } else { "key" }.to_string();
            LinkRequest { source, target, on, source_tag: random_tag(rng), target_tag: random_tag(rng) }
        })
        .collect();
    let selections = (0..3).map(|_| random_selection(rng, &views)).collect();
    CoordCase { frame, charts, requests, selections }
}

// ---------------------------------------------------------------------------
// Coordination oracle

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleLink {
    pub source: String,
    pub target: String,
    pub back: bool,
}

/// Mark key to rows for any view of the case.
pub fn oracle_binding(case: &CoordCase, view: &str) -> BTreeMap<String, BTreeSet<RowId>> {
    if view == TABLE_VIEW {
        case.frame.row_ids().iter().map(|id| (id.to_string(), BTreeSet::from([*id]))).collect()
    } else {
        case.charts[view].marks.iter().map(|(k, v)| (k.clone(), v.iter().copied().collect())).collect()
    }
}

fn forward_reaches(links: &[OracleLink], from: &str, to: &str) -> bool {
    if from == to {
        return true;
    }
    links.iter().filter(|l| !l.back && l.source == from).any(|l| forward_reaches(links, &l.target, to))
}

/// Decides link requests one by one: `Some(link)` when accepted.
pub fn oracle_links(case: &CoordCase) -> Vec<Option<OracleLink>> {
    let mut accepted: Vec<OracleLink> = Vec::new();
    let mut out = Vec::new();
    for r in &case.requests {
        let dup = r.source == r.target || accepted.iter().any(|l| l.source == r.source && l.target == r.target);
        let single_ok = r.target_tag == MappingTag::Multi || oracle_binding(case, &r.target).values().all(|s| s.len() == 1);
        let decision = if dup || !single_ok {
            None
        } else if forward_reaches(&accepted, &r.target, &r.source) {
            let reverse = accepted.iter().any(|l| !l.back && l.source == r.target && l.target == r.source);
            reverse.then(|| OracleLink { source: r.source.clone(), target: r.target.clone(), back: true })
        } else {
            Some(OracleLink { source: r.source.clone(), target: r.target.clone(), back: false })
        };
        if let Some(l) = &decision {
            accepted.push(l.clone());
        }
        out.push(decision);
    }
    out
}

fn literal_f64(l: &Literal) -> f64 {
    match l {
        Literal::Int(i) => *i as f64,
        Literal::Float(x) => *x,
        other => panic!("not numeric: {other:?}"),
    }
}

fn eval(value: &Value, s: &Selection) -> bool {
    let p = &s.predicate;
    match (value, &p.op, &p.value) {
        (Value::Int(_) | Value::Float(_), CmpOp::In, Literal::List(b)) if s.kind == SelectionKind::Interval => {
            let x = value.as_f64().unwrap();
            literal_f64(&b[0]) <= x && x <= literal_f64(&b[1])
        }
        (Value::Int(_) | Value::Float(_), CmpOp::In, Literal::List(items)) => {
            items.iter().any(|i| literal_f64(i) == value.as_f64().unwrap())
        }
        (Value::Int(_) | Value::Float(_), op, lit) => {
            let (x, y) = (value.as_f64().unwrap(), literal_f64(lit));
            match op {
                CmpOp::Eq => x == y,
                CmpOp::Ne => x != y,
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
                _ => unreachable!(),
            }
        }
        (Value::Str(x), CmpOp::Eq, Literal::Str(y)) => x == y,
        (Value::Str(x), CmpOp::In, Literal::List(items)) => items.iter().any(|i| i == &Literal::Str(x.clone())),
        other => panic!("oracle cannot evaluate {other:?}"),
    }
}

/// Per-view outcome: effect name, row ids and marks.
pub type OracleEffects = BTreeMap<String, (String, BTreeSet<RowId>, BTreeSet<String>)>;

/// Recomputes a propagation by enumerating every forward path from the
/// origin. `Err` when the origin selection itself is invalid.
pub fn oracle_propagate(case: &CoordCase, links: &[OracleLink], origin: &str, s: &Selection) -> Result<OracleEffects, ()> {
    let origin_marks: BTreeSet<String> = if origin == TABLE_VIEW {
        let id_field = s.predicate.field == "row_id";
        case.frame
            .row_ids()
            .iter()
            .enumerate()
            .filter(|(i, id)| {
                let v = if id_field { Value::Int(**id as i64) } else { case.frame.column("a").unwrap().values[*i].clone() };
                eval(&v, s)
            })
            .map(|(_, id)| id.to_string())
            .collect()
    } else {
        let chart = &case.charts[origin];
        let idx = chart.fields.iter().position(|f| f.name == s.predicate.field).ok_or(())?;
        chart.rows.iter().filter(|r| eval(&r[idx], s)).map(|r| r[0].as_text().unwrap().to_string()).collect()
    };
    if s.kind == SelectionKind::Single && origin_marks.len() > 1 {
        return Err(());
    }
    let origin_binding = oracle_binding(case, origin);
    let origin_rows: BTreeSet<RowId> = origin_marks.iter().flat_map(|m| origin_binding[m].iter().copied()).collect();

    let mut out = OracleEffects::new();
    let origin_effect = if origin == TABLE_VIEW { "filter" } else { "highlight" };
    let shown_marks = if origin == TABLE_VIEW { BTreeSet::new() } else { origin_marks.clone() };
    out.insert(origin.to_string(), (origin_effect.into(), origin_rows.clone(), shown_marks));

    // rows arriving at each view, unioned over all paths
    let mut arrived: BTreeMap<String, BTreeSet<RowId>> = BTreeMap::new();
    let mut stack: Vec<(String, BTreeSet<RowId>)> = vec![(origin.to_string(), origin_rows.clone())];
    while let Some((view, rows)) = stack.pop() {
        for l in links.iter().filter(|l| !l.back && l.source == view && l.target != origin) {
            arrived.entry(l.target.clone()).or_default().extend(rows.iter().copied());
            let next: BTreeSet<RowId> = oracle_binding(case, &l.target)
                .values()
                .filter(|r| !r.is_disjoint(&rows))
                .flat_map(|r| r.iter().copied())
                .collect();
            stack.push((l.target.clone(), next));
        }
    }
    let hits = |view: &str, rows: &BTreeSet<RowId>| {
        let binding = oracle_binding(case, view);
        let marks: BTreeSet<String> = binding.iter().filter(|(_, r)| !r.is_disjoint(rows)).map(|(m, _)| m.clone()).collect();
        let rows: BTreeSet<RowId> = marks.iter().flat_map(|m| binding[m].iter().copied()).collect();
        let marks = if view == TABLE_VIEW { BTreeSet::new() } else { marks };
        (rows, marks)
    };
    for (view, rows) in &arrived {
        let (r, m) = hits(view, rows);
        let effect = if view == TABLE_VIEW { "filter" } else { "highlight" };
        out.insert(view.clone(), (effect.into(), r, m));
    }
    for l in links.iter().filter(|l| l.back && l.source == origin) {
        if !out.contains_key(&l.target) {
            let (r, m) = hits(&l.target, &origin_rows);
            out.insert(l.target.clone(), ("highlight".into(), r, m));
        }
    }
    Ok(out)
}

/// Builds the engine link graph for a case, keeping accepted requests.
pub fn engine_graph(case: &CoordCase) -> (CoordinationGraph, Vec<bool>) {
    let catalog = ViewCatalog::new(&case.frame, &case.charts);
    let mut graph = CoordinationGraph::default();
    let mut accepted = Vec::new();
    for r in &case.requests {
        match graph.coordinate(&catalog, r.clone()) {
            Ok(g) => {
                graph = g;
                accepted.push(true);
            }
            Err(_) => accepted.push(false),
        }
    }
    (graph, accepted)
}

fn effect_name(k: EffectKind) -> &'static str {
    match k {
        EffectKind::Filter => "filter",
        EffectKind::Highlight => "highlight",
        EffectKind::Reset => "reset",
    }
}

fn as_oracle(effects: &[Effect]) -> OracleEffects {
    let views: BTreeSet<&str> = effects.iter().map(|e| e.view.as_str()).collect();
    assert_eq!(views.len(), effects.len(), "one effect per view: {effects:?}");
    effects
        .iter()
        .map(|e| {
            (
                e.view.clone(),
                (effect_name(e.effect).to_string(), e.row_ids.iter().copied().collect(), e.marks.iter().cloned().collect()),
            )
        })
        .collect()
}

/// Checks one case and returns how many selections resolved.
pub fn check_coord_case(seed: u64) -> Result<usize, String> {
    let mut rng = rng(seed);
    let case: CoordCase = random_coord_case(&mut rng);
    let expected_links = oracle_links(&case);
    let (graph, accepted) = engine_graph(&case);
    let expected_accept: Vec<bool> = expected_links.iter().map(Option::is_some).collect();
    if accepted != expected_accept {
        return Err(format!("seed {seed}: link acceptance {accepted:?} != {expected_accept:?}"));
    }
    let links: Vec<OracleLink> = expected_links.into_iter().flatten().collect();
    let flags: Vec<bool> = graph.links.iter().map(|l| l.back_edge).collect();
    if flags != links.iter().map(|l| l.back).collect::<Vec<_>>() {
        return Err(format!("seed {seed}: back-edge flags {flags:?}"));
    }
    let catalog = ViewCatalog::new(&case.frame, &case.charts);
    let mut resolved = 0;
    let mut previous: Option<(String, vita_core::spec::Selection)> = None;
    for (origin, sel) in &case.selections {
        let oracle = oracle_propagate(&case, &links, origin, sel);
        let mut fresh = graph.clone();
        let got = fresh.propagate(&catalog, origin, sel);
        match (&oracle, &got) {
            (Err(()), Err(CoordError::PredicateError(_))) => continue,
            (Ok(want), Ok(effects)) => {
                if as_oracle(effects) != *want {
                    return Err(format!("seed {seed}: {origin} {sel:?}\n got {:?}\nwant {want:?}", as_oracle(effects)));
                }
            }
            _ => return Err(format!("seed {seed}: {origin} {sel:?}: oracle {oracle:?} engine {got:?}")),
        }
        resolved += 1;
        let effects = got.unwrap();

        // idempotence
        let mut again = fresh.clone();
        if again.propagate(&catalog, origin, sel).as_ref() != Ok(&effects) || again != fresh {
            return Err(format!("seed {seed}: repeating the selection changed the outcome"));
        }
        // independence: an earlier selection leaves no trace
        if let Some((o, s)) = &previous {
            let mut stacked = graph.clone();
            if stacked.propagate(&catalog, o, s).is_ok() {
                if stacked.propagate(&catalog, origin, sel).as_ref() != Ok(&effects) || stacked != fresh {
                    return Err(format!("seed {seed}: outcome depends on the prior selection"));
                }
            }
        }
        previous = Some((origin.clone(), sel.clone()));
    }
    Ok(resolved)
}

// ---------------------------------------------------------------------------
// Kernel fixtures

/// Five short documents for the TF-IDF oracle.
pub const TFIDF_DOCS: [&str; 5] = [
    "comfy soft leggings comfy",
    "red dress too long",
    "soft red sweater",
    "comfy sweater runs small small small",
    "leggings",
];

pub const VOCAB_A: [&str; 6] = ["cotton", "soft", "leggings", "comfy", "stretch", "waist"];
pub const VOCAB_B: [&str; 6] = ["zipper", "broke", "refund", "return", "seam", "ripped"];

/// Ten 20-token documents: the first five draw only from [`VOCAB_A`], the
/// rest only from [`VOCAB_B`].
pub fn two_vocabulary_corpus() -> Vec<Vec<String>> {
    let mut rng = rng(2024);
    (0..10)
        .map(|d| {
            let vocab = if d < 5 { &VOCAB_A } else { &VOCAB_B };
            (0..20).map(|_| vocab.choose(&mut rng).unwrap().to_string()).collect()
        })
        .collect()
}

/// Fraction of documents whose cluster's majority group matches their own.
pub fn purity(clusters: &[usize], groups: &[usize]) -> f64 {
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (c, g) in clusters.iter().zip(groups) {
        *counts.entry((*c, *g)).or_default() += 1;
    }
    let ids: BTreeSet<usize> = clusters.iter().copied().collect();
    let majority: usize =
        ids.iter().map(|c| counts.iter().filter(|((cc, _), _)| cc == c).map(|(_, n)| *n).max().unwrap()).sum();
    majority as f64 / clusters.len() as f64
}

/// Compares `actual` with `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
pub fn assert_golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden {name} differs");
}
