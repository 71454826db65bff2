//! End-to-end sessions over the bundled review corpus.

mod common;

use common::criteria;
use std::time::Instant;

use serde_json::Value as J;
use vita_core::compiler::explain;
use vita_core::coord::EffectKind;
use vita_core::session::Source;
use vita_core::spec::parse_command;
use vita_core::state::SessionState;
use vita_core::viz;

#[test]
fn review_workflow_runs_end_to_end() {
    let start = Instant::now();
    let s = common::workflow_session();
    assert!(start.elapsed().as_secs_f64() < 5.0);
    let docs = s.visualizations();
    assert_eq!(docs.len(), 2);
    assert!(docs.iter().all(|d| criteria::is_valid_vegalite(&d.spec)), "{docs:?}");
    assert_eq!(s.history().len(), common::REVIEW_WORKFLOW.len() + 1);
    for (i, node) in s.history().iter().enumerate().skip(1) {
        assert_eq!(node.parent, Some(i as u64 - 1));
        assert_eq!(node.operator().unwrap(), parse_command(common::REVIEW_WORKFLOW[i - 1]).unwrap());
    }
}

#[test]
fn selecting_the_comfy_bar_filters_the_table_to_two_reviews() {
    let (filtered, scanned) = criteria::comfy_filter();
    assert_eq!(scanned.len(), 2);
    assert_eq!(filtered, scanned);
}

#[test]
fn clear_restores_the_full_table() {
    let mut s = common::workflow_session();
    criteria::cmd(&mut s, "coordinate v1 -> table on token");
    criteria::cmd(&mut s, "select v1 single where token == \"comfy\"");
    assert_eq!(s.table(0, 100).unwrap().total, 2);
    let out = criteria::cmd(&mut s, "clear v1");
    assert!(out.effects.iter().all(|e| e.effect == EffectKind::Reset));
    assert!(out.effects.iter().any(|e| e.view == "table"));
    assert_eq!(s.table(0, 100).unwrap().total, 20);
}

#[test]
fn bar_to_scatter_to_table_chain() {
    let mut s = common::workflow_session();
    criteria::cmd(&mut s, "coordinate v1 -> v2 on token");
    criteria::cmd(&mut s, "coordinate v2 -> table on row_id");
    let out = criteria::cmd(&mut s, "select v1 single where token == \"comfy\"");
    let scatter = out.effects.iter().find(|e| e.view == "v2").unwrap();
    assert_eq!(scatter.effect, EffectKind::Highlight);
    assert_eq!(scatter.row_ids, criteria::comfy_rows_by_scan());
    assert_eq!(scatter.marks, vec!["0", "4"]);
    let table = out.effects.iter().find(|e| e.view == "table").unwrap();
    assert_eq!(table.effect, EffectKind::Filter);
    assert_eq!(table.row_ids, criteria::comfy_rows_by_scan());
}

#[test]
fn undo_moves_head_without_committing() {
    let mut s = common::workflow_session();
    let before = s.history().len();
    let out = criteria::cmd(&mut s, "undo");
    assert_eq!(out.version_id, before as u64 - 2);
    assert_eq!(s.history().len(), before);
    assert_eq!(s.visualizations().len(), 1);
    criteria::cmd(&mut s, "checkout 9");
    assert_eq!(s.visualizations().len(), 2);
}

#[test]
fn errors_leave_the_session_unchanged() {
    let mut s = common::workflow_session();
    let head = s.head();
    for bad in ["mutate nope create tokenize", "select v7 single where x == 1", "project tokens update lowercase", "bogus"] {
        assert!(s.apply(Source::Command, bad).is_err(), "{bad}");
    }
    assert_eq!(s.head(), head);
    assert_eq!(s.history().len(), common::REVIEW_WORKFLOW.len() + 1);
}

fn explain_after(prelude: &[&str], c: &str) -> String {
    let mut s = SessionState::new(common::corpus());
    for p in prelude {
        s = s.execute(&s.compile(&parse_command(p).unwrap()).unwrap()).unwrap().state;
    }
    explain(&s.compile(&parse_command(c).unwrap()).unwrap())
}

#[test]
fn explain_goldens() {
    common::assert_golden("explain_clean.txt", &explain_after(&[], "combine \"Review Text\" update [lowercase; strip_punct; remove_stopwords]"));
    common::assert_golden(
        "explain_featurize.txt",
        &explain_after(&[], "combine \"Review Text\" create [tokenize; tfidf with min_df=2]"),
    );
    common::assert_golden(
        "explain_bar.txt",
        &explain_after(&common::REVIEW_WORKFLOW[..4], "combine tfidf create [mean_score_per_token; bar with top_k=10]"),
    );
}

#[test]
fn vegalite_goldens() {
    let s = common::workflow_session();
    for (view, name) in [("v1", "bar.vl.json"), ("v2", "scatter.vl.json")] {
        let bytes = viz::to_vegalite(&s.state().charts[view]);
        let pretty = serde_json::to_string_pretty(&serde_json::from_slice::<J>(&bytes).unwrap()).unwrap() + "\n";
        common::assert_golden(name, &pretty);
    }
}
