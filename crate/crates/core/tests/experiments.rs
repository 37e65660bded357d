mod common;

use std::collections::BTreeSet;

use common::*;
use emoxfer::audio::EmotionLabel;
use emoxfer::experiments::{
    sample_set_hash, Approach, Runner, Scenario, TT_CELL,
};
use emoxfer::network::load_weights;
use emoxfer::stats::{self, Mark};
use emoxfer::Error;

#[test]
fn tt_separable_two_class_target() {
    let two = Some(vec![EmotionLabel::Anger, EmotionLabel::Disgust]);
    let c = corpus(vec![domain("t", 0, 20, two)], 3);
    let runner = Runner::new(setup(tiny_network(true), 5, 40, settings(&["t"], 1, 1)), &c, None, 1).unwrap();
    let rec = runner.run_tt("t").unwrap();
    assert_eq!(rec.cell, TT_CELL);
    assert_eq!(rec.fold_uars.len(), 5);
    assert!(rec.mean_uar > 0.95, "UAR {}", rec.mean_uar);
    let again = runner.run_tt("t").unwrap();
    assert_eq!(rec.fold_uars, again.fold_uars);
    let w: BTreeSet<_> = rec.folds.iter().map(|f| f.weights_sha256.clone()).collect();
    assert_eq!(w.len(), 5);
}

#[test]
fn tt_rejects_tiny_target() {
    let c = corpus(vec![domain("t", 0, 1, Some(vec![EmotionLabel::Fear]))], 3);
    let runner = Runner::new(setup(tiny_network(true), 5, 1, settings(&["t"], 1, 1)), &c, None, 1).unwrap();
    assert!(matches!(runner.run_tt("t"), Err(Error::Experiment(_))));
    assert!(runner.run_tt("missing").is_err());
}

fn matrix_corpus() -> emoxfer::experiments::Corpus {
    corpus(vec![domain("t", 0, 5, None), domain("a", 3, 3, None), domain("b", 3, 3, None)], 9)
}

#[test]
fn matrix_structure_and_checkpoint_sharing() {
    let c = matrix_corpus();
    let dir = tempfile::tempdir().unwrap();
    let runner = Runner::new(
        setup(tiny_network(true), 2, 2, settings(&["t"], 2, 2)),
        &c,
        Some(dir.path().to_path_buf()),
        2,
    )
    .unwrap();
    let m = runner.matrix().unwrap();
    let t = &m.targets[0];
    assert_eq!(t.cells.len(), 16);
    assert_eq!(t.sources, vec!["a", "b"]);
    let names: Vec<&str> = t.cells.iter().map(|c| c.record.cell.as_str()).collect();
    assert_eq!(names[0], "S1-A1");
    assert_eq!(names[15], "S2-A8");

    for fold in 0..5 {
        let s1: BTreeSet<_> = t.cells[..8]
            .iter()
            .map(|c| c.record.folds[fold].pretrained_sha256.clone().unwrap())
            .collect();
        assert_eq!(s1.len(), 1, "S1 approaches share the fold checkpoint");
    }
    let s1_folds: BTreeSet<_> = t.cells[0].record.folds.iter().map(|f| f.pretrained_sha256.clone()).collect();
    assert_eq!(s1_folds.len(), 5, "S1 pre-trains per fold");
    let s2: BTreeSet<_> = t.cells[8..]
        .iter()
        .flat_map(|c| c.record.folds.iter().map(|f| f.pretrained_sha256.clone()))
        .collect();
    assert_eq!(s2.len(), 1, "one S2 checkpoint for every fold and approach");

    // S2 never sees target samples.
    let sources: Vec<_> = c.domain("a").unwrap().iter().chain(c.domain("b").unwrap()).collect();
    let expect = sample_set_hash(sources);
    for cell in &t.cells[8..] {
        for f in &cell.record.folds {
            assert_eq!(f.pretrain_set_sha256.as_deref(), Some(expect.as_str()));
        }
    }

    // A1 leaves the checkpoint byte-identical.
    for a1 in [&t.cells[0], &t.cells[8]] {
        for f in &a1.record.folds {
            let w = std::fs::read(dir.path().join(f.weights.as_ref().unwrap())).unwrap();
            let ck = std::fs::read(dir.path().join(f.pretrain_checkpoint.as_ref().unwrap())).unwrap();
            assert_eq!(w, ck);
        }
    }

    // Gains and marks follow the reporting rules.
    for cell in &t.cells {
        let g = stats::gain(t.tt.mean_uar, cell.record.mean_uar).unwrap();
        assert_eq!(cell.gain, Some(g));
        let tt = stats::paired_t_test(&cell.record.fold_uars, &t.tt.fold_uars).unwrap();
        assert_eq!(cell.mark, stats::classify_significance(tt.p, tt.mean_diff, 0.05));
        assert!(dir.path().join("t").join(&cell.record.cell).join("report.json").is_file());
    }
    assert_eq!(m.summary.len(), 16);
    assert_eq!(m.summary[3].mean_gain, t.cells[3].gain);
    assert_eq!(m.summary[3].std_gain, None);
}

#[test]
fn frozen_layers_untouched_in_written_weights() {
    let c = matrix_corpus();
    let dir = tempfile::tempdir().unwrap();
    let net = tiny_network(true);
    let runner = Runner::new(setup(net.clone(), 4, 1, settings(&["t"], 1, 2)), &c, Some(dir.path().to_path_buf()), 1).unwrap();
    let tt = runner.run_tt("t").unwrap();
    let sources = runner.sources_for("t").unwrap();
    for a in [Approach::A5, Approach::A8] {
        let plan = runner.plan(Scenario::S2, a, "t", &sources);
        let rep = runner.run_transfer(&plan, &tt).unwrap();
        let f = &rep.record.folds[0];
        let tuned = load_weights(&std::fs::read(dir.path().join(f.weights.as_ref().unwrap())).unwrap(), &net).unwrap();
        let pre = load_weights(&std::fs::read(dir.path().join(f.pretrain_checkpoint.as_ref().unwrap())).unwrap(), &net).unwrap();
        for (name, p) in pre.params().iter() {
            let same = p.value.bit_eq(&tuned.params().get(name).unwrap().value);
            let frozen = name.starts_with("conv") || name.starts_with("lstm");
            assert_eq!(same, frozen, "{a} {name}");
        }
    }
}

#[test]
fn transfer_needs_matching_baseline() {
    let c = matrix_corpus();
    let runner = Runner::new(setup(tiny_network(true), 4, 1, settings(&["t", "a"], 1, 1)), &c, None, 1).unwrap();
    let tt_a = runner.run_tt("a").unwrap();
    let sources = runner.sources_for("t").unwrap();
    let plan = runner.plan(Scenario::S2, Approach::A2, "t", &sources);
    assert!(matches!(runner.run_transfer(&plan, &tt_a), Err(Error::Experiment(_))));
    let mut bad = plan.clone();
    bad.sources.push("t".into());
    let tt_t = runner.run_tt("t").unwrap();
    assert!(runner.run_transfer(&bad, &tt_t).is_err());
}

#[test]
fn disk_cache_reuses_pretraining() {
    let c = matrix_corpus();
    let dir = tempfile::tempdir().unwrap();
    let mut s = settings(&["t"], 2, 1);
    s.scenarios = vec![Scenario::S2];
    s.approaches = vec![Approach::A1, Approach::A3];
    let make = || Runner::new(setup(tiny_network(true), 8, 1, s.clone()), &c, Some(dir.path().to_path_buf()), 1).unwrap();
    let first = make();
    let m1 = first.matrix().unwrap();
    assert!(first.timings().keys().any(|k| k.starts_with("pretrain/")));
    let second = make();
    let m2 = second.matrix().unwrap();
    assert!(!second.timings().keys().any(|k| k.starts_with("pretrain/")));
    assert_eq!(serde_json::to_string(&m1).unwrap(), serde_json::to_string(&m2).unwrap());
}

#[test]
fn ablation_rows_and_self_comparison() {
    let c = corpus(
        vec![
            domain("t", 0, 4, None),
            domain("a", 1, 2, None),
            domain("b", 2, 2, None),
            domain("c", 3, 2, None),
        ],
        4,
    );
    let mut s = settings(&["t"], 1, 1);
    s.scenarios = vec![Scenario::S2];
    s.ablation_approaches = vec![Approach::A1, Approach::A2];
    let runner = Runner::new(setup(tiny_network(false), 1, 1, s), &c, None, 1).unwrap();
    let report = runner.ablation().unwrap();
    let rows = &report.targets[0].rows;
    let labels: Vec<&str> = rows.iter().map(|r| r.label.as_str()).collect();
    assert_eq!(labels, vec!["All", "-a", "-b", "-c"]);
    for cell in &rows[0].cells {
        assert_eq!(cell.mark, Mark::Same);
        assert_eq!(cell.p, 1.0);
    }
    for row in rows {
        assert_eq!(row.cells.len(), 2);
        for (cell, base) in row.cells.iter().zip(&rows[0].cells) {
            let tt = stats::paired_t_test(&cell.record.fold_uars, &base.record.fold_uars).unwrap();
            assert_eq!(cell.mark, stats::classify_significance(tt.p, tt.mean_diff, 0.05));
        }
    }
    assert_eq!(rows[2].sources, vec!["a", "c"]);

    let single = corpus(vec![domain("t", 0, 3, None), domain("a", 1, 2, None)], 4);
    let runner = Runner::new(setup(tiny_network(false), 1, 1, settings(&["t"], 1, 1)), &single, None, 1).unwrap();
    assert!(matches!(runner.run_ablation("t"), Err(Error::Experiment(_))));
}

#[test]
fn jobs_do_not_change_results() {
    let c = matrix_corpus();
    let mut s = settings(&["t"], 1, 1);
    s.approaches = vec![Approach::A1, Approach::A4, Approach::A7];
    let one = Runner::new(setup(tiny_network(true), 3, 1, s.clone()), &c, None, 1).unwrap().matrix().unwrap();
    let three = Runner::new(setup(tiny_network(true), 3, 1, s), &c, None, 3).unwrap().matrix().unwrap();
    assert_eq!(serde_json::to_vec(&one).unwrap(), serde_json::to_vec(&three).unwrap());
}
