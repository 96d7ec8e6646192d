mod common;

use common::{extraction_hits, naive_extract, planted_hits};
use cultura_core::kb::{Extractor, SchemaSet};
use cultura_core::synthetic;
use cultura_core::CountryProfiles;

fn run(text: &str, workers: usize, chunk: usize) -> cultura_core::kb::Extraction {
    let schemas = SchemaSet::builtin();
    let profiles = CountryProfiles::builtin();
    Extractor::new(&schemas, &profiles)
        .workers(workers)
        .chunk_lines(chunk)
        .extract_with(|| Ok(text.as_bytes()))
        .unwrap()
}

#[test]
fn matches_full_scan_across_sizes() {
    for (n, corrupt) in [(80, 0), (500, 4), (2500, 10)] {
        let dump = synthetic::generate(n, corrupt);
        let oracle = naive_extract(&dump.text);
        assert_eq!(oracle, planted_hits(&dump.planted), "oracle disagrees with plant list at n={n}");
        let got = run(&dump.text, 3, 64);
        assert_eq!(extraction_hits(&got.matches), oracle, "n={n}");
        assert_eq!(got.summary.dump.corrupt_lines, corrupt as u64);
    }
}

#[test]
fn chunking_and_workers_do_not_change_output() {
    let dump = synthetic::generate(1200, 3);
    let base = run(&dump.text, 1, 10_000);
    for (w, c) in [(2, 7), (4, 100), (8, 1)] {
        let other = run(&dump.text, w, c);
        assert_eq!(other.matches, base.matches);
        assert_eq!(other.artifacts, base.artifacts);
        assert_eq!(other.summary, base.summary);
    }
}

#[test]
fn deeper_closure_admits_the_deep_decoy() {
    let dump = synthetic::generate(200, 0);
    let text = common::SCHEMAS.replace(
        "node_classes = [\"food\", \"dish\", \"type of food or dish\", \"native cuisine\"]\ncountry_link_properties = [\"country of origin\", \"country\"]\nclass_closure_depth = 1",
        "node_classes = [\"food\", \"dish\", \"type of food or dish\", \"native cuisine\"]\ncountry_link_properties = [\"country of origin\", \"country\"]\nclass_closure_depth = 2",
    );
    assert_ne!(text, common::SCHEMAS);
    let schemas = SchemaSet::parse(&text).unwrap();
    let profiles = CountryProfiles::builtin();
    let got = Extractor::new(&schemas, &profiles).extract_with(|| Ok(dump.text.as_bytes())).unwrap();
    assert!(got.matches.iter().any(|m| m.qid == dump.deep_decoy));
    assert_eq!(got.matches.len(), dump.planted.len() + 1);
}

#[test]
fn artifacts_carry_provenance() {
    let dump = synthetic::generate(300, 0);
    let got = run(&dump.text, 2, 50);
    assert_eq!(got.artifacts.len(), 12);
    for a in &got.artifacts {
        assert!(a.origin_meta.contains_key("qid"));
        assert!(a.origin_meta.contains_key("matched_via"));
    }
}
