//! Commands that talk to model and search endpoints, against a local stub.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use cultura_core::{ConceptId, CountryCode, CulturalArtifact, Source, Status, Store};
use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_cultura");

/// Serves `body` as JSON to every request; returns the base URL and a hit counter.
fn stub(body: &'static str) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let counter = counter.clone();
            std::thread::spawn(move || {
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap_or(0);
                    }
                }
                let mut buf = vec![0u8; len];
                let _ = reader.read_exact(&mut buf);
                counter.fetch_add(1, Ordering::SeqCst);
                let _ = write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                );
            });
        }
    });
    (format!("http://{addr}"), hits)
}

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .env("STUB_KEY", "k")
        .env("STUB_CX", "cx")
        .output()
        .unwrap()
}

fn assert_ok(o: &Output) {
    assert!(
        o.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn generate_then_triage() {
    let (chat, chat_hits) = stub(r#"{"choices":[{"message":{"role":"assistant","content":"1. Currywurst\n2. Brezel\n3. Bratwurst"}}]}"#);
    let (search, _) = stub(r#"{"searchInformation":{"totalResults":"42"}}"#);
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cultura.toml"),
        format!(
            r#"
[generation]
items_per_cycle = 3
max_cycles = 2

[generation.endpoint]
base_url = "{chat}"
model_name = "stub-model"
auth_env_var = "STUB_KEY"
max_retries = 0

[search]
base_url = "{search}"
auth_env_var = "STUB_KEY"
engine_id_env_var = "STUB_CX"
max_retries = 0
"#
        ),
    )
    .unwrap();
    let mut store = Store::new();
    store
        .upsert(
            CulturalArtifact::new(
                "Bratwurst",
                "de",
                CountryCode::new("DE").unwrap(),
                ConceptId::Cuisine,
                Source::KnowledgeBase,
                Status::KbTrusted,
            )
            .unwrap(),
        )
        .unwrap();
    store.save(&dir.path().join("repository.jsonl")).unwrap();

    assert_ok(&run(dir.path(), &["generate", "--country", "DE", "--concept", "cuisine"]));
    assert_eq!(chat_hits.load(Ordering::SeqCst), 2);
    let store = Store::load(&dir.path().join("repository.jsonl")).unwrap();
    let llm: Vec<_> = store.iter().filter(|a| a.source == Source::LlmGenerated).collect();
    assert_eq!(llm.len(), 2, "Bratwurst is excluded and cycle 2 repeats");
    assert!(llm.iter().all(|a| a.origin_meta["model"] == "stub-model"));
    let transcripts = dir.path().join("runs/DE/cuisine");
    assert!(transcripts.join("cycle-1.txt").exists() && transcripts.join("cycle-2.txt").exists());

    // a rerun replays transcripts instead of calling the model
    assert_ok(&run(dir.path(), &["generate", "--country", "DE", "--concept", "cuisine"]));
    assert_eq!(chat_hits.load(Ordering::SeqCst), 2);

    assert_ok(&run(dir.path(), &["triage"]));
    let store = Store::load(&dir.path().join("repository.jsonl")).unwrap();
    let statuses: Vec<_> = store
        .iter()
        .filter(|a| a.source == Source::LlmGenerated)
        .map(|a| (a.popularity, a.status))
        .collect();
    assert!(statuses.iter().all(|(p, _)| *p == Some(42)));
    // ceil(0.3 * 2) = 1 goes to validation
    assert_eq!(statuses.iter().filter(|(_, s)| *s == Status::PendingValidation).count(), 1);
    assert_eq!(statuses.iter().filter(|(_, s)| *s == Status::HeuristicAccepted).count(), 1);
    let cache = std::fs::read_to_string(dir.path().join("popularity-cache.jsonl")).unwrap();
    assert_eq!(cache.lines().count(), 2);
}

#[test]
fn audit_collects_and_scores() {
    let (chat, hits) = stub(r#"{"choices":[{"message":{"role":"assistant","content":"People love currywurst and sushi."}}]}"#);
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cultura.toml"),
        format!(
            r#"
[audit]
samples_per_prompt = 1
workers = 2

[[audit.models]]
tag = "stub"
endpoint = {{ base_url = "{chat}", model_name = "stub-model", auth_env_var = "STUB_KEY", max_retries = 0 }}
"#
        ),
    )
    .unwrap();
    let mut store = Store::new();
    for (name, code) in [("Currywurst", "DE"), ("Sushi", "JP")] {
        store
            .upsert(
                CulturalArtifact::new(name, "en", CountryCode::new(code).unwrap(), ConceptId::Cuisine, Source::KnowledgeBase, Status::KbTrusted)
                    .unwrap(),
            )
            .unwrap();
    }
    store.save(&dir.path().join("repository.jsonl")).unwrap();

    assert_ok(&run(dir.path(), &["audit"]));
    assert_eq!(hits.load(Ordering::SeqCst), 35);
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("reports/stub.report.json")).unwrap()).unwrap();
    assert_eq!(report["scores"]["DE"]["cuisine"]["fraction"]["hits"], 5);
    assert_eq!(report["scores"]["DE"]["cuisine"]["fraction"]["total"], 5);
    assert_eq!(report["scores"]["DE"]["landmarks"]["covered"], false);
    assert!(dir.path().join("reports/stub.choropleth.csv").exists());

    // scoring again from the archive makes no requests
    assert_ok(&run(dir.path(), &["audit", "--score-only"]));
    assert_eq!(hits.load(Ordering::SeqCst), 35);
}
