//! Keeps the shipped replay fixture set in lockstep with the prompt
//! builder. Fixtures are completion-cache files keyed by
//! (model, temperature, prompt hash, run index); any change to the
//! ontology, exemplar, or prompt layout changes the keys, and the
//! non-ignored test here fails until the fixtures are regenerated with
//! `cargo test -p hrex-cli -- --ignored regenerate_replay_fixtures`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use hrex_core::dataset::load_samples;
use hrex_core::gateway::{cache_key, CacheEntry};
use hrex_core::prompt::{build_prompt_spec, load_exemplar, render};
use hrex_core::load_ontology;
use serde::Deserialize;

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

#[derive(Deserialize)]
struct CompletionsDoc {
    model: String,
    temperature: f64,
    completions: BTreeMap<String, Vec<String>>,
}

/// (fixture path, expected entry) for every sample/run pair.
fn expected_fixtures() -> Vec<(PathBuf, CacheEntry)> {
    let dir = data_dir();
    let ontology = load_ontology(dir.join("hyperred_ontology.json")).unwrap();
    let exemplar = load_exemplar(dir.join("exemplar.json")).unwrap();
    let spec = build_prompt_spec(&ontology, exemplar).unwrap();
    let samples = load_samples(dir.join("replay_demo/dataset.jsonl")).unwrap();
    let doc: CompletionsDoc = serde_json::from_str(
        &fs::read_to_string(dir.join("replay_demo/completions.json")).unwrap(),
    )
    .unwrap();

    let mut out = Vec::new();
    for sample in &samples {
        let rendered = render(&spec, &sample.text).unwrap();
        let runs = doc
            .completions
            .get(&sample.id)
            .unwrap_or_else(|| panic!("no canned completions for {}", sample.id));
        for (run_index, raw_text) in runs.iter().enumerate() {
            let key = cache_key(
                &doc.model,
                doc.temperature,
                &rendered.prompt_hash,
                run_index as u32,
            );
            out.push((
                dir.join("replay_demo/fixtures").join(format!("{key}.json")),
                CacheEntry {
                    raw_text: raw_text.clone(),
                    model: doc.model.clone(),
                    recorded_at: "2024-01-01T00:00:00Z".to_string(),
                },
            ));
        }
    }
    out
}

/// Rewrites data/replay_demo/fixtures from dataset.jsonl + completions.json.
#[test]
#[ignore = "writes into data/; run explicitly after changing prompt inputs"]
fn regenerate_replay_fixtures() {
    let fixtures_dir = data_dir().join("replay_demo/fixtures");
    if fixtures_dir.exists() {
        fs::remove_dir_all(&fixtures_dir).unwrap();
    }
    fs::create_dir_all(&fixtures_dir).unwrap();
    for (path, entry) in expected_fixtures() {
        let json = serde_json::to_string_pretty(&entry).unwrap() + "\n";
        fs::write(path, json).unwrap();
    }
}

#[test]
fn shipped_fixtures_match_current_prompts() {
    let expected = expected_fixtures();
    for (path, entry) in &expected {
        let text = fs::read_to_string(path).unwrap_or_else(|e| {
            panic!(
                "missing fixture {} ({e}); regenerate with \
                 `cargo test -p hrex-cli -- --ignored regenerate_replay_fixtures`",
                path.display()
            )
        });
        let on_disk: CacheEntry = serde_json::from_str(&text).unwrap();
        assert_eq!(&on_disk, entry, "stale fixture {}", path.display());
    }

    // No stray files: the fixture dir holds exactly the expected set.
    let on_disk = fs::read_dir(data_dir().join("replay_demo/fixtures"))
        .unwrap()
        .count();
    assert_eq!(on_disk, expected.len());
}
