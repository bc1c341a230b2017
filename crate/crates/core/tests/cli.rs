use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seltag::synth::{random_model, sample_corpus, GeneratorConfig};
use serde_json::Value;
use tempfile::TempDir;

fn seltag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_seltag")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const TOY: &str = "the/DT dog/NN runs/VBZ\nthe/DT runs/NNS end/VBP\n";

fn train(dir: &TempDir, corpus: &str) -> PathBuf {
    let c = write(dir, "train.txt", corpus);
    let m = dir.path().join("model.json");
    let o = seltag(&["train", "--corpus", s(&c), "--out", s(&m)]);
    assert!(o.status.success(), "{}", stderr(&o));
    m
}

fn synthetic(dir: &TempDir, name: &str, seed: u64, sentences: usize) -> PathBuf {
    let config = GeneratorConfig {
        tags: 5,
        vocabulary: 40,
        max_tags_per_word: 3,
        skew: 2.0,
    };
    let model = random_model(&mut ChaCha8Rng::seed_from_u64(3), &config);
    let corpus = sample_corpus(&mut ChaCha8Rng::seed_from_u64(seed), &model, sentences, 3..=12);
    write(dir, name, &corpus.to_text())
}

#[test]
fn train_writes_a_loadable_model_and_stats() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "train.txt", TOY);
    let m = dir.path().join("model.json");
    let o = seltag(&["train", "--corpus", s(&c), "--out", s(&m)]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("tokens\t6"), "{out}");
    assert!(out.contains("sentences\t2"));
    let model = seltag::HmmModel::load(&m).unwrap();
    assert_eq!(model.n_tags(), 5);
    assert!(model.is_ambiguous("runs"));
}

#[test]
fn train_with_baum_welch_prints_trace() {
    let dir = TempDir::new().unwrap();
    let c = write(&dir, "train.txt", TOY);
    let raw = write(&dir, "raw.txt", "the dog runs\nthe runs end\n");
    let m = dir.path().join("model.json");
    let o = seltag(&[
        "train",
        "--corpus",
        s(&c),
        "--raw",
        s(&raw),
        "--bw-iters",
        "3",
        "--out",
        s(&m),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("bw iteration 0"));
    assert!(m.exists());
}

#[test]
fn tag_marks_near_ties_as_rejected() {
    let dir = TempDir::new().unwrap();
    let m = train(&dir, "x/A\nx/B\ny/A\n");
    let input = write(&dir, "in.txt", "x y\n\ny\n");
    let o = seltag(&["tag", "--model", s(&m), "--input", s(&input), "--threshold", "0.9"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("x/??") || lines[0].starts_with("x/A"), "{out}");
    assert_eq!(lines[1], "");
    assert_eq!(lines[2], "y/A");

    let o = seltag(&[
        "tag",
        "--model",
        s(&m),
        "--input",
        s(&input),
        "--reject-tag",
        "UNSURE",
        "--threshold",
        "1",
    ]);
    assert!(stdout(&o).lines().next().unwrap().starts_with("x/UNSURE"));
}

#[test]
fn tag_exact_tie_is_rejected_above_one_half() {
    let dir = TempDir::new().unwrap();
    let m = train(&dir, "x/A\nx/B\n");
    let input = write(&dir, "in.txt", "x\n");
    let o = seltag(&["tag", "--model", s(&m), "--input", s(&input), "--threshold", "0.6"]);
    assert_eq!(stdout(&o), "x/??\n");
    let o = seltag(&["tag", "--model", s(&m), "--input", s(&input)]);
    assert_eq!(stdout(&o), "x/A\n");
}

#[test]
fn dead_end_restarts_unless_strict() {
    let dir = TempDir::new().unwrap();
    let m = train(&dir, "a/A b/B\n");
    let input = write(&dir, "in.txt", "a a b\n");
    let o = seltag(&["tag", "--model", s(&m), "--input", s(&input)]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "a/A a/A b/B\n");
    assert!(stderr(&o).contains("warning"), "{}", stderr(&o));

    let o = seltag(&["tag", "--model", s(&m), "--input", s(&input), "--strict"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_then_eval_agree_exactly() {
    let dir = TempDir::new().unwrap();
    let train_path = synthetic(&dir, "train.txt", 10, 400);
    // Relative-frequency models have zeros, so the held-out set is the
    // training set itself.
    let held = train_path.clone();
    let m = dir.path().join("model.json");
    assert!(seltag(&["train", "--corpus", s(&train_path), "--out", s(&m)])
        .status
        .success());

    for (measure, target) in [
        ("prob", "0.95"),
        ("margin", "0.97"),
        ("surprisal", "0.95"),
        ("pentropy", "0.9"),
    ] {
        let cal = dir.path().join("cal.json");
        let o = seltag(&[
            "calibrate",
            "--model",
            s(&m),
            "--corpus",
            s(&held),
            "--measure",
            measure,
            "--target",
            target,
            "--out",
            s(&cal),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let cal: Value = serde_json::from_str(&std::fs::read_to_string(&cal).unwrap()).unwrap();
        let threshold = match &cal["threshold"] {
            Value::String(t) => t.clone(),
            v => format!("{}", v.as_f64().unwrap()),
        };

        let rep = dir.path().join("eval.json");
        let o = seltag(&[
            "eval",
            "--model",
            s(&m),
            "--corpus",
            s(&held),
            "--measure",
            measure,
            "--threshold",
            &threshold,
            "--out",
            s(&rep),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let rep: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
        assert_eq!(rep["c"], cal["predicted_c"], "{measure}");
        assert_eq!(rep["i"], cal["predicted_i"], "{measure}");
        assert_eq!(rep["efficiency"], cal["predicted_efficiency"], "{measure}");
        assert_eq!(rep["accuracy_oracle"], cal["predicted_accuracy"], "{measure}");
        assert!(rep["accuracy_oracle"].as_f64().unwrap() >= target.parse::<f64>().unwrap());
    }
}

#[test]
fn outputs_are_deterministic() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic(&dir, "c.txt", 5, 100);
    let m = dir.path().join("model.json");
    let m2 = dir.path().join("model2.json");
    seltag(&["train", "--corpus", s(&corpus), "--out", s(&m)]);
    seltag(&["train", "--corpus", s(&corpus), "--out", s(&m2)]);
    assert_eq!(std::fs::read(&m).unwrap(), std::fs::read(&m2).unwrap());
    let a = seltag(&["eval", "--model", s(&m), "--corpus", s(&corpus), "--threshold", "0.8"]);
    let b = seltag(&["eval", "--model", s(&m), "--corpus", s(&corpus), "--threshold", "0.8"]);
    assert_eq!(a.stdout, b.stdout);
    let a = seltag(&["curves", "--model", s(&m), "--corpus", s(&corpus)]);
    let b = seltag(&["curves", "--model", s(&m), "--corpus", s(&corpus)]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert!(
        stdout(&a).starts_with("value\tcum_count_correct\tcum_count_incorrect\tcum_frac_correct\tcum_frac_incorrect\n")
    );
    assert!(!stdout(&a).contains("generated_unix"));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let m = train(&dir, TOY);
    let empty = write(&dir, "empty.txt", "");
    let missing = dir.path().join("nope.txt");

    assert_eq!(seltag(&["--help"]).status.code(), Some(0));
    assert_eq!(seltag(&["eval"]).status.code(), Some(1));
    assert_eq!(seltag(&["frobnicate"]).status.code(), Some(1));
    let o = seltag(&["eval", "--model", s(&m), "--corpus", s(&empty)]);
    assert_eq!(o.status.code(), Some(2));
    let o = seltag(&["eval", "--model", s(&m), "--corpus", s(&missing)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nope.txt"));
    let o = seltag(&["eval", "--model", s(&m), "--corpus", s(&empty), "--threshold", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = seltag(&["calibrate", "--model", s(&m), "--corpus", s(&empty), "--target", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let bad = write(&dir, "bad.txt", "the/DT dog\n");
    let o = seltag(&["train", "--corpus", s(&bad), "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 1"), "{}", stderr(&o));
}

#[test]
fn zero_threshold_matches_plain_tagging() {
    let dir = TempDir::new().unwrap();
    let corpus = synthetic(&dir, "c.txt", 8, 50);
    let m = dir.path().join("model.json");
    seltag(&["train", "--corpus", s(&corpus), "--out", s(&m)]);
    let raw: String = seltag::parse_tagged(&std::fs::read_to_string(&corpus).unwrap())
        .unwrap()
        .words()
        .iter()
        .map(|w| w.join(" ") + "\n")
        .collect();
    let input = write(&dir, "raw.txt", &raw);
    let plain = seltag(&["tag", "--model", s(&m), "--input", s(&input)]);
    let zero = seltag(&["tag", "--model", s(&m), "--input", s(&input), "--threshold", "0"]);
    assert!(plain.status.success());
    assert_eq!(plain.stdout, zero.stdout);
    assert!(!stdout(&plain).contains("??"));
    let strict = seltag(&["tag", "--model", s(&m), "--input", s(&input), "--threshold", "1"]);
    for (line, words) in stdout(&strict).lines().zip(raw.lines()) {
        assert_eq!(line.split(' ').count(), words.split(' ').count());
    }
}

#[test]
fn trained_model_file_round_trips() {
    let dir = TempDir::new().unwrap();
    let m = train(&dir, TOY);
    let text = std::fs::read_to_string(&m).unwrap();
    assert_eq!(seltag::HmmModel::from_json(&text).unwrap().to_json(), text);
}

#[test]
fn unreachable_ignore_target_fails() {
    let dir = TempDir::new().unwrap();
    let m = train(&dir, "x/A\nx/B\n");
    let corpus = write(&dir, "gold.txt", "x/A\nx/B\n");
    let o = seltag(&[
        "calibrate",
        "--model",
        s(&m),
        "--corpus",
        s(&corpus),
        "--target",
        "0.9",
        "--mode",
        "ignore",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("target unachievable"), "{}", stderr(&o));
}

#[test]
fn accept_all_eval_matches_direct_count() {
    let dir = TempDir::new().unwrap();
    let corpus_path = synthetic(&dir, "c.txt", 21, 200);
    let m = dir.path().join("model.json");
    seltag(&["train", "--corpus", s(&corpus_path), "--out", s(&m)]);
    let rep = dir.path().join("r.json");
    let o = seltag(&["eval", "--model", s(&m), "--corpus", s(&corpus_path), "--out", s(&rep)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();

    let model = seltag::HmmModel::load(&m).unwrap();
    let corpus = seltag::TaggedCorpus::load(&corpus_path).unwrap();
    let (mut all, mut all_ok, mut amb, mut amb_ok) = (0u64, 0u64, 0u64, 0u64);
    for sentence in corpus.sentences() {
        let words: Vec<&str> = sentence.iter().map(|t| t.word.as_str()).collect();
        let post = seltag::forward_backward(&model, &words).unwrap();
        for (tok, p) in sentence.iter().zip(&post) {
            let ok = model.tagset().name(p.chosen_tag()) == tok.tag;
            all += 1;
            all_ok += u64::from(ok);
            if model.hypotheses(&tok.word).len() > 1 {
                amb += 1;
                amb_ok += u64::from(ok);
            }
        }
    }
    assert_eq!(rep["tokens"], all);
    assert_eq!(rep["ambiguous_tokens"], amb);
    assert_eq!(rep["tagger_accuracy_all"].as_f64().unwrap(), all_ok as f64 / all as f64);
    assert_eq!(rep["accuracy_oracle"].as_f64().unwrap(), amb_ok as f64 / amb as f64);
    assert_eq!(rep["efficiency"].as_f64().unwrap(), 1.0);
}
