//! Same seed, same bytes; repetition averaging; record then replay.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::Arc;

use cogtown_core::backend::{Backend, Gateway, HttpBackend, HttpConfig, ReplayBackend, ScriptedBackend, TemplateSet};
use cogtown_lab::output::write_run;
use cogtown_lab::results::summarize;
use cogtown_lab::{run_experiment, ExperimentKind, ExperimentProtocol, Variant};

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn run_to(p: &ExperimentProtocol, gw: &Gateway, jobs: usize, dir: &Path) -> Vec<(String, Vec<u8>)> {
    let run = run_experiment(p, gw, Some(jobs)).unwrap();
    write_run(&run, dir).unwrap();
    files(dir)
}

#[test]
fn every_experiment_is_byte_identical_across_runs() {
    let gw = Gateway::scripted(ScriptedBackend::defaults_only());
    let tmp = tempfile::tempdir().unwrap();
    for kind in ExperimentKind::ALL {
        for variant in [Variant::Base, Variant::Extended] {
            let p = ExperimentProtocol::builtin(kind, variant);
            assert_eq!((p.seed, p.repetitions), (7, 10));
            let a = run_to(&p, &gw, 4, &tmp.path().join(format!("{kind}_{variant}_a")));
            let b = run_to(&p, &gw, 1, &tmp.path().join(format!("{kind}_{variant}_b")));
            assert_eq!(a.len(), 6);
            for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
                assert_eq!(na, nb);
                assert!(ba == bb, "{kind} {variant}: {na} differs");
            }
        }
    }
}

#[test]
fn reported_values_are_means_of_repetition_values() {
    let gw = Gateway::scripted(ScriptedBackend::defaults_only());
    for kind in [ExperimentKind::Helplessness, ExperimentKind::Ostracism] {
        let mut p = ExperimentProtocol::builtin(kind, Variant::Base);
        p.repetitions = 4;
        let run = run_experiment(&p, &gw, None).unwrap();
        for row in run.table.agent_rows() {
            let per: Vec<f64> = run
                .repetitions
                .iter()
                .filter_map(|r| {
                    summarize(&r.sheet)
                        .into_iter()
                        .find(|x| x.condition == row.condition && x.metric == row.metric)
                        .and_then(|x| x.value)
                })
                .collect();
            let mean = per.iter().sum::<f64>() / per.len() as f64;
            assert!((row.value.unwrap() - mean).abs() <= 1e-12, "{} {}", row.condition, row.metric);
        }
    }
}

/// Minimal chat-completions server: every reply is the first listed option
/// of the prompt when there is one, otherwise a fixed sentence.
fn stub_server() -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut s) = stream else { continue };
            let mut reader = BufReader::new(s.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap_or(0) == 0 {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap_or(0);
                }
                if line == "\r\n" {
                    break;
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).ok();
            let req: serde_json::Value = serde_json::from_slice(&body).unwrap_or_default();
            let prompt = req["messages"]
                .as_array()
                .and_then(|m| m.last())
                .and_then(|m| m["content"].as_str())
                .unwrap_or_default()
                .to_string();
            let reply = answer(&prompt);
            let payload = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": reply}}]}).to_string();
            let resp = format!(
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            );
            s.write_all(resp.as_bytes()).ok();
        }
    });
    format!("http://{addr}")
}

fn answer(prompt: &str) -> String {
    if let Some((_, opts)) = prompt.rsplit_once("one of these options: ") {
        return opts.split(" | ").next().unwrap_or_default().trim().to_string();
    }
    if prompt.contains("\"emotion\"") {
        return r#"{"emotion": "surprise", "intensity": 0.4}"#.into();
    }
    if prompt.contains("\"actions\"") {
        return r#"{"actions": ["wait and listen", "call for help", "do nothing", "do nothing", "do nothing", "do nothing"]}"#.into();
    }
    if let Some((_, example)) = prompt.rsplit_once("shaped like this example:\n") {
        return example.trim().to_string();
    }
    if prompt.contains("number(s)") {
        return "4".into();
    }
    "Fine, thank you.".into()
}

#[test]
fn record_then_replay_is_byte_identical() {
    let url = stub_server();
    let config = HttpConfig {
        base_url: url,
        model: "stub".into(),
        ..HttpConfig::default()
    };
    let http = Arc::new(HttpBackend::new(config).unwrap().recording());
    let live = Gateway::new(http.clone(), TemplateSet::builtin(), Default::default());
    let mut p = ExperimentProtocol::builtin(ExperimentKind::Fitd, Variant::Base);
    p.repetitions = 2;
    let tmp = tempfile::tempdir().unwrap();
    let a = run_to(&p, &live, 2, &tmp.path().join("live"));
    let transcript = http.take_transcript().unwrap();
    assert!(!transcript.is_empty());
    let tpath = tmp.path().join("transcript.json");
    transcript.save(&tpath).unwrap();

    let replay: Arc<dyn Backend> = Arc::new(ReplayBackend::from_file(&tpath).unwrap());
    let gw = live.with_backend(replay);
    let b = run_to(&p, &gw, 1, &tmp.path().join("replay"));
    for ((na, ba), (_, bb)) in a.iter().zip(&b) {
        if na == "table.json" {
            // Engine names differ; everything else must match.
            let mut x: serde_json::Value = serde_json::from_slice(ba).unwrap();
            let mut y: serde_json::Value = serde_json::from_slice(bb).unwrap();
            x["engine"] = serde_json::Value::Null;
            y["engine"] = serde_json::Value::Null;
            assert_eq!(x, y);
        } else {
            assert!(ba == bb, "{na} differs after replay");
        }
    }
}
