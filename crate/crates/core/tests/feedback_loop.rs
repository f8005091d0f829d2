//! The generate, verify, repair loop with replayed, builtin and HTTP
//! generators.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use fclloop::am::{mirror_source, BuiltinKind, PolicyRules};
use fclloop::fcl::bundled_constraints;
use fclloop::feedback::{
    extract_code, run_experiment, run_feedback_loop, CodeGenerator, FeedbackError, FeedbackVariant,
    HttpChatGenerator, HttpGeneratorConfig, LoopSettings, ReplayGenerator, ScenarioDocs,
};
use fclloop::sim::{default_suite, ScenarioConfig};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replay").join(name)
}

fn settings(run_dir: &Path, variant: FeedbackVariant) -> LoopSettings {
    let mut s = LoopSettings::new(
        ScenarioDocs::new(ScenarioConfig::default()),
        default_suite(),
        bundled_constraints(),
        run_dir.to_path_buf(),
    );
    s.variant = variant;
    s.parallelism = 2;
    s
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", p.as_ref().display()))
}

#[test]
fn replayed_reference_matches_the_builtin_mirror() {
    let resp = read(fixture("seq3").join("03-response.md"));
    let rules = PolicyRules::from(&ScenarioConfig::default());
    assert_eq!(extract_code(&resp), mirror_source(BuiltinKind::ReferenceGood, rules));
}

#[test]
fn three_step_repair_converges_on_the_third_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = ReplayGenerator::new(fixture("seq3")).unwrap();
    let out = run_feedback_loop(&mut g, &settings(dir.path(), FeedbackVariant::FullConstraint)).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations_used, 3);
    assert_eq!(out.history.len(), 3);
    assert!(out.aborted.is_none());

    let [first, second, third] = [1, 2, 3].map(|k| dir.path().join(format!("iter-{k}")));
    let r1 = read(first.join("report.txt"));
    assert!(r1.contains("protocol failure: the adaptation manager crashed"), "{r1}");
    assert!(r1.contains("KeyError: 'warriors'"), "{r1}");
    let r2 = read(second.join("report.txt"));
    assert!(r2.contains("[attack_early]"), "{r2}");
    assert!(read(third.join("report.txt")).starts_with("Verification passed on all 5 test runs."));

    // Each prompt is the unchanged base prompt followed by the last report.
    let p1 = read(first.join("prompt.txt"));
    let p2 = read(second.join("prompt.txt"));
    let p3 = read(third.join("prompt.txt"));
    let base = p1.trim_end_matches('\n');
    assert!(p2.starts_with(base) && p3.starts_with(base));
    assert!(p2.contains(r1.trim_end()) && !p3.contains(r1.trim_end()));
    assert!(p3.contains(r2.trim_end()));

    for d in [&first, &second, &third] {
        for f in ["prompt.txt", "response.txt", "am.src", "report.json", "report.txt", "run-1.trace.json", "run-5.trace.json"] {
            assert!(d.join(f).is_file(), "{}/{f}", d.display());
        }
    }
    let report: serde_json::Value = serde_json::from_str(&read(third.join("report.json"))).unwrap();
    assert_eq!(report["variant"], "full");
    let outcome: serde_json::Value = serde_json::from_str(&read(dir.path().join("outcome.json"))).unwrap();
    assert_eq!(outcome["converged"], true);
    assert_eq!(outcome["iterations_used"], 3);
}

#[test]
fn metrics_only_feedback_hides_violations() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = ReplayGenerator::new(fixture("seq3")).unwrap();
    let out = run_feedback_loop(&mut g, &settings(dir.path(), FeedbackVariant::MetricsOnly)).unwrap();
    assert_eq!((out.converged, out.iterations_used), (true, 3));
    let r1 = read(dir.path().join("iter-1/report.txt"));
    assert!(r1.contains("Verification failed on 5 of 5 test runs."));
    assert!(!r1.contains("protocol failure") && !r1.contains("KeyError"), "{r1}");
    // the generic and functional layers still ran and were recorded
    assert!(!out.history[0].generic[0].is_empty());
    assert!(out.history[1].functional[0].as_ref().unwrap().iter().any(|v| !v.satisfied));
}

#[test]
fn stalled_generator_uses_every_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mut g = ReplayGenerator::new(fixture("stall")).unwrap();
    let s = settings(dir.path(), FeedbackVariant::MetricsOnly);
    let out = run_feedback_loop(&mut g, &s).unwrap();
    assert!(!out.converged);
    assert_eq!(out.iterations_used, 10);
    assert!(out.history.iter().all(|r| !r.accepted));
    assert!(dir.path().join("iter-10/report.txt").is_file());
}

#[test]
fn exhausted_generator_aborts_with_partial_history() {
    let dir = tempfile::tempdir().unwrap();
    let replay = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("stall").join("01-response.md"), replay.path().join("1.md")).unwrap();
    let mut g = ReplayGenerator::new(replay.path()).unwrap();
    let mut s = settings(dir.path(), FeedbackVariant::GenericOnly);
    s.max_iterations = 4;
    let out = run_feedback_loop(&mut g, &s).unwrap();
    assert!(!out.converged);
    assert_eq!(out.history.len(), 1);
    assert!(out.aborted.as_deref().unwrap().contains("exhausted"));
    let outcome = read(dir.path().join("outcome.json"));
    assert!(outcome.contains("exhausted"), "{outcome}");
}

#[test]
fn experiment_tabulates_every_attempt() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("results.csv");
    let base = settings(dir.path(), FeedbackVariant::FullConstraint);
    let mut make = |_v: FeedbackVariant, _k: usize| -> Result<Box<dyn CodeGenerator>, FeedbackError> {
        Ok(Box::new(ReplayGenerator::new(fixture("seq3"))?))
    };
    let variants = [FeedbackVariant::MetricsOnly, FeedbackVariant::FullConstraint];
    let (result, err) = run_experiment(&variants, 2, &mut make, &base, &dir.path().join("runs"), &csv);
    assert!(err.is_none());
    assert_eq!(
        read(&csv),
        "variant,attempt,converged,iterations\nmetrics,1,true,3\nmetrics,2,true,3\nfull,1,true,3\nfull,2,true,3\n"
    );
    assert_eq!(result.histogram(), serde_json::json!({"full": {"3": 2}, "metrics": {"3": 2}}));
    assert!(dir.path().join("runs/full/attempt-2/iter-3/report.txt").is_file());
}

/// Serves canned HTTP responses in order and records each request.
fn mock_server(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    std::thread::spawn(move || {
        for (status, body) in responses {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            let mut length = 0;
            loop {
                let mut line = String::new();
                if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
                head.push_str(&line);
            }
            let mut body_in = vec![0; length];
            reader.read_exact(&mut body_in).unwrap();
            log.lock().unwrap().push(format!("{head}\r\n{}", String::from_utf8_lossy(&body_in)));
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn http_config(base_url: &str, auth_env: &str) -> HttpGeneratorConfig {
    HttpGeneratorConfig {
        base_url: base_url.into(),
        model: "test-model".into(),
        auth_env: auth_env.into(),
        temperature: Some(0.2),
        max_tokens: Some(256),
        timeout_secs: 5,
        retry_base_ms: 10,
    }
}

#[test]
fn http_generator_retries_server_errors() {
    std::env::set_var("FCLLOOP_TEST_TOKEN_A", "secret-a");
    let ok = serde_json::json!({"choices": [{"message": {"role": "assistant", "content": "```python\nprint(1)\n```"}}]});
    let (url, seen) = mock_server(vec![(503, "{}".into()), (429, "{}".into()), (200, ok.to_string())]);
    let mut g = HttpChatGenerator::new(http_config(&url, "FCLLOOP_TEST_TOKEN_A")).unwrap();
    assert_eq!(g.generate("write an AM").unwrap(), "```python\nprint(1)\n```");
    let seen = seen.lock().unwrap();
    assert_eq!(seen.len(), 3);
    let req = &seen[2];
    assert!(req.starts_with("POST /v1/chat/completions "), "{req}");
    assert!(req.to_ascii_lowercase().contains("authorization: bearer secret-a"), "{req}");
    let body: serde_json::Value = serde_json::from_str(req.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["messages"][0]["content"], "write an AM");
    assert_eq!(body["max_tokens"], 256);
}

#[test]
fn http_generator_gives_up_on_client_errors() {
    std::env::set_var("FCLLOOP_TEST_TOKEN_B", "secret-b");
    let (url, seen) = mock_server(vec![(401, "{\"error\":\"bad key\"}".into())]);
    let mut g = HttpChatGenerator::new(http_config(&url, "FCLLOOP_TEST_TOKEN_B")).unwrap();
    match g.generate("p") {
        Err(FeedbackError::GeneratorUnavailable(msg)) => assert!(msg.contains("401") && msg.contains("after 1 attempts"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn unreachable_endpoint_is_unavailable_after_retries() {
    std::env::set_var("FCLLOOP_TEST_TOKEN_C", "secret-c");
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut g = HttpChatGenerator::new(http_config(&format!("http://127.0.0.1:{port}"), "FCLLOOP_TEST_TOKEN_C")).unwrap();
    match g.generate("p") {
        Err(FeedbackError::GeneratorUnavailable(msg)) => assert!(msg.contains("after 4 attempts"), "{msg}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_token_is_unavailable() {
    let err = HttpChatGenerator::new(http_config("http://127.0.0.1:9", "FCLLOOP_TEST_TOKEN_UNSET")).err().unwrap();
    assert!(matches!(err, FeedbackError::GeneratorUnavailable(_)));
}

#[test]
fn reference_on_the_first_try_converges_at_once() {
    let dir = tempfile::tempdir().unwrap();
    let rules = PolicyRules::from(&ScenarioConfig::default());
    let mut g = fclloop::feedback::BuiltinGenerator::new(BuiltinKind::ReferenceGood, rules);
    let out = run_feedback_loop(&mut g, &settings(dir.path(), FeedbackVariant::FullConstraint)).unwrap();
    assert_eq!((out.converged, out.iterations_used), (true, 1));

    // accepted sources stay accepted when verified again
    let spec = fclloop::am::AmSpec::external(fclloop::am::DEFAULT_COMMAND, dir.path().join("iter-1/am.src"));
    for _ in 0..2 {
        let r = fclloop::verify::run_suite(&spec, &ScenarioConfig::default(), &default_suite(), &bundled_constraints(), 2)
            .unwrap();
        assert!(r.accepted());
    }
}

/// Counts calls and always answers with the same losing source.
struct Counting(usize);

impl CodeGenerator for Counting {
    fn generate(&mut self, _prompt: &str) -> Result<String, FeedbackError> {
        self.0 += 1;
        Ok(read(fixture("stall").join("01-response.md")))
    }

    fn describe(&self) -> String {
        "counting".into()
    }
}

#[test]
fn generator_calls_never_exceed_the_cap() {
    for cap in [1, 4] {
        let dir = tempfile::tempdir().unwrap();
        let mut s = settings(dir.path(), FeedbackVariant::GenericOnly);
        s.max_iterations = cap;
        let mut g = Counting(0);
        let out = run_feedback_loop(&mut g, &s).unwrap();
        assert_eq!((g.0, out.iterations_used, out.history.len()), (cap, cap, cap));
    }
}
