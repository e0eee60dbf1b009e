use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use super::*;
use crate::dsl::{ops, Constraint, PairOp};
use crate::fixtures;
use crate::relations::{build_graph, BridgeHeuristic, RelationConfig};

fn graph_of(s: &Scene) -> RelationGraph {
    build_graph(s, &RelationConfig::default(), &BridgeHeuristic)
}

/// Serves canned chat replies in order, one per connection, recording request bodies.
/// `None` accepts the request and never answers.
fn mock(replies: Vec<Option<String>>) -> (String, Arc<Mutex<Vec<Value>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1/chat/completions", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    thread::spawn(move || {
        for reply in replies {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut r = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                r.read_line(&mut line).unwrap();
                if line.trim().is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        len = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; len];
            r.read_exact(&mut body).unwrap();
            log.lock().unwrap().push(serde_json::from_slice(&body).unwrap());
            let Some(text) = reply else {
                thread::sleep(Duration::from_secs(3));
                continue;
            };
            let payload = json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string();
            let mut w = stream;
            write!(
                w,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                payload.len()
            )
            .unwrap();
        }
    });
    (url, seen)
}

fn cfg(url: &str) -> LlmConfig {
    LlmConfig {
        endpoint: Some(url.into()),
        timeout_secs: 5.0,
        ..Default::default()
    }
}

#[test]
fn summary_of_one_segment() {
    let s = Scene::from_polygons(64, 64, &[("cup:cup", crate::geom::rect(1.0, 2.0, 11.5, 20.0))]).unwrap();
    let text = build_scene_summary(&s, &graph_of(&s));
    assert_eq!(text, "seg0:(cup:cup) bbox=[(1,2),(11.5,2),(11.5,20),(1,20)]\n");
}

#[test]
fn summary_of_the_lamp() {
    let s = fixtures::toy_lamp();
    let g = graph_of(&s);
    let text = build_scene_summary(&s, &g);
    assert!(text.starts_with("seg0:(lamp:shade) bbox=[(260,80),(380,80),(380,170),(260,170)]"), "{text}");
    assert_eq!(text.lines().filter(|l| l.contains("connected-to")).count(), 4);
    assert_eq!(text.lines().count(), 9);
    assert_eq!(text, build_scene_summary(&s, &g));
}

#[test]
fn system_text_lists_every_operator() {
    let sys = system_text(1);
    for name in ops::inventory() {
        assert!(sys.contains(&format!("- {name}(")), "{name} missing");
    }
    assert!(!sys.contains(ALTERNATIVE_DELIMITER));
    assert!(system_text(3).contains(ALTERNATIVE_DELIMITER));
}

#[test]
fn bundled_examples_parse() {
    let shots = parse_few_shot(DEFAULT_FEW_SHOT).unwrap();
    assert_eq!(shots.len(), 6);
    for ex in &shots {
        let n = ex.scene.lines().filter(|l| !l.contains("connected-to")).count();
        crate::dsl::parse_program(&ex.program, Some(n)).unwrap_or_else(|e| panic!("{}: {e}", ex.request));
    }
    assert!(parse_few_shot("### program\nmove(seg0)").is_err());
    assert!(parse_few_shot("### request\nx\n### program\n").is_err());
}

#[test]
fn messages_are_system_pairs_user() {
    let s = fixtures::toy_lamp();
    let b = PromptBundle::new("Move the lamp shade to touch the base", &s, &graph_of(&s), 1);
    let m = b.messages();
    assert_eq!(m.len(), 1 + 2 * 6 + 1);
    assert_eq!(m[0].role, "system");
    assert_eq!((m[1].role.as_str(), m[2].role.as_str()), ("user", "assistant"));
    assert!(m.last().unwrap().content.contains("seg4:(lamp:base)"));
    assert!(m.last().unwrap().content.ends_with("Request: Move the lamp shade to touch the base"));
}

#[test]
fn code_block_extraction() {
    assert_eq!(extract_code("Sure:\n```dsl\nmove(seg0)\n```\nbye"), "move(seg0)");
    assert_eq!(extract_code("  move(seg1)\n"), "move(seg1)");
    let alts = split_alternatives(&format!("move(seg0)\n{ALTERNATIVE_DELIMITER}\nrotate(seg0)\n"));
    assert_eq!(alts, vec!["move(seg0)\n".to_string(), "rotate(seg0)\n".to_string()]);
}

#[test]
fn lamp_program_from_mock() {
    let s = fixtures::toy_lamp();
    let (url, seen) = mock(vec![Some("```\nmove(seg0)\ntouch(seg0, seg4)\n```".into())]);
    let out = request_program("Move the lamp shade to touch the base", &s, &graph_of(&s), &cfg(&url)).unwrap();
    assert_eq!(out.retries, 0);
    let p = out.program();
    assert_eq!(p.motions.len(), 1);
    assert_eq!(p.constraints.len(), 1);
    assert!(matches!(p.constraints[0], Constraint::Pair(PairOp::Touch, _, _)));
    let body = &seen.lock().unwrap()[0];
    assert_eq!(body["temperature"], json!(0.0));
    assert_eq!(body["messages"].as_array().unwrap().len(), 14);
}

#[test]
fn retry_after_a_bad_identifier() {
    let s = fixtures::toy_lamp();
    let (url, seen) = mock(vec![
        Some("move(seg0)\ntuoch(seg0, seg4)".into()),
        Some("move(seg0)\ntouch(seg0, seg4)".into()),
    ]);
    let out = request_program("Move the lamp shade to touch the base", &s, &graph_of(&s), &cfg(&url)).unwrap();
    assert_eq!(out.retries, 1);
    let second = &seen.lock().unwrap()[1];
    let msgs = second["messages"].as_array().unwrap();
    assert_eq!(msgs.len(), 16);
    assert!(msgs[15]["content"].as_str().unwrap().contains("tuoch"));
}

#[test]
fn exhausted_retries_keep_the_reply() {
    let s = fixtures::toy_lamp();
    let (url, _) = mock(vec![Some("nonsense(".into()), Some("nonsense(".into())]);
    let c = LlmConfig {
        max_retries: 1,
        ..cfg(&url)
    };
    match request_program("x", &s, &graph_of(&s), &c) {
        Err(LlmError::Parse { attempts, raw, .. }) => {
            assert_eq!(attempts, 2);
            assert_eq!(raw, "nonsense(");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn timeout_is_a_transport_error() {
    let s = fixtures::toy_lamp();
    let (url, _) = mock(vec![None]);
    let c = LlmConfig {
        timeout_secs: 0.3,
        ..cfg(&url)
    };
    let err = request_program("x", &s, &graph_of(&s), &c).unwrap_err();
    assert!(matches!(err, LlmError::Transport(_)), "{err:?}");
    assert!(err.to_string().contains("--program"));
}

#[test]
fn missing_endpoint_is_reported() {
    let s = fixtures::toy_lamp();
    let err = request_program("x", &s, &graph_of(&s), &LlmConfig::default()).unwrap_err();
    assert!(matches!(err, LlmError::NotConfigured));
}

#[test]
fn alternatives_split_into_programs() {
    let s = fixtures::toy_lamp();
    let reply = format!("```\nmove(seg0)\ntouch(seg0, seg4)\n{ALTERNATIVE_DELIMITER}\nscale(seg2)\ntouch(seg0, seg4)\n```");
    let (url, _) = mock(vec![Some(reply)]);
    let c = LlmConfig {
        alternatives: 2,
        ..cfg(&url)
    };
    let out = request_program("x", &s, &graph_of(&s), &c).unwrap();
    assert_eq!(out.programs.len(), 2);
}

#[test]
fn crucial_prompt_lists_intra_pairs() {
    let s = fixtures::basket();
    let text = crucial_prompt(&s, &graph_of(&s));
    assert!(text.contains("\nseg0 seg1\n") && text.contains("\nseg1 seg2\n"));
}
