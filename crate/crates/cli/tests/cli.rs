use std::path::Path;
use std::process::{Command, Output};

use hearsay_core::fixtures;
use serde_json::{json, Value};

fn hearsay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hearsay")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_json(path: &Path, v: &impl serde::Serialize) {
    std::fs::write(path, serde_json::to_string_pretty(v).unwrap()).unwrap();
}

/// Dataset with the hot-water clip, a question whose audio is missing and
/// configs for agent and direct runs.
fn workspace(dir: &Path) {
    std::fs::write(dir.join("pour.wav"), fixtures::two_pour_wav()).unwrap();
    let options = fixtures::hot_water_options();
    let lines = [
        json!({"id": "hot_water", "audio": ["pour.wav"], "question": fixtures::HOT_WATER_QUESTION, "options": options, "answer": "B"}),
        json!({"id": "lost", "audio": ["missing.wav"], "question": "Anything?", "options": ["yes", "no"], "answer": "yes"}),
    ];
    let text: String = lines.iter().map(|l| format!("{l}\n")).collect();
    std::fs::write(dir.join("data.jsonl"), text).unwrap();

    for name in ["agent", "direct"] {
        std::fs::create_dir_all(dir.join(format!("scripts_{name}"))).unwrap();
        std::fs::write(
            dir.join(format!("{name}.toml")),
            format!("[run]\nround_cap = 15\n\n[backends]\nkind = \"scripted\"\nscript_dir = \"scripts_{name}\"\n"),
        )
        .unwrap();
    }
    write_json(&dir.join("scripts_agent/hot_water.json"), &fixtures::hot_water_script());
    write_json(&dir.join("scripts_direct/hot_water.json"), &json!({"frontend": ["A"]}));
}

#[test]
fn full_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    workspace(d);
    let p = |s: &str| d.join(s).display().to_string();

    let o = hearsay(&["run", "--dataset", &p("data.jsonl"), "--config", &p("agent.toml"), "--out-dir", &p("agent"), "--parallel", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("2 questions, 1 answered, 1 failed"), "{}", stdout(&o));
    assert!(d.join("agent/hot_water.trace.json").exists());
    assert!(d.join("agent/media/hot_water/audio_2.wav").exists());

    let o = hearsay(&["run", "--dataset", &p("data.jsonl"), "--config", &p("direct.toml"), "--out-dir", &p("direct"), "--direct"]);
    assert!(o.status.success());

    let o = hearsay(&["run", "--dataset", &p("data.jsonl"), "--config", &p("agent.toml"), "--out-dir", &p("agent"), "--resume"]);
    assert!(stdout(&o).contains("2 resumed"), "{}", stdout(&o));

    let o = hearsay(&["score", "--traces", &p("agent"), "--dataset", &p("data.jsonl")]);
    assert_eq!(stdout(&o), "accuracy: 50.0% (1/2)\n");
    let o = hearsay(&["score", "--traces", &p("direct"), "--dataset", &p("data.jsonl"), "--out", &p("base.json")]);
    assert_eq!(stdout(&o), "accuracy: 0.0% (0/2)\n");

    let o = hearsay(&["stratify", "--traces", &p("agent"), "--dataset", &p("data.jsonl"), "--baseline", &p("base.json"), "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows: Value = serde_json::from_str(&stdout(&o)).unwrap();
    // The missing-audio run failed and is left out; the hot-water run made three calls.
    assert_eq!(rows[0]["n"], 0);
    assert_eq!(rows[3]["n"], 1);
    assert_eq!(rows[3]["agent_pct"], 100.0);
    assert_eq!(rows[3]["delta_pp"], 100.0);

    let o = hearsay(&["stats", "--traces", &p("agent"), "--json"]);
    let s: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(s["n_runs"], 2);
    assert_eq!(s["n_completed"], 1);
    assert_eq!(s["total_tool_calls"], 3);
    assert_eq!(s["mean_rounds"], 4.0);
    assert_eq!(s["relisten_total"], 1);
    assert_eq!(s["answered_pct"], 50.0);

    let o = hearsay(&["audit", "--traces", &p("agent"), "--out-dir", &p("bundle")]);
    assert!(o.status.success());
    let index = std::fs::read(d.join("bundle/index.json")).unwrap();
    let timeline = std::fs::read_to_string(d.join("bundle/timelines/hot_water.txt")).unwrap();
    assert!(timeline.find("round 1 call_tools").unwrap() < timeline.find("round 4 answer").unwrap());
    assert!(timeline.contains("re-listen"));
    hearsay(&["audit", "--traces", &p("agent"), "--out-dir", &p("bundle")]);
    assert_eq!(std::fs::read(d.join("bundle/index.json")).unwrap(), index);
    let listed: Value = serde_json::from_slice(&index).unwrap();
    assert_eq!(listed.as_array().unwrap().len(), 2);

    // Analytics are pure functions of the trace directory.
    let a = stdout(&hearsay(&["stats", "--traces", &p("agent")]));
    let b = stdout(&hearsay(&["stats", "--traces", &p("bundle/traces")]));
    assert_eq!(a, b);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    workspace(d);
    let p = |s: &str| d.join(s).display().to_string();

    std::fs::write(d.join("bad.toml"), "[run]\nround_cap = 0\n[backends]\nkind = \"scripted\"\nscript_dir = \"s\"\n").unwrap();
    let o = hearsay(&["run", "--dataset", &p("data.jsonl"), "--config", &p("bad.toml"), "--out-dir", &p("o")]);
    assert_eq!(o.status.code(), Some(2));
    let o = hearsay(&["run", "--dataset", &p("data.jsonl"), "--config", &p("absent.toml"), "--out-dir", &p("o")]);
    assert_eq!(o.status.code(), Some(2));

    let mut text = std::fs::read_to_string(d.join("data.jsonl")).unwrap();
    text.push_str("{\"id\": \"broken\", \"audio\": [], \"question\": \"?\"}\n");
    std::fs::write(d.join("data.jsonl"), &text).unwrap();
    let o = hearsay(&["run", "--dataset", &p("data.jsonl"), "--config", &p("agent.toml"), "--out-dir", &p("o")]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
    let o = hearsay(&["run", "--dataset", &p("data.jsonl"), "--config", &p("agent.toml"), "--out-dir", &p("o"), "--lenient"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("skipped line 3"));

    std::fs::write(d.join("o/hot_water.trace.json"), "{}").unwrap();
    let o = hearsay(&["stats", "--traces", &p("o")]);
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(d.join("j.jsonl"), "{\"question_id\": \"q\", \"answer_correct\": true, \"criteria\": [true, true, false, true, true]}\n").unwrap();
    let o = hearsay(&["rubric", "--judgments", &p("j.jsonl")]);
    assert_eq!(stdout(&o), "q\t0.800\nmean\t0.800\n");
    assert!(!hearsay(&["bogus"]).status.success());
}
