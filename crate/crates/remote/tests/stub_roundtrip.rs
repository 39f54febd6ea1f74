use std::time::Instant;

use hearsay_remote::{
    MediaPayload, OutputSchema, RemoteCall, RemoteClient, RemoteError, RemoteToolEndpoint,
    RequestMedia, StubResponse, StubScript, StubServer,
};
use serde_json::{json, Map};

fn endpoint(server: &StubServer, tool: &str, timeout_s: f64) -> RemoteToolEndpoint {
    RemoteToolEndpoint {
        tool_name: tool.to_string(),
        url: server.tool_url(tool),
        timeout_s,
        auth: None,
        request_media: RequestMedia::UploadBytes,
    }
}

fn call<'a>(id: &'a str, params: &'a Map<String, serde_json::Value>) -> RemoteCall<'a> {
    RemoteCall {
        request_id: id,
        media: MediaPayload {
            bytes: b"RIFF....",
            mime: "audio/wav",
            path: None,
        },
        attachments: &[],
        params,
    }
}

#[test]
fn asr_with_timestamps_returns_two_segments() {
    let server = StubServer::start(StubScript::default().with_tool(
        "transcribe_qwenasr_with_timestamps",
        StubResponse::ok(json!({"segments": [
            {"start_s": 0.0, "end_s": 1.2, "text": "turn the tap"},
            {"start_s": 1.4, "end_s": 2.0, "text": "now"}
        ]})),
    ))
    .unwrap();
    let client = RemoteClient::default();
    let params = Map::new();
    let out = client
        .call(
            &endpoint(&server, "transcribe_qwenasr_with_timestamps", 5.0),
            OutputSchema::TimedTranscript,
            call("r1", &params),
        )
        .unwrap();
    let segs = out["segments"].as_array().unwrap();
    assert_eq!(segs.len(), 2);
    assert_eq!(segs[1]["text"], "now");
    assert_eq!(server.request_count("transcribe_qwenasr_with_timestamps"), 1);
}

#[test]
fn malformed_body_is_protocol_error() {
    let server = StubServer::start(StubScript::default().with_tool(
        "diarize_diarizen",
        StubResponse {
            status: 200,
            body: None,
            raw_body: Some("{not json".into()),
            delay_ms: 0,
        },
    ))
    .unwrap();
    let params = Map::new();
    let err = RemoteClient::default()
        .call(
            &endpoint(&server, "diarize_diarizen", 5.0),
            OutputSchema::Diarization,
            call("r2", &params),
        )
        .unwrap_err();
    assert!(matches!(err, RemoteError::Protocol(_)), "{err:?}");
}

#[test]
fn schema_violation_is_reported() {
    let server = StubServer::start(StubScript::default().with_tool(
        "verify_speaker",
        StubResponse::ok(json!({"score": 3.0, "same_speaker": true})),
    ))
    .unwrap();
    let params = Map::new();
    let err = RemoteClient::default()
        .call(
            &endpoint(&server, "verify_speaker", 5.0),
            OutputSchema::SpeakerVerification,
            call("r3", &params),
        )
        .unwrap_err();
    assert!(matches!(err, RemoteError::Schema(_)), "{err:?}");
}

#[test]
fn slow_stub_times_out() {
    let server = StubServer::start(StubScript::default().with_tool(
        "transcribe_whisperx",
        StubResponse {
            delay_ms: 1000,
            ..StubResponse::ok(json!({"text": "late"}))
        },
    ))
    .unwrap();
    let params = Map::new();
    let started = Instant::now();
    let err = RemoteClient::default()
        .call(
            &endpoint(&server, "transcribe_whisperx", 0.1),
            OutputSchema::Transcript,
            call("r4", &params),
        )
        .unwrap_err();
    assert_eq!(err, RemoteError::Timeout);
    assert_eq!(err.to_string(), "timeout");
    assert!(started.elapsed().as_secs_f64() < 0.9);
}

#[test]
fn unscripted_tool_is_404() {
    let server = StubServer::start(StubScript::default()).unwrap();
    let params = Map::new();
    let err = RemoteClient::default()
        .call(
            &endpoint(&server, "recognize_chords", 5.0),
            OutputSchema::ChordTimeline,
            call("r5", &params),
        )
        .unwrap_err();
    assert!(matches!(err, RemoteError::Status { code: 404, .. }), "{err:?}");
}

#[test]
fn connection_refused_is_connection_error() {
    let url = {
        let server = StubServer::start(StubScript::default()).unwrap();
        server.tool_url("transcribe_qwenasr")
    };
    let ep = RemoteToolEndpoint {
        tool_name: "transcribe_qwenasr".into(),
        url,
        timeout_s: 2.0,
        auth: None,
        request_media: RequestMedia::UploadBytes,
    };
    let params = Map::new();
    let err = RemoteClient::default()
        .call(&ep, OutputSchema::Transcript, call("r6", &params))
        .unwrap_err();
    assert!(
        matches!(err, RemoteError::Connection(_) | RemoteError::Timeout),
        "{err:?}"
    );
}

#[test]
fn sequence_entries_served_in_order() {
    let script: StubScript = serde_json::from_value(json!({
        "tools": {"transcribe_qwenasr": [
            {"body": {"text": "first"}},
            {"body": {"text": "second"}}
        ]}
    }))
    .unwrap();
    let server = StubServer::start(script).unwrap();
    let client = RemoteClient::default();
    let params = Map::new();
    let ep = endpoint(&server, "transcribe_qwenasr", 5.0);
    let texts: Vec<_> = (0..3)
        .map(|i| {
            let id = format!("s{i}");
            client
                .call(&ep, OutputSchema::Transcript, call(&id, &params))
                .unwrap()["text"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    assert_eq!(texts, ["first", "second", "second"]);
    assert_eq!(server.total_requests(), 3);
}

#[test]
fn inflight_cap_bounds_concurrency() {
    let server = StubServer::start(StubScript::default().with_tool(
        "transcribe_qwenasr",
        StubResponse {
            delay_ms: 200,
            ..StubResponse::ok(json!({"text": "x"}))
        },
    ))
    .unwrap();
    let client = RemoteClient::new(2);
    let ep = endpoint(&server, "transcribe_qwenasr", 5.0);
    let params = Map::new();
    let started = Instant::now();
    std::thread::scope(|s| {
        for i in 0..4 {
            let (client, ep, params) = (&client, &ep, &params);
            s.spawn(move || {
                let id = format!("c{i}");
                client
                    .call(ep, OutputSchema::Transcript, call(&id, params))
                    .unwrap();
            });
        }
    });
    // Four 200 ms calls through two slots need at least two waves.
    assert!(started.elapsed().as_millis() >= 380);
}

#[test]
fn shared_path_without_path_is_config_error() {
    let server = StubServer::start(StubScript::default()).unwrap();
    let mut ep = endpoint(&server, "transcribe_qwenasr", 1.0);
    ep.request_media = RequestMedia::SharedPath;
    let params = Map::new();
    let err = RemoteClient::default()
        .call(&ep, OutputSchema::Transcript, call("p", &params))
        .unwrap_err();
    assert!(matches!(err, RemoteError::Config(_)));
    assert_eq!(server.total_requests(), 0);
}
