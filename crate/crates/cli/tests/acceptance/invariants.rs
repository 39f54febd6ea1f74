//! Randomized scripted runs checked by validation and by a second,
//! independently written invariant checker.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hearsay_core::artifact::ArtifactSource;
use hearsay_core::{
    export_trace, fixtures, import_trace, validate_trace, ActionKind, Registry, RunConfig, RunTrace, Runner, Templates,
    ToolCallStatus,
};

pub fn check(t: &RunTrace, cap: u32) -> Result<(), String> {
    for (i, a) in t.artifacts.iter().enumerate() {
        if a.id.0 as usize != i {
            return Err(format!("artifact id {} at {i}", a.id.0));
        }
        // Walk the parent chain back to an original; a cycle or forward
        // reference can't terminate within `i` steps.
        let mut cur = i;
        let mut steps = 0;
        loop {
            let art = &t.artifacts[cur];
            match (art.source, &art.provenance) {
                (ArtifactSource::Original, None) => break,
                (ArtifactSource::Derived, Some(p)) if (p.parent.0 as usize) < cur => cur = p.parent.0 as usize,
                _ => return Err(format!("artifact {i} has a broken provenance chain at {cur}")),
            }
            steps += 1;
            if steps > i {
                return Err(format!("artifact {i} provenance does not terminate"));
            }
        }
    }
    for (i, e) in t.evidence.iter().enumerate() {
        if e.seq != i as u64 {
            return Err(format!("evidence seq {} at {i}", e.seq));
        }
    }
    if t.rounds.len() > cap as usize {
        return Err(format!("{} rounds over cap {cap}", t.rounds.len()));
    }

    // Append-only: everything a round cites was written after what earlier
    // rounds cite, and the summary comes last.
    let mut last_seq: Option<u64> = t.perception.as_ref().map(|p| p.evidence_seq);
    let originals = t.artifacts.iter().filter(|a| a.source == ArtifactSource::Original).count() as u32;
    let mut last_artifact = originals.saturating_sub(1);
    let mut later = |seq: u64, what: &str| -> Result<(), String> {
        if last_seq.is_some_and(|s| seq <= s) {
            return Err(format!("{what} seq {seq} is not after {last_seq:?}"));
        }
        last_seq = Some(seq);
        Ok(())
    };
    for (i, r) in t.rounds.iter().enumerate() {
        if r.index as usize != i + 1 {
            return Err(format!("round {} at {i}", r.index));
        }
        let a = &r.action;
        let shape_ok = match a.kind {
            ActionKind::CallTools => !a.calls.is_empty() && a.follow_up_request.is_none() && a.fail_reason.is_none(),
            ActionKind::FollowUp => a.calls.is_empty() && a.follow_up_request.is_some() && a.fail_reason.is_none(),
            ActionKind::Answer => a.calls.is_empty() && a.follow_up_request.is_none() && a.fail_reason.is_none(),
            ActionKind::Fail => a.calls.is_empty() && a.follow_up_request.is_none() && a.fail_reason.is_some(),
        };
        if !shape_ok {
            return Err(format!("round {} does not carry exactly one well-formed action", r.index));
        }
        if a.kind.is_terminal() && i + 1 != t.rounds.len() {
            return Err(format!("terminal action in round {} is not last", r.index));
        }
        if a.kind != ActionKind::CallTools && !r.tool_calls.is_empty() {
            return Err(format!("round {} has calls without a call_tools action", r.index));
        }
        for c in &r.tool_calls {
            if c.round != r.index {
                return Err(format!("call in round {} claims round {}", r.index, c.round));
            }
            if c.status != ToolCallStatus::Ok && (c.produced_evidence_seq.is_some() || !c.produced_artifact_ids.is_empty()) {
                return Err(format!("failed call {} left output", c.tool_name));
            }
            if let Some(seq) = c.produced_evidence_seq {
                later(seq, "tool evidence")?;
            }
            for id in &c.produced_artifact_ids {
                if id.0 <= last_artifact {
                    return Err(format!("artifact {} produced out of order", id.0));
                }
                last_artifact = id.0;
            }
        }
        if let Some(seq) = r.follow_up_seq {
            later(seq, "follow-up")?;
        }
    }
    if let Some(seq) = t.summary_seq {
        later(seq, "summary")?;
    }

    let text = export_trace(t);
    let back = import_trace(&text).map_err(|e| e.to_string())?;
    if export_trace(&back) != text {
        return Err("export is not byte-stable across a round trip".into());
    }
    Ok(())
}

pub fn randomized_runs() {
    let registry = Arc::new(Registry::default_inventory());
    let mut rng = ChaCha8Rng::seed_from_u64(0x1000);
    let mut violations = Vec::new();
    for _ in 0..1000 {
        let seed: u64 = rng.gen();
        let cap = rng.gen_range(1..=15);
        let cfg = RunConfig {
            round_cap: cap,
            ..RunConfig::default()
        };
        let runner = Runner::new(cfg, registry.clone(), Templates::default()).unwrap();
        let trace = runner.run_question(&fixtures::random_question(seed), &fixtures::scripted(fixtures::random_script(seed)));
        if trace.outcome.is_none() {
            violations.push(format!("seed {seed}: run did not finish"));
        }
        if let Err(e) = validate_trace(&trace) {
            violations.push(format!("seed {seed}: {e}"));
        }
        if let Err(e) = check(&trace, cap) {
            violations.push(format!("seed {seed}: {e}"));
        }
    }
    assert!(violations.is_empty(), "{} violations, first: {}", violations.len(), violations[0]);
}
