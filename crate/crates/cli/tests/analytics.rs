use hearsay_cli::rounding::{fmt_fixed, fmt_signed, percent, round_to};
use hearsay_cli::rubric::{aggregate_rubric, rubric_score, RubricJudgment};
use hearsay_cli::stats::round_bucket;
use hearsay_cli::stratify::{stratify_by_tool_calls, Bucket, QuestionOutcome};
use hearsay_cli::Rational;
use proptest::prelude::*;

fn outcome() -> impl Strategy<Value = QuestionOutcome> {
    (0usize..40, any::<bool>(), any::<bool>()).prop_map(|(tool_calls, agent_correct, baseline_correct)| QuestionOutcome {
        tool_calls,
        agent_correct,
        baseline_correct,
    })
}

#[test]
fn top_tool_share_uses_all_calls_as_denominator() {
    assert_eq!(fmt_fixed(percent(227, 1675).unwrap(), 1), "13.6");
    assert_eq!(fmt_fixed(percent(249, 1675).unwrap(), 1), "14.9");
}

#[test]
fn round_buckets_match_the_tool_call_buckets_above_one() {
    for n in 2..40 {
        let b = Bucket::of(n).label();
        if n > 3 {
            assert_eq!(round_bucket(n), b);
        }
    }
}

proptest! {
    #[test]
    fn bucket_sizes_sum_to_the_population(qs in proptest::collection::vec(outcome(), 0..300)) {
        let rows = stratify_by_tool_calls(&qs);
        prop_assert_eq!(rows.len(), 7);
        prop_assert_eq!(rows.iter().map(|r| r.n).sum::<usize>(), qs.len());
        prop_assert_eq!(rows.iter().map(|r| r.agent_correct).sum::<usize>(), qs.iter().filter(|q| q.agent_correct).count());
        for r in &rows {
            prop_assert!(r.agent_correct <= r.n && r.baseline_correct <= r.n);
            if r.n > 0 {
                prop_assert_eq!(r.delta_pp().unwrap(), r.agent_pct().unwrap() - r.baseline_pct().unwrap());
            } else {
                prop_assert!(r.agent_pct().is_none());
            }
        }
    }

    #[test]
    fn rubric_scores_are_zero_or_fifths(correct in any::<bool>(), criteria in any::<[bool; 5]>()) {
        let s = rubric_score(&RubricJudgment { question_id: "q".into(), answer_correct: correct, criteria });
        let fifths = s * Rational::from_integer(5);
        prop_assert!(fifths.is_integer());
        prop_assert!(s >= Rational::from_integer(0) && s <= Rational::from_integer(1));
        if !correct {
            prop_assert_eq!(s, Rational::from_integer(0));
        }
    }

    #[test]
    fn rubric_mean_lies_within_the_scores(js in proptest::collection::vec((any::<bool>(), any::<[bool; 5]>()), 1..50)) {
        let judgments: Vec<RubricJudgment> = js
            .iter()
            .enumerate()
            .map(|(i, (c, k))| RubricJudgment { question_id: format!("q{i}"), answer_correct: *c, criteria: *k })
            .collect();
        let report = aggregate_rubric(&judgments);
        let mean = report.mean.unwrap();
        let lo = report.per_question.iter().map(|p| p.1).min().unwrap();
        let hi = report.per_question.iter().map(|p| p.1).max().unwrap();
        prop_assert!(lo <= mean && mean <= hi);
    }

    #[test]
    fn rounding_is_symmetric_about_zero(num in -100_000i64..100_000, den in 1i64..5_000) {
        let x = Rational::new(num, den);
        prop_assert_eq!(round_to(-x, 1), -round_to(x, 1));
        let s = fmt_signed(x, 1);
        let neg = fmt_signed(-x, 1);
        if s != "0.0" {
            prop_assert_eq!(&s[1..], &neg[1..]);
        } else {
            prop_assert_eq!(neg, "0.0");
        }
    }
}
