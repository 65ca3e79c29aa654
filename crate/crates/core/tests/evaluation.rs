mod common;

use std::collections::HashMap;

use common::full_property_ontology;
use figura_core::evaluation::metrics::judge_claims;
use figura_core::evaluation::{
    answer_correctness, answer_relevancy, answer_similarity, context_precision, context_recall,
    generate_template_cqs, faithfulness, run_evaluation, score_record, ClaimCounts, EvalError, EvalRecord,
    EvalServices, ExactMatchJudge, GroundTruthRecord, Metric, MetricConfig, ScriptedJudge,
};
use figura_core::external::ExternalError;
use figura_core::ontology::{self, MappingConfig};
use figura_core::rag::embed::HashedBow;
use figura_core::rag::llm::stubs::EchoLlm;
use figura_core::rag::{serialize_ontology, DocumentTemplates, Embedder, RagConfig, TokenOverlap};
use proptest::prelude::*;

/// Gives every distinct text its own axis, so different texts are orthogonal.
struct OneHot;

impl Embedder for OneHot {
    fn dim(&self) -> usize {
        64
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, ExternalError> {
        let mut axes: HashMap<&str, usize> = HashMap::new();
        Ok(texts
            .iter()
            .map(|t| {
                let n = axes.len();
                let axis = *axes.entry(t.as_str()).or_insert(n);
                let mut v = vec![0.0; 64];
                v[axis] = 1.0;
                v
            })
            .collect())
    }
}

fn record(question: &str, truth: &str, answer: &str, contexts: &[&str]) -> EvalRecord {
    EvalRecord {
        truth: GroundTruthRecord {
            question: question.into(),
            ground_truth: truth.into(),
            reference_contexts: vec![],
        },
        answer: answer.into(),
        retrieved_contexts: contexts.iter().map(|s| s.to_string()).collect(),
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

#[test]
fn faithfulness_two_of_four() {
    let r = record("q", "g.", "A. B. C. D.", &["ctx"]);
    let judge = ScriptedJudge {
        supported: [("A.", true), ("B.", false), ("C.", true), ("D.", false)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        ..Default::default()
    };
    assert!(close(faithfulness(&r, &judge).unwrap().unwrap(), 0.5));
    assert_eq!(faithfulness(&record("q", "g", " ", &[]), &judge).unwrap(), None);
}

#[test]
fn context_precision_patterns() {
    let judge = ScriptedJudge {
        relevant: [("eins".to_string(), false), ("zwei".to_string(), true)].into(),
        ..Default::default()
    };
    assert!(close(context_precision(&record("q", "g", "a", &["eins", "zwei"]), &judge).unwrap().unwrap(), 0.5));
    assert!(close(context_precision(&record("q", "g", "a", &["zwei", "eins"]), &judge).unwrap().unwrap(), 1.0));
    assert!(close(context_precision(&record("q", "g", "a", &["eins"]), &judge).unwrap().unwrap(), 0.0));
}

#[test]
fn context_recall_cases() {
    let judge = ScriptedJudge {
        supported: [("Satz eins.".to_string(), true)].into(),
        ..Default::default()
    };
    let r = record("q", "Satz eins. Satz zwei.", "a", &["c"]);
    assert!(close(context_recall(&r, &judge).unwrap().unwrap(), 0.5));
    let r = record("q", "Satz eins. Satz zwei.", "a", &[]);
    assert!(close(context_recall(&r, &judge).unwrap().unwrap(), 0.0));
}

#[test]
fn answer_correctness_tp1_fp1() {
    let judge = ScriptedJudge {
        counts: ClaimCounts { tp: 1, fp: 1, fn_: 0 },
        ..Default::default()
    };
    let r = record("q", "g", "a", &[]);
    let c = answer_correctness(&r, &judge, Some(1.0), (0.75, 0.25)).unwrap();
    // 0.75 * (1 / (1 + 0.5)) + 0.25 * 1.0
    assert!(close(c.score.unwrap(), 0.75 * (2.0 / 3.0) + 0.25));
    assert!(close(c.score.unwrap(), 0.75));
}

#[test]
fn fully_wrong_answer_scores_zero() {
    let r = record("Was ist X?", "X ist Y.", "Z ist W.", &["X ist Y."]);
    let judge = ExactMatchJudge::new([("Was ist X?", "X ist Y.")]);
    let sim = answer_similarity(&r, &OneHot).unwrap();
    assert_eq!(sim, Some(0.0));
    let c = answer_correctness(&r, &judge, sim, (0.75, 0.25)).unwrap();
    assert_eq!(c.score, Some(0.0));
    assert_eq!(faithfulness(&r, &judge).unwrap(), Some(0.0));
}

#[test]
fn perfect_match_scores_one_everywhere() {
    let truth = "Die Anapher wiederholt ein Wort am Anfang.";
    let r = record("Was ist eine Anapher?", truth, truth, &[truth]);
    let judge = ExactMatchJudge::new([("Was ist eine Anapher?", truth)]);
    let s = score_record(&r, &judge, &HashedBow::default(), &MetricConfig::default()).unwrap();
    for m in Metric::ALL {
        assert!(close(s.scores.get(m).unwrap(), 1.0), "{m}");
    }
}

#[test]
fn relevancy_self_and_orthogonal() {
    let r = record("Was ist eine Anapher?", "g", "Antwort", &[]);
    let same = ScriptedJudge {
        questions: vec!["Was ist eine Anapher?".into(); 3],
        ..Default::default()
    };
    assert!(close(answer_relevancy(&r, &same, &OneHot, 3).unwrap().score.unwrap(), 1.0));
    let other = ScriptedJudge {
        questions: vec!["Ganz anders?".into(); 3],
        ..Default::default()
    };
    assert!(close(answer_relevancy(&r, &other, &OneHot, 3).unwrap().score.unwrap(), 0.0));
    let short = ScriptedJudge {
        questions: vec!["Was ist eine Anapher?".into()],
        ..Default::default()
    };
    let rel = answer_relevancy(&r, &short, &OneHot, 3).unwrap();
    assert!(rel.short);
    assert!(close(rel.score.unwrap(), 1.0));
    assert_eq!(answer_relevancy(&r, &ScriptedJudge::default(), &OneHot, 3).unwrap().score, None);
}

#[test]
fn similarity_on_half_overlap_matches_set_oracle() {
    let e = HashedBow::new(4096);
    let words = ["wiederholung", "anfang", "satz", "wort", "ende", "klang"];
    // Precondition for the set oracle: no two words share a bucket.
    let buckets: Vec<usize> = words
        .iter()
        .map(|w| {
            let v = e.embed_one(w).unwrap();
            v.iter().position(|x| *x > 0.0).unwrap()
        })
        .collect();
    let mut dedup = buckets.clone();
    dedup.sort();
    dedup.dedup();
    assert_eq!(dedup.len(), words.len());
    // {a,b,c,d} vs {c,d,e,f}: |A∩B| / sqrt(|A||B|) = 2/4.
    let r = record("q", "satz wort ende klang", "wiederholung anfang satz wort", &[]);
    assert!(close(answer_similarity(&r, &e).unwrap().unwrap(), 0.5));
    // {a,b,c} vs {c}: 1/sqrt(3).
    let r = record("q", "satz", "wiederholung anfang satz", &[]);
    assert!(close(answer_similarity(&r, &e).unwrap().unwrap(), 1.0 / 3f64.sqrt()));
}

fn load(doc: &str) -> figura_core::ontology::TripleStore {
    ontology::load(doc, &MappingConfig::default_mapping()).unwrap().store
}

#[test]
fn seventy_template_questions() {
    let store = load(&full_property_ontology(10));
    let cqs = generate_template_cqs(&store, &DocumentTemplates::default());
    assert_eq!(cqs.len(), 70);
    assert!(cqs.iter().all(|r| !r.question.is_empty() && !r.ground_truth.is_empty()));
    assert!(cqs.iter().all(|r| r.reference_contexts.len() == 1));
}

#[test]
fn anaphora_example_question() {
    let doc = "@prefix : <http://example.org/grhoot#> .\n:Anaphora a :RhetoricalFigure ;\n    :isExample \"Das Wasser rauscht', das Wasser schwoll.\\n(Johann Wolfgang von Goethe, Der Fischer)\" .\n";
    let cqs = generate_template_cqs(&load(doc), &DocumentTemplates::default());
    assert_eq!(cqs.len(), 1);
    assert_eq!(cqs[0].question, "Was ist ein Beispiel für die rhetorische Figur Anaphora?");
    assert_eq!(cqs[0].ground_truth, "Das Wasser rauscht', das Wasser schwoll.");
    assert!(cqs[0].reference_contexts[0].contains("Der Fischer"));
}

#[test]
fn sample_questions_answer_from_ontology() {
    let store = load(ontology::SAMPLE_ONTOLOGY);
    let cqs = generate_template_cqs(&store, &DocumentTemplates::default());
    let epi = cqs
        .iter()
        .find(|r| r.question == "Was ist die Position für die rhetorische Figur Epipher?")
        .unwrap();
    assert_eq!(epi.ground_truth, "Ende");
}

fn services<'a>(judge: &'a ExactMatchJudge, e: &'a HashedBow) -> EvalServices<'a> {
    EvalServices {
        retrieval_embedder: e,
        reranker: &TokenOverlap,
        llm: &EchoLlm,
        judge,
        metric_embedder: e,
    }
}

#[test]
fn six_configuration_report() {
    let store = load(ontology::SAMPLE_ONTOLOGY);
    let templates = DocumentTemplates::default();
    let cqs = generate_template_cqs(&store, &templates);
    let doc = serialize_ontology(&store, &templates);
    let judge = ExactMatchJudge::new(cqs.iter().map(|r| (r.question.as_str(), r.ground_truth.as_str())));
    let e = HashedBow::default();
    let configs = RagConfig::evaluation_grid();
    let run = || run_evaluation(&cqs, &configs, &doc, &services(&judge, &e), &MetricConfig::default()).unwrap();
    let a = run();
    assert_eq!(a.report.rows.len(), 6);
    assert_eq!(a.report.columns, Metric::ALL.to_vec());
    for (m, col) in a.report.columns.iter().enumerate() {
        let best = a.report.rows.iter().filter_map(|r| r.scores.get(*col)).fold(f64::MIN, f64::max);
        for r in &a.report.rows {
            assert_eq!(r.best[m], r.scores.get(*col) == Some(best));
        }
        assert!(a.report.rows.iter().any(|r| r.best[m]));
    }
    let b = run();
    assert_eq!(a, b);
    assert_eq!(a.report.to_json(), b.report.to_json());
    let table = a.report.to_table();
    assert_eq!(table.lines().count(), 7);
    assert!(table.lines().nth(1).unwrap().starts_with("2048"));
    assert!(table.contains("top-12/6") && table.contains("AMR") && table.contains('*'));
}

#[test]
fn empty_dataset_is_an_error() {
    let judge = ExactMatchJudge::default();
    let e = HashedBow::default();
    let r = run_evaluation(&[], &RagConfig::evaluation_grid(), "text", &services(&judge, &e), &MetricConfig::default());
    assert!(matches!(r, Err(EvalError::EmptyDataset)));
}

fn arb_judge() -> impl Strategy<Value = (ScriptedJudge, Vec<String>, Vec<String>)> {
    (
        prop::collection::vec(("[a-e]{1,3}", any::<bool>()), 0..6),
        prop::collection::vec(("[f-j]{1,3}", any::<bool>()), 0..6),
        prop::collection::vec("[a-z ]{0,12}", 0..5),
        (0usize..5, 0usize..5, 0usize..5),
    )
        .prop_map(|(claims, contexts, questions, (tp, fp, fn_))| {
            let judge = ScriptedJudge {
                supported: claims.iter().map(|(c, s)| (format!("{c}."), *s)).collect(),
                relevant: contexts.iter().cloned().collect(),
                questions,
                counts: ClaimCounts { tp, fp, fn_ },
                fail: false,
            };
            let answer_claims = claims.into_iter().map(|(c, _)| format!("{c}.")).collect();
            let ctx = contexts.into_iter().map(|(c, _)| c).collect();
            (judge, answer_claims, ctx)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn metrics_bounded_and_counts_integral((judge, claims, contexts) in arb_judge(), truth in "[a-z]{1,6}( [a-z]{1,6}){0,4}\\.") {
        let answer = claims.join(" ");
        let r = EvalRecord {
            truth: GroundTruthRecord { question: "frage?".into(), ground_truth: truth, reference_contexts: vec![] },
            answer,
            retrieved_contexts: contexts,
        };
        let s = score_record(&r, &judge, &HashedBow::new(32), &MetricConfig::default()).unwrap();
        for m in Metric::ALL {
            if let Some(v) = s.scores.get(m) {
                prop_assert!((0.0..=1.0).contains(&v), "{m} = {v}");
            }
        }
        if let Some(f) = s.scores.faithfulness {
            let claims = judge_claims(&r, &judge).unwrap();
            let supported = claims.iter().filter(|c| c.supported).count() as f64;
            prop_assert!((f * claims.len() as f64 - supported).abs() < 1e-9);
        }
    }

    #[test]
    fn similarity_symmetric(a in "[a-zäöü ]{0,30}", b in "[a-zäöü ]{0,30}") {
        let e = HashedBow::new(64);
        let ab = answer_similarity(&record("q", &b, &a, &[]), &e).unwrap();
        let ba = answer_similarity(&record("q", &a, &b, &[]), &e).unwrap();
        prop_assert_eq!(ab, ba);
    }
}
