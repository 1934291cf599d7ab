mod common;

use std::collections::BTreeMap;

use common::*;
use proptest::prelude::*;
use telegraph::assemble::{
    assemble, render_plan, scores_by_title, simulate_pipeline_savings, AssembleError, DefaultCounter, LineOverride,
    LookupCounter, Tier, TokenCounter,
};
use telegraph::grammar::{parse_document, render_document, LineId};

fn is_subsequence(small: &[&str], big: &[&str]) -> bool {
    let mut it = big.iter();
    small.iter().all(|s| it.any(|b| b == s))
}

#[test]
fn default_counter_matches_oracle_on_fixture() {
    for line in CLINICAL.lines().chain(ML_TE.lines()) {
        assert_eq!(DefaultCounter.count(line), oracle_tokens(line), "{line}");
    }
}

#[test]
fn lookup_counter_prefers_records() {
    let mut c = LookupCounter::new("ext", "7");
    c.record("H1: LIMITATIONS", 99);
    assert_eq!(c.count("H1: LIMITATIONS"), 99);
    assert_eq!(c.count("A→B"), 3);
    assert_eq!(c.id().to_string(), "ext@7");
}

#[test]
fn clinical_budgets() {
    let doc = parse_document(CLINICAL);
    let scores = scores_by_title(
        &doc,
        &BTreeMap::from([("CLINICAL-TRIAL OUTCOMES".to_string(), 1.0), ("SUBGROUP-ANALYSIS".to_string(), 0.5), ("LIMITATIONS".to_string(), 0.2)]),
    );
    let full = recount(&render_document(&doc));
    let all = assemble(&doc, &scores, full, &DefaultCounter, &BTreeMap::new()).unwrap();
    assert_eq!(all.text, render_document(&doc));
    assert_eq!(all.plan.achieved, full);

    let tiny = assemble(&doc, &scores, 1, &DefaultCounter, &BTreeMap::new()).unwrap();
    assert!(tiny.plan.infeasible);
    assert!(tiny.text.is_empty());
    assert_eq!(assemble(&doc, &scores, 0, &DefaultCounter, &BTreeMap::new()), Err(AssembleError::ZeroBudget));
}

#[test]
fn overrides_keep_and_drop() {
    let doc = parse_document(CLINICAL);
    let scores = scores_by_title(&doc, &BTreeMap::from([("CLINICAL-TRIAL OUTCOMES".to_string(), 1.0)]));
    let ov = BTreeMap::from([(4 as LineId, LineOverride::Drop)]);
    let a = assemble(&doc, &scores, 1000, &DefaultCounter, &ov).unwrap();
    assert!(!a.text.contains("SECONDARY-ENDPOINT"));
    assert!(a.text.contains("PRIMARY-ENDPOINT"));
    assert_eq!(a.plan.achieved, recount(&a.text));
    assert_eq!(render_plan(&doc, &a.plan).unwrap(), a.text);
}

/// 100 sections of 6 facts; section 42 is relevant, every tenth section is
/// marginally relevant, the rest score zero.
#[test]
fn graduated_plan_on_hundred_sections() {
    let (doc, scores) = hundred_sections();
    let original = recount(&render_document(&doc));
    let budget = original / 20;
    let a = assemble(&doc, &scores, budget, &DefaultCounter, &BTreeMap::new()).unwrap();
    let topic42 = doc.sections.iter().find(|s| s.title() == "TOPIC-42").unwrap().id();
    assert_eq!(a.plan.tier(topic42), Some(Tier::Full));
    assert!(recount(&a.text) <= budget);
    let savings = simulate_pipeline_savings(&doc, &a.plan, &DefaultCounter).unwrap();
    assert!(savings.ratio <= 0.1, "{}", savings.ratio);
    assert_eq!(savings.original_tokens, original);
}

fn tiers(plan: &telegraph::assemble::AssemblyPlan) -> Vec<(LineId, Tier, bool)> {
    plan.sections.iter().map(|s| (s.section_id, s.tier, s.ctx_included)).collect()
}

proptest! {
    #[test]
    fn default_counter_matches_oracle(text in noisy_text()) {
        prop_assert_eq!(DefaultCounter.count(&text), oracle_tokens(&text));
    }

    #[test]
    fn budget_order_monotone(text in document(), raw_scores in prop::collection::vec(0u8..5, 40), budgets in prop::collection::vec(1usize..400, 2..8)) {
        let doc = parse_document(&text);
        let scores: BTreeMap<LineId, f64> = doc.sections_flat().iter().zip(&raw_scores).map(|(s, &v)| (s.id(), v as f64 / 4.0)).collect();
        let full_lines: Vec<String> = render_document(&doc).lines().map(str::to_string).collect();
        let full_refs: Vec<&str> = full_lines.iter().map(String::as_str).collect();
        let mut budgets = budgets;
        budgets.sort();
        let mut prev: Option<Vec<(LineId, Tier, bool)>> = None;
        for b in budgets {
            let a = assemble(&doc, &scores, b, &DefaultCounter, &BTreeMap::new()).unwrap();
            prop_assert!(recount(&a.text) <= b);
            prop_assert_eq!(a.plan.achieved, recount(&a.text));
            let out: Vec<&str> = a.text.lines().collect();
            prop_assert!(is_subsequence(&out, &full_refs));
            let t = tiers(&a.plan);
            for (id, tier, _) in &t {
                if scores.get(id).copied().unwrap_or(0.0) <= 0.0 {
                    prop_assert_eq!(*tier, Tier::Drop);
                }
            }
            if let Some(p) = &prev {
                for (x, y) in p.iter().zip(&t) {
                    prop_assert!(x.1 <= y.1, "tier fell for section {} as budget grew", x.0);
                }
            }
            prev = Some(t);
        }
    }

    #[test]
    fn higher_score_never_worse_tier(text in document(), raw_scores in prop::collection::vec(1u8..5, 40), budget in 1usize..300) {
        let doc = parse_document(&text);
        let secs = doc.sections_flat();
        let scores: BTreeMap<LineId, f64> = secs.iter().zip(&raw_scores).map(|(s, &v)| (s.id(), v as f64)).collect();
        let a = assemble(&doc, &scores, budget, &DefaultCounter, &BTreeMap::new()).unwrap();
        // A heading step always comes before any full step, so a section
        // with a strictly higher score cannot sit at Drop while a lower one
        // has its heading.
        for x in &a.plan.sections {
            for y in &a.plan.sections {
                if x.score > y.score && y.tier >= Tier::HeadingOnly {
                    prop_assert!(x.tier >= Tier::HeadingOnly);
                }
            }
        }
    }
}
