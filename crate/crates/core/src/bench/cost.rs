use serde::{Deserialize, Serialize};

use super::table::{money, thousands, Table};
use super::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stage {
    pub context: f64,
    pub generated: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Method {
    pub name: String,
    pub ratio: f64,
    /// Persistent methods compress every stage; input-only methods only
    /// the first stage's context.
    pub persistent: bool,
    /// Use this total instead of deriving it from the stages.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_tokens: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostScenario {
    pub stages: Vec<Stage>,
    pub price_per_million: f64,
    pub calls: u64,
    pub methods: Vec<Method>,
    /// Method the savings are measured against.
    pub baseline: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodCost {
    pub name: String,
    pub total_tokens: f64,
    pub cost: f64,
    /// `None` for the baseline itself.
    pub savings: Option<f64>,
}

pub fn method_tokens(stages: &[Stage], m: &Method) -> f64 {
    if let Some(t) = m.total_tokens {
        return t;
    }
    stages
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if m.persistent {
                m.ratio * (s.context + s.generated)
            } else if i == 0 {
                m.ratio * s.context + s.generated
            } else {
                s.context + s.generated
            }
        })
        .sum()
}

pub fn pipeline_cost(s: &CostScenario) -> Result<Vec<MethodCost>, BenchError> {
    let negative = |v: f64| v < 0.0 || !v.is_finite();
    if negative(s.price_per_million) || s.stages.iter().any(|st| negative(st.context) || negative(st.generated)) {
        return Err(BenchError::Invalid("counts and price must be non-negative".into()));
    }
    for m in &s.methods {
        if negative(m.ratio) || m.total_tokens.is_some_and(negative) {
            return Err(BenchError::Invalid(format!("method {}: negative ratio or total", m.name)));
        }
    }
    let cost = |tokens: f64| tokens * s.calls as f64 * s.price_per_million / 1e6;
    let base = s
        .methods
        .iter()
        .find(|m| m.name == s.baseline)
        .ok_or_else(|| BenchError::Invalid(format!("baseline method {} not listed", s.baseline)))?;
    let base_cost = cost(method_tokens(&s.stages, base));
    Ok(s.methods
        .iter()
        .map(|m| {
            let total_tokens = method_tokens(&s.stages, m);
            let c = cost(total_tokens);
            MethodCost {
                name: m.name.clone(),
                total_tokens,
                cost: c,
                savings: (m.name != s.baseline).then_some(base_cost - c),
            }
        })
        .collect())
}

pub fn cost_table(rows: &[MethodCost], calls: u64) -> Table {
    let per = if calls == 1000 { "Cost / 1K calls".to_string() } else { format!("Cost / {} calls", thousands(calls)) };
    let mut t = Table::new(["Method", "Total tokens", "Cost", "Savings"]);
    t.headers[2] = per;
    for r in rows {
        t.row([
            r.name.clone(),
            thousands(r.total_tokens.round() as u64),
            money(r.cost),
            r.savings.map_or_else(|| "n/a".to_string(), money),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stages() -> Vec<Stage> {
        let mut v = vec![Stage { context: 2000.0, generated: 400.0 }];
        v.extend(std::iter::repeat_n(Stage { context: 0.0, generated: 400.0 }, 4));
        v
    }

    fn method(name: &str, ratio: f64, persistent: bool) -> Method {
        Method { name: name.into(), ratio, persistent, total_tokens: None }
    }

    #[test]
    fn input_only_applies_to_first_context() {
        assert_eq!(method_tokens(&stages(), &method("x", 0.5, false)), 3000.0);
        assert_eq!(method_tokens(&stages(), &method("x", 0.5, true)), 2000.0);
        assert_eq!(method_tokens(&stages(), &method("x", 1.0, true)), 4000.0);
    }

    #[test]
    fn baseline_has_no_savings() {
        let s = CostScenario {
            stages: stages(),
            price_per_million: 10.0,
            calls: 1000,
            methods: vec![method("Original", 1.0, true), method("Half", 0.5, true)],
            baseline: "Original".into(),
        };
        let r = pipeline_cost(&s).unwrap();
        assert_eq!(r[0].savings, None);
        assert_eq!(r[0].cost, 40.0);
        assert_eq!(r[1].savings, Some(20.0));
        let text = cost_table(&r, 1000).to_text();
        assert!(text.contains("Original") && text.contains("n/a"));
    }

    #[test]
    fn negative_ratio_rejected() {
        let s = CostScenario {
            stages: stages(),
            price_per_million: 10.0,
            calls: 1,
            methods: vec![method("Original", -1.0, true)],
            baseline: "Original".into(),
        };
        assert!(pipeline_cost(&s).is_err());
    }
}
