use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::chunk::Chunk;
use super::BenchError;
use crate::assemble::text_sha256;
use crate::compress::{GenParams, TextBackend};

const BUILTIN_TEMPLATES: &str = include_str!("../../assets/mcq_templates.json");

/// Prompt templates for QA generation and evaluation. Placeholders are
/// `{chunk}`, `{question}`, `{answer}`, `{modified_answer}`, `{context}`
/// and `{options}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Templates {
    pub version: String,
    pub qa: String,
    pub modify: String,
    pub distractors: String,
    pub eval: String,
}

impl Templates {
    pub fn builtin() -> Self {
        serde_json::from_str(BUILTIN_TEMPLATES).expect("bundled templates parse")
    }

    pub fn from_json(json: &str) -> Result<Self, BenchError> {
        serde_json::from_str(json).map_err(|e| BenchError::Invalid(format!("templates: {e}")))
    }

    pub fn generation_sha256(&self) -> String {
        text_sha256(&format!("{}\u{0}{}\u{0}{}", self.qa, self.modify, self.distractors))
    }

    pub fn eval_sha256(&self) -> String {
        text_sha256(&self.eval)
    }
}

impl Default for Templates {
    fn default() -> Self {
        Self::builtin()
    }
}

pub(crate) fn fill(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_string();
    for (k, v) in vars {
        out = out.replace(&format!("{{{k}}}"), v);
    }
    out
}

pub const DISTRACTOR_TEMPERATURE: f64 = 0.7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkRef {
    pub doc_id: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAItem {
    pub id: String,
    pub chunk: ChunkRef,
    pub question: String,
    /// Answer as stated in the chunk.
    pub answer: String,
    /// Paraphrased answer; the correct option.
    pub modified_answer: String,
    pub distractors: [String; 3],
    pub options: [String; 4],
    pub correct_index: usize,
    pub seed: u64,
    pub model: String,
    pub template_sha256: String,
    /// Prompt hashes of the three generation calls.
    pub transcript_ids: Vec<String>,
}

fn json_object(text: &str) -> Option<Value> {
    let start = text.find('{')?;
    let end = text.rfind('}')?;
    serde_json::from_str(text.get(start..=end)?).ok()
}

fn call(backend: &dyn TextBackend, stage: &'static str, prompt: &str, params: &GenParams) -> Result<(Value, String), BenchError> {
    let id = text_sha256(prompt);
    let text = backend
        .send(prompt, params)
        .map_err(|e| BenchError::Generation { stage, transcript_id: id.clone(), message: e.to_string() })?;
    let v = json_object(&text).ok_or_else(|| BenchError::Generation {
        stage,
        transcript_id: id.clone(),
        message: "response holds no JSON object".into(),
    })?;
    Ok((v, id))
}

fn field(v: &Value, key: &str, stage: &'static str, id: &str) -> Result<String, BenchError> {
    v.get(key)
        .and_then(Value::as_str)
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .ok_or_else(|| BenchError::Generation {
            stage,
            transcript_id: id.to_string(),
            message: format!("missing field `{key}`"),
        })
}

fn norm(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Seeded shuffle of `[correct, d1, d2, d3]`; returns options and the
/// index of the correct one.
pub fn shuffle_options(correct: &str, distractors: &[String; 3], seed: u64) -> ([String; 4], usize) {
    let mut idx = [0usize, 1, 2, 3];
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let all = [correct, &distractors[0], &distractors[1], &distractors[2]];
    let options = idx.map(|i| all[i].to_string());
    let correct_index = idx.iter().position(|&i| i == 0).expect("0 is in the permutation");
    (options, correct_index)
}

/// Three backend calls: QA pair, paraphrased answer, distractors.
pub fn build_mcq(
    chunk: &Chunk,
    backend: &dyn TextBackend,
    templates: &Templates,
    seed: u64,
) -> Result<QAItem, BenchError> {
    let greedy = GenParams::default();
    let (qa, id_qa) = call(backend, "qa", &fill(&templates.qa, &[("chunk", &chunk.text)]), &greedy)?;
    let question = field(&qa, "question", "qa", &id_qa)?;
    let answer = field(&qa, "answer", "qa", &id_qa)?;

    let prompt = fill(&templates.modify, &[("question", &question), ("answer", &answer)]);
    let (m, id_mod) = call(backend, "modify", &prompt, &greedy)?;
    let modified_answer = field(&m, "modified_answer", "modify", &id_mod)?;

    let prompt = fill(&templates.distractors, &[("question", &question), ("modified_answer", &modified_answer)]);
    let (d, id_dis) = call(backend, "distractors", &prompt, &GenParams::with_temperature(DISTRACTOR_TEMPERATURE))?;
    let list: Vec<String> = d
        .get("distractors")
        .and_then(Value::as_array)
        .map(|a| a.iter().filter_map(Value::as_str).map(|s| s.trim().to_string()).collect())
        .unwrap_or_default();
    let distractors: [String; 3] = list.try_into().map_err(|_| BenchError::Generation {
        stage: "distractors",
        transcript_id: id_dis.clone(),
        message: "expected exactly three distractor strings".into(),
    })?;

    let mut seen: Vec<String> = vec![norm(&modified_answer)];
    for x in &distractors {
        let n = norm(x);
        if n.is_empty() || seen.contains(&n) {
            return Err(BenchError::DuplicateOption { item: format!("{}#{}", chunk.doc_id, chunk.index), option: x.clone() });
        }
        seen.push(n);
    }

    let (options, correct_index) = shuffle_options(&modified_answer, &distractors, seed);
    Ok(QAItem {
        id: format!("{}#{}", chunk.doc_id, chunk.index),
        chunk: ChunkRef { doc_id: chunk.doc_id.clone(), index: chunk.index },
        question,
        answer,
        modified_answer,
        distractors,
        options,
        correct_index,
        seed,
        model: backend.model().to_string(),
        template_sha256: templates.generation_sha256(),
        transcript_ids: vec![id_qa, id_mod, id_dis],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compress::{BackendError, FnBackend};

    fn chunk() -> Chunk {
        Chunk { doc_id: "d".into(), index: 0, text: "The bridge opened in 1932.".into(), word_count: 5, oversized: false }
    }

    fn scripted(distractors: &'static str) -> impl TextBackend {
        FnBackend::new("gen", move |p: &str, params: &GenParams| -> Result<String, BackendError> {
            Ok(if p.contains("PASSAGE:") {
                r#"{"question": "When did the bridge open?", "answer": "1932"}"#.into()
            } else if p.contains("reuses as few") {
                r#"Sure: {"modified_answer": "In the year 1932"}"#.into()
            } else {
                assert_eq!(params.temperature, 0.7);
                distractors.into()
            })
        })
    }

    #[test]
    fn builds_item() {
        let b = scripted(r#"{"distractors": ["In 1923", "In 1942", "In 1936"]}"#);
        let item = build_mcq(&chunk(), &b, &Templates::builtin(), 7).unwrap();
        assert_eq!(item.options[item.correct_index], "In the year 1932");
        let mut sorted = item.options.to_vec();
        sorted.sort();
        assert_eq!(sorted, ["In 1923", "In 1936", "In 1942", "In the year 1932"]);
        assert_eq!(item, build_mcq(&chunk(), &b, &Templates::builtin(), 7).unwrap());
        assert_eq!(item.transcript_ids.len(), 3);
    }

    #[test]
    fn duplicate_option() {
        let b = scripted(r#"{"distractors": ["In 1923", "in the year  1932", "In 1936"]}"#);
        assert!(matches!(build_mcq(&chunk(), &b, &Templates::builtin(), 7), Err(BenchError::DuplicateOption { .. })));
    }

    #[test]
    fn malformed_output() {
        let b = scripted(r#"{"distractors": ["In 1923"]}"#);
        assert!(matches!(build_mcq(&chunk(), &b, &Templates::builtin(), 7), Err(BenchError::Generation { stage: "distractors", .. })));
        let b = FnBackend::new("gen", |_: &str, _: &GenParams| Ok(r#"{"question": "Q?"}"#.to_string()));
        assert!(matches!(build_mcq(&chunk(), &b, &Templates::builtin(), 7), Err(BenchError::Generation { stage: "qa", .. })));
    }

    #[test]
    fn shuffle_is_seeded() {
        let d = ["b".to_string(), "c".to_string(), "d".to_string()];
        assert_eq!(shuffle_options("a", &d, 42), shuffle_options("a", &d, 42));
        let perms: std::collections::BTreeSet<_> = (0..50).map(|s| shuffle_options("a", &d, s).0).collect();
        assert!(perms.len() > 1);
    }
}
