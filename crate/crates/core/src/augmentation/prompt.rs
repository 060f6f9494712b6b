use serde::{Deserialize, Serialize};

use super::AugmentError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptSpec {
    pub n_pairs: usize,
    pub language: String,
    /// Requested share of Useful pairs.
    pub label_split: f64,
}

impl Default for PromptSpec {
    fn default() -> Self {
        PromptSpec {
            n_pairs: 3000,
            language: "C".to_string(),
            label_split: 0.5,
        }
    }
}

impl PromptSpec {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.n_pairs < 1 {
            return Err(AugmentError::InvalidSpec("n_pairs must be >= 1".into()));
        }
        if !(self.label_split > 0.0 && self.label_split < 1.0) {
            return Err(AugmentError::InvalidSpec("label_split must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Generation request asking for labeled pairs in the corpus JSONL schema.
pub fn build_prompt(spec: &PromptSpec) -> String {
    let n_useful = (spec.n_pairs as f64 * spec.label_split).round() as usize;
    let n_not = spec.n_pairs - n_useful.min(spec.n_pairs);
    let lang = &spec.language;
    format!(
        "Generate {n} pairs of {lang} source code and an associated code comment.\n\
         \n\
         Requirements:\n\
         - Every code snippet must be written in the {lang} programming language. Snippets may be \
         a single statement or a few lines taken from a larger program.\n\
         - Comments must be written in English.\n\
         - Mix useful and not useful comments: about {n_useful} pairs labeled \"Useful\" and about \
         {n_not} pairs labeled \"Not Useful\".\n\
         - A comment is \"Useful\" when it explains the purpose or behaviour of the code beyond \
         what the code already says. It is \"Not Useful\" when it is redundant, uninformative, \
         outdated or unrelated to the code.\n\
         - Do not repeat a code-comment pair.\n\
         - Give every pair exactly one label.\n\
         \n\
         Output format: JSON Lines. Print one JSON object per line and nothing else, using \
         exactly these keys:\n\
         {{\"code\": \"<{lang} code>\", \"comment\": \"<comment text>\", \"label\": \"Useful\" | \"Not Useful\"}}\n\
         \n\
         Escape newlines inside strings as \\n. Example:\n\
         {{\"code\": \"int count = 0;\", \"comment\": \"number of open connections\", \"label\": \"Useful\"}}\n",
        n = spec.n_pairs,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contains_count_and_schema() {
        let p = build_prompt(&PromptSpec::default());
        assert!(p.contains("3000"));
        assert!(p.contains("{\"code\": \"<C code>\", \"comment\": \"<comment text>\", \"label\": \"Useful\" | \"Not Useful\"}"));
        assert!(p.contains("1500 pairs labeled \"Useful\""));
        let one = build_prompt(&PromptSpec { n_pairs: 1, ..Default::default() });
        assert!(one.contains("JSON Lines"));
        assert_eq!(one, build_prompt(&PromptSpec { n_pairs: 1, ..Default::default() }));
    }

    #[test]
    fn spec_validation() {
        assert!(PromptSpec { n_pairs: 0, ..Default::default() }.validate().is_err());
        assert!(PromptSpec { label_split: 1.0, ..Default::default() }.validate().is_err());
        assert!(PromptSpec::default().validate().is_ok());
    }
}
