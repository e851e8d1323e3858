//! Registered augmentation prompts.
//!
//! Each prompt asks a generative model to return its input unchanged plus
//! extra, unannotated information. The templates are reconstructions shipped
//! as text assets; `{text}` is replaced by the input text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::BackendError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PromptId {
    Verbose,
    Concise,
    NumericFacts,
    RelatedEntities,
    Free,
}

impl PromptId {
    pub const ALL: [PromptId; 5] = [
        PromptId::Verbose,
        PromptId::Concise,
        PromptId::NumericFacts,
        PromptId::RelatedEntities,
        PromptId::Free,
    ];

    pub const VERSION: &'static str = "v1";

    pub fn as_str(self) -> &'static str {
        match self {
            PromptId::Verbose => "verbose",
            PromptId::Concise => "concise",
            PromptId::NumericFacts => "numeric-facts",
            PromptId::RelatedEntities => "related-entities",
            PromptId::Free => "free",
        }
    }

    pub fn template(self) -> &'static str {
        match self {
            PromptId::Verbose => include_str!("../../prompts/verbose.txt"),
            PromptId::Concise => include_str!("../../prompts/concise.txt"),
            PromptId::NumericFacts => include_str!("../../prompts/numeric-facts.txt"),
            PromptId::RelatedEntities => include_str!("../../prompts/related-entities.txt"),
            PromptId::Free => include_str!("../../prompts/free.txt"),
        }
    }

    /// The template with its header line dropped and `{text}` filled in.
    pub fn render(self, text: &str) -> String {
        let body = self
            .template()
            .lines()
            .skip_while(|l| l.starts_with('#'))
            .collect::<Vec<_>>()
            .join("\n");
        body.replace("{text}", text)
    }
}

impl fmt::Display for PromptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PromptId {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PromptId::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| BackendError::UnknownPrompt(s.to_owned()))
    }
}
