//! Versioned prompt templates for the chat-completion judge.
//!
//! The template texts are stored as assets and rendered by substituting the
//! `{text_A}` and `{text_B}` slots verbatim; everything else is fixed bytes.

use serde::{Deserialize, Serialize};

/// Judge prompt without output-format constraints.
pub const PLAIN_TEMPLATE: &str = include_str!("../../assets/prompt_plain.txt");

/// Judge prompt demanding the reply start with TRUE or FALSE.
pub const FORMATTED_TEMPLATE: &str = include_str!("../../assets/prompt_formatted.txt");

/// Which judge prompt to send.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptTemplate {
    #[default]
    Plain,
    Formatted,
}

impl PromptTemplate {
    pub fn id(&self) -> &'static str {
        match self {
            PromptTemplate::Plain => "plain",
            PromptTemplate::Formatted => "formatted",
        }
    }

    /// The raw template text with unresolved slots.
    pub fn text(&self) -> &'static str {
        match self {
            PromptTemplate::Plain => PLAIN_TEMPLATE,
            PromptTemplate::Formatted => FORMATTED_TEMPLATE,
        }
    }

    /// Renders the template with both texts substituted verbatim.
    pub fn render(&self, text_a: &str, text_b: &str) -> String {
        self.text()
            .replace("{text_A}", text_a)
            .replace("{text_B}", text_b)
    }
}

impl std::str::FromStr for PromptTemplate {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(PromptTemplate::Plain),
            "formatted" => Ok(PromptTemplate::Formatted),
            other => Err(format!("unknown prompt template `{other}`")),
        }
    }
}
