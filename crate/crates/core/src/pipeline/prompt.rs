//! Post-editing prompt layout.
//!
//! The user message always carries three sections in this order, even when
//! a section has nothing to show:
//!
//! ```text
//! <glossary entries>
//! no 0: check -> vt. kontrola.
//! </glossary entries>
//!
//! <past translations>
//! English: <tm source>
//! Tetun: <tm target>
//!
//! </past translations>
//!
//! Text to translate:
//! English: <source>
//! MT: <draft>
//! Tetun:
//! ```

use serde::{Deserialize, Serialize};

use crate::backends::ChatMessage;
use crate::retrieval::{GlossaryMatch, TmMatch};
use crate::store::EngineConfig;

pub const GLOSSARY_OPEN: &str = "<glossary entries>";
pub const GLOSSARY_CLOSE: &str = "</glossary entries>";
pub const PAST_OPEN: &str = "<past translations>";
pub const PAST_CLOSE: &str = "</past translations>";
pub const TEXT_HEADER: &str = "Text to translate:";
pub const MT_LABEL: &str = "MT:";

pub const SOURCE_LANG_PLACEHOLDER: &str = "{SOURCE_LANG}";
pub const TARGET_LANG_PLACEHOLDER: &str = "{TARGET_LANG}";

pub const DEFAULT_SYSTEM_PROMPT: &str = "\
You are an expert translator. I am going to give you relevant glossary entries, \
and relevant past translations, where the first is the {SOURCE_LANG} source and \
the second is the {TARGET_LANG} reference translation. The sentences will be written

{SOURCE_LANG}: <sentence>
{TARGET_LANG}: <translated sentence>.

After the example pairs, I am going to provide another sentence in {SOURCE_LANG} \
and its machine translation, and I want you to translate it into {TARGET_LANG}. \
Give only the translation, and no extra commentary, formatting, or chattiness. \
Translate the text from {SOURCE_LANG} to {TARGET_LANG}.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_message: String,
    /// Configured few-shot turns as (user, assistant) pairs.
    pub few_shot: Vec<(String, String)>,
    pub user_message: String,
}

impl PromptBundle {
    /// Messages in send order. A blank system prompt is left out.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut out = Vec::with_capacity(2 + 2 * self.few_shot.len());
        if !self.system_message.trim().is_empty() {
            out.push(ChatMessage::system(&self.system_message));
        }
        for (user, assistant) in &self.few_shot {
            out.push(ChatMessage::user(user));
            out.push(ChatMessage::assistant(assistant));
        }
        out.push(ChatMessage::user(&self.user_message));
        out
    }

    /// Renders the bundle as plain text, one labelled block per message.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (i, msg) in self.messages().iter().enumerate() {
            if i > 0 {
                out.push('\n');
            }
            let label = match msg.role {
                crate::backends::Role::System => "[System]",
                crate::backends::Role::User => "[User]",
                crate::backends::Role::Assistant => "[Assistant]",
            };
            out.push_str(label);
            out.push('\n');
            out.push_str(&msg.content);
            out.push('\n');
        }
        out
    }
}

fn substitute(template: &str, source_lang: &str, target_lang: &str) -> String {
    template
        .replace(TARGET_LANG_PLACEHOLDER, target_lang)
        .replace(SOURCE_LANG_PLACEHOLDER, source_lang)
}

/// Lays out the evidence and the draft for the post-editing call.
/// Glossary lines are numbered from 0 in match order; past translations
/// follow rank order.
pub fn build_prompt(
    config: &EngineConfig,
    source_text: &str,
    mt_text: &str,
    glossary_matches: &[GlossaryMatch],
    tm_matches: &[TmMatch],
) -> PromptBundle {
    let src = config.source_language_name.as_str();
    let tgt = config.target_language_name.as_str();
    let llm = &config.llm_backend;

    let mut user = String::new();
    user.push_str(GLOSSARY_OPEN);
    user.push('\n');
    for (i, m) in glossary_matches.iter().enumerate() {
        user.push_str(&format!("no {i}: {} -> {}\n", m.entry.source_term, m.entry.target_text));
    }
    user.push_str(GLOSSARY_CLOSE);
    user.push_str("\n\n");

    user.push_str(PAST_OPEN);
    user.push('\n');
    for m in tm_matches {
        user.push_str(&format!("{src}: {}\n{tgt}: {}\n\n", m.entry.source_text, m.entry.target_text));
    }
    user.push_str(PAST_CLOSE);
    user.push_str("\n\n");

    user.push_str(TEXT_HEADER);
    user.push('\n');
    user.push_str(&format!("{src}: {source_text}\n{MT_LABEL} {mt_text}\n{tgt}: "));

    PromptBundle {
        system_message: substitute(&llm.system_prompt, src, tgt),
        few_shot: llm
            .few_shot_examples
            .iter()
            .map(|ex| (substitute(&ex.user, src, tgt), substitute(&ex.assistant, src, tgt)))
            .collect(),
        user_message: user,
    }
}

fn block<'a>(prompt: &'a str, open: &str, close: &str) -> Option<&'a str> {
    let start = prompt.find(open)? + open.len();
    let len = prompt[start..].find(close)?;
    Some(&prompt[start..start + len])
}

/// `(source_term, target_text)` pairs listed in a prompt's glossary block.
pub fn glossary_block_entries(prompt: &str) -> Vec<(String, String)> {
    let Some(body) = block(prompt, GLOSSARY_OPEN, GLOSSARY_CLOSE) else {
        return Vec::new();
    };
    body.lines()
        .filter_map(|line| {
            let rest = line.strip_prefix("no ")?;
            let (_, entry) = rest.split_once(": ")?;
            let (term, target) = entry.split_once(" -> ")?;
            Some((term.to_string(), target.to_string()))
        })
        .collect()
}

pub fn glossary_block_targets(prompt: &str) -> Vec<String> {
    glossary_block_entries(prompt).into_iter().map(|(_, t)| t).collect()
}

/// Number of source/target pairs in a prompt's past-translations block.
pub fn past_translation_count(prompt: &str, source_lang: &str) -> usize {
    let label = format!("{source_lang}: ");
    block(prompt, PAST_OPEN, PAST_CLOSE)
        .map_or(0, |body| body.lines().filter(|l| l.starts_with(&label)).count())
}
