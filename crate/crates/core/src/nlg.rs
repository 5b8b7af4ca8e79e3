//! From predicted label vectors to rendered feedback.
//!
//! A classifier may set several bits for the same factor. Selection keeps
//! the strongest one per factor (ties by reference type order: trend,
//! weeks, average, other) and records the rest as dropped.

use serde::{Deserialize, Serialize};

use crate::domain::{
    FactorId, LabelVector, Segment, Slot, StudentRecord, Template, TemplateRegistry,
};
use crate::error::{Error, Result};
use crate::features::{series_stats, trend_word, DEFAULT_TREND_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chosen {
    pub template: Template,
    pub vote: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub template: Template,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SelectionResult {
    /// In factor code order.
    pub chosen: Vec<Chosen>,
    pub dropped: Vec<Dropped>,
}

pub const FACTOR_CONFLICT: &str = "factor-conflict";

/// `votes` of `None` means 1.0 for every set bit.
pub fn select_templates(
    pred: &LabelVector,
    votes: Option<&[f64]>,
    registry: &TemplateRegistry,
) -> Result<SelectionResult> {
    if pred.len() != registry.len() {
        return Err(Error::LengthMismatch(format!(
            "label vector has {} bits, registry has {} templates",
            pred.len(),
            registry.len()
        )));
    }
    if let Some(v) = votes {
        if v.len() != registry.len() {
            return Err(Error::LengthMismatch(format!(
                "{} vote strengths for {} templates",
                v.len(),
                registry.len()
            )));
        }
    }
    let vote = |j: usize| votes.map_or(1.0, |v| v[j]);
    let mut result = SelectionResult::default();
    for factor in FactorId::ALL {
        let mut candidates: Vec<usize> = pred
            .ones()
            .filter(|&j| registry.templates()[j].factor == factor)
            .collect();
        if candidates.is_empty() {
            continue;
        }
        candidates.sort_by(|&a, &b| {
            vote(b).total_cmp(&vote(a)).then(
                registry.templates()[a]
                    .reference
                    .cmp(&registry.templates()[b].reference),
            )
        });
        let best = candidates[0];
        result.chosen.push(Chosen {
            template: registry.templates()[best].clone(),
            vote: vote(best),
        });
        for &j in &candidates[1..] {
            result.dropped.push(Dropped {
                template: registry.templates()[j].clone(),
                reason: FACTOR_CONFLICT.to_string(),
            });
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub template_id: u32,
    pub factor: FactorId,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub student_id: String,
    pub sentences: Vec<Sentence>,
}

impl Summary {
    /// One sentence per line.
    pub fn to_text(&self) -> String {
        self.sentences
            .iter()
            .map(|s| format!("{}\n", s.text))
            .collect()
    }
}

/// One decimal place. `format!` rounds the exact binary value half to even.
pub fn format_average(v: f64) -> String {
    format!("{v:.1}")
}

/// Weekly values are printed in their shortest round-trip form; negative
/// zero prints as `0`.
pub fn format_value(v: f64) -> String {
    format!("{}", v + 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    pub trend_tolerance: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            trend_tolerance: DEFAULT_TREND_TOLERANCE,
        }
    }
}

pub fn render_sentence(
    template: &Template,
    record: &StudentRecord,
    opts: &RenderOptions,
) -> String {
    let series = record.series(template.factor);
    let stats = series_stats(series);
    let mut text = String::new();
    for seg in template.segments() {
        match seg {
            Segment::Text(t) => text.push_str(t),
            Segment::Slot(Slot::Average) => text.push_str(&format_average(stats.mean)),
            Segment::Slot(Slot::TrendWord) => {
                text.push_str(trend_word(stats.slope, opts.trend_tolerance).as_str())
            }
            Segment::Slot(Slot::FirstWeekValue) => text.push_str(&format_value(stats.first)),
            Segment::Slot(Slot::LastWeekValue) => text.push_str(&format_value(stats.last)),
            Segment::Slot(Slot::PerWeekList) => text.push_str(
                &series
                    .iter()
                    .map(|&v| format_value(v))
                    .collect::<Vec<_>>()
                    .join(", "),
            ),
        }
    }
    text
}

pub fn render_summary(
    selection: &SelectionResult,
    record: &StudentRecord,
    opts: &RenderOptions,
) -> Summary {
    let mut chosen: Vec<&Chosen> = selection.chosen.iter().collect();
    chosen.sort_by_key(|c| c.template.factor);
    Summary {
        student_id: record.student_id.clone(),
        sentences: chosen
            .into_iter()
            .map(|c| Sentence {
                template_id: c.template.id,
                factor: c.template.factor,
                text: render_sentence(&c.template, record, opts),
            })
            .collect(),
    }
}
