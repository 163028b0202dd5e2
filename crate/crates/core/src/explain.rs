//! Attention heatmap export: JSON for machines, HTML and terminal text for
//! people. Color intensity tracks the weight given to each word.

use crate::error::{Error, Result};
use crate::model::attention::AttentionNorm;
use crate::model::network::Prediction;

/// Sum tolerance for a weight vector that claims to be a distribution.
const ALPHA_SUM_TOLERANCE: f64 = 1e-9;

/// 256-color codes of the background ramp, dimmest to brightest red.
const ANSI_RAMP: [u8; 5] = [52, 88, 124, 160, 196];

/// One explained prediction: tokens with their attention weights, the chosen
/// label, and the class distribution behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatmapDoc {
    pub tokens: Vec<String>,
    pub weights: Vec<f64>,
    pub label: String,
    pub probs: Vec<f64>,
    pub norm: AttentionNorm,
}

impl HeatmapDoc {
    pub fn new(
        tokens: Vec<String>,
        weights: Vec<f64>,
        label: String,
        probs: Vec<f64>,
        norm: AttentionNorm,
    ) -> Result<Self> {
        let doc = HeatmapDoc { tokens, weights, label, probs, norm };
        doc.validate()?;
        Ok(doc)
    }

    pub fn from_prediction(prediction: &Prediction, norm: AttentionNorm) -> Result<Self> {
        Self::new(
            prediction.tokens.clone(),
            prediction.alpha.clone(),
            prediction.label.clone(),
            prediction.probs.clone(),
            norm,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::Argument("heatmap needs at least one token".into()));
        }
        if self.tokens.len() != self.weights.len() {
            return Err(Error::Argument(format!(
                "{} tokens but {} weights",
                self.tokens.len(),
                self.weights.len()
            )));
        }
        if self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Argument("weights must be finite and nonnegative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > ALPHA_SUM_TOLERANCE {
            return Err(Error::Argument(format!("weights sum to {sum}, not 1")));
        }
        if self.probs.is_empty() || self.probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::Argument("class probabilities missing or non-finite".into()));
        }
        Ok(())
    }

    fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("a string always serializes")
}

/// Compact JSON with fixed key order `tokens, weights, label, probs` and
/// weights (and probabilities) printed at 6 decimal places. Byte-identical
/// for identical documents.
pub fn to_json(doc: &HeatmapDoc) -> Result<String> {
    doc.validate()?;
    let tokens: Vec<String> = doc.tokens.iter().map(|t| json_string(t)).collect();
    let weights: Vec<String> = doc.weights.iter().map(|w| format!("{w:.6}")).collect();
    let probs: Vec<String> = doc.probs.iter().map(|p| format!("{p:.6}")).collect();
    Ok(format!(
        "{{\"tokens\":[{}],\"weights\":[{}],\"label\":{},\"probs\":[{}]}}",
        tokens.join(","),
        weights.join(","),
        json_string(&doc.label),
        probs.join(",")
    ))
}

fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

/// Self-contained HTML page. Each token's background opacity is its weight
/// divided by the maximum weight, so the strongest word is fully saturated;
/// the raw weight sits in the hover tooltip. No external assets.
pub fn to_html(doc: &HeatmapDoc) -> Result<String> {
    doc.validate()?;
    let max = doc.max_weight();
    let mut spans = String::new();
    for (token, &w) in doc.tokens.iter().zip(&doc.weights) {
        let opacity = if max > 0.0 { w / max } else { 0.0 };
        spans.push_str(&format!(
            "<span class=\"tok\" style=\"background-color: rgba(204, 41, 41, {opacity:.4})\" \
             title=\"weight = {w:.6}\">{}</span>\n",
            escape_html(token)
        ));
    }
    let probs = doc
        .probs
        .iter()
        .map(|p| format!("{p:.6}"))
        .collect::<Vec<_>>()
        .join(", ");
    Ok(format!(
        "<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n\
         <title>attention heatmap</title>\n<style>\n\
         body {{ font-family: sans-serif; margin: 2rem; line-height: 2.2; }}\n\
         .tok {{ padding: 0.2rem 0.35rem; border-radius: 0.3rem; }}\n\
         .meta {{ margin-top: 1.5rem; color: #444; }}\n\
         </style>\n</head>\n<body>\n<p class=\"heatmap\">\n{spans}</p>\n\
         <p class=\"meta\">predicted: <strong>{}</strong> | probabilities: [{probs}]</p>\n\
         </body>\n</html>\n",
        escape_html(&doc.label)
    ))
}

/// Ramp bucket for a max-normalized weight in [0, 1].
fn ramp_bucket(ratio: f64) -> usize {
    ((ratio * ANSI_RAMP.len() as f64) as usize).min(ANSI_RAMP.len() - 1)
}

/// One terminal line of tokens. With `color`, each token gets a background
/// from a 5-step red ramp over its max-normalized weight; without, tokens
/// degrade to `token(0.90)` with the raw weight at 2 decimal places.
pub fn to_ansi(doc: &HeatmapDoc, color: bool) -> Result<String> {
    doc.validate()?;
    let max = doc.max_weight();
    let rendered: Vec<String> = doc
        .tokens
        .iter()
        .zip(&doc.weights)
        .map(|(token, &w)| {
            if color {
                let ratio = if max > 0.0 { w / max } else { 0.0 };
                let code = ANSI_RAMP[ramp_bucket(ratio)];
                format!("\x1b[48;5;{code}m\x1b[38;5;231m{token}\x1b[0m")
            } else {
                format!("{token}({w:.2})")
            }
        })
        .collect();
    Ok(rendered.join(" "))
}
