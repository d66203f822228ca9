//! Markdown rendering of evaluation results: one table per metric family
//! with model rows and P/R/F1 columns, plus reproducibility and provenance
//! sections.

use std::collections::BTreeMap;

use crate::eval::{EvalError, EvalReport, Prf, ReproReport};

fn family_heading(metric: &str) -> String {
    match metric {
        "exact" => "Exact match".to_string(),
        "soft" => "Soft match".to_string(),
        other => other.to_string(),
    }
}

fn params_line(report: &EvalReport) -> String {
    report
        .params
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn prf_cells(p: &Prf) -> String {
    format!("{:.4} | {:.4} | {:.4}", p.precision, p.recall, p.f1)
}

/// Render labeled evaluation reports (and optional reproducibility
/// reports) to one markdown document. Reports sharing a metric family
/// land in the same table, one row per label; differing parameters within
/// a family are flagged in a note rather than merged.
pub fn render_markdown(
    eval: &[(String, EvalReport)],
    repro: &[(String, ReproReport)],
    provenance: &[(String, String)],
) -> Result<String, EvalError> {
    if eval.is_empty() && repro.is_empty() {
        return Err(EvalError::EmptyInput);
    }

    let mut by_family: BTreeMap<&str, Vec<&(String, EvalReport)>> = BTreeMap::new();
    for entry in eval {
        by_family.entry(entry.1.metric.as_str()).or_default().push(entry);
    }

    let mut out = String::from("# Evaluation report\n");
    for (metric, entries) in &by_family {
        out.push_str(&format!("\n## {}\n\n", family_heading(metric)));
        out.push_str(
            "| model | P (micro) | R (micro) | F1 (micro) | P (macro) | R (macro) | F1 (macro) |\n",
        );
        out.push_str("|---|---|---|---|---|---|---|\n");
        for (label, report) in entries {
            out.push_str(&format!(
                "| {label} | {} | {} |\n",
                prf_cells(&report.micro),
                prf_cells(&report.macro_),
            ));
        }
        let distinct_params: std::collections::BTreeSet<&BTreeMap<String, String>> =
            entries.iter().map(|(_, r)| &r.params).collect();
        if distinct_params.len() > 1 {
            out.push_str(
              "\nNote: rows in this table were produced with differing parameters and were not merged:\n",
            );
            for (label, report) in entries {
                out.push_str(&format!("- {label}: {}\n", params_line(report)));
            }
        }
    }

    if !repro.is_empty() {
        out.push_str("\n## Reproducibility\n\n");
        out.push_str("| model | runs | samples | score |\n|---|---|---|---|\n");
        for (label, report) in repro {
            out.push_str(&format!(
                "| {label} | {} | {} | {:.2}% |\n",
                report.n_runs,
                report.per_sample.len(),
                report.corpus_score * 100.0,
            ));
        }
    }

    out.push_str("\n## Provenance\n\n");
    for (key, value) in provenance {
        out.push_str(&format!("- {key}: {value}\n"));
    }
    for (label, report) in eval {
        out.push_str(&format!(
            "- {label} ({}): {}\n",
            report.metric,
            params_line(report)
        ));
    }
    Ok(out)
}
