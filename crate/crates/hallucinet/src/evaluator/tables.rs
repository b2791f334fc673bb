//! Text and JSON renderings of the comparative result tables.

use super::{EvalReport, FrameComparison};
use crate::profiler::CostAccuracyTable;
use crate::trainer::PretrainFinetuneReport;
use serde_json::json;

fn render_rows(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let line = |cells: &[String]| -> String {
        cells
            .iter()
            .enumerate()
            .map(|(i, c)| format!("{:<w$}", c, w = widths[i]))
            .collect::<Vec<_>>()
            .join("  ")
    };
    let mut out = line(header);
    out.push('\n');
    out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1)));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

/// Action-classification table: method rows with top-1 (%).
pub fn classification_table(rows: &[(String, EvalReport)]) -> (serde_json::Value, String) {
    let header = vec!["Method".to_string(), "Top-1 (%)".to_string(), "L_hallu (x1e-3)".to_string()];
    let mut text_rows = Vec::new();
    let mut json_rows = Vec::new();
    for (name, report) in rows {
        let top1 = report.metric("top1").unwrap_or(f64::NAN);
        let hallu = report.metric("hallucination_error");
        text_rows.push(vec![
            name.clone(),
            pct(top1),
            hallu.map(|e| format!("{:.3}", e * 1e3)).unwrap_or_else(|| "-".into()),
        ]);
        json_rows.push(json!({
            "method": name,
            "top1": top1,
            "hallucination_error": hallu,
        }));
    }
    (
        json!({"table": "classification", "rows": json_rows}),
        render_rows(&header, &text_rows),
    )
}

/// Cost-vs-accuracy table. The JSON here carries the deterministic columns
/// (accuracy, FLOPs, params); timing belongs to the timing sidecar.
pub fn cost_accuracy_tables(table: &CostAccuracyTable) -> (serde_json::Value, serde_json::Value, String) {
    let header = vec![
        "Model".to_string(),
        "Accuracy (%)".to_string(),
        "Time/Inf.".to_string(),
        "FLOPs".to_string(),
        "Params".to_string(),
    ];
    let mut text_rows = Vec::new();
    let mut static_rows = Vec::new();
    let mut timing_rows = Vec::new();
    for row in &table.rows {
        let acc = row
            .accuracy
            .iter()
            .map(|(s, v)| format!("{s}:{}", pct(*v)))
            .collect::<Vec<_>>()
            .join(" ");
        text_rows.push(vec![
            row.model.clone(),
            acc,
            format!("{:.3} ms", row.time_per_inference_secs * 1e3),
            row.flops.to_string(),
            row.params.to_string(),
        ]);
        static_rows.push(json!({
            "model": row.model,
            "accuracy": row.accuracy,
            "flops": row.flops,
            "params": row.params,
        }));
        timing_rows.push(json!({
            "model": row.model,
            "time_per_inference_secs": row.time_per_inference_secs,
        }));
    }
    let mut text = render_rows(&header, &text_rows);
    text.push_str(&format!(
        "\nstudent/teacher time ratio: {:.4} ({:.1}% of 3D cost)\nconvention: {}\nhardware: {}\n",
        table.student_over_teacher_time,
        table.student_over_teacher_time * 100.0,
        table.flop_convention,
        table.hardware,
    ));
    (
        json!({"table": "cost_accuracy", "rows": static_rows, "flop_convention": table.flop_convention}),
        json!({
            "table": "cost_accuracy_timing",
            "rows": timing_rows,
            "student_over_teacher_time": table.student_over_teacher_time,
            "hardware": table.hardware,
        }),
        text,
    )
}

/// Single-frame vs two-frame table with the percentage-reduction column.
pub fn two_frame_table(cmp: &FrameComparison) -> (serde_json::Value, String) {
    let e1 = cmp.single.metric("hallucination_error").unwrap_or(f64::NAN);
    let e2 = cmp.multi.metric("hallucination_error").unwrap_or(f64::NAN);
    let header = vec![
        "Method".to_string(),
        "L_hallu (x1e-3)".to_string(),
        "Accu (%)".to_string(),
        "Time/Inf.".to_string(),
    ];
    let rows = vec![
        vec![
            "HalluciNet(1f)".to_string(),
            format!("{:.3}", e1 * 1e3),
            pct(cmp.single.metric("top1").unwrap_or(f64::NAN)),
            format!("{:.3} ms", cmp.single_latency_secs * 1e3),
        ],
        vec![
            "HalluciNet(2f)".to_string(),
            format!(
                "{:.3} ({}{:.2}%)",
                e2 * 1e3,
                if cmp.hallucination_reduction_percent >= 0.0 { "↓" } else { "↑" },
                cmp.hallucination_reduction_percent.abs()
            ),
            pct(cmp.multi.metric("top1").unwrap_or(f64::NAN)),
            format!("{:.3} ms", cmp.multi_latency_secs * 1e3),
        ],
    ];
    (
        json!({
            "table": "two_frame",
            "single": {"hallucination_error": e1, "top1": cmp.single.metric("top1")},
            "multi": {"hallucination_error": e2, "top1": cmp.multi.metric("top1")},
            "reduction_percent": cmp.hallucination_reduction_percent,
        }),
        render_rows(&header, &rows),
    )
}

/// Per-attribute accuracy table.
pub fn attribute_table(rows: &[(String, EvalReport)]) -> (serde_json::Value, String) {
    let header = vec![
        "Method".to_string(),
        "P".to_string(),
        "AS".to_string(),
        "RT".to_string(),
        "SS".to_string(),
        "TW".to_string(),
    ];
    let mut text_rows = Vec::new();
    let mut json_rows = Vec::new();
    for (name, report) in rows {
        let accs: Vec<f64> = (0..5)
            .map(|k| report.metric(&format!("attr{k}")).unwrap_or(f64::NAN))
            .collect();
        let mut row = vec![name.clone()];
        row.extend(accs.iter().map(|a| pct(*a)));
        text_rows.push(row);
        json_rows.push(json!({"method": name, "attribute_accuracies": accs}));
    }
    (
        json!({"table": "attributes", "rows": json_rows}),
        render_rows(&header, &text_rows),
    )
}

/// Quality-assessment table (Spearman rank correlation, %).
pub fn aqa_table(rows: &[(String, EvalReport)]) -> (serde_json::Value, String) {
    let header = vec!["Method".to_string(), "Corr. (%)".to_string()];
    let mut text_rows = Vec::new();
    let mut json_rows = Vec::new();
    for (name, report) in rows {
        let rho = report.metric("spearman").unwrap_or(f64::NAN);
        text_rows.push(vec![name.clone(), pct(rho)]);
        json_rows.push(json!({"method": name, "spearman": rho}));
    }
    (
        json!({"table": "aqa", "rows": json_rows}),
        render_rows(&header, &text_rows),
    )
}

/// Pretraining 2x2 grid table.
pub fn pretraining_table(report: &PretrainFinetuneReport) -> (serde_json::Value, String) {
    let header = vec![
        "Model".to_string(),
        "Pretraining w/ hallucination".to_string(),
        "P".to_string(),
        "AS".to_string(),
        "RT".to_string(),
        "SS".to_string(),
        "TW".to_string(),
        "Mean".to_string(),
    ];
    let mut text_rows = Vec::new();
    for cell in &report.cells {
        let model = if cell.finetune_hallucination { "HalluciNet" } else { "2D-CNN" };
        let mut row = vec![
            model.to_string(),
            if cell.pretrain_hallucination { "Yes" } else { "No" }.to_string(),
        ];
        for k in 0..5 {
            row.push(
                cell.metrics
                    .get(&format!("val_attr{k}"))
                    .map(|v| pct(*v))
                    .unwrap_or_else(|| "-".into()),
            );
        }
        row.push(
            cell.metrics
                .get("val_attr_mean")
                .map(|v| pct(*v))
                .unwrap_or_else(|| "-".into()),
        );
        text_rows.push(row);
    }
    (
        json!({"table": "pretraining", "report": report}),
        render_rows(&header, &text_rows),
    )
}
