//! Markdown rendering of evaluation reports and epoch logs.

use std::fmt::Write;
use std::fs;
use std::path::Path;

use dtv_core::eval::EvalReport;
use dtv_core::train::EpochLog;

pub fn read_epoch_log(path: &Path) -> Result<Vec<EpochLog>, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        out.push(serde_json::from_str(line).map_err(|e| format!("{}:{}: {e}", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn render(evals: &[(String, EvalReport)], epochs: &[EpochLog]) -> String {
    let mut md = String::from("# Retrieval report\n\n");
    md.push_str("| run | queries | R@1 | R@5 | R@10 | MedR | MnR |\n|---|---:|---:|---:|---:|---:|---:|\n");
    for (name, r) in evals {
        let _ = writeln!(
            md,
            "| {name} | {} | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} |",
            r.num_queries,
            100.0 * r.r1,
            100.0 * r.r5,
            100.0 * r.r10,
            r.med_rank,
            r.mean_rank
        );
    }
    for (name, r) in evals {
        let Some(curve) = &r.rounds_curve else { continue };
        let _ = write!(md, "\n## Dialogue rounds: {name}\n\n| rounds | R@1 | R@5 | R@10 | MedR | MnR |\n|---:|---:|---:|---:|---:|---:|\n");
        for p in curve {
            let _ = writeln!(
                md,
                "| {} | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} |",
                p.rounds,
                100.0 * p.r1,
                100.0 * p.r5,
                100.0 * p.r10,
                p.med_rank,
                p.mean_rank
            );
        }
    }
    if !epochs.is_empty() {
        md.push_str("\n## Training\n\n| epoch | loss | val R@1 | val R@5 | val R@10 | val MedR | val MnR | grad norm |\n|---:|---:|---:|---:|---:|---:|---:|---:|\n");
        for e in epochs {
            let _ = writeln!(
                md,
                "| {} | {:.5} | {:.1} | {:.1} | {:.1} | {:.1} | {:.1} | {:.4} |",
                e.epoch,
                e.train_loss,
                100.0 * e.val_r1,
                100.0 * e.val_r5,
                100.0 * e.val_r10,
                e.val_med,
                e.val_mean,
                e.grad_norm_mean
            );
        }
    }
    md
}
