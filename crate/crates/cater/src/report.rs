//! Plain-text tables for metric and diagnostic reports.

use std::fmt::Write;

use cater_core::eval::{DiagnosticReport, MetricsReport, RandomBaseline, Task};

fn task_name(task: Task) -> String {
    match task {
        Task::Atomic => "atomic (14-way)".into(),
        Task::Compositional => "compositional (301-way)".into(),
        Task::Localization { grid } => format!("localization ({grid}x{grid})"),
    }
}

fn opt(v: Option<f64>, digits: usize) -> String {
    v.map_or_else(|| "-".into(), |v| format!("{v:.digits$}"))
}

pub fn metrics_table(r: &MetricsReport) -> String {
    let mut s = String::new();
    writeln!(s, "task       {}", task_name(r.task)).unwrap();
    writeln!(s, "episodes   {}", r.n_episodes).unwrap();
    match r.task {
        Task::Localization { .. } => {
            writeln!(s, "top-1 %    {}", opt(r.top1, 2)).unwrap();
            writeln!(s, "top-5 %    {}", opt(r.top5, 2)).unwrap();
            writeln!(s, "mean L1    {}", opt(r.mean_l1, 3)).unwrap();
        }
        _ => {
            writeln!(s, "classes    {} with positives", r.classes_evaluated).unwrap();
            writeln!(s, "mAP %      {}", opt(r.map.map(|m| 100.0 * m), 2)).unwrap();
        }
    }
    s
}

pub fn baseline_table(b: &RandomBaseline) -> String {
    let mut s = metrics_table(&b.mean);
    writeln!(s, "trials     {}", b.trials).unwrap();
    if let Some(p) = b.mean_class_prevalence {
        writeln!(s, "mean class prevalence %  {:.2}", 100.0 * p).unwrap();
    }
    if let Some(cf) = &b.closed_form {
        writeln!(
            s,
            "closed form  top-1 {:.2}  top-5 {:.2}  L1 {:.3}",
            cf.top1, cf.top5, cf.mean_l1
        )
        .unwrap();
    }
    s
}

pub fn diagnostic_table(r: &DiagnosticReport) -> String {
    let mut s = String::new();
    writeln!(s, "{} by {} ({} episodes, overall {})", r.metric_name, r.attribute, r.n_episodes, opt(r.overall, 2)).unwrap();
    writeln!(s, "{:>12} {:>8} {:>8}", "bin", "count", r.metric_name).unwrap();
    for b in &r.bins {
        let metric = if b.empty { "empty".into() } else { opt(b.metric, 2) };
        writeln!(s, "{:>12} {:>8} {:>8}", b.label, b.count, metric).unwrap();
    }
    s
}
