//! JSON and CSV rendering of check, search and simulation results.

use locreal::sim::StatReport;

use crate::runner::{CheckOutcome, RunError, SearchOutput, ValidationSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format `{other}` (expected json or csv)")),
        }
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn conditions_column(conditions: &[(String, bool)]) -> String {
    conditions
        .iter()
        .map(|(name, held)| format!("{name}={held}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn render_checks(outcomes: &[CheckOutcome], format: Format) -> Result<String, RunError> {
    match format {
        Format::Json => {
            serde_json::to_string_pretty(outcomes).map_err(|e| RunError::Internal(e.to_string()))
        }
        Format::Csv => {
            let mut lines = vec!["name,lhs,rhs,margin,satisfied,conditions".to_string()];
            for outcome in outcomes {
                match outcome {
                    CheckOutcome::Inequality { report } => lines.push(format!(
                        "{},{},{},{},{},{}",
                        csv_escape(&report.name),
                        report.lhs,
                        report.rhs,
                        report.margin,
                        report.satisfied,
                        csv_escape(&conditions_column(&report.conditions_checked)),
                    )),
                    CheckOutcome::Condition { name, held, value } => lines.push(format!(
                        "{},{},,,{},",
                        csv_escape(name),
                        value.map(|v| v.to_string()).unwrap_or_default(),
                        held,
                    )),
                    CheckOutcome::LocalRealism { report } => {
                        let offender = report
                            .offender
                            .as_ref()
                            .map(|o| {
                                format!(
                                    "side{}@{} between {} and {} (dev {:.3e})",
                                    o.side,
                                    o.own_setting,
                                    o.other_first,
                                    o.other_second,
                                    o.deviation
                                )
                            })
                            .unwrap_or_default();
                        lines.push(format!(
                            "local-realism,,,,{},{}",
                            report.holds,
                            csv_escape(&offender),
                        ));
                    }
                }
            }
            Ok(lines.join("\n") + "\n")
        }
    }
}

pub fn render_search(output: &SearchOutput, format: Format) -> Result<String, RunError> {
    match format {
        Format::Json => {
            serde_json::to_string_pretty(output).map_err(|e| RunError::Internal(e.to_string()))
        }
        Format::Csv => {
            let mut lines = vec!["name,value,method,witness_reevaluation".to_string()];
            lines.push(format!(
                "setting-search,{},{},{}",
                output.result.value,
                serde_json::to_string(&output.result.method)
                    .unwrap_or_default()
                    .trim_matches('"'),
                output.witness_reevaluation,
            ));
            Ok(lines.join("\n") + "\n")
        }
    }
}

pub fn render_simulation(reports: &[StatReport], format: Format) -> Result<String, RunError> {
    match format {
        Format::Json => {
            serde_json::to_string_pretty(reports).map_err(|e| RunError::Internal(e.to_string()))
        }
        Format::Csv => {
            let mut lines =
                vec!["name,lhs,rhs,margin,standard_error,z_violation,n_total".to_string()];
            for r in reports {
                lines.push(format!(
                    "{},{},{},{},{},{},{}",
                    csv_escape(&r.name),
                    r.lhs,
                    r.rhs,
                    r.margin,
                    r.standard_error,
                    r.z_violation.map(|z| z.to_string()).unwrap_or_default(),
                    r.n_total,
                ));
            }
            Ok(lines.join("\n") + "\n")
        }
    }
}

pub fn render_summary(summary: &ValidationSummary, format: Format) -> Result<String, RunError> {
    match format {
        Format::Json => {
            serde_json::to_string_pretty(summary).map_err(|e| RunError::Internal(e.to_string()))
        }
        Format::Csv => Ok(format!(
            "kind,states,observables,povs,joint_povs,decompositions,checks,valid\n{:?},{},{},{},{},{},{},{}\n",
            summary.kind,
            summary.states,
            summary.observables,
            summary.povs,
            summary.joint_povs,
            summary.decompositions,
            summary.checks,
            summary.valid,
        )),
    }
}
