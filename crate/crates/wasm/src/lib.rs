use serde_json::json;
use wasm_bindgen::prelude::*;

use wfs::dsl::parse_scenario;
use wfs::hardy::schmidt_state;
use wfs::report::{render_text, HardyReport, RunReport};
use wfs::scenario::builtin;
use wfs::{hardy_search, CollapsePolicy};

const SOURCES: [(&str, &str); 4] = [
    ("fr", include_str!("../../core/scenarios/fr.wfs")),
    ("epr", include_str!("../../core/scenarios/epr.wfs")),
    (
        "epr-dressed",
        include_str!("../../core/scenarios/epr-dressed.wfs"),
    ),
    ("hardy", include_str!("../../core/scenarios/hardy.wfs")),
];

fn policy(name: &str) -> Result<CollapsePolicy, String> {
    match name {
        "H" | "h" => Ok(CollapsePolicy::PolicyH),
        "universal" => Ok(CollapsePolicy::UniversalCollapse),
        "none" => Ok(CollapsePolicy::NoCollapse),
        other => Err(format!("unknown policy `{other}`")),
    }
}

fn to_json(value: serde_json::Value) -> String {
    serde_json::to_string(&value).expect("json values serialize")
}

/// Best Hardy witness for `cos θ|uu> + sin θ|dd>`, as a JSON report.
#[wasm_bindgen]
pub fn hardy_at(theta_deg: f64, grid_deg: f64) -> Result<String, String> {
    let r = hardy_search(&schmidt_state(theta_deg.to_radians()), grid_deg)
        .map_err(|e| e.to_string())?;
    let report = HardyReport::new(&format!("theta={theta_deg}"), grid_deg, &r);
    Ok(to_json(
        serde_json::to_value(report).map_err(|e| e.to_string())?,
    ))
}

/// `[[theta, p], ...]` for theta in `[0, 90]`.
#[wasm_bindgen]
pub fn hardy_sweep(step_deg: f64, grid_deg: f64) -> Result<String, String> {
    if step_deg.is_nan() || step_deg <= 0.0 {
        return Err("step must be positive".into());
    }
    let n = (90.0 / step_deg).floor() as usize;
    let mut points = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let theta = i as f64 * step_deg;
        let r = hardy_search(&schmidt_state(theta.to_radians()), grid_deg)
            .map_err(|e| e.to_string())?;
        points.push(json!([theta, r.joint_probability]));
    }
    Ok(to_json(json!(points)))
}

#[wasm_bindgen]
pub fn builtin_source(name: &str) -> Option<String> {
    SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, s)| s.to_string())
}

/// Text report of a built-in scenario run.
#[wasm_bindgen]
pub fn run_builtin(name: &str, policy_name: &str) -> Result<String, String> {
    let scenario = builtin(name).ok_or_else(|| format!("unknown built-in `{name}`"))?;
    let report =
        RunReport::build(name, &scenario, &policy(policy_name)?).map_err(|e| e.to_string())?;
    Ok(render_text(&report))
}

/// Parses `.wfs` text and checks it. Always returns JSON: either
/// `{"ok": false, "diagnostic": {...}}` or `{"ok": true, "contradictions": n, "report": "..."}`.
#[wasm_bindgen]
pub fn check_source(text: &str, policy_name: &str) -> String {
    let scenario = match parse_scenario(text) {
        Ok(s) => s,
        Err(d) => {
            return to_json(json!({
                "ok": false,
                "diagnostic": {
                    "line": d.line,
                    "column": d.column,
                    "kind": d.kind.to_string(),
                    "message": d.message,
                    "text": d.to_string(),
                },
            }))
        }
    };
    let report = policy(policy_name)
        .and_then(|p| RunReport::build("source", &scenario, &p).map_err(|e| e.to_string()));
    match report {
        Ok(r) => to_json(json!({
            "ok": true,
            "contradictions": r.contradictions.len(),
            "report": render_text(&r),
        })),
        Err(e) => to_json(json!({ "ok": false, "error": e })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hardy_at_reports_a_witness() {
        let v: serde_json::Value = serde_json::from_str(&hardy_at(25.0, 1.0).unwrap()).unwrap();
        assert!((v["joint_probability"].as_f64().unwrap() - 0.0902).abs() < 1e-3);
        assert!(hardy_at(25.0, 0.0).is_err());
    }

    #[test]
    fn sweep_endpoints_are_zero() {
        let v: Vec<(f64, f64)> = serde_json::from_str(&hardy_sweep(45.0, 2.0).unwrap()).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0].1, 0.0);
        assert_eq!(v[1].1, 0.0);
        assert_eq!(v[2].1, 0.0);
    }

    #[test]
    fn builtin_run_and_check() {
        assert!(run_builtin("fr", "H").unwrap().contains("branch-violation"));
        assert!(run_builtin("fr", "sometimes").is_err());
        let v: serde_json::Value =
            serde_json::from_str(&check_source(&builtin_source("fr").unwrap(), "H")).unwrap();
        assert_eq!(v["ok"], true);
        assert_eq!(v["contradictions"], 7);
        let v: serde_json::Value =
            serde_json::from_str(&check_source("system s labels a b\ninit |c>\n", "H")).unwrap();
        assert_eq!(v["ok"], false);
        assert_eq!(v["diagnostic"]["line"], 2);
    }
}
