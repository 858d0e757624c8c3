//! Serializable run reports and their plain-text rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::agents::{enumerate_branches, CollapsePolicy};
use crate::error::Result;
use crate::hardy::{HardyResult, HardySettings};
use crate::hilbert::StateVector;
use crate::inference::{
    contradictions_in_run, derive_from_run, ContradictionKind, Derivation, Event, Evidence,
};
use crate::scenario::Scenario;

/// Largest denominator tried by [`nearest_rational`].
pub const MAX_DENOMINATOR: u64 = 144;

/// `p/q` with `q <= 144` within 1e-9 of `x`, smallest `q` first.
pub fn nearest_rational(x: f64) -> Option<(i64, u64)> {
    if !x.is_finite() {
        return None;
    }
    (1..=MAX_DENOMINATOR).find_map(|q| {
        let p = (x * q as f64).round();
        ((x - p / q as f64).abs() <= crate::EPS && p.abs() < 1e15).then_some((p as i64, q))
    })
}

pub fn rational_string(x: f64) -> Option<String> {
    nearest_rational(x).map(|(p, q)| {
        if q == 1 {
            p.to_string()
        } else {
            format!("{p}/{q}")
        }
    })
}

/// 12 significant digits; scientific notation below 1e-4.
pub fn format_decimal(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    if x.abs() < 1e-4 || x.abs() >= 1e12 {
        return format!("{x:.11e}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (11 - magnitude).clamp(0, 40) as usize;
    format!("{x:.decimals$}")
}

/// Decimal plus the small rational in parentheses when there is one.
pub fn format_probability(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    match rational_string(x) {
        Some(r) => format!("{} ({r})", format_decimal(x)),
        None => format_decimal(x),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub step: String,
    pub outcome: String,
}

impl From<&Event> for EventReport {
    fn from(e: &Event) -> Self {
        EventReport {
            step: e.step.clone(),
            outcome: e.outcome.clone(),
        }
    }
}

impl From<&(String, String)> for EventReport {
    fn from((step, outcome): &(String, String)) -> Self {
        EventReport {
            step: step.clone(),
            outcome: outcome.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeReport {
    /// One label per system, in registry order.
    pub labels: Vec<String>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewReport {
    pub agent: String,
    pub systems: Vec<String>,
    /// Nonzero amplitudes only.
    pub amplitudes: Vec<AmplitudeReport>,
    pub known: Vec<EventReport>,
    pub anomalies: Vec<EventReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub outcomes: Vec<EventReport>,
    pub mass: f64,
    pub mass_rational: Option<String>,
    pub views: Vec<ViewReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementReport {
    pub agent: String,
    pub condition: EventReport,
    pub target: EventReport,
    pub probability: f64,
    /// `direct`, or `chained` with the indices of the linked statements.
    pub derivation: String,
    pub links: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContradictionReport {
    /// `branch-violation` or `view-disagreement`.
    pub kind: String,
    pub statement: StatementReport,
    pub holders: Vec<String>,
    /// Branch violations: the witnessing outcomes and their mass.
    pub branch: Option<Vec<EventReport>>,
    pub mass: Option<f64>,
    pub mass_rational: Option<String>,
    /// View disagreements: whose view, and what it predicts.
    pub view_holder: Option<String>,
    pub view_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub policy: String,
    pub total_mass: f64,
    pub branches: Vec<BranchReport>,
    pub statements: Vec<StatementReport>,
    pub contradictions: Vec<ContradictionReport>,
}

fn amplitudes(state: &StateVector) -> Vec<AmplitudeReport> {
    state
        .terms()
        .into_iter()
        .filter(|(_, a)| a.norm() > 0.0)
        .map(|(labels, a)| AmplitudeReport {
            labels: labels.iter().map(|l| l.to_string()).collect(),
            re: a.re,
            im: a.im,
        })
        .collect()
}

fn statement_report(s: &crate::inference::CertaintyStatement) -> StatementReport {
    let (derivation, links) = match &s.derivation {
        Derivation::Direct => ("direct".to_string(), Vec::new()),
        Derivation::Chained(l) => ("chained".to_string(), l.clone()),
    };
    StatementReport {
        agent: s.agent.clone(),
        condition: (&s.condition).into(),
        target: (&s.target).into(),
        probability: s.probability,
        derivation,
        links,
    }
}

impl RunReport {
    pub fn build(name: &str, scenario: &Scenario, policy: &CollapsePolicy) -> Result<RunReport> {
        let run = enumerate_branches(scenario, policy)?;
        let statements = derive_from_run(scenario, &run)?;
        let contradictions = contradictions_in_run(scenario, &run, &statements)?;
        let systems: Vec<String> = scenario
            .registry
            .subsystems()
            .iter()
            .map(|s| s.name.clone())
            .collect();

        let branches = run
            .branches
            .iter()
            .map(|b| BranchReport {
                outcomes: b.outcomes.iter().map(Into::into).collect(),
                mass: b.bookkeeper_probability,
                mass_rational: rational_string(b.bookkeeper_probability),
                views: scenario
                    .agents
                    .iter()
                    .filter_map(|a| b.views.get(&a.name))
                    .map(|v| ViewReport {
                        agent: v.agent.clone(),
                        systems: systems.clone(),
                        amplitudes: amplitudes(&v.state),
                        known: v.known_events.iter().map(Into::into).collect(),
                        anomalies: v.anomalies.iter().map(Into::into).collect(),
                    })
                    .collect(),
            })
            .collect();

        let contradictions = contradictions
            .iter()
            .map(|c| {
                let mut r = ContradictionReport {
                    kind: match c.kind {
                        ContradictionKind::BranchViolation => "branch-violation",
                        ContradictionKind::ViewDisagreement => "view-disagreement",
                    }
                    .to_string(),
                    statement: statement_report(&c.statement),
                    holders: c.holders.clone(),
                    branch: None,
                    mass: None,
                    mass_rational: None,
                    view_holder: None,
                    view_probability: None,
                };
                match &c.evidence {
                    Evidence::Branch { outcomes, mass } => {
                        r.branch = Some(outcomes.iter().map(Into::into).collect());
                        r.mass = Some(*mass);
                        r.mass_rational = rational_string(*mass);
                    }
                    Evidence::Probabilities {
                        holder,
                        view_probability,
                        ..
                    } => {
                        r.view_holder = Some(holder.clone());
                        r.view_probability = Some(*view_probability);
                    }
                }
                r
            })
            .collect();

        Ok(RunReport {
            scenario: name.to_string(),
            policy: policy.name().to_string(),
            total_mass: run.total_probability(),
            branches,
            statements: statements.iter().map(statement_report).collect(),
            contradictions,
        })
    }

    pub fn has_contradictions(&self) -> bool {
        !self.contradictions.is_empty()
    }
}

fn event_list(events: &[EventReport]) -> String {
    events
        .iter()
        .map(|e| format!("{}={}", e.step, e.outcome))
        .collect::<Vec<_>>()
        .join(", ")
}

fn render_amplitude(a: &AmplitudeReport) -> String {
    let value = if a.im == 0.0 {
        format_decimal(a.re)
    } else {
        format!("({}{:+}i)", format_decimal(a.re), a.im)
    };
    format!("{value}|{}>", a.labels.join(","))
}

fn statement_line(i: usize, s: &StatementReport) -> String {
    let how = if s.derivation == "chained" {
        format!(
            "chained via {}",
            s.links
                .iter()
                .map(|l| format!("#{l}"))
                .collect::<Vec<_>>()
                .join(" + ")
        )
    } else {
        "direct".to_string()
    };
    format!(
        "  #{i} {}: {}={} => {}={}  p={}  [{how}]\n",
        s.agent,
        s.condition.step,
        s.condition.outcome,
        s.target.step,
        s.target.outcome,
        format_probability(s.probability)
    )
}

pub fn render_header(r: &RunReport) -> String {
    format!("scenario: {}\npolicy: {}\n", r.scenario, r.policy)
}

pub fn render_branches(r: &RunReport) -> String {
    let mut out = format!(
        "branches ({}, total mass {}):\n",
        r.branches.len(),
        format_probability(r.total_mass)
    );
    for b in &r.branches {
        let _ = writeln!(
            out,
            "  [{}]  mass {}",
            event_list(&b.outcomes),
            format_probability(b.mass)
        );
        for v in &b.views {
            let state = v
                .amplitudes
                .iter()
                .map(render_amplitude)
                .collect::<Vec<_>>()
                .join(" + ");
            let _ = write!(out, "    {}: {state}", v.agent);
            if !v.known.is_empty() {
                let _ = write!(out, "  knows {}", event_list(&v.known));
            }
            if !v.anomalies.is_empty() {
                let _ = write!(out, "  anomalies {}", event_list(&v.anomalies));
            }
            out.push('\n');
        }
    }
    out
}

pub fn render_statements(r: &RunReport) -> String {
    let mut out = format!("certainty statements ({}):\n", r.statements.len());
    for (i, s) in r.statements.iter().enumerate() {
        out.push_str(&statement_line(i, s));
    }
    out
}

pub fn render_contradictions(r: &RunReport) -> String {
    if r.contradictions.is_empty() {
        return "contradictions: none\n".to_string();
    }
    let mut out = format!("contradictions ({}):\n", r.contradictions.len());
    for c in &r.contradictions {
        let s = &c.statement;
        let _ = writeln!(
            out,
            "  {}: {}={} => {}={} held by {}",
            c.kind,
            s.condition.step,
            s.condition.outcome,
            s.target.step,
            s.target.outcome,
            c.holders.join(", ")
        );
        if let (Some(branch), Some(mass)) = (&c.branch, c.mass) {
            let _ = writeln!(
                out,
                "    branch [{}] has mass {}",
                event_list(branch),
                format_probability(mass)
            );
        }
        if let (Some(holder), Some(p)) = (&c.view_holder, c.view_probability) {
            let _ = writeln!(
                out,
                "    {holder}'s view gives {}={} probability {}",
                s.target.step,
                s.target.outcome,
                format_probability(p)
            );
        }
    }
    out
}

pub fn render_text(r: &RunReport) -> String {
    [
        render_header(r),
        render_branches(r),
        render_statements(r),
        render_contradictions(r),
    ]
    .join("")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardyReport {
    pub source: String,
    pub grid_deg: f64,
    /// Settings in degrees.
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub joint_probability: f64,
    pub constraint_residuals: [f64; 3],
    pub witness: bool,
}

impl HardyReport {
    pub fn new(source: &str, grid_deg: f64, r: &HardyResult) -> Self {
        let HardySettings { a1, a2, b1, b2 } = r.settings;
        HardyReport {
            source: source.to_string(),
            grid_deg,
            a1: a1.to_degrees(),
            a2: a2.to_degrees(),
            b1: b1.to_degrees(),
            b2: b2.to_degrees(),
            joint_probability: r.joint_probability,
            constraint_residuals: r.constraint_residuals,
            witness: r.is_witness(),
        }
    }

    pub fn render_text(&self) -> String {
        let mut out = format!("state: {}\ngrid: {} deg\n", self.source, self.grid_deg);
        let _ = writeln!(
            out,
            "settings (deg): A1={} A2={} B1={} B2={}",
            format_decimal(self.a1),
            format_decimal(self.a2),
            format_decimal(self.b1),
            format_decimal(self.b2)
        );
        let _ = writeln!(
            out,
            "P(A1=+,B1=+) = {}",
            format_probability(self.joint_probability)
        );
        let r = self.constraint_residuals;
        let _ = writeln!(
            out,
            "residuals: P(A1=+,B2=-)={} P(A2=-,B1=+)={} P(A2=+,B2=+)={}",
            format_decimal(r[0]),
            format_decimal(r[1]),
            format_decimal(r[2])
        );
        let _ = writeln!(out, "witness: {}", if self.witness { "yes" } else { "no" });
        out
    }
}
