//! Agent-relative state assignments evolved under a collapse policy.
//!
//! A run keeps two things apart. Each [`Branch`] is one single-outcome
//! history with a record-keeping probability that no policy can change, while
//! every agent carries its own [`AgentView`], updated only when the policy
//! says a step collapses that agent's state assignment.
//!
//! Branch masses combine two chains. Outcomes of open steps follow the
//! outside description, in which sealed measurements leave the joint state
//! untouched. Outcomes of sealed steps are distributed, given the open
//! outcomes, according to the sequential-projection chain in which every step
//! collapses. Without sealed steps the two chains coincide.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::StateVector;
use crate::measurement::{collapse, outcome_probabilities};
use crate::scenario::{apply_prepare, Agent, MeasurementStep, Scenario, Step, Visibility};
use crate::ZERO_TOL;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollapsePolicy {
    /// Sealed steps collapse only the views of agents inside that lab; open
    /// steps collapse everybody.
    PolicyH,
    UniversalCollapse,
    NoCollapse,
    /// Explicit `(step id, agent) -> collapse?` table.
    CustomTable(BTreeMap<(String, String), bool>),
}

impl CollapsePolicy {
    pub fn name(&self) -> &'static str {
        match self {
            CollapsePolicy::PolicyH => "H",
            CollapsePolicy::UniversalCollapse => "universal",
            CollapsePolicy::NoCollapse => "none",
            CollapsePolicy::CustomTable(_) => "table",
        }
    }

    /// Parses a collapse table: one `<step-id> <agent> collapse|keep` per line,
    /// `#` comments allowed.
    pub fn parse_table(text: &str) -> Result<CollapsePolicy> {
        let mut table = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            let value = match parts.as_slice() {
                [_, _, "collapse" | "yes" | "true"] => true,
                [_, _, "keep" | "no" | "false"] => false,
                _ => {
                    return Err(Error::Scenario(format!(
                        "collapse table line {}: expected `<step> <agent> collapse|keep`",
                        n + 1
                    )))
                }
            };
            table.insert((parts[0].to_string(), parts[1].to_string()), value);
        }
        Ok(CollapsePolicy::CustomTable(table))
    }
}

pub fn should_collapse(
    policy: &CollapsePolicy,
    step: &MeasurementStep,
    agent: &Agent,
) -> Result<bool> {
    Ok(match policy {
        CollapsePolicy::PolicyH => match &step.visibility {
            Visibility::Sealed { lab } => agent.lab() == Some(lab.as_str()),
            Visibility::Open => true,
        },
        CollapsePolicy::UniversalCollapse => true,
        CollapsePolicy::NoCollapse => false,
        CollapsePolicy::CustomTable(table) => *table
            .get(&(step.id.clone(), agent.name.clone()))
            .ok_or_else(|| Error::MissingPolicyEntry {
                step: step.id.clone(),
                agent: agent.name.clone(),
            })?,
    })
}

/// One agent's state assignment and what it has seen or been told.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentView {
    pub agent: String,
    pub state: StateVector,
    pub known_events: Vec<(String, String)>,
    /// Outcomes that occurred although this view gave them zero probability.
    /// The view is left as it was when that happens.
    pub anomalies: Vec<(String, String)>,
}

impl AgentView {
    pub fn knows(&self, step: &str) -> Option<&str> {
        self.known_events
            .iter()
            .find(|(s, _)| s == step)
            .map(|(_, o)| o.as_str())
    }

    fn learn(&mut self, step: &str, outcome: &str) {
        if self.knows(step).is_none() {
            self.known_events
                .push((step.to_string(), outcome.to_string()));
        }
    }

    fn condition_on(&mut self, step: &MeasurementStep, outcome: &str) -> Result<()> {
        match collapse(&self.state, &step.basis, outcome) {
            Ok(s) => self.state = s,
            Err(Error::ImpossibleOutcome(_)) => {
                self.anomalies.push((step.id.clone(), outcome.to_string()))
            }
            Err(e) => return Err(e),
        }
        Ok(())
    }
}

/// A single-outcome history, possibly partial while a run is being built.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    /// Outcomes in step order.
    pub outcomes: Vec<(String, String)>,
    /// Record-keeping probability; final once the run is enumerated.
    pub bookkeeper_probability: f64,
    /// Product of Born conditionals along the all-collapse chain.
    pub sequential_weight: f64,
    /// Product of Born conditionals of open steps in the outside description.
    pub open_weight: f64,
    pub sequential_state: StateVector,
    pub outside_state: StateVector,
    pub views: BTreeMap<String, AgentView>,
    /// `timeline[k]` holds the views right after step `k`.
    pub timeline: Vec<BTreeMap<String, AgentView>>,
}

impl Branch {
    pub fn start(scenario: &Scenario) -> Branch {
        let views = scenario
            .agents
            .iter()
            .map(|a| {
                let view = AgentView {
                    agent: a.name.clone(),
                    state: scenario.initial_state.clone(),
                    known_events: Vec::new(),
                    anomalies: Vec::new(),
                };
                (a.name.clone(), view)
            })
            .collect();
        Branch {
            outcomes: Vec::new(),
            bookkeeper_probability: 1.0,
            sequential_weight: 1.0,
            open_weight: 1.0,
            sequential_state: scenario.initial_state.clone(),
            outside_state: scenario.initial_state.clone(),
            views,
            timeline: Vec::new(),
        }
    }

    pub fn outcome(&self, step: &str) -> Option<&str> {
        self.outcomes
            .iter()
            .find(|(s, _)| s == step)
            .map(|(_, o)| o.as_str())
    }

    /// Views right after the step at `position`.
    pub fn views_after(&self, position: usize) -> &BTreeMap<String, AgentView> {
        &self.timeline[position]
    }

    pub fn open_outcomes<'a>(
        &'a self,
        scenario: &'a Scenario,
    ) -> impl Iterator<Item = &'a (String, String)> {
        self.outcomes.iter().filter(move |(s, _)| {
            scenario
                .measurement(s)
                .is_some_and(|m| m.visibility == Visibility::Open)
        })
    }
}

/// Branches of a full run under one policy.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Run {
    pub policy: CollapsePolicy,
    pub branches: Vec<Branch>,
}

impl Run {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.bookkeeper_probability).sum()
    }
}

/// Applies the step at `position` to a branch.
///
/// Measurement steps need an outcome that is possible in the all-collapse
/// chain; the returned branch carries the updated weights, states and views.
pub fn advance(
    scenario: &Scenario,
    branch: &Branch,
    position: usize,
    outcome: Option<&str>,
    policy: &CollapsePolicy,
) -> Result<Branch> {
    let step = scenario
        .steps
        .get(position)
        .ok_or_else(|| Error::Scenario(format!("no step at position {position}")))?;
    let mut next = branch.clone();
    match step {
        Step::Measure(m) => {
            let outcome = outcome
                .ok_or_else(|| Error::Scenario(format!("step `{}` needs an outcome", m.id)))?;
            let p = outcome_probabilities(&branch.sequential_state, &m.basis)?
                .get(outcome)
                .ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))?;
            if p < ZERO_TOL {
                return Err(Error::ImpossibleOutcome(outcome.to_string()));
            }
            next.sequential_state = collapse(&branch.sequential_state, &m.basis, outcome)?;
            next.sequential_weight *= p;
            if m.visibility == Visibility::Open {
                let q = outcome_probabilities(&branch.outside_state, &m.basis)?
                    .get(outcome)
                    .unwrap_or(0.0);
                if q < ZERO_TOL {
                    next.open_weight = 0.0;
                } else {
                    next.outside_state = collapse(&branch.outside_state, &m.basis, outcome)?;
                    next.open_weight *= q;
                }
            }
            for agent in &scenario.agents {
                let view = next
                    .views
                    .get_mut(&agent.name)
                    .expect("every agent has a view");
                let collapses = should_collapse(policy, m, agent)?;
                if collapses {
                    view.condition_on(m, outcome)?;
                }
                if collapses || agent.name == m.measurer {
                    view.learn(&m.id, outcome);
                }
            }
            next.outcomes.push((m.id.clone(), outcome.to_string()));
        }
        Step::Prepare(p) => {
            next.sequential_state = apply_prepare(&branch.sequential_state, p)?;
            next.outside_state = apply_prepare(&branch.outside_state, p)?;
            for view in next.views.values_mut() {
                view.state = apply_prepare(&view.state, p)?;
            }
        }
        Step::Announce(a) => {
            let announced = branch.outcome(&a.source).ok_or_else(|| {
                Error::Scenario(format!(
                    "`{}` announces an outcome `{}` never obtained",
                    a.announcer, a.source
                ))
            })?;
            let source = scenario
                .measurement(&a.source)
                .ok_or_else(|| Error::Scenario(format!("unknown source step `{}`", a.source)))?;
            for agent in &scenario.agents {
                if !a.receivers.includes(&agent.name) {
                    continue;
                }
                let view = next
                    .views
                    .get_mut(&agent.name)
                    .expect("every agent has a view");
                if view.knows(&a.source).is_none() {
                    view.condition_on(source, announced)?;
                    view.learn(&a.source, announced);
                }
            }
        }
    }
    next.timeline.push(next.views.clone());
    Ok(next)
}

/// Every single-outcome history with nonzero record-keeping probability.
pub fn enumerate_branches(scenario: &Scenario, policy: &CollapsePolicy) -> Result<Run> {
    scenario.validate()?;
    let mut finished = Vec::new();
    let mut stack = vec![Branch::start(scenario)];
    while let Some(branch) = stack.pop() {
        let position = branch.timeline.len();
        let Some(step) = scenario.steps.get(position) else {
            finished.push(branch);
            continue;
        };
        match step {
            Step::Measure(m) => {
                let dist = outcome_probabilities(&branch.sequential_state, &m.basis)?;
                // reversed so that popping yields basis order
                let children = dist
                    .possible()
                    .map(|(label, _)| advance(scenario, &branch, position, Some(label), policy))
                    .collect::<Result<Vec<_>>>()?;
                stack.extend(children.into_iter().rev());
            }
            _ => stack.push(advance(scenario, &branch, position, None, policy)?),
        }
    }

    // sequential weight of each open-outcome history, summed over sealed outcomes
    let mut open_totals: BTreeMap<Vec<(String, String)>, f64> = BTreeMap::new();
    for b in &finished {
        *open_totals
            .entry(b.open_outcomes(scenario).cloned().collect())
            .or_default() += b.sequential_weight;
    }
    for b in &mut finished {
        let key: Vec<(String, String)> = b.open_outcomes(scenario).cloned().collect();
        b.bookkeeper_probability = b.open_weight * b.sequential_weight / open_totals[&key];
    }
    finished.retain(|b| b.bookkeeper_probability >= ZERO_TOL);
    let total: f64 = finished.iter().map(|b| b.bookkeeper_probability).sum();
    for b in &mut finished {
        b.bookkeeper_probability /= total;
    }
    Ok(Run {
        policy: policy.clone(),
        branches: finished,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_state, SpaceRegistry, Subsystem};
    use crate::measurement::MeasurementBasis;
    use crate::scenario::{
        dressed_epr_scenario, epr_wigner_scenario, fr_scenario, ScenarioBuilder,
    };
    use std::sync::Arc;

    fn step<'a>(sc: &'a Scenario, id: &str) -> &'a MeasurementStep {
        sc.measurement(id).unwrap()
    }

    #[test]
    fn policy_h_semantics() {
        let sc = fr_scenario();
        let fbar = sc.agent("Fbar").unwrap();
        let wbar = sc.agent("Wbar").unwrap();
        assert!(should_collapse(&CollapsePolicy::PolicyH, step(&sc, "Fbar"), fbar).unwrap());
        assert!(!should_collapse(&CollapsePolicy::PolicyH, step(&sc, "Fbar"), wbar).unwrap());
        assert!(should_collapse(&CollapsePolicy::PolicyH, step(&sc, "Wbar"), fbar).unwrap());
        for a in &sc.agents {
            for m in sc.measurements() {
                assert!(should_collapse(&CollapsePolicy::UniversalCollapse, m, a).unwrap());
                assert!(!should_collapse(&CollapsePolicy::NoCollapse, m, a).unwrap());
            }
        }
    }

    #[test]
    fn custom_table_missing_entry() {
        let sc = fr_scenario();
        let table = CollapsePolicy::parse_table("Fbar Fbar collapse\n").unwrap();
        assert!(should_collapse(&table, step(&sc, "Fbar"), sc.agent("Fbar").unwrap()).unwrap());
        let err = should_collapse(&table, step(&sc, "F"), sc.agent("W").unwrap()).unwrap_err();
        assert!(matches!(err, Error::MissingPolicyEntry { .. }));
        assert!(CollapsePolicy::parse_table("Fbar Fbar maybe").is_err());
    }

    #[test]
    fn fr_first_step_outcome_t_under_h() {
        let sc = fr_scenario();
        let b = advance(
            &sc,
            &Branch::start(&sc),
            0,
            Some("t"),
            &CollapsePolicy::PolicyH,
        )
        .unwrap();
        let coin = MeasurementBasis::computational(&sc.registry, &["coin".into()]).unwrap();
        let fbar = outcome_probabilities(&b.views["Fbar"].state, &coin).unwrap();
        assert!((fbar.get("t").unwrap() - 1.0).abs() < 1e-12);
        let wbar = &b.views["Wbar"].state;
        assert!(wbar.approx_eq(&sc.initial_state, 1e-12));
        assert_eq!(b.views["Fbar"].knows("Fbar"), Some("t"));
        assert_eq!(b.views["Wbar"].knows("Fbar"), None);
    }

    #[test]
    fn fr_open_step_collapses_every_view() {
        let sc = fr_scenario();
        let policy = CollapsePolicy::PolicyH;
        let mut b = Branch::start(&sc);
        for (pos, o) in [(0, Some("t")), (1, None), (2, Some("u")), (3, Some("o"))] {
            b = advance(&sc, &b, pos, o, &policy).unwrap();
        }
        let wbar = step(&sc, "Wbar");
        for view in b.views.values() {
            let d = outcome_probabilities(&view.state, &wbar.basis).unwrap();
            assert!((d.get("o").unwrap() - 1.0).abs() < 1e-12, "{}", view.agent);
        }
        // the outside agents' view equals the hand projection of the joint
        // state onto |o>: (1/(2 sqrt3)) |o>(|o> - |f>) = -(1/sqrt6)|o>|u>
        let r = 1.0 / 2f64.sqrt();
        let expect = StateVector::from_amplitudes(
            sc.registry.clone(),
            [-r, 0.0, r, 0.0]
                .iter()
                .map(|&x| crate::Amplitude::new(x, 0.0))
                .collect(),
        )
        .unwrap();
        assert!(
            b.views["W"].state.approx_eq(&expect, 1e-12),
            "{}",
            b.views["W"].state
        );
    }

    #[test]
    fn epr_view_of_outside_agent_stays_singlet() {
        let sc = epr_wigner_scenario();
        let b = advance(
            &sc,
            &Branch::start(&sc),
            0,
            Some("u"),
            &CollapsePolicy::PolicyH,
        )
        .unwrap();
        let ud = basis_state(&sc.registry, &["u", "d"]).unwrap();
        assert!(
            b.views["F"].state.approx_eq(&ud, 1e-12)
                || b.views["F"]
                    .state
                    .approx_eq(&ud.scale(crate::Amplitude::new(-1.0, 0.0)), 1e-12)
        );
        assert!(b.views["W"].state.approx_eq(&sc.initial_state, 1e-12));
    }

    #[test]
    fn impossible_outcome_rejected() {
        let sc = dressed_epr_scenario();
        let policy = CollapsePolicy::PolicyH;
        let mut b = advance(&sc, &Branch::start(&sc), 0, Some("h"), &policy).unwrap();
        b = advance(&sc, &b, 1, None, &policy).unwrap();
        assert!(matches!(
            advance(&sc, &b, 2, Some("u"), &policy),
            Err(Error::ImpossibleOutcome(_))
        ));
    }

    #[test]
    fn single_measurement_on_eigenstate() {
        let reg = Arc::new(SpaceRegistry::new(vec![Subsystem::new("coin", ["h", "t"])]).unwrap());
        let mut b = ScenarioBuilder::new(reg.clone());
        b.agent(Agent::outside("A"))
            .init(basis_state(&reg, &["h"]).unwrap());
        b.measure(
            "A",
            MeasurementBasis::computational(&reg, &["coin".into()]).unwrap(),
            None,
        )
        .unwrap();
        let run =
            enumerate_branches(&b.build().unwrap(), &CollapsePolicy::UniversalCollapse).unwrap();
        assert_eq!(run.branches.len(), 1);
        assert!((run.branches[0].bookkeeper_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epr_two_branches() {
        let run = enumerate_branches(&epr_wigner_scenario(), &CollapsePolicy::PolicyH).unwrap();
        let got: Vec<(Vec<&str>, f64)> = run
            .branches
            .iter()
            .map(|b| {
                (
                    b.outcomes.iter().map(|(_, o)| o.as_str()).collect(),
                    b.bookkeeper_probability,
                )
            })
            .collect();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, ["u", "d"]);
        assert_eq!(got[1].0, ["d", "u"]);
        for (_, p) in got {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }
}
