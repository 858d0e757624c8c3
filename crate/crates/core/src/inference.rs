//! Certainty statements, their chaining across agents, and contradiction
//! detection against the branch records.
//!
//! An agent's probability for a target event given a condition is evaluated
//! right after the condition's step, in every branch where the condition
//! occurred. The agent's view is projected onto the condition (a no-op when
//! the view already collapsed on it) and then:
//!
//! * for a target at or before that point, the agent uses her record if she
//!   has one, otherwise the Born rule on her view;
//! * for a later target, her view is carried forward through the intermediate
//!   steps, branching only on the steps that collapse her view under the
//!   policy, and the Born rule is applied at the target step.
//!
//! An agent is certain when the smallest of these per-branch values is at
//! least `1 - EPS`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::agents::{enumerate_branches, should_collapse, AgentView, Branch, CollapsePolicy, Run};
use crate::error::{Error, Result};
use crate::hilbert::{normalize, StateVector};
use crate::measurement::{collapse, outcome_probabilities, project_outcome};
use crate::scenario::{apply_prepare, MeasurementStep, Scenario, Step};
use crate::{EPS, ZERO_TOL};

/// "Measurement `step` yields `outcome`."
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Event {
    pub step: String,
    pub outcome: String,
}

impl Event {
    pub fn new(step: &str, outcome: &str) -> Self {
        Event {
            step: step.into(),
            outcome: outcome.into(),
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.step, self.outcome)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Derivation {
    Direct,
    /// Indices of the linked statements in the derived list.
    Chained(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertaintyStatement {
    pub agent: String,
    pub condition: Event,
    pub target: Event,
    pub probability: f64,
    pub derivation: Derivation,
}

impl CertaintyStatement {
    pub fn is_chained(&self) -> bool {
        matches!(self.derivation, Derivation::Chained(_))
    }
}

impl fmt::Display for CertaintyStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} => {} ({}, p={:.12})",
            self.agent,
            self.condition,
            self.target,
            if self.is_chained() {
                "chained"
            } else {
                "direct"
            },
            self.probability
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContradictionKind {
    BranchViolation,
    ViewDisagreement,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Evidence {
    /// Outcomes of the condition and target steps, in step order, and their
    /// total record-keeping mass.
    Branch { outcomes: Vec<Event>, mass: f64 },
    /// `holder`'s own view assigns `view_probability` to the target.
    Probabilities {
        holder: String,
        certainty: f64,
        view_probability: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contradiction {
    pub kind: ContradictionKind,
    pub statement: CertaintyStatement,
    /// Every agent holding the same claim.
    pub holders: Vec<String>,
    pub evidence: Evidence,
}

fn measurement<'a>(scenario: &'a Scenario, event: &Event) -> Result<(usize, &'a MeasurementStep)> {
    let pos = scenario
        .step_position(&event.step)
        .ok_or_else(|| Error::Scenario(format!("unknown step `{}`", event.step)))?;
    let m = scenario.steps[pos]
        .as_measure()
        .ok_or_else(|| Error::Scenario(format!("`{}` is not a measurement", event.step)))?;
    if m.basis.index_of(&event.outcome).is_none() {
        return Err(Error::UnknownOutcome(format!(
            "{}={}",
            event.step, event.outcome
        )));
    }
    Ok((pos, m))
}

/// Born probability of `outcome` at step `target` after carrying `state`
/// forward from position `from`, branching where the policy collapses
/// `agent`'s view.
#[allow(clippy::too_many_arguments)]
fn forward(
    scenario: &Scenario,
    policy: &CollapsePolicy,
    agent: &str,
    state: StateVector,
    known: &mut Vec<String>,
    from: usize,
    target_pos: usize,
    target: &Event,
) -> Result<f64> {
    if from == target_pos {
        let m = scenario.steps[target_pos]
            .as_measure()
            .expect("target is a measurement");
        return Ok(outcome_probabilities(&state, &m.basis)?
            .get(&target.outcome)
            .unwrap_or(0.0));
    }
    let who = scenario
        .agent(agent)
        .ok_or_else(|| Error::Scenario(format!("unknown agent `{agent}`")))?;
    let branch_on =
        |m: &MeasurementStep, state: &StateVector, known: &mut Vec<String>| -> Result<f64> {
            let dist = outcome_probabilities(state, &m.basis)?;
            let mut total = 0.0;
            for (label, p) in dist.possible() {
                known.push(m.id.clone());
                let next = collapse(state, &m.basis, label)?;
                total += p * forward(
                    scenario,
                    policy,
                    agent,
                    next,
                    known,
                    from + 1,
                    target_pos,
                    target,
                )?;
                known.pop();
            }
            Ok(total)
        };
    match &scenario.steps[from] {
        Step::Measure(m) if should_collapse(policy, m, who)? => branch_on(m, &state, known),
        Step::Measure(_) => forward(
            scenario,
            policy,
            agent,
            state,
            known,
            from + 1,
            target_pos,
            target,
        ),
        Step::Prepare(p) => {
            let next = apply_prepare(&state, p)?;
            forward(
                scenario,
                policy,
                agent,
                next,
                known,
                from + 1,
                target_pos,
                target,
            )
        }
        Step::Announce(a) if a.receivers.includes(agent) && !known.contains(&a.source) => {
            let source = scenario.measurement(&a.source).expect("validated");
            branch_on(source, &state, known)
        }
        Step::Announce(_) => forward(
            scenario,
            policy,
            agent,
            state,
            known,
            from + 1,
            target_pos,
            target,
        ),
    }
}

/// Probability `agent` assigns to `target` in one branch, evaluated right
/// after the last condition step. With `assume` the view is first projected
/// onto the conditions; `None` marks a condition the view rules out.
fn probability_in_branch(
    scenario: &Scenario,
    policy: &CollapsePolicy,
    branch: &Branch,
    agent: &str,
    conditions: &[(usize, &MeasurementStep, &Event)],
    target: (usize, &Event),
    assume: bool,
) -> Result<Option<f64>> {
    let at = conditions
        .iter()
        .map(|(p, _, _)| *p)
        .max()
        .expect("at least one condition");
    let view: &AgentView = branch
        .views_after(at)
        .get(agent)
        .ok_or_else(|| Error::Scenario(format!("unknown agent `{agent}`")))?;
    let mut state = view.state.clone();
    if assume {
        for (_, m, e) in conditions {
            let (projected, weight) = project_outcome(&state, &m.basis, &e.outcome)?;
            if weight / state.norm_sqr() < ZERO_TOL {
                return Ok(None);
            }
            state = normalize(&projected)?;
        }
    }
    let (target_pos, target) = target;
    if target_pos <= at {
        if let Some(c) = conditions.iter().find(|(_, _, e)| e.step == target.step) {
            return Ok(Some(if c.2.outcome == target.outcome {
                1.0
            } else {
                0.0
            }));
        }
        if let Some(known) = view.knows(&target.step) {
            return Ok(Some(if known == target.outcome { 1.0 } else { 0.0 }));
        }
        let m = scenario.steps[target_pos]
            .as_measure()
            .expect("target is a measurement");
        return Ok(Some(
            outcome_probabilities(&state, &m.basis)?
                .get(&target.outcome)
                .unwrap_or(0.0),
        ));
    }
    let mut known: Vec<String> = view.known_events.iter().map(|(s, _)| s.clone()).collect();
    if assume {
        known.extend(conditions.iter().map(|(_, _, e)| e.step.clone()));
    }
    forward(
        scenario,
        policy,
        agent,
        state,
        &mut known,
        at + 1,
        target_pos,
        target,
    )
    .map(Some)
}

struct Query<'a> {
    conditions: Vec<(usize, &'a MeasurementStep, &'a Event)>,
    target: (usize, &'a Event),
}

fn query<'a>(
    scenario: &'a Scenario,
    condition: &'a [Event],
    target: &'a Event,
) -> Result<Query<'a>> {
    if condition.is_empty() {
        return Err(Error::Scenario(
            "a certainty query needs at least one condition".into(),
        ));
    }
    let mut conditions = condition
        .iter()
        .map(|e| measurement(scenario, e).map(|(p, m)| (p, m, e)))
        .collect::<Result<Vec<_>>>()?;
    conditions.sort_by_key(|(p, _, _)| *p);
    let (tpos, _) = measurement(scenario, target)?;
    Ok(Query {
        conditions,
        target: (tpos, target),
    })
}

fn matching<'r>(run: &'r Run, condition: &'r [Event]) -> impl Iterator<Item = &'r Branch> + 'r {
    run.branches.iter().filter(move |b| {
        b.bookkeeper_probability >= ZERO_TOL
            && condition
                .iter()
                .all(|e| b.outcome(&e.step) == Some(&e.outcome))
    })
}

/// Matching branches grouped by their outcomes up to the last condition
/// step, one representative per group with the group's total mass. Views at
/// that point only depend on the shared prefix.
fn by_prefix<'r>(
    scenario: &Scenario,
    run: &'r Run,
    condition: &'r [Event],
    q: &Query,
) -> Vec<(&'r Branch, f64)> {
    let at = q
        .conditions
        .iter()
        .map(|(p, _, _)| *p)
        .max()
        .expect("at least one condition");
    let mut groups: Vec<(&Branch, f64)> = Vec::new();
    let mut index: HashMap<&[(String, String)], usize> = HashMap::new();
    for b in matching(run, condition) {
        let k = b
            .outcomes
            .iter()
            .take_while(|(s, _)| scenario.step_position(s).is_some_and(|p| p <= at))
            .count();
        match index.get(&b.outcomes[..k]) {
            Some(&i) => groups[i].1 += b.bookkeeper_probability,
            None => {
                index.insert(&b.outcomes[..k], groups.len());
                groups.push((b, b.bookkeeper_probability));
            }
        }
    }
    groups
}

/// Probability `agent` assigns to `target` when she assumes `condition`.
///
/// Returns the smallest value across the branches in which the condition
/// occurred, so a result of 1 means the agent is certain in every situation
/// compatible with the condition.
pub fn certainty(
    scenario: &Scenario,
    run: &Run,
    agent: &str,
    condition: &[Event],
    target: &Event,
) -> Result<f64> {
    let q = query(scenario, condition, target)?;
    let mut lowest: Option<f64> = None;
    for (b, _) in by_prefix(scenario, run, condition, &q) {
        if let Some(p) = probability_in_branch(
            scenario,
            &run.policy,
            b,
            agent,
            &q.conditions,
            q.target,
            true,
        )? {
            lowest = Some(lowest.map_or(p, |l: f64| l.min(p)));
        }
    }
    lowest.ok_or_else(|| Error::VacuousCondition(agent.to_string()))
}

/// Probability `holder`'s own view assigns to `target` in the branches where
/// `condition` occurred, weighted by branch mass. The view is not conditioned
/// on anything the holder has not actually seen or been told.
pub fn view_probability(
    scenario: &Scenario,
    run: &Run,
    holder: &str,
    condition: &[Event],
    target: &Event,
) -> Result<f64> {
    let q = query(scenario, condition, target)?;
    let (mut mass, mut acc) = (0.0, 0.0);
    for (b, weight) in by_prefix(scenario, run, condition, &q) {
        if let Some(p) = probability_in_branch(
            scenario,
            &run.policy,
            b,
            holder,
            &q.conditions,
            q.target,
            false,
        )? {
            mass += weight;
            acc += weight * p;
        }
    }
    if mass < ZERO_TOL {
        return Err(Error::VacuousCondition(holder.to_string()));
    }
    Ok(acc / mass)
}

fn all_events(scenario: &Scenario) -> Vec<(usize, Event)> {
    scenario
        .steps
        .iter()
        .enumerate()
        .filter_map(|(p, s)| s.as_measure().map(|m| (p, m)))
        .flat_map(|(p, m)| {
            m.basis
                .labels()
                .map(move |l| (p, Event::new(&m.id, l)))
                .collect::<Vec<_>>()
        })
        .collect()
}

/// Direct statements and their closure under certainty transfer: if `A` is
/// certain of `X => Y` and the agent who observes `Y` is certain of
/// `Y => Z`, then `A` is certain of `X => Z`.
pub fn derive_from_run(scenario: &Scenario, run: &Run) -> Result<Vec<CertaintyStatement>> {
    let events = all_events(scenario);
    let mut out = Vec::new();
    for agent in &scenario.agents {
        for (cpos, cond) in &events {
            let condition = std::slice::from_ref(cond);
            if matching(run, condition).next().is_none() {
                continue;
            }
            for (tpos, target) in &events {
                if tpos == cpos {
                    continue;
                }
                match certainty(scenario, run, &agent.name, condition, target) {
                    Ok(p) if p >= 1.0 - EPS => out.push(CertaintyStatement {
                        agent: agent.name.clone(),
                        condition: cond.clone(),
                        target: target.clone(),
                        probability: p,
                        derivation: Derivation::Direct,
                    }),
                    Ok(_) | Err(Error::VacuousCondition(_)) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }

    let observer = |e: &Event| scenario.measurement(&e.step).map(|m| m.measurer.clone());
    // (agent, condition) -> statements, and (observer of target, target) -> statements
    let mut by_condition = HashMap::new();
    let mut by_target = HashMap::new();
    type Index = HashMap<(String, Event), Vec<usize>>;
    let index = |by_condition: &mut Index,
                 by_target: &mut Index,
                 out: &[CertaintyStatement],
                 range: std::ops::Range<usize>| {
        for i in range {
            let st = &out[i];
            by_condition
                .entry((st.agent.clone(), st.condition.clone()))
                .or_default()
                .push(i);
            if let Some(h) = observer(&st.target) {
                by_target.entry((h, st.target.clone())).or_default().push(i);
            }
        }
    };
    index(&mut by_condition, &mut by_target, &out, 0..out.len());
    let mut chained: BTreeSet<(String, Event, Event)> = BTreeSet::new();
    let mut fresh = 0..out.len();
    loop {
        let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
        for d in fresh.clone() {
            let st = &out[d];
            if let Some(h) = observer(&st.target) {
                for &j in by_condition
                    .get(&(h, st.target.clone()))
                    .into_iter()
                    .flatten()
                {
                    pairs.insert((d, j));
                }
            }
            for &i in by_target
                .get(&(st.agent.clone(), st.condition.clone()))
                .into_iter()
                .flatten()
            {
                pairs.insert((i, d));
            }
        }
        let mut added = Vec::new();
        for (i, j) in pairs {
            let (first, second) = (&out[i], &out[j]);
            if second.target.step == first.condition.step {
                continue;
            }
            let key = (
                first.agent.clone(),
                first.condition.clone(),
                second.target.clone(),
            );
            if chained.contains(&key) {
                continue;
            }
            chained.insert(key);
            added.push(CertaintyStatement {
                agent: first.agent.clone(),
                condition: first.condition.clone(),
                target: second.target.clone(),
                probability: first.probability * second.probability,
                derivation: Derivation::Chained(vec![i, j]),
            });
        }
        if added.is_empty() {
            break;
        }
        let start = out.len();
        out.extend(added);
        fresh = start..out.len();
        index(&mut by_condition, &mut by_target, &out, fresh.clone());
    }
    Ok(out)
}

pub fn derive_certainty_chain(
    scenario: &Scenario,
    policy: &CollapsePolicy,
) -> Result<Vec<CertaintyStatement>> {
    let run = enumerate_branches(scenario, policy)?;
    derive_from_run(scenario, &run)
}

/// Checks the derived statements against the branch records and against
/// the prediction of the agent who performs the target measurement.
///
/// Branch violations are looked for on chained claims whose condition and
/// target are both open steps, so both outcomes are on the public record.
/// A claim and its contrapositive forbid the same pair of outcomes; they are
/// reported once, with the holders of both. View disagreements are looked for
/// on every claim that predicts a later step.
pub fn contradictions_in_run(
    scenario: &Scenario,
    run: &Run,
    statements: &[CertaintyStatement],
) -> Result<Vec<Contradiction>> {
    let order = |e: &Event| -> (usize, usize) {
        let (pos, m) = measurement(scenario, e).expect("derived events are valid");
        (pos, m.basis.index_of(&e.outcome).unwrap())
    };
    let open = |e: &Event| {
        scenario
            .measurement(&e.step)
            .is_some_and(|m| matches!(m.visibility, crate::scenario::Visibility::Open))
    };

    let mut claims: Vec<(&CertaintyStatement, Vec<String>, bool)> = Vec::new();
    for s in statements {
        match claims
            .iter_mut()
            .find(|(c, _, _)| c.condition == s.condition && c.target == s.target)
        {
            Some((_, holders, chained)) => {
                if !holders.contains(&s.agent) {
                    holders.push(s.agent.clone());
                }
                *chained |= s.is_chained();
            }
            None => claims.push((s, vec![s.agent.clone()], s.is_chained())),
        }
    }
    claims.sort_by_key(|(s, _, _)| (order(&s.condition), order(&s.target)));

    let mut found: Vec<Contradiction> = Vec::new();
    for (s, holders, chained) in &claims {
        let (tpos, tm) = measurement(scenario, &s.target)?;
        let (cpos, _) = measurement(scenario, &s.condition)?;
        let condition = std::slice::from_ref(&s.condition);

        if *chained && open(&s.condition) && open(&s.target) {
            for other in tm.basis.labels().filter(|l| *l != s.target.outcome) {
                let mass: f64 = matching(run, condition)
                    .filter(|b| b.outcome(&s.target.step) == Some(other))
                    .map(|b| b.bookkeeper_probability)
                    .sum();
                if mass < ZERO_TOL {
                    continue;
                }
                let alt = Event::new(&s.target.step, other);
                let outcomes = if cpos < tpos {
                    vec![s.condition.clone(), alt]
                } else {
                    vec![alt, s.condition.clone()]
                };
                let seen = found.iter_mut().find(|c| {
                    c.kind == ContradictionKind::BranchViolation
                        && matches!(&c.evidence, Evidence::Branch { outcomes: o, .. } if *o == outcomes)
                });
                match seen {
                    Some(c) => {
                        for h in holders {
                            if !c.holders.contains(h) {
                                c.holders.push(h.clone());
                            }
                        }
                    }
                    None => found.push(Contradiction {
                        kind: ContradictionKind::BranchViolation,
                        statement: (*s).clone(),
                        holders: holders.clone(),
                        evidence: Evidence::Branch { outcomes, mass },
                    }),
                }
            }
        }

        if tpos > cpos {
            let measurer = &tm.measurer;
            let q = match view_probability(scenario, run, measurer, condition, &s.target) {
                Ok(q) => q,
                Err(Error::VacuousCondition(_)) => continue,
                Err(e) => return Err(e),
            };
            if (s.probability - q).abs() > EPS {
                found.push(Contradiction {
                    kind: ContradictionKind::ViewDisagreement,
                    statement: (*s).clone(),
                    holders: holders.clone(),
                    evidence: Evidence::Probabilities {
                        holder: measurer.clone(),
                        certainty: s.probability,
                        view_probability: q,
                    },
                });
            }
        }
    }
    Ok(found)
}

pub fn detect_contradictions(
    scenario: &Scenario,
    policy: &CollapsePolicy,
) -> Result<Vec<Contradiction>> {
    let run = enumerate_branches(scenario, policy)?;
    let statements = derive_from_run(scenario, &run)?;
    contradictions_in_run(scenario, &run, &statements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{epr_wigner_scenario, fr_scenario};

    #[test]
    fn fr_implication_one() {
        let sc = fr_scenario();
        let run = enumerate_branches(&sc, &CollapsePolicy::PolicyH).unwrap();
        let p = certainty(
            &sc,
            &run,
            "Fbar",
            &[Event::new("Fbar", "t")],
            &Event::new("W", "f"),
        )
        .unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fr_implication_two_retrodiction() {
        let sc = fr_scenario();
        let run = enumerate_branches(&sc, &CollapsePolicy::PolicyH).unwrap();
        let p = certainty(
            &sc,
            &run,
            "F",
            &[Event::new("F", "u")],
            &Event::new("Fbar", "t"),
        )
        .unwrap();
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn epr_outside_view_is_half() {
        let sc = epr_wigner_scenario();
        let run = enumerate_branches(&sc, &CollapsePolicy::PolicyH).unwrap();
        let cond = [Event::new("F", "u")];
        let p = certainty(&sc, &run, "F", &cond, &Event::new("W", "d")).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let q = view_probability(&sc, &run, "W", &cond, &Event::new("W", "u")).unwrap();
        assert!((q - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vacuous_condition_is_distinct() {
        let sc = fr_scenario();
        let run = enumerate_branches(&sc, &CollapsePolicy::UniversalCollapse).unwrap();
        // F never finds u when Fbar found h, and no branch has both
        let err = certainty(
            &sc,
            &run,
            "F",
            &[Event::new("Fbar", "h"), Event::new("F", "u")],
            &Event::new("W", "f"),
        );
        assert!(matches!(err, Err(Error::VacuousCondition(_))));
    }

    #[test]
    fn unknown_event_rejected() {
        let sc = fr_scenario();
        let run = enumerate_branches(&sc, &CollapsePolicy::PolicyH).unwrap();
        assert!(certainty(
            &sc,
            &run,
            "F",
            &[Event::new("F", "x")],
            &Event::new("W", "f")
        )
        .is_err());
        assert!(certainty(
            &sc,
            &run,
            "F",
            &[Event::new("prepare:spin", "x")],
            &Event::new("W", "f")
        )
        .is_err());
    }
}
