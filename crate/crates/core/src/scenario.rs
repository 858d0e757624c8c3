//! Scenario description: systems, labs, agents and the ordered protocol.
//!
//! Step identifiers are assigned by [`ScenarioBuilder`]: a measurement is
//! named after its measurer (`W`, or `W#2` for a second measurement by the
//! same agent), a preparation after its target (`prepare:spin`) and an
//! announcement after its announcer (`announce:Wbar`).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Amplitude, SpaceRegistry, StateVector, Subsystem};
use crate::measurement::MeasurementBasis;
use crate::ZERO_TOL;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Location {
    Inside(String),
    Outside,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub name: String,
    pub location: Location,
}

impl Agent {
    pub fn inside(name: &str, lab: &str) -> Self {
        Agent {
            name: name.into(),
            location: Location::Inside(lab.into()),
        }
    }

    pub fn outside(name: &str) -> Self {
        Agent {
            name: name.into(),
            location: Location::Outside,
        }
    }

    pub fn lab(&self) -> Option<&str> {
        match &self.location {
            Location::Inside(l) => Some(l),
            Location::Outside => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lab {
    pub name: String,
    pub agents: Vec<String>,
    pub subsystems: Vec<String>,
}

/// Sealed measurements happen inside a closed lab; open ones are public.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Visibility {
    Sealed { lab: String },
    Open,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementStep {
    pub id: String,
    pub measurer: String,
    pub basis: MeasurementBasis,
    pub visibility: Visibility,
}

/// Controlled isometry `|c>|blank> -> |c>|ket_c>` onto a fresh target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrepareStep {
    pub id: String,
    pub target: String,
    pub control: String,
    pub map: Vec<(String, StateVector)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Receivers {
    All,
    Agents(Vec<String>),
}

impl Receivers {
    pub fn includes(&self, agent: &str) -> bool {
        match self {
            Receivers::All => true,
            Receivers::Agents(v) => v.iter().any(|a| a == agent),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnounceStep {
    pub id: String,
    pub announcer: String,
    /// Id of the measurement whose outcome is announced.
    pub source: String,
    pub receivers: Receivers,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Step {
    Measure(MeasurementStep),
    Prepare(PrepareStep),
    Announce(AnnounceStep),
}

impl Step {
    pub fn id(&self) -> &str {
        match self {
            Step::Measure(m) => &m.id,
            Step::Prepare(p) => &p.id,
            Step::Announce(a) => &a.id,
        }
    }

    pub fn as_measure(&self) -> Option<&MeasurementStep> {
        match self {
            Step::Measure(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub registry: Arc<SpaceRegistry>,
    pub agents: Vec<Agent>,
    pub labs: Vec<Lab>,
    pub initial_state: StateVector,
    pub steps: Vec<Step>,
}

impl Scenario {
    pub fn agent(&self, name: &str) -> Option<&Agent> {
        self.agents.iter().find(|a| a.name == name)
    }

    pub fn lab(&self, name: &str) -> Option<&Lab> {
        self.labs.iter().find(|l| l.name == name)
    }

    pub fn step_position(&self, id: &str) -> Option<usize> {
        self.steps.iter().position(|s| s.id() == id)
    }

    pub fn step(&self, id: &str) -> Option<&Step> {
        self.steps.iter().find(|s| s.id() == id)
    }

    pub fn measurement(&self, id: &str) -> Option<&MeasurementStep> {
        self.step(id).and_then(Step::as_measure)
    }

    pub fn measurements(&self) -> impl Iterator<Item = &MeasurementStep> {
        self.steps.iter().filter_map(Step::as_measure)
    }

    pub fn has_sealed_steps(&self) -> bool {
        self.measurements()
            .any(|m| matches!(m.visibility, Visibility::Sealed { .. }))
    }

    /// Initial state pushed through every preparation, with no measurement.
    pub fn unitary_state(&self) -> Result<StateVector> {
        let mut state = self.initial_state.clone();
        for step in &self.steps {
            if let Step::Prepare(p) = step {
                state = apply_prepare(&state, p)?;
            }
        }
        Ok(state)
    }

    /// Checks every structural invariant; built-ins and parsed files both pass
    /// through here.
    pub fn validate(&self) -> Result<()> {
        let reg = &self.registry;
        let fail = |m: String| Err(Error::Scenario(m));

        for (i, a) in self.agents.iter().enumerate() {
            if self.agents[..i].iter().any(|b| b.name == a.name) {
                return fail(format!("duplicate agent `{}`", a.name));
            }
            if let Some(l) = a.lab() {
                if self.lab(l).is_none() {
                    return fail(format!("agent `{}` is inside unknown lab `{l}`", a.name));
                }
            }
        }
        for (i, lab) in self.labs.iter().enumerate() {
            if self.labs[..i].iter().any(|l| l.name == lab.name) {
                return fail(format!("duplicate lab `{}`", lab.name));
            }
            for s in &lab.subsystems {
                if reg.position(s).is_none() {
                    return fail(format!("lab `{}` contains unknown system `{s}`", lab.name));
                }
                if self.labs[..i].iter().any(|l| l.subsystems.contains(s)) {
                    return fail(format!("system `{s}` belongs to more than one lab"));
                }
            }
            let members: Vec<&str> = self
                .agents
                .iter()
                .filter(|a| a.lab() == Some(lab.name.as_str()))
                .map(|a| a.name.as_str())
                .collect();
            if lab
                .agents
                .iter()
                .map(String::as_str)
                .ne(members.iter().copied())
            {
                return fail(format!("member list of lab `{}` is inconsistent", lab.name));
            }
        }
        if *self.initial_state.registry() != **reg {
            return fail("initial state is not over the scenario registry".into());
        }
        if !self.initial_state.is_normalized() {
            return fail("initial state is not normalized".into());
        }

        let prepared: Vec<(usize, &PrepareStep)> = self
            .steps
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s {
                Step::Prepare(p) => Some((i, p)),
                _ => None,
            })
            .collect();
        let prepared_at = |system: &str| {
            prepared
                .iter()
                .find(|(_, p)| p.target == system)
                .map(|(i, _)| *i)
        };

        for (pos, step) in self.steps.iter().enumerate() {
            if self.steps[..pos].iter().any(|s| s.id() == step.id()) {
                return fail(format!("duplicate step id `{}`", step.id()));
            }
            match step {
                Step::Measure(m) => {
                    let agent = self.agent(&m.measurer).ok_or_else(|| {
                        Error::Scenario(format!("unknown measurer `{}`", m.measurer))
                    })?;
                    let expect = reg.restrict(m.basis.target())?;
                    if *m.basis.vectors()[0].1.registry() != expect {
                        return fail(format!(
                            "basis of step `{}` does not match its systems",
                            m.id
                        ));
                    }
                    for t in m.basis.target() {
                        if let Some(p) = prepared_at(t) {
                            if p > pos {
                                return fail(format!(
                                    "step `{}` measures `{t}` before it is prepared",
                                    m.id
                                ));
                            }
                        }
                    }
                    if let Visibility::Sealed { lab } = &m.visibility {
                        if agent.lab() != Some(lab.as_str()) {
                            return fail(format!(
                                "sealed step `{}` must be performed by an agent inside lab `{lab}`",
                                m.id
                            ));
                        }
                        let lab = self.lab(lab).expect("checked above");
                        if let Some(t) = m
                            .basis
                            .target()
                            .iter()
                            .find(|t| !lab.subsystems.contains(t))
                        {
                            return fail(format!(
                                "sealed step `{}` measures `{t}`, which is outside lab `{}`",
                                m.id, lab.name
                            ));
                        }
                    }
                }
                Step::Prepare(p) => {
                    let target = reg
                        .get(&p.target)
                        .ok_or_else(|| Error::Scenario(format!("unknown target `{}`", p.target)))?;
                    let control = reg.get(&p.control).ok_or_else(|| {
                        Error::Scenario(format!("unknown control `{}`", p.control))
                    })?;
                    if p.target == p.control {
                        return fail(format!("step `{}` controls `{}` by itself", p.id, p.target));
                    }
                    if prepared_at(&p.target) != Some(pos) {
                        return fail(format!("system `{}` is prepared more than once", p.target));
                    }
                    if prepared_at(&p.control).is_some_and(|c| c > pos) {
                        return fail(format!(
                            "control `{}` is used before it is prepared",
                            p.control
                        ));
                    }
                    let mut seen = Vec::new();
                    for (label, ket) in &p.map {
                        if control.label_index(label).is_none() {
                            return fail(format!("unknown control label `{label}` in `{}`", p.id));
                        }
                        if seen.contains(&label) {
                            return fail(format!(
                                "control label `{label}` mapped twice in `{}`",
                                p.id
                            ));
                        }
                        seen.push(label);
                        if ket.registry().len() != 1 || ket.registry().subsystems()[0] != *target {
                            return fail(format!(
                                "ket for `{label}` in `{}` is not over `{}`",
                                p.id, p.target
                            ));
                        }
                        if !ket.is_normalized() {
                            return fail(format!(
                                "ket for `{label}` in `{}` is not normalized",
                                p.id
                            ));
                        }
                    }
                    if seen.len() != control.dim() {
                        return fail(format!(
                            "`{}` does not map every label of `{}`",
                            p.id, p.control
                        ));
                    }
                    let tpos = reg.position(&p.target).expect("checked");
                    let stray = self
                        .initial_state
                        .amplitudes()
                        .iter()
                        .enumerate()
                        .any(|(i, a)| reg.digits_of(i)[tpos] != 0 && a.norm() > ZERO_TOL);
                    if stray {
                        return fail(format!(
                            "prepared system `{}` must start in its first label `{}`",
                            p.target, target.labels[0]
                        ));
                    }
                }
                Step::Announce(a) => {
                    if self.agent(&a.announcer).is_none() {
                        return fail(format!("unknown announcer `{}`", a.announcer));
                    }
                    let src = self.step_position(&a.source);
                    let ok = src.is_some_and(|s| {
                        s < pos
                            && self.steps[s]
                                .as_measure()
                                .is_some_and(|m| m.measurer == a.announcer)
                    });
                    if !ok {
                        return fail(format!(
                            "`{}` must announce an earlier measurement by `{}`",
                            a.id, a.announcer
                        ));
                    }
                    if let Receivers::Agents(list) = &a.receivers {
                        if let Some(r) = list.iter().find(|r| self.agent(r).is_none()) {
                            return fail(format!("unknown receiver `{r}` in `{}`", a.id));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Structural equality with amplitude tolerance `tol`.
    pub fn approx_eq(&self, other: &Scenario, tol: f64) -> bool {
        *self.registry == *other.registry
            && self.agents == other.agents
            && self.labs == other.labs
            && self.initial_state.approx_eq(&other.initial_state, tol)
            && self.steps.len() == other.steps.len()
            && self
                .steps
                .iter()
                .zip(&other.steps)
                .all(|(a, b)| match (a, b) {
                    (Step::Measure(x), Step::Measure(y)) => {
                        x.id == y.id
                            && x.measurer == y.measurer
                            && x.visibility == y.visibility
                            && x.basis.approx_eq(&y.basis, tol)
                    }
                    (Step::Prepare(x), Step::Prepare(y)) => {
                        x.id == y.id
                            && x.target == y.target
                            && x.control == y.control
                            && x.map.len() == y.map.len()
                            && x.map
                                .iter()
                                .zip(&y.map)
                                .all(|((la, ka), (lb, kb))| la == lb && ka.approx_eq(kb, tol))
                    }
                    (Step::Announce(x), Step::Announce(y)) => {
                        x.id == y.id
                            && x.announcer == y.announcer
                            && x.source == y.source
                            && x.receivers == y.receivers
                    }
                    _ => false,
                })
    }
}

/// Applies a controlled preparation to a state over the full registry.
pub fn apply_prepare(state: &StateVector, step: &PrepareStep) -> Result<StateVector> {
    let reg = state.registry();
    let tpos = reg
        .position(&step.target)
        .ok_or_else(|| Error::UnknownSubsystem(step.target.clone()))?;
    let cpos = reg
        .position(&step.control)
        .ok_or_else(|| Error::UnknownSubsystem(step.control.clone()))?;
    let control = &reg.subsystems()[cpos];
    let kets: Vec<&StateVector> = control
        .labels
        .iter()
        .map(|l| {
            step.map
                .iter()
                .find(|(k, _)| k == l)
                .map(|(_, v)| v)
                .ok_or_else(|| Error::Scenario(format!("`{}` has no entry for `{l}`", step.id)))
        })
        .collect::<Result<_>>()?;
    let amps = state.amplitudes();
    let mut out = vec![Amplitude::new(0.0, 0.0); amps.len()];
    for (i, a) in amps.iter().enumerate() {
        let mut digits = reg.digits_of(i);
        if digits[tpos] != 0 {
            if a.norm() > ZERO_TOL {
                return Err(Error::Scenario(format!(
                    "target `{}` of `{}` is not fresh",
                    step.target, step.id
                )));
            }
            continue;
        }
        let ket = kets[digits[cpos]].amplitudes();
        for (t, k) in ket.iter().enumerate() {
            digits[tpos] = t;
            out[reg.index_of(&digits)] += a * k;
        }
    }
    Ok(StateVector::from_raw(state.registry_arc().clone(), out))
}

/// Incremental construction with automatic step ids.
pub struct ScenarioBuilder {
    registry: Arc<SpaceRegistry>,
    agents: Vec<Agent>,
    labs: Vec<(String, Vec<String>)>,
    initial_state: Option<StateVector>,
    steps: Vec<Step>,
}

impl ScenarioBuilder {
    pub fn new(registry: Arc<SpaceRegistry>) -> Self {
        ScenarioBuilder {
            registry,
            agents: Vec::new(),
            labs: Vec::new(),
            initial_state: None,
            steps: Vec::new(),
        }
    }

    pub fn registry(&self) -> &Arc<SpaceRegistry> {
        &self.registry
    }

    pub fn lab(&mut self, name: &str, subsystems: &[&str]) -> &mut Self {
        self.labs.push((
            name.into(),
            subsystems.iter().map(|s| s.to_string()).collect(),
        ));
        self
    }

    pub fn agent(&mut self, agent: Agent) -> &mut Self {
        self.agents.push(agent);
        self
    }

    pub fn init(&mut self, state: StateVector) -> &mut Self {
        self.initial_state = Some(state);
        self
    }

    fn next_id(&self, base: String) -> String {
        let n = self
            .steps
            .iter()
            .filter(|s| s.id() == base || s.id().starts_with(&format!("{base}#")))
            .count();
        if n == 0 {
            base
        } else {
            format!("{base}#{}", n + 1)
        }
    }

    pub fn last_measurement_by(&self, agent: &str) -> Option<&str> {
        self.steps
            .iter()
            .rev()
            .filter_map(Step::as_measure)
            .find(|m| m.measurer == agent)
            .map(|m| m.id.as_str())
    }

    /// `sealed: None` picks the default: sealed when the measurer is inside a lab.
    pub fn measure(
        &mut self,
        measurer: &str,
        basis: MeasurementBasis,
        sealed: Option<bool>,
    ) -> Result<&mut Self> {
        let lab = self
            .agents
            .iter()
            .find(|a| a.name == measurer)
            .ok_or_else(|| Error::Scenario(format!("unknown measurer `{measurer}`")))?
            .lab()
            .map(str::to_string);
        let visibility = match (sealed, lab) {
            (Some(false), _) | (None, None) => Visibility::Open,
            (Some(true) | None, Some(lab)) => Visibility::Sealed { lab },
            (Some(true), None) => {
                return Err(Error::Scenario(format!(
                    "`{measurer}` is outside every lab and cannot seal a step"
                )))
            }
        };
        let id = self.next_id(measurer.to_string());
        self.steps.push(Step::Measure(MeasurementStep {
            id,
            measurer: measurer.into(),
            basis,
            visibility,
        }));
        Ok(self)
    }

    pub fn prepare(
        &mut self,
        target: &str,
        control: &str,
        map: Vec<(String, StateVector)>,
    ) -> &mut Self {
        let id = self.next_id(format!("prepare:{target}"));
        self.steps.push(Step::Prepare(PrepareStep {
            id,
            target: target.into(),
            control: control.into(),
            map,
        }));
        self
    }

    pub fn announce(&mut self, announcer: &str, receivers: Receivers) -> Result<&mut Self> {
        let source = self
            .last_measurement_by(announcer)
            .ok_or_else(|| {
                Error::Scenario(format!("`{announcer}` announces before measuring anything"))
            })?
            .to_string();
        let id = self.next_id(format!("announce:{announcer}"));
        self.steps.push(Step::Announce(AnnounceStep {
            id,
            announcer: announcer.into(),
            source,
            receivers,
        }));
        Ok(self)
    }

    pub fn build(&self) -> Result<Scenario> {
        let initial_state = self
            .initial_state
            .clone()
            .ok_or_else(|| Error::Scenario("no initial state".into()))?;
        let labs = self
            .labs
            .iter()
            .map(|(name, subsystems)| Lab {
                name: name.clone(),
                agents: self
                    .agents
                    .iter()
                    .filter(|a| a.lab() == Some(name.as_str()))
                    .map(|a| a.name.clone())
                    .collect(),
                subsystems: subsystems.clone(),
            })
            .collect();
        let scenario = Scenario {
            registry: self.registry.clone(),
            agents: self.agents.clone(),
            labs,
            initial_state,
            steps: self.steps.clone(),
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn real(x: f64) -> Amplitude {
    Amplitude::new(x, 0.0)
}

fn ket(registry: &Arc<SpaceRegistry>, amps: &[f64]) -> StateVector {
    StateVector::from_amplitudes(registry.clone(), amps.iter().map(|&a| real(a)).collect())
        .expect("built-in amplitudes")
}

fn two_label_basis(
    registry: &SpaceRegistry,
    system: &str,
    vectors: [(&str, [f64; 2]); 2],
) -> MeasurementBasis {
    let sub = Arc::new(
        registry
            .restrict(&[system.to_string()])
            .expect("built-in system"),
    );
    MeasurementBasis::new(
        vec![system.to_string()],
        vectors
            .iter()
            .map(|(l, a)| (l.to_string(), ket(&sub, a)))
            .collect(),
    )
    .expect("built-in basis")
}

fn coin_spin_registry() -> Arc<SpaceRegistry> {
    Arc::new(
        SpaceRegistry::new(vec![
            Subsystem::new("coin", ["h", "t"]),
            Subsystem::new("spin", ["u", "d"]),
        ])
        .expect("built-in registry"),
    )
}

fn two_lab_agents(b: &mut ScenarioBuilder) {
    b.lab("Lbar", &["coin"])
        .lab("L", &["spin"])
        .agent(Agent::inside("Fbar", "Lbar"))
        .agent(Agent::inside("F", "L"))
        .agent(Agent::outside("Wbar"))
        .agent(Agent::outside("W"));
}

/// The four-agent, two-lab protocol with the biased coin.
pub fn fr_scenario() -> Scenario {
    let reg = coin_spin_registry();
    let spin = Arc::new(reg.restrict(&["spin".into()]).unwrap());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let (a, b) = ((1.0f64 / 3.0).sqrt(), (2.0f64 / 3.0).sqrt());

    let mut builder = ScenarioBuilder::new(reg.clone());
    two_lab_agents(&mut builder);
    // layout (h,u) (h,d) (t,u) (t,d); spin starts blank in `u`
    builder.init(ket(&reg, &[a, 0.0, b, 0.0]));
    let mut build = || -> Result<Scenario> {
        builder.measure(
            "Fbar",
            MeasurementBasis::computational(&reg, &["coin".into()])?,
            Some(true),
        )?;
        builder.prepare(
            "spin",
            "coin",
            vec![
                ("h".into(), ket(&spin, &[0.0, 1.0])),
                ("t".into(), ket(&spin, &[s, s])),
            ],
        );
        builder.measure(
            "F",
            MeasurementBasis::computational(&reg, &["spin".into()])?,
            Some(true),
        )?;
        builder.measure(
            "Wbar",
            two_label_basis(&reg, "coin", [("o", [s, -s]), ("f", [s, s])]),
            Some(false),
        )?;
        builder.announce("Wbar", Receivers::Agents(vec!["W".into()]))?;
        // |o> = (|d> - |u>)/sqrt2, |f> = (|d> + |u>)/sqrt2, written in (u, d) order
        builder.measure(
            "W",
            two_label_basis(&reg, "spin", [("o", [-s, s]), ("f", [s, s])]),
            Some(false),
        )?;
        builder.build()
    };
    build().expect("built-in scenario is valid")
}

/// Singlet shared between F (inside L, sealed) and W (outside, open).
pub fn epr_wigner_scenario() -> Scenario {
    let reg = Arc::new(
        SpaceRegistry::new(vec![
            Subsystem::new("p1", ["u", "d"]),
            Subsystem::new("p2", ["u", "d"]),
        ])
        .expect("built-in registry"),
    );
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut builder = ScenarioBuilder::new(reg.clone());
    builder
        .lab("L", &["p1"])
        .agent(Agent::inside("F", "L"))
        .agent(Agent::outside("W"))
        .init(ket(&reg, &[0.0, s, -s, 0.0]));
    let mut build = || -> Result<Scenario> {
        builder.measure(
            "F",
            MeasurementBasis::computational(&reg, &["p1".into()])?,
            Some(true),
        )?;
        builder.measure(
            "W",
            MeasurementBasis::computational(&reg, &["p2".into()])?,
            Some(false),
        )?;
        builder.build()
    };
    build().expect("built-in scenario is valid")
}

/// The singlet protocol dressed up with two labs, four agents and a channel.
pub fn dressed_epr_scenario() -> Scenario {
    let reg = coin_spin_registry();
    let spin = Arc::new(reg.restrict(&["spin".into()]).unwrap());
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut builder = ScenarioBuilder::new(reg.clone());
    two_lab_agents(&mut builder);
    builder.init(ket(&reg, &[s, 0.0, s, 0.0]));
    let mut build = || -> Result<Scenario> {
        builder.measure(
            "Fbar",
            MeasurementBasis::computational(&reg, &["coin".into()])?,
            Some(true),
        )?;
        builder.prepare(
            "spin",
            "coin",
            vec![
                ("h".into(), ket(&spin, &[0.0, 1.0])),
                ("t".into(), ket(&spin, &[1.0, 0.0])),
            ],
        );
        builder.measure(
            "F",
            MeasurementBasis::computational(&reg, &["spin".into()])?,
            Some(true),
        )?;
        builder.measure(
            "Wbar",
            MeasurementBasis::computational(&reg, &["coin".into()])?,
            Some(false),
        )?;
        builder.announce("Wbar", Receivers::Agents(vec!["W".into()]))?;
        builder.measure(
            "W",
            MeasurementBasis::computational(&reg, &["spin".into()])?,
            Some(false),
        )?;
        builder.build()
    };
    build().expect("built-in scenario is valid")
}

/// Built-in lookup by CLI name.
pub fn builtin(name: &str) -> Option<Scenario> {
    match name {
        "fr" => Some(fr_scenario()),
        "epr" => Some(epr_wigner_scenario()),
        "epr-dressed" => Some(dressed_epr_scenario()),
        _ => None,
    }
}

pub const BUILTIN_NAMES: [&str; 3] = ["fr", "epr", "epr-dressed"];

/// Convenience: label map for a single-system basis state.
pub fn labels(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}
