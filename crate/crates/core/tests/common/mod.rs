#![allow(dead_code)]

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;

use wfs::scenario::{Receivers, ScenarioBuilder};
use wfs::{Agent, Amplitude, MeasurementBasis, Scenario, SpaceRegistry, StateVector, Subsystem};

pub fn random_state<R: Rng>(rng: &mut R, registry: &Arc<SpaceRegistry>) -> StateVector {
    loop {
        let amps: Vec<Amplitude> = (0..registry.total_dim())
            .map(|_| Amplitude::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm > 0.1 {
            let amps = amps.into_iter().map(|a| a / norm).collect();
            return StateVector::from_amplitudes(registry.clone(), amps).unwrap();
        }
    }
}

/// Gram-Schmidt on random complex vectors.
pub fn random_frame<R: Rng>(rng: &mut R, registry: &Arc<SpaceRegistry>) -> Vec<Vec<Amplitude>> {
    let d = registry.total_dim();
    'retry: loop {
        let mut frame: Vec<Vec<Amplitude>> = Vec::with_capacity(d);
        for _ in 0..d {
            let mut v: Vec<Amplitude> = (0..d)
                .map(|_| Amplitude::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            for u in &frame {
                let dot: Amplitude = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= dot * y;
                }
            }
            let norm = v.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < 1e-3 {
                continue 'retry;
            }
            frame.push(v.into_iter().map(|a| a / norm).collect());
        }
        return frame;
    }
}

pub fn random_basis<R: Rng>(
    rng: &mut R,
    registry: &SpaceRegistry,
    target: &[String],
) -> MeasurementBasis {
    let sub = Arc::new(registry.restrict(target).unwrap());
    let vectors = random_frame(rng, &sub)
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            (
                format!("o{i}"),
                StateVector::from_amplitudes(sub.clone(), v).unwrap(),
            )
        })
        .collect();
    MeasurementBasis::new(target.to_vec(), vectors).unwrap()
}

#[derive(Clone, Copy)]
pub struct GenOptions {
    pub sealed: bool,
    pub computational_only: bool,
    pub announcements: bool,
    pub preparations: bool,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            sealed: true,
            computational_only: false,
            announcements: true,
            preparations: true,
        }
    }
}

/// At most 3 systems of dimension 2 or 3 and at most 4 steps.
pub fn random_scenario<R: Rng>(rng: &mut R, opts: GenOptions) -> Scenario {
    loop {
        if let Some(s) = try_random_scenario(rng, opts) {
            return s;
        }
    }
}

fn try_random_scenario<R: Rng>(rng: &mut R, opts: GenOptions) -> Option<Scenario> {
    let n = rng.gen_range(1..=3);
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let subsystems = names
        .iter()
        .map(|name| {
            Subsystem::new(
                name.clone(),
                ["a", "b", "c"][..rng.gen_range(2..=3)].iter().copied(),
            )
        })
        .collect();
    let reg = Arc::new(SpaceRegistry::new(subsystems).unwrap());

    let mut lab_of: Vec<Option<usize>> = (0..n)
        .map(|_| [None, Some(0), Some(1)][rng.gen_range(0..3)])
        .collect();
    if !opts.sealed {
        lab_of.iter_mut().for_each(|l| *l = None);
    }
    let mut builder = ScenarioBuilder::new(reg.clone());
    let mut labs: Vec<(String, Vec<String>)> = Vec::new();
    for l in 0..2 {
        let members: Vec<String> = names
            .iter()
            .zip(&lab_of)
            .filter(|(_, x)| **x == Some(l))
            .map(|(s, _)| s.clone())
            .collect();
        if !members.is_empty() {
            let refs: Vec<&str> = members.iter().map(String::as_str).collect();
            builder.lab(&format!("L{l}"), &refs);
            labs.push((format!("L{l}"), members));
        }
    }
    let agent_count = rng.gen_range(1..=3);
    let mut agents: Vec<(String, Option<usize>)> = Vec::new();
    for i in 0..agent_count {
        let name = format!("A{i}");
        let lab = if !labs.is_empty() && rng.gen_bool(0.5) {
            Some(rng.gen_range(0..labs.len()))
        } else {
            None
        };
        match lab {
            Some(l) => builder.agent(Agent::inside(&name, &labs[l].0)),
            None => builder.agent(Agent::outside(&name)),
        };
        agents.push((name, lab));
    }

    let prepare = opts.preparations && n >= 2 && rng.gen_bool(0.3);
    let mut state = random_state(rng, &reg);
    let mut steps_left = 4;
    if prepare {
        let t = rng.gen_range(0..n);
        let c = (t + rng.gen_range(1..n)) % n;
        let amps: Vec<Amplitude> = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                if reg.digits_of(i)[t] == 0 {
                    *a
                } else {
                    Amplitude::new(0.0, 0.0)
                }
            })
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-3 {
            return None;
        }
        state =
            StateVector::from_amplitudes(reg.clone(), amps.into_iter().map(|a| a / norm).collect())
                .unwrap();
        let tsub = Arc::new(reg.restrict(&[names[t].clone()]).unwrap());
        let map = reg.subsystems()[c]
            .labels
            .iter()
            .map(|l| {
                let ket = if opts.computational_only {
                    let k = rng.gen_range(0..tsub.total_dim());
                    let lab = tsub.subsystems()[0].labels[k].clone();
                    wfs::basis_state(&tsub, &[lab.as_str()]).unwrap()
                } else {
                    random_state(rng, &tsub)
                };
                (l.clone(), ket)
            })
            .collect();
        builder.init(state);
        builder.prepare(&names[t], &names[c], map);
        steps_left -= 1;
    } else {
        builder.init(state);
    }

    let mut measured: Vec<String> = Vec::new();
    for _ in 0..rng.gen_range(1..=steps_left) {
        if opts.announcements && !measured.is_empty() && rng.gen_bool(0.25) {
            let who = measured.choose(rng).unwrap().clone();
            let receivers = if rng.gen_bool(0.5) {
                Receivers::All
            } else {
                Receivers::Agents(vec![agents.choose(rng).unwrap().0.clone()])
            };
            builder.announce(&who, receivers).ok()?;
            continue;
        }
        let (who, lab) = agents.choose(rng).unwrap().clone();
        let sealed = opts.sealed && lab.is_some() && rng.gen_bool(0.6);
        let mut pool: Vec<String> = match (sealed, lab) {
            (true, Some(l)) => labs[l].1.clone(),
            _ => names.clone(),
        };
        pool.shuffle(rng);
        let k = rng.gen_range(1..=pool.len().min(2));
        let target: Vec<String> = pool[..k].to_vec();
        let basis = if opts.computational_only || rng.gen_bool(0.3) {
            MeasurementBasis::computational(&reg, &target).unwrap()
        } else {
            random_basis(rng, &reg, &target)
        };
        builder.measure(&who, basis, Some(sealed)).ok()?;
        measured.push(who);
    }
    builder.build().ok()
}

/// Joint state of the coin-and-spin protocol after the preparation, written
/// out by hand in the order (h,u) (h,d) (t,u) (t,d).
pub fn fr_joint_state() -> [f64; 4] {
    let third = (1.0f64 / 3.0).sqrt();
    [0.0, third, third, third]
}

/// Coefficient of `|x>_coin |y>_spin` with both kets given in the
/// computational basis, by direct summation.
pub fn expansion_coefficient(state: &[f64; 4], x: [f64; 2], y: [f64; 2]) -> f64 {
    let mut c = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            c += x[i] * y[j] * state[2 * i + j];
        }
    }
    c
}

type LabelledPair = [(&'static str, [f64; 2]); 2];

pub fn fr_outer_bases() -> (LabelledPair, LabelledPair) {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // coin (h, t): o = (h - t)/sqrt2, f = (h + t)/sqrt2
    // spin (u, d): o = (d - u)/sqrt2, f = (d + u)/sqrt2
    (
        [("o", [s, -s]), ("f", [s, s])],
        [("o", [-s, s]), ("f", [s, s])],
    )
}

/// Joint Born probability of the outside outcomes by brute force.
pub fn fr_outside_probability(wbar: &str, w: &str) -> f64 {
    let (a, b) = fr_outer_bases();
    let x = a.iter().find(|(l, _)| *l == wbar).unwrap().1;
    let y = b.iter().find(|(l, _)| *l == w).unwrap().1;
    expansion_coefficient(&fr_joint_state(), x, y).powi(2)
}

/// Best Hardy probability for `cos θ|uu> + sin θ|dd>`, computed offline with
/// an independent root-finding search over all four planar settings.
pub const HARDY_ORACLE: [(f64, f64); 3] = [
    (10.0, 0.027999955579416414),
    (22.5, 0.08760950047047707),
    (35.0, 0.04736649624410486),
];
/// Largest value over θ = 1°, 2°, …, 44°, attained at 25°.
pub const HARDY_ORACLE_MAX: f64 = 0.09016295072032984;

pub fn scenario_files() -> Vec<std::path::PathBuf> {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios");
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "wfs"))
        .collect();
    files.sort();
    files
}

const FUZZ_TOKENS: &[&str] = &[
    "system",
    "labels",
    "lab",
    "contains",
    "agent",
    "inside",
    "outside",
    "init",
    "measure",
    "on",
    "basis",
    "computational",
    "sealed",
    "open",
    "prepare",
    "controlled-by",
    "map",
    "announce",
    "to",
    "all",
    "sqrt",
    "(",
    ")",
    "|",
    ">",
    ",",
    "+",
    "-",
    "*",
    "/",
    "{",
    "}",
    "=",
    ";",
    "->",
    "\n",
    "\n",
    "#",
    "s",
    "t",
    "u",
    "d",
    "h",
    "coin",
    "spin",
    "L",
    "F",
    "W",
    "0",
    "1",
    "2",
    "0.5",
    "1e400",
    "↑",
    "↓",
    "$",
    "é",
    "controlled",
    "-by",
];

/// Random token soup, sometimes seeded with a prefix of a valid file.
pub fn fuzz_source<R: Rng>(rng: &mut R, valid: &[String]) -> String {
    let mut out = String::new();
    if !valid.is_empty() && rng.gen_bool(0.5) {
        let text = valid.choose(rng).unwrap();
        let cut = rng.gen_range(0..=text.len());
        let cut = (0..=cut).rev().find(|&i| text.is_char_boundary(i)).unwrap();
        out.push_str(&text[..cut]);
    }
    for _ in 0..rng.gen_range(0..40) {
        out.push_str(FUZZ_TOKENS.choose(rng).unwrap());
        if rng.gen_bool(0.7) {
            out.push(' ');
        }
    }
    out
}
