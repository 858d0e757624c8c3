//! Projective measurements on subsystem subsets.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{basis_state, inner, normalize, Amplitude, SpaceRegistry, StateVector};
use crate::{EPS, ZERO_TOL};

/// Labeled orthonormal frame on an ordered subset of subsystems.
///
/// Each vector lives on the registry obtained by restricting the full space
/// to `target`, in `target` order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementBasis {
    target: Vec<String>,
    vectors: Vec<(String, StateVector)>,
}

impl MeasurementBasis {
    pub fn new(target: Vec<String>, vectors: Vec<(String, StateVector)>) -> Result<Self> {
        if target.is_empty() {
            return Err(Error::InvalidBasis("empty target".into()));
        }
        let (_, first) = vectors
            .first()
            .ok_or_else(|| Error::InvalidBasis("no vectors".into()))?;
        let reg = first.registry();
        let names: Vec<&str> = reg.subsystems().iter().map(|s| s.name.as_str()).collect();
        if names != target.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(Error::InvalidBasis(format!(
                "vectors live on [{}] but the target is [{}]",
                names.join(", "),
                target.join(", ")
            )));
        }
        if vectors.len() != reg.total_dim() {
            return Err(Error::InvalidBasis(format!(
                "{} vectors cannot span a space of dimension {}",
                vectors.len(),
                reg.total_dim()
            )));
        }
        for (i, (li, vi)) in vectors.iter().enumerate() {
            if !vi.same_space(first) {
                return Err(Error::RegistryMismatch);
            }
            if vectors[..i].iter().any(|(l, _)| l == li) {
                return Err(Error::InvalidBasis(format!(
                    "duplicate outcome label `{li}`"
                )));
            }
            for (lj, vj) in &vectors[..=i] {
                let expect = if lj == li { 1.0 } else { 0.0 };
                let got = inner(vj, vi)?;
                if (got - Amplitude::new(expect, 0.0)).norm() > EPS {
                    return Err(Error::InvalidBasis(if lj == li {
                        format!("vector `{li}` is not normalized")
                    } else {
                        format!("vectors `{lj}` and `{li}` are not orthogonal")
                    }));
                }
            }
        }
        Ok(MeasurementBasis { target, vectors })
    }

    /// Normalizes every ket first, then validates as [`Self::new`].
    pub fn from_kets(target: Vec<String>, kets: Vec<(String, StateVector)>) -> Result<Self> {
        let vectors = kets
            .into_iter()
            .map(|(l, k)| normalize(&k).map(|k| (l, k)))
            .collect::<Result<Vec<_>>>()?;
        MeasurementBasis::new(target, vectors)
    }

    /// Product computational basis; outcome labels join the per-system labels
    /// with `,`.
    pub fn computational(registry: &SpaceRegistry, target: &[String]) -> Result<Self> {
        let sub = Arc::new(registry.restrict(target)?);
        let vectors = (0..sub.total_dim())
            .map(|i| {
                let labels = sub.labels_of(i);
                basis_state(&sub, &labels).map(|v| (labels.join(","), v))
            })
            .collect::<Result<Vec<_>>>()?;
        MeasurementBasis::new(target.to_vec(), vectors)
    }

    /// Tensor product of two bases on disjoint targets, labels joined with `,`.
    pub fn product(a: &MeasurementBasis, b: &MeasurementBasis) -> Result<Self> {
        let mut target = a.target.clone();
        target.extend(b.target.iter().cloned());
        let mut vectors = Vec::with_capacity(a.len() * b.len());
        for (la, va) in &a.vectors {
            for (lb, vb) in &b.vectors {
                vectors.push((format!("{la},{lb}"), crate::hilbert::tensor(va, vb)?));
            }
        }
        MeasurementBasis::new(target, vectors)
    }

    pub fn target(&self) -> &[String] {
        &self.target
    }

    pub fn vectors(&self) -> &[(String, StateVector)] {
        &self.vectors
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.vectors.iter().map(|(l, _)| l.as_str())
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn index_of(&self, outcome: &str) -> Option<usize> {
        self.vectors.iter().position(|(l, _)| l == outcome)
    }

    pub fn vector(&self, outcome: &str) -> Option<&StateVector> {
        self.vectors
            .iter()
            .find(|(l, _)| l == outcome)
            .map(|(_, v)| v)
    }

    /// True when this basis is the computational basis of its target.
    pub fn is_computational(&self) -> bool {
        let reg = self.vectors[0].1.registry();
        self.vectors.iter().enumerate().all(|(i, (l, v))| {
            *l == reg.labels_of(i).join(",")
                && v.amplitudes().iter().enumerate().all(|(j, a)| {
                    (a - Amplitude::new(if i == j { 1.0 } else { 0.0 }, 0.0)).norm() <= ZERO_TOL
                })
        })
    }

    pub fn approx_eq(&self, other: &MeasurementBasis, tol: f64) -> bool {
        self.target == other.target
            && self.vectors.len() == other.vectors.len()
            && self
                .vectors
                .iter()
                .zip(&other.vectors)
                .all(|((la, va), (lb, vb))| la == lb && va.approx_eq(vb, tol))
    }
}

/// Born-rule outcome distribution, in basis order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub entries: Vec<(String, f64)>,
}

impl Distribution {
    pub fn get(&self, outcome: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(l, _)| l == outcome)
            .map(|(_, p)| *p)
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    /// Outcomes with probability at least [`ZERO_TOL`].
    pub fn possible(&self) -> impl Iterator<Item = (&str, f64)> {
        self.entries
            .iter()
            .filter(|(_, p)| *p >= ZERO_TOL)
            .map(|(l, p)| (l.as_str(), *p))
    }
}

/// Positions of the target subsystems inside a full registry, used to split
/// full indices into (target index, rest index).
struct Split {
    target_index: Vec<usize>,
    rest_index: Vec<usize>,
    rest_dim: usize,
}

impl Split {
    fn new(full: &SpaceRegistry, target: &[String]) -> Result<Split> {
        let positions = target
            .iter()
            .map(|n| {
                full.position(n)
                    .ok_or_else(|| Error::UnknownSubsystem(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        for (i, p) in positions.iter().enumerate() {
            if positions[..i].contains(p) {
                return Err(Error::InvalidBasis(format!(
                    "subsystem `{}` targeted twice",
                    target[i]
                )));
            }
        }
        let dims = full.dims();
        let rest: Vec<usize> = (0..dims.len()).filter(|i| !positions.contains(i)).collect();
        let rest_dim = rest.iter().map(|&i| dims[i]).product();
        let mut target_index = Vec::with_capacity(full.total_dim());
        let mut rest_index = Vec::with_capacity(full.total_dim());
        for idx in 0..full.total_dim() {
            let digits = full.digits_of(idx);
            target_index.push(
                positions
                    .iter()
                    .fold(0, |acc, &p| acc * dims[p] + digits[p]),
            );
            rest_index.push(rest.iter().fold(0, |acc, &p| acc * dims[p] + digits[p]));
        }
        Ok(Split {
            target_index,
            rest_index,
            rest_dim,
        })
    }
}

/// Unnormalized `(|v><v| ⊗ 1) state` together with its squared norm.
fn project(state: &StateVector, split: &Split, v: &StateVector) -> (StateVector, f64) {
    let va = v.amplitudes();
    let mut reduced = vec![Amplitude::new(0.0, 0.0); split.rest_dim];
    for (i, a) in state.amplitudes().iter().enumerate() {
        reduced[split.rest_index[i]] += va[split.target_index[i]].conj() * a;
    }
    let weight = reduced.iter().map(|c| c.norm_sqr()).sum();
    let amps = (0..state.amplitudes().len())
        .map(|i| va[split.target_index[i]] * reduced[split.rest_index[i]])
        .collect();
    (
        StateVector::from_raw(state.registry_arc().clone(), amps),
        weight,
    )
}

fn check_target(state: &StateVector, basis: &MeasurementBasis) -> Result<Split> {
    let split = Split::new(state.registry(), &basis.target)?;
    let expect = state.registry().restrict(&basis.target)?;
    if *basis.vectors[0].1.registry() != expect {
        return Err(Error::InvalidBasis(
            "basis labels do not match the state's subsystems".into(),
        ));
    }
    Ok(split)
}

pub fn outcome_probabilities(
    state: &StateVector,
    basis: &MeasurementBasis,
) -> Result<Distribution> {
    let split = check_target(state, basis)?;
    let norm = state.norm_sqr();
    let entries = basis
        .vectors
        .iter()
        .map(|(l, v)| (l.clone(), project(state, &split, v).1 / norm))
        .collect();
    Ok(Distribution { entries })
}

/// Unnormalized projection onto one outcome, with its probability weight.
pub fn project_outcome(
    state: &StateVector,
    basis: &MeasurementBasis,
    outcome: &str,
) -> Result<(StateVector, f64)> {
    let split = check_target(state, basis)?;
    let v = basis
        .vector(outcome)
        .ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))?;
    Ok(project(state, &split, v))
}

/// Projects onto `outcome` and renormalizes.
pub fn collapse(
    state: &StateVector,
    basis: &MeasurementBasis,
    outcome: &str,
) -> Result<StateVector> {
    let (projected, weight) = project_outcome(state, basis, outcome)?;
    if weight / state.norm_sqr() < ZERO_TOL {
        return Err(Error::ImpossibleOutcome(outcome.to_string()));
    }
    normalize(&projected)
}

/// Coefficients of a state in a product frame built from several bases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expansion {
    /// One entry per outcome tuple, first basis most significant.
    pub entries: Vec<(Vec<String>, Amplitude)>,
}

impl Expansion {
    pub fn get(&self, outcomes: &[&str]) -> Option<Amplitude> {
        self.entries
            .iter()
            .find(|(k, _)| k.iter().map(String::as_str).eq(outcomes.iter().copied()))
            .map(|(_, a)| *a)
    }
}

pub fn rewrite_in_basis(state: &StateVector, bases: &[MeasurementBasis]) -> Result<Expansion> {
    let reg = state.registry();
    let mut covered: Vec<&str> = Vec::new();
    for b in bases {
        for t in b.target() {
            if covered.contains(&t.as_str()) {
                return Err(Error::Coverage(format!("subsystem `{t}` covered twice")));
            }
            if reg.position(t).is_none() {
                return Err(Error::UnknownSubsystem(t.clone()));
            }
            covered.push(t);
        }
    }
    if covered.len() != reg.len() {
        let missing: Vec<&str> = reg
            .subsystems()
            .iter()
            .map(|s| s.name.as_str())
            .filter(|n| !covered.contains(n))
            .collect();
        return Err(Error::Coverage(format!(
            "not covered: {}",
            missing.join(", ")
        )));
    }
    let splits = bases
        .iter()
        .map(|b| check_target(state, b))
        .collect::<Result<Vec<_>>>()?;

    let sizes: Vec<usize> = bases.iter().map(MeasurementBasis::len).collect();
    let total: usize = sizes.iter().product();
    let mut entries = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rem = flat;
        let mut choice = vec![0; bases.len()];
        for (slot, &n) in choice.iter_mut().zip(&sizes).rev() {
            *slot = rem % n;
            rem /= n;
        }
        let coef = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                bases
                    .iter()
                    .zip(&splits)
                    .zip(&choice)
                    .fold(*a, |acc, ((b, s), &k)| {
                        acc * b.vectors[k].1.amplitudes()[s.target_index[i]].conj()
                    })
            })
            .sum();
        let labels = bases
            .iter()
            .zip(&choice)
            .map(|(b, &k)| b.vectors[k].0.clone())
            .collect();
        entries.push((labels, coef));
    }
    Ok(Expansion { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{superpose, Subsystem};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(x: f64) -> Amplitude {
        Amplitude::new(x, 0.0)
    }

    fn qubits(names: &[&str]) -> Arc<SpaceRegistry> {
        Arc::new(
            SpaceRegistry::new(
                names
                    .iter()
                    .map(|n| Subsystem::new(*n, ["u", "d"]))
                    .collect(),
            )
            .unwrap(),
        )
    }

    fn singlet() -> StateVector {
        let r = qubits(&["a", "b"]);
        StateVector::from_amplitudes(r, vec![c(0.0), c(FRAC_1_SQRT_2), c(-FRAC_1_SQRT_2), c(0.0)])
            .unwrap()
    }

    fn z(reg: &SpaceRegistry, name: &str) -> MeasurementBasis {
        MeasurementBasis::computational(reg, &[name.to_string()]).unwrap()
    }

    #[test]
    fn singlet_marginal() {
        let s = singlet();
        let d = outcome_probabilities(&s, &z(s.registry(), "a")).unwrap();
        assert!((d.get("u").unwrap() - 0.5).abs() < 1e-12);
        assert!((d.get("d").unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn singlet_collapse_gives_anticorrelation() {
        let s = singlet();
        let after = collapse(&s, &z(s.registry(), "a"), "u").unwrap();
        let d = outcome_probabilities(&after, &z(s.registry(), "b")).unwrap();
        assert!((d.get("d").unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_distribution_and_impossible_branch() {
        let r = Arc::new(SpaceRegistry::new(vec![Subsystem::new("coin", ["h", "t"])]).unwrap());
        let h = basis_state(&r, &["h"]).unwrap();
        let b = z(&r, "coin");
        let d = outcome_probabilities(&h, &b).unwrap();
        assert_eq!(d.get("h"), Some(1.0));
        assert_eq!(d.get("t"), Some(0.0));
        let err = collapse(&h, &b, "t").unwrap_err();
        assert!(err.to_string().contains("impossible branch"));

        let t = basis_state(&r, &["t"]).unwrap();
        let coin = superpose(&[
            (c((1.0f64 / 3.0).sqrt()), &h),
            (c((2.0f64 / 3.0).sqrt()), &t),
        ])
        .unwrap();
        assert!(collapse(&coin, &b, "t").unwrap().approx_eq(&t, 1e-12));
    }

    #[test]
    fn right_state_in_z_basis() {
        let r = qubits(&["s"]);
        let right =
            StateVector::from_amplitudes(r.clone(), vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)])
                .unwrap();
        let e = rewrite_in_basis(&right, &[z(&r, "s")]).unwrap();
        assert!((e.get(&["u"]).unwrap() - c(FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!((e.get(&["d"]).unwrap() - c(FRAC_1_SQRT_2)).norm() < 1e-12);
    }

    #[test]
    fn basis_state_in_own_basis() {
        let r = qubits(&["a", "b"]);
        let v = basis_state(&r, &["d", "u"]).unwrap();
        let e = rewrite_in_basis(&v, &[z(&r, "a"), z(&r, "b")]).unwrap();
        for (k, a) in &e.entries {
            let expect = if k == &["d", "u"] { 1.0 } else { 0.0 };
            assert!((a - c(expect)).norm() < 1e-12);
        }
    }

    #[test]
    fn coverage_errors() {
        let s = singlet();
        let a = z(s.registry(), "a");
        assert!(matches!(
            rewrite_in_basis(&s, std::slice::from_ref(&a)),
            Err(Error::Coverage(_))
        ));
        assert!(matches!(
            rewrite_in_basis(&s, &[a.clone(), a]),
            Err(Error::Coverage(_))
        ));
    }

    #[test]
    fn basis_validation() {
        let r = qubits(&["s"]);
        let u = basis_state(&r, &["u"]).unwrap();
        let right =
            StateVector::from_amplitudes(r.clone(), vec![c(FRAC_1_SQRT_2), c(FRAC_1_SQRT_2)])
                .unwrap();
        let err = MeasurementBasis::new(
            vec!["s".into()],
            vec![("a".into(), u.clone()), ("b".into(), right)],
        );
        assert!(matches!(err, Err(Error::InvalidBasis(_))));
        let err = MeasurementBasis::new(vec!["s".into()], vec![("a".into(), u)]);
        assert!(matches!(err, Err(Error::InvalidBasis(_))));
        assert!(z(&r, "s").is_computational());
    }

    #[test]
    fn target_outside_registry() {
        let s = singlet();
        let other = qubits(&["x"]);
        assert!(outcome_probabilities(&s, &z(&other, "x")).is_err());
    }
}
