//! Labeled finite-dimensional tensor-product spaces and dense state vectors.
//!
//! Amplitudes are stored densely in mixed-radix order: the first declared
//! subsystem is the most significant digit, the last one varies fastest. For a
//! registry `coin {h,t}` then `spin {u,d}` the layout is
//! `(h,u) (h,d) (t,u) (t,d)`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{EPS, ZERO_TOL};

pub type Amplitude = Complex64;

/// One factor of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Subsystem {
    pub name: String,
    pub labels: Vec<String>,
}

impl Subsystem {
    pub fn new<S: Into<String>, L: Into<String>>(
        name: S,
        labels: impl IntoIterator<Item = L>,
    ) -> Self {
        Subsystem {
            name: name.into(),
            labels: labels.into_iter().map(Into::into).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }
}

/// Ordered list of named subsystems with their outcome labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceRegistry {
    subsystems: Vec<Subsystem>,
}

impl SpaceRegistry {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        for (i, s) in subsystems.iter().enumerate() {
            if s.name.is_empty() {
                return Err(Error::InvalidRegistry("empty subsystem name".into()));
            }
            if subsystems[..i].iter().any(|o| o.name == s.name) {
                return Err(Error::InvalidRegistry(format!(
                    "duplicate subsystem `{}`",
                    s.name
                )));
            }
            if s.labels.is_empty() {
                return Err(Error::InvalidRegistry(format!(
                    "subsystem `{}` has no labels",
                    s.name
                )));
            }
            for (j, l) in s.labels.iter().enumerate() {
                if s.labels[..j].contains(l) {
                    return Err(Error::InvalidRegistry(format!(
                        "duplicate label `{l}` on subsystem `{}`",
                        s.name
                    )));
                }
            }
        }
        Ok(SpaceRegistry { subsystems })
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.name == name)
    }

    pub fn get(&self, name: &str) -> Option<&Subsystem> {
        self.subsystems.iter().find(|s| s.name == name)
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(Subsystem::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(Subsystem::dim).product()
    }

    /// Mixed-radix index of a label tuple given in registry order.
    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.subsystems.len());
        digits
            .iter()
            .zip(&self.subsystems)
            .fold(0, |acc, (&d, s)| acc * s.dim() + d)
    }

    /// Inverse of [`Self::index_of`].
    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.subsystems.len()];
        for (slot, s) in digits.iter_mut().zip(&self.subsystems).rev() {
            *slot = index % s.dim();
            index /= s.dim();
        }
        digits
    }

    pub fn labels_of(&self, index: usize) -> Vec<&str> {
        self.digits_of(index)
            .into_iter()
            .zip(&self.subsystems)
            .map(|(d, s)| s.labels[d].as_str())
            .collect()
    }

    /// Registry restricted to `names`, in the order given.
    pub fn restrict(&self, names: &[String]) -> Result<SpaceRegistry> {
        let subs = names
            .iter()
            .map(|n| {
                self.get(n)
                    .cloned()
                    .ok_or_else(|| Error::UnknownSubsystem(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        SpaceRegistry::new(subs)
    }
}

/// Normalized (or, transiently, unnormalized) amplitude vector over a registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StateVector {
    registry: Arc<SpaceRegistry>,
    amplitudes: Vec<Amplitude>,
}

impl StateVector {
    /// Builds a vector from raw amplitudes without normalizing.
    pub fn from_amplitudes(
        registry: Arc<SpaceRegistry>,
        amplitudes: Vec<Amplitude>,
    ) -> Result<Self> {
        if amplitudes.len() != registry.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: registry.total_dim(),
                found: amplitudes.len(),
            });
        }
        if amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NonFinite);
        }
        Ok(StateVector {
            registry,
            amplitudes,
        })
    }

    pub(crate) fn from_raw(registry: Arc<SpaceRegistry>, amplitudes: Vec<Amplitude>) -> Self {
        debug_assert_eq!(amplitudes.len(), registry.total_dim());
        StateVector {
            registry,
            amplitudes,
        }
    }

    pub fn zeros(registry: Arc<SpaceRegistry>) -> Self {
        let n = registry.total_dim();
        StateVector::from_raw(registry, vec![Amplitude::new(0.0, 0.0); n])
    }

    pub fn registry(&self) -> &SpaceRegistry {
        &self.registry
    }

    pub fn registry_arc(&self) -> &Arc<SpaceRegistry> {
        &self.registry
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Amplitude at the given label tuple (registry order).
    pub fn amplitude(&self, labels: &[&str]) -> Result<Amplitude> {
        if labels.len() != self.registry.len() {
            return Err(Error::DimensionMismatch {
                expected: self.registry.len(),
                found: labels.len(),
            });
        }
        let digits = labels
            .iter()
            .zip(self.registry.subsystems())
            .map(|(l, s)| {
                s.label_index(l).ok_or_else(|| Error::UnknownLabel {
                    subsystem: s.name.clone(),
                    label: l.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(self.amplitudes[self.registry.index_of(&digits)])
    }

    pub fn same_space(&self, other: &StateVector) -> bool {
        Arc::ptr_eq(&self.registry, &other.registry) || *self.registry == *other.registry
    }

    pub fn scale(&self, factor: Amplitude) -> StateVector {
        StateVector::from_raw(
            self.registry.clone(),
            self.amplitudes.iter().map(|a| a * factor).collect(),
        )
    }

    /// Euclidean distance between two vectors on the same space.
    pub fn distance(&self, other: &StateVector) -> Result<f64> {
        if !self.same_space(other) {
            return Err(Error::RegistryMismatch);
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Approximate equality of amplitudes, including registry equality.
    pub fn approx_eq(&self, other: &StateVector, tol: f64) -> bool {
        self.same_space(other)
            && self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .all(|(a, b)| (a - b).norm() <= tol)
    }

    /// Nonzero amplitudes with their label tuples, in index order.
    pub fn terms(&self) -> Vec<(Vec<&str>, Amplitude)> {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > ZERO_TOL)
            .map(|(i, a)| (self.registry.labels_of(i), *a))
            .collect()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() <= EPS
    }
}

impl fmt::Display for StateVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = self.terms();
        if terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (labels, a)) in terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if a.im.abs() <= ZERO_TOL {
                write!(f, "{:.6}", a.re)?;
            } else {
                write!(f, "({:.6}{:+.6}i)", a.re, a.im)?;
            }
            write!(f, "|{}>", labels.join(","))?;
        }
        Ok(())
    }
}

/// Unit vector with amplitude 1 at the given labels.
pub fn make_basis_state(
    registry: &Arc<SpaceRegistry>,
    labels: &BTreeMap<String, String>,
) -> Result<StateVector> {
    for name in labels.keys() {
        if registry.position(name).is_none() {
            return Err(Error::UnknownSubsystem(name.clone()));
        }
    }
    let digits = registry
        .subsystems()
        .iter()
        .map(|s| {
            let label = labels
                .get(&s.name)
                .ok_or_else(|| Error::MissingLabel(s.name.clone()))?;
            s.label_index(label).ok_or_else(|| Error::UnknownLabel {
                subsystem: s.name.clone(),
                label: label.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut v = StateVector::zeros(registry.clone());
    v.amplitudes[registry.index_of(&digits)] = Amplitude::new(1.0, 0.0);
    Ok(v)
}

/// Basis state from labels given in registry order.
pub fn basis_state(registry: &Arc<SpaceRegistry>, labels: &[&str]) -> Result<StateVector> {
    if labels.len() != registry.len() {
        return Err(Error::DimensionMismatch {
            expected: registry.len(),
            found: labels.len(),
        });
    }
    let map = registry
        .subsystems()
        .iter()
        .zip(labels)
        .map(|(s, l)| (s.name.clone(), l.to_string()))
        .collect();
    make_basis_state(registry, &map)
}

/// Normalized linear combination of states sharing one registry.
pub fn superpose(terms: &[(Amplitude, &StateVector)]) -> Result<StateVector> {
    let (_, first) = terms.first().ok_or(Error::ZeroVector)?;
    let mut acc = StateVector::zeros(first.registry.clone());
    for (c, v) in terms {
        if !v.same_space(first) {
            return Err(Error::RegistryMismatch);
        }
        for (slot, a) in acc.amplitudes.iter_mut().zip(&v.amplitudes) {
            *slot += c * a;
        }
    }
    normalize(&acc)
}

/// Tensor product; the combined registry lists `a`'s subsystems first.
pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    for s in b.registry.subsystems() {
        if a.registry.position(&s.name).is_some() {
            return Err(Error::NameClash(s.name.clone()));
        }
    }
    let subs = a
        .registry
        .subsystems()
        .iter()
        .chain(b.registry.subsystems())
        .cloned()
        .collect();
    let registry = Arc::new(SpaceRegistry::new(subs)?);
    let amplitudes = a
        .amplitudes
        .iter()
        .flat_map(|x| b.amplitudes.iter().map(move |y| x * y))
        .collect();
    Ok(StateVector::from_raw(registry, amplitudes))
}

/// `<a|b>`, conjugate-linear in `a`.
pub fn inner(a: &StateVector, b: &StateVector) -> Result<Amplitude> {
    if !a.same_space(b) {
        return Err(Error::RegistryMismatch);
    }
    Ok(a.amplitudes
        .iter()
        .zip(&b.amplitudes)
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Unit vectors (up to a few ulps) come back unchanged.
pub fn normalize(v: &StateVector) -> Result<StateVector> {
    let n = v.norm();
    if n.is_nan() || n < ZERO_TOL {
        return Err(Error::ZeroVector);
    }
    if (n - 1.0).abs() <= 4.0 * f64::EPSILON {
        return Ok(v.clone());
    }
    Ok(v.scale(Amplitude::new(1.0 / n, 0.0)))
}
