use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a parameter is represented in the optimizer's coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    /// Positive parameter stored as its logarithm.
    Log,
    Identity,
}

impl Transform {
    pub fn forward(self, v: f64) -> f64 {
        match self {
            Transform::Log => v.ln(),
            Transform::Identity => v,
        }
    }

    pub fn inverse(self, z: f64) -> f64 {
        match self {
            Transform::Log => z.exp(),
            Transform::Identity => z,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parameter {
    pub name: String,
    /// Value in natural units.
    pub value: f64,
    pub transform: Transform,
    pub frozen: bool,
}

/// Named model parameters with transforms and frozen flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterVector {
    entries: Vec<Parameter>,
}

impl ParameterVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, value: f64, transform: Transform, frozen: bool) -> Result<()> {
        let name = name.into();
        if !value.is_finite() || (transform == Transform::Log && value <= 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {value} is not valid for {transform:?}")));
        }
        if self.entries.iter().any(|e| e.name == name) {
            return Err(Error::InvalidParameter(format!("duplicate parameter {name}")));
        }
        self.entries.push(Parameter { name, value, transform, frozen });
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Parameter] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).map(|e| e.value)
    }

    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let e = self
            .entries
            .iter_mut()
            .find(|e| e.name == name)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown parameter {name}")))?;
        e.value = value;
        Ok(())
    }

    pub fn freeze(&mut self, name: &str, frozen: bool) {
        for e in self.entries.iter_mut().filter(|e| e.name == name) {
            e.frozen = frozen;
        }
    }

    /// Natural-unit values of entries whose name starts with `prefix`.
    pub fn values_with_prefix(&self, prefix: &str) -> Vec<f64> {
        self.entries.iter().filter(|e| e.name.starts_with(prefix)).map(|e| e.value).collect()
    }

    pub fn frozen_mask(&self) -> Vec<bool> {
        self.entries.iter().map(|e| e.frozen).collect()
    }

    /// Every entry in optimizer coordinates.
    pub fn pack(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.transform.forward(e.value)).collect()
    }

    /// Copy with values taken from optimizer coordinates. Frozen entries keep
    /// their stored value bit for bit.
    pub fn unpack(&self, packed: &[f64]) -> Result<Self> {
        if packed.len() != self.entries.len() {
            return Err(Error::DimensionMismatch { expected: self.entries.len(), got: packed.len() });
        }
        let entries = self
            .entries
            .iter()
            .zip(packed)
            .map(|(e, z)| Parameter {
                value: if e.frozen { e.value } else { e.transform.inverse(*z) },
                ..e.clone()
            })
            .collect();
        Ok(ParameterVector { entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ParameterVector {
        let mut p = ParameterVector::new();
        p.push("k.variance", 2.0, Transform::Log, false).unwrap();
        p.push("alpha", -1.5, Transform::Identity, true).unwrap();
        p.push("noise", 0.1, Transform::Log, false).unwrap();
        p
    }

    #[test]
    fn basic_access() {
        let mut p = sample();
        assert_eq!(p.get("alpha"), Some(-1.5));
        assert_eq!(p.frozen_mask(), vec![false, true, false]);
        assert!(p.push("noise", 1.0, Transform::Log, false).is_err());
        assert!(p.push("bad", -1.0, Transform::Log, false).is_err());
        p.set("noise", 0.2).unwrap();
        assert_eq!(p.values_with_prefix("k."), vec![2.0]);
    }

    #[test]
    fn frozen_entries_survive_unpack() {
        let p = sample();
        let q = p.unpack(&[0.0, 99.0, 0.0]).unwrap();
        assert_eq!(q.get("alpha").unwrap().to_bits(), (-1.5f64).to_bits());
        assert_eq!(q.get("k.variance"), Some(1.0));
    }

    proptest! {
        #[test]
        fn pack_unpack_roundtrip(z in prop::collection::vec(-30.0f64..30.0, 3)) {
            let p = sample();
            let q = p.unpack(&z).unwrap();
            let back = q.pack();
            prop_assert!((back[0] - z[0]).abs() < 1e-12);
            prop_assert!((back[2] - z[2]).abs() < 1e-12);
            // Positivity is structural.
            prop_assert!(q.get("k.variance").unwrap() > 0.0 && q.get("noise").unwrap() > 0.0);
            let again = q.unpack(&back).unwrap();
            for (a, b) in again.entries().iter().zip(q.entries()) {
                prop_assert!((a.value - b.value).abs() <= 1e-12 * b.value.abs().max(1.0));
            }
        }
    }
}
