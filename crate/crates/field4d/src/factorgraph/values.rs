use std::collections::BTreeMap;

use nalgebra::{DVectorView, Vector3};

use crate::sensors::CameraState;

use super::VariableKey;

/// A manifold-valued variable.
#[derive(Clone, Debug)]
pub enum Value {
    State(CameraState),
    Point(Vector3<f64>),
}

impl Value {
    /// Dimension of the local tangent space.
    pub fn dim(&self) -> usize {
        match self {
            Value::State(_) => CameraState::DIM,
            Value::Point(_) => 3,
        }
    }

    /// Manifold plus: rotation blocks via the exponential map, vector
    /// blocks by addition.
    pub fn retract(&self, delta: DVectorView<'_, f64>) -> Value {
        match self {
            Value::State(s) => Value::State(s.retract(delta)),
            Value::Point(p) => {
                Value::Point(p + Vector3::new(delta[0], delta[1], delta[2]))
            }
        }
    }

    pub fn as_state(&self) -> &CameraState {
        match self {
            Value::State(s) => s,
            Value::Point(_) => panic!("expected CameraState value"),
        }
    }

    pub fn as_point(&self) -> &Vector3<f64> {
        match self {
            Value::Point(p) => p,
            Value::State(_) => panic!("expected point value"),
        }
    }
}

/// Ordered assignment of values to variable keys. `BTreeMap` keeps the
/// elimination order deterministic (camera states first, landmarks
/// last).
#[derive(Clone, Debug, Default)]
pub struct Values {
    map: BTreeMap<VariableKey, Value>,
}

impl Values {
    pub fn new() -> Self {
        Values {
            map: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, key: VariableKey, value: Value) {
        self.map.insert(key, value);
    }

    pub fn get(&self, key: &VariableKey) -> Option<&Value> {
        self.map.get(key)
    }

    pub fn state(&self, key: &VariableKey) -> &CameraState {
        self.map[key].as_state()
    }

    pub fn point(&self, key: &VariableKey) -> &Vector3<f64> {
        self.map[key].as_point()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &VariableKey> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VariableKey, &Value)> {
        self.map.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&VariableKey, &mut Value)> {
        self.map.iter_mut()
    }

    /// Total tangent dimension over all variables.
    pub fn total_dim(&self) -> usize {
        self.map.values().map(Value::dim).sum()
    }
}
