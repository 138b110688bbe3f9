use serde::{Deserialize, Serialize};

/// What a graph variable represents.
///
/// `CameraState` orders before `Landmark` so that the elimination order
/// puts landmarks last.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VariableKind {
    CameraState,
    Landmark,
}

/// Graph-wide variable identifier: `(kind, session, row, index)`.
///
/// The `(session, row)` pair scopes every variable to the row-session
/// it belongs to, so per-row graphs union into a joint graph without
/// renaming.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariableKey {
    pub kind: VariableKind,
    pub session: u32,
    pub row: u32,
    pub index: u32,
}

impl VariableKey {
    pub fn camera(session: u32, row: u32, index: u32) -> Self {
        VariableKey {
            kind: VariableKind::CameraState,
            session,
            row,
            index,
        }
    }

    pub fn landmark(session: u32, row: u32, index: u32) -> Self {
        VariableKey {
            kind: VariableKind::Landmark,
            session,
            row,
            index,
        }
    }
}
