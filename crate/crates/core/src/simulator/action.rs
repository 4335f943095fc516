use crate::model::ChainPlacement;

use super::SimError;

/// `m x n` binary action. Row `i` is one-hot on the anchor server proposed for
/// the `i`-th pending chain, or all zero to defer it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Action {
    nodes: usize,
    rows: Vec<Option<usize>>,
}

impl Action {
    /// Defers every row.
    pub fn defer(rows: usize, nodes: usize) -> Self {
        Action { nodes, rows: vec![None; rows] }
    }

    pub fn from_rows(nodes: usize, rows: Vec<Option<usize>>) -> Result<Self, SimError> {
        if let Some(p) = rows.iter().flatten().find(|&&p| p >= nodes) {
            return Err(SimError::Protocol(format!("anchor {p} outside 0..{nodes}")));
        }
        Ok(Action { nodes, rows })
    }

    /// Parses a 0/1 matrix, requiring exactly `rows x nodes` entries and at most one 1 per row.
    pub fn from_matrix(matrix: &[Vec<u8>], rows: usize, nodes: usize) -> Result<Self, SimError> {
        if matrix.len() != rows {
            return Err(SimError::Protocol(format!("action has {} rows, expected {rows}", matrix.len())));
        }
        let mut out = Vec::with_capacity(rows);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != nodes {
                return Err(SimError::Protocol(format!("action row {i} has {} columns, expected {nodes}", row.len())));
            }
            if row.iter().any(|&v| v > 1) {
                return Err(SimError::Protocol(format!("action row {i} is not binary")));
            }
            let mut ones = row.iter().enumerate().filter(|(_, &v)| v == 1).map(|(p, _)| p);
            let anchor = ones.next();
            if ones.next().is_some() {
                return Err(SimError::Protocol(format!("action row {i} has more than one entry set")));
            }
            out.push(anchor);
        }
        Ok(Action { nodes, rows: out })
    }

    pub fn to_matrix(&self) -> Vec<Vec<u8>> {
        self.rows
            .iter()
            .map(|r| {
                let mut row = vec![0u8; self.nodes];
                if let Some(p) = r {
                    row[*p] = 1;
                }
                row
            })
            .collect()
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn rows(&self) -> &[Option<usize>] {
        &self.rows
    }
}

/// What a policy wants done with one pending chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Defer,
    /// Anchor only; the environment completes the chain with greedy DFS.
    Anchor(usize),
    /// A full placement computed by the policy itself.
    Place(ChainPlacement),
}

impl Decision {
    pub fn anchor(&self) -> Option<usize> {
        match self {
            Decision::Defer => None,
            Decision::Anchor(p) => Some(*p),
            Decision::Place(pl) => pl.first().copied(),
        }
    }
}
