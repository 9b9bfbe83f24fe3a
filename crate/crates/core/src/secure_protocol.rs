//! Secure repair and secure reconstruction.
//!
//! Both protocols follow the same shape: download data from `d` helpers (or
//! `k` nodes), download the matching correlation hashes from the trusted
//! server, build a match/mismatch table, and apply a strict-majority rule
//! with threshold `b`:
//!
//! - repair: a helper whose column holds more than `b` mismatches is
//!   compromised;
//! - reconstruction: a node whose column holds more than `b` mismatched
//!   blocks is compromised.
//!
//! An honest participant can collect at most `b` marks (one per compromised
//! peer), so the strict `> b` threshold never accuses an honest node. Ties at
//! exactly `b` are inconclusive, not detections: a lone mismatch between two
//! parties cannot say which of them lied, and the protocols abort with a
//! report instead of guessing. Detected nodes are dropped as erasures and the
//! `(k', d')` back-off decodes from the remainder.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::field::{dot_product, FieldElement, FieldError, PrimeField, SymbolVector};
use crate::hashing::{HashError, HashStore};
use crate::pm_code::{
    repair_node, reconstruct_file, CrossSymbol, EncodingMatrix, NodeState, PmError, SymbolId,
    SystemParams,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("no trusted hash for pair ({0}, {1})")]
    MissingHash(SymbolId, SymbolId),
    #[error("{got} nodes exceed the adversary budget b = {budget}: {detected:?}")]
    TooManyDetected {
        detected: BTreeSet<usize>,
        budget: usize,
        got: usize,
    },
    #[error("detection inconclusive: {0}")]
    InconclusiveDetection(DetectionReport),
    #[error("only {got} clean helpers remain, need {needed}")]
    NotEnoughCleanHelpers { needed: usize, got: usize },
    #[error("only {got} clean nodes remain, need {needed}")]
    NotEnoughCleanNodes { needed: usize, got: usize },
    #[error("expected {expected} responses, got {got}")]
    WrongContactCount { expected: usize, got: usize },
    #[error("regenerated data for node {node} fails the trusted-hash self-check")]
    SelfCheckFailed { node: usize },
    #[error(transparent)]
    Pm(#[from] PmError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// One cell of a comparison table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellMark {
    Match,
    Mismatch,
    /// Diagonal / uncomputed cells.
    Blank,
}

impl fmt::Display for CellMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            CellMark::Match => 'v',
            CellMark::Mismatch => 'x',
            CellMark::Blank => '.',
        };
        write!(f, "{c}")
    }
}

/// Symmetric `d x d` grid comparing the hash of every pair of repair
/// downloads against the trusted value; the diagonal stays blank.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepairComparisonTable {
    failed: usize,
    helpers: Vec<usize>,
    marks: Vec<CellMark>,
}

impl RepairComparisonTable {
    pub fn failed(&self) -> usize {
        self.failed
    }

    pub fn helpers(&self) -> &[usize] {
        &self.helpers
    }

    fn ix(&self, h: usize) -> Option<usize> {
        self.helpers.iter().position(|&x| x == h)
    }

    pub fn mark_between(&self, h1: usize, h2: usize) -> CellMark {
        match (self.ix(h1), self.ix(h2)) {
            (Some(a), Some(b)) => self.marks[a * self.helpers.len() + b],
            _ => CellMark::Blank,
        }
    }

    pub fn column_mismatches(&self, h: usize) -> usize {
        let Some(col) = self.ix(h) else { return 0 };
        let n = self.helpers.len();
        (0..n)
            .filter(|&r| matches!(self.marks[r * n + col], CellMark::Mismatch))
            .count()
    }

    pub fn is_all_match(&self) -> bool {
        let n = self.helpers.len();
        (0..n).all(|r| {
            (0..n).all(|c| r == c || matches!(self.marks[r * n + c], CellMark::Match))
        })
    }
}

impl fmt::Display for RepairComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.helpers.len();
        write!(f, "      ")?;
        for h in &self.helpers {
            write!(f, " X_{}{}", h, self.failed)?;
        }
        writeln!(f)?;
        for (r, h) in self.helpers.iter().enumerate() {
            write!(f, "X_{}{} ", h, self.failed)?;
            for c in 0..n {
                write!(f, "   {} ", self.marks[r * n + c])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Outcome of a detection pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionReport {
    pub detected: BTreeSet<usize>,
    pub inconclusive: bool,
    /// Mismatches (or mismatched blocks) left among undetected participants.
    pub residual_mismatches: usize,
}

impl DetectionReport {
    pub fn clean() -> Self {
        DetectionReport {
            detected: BTreeSet::new(),
            inconclusive: false,
            residual_mismatches: 0,
        }
    }

    /// One-line structured record for reports and logs.
    pub fn to_record(&self, scenario: &str) -> String {
        let detected = if self.detected.is_empty() {
            "-".to_string()
        } else {
            self.detected
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "scenario={scenario}\tdetected={detected}\tinconclusive={}\tresidual={}",
            self.inconclusive, self.residual_mismatches
        )
    }
}

impl fmt::Display for DetectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_record("-"))
    }
}

/// Builds the repair comparison table: cell `(h1, h2)` matches iff the dot
/// product of the two downloaded symbols equals the trusted hash of
/// `(X_{h1,f}, X_{h2,f})`.
pub fn build_repair_table(
    field: PrimeField,
    failed: usize,
    responses: &[(usize, SymbolVector)],
    trusted: &BTreeMap<(SymbolId, SymbolId), FieldElement>,
) -> Result<RepairComparisonTable, ProtocolError> {
    let mut ids = Vec::with_capacity(responses.len());
    let mut seen = BTreeSet::new();
    for &(h, _) in responses {
        if !seen.insert(h) {
            return Err(PmError::DuplicateNode(h).into());
        }
        ids.push(SymbolId::new(h, failed)?);
    }
    let n = responses.len();
    let mut marks = vec![CellMark::Blank; n * n];
    for a in 0..n {
        for b in (a + 1)..n {
            let key = if ids[a] <= ids[b] {
                (ids[a], ids[b])
            } else {
                (ids[b], ids[a])
            };
            let trusted_hash = trusted
                .get(&key)
                .copied()
                .ok_or(ProtocolError::MissingHash(key.0, key.1))?;
            let computed = dot_product(field, &responses[a].1, &responses[b].1)?;
            let mark = if computed == trusted_hash {
                CellMark::Match
            } else {
                CellMark::Mismatch
            };
            marks[a * n + b] = mark;
            marks[b * n + a] = mark;
        }
    }
    Ok(RepairComparisonTable {
        failed,
        helpers: responses.iter().map(|&(h, _)| h).collect(),
        marks,
    })
}

/// Secure repair rule: any helper whose column holds more than `b`
/// mismatches is compromised. Residual mismatches among undetected helpers
/// make the outcome inconclusive.
pub fn detect_compromised_repair(
    table: &RepairComparisonTable,
    b: usize,
) -> Result<DetectionReport, ProtocolError> {
    let detected: BTreeSet<usize> = table
        .helpers
        .iter()
        .copied()
        .filter(|&h| table.column_mismatches(h) > b)
        .collect();
    if detected.len() > b {
        return Err(ProtocolError::TooManyDetected {
            got: detected.len(),
            detected,
            budget: b,
        });
    }
    let n = table.helpers.len();
    let mut residual = 0;
    for a in 0..n {
        for c in (a + 1)..n {
            if detected.contains(&table.helpers[a]) || detected.contains(&table.helpers[c]) {
                continue;
            }
            if matches!(table.marks[a * n + c], CellMark::Mismatch) {
                residual += 1;
            }
        }
    }
    Ok(DetectionReport {
        detected,
        inconclusive: residual > 0,
        residual_mismatches: residual,
    })
}

/// Secure repair: contact exactly `d` helpers, detect compromised ones via
/// the comparison table, drop them, and regenerate from the first `d'` clean
/// responses. The regenerated symbols are re-verified against the trusted
/// hashes before being accepted.
pub fn secure_repair(
    params: &SystemParams,
    psi: &EncodingMatrix,
    failed: usize,
    responses: &[(usize, SymbolVector)],
    store: &HashStore,
) -> Result<(NodeState, DetectionReport), ProtocolError> {
    if responses.len() != params.d() {
        return Err(ProtocolError::WrongContactCount {
            expected: params.d(),
            got: responses.len(),
        });
    }
    let ids: Vec<SymbolId> = responses
        .iter()
        .map(|&(h, _)| SymbolId::new(h, failed))
        .collect::<Result<_, _>>()?;
    let trusted = store.fetch_hashes(&ids)?;
    let table = build_repair_table(params.field(), failed, responses, &trusted)?;
    let report = detect_compromised_repair(&table, params.b())?;
    if report.inconclusive {
        return Err(ProtocolError::InconclusiveDetection(report));
    }
    let clean: Vec<(usize, SymbolVector)> = responses
        .iter()
        .filter(|(h, _)| !report.detected.contains(h))
        .cloned()
        .collect();
    if clean.len() < params.d_eff() {
        return Err(ProtocolError::NotEnoughCleanHelpers {
            needed: params.d_eff(),
            got: clean.len(),
        });
    }
    let node = repair_node(params, psi, failed, &clean)?;
    verify_node_against_store(params.field(), &node, store)?;
    Ok((node, report))
}

/// Post-repair self-check: every pair of regenerated symbols must agree with
/// the trusted hash store.
fn verify_node_against_store(
    field: PrimeField,
    node: &NodeState,
    store: &HashStore,
) -> Result<(), ProtocolError> {
    let stored = node.stored();
    for (i, x) in stored.iter().enumerate() {
        for y in &stored[i + 1..] {
            let trusted = store.get(x.id, y.id)?;
            if dot_product(field, &x.value, &y.value)? != trusted {
                return Err(ProtocolError::SelfCheckFailed {
                    node: node.node_id(),
                });
            }
        }
    }
    Ok(())
}

/// `k x k` grid of `alpha x alpha` blocks cross-checking the payloads of two
/// nodes; diagonal blocks are blank. A block is mismatched when it holds at
/// least one mismatch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconstructionBlockTable {
    nodes: Vec<usize>,
    alpha: usize,
    marks: Vec<CellMark>,
}

impl ReconstructionBlockTable {
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    fn ix(&self, node: usize) -> Option<usize> {
        self.nodes.iter().position(|&x| x == node)
    }

    fn cell_index(&self, i: usize, s: usize, j: usize, t: usize) -> usize {
        let row = i * self.alpha + s;
        let col = j * self.alpha + t;
        row * self.nodes.len() * self.alpha + col
    }

    /// Cell `(s, t)` of block `(i, j)`, by node id.
    pub fn mark(&self, node_i: usize, s: usize, node_j: usize, t: usize) -> CellMark {
        match (self.ix(node_i), self.ix(node_j)) {
            (Some(i), Some(j)) => self.marks[self.cell_index(i, s, j, t)],
            _ => CellMark::Blank,
        }
    }

    pub fn block_is_mismatched(&self, node_i: usize, node_j: usize) -> bool {
        let (Some(i), Some(j)) = (self.ix(node_i), self.ix(node_j)) else {
            return false;
        };
        if i == j {
            return false;
        }
        (0..self.alpha).any(|s| {
            (0..self.alpha)
                .any(|t| matches!(self.marks[self.cell_index(i, s, j, t)], CellMark::Mismatch))
        })
    }

    /// Mismatched blocks in the node's column (equal to its row count, since
    /// block `(i, j)` is the mark-transpose of block `(j, i)`).
    pub fn mismatched_blocks_for(&self, node: usize) -> usize {
        self.nodes
            .iter()
            .filter(|&&other| other != node && self.block_is_mismatched(other, node))
            .count()
    }

    pub fn is_all_match(&self) -> bool {
        self.nodes.iter().all(|&i| self.mismatched_blocks_for(i) == 0)
    }
}

impl fmt::Display for ReconstructionBlockTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, ni) in self.nodes.iter().enumerate() {
            for s in 0..self.alpha {
                for (j, _) in self.nodes.iter().enumerate() {
                    for t in 0..self.alpha {
                        write!(f, "{}", self.marks[self.cell_index(i, s, j, t)])?;
                    }
                    write!(f, " ")?;
                }
                writeln!(f)?;
            }
            if i + 1 < self.nodes.len() {
                writeln!(f, "-- node {ni} rows above --")?;
            }
        }
        Ok(())
    }
}

/// Builds the reconstruction block table from full node payloads.
///
/// Cells pairing two distinct symbol ids compare the recomputed dot product
/// against the trusted hash. When the two nodes present copies of the same
/// shared symbol `X_ij = X_ji` (where no pairwise hash exists), the copies
/// are compared for equality instead.
pub fn build_reconstruction_table(
    field: PrimeField,
    payloads: &[NodeState],
    trusted: &BTreeMap<(SymbolId, SymbolId), FieldElement>,
) -> Result<ReconstructionBlockTable, ProtocolError> {
    let mut seen = BTreeSet::new();
    for p in payloads {
        if !seen.insert(p.node_id()) {
            return Err(PmError::DuplicateNode(p.node_id()).into());
        }
    }
    let k = payloads.len();
    let alpha = payloads.first().map_or(0, |p| p.stored().len());
    for p in payloads {
        if p.stored().len() != alpha {
            return Err(PmError::MalformedNode {
                node: p.node_id(),
                expected: alpha,
                got: p.stored().len(),
            }
            .into());
        }
    }
    let mut table = ReconstructionBlockTable {
        nodes: payloads.iter().map(NodeState::node_id).collect(),
        alpha,
        marks: vec![CellMark::Blank; (k * alpha) * (k * alpha)],
    };
    for i in 0..k {
        for j in (i + 1)..k {
            for s in 0..alpha {
                for t in 0..alpha {
                    let xs: &CrossSymbol = &payloads[i].stored()[s];
                    let xt: &CrossSymbol = &payloads[j].stored()[t];
                    let mark = if xs.id == xt.id {
                        // Two copies of the same symbol: direct comparison.
                        if xs.value == xt.value {
                            CellMark::Match
                        } else {
                            CellMark::Mismatch
                        }
                    } else {
                        let key = if xs.id <= xt.id {
                            (xs.id, xt.id)
                        } else {
                            (xt.id, xs.id)
                        };
                        let trusted_hash = trusted
                            .get(&key)
                            .copied()
                            .ok_or(ProtocolError::MissingHash(key.0, key.1))?;
                        if dot_product(field, &xs.value, &xt.value)? == trusted_hash {
                            CellMark::Match
                        } else {
                            CellMark::Mismatch
                        }
                    };
                    let a = table.cell_index(i, s, j, t);
                    let b = table.cell_index(j, t, i, s);
                    table.marks[a] = mark;
                    table.marks[b] = mark;
                }
            }
        }
    }
    Ok(table)
}

/// Secure reconstruction rule: any node with more than `b` mismatched blocks
/// in its row or column is compromised.
pub fn detect_compromised_reconstruction(
    table: &ReconstructionBlockTable,
    b: usize,
) -> Result<DetectionReport, ProtocolError> {
    let detected: BTreeSet<usize> = table
        .nodes
        .iter()
        .copied()
        .filter(|&node| table.mismatched_blocks_for(node) > b)
        .collect();
    if detected.len() > b {
        return Err(ProtocolError::TooManyDetected {
            got: detected.len(),
            detected,
            budget: b,
        });
    }
    let mut residual = 0;
    for (i, &ni) in table.nodes.iter().enumerate() {
        for &nj in &table.nodes[i + 1..] {
            if detected.contains(&ni) || detected.contains(&nj) {
                continue;
            }
            if table.block_is_mismatched(ni, nj) {
                residual += 1;
            }
        }
    }
    Ok(DetectionReport {
        detected,
        inconclusive: residual > 0,
        residual_mismatches: residual,
    })
}

/// Secure reconstruction: contact exactly `k` nodes, detect compromised ones
/// via the block table, discard them, and decode from the lowest-numbered
/// `k'` clean nodes.
pub fn secure_reconstruct(
    params: &SystemParams,
    psi: &EncodingMatrix,
    payloads: &[NodeState],
    store: &HashStore,
) -> Result<(Vec<SymbolVector>, DetectionReport), ProtocolError> {
    if payloads.len() != params.k() {
        return Err(ProtocolError::WrongContactCount {
            expected: params.k(),
            got: payloads.len(),
        });
    }
    let mut ids: Vec<SymbolId> = payloads
        .iter()
        .flat_map(|p| p.stored().iter().map(|s| s.id))
        .collect();
    ids.sort();
    ids.dedup();
    let trusted = store.fetch_hashes(&ids)?;
    let table = build_reconstruction_table(params.field(), payloads, &trusted)?;
    let report = detect_compromised_reconstruction(&table, params.b())?;
    if report.inconclusive {
        return Err(ProtocolError::InconclusiveDetection(report));
    }
    let mut clean: Vec<&NodeState> = payloads
        .iter()
        .filter(|p| !report.detected.contains(&p.node_id()))
        .collect();
    clean.sort_by_key(|p| p.node_id());
    if clean.len() < params.k_eff() {
        return Err(ProtocolError::NotEnoughCleanNodes {
            needed: params.k_eff(),
            got: clean.len(),
        });
    }
    let selected: Vec<NodeState> = clean
        .into_iter()
        .take(params.k_eff())
        .cloned()
        .collect();
    let file = reconstruct_file(params, psi, &selected)?;
    Ok((file, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::SymbolVector;
    use crate::pm_code::{build_encoding_matrix, encode_system, EncodedSystem};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn secured_params(v: usize) -> SystemParams {
        SystemParams::new(7, 4, 5, 1, 11, v).unwrap()
    }

    fn encode_random(
        params: &SystemParams,
        seed: u64,
    ) -> (Vec<SymbolVector>, EncodedSystem, HashStore) {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let file: Vec<SymbolVector> = (0..params.file_size())
            .map(|_| SymbolVector::random(params.v(), params.field(), &mut rng))
            .collect();
        let sys = encode_system(params, &file).unwrap();
        let store = HashStore::build(params, &sys.symbols).unwrap();
        (file, sys, store)
    }

    fn repair_responses(
        sys: &EncodedSystem,
        failed: usize,
        helpers: &[usize],
    ) -> Vec<(usize, SymbolVector)> {
        helpers
            .iter()
            .map(|&h| {
                let id = SymbolId::new(h, failed).unwrap();
                (h, sys.symbol(id).unwrap().value.clone())
            })
            .collect()
    }

    fn hand_table(failed: usize, helpers: Vec<usize>, mismatch_pairs: &[(usize, usize)]) -> RepairComparisonTable {
        let n = helpers.len();
        let mut marks = vec![CellMark::Blank; n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    marks[a * n + b] = CellMark::Match;
                }
            }
        }
        for &(h1, h2) in mismatch_pairs {
            let a = helpers.iter().position(|&x| x == h1).unwrap();
            let b = helpers.iter().position(|&x| x == h2).unwrap();
            marks[a * n + b] = CellMark::Mismatch;
            marks[b * n + a] = CellMark::Mismatch;
        }
        RepairComparisonTable {
            failed,
            helpers,
            marks,
        }
    }

    #[test]
    fn clean_repair_table_all_match() {
        let p = secured_params(4);
        let (_, sys, store) = encode_random(&p, 1);
        let helpers = [1, 3, 4, 5, 6];
        let responses = repair_responses(&sys, 2, &helpers);
        let ids: Vec<SymbolId> = helpers
            .iter()
            .map(|&h| SymbolId::new(h, 2).unwrap())
            .collect();
        let trusted = store.fetch_hashes(&ids).unwrap();
        let table = build_repair_table(p.field(), 2, &responses, &trusted).unwrap();
        assert!(table.is_all_match());
        let report = detect_compromised_repair(&table, p.b()).unwrap();
        assert_eq!(report, DetectionReport::clean());
    }

    #[test]
    fn corrupted_helper_column_fully_mismatched() {
        let p = secured_params(4);
        let (_, sys, store) = encode_random(&p, 2);
        let helpers = [1, 3, 4, 5, 6];
        let mut responses = repair_responses(&sys, 2, &helpers);
        // Helper 3 adds a random nonzero error to X_32.
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let e = SymbolVector::random_nonzero(p.v(), p.field(), &mut rng);
        responses[1].1 = responses[1].1.add(&e, p.field()).unwrap();

        let ids: Vec<SymbolId> = helpers
            .iter()
            .map(|&h| SymbolId::new(h, 2).unwrap())
            .collect();
        let trusted = store.fetch_hashes(&ids).unwrap();
        let table = build_repair_table(p.field(), 2, &responses, &trusted).unwrap();
        for &h in &[1, 4, 5, 6] {
            assert_eq!(table.mark_between(3, h), CellMark::Mismatch);
        }
        assert_eq!(table.mark_between(1, 4), CellMark::Match);
        assert_eq!(table.column_mismatches(3), 4);

        let report = detect_compromised_repair(&table, p.b()).unwrap();
        assert_eq!(report.detected, BTreeSet::from([3]));
        assert!(!report.inconclusive);
    }

    #[test]
    fn truthful_adversary_is_invisible() {
        // A compromised helper that sends the true symbol produces no marks.
        let p = secured_params(4);
        let (_, sys, store) = encode_random(&p, 3);
        let helpers = [1, 3, 4, 5, 6];
        let responses = repair_responses(&sys, 2, &helpers);
        let ids: Vec<SymbolId> = helpers
            .iter()
            .map(|&h| SymbolId::new(h, 2).unwrap())
            .collect();
        let trusted = store.fetch_hashes(&ids).unwrap();
        let table = build_repair_table(p.field(), 2, &responses, &trusted).unwrap();
        assert!(table.is_all_match());
    }

    #[test]
    fn detector_rules_on_hand_built_tables() {
        // Column 3 with four mismatches at b = 1: detected.
        let t = hand_table(2, vec![1, 3, 4, 5, 6], &[(3, 1), (3, 4), (3, 5), (3, 6)]);
        let report = detect_compromised_repair(&t, 1).unwrap();
        assert_eq!(report.detected, BTreeSet::from([3]));
        assert!(!report.inconclusive);
        assert_eq!(report.residual_mismatches, 0);

        // All-match: nothing detected.
        let t = hand_table(2, vec![1, 3, 4, 5, 6], &[]);
        let report = detect_compromised_repair(&t, 1).unwrap();
        assert!(report.detected.is_empty());
        assert!(!report.inconclusive);

        // Single mismatch between helpers 1 and 4: a tie at b = 1, so the
        // outcome is inconclusive with no detection.
        let t = hand_table(2, vec![1, 3, 4, 5, 6], &[(1, 4)]);
        let report = detect_compromised_repair(&t, 1).unwrap();
        assert!(report.detected.is_empty());
        assert!(report.inconclusive);
        assert_eq!(report.residual_mismatches, 1);

        // Two saturated columns at b = 1 contradict the budget.
        let t = hand_table(
            2,
            vec![1, 3, 4, 5, 6],
            &[(3, 1), (3, 4), (3, 5), (3, 6), (1, 4), (1, 5), (1, 6)],
        );
        assert!(matches!(
            detect_compromised_repair(&t, 1),
            Err(ProtocolError::TooManyDetected { .. })
        ));
    }

    #[test]
    fn inconclusive_tie_constructed_from_corruption() {
        // Corrupt X_32 with an error orthogonal to all but one honest
        // response, leaving exactly one mismatch: detection must refuse to
        // guess.
        let p = secured_params(8);
        let (_, sys, store) = encode_random(&p, 5);
        let helpers = [1usize, 3, 4, 5, 6];
        let mut responses = repair_responses(&sys, 2, &helpers);

        // Build e orthogonal to X_12, X_42, X_52 but (generically) not X_62.
        let f = p.field();
        let constraints: Vec<&SymbolVector> = [1usize, 4, 5]
            .iter()
            .map(|&h| &sys.symbol(SymbolId::new(h, 2).unwrap()).unwrap().value)
            .collect();
        let mat = crate::field::FieldMatrix::from_rows(
            constraints
                .iter()
                .map(|s| s.components().to_vec())
                .collect(),
        )
        .unwrap();
        let basis = mat.nullspace(f);
        let x62 = &sys.symbol(SymbolId::new(6, 2).unwrap()).unwrap().value;
        let e = basis
            .iter()
            .map(|b| SymbolVector::new(b.clone()))
            .find(|e| {
                !e.is_zero() && !dot_product(f, e, x62).unwrap().is_zero()
            })
            .expect("nullspace has a vector non-orthogonal to X_62");
        responses[1].1 = responses[1].1.add(&e, f).unwrap();

        let ids: Vec<SymbolId> = helpers
            .iter()
            .map(|&h| SymbolId::new(h, 2).unwrap())
            .collect();
        let trusted = store.fetch_hashes(&ids).unwrap();
        let table = build_repair_table(f, 2, &responses, &trusted).unwrap();
        assert_eq!(table.column_mismatches(3), 1);
        assert_eq!(table.column_mismatches(6), 1);
        let report = detect_compromised_repair(&table, p.b()).unwrap();
        assert!(report.detected.is_empty());
        assert!(report.inconclusive);

        // The full protocol aborts rather than repairing from suspect data.
        let err = secure_repair(&p, &build_encoding_matrix(&p), 2, &responses, &store)
            .unwrap_err();
        assert!(matches!(err, ProtocolError::InconclusiveDetection(_)));
    }

    #[test]
    fn secure_repair_drops_adversary_and_regenerates_exactly() {
        let p = secured_params(4);
        let psi = build_encoding_matrix(&p);
        let mut clean_detections = 0;
        let trials = 20u64;
        for seed in 0..trials {
            let (_, sys, store) = encode_random(&p, 100 + seed);
            let helpers = [1, 3, 4, 5, 6];
            let mut responses = repair_responses(&sys, 2, &helpers);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let e = SymbolVector::random_nonzero(p.v(), p.field(), &mut rng);
            responses[1].1 = responses[1].1.add(&e, p.field()).unwrap();

            match secure_repair(&p, &psi, 2, &responses, &store) {
                Ok((node, report)) => {
                    // Whenever repair completes, the adversary was dropped and
                    // the regenerated storage is exact.
                    assert_eq!(report.detected, BTreeSet::from([3]));
                    assert_eq!(&node, sys.node(2).unwrap());
                    clean_detections += 1;
                }
                // Accidental orthogonality can leave a tie or slip past the
                // table and hit the self-check; both are safe outcomes.
                Err(ProtocolError::InconclusiveDetection(_))
                | Err(ProtocolError::SelfCheckFailed { .. }) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        assert!(
            clean_detections >= 16,
            "only {clean_detections}/{trials} clean detections"
        );
    }

    #[test]
    fn secure_repair_without_adversary_matches_plain_repair() {
        let p = secured_params(2);
        let psi = build_encoding_matrix(&p);
        let (_, sys, store) = encode_random(&p, 7);
        let responses = repair_responses(&sys, 4, &[1, 2, 3, 5, 6]);
        let (node, report) = secure_repair(&p, &psi, 4, &responses, &store).unwrap();
        assert_eq!(report, DetectionReport::clean());
        assert_eq!(&node, sys.node(4).unwrap());

        let plain = repair_node(&p, &psi, 4, &responses[..4]).unwrap();
        assert_eq!(node, plain);

        assert!(matches!(
            secure_repair(&p, &psi, 4, &responses[..4], &store),
            Err(ProtocolError::WrongContactCount {
                expected: 5,
                got: 4
            })
        ));
    }

    #[test]
    fn zeroing_adversary_detected_on_random_files() {
        // Deleting the symbol is caught whenever the true hashes against the
        // honest downloads are nonzero; misses need accidental orthogonality.
        let p = secured_params(4);
        let psi = build_encoding_matrix(&p);
        let mut detections = 0;
        let trials = 200;
        for seed in 0..trials {
            let (_, sys, store) = encode_random(&p, 1000 + seed);
            let mut responses = repair_responses(&sys, 2, &[1, 3, 4, 5, 6]);
            responses[1].1 = SymbolVector::zero(p.v());
            match secure_repair(&p, &psi, 2, &responses, &store) {
                Ok((node, report)) => {
                    if report.detected == BTreeSet::from([3]) {
                        detections += 1;
                        assert_eq!(&node, sys.node(2).unwrap());
                    }
                }
                Err(ProtocolError::InconclusiveDetection(_)) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
        // Expected miss rate is at most ~1/q per pair; at q = 11 and four
        // pairs the detection rate stays overwhelming.
        assert!(
            detections as f64 >= trials as f64 * 0.8,
            "only {detections}/{trials} detections"
        );
    }

    #[test]
    fn clean_reconstruction_table_all_match() {
        let p = secured_params(4);
        let (file, sys, store) = encode_random(&p, 11);
        let psi = build_encoding_matrix(&p);
        let payloads: Vec<NodeState> = [1usize, 2, 3, 4]
            .into_iter()
            .map(|i| sys.node(i).unwrap().clone())
            .collect();
        let (out, report) = secure_reconstruct(&p, &psi, &payloads, &store).unwrap();
        assert_eq!(out, file);
        assert_eq!(report, DetectionReport::clean());
    }

    #[test]
    fn corrupted_node_loses_reconstruction() {
        let p = secured_params(4);
        let psi = build_encoding_matrix(&p);
        for seed in 0..20u64 {
            let (file, sys, store) = encode_random(&p, 2000 + seed);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let mut payloads: Vec<NodeState> = [1usize, 2, 3, 4]
                .into_iter()
                .map(|i| sys.node(i).unwrap().clone())
                .collect();
            // Node 3 corrupts all four of its symbols with random errors.
            let corrupted: Vec<CrossSymbol> = payloads[2]
                .stored()
                .iter()
                .map(|s| {
                    let e = SymbolVector::random_nonzero(p.v(), p.field(), &mut rng);
                    CrossSymbol {
                        id: s.id,
                        value: s.value.add(&e, p.field()).unwrap(),
                    }
                })
                .collect();
            payloads[2] = NodeState::from_symbols(3, corrupted);

            match secure_reconstruct(&p, &psi, &payloads, &store) {
                Ok((out, report)) => {
                    assert_eq!(report.detected, BTreeSet::from([3]));
                    assert_eq!(out, file);
                }
                Err(ProtocolError::InconclusiveDetection(_)) => {
                    // Possible only through chance hash collisions; accept.
                }
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn single_corrupted_symbol_localizes_to_one_row_and_column() {
        let p = secured_params(4);
        let (_, sys, store) = encode_random(&p, 31);
        let mut payloads: Vec<NodeState> = [1usize, 2, 3, 4]
            .into_iter()
            .map(|i| sys.node(i).unwrap().clone())
            .collect();
        let mut rng = ChaCha12Rng::seed_from_u64(31);
        let mut symbols: Vec<CrossSymbol> = payloads[2].stored().to_vec();
        // Corrupt only X_35 on node 3 (partner 5 is not contacted).
        let slot = symbols
            .iter()
            .position(|s| s.id == SymbolId::new(3, 5).unwrap())
            .unwrap();
        let e = SymbolVector::random_nonzero(p.v(), p.field(), &mut rng);
        symbols[slot].value = symbols[slot].value.add(&e, p.field()).unwrap();
        payloads[2] = NodeState::from_symbols(3, symbols);

        let ids: Vec<SymbolId> = payloads
            .iter()
            .flat_map(|pl| pl.stored().iter().map(|s| s.id))
            .collect();
        let trusted = store.fetch_hashes(&ids).unwrap();
        let table = build_reconstruction_table(p.field(), &payloads, &trusted).unwrap();
        for &i in &[1usize, 2, 4] {
            for &j in &[1usize, 2, 4] {
                if i != j {
                    assert!(!table.block_is_mismatched(i, j), "block ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn reconstruction_detector_tie_is_inconclusive() {
        // Hand-build a block table with exactly one mismatched block pair.
        let p = secured_params(2);
        let (_, sys, store) = encode_random(&p, 37);
        let payloads: Vec<NodeState> = [1usize, 2, 3, 4]
            .into_iter()
            .map(|i| sys.node(i).unwrap().clone())
            .collect();
        let ids: Vec<SymbolId> = payloads
            .iter()
            .flat_map(|pl| pl.stored().iter().map(|s| s.id))
            .collect();
        let trusted = store.fetch_hashes(&ids).unwrap();
        let mut table = build_reconstruction_table(p.field(), &payloads, &trusted).unwrap();
        // Flip one cell of block (2, 4) to a mismatch.
        let a = table.cell_index(1, 0, 3, 0);
        let b = table.cell_index(3, 0, 1, 0);
        table.marks[a] = CellMark::Mismatch;
        table.marks[b] = CellMark::Mismatch;

        let report = detect_compromised_reconstruction(&table, p.b()).unwrap();
        assert!(report.detected.is_empty());
        assert!(report.inconclusive);
        assert_eq!(report.residual_mismatches, 1);
    }
}
