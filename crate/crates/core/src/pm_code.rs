//! The `(n, k', d')` product-matrix MBR code in its cross-symbol
//! representation.
//!
//! Node `i` of the original product-matrix code stores the row `W_i = psi_i M`
//! for a Vandermonde row `psi_i` and a symmetric message matrix `M`. Here each
//! node instead stores `alpha` cross symbols `X_ij = psi_i M psi_j^t`, the
//! values it would send to its first `alpha` partners during their repair.
//! The two layouts are related by an invertible change of basis, so exact
//! repair and file reconstruction carry over, while every stored unit becomes
//! a pairwise-comparable symbol that the hashing layer can cross-check.
//!
//! To secure an `(n, k, d)` system against `b` compromised nodes the code is
//! instantiated with `k' = k - b` and `d' = d - b`; repair and reconstruction
//! still contact `d` and `k` nodes, and detected nodes are dropped as
//! erasures.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::field::{
    solve_square_system, FieldElement, FieldError, FieldMatrix, PrimeField, SymbolVector,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PmError {
    #[error("invalid parameters: {}", fmt_violations(.0))]
    InvalidParams(Vec<ParamViolation>),
    #[error("expected {expected} file symbols, got {got}")]
    WrongSymbolCount { expected: usize, got: usize },
    #[error("cross symbol requires two distinct nodes, got {0} twice")]
    SamePair(usize),
    #[error("node id {0} is out of range")]
    InvalidNodeId(usize),
    #[error("node id {0} appears more than once")]
    DuplicateNode(usize),
    #[error("helper {0} cannot serve in its own repair")]
    HelperIsFailed(usize),
    #[error("repair needs at least {needed} helper responses, got {got}")]
    NotEnoughHelpers { needed: usize, got: usize },
    #[error("reconstruction needs at least {needed} nodes, got {got}")]
    NotEnoughNodes { needed: usize, got: usize },
    #[error("node {node} holds {got} symbols, expected {expected}")]
    MalformedNode {
        node: usize,
        expected: usize,
        got: usize,
    },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParamViolation {
    /// `b >= k/2`: past this threshold the adversary can act omnisciently.
    AdversaryBudget { b: usize, k: usize },
    /// `q <= n`: evaluation points 1..n must be distinct in the field.
    ModulusTooSmall { q: u64, n: usize },
    ModulusNotPrime { q: u64 },
    /// `d < k`.
    RepairBelowReconstruction { d: usize, k: usize },
    /// `d > n - 1`.
    RepairDegreeTooLarge { d: usize, n: usize },
    PacketLengthZero,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamViolation::AdversaryBudget { b, k } => {
                write!(f, "b = {b} must satisfy b < k/2 (k = {k})")
            }
            ParamViolation::ModulusTooSmall { q, n } => {
                write!(f, "q = {q} must exceed n = {n}")
            }
            ParamViolation::ModulusNotPrime { q } => write!(f, "q = {q} is not prime"),
            ParamViolation::RepairBelowReconstruction { d, k } => {
                write!(f, "d = {d} must be at least k = {k}")
            }
            ParamViolation::RepairDegreeTooLarge { d, n } => {
                write!(f, "d = {d} must be at most n - 1 = {}", n - 1)
            }
            ParamViolation::PacketLengthZero => write!(f, "packet length v must be at least 1"),
        }
    }
}

fn fmt_violations(violations: &[ParamViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Validated system parameters plus everything derived from them.
///
/// `beta` is fixed at one symbol per helper link; a larger repair bandwidth
/// is realized by running independent code instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SystemParams {
    n: usize,
    k: usize,
    d: usize,
    b: usize,
    q: u64,
    v: usize,
    field: PrimeField,
}

impl SystemParams {
    pub fn new(
        n: usize,
        k: usize,
        d: usize,
        b: usize,
        q: u64,
        v: usize,
    ) -> Result<Self, PmError> {
        let mut violations = Vec::new();
        if 2 * b >= k {
            violations.push(ParamViolation::AdversaryBudget { b, k });
        }
        if d < k {
            violations.push(ParamViolation::RepairBelowReconstruction { d, k });
        }
        if n == 0 || d > n - 1 {
            violations.push(ParamViolation::RepairDegreeTooLarge { d, n });
        }
        if !crate::field::is_prime(q) {
            violations.push(ParamViolation::ModulusNotPrime { q });
        }
        if q <= n as u64 {
            violations.push(ParamViolation::ModulusTooSmall { q, n });
        }
        if v == 0 {
            violations.push(ParamViolation::PacketLengthZero);
        }
        if !violations.is_empty() {
            return Err(PmError::InvalidParams(violations));
        }
        let field = PrimeField::new(q).expect("primality already checked");
        Ok(SystemParams {
            n,
            k,
            d,
            b,
            q,
            v,
            field,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn beta(&self) -> u64 {
        1
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// `k' = k - b`, the effective reconstruction degree of the inner code.
    pub fn k_eff(&self) -> usize {
        self.k - self.b
    }

    /// `d' = d - b`, the effective repair degree of the inner code.
    pub fn d_eff(&self) -> usize {
        self.d - self.b
    }

    /// Per-node storage; at the MBR point `alpha = d' * beta`.
    pub fn alpha(&self) -> usize {
        self.d_eff()
    }

    /// `B`, the number of file symbols one code instance stores.
    pub fn file_size(&self) -> usize {
        let (k, d) = (self.k_eff(), self.d_eff());
        (1..=k).map(|i| d - i + 1).sum()
    }

    /// Secure capacity `C_s` of the outer `(n, k, d)` system.
    pub fn secure_capacity(&self) -> u64 {
        secure_capacity_sum(self.k, self.d, self.b, self.beta())
    }

    /// The general capacity upper bound evaluated at an arbitrary
    /// storage/bandwidth point, not restricted to MBR.
    pub fn capacity_upper_bound(&self, alpha: u64, beta: u64) -> u64 {
        capacity_upper_bound_sum(self.k, self.d, self.b, alpha, beta)
    }

    /// Total number of distinct cross symbols, `theta = C(n, 2)`.
    pub fn theta(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    pub fn node_ids(&self) -> impl Iterator<Item = usize> {
        1..=self.n
    }

    /// Which partners node `i` keeps symbols for: the first `alpha` ids in
    /// increasing order, skipping itself.
    pub fn stored_partners(&self, node: usize) -> Vec<usize> {
        (1..=self.n)
            .filter(|&j| j != node)
            .take(self.alpha())
            .collect()
    }

    pub fn validate_node_id(&self, node: usize) -> Result<(), PmError> {
        if node == 0 || node > self.n {
            return Err(PmError::InvalidNodeId(node));
        }
        Ok(())
    }

    /// All `C(n, 2)` symbol ids in sorted order.
    pub fn all_symbol_ids(&self) -> Vec<SymbolId> {
        let mut ids = Vec::with_capacity(self.theta());
        for i in 1..=self.n {
            for j in (i + 1)..=self.n {
                ids.push(SymbolId::new(i, j).expect("i < j"));
            }
        }
        ids
    }
}

/// The Th.-style capacity sum, tolerant of degenerate arguments so callers
/// can evaluate the bare formula (an empty range sums to zero).
pub fn secure_capacity_sum(k: usize, d: usize, b: usize, beta: u64) -> u64 {
    ((b + 1)..=k)
        .map(|i| (d + 1).saturating_sub(i) as u64 * beta)
        .sum()
}

/// The general upper bound `sum_{i=b+1..k} min(alpha, (d-i+1) beta)`.
pub fn capacity_upper_bound_sum(k: usize, d: usize, b: usize, alpha: u64, beta: u64) -> u64 {
    ((b + 1)..=k)
        .map(|i| alpha.min((d + 1).saturating_sub(i) as u64 * beta))
        .sum()
}

pub fn make_params(
    n: usize,
    k: usize,
    d: usize,
    b: usize,
    q: u64,
    v: usize,
) -> Result<SystemParams, PmError> {
    SystemParams::new(n, k, d, b, q, v)
}

/// Canonical unordered pair `{i, j}` naming the cross symbol
/// `X_ij = X_ji`. Normalized so `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SymbolId {
    lo: usize,
    hi: usize,
}

impl SymbolId {
    pub fn new(i: usize, j: usize) -> Result<Self, PmError> {
        if i == j {
            return Err(PmError::SamePair(i));
        }
        if i == 0 || j == 0 {
            return Err(PmError::InvalidNodeId(0));
        }
        Ok(SymbolId {
            lo: i.min(j),
            hi: i.max(j),
        })
    }

    pub fn nodes(&self) -> (usize, usize) {
        (self.lo, self.hi)
    }

    pub fn involves(&self, node: usize) -> bool {
        self.lo == node || self.hi == node
    }

    pub fn partner_of(&self, node: usize) -> Option<usize> {
        if self.lo == node {
            Some(self.hi)
        } else if self.hi == node {
            Some(self.lo)
        } else {
            None
        }
    }
}

impl fmt::Display for SymbolId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

/// One cross symbol `X_ij` with its canonical id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossSymbol {
    pub id: SymbolId,
    pub value: SymbolVector,
}

/// The `n x d'` Vandermonde encoding matrix with evaluation points
/// `g_i = i`; row `i` is `(1, i, i^2, ..., i^(d'-1))` mod `q`.
///
/// Every `d'` distinct rows form an invertible matrix, and every `k'`
/// distinct rows restricted to the first `k'` columns do as well; repair and
/// reconstruction lean on both properties.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodingMatrix {
    psi: FieldMatrix,
}

impl EncodingMatrix {
    pub fn matrix(&self) -> &FieldMatrix {
        &self.psi
    }

    /// Row for a 1-indexed node id.
    pub fn row(&self, node: usize) -> &[FieldElement] {
        self.psi.row(node - 1)
    }

    /// Stacks the rows of the given node ids (1-indexed) into a matrix.
    pub fn rows_for(&self, nodes: &[usize]) -> FieldMatrix {
        let sel: Vec<usize> = nodes.iter().map(|&i| i - 1).collect();
        self.psi.select_rows(&sel)
    }
}

pub fn build_encoding_matrix(params: &SystemParams) -> EncodingMatrix {
    let field = params.field();
    let d_eff = params.d_eff();
    let mut psi = FieldMatrix::zeros(params.n(), d_eff);
    for i in 1..=params.n() {
        let g = field.elem(i as u64);
        let mut p = FieldElement::ONE;
        for c in 0..d_eff {
            psi.set(i - 1, c, p);
            p = field.mul(p, g);
        }
    }
    EncodingMatrix { psi }
}

/// The symmetric `d' x d'` message matrix `[[S, T], [T^t, 0]]` holding the
/// `B` file symbols as packets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageMatrix {
    dim: usize,
    cells: Vec<SymbolVector>,
}

impl MessageMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, r: usize, c: usize) -> &SymbolVector {
        &self.cells[r * self.dim + c]
    }

    fn set(&mut self, r: usize, c: usize, value: SymbolVector) {
        self.cells[r * self.dim + c] = value;
    }
}

/// Arranges `B` file symbols into the message matrix: the upper triangle of
/// `S` row-major, then `T` row-major, both mirrored to keep `M` symmetric;
/// the bottom-right `(d'-k') x (d'-k')` block stays zero.
pub fn build_message_matrix(
    params: &SystemParams,
    file_symbols: &[SymbolVector],
) -> Result<MessageMatrix, PmError> {
    let expected = params.file_size();
    if file_symbols.len() != expected {
        return Err(PmError::WrongSymbolCount {
            expected,
            got: file_symbols.len(),
        });
    }
    let v = params.v();
    for s in file_symbols {
        if s.len() != v {
            return Err(PmError::Field(FieldError::LengthMismatch(v, s.len())));
        }
    }

    let k_eff = params.k_eff();
    let d_eff = params.d_eff();
    let mut m = MessageMatrix {
        dim: d_eff,
        cells: vec![SymbolVector::zero(v); d_eff * d_eff],
    };
    let mut next = file_symbols.iter();
    for r in 0..k_eff {
        for c in r..k_eff {
            let s = next.next().expect("count checked").clone();
            m.set(r, c, s.clone());
            m.set(c, r, s);
        }
    }
    for r in 0..k_eff {
        for c in k_eff..d_eff {
            let s = next.next().expect("count checked").clone();
            m.set(r, c, s.clone());
            m.set(c, r, s);
        }
    }
    Ok(m)
}

/// `X_ij = psi_i M psi_j^t`, an `F_q`-linear combination of the message
/// packets. Symmetric in `i` and `j` because `M` is.
pub fn cross_symbol(
    params: &SystemParams,
    psi: &EncodingMatrix,
    m: &MessageMatrix,
    i: usize,
    j: usize,
) -> Result<CrossSymbol, PmError> {
    params.validate_node_id(i)?;
    params.validate_node_id(j)?;
    let id = SymbolId::new(i, j)?;
    let field = params.field();
    let (ri, rj) = (psi.row(i), psi.row(j));
    let mut value = SymbolVector::zero(params.v());
    for r in 0..m.dim() {
        for c in 0..m.dim() {
            let coeff = field.mul(ri[r], rj[c]);
            if !coeff.is_zero() {
                value.add_scaled_assign(m.get(r, c), coeff, field)?;
            }
        }
    }
    Ok(CrossSymbol { id, value })
}

/// A node's storage: `alpha` cross symbols toward its first `alpha` partners
/// in increasing id order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeState {
    node_id: usize,
    stored: Vec<CrossSymbol>,
}

impl NodeState {
    /// Builds a state from explicit symbols; used both by the encoder and by
    /// protocol callers assembling possibly-corrupted download payloads.
    pub fn from_symbols(node_id: usize, stored: Vec<CrossSymbol>) -> Self {
        NodeState { node_id, stored }
    }

    pub fn node_id(&self) -> usize {
        self.node_id
    }

    pub fn stored(&self) -> &[CrossSymbol] {
        &self.stored
    }

    pub fn partner_ids(&self) -> Vec<usize> {
        self.stored
            .iter()
            .filter_map(|s| s.id.partner_of(self.node_id))
            .collect()
    }

    pub fn value_for(&self, partner: usize) -> Option<&SymbolVector> {
        self.stored
            .iter()
            .find(|s| s.id.partner_of(self.node_id) == Some(partner))
            .map(|s| &s.value)
    }
}

/// Everything the encoder produces: per-node storage plus the full set of
/// `C(n, 2)` cross symbols (sorted by id) for hash-store population.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSystem {
    pub nodes: Vec<NodeState>,
    pub symbols: Vec<CrossSymbol>,
}

impl EncodedSystem {
    pub fn symbol(&self, id: SymbolId) -> Option<&CrossSymbol> {
        self.symbols
            .binary_search_by(|s| s.id.cmp(&id))
            .ok()
            .map(|ix| &self.symbols[ix])
    }

    pub fn node(&self, node_id: usize) -> Option<&NodeState> {
        self.nodes.iter().find(|n| n.node_id() == node_id)
    }
}

pub fn encode_system(
    params: &SystemParams,
    file_symbols: &[SymbolVector],
) -> Result<EncodedSystem, PmError> {
    let psi = build_encoding_matrix(params);
    let m = build_message_matrix(params, file_symbols)?;

    let mut symbols = Vec::with_capacity(params.theta());
    for i in 1..=params.n() {
        for j in (i + 1)..=params.n() {
            symbols.push(cross_symbol(params, &psi, &m, i, j)?);
        }
    }

    let lookup = |id: SymbolId| -> CrossSymbol {
        let ix = symbols
            .binary_search_by(|s| s.id.cmp(&id))
            .expect("all pairs present");
        symbols[ix].clone()
    };

    let mut nodes = Vec::with_capacity(params.n());
    for i in 1..=params.n() {
        let stored = params
            .stored_partners(i)
            .into_iter()
            .map(|j| lookup(SymbolId::new(i, j).expect("i != j")))
            .collect();
        nodes.push(NodeState::from_symbols(i, stored));
    }
    Ok(EncodedSystem { nodes, symbols })
}

/// Recovers the original-representation row `W_i = psi_i M` from a node's
/// stored symbols: stacking the partner rows of `psi` gives a square
/// Vandermonde system `A w = stored`.
fn recover_row(
    params: &SystemParams,
    psi: &EncodingMatrix,
    node: &NodeState,
) -> Result<Vec<SymbolVector>, PmError> {
    let partners = node.partner_ids();
    if partners.len() != params.alpha() {
        return Err(PmError::MalformedNode {
            node: node.node_id(),
            expected: params.alpha(),
            got: partners.len(),
        });
    }
    let a = psi.rows_for(&partners);
    let y: Vec<SymbolVector> = node.stored().iter().map(|s| s.value.clone()).collect();
    Ok(solve_square_system(params.field(), &a, &y)?)
}

/// Computes `X_{i, target}` for a node from its own `alpha` stored symbols;
/// possible for any target because `psi` is Vandermonde.
pub fn derive_symbol(
    params: &SystemParams,
    psi: &EncodingMatrix,
    node: &NodeState,
    target: usize,
) -> Result<CrossSymbol, PmError> {
    params.validate_node_id(target)?;
    let id = SymbolId::new(node.node_id(), target)?;
    if let Some(value) = node.value_for(target) {
        return Ok(CrossSymbol {
            id,
            value: value.clone(),
        });
    }
    let w = recover_row(params, psi, node)?;
    let field = params.field();
    let target_row = psi.row(target);
    let mut value = SymbolVector::zero(params.v());
    for (c, wc) in w.iter().enumerate() {
        value.add_scaled_assign(wc, target_row[c], field)?;
    }
    Ok(CrossSymbol { id, value })
}

/// Exact repair: from `d'` helper responses `X_{h, f} = psi_h (M psi_f^t)`,
/// solve for the column `M psi_f^t`, then recompute the lost node's stored
/// symbols `X_{f, j} = psi_j (M psi_f^t)`.
///
/// Responses are assumed clean here; detection happens in the secure
/// protocol layer. When more than `d'` responses are supplied only the first
/// `d'` are used.
pub fn repair_node(
    params: &SystemParams,
    psi: &EncodingMatrix,
    failed: usize,
    helper_responses: &[(usize, SymbolVector)],
) -> Result<NodeState, PmError> {
    params.validate_node_id(failed)?;
    let mut seen = BTreeSet::new();
    for &(h, _) in helper_responses {
        params.validate_node_id(h)?;
        if h == failed {
            return Err(PmError::HelperIsFailed(h));
        }
        if !seen.insert(h) {
            return Err(PmError::DuplicateNode(h));
        }
    }
    let needed = params.d_eff();
    if helper_responses.len() < needed {
        return Err(PmError::NotEnoughHelpers {
            needed,
            got: helper_responses.len(),
        });
    }
    let used = &helper_responses[..needed];
    let helper_ids: Vec<usize> = used.iter().map(|&(h, _)| h).collect();
    let a = psi.rows_for(&helper_ids);
    let y: Vec<SymbolVector> = used.iter().map(|(_, s)| s.clone()).collect();
    let column = solve_square_system(params.field(), &a, &y)?;

    let field = params.field();
    let stored = params
        .stored_partners(failed)
        .into_iter()
        .map(|j| {
            let row = psi.row(j);
            let mut value = SymbolVector::zero(params.v());
            for (c, zc) in column.iter().enumerate() {
                value.add_scaled_assign(zc, row[c], field)?;
            }
            Ok(CrossSymbol {
                id: SymbolId::new(failed, j)?,
                value,
            })
        })
        .collect::<Result<Vec<_>, PmError>>()?;
    Ok(NodeState::from_symbols(failed, stored))
}

/// File reconstruction from any `k'` nodes' full storage.
///
/// Each contacted node's symbols are inverted back to its row `W_i = psi_i M`;
/// stacking `k'` rows gives `Psi_sub M = [Phi S + Delta T^t | Phi T]`, from
/// which `T` and then `S` are recovered by inverting the leading `k' x k'`
/// Vandermonde block `Phi`.
pub fn reconstruct_file(
    params: &SystemParams,
    psi: &EncodingMatrix,
    nodes: &[NodeState],
) -> Result<Vec<SymbolVector>, PmError> {
    let k_eff = params.k_eff();
    let d_eff = params.d_eff();
    let mut seen = BTreeSet::new();
    for node in nodes {
        params.validate_node_id(node.node_id())?;
        if !seen.insert(node.node_id()) {
            return Err(PmError::DuplicateNode(node.node_id()));
        }
    }
    if nodes.len() < k_eff {
        return Err(PmError::NotEnoughNodes {
            needed: k_eff,
            got: nodes.len(),
        });
    }
    let used = &nodes[..k_eff];
    let field = params.field();
    let v = params.v();

    // Rows of Psi_sub * M, one per contacted node.
    let mut w_rows = Vec::with_capacity(k_eff);
    for node in used {
        w_rows.push(recover_row(params, psi, node)?);
    }

    let ids: Vec<usize> = used.iter().map(NodeState::node_id).collect();
    let psi_sub = psi.rows_for(&ids);
    let phi = psi_sub.slice_cols(0, k_eff);
    let delta = psi_sub.slice_cols(k_eff, d_eff);

    // T from the right block: Phi T = W[:, k'..d'], column by column.
    let t_cols = d_eff - k_eff;
    let mut t = vec![vec![SymbolVector::zero(v); t_cols]; k_eff];
    for c in 0..t_cols {
        let rhs: Vec<SymbolVector> = w_rows.iter().map(|r| r[k_eff + c].clone()).collect();
        let col = solve_square_system(field, &phi, &rhs)?;
        for (r, val) in col.into_iter().enumerate() {
            t[r][c] = val;
        }
    }

    // S from the left block after removing Delta T^t: Phi S = W[:, 0..k'] - Delta T^t.
    let mut s = vec![vec![SymbolVector::zero(v); k_eff]; k_eff];
    for c in 0..k_eff {
        let mut rhs = Vec::with_capacity(k_eff);
        for (r, row) in w_rows.iter().enumerate() {
            let mut cell = row[c].clone();
            for x in 0..t_cols {
                // (Delta T^t)[r][c] = sum_x Delta[r][x] * T[c][x]
                let coeff = field.neg(delta.get(r, x));
                cell.add_scaled_assign(&t[c][x], coeff, field)?;
            }
            rhs.push(cell);
        }
        let col = solve_square_system(field, &phi, &rhs)?;
        for (r, val) in col.into_iter().enumerate() {
            s[r][c] = val;
        }
    }

    // Read the file back out in layout order.
    let mut file = Vec::with_capacity(params.file_size());
    for r in 0..k_eff {
        for c in r..k_eff {
            file.push(s[r][c].clone());
        }
    }
    for row in t.iter().take(k_eff) {
        for cell in row.iter() {
            file.push(cell.clone());
        }
    }
    Ok(file)
}
