//! Adversary models: the limited-knowledge observation set, corruption
//! strategies, and the omniscient baseline used as a negative control.
//!
//! A limited-knowledge adversary controlling node `i` sees exactly the
//! symbols of row `i`: the `alpha` it stores plus the rest of the row, which
//! the node can derive itself. Because `X_ij = X_ji` this leaks one symbol
//! per honest node, but with `b < k/2` the leaked rows never span the full
//! file, so at least one symbol per honest node stays statistically unknown.
//! Corruption is persistent per symbol: a node corrupts its stored data once
//! and every message derived from it stays consistent, which is what makes
//! the comparison-table patterns reproducible.

use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, FieldMatrix, PrimeField, SymbolVector};
use crate::hashing::Ratio;
use crate::pm_code::{
    derive_symbol, EncodedSystem, EncodingMatrix, PmError, SymbolId, SystemParams,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("controlling {got} nodes exceeds the budget b = {budget}")]
    BudgetExceeded { budget: usize, got: usize },
    #[error("symbol {0} does not originate at a controlled node")]
    NotControlled(SymbolId),
    #[error("node {0} is not among the contacted nodes")]
    NotContacted(usize),
    #[error("every stored symbol of node {0} is mirrored by a contacted node")]
    NoUncheckedSymbol(usize),
    #[error("no nonzero error orthogonal to the checked symbols (v = {v}, constraint rank = {rank})")]
    NoOrthogonalError { v: usize, rank: usize },
    #[error("omniscient observation requires the full system")]
    NeedsFullSystem,
    #[error(transparent)]
    Pm(#[from] PmError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// How a controlled node rewrites the symbols it emits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Replace with the all-zero packet.
    Zeroing,
    /// Add a uniform nonzero error.
    RandomError,
    /// Add an error orthogonal to every symbol value the observation
    /// determines; checks against unknown symbols still reduce to chance.
    TargetedCollision,
    /// Full knowledge of all symbols: errors orthogonal to everything,
    /// limited only by the packet length. Negative control.
    Omniscient,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Zeroing => "zero",
            Strategy::RandomError => "random",
            Strategy::TargetedCollision => "targeted",
            Strategy::Omniscient => "omniscient",
        }
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "zero" | "zeroing" => Ok(Strategy::Zeroing),
            "random" | "random-error" => Ok(Strategy::RandomError),
            "targeted" | "targeted-collision" => Ok(Strategy::TargetedCollision),
            "omniscient" => Ok(Strategy::Omniscient),
            other => Err(format!("unknown strategy {other:?}")),
        }
    }
}

/// A colluding adversary: the controlled nodes, what it has observed, and
/// the corrupted replacement for every symbol it has tampered with so far.
#[derive(Debug, Clone)]
pub struct AdversaryState {
    controlled: BTreeSet<usize>,
    strategy: Strategy,
    observation: BTreeMap<SymbolId, SymbolVector>,
    /// Symbol values fully determined by the observation; orthogonality
    /// targets for `TargetedCollision` and `Omniscient`.
    determined: BTreeMap<SymbolId, SymbolVector>,
    /// Basis of the subspace orthogonal to every determined value.
    orthogonal_basis: Vec<SymbolVector>,
    corruptions: BTreeMap<SymbolId, SymbolVector>,
    rng: ChaCha12Rng,
    per_message: bool,
    field: PrimeField,
    v: usize,
}

/// Builds the adversary's view: the stored symbols of every controlled node,
/// closed under in-row derivation, plus (for the targeted strategies) every
/// other symbol whose value the observation linearly determines.
pub fn observe(
    params: &SystemParams,
    psi: &EncodingMatrix,
    system: &EncodedSystem,
    controlled: &BTreeSet<usize>,
    strategy: Strategy,
    seed: u64,
) -> Result<AdversaryState, AdversaryError> {
    if matches!(strategy, Strategy::Omniscient) {
        if controlled.len() > params.b() {
            return Err(AdversaryError::BudgetExceeded {
                budget: params.b(),
                got: controlled.len(),
            });
        }
        for &c in controlled {
            params.validate_node_id(c)?;
        }
        let observation: BTreeMap<SymbolId, SymbolVector> = system
            .symbols
            .iter()
            .map(|s| (s.id, s.value.clone()))
            .collect();
        return build_state(params, controlled.clone(), strategy, observation, seed);
    }
    let nodes: Vec<&crate::pm_code::NodeState> = controlled
        .iter()
        .map(|&c| {
            params.validate_node_id(c)?;
            Ok(system.node(c).expect("validated node id"))
        })
        .collect::<Result<_, AdversaryError>>()?;
    observe_from_storage(params, psi, &nodes, strategy, seed)
}

/// Builds the adversary's view from the controlled nodes' storage alone, the
/// way a real compromised node would. Not available for [`Strategy::Omniscient`],
/// which by definition sees more than its own disks.
pub fn observe_from_storage(
    params: &SystemParams,
    psi: &EncodingMatrix,
    controlled_nodes: &[&crate::pm_code::NodeState],
    strategy: Strategy,
    seed: u64,
) -> Result<AdversaryState, AdversaryError> {
    if matches!(strategy, Strategy::Omniscient) {
        return Err(AdversaryError::NeedsFullSystem);
    }
    if controlled_nodes.len() > params.b() {
        return Err(AdversaryError::BudgetExceeded {
            budget: params.b(),
            got: controlled_nodes.len(),
        });
    }
    let mut controlled = BTreeSet::new();
    let mut observation = BTreeMap::new();
    for node in controlled_nodes {
        params.validate_node_id(node.node_id())?;
        controlled.insert(node.node_id());
        for s in node.stored() {
            observation.insert(s.id, s.value.clone());
        }
        for j in params.node_ids() {
            if j == node.node_id() || node.value_for(j).is_some() {
                continue;
            }
            let derived = derive_symbol(params, psi, node, j)?;
            observation.insert(derived.id, derived.value);
        }
    }
    build_state(params, controlled, strategy, observation, seed)
}

fn build_state(
    params: &SystemParams,
    controlled: BTreeSet<usize>,
    strategy: Strategy,
    observation: BTreeMap<SymbolId, SymbolVector>,
    seed: u64,
) -> Result<AdversaryState, AdversaryError> {
    let determined = match strategy {
        Strategy::TargetedCollision => determined_symbols(params, &observation)?,
        Strategy::Omniscient => observation.clone(),
        Strategy::Zeroing | Strategy::RandomError => BTreeMap::new(),
    };

    let orthogonal_basis = if determined.is_empty() {
        Vec::new()
    } else {
        orthogonal_complement_basis(params.field(), params.v(), determined.values())
    };

    Ok(AdversaryState {
        controlled,
        strategy,
        observation,
        determined,
        orthogonal_basis,
        corruptions: BTreeMap::new(),
        rng: ChaCha12Rng::seed_from_u64(seed),
        per_message: false,
        field: params.field(),
        v: params.v(),
    })
}

impl AdversaryState {
    pub fn controlled(&self) -> &BTreeSet<usize> {
        &self.controlled
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn observation(&self) -> &BTreeMap<SymbolId, SymbolVector> {
        &self.observation
    }

    /// Ids whose values the observation determines (orthogonality targets).
    pub fn determined_ids(&self) -> Vec<SymbolId> {
        self.determined.keys().copied().collect()
    }

    pub fn determined_value(&self, id: SymbolId) -> Option<&SymbolVector> {
        self.determined.get(&id)
    }

    /// Switch to fresh randomness per message instead of per-symbol
    /// persistent corruption.
    pub fn set_per_message(&mut self, per_message: bool) {
        self.per_message = per_message;
    }

    pub fn is_controlled(&self, node: usize) -> bool {
        self.controlled.contains(&node)
    }

    /// The corrupted value a controlled node emits for `id` in place of
    /// `true_value`. The replacement is computed once per symbol and replayed
    /// on subsequent calls, so all messages derived from the same stored data
    /// stay consistent.
    pub fn corrupt(
        &mut self,
        id: SymbolId,
        true_value: &SymbolVector,
    ) -> Result<SymbolVector, AdversaryError> {
        let (i, j) = id.nodes();
        if !self.controlled.contains(&i) && !self.controlled.contains(&j) {
            return Err(AdversaryError::NotControlled(id));
        }
        if !self.per_message {
            if let Some(v) = self.corruptions.get(&id) {
                return Ok(v.clone());
            }
        }
        let corrupted = match self.strategy {
            Strategy::Zeroing => SymbolVector::zero(self.v),
            Strategy::RandomError => {
                let e = SymbolVector::random_nonzero(self.v, self.field, &mut self.rng);
                true_value.add(&e, self.field)?
            }
            Strategy::TargetedCollision | Strategy::Omniscient => {
                let e = self.orthogonal_error();
                true_value.add(&e, self.field)?
            }
        };
        self.corruptions.insert(id, corrupted.clone());
        Ok(corrupted)
    }

    /// A nonzero error orthogonal to every determined symbol value, when one
    /// exists; otherwise a uniform nonzero error (the best available play
    /// against unknown symbols).
    fn orthogonal_error(&mut self) -> SymbolVector {
        if self.orthogonal_basis.is_empty() {
            return SymbolVector::random_nonzero(self.v, self.field, &mut self.rng);
        }
        loop {
            let mut e = SymbolVector::zero(self.v);
            for basis in &self.orthogonal_basis {
                let c = self.field.random_element(&mut self.rng);
                e.add_scaled_assign(basis, c, self.field)
                    .expect("basis vectors have length v");
            }
            if !e.is_zero() {
                return e;
            }
        }
    }
}

/// Coefficients of `X_ij` over the `B` file packets: the linear functional
/// the symbol applies to the file. Computed by encoding the unit files of a
/// scalar-packet twin of the parameters.
pub fn symbol_functional(
    params: &SystemParams,
    id: SymbolId,
) -> Result<Vec<FieldElement>, AdversaryError> {
    let scalar = SystemParams::new(params.n(), params.k(), params.d(), params.b(), params.q(), 1)
        .expect("valid params stay valid at v = 1");
    let psi = crate::pm_code::build_encoding_matrix(&scalar);
    let b = scalar.file_size();
    let mut coeffs = Vec::with_capacity(b);
    for m in 0..b {
        let mut file = vec![SymbolVector::zero(1); b];
        file[m] = SymbolVector::new(vec![FieldElement::ONE]);
        let matrix = crate::pm_code::build_message_matrix(&scalar, &file)?;
        let (i, j) = id.nodes();
        let x = crate::pm_code::cross_symbol(&scalar, &psi, &matrix, i, j)?;
        coeffs.push(x.value.components()[0]);
    }
    Ok(coeffs)
}

/// Every symbol whose functional lies in the span of the observed
/// functionals, together with its (reconstructible) value.
fn determined_symbols(
    params: &SystemParams,
    observation: &BTreeMap<SymbolId, SymbolVector>,
) -> Result<BTreeMap<SymbolId, SymbolVector>, AdversaryError> {
    if observation.is_empty() {
        return Ok(BTreeMap::new());
    }
    let field = params.field();
    let obs_ids: Vec<SymbolId> = observation.keys().copied().collect();
    let functionals: Vec<Vec<FieldElement>> = obs_ids
        .iter()
        .map(|&id| symbol_functional(params, id))
        .collect::<Result<_, _>>()?;
    // Columns of `a` are the observed functionals; a solution of
    // `a lambda = c_id` expresses the target functional as a combination of
    // observed ones, and the same lambda combines the observed values.
    let a = FieldMatrix::from_rows(functionals)?.transpose();

    let mut determined = BTreeMap::new();
    for id in params.all_symbol_ids() {
        if let Some(v) = observation.get(&id) {
            determined.insert(id, v.clone());
            continue;
        }
        let target = symbol_functional(params, id)?;
        if let Some(lambda) = a.solve_any(&target, field)? {
            let mut value = SymbolVector::zero(params.v());
            for (r, &c) in lambda.iter().enumerate() {
                value.add_scaled_assign(&observation[&obs_ids[r]], c, field)?;
            }
            determined.insert(id, value);
        }
    }
    Ok(determined)
}

/// Basis of the subspace of `F_q^v` orthogonal to all the given vectors.
fn orthogonal_complement_basis<'a, I>(
    field: PrimeField,
    v: usize,
    constraints: I,
) -> Vec<SymbolVector>
where
    I: Iterator<Item = &'a SymbolVector>,
{
    let rows: Vec<Vec<FieldElement>> = constraints.map(|s| s.components().to_vec()).collect();
    if rows.is_empty() {
        return Vec::new();
    }
    let mat = FieldMatrix::from_rows(rows).expect("constraints share length v");
    debug_assert_eq!(mat.cols(), v);
    mat.nullspace(field)
        .into_iter()
        .map(SymbolVector::new)
        .collect()
}

/// The chance that a fixed nonzero error is orthogonal to one uniformly
/// random unknown symbol: exactly `1/q`.
pub fn collision_success_probability(q: u64) -> Ratio {
    Ratio::new(1, q)
}

/// The omniscient reconstruction attack: corrupt only stored symbols of the
/// controlled node whose partners are outside the user's contact set (so no
/// second copy appears in the table), with errors orthogonal to every symbol
/// the user downloads from honest nodes. Every hash check then passes while
/// the decoded file is wrong.
///
/// Needs `v` strictly larger than the rank of the honest downloads, which is
/// bounded by the file size `B`; below that no nonzero orthogonal error
/// exists and the attack is impossible.
pub fn omniscient_reconstruction_attack(
    params: &SystemParams,
    system: &EncodedSystem,
    controlled_node: usize,
    users: &[usize],
    seed: u64,
) -> Result<BTreeMap<SymbolId, SymbolVector>, AdversaryError> {
    params.validate_node_id(controlled_node)?;
    if !users.contains(&controlled_node) {
        return Err(AdversaryError::NotContacted(controlled_node));
    }
    let field = params.field();
    let node = system.node(controlled_node).expect("validated node id");

    let targets: Vec<SymbolId> = node
        .stored()
        .iter()
        .map(|s| s.id)
        .filter(|id| {
            let partner = id.partner_of(controlled_node).expect("own symbol");
            !users.contains(&partner)
        })
        .collect();
    if targets.is_empty() {
        return Err(AdversaryError::NoUncheckedSymbol(controlled_node));
    }

    // Everything the user will download from honest nodes.
    let honest_values: Vec<&SymbolVector> = users
        .iter()
        .filter(|&&u| u != controlled_node)
        .flat_map(|&u| {
            system
                .node(u)
                .expect("contacted node")
                .stored()
                .iter()
                .map(|s| &s.value)
        })
        .collect();
    let basis = orthogonal_complement_basis(field, params.v(), honest_values.iter().copied());
    if basis.is_empty() {
        let rows: Vec<Vec<FieldElement>> = honest_values
            .iter()
            .map(|s| s.components().to_vec())
            .collect();
        let rank = FieldMatrix::from_rows(rows)
            .map(|m| m.rank(field))
            .unwrap_or(0);
        return Err(AdversaryError::NoOrthogonalError {
            v: params.v(),
            rank,
        });
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut corruptions = BTreeMap::new();
    for id in targets {
        let e = loop {
            let mut e = SymbolVector::zero(params.v());
            for b in &basis {
                let c = field.random_element(&mut rng);
                e.add_scaled_assign(b, c, field)?;
            }
            if !e.is_zero() {
                break e;
            }
        };
        let true_value = &system.symbol(id).expect("stored symbol").value;
        corruptions.insert(id, true_value.add(&e, field)?);
    }
    Ok(corruptions)
}
