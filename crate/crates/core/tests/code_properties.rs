//! Structural properties of the encoding matrix and exhaustive
//! repair/reconstruction round-trips at the reference dimensions.

use pmdss_core::field::{FieldElement, PrimeField};
use pmdss_core::pm_code::{
    build_encoding_matrix, encode_system, reconstruct_file, repair_node, PmError, SymbolId,
};
use pmdss_core::{FieldMatrix, NodeState, SymbolVector, SystemParams};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

fn params(v: usize) -> SystemParams {
    SystemParams::new(7, 3, 4, 0, 11, v).unwrap()
}

fn random_file(p: &SystemParams, rng: &mut ChaCha12Rng) -> Vec<SymbolVector> {
    (0..p.file_size())
        .map(|_| SymbolVector::random(p.v(), p.field(), rng))
        .collect()
}

/// Determinant by permutation expansion: an oracle independent of the
/// Gaussian elimination used by the solver.
fn determinant_by_expansion(m: &FieldMatrix, field: PrimeField) -> FieldElement {
    let n = m.rows();
    assert_eq!(n, m.cols());
    let mut perm: Vec<usize> = (0..n).collect();
    let mut det = FieldElement::ZERO;
    permute(&mut perm, 0, &mut |perm, sign| {
        let mut term = FieldElement::ONE;
        for (r, &c) in perm.iter().enumerate() {
            term = field.mul(term, m.get(r, c));
        }
        det = if sign {
            field.add(det, term)
        } else {
            field.sub(det, term)
        };
    });
    det
}

fn permute(perm: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize], bool)) {
    fn go(perm: &mut Vec<usize>, at: usize, sign: bool, visit: &mut impl FnMut(&[usize], bool)) {
        if at == perm.len() {
            visit(perm, sign);
            return;
        }
        for i in at..perm.len() {
            perm.swap(at, i);
            go(perm, at + 1, sign == (at == i), visit);
            perm.swap(at, i);
        }
    }
    go(perm, at, true, visit);
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    go(1, n, k, &mut cur, &mut out);
    out
}

#[test]
fn every_d_row_submatrix_of_psi_is_invertible() {
    let p = params(1);
    let psi = build_encoding_matrix(&p);
    let f = p.field();
    for rows in combinations(7, 4) {
        let sub = psi.rows_for(&rows);
        let det = determinant_by_expansion(&sub, f);
        assert!(!det.is_zero(), "rows {rows:?} singular");
        assert_eq!(sub.rank(f), 4, "rows {rows:?}");
    }
}

#[test]
fn every_k_row_leading_submatrix_of_psi_is_invertible() {
    let p = params(1);
    let psi = build_encoding_matrix(&p);
    let f = p.field();
    for rows in combinations(7, 3) {
        let sub = psi.rows_for(&rows).slice_cols(0, 3);
        let det = determinant_by_expansion(&sub, f);
        assert!(!det.is_zero(), "rows {rows:?} singular");
    }
}

#[test]
fn exact_repair_from_every_helper_set() {
    for v in [1usize, 8] {
        let p = params(v);
        let psi = build_encoding_matrix(&p);
        let mut rng = ChaCha12Rng::seed_from_u64(0xAB5E + v as u64);
        for _ in 0..5 {
            let sys = encode_system(&p, &random_file(&p, &mut rng)).unwrap();
            for failed in 1..=7usize {
                let others: Vec<usize> = (1..=7).filter(|&x| x != failed).collect();
                for helper_ix in combinations(6, 4) {
                    let responses: Vec<(usize, SymbolVector)> = helper_ix
                        .iter()
                        .map(|&ix| {
                            let h = others[ix - 1];
                            let id = SymbolId::new(h, failed).unwrap();
                            (h, sys.symbol(id).unwrap().value.clone())
                        })
                        .collect();
                    let rebuilt = repair_node(&p, &psi, failed, &responses).unwrap();
                    assert_eq!(&rebuilt, sys.node(failed).unwrap());
                }
            }
        }
    }
}

#[test]
fn reconstruction_from_every_node_triple() {
    for v in [1usize, 8] {
        let p = params(v);
        let psi = build_encoding_matrix(&p);
        let mut rng = ChaCha12Rng::seed_from_u64(0xF11E + v as u64);
        for _ in 0..5 {
            let file = random_file(&p, &mut rng);
            let sys = encode_system(&p, &file).unwrap();
            for triple in combinations(7, 3) {
                let nodes: Vec<NodeState> = triple
                    .iter()
                    .map(|&i| sys.node(i).unwrap().clone())
                    .collect();
                assert_eq!(reconstruct_file(&p, &psi, &nodes).unwrap(), file);
            }
        }
    }
}

#[test]
fn too_few_nodes_never_yield_a_file() {
    let p = params(2);
    let psi = build_encoding_matrix(&p);
    let mut rng = ChaCha12Rng::seed_from_u64(0xDEF);
    let sys = encode_system(&p, &random_file(&p, &mut rng)).unwrap();
    for pair in combinations(7, 2) {
        let nodes: Vec<NodeState> = pair
            .iter()
            .map(|&i| sys.node(i).unwrap().clone())
            .collect();
        assert_eq!(
            reconstruct_file(&p, &psi, &nodes),
            Err(PmError::NotEnoughNodes { needed: 3, got: 2 })
        );
    }
}
