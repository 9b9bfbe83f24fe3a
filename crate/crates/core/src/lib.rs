//! Product-matrix minimum-bandwidth regenerating (MBR) codes hardened
//! against limited-knowledge byzantine adversaries.
//!
//! A `(n, k, d)` distributed storage system is protected by backing off to an
//! `(n, k-b, d-b)` product-matrix MBR code and keeping a correlation hash of
//! every pair of cross symbols on an incorruptible trusted server. During
//! repair and file reconstruction the downloaded symbols are cross-checked
//! against the stored hashes; nodes whose data disagrees with more than `b`
//! peers are reported as compromised and treated as erasures.
//!
//! Module map:
//! - [`field`]: prime-field arithmetic, symbol vectors, exact linear solving
//! - [`pm_code`]: the product-matrix code in its cross-symbol representation
//! - [`hashing`]: correlation hashes and the trusted hash store
//! - [`secure_protocol`]: comparison tables, detection rules, secure repair
//!   and secure reconstruction
//! - [`adversary`]: adversary observation model and corruption strategies

pub mod adversary;
pub mod field;
pub mod hashing;
pub mod pm_code;
pub mod secure_protocol;

pub use field::{FieldElement, FieldMatrix, PrimeField, SymbolVector};
pub use pm_code::{CrossSymbol, EncodedSystem, NodeState, SymbolId, SystemParams};
