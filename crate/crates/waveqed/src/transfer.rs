//! Transfer matrices: the rank-one node coupling matrix A, per-node factors
//! `I - A/gamma`, diagonal inter-node phase matrices, and their ordered
//! cascade product.
//!
//! State vectors are length 2M, with the right-mover of mode m (1-based) at
//! row 2m-1 and the left-mover at row 2m. A cascade product maps the state
//! just left of the first node onto the state just right of the last node,
//! both evaluated at the respective node positions.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::json;
use thiserror::Error;

use crate::model::{Gamma, NetworkSpec, SegmentParams};

pub type CMatrix = DMatrix<Complex64>;

/// Below this |gamma| the 1/gamma node factor is numerically useless; the
/// direct solver covers that regime without any singularity.
pub const GAMMA_MIN: f64 = 1e-9;

/// Sign convention for the node factor. `Minus` (`I - A/gamma`) is the
/// physical convention; `Plus` exists so the self-check suite can
/// demonstrate that the opposite sign fails the single-qubit limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NodeSign {
    #[default]
    Minus,
    Plus,
}

/// Gamma too small in magnitude for the `1/gamma` node factor.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("|gamma| = {magnitude:.3e} is at or below the singular threshold {GAMMA_MIN:.0e}; use the direct solver")]
pub struct SingularGamma {
    pub magnitude: f64,
}

/// A node of the chain has singular gamma; carries the 0-based node index.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("node {node}: |gamma| = {magnitude:.3e} is at or below the singular threshold {GAMMA_MIN:.0e}; use the direct solver")]
pub struct SingularNode {
    pub node: usize,
    pub magnitude: f64,
}

/// The 2M x 2M coupling matrix A with every entry of row l equal to
/// (-1)^(l+1) (1-based rows): +1 on odd rows, -1 on even rows. Rank one up
/// to sign structure, and A^2 = 0 because the side 2M is even.
pub fn coupling_matrix_int(modes: usize) -> DMatrix<i64> {
    let n = 2 * modes;
    DMatrix::from_fn(n, n, |row, _| if row % 2 == 0 { 1 } else { -1 })
}

/// Complex embedding of [`coupling_matrix_int`].
pub fn coupling_matrix(modes: usize) -> CMatrix {
    let n = 2 * modes;
    CMatrix::from_fn(n, n, |row, _| {
        Complex64::new(if row % 2 == 0 { 1.0 } else { -1.0 }, 0.0)
    })
}

/// Node factor `I - A/gamma` describing scattering around one qubit.
pub fn node_matrix(gamma: Gamma, modes: usize) -> Result<CMatrix, SingularGamma> {
    node_matrix_signed(gamma, modes, NodeSign::Minus)
}

/// [`node_matrix`] with an explicit sign convention; see [`NodeSign`].
pub fn node_matrix_signed(
    gamma: Gamma,
    modes: usize,
    sign: NodeSign,
) -> Result<CMatrix, SingularGamma> {
    let magnitude = gamma.value().norm();
    if magnitude <= GAMMA_MIN {
        return Err(SingularGamma { magnitude });
    }
    let inv = match sign {
        NodeSign::Minus => -gamma.value().inv(),
        NodeSign::Plus => gamma.value().inv(),
    };
    let n = 2 * modes;
    let mut m = CMatrix::from_fn(n, n, |row, _| {
        if row % 2 == 0 {
            inv
        } else {
            -inv
        }
    });
    for d in 0..n {
        m[(d, d)] += Complex64::new(1.0, 0.0);
    }
    Ok(m)
}

/// Diagonal propagation factor for one segment: the right-mover of mode m
/// picks up `exp(+i (k L_m + phi_m))`, the left-mover the conjugate phase.
/// Every diagonal entry has unit modulus.
pub fn phase_matrix(seg: &SegmentParams, k: f64, modes: usize) -> CMatrix {
    let n = 2 * modes;
    let mut m = CMatrix::zeros(n, n);
    for mode in 0..modes {
        let arg = k * seg.lengths[mode] + seg.extra_phases[mode];
        m[(2 * mode, 2 * mode)] = Complex64::from_polar(1.0, arg);
        m[(2 * mode + 1, 2 * mode + 1)] = Complex64::from_polar(1.0, -arg);
    }
    m
}

/// One factor of a transfer chain, labelled for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub enum FactorKind {
    /// Scattering around qubit node `index` (0-based).
    Node { index: usize },
    /// Propagation along the segment between nodes `index` and `index + 1`.
    Segment { index: usize },
}

#[derive(Debug, Clone)]
pub struct ChainFactor {
    pub kind: FactorKind,
    pub matrix: CMatrix,
}

/// Ordered cascade of node and phase factors with its cached product.
///
/// `factors[0]` is the last node and `factors.last()` the first: the product
/// `factors[0] * factors[1] * ... * factors[last]` applies right-to-left, so
/// it maps the state left of node 0 onto the state right of node N-1.
#[derive(Debug, Clone)]
pub struct TransferChain {
    pub factors: Vec<ChainFactor>,
    pub product: CMatrix,
}

/// Build the alternating node/phase cascade for a validated network.
pub fn build_chain(net: &NetworkSpec) -> Result<TransferChain, SingularNode> {
    build_chain_signed(net, NodeSign::Minus)
}

pub fn build_chain_signed(net: &NetworkSpec, sign: NodeSign) -> Result<TransferChain, SingularNode> {
    let modes = net.modes;
    let nodes = net.nodes();
    let mut factors = Vec::with_capacity(2 * nodes - 1);
    let first = node_matrix_signed(net.gamma(0), modes, sign)
        .map_err(|e| SingularNode { node: 0, magnitude: e.magnitude })?;
    let mut product = first.clone();
    factors.push(ChainFactor {
        kind: FactorKind::Node { index: 0 },
        matrix: first,
    });
    for j in 1..nodes {
        let phase = phase_matrix(&net.segments[j - 1], net.k, modes);
        product = &phase * &product;
        factors.push(ChainFactor {
            kind: FactorKind::Segment { index: j - 1 },
            matrix: phase,
        });
        let node = node_matrix_signed(net.gamma(j), modes, sign)
            .map_err(|e| SingularNode { node: j, magnitude: e.magnitude })?;
        product = &node * &product;
        factors.push(ChainFactor {
            kind: FactorKind::Node { index: j },
            matrix: node,
        });
    }
    factors.reverse();
    Ok(TransferChain { factors, product })
}

/// JSON rendering of a complex matrix as arrays of rows of [re, im] pairs.
pub fn matrix_to_json(m: &CMatrix) -> serde_json::Value {
    let rows: Vec<Vec<[f64; 2]>> = (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect();
    json!(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DriveSpec, QubitParams};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn coupling_matrix_m1() {
        let a = coupling_matrix_int(1);
        assert_eq!(a.as_slice(), &[1, -1, 1, -1]); // column-major storage
        assert_eq!(a[(0, 0)], 1);
        assert_eq!(a[(0, 1)], 1);
        assert_eq!(a[(1, 0)], -1);
        assert_eq!(a[(1, 1)], -1);
    }

    #[test]
    fn coupling_matrix_m2_row_pattern() {
        let a = coupling_matrix_int(2);
        for row in 0..4 {
            let want = if row % 2 == 0 { 1 } else { -1 };
            for col in 0..4 {
                assert_eq!(a[(row, col)], want);
            }
        }
    }

    #[test]
    fn coupling_matrix_squares_to_zero() {
        for modes in 1..=8 {
            let a = coupling_matrix_int(modes);
            let sq = &a * &a;
            assert!(sq.iter().all(|&x| x == 0), "A^2 != 0 for M = {modes}");
            // Exact in the complex embedding as well: the row sums cancel in
            // pairs with no rounding.
            let ac = coupling_matrix(modes);
            let sqc = &ac * &ac;
            assert!(sqc.iter().all(|&z| z == c(0.0, 0.0)));
        }
    }

    #[test]
    fn node_matrix_at_unit_gamma() {
        let t = node_matrix(Gamma::new(1.0, 0.0), 1).unwrap();
        assert_eq!(t[(0, 0)], c(0.0, 0.0));
        assert_eq!(t[(0, 1)], c(-1.0, 0.0));
        assert_eq!(t[(1, 0)], c(1.0, 0.0));
        assert_eq!(t[(1, 1)], c(2.0, 0.0));
    }

    #[test]
    fn node_matrix_large_gamma_is_near_identity() {
        let gamma = Gamma::new(1e8, -1e8);
        let t = node_matrix(gamma, 2).unwrap();
        let bound = 1.0 / gamma.value().norm() + 1e-15;
        for row in 0..4 {
            for col in 0..4 {
                let want = if row == col { 1.0 } else { 0.0 };
                assert!((t[(row, col)] - c(want, 0.0)).norm() <= bound);
            }
        }
    }

    #[test]
    fn node_matrix_rejects_singular_gamma() {
        assert!(node_matrix(Gamma::new(0.0, 0.0), 1).is_err());
        assert!(node_matrix(Gamma::new(0.0, 1e-10), 1).is_err());
        assert!(node_matrix(Gamma::new(0.0, 1e-8), 1).is_ok());
    }

    #[test]
    fn node_matrix_signed_flips_the_coupling_term() {
        let minus = node_matrix(Gamma::new(2.0, 0.0), 1).unwrap();
        let plus = node_matrix_signed(Gamma::new(2.0, 0.0), 1, NodeSign::Plus).unwrap();
        assert_eq!(minus[(0, 1)], c(-0.5, 0.0));
        assert_eq!(plus[(0, 1)], c(0.5, 0.0));
    }

    #[test]
    fn phase_matrix_zero_segment_is_identity() {
        let seg = SegmentParams {
            lengths: vec![0.0, 0.0],
            extra_phases: vec![0.0, 0.0],
        };
        let p = phase_matrix(&seg, 3.7, 2);
        assert_eq!(p, CMatrix::identity(4, 4));
    }

    #[test]
    fn phase_matrix_interferometer_segment() {
        // k L = theta on both modes, extra phase phi on mode 2.
        let theta = 0.9;
        let phi = 0.4;
        let seg = SegmentParams {
            lengths: vec![theta, theta],
            extra_phases: vec![0.0, phi],
        };
        let p = phase_matrix(&seg, 1.0, 2);
        assert!((p[(0, 0)] - Complex64::from_polar(1.0, theta)).norm() < 1e-15);
        assert!((p[(1, 1)] - Complex64::from_polar(1.0, -theta)).norm() < 1e-15);
        assert!((p[(2, 2)] - Complex64::from_polar(1.0, theta + phi)).norm() < 1e-15);
        assert!((p[(3, 3)] - Complex64::from_polar(1.0, -(theta + phi))).norm() < 1e-15);
        for row in 0..4 {
            for col in 0..4 {
                if row != col {
                    assert_eq!(p[(row, col)], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn phase_matrix_wraps_at_two_pi() {
        // k = 2, L = pi: the accumulated phase is a full turn.
        let seg = SegmentParams {
            lengths: vec![std::f64::consts::PI],
            extra_phases: vec![0.0],
        };
        let p = phase_matrix(&seg, 2.0, 1);
        assert!((p[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((p[(1, 1)] - c(1.0, 0.0)).norm() < 1e-15);
    }

    fn interferometer_net(theta: f64, phi: f64, gamma: Complex64) -> NetworkSpec {
        let qubit = QubitParams::from_gamma(Gamma(gamma));
        NetworkSpec {
            modes: 2,
            k: 1.0,
            qubits: vec![qubit.clone(), qubit],
            segments: vec![SegmentParams {
                lengths: vec![theta, theta],
                extra_phases: vec![0.0, phi],
            }],
            drive: DriveSpec::default(),
        }
    }

    #[test]
    fn chain_of_one_node_is_the_node_matrix() {
        let net = NetworkSpec {
            modes: 1,
            k: 1.0,
            qubits: vec![QubitParams::from_gamma(Gamma::new(0.5, -0.3))],
            segments: vec![],
            drive: DriveSpec::default(),
        };
        let chain = build_chain(&net).unwrap();
        assert_eq!(chain.factors.len(), 1);
        assert_eq!(chain.product, node_matrix(Gamma::new(0.5, -0.3), 1).unwrap());
    }

    #[test]
    fn chain_orders_factors_last_node_first() {
        let chain = build_chain(&interferometer_net(0.7, 0.2, c(1.0, 0.0))).unwrap();
        assert_eq!(chain.factors.len(), 3);
        assert_eq!(chain.factors[0].kind, FactorKind::Node { index: 1 });
        assert_eq!(chain.factors[1].kind, FactorKind::Segment { index: 0 });
        assert_eq!(chain.factors[2].kind, FactorKind::Node { index: 0 });
        // Product equals the ordered product of the stored factors.
        let explicit = &chain.factors[0].matrix
            * &(&chain.factors[1].matrix * &chain.factors[2].matrix);
        assert!((&chain.product - explicit).iter().all(|z| z.norm() < 1e-14));
    }

    #[test]
    fn chain_with_transparent_nodes_reduces_to_propagation() {
        let net = interferometer_net(1.1, 0.6, c(1e10, 1e10));
        let chain = build_chain(&net).unwrap();
        let phase = phase_matrix(&net.segments[0], net.k, 2);
        let dev = (&chain.product - &phase)
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(dev < 1e-9, "deviation {dev}");
    }

    #[test]
    fn chain_reports_singular_node_index() {
        let mut net = interferometer_net(0.5, 0.0, c(1.0, 0.0));
        net.qubits[1].gamma_override = Some(c(0.0, 0.0));
        let err = build_chain(&net).unwrap_err();
        assert_eq!(err.node, 1);
    }

    proptest! {
        #[test]
        fn phase_matrices_are_diagonal_and_unitary(
            modes in 1usize..4,
            k in 0.1..6.0f64,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let seg = SegmentParams {
                lengths: (0..modes).map(|_| rng.gen_range(0.0..20.0)).collect(),
                extra_phases: (0..modes).map(|_| rng.gen_range(-10.0..10.0)).collect(),
            };
            let p = phase_matrix(&seg, k, modes);
            for d in 0..2 * modes {
                prop_assert!((p[(d, d)].norm() - 1.0).abs() <= 1e-14);
            }
            let unit = &p * p.adjoint();
            let eye = CMatrix::identity(2 * modes, 2 * modes);
            let dev = (&unit - &eye).iter().map(|z| z.norm()).fold(0.0, f64::max);
            prop_assert!(dev <= 1e-13);
        }

        #[test]
        fn chain_product_is_numerically_associative(
            theta in 0.0..6.0f64,
            phi in -3.0..3.0f64,
            re in 0.1..3.0f64,
            im in -3.0..3.0f64,
        ) {
            let net = interferometer_net(theta, phi, c(re, im));
            let chain = build_chain(&net).unwrap();
            let f = &chain.factors;
            let left_grouped = &(&f[0].matrix * &f[1].matrix) * &f[2].matrix;
            let right_grouped = &f[0].matrix * &(&f[1].matrix * &f[2].matrix);
            let dev = (&left_grouped - &right_grouped)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            prop_assert!(dev <= 1e-12);
            let dev_cached = (&chain.product - &right_grouped)
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            prop_assert!(dev_cached <= 1e-12);
        }
    }
}
