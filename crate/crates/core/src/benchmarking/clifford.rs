//! The 24 single-qubit Cliffords, each as `Z(γ)·X_π/2·Z(β)·X_π/2·Z(α)`.
//!
//! The group is enumerated by closure from `H` and `S` (breadth first, identity
//! first). Each element then takes the first angle triple `(α, β, γ)`, in
//! lexicographic order over multiples of π/2, that reproduces it up to phase.

use std::f64::consts::FRAC_PI_2;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::gate::x90;
use crate::linalg::{phase_insensitive_distance, rz, ComplexMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Primitive {
    X90,
    /// Frame change by the given angle, zero duration.
    VirtualZ(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliffordGate {
    pub index: usize,
    /// Primitives in the order they are played.
    pub decomposition: Vec<Primitive>,
}

impl CliffordGate {
    /// Ideal unitary composed from the decomposition.
    pub fn unitary(&self) -> ComplexMatrix {
        self.decomposition.iter().fold(ComplexMatrix::identity(2), |u, p| {
            let m = match p {
                Primitive::X90 => x90(),
                Primitive::VirtualZ(phi) => rz(*phi),
            };
            &m * &u
        })
    }
}

pub struct CliffordGroup {
    pub gates: Vec<CliffordGate>,
    pub unitaries: Vec<ComplexMatrix>,
    /// `product[i][j]` is the index of `C_i · C_j` (apply `C_j` first).
    pub product: Vec<Vec<usize>>,
    pub inverse: Vec<usize>,
}

pub const GROUP_SIZE: usize = 24;

fn same_up_to_phase(a: &ComplexMatrix, b: &ComplexMatrix) -> bool {
    phase_insensitive_distance(a, b) < 1e-9
}

fn find(list: &[ComplexMatrix], u: &ComplexMatrix) -> Option<usize> {
    list.iter().position(|v| same_up_to_phase(v, u))
}

fn build() -> CliffordGroup {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let hadamard = ComplexMatrix::from_real_rows(2, &[h, h, h, -h]);
    let s = ComplexMatrix::diagonal(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]);
    let mut elements = vec![ComplexMatrix::identity(2)];
    let mut frontier = 0;
    while frontier < elements.len() {
        let u = elements[frontier].clone();
        for g in [&hadamard, &s] {
            let v = g * &u;
            if find(&elements, &v).is_none() {
                elements.push(v);
            }
        }
        frontier += 1;
    }
    assert_eq!(elements.len(), GROUP_SIZE);

    let angle = |k: usize| k as f64 * FRAC_PI_2;
    let gates: Vec<CliffordGate> = elements
        .iter()
        .enumerate()
        .map(|(index, target)| {
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let decomposition = vec![
                            Primitive::VirtualZ(angle(a)),
                            Primitive::X90,
                            Primitive::VirtualZ(angle(b)),
                            Primitive::X90,
                            Primitive::VirtualZ(angle(c)),
                        ];
                        let g = CliffordGate { index, decomposition };
                        if same_up_to_phase(&g.unitary(), target) {
                            return g;
                        }
                    }
                }
            }
            unreachable!("every Clifford has a two-pulse decomposition")
        })
        .collect();
    let unitaries: Vec<ComplexMatrix> = gates.iter().map(|g| g.unitary()).collect();
    let product = (0..GROUP_SIZE)
        .map(|i| {
            (0..GROUP_SIZE)
                .map(|j| find(&unitaries, &(&unitaries[i] * &unitaries[j])).expect("group is closed"))
                .collect()
        })
        .collect();
    let inverse = (0..GROUP_SIZE)
        .map(|i| find(&unitaries, &unitaries[i].dagger()).expect("inverse exists"))
        .collect();
    CliffordGroup {
        gates,
        unitaries,
        product,
        inverse,
    }
}

pub fn clifford_group() -> &'static CliffordGroup {
    static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
    GROUP.get_or_init(build)
}

pub fn clifford_table() -> Vec<CliffordGate> {
    clifford_group().gates.clone()
}

/// Index of the Clifford equal to `X_π/2`.
pub fn x90_index() -> usize {
    find(&clifford_group().unitaries, &x90()).expect("X90 is a Clifford")
}
