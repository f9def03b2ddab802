use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

const UNITARY_TOL: f64 = 1e-10;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Rotation axis of a single-qubit Pauli generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];
}

/// Hermitian generator `G` of a parameterized gate `U(θ) = exp(-iθG/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    /// Single-qubit Pauli on the (only) target.
    Rot(Axis),
    /// `Z ⊗ Z` on both targets.
    ZZ,
    /// `|1⟩⟨1| ⊗ P`: rotation of the second target controlled on the first.
    Controlled(Axis),
}

impl Generator {
    pub fn is_diagonal(self) -> bool {
        matches!(
            self,
            Generator::Rot(Axis::Z) | Generator::ZZ | Generator::Controlled(Axis::Z)
        )
    }
}

/// Where the angle of a bound gate comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AngleSource {
    /// Trainable parameter slot.
    Param(usize),
    /// Input feature.
    Feature(usize),
    /// Product of two input features.
    FeatureProduct(usize, usize),
}

/// Binding of a gate angle to its source, together with the angle value the
/// matrix was built with.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRef {
    pub source: AngleSource,
    pub angle: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Targets {
    One(usize),
    Two(usize, usize),
}

impl Targets {
    pub fn max(self) -> usize {
        match self {
            Targets::One(q) => q,
            Targets::Two(a, b) => a.max(b),
        }
    }
}

/// Row-major gate matrix. For two-qubit gates the local basis index is
/// `2·bit(first target) + bit(second target)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GateMatrix {
    One([C64; 4]),
    Two([C64; 16]),
}

impl GateMatrix {
    fn dim(&self) -> usize {
        match self {
            GateMatrix::One(_) => 2,
            GateMatrix::Two(_) => 4,
        }
    }

    pub fn entries(&self) -> &[C64] {
        match self {
            GateMatrix::One(m) => m,
            GateMatrix::Two(m) => m,
        }
    }

    pub fn dagger(&self) -> GateMatrix {
        let d = self.dim();
        let src = self.entries();
        match self {
            GateMatrix::One(_) => {
                let mut out = [ZERO; 4];
                for r in 0..d {
                    for c in 0..d {
                        out[r * d + c] = src[c * d + r].conj();
                    }
                }
                GateMatrix::One(out)
            }
            GateMatrix::Two(_) => {
                let mut out = [ZERO; 16];
                for r in 0..d {
                    for c in 0..d {
                        out[r * d + c] = src[c * d + r].conj();
                    }
                }
                GateMatrix::Two(out)
            }
        }
    }

    fn unitarity_defect(&self) -> f64 {
        let d = self.dim();
        let m = self.entries();
        let mut worst = 0.0f64;
        for r in 0..d {
            for c in 0..d {
                let mut acc = ZERO;
                for k in 0..d {
                    acc += m[k * d + r].conj() * m[k * d + c];
                }
                let expect = if r == c { ONE } else { ZERO };
                worst = worst.max((acc - expect).norm());
            }
        }
        worst
    }
}

/// Sparsity pattern used to pick a fast application kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Structure {
    General,
    Diagonal,
    /// Two-qubit gate equal to `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ V`.
    Controlled,
}

fn classify(m: &GateMatrix) -> Structure {
    let d = m.dim();
    let e = m.entries();
    let off_diag_zero = (0..d).all(|r| (0..d).all(|c| r == c || e[r * d + c] == ZERO));
    if off_diag_zero {
        return Structure::Diagonal;
    }
    if let GateMatrix::Two(e) = m {
        let upper_identity = e[0] == ONE && e[5] == ONE && e[1] == ZERO && e[4] == ZERO;
        let blocks_zero = [2, 3, 6, 7, 8, 9, 12, 13].iter().all(|&i| e[i] == ZERO);
        if upper_identity && blocks_zero {
            return Structure::Controlled;
        }
    }
    Structure::General
}

/// A single gate application: a 2×2 or 4×4 unitary on one or two qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    pub matrix: GateMatrix,
    pub targets: Targets,
    pub param: Option<ParamRef>,
    pub generator: Option<Generator>,
    pub(crate) structure: Structure,
}

impl GateOp {
    /// Arbitrary single-qubit unitary, checked to 1e-10.
    pub fn unitary1(q: usize, m: [C64; 4]) -> Result<Self> {
        Self::checked(GateMatrix::One(m), Targets::One(q))
    }

    /// Arbitrary two-qubit unitary on `(a, b)`, checked to 1e-10.
    pub fn unitary2(a: usize, b: usize, m: [C64; 16]) -> Result<Self> {
        if a == b {
            return Err(Error::InvalidGate(format!("repeated target qubit {a}")));
        }
        Self::checked(GateMatrix::Two(m), Targets::Two(a, b))
    }

    fn checked(matrix: GateMatrix, targets: Targets) -> Result<Self> {
        let defect = matrix.unitarity_defect();
        if !(defect <= UNITARY_TOL) {
            return Err(Error::InvalidGate(format!(
                "matrix is not unitary (max |U†U - I| = {defect:e})"
            )));
        }
        Ok(Self::raw(matrix, targets, None))
    }

    fn raw(matrix: GateMatrix, targets: Targets, generator: Option<Generator>) -> Self {
        let structure = classify(&matrix);
        GateOp {
            matrix,
            targets,
            param: None,
            generator,
            structure,
        }
    }

    pub fn h(q: usize) -> Self {
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        Self::raw(GateMatrix::One([s, s, s, -s]), Targets::One(q), None)
    }

    pub fn x(q: usize) -> Self {
        Self::raw(GateMatrix::One([ZERO, ONE, ONE, ZERO]), Targets::One(q), None)
    }

    pub fn y(q: usize) -> Self {
        Self::raw(GateMatrix::One([ZERO, -I, I, ZERO]), Targets::One(q), None)
    }

    pub fn z(q: usize) -> Self {
        Self::raw(GateMatrix::One([ONE, ZERO, ZERO, -ONE]), Targets::One(q), None)
    }

    pub fn s(q: usize) -> Self {
        Self::raw(GateMatrix::One([ONE, ZERO, ZERO, I]), Targets::One(q), None)
    }

    pub fn s_dag(q: usize) -> Self {
        Self::raw(GateMatrix::One([ONE, ZERO, ZERO, -I]), Targets::One(q), None)
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        let mut m = [ZERO; 16];
        m[0] = ONE;
        m[5] = ONE;
        m[11] = ONE;
        m[14] = ONE;
        Self::raw(GateMatrix::Two(m), Targets::Two(control, target), None)
    }

    pub fn cz(a: usize, b: usize) -> Self {
        let mut m = [ZERO; 16];
        m[0] = ONE;
        m[5] = ONE;
        m[10] = ONE;
        m[15] = -ONE;
        Self::raw(GateMatrix::Two(m), Targets::Two(a, b), None)
    }

    /// `R_axis(θ) = exp(-iθP/2)`.
    pub fn rot(axis: Axis, q: usize, theta: f64) -> Self {
        Self::raw(
            GateMatrix::One(rotation_matrix(axis, theta)),
            Targets::One(q),
            Some(Generator::Rot(axis)),
        )
    }

    /// `R_ZZ(θ) = exp(-iθ Z⊗Z / 2)`.
    pub fn rzz(a: usize, b: usize, theta: f64) -> Self {
        Self::raw(
            GateMatrix::Two(rzz_matrix(theta)),
            Targets::Two(a, b),
            Some(Generator::ZZ),
        )
    }

    /// Rotation of `target` about `axis` applied when `control` is `|1⟩`.
    pub fn crot(axis: Axis, control: usize, target: usize, theta: f64) -> Self {
        Self::raw(
            GateMatrix::Two(controlled_matrix(rotation_matrix(axis, theta))),
            Targets::Two(control, target),
            Some(Generator::Controlled(axis)),
        )
    }

    /// Gate for a generator at a given angle.
    pub fn from_generator(generator: Generator, targets: Targets, theta: f64) -> Result<Self> {
        match (generator, targets) {
            (Generator::Rot(axis), Targets::One(q)) => Ok(Self::rot(axis, q, theta)),
            (Generator::ZZ, Targets::Two(a, b)) => Ok(Self::rzz(a, b, theta)),
            (Generator::Controlled(axis), Targets::Two(c, t)) => Ok(Self::crot(axis, c, t, theta)),
            _ => Err(Error::InvalidGate(format!(
                "generator {generator:?} does not match targets {targets:?}"
            ))),
        }
    }

    /// Attaches an angle source. The gate keeps its current matrix; `angle`
    /// records the value that matrix was built with.
    pub fn bind(mut self, source: AngleSource, angle: f64) -> Self {
        self.param = Some(ParamRef { source, angle });
        self
    }

    /// Same gate re-instantiated at a different angle. Fails for gates
    /// without a rotation generator.
    pub fn with_angle(&self, theta: f64) -> Result<Self> {
        let generator = self.generator.ok_or_else(|| {
            Error::UnsupportedGate(format!(
                "gate on {:?} has no rotation generator",
                self.targets
            ))
        })?;
        let mut g = Self::from_generator(generator, self.targets, theta)?;
        g.param = self.param.map(|p| ParamRef { angle: theta, ..p });
        Ok(g)
    }

    pub fn dagger(&self) -> Self {
        GateOp {
            matrix: self.matrix.dagger(),
            targets: self.targets,
            param: self.param,
            generator: self.generator,
            structure: self.structure,
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self.targets, Targets::Two(..))
    }

    pub(crate) fn check_targets(&self, n_qubits: usize) -> Result<()> {
        match self.targets {
            Targets::One(q) if q >= n_qubits => Err(Error::InvalidGate(format!(
                "target {q} out of range for {n_qubits} qubits"
            ))),
            Targets::Two(a, b) if a == b => {
                Err(Error::InvalidGate(format!("repeated target qubit {a}")))
            }
            Targets::Two(a, b) if a.max(b) >= n_qubits => Err(Error::InvalidGate(format!(
                "targets ({a}, {b}) out of range for {n_qubits} qubits"
            ))),
            _ => Ok(()),
        }
    }
}

pub fn rotation_matrix(axis: Axis, theta: f64) -> [C64; 4] {
    let (s, c) = (theta / 2.0).sin_cos();
    match axis {
        Axis::X => [
            C64::new(c, 0.0),
            C64::new(0.0, -s),
            C64::new(0.0, -s),
            C64::new(c, 0.0),
        ],
        Axis::Y => [
            C64::new(c, 0.0),
            C64::new(-s, 0.0),
            C64::new(s, 0.0),
            C64::new(c, 0.0),
        ],
        Axis::Z => [C64::new(c, -s), ZERO, ZERO, C64::new(c, s)],
    }
}

fn rzz_matrix(theta: f64) -> [C64; 16] {
    let (s, c) = (theta / 2.0).sin_cos();
    let minus = C64::new(c, -s);
    let plus = C64::new(c, s);
    let mut m = [ZERO; 16];
    m[0] = minus;
    m[5] = plus;
    m[10] = plus;
    m[15] = minus;
    m
}

fn controlled_matrix(v: [C64; 4]) -> [C64; 16] {
    let mut m = [ZERO; 16];
    m[0] = ONE;
    m[5] = ONE;
    m[10] = v[0];
    m[11] = v[1];
    m[14] = v[2];
    m[15] = v[3];
    m
}

/// Ordered list of gates on a fixed register.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GateSequence {
    n_qubits: usize,
    gates: Vec<GateOp>,
}

impl GateSequence {
    pub fn new(n_qubits: usize) -> Self {
        GateSequence {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[GateOp] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn push(&mut self, gate: GateOp) -> Result<()> {
        gate.check_targets(self.n_qubits)?;
        self.gates.push(gate);
        Ok(())
    }

    pub fn extend(&mut self, other: GateSequence) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(Error::shape(format!(
                "cannot append a {}-qubit sequence to a {}-qubit one",
                other.n_qubits, self.n_qubits
            )));
        }
        self.gates.extend(other.gates);
        Ok(())
    }

    pub fn two_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.is_two_qubit()).count()
    }

    /// Number of gates bound to trainable slots.
    pub fn param_slot_count(&self) -> usize {
        self.gates
            .iter()
            .filter(|g| matches!(g.param, Some(ParamRef { source: AngleSource::Param(_), .. })))
            .count()
    }
}

impl<'a> IntoIterator for &'a GateSequence {
    type Item = &'a GateOp;
    type IntoIter = std::slice::Iter<'a, GateOp>;

    fn into_iter(self) -> Self::IntoIter {
        self.gates.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_unitary_rejected() {
        let m = [ONE, ONE, ZERO, ONE];
        assert!(matches!(GateOp::unitary1(0, m), Err(Error::InvalidGate(_))));
    }

    #[test]
    fn structure_detection() {
        assert_eq!(GateOp::cz(0, 1).structure, Structure::Diagonal);
        assert_eq!(GateOp::rzz(0, 1, 0.3).structure, Structure::Diagonal);
        assert_eq!(GateOp::cnot(0, 1).structure, Structure::Controlled);
        assert_eq!(GateOp::crot(Axis::Y, 0, 1, 0.3).structure, Structure::Controlled);
        assert_eq!(GateOp::h(0).structure, Structure::General);
    }

    #[test]
    fn builtin_gates_are_unitary() {
        let gates = [
            GateOp::h(0),
            GateOp::s_dag(0),
            GateOp::rot(Axis::X, 0, 0.7),
            GateOp::rot(Axis::Y, 0, -1.1),
            GateOp::rzz(0, 1, 2.0),
            GateOp::crot(Axis::X, 0, 1, 0.4),
            GateOp::cnot(1, 0),
        ];
        for g in gates {
            assert!(g.matrix.unitarity_defect() < 1e-14, "{g:?}");
        }
    }

    #[test]
    fn out_of_range_target_rejected() {
        let mut seq = GateSequence::new(2);
        assert!(seq.push(GateOp::cnot(0, 2)).is_err());
        assert!(seq.push(GateOp::h(1)).is_ok());
    }

    #[test]
    fn with_angle_needs_generator() {
        assert!(matches!(
            GateOp::h(0).with_angle(0.1),
            Err(Error::UnsupportedGate(_))
        ));
        let g = GateOp::rot(Axis::Y, 0, 0.2).bind(AngleSource::Param(3), 0.2);
        let shifted = g.with_angle(1.0).unwrap();
        assert_eq!(shifted.param.unwrap().angle, 1.0);
        assert_eq!(shifted.param.unwrap().source, AngleSource::Param(3));
    }
}
