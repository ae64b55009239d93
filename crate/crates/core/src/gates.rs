//! Gate set available on the double dot and a small circuit evaluator.
//!
//! Angles follow the exponents literally: `ZRotQubit1(θ) = e^{iθσ_{1z}}`,
//! `EsrXQubit1(θ) = e^{iθσ_{1x}}`, `GradientZ(ϑ) = e^{i(ϑ/4)(σ_{1z}−σ_{2z})}`
//! and `Exchange(φ) = e^{iφP_S}`, so `Exchange(π)` is SWAP and
//! `Exchange(π/2)` is √SWAP with no extra phase.

use std::f64::consts::FRAC_PI_4;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::qmath::{c, ComplexMatrix4, PureState, C64};
use crate::quorum::Projector;

/// Deviation from unitarity tolerated by [`evolve_projector`].
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// Exchange pulse with pulse area `φ = ∫J dt`.
    Exchange,
    ZRotQubit1,
    ZRotQubit2,
    ZRotBoth,
    /// Evolution under a z-field gradient.
    GradientZ,
    /// ESR x-rotation of the first spin.
    EsrXQubit1,
}

impl GateKind {
    pub const ALL: [GateKind; 6] = [
        GateKind::Exchange,
        GateKind::ZRotQubit1,
        GateKind::ZRotQubit2,
        GateKind::ZRotBoth,
        GateKind::GradientZ,
        GateKind::EsrXQubit1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateKind::Exchange => "exchange",
            GateKind::ZRotQubit1 => "z_rot_qubit1",
            GateKind::ZRotQubit2 => "z_rot_qubit2",
            GateKind::ZRotBoth => "z_rot_both",
            GateKind::GradientZ => "gradient_z",
            GateKind::EsrXQubit1 => "esr_x_qubit1",
        }
    }

    pub fn is_esr(self) -> bool {
        matches!(self, GateKind::EsrXQubit1)
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Gate {
    pub kind: GateKind,
    #[serde(rename = "angle_radians")]
    pub angle: f64,
}

impl Gate {
    pub fn new(kind: GateKind, angle: f64) -> Self {
        Self { kind, angle }
    }

    pub fn exchange(phi: f64) -> Self {
        Self::new(GateKind::Exchange, phi)
    }

    pub fn zrot1(theta: f64) -> Self {
        Self::new(GateKind::ZRotQubit1, theta)
    }

    pub fn zrot2(theta: f64) -> Self {
        Self::new(GateKind::ZRotQubit2, theta)
    }

    pub fn zboth(theta: f64) -> Self {
        Self::new(GateKind::ZRotBoth, theta)
    }

    pub fn gradient(vartheta: f64) -> Self {
        Self::new(GateKind::GradientZ, vartheta)
    }

    pub fn esr_x1(theta: f64) -> Self {
        Self::new(GateKind::EsrXQubit1, theta)
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.kind, -self.angle)
    }

    pub fn unitary(&self) -> ComplexMatrix4 {
        gate_unitary(self)
    }
}

fn diag(d: [C64; 4]) -> ComplexMatrix4 {
    ComplexMatrix4::from_diagonal(&d.into())
}

fn phase(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Projector onto the singlet `(|↑↓⟩ − |↓↑⟩)/√2`.
pub fn singlet_projector() -> ComplexMatrix4 {
    PureState::singlet().projector()
}

/// Exact analytic unitary of a single gate.
pub fn gate_unitary(g: &Gate) -> ComplexMatrix4 {
    let a = g.angle;
    match g.kind {
        GateKind::Exchange => {
            ComplexMatrix4::identity() + singlet_projector() * (phase(a) - c(1.0, 0.0))
        }
        GateKind::ZRotQubit1 => diag([phase(a), phase(a), phase(-a), phase(-a)]),
        GateKind::ZRotQubit2 => diag([phase(a), phase(-a), phase(a), phase(-a)]),
        GateKind::ZRotBoth => diag([phase(2.0 * a), c(1.0, 0.0), c(1.0, 0.0), phase(-2.0 * a)]),
        GateKind::GradientZ => diag([c(1.0, 0.0), phase(a / 2.0), phase(-a / 2.0), c(1.0, 0.0)]),
        GateKind::EsrXQubit1 => {
            let (s, co) = a.sin_cos();
            let x1 = crate::qmath::sigma1(1);
            ComplexMatrix4::identity().scale(co) + x1 * c(0.0, s)
        }
    }
}

/// Largest entry of `|U†U − 𝟙|`.
pub fn unitarity_error(u: &ComplexMatrix4) -> f64 {
    crate::qmath::max_abs_diff(&(u.adjoint() * u), &ComplexMatrix4::identity())
}

/// Ordered gate list. The first gate in the list acts first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Circuit {
    pub label: String,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(label: impl Into<String>, gates: Vec<Gate>) -> Self {
        Self { label: label.into(), gates }
    }

    pub fn empty(label: impl Into<String>) -> Self {
        Self::new(label, Vec::new())
    }

    /// `U = G_n ⋯ G_2 G_1`.
    pub fn unitary(&self) -> ComplexMatrix4 {
        circuit_unitary(self)
    }

    pub fn apply(&self, psi: &PureState) -> PureState {
        circuit_apply(self, psi)
    }

    /// Reversed gate order with negated angles, so `adjoint().unitary() = U†`.
    pub fn adjoint(&self) -> Circuit {
        Circuit {
            label: format!("{}†", self.label),
            gates: self.gates.iter().rev().map(Gate::inverse).collect(),
        }
    }

    /// Appends gates, returning a new circuit.
    pub fn then(&self, label: impl Into<String>, more: &[Gate]) -> Circuit {
        let mut gates = self.gates.clone();
        gates.extend_from_slice(more);
        Circuit::new(label, gates)
    }

    pub fn esr_count(&self) -> usize {
        self.gates.iter().filter(|g| g.kind.is_esr()).count()
    }

    /// Total ESR rotation `Σ|θ|`.
    pub fn esr_angle(&self) -> f64 {
        self.gates.iter().filter(|g| g.kind.is_esr()).map(|g| g.angle.abs()).sum()
    }

    /// Quorum-construction mode: all angles finite and at most one ESR π/2
    /// rotation (`e^{±iπ/4 σ_{1x}}`) in total.
    pub fn check_quorum_mode(&self) -> Result<()> {
        if let Some(g) = self.gates.iter().find(|g| !g.angle.is_finite()) {
            return Err(TomoError::InvalidArgument(format!("non-finite angle in {} gate", g.kind)));
        }
        if self.esr_angle() > FRAC_PI_4 + 1e-12 {
            return Err(TomoError::Precondition(format!(
                "circuit '{}' uses ESR rotation {:.6} > π/4",
                self.label,
                self.esr_angle()
            )));
        }
        Ok(())
    }
}

pub fn circuit_unitary(c: &Circuit) -> ComplexMatrix4 {
    c.gates
        .iter()
        .fold(ComplexMatrix4::identity(), |acc, g| gate_unitary(g) * acc)
}

pub fn circuit_apply(c: &Circuit, psi: &PureState) -> PureState {
    psi.evolve(&circuit_unitary(c))
}

/// `U P U†`, rejecting matrices that are not unitary within [`UNITARY_TOL`].
pub fn evolve_operator(u: &ComplexMatrix4, p: &ComplexMatrix4) -> Result<ComplexMatrix4> {
    let err = unitarity_error(u);
    if err > UNITARY_TOL {
        return Err(TomoError::NotUnitary(err));
    }
    Ok(u * p * u.adjoint())
}

pub fn evolve_projector(u: &ComplexMatrix4, p: &Projector) -> Result<Projector> {
    let m = evolve_operator(u, p.matrix())?;
    Ok(p.with_matrix(m, format!("U·{}·U†", p.label())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::{max_abs_diff, pauli_product, PureState};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_8, PI};

    const X: usize = 1;
    const Y: usize = 2;
    const Z: usize = 3;

    fn s(i: usize, j: usize) -> ComplexMatrix4 {
        pauli_product(i, j)
    }

    fn up_x() -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [c(h, 0.0), c(h, 0.0)]
    }

    fn down_x() -> [C64; 2] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        [c(h, 0.0), c(-h, 0.0)]
    }

    #[test]
    fn swap_exchanges_spins() {
        let out = Circuit::new("swap", vec![Gate::exchange(PI)]).apply(&PureState::up_down());
        assert!(out.same_ray(&PureState::down_up(), 1e-14));
        let swap = gate_unitary(&Gate::exchange(PI));
        let want = ComplexMatrix4::identity() - singlet_projector().scale(2.0);
        assert!(max_abs_diff(&swap, &want) < 1e-15);
    }

    #[test]
    fn zero_pulse_is_identity() {
        assert!(max_abs_diff(&gate_unitary(&Gate::exchange(0.0)), &ComplexMatrix4::identity()) < 1e-15);
        assert!(max_abs_diff(&Circuit::empty("e").unitary(), &ComplexMatrix4::identity()) == 0.0);
    }

    #[test]
    fn zrot_flips_x_spin_of_qubit1() {
        let psi4 = PureState::product(up_x(), up_x()).unwrap();
        let psi5 = PureState::product(down_x(), up_x()).unwrap();
        let out = Circuit::new("z1", vec![Gate::zrot1(FRAC_PI_2)]).apply(&psi4);
        assert!(out.same_ray(&psi5, 1e-14));
    }

    #[test]
    fn psi4_circuit_prepares_x_polarized_pair() {
        let circ = Circuit::new(
            "psi4",
            vec![Gate::esr_x1(FRAC_PI_4), Gate::exchange(FRAC_PI_2), Gate::zrot2(FRAC_PI_2)],
        );
        let out = circ.apply(&PureState::singlet());
        assert!(out.same_ray(&PureState::product(up_x(), up_x()).unwrap(), 1e-14));
    }

    #[test]
    fn psi10_circuit_matches_closed_form_projector() {
        let circ = Circuit::new("psi10", vec![Gate::gradient(FRAC_PI_2), Gate::esr_x1(FRAC_PI_4)]);
        let p = circ.apply(&PureState::singlet()).projector();
        let want = (s(0, 0) - s(Z, X) - s(X, Y) - s(Y, Z)).scale(0.25);
        assert!(max_abs_diff(&p, &want) < 1e-12);
    }

    #[test]
    fn gradient_angle_matches_half_angle_form() {
        // e^{i(π/8)(σ1z−σ2z)} is GradientZ(π/2).
        let direct = {
            let m = (s(Z, 0) - s(0, Z)).scale(FRAC_PI_8);
            ComplexMatrix4::from_diagonal(&m.diagonal().map(|d| C64::from_polar(1.0, d.re)))
        };
        assert!(max_abs_diff(&gate_unitary(&Gate::gradient(FRAC_PI_2)), &direct) < 1e-15);
    }

    #[test]
    fn exchange_evolution_of_up_down() {
        let p2 = PureState::up_down().projector();
        let u = gate_unitary(&Gate::exchange(FRAC_PI_2));
        let got = evolve_operator(&u, &p2).unwrap();
        let want = (s(0, 0) - s(Z, Z) + s(X, Y) - s(Y, X)).scale(0.25);
        assert!(max_abs_diff(&got, &want) < 1e-12);
    }

    #[test]
    fn exchange_conserves_zz_correlation() {
        let p2 = PureState::up_down().projector();
        for phi in [0.0, 0.3, FRAC_PI_2, 2.0] {
            let got = evolve_operator(&gate_unitary(&Gate::exchange(phi)), &p2).unwrap();
            let want = (s(0, 0) - s(Z, Z)
                + (s(Z, 0) - s(0, Z)).scale(phi.cos())
                + (s(X, Y) - s(Y, X)).scale(phi.sin()))
            .scale(0.25);
            assert!(max_abs_diff(&got, &want) < 1e-12, "phi={phi}");
        }
    }

    #[test]
    fn gradient_conjugation_of_singlet() {
        let ps = singlet_projector();
        for th in [0.0, FRAC_PI_4, FRAC_PI_2, PI] {
            let got = evolve_operator(&gate_unitary(&Gate::gradient(th)), &ps).unwrap();
            let want = (s(0, 0) - s(Z, Z)
                - (s(X, X) + s(Y, Y)).scale(th.cos())
                - (s(X, Y) - s(Y, X)).scale(th.sin()))
            .scale(0.25);
            assert!(max_abs_diff(&got, &want) < 1e-12, "theta={th}");
        }
    }

    #[test]
    fn zero_gradient_leaves_singlet() {
        let ps = singlet_projector();
        let got = evolve_operator(&gate_unitary(&Gate::gradient(0.0)), &ps).unwrap();
        assert!(max_abs_diff(&got, &ps) < 1e-15);
    }

    #[test]
    fn swap_conjugation_maps_up_down_to_down_up() {
        // Direct arithmetic: SWAP has ones at (0,0), (1,2), (2,1), (3,3).
        let mut swap = ComplexMatrix4::zeros();
        for (r, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            swap[(r, col)] = c(1.0, 0.0);
        }
        let p = PureState::up_down().projector();
        let oracle = swap * p * swap.transpose();
        let got = evolve_operator(&gate_unitary(&Gate::exchange(PI)), &p).unwrap();
        assert!(max_abs_diff(&got, &oracle) < 1e-15);
        assert!(max_abs_diff(&got, &PureState::down_up().projector()) < 1e-15);
    }

    #[test]
    fn evolve_rejects_non_unitary() {
        let u = ComplexMatrix4::identity().scale(1.1);
        assert!(matches!(
            evolve_operator(&u, &singlet_projector()),
            Err(TomoError::NotUnitary(_))
        ));
    }

    #[test]
    fn sqrt_swap_squares_to_swap() {
        let h = gate_unitary(&Gate::exchange(FRAC_PI_2));
        assert!(max_abs_diff(&(h * h), &gate_unitary(&Gate::exchange(PI))) < 1e-15);
    }

    #[test]
    fn quorum_mode_limits_esr() {
        let ok = Circuit::new("a", vec![Gate::esr_x1(FRAC_PI_4), Gate::zrot1(1.0)]);
        assert!(ok.check_quorum_mode().is_ok());
        let bad = Circuit::new("b", vec![Gate::esr_x1(FRAC_PI_4), Gate::esr_x1(0.1)]);
        assert!(bad.check_quorum_mode().is_err());
        let nan = Circuit::new("c", vec![Gate::zrot1(f64::NAN)]);
        assert!(nan.check_quorum_mode().is_err());
    }

    #[test]
    fn circuit_json_shape() {
        let circ = Circuit::new("x", vec![Gate::exchange(1.5)]);
        let v = serde_json::to_value(&circ.gates).unwrap();
        assert_eq!(v[0]["kind"], "exchange");
        assert_eq!(v[0]["angle_radians"], 1.5);
        let back: Vec<Gate> = serde_json::from_value(v).unwrap();
        assert_eq!(back, circ.gates);
        assert!(serde_json::from_str::<Gate>(r#"{"kind":"exchange","angle_radians":1,"x":2}"#).is_err());
    }

    fn any_gate() -> impl Strategy<Value = Gate> {
        (0usize..6, -10.0f64..10.0).prop_map(|(k, a)| Gate::new(GateKind::ALL[k], a))
    }

    proptest! {
        #[test]
        fn gates_are_unitary(g in any_gate()) {
            prop_assert!(unitarity_error(&gate_unitary(&g)) < 1e-12);
        }

        #[test]
        fn exchange_fixes_up_up_and_singlet(phi in -10.0f64..10.0) {
            let u = gate_unitary(&Gate::exchange(phi));
            for p in [PureState::up_up().projector(), singlet_projector()] {
                prop_assert!(max_abs_diff(&evolve_operator(&u, &p).unwrap(), &p) < 1e-12);
            }
        }

        #[test]
        fn total_z_commutes_with_exchange(theta in -10.0f64..10.0, phi in -10.0f64..10.0) {
            let a = gate_unitary(&Gate::zboth(theta));
            let b = gate_unitary(&Gate::exchange(phi));
            prop_assert!(max_abs_diff(&(a * b), &(b * a)) < 1e-12);
        }

        #[test]
        fn adjoint_inverts(gs in proptest::collection::vec(any_gate(), 0..6)) {
            let circ = Circuit::new("r", gs);
            let prod = circ.adjoint().unitary() * circ.unitary();
            prop_assert!(max_abs_diff(&prod, &ComplexMatrix4::identity()) < 1e-12);
        }
    }
}
