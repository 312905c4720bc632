//! Cascaded interferometer descriptions.
//!
//! A circuit is an ordered list of elements (Mach-Zehnder stages and bare
//! phase shifters) whose phases are either literal radians or named
//! parameters. [`evaluate_chain`] binds the parameters and composes the
//! element matrices, first statement acting first.
//!
//! The text form (`.mzi` files) is one statement per line:
//!
//! ```text
//! # two coupled stages with a control phase between them
//! source intensity=1.0
//! mzi C arm=lower phase=psi
//! phase arm=upper value=phi
//! mzi W arm=upper phase=psi
//! detect gamma delta
//! ```

mod parser;
mod render;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::optics::{self, Arm, FieldPair, TransferMatrix};

pub use parser::{parse_circuit, ParseError};
pub use render::render_circuit;

/// Name of the swept phase shared by every stage of a built chain.
pub const SWEPT_PHASE: &str = "psi";
/// Name of the inter-stage control phase when it is left symbolic.
pub const CONTROL_PHASE: &str = "phi";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PhaseValue {
    Literal(f64),
    Param(String),
}

impl PhaseValue {
    pub fn param(name: impl Into<String>) -> Self {
        PhaseValue::Param(name.into())
    }

    fn resolve(&self, bindings: &ParameterBindings) -> Result<f64> {
        match self {
            PhaseValue::Literal(v) => Ok(*v),
            PhaseValue::Param(name) => bindings
                .get(name)
                .ok_or_else(|| Error::UnboundParameter(name.clone())),
        }
    }
}

impl From<f64> for PhaseValue {
    fn from(v: f64) -> Self {
        PhaseValue::Literal(v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ElementKind {
    Mzi { name: String },
    PhaseShifter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementNode {
    pub kind: ElementKind,
    pub arm: Arm,
    pub phase: PhaseValue,
}

impl ElementNode {
    pub fn mzi(name: impl Into<String>, arm: Arm, phase: impl Into<PhaseValue>) -> Self {
        Self {
            kind: ElementKind::Mzi { name: name.into() },
            arm,
            phase: phase.into(),
        }
    }

    pub fn phase_shifter(arm: Arm, phase: impl Into<PhaseValue>) -> Self {
        Self {
            kind: ElementKind::PhaseShifter,
            arm,
            phase: phase.into(),
        }
    }

    pub fn matrix(&self, bindings: &ParameterBindings) -> Result<TransferMatrix> {
        let phase = self.phase.resolve(bindings)?;
        match self.kind {
            ElementKind::Mzi { .. } => optics::mzi(self.arm, phase),
            ElementKind::PhaseShifter => optics::phase_element(self.arm, phase),
        }
    }
}

/// A validated circuit. Immutable once constructed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitAst {
    source_intensity: f64,
    elements: Vec<ElementNode>,
    detectors: (String, String),
}

impl CircuitAst {
    pub fn new(
        source_intensity: f64,
        elements: Vec<ElementNode>,
        detectors: (String, String),
    ) -> Result<Self> {
        ensure_finite("source intensity", source_intensity)?;
        if source_intensity < 0.0 {
            return Err(Error::InvalidParameter {
                name: "source intensity",
                reason: format!("must be >= 0, got {source_intensity}"),
            });
        }
        if elements.is_empty() {
            return Err(Error::InvalidArgument(
                "a circuit needs at least one element".into(),
            ));
        }
        for el in &elements {
            if let PhaseValue::Literal(v) = el.phase {
                ensure_finite("phase", v)?;
            }
        }
        if detectors.0 == detectors.1 {
            return Err(Error::InvalidArgument(format!(
                "detector labels must differ, both are `{}`",
                detectors.0
            )));
        }
        Ok(Self {
            source_intensity,
            elements,
            detectors,
        })
    }

    pub fn source_intensity(&self) -> f64 {
        self.source_intensity
    }

    pub fn elements(&self) -> &[ElementNode] {
        &self.elements
    }

    /// Output labels, upper path first.
    pub fn detectors(&self) -> (&str, &str) {
        (&self.detectors.0, &self.detectors.1)
    }

    /// Every parameter name referenced by an element.
    pub fn parameters(&self) -> BTreeSet<&str> {
        self.elements
            .iter()
            .filter_map(|e| match &e.phase {
                PhaseValue::Param(p) => Some(p.as_str()),
                PhaseValue::Literal(_) => None,
            })
            .collect()
    }

    pub fn stage_count(&self) -> usize {
        self.elements
            .iter()
            .filter(|e| matches!(e.kind, ElementKind::Mzi { .. }))
            .count()
    }
}

/// Parameter name to radians.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterBindings(BTreeMap<String, f64>);

impl ParameterBindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for ParameterBindings {
    fn from_iter<T: IntoIterator<Item = (S, f64)>>(iter: T) -> Self {
        Self(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

/// Builds an `m`-stage chain of Mach-Zehnder interferometers sharing the
/// swept phase `psi`.
///
/// Stages alternate their phase arm, starting on the lower arm
/// (lower, upper, lower, ...). This alternation is what makes the outputs of
/// the chain oscillate as `cos(m psi)`; putting every stage on the same arm
/// does not multiply the fringe frequency. An upper-arm control phase `phi`
/// sits between consecutive stages. From three stages on, one more control
/// phase follows the last stage; it is diagonal and so never changes an
/// output intensity.
///
/// `m = 1` is a bare interferometer and `m = 2` is the two-stage circuit
/// with the control phase between the stages.
pub fn build_cbw_chain(m: usize, phi: impl Into<PhaseValue>) -> Result<CircuitAst> {
    if m == 0 {
        return Err(Error::InvalidArgument(
            "a chain needs at least one stage".into(),
        ));
    }
    let phi = phi.into();
    let mut elements = Vec::with_capacity(2 * m);
    for stage in 0..m {
        if stage > 0 {
            elements.push(ElementNode::phase_shifter(Arm::Upper, phi.clone()));
        }
        let (arm, letter) = if stage % 2 == 0 {
            (Arm::Lower, 'C')
        } else {
            (Arm::Upper, 'W')
        };
        elements.push(ElementNode::mzi(
            format!("{letter}{}", stage + 1),
            arm,
            PhaseValue::param(SWEPT_PHASE),
        ));
    }
    if m >= 3 {
        elements.push(ElementNode::phase_shifter(Arm::Upper, phi));
    }
    CircuitAst::new(1.0, elements, ("gamma".into(), "delta".into()))
}

/// Composes the bound element matrices; the first statement acts first.
pub fn evaluate_chain(ast: &CircuitAst, bindings: &ParameterBindings) -> Result<TransferMatrix> {
    let matrices = ast
        .elements
        .iter()
        .map(|e| e.matrix(bindings))
        .collect::<Result<Vec<_>>>()?;
    optics::compose(&matrices)
}

/// Output intensities for the circuit's source entering the upper port.
pub fn output_intensities(ast: &CircuitAst, bindings: &ParameterBindings) -> Result<(f64, f64)> {
    let m = evaluate_chain(ast, bindings)?;
    Ok(optics::intensities(&optics::apply(
        &m,
        &FieldPair::from_source(ast.source_intensity),
    )))
}

/// Probability that a single photon leaves on the upper and lower outputs.
pub fn output_probabilities(ast: &CircuitAst, bindings: &ParameterBindings) -> Result<(f64, f64)> {
    let m = evaluate_chain(ast, bindings)?;
    let (u, _) = optics::intensities(&optics::apply(&m, &FieldPair::from_source(1.0)));
    // The chain is unitary, so the lower probability is the complement up to
    // rounding; clamping keeps the pair a valid distribution.
    let u = u.clamp(0.0, 1.0);
    Ok((u, 1.0 - u))
}
