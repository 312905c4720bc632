use std::fmt::Write;

use super::{CircuitAst, ElementKind, PhaseValue};

fn phase_text(p: &PhaseValue) -> String {
    match p {
        // Debug formatting of f64 is the shortest text that parses back to
        // the same bits.
        PhaseValue::Literal(v) => format!("{v:?}"),
        PhaseValue::Param(name) => name.clone(),
    }
}

/// Canonical `.mzi` text for `ast`, ending in exactly one newline.
pub fn render_circuit(ast: &CircuitAst) -> String {
    let mut out = String::new();
    writeln!(out, "source intensity={:?}", ast.source_intensity()).unwrap();
    for el in ast.elements() {
        match &el.kind {
            ElementKind::Mzi { name } => writeln!(
                out,
                "mzi {name} arm={} phase={}",
                el.arm,
                phase_text(&el.phase)
            ),
            ElementKind::PhaseShifter => {
                writeln!(out, "phase arm={} value={}", el.arm, phase_text(&el.phase))
            }
        }
        .unwrap();
    }
    let (a, b) = ast.detectors();
    writeln!(out, "detect {a} {b}").unwrap();
    out
}
