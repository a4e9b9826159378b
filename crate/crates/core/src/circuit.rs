//! Noisy IQP circuits over diagonal gates.
//!
//! A circuit is `d` layers on `n` qubits. Each layer is a set of diagonal
//! gates on pairwise-disjoint qubits, followed by amplitude damping of
//! strength `p` on every qubit. The `|+>^n` preparation and the final
//! Hadamard-basis measurement are implicit.
//!
//! # Text format
//!
//! ```text
//! # comment
//! iqp n=3 d=2 p=0.10000000000000001
//! layer 0
//! rz 0 0.5
//! cphase 1 2 3.1415926535897931
//! layer 1
//! ```
//!
//! `rz q θ` is `exp(iθZ)` on qubit `q`. `cphase q1 … qk θ` multiplies the
//! all-ones state of its targets by `e^{iθ}`. Angles are radians.

use std::f64::consts::TAU;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::numfmt::fmt_g17;

/// Widest controlled-phase gate accepted anywhere in the crate.
pub const MAX_GATE_WIDTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    SingleQubitZRotation,
    ControlledPhase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    kind: GateKind,
    targets: Vec<usize>,
    phase: f64,
}

impl Gate {
    pub fn rz(qubit: usize, theta: f64) -> Self {
        Gate { kind: GateKind::SingleQubitZRotation, targets: vec![qubit], phase: theta }
    }

    pub fn cphase(targets: impl Into<Vec<usize>>, theta: f64) -> Self {
        Gate { kind: GateKind::ControlledPhase, targets: targets.into(), phase: theta }
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Phase picked up by computational basis state `basis` (bit `q` is
    /// qubit `q`).
    pub fn basis_phase(&self, basis: usize) -> f64 {
        match self.kind {
            GateKind::SingleQubitZRotation => {
                if basis >> self.targets[0] & 1 == 0 {
                    self.phase
                } else {
                    -self.phase
                }
            }
            GateKind::ControlledPhase => {
                if self.targets.iter().all(|&q| basis >> q & 1 == 1) {
                    self.phase
                } else {
                    0.0
                }
            }
        }
    }

    fn relabeled(&self, perm: &[usize]) -> Gate {
        Gate { kind: self.kind, targets: self.targets.iter().map(|&q| perm[q]).collect(), phase: self.phase }
    }
}

/// A broken circuit invariant.
#[derive(Clone, Debug, PartialEq, Error)]
pub enum Violation {
    #[error("n must be at least 1")]
    NoQubits,
    #[error("d must be at least 1")]
    NoLayers,
    #[error("p must lie in (0,1]")]
    NoiseOutOfRange(f64),
    #[error("header declares d={declared} but {found} layers are present")]
    LayerCountMismatch { declared: usize, found: usize },
    #[error("layer {layer} gate {gate}: target {qubit} out of range for n={n}")]
    TargetOutOfRange { layer: usize, gate: usize, qubit: usize, n: usize },
    #[error("layer {layer} gate {gate}: duplicate target {qubit}")]
    DuplicateTarget { layer: usize, gate: usize, qubit: usize },
    #[error("layer {layer}: qubit {qubit} is used by more than one gate")]
    LayerCollision { layer: usize, qubit: usize },
    #[error("layer {layer} gate {gate}: rz takes exactly one target, got {count}")]
    RotationArity { layer: usize, gate: usize, count: usize },
    #[error("layer {layer} gate {gate}: cphase takes 2..={MAX_GATE_WIDTH} targets, got {count}")]
    ControlledPhaseArity { layer: usize, gate: usize, count: usize },
    #[error("layer {layer} gate {gate}: phase is not finite")]
    NonFinitePhase { layer: usize, gate: usize },
}

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid circuit: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n: usize,
    p: f64,
    layers: Vec<Vec<Gate>>,
}

impl Circuit {
    /// Builds and validates.
    pub fn new(n: usize, p: f64, layers: Vec<Vec<Gate>>) -> Result<Self, CircuitError> {
        let c = Self::from_parts(n, p, layers);
        let violations = c.validate();
        if violations.is_empty() {
            Ok(c)
        } else {
            Err(CircuitError::Invalid(violations))
        }
    }

    /// Builds without validation. Use [`Circuit::validate`] to inspect the result.
    pub fn from_parts(n: usize, p: f64, layers: Vec<Vec<Gate>>) -> Self {
        Circuit { n, p, layers }
    }

    /// `d` layers of pure damping.
    pub fn idle(n: usize, d: usize, p: f64) -> Result<Self, CircuitError> {
        Self::new(n, p, vec![Vec::new(); d])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn layers(&self) -> &[Vec<Gate>] {
        &self.layers
    }

    /// Width of the widest gate (1 for circuits with only rotations or no gates).
    pub fn locality(&self) -> usize {
        self.layers.iter().flatten().map(|g| g.targets.len()).max().unwrap_or(1).max(1)
    }

    pub fn gate_count(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Every invariant violation; empty iff the circuit is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.n == 0 {
            out.push(Violation::NoQubits);
        }
        if self.layers.is_empty() {
            out.push(Violation::NoLayers);
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            out.push(Violation::NoiseOutOfRange(self.p));
        }
        for (l, layer) in self.layers.iter().enumerate() {
            let mut used = vec![false; self.n];
            let mut collided = vec![false; self.n];
            for (g, gate) in layer.iter().enumerate() {
                let count = gate.targets.len();
                match gate.kind {
                    GateKind::SingleQubitZRotation if count != 1 => {
                        out.push(Violation::RotationArity { layer: l, gate: g, count })
                    }
                    GateKind::ControlledPhase if !(2..=MAX_GATE_WIDTH).contains(&count) => {
                        out.push(Violation::ControlledPhaseArity { layer: l, gate: g, count })
                    }
                    _ => {}
                }
                if !gate.phase.is_finite() {
                    out.push(Violation::NonFinitePhase { layer: l, gate: g });
                }
                for (i, &q) in gate.targets.iter().enumerate() {
                    if gate.targets[..i].contains(&q) {
                        out.push(Violation::DuplicateTarget { layer: l, gate: g, qubit: q });
                        continue;
                    }
                    if q >= self.n {
                        out.push(Violation::TargetOutOfRange { layer: l, gate: g, qubit: q, n: self.n });
                        continue;
                    }
                    if used[q] && !collided[q] {
                        collided[q] = true;
                        out.push(Violation::LayerCollision { layer: l, qubit: q });
                    }
                    used[q] = true;
                }
            }
        }
        out
    }

    /// The same circuit with qubit `q` renamed to `perm[q]`.
    pub fn relabeled(&self, perm: &[usize]) -> Circuit {
        Circuit {
            n: self.n,
            p: self.p,
            layers: self.layers.iter().map(|l| l.iter().map(|g| g.relabeled(perm)).collect()).collect(),
        }
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
        Parser::default().run(text)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "iqp n={} d={} p={}", self.n, self.depth(), fmt_g17(self.p))?;
        for (l, layer) in self.layers.iter().enumerate() {
            writeln!(f, "layer {l}")?;
            for gate in layer {
                let name = match gate.kind {
                    GateKind::SingleQubitZRotation => "rz",
                    GateKind::ControlledPhase => "cphase",
                };
                write!(f, "{name}")?;
                for q in &gate.targets {
                    write!(f, " {q}")?;
                }
                writeln!(f, " {}", fmt_g17(gate.phase))?;
            }
        }
        Ok(())
    }
}

#[derive(Default)]
struct Parser {
    header: Option<(usize, usize, f64)>,
    layers: Vec<Vec<Gate>>,
}

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<(usize, usize)> = None;
    for (col, (byte, ch)) in line.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (false, None) => start = Some((byte, col + 1)),
            (true, Some((b, c))) => {
                out.push(Token { text: &line[b..byte], column: c });
                start = None;
            }
            _ => {}
        }
    }
    if let Some((b, c)) = start {
        out.push(Token { text: &line[b..], column: c });
    }
    out
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> CircuitError {
    CircuitError::Syntax { line, column, message: message.into() }
}

impl Parser {
    fn run(mut self, text: &str) -> Result<Circuit, CircuitError> {
        let mut last_line = 0;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            last_line = line_no;
            let line = raw.split('#').next().unwrap_or("");
            let tokens = tokenize(line);
            if tokens.is_empty() {
                continue;
            }
            if self.header.is_none() {
                self.header = Some(parse_header(line_no, &tokens)?);
                continue;
            }
            match tokens[0].text {
                "layer" => self.parse_layer(line_no, &tokens)?,
                "rz" | "cphase" => {
                    let gate = parse_gate(line_no, &tokens)?;
                    match self.layers.last_mut() {
                        Some(layer) => layer.push(gate),
                        None => return Err(syntax(line_no, tokens[0].column, "gate before the first `layer` line")),
                    }
                }
                "iqp" => return Err(syntax(line_no, tokens[0].column, "duplicate header")),
                other => return Err(syntax(line_no, tokens[0].column, format!("unknown directive `{other}`"))),
            }
        }
        let Some((n, d, p)) = self.header else {
            return Err(syntax(last_line.max(1), 1, "missing `iqp n=<int> d=<int> p=<float>` header"));
        };
        let found = self.layers.len();
        let circuit = Circuit::from_parts(n, p, self.layers);
        let mut violations = Vec::new();
        if found != d {
            violations.push(Violation::LayerCountMismatch { declared: d, found });
        }
        violations.extend(circuit.validate().into_iter().filter(|v| !(found != d && *v == Violation::NoLayers)));
        if violations.is_empty() {
            Ok(circuit)
        } else {
            Err(CircuitError::Invalid(violations))
        }
    }

    fn parse_layer(&mut self, line: usize, tokens: &[Token]) -> Result<(), CircuitError> {
        if tokens.len() != 2 {
            return Err(syntax(line, tokens[0].column, "expected `layer <index>`"));
        }
        let index: usize = tokens[1]
            .text
            .parse()
            .map_err(|_| syntax(line, tokens[1].column, format!("invalid layer index `{}`", tokens[1].text)))?;
        if index != self.layers.len() {
            return Err(syntax(line, tokens[1].column, format!("expected layer {}, found {index}", self.layers.len())));
        }
        self.layers.push(Vec::new());
        Ok(())
    }
}

fn parse_header(line: usize, tokens: &[Token]) -> Result<(usize, usize, f64), CircuitError> {
    if tokens[0].text != "iqp" {
        return Err(syntax(line, tokens[0].column, "expected `iqp n=<int> d=<int> p=<float>` header"));
    }
    let (mut n, mut d, mut p) = (None, None, None);
    for tok in &tokens[1..] {
        let Some((key, value)) = tok.text.split_once('=') else {
            return Err(syntax(line, tok.column, format!("expected key=value, found `{}`", tok.text)));
        };
        let value_col = tok.column + key.chars().count() + 1;
        let bad = |what: &str| syntax(line, value_col, format!("invalid {what} `{value}`"));
        match key {
            "n" if n.is_none() => n = Some(value.parse::<usize>().map_err(|_| bad("qubit count"))?),
            "d" if d.is_none() => d = Some(value.parse::<usize>().map_err(|_| bad("depth"))?),
            "p" if p.is_none() => p = Some(value.parse::<f64>().map_err(|_| bad("noise strength"))?),
            "n" | "d" | "p" => return Err(syntax(line, tok.column, format!("duplicate key `{key}`"))),
            _ => return Err(syntax(line, tok.column, format!("unknown key `{key}`"))),
        }
    }
    let end = tokens.last().map(|t| t.column + t.text.chars().count()).unwrap_or(1);
    match (n, d, p) {
        (Some(n), Some(d), Some(p)) => Ok((n, d, p)),
        _ => Err(syntax(line, end, "header must set n, d and p")),
    }
}

fn parse_gate(line: usize, tokens: &[Token]) -> Result<Gate, CircuitError> {
    let name = tokens[0].text;
    if tokens.len() < 3 {
        let end = tokens.last().map(|t| t.column + t.text.chars().count()).unwrap_or(1);
        return Err(syntax(line, end, format!("`{name}` needs at least one qubit and an angle")));
    }
    let (theta_tok, qubit_toks) = tokens[1..].split_last().expect("non-empty");
    let mut targets = Vec::with_capacity(qubit_toks.len());
    for tok in qubit_toks {
        let q = tok
            .text
            .parse::<usize>()
            .map_err(|_| syntax(line, tok.column, format!("invalid qubit index `{}`", tok.text)))?;
        targets.push(q);
    }
    let theta = theta_tok
        .text
        .parse::<f64>()
        .map_err(|_| syntax(line, theta_tok.column, format!("invalid angle `{}`", theta_tok.text)))?;
    Ok(match name {
        "rz" => Gate { kind: GateKind::SingleQubitZRotation, targets, phase: theta },
        _ => Gate::cphase(targets, theta),
    })
}

/// Random circuit from the pairing ensemble.
///
/// Every layer draws a fresh random matching of the qubits. For
/// `locality == 2` each pair independently receives, with probability 1/2,
/// either one `C(θ)` or one `rz` on each of its two qubits. For larger
/// localities the qubits are instead split into groups of uniform random
/// width in `2..=locality`, each group receiving either one `C^(w)(θ)` or
/// one `rz` per qubit. A qubit left over at the end of the matching gets a
/// single `rz`. All angles are uniform in `[0, 2π)`.
pub fn random_circuit(n: usize, d: usize, p: f64, locality: usize, seed: u64) -> Result<Circuit, CircuitError> {
    if n < 2 {
        return Err(CircuitError::InvalidArgument(format!("random circuits need n >= 2, got {n}")));
    }
    if d < 1 {
        return Err(CircuitError::InvalidArgument("random circuits need d >= 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(CircuitError::InvalidArgument(format!("p must lie in (0,1], got {p}")));
    }
    if !(2..=MAX_GATE_WIDTH).contains(&locality) {
        return Err(CircuitError::InvalidArgument(format!("locality must lie in 2..={MAX_GATE_WIDTH}, got {locality}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut layers = Vec::with_capacity(d);
    for _ in 0..d {
        order.shuffle(&mut rng);
        let mut layer = Vec::new();
        let mut at = 0;
        while n - at >= 2 {
            let width = if locality == 2 { 2 } else { rng.gen_range(2..=locality.min(n - at)) };
            let group = &order[at..at + width];
            if rng.gen_bool(0.5) {
                layer.push(Gate::cphase(group.to_vec(), rng.gen_range(0.0..TAU)));
            } else {
                for &q in group {
                    layer.push(Gate::rz(q, rng.gen_range(0.0..TAU)));
                }
            }
            at += width;
        }
        if at < n {
            layer.push(Gate::rz(order[at], rng.gen_range(0.0..TAU)));
        }
        layers.push(layer);
    }
    Circuit::new(n, p, layers)
}
