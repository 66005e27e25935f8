//! Netlist parsing and canonical quantization of lumped superconducting
//! circuits: node-flux Lagrangian, capacitance-matrix Legendre transform and
//! numeric spectra for one or two free coordinates.
//!
//! SI units throughout; energies in joules. Offset charges are zero.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::f64::consts::PI;
use std::fmt::{self, Write as _};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hilbert::C64;
use crate::linalg::{hermitian_eigen, hermitian_eigenvalues, symmetric_eigen};

pub mod constants {
    pub const PLANCK: f64 = 6.626_070_15e-34;
    pub const HBAR: f64 = PLANCK / (2.0 * std::f64::consts::PI);
    pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
    /// Φ₀ = h / 2e.
    pub const FLUX_QUANTUM: f64 = PLANCK / (2.0 * ELEMENTARY_CHARGE);
    pub const FINE_STRUCTURE: f64 = 1.0 / 137.035_999;
}

use constants::*;

/// Relative eigenvalue of C below which the capacitance matrix is singular.
pub const SINGULAR_CAPACITANCE: f64 = 1e-12;
pub const DEFAULT_CHARGE_CUTOFF: usize = 20;
pub const DEFAULT_OSCILLATOR_LEVELS: usize = 40;
pub const MAX_DIAGONALIZED_COORDINATES: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// 1-based line number, absent for whole-netlist checks.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("invalid netlist:\n{}", .0.iter().map(|e| e.to_string()).collect::<Vec<_>>().join("\n"))]
    Netlist(Vec<LineError>),
    #[error("capacitance matrix is singular; free charge mode {null_vector:?} over {coordinates:?}")]
    SingularCapacitance { coordinates: Vec<String>, null_vector: Vec<f64> },
    #[error("{count} coordinates requested for diagonalization, at most {MAX_DIAGONALIZED_COORDINATES} supported")]
    TooManyCoordinates { count: usize },
    #[error("basis has {got} entries for {expected} coordinates")]
    BasisMismatch { expected: usize, got: usize },
    #[error("coordinate {0} carries an inductive term and cannot use the charge basis")]
    NotPeriodic(String),
    #[error("coordinate {0} has no inductive confinement for an oscillator basis")]
    NoConfinement(String),
    #[error("basis size must be positive")]
    EmptyBasis,
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be non-negative, got {value}")]
    Negative { name: &'static str, value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ElementKind {
    Capacitor { c: f64 },
    Inductor { l: f64 },
    Junction { ej: f64, closure: Option<String> },
}

/// A two-terminal element; its branch flux is `φ_b − φ_a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Element {
    pub kind: ElementKind,
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxLoop {
    pub name: String,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircuitNetlist {
    pub ground: String,
    /// Free nodes in declaration order.
    pub nodes: Vec<String>,
    pub elements: Vec<Element>,
    pub loops: Vec<FluxLoop>,
}

fn parse_value(token: &str, what: &str, line: usize, errors: &mut Vec<LineError>) -> Option<f64> {
    match token.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Some(v),
        Ok(v) => {
            errors.push(LineError { line: Some(line), message: format!("{what} must be positive, got {v}") });
            None
        }
        Err(_) => {
            errors.push(LineError { line: Some(line), message: format!("cannot parse {what} '{token}'") });
            None
        }
    }
}

/// Parses the line grammar
///
/// ```text
/// NODE <name>
/// GROUND <name>
/// C <a> <b> <farads>
/// L <a> <b> <henries>
/// JJ <a> <b> <EJ_joules> [CLOSURE <loop>]
/// FLUX <loop> <weber>
/// ```
///
/// with `#` comments. All errors are collected before returning.
pub fn parse_netlist(text: &str) -> Result<CircuitNetlist, CircuitError> {
    let mut errors = Vec::new();
    let mut ground: Option<(String, usize)> = None;
    let mut nodes: Vec<(String, usize)> = Vec::new();
    let mut elements: Vec<(Element, usize)> = Vec::new();
    let mut loops: Vec<(FluxLoop, usize)> = Vec::new();

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let Some(&keyword) = tokens.first() else { continue };
        let err = |errors: &mut Vec<LineError>, message: String| errors.push(LineError { line: Some(line), message });
        match keyword {
            "NODE" | "GROUND" => {
                if tokens.len() != 2 {
                    err(&mut errors, format!("{keyword} takes one name"));
                    continue;
                }
                let name = tokens[1].to_string();
                let taken = nodes.iter().any(|(n, _)| *n == name) || ground.as_ref().is_some_and(|(g, _)| *g == name);
                if taken {
                    err(&mut errors, format!("node '{name}' declared twice"));
                } else if keyword == "GROUND" {
                    if let Some((g, first)) = &ground {
                        err(&mut errors, format!("duplicate ground '{name}', '{g}' already declared on line {first}"));
                    } else {
                        ground = Some((name, line));
                    }
                } else {
                    nodes.push((name, line));
                }
            }
            "C" | "L" | "JJ" => {
                let closure = match (keyword, tokens.len()) {
                    (_, 4) => None,
                    ("JJ", 6) if tokens[4] == "CLOSURE" => Some(tokens[5].to_string()),
                    ("JJ", _) => {
                        err(&mut errors, "expected 'JJ <a> <b> <EJ> [CLOSURE <loop>]'".into());
                        continue;
                    }
                    _ => {
                        err(&mut errors, format!("expected '{keyword} <a> <b> <value>'"));
                        continue;
                    }
                };
                let what = match keyword {
                    "C" => "capacitance",
                    "L" => "inductance",
                    _ => "Josephson energy",
                };
                let Some(v) = parse_value(tokens[3], what, line, &mut errors) else { continue };
                let kind = match keyword {
                    "C" => ElementKind::Capacitor { c: v },
                    "L" => ElementKind::Inductor { l: v },
                    _ => ElementKind::Junction { ej: v, closure },
                };
                if tokens[1] == tokens[2] {
                    err(&mut errors, format!("element joins node '{}' to itself", tokens[1]));
                    continue;
                }
                elements.push((Element { kind, a: tokens[1].into(), b: tokens[2].into() }, line));
            }
            "FLUX" => {
                if tokens.len() != 3 {
                    err(&mut errors, "expected 'FLUX <loop> <weber>'".into());
                    continue;
                }
                let Ok(flux) = tokens[2].parse::<f64>().map_err(|_| err(&mut errors, format!("cannot parse flux '{}'", tokens[2]))) else {
                    continue;
                };
                if !flux.is_finite() {
                    err(&mut errors, format!("flux must be finite, got {flux}"));
                    continue;
                }
                if loops.iter().any(|(l, _)| l.name == tokens[1]) {
                    err(&mut errors, format!("loop '{}' declared twice", tokens[1]));
                    continue;
                }
                loops.push((FluxLoop { name: tokens[1].into(), flux }, line));
            }
            other => err(&mut errors, format!("unknown element '{other}'")),
        }
    }

    let Some((ground, _)) = ground else {
        errors.push(LineError { line: None, message: "no GROUND declared".into() });
        return Err(CircuitError::Netlist(errors));
    };
    let declared: BTreeSet<&str> = nodes.iter().map(|(n, _)| n.as_str()).chain([ground.as_str()]).collect();
    let mut used = BTreeSet::new();
    let mut closures: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (e, line) in &elements {
        for n in [&e.a, &e.b] {
            if !declared.contains(n.as_str()) {
                errors.push(LineError { line: Some(*line), message: format!("undeclared node '{n}'") });
            }
            used.insert(n.as_str());
        }
        if let ElementKind::Junction { closure: Some(loop_name), .. } = &e.kind {
            if !loops.iter().any(|(l, _)| l.name == *loop_name) {
                errors.push(LineError { line: Some(*line), message: format!("CLOSURE names undeclared loop '{loop_name}'") });
            }
            closures.entry(loop_name.as_str()).or_default().push(*line);
        }
    }
    for (n, line) in &nodes {
        if !used.contains(n.as_str()) {
            errors.push(LineError { line: Some(*line), message: format!("dangling node '{n}' has no elements") });
        }
    }
    for (l, line) in &loops {
        match closures.get(l.name.as_str()).map(Vec::len).unwrap_or(0) {
            0 => errors.push(LineError { line: Some(*line), message: format!("loop '{}' has no closure branch", l.name) }),
            1 => {}
            n => errors.push(LineError { line: Some(*line), message: format!("loop '{}' has {n} closure branches", l.name) }),
        }
    }
    // connectivity to ground
    let mut adjacency: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (e, _) in &elements {
        adjacency.entry(&e.a).or_default().push(&e.b);
        adjacency.entry(&e.b).or_default().push(&e.a);
    }
    let mut seen = BTreeSet::from([ground.as_str()]);
    let mut queue = VecDeque::from([ground.as_str()]);
    while let Some(n) = queue.pop_front() {
        for &m in adjacency.get(n).into_iter().flatten() {
            if seen.insert(m) {
                queue.push_back(m);
            }
        }
    }
    for (n, line) in &nodes {
        if used.contains(n.as_str()) && !seen.contains(n.as_str()) {
            errors.push(LineError { line: Some(*line), message: format!("node '{n}' is not connected to ground") });
        }
    }

    if !errors.is_empty() {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        return Err(CircuitError::Netlist(errors));
    }
    Ok(CircuitNetlist {
        ground,
        nodes: nodes.into_iter().map(|(n, _)| n).collect(),
        elements: elements.into_iter().map(|(e, _)| e).collect(),
        loops: loops.into_iter().map(|(l, _)| l).collect(),
    })
}

impl CircuitNetlist {
    /// Canonical text form; `parse_netlist(&n.to_text())` reproduces `n`.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "GROUND {}", self.ground).unwrap();
        for n in &self.nodes {
            writeln!(s, "NODE {n}").unwrap();
        }
        for e in &self.elements {
            match &e.kind {
                ElementKind::Capacitor { c } => writeln!(s, "C {} {} {c:e}", e.a, e.b),
                ElementKind::Inductor { l } => writeln!(s, "L {} {} {l:e}", e.a, e.b),
                ElementKind::Junction { ej, closure: None } => writeln!(s, "JJ {} {} {ej:e}", e.a, e.b),
                ElementKind::Junction { ej, closure: Some(lp) } => writeln!(s, "JJ {} {} {ej:e} CLOSURE {lp}", e.a, e.b),
            }
            .unwrap();
        }
        for l in &self.loops {
            writeln!(s, "FLUX {} {:e}", l.name, l.flux).unwrap();
        }
        s
    }

    /// Sets the external flux of a loop.
    pub fn with_flux(mut self, loop_name: &str, flux: f64) -> Option<Self> {
        self.loops.iter_mut().find(|l| l.name == loop_name)?.flux = flux;
        Some(self)
    }
}

impl std::str::FromStr for CircuitNetlist {
    type Err = CircuitError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_netlist(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PotentialKind {
    /// `(φ_b − φ_a − shift)² / 2L`
    Inductive { l: f64 },
    /// `−E_J cos[2π(φ_b − φ_a − shift)/Φ₀]`
    Josephson { ej: f64 },
}

/// One potential term; `None` terminals are the ground node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Potential {
    pub kind: PotentialKind,
    pub a: Option<usize>,
    pub b: Option<usize>,
    pub shift: f64,
}

impl Potential {
    fn branch_flux(&self, phi: &[f64]) -> f64 {
        let at = |n: Option<usize>| n.map_or(0.0, |i| phi[i]);
        at(self.b) - at(self.a) - self.shift
    }

    pub fn energy(&self, phi: &[f64]) -> f64 {
        let x = self.branch_flux(phi);
        match self.kind {
            PotentialKind::Inductive { l } => x * x / (2.0 * l),
            PotentialKind::Josephson { ej } => -ej * (2.0 * PI * x / FLUX_QUANTUM).cos(),
        }
    }

    fn touches(&self, i: usize) -> bool {
        self.a == Some(i) || self.b == Some(i)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircuitLagrangian {
    pub coordinates: Vec<String>,
    /// Grounded capacitance matrix over the free coordinates.
    pub capacitance: DMatrix<f64>,
    pub inverse_capacitance: DMatrix<f64>,
    pub potentials: Vec<Potential>,
}

/// Capacitance matrix over all nodes, ground last; its rows sum to zero.
pub fn full_capacitance_matrix(netlist: &CircuitNetlist) -> DMatrix<f64> {
    let n = netlist.nodes.len() + 1;
    let index = node_index(netlist);
    let full = |name: &str| index(name).unwrap_or(n - 1);
    let mut m = DMatrix::zeros(n, n);
    for e in &netlist.elements {
        if let ElementKind::Capacitor { c } = e.kind {
            let (i, j) = (full(&e.a), full(&e.b));
            m[(i, i)] += c;
            m[(j, j)] += c;
            m[(i, j)] -= c;
            m[(j, i)] -= c;
        }
    }
    m
}

fn node_index(netlist: &CircuitNetlist) -> impl Fn(&str) -> Option<usize> + '_ {
    move |name| netlist.nodes.iter().position(|n| n == name)
}

/// Stamps capacitors into `C`, collects potentials with closure-branch flux
/// shifts applied and inverts `C`.
pub fn build_lagrangian(netlist: &CircuitNetlist) -> Result<CircuitLagrangian, CircuitError> {
    let n = netlist.nodes.len();
    let full = full_capacitance_matrix(netlist);
    let capacitance = full.view((0, 0), (n, n)).into_owned();
    let index = node_index(netlist);
    let flux_of = |name: &str| netlist.loops.iter().find(|l| l.name == name).map_or(0.0, |l| l.flux);
    let potentials = netlist
        .elements
        .iter()
        .filter_map(|e| {
            let (a, b) = (index(&e.a), index(&e.b));
            match &e.kind {
                ElementKind::Capacitor { .. } => None,
                ElementKind::Inductor { l } => Some(Potential { kind: PotentialKind::Inductive { l: *l }, a, b, shift: 0.0 }),
                ElementKind::Junction { ej, closure } => Some(Potential {
                    kind: PotentialKind::Josephson { ej: *ej },
                    a,
                    b,
                    shift: closure.as_deref().map_or(0.0, flux_of),
                }),
            }
        })
        .collect();
    let (values, vectors) = symmetric_eigen(&capacitance);
    let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if let Some(k) = (0..n).find(|&k| !(values[k] > SINGULAR_CAPACITANCE * scale)) {
        return Err(CircuitError::SingularCapacitance {
            coordinates: netlist.nodes.clone(),
            null_vector: vectors.column(k).iter().copied().collect(),
        });
    }
    let inverse_capacitance = &vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, values.iter().map(|v| 1.0 / v))) * vectors.transpose();
    Ok(CircuitLagrangian { coordinates: netlist.nodes.clone(), capacitance, inverse_capacitance, potentials })
}

impl CircuitLagrangian {
    pub fn n_coordinates(&self) -> usize {
        self.coordinates.len()
    }

    pub fn potential(&self, phi: &[f64]) -> f64 {
        self.potentials.iter().map(|p| p.energy(phi)).sum()
    }

    /// `T − V` at node fluxes `phi` and velocities `phi_dot`.
    pub fn lagrangian(&self, phi: &[f64], phi_dot: &[f64]) -> f64 {
        let v = nalgebra::DVector::from_column_slice(phi_dot);
        0.5 * (v.transpose() * &self.capacitance * &v)[(0, 0)] - self.potential(phi)
    }

    /// Conjugate charges `q = C φ̇`.
    pub fn charges(&self, phi_dot: &[f64]) -> Vec<f64> {
        (&self.capacitance * nalgebra::DVector::from_column_slice(phi_dot)).iter().copied().collect()
    }

    /// Classical Hamiltonian `½ qᵀC⁻¹q + V(φ)`.
    pub fn hamiltonian(&self, phi: &[f64], q: &[f64]) -> f64 {
        let q = nalgebra::DVector::from_column_slice(q);
        0.5 * (q.transpose() * &self.inverse_capacitance * &q)[(0, 0)] + self.potential(phi)
    }

    /// Inverse inductance matrix of the quadratic part of the potential.
    pub fn inverse_inductance(&self) -> DMatrix<f64> {
        let n = self.n_coordinates();
        let mut k = DMatrix::zeros(n, n);
        for p in &self.potentials {
            if let PotentialKind::Inductive { l } = p.kind {
                let w = 1.0 / l;
                for (x, sx) in [(p.a, -1.0), (p.b, 1.0)] {
                    for (y, sy) in [(p.a, -1.0), (p.b, 1.0)] {
                        if let (Some(i), Some(j)) = (x, y) {
                            k[(i, j)] += sx * sy * w;
                        }
                    }
                }
            }
        }
        k
    }

    pub fn has_inductive_term(&self, i: usize) -> bool {
        self.potentials.iter().any(|p| matches!(p.kind, PotentialKind::Inductive { .. }) && p.touches(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoordinateBasis {
    /// Cooper-pair number states `−n_cut..=n_cut`.
    Charge { n_cut: usize },
    /// Lowest `levels` oscillator states.
    Oscillator { levels: usize },
}

impl CoordinateBasis {
    pub fn dim(&self) -> usize {
        match *self {
            Self::Charge { n_cut } => 2 * n_cut + 1,
            Self::Oscillator { levels } => levels,
        }
    }

    fn doubled(&self) -> Self {
        match *self {
            Self::Charge { n_cut } => Self::Charge { n_cut: 2 * n_cut },
            Self::Oscillator { levels } => Self::Oscillator { levels: 2 * levels },
        }
    }
}

/// Charge basis for coordinates free of inductors, oscillator basis otherwise.
pub fn default_basis(lagrangian: &CircuitLagrangian) -> Vec<CoordinateBasis> {
    (0..lagrangian.n_coordinates())
        .map(|i| {
            if lagrangian.has_inductive_term(i) {
                CoordinateBasis::Oscillator { levels: DEFAULT_OSCILLATOR_LEVELS }
            } else {
                CoordinateBasis::Charge { n_cut: DEFAULT_CHARGE_CUTOFF }
            }
        })
        .collect()
}

/// Single-coordinate operators in the chosen basis.
struct CoordinateOps {
    dim: usize,
    q: DMatrix<C64>,
    q2: DMatrix<C64>,
    phi: Option<DMatrix<C64>>,
    phi2: Option<DMatrix<C64>>,
    /// `exp(2πiφ/Φ₀)`
    exp_theta: DMatrix<C64>,
}

fn charge_ops(n_cut: usize) -> CoordinateOps {
    let dim = 2 * n_cut + 1;
    let n = |k: usize| k as f64 - n_cut as f64;
    let q = DMatrix::from_fn(dim, dim, |i, j| if i == j { C64::new(2.0 * ELEMENTARY_CHARGE * n(i), 0.0) } else { C64::new(0.0, 0.0) });
    let q2 = &q * &q;
    // e^{iθ}|N⟩ = |N+1⟩
    let exp_theta = DMatrix::from_fn(dim, dim, |i, j| if i == j + 1 { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    CoordinateOps { dim, q, q2, phi: None, phi2: None, exp_theta }
}

fn ladder(dim: usize) -> DMatrix<C64> {
    DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) })
}

/// Oscillator basis with impedance `z`: φ = √(ħz/2)(a + a†), q = i√(ħ/2z)(a† − a).
/// Squares and the exponential are formed in a padded basis and truncated.
fn oscillator_ops(levels: usize, z: f64) -> CoordinateOps {
    let big = 2 * levels + 2;
    let a = ladder(big);
    let ad = a.adjoint();
    let phi_big = (&a + &ad) * C64::new((HBAR * z / 2.0).sqrt(), 0.0);
    let q_big = (&ad - &a) * C64::new(0.0, (HBAR / (2.0 * z)).sqrt());
    let cut = |m: &DMatrix<C64>| m.view((0, 0), (levels, levels)).into_owned();
    let theta = &phi_big * C64::new(2.0 * PI / FLUX_QUANTUM, 0.0);
    let (values, vectors) = hermitian_eigen(&theta);
    let phases = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(big, values.iter().map(|&v| C64::new(0.0, v).exp())));
    let exp_theta = &vectors * phases * vectors.adjoint();
    CoordinateOps {
        dim: levels,
        q: cut(&q_big),
        q2: cut(&(&q_big * &q_big)),
        phi: Some(cut(&phi_big)),
        phi2: Some(cut(&(&phi_big * &phi_big))),
        exp_theta: cut(&exp_theta),
    }
}

fn embed(ops: &[&DMatrix<C64>]) -> DMatrix<C64> {
    ops.iter().skip(1).fold((*ops[0]).clone(), |acc, m| acc.kronecker(m))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedCircuit {
    pub coordinates: Vec<String>,
    pub inverse_capacitance: DMatrix<f64>,
    pub basis: Vec<CoordinateBasis>,
    /// Oscillator impedances, `None` for charge coordinates.
    pub impedances: Vec<Option<f64>>,
    pub hamiltonian: DMatrix<C64>,
}

/// Represents `H = ½ qᵀC⁻¹q + V(φ)` in the product basis.
pub fn quantize(lagrangian: &CircuitLagrangian, basis: &[CoordinateBasis]) -> Result<QuantizedCircuit, CircuitError> {
    let n = lagrangian.n_coordinates();
    if basis.len() != n {
        return Err(CircuitError::BasisMismatch { expected: n, got: basis.len() });
    }
    if n > MAX_DIAGONALIZED_COORDINATES {
        return Err(CircuitError::TooManyCoordinates { count: n });
    }
    if basis.iter().any(|b| b.dim() == 0) {
        return Err(CircuitError::EmptyBasis);
    }
    let inv_c = &lagrangian.inverse_capacitance;
    let inv_l = lagrangian.inverse_inductance();
    let mut impedances = Vec::with_capacity(n);
    let mut ops = Vec::with_capacity(n);
    for (i, b) in basis.iter().enumerate() {
        let name = &lagrangian.coordinates[i];
        match *b {
            CoordinateBasis::Charge { n_cut } => {
                if lagrangian.has_inductive_term(i) {
                    return Err(CircuitError::NotPeriodic(name.clone()));
                }
                impedances.push(None);
                ops.push(charge_ops(n_cut));
            }
            CoordinateBasis::Oscillator { levels } => {
                if !(inv_l[(i, i)] > 0.0) {
                    return Err(CircuitError::NoConfinement(name.clone()));
                }
                // Z = √(L_eff / C_eff) from the diagonal of the quadratic form
                let z = (inv_c[(i, i)] / inv_l[(i, i)]).sqrt();
                impedances.push(Some(z));
                ops.push(oscillator_ops(levels, z));
            }
        }
    }
    let dims: Vec<usize> = ops.iter().map(|o| o.dim).collect();
    let total: usize = dims.iter().product();
    let eye: Vec<DMatrix<C64>> = dims.iter().map(|&d| DMatrix::identity(d, d)).collect();
    // operator acting as `m` on coordinate i and identity elsewhere
    let local = |i: usize, m: &DMatrix<C64>| -> DMatrix<C64> {
        let factors: Vec<&DMatrix<C64>> = (0..n).map(|k| if k == i { m } else { &eye[k] }).collect();
        embed(&factors)
    };
    let pair = |i: usize, mi: &DMatrix<C64>, j: usize, mj: &DMatrix<C64>| -> DMatrix<C64> {
        let factors: Vec<&DMatrix<C64>> = (0..n).map(|k| if k == i { mi } else if k == j { mj } else { &eye[k] }).collect();
        embed(&factors)
    };
    let re = |x: f64| C64::new(x, 0.0);

    let mut h = DMatrix::<C64>::zeros(total, total);
    for i in 0..n {
        h += local(i, &ops[i].q2) * re(0.5 * inv_c[(i, i)]);
        for j in i + 1..n {
            h += pair(i, &ops[i].q, j, &ops[j].q) * re(inv_c[(i, j)]);
        }
    }
    for p in &lagrangian.potentials {
        match p.kind {
            PotentialKind::Inductive { l } => {
                let w = 0.5 / l;
                // (φ_b − φ_a − s)² expanded term by term
                let terms: Vec<(usize, f64)> = [(p.b, 1.0), (p.a, -1.0)].into_iter().filter_map(|(n, s)| n.map(|i| (i, s))).collect();
                for &(i, si) in &terms {
                    let phi = ops[i].phi.as_ref().expect("inductive coordinate uses oscillator basis");
                    let phi2 = ops[i].phi2.as_ref().unwrap();
                    h += local(i, phi2) * re(w);
                    h += local(i, phi) * re(-2.0 * w * si * p.shift);
                }
                if let [(i, si), (j, sj)] = terms[..] {
                    h += pair(i, ops[i].phi.as_ref().unwrap(), j, ops[j].phi.as_ref().unwrap()) * re(2.0 * w * si * sj);
                }
                h += DMatrix::identity(total, total) * re(w * p.shift * p.shift);
            }
            PotentialKind::Josephson { ej } => {
                // −E_J/2 [e^{−iθ_s} e^{iθ_b} e^{−iθ_a} + h.c.]
                let phase = C64::new(0.0, -2.0 * PI * p.shift / FLUX_QUANTUM).exp();
                let mut u = DMatrix::identity(total, total);
                if let Some(b) = p.b {
                    u = local(b, &ops[b].exp_theta) * u;
                }
                if let Some(a) = p.a {
                    u = local(a, &ops[a].exp_theta.adjoint()) * u;
                }
                let u = u * phase;
                h -= (&u + u.adjoint()) * re(0.5 * ej);
            }
        }
    }
    // symmetrize rounding
    let h = (&h + h.adjoint()) * re(0.5);
    Ok(QuantizedCircuit {
        coordinates: lagrangian.coordinates.clone(),
        inverse_capacitance: inv_c.clone(),
        basis: basis.to_vec(),
        impedances,
        hamiltonian: h,
    })
}

impl QuantizedCircuit {
    /// All eigenvalues in ascending order, joules.
    pub fn spectrum(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.hamiltonian)
    }

    /// Lowest `count` levels measured from the ground state.
    pub fn transition_energies(&self, count: usize) -> Vec<f64> {
        let s = self.spectrum();
        s.iter().take(count).map(|e| e - s[0]).collect()
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergedSpectrum {
    /// Lowest levels from the larger basis, measured from the ground state.
    pub levels: Vec<f64>,
    pub basis: Vec<CoordinateBasis>,
    /// Largest relative change of the levels under basis doubling.
    pub relative_change: f64,
    pub converged: bool,
}

/// Transition energies in `basis` and in the doubled basis; converged when
/// they agree to `tolerance` relative to the largest level.
pub fn converged_spectrum(
    lagrangian: &CircuitLagrangian,
    basis: &[CoordinateBasis],
    count: usize,
    tolerance: f64,
) -> Result<ConvergedSpectrum, CircuitError> {
    let coarse = quantize(lagrangian, basis)?.transition_energies(count);
    let doubled: Vec<_> = basis.iter().map(CoordinateBasis::doubled).collect();
    let fine = quantize(lagrangian, &doubled)?.transition_energies(count);
    let scale = fine.iter().fold(0.0f64, |m, e| m.max(e.abs())).max(f64::MIN_POSITIVE);
    let relative_change = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs() / scale).fold(0.0, f64::max);
    Ok(ConvergedSpectrum { levels: fine, basis: doubled, relative_change, converged: relative_change <= tolerance })
}

/// Charging energy `E_C = e² / 2C`.
pub fn charging_energy(capacitance: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * capacitance)
}

/// Capacitance with charging energy `ec`.
pub fn capacitance_for_charging_energy(ec: f64) -> f64 {
    ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * ec)
}

/// `g/ω_r ≈ 2β (E_J / 2E_C)^{1/4} √α`.
pub fn coupling_estimate(beta: f64, ej: f64, ec: f64, alpha: f64) -> Result<f64, CircuitError> {
    if !(beta >= 0.0 && beta.is_finite()) {
        return Err(CircuitError::Negative { name: "beta", value: beta });
    }
    for (name, value) in [("ej", ej), ("ec", ec), ("alpha", alpha)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(CircuitError::NonPositive { name, value });
        }
    }
    Ok(2.0 * beta * (ej / (2.0 * ec)).powf(0.25) * alpha.sqrt())
}
