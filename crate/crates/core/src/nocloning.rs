//! Bipartite pure states, Schmidt decomposition and reduced density matrices.
//!
//! Two orthogonal states cannot be told apart by acting on subsystem B alone
//! without disturbing them, unless their B-reduced density matrices are
//! orthogonal. [`distinguishable_without_disturbance`] evaluates that
//! criterion through the overlap `Tr[ρ₀ ρ₁]`.
//!
//! The Schmidt form is computed with a one-sided (Hestenes) Jacobi SVD on the
//! amplitude matrix. Eigenvalues of reduced density matrices go through
//! nalgebra's Hermitian eigensolver, so the two routes check each other.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qcore::{initial_split, BeamSplitter, Path, Polarization, PulseState};

const NORM_TOL: f64 = 1e-12;
const DENSITY_TOL: f64 = 1e-10;
/// Schmidt coefficients at or below this are treated as zero.
const SCHMIDT_CUTOFF: f64 = 1e-12;
/// Reduced densities with overlap at or below this are orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Pure state of a two-part system as a `dA × dB` amplitude matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    amps: DMatrix<Complex64>,
}

impl BipartiteState {
    pub fn new(amps: DMatrix<Complex64>) -> Result<Self> {
        if amps.nrows() == 0 || amps.ncols() == 0 {
            return Err(Error::validation("bipartite state needs dA, dB >= 1"));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::validation(format!(
                "bipartite state has squared norm {norm}, expected 1"
            )));
        }
        Ok(Self { amps })
    }

    /// Builds a state from sparse `(a, b, amplitude)` entries. Repeated
    /// entries add up.
    pub fn from_entries(dim_a: usize, dim_b: usize, entries: &[(usize, usize, Complex64)]) -> Result<Self> {
        let mut amps = DMatrix::from_element(dim_a, dim_b, ZERO);
        for &(a, b, z) in entries {
            if a >= dim_a || b >= dim_b {
                return Err(Error::validation(format!(
                    "entry ({a}, {b}) outside a {dim_a}x{dim_b} state"
                )));
            }
            amps[(a, b)] += z;
        }
        Self::new(amps)
    }

    /// Single-photon pulse viewed as (path-a occupation) ⊗ (path-b occupation).
    ///
    /// Each side uses the basis `{vacuum, H, V}`: a photon in `(a, p)` sits at
    /// `(1 + p, 0)` and a photon in `(b, p)` at `(0, 1 + p)`.
    pub fn from_pulse(state: &PulseState) -> Result<Self> {
        let mut amps = DMatrix::from_element(3, 3, ZERO);
        for pol in Polarization::ALL {
            let k = 1 + pol.bit() as usize;
            amps[(k, 0)] = state.amplitude(Path::A, pol);
            amps[(0, k)] = state.amplitude(Path::B, pol);
        }
        Self::new(amps)
    }

    /// The post-beamsplitter state encoding `pol` at reflectivity `r`.
    pub fn protocol_state(pol: Polarization, r: f64) -> Result<Self> {
        Self::from_pulse(&initial_split(pol, &BeamSplitter::new(r)?))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.amps.nrows(), self.amps.ncols())
    }

    pub fn amplitudes(&self) -> &DMatrix<Complex64> {
        &self.amps
    }

    /// Embeds the state into larger local dimensions with zero padding.
    pub fn padded(&self, dim_a: usize, dim_b: usize) -> Result<Self> {
        let (da, db) = self.dims();
        if dim_a < da || dim_b < db {
            return Err(Error::validation(format!(
                "cannot pad a {da}x{db} state down to {dim_a}x{dim_b}"
            )));
        }
        let mut amps = DMatrix::from_element(dim_a, dim_b, ZERO);
        amps.view_mut((0, 0), (da, db)).copy_from(&self.amps);
        Ok(Self { amps })
    }
}

/// `|ψ⟩ = Σ λᵢ |i_A⟩|i_B⟩` with descending `λᵢ > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtForm {
    pub coefficients: Vec<f64>,
    pub a_basis: Vec<DVector<Complex64>>,
    pub b_basis: Vec<DVector<Complex64>>,
}

impl SchmidtForm {
    pub fn rank(&self) -> usize {
        self.coefficients.len()
    }

    /// Amplitude matrix rebuilt from the decomposition.
    pub fn reconstruct(&self) -> DMatrix<Complex64> {
        let da = self.a_basis.first().map_or(0, |v| v.len());
        let db = self.b_basis.first().map_or(0, |v| v.len());
        let mut m = DMatrix::from_element(da, db, ZERO);
        for ((lambda, a), b) in self.coefficients.iter().zip(&self.a_basis).zip(&self.b_basis) {
            m += (a * b.transpose()) * Complex64::new(*lambda, 0.0);
        }
        m
    }
}

/// One-sided Jacobi SVD: returns `(U, σ, V)` with `m · V = U · diag(σ)`,
/// `V` unitary and σ unsorted. Columns of `U` are left unnormalized.
fn jacobi_svd(m: &DMatrix<Complex64>) -> (DMatrix<Complex64>, Vec<f64>, DMatrix<Complex64>) {
    let n = m.ncols();
    let mut u = m.clone();
    let mut v = DMatrix::<Complex64>::identity(n, n);
    const MAX_SWEEPS: usize = 64;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let a = u.column(i).norm_squared();
                let b = u.column(j).norm_squared();
                let g = u.column(i).dotc(&u.column(j));
                let g_abs = g.norm();
                if g_abs <= f64::EPSILON * (a * b).sqrt() || g_abs < f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let unphase = (g / g_abs).conj();
                let zeta = (b - a) / (2.0 * g_abs);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, i, j, unphase, c, s);
                rotate(&mut v, i, j, unphase, c, s);
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma = (0..n).map(|k| u.column(k).norm()).collect();
    (u, sigma, v)
}

fn rotate(m: &mut DMatrix<Complex64>, i: usize, j: usize, unphase: Complex64, c: f64, s: f64) {
    for row in 0..m.nrows() {
        let x = m[(row, i)];
        let y = m[(row, j)] * unphase;
        m[(row, i)] = x * c - y * s;
        m[(row, j)] = x * s + y * c;
    }
}

pub fn schmidt_decompose(psi: &BipartiteState) -> Result<SchmidtForm> {
    let (u, sigma, v) = jacobi_svd(&psi.amps);
    let mut order: Vec<usize> = (0..sigma.len()).filter(|&k| sigma[k] > SCHMIDT_CUTOFF).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]));
    if order.is_empty() {
        return Err(Error::internal("Schmidt decomposition found no nonzero coefficient"));
    }
    let mut form = SchmidtForm {
        coefficients: Vec::with_capacity(order.len()),
        a_basis: Vec::with_capacity(order.len()),
        b_basis: Vec::with_capacity(order.len()),
    };
    for k in order {
        let lambda = sigma[k];
        form.coefficients.push(lambda);
        form.a_basis.push(u.column(k) / Complex64::new(lambda, 0.0));
        form.b_basis.push(v.column(k).map(|z| z.conj()));
    }
    Ok(form)
}

/// Density matrix satisfying Hermiticity, unit trace and positivity.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn new(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::validation("density matrix must be square and non-empty"));
        }
        let herm_err = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm_err > DENSITY_TOL {
            return Err(Error::validation(format!(
                "density matrix not Hermitian (err {herm_err})"
            )));
        }
        let rho = Self { m };
        let trace = rho.trace();
        if (trace - 1.0).abs() > DENSITY_TOL {
            return Err(Error::validation(format!("density matrix has trace {trace}")));
        }
        if let Some(min) = rho.eigenvalues().into_iter().reduce(f64::min) {
            if min < -DENSITY_TOL {
                return Err(Error::validation(format!("density matrix has eigenvalue {min}")));
            }
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    pub fn purity(&self) -> f64 {
        frobenius_overlap(&self.m, &self.m)
    }
}

/// `Re Σ x̄ᵢⱼ yᵢⱼ`, equal to `Tr[x y]` for Hermitian operands and exactly
/// symmetric in its arguments.
fn frobenius_overlap(x: &DMatrix<Complex64>, y: &DMatrix<Complex64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.re * b.re + a.im * b.im).sum()
}

/// Partial trace over the complement of `keep`.
pub fn reduced_density(psi: &BipartiteState, keep: Subsystem) -> Result<DensityMatrix> {
    let m = &psi.amps;
    let rho = match keep {
        // ρ_A = ψ ψ†
        Subsystem::A => m * m.adjoint(),
        // ρ_B[b, b'] = Σ_a ψ[a, b] conj(ψ[a, b'])
        Subsystem::B => (m.adjoint() * m).transpose(),
    };
    DensityMatrix::new(rho)
}

/// `Tr[ρ₀ ρ₁]`.
pub fn overlap(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::validation(format!(
            "density matrices have different dimensions: {} vs {}",
            rho0.dim(),
            rho1.dim()
        )));
    }
    Ok(frobenius_overlap(&rho0.m, &rho1.m))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distinguishability {
    /// True iff the reduced densities on the accessible subsystem are
    /// orthogonal.
    pub distinguishable: bool,
    pub overlap: f64,
}

/// Whether an adversary restricted to `accessible` can tell the two states
/// apart without disturbing them.
pub fn distinguishable_without_disturbance(
    psi0: &BipartiteState,
    psi1: &BipartiteState,
    accessible: Subsystem,
) -> Result<Distinguishability> {
    if psi0.dims() != psi1.dims() {
        return Err(Error::validation(format!(
            "states have different dimensions: {:?} vs {:?}",
            psi0.dims(),
            psi1.dims()
        )));
    }
    let ov = overlap(&reduced_density(psi0, accessible)?, &reduced_density(psi1, accessible)?)?;
    Ok(Distinguishability {
        distinguishable: ov <= ORTHOGONALITY_TOL,
        overlap: ov,
    })
}

/// Parses the text state format.
///
/// ```text
/// # comment
/// dims 2 2          (optional; otherwise inferred from the largest indices)
/// 0 0 0.7071067811865476 0
/// 1 1 0.7071067811865476 0
/// ```
///
/// Each entry line is `a_index b_index real imag`.
pub fn parse_state(text: &str) -> Result<BipartiteState> {
    let mut dims: Option<(usize, usize)> = None;
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |what: &str| Error::validation(format!("line {}: {what}: '{raw}'", lineno + 1));
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields[0].eq_ignore_ascii_case("dims") {
            if fields.len() != 3 || dims.is_some() {
                return Err(bad("expected a single 'dims <dA> <dB>' line"));
            }
            let da = fields[1].parse().map_err(|_| bad("bad dimension"))?;
            let db = fields[2].parse().map_err(|_| bad("bad dimension"))?;
            dims = Some((da, db));
            continue;
        }
        if fields.len() != 4 {
            return Err(bad("expected 'a_index b_index real imag'"));
        }
        let a: usize = fields[0].parse().map_err(|_| bad("bad A index"))?;
        let b: usize = fields[1].parse().map_err(|_| bad("bad B index"))?;
        let re: f64 = fields[2].parse().map_err(|_| bad("bad real part"))?;
        let im: f64 = fields[3].parse().map_err(|_| bad("bad imaginary part"))?;
        if !re.is_finite() || !im.is_finite() {
            return Err(bad("non-finite amplitude"));
        }
        entries.push((a, b, Complex64::new(re, im)));
    }
    if entries.is_empty() {
        return Err(Error::validation("state file contains no amplitudes"));
    }
    let (da, db) = dims.unwrap_or_else(|| {
        let da = entries.iter().map(|e| e.0).max().unwrap_or(0) + 1;
        let db = entries.iter().map(|e| e.1).max().unwrap_or(0) + 1;
        (da, db)
    });
    BipartiteState::from_entries(da, db, &entries)
}
