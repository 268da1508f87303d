//! Exact N-boson two-mode Hamiltonian in the Fock basis.
//!
//! Basis state `k` holds `k` bosons in mode `a` and `N − k` in mode `b`,
//! ordered by ascending `k`. The Hamiltonian is
//!
//! ```text
//! H = γ′ Jz + Δ0 Jx − (c_Z/N) Jz² + (c_Y/N) (K/2)²
//! ```
//!
//! with `Jz = (n_a − n_b)/2`, `Jx = (a†b + b†a)/2` and the real antisymmetric
//! `K = a†b − b†a`, so the last term equals `−(c_Y/N) Jy²`.

use rayon::prelude::*;
use serde::Serialize;

use crate::effective::ModelParams;
use crate::error::{Error, Result};
use crate::phase_space::Couplings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockSpace {
    n_particles: usize,
}

impl FockSpace {
    pub fn new(n_particles: usize) -> Result<Self> {
        if n_particles == 0 {
            return Err(Error::Config("N must be at least 1".into()));
        }
        Ok(Self { n_particles })
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn dimension(&self) -> usize {
        self.n_particles + 1
    }

    /// `⟨k+1| a†b |k⟩ = √((k+1)(N−k))`.
    fn raise_a(&self, k: usize) -> f64 {
        (((k + 1) * (self.n_particles - k)) as f64).sqrt()
    }
}

/// Dense square matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Domain("matrix rows must form a square".into()));
        }
        Ok(Self {
            n,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let x = self[(i, k)];
                if x == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += x * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn scaled(&self, f: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * f).collect(),
        }
    }

    pub fn add(&self, other: &Matrix) -> Self {
        Self {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x + y)
                .collect(),
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `max |M − Mᵀ|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    acc += self[(i, j)] * self[(i, j)];
                }
            }
        }
        acc.sqrt()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Eigenvalues divided by `N = dimension − 1`.
    pub per_particle: Vec<f64>,
}

impl SpectrumResult {
    fn from_sorted(eigenvalues: Vec<f64>) -> Self {
        let n = (eigenvalues.len().max(2) - 1) as f64;
        let per_particle = eigenvalues.iter().map(|e| e / n).collect();
        Self {
            eigenvalues,
            per_particle,
        }
    }

    pub fn ground(&self) -> f64 {
        self.eigenvalues[0]
    }
}

/// `K = a†b − b†a` as a real antisymmetric matrix.
pub fn hopping_difference(space: FockSpace) -> Matrix {
    let d = space.dimension();
    let mut k = Matrix::zeros(d);
    for j in 0..d - 1 {
        let amp = space.raise_a(j);
        k[(j + 1, j)] = amp;
        k[(j, j + 1)] = -amp;
    }
    k
}

/// Contribution `(c_Y/N) (K/2)²`, negative semidefinite for `c_Y ≥ 0`.
pub fn y_anisotropy_term(c_y: f64, space: FockSpace) -> Matrix {
    let k = hopping_difference(space);
    let mut term = k.matmul(&k).scaled(0.25 * c_y / space.n_particles() as f64);
    // K² is symmetric in exact arithmetic; pin it bit-for-bit
    symmetrize(&mut term);
    term
}

fn symmetrize(m: &mut Matrix) {
    for i in 0..m.dim() {
        for j in i + 1..m.dim() {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Fock-basis matrix of the N-boson Hamiltonian.
pub fn build_hamiltonian(cp: &Couplings, space: FockSpace) -> Matrix {
    let n = space.n_particles() as f64;
    let d = space.dimension();
    let mut h = y_anisotropy_term(cp.c_y, space);
    for k in 0..d {
        let jz = k as f64 - n / 2.0;
        h[(k, k)] += cp.gamma_eff * jz - cp.c_z / n * jz * jz;
        if k + 1 < d {
            let hop = 0.5 * cp.delta0 * space.raise_a(k);
            h[(k + 1, k)] += hop;
            h[(k, k + 1)] += hop;
        }
    }
    h
}

/// All eigenvalues by cyclic Jacobi rotations.
pub fn diagonalize(m: &Matrix) -> Result<SpectrumResult> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::Domain("empty matrix".into()));
    }
    let scale = m.frobenius_norm();
    if m.asymmetry() > 1e-12 * scale.max(1.0) {
        return Err(Error::Domain(format!(
            "matrix is not symmetric (max |M − Mᵀ| = {:.3e})",
            m.asymmetry()
        )));
    }
    let mut a = m.clone();
    let target = 1e-12 * scale;
    let mut sweeps = 0;
    while a.off_diagonal_norm() > target {
        sweeps += 1;
        if sweeps > 100 {
            return Err(Error::Domain(
                "Jacobi iteration did not converge in 100 sweeps".into(),
            ));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                let tau = (aqq - app) / (2.0 * apq);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    eigs.sort_by(f64::total_cmp);
    Ok(SpectrumResult::from_sorted(eigs))
}

/// Spectrum of the N-boson problem at one bias.
pub fn quantum_spectrum(p: &ModelParams, n: usize) -> Result<SpectrumResult> {
    let space = FockSpace::new(n)?;
    let cp = Couplings::from_model(p)?;
    diagonalize(&build_hamiltonian(&cp, space))
}

/// Spectra across a grid of physical biases, one row per grid value.
pub fn quantum_spectrum_scan(
    p: &ModelParams,
    gamma_grid: &[f64],
    n: usize,
) -> Result<Vec<(f64, SpectrumResult)>> {
    p.validate()?;
    FockSpace::new(n)?;
    gamma_grid
        .par_iter()
        .map(|&g| Ok((g, quantum_spectrum(&ModelParams { gamma: g, ..*p }, n)?)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_particle_is_two_level() {
        let h = build_hamiltonian(
            &Couplings::new(0.0, 0.2, 0.0, 0.0),
            FockSpace::new(1).unwrap(),
        );
        let sp = diagonalize(&h).unwrap();
        assert_abs_diff_eq!(sp.eigenvalues[0], -0.1, epsilon = 1e-14);
        assert_abs_diff_eq!(sp.eigenvalues[1], 0.1, epsilon = 1e-14);
    }

    #[test]
    fn two_particles_noninteracting() {
        let h = build_hamiltonian(
            &Couplings::new(0.0, 0.2, 0.0, 0.0),
            FockSpace::new(2).unwrap(),
        );
        let sp = diagonalize(&h).unwrap();
        for (got, want) in sp.eigenvalues.iter().zip([-0.2, 0.0, 0.2]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn exact_symmetry() {
        let h = build_hamiltonian(
            &Couplings::new(0.37, 0.21, 0.43, 0.57),
            FockSpace::new(20).unwrap(),
        );
        assert_eq!(h.asymmetry(), 0.0);
    }

    #[test]
    fn small_matrices() {
        let sp = diagonalize(&Matrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(sp.eigenvalues, vec![1.0, 2.0, 3.0]);
        let m = Matrix::from_rows(&[vec![0.0, 0.1], vec![0.1, 0.0]]).unwrap();
        let sp = diagonalize(&m).unwrap();
        assert_abs_diff_eq!(sp.eigenvalues[0], -0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(sp.eigenvalues[1], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let m = Matrix::from_rows(&[vec![0.0, 0.1], vec![0.2, 0.0]]).unwrap();
        assert!(matches!(diagonalize(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn zero_particles_rejected() {
        assert!(FockSpace::new(0).is_err());
    }

    #[test]
    fn y_term_is_negative_semidefinite() {
        let space = FockSpace::new(12).unwrap();
        let sp = diagonalize(&y_anisotropy_term(0.6, space)).unwrap();
        assert!(sp.eigenvalues.iter().all(|e| *e <= 1e-12));
    }

    #[test]
    fn hopping_difference_is_antisymmetric() {
        let k = hopping_difference(FockSpace::new(7).unwrap());
        assert_eq!(k.transpose().scaled(-1.0), k);
    }
}
