//! Periodic 1D grid wavefunctions and the Strang split-step Fourier solver
//! for the Hartree equation `i ∂_t ψ = -1/2 Δψ + (Φ * |ψ|²) ψ` and its
//! delta-kernel special case, the cubic nonlinear Schrödinger equation.

use rustfft::{num_complex::Complex64, FftPlanner};

use crate::error::{Error, Result};
use crate::operator::MBOperator;
use crate::C64;

/// Wavefunction sampled on `n` equispaced points of a periodic box.
#[derive(Clone, Debug)]
pub struct GridState {
    length: f64,
    psi: Vec<C64>,
}

impl GridState {
    /// `psi.len()` must be a power of two.
    pub fn new(length: f64, psi: Vec<C64>) -> Result<Self> {
        let n = psi.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidModel(format!(
                "grid size {n} must be a nonzero power of two"
            )));
        }
        if length <= 0.0 {
            return Err(Error::InvalidModel("box length must be positive".into()));
        }
        Ok(Self { length, psi })
    }

    /// `A e^{i k x}` with `k = 2π·mode/length` on `n` points.
    pub fn plane_wave(n: usize, length: f64, mode: i64, amplitude: C64) -> Result<Self> {
        let dx = length / n as f64;
        let k = 2.0 * std::f64::consts::PI * mode as f64 / length;
        let psi = (0..n)
            .map(|j| amplitude * C64::from_polar(1.0, k * (j as f64 * dx)))
            .collect();
        Self::new(length, psi)
    }

    pub fn n_points(&self) -> usize {
        self.psi.len()
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn dx(&self) -> f64 {
        self.length / self.psi.len() as f64
    }

    pub fn psi(&self) -> &[C64] {
        &self.psi
    }

    /// `Σ |ψ|² dx`.
    pub fn mass(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx()
    }

    pub fn normalized(mut self) -> Self {
        let scale = 1.0 / self.mass().sqrt();
        for z in self.psi.iter_mut() {
            *z *= scale;
        }
        self
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.mass() - 1.0).abs() <= tol
    }

    /// Rank-one density matrix `ψ(x) ψ̄(y) dx`, trace = mass.
    pub fn density_matrix(&self) -> MBOperator {
        let n = self.psi.len();
        let dx = self.dx();
        let mut m = ndarray::Array2::<C64>::zeros((n, n));
        for x in 0..n {
            for y in 0..n {
                m[[x, y]] = self.psi[x] * self.psi[y].conj() * dx;
            }
        }
        MBOperator::new(1, n, m).expect("square shape").with_hermitian_hint(true)
    }
}

/// Kinetic dispersion applied in Fourier space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dispersion {
    /// `ω(k) = k²/2` (continuum Laplacian).
    Continuum,
    /// `ω(k) = (1 - cos(k dx))/dx²` (lattice Laplacian; matches the
    /// [`crate::model::ModelConfig`] kinetic matrix on the same grid).
    Lattice,
}

impl Dispersion {
    fn omega(&self, k: f64, dx: f64) -> f64 {
        match self {
            Dispersion::Continuum => 0.5 * k * k,
            Dispersion::Lattice => (1.0 - (k * dx).cos()) / (dx * dx),
        }
    }
}

/// Interaction kernel of the mean-field potential `Φ * |ψ|²`.
#[derive(Clone, Debug)]
pub enum Kernel {
    /// Dirac kernel: `V = strength · |ψ|²` (cubic NLS).
    Delta { strength: f64 },
    /// `φ` sampled at displacements `0..n`; `V(x) = dx Σ_y φ[x-y] |ψ(y)|²`
    /// by cyclic convolution.
    Sampled(Vec<f64>),
}

impl Kernel {
    /// Sample the model's pair potential on an `n`-point grid (dx = 1).
    pub fn from_model(cfg: &crate::model::ModelConfig) -> Kernel {
        let n = cfg.d();
        Kernel::Sampled((0..n).map(|r| cfg.pair_value(r, 0)).collect())
    }

    fn potential(&self, psi: &[C64], dx: f64) -> Vec<f64> {
        match self {
            Kernel::Delta { strength } => psi.iter().map(|z| strength * z.norm_sqr()).collect(),
            Kernel::Sampled(phi) => {
                let n = psi.len();
                assert_eq!(phi.len(), n, "sampled kernel must match the grid");
                let dens: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
                (0..n)
                    .map(|x| {
                        dx * (0..n)
                            .map(|y| phi[(x + n - y) % n] * dens[y])
                            .sum::<f64>()
                    })
                    .collect()
            }
        }
    }
}

/// Split-step run with conservation monitors.
#[derive(Clone, Debug)]
pub struct HartreeTrajectory {
    pub times: Vec<f64>,
    pub states: Vec<GridState>,
    pub max_mass_drift: f64,
    pub max_energy_drift: f64,
    /// Largest kinetic phase advanced per step, `dt · max_k ω(k)`; keep it
    /// well below π to resolve the fastest mode.
    pub max_phase_per_step: f64,
}

fn wavenumbers(n: usize, length: f64) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            2.0 * std::f64::consts::PI * signed / length
        })
        .collect()
}

/// `E[ψ] = Σ_k ω(k) |ψ̂_k|² dx / n + 1/2 Σ_x V(x) |ψ(x)|² dx`.
pub fn energy(state: &GridState, kernel: &Kernel, dispersion: Dispersion) -> f64 {
    let n = state.n_points();
    let dx = state.dx();
    let mut hat: Vec<Complex64> = state.psi().to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut hat);
    let kinetic: f64 = wavenumbers(n, state.length())
        .iter()
        .zip(hat.iter())
        .map(|(&k, z)| dispersion.omega(k, dx) * z.norm_sqr())
        .sum::<f64>()
        * dx
        / n as f64;
    let v = kernel.potential(state.psi(), dx);
    let potential: f64 = 0.5
        * v.iter()
            .zip(state.psi())
            .map(|(vx, z)| vx * z.norm_sqr())
            .sum::<f64>()
        * dx;
    kinetic + potential
}

/// Strang splitting: half kinetic step in Fourier space, full nonlinear
/// phase in position space, half kinetic step. Mass is conserved to
/// rounding; energy drift is `O(dt²)`.
pub fn hartree_split_step(
    psi0: &GridState,
    t_end: f64,
    dt: f64,
    kernel: &Kernel,
    dispersion: Dispersion,
    samples: usize,
) -> Result<HartreeTrajectory> {
    if dt <= 0.0 || t_end < 0.0 {
        return Err(Error::InvalidModel("time step and horizon must be positive".into()));
    }
    let n = psi0.n_points();
    let dx = psi0.dx();
    let length = psi0.length();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);
    let omegas: Vec<f64> = wavenumbers(n, length)
        .iter()
        .map(|&k| dispersion.omega(k, dx))
        .collect();
    let max_omega = omegas.iter().fold(0.0_f64, |m, &w| m.max(w.abs()));

    let steps = (t_end / dt).round().max(1.0) as usize;
    let dt = if t_end > 0.0 { t_end / steps as f64 } else { dt };
    let half_kin: Vec<C64> = omegas.iter().map(|&w| C64::from_polar(1.0, -0.5 * w * dt)).collect();
    let inv_n = 1.0 / n as f64;

    let sample_every = (steps / samples.max(1)).max(1);
    let mut psi = psi0.psi().to_vec();
    let mut times = vec![0.0];
    let mut states = vec![psi0.clone()];

    let mass0 = psi0.mass();
    let energy0 = energy(psi0, kernel, dispersion);
    let mut max_mass_drift = 0.0_f64;
    let mut max_energy_drift = 0.0_f64;

    let half_step = |psi: &mut Vec<C64>| {
        fft.process(psi);
        for (z, ph) in psi.iter_mut().zip(&half_kin) {
            *z *= ph;
        }
        ifft.process(psi);
        for z in psi.iter_mut() {
            *z *= inv_n;
        }
    };

    for step in 1..=steps {
        half_step(&mut psi);
        let v = kernel.potential(&psi, dx);
        for (z, vx) in psi.iter_mut().zip(&v) {
            *z *= C64::from_polar(1.0, -vx * dt);
        }
        half_step(&mut psi);
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Instability(format!(
                "non-finite amplitude at step {step} (dt = {dt:.3e})"
            )));
        }
        if step % sample_every == 0 || step == steps {
            let state = GridState::new(length, psi.clone())?;
            max_mass_drift = max_mass_drift.max((state.mass() - mass0).abs());
            max_energy_drift =
                max_energy_drift.max((energy(&state, kernel, dispersion) - energy0).abs());
            times.push(step as f64 * dt);
            states.push(state);
        }
    }

    Ok(HartreeTrajectory {
        times,
        states,
        max_mass_drift,
        max_energy_drift,
        max_phase_per_step: max_omega * dt,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_plane_wave_rotates_with_kinetic_phase() {
        let n = 32;
        let length = 8.0;
        let psi0 = GridState::plane_wave(n, length, 2, C64::new(0.3, 0.0)).unwrap();
        let t = 1.0;
        let traj = hartree_split_step(
            &psi0,
            t,
            1e-2,
            &Kernel::Delta { strength: 0.0 },
            Dispersion::Continuum,
            1,
        )
        .unwrap();
        let k = 2.0 * std::f64::consts::PI * 2.0 / length;
        let phase = C64::from_polar(1.0, -0.5 * k * k * t);
        let end = traj.states.last().unwrap();
        for (j, z) in end.psi().iter().enumerate() {
            let expected = psi0.psi()[j] * phase;
            assert!((z - expected).norm() < 1e-10, "j={j}");
        }
    }

    #[test]
    fn cubic_plane_wave_phase_is_exact() {
        // ω = k²/2 + |A|² for the delta kernel with unit strength.
        let n = 64;
        let length = 16.0;
        let amp = 0.37;
        let psi0 = GridState::plane_wave(n, length, 3, C64::new(amp, 0.0)).unwrap();
        let t = 2.0;
        let traj = hartree_split_step(
            &psi0,
            t,
            1e-3,
            &Kernel::Delta { strength: 1.0 },
            Dispersion::Continuum,
            1,
        )
        .unwrap();
        let k = 2.0 * std::f64::consts::PI * 3.0 / length;
        let omega = 0.5 * k * k + amp * amp;
        let end = traj.states.last().unwrap();
        for (j, z) in end.psi().iter().enumerate() {
            let expected = psi0.psi()[j] * C64::from_polar(1.0, -omega * t);
            assert!((z - expected).norm() < 1e-10, "j={j}");
        }
        assert!(traj.max_mass_drift < 1e-12);
        assert!(traj.max_energy_drift < 1e-12);
    }

    #[test]
    fn mass_and_energy_conservation_for_generic_data() {
        let n = 64;
        let length = 16.0;
        let dx = length / n as f64;
        let psi: Vec<C64> = (0..n)
            .map(|j| {
                let x = j as f64 * dx - 8.0;
                C64::new((-(x * x) / 4.0).exp(), 0.0) * C64::from_polar(1.0, 0.7 * x)
            })
            .collect();
        let psi0 = GridState::new(length, psi).unwrap().normalized();
        let traj = hartree_split_step(
            &psi0,
            1.0,
            1e-4,
            &Kernel::Delta { strength: 1.0 },
            Dispersion::Continuum,
            4,
        )
        .unwrap();
        assert!(traj.max_mass_drift < 1e-10, "mass drift {:.3e}", traj.max_mass_drift);
        assert!(traj.max_energy_drift < 1e-8, "energy drift {:.3e}", traj.max_energy_drift);
    }

    #[test]
    fn splitting_is_second_order_in_dt() {
        let n = 32;
        let length = 8.0;
        let dx = length / n as f64;
        let psi: Vec<C64> = (0..n)
            .map(|j| {
                let x = j as f64 * dx - 4.0;
                C64::new((-(x * x)).exp(), 0.0)
            })
            .collect();
        let psi0 = GridState::new(length, psi).unwrap().normalized();
        let kernel = Kernel::Delta { strength: 1.0 };
        let run = |dt: f64| {
            hartree_split_step(&psi0, 0.5, dt, &kernel, Dispersion::Continuum, 1)
                .unwrap()
                .states
                .pop()
                .unwrap()
        };
        let fine = run(1e-4);
        let err = |state: &GridState| -> f64 {
            state
                .psi()
                .iter()
                .zip(fine.psi())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        };
        let e1 = err(&run(4e-3));
        let e2 = err(&run(2e-3));
        let ratio = e1 / e2;
        assert!(ratio > 3.0 && ratio < 5.0, "ratio {ratio}");
    }

    #[test]
    fn sampled_kernel_uses_cyclic_convolution() {
        let n = 16;
        let psi0 = GridState::plane_wave(n, n as f64, 1, C64::new(0.25, 0.0)).unwrap();
        // constant density: V must be spatially constant for any kernel
        let phi: Vec<f64> = (0..n).map(|r| 1.0 / (1.0 + (r.min(n - r) as f64).powi(2))).collect();
        let v = Kernel::Sampled(phi).potential(psi0.psi(), psi0.dx());
        let first = v[0];
        assert!(v.iter().all(|&x| (x - first).abs() < 1e-12));
    }

    #[test]
    fn rejects_non_power_of_two_grids() {
        assert!(GridState::new(6.0, vec![C64::new(1.0, 0.0); 6]).is_err());
    }

    #[test]
    fn non_finite_amplitudes_abort_with_diagnostic() {
        let mut psi = vec![C64::new(0.5, 0.0); 8];
        psi[3] = C64::new(f64::NAN, 0.0);
        let state = GridState::new(8.0, psi).unwrap();
        let out = hartree_split_step(
            &state,
            0.1,
            1e-2,
            &Kernel::Delta { strength: 1.0 },
            Dispersion::Continuum,
            1,
        );
        assert!(matches!(out, Err(crate::Error::Instability(_))));
    }
}
