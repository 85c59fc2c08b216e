use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::ladder::{kron, phonon_lowering, PhotonRegister};
use crate::linalg::{dagger, expm, CMatrix, CVector, I};

/// Largest phonon truncation accepted by the dense check.
pub const MAX_DENSE_LEVELS: usize = 12;

/// Dense operators on `photon register ⊗ phonon` for one value of `gt`.
/// Joint index is `photon_index * (n_max + 1) + phonon_number`.
pub struct GlauberOperators {
    pub register: PhotonRegister,
    pub n_max: usize,
    /// `X = -i gt A b†`
    pub x: CMatrix,
    /// `Y = -i gt A† b`
    pub y: CMatrix,
    /// `A A†` lifted to the joint space.
    pub a_adag: CMatrix,
}

impl GlauberOperators {
    pub fn joint_index(&self, mode: i64, phonons: usize) -> usize {
        self.register.index(mode).expect("mode inside register") * (self.n_max + 1) + phonons
    }

    pub fn dim(&self) -> usize {
        self.register.dim() * (self.n_max + 1)
    }

    /// `|φ_0⟩ ⊗ |0⟩`.
    pub fn injected_photon(&self) -> CVector {
        let mut psi = CVector::zeros(self.dim());
        psi[self.joint_index(0, 0)] = Complex64::new(1.0, 0.0);
        psi
    }
}

/// Builds `X`, `Y` and `AA†` with the photon free to occupy modes
/// `-n_max..=+1`. Mode `+1` lets `A†` act on `|φ_0⟩`.
pub fn glauber_operators(gt: f64, n_max: usize) -> GlauberOperators {
    let register = PhotonRegister::new(-(n_max as i64), 1);
    let a = register.lower();
    let ad = register.raise();
    let b = phonon_lowering(n_max);
    let bd = dagger(&b);
    let id_ph = CMatrix::eye(n_max + 1);
    let scale = -I * gt;
    let x = kron(&a, &bd).mapv(|z| z * scale);
    let y = kron(&ad, &b).mapv(|z| z * scale);
    let a_adag = kron(&a.dot(&ad), &id_ph);
    GlauberOperators {
        register,
        n_max,
        x,
        y,
        a_adag,
    }
}

/// Compares `exp(X+Y)|ψ_0⟩` with `e^X e^Y e^{-(gt)² AA†/2}|ψ_0⟩` on the dense
/// joint space and returns the largest amplitude difference over states with
/// at most `n_max_small - 2` phonons.
///
/// The two topmost phonon levels are excluded because the hard truncation
/// wall itself breaks `[X,[X,Y]] = 0` there; the support guard
/// `(gt)² + 4 gt < n_max_small - 2` keeps the evolved state inside.
pub fn check_glauber_factorization(gt: f64, n_max_small: usize) -> Result<f64> {
    if !(gt >= 0.0) {
        return Err(Error::Usage(format!("gt must be nonnegative, got {gt}")));
    }
    if !(3..=MAX_DENSE_LEVELS).contains(&n_max_small) {
        return Err(Error::Usage(format!(
            "n_max_small must be in 3..={MAX_DENSE_LEVELS}, got {n_max_small}"
        )));
    }
    let interior = n_max_small - 2;
    let spread = gt * gt + 4.0 * gt;
    if spread >= interior as f64 {
        return Err(Error::Usage(format!(
            "support guard: mean + 4σ = {spread:.3} phonons does not fit below level {interior}; \
             use a smaller gt or larger n_max_small"
        )));
    }

    let ops = glauber_operators(gt, n_max_small);
    let psi0 = ops.injected_photon();
    let direct = expm(&(&ops.x + &ops.y)).dot(&psi0);

    let correction = ops.a_adag.mapv(|z| z * (-0.5 * gt * gt));
    let factored = expm(&ops.x).dot(&expm(&ops.y).dot(&expm(&correction).dot(&psi0)));

    let mut worst = 0.0f64;
    for mode in ops.register.low..=ops.register.high {
        for n in 0..=interior {
            let k = ops.joint_index(mode, n);
            worst = worst.max((direct[k] - factored[k]).norm());
        }
    }
    Ok(worst)
}
