//! Fourier-space toolkit for the spatially homogeneous Boltzmann equation
//! with Maxwellian molecules: angular kernels and their rate constants,
//! characteristic-function norms, the Bobylev-form solver, Povzner
//! estimates and a particle Monte Carlo oracle.
//!
//! Numerical types are generic over `f32`/`f64`; the aliases below fix `f64`
//! (and `f32` where single precision is meaningful).

pub mod bobylev;
pub mod charfun;
pub mod dsmc;
pub mod error;
pub mod interp;
pub mod kernel;
pub mod moments;
pub mod num;
pub mod povzner;
pub mod quad;
pub mod verify;

pub use error::{Error, Result};
pub use num::Real;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub type Kernel64 = kernel::AngularKernel<f64>;
pub type Kernel32 = kernel::AngularKernel<f32>;
pub type AnalyticCharFn64 = charfun::AnalyticCharFn<f64>;
pub type AnalyticCharFn32 = charfun::AnalyticCharFn<f32>;
pub type RadialCharFn64 = charfun::RadialCharFn<f64>;
pub type RadialCharFn32 = charfun::RadialCharFn<f32>;
pub type GridSpec64 = charfun::GridSpec<f64>;
pub type SolveConfig64 = bobylev::SolveConfig<f64>;
pub type EvolutionTrace64 = bobylev::EvolutionTrace<f64>;
pub type ParticleEnsemble64 = dsmc::ParticleEnsemble<f64>;
pub type ParticleEnsemble32 = dsmc::ParticleEnsemble<f32>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_precision_paths() {
        let c = Kernel32::constant(1.0).rate_constants(&[1.0]).unwrap();
        assert!((c.lambda(1.0).unwrap() - 2.0 * std::f32::consts::PI / 3.0).abs() < 1e-5);
        let e = dsmc::sample_initial(&AnalyticCharFn32::gaussian(1.0), 1000, 1).unwrap();
        assert!((e.energy() - 3.0).abs() < 0.5);
    }
}
