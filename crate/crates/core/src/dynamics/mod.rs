//! Time-domain signals and the curve-fitting toolbox.

mod echo;
mod fit;
mod signal;
mod trace;

pub use echo::{simulate_hahn_echo, simulate_hahn_echo_ensemble, weak_c13_ensemble};
pub use fit::{
    fit_decaying_sinusoids, fit_exponential, fit_lorentzian, levenberg_marquardt, FitParam, FitResult, LmOptions,
    LmOutcome, LorentzianInit, Model, SinusoidInit,
};
pub use signal::{detrend_polynomial, fft_spectrum, polynomial_fit, simulate_ramsey, RamseyComponent, Window};
pub use trace::{uniform_times, DecayParams, TimeTrace};
