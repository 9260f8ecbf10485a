//! Discrete transparent boundary conditions via the Z-transform.
//!
//! Applying the Z-transform to the time-discrete scheme turns the exterior
//! problem into the ODE `z(û + τû_xxx) = û - τg±û_x`, whose characteristic
//! polynomial is
//!
//! ```text
//! zτ r³ + τ g± r + (z - 1) = 0.
//! ```
//!
//! For `|z| > 1` on a suitable contour exactly one root `r₁` has negative
//! real part; the decay condition at ±∞ then yields boundary relations whose
//! convolution kernels are
//!
//! ```text
//! Y₁ = Z⁻¹{ 1/r₂ + 1/r₃ },   Y₂ = Z⁻¹{ -1/(r₂r₃) },
//! Y₃ = Z⁻¹{ 1/r₁² },         Y₄ = Z⁻¹{ 1/r₁ }.
//! ```
//!
//! Kernels are recovered numerically by sampling the symbols on the circle
//! `|z| = r = e^{Cτ}` and applying the inverse FFT (trapezoidal discretization
//! of the Cauchy integral). The left-boundary kernels Y₁, Y₂ use `g₋`, the
//! right-boundary kernels Y₃, Y₄ use `g₊`.
//!
//! The sign classification of the roots only holds on contours where the
//! dispersive term dominates the advection term; see [`classification_radius`]
//! for the validated envelope, which scales like `r ≳ |g| τ^{2/3}`.

use num_complex::Complex64;
use rustfft::{num_complex::Complex as FftComplex, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TbcError {
    #[error("root classification failed at z = {z}: {n_negative} roots with negative real part")]
    Classification { z: Complex64, n_negative: usize },
    #[error("degenerate characteristic root parameter ζ(z) = 0 at z = {z}")]
    Degenerate { z: Complex64 },
    #[error("discarded imaginary part {max_imag:.3e} exceeds 1e-8; kernels are not real")]
    ImagResidue { max_imag: f64 },
    #[error("invalid argument: {0}")]
    InvalidArg(String),
    #[error("history too short: need steps 0..{need}, have {have}")]
    Index { need: usize, have: usize },
}

/// The three characteristic roots at one evaluation point, classified so that
/// `r1` is the unique root with negative real part.
#[derive(Debug, Clone, Copy)]
pub struct RootTriple {
    pub r1: Complex64,
    pub r2: Complex64,
    pub r3: Complex64,
    pub z: Complex64,
}

impl RootTriple {
    /// Residual of `zτr³ + τg r + z - 1` for each root (maximum).
    pub fn max_residual(&self, tau: f64, g_side: f64) -> f64 {
        [self.r1, self.r2, self.r3]
            .iter()
            .map(|&r| (self.z * tau * r * r * r + tau * g_side * r + self.z - 1.0).norm())
            .fold(0.0, f64::max)
    }
}

/// Solve the characteristic cubic at `z` and classify the roots by the sign
/// of the real part.
///
/// The analytic formulas (Cardano parameterization with principal branches)
/// give the root set; labels are then assigned by re-classification rather
/// than by the analytic index, because principal-branch cube and square roots
/// permute labels across branch cuts. Roots are Newton-polished to residual
/// level before classification.
pub fn characteristic_roots(
    z: Complex64,
    tau: f64,
    g_side: f64,
) -> Result<RootTriple, TbcError> {
    if !(tau > 0.0) {
        return Err(TbcError::InvalidArg(format!("tau must be > 0, got {tau}")));
    }
    if z.norm() <= 1.0 {
        return Err(TbcError::InvalidArg(format!("|z| > 1 required, got {z}")));
    }
    // normalized cubic r³ + p r + q = 0
    let p = Complex64::new(g_side, 0.0) / z;
    let q = (z - 1.0) / (z * tau);
    let disc = q * q + (4.0 / 27.0) * p * p * p;
    let g_big = q + disc.sqrt();
    let mut zeta = -cbrt_principal(g_big / 2.0);
    if zeta.norm() < 1e-14 * q.norm().powf(1.0 / 3.0).max(p.norm().sqrt()) {
        // principal branch degenerated; the conjugate square-root branch
        // gives the other Cardano parameter
        zeta = -cbrt_principal((q - disc.sqrt()) / 2.0);
        if zeta.norm() == 0.0 {
            return Err(TbcError::Degenerate { z });
        }
    }
    let omega = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
    let mut roots = [Complex64::default(); 3];
    for (j, slot) in roots.iter_mut().enumerate() {
        let w = omega.powu(j as u32) * zeta;
        let mut r = w - p / (3.0 * w);
        // Newton polish on the normalized cubic
        for _ in 0..4 {
            let f = r * r * r + p * r + q;
            let fp = 3.0 * r * r + p;
            if fp.norm() == 0.0 {
                break;
            }
            r -= f / fp;
        }
        *slot = r;
    }
    let mut neg: Vec<Complex64> = Vec::with_capacity(1);
    let mut pos: Vec<Complex64> = Vec::with_capacity(2);
    for &r in &roots {
        if r.re < 0.0 {
            neg.push(r);
        } else {
            pos.push(r);
        }
    }
    if neg.len() != 1 {
        return Err(TbcError::Classification {
            z,
            n_negative: neg.len(),
        });
    }
    // deterministic ordering of the growing pair
    pos.sort_by(|a, b| a.im.total_cmp(&b.im));
    Ok(RootTriple {
        r1: neg[0],
        r2: pos[0],
        r3: pos[1],
        z,
    })
}

fn cbrt_principal(w: Complex64) -> Complex64 {
    if w.norm() == 0.0 {
        return Complex64::default();
    }
    Complex64::from_polar(w.norm().cbrt(), w.arg() / 3.0)
}

/// The four kernel symbols at one z-point:
/// `s1 = 1/r₂ + 1/r₃`, `s2 = -1/(r₂r₃)`, `s3 = 1/r₁²`, `s4 = 1/r₁`.
pub fn kernel_symbols(
    roots: &RootTriple,
) -> Result<(Complex64, Complex64, Complex64, Complex64), TbcError> {
    let tiny = 1e-300;
    if roots.r1.norm() < tiny || roots.r2.norm() < tiny || roots.r3.norm() < tiny {
        return Err(TbcError::Degenerate { z: roots.z });
    }
    let s1 = 1.0 / roots.r2 + 1.0 / roots.r3;
    let s2 = -1.0 / (roots.r2 * roots.r3);
    let s3 = 1.0 / (roots.r1 * roots.r1);
    let s4 = 1.0 / roots.r1;
    Ok((s1, s2, s3, s4))
}

/// Result of a numerical inverse Z-transform.
pub struct InverseZ {
    pub taps: Vec<f64>,
    /// Largest imaginary magnitude discarded when taking real parts.
    pub max_imag: f64,
}

/// Numerical inverse Z-transform: sample the symbol on the circle of the
/// given radius, inverse-FFT, and scale tap `l` by `radius^l`.
///
/// `n_samples >= 2 * n_taps` is required for the trapezoidal contour
/// discretization to resolve the requested taps.
pub fn inverse_z_transform<F>(
    mut symbol: F,
    radius: f64,
    n_samples: usize,
    n_taps: usize,
) -> Result<InverseZ, TbcError>
where
    F: FnMut(Complex64) -> Result<Complex64, TbcError>,
{
    if !(radius > 1.0) {
        return Err(TbcError::InvalidArg(format!(
            "radius must be > 1, got {radius}"
        )));
    }
    if n_taps == 0 {
        return Err(TbcError::InvalidArg("n_taps must be >= 1".into()));
    }
    if n_samples < 2 * n_taps {
        return Err(TbcError::InvalidArg(format!(
            "n_samples = {n_samples} < 2 * n_taps = {}",
            2 * n_taps
        )));
    }
    let mut buf: Vec<FftComplex<f64>> = Vec::with_capacity(n_samples);
    for k in 0..n_samples {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
        let z = Complex64::from_polar(radius, theta);
        let s = symbol(z)?;
        buf.push(FftComplex::new(s.re, s.im));
    }
    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_inverse(n_samples);
    fft.process(&mut buf);
    let scale = 1.0 / n_samples as f64;
    let mut taps = Vec::with_capacity(n_taps);
    let mut max_imag = 0.0f64;
    let mut r_pow = 1.0f64;
    for tap in buf.iter().take(n_taps) {
        taps.push(tap.re * scale * r_pow);
        max_imag = max_imag.max((tap.im * scale * r_pow).abs());
        r_pow *= radius;
    }
    if max_imag > 1e-8 {
        return Err(TbcError::ImagResidue { max_imag });
    }
    Ok(InverseZ { taps, max_imag })
}

/// The four transparent-boundary convolution kernels, with `m_max + 1` taps
/// each. Immutable after construction; build once per (τ, g±, m_max)
/// configuration.
#[derive(Debug, Clone)]
pub struct TbcKernels {
    pub y1: Vec<f64>,
    pub y2: Vec<f64>,
    pub y3: Vec<f64>,
    pub y4: Vec<f64>,
    pub y1_0: f64,
    pub y2_0: f64,
    pub y3_0: f64,
    pub y4_0: f64,
    pub radius: f64,
    pub n_samples: usize,
    pub tau: f64,
    pub g_minus: f64,
    pub g_plus: f64,
    /// Largest imaginary part discarded across the four inversions.
    pub max_imag: f64,
}

impl TbcKernels {
    pub fn zero_taps(&self) -> [f64; 4] {
        [self.y1_0, self.y2_0, self.y3_0, self.y4_0]
    }
}

/// Number of contour samples for `m_max` taps: `17 · m_max` (from the
/// `⌈|ln 1e-7|⌉` accuracy rule), rounded up to the next power of two.
pub fn contour_samples(m_max: usize) -> usize {
    let want = 17 * m_max.max(1);
    want.next_power_of_two()
}

/// Contour radius inside the root-classification envelope: the dispersive
/// term must dominate the advection term on the whole circle, which requires
/// roughly `radius ≳ |g| τ^{2/3}`. Returns a radius with a 4x margin, at
/// least `min_radius`.
pub fn classification_radius(tau: f64, g_abs: f64, min_radius: f64) -> f64 {
    let mut r = min_radius.max(1.0 + 1e-9);
    for _ in 0..200 {
        let q_min = (1.0 - 1.0 / r) / tau;
        if g_abs / r <= 0.25 * q_min.powf(2.0 / 3.0) {
            return r;
        }
        r *= 1.3;
    }
    r
}

/// Build the kernels by inverse Z-transform on the circle `r = e^{c_radius·τ}`.
pub fn build_kernels(
    tau: f64,
    g_minus: f64,
    g_plus: f64,
    m_max: usize,
    c_radius: f64,
) -> Result<TbcKernels, TbcError> {
    if !(tau > 0.0) {
        return Err(TbcError::InvalidArg(format!("tau must be > 0, got {tau}")));
    }
    if m_max == 0 {
        return Err(TbcError::InvalidArg("m_max must be >= 1".into()));
    }
    if !(c_radius > 0.0) {
        return Err(TbcError::InvalidArg(format!(
            "c_radius must be > 0, got {c_radius}"
        )));
    }
    let radius = (c_radius * tau).exp();
    if radius <= 1.0 + 1e-14 {
        return Err(TbcError::InvalidArg(format!(
            "contour radius e^(C·τ) = {radius} too close to 1"
        )));
    }
    let n_samples = contour_samples(m_max);
    let n_taps = m_max + 1;

    // sample all four symbols in one sweep over the circle, then invert
    let mut samples = vec![[Complex64::default(); 4]; n_samples];
    for (k, slot) in samples.iter_mut().enumerate() {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_samples as f64;
        let z = Complex64::from_polar(radius, theta);
        let left = characteristic_roots(z, tau, g_minus)?;
        let (s1, s2, _, _) = kernel_symbols(&left)?;
        let right = characteristic_roots(z, tau, g_plus)?;
        let (_, _, s3, s4) = kernel_symbols(&right)?;
        *slot = [s1, s2, s3, s4];
    }
    let mut kernels: Vec<Vec<f64>> = Vec::with_capacity(4);
    let mut max_imag = 0.0f64;
    for j in 0..4 {
        let mut idx = 0;
        let inv = inverse_z_transform(
            |_z| {
                let v = samples[idx][j];
                idx += 1;
                Ok(v)
            },
            radius,
            n_samples,
            n_taps,
        )?;
        max_imag = max_imag.max(inv.max_imag);
        kernels.push(inv.taps);
    }
    let y4 = kernels.pop().unwrap();
    let y3 = kernels.pop().unwrap();
    let y2 = kernels.pop().unwrap();
    let y1 = kernels.pop().unwrap();
    Ok(TbcKernels {
        y1_0: y1[0],
        y2_0: y2[0],
        y3_0: y3[0],
        y4_0: y4[0],
        y1,
        y2,
        y3,
        y4,
        radius,
        n_samples,
        tau,
        g_minus,
        g_plus,
        max_imag,
    })
}

/// Boundary traces of the solution, one entry per completed step.
/// Single-writer (the stepper), any number of readers.
#[derive(Debug, Clone, Default)]
pub struct BoundaryHistory {
    pub u_left: Vec<f64>,
    pub ux_left: Vec<f64>,
    pub uxx_left: Vec<f64>,
    pub u_right: Vec<f64>,
    pub ux_right: Vec<f64>,
    pub uxx_right: Vec<f64>,
}

impl BoundaryHistory {
    pub fn len(&self) -> usize {
        self.u_left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_left.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, u_l: f64, ux_l: f64, uxx_l: f64, u_r: f64, ux_r: f64, uxx_r: f64) {
        self.u_left.push(u_l);
        self.ux_left.push(ux_l);
        self.uxx_left.push(uxx_l);
        self.u_right.push(u_r);
        self.ux_right.push(ux_r);
        self.uxx_right.push(uxx_r);
    }
}

/// History sums of the boundary conditions at step `m`:
///
/// ```text
/// h₁ = Σ_{j=1}^{m} (Y₁ʲ u_x^{m-j}(-1) + Y₂ʲ u_xx^{m-j}(-1))
/// h₂ = Σ_{j=1}^{m} Y₃ʲ u_xx^{m-j}(1)
/// h₃ = Σ_{j=1}^{m} Y₄ʲ u_xx^{m-j}(1)
/// ```
pub fn history_rhs(
    kernels: &TbcKernels,
    history: &BoundaryHistory,
    m: usize,
) -> Result<(f64, f64, f64), TbcError> {
    if m == 0 {
        return Err(TbcError::InvalidArg("m must be >= 1".into()));
    }
    if history.len() < m {
        return Err(TbcError::Index {
            need: m,
            have: history.len(),
        });
    }
    if kernels.y1.len() < m + 1 {
        return Err(TbcError::Index {
            need: m + 1,
            have: kernels.y1.len(),
        });
    }
    let mut h1 = 0.0;
    let mut h2 = 0.0;
    let mut h3 = 0.0;
    for j in 1..=m {
        let i = m - j;
        h1 += kernels.y1[j] * history.ux_left[i] + kernels.y2[j] * history.uxx_left[i];
        h2 += kernels.y3[j] * history.uxx_right[i];
        h3 += kernels.y4[j] * history.uxx_right[i];
    }
    Ok((h1, h2, h3))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cube_roots_of_minus_half() {
        // z=2, τ=1, g=0: r³ = -(z-1)/(zτ) = -1/2
        let z = Complex64::new(2.0, 0.0);
        let roots = characteristic_roots(z, 1.0, 0.0).unwrap();
        let c = 0.5f64.cbrt();
        assert!((roots.r1.re + c).abs() < 1e-14 && roots.r1.im.abs() < 1e-14);
        assert!((roots.r2.re - c / 2.0).abs() < 1e-14);
        assert!((roots.r2.im + c * 3.0f64.sqrt() / 2.0).abs() < 1e-14);
        assert!((roots.r3.im - c * 3.0f64.sqrt() / 2.0).abs() < 1e-14);
        assert!(roots.max_residual(1.0, 0.0) < 1e-14);
    }

    #[test]
    fn theorem_classification_on_example_circle() {
        // 64 samples of z = 1.1 e^{iθ}, τ = 0.01, g = 6
        for k in 0..64 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 64.0;
            let z = Complex64::from_polar(1.1, theta);
            let roots = characteristic_roots(z, 0.01, 6.0).unwrap();
            assert!(roots.r1.re < 0.0 && roots.r2.re >= 0.0 && roots.r3.re >= 0.0);
            assert!(roots.max_residual(0.01, 6.0) < 1e-10);
        }
    }

    #[test]
    fn symbol_identities() {
        let z = Complex64::new(2.0, 0.0);
        let roots = characteristic_roots(z, 1.0, 0.0).unwrap();
        let (s1, s2, s3, s4) = kernel_symbols(&roots).unwrap();
        // s4 = 1/r1 = -2^{1/3}
        assert!((s4.re + 2.0f64.cbrt()).abs() < 1e-13 && s4.im.abs() < 1e-13);
        // s3 = s4² always
        assert!((s3 - s4 * s4).norm() < 1e-13);
        // Vieta: r1 r2 r3 = -(z-1)/(zτ) = -1/2, so s2 = -1/(r2r3) = 2 r1
        assert!((s2 - 2.0 * roots.r1).norm() < 1e-13);
        // and with g = 0: r2 + r3 = -r1, so s1 = -r1/(r2 r3) = 2 r1²
        assert!((s1 - 2.0 * roots.r1 * roots.r1).norm() < 1e-13);
    }

    #[test]
    fn inverse_z_delta_shift_geometric() {
        // δ sequence: symbol ≡ 1
        let inv = inverse_z_transform(|_| Ok(Complex64::new(1.0, 0.0)), 1.2, 256, 32).unwrap();
        assert!((inv.taps[0] - 1.0).abs() < 1e-12);
        for &t in &inv.taps[1..] {
            assert!(t.abs() < 1e-12);
        }
        // shift: z^{-2} -> e_2
        let inv = inverse_z_transform(|z| Ok(1.0 / (z * z)), 1.2, 256, 32).unwrap();
        for (l, &t) in inv.taps.iter().enumerate() {
            let want = if l == 2 { 1.0 } else { 0.0 };
            assert!((t - want).abs() < 1e-12, "tap {l}: {t}");
        }
        // geometric (all ones): z/(z-1)
        let inv = inverse_z_transform(|z| Ok(z / (z - 1.0)), 1.2, 256, 32).unwrap();
        for (l, &t) in inv.taps.iter().enumerate() {
            assert!((t - 1.0).abs() < 1e-9, "tap {l}: {t}");
        }
    }

    #[test]
    fn inverse_z_rejects_undersampling() {
        assert!(inverse_z_transform(|_| Ok(Complex64::new(1.0, 0.0)), 1.2, 60, 32).is_err());
        assert!(inverse_z_transform(|_| Ok(Complex64::new(1.0, 0.0)), 0.9, 256, 32).is_err());
    }

    #[test]
    fn kernels_real_finite_and_self_convergent() {
        let (tau, m_max, c) = (0.1, 64usize, 1.0);
        let k = build_kernels(tau, 0.0, 0.0, m_max, c).unwrap();
        assert!(k.max_imag < 1e-8);
        for arr in [&k.y1, &k.y2, &k.y3, &k.y4] {
            assert_eq!(arr.len(), m_max + 1);
            assert!(arr.iter().all(|v| v.is_finite()));
        }
        assert_eq!(k.y1_0, k.y1[0]);
        assert_eq!(k.y4_0, k.y4[0]);
        // doubling the number of contour samples moves no tap by more than 1e-9
        let n2 = 2 * k.n_samples;
        for (j, arr) in [&k.y1, &k.y2, &k.y3, &k.y4].iter().enumerate() {
            let g = if j < 2 { k.g_minus } else { k.g_plus };
            let inv = inverse_z_transform(
                |z| {
                    let roots = characteristic_roots(z, tau, g)?;
                    let (s1, s2, s3, s4) = kernel_symbols(&roots)?;
                    Ok([s1, s2, s3, s4][j])
                },
                k.radius,
                n2,
                m_max + 1,
            )
            .unwrap();
            for (a, b) in arr.iter().zip(inv.taps.iter()) {
                assert!((a - b).abs() < 1e-9, "kernel {j}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn kernel_zero_taps_have_mirror_structure() {
        // for equal exterior coefficients the true zeroth taps satisfy
        // Y1 = -Y4 and Y2 = -Y3, the relation behind the dual-basis identity;
        // the numerical taps reproduce it up to contour aliasing
        for (tau, g) in [(0.1, 0.0), (0.01, 6.0), (0.01, -6.0)] {
            let k = build_kernels(tau, g, g, 128, 1.0).unwrap();
            assert!((k.y1_0 + k.y4_0).abs() < 1e-12, "Y1+Y4 = {}", k.y1_0 + k.y4_0);
            assert!((k.y2_0 + k.y3_0).abs() < 1e-12, "Y2+Y3 = {}", k.y2_0 + k.y3_0);
        }
    }

    #[test]
    fn mirror_defect_equals_aliasing_exactly() {
        // Σ_j 1/r_j = -gτ/(z-1), whose Z-transform has zeroth tap 0, so
        // Y1⁰ + Y4⁰ = -gτ · r^{-N}/(1 - r^{-N}): the sampled-contour aliasing
        // of the geometric tail, predictable in closed form.
        let (tau, g, m) = (0.01, 6.0, 32usize);
        let k = build_kernels(tau, g, g, m, 1.0).unwrap();
        let alias = k.radius.powi(-(k.n_samples as i32));
        let predicted = -g * tau * alias / (1.0 - alias);
        let defect = k.y1_0 + k.y4_0;
        assert!(
            (defect - predicted).abs() < 1e-12 + 1e-6 * predicted.abs(),
            "defect {defect:.6e} vs predicted {predicted:.6e}"
        );
    }

    #[test]
    fn kernel_round_trip_reproduces_symbol() {
        // Z-transforming the truncated kernel back matches the sampled symbol
        // in the low-frequency modes
        let (tau, m_max) = (0.1, 128usize);
        let k = build_kernels(tau, 0.0, 0.0, m_max, 1.0).unwrap();
        let n = k.n_samples;
        let mut worst = 0.0f64;
        for kk in 0..n / 4 {
            let theta = 2.0 * std::f64::consts::PI * kk as f64 / n as f64;
            let z = Complex64::from_polar(k.radius, theta);
            let roots = characteristic_roots(z, tau, 0.0).unwrap();
            let (_, _, _, s4) = kernel_symbols(&roots).unwrap();
            let mut acc = Complex64::default();
            let mut zp = Complex64::new(1.0, 0.0);
            for &t in &k.y4 {
                acc += t * zp;
                zp /= z;
            }
            // truncated tail: compare against the full-series samples
            worst = worst.max((acc - s4).norm() / s4.norm().max(1.0));
        }
        assert!(worst < 1e-6, "round-trip mismatch {worst:.3e}");
    }

    #[test]
    fn history_sums() {
        let k = build_kernels(0.1, 0.0, 0.0, 8, 1.0).unwrap();
        let mut h = BoundaryHistory::default();
        h.push(0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let (h1, h2, h3) = history_rhs(&k, &h, 1).unwrap();
        assert_eq!((h1, h2, h3), (0.0, 0.0, 0.0));

        // m=2 with u_xx(1) trace = [0, 1]: h2 = Y3¹, h3 = Y4¹
        h.push(0.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        let (h1, h2, h3) = history_rhs(&k, &h, 2).unwrap();
        assert_eq!(h1, 0.0);
        assert!((h2 - k.y3[1]).abs() < 1e-15);
        assert!((h3 - k.y4[1]).abs() < 1e-15);

        assert!(history_rhs(&k, &h, 3).is_err());
    }

    #[test]
    fn classification_radius_covers_hard_regime() {
        // τ = 1e-3, g = ±216 needs a contour well away from |z| = 1
        let r = classification_radius(1e-3, 216.0, 1.0 + 1e-6);
        for k in 0..256 {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / 256.0;
            let z = Complex64::from_polar(r, theta);
            let roots = characteristic_roots(z, 1e-3, 216.0).unwrap();
            assert!(roots.max_residual(1e-3, 216.0) < 1e-10 * z.norm().max(1.0));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(96))]
        #[test]
        fn roots_satisfy_cubic_and_vieta(
            theta in 0.0..(2.0 * std::f64::consts::PI),
            tau in 1e-4f64..1e-1,
            g in -10.0f64..10.0,
            rad in 1.05f64..3.0,
        ) {
            let z = Complex64::from_polar(rad, theta);
            if let Ok(roots) = characteristic_roots(z, tau, g) {
                let scale = (z.norm() * tau).max(1.0);
                prop_assert!(roots.max_residual(tau, g) < 1e-10 * scale);
                let sum = roots.r1 + roots.r2 + roots.r3;
                let prod = roots.r1 * roots.r2 * roots.r3;
                let q = (z - 1.0) / (z * tau);
                let mag = roots.r1.norm().max(roots.r2.norm()).max(roots.r3.norm());
                prop_assert!(sum.norm() < 1e-9 * mag.max(1.0));
                prop_assert!((prod + q).norm() < 1e-9 * q.norm().max(1.0));
            }
        }
    }
}
