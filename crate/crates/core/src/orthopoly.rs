//! Legendre and Jacobi polynomial machinery plus the generalized Gauss-Jacobi
//! quadrature rule used by the third-order spectral method.
//!
//! The rule has N nodes `{-1} ∪ {roots of P^{(2,1)}_{N-2}} ∪ {+1}` and an
//! additional derivative functional at the right endpoint:
//!
//! ```text
//! (u, v)_N = Σ_{k=2}^{N-1} ω_k u(x_k)v(x_k)
//!          + ω_1 u(x_1)v(x_1) + ω_N u(x_N)v(x_N) + ω'_N ∂_x(uv)(x_N)
//! ```
//!
//! It integrates polynomials up to degree 2N-2 exactly. Jacobi polynomials
//! here follow the standard normalization `P^{(α,β)}_n(1) = C(n+α, n)`; with
//! that convention the interior weights
//!
//! ```text
//! ω_k = 4/(N²-1) · ((2N+1)/(N+2))² · 1/((1-x_k) [P^{(2,1)}_{N-1}(x_k)]²)
//! ```
//!
//! reproduce the exactness property to machine precision (checked in tests).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum OrthoError {
    #[error("need at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("Newton refinement stagnated for root {index} of P^(2,1)_{n}: residual {residual:.3e}")]
    NewtonStagnation {
        n: usize,
        index: usize,
        residual: f64,
    },
    #[error("length mismatch: {0}")]
    LengthMismatch(String),
}

/// Evaluate `d^order/dx^order L_k(x)` for `order ∈ {0,1,2,3}`.
///
/// Values and derivatives are carried together through the differentiated
/// three-term recurrence, which stays stable at the endpoints.
pub fn legendre_eval(k: usize, x: f64, order: usize) -> f64 {
    assert!(order <= 3, "derivative order must be 0..=3");
    assert!(x.abs() <= 1.0 + 1e-14, "|x| <= 1 required, got {x}");
    if k == 0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    // (v, d1, d2, d3) for L_{n-1} and L_n
    let mut prev = [1.0, 0.0, 0.0, 0.0];
    let mut cur = [x, 1.0, 0.0, 0.0];
    for n in 1..k {
        let a = (2 * n + 1) as f64 / (n + 1) as f64;
        let b = n as f64 / (n + 1) as f64;
        let next = [
            a * x * cur[0] - b * prev[0],
            a * (cur[0] + x * cur[1]) - b * prev[1],
            a * (2.0 * cur[1] + x * cur[2]) - b * prev[2],
            a * (3.0 * cur[2] + x * cur[3]) - b * prev[3],
        ];
        prev = cur;
        cur = next;
    }
    cur[order]
}

/// Closed-form endpoint values `L_k(±1)`, `L'_k(±1)`, `L''_k(±1)`.
pub fn legendre_endpoint(k: usize, side: i32, order: usize) -> f64 {
    assert!(side == 1 || side == -1);
    assert!(order <= 2);
    let kf = k as f64;
    let sign = |p: i64| -> f64 {
        if side > 0 || p % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    match order {
        0 => sign(k as i64),
        1 => sign(k as i64 - 1) * kf * (kf + 1.0) / 2.0,
        _ => sign(k as i64) * (kf - 1.0) * kf * (kf + 1.0) * (kf + 2.0) / 8.0,
    }
}

/// Standard-normalization Jacobi polynomial P^{(2,1)}_n and its derivative.
pub fn jacobi21(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut pm = 1.0f64; // P_0
    let mut pc = (5.0 * x + 1.0) / 2.0; // P_1
    for m in 1..n {
        let mf = m as f64;
        // 2(m+1)(m+4)(2m+3) P_{m+1} = (2m+4)[(2m+5)(2m+3)x + 3] P_m - 2(m+2)(m+1)(2m+5) P_{m-1}
        let c0 = 2.0 * (mf + 1.0) * (mf + 4.0) * (2.0 * mf + 3.0);
        let c1 = (2.0 * mf + 4.0) * ((2.0 * mf + 5.0) * (2.0 * mf + 3.0) * x + 3.0);
        let c2 = 2.0 * (mf + 2.0) * (mf + 1.0) * (2.0 * mf + 5.0);
        let pn = (c1 * pc - c2 * pm) / c0;
        pm = pc;
        pc = pn;
    }
    // (2n+3)(1-x²) P'_n = n[1-(2n+3)x] P_n + 2(n+2)(n+1) P_{n-1}
    let nf = n as f64;
    let deriv = if (1.0 - x * x).abs() > 1e-12 {
        (nf * (1.0 - (2.0 * nf + 3.0) * x) * pc + 2.0 * (nf + 2.0) * (nf + 1.0) * pm)
            / ((2.0 * nf + 3.0) * (1.0 - x * x))
    } else {
        f64::NAN // endpoint derivative not needed by the root finder
    };
    (pc, deriv)
}

/// Ascending roots of P^{(2,1)}_n in (-1, 1).
///
/// Eigenvalues of the symmetric Jacobi recurrence matrix (computed by Sturm
/// bisection) provide the initial guesses; each root is then polished by
/// Newton iteration on the orthonormal evaluation.
pub fn jacobi21_roots(n: usize) -> Result<Vec<f64>, OrthoError> {
    if n == 0 {
        return Ok(Vec::new());
    }
    // Monic recurrence x p_m = p_{m+1} + A_m p_m + B_m p_{m-1}, α=2, β=1.
    let diag: Vec<f64> = (0..n)
        .map(|m| {
            let mf = m as f64;
            -3.0 / ((2.0 * mf + 3.0) * (2.0 * mf + 5.0))
        })
        .collect();
    let off: Vec<f64> = (1..n)
        .map(|m| {
            let mf = m as f64;
            let b = 4.0 * mf * (mf + 2.0) * (mf + 1.0) * (mf + 3.0)
                / ((2.0 * mf + 3.0).powi(2) * (2.0 * mf + 4.0) * (2.0 * mf + 2.0));
            b.sqrt()
        })
        .collect();
    let mut roots = tridiag_eigenvalues(&diag, &off);
    roots.sort_by(|a, b| a.total_cmp(b));

    // Newton polish on the orthonormal polynomial; convergence is judged by
    // the Newton step |p/p'|, which bounds the root error directly.
    for (idx, r) in roots.iter_mut().enumerate() {
        let mut x = *r;
        for _ in 0..60 {
            let (p, dp) = orthonormal21(n, x, &diag, &off);
            if dp == 0.0 {
                break;
            }
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (p, dp) = orthonormal21(n, x, &diag, &off);
        let step = if dp != 0.0 { (p / dp).abs() } else { f64::INFINITY };
        if step > 1e-13 {
            return Err(OrthoError::NewtonStagnation {
                n,
                index: idx,
                residual: step,
            });
        }
        *r = x;
    }
    roots.sort_by(|a, b| a.total_cmp(b));
    Ok(roots)
}

/// Orthonormal Jacobi(2,1) value and derivative from the symmetric recurrence.
fn orthonormal21(n: usize, x: f64, diag: &[f64], off: &[f64]) -> (f64, f64) {
    let mu0: f64 = 4.0 / 3.0; // ∫ (1-x)²(1+x) dx on [-1,1]
    let mut pm = 0.0f64;
    let mut dm = 0.0f64;
    let mut pc = 1.0 / mu0.sqrt();
    let mut dc = 0.0f64;
    for m in 0..n {
        let b_next = if m < n - 1 { off[m] } else {
            // recurrence coefficient b_n (needed to step to degree n)
            let mf = (m + 1) as f64;
            (4.0 * mf * (mf + 2.0) * (mf + 1.0) * (mf + 3.0)
                / ((2.0 * mf + 3.0).powi(2) * (2.0 * mf + 4.0) * (2.0 * mf + 2.0)))
                .sqrt()
        };
        let b_prev = if m == 0 { 0.0 } else { off[m - 1] };
        let pn = ((x - diag[m]) * pc - b_prev * pm) / b_next;
        let dn = ((x - diag[m]) * dc + pc - b_prev * dm) / b_next;
        pm = pc;
        dm = dc;
        pc = pn;
        dc = dn;
    }
    (pc, dc)
}

/// Eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence bisection.
fn tridiag_eigenvalues(diag: &[f64], off: &[f64]) -> Vec<f64> {
    let n = diag.len();
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { off[i - 1].abs() } else { 0.0 }
            + if i < n - 1 { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - r);
        hi = hi.max(diag[i] + r);
    }
    let count_below = |lam: f64| -> usize {
        // number of eigenvalues < lam via Sturm sequence
        let mut count = 0;
        let mut d = 1.0f64;
        for i in 0..n {
            let off2 = if i > 0 { off[i - 1] * off[i - 1] } else { 0.0 };
            d = diag[i] - lam - off2 / d;
            if d == 0.0 {
                d = 1e-300;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    };
    (0..n)
        .map(|k| {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..80 {
                let mid = 0.5 * (a + b);
                if count_below(mid) <= k {
                    a = mid;
                } else {
                    b = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Nodes and weights of the generalized Gauss-Jacobi rule for third-order
/// problems (see module docs). Immutable after construction.
#[derive(Debug, Clone)]
pub struct SpectralRule {
    pub n_points: usize,
    /// Ascending nodes, `nodes[0] = -1`, `nodes[N-1] = +1`.
    pub nodes: Vec<f64>,
    /// Point weights, `weights[0] = ω_1`, ..., `weights[N-1] = ω_N`.
    pub weights: Vec<f64>,
    /// Weight ω'_N of the derivative term ∂_x(uv) at the right endpoint.
    pub deriv_weight: f64,
}

/// Build the N-point rule. Requires `n_points >= 8`.
pub fn build_rule(n_points: usize) -> Result<SpectralRule, OrthoError> {
    if n_points < 8 {
        return Err(OrthoError::TooFewPoints {
            min: 8,
            got: n_points,
        });
    }
    let n = n_points;
    let nf = n as f64;
    let interior = jacobi21_roots(n - 2)?;
    let mut nodes = Vec::with_capacity(n);
    nodes.push(-1.0);
    nodes.extend_from_slice(&interior);
    nodes.push(1.0);

    let mut weights = vec![0.0f64; n];
    weights[0] = 2.0 / (nf * nf - 1.0);
    let pref = 4.0 / (nf * nf - 1.0) * ((2.0 * nf + 1.0) / (nf + 2.0)).powi(2);
    for (k, &x) in interior.iter().enumerate() {
        let (p, _) = jacobi21(n - 1, x);
        weights[k + 1] = pref / ((1.0 - x) * p * p);
    }
    let mut s = 0.0;
    for &x in nodes.iter().take(n - 1) {
        s += 1.0 / (1.0 - x);
    }
    let corr = 8.0 / ((nf - 1.0) * nf * nf * (nf + 1.0));
    weights[n - 1] = 4.0 / (nf * nf) + corr * s;
    let deriv_weight = -corr;

    Ok(SpectralRule {
        n_points: n,
        nodes,
        weights,
        deriv_weight,
    })
}

/// Differentiate a Legendre series termwise: for `u = Σ aᵢ Lᵢ` returns `b`
/// with `u' = Σ bᵢ Lᵢ`, using `bᵢ = (2i+1)(a_{i+1} + a_{i+3} + ...)`.
pub fn legendre_series_derivative(a: &[f64]) -> Vec<f64> {
    let n = a.len();
    let mut b = vec![0.0f64; n];
    if n < 2 {
        return b;
    }
    // partial sums over the parity chain a_{i+1} + a_{i+3} + ...
    let mut tail = vec![0.0f64; n + 2];
    for i in (0..n - 1).rev() {
        tail[i] = tail[i + 2] + a[i + 1];
        b[i] = (2 * i + 1) as f64 * tail[i];
    }
    b
}

/// Evaluate a Legendre series at one point.
pub fn legendre_series_eval(a: &[f64], x: f64) -> f64 {
    // Clenshaw recurrence for Legendre
    let mut b1 = 0.0f64;
    let mut b2 = 0.0f64;
    for i in (1..a.len()).rev() {
        let alpha = (2 * i + 1) as f64 / (i + 1) as f64;
        let beta = -((i + 1) as f64 / (i + 2) as f64);
        let b0 = a[i] + alpha * x * b1 + beta * b2;
        b2 = b1;
        b1 = b0;
    }
    let a0 = if a.is_empty() { 0.0 } else { a[0] };
    a0 + x * b1 - 0.5 * b2
}

/// Endpoint value of a Legendre series at ±1 for derivative orders 0..=2.
pub fn legendre_series_endpoint(a: &[f64], side: i32, order: usize) -> f64 {
    a.iter()
        .enumerate()
        .map(|(i, &c)| c * legendre_endpoint(i, side, order))
        .sum()
}

/// Discrete inner product `(f, g)_N`. The caller supplies `∂_x(f·g)(1)`,
/// which cannot be recovered from nodal values alone.
pub fn discrete_inner_product(
    f_nodes: &[f64],
    g_nodes: &[f64],
    fg_deriv_at_right: f64,
    rule: &SpectralRule,
) -> Result<f64, OrthoError> {
    let n = rule.n_points;
    if f_nodes.len() != n || g_nodes.len() != n {
        return Err(OrthoError::LengthMismatch(format!(
            "expected {} nodal values, got {} and {}",
            n,
            f_nodes.len(),
            g_nodes.len()
        )));
    }
    let mut s = 0.0;
    for k in 0..n {
        s += rule.weights[k] * f_nodes[k] * g_nodes[k];
    }
    Ok(s + rule.deriv_weight * fg_deriv_at_right)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn legendre_values() {
        assert_eq!(legendre_eval(2, 1.0, 0), 1.0);
        // L_3(x) = (5x³ - 3x)/2
        assert!((legendre_eval(3, 0.5, 0) - (-0.4375)).abs() < 1e-15);
        // L'_5(-1) = (-1)^4 · 5·6/2 = 15
        assert!((legendre_eval(5, -1.0, 1) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_closed_forms() {
        assert_eq!(legendre_endpoint(0, 1, 0), 1.0);
        assert_eq!(legendre_endpoint(4, -1, 1), -10.0);
        assert_eq!(legendre_endpoint(3, 1, 2), 15.0);
        // agree with the recurrence evaluation up to k = 64
        for k in 0..=64usize {
            for side in [-1i32, 1] {
                let x = side as f64;
                for order in 0..=2usize {
                    let a = legendre_endpoint(k, side, order);
                    let b = legendre_eval(k, x, order);
                    let scale = a.abs().max(1.0);
                    assert!(
                        (a - b).abs() < 1e-10 * scale,
                        "k={k} side={side} order={order}: {a} vs {b}"
                    );
                }
            }
        }
    }

    #[test]
    fn jacobi_p1_root() {
        // P^{(2,1)}_1(x) = (5x+1)/2, root at -0.2
        let r = jacobi21_roots(1).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] + 0.2).abs() < 1e-14);
    }

    #[test]
    fn jacobi_p2_roots_match_quadratic_oracle() {
        // expand P_2^{(2,1)} from the recurrence: (525x² + 150x - 75)/100,
        // then compare against the quadratic formula on those coefficients
        let (a, b, c) = (5.25f64, 1.5f64, -0.75f64);
        let disc = (b * b - 4.0 * a * c).sqrt();
        let mut expected = [(-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)];
        expected.sort_by(|x, y| x.total_cmp(y));
        let r = jacobi21_roots(2).unwrap();
        for (got, want) in r.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-13, "{got} vs {want}");
        }
    }

    #[test]
    fn jacobi_roots_interior_and_sorted() {
        for n in [1usize, 2, 5, 14, 30, 62] {
            let r = jacobi21_roots(n).unwrap();
            assert_eq!(r.len(), n);
            for w in r.windows(2) {
                assert!(w[0] < w[1]);
            }
            assert!(r[0] > -1.0 && r[n - 1] < 1.0);
            for &x in &r {
                let (p, _) = jacobi21(n, x);
                // standard-normalization residual; scale by the polynomial's
                // endpoint magnitude to keep the check meaningful at larger n
                let scale = jacobi21(n, 1.0).0;
                assert!(p.abs() / scale < 1e-12, "n={n}: residual {p:.3e}");
            }
        }
    }

    #[test]
    fn rule_weight_closed_forms() {
        let rule = build_rule(16).unwrap();
        assert!((rule.weights[0] - 2.0 / 255.0).abs() < 1e-18);
        let expected = -8.0 / (15.0 * 256.0 * 17.0);
        assert!((rule.deriv_weight - expected).abs() < 1e-18);
    }

    #[test]
    fn rule_constant_and_high_degree_exactness() {
        for n in [8usize, 16, 32, 64] {
            let rule = build_rule(n).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-12, "N={n}: Σω = {total}");
            // ∫ x^{2N-2} = 2/(2N-1), the top exact degree
            let p = 2 * n - 2;
            let f: Vec<f64> = rule.nodes.iter().map(|&x| x.powi(p as i32)).collect();
            let ones = vec![1.0; n];
            let q = discrete_inner_product(&f, &ones, p as f64, &rule).unwrap();
            let exact = 2.0 / (2.0 * n as f64 - 1.0);
            assert!(
                (q - exact).abs() < 1e-12 * exact.abs().max(1.0),
                "N={n}: {q} vs {exact}"
            );
        }
    }

    #[test]
    fn inner_product_examples() {
        let rule = build_rule(16).unwrap();
        let ones = vec![1.0; 16];
        let q = discrete_inner_product(&ones, &ones, 0.0, &rule).unwrap();
        assert!((q - 2.0).abs() < 1e-12);

        let x: Vec<f64> = rule.nodes.clone();
        // ∂_x(x·x)(1) = 2
        let q = discrete_inner_product(&x, &x, 2.0, &rule).unwrap();
        assert!((q - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn legendre_orthogonality_through_rule() {
        let n = 16;
        let rule = build_rule(n).unwrap();
        for i in 0..8usize {
            for j in 0..8usize {
                let f: Vec<f64> = rule.nodes.iter().map(|&x| legendre_eval(i, x, 0)).collect();
                let g: Vec<f64> = rule.nodes.iter().map(|&x| legendre_eval(j, x, 0)).collect();
                let d = legendre_endpoint(i, 1, 1) * legendre_endpoint(j, 1, 0)
                    + legendre_endpoint(i, 1, 0) * legendre_endpoint(j, 1, 1);
                let q = discrete_inner_product(&f, &g, d, &rule).unwrap();
                let exact = if i == j { 2.0 / (2.0 * i as f64 + 1.0) } else { 0.0 };
                assert!((q - exact).abs() < 1e-12, "i={i} j={j}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn length_mismatch_rejected() {
        let rule = build_rule(8).unwrap();
        assert!(discrete_inner_product(&[1.0; 7], &[1.0; 8], 0.0, &rule).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn quadrature_exact_for_random_legendre_series(
            seed in any::<u64>(),
            n in prop::sample::select(vec![16usize, 32]),
        ) {
            // random p, q with deg p + deg q <= 2N-2, built in the Legendre
            // basis so the exact integral of the product is Σ a_i b_i 2/(2i+1)
            let rule = build_rule(n).unwrap();
            let mut s = seed | 1;
            let mut rnd = move || {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            };
            let dp = (seed as usize % (n - 1)).min(2 * n - 2);
            let dq = (2 * n - 2 - dp).min(n - 1);
            let a: Vec<f64> = (0..=dp).map(|_| rnd()).collect();
            let b: Vec<f64> = (0..=dq).map(|_| rnd()).collect();
            let eval = |c: &[f64], x: f64, order: usize| -> f64 {
                c.iter().enumerate().map(|(i, &ci)| ci * legendre_eval(i, x, order)).sum()
            };
            let f: Vec<f64> = rule.nodes.iter().map(|&x| eval(&a, x, 0)).collect();
            let g: Vec<f64> = rule.nodes.iter().map(|&x| eval(&b, x, 0)).collect();
            let d = eval(&a, 1.0, 1) * eval(&b, 1.0, 0) + eval(&a, 1.0, 0) * eval(&b, 1.0, 1);
            let q = discrete_inner_product(&f, &g, d, &rule).unwrap();
            let exact: f64 = (0..=dp.min(dq))
                .map(|i| a[i] * b[i] * 2.0 / (2.0 * i as f64 + 1.0))
                .sum();
            let scale = a.iter().map(|v| v.abs()).sum::<f64>()
                * b.iter().map(|v| v.abs()).sum::<f64>();
            prop_assert!((q - exact).abs() < 1e-11 * scale.max(1.0),
                "N={} deg=({},{}): {} vs {}", n, dp, dq, q, exact);
        }
    }
}
