//! Finite-difference and small numeric helpers shared across modules.
//!
//! All derivative stencils are second order: central in the interior,
//! one-sided (3-point for first, 4-point for second derivatives) at the
//! ends.  When `even_at_start` is set the first node is treated as the
//! r = 0 symmetry point of an even function (ghost value a_{-1} = a_1).

/// First derivative of nodal values on a uniform grid.
pub fn deriv1(v: &[f64], h: f64, even_at_start: bool) -> Vec<f64> {
    let n = v.len();
    assert!(n >= 4);
    let mut d = vec![0.0; n];
    d[0] = if even_at_start {
        0.0
    } else {
        (-3.0 * v[0] + 4.0 * v[1] - v[2]) / (2.0 * h)
    };
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - v[i - 1]) / (2.0 * h);
    }
    d[n - 1] = (3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / (2.0 * h);
    d
}

/// Second derivative of nodal values on a uniform grid.
pub fn deriv2(v: &[f64], h: f64, even_at_start: bool) -> Vec<f64> {
    let n = v.len();
    assert!(n >= 4);
    let h2 = h * h;
    let mut d = vec![0.0; n];
    d[0] = if even_at_start {
        2.0 * (v[1] - v[0]) / h2
    } else {
        (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / h2
    };
    for i in 1..n - 1 {
        d[i] = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / h2;
    }
    d[n - 1] = (2.0 * v[n - 1] - 5.0 * v[n - 2] + 4.0 * v[n - 3] - v[n - 4]) / h2;
    d
}

/// Cubic (4-point Lagrange) interpolation of uniformly sampled values.
/// Exact for polynomials up to degree 3; used where trapezoid-level accuracy
/// is not enough (soliton flow-map sampling).
pub fn interp_cubic(nodes: &[f64], values: &[f64], x: f64) -> f64 {
    let n = nodes.len();
    debug_assert!(n >= 4);
    let h = nodes[1] - nodes[0];
    let mut i = ((x - nodes[0]) / h).floor() as isize;
    i = i.clamp(0, n as isize - 2);
    // center a 4-point stencil on the containing interval
    let lo = (i - 1).clamp(0, n as isize - 4) as usize;
    let mut acc = 0.0;
    for j in lo..lo + 4 {
        let mut lj = 1.0;
        for k in lo..lo + 4 {
            if k != j {
                lj *= (x - nodes[k]) / (nodes[j] - nodes[k]);
            }
        }
        acc += lj * values[j];
    }
    acc
}

/// Quintic smoothstep: 0 → 1 on [0,1] with vanishing first and second
/// derivatives at both ends; clamped outside.
pub fn smootherstep(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        t * t * t * (10.0 + t * (-15.0 + 6.0 * t))
    }
}

/// Least-squares line fit `y ≈ slope·x + intercept`.
pub fn linfit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Γ(m/2) for integer m ≥ 1 (enough for unit-sphere areas).
pub fn gamma_half_integer(m: usize) -> f64 {
    assert!(m >= 1);
    if m % 2 == 0 {
        // Γ(k) = (k-1)!
        let k = m / 2;
        (1..k).map(|j| j as f64).product()
    } else {
        // Γ(1/2 + k) = (2k)!/(4^k k!) √π
        let k = (m - 1) / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for j in 0..k {
            g *= j as f64 + 0.5;
        }
        g
    }
}

/// Area of the unit sphere S^{d} ⊂ ℝ^{d+1}: ω_d = 2 π^{(d+1)/2} / Γ((d+1)/2).
pub fn unit_sphere_area(d: usize) -> f64 {
    let m = d + 1;
    2.0 * std::f64::consts::PI.powf(m as f64 / 2.0) / gamma_half_integer(m)
}
