//! Gauss–Legendre rules and radial Fourier transforms of compactly supported profiles.

use std::f64::consts::PI;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre rule with equal panels on `[a, b]`.
#[derive(Debug, Clone)]
pub struct CompositeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl CompositeRule {
    pub fn new(a: f64, b: f64, panels: usize, order: usize) -> Self {
        let (x, w) = gauss_legendre(order);
        let width = (b - a) / panels as f64;
        let mut nodes = Vec::with_capacity(panels * order);
        let mut weights = Vec::with_capacity(panels * order);
        for p in 0..panels {
            let mid = a + (p as f64 + 0.5) * width;
            for (xi, wi) in x.iter().zip(&w) {
                nodes.push(mid + 0.5 * width * xi);
                weights.push(0.5 * width * wi);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `J₀(x)` from its integral representation, evaluated by the trapezoid rule on the
/// periodic integrand. The aliasing error is of size `J_m(x)`, negligible once
/// `m - x` is a few multiples of `x^{1/3}`.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    let m = (x + 12.0 * x.cbrt() + 48.0).ceil() as usize;
    let mut acc = 0.0;
    for j in 0..m {
        let theta = 2.0 * PI * j as f64 / m as f64;
        acc += (x * theta.sin()).cos();
    }
    acc / m as f64
}

/// Surface measure of the unit sphere in `ℝ^d` times the radial weight, so that
/// `∫_{ℝ^d} g(|x|) dx = ∫_0^∞ g(r) sphere_factor(d, r) dr`.
pub fn sphere_factor(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI * r,
        3 => 4.0 * PI * r * r,
        _ => panic!("unsupported dimension {dim}"),
    }
}

const ORDER: usize = 16;

/// Panel count that keeps the oscillation per panel below about two radians.
fn panels_for(k: f64, base: usize) -> usize {
    base.max((k.abs() / 2.0).ceil() as usize + base / 2)
}

/// Fourier transform `∫_{ℝ^d} g(|x|) e^{-iξ·x} dx` at `|ξ| = k` of a radial profile
/// supported in the unit ball.
pub fn radial_transform<G: Fn(f64) -> f64>(dim: usize, g: &G, k: f64, base_panels: usize) -> f64 {
    let rule = CompositeRule::new(0.0, 1.0, panels_for(k, base_panels), ORDER);
    match dim {
        1 => rule.integrate(|r| 2.0 * g(r) * (k * r).cos()),
        2 => rule.integrate(|r| 2.0 * PI * r * g(r) * bessel_j0(k * r)),
        3 => rule.integrate(|r| {
            let kr = k * r;
            let sinc = if kr.abs() < 1e-8 {
                1.0 - kr * kr / 6.0
            } else {
                kr.sin() / kr
            };
            4.0 * PI * r * r * g(r) * sinc
        }),
        _ => panic!("unsupported dimension {dim}"),
    }
}
