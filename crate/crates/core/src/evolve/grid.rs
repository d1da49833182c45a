use std::f64::consts::PI;

/// Radial collocation grid on `[0, 1]` built from the nonnegative half of the
/// Chebyshev–Gauss–Lobatto points of `[−1, 1]`.
///
/// Radial fields are even in `ρ` and their first derivatives odd, so the full
/// differentiation matrix is folded onto the half grid once per parity. This
/// keeps `ρ = 0` as a collocation point while the even/odd structure (and so
/// `∂_ρ f(0) = 0`) is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    n: usize,
    nodes: Vec<f64>,
    d1_even: Vec<f64>,
    d1_odd: Vec<f64>,
    d2_even: Vec<f64>,
    weights: Vec<f64>,
}

impl RadialGrid {
    /// Grid with `n` nodes `ρ_k = sin(πk / (2(n−1)))`, `k = 0..n`.
    ///
    /// # Panics
    /// If `n < 3`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 3, "radial grid needs at least 3 nodes");
        let m = n - 1;
        let big_n = 2 * m;
        let full = cheb_matrix(big_n);
        let row = |k: usize| m - k;
        let mut d1_even = vec![0.0; n * n];
        let mut d1_odd = vec![0.0; n * n];
        for i in 0..n {
            let fi = row(i);
            for k in 0..n {
                let (a, b) = if k == 0 {
                    (full[fi * (big_n + 1) + m], 0.0)
                } else {
                    (full[fi * (big_n + 1) + m - k], full[fi * (big_n + 1) + m + k])
                };
                d1_even[i * n + k] = a + b;
                d1_odd[i * n + k] = a - b;
            }
        }
        for v in d1_even[..n].iter_mut() {
            *v = 0.0;
        }
        let mut d2_even = matmul(&d1_odd, &d1_even, n);
        zero_row_sums(&mut d1_even, n);
        zero_row_sums(&mut d2_even, n);

        let full_w = clenshaw_curtis(big_n);
        let weights = (0..n)
            .map(|k| if k == 0 { 0.5 * full_w[m] } else { full_w[m - k] })
            .collect();
        let nodes = (0..n).map(|k| (PI * k as f64 / big_n as f64).sin()).collect();
        Self {
            n,
            nodes,
            d1_even,
            d1_odd,
            d2_even,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Increasing nodes, `ρ_0 = 0`, `ρ_{n−1} = 1`.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Quadrature weights for `∫_0^1 f dρ`, exact for even polynomials of
    /// degree below `2(n−1)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Row-major first-derivative matrix acting on even functions.
    pub fn d1_even(&self) -> &[f64] {
        &self.d1_even
    }

    /// Row-major first-derivative matrix acting on odd functions.
    pub fn d1_odd(&self) -> &[f64] {
        &self.d1_odd
    }

    /// Row-major second-derivative matrix acting on even functions.
    pub fn d2_even(&self) -> &[f64] {
        &self.d2_even
    }

    /// `∂_ρ f` for even `f`; exactly zero on constants.
    pub fn diff_even(&self, f: &[f64], out: &mut [f64]) {
        matvec_centered(&self.d1_even, f, out, self.n);
    }

    /// `∂_ρ f` for odd `f`.
    pub fn diff_odd(&self, f: &[f64], out: &mut [f64]) {
        matvec(&self.d1_odd, f, out, self.n);
    }

    /// `∂²_ρ f` for even `f`; exactly zero on constants.
    pub fn diff2_even(&self, f: &[f64], out: &mut [f64]) {
        matvec_centered(&self.d2_even, f, out, self.n);
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    /// `∫_0^1 ρ² f dρ`.
    pub fn integrate_r2(&self, f: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(&self.nodes)
            .zip(f)
            .map(|((w, r), v)| w * r * r * v)
            .sum()
    }

    /// Barycentric interpolation of an even grid function at `rho ∈ [0, 1]`.
    pub fn interpolate_even(&self, f: &[f64], rho: f64) -> f64 {
        let m = self.n - 1;
        let big_n = 2 * m;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=big_n {
            let x = (PI * j as f64 / big_n as f64).cos();
            let diff = rho - x;
            let k = j.abs_diff(m);
            if diff == 0.0 {
                return f[k];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == big_n {
                w *= 0.5;
            }
            num += w / diff * f[k];
            den += w / diff;
        }
        num / den
    }
}

/// Chebyshev differentiation matrix on `x_j = cos(πj/N)`, row-major, with
/// the trigonometric form of `x_i − x_j` and negative-sum diagonal.
fn cheb_matrix(big_n: usize) -> Vec<f64> {
    let n1 = big_n + 1;
    let c = |j: usize| if j == 0 || j == big_n { 2.0 } else { 1.0 };
    let mut d = vec![0.0; n1 * n1];
    let h = PI / (2.0 * big_n as f64);
    for i in 0..n1 {
        let mut sum = 0.0;
        for j in 0..n1 {
            if i == j {
                continue;
            }
            let dx = 2.0 * (h * (i + j) as f64).sin() * (h * (j as f64 - i as f64)).sin();
            let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
            let v = c(i) / c(j) * sign / dx;
            d[i * n1 + j] = v;
            sum += v;
        }
        d[i * n1 + i] = -sum;
    }
    d
}

/// Clenshaw–Curtis weights on `x_j = cos(πj/N)` for `∫_{−1}^{1}`.
fn clenshaw_curtis(big_n: usize) -> Vec<f64> {
    let n = big_n;
    let mut w = vec![0.0; n + 1];
    let theta = |j: usize| PI * j as f64 / n as f64;
    if n.is_multiple_of(2) {
        let nf = n as f64;
        w[0] = 1.0 / (nf * nf - 1.0);
        w[n] = w[0];
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let mut v = 1.0;
            for k in 1..n / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta(j)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            v -= (nf * theta(j)).cos() / (nf * nf - 1.0);
            *wj = 2.0 * v / nf;
        }
    } else {
        let nf = n as f64;
        w[0] = 1.0 / (nf * nf);
        w[n] = w[0];
        for (j, wj) in w.iter_mut().enumerate().take(n).skip(1) {
            let mut v = 1.0;
            for k in 1..=(n - 1) / 2 {
                v -= 2.0 * (2.0 * k as f64 * theta(j)).cos() / (4.0 * (k * k) as f64 - 1.0);
            }
            *wj = 2.0 * v / nf;
        }
    }
    w
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    c
}

/// Sets each diagonal entry to minus the sum of the off-diagonal row.
fn zero_row_sums(a: &mut [f64], n: usize) {
    for i in 0..n {
        let off: f64 = (0..n).filter(|&k| k != i).map(|k| a[i * n + k]).sum();
        a[i * n + i] = -off;
    }
}

/// `A f` for a matrix with zero row sums, as `Σ_{k≠i} A_ik (f_k − f_i)`.
fn matvec_centered(a: &[f64], f: &[f64], out: &mut [f64], n: usize) {
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let fi = f[i];
        let row = &a[i * n..(i + 1) * n];
        let mut acc = 0.0;
        for (k, (&aik, &fk)) in row.iter().zip(f).enumerate() {
            if k != i {
                acc += aik * (fk - fi);
            }
        }
        *o = acc;
    }
}

pub(crate) fn matvec(a: &[f64], x: &[f64], out: &mut [f64], n: usize) {
    for (i, o) in out.iter_mut().enumerate().take(n) {
        *o = a[i * n..(i + 1) * n].iter().zip(x).map(|(p, q)| p * q).sum();
    }
}
