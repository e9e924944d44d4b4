//! Matrix inertia through Bunch–Kaufman `L D Lᴴ` factorization.
//!
//! By Sylvester's law the number of negative eigenvalues of `A − σ I` equals the
//! number of negative eigenvalues of the block-diagonal factor `D` (1×1 and 2×2
//! Hermitian blocks). Bunch–Kaufman pivoting keeps the factorization backward
//! stable for indefinite matrices, so the count is exact unless σ lies within
//! rounding distance of an eigenvalue; that case shows up as a vanishing pivot
//! and is reported rather than guessed.

use num_complex::Complex64 as c64;

use crate::model::HermitianOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

/// Lower triangle of a dense Hermitian matrix in split real/imaginary row-major
/// storage. Only entries with `col <= row` are meaningful.
#[derive(Debug, Clone)]
pub struct DenseHermitian {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
    scale: f64,
}

impl DenseHermitian {
    pub fn from_operator(h: &HermitianOperator) -> Self {
        let n = h.dim();
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for (j, v) in h.row(i) {
                if j <= i {
                    re[i * n + j] = v.re;
                    im[i * n + j] = v.im;
                }
                scale = scale.max(v.norm());
            }
        }
        Self { n, re, im, scale }
    }

    /// From a full dense matrix given as a closure; only the lower triangle is read.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> c64) -> Self {
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        let mut scale: f64 = 0.0;
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                re[i * n + j] = if i == j { v.re } else { v.re };
                im[i * n + j] = if i == j { 0.0 } else { v.im };
                scale = scale.max(v.norm());
            }
        }
        Self { n, re, im, scale }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Largest entry modulus, the yardstick for pivot breakdown.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Inertia of `A − σ I`. Returns `None` when a pivot vanishes to working
    /// precision (σ numerically an eigenvalue).
    pub fn shifted_inertia(&self, sigma: f64) -> Option<Inertia> {
        let n = self.n;
        let mut re = self.re.clone();
        let mut im = self.im.clone();
        for i in 0..n {
            re[i * n + i] -= sigma;
        }
        let tiny = 64.0 * f64::EPSILON * (self.scale + sigma.abs()).max(f64::MIN_POSITIVE);
        bunch_kaufman_inertia(n, &mut re, &mut im, tiny)
    }
}

fn modulus(re: &[f64], im: &[f64], idx: usize) -> f64 {
    re[idx].hypot(im[idx])
}

/// Symmetric interchange of indices p < r in the trailing block starting at k.
fn swap_symmetric(n: usize, re: &mut [f64], im: &mut [f64], k: usize, p: usize, r: usize) {
    debug_assert!(k <= p && p < r);
    re.swap(p * n + p, r * n + r);
    for j in k..p {
        re.swap(p * n + j, r * n + j);
        im.swap(p * n + j, r * n + j);
    }
    for j in p + 1..r {
        // (j, p) <-> conj of (r, j)
        let (a_re, a_im) = (re[j * n + p], im[j * n + p]);
        re[j * n + p] = re[r * n + j];
        im[j * n + p] = -im[r * n + j];
        re[r * n + j] = a_re;
        im[r * n + j] = -a_im;
    }
    im[r * n + p] = -im[r * n + p];
    for i in r + 1..n {
        re.swap(i * n + p, i * n + r);
        im.swap(i * n + p, i * n + r);
    }
}

/// In-place Bunch–Kaufman elimination returning the inertia of the matrix.
pub(crate) fn bunch_kaufman_inertia(
    n: usize,
    re: &mut [f64],
    im: &mut [f64],
    tiny: f64,
) -> Option<Inertia> {
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let mut inertia = Inertia {
        negative: 0,
        zero: 0,
        positive: 0,
    };
    let mut col_re = vec![0.0; n];
    let mut col_im = vec![0.0; n];
    let mut col2_re = vec![0.0; n];
    let mut col2_im = vec![0.0; n];
    let mut k = 0;
    while k < n {
        let absakk = re[k * n + k].abs();
        let (mut imax, mut colmax) = (k, 0.0);
        for i in k + 1..n {
            let v = modulus(re, im, i * n + k);
            if v > colmax {
                colmax = v;
                imax = i;
            }
        }
        if absakk.max(colmax) <= tiny {
            return None;
        }
        let mut two_by_two = false;
        if absakk < alpha * colmax {
            let mut rowmax: f64 = 0.0;
            for j in k..imax {
                rowmax = rowmax.max(modulus(re, im, imax * n + j));
            }
            for i in imax + 1..n {
                rowmax = rowmax.max(modulus(re, im, i * n + imax));
            }
            if absakk * rowmax >= alpha * colmax * colmax {
                // 1×1 pivot at k, no interchange.
            } else if re[imax * n + imax].abs() >= alpha * rowmax {
                swap_symmetric(n, re, im, k, k, imax);
            } else {
                two_by_two = true;
                if imax != k + 1 {
                    swap_symmetric(n, re, im, k, k + 1, imax);
                }
            }
        }
        if !two_by_two {
            let d = re[k * n + k];
            if d.abs() <= tiny {
                return None;
            }
            if d < 0.0 {
                inertia.negative += 1;
            } else {
                inertia.positive += 1;
            }
            for j in k + 1..n {
                col_re[j] = re[j * n + k];
                col_im[j] = -im[j * n + k];
            }
            for i in k + 1..n {
                let wr = re[i * n + k] / d;
                let wi = im[i * n + k] / d;
                let row = i * n;
                let (rr, ri) = (&mut re[row + k + 1..row + i + 1], &mut im[row + k + 1..row + i + 1]);
                let (cr, ci) = (&col_re[k + 1..i + 1], &col_im[k + 1..i + 1]);
                for t in 0..rr.len() {
                    rr[t] -= wr * cr[t] - wi * ci[t];
                    ri[t] -= wr * ci[t] + wi * cr[t];
                }
            }
            k += 1;
        } else {
            let d11 = re[k * n + k];
            let d22 = re[(k + 1) * n + k + 1];
            let (d21r, d21i) = (re[(k + 1) * n + k], im[(k + 1) * n + k]);
            let det = d11 * d22 - (d21r * d21r + d21i * d21i);
            let det_scale = (d11 * d22).abs() + d21r * d21r + d21i * d21i;
            if det.abs() <= tiny * tiny.max(det_scale.sqrt() * 1e-300) || det.abs() <= 1e-13 * det_scale {
                return None;
            }
            if det < 0.0 {
                inertia.negative += 1;
                inertia.positive += 1;
            } else if d11 + d22 < 0.0 {
                inertia.negative += 2;
            } else {
                inertia.positive += 2;
            }
            for j in k + 2..n {
                col_re[j] = re[j * n + k];
                col_im[j] = -im[j * n + k];
                col2_re[j] = re[j * n + k + 1];
                col2_im[j] = -im[j * n + k + 1];
            }
            for i in k + 2..n {
                // w = [x1, x2] D^{-1}, x = (a_ik, a_i,k+1).
                let (x1r, x1i) = (re[i * n + k], im[i * n + k]);
                let (x2r, x2i) = (re[i * n + k + 1], im[i * n + k + 1]);
                // w1 = (x1 d22 - x2 d21) / det
                let w1r = (x1r * d22 - (x2r * d21r - x2i * d21i)) / det;
                let w1i = (x1i * d22 - (x2r * d21i + x2i * d21r)) / det;
                // w2 = (-x1 conj(d21) + x2 d11) / det
                let w2r = (-(x1r * d21r + x1i * d21i) + x2r * d11) / det;
                let w2i = (-(x1i * d21r - x1r * d21i) + x2i * d11) / det;
                let row = i * n;
                let (rr, ri) = (&mut re[row + k + 2..row + i + 1], &mut im[row + k + 2..row + i + 1]);
                let (c1r, c1i) = (&col_re[k + 2..i + 1], &col_im[k + 2..i + 1]);
                let (c2r, c2i) = (&col2_re[k + 2..i + 1], &col2_im[k + 2..i + 1]);
                for t in 0..rr.len() {
                    rr[t] -= w1r * c1r[t] - w1i * c1i[t] + w2r * c2r[t] - w2i * c2i[t];
                    ri[t] -= w1r * c1i[t] + w1i * c1r[t] + w2r * c2i[t] + w2i * c2r[t];
                }
            }
            k += 2;
        }
    }
    Some(inertia)
}
