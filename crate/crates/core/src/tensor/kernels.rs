// Dense inner loops shared by the tensor ops. Written so that LLVM can
// vectorize them without reassociating floating-point sums: every reduction
// uses a fixed set of independent accumulators, so results are identical for
// any target vector width.

#[inline]
pub(crate) fn add_assign(acc: &mut [f64], x: &[f64]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, &b) in acc.iter_mut().zip(x) {
        *a += b;
    }
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `out[j] += Σ_k w[k] · src[j + k]` for every `j`, with `src` at least
/// `out.len() + w.len() − 1` long.
///
/// Outputs are processed in register-resident blocks, so each block is loaded
/// and stored once rather than once per tap. Every output still accumulates
/// its taps in ascending `k` order.
pub(crate) fn correlate_acc(src: &[f64], w: &[f64], out: &mut [f64]) {
    const L: usize = 16;
    let n = out.len();
    assert!(src.len() + 1 >= n + w.len(), "correlate_acc: source too short");
    let mut j = 0;
    while j + L <= n {
        let mut acc = [0.0f64; L];
        acc.copy_from_slice(&out[j..j + L]);
        for (k, &wv) in w.iter().enumerate() {
            let s = &src[j + k..j + k + L];
            for l in 0..L {
                acc[l] += wv * s[l];
            }
        }
        out[j..j + L].copy_from_slice(&acc);
        j += L;
    }
    for (jj, o) in out.iter_mut().enumerate().skip(j) {
        let mut a = *o;
        for (k, &wv) in w.iter().enumerate() {
            a += wv * src[jj + k];
        }
        *o = a;
    }
}

/// `c[m,n] += a[m,k] · b[k,n]`
pub(crate) fn gemm_nn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let crow = &mut c[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av != 0.0 {
                axpy(av, &b[p * n..(p + 1) * n], crow);
            }
        }
    }
}

/// `c[m,n] += a[m,k] · b[n,k]ᵀ`
pub(crate) fn gemm_nt(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            c[i * n + j] += dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
}

/// `c[m,n] += a[k,m]ᵀ · b[k,n]`
pub(crate) fn gemm_tn(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for p in 0..k {
        let brow = &b[p * n..(p + 1) * n];
        for i in 0..m {
            let av = a[p * m + i];
            if av != 0.0 {
                axpy(av, brow, &mut c[i * n..(i + 1) * n]);
            }
        }
    }
}
