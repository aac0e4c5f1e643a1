//! Thin wrappers over `matrixmultiply::dgemm` for row-major buffers.

/// `out (rows × n_out) = a (rows × n_in) · wᵀ`, with `w` stored `n_out × n_in`.
pub fn mul_transposed(a: &[f64], rows: usize, n_in: usize, w: &[f64], n_out: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), rows * n_in);
    debug_assert_eq!(w.len(), n_out * n_in);
    debug_assert_eq!(out.len(), rows * n_out);
    if rows == 0 || n_out == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            rows,
            n_in,
            n_out,
            1.0,
            a.as_ptr(),
            n_in as isize,
            1,
            w.as_ptr(),
            1,
            n_in as isize,
            0.0,
            out.as_mut_ptr(),
            n_out as isize,
            1,
        );
    }
}

/// `dw (n_out × n_in) += dzᵀ (n_out × rows) · a (rows × n_in)`.
pub fn accumulate_weight_grad(dz: &[f64], a: &[f64], rows: usize, n_in: usize, n_out: usize, dw: &mut [f64]) {
    debug_assert_eq!(dz.len(), rows * n_out);
    debug_assert_eq!(a.len(), rows * n_in);
    debug_assert_eq!(dw.len(), n_out * n_in);
    if rows == 0 || n_out == 0 || n_in == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            n_out,
            rows,
            n_in,
            1.0,
            dz.as_ptr(),
            1,
            n_out as isize,
            a.as_ptr(),
            n_in as isize,
            1,
            1.0,
            dw.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
}

/// `da (rows × n_in) = dz (rows × n_out) · w (n_out × n_in)`.
pub fn mul_plain(dz: &[f64], rows: usize, n_out: usize, w: &[f64], n_in: usize, da: &mut [f64]) {
    debug_assert_eq!(dz.len(), rows * n_out);
    debug_assert_eq!(w.len(), n_out * n_in);
    debug_assert_eq!(da.len(), rows * n_in);
    if rows == 0 || n_in == 0 {
        return;
    }
    if n_out == 0 {
        da.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            rows,
            n_out,
            n_in,
            1.0,
            dz.as_ptr(),
            n_out as isize,
            1,
            w.as_ptr(),
            n_in as isize,
            1,
            0.0,
            da.as_mut_ptr(),
            n_in as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_products() {
        // a = [[1,2],[3,4],[5,6]], w = [[1,0],[1,1]]
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let w = [1.0, 0.0, 1.0, 1.0];
        let mut z = [0.0; 6];
        mul_transposed(&a, 3, 2, &w, 2, &mut z);
        assert_eq!(z, [1.0, 3.0, 3.0, 7.0, 5.0, 11.0]);

        let mut dw = [0.0; 4];
        accumulate_weight_grad(&z, &a, 3, 2, 2, &mut dw);
        // dzᵀ a: row0 = 1*[1,2]+3*[3,4]+5*[5,6], row1 = 3*[1,2]+7*[3,4]+11*[5,6]
        assert_eq!(dw, [35.0, 44.0, 79.0, 100.0]);

        let mut da = [0.0; 6];
        mul_plain(&z, 3, 2, &w, 2, &mut da);
        assert_eq!(da, [4.0, 3.0, 10.0, 7.0, 16.0, 11.0]);
    }
}
