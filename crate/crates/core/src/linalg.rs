//! Small dense helpers for pointwise `d x d` matrices (row-major slices).

/// Determinant by Gaussian elimination with partial pivoting.
pub fn det(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        3 => {
            m[0] * (m[4] * m[8] - m[5] * m[7]) - m[1] * (m[3] * m[8] - m[5] * m[6])
                + m[2] * (m[3] * m[7] - m[4] * m[6])
        }
        _ => {
            let mut a = m.to_vec();
            let mut det = 1.0;
            for col in 0..d {
                let piv = (col..d)
                    .max_by(|&x, &y| a[x * d + col].abs().total_cmp(&a[y * d + col].abs()))
                    .unwrap_or(col);
                if a[piv * d + col] == 0.0 {
                    return 0.0;
                }
                if piv != col {
                    for k in 0..d {
                        a.swap(piv * d + k, col * d + k);
                    }
                    det = -det;
                }
                let p = a[col * d + col];
                det *= p;
                for r in col + 1..d {
                    let f = a[r * d + col] / p;
                    for k in col..d {
                        a[r * d + k] -= f * a[col * d + k];
                    }
                }
            }
            det
        }
    }
}

fn minor(m: &[f64], d: usize, skip_r: usize, skip_c: usize, out: &mut Vec<f64>) {
    out.clear();
    for r in (0..d).filter(|&r| r != skip_r) {
        for c in (0..d).filter(|&c| c != skip_c) {
            out.push(m[r * d + c]);
        }
    }
}

/// Transposed cofactor matrix (adjugate), so that `adj(M) M = det(M) Id`.
pub fn adjugate(m: &[f64], d: usize, out: &mut [f64]) {
    if d == 3 {
        out[0] = m[4] * m[8] - m[5] * m[7];
        out[1] = m[2] * m[7] - m[1] * m[8];
        out[2] = m[1] * m[5] - m[2] * m[4];
        out[3] = m[5] * m[6] - m[3] * m[8];
        out[4] = m[0] * m[8] - m[2] * m[6];
        out[5] = m[2] * m[3] - m[0] * m[5];
        out[6] = m[3] * m[7] - m[4] * m[6];
        out[7] = m[1] * m[6] - m[0] * m[7];
        out[8] = m[0] * m[4] - m[1] * m[3];
        return;
    }
    let mut buf = Vec::with_capacity((d - 1) * (d - 1));
    for r in 0..d {
        for c in 0..d {
            minor(m, d, c, r, &mut buf);
            let sign = if (r + c) % 2 == 0 { 1.0 } else { -1.0 };
            out[r * d + c] = sign * det(&buf, d - 1);
        }
    }
}

/// Inverse through the cofactor formula.
pub fn inverse_cofactor(m: &[f64], d: usize, out: &mut [f64]) {
    adjugate(m, d, out);
    let det = det(m, d);
    for v in out.iter_mut() {
        *v /= det;
    }
}

/// Largest singular value, by power iteration on `M^T M`.
pub fn operator_norm(m: &[f64], d: usize) -> f64 {
    let mut ata = vec![0.0; d * d];
    for r in 0..d {
        for c in 0..d {
            ata[r * d + c] = (0..d).map(|k| m[k * d + r] * m[k * d + c]).sum();
        }
    }
    let frob: f64 = ata.iter().step_by(d + 1).sum();
    if frob == 0.0 {
        return 0.0;
    }
    let mut v: Vec<f64> = (0..d).map(|k| 1.0 + 0.1 * k as f64).collect();
    let mut w = vec![0.0; d];
    let mut lam = 0.0;
    for _ in 0..200 {
        for r in 0..d {
            w[r] = (0..d).map(|c| ata[r * d + c] * v[c]).sum();
        }
        let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nw == 0.0 {
            return 0.0;
        }
        let next = nw / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for k in 0..d {
            v[k] = w[k] / nw;
        }
        if (next - lam).abs() <= 1e-15 * next {
            lam = next;
            break;
        }
        lam = next;
    }
    lam.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_and_inverse_3() {
        let m = [2.0, 1.0, 0.0, 0.5, 3.0, 1.0, 0.0, 1.0, 4.0];
        let d = det(&m, 3);
        let mut inv = [0.0; 9];
        inverse_cofactor(&m, 3, &mut inv);
        for r in 0..3 {
            for c in 0..3 {
                let s: f64 = (0..3).map(|k| m[r * 3 + k] * inv[k * 3 + c]).sum();
                assert!((s - if r == c { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        let d_gen = {
            let mut a = m.to_vec();
            a.extend_from_slice(&[0.0; 0]);
            det(&a, 3)
        };
        assert_eq!(d, d_gen);
    }

    #[test]
    fn general_adjugate_matches_3x3() {
        let m = [2.0, 1.0, 0.3, 0.5, 3.0, 1.0, -0.2, 1.0, 4.0];
        let mut fast = [0.0; 9];
        adjugate(&m, 3, &mut fast);
        // 4x4 block-diagonal with a unit corner reproduces the 3x3 adjugate.
        let mut m4 = [0.0; 16];
        for r in 0..3 {
            for c in 0..3 {
                m4[r * 4 + c] = m[r * 3 + c];
            }
        }
        m4[15] = 1.0;
        let mut adj4 = [0.0; 16];
        adjugate(&m4, 4, &mut adj4);
        for r in 0..3 {
            for c in 0..3 {
                assert!((adj4[r * 4 + c] - fast[r * 3 + c]).abs() < 1e-13);
            }
        }
        assert!((det(&m4, 4) - det(&m, 3)).abs() < 1e-13);
    }

    #[test]
    fn operator_norm_diag_and_shear() {
        assert!((operator_norm(&[3.0, 0.0, 0.0, 0.0, -5.0, 0.0, 0.0, 0.0, 1.0], 3) - 5.0).abs() < 1e-12);
        // [[1,s],[0,1]] has norm (s + sqrt(s^2+4))/2
        let s = 0.7;
        let m = [1.0, s, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let expect = (s + (s * s + 4.0f64).sqrt()) / 2.0;
        assert!((operator_norm(&m, 3) - expect).abs() < 1e-10);
    }
}
