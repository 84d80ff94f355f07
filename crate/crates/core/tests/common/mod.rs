use vmo_extension::whitney::WhitneyDecomposition;

pub const FW_INF: u16 = u16::MAX / 2;

/// All-pairs shortest paths on the `E` adjacency, O(n^3), row-major.
pub fn floyd_warshall(dec: &WhitneyDecomposition) -> Vec<u16> {
    let n = dec.cubes_e.len();
    let mut m = vec![FW_INF; n * n];
    for i in 0..n {
        m[i * n + i] = 0;
        for &j in dec.adjacency_e.neighbors(i) {
            m[i * n + j] = 1;
        }
    }
    let mut row_k = vec![0u16; n];
    for k in 0..n {
        row_k.copy_from_slice(&m[k * n..(k + 1) * n]);
        for i in 0..n {
            let ik = m[i * n + k];
            if ik == FW_INF {
                continue;
            }
            for (x, &y) in m[i * n..(i + 1) * n].iter_mut().zip(&row_k) {
                *x = (*x).min(ik.saturating_add(y));
            }
        }
    }
    m
}
