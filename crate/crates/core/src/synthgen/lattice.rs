//! Smooth random fields: values on a coarse control lattice, linearly
//! interpolated along each axis onto a dense grid.

/// Interpolation taps mapping `n` dense positions onto `g` lattice nodes
/// spanning the grid corner to corner.
fn taps(g: usize, n: usize) -> Vec<(usize, usize, f64)> {
    (0..n)
        .map(|i| {
            if g == 1 || n == 1 {
                return (0, 0, 0.0);
            }
            let pos = i as f64 * (g - 1) as f64 / (n - 1) as f64;
            let lo = (pos.floor() as usize).min(g - 2);
            (lo, lo + 1, pos - lo as f64)
        })
        .collect()
}

/// Position of dense index `i` (of `n`) in lattice coordinates.
pub fn lattice_coord(i: usize, g: usize, n: usize) -> f64 {
    if g == 1 || n == 1 {
        0.0
    } else {
        i as f64 * (g - 1) as f64 / (n - 1) as f64
    }
}

/// Trilinear upsampling of an x-fastest `lattice` of dims `g` to `shape`.
pub fn upsample(lattice: &[f64], g: [usize; 3], shape: [usize; 3]) -> Vec<f64> {
    debug_assert_eq!(lattice.len(), g[0] * g[1] * g[2]);
    let [tx, ty, tz] = [taps(g[0], shape[0]), taps(g[1], shape[1]), taps(g[2], shape[2])];

    // x: g0*g1*g2 -> n0*g1*g2
    let mut a = Vec::with_capacity(shape[0] * g[1] * g[2]);
    for row in lattice.chunks_exact(g[0]) {
        a.extend(tx.iter().map(|&(l, h, w)| row[l] + (row[h] - row[l]) * w));
    }
    // y: n0*g1*g2 -> n0*n1*g2
    let plane = shape[0];
    let mut b = Vec::with_capacity(shape[0] * shape[1] * g[2]);
    for slab in a.chunks_exact(plane * g[1]) {
        for &(l, h, w) in &ty {
            let (rl, rh) = (&slab[l * plane..(l + 1) * plane], &slab[h * plane..(h + 1) * plane]);
            b.extend(rl.iter().zip(rh).map(|(p, q)| p + (q - p) * w));
        }
    }
    // z: n0*n1*g2 -> n0*n1*n2
    let slice = shape[0] * shape[1];
    let mut c = Vec::with_capacity(slice * shape[2]);
    for &(l, h, w) in &tz {
        let (sl, sh) = (&b[l * slice..(l + 1) * slice], &b[h * slice..(h + 1) * slice]);
        c.extend(sl.iter().zip(sh).map(|(p, q)| p + (q - p) * w));
    }
    c
}
