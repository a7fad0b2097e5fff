//! Exact squared Euclidean distance transform on anisotropic grids, using
//! the lower-envelope-of-parabolas method applied one axis at a time.

/// Squared distance along one line. `f` holds squared distances from the
/// previous passes (`INFINITY` = no feature); `w` is the voxel spacing.
fn edt_line(f: &[f64], w: f64, out: &mut [f64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    let pos = |i: usize| i as f64 * w;
    for (q, &fq) in f.iter().enumerate() {
        if !fq.is_finite() {
            continue;
        }
        if v.is_empty() {
            v.push(q);
            z.push(f64::NEG_INFINITY);
            continue;
        }
        loop {
            let p = *v.last().unwrap();
            let s = ((fq + pos(q) * pos(q)) - (f[p] + pos(p) * pos(p))) / (2.0 * (pos(q) - pos(p)));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
                if v.is_empty() {
                    v.push(q);
                    z.push(f64::NEG_INFINITY);
                    break;
                }
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < pos(q) {
            k += 1;
        }
        let d = pos(q) - pos(v[k]);
        *o = d * d + f[v[k]];
    }
}

/// Squared distance (mm²) from every voxel to the nearest `true` voxel of
/// `features`, x-fastest over `shape`. All-false input gives `INFINITY`.
pub fn squared_edt(features: &[bool], shape: [usize; 3], spacing: [f64; 3]) -> Vec<f64> {
    let mut d: Vec<f64> = features
        .iter()
        .map(|&b| if b { 0.0 } else { f64::INFINITY })
        .collect();
    let n_max = *shape.iter().max().unwrap();
    let mut line = vec![0.0; n_max];
    let mut out = vec![0.0; n_max];
    let (mut v, mut z) = (Vec::with_capacity(n_max), Vec::with_capacity(n_max));
    let strides = [1, shape[0], shape[0] * shape[1]];
    for axis in 0..3 {
        let n = shape[axis];
        let stride = strides[axis];
        let (o1, o2) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for b in 0..shape[o2] {
            for a in 0..shape[o1] {
                let start = a * strides[o1] + b * strides[o2];
                for i in 0..n {
                    line[i] = d[start + i * stride];
                }
                edt_line(&line[..n], spacing[axis], &mut out[..n], &mut v, &mut z);
                for i in 0..n {
                    d[start + i * stride] = out[i];
                }
            }
        }
    }
    d
}
