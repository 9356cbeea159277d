//! Exact Euclidean distance transforms on 2D grids (Felzenszwalb-Huttenlocher).

/// Lower envelope of parabolas rooted at `f`; writes squared distances into `out`.
fn transform_1d(f: &[f64], out: &mut [f64], hull: &mut [usize], bounds: &mut [f64]) {
    let n = f.len();
    if n == 0 {
        return;
    }
    let intersect =
        |q: usize, p: usize| ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));

    let mut k = 0usize;
    let Some(first) = f.iter().position(|v| v.is_finite()) else {
        out.fill(f64::INFINITY);
        return;
    };
    hull[0] = first;
    bounds[0] = f64::NEG_INFINITY;
    bounds[1] = f64::INFINITY;
    for (q, fq) in f.iter().enumerate().skip(first + 1) {
        if !fq.is_finite() {
            continue;
        }
        let mut s = intersect(q, hull[k]);
        while s <= bounds[k] {
            k -= 1;
            s = intersect(q, hull[k]);
        }
        k += 1;
        hull[k] = q;
        bounds[k] = s;
        bounds[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while bounds[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - hull[k] as f64;
        *o = d * d + f[hull[k]];
    }
}

/// Squared distance (in pixels) from every pixel to the nearest pixel where
/// `feature` is true; infinite when there is none. Row-major, `rows x cols`.
pub fn squared_distance_2d(feature: &[bool], rows: usize, cols: usize) -> Vec<f64> {
    assert_eq!(feature.len(), rows * cols);
    let mut grid: Vec<f64> = feature.iter().map(|&b| if b { 0.0 } else { f64::INFINITY }).collect();
    let n = rows.max(cols);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut hull, mut bounds) = (vec![0usize; n], vec![0.0; n + 1]);

    for c in 0..cols {
        for r in 0..rows {
            f[r] = grid[r * cols + c];
        }
        transform_1d(&f[..rows], &mut out[..rows], &mut hull, &mut bounds);
        for r in 0..rows {
            grid[r * cols + c] = out[r];
        }
    }
    for r in 0..rows {
        let row = &mut grid[r * cols..(r + 1) * cols];
        f[..cols].copy_from_slice(row);
        transform_1d(&f[..cols], &mut out[..cols], &mut hull, &mut bounds);
        row.copy_from_slice(&out[..cols]);
    }
    grid
}

/// Signed distance of a binary image: positive inside (distance to the
/// nearest background pixel), negative outside (minus the distance to the
/// nearest foreground pixel). Magnitudes are capped at `rows + cols` so
/// that all-empty or all-full images stay finite.
pub fn signed_distance_2d(mask: &[u8], rows: usize, cols: usize) -> Vec<f64> {
    let cap = (rows + cols) as f64;
    let fg: Vec<bool> = mask.iter().map(|&m| m != 0).collect();
    let bg: Vec<bool> = fg.iter().map(|b| !b).collect();
    let to_fg = squared_distance_2d(&fg, rows, cols);
    let to_bg = squared_distance_2d(&bg, rows, cols);
    fg.iter()
        .enumerate()
        .map(|(i, &inside)| if inside { to_bg[i].sqrt().min(cap) } else { -to_fg[i].sqrt().min(cap) })
        .collect()
}
