//! Separable squared Euclidean distance transform.
//!
//! Each axis pass computes, for every line, the lower envelope of the parabolas
//! `f(q) + (x - x_q)^2` rooted at the sample positions `x_q = q * spacing`.
//! Sites with infinite `f` are skipped; a line without finite sites stays infinite.

/// Reusable scratch space for one line.
pub(crate) struct LineScratch {
    input: Vec<f64>,
    output: Vec<f64>,
    sites: Vec<usize>,
    bounds: Vec<f64>,
}

impl LineScratch {
    pub(crate) fn new(len: usize) -> Self {
        LineScratch {
            input: vec![0.0; len],
            output: vec![0.0; len],
            sites: Vec::with_capacity(len),
            bounds: Vec::with_capacity(len + 1),
        }
    }
}

/// One-dimensional lower envelope transform of `scratch.input` into `scratch.output`.
pub(crate) fn envelope_1d(scratch: &mut LineScratch, len: usize, spacing: f64) {
    let f = &scratch.input[..len];
    let out = &mut scratch.output[..len];
    let v = &mut scratch.sites;
    let z = &mut scratch.bounds;
    v.clear();
    z.clear();

    let pos = |q: usize| q as f64 * spacing;
    let key = |q: usize| f[q] + pos(q) * pos(q);

    for q in (0..len).filter(|&q| f[q].is_finite()) {
        loop {
            let Some(&last) = v.last() else {
                v.push(q);
                z.push(f64::NEG_INFINITY);
                break;
            };
            let s = (key(q) - key(last)) / (2.0 * (pos(q) - pos(last)));
            if s <= *z.last().unwrap() {
                v.pop();
                z.pop();
            } else {
                v.push(q);
                z.push(s);
                break;
            }
        }
    }

    if v.is_empty() {
        out.fill(f64::INFINITY);
        return;
    }

    let mut k = 0;
    for (p, o) in out.iter_mut().enumerate() {
        let x = pos(p);
        while k + 1 < v.len() && z[k + 1] < x {
            k += 1;
        }
        let d = x - pos(v[k]);
        *o = d * d + f[v[k]];
    }
}

/// In-place squared EDT of `field` (0 at seeds, +inf elsewhere) on an x-fastest grid.
pub(crate) fn transform(field: &mut [f64], dims: [usize; 3], spacing: [f64; 3]) {
    let [nx, ny, nz] = dims;

    let mut line = LineScratch::new(nx);
    for row in field.chunks_exact_mut(nx) {
        line.input[..nx].copy_from_slice(row);
        envelope_1d(&mut line, nx, spacing[0]);
        row.copy_from_slice(&line.output[..nx]);
    }

    let mut line = LineScratch::new(ny);
    for z in 0..nz {
        let slab = &mut field[z * nx * ny..(z + 1) * nx * ny];
        for x in 0..nx {
            for y in 0..ny {
                line.input[y] = slab[x + nx * y];
            }
            envelope_1d(&mut line, ny, spacing[1]);
            for y in 0..ny {
                slab[x + nx * y] = line.output[y];
            }
        }
    }

    let plane = nx * ny;
    let mut line = LineScratch::new(nz);
    for xy in 0..plane {
        for z in 0..nz {
            line.input[z] = field[xy + plane * z];
        }
        envelope_1d(&mut line, nz, spacing[2]);
        for z in 0..nz {
            field[xy + plane * z] = line.output[z];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(f: &[f64], s: f64) -> Vec<f64> {
        let mut sc = LineScratch::new(f.len());
        sc.input.copy_from_slice(f);
        envelope_1d(&mut sc, f.len(), s);
        sc.output
    }

    #[test]
    fn single_site_line() {
        let inf = f64::INFINITY;
        assert_eq!(run(&[inf, inf, 0.0, inf], 1.0), vec![4.0, 1.0, 0.0, 1.0]);
        assert_eq!(run(&[0.0, inf, inf], 2.0), vec![0.0, 4.0, 16.0]);
    }

    #[test]
    fn line_without_sites_stays_infinite() {
        let inf = f64::INFINITY;
        assert!(run(&[inf; 5], 1.0).iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn matches_brute_force_on_offsets() {
        let f = [3.0, f64::INFINITY, 0.0, 7.0, f64::INFINITY, 1.0, 2.0];
        let got = run(&f, 1.0);
        for (p, g) in got.iter().enumerate() {
            let want = f
                .iter()
                .enumerate()
                .map(|(q, fq)| fq + ((p as f64) - q as f64).powi(2))
                .fold(f64::INFINITY, f64::min);
            assert_eq!(*g, want);
        }
    }
}
