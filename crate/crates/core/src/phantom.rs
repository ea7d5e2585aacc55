//! Deterministic synthetic cohorts of ellipsoidal organs.
//!
//! Randomness comes from one splitmix64 stream per subject, seeded from the
//! cohort seed and the subject's position in the cohort. For each organ, in
//! spec order, a subject consumes: two uniforms (Box–Muller normal for the
//! volume jitter), then three uniforms (x, y, z center jitter).

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{self, CohortManifest, ManifestEntry, ManifestMetadata};
use crate::volume::{BinaryMask, Dims, LabelVolume, Spacing};

/// Normal draws for the volume jitter are clamped to this many standard deviations.
pub const JITTER_Z_LIMIT: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        mix64(self.state)
    }

    /// Uniform in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller (cosine branch only).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }
}

fn subject_stream(seed: u64, index: usize) -> SplitMix64 {
    SplitMix64::new(mix64(seed ^ mix64(index as u64 + 1)))
}

fn default_sigma() -> f64 {
    0.08
}

fn default_center_jitter() -> f64 {
    2.0
}

fn default_max_margin() -> f64 {
    3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganSpec {
    pub name: String,
    pub label: u16,
    /// Mean volume at group scale 1.
    pub target_volume_cm3: f64,
    /// Semi-axis proportions.
    pub ratios: [f64; 3],
    /// Center as a fraction of the grid's physical extent per axis.
    pub center: [f64; 3],
    /// Standard deviation of the lognormal volume jitter.
    #[serde(default = "default_sigma")]
    pub volume_sigma: f64,
    /// Maximal center displacement per axis, in voxels.
    #[serde(default = "default_center_jitter")]
    pub center_jitter_voxels: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub label: String,
    pub scale: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub dims: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub organs: Vec<OrganSpec>,
    pub groups: Vec<GroupSpec>,
    pub seed: u64,
    /// Largest margin the cohort will be dilated by; organs keep this clearance.
    #[serde(default = "default_max_margin")]
    pub max_margin_mm: f64,
}

/// Semi-axes (mm) of the ellipsoid with volume `volume_cm3` and axis proportions `ratios`.
pub fn solve_semiaxes(volume_cm3: f64, ratios: [f64; 3]) -> [f64; 3] {
    let v_mm3 = volume_cm3 * 1000.0;
    let k = (3.0 * v_mm3 / (4.0 * PI * ratios[0] * ratios[1] * ratios[2])).cbrt();
    [k * ratios[0], k * ratios[1], k * ratios[2]]
}

struct Ellipsoid {
    center: [f64; 3],
    semiaxes: [f64; 3],
}

impl Ellipsoid {
    /// Index range of voxel centers inside the bounding box, or None if it leaves the grid.
    fn index_box(&self, dims: Dims, spacing: Spacing) -> Option<[(usize, usize); 3]> {
        let mut out = [(0, 0); 3];
        for ax in 0..3 {
            let s = spacing.axis(ax);
            let lo = (self.center[ax] - self.semiaxes[ax]) / s;
            let hi = (self.center[ax] + self.semiaxes[ax]) / s;
            if lo < 0.0 || hi > (dims.0[ax] - 1) as f64 {
                return None;
            }
            out[ax] = (lo.ceil() as usize, hi.floor() as usize);
        }
        Some(out)
    }

    fn for_each_voxel(&self, dims: Dims, spacing: Spacing, mut f: impl FnMut(usize)) -> bool {
        let Some(bx) = self.index_box(dims, spacing) else {
            return false;
        };
        let [a, b, c] = self.semiaxes;
        let (a2, b2, c2) = (a * a, b * b, c * c);
        let (b2c2, a2c2, a2b2) = (b2 * c2, a2 * c2, a2 * b2);
        let rhs = a2 * b2 * c2;
        let [sx, sy, sz] = spacing.as_array();
        for z in bx[2].0..=bx[2].1 {
            let dz = z as f64 * sz - self.center[2];
            let tz = dz * dz * a2b2;
            if tz > rhs {
                continue;
            }
            for y in bx[1].0..=bx[1].1 {
                let dy = y as f64 * sy - self.center[1];
                let tyz = tz + dy * dy * a2c2;
                if tyz > rhs {
                    continue;
                }
                for x in bx[0].0..=bx[0].1 {
                    let dx = x as f64 * sx - self.center[0];
                    if dx * dx * b2c2 + tyz <= rhs {
                        f(dims.index(x, y, z));
                    }
                }
            }
        }
        true
    }
}

/// Voxels whose centers satisfy the ellipsoid inequality. Voxel (i, j, k) has its
/// center at (i·sx, j·sy, k·sz) mm.
pub fn rasterize_ellipsoid(
    center_mm: [f64; 3],
    semiaxes_mm: [f64; 3],
    dims: Dims,
    spacing: Spacing,
) -> Result<BinaryMask> {
    if semiaxes_mm.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::PhantomSpec(format!("semi-axes must be positive, got {semiaxes_mm:?}")));
    }
    let mut mask = BinaryMask::empty(dims, spacing);
    let e = Ellipsoid { center: center_mm, semiaxes: semiaxes_mm };
    let bits = mask.bits_mut();
    if !e.for_each_voxel(dims, spacing, |i| bits[i] = true) {
        return Err(Error::OutOfBounds(format!(
            "ellipsoid at {center_mm:?} mm with semi-axes {semiaxes_mm:?} mm leaves the grid"
        )));
    }
    Ok(mask)
}

struct Subject {
    id: String,
    group: usize,
}

impl PhantomSpec {
    pub fn dims(&self) -> Result<Dims> {
        let [nx, ny, nz] = self.dims;
        Dims::new(nx, ny, nz)
    }

    pub fn spacing(&self) -> Result<Spacing> {
        Spacing::from_array(self.spacing_mm)
    }

    pub fn subject_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    fn subjects(&self) -> Vec<Subject> {
        let width = self.subject_count().to_string().len().max(3);
        let mut out = Vec::new();
        for (gi, g) in self.groups.iter().enumerate() {
            for _ in 0..g.count {
                let n = out.len() + 1;
                out.push(Subject { id: format!("sub-{n:0width$}"), group: gi });
            }
        }
        out
    }

    /// Nominal center of an organ in mm.
    fn base_center(&self, organ: &OrganSpec) -> [f64; 3] {
        std::array::from_fn(|ax| organ.center[ax] * self.dims[ax] as f64 * self.spacing_mm[ax])
    }

    /// Worst-case axis-aligned box (mm) an organ can reach: largest group scale,
    /// clamped volume jitter, full center jitter, then dilation by the largest
    /// margin plus one voxel.
    fn reach_box(&self, organ: &OrganSpec) -> [(f64, f64); 3] {
        let max_scale = self.groups.iter().map(|g| g.scale).fold(0.0, f64::max);
        let vmax = organ.target_volume_cm3 * max_scale * (organ.volume_sigma * JITTER_Z_LIMIT).exp();
        let semi = solve_semiaxes(vmax, organ.ratios);
        let c = self.base_center(organ);
        std::array::from_fn(|ax| {
            let s = self.spacing_mm[ax];
            let half = semi[ax] + organ.center_jitter_voxels * s + self.max_margin_mm + s;
            (c[ax] - half, c[ax] + half)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let dims = self.dims()?;
        self.spacing()?;
        let bad = |msg: String| Err(Error::PhantomSpec(msg));
        if self.organs.is_empty() {
            return bad("no organs".into());
        }
        if self.groups.is_empty() {
            return bad("no groups".into());
        }
        if !(self.max_margin_mm >= 0.0 && self.max_margin_mm.is_finite()) {
            return bad(format!("max_margin_mm must be non-negative, got {}", self.max_margin_mm));
        }
        let mut group_labels = BTreeSet::new();
        for g in &self.groups {
            if !group_labels.insert(g.label.as_str()) {
                return bad(format!("duplicate group '{}'", g.label));
            }
            if !(g.scale > 0.0 && g.scale.is_finite()) {
                return bad(format!("group '{}': scale must be positive", g.label));
            }
            if g.count < 2 {
                return bad(format!("group '{}': needs at least 2 subjects", g.label));
            }
        }
        let mut labels = BTreeSet::new();
        let mut names = BTreeSet::new();
        for o in &self.organs {
            if o.label == 0 || !labels.insert(o.label) {
                return bad(format!("organ '{}': label {} is zero or repeated", o.name, o.label));
            }
            if !names.insert(o.name.as_str()) {
                return bad(format!("duplicate organ name '{}'", o.name));
            }
            if !(o.target_volume_cm3 > 0.0 && o.target_volume_cm3.is_finite()) {
                return bad(format!("organ '{}': volume must be positive", o.name));
            }
            if o.ratios.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
                return bad(format!("organ '{}': ratios must be positive", o.name));
            }
            if !(o.volume_sigma >= 0.0 && o.volume_sigma.is_finite())
                || !(o.center_jitter_voxels >= 0.0 && o.center_jitter_voxels.is_finite())
            {
                return bad(format!("organ '{}': jitter must be non-negative", o.name));
            }
        }
        let boxes: Vec<_> = self.organs.iter().map(|o| self.reach_box(o)).collect();
        for (o, bx) in self.organs.iter().zip(&boxes) {
            for (ax, &(lo, hi)) in bx.iter().enumerate() {
                let extent = (dims.0[ax] - 1) as f64 * self.spacing_mm[ax];
                if lo < 0.0 || hi > extent {
                    return Err(Error::OutOfBounds(format!(
                        "organ '{}' can reach [{lo:.2}, {hi:.2}] mm on axis {ax}, grid spans [0, {extent:.2}]",
                        o.name
                    )));
                }
            }
        }
        for i in 0..boxes.len() {
            for j in i + 1..boxes.len() {
                let overlap = (0..3).all(|ax| boxes[i][ax].0 < boxes[j][ax].1 && boxes[j][ax].0 < boxes[i][ax].1);
                if overlap {
                    return Err(Error::OrganOverlap {
                        first: self.organs[i].name.clone(),
                        second: self.organs[j].name.clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn label_map(&self) -> BTreeMap<u16, String> {
        self.organs.iter().map(|o| (o.label, o.name.clone())).collect()
    }
}

/// Label volume of the subject at position `index` (0-based, group order).
pub fn generate_subject(spec: &PhantomSpec, index: usize) -> Result<LabelVolume> {
    let dims = spec.dims()?;
    let spacing = spec.spacing()?;
    let subjects = spec.subjects();
    let subject = subjects
        .get(index)
        .ok_or_else(|| Error::PhantomSpec(format!("subject index {index} out of range")))?;
    let scale = spec.groups[subject.group].scale;
    let mut rng = subject_stream(spec.seed, index);
    let mut volume = LabelVolume::zeros(dims, spacing);

    for (oi, organ) in spec.organs.iter().enumerate() {
        let z = rng.next_normal().clamp(-JITTER_Z_LIMIT, JITTER_Z_LIMIT);
        let jitter: [f64; 3] = std::array::from_fn(|_| 2.0 * rng.next_f64() - 1.0);
        let v = organ.target_volume_cm3 * scale * (organ.volume_sigma * z).exp();
        let semiaxes = solve_semiaxes(v, organ.ratios);
        let base = spec.base_center(organ);
        let center: [f64; 3] = std::array::from_fn(|ax| {
            base[ax] + jitter[ax] * organ.center_jitter_voxels * spec.spacing_mm[ax]
        });
        let e = Ellipsoid { center, semiaxes };
        let mut clash: Option<u16> = None;
        let voxels = volume.voxels_mut();
        let inside = e.for_each_voxel(dims, spacing, |i| {
            if voxels[i] != 0 {
                clash.get_or_insert(voxels[i]);
            } else {
                voxels[i] = organ.label;
            }
        });
        if !inside {
            return Err(Error::OutOfBounds(format!(
                "subject {}: organ '{}' leaves the grid",
                subject.id, organ.name
            )));
        }
        if let Some(other) = clash {
            let first = spec
                .organs
                .iter()
                .find(|o| o.label == other)
                .map(|o| o.name.clone())
                .unwrap_or_else(|| other.to_string());
            return Err(Error::OrganOverlap { first, second: spec.organs[oi].name.clone() });
        }
    }
    Ok(volume)
}

/// Generates every subject into `out_dir` as RLV files and writes `manifest.json`.
/// `threads = 0` uses all available cores.
pub fn generate_cohort(spec: &PhantomSpec, out_dir: &Path, threads: usize) -> Result<CohortManifest> {
    spec.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let subjects = spec.subjects();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let entries: Vec<ManifestEntry> = pool.install(|| {
        subjects
            .par_iter()
            .enumerate()
            .map(|(i, s)| {
                let volume = generate_subject(spec, i)?;
                let file = format!("{}.rlv.json", s.id);
                io::write_rlv(&out_dir.join(&file), &volume)?;
                log::info!("wrote {file}");
                Ok(ManifestEntry {
                    subject_id: s.id.clone(),
                    group: spec.groups[s.group].label.clone(),
                    volume_path: file,
                    excluded_labels: Vec::new(),
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let manifest = CohortManifest {
        entries,
        metadata: ManifestMetadata {
            label_map: spec.label_map(),
            created: format!("dscbias phantom {}", env!("CARGO_PKG_VERSION")),
            seed: Some(spec.seed),
        },
    };
    io::write_manifest(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

fn organ(name: &str, label: u16, volume: f64, ratios: [f64; 3], center_vox: [f64; 3]) -> OrganSpec {
    const DIMS: [f64; 3] = [302.0, 311.0, 234.0];
    OrganSpec {
        name: name.into(),
        label,
        target_volume_cm3: volume,
        ratios,
        center: std::array::from_fn(|ax| center_vox[ax] / DIMS[ax]),
        volume_sigma: default_sigma(),
        center_jitter_voxels: default_center_jitter(),
    }
}

/// Ten organs spanning the small/medium/large categories at 1 mm, 25 + 25
/// subjects with the second group scaled to 0.8 of the first, seed 42.
pub fn default_reference_spec() -> PhantomSpec {
    PhantomSpec {
        dims: [302, 311, 234],
        spacing_mm: [1.0, 1.0, 1.0],
        organs: vec![
            organ("lung-like", 1, 1670.0, [1.0, 1.0, 1.6], [75.0, 75.0, 117.0]),
            organ("liver-like", 2, 1575.0, [1.0, 1.0, 1.5], [225.0, 75.0, 109.0]),
            organ("heart-like", 3, 622.0, [1.0, 0.8, 1.0], [68.0, 206.0, 68.0]),
            organ("spleen-like", 4, 321.0, [1.0, 0.7, 1.3], [190.0, 206.0, 68.0]),
            organ("kidney-like", 5, 241.0, [1.6, 0.8, 1.0], [68.0, 206.0, 181.0]),
            organ("pancreas-like", 6, 130.0, [1.0, 0.5, 0.4], [201.0, 206.0, 166.0]),
            organ("ivc-like", 7, 91.0, [5.0, 1.0, 1.0], [95.0, 286.0, 24.0]),
            organ("esophagus-like", 8, 55.0, [6.0, 1.0, 1.0], [91.0, 286.0, 69.0]),
            organ("iliac-artery-like", 9, 44.0, [7.0, 1.0, 1.0], [93.0, 286.0, 109.0]),
            organ("adrenal-like", 10, 84.0, [1.2, 0.4, 1.0], [242.0, 286.0, 44.0]),
        ],
        groups: vec![
            GroupSpec { label: "male".into(), scale: 1.0, count: 25 },
            GroupSpec { label: "female".into(), scale: 0.8, count: 25 },
        ],
        seed: 42,
        max_margin_mm: default_max_margin(),
    }
}
