//! Parametric mesh family realizing dynamic and solid 2-dimensional
//! 0-surgery on a sphere.
//!
//! The morph parameter `s` runs from the round sphere (`s = 0`) through the
//! singular recoupling instant (`s = 1/2`, no manifold mesh) to the final
//! torus (`s = 1`).
//!
//! For `s < 1/2` the two polar disc caps (angular radius `pole_disc_angle`)
//! sink toward the ball center by depth `2 s r` and rotate about the pole
//! axis by `s * theta`, both blended into the undeformed zone by a cosine
//! bump that is C1 at the cap boundary. At `s -> 1/2` the displaced pole
//! centers meet at the ball center.
//!
//! For `s > 1/2` the surface is a twisted revolution of a closed half-plane
//! loop given in polar form about a center that slides outward with `s`:
//! the loop interpolates linearly between the pinched-sphere profile and a
//! round circle of radius `pole_disc_angle * r`, reaching the round torus at
//! `s = 1`. Because all layer radii scale the loop about a common center,
//! solid layering yields pairwise disjoint nested tori for every `s > 1/2`,
//! collapsing onto a common core circle as `r -> 0`.
//!
//! The gluing twist is realized combinatorially: the meridian seam joins the
//! loop ends with a spoke shift of `round(s (theta_top - theta_bottom) /
//! spoke angle)`, and the matching geometric rotation ramps along the tube
//! wall between the two junction circles.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::{PI, TAU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurgeryError {
    #[error("morph parameter s = 1/2 is the singular recoupling instant; no manifold mesh exists")]
    SingularParameter,
    #[error("twist undersampled: n_theta = {got} but the effective twist needs at least {needed}")]
    ResolutionTooCoarse { needed: usize, got: usize },
    #[error("mesh is not edge-manifold: edge ({v0}, {v1}) bounds {count} faces")]
    NonManifoldMesh { v0: usize, v1: usize, count: usize },
    #[error("invalid morph parameters: {0}")]
    InvalidParams(String),
}

/// Rotations applied to the two removed discs by the gluing homeomorphism.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwistSpec {
    pub theta_top: f64,
    pub theta_bottom: f64,
}

impl Default for TwistSpec {
    /// The twisted embedding used throughout: rotations by +-4 pi / 3.
    fn default() -> Self {
        Self {
            theta_top: 4.0 * PI / 3.0,
            theta_bottom: -4.0 * PI / 3.0,
        }
    }
}

impl TwistSpec {
    pub const UNTWISTED: TwistSpec = TwistSpec {
        theta_top: 0.0,
        theta_bottom: 0.0,
    };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub n_theta: usize,
    pub n_phi: usize,
}

impl Default for Resolution {
    fn default() -> Self {
        Self {
            n_theta: 48,
            n_phi: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MorphParams {
    /// Morph parameter in [0, 1]; 1/2 is the singular instant.
    pub s: f64,
    /// Layer radius in (0, 1].
    pub r: f64,
    pub twist: TwistSpec,
    pub resolution: Resolution,
    /// Angular radius of the polar disc neighbourhoods, in (0, pi/4].
    pub pole_disc_angle: f64,
}

impl Default for MorphParams {
    fn default() -> Self {
        Self {
            s: 0.0,
            r: 1.0,
            twist: TwistSpec::default(),
            resolution: Resolution::default(),
            pole_disc_angle: PI / 8.0,
        }
    }
}

impl MorphParams {
    pub fn validate(&self) -> Result<(), SurgeryError> {
        let bad = |m: String| Err(SurgeryError::InvalidParams(m));
        if !(0.0..=1.0).contains(&self.s) {
            return bad(format!("s = {} outside [0, 1]", self.s));
        }
        if !(self.r > 0.0 && self.r <= 1.0) {
            return bad(format!("r = {} outside (0, 1]", self.r));
        }
        if self.resolution.n_theta < 16 || self.resolution.n_phi < 16 {
            return bad(format!(
                "resolution {}x{} below the 16x16 minimum",
                self.resolution.n_theta, self.resolution.n_phi
            ));
        }
        if !(self.pole_disc_angle > 0.0 && self.pole_disc_angle <= PI / 4.0) {
            return bad(format!(
                "pole_disc_angle = {} outside (0, pi/4]",
                self.pole_disc_angle
            ));
        }
        if !self.twist.theta_top.is_finite() || !self.twist.theta_bottom.is_finite() {
            return bad("twist angles must be finite".to_string());
        }
        Ok(())
    }
}

/// Indexed triangle mesh snapshot of the morph family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurgeryMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub layer_r: f64,
    pub morph_s: f64,
    /// Vertex indices of the two gluing circles (cap boundaries for
    /// s < 1/2, tube junction rings for s > 1/2).
    pub gluing_rings: [Vec<usize>; 2],
}

impl SurgeryMesh {
    pub fn vertex(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.vertices[i])
    }

    /// Map of undirected edges to incident-face counts.
    fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut edges = HashMap::with_capacity(self.faces.len() * 3 / 2);
        for f in &self.faces {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let key = (a.min(b), a.max(b));
                *edges.entry(key).or_insert(0) += 1;
            }
        }
        edges
    }

    /// True when every edge bounds exactly two faces.
    pub fn is_edge_manifold(&self) -> bool {
        self.edge_counts().values().all(|&c| c == 2)
    }

    pub fn min_triangle_area(&self) -> f64 {
        self.faces
            .iter()
            .map(|f| {
                let (a, b, c) = (self.vertex(f[0]), self.vertex(f[1]), self.vertex(f[2]));
                0.5 * (b - a).cross(&(c - a)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Ray-casting parity test: is `p` inside the closed surface?
    ///
    /// Majority vote over three skew ray directions, so a single ray that
    /// grazes an edge or vertex cannot flip the answer.
    pub fn contains_point(&self, p: &Vector3<f64>) -> bool {
        let dirs = [
            Vector3::new(0.939_692, 0.262_003, 0.220_269),
            Vector3::new(-0.338_741, 0.871_323, 0.354_709),
            Vector3::new(0.247_121, -0.405_087, 0.880_251),
        ];
        let mut inside_votes = 0usize;
        for dir in &dirs {
            let dir = dir.normalize();
            let mut hits = 0usize;
            for f in &self.faces {
                let (a, b, c) = (self.vertex(f[0]), self.vertex(f[1]), self.vertex(f[2]));
                if ray_hits_triangle(p, &dir, &a, &b, &c) {
                    hits += 1;
                }
            }
            if hits % 2 == 1 {
                inside_votes += 1;
            }
        }
        inside_votes >= 2
    }
}

/// Moller-Trumbore, counting strictly positive ray parameters.
fn ray_hits_triangle(
    origin: &Vector3<f64>,
    dir: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> bool {
    let e1 = b - a;
    let e2 = c - a;
    let pvec = dir.cross(&e2);
    let det = e1.dot(&pvec);
    if det.abs() < 1e-14 {
        return false;
    }
    let inv = 1.0 / det;
    let tvec = origin - a;
    let u = tvec.dot(&pvec) * inv;
    if !(0.0..=1.0).contains(&u) {
        return false;
    }
    let qvec = tvec.cross(&e1);
    let v = dir.dot(&qvec) * inv;
    if v < 0.0 || u + v > 1.0 {
        return false;
    }
    e2.dot(&qvec) * inv > 1e-12
}

/// Euler characteristic `V - E + F`; requires an edge-manifold mesh.
pub fn euler_characteristic(mesh: &SurgeryMesh) -> Result<i64, SurgeryError> {
    let edges = mesh.edge_counts();
    for (&(v0, v1), &count) in &edges {
        if count != 2 {
            return Err(SurgeryError::NonManifoldMesh { v0, v1, count });
        }
    }
    Ok(mesh.vertices.len() as i64 - edges.len() as i64 + mesh.faces.len() as i64)
}

/// C1 cosine bump: 1 at x = 0, 0 at x = 1 with zero slope.
fn bump(x: f64) -> f64 {
    0.5 * (1.0 + (PI * x.clamp(0.0, 1.0)).cos())
}

fn check_twist_resolution(mp: &MorphParams) -> Result<(), SurgeryError> {
    let effective = mp.s * mp.twist.theta_top.abs().max(mp.twist.theta_bottom.abs());
    let needed = (8.0 * effective / TAU).ceil() as usize;
    if mp.resolution.n_theta < needed {
        return Err(SurgeryError::ResolutionTooCoarse {
            needed,
            got: mp.resolution.n_theta,
        });
    }
    Ok(())
}

/// Generate the morph family member at `mp`.
pub fn morph_surface(mp: &MorphParams) -> Result<SurgeryMesh, SurgeryError> {
    mp.validate()?;
    if mp.s == 0.5 {
        return Err(SurgeryError::SingularParameter);
    }
    check_twist_resolution(mp)?;
    if mp.s < 0.5 {
        Ok(deformed_sphere(mp))
    } else {
        Ok(tube_torus(mp))
    }
}

/// Sphere of radius `r` with both polar caps displaced toward the center by
/// depth `2 s r` and twisted by `s theta`, cosine-blended at the cap rim.
fn deformed_sphere(mp: &MorphParams) -> SurgeryMesh {
    let alpha = mp.pole_disc_angle;
    let (n_theta, n_phi) = (mp.resolution.n_theta, mp.resolution.n_phi);
    let n_cap = ((n_phi as f64 * alpha / PI).round() as usize).max(4);
    let n_mid = (n_phi as isize - 2 * n_cap as isize).max(8) as usize;

    // Ring latitudes, cap rims included exactly.
    let mut phis = Vec::new();
    for i in 1..=n_cap {
        phis.push(alpha * i as f64 / n_cap as f64);
    }
    for i in 1..=n_mid {
        phis.push(alpha + (PI - 2.0 * alpha) * i as f64 / n_mid as f64);
    }
    for i in 1..n_cap {
        phis.push(PI - alpha + alpha * i as f64 / n_cap as f64);
    }
    let north_rim = n_cap - 1; // ring index with phi == alpha
    let south_rim = n_cap + n_mid - 1; // ring index with phi == pi - alpha

    let displace = |phi: f64, theta: f64| -> Vector3<f64> {
        let (mut z, rho) = (phi.cos(), phi.sin());
        let mut az = theta;
        if phi <= alpha {
            let w = bump(phi / alpha);
            z -= 2.0 * mp.s * w;
            az += mp.s * mp.twist.theta_top * w;
        } else if phi >= PI - alpha {
            let w = bump((PI - phi) / alpha);
            z += 2.0 * mp.s * w;
            az += mp.s * mp.twist.theta_bottom * w;
        }
        Vector3::new(rho * az.cos(), rho * az.sin(), z) * mp.r
    };

    let mut vertices = Vec::with_capacity(2 + phis.len() * n_theta);
    vertices.push(displace(0.0, 0.0).into()); // north pole
    for &phi in &phis {
        for j in 0..n_theta {
            vertices.push(displace(phi, TAU * j as f64 / n_theta as f64).into());
        }
    }
    vertices.push(displace(PI, 0.0).into()); // south pole
    let south_pole = vertices.len() - 1;
    let ring = |i: usize, j: usize| 1 + i * n_theta + (j % n_theta);

    let mut faces = Vec::with_capacity(2 * n_theta + 2 * (phis.len() - 1) * n_theta);
    for j in 0..n_theta {
        faces.push([0, ring(0, j), ring(0, j + 1)]);
    }
    for i in 0..phis.len() - 1 {
        for j in 0..n_theta {
            faces.push([ring(i, j), ring(i + 1, j), ring(i + 1, j + 1)]);
            faces.push([ring(i, j), ring(i + 1, j + 1), ring(i, j + 1)]);
        }
    }
    for j in 0..n_theta {
        faces.push([south_pole, ring(phis.len() - 1, j + 1), ring(phis.len() - 1, j)]);
    }

    let rim_indices = |i: usize| (0..n_theta).map(|j| ring(i, j)).collect::<Vec<_>>();
    SurgeryMesh {
        vertices,
        faces,
        layer_r: mp.r,
        morph_s: mp.s,
        gluing_rings: [rim_indices(north_rim), rim_indices(south_rim)],
    }
}

/// Meridian angle of the junction circles in the half-plane loop's polar
/// frame (about the pinch-profile center `(1/2, 0)`).
fn junction_angle(alpha: f64) -> f64 {
    alpha.cos().atan2(alpha.sin() - 0.5)
}

/// Polar profile of the unit pinched-sphere loop about `(1/2, 0)`:
/// the sphere belly for `|psi| <= psi_j`, the straight tunnel wall
/// (junction circle to ball center) beyond.
fn pinch_profile(psi: f64, alpha: f64, psi_j: f64) -> f64 {
    let a = psi.abs();
    if a <= psi_j {
        let c = psi.cos();
        (-c + (c * c + 3.0).sqrt()) / 2.0
    } else {
        0.5 / (a.sin() * alpha.tan() - psi.cos())
    }
}

/// Torus-type surface for `s > 1/2`: twisted revolution of the half-plane
/// loop `center(u) + R(psi) (cos psi, sin psi)` with
/// `R(psi) = r ((1-u) B(psi) + u alpha)` and `u = 2s - 1`.
fn tube_torus(mp: &MorphParams) -> SurgeryMesh {
    let alpha = mp.pole_disc_angle;
    let u = 2.0 * mp.s - 1.0;
    let center = 0.5 * (1.0 - u) + (1.0 - alpha) * u;
    let psi_j = junction_angle(alpha);
    let n_theta = mp.resolution.n_theta;

    // Meridian sampling with both junction angles as grid rows.
    let total = 2 * mp.resolution.n_phi;
    let n_belly = ((total as f64 * psi_j / PI).round() as usize).max(8);
    let n_wall = ((total - n_belly) / 2).max(4);
    let mut psis = Vec::with_capacity(n_belly + 2 * n_wall);
    for i in 0..=n_wall {
        psis.push(-PI + (PI - psi_j) * i as f64 / n_wall as f64);
    }
    for i in 1..=n_belly {
        psis.push(-psi_j + 2.0 * psi_j * i as f64 / n_belly as f64);
    }
    for i in 1..n_wall {
        psis.push(psi_j + (PI - psi_j) * i as f64 / n_wall as f64);
    }
    let north_junction = n_wall + n_belly; // psi == +psi_j
    let south_junction = n_wall; // psi == -psi_j
    let n_rows = psis.len();

    // Relative gluing twist, quantized to whole spokes so the meridian seam
    // closes on the vertex grid.
    let spoke = TAU / n_theta as f64;
    let m_rel =
        (mp.s * (mp.twist.theta_top - mp.twist.theta_bottom) / spoke).round() as i64;
    let twist_total = m_rel as f64 * spoke;
    let ramp = |psi: f64| -> f64 {
        if psi >= psi_j {
            0.5 * (psi - psi_j) / (PI - psi_j)
        } else if psi <= -psi_j {
            0.5 * (psi + psi_j) / (PI - psi_j)
        } else {
            0.0
        }
    };

    let mut vertices = Vec::with_capacity(n_rows * n_theta);
    for &psi in &psis {
        let radius = mp.r * ((1.0 - u) * pinch_profile(psi, alpha, psi_j) + u * alpha);
        let rho = center + radius * psi.cos();
        let z = radius * psi.sin();
        let g = twist_total * ramp(psi);
        for j in 0..n_theta {
            let az = spoke * j as f64 + g;
            vertices.push([rho * az.cos(), rho * az.sin(), z]);
        }
    }

    let vid = |i: usize, j: i64| -> usize {
        i * n_theta + (j.rem_euclid(n_theta as i64)) as usize
    };
    let mut faces = Vec::with_capacity(2 * n_rows * n_theta);
    for i in 0..n_rows {
        let (i2, shift) = if i + 1 == n_rows {
            (0, m_rel) // seam: the loop ends glue with the twist's spoke shift
        } else {
            (i + 1, 0)
        };
        for j in 0..n_theta as i64 {
            faces.push([vid(i, j), vid(i2, j + shift), vid(i2, j + shift + 1)]);
            faces.push([vid(i, j), vid(i2, j + shift + 1), vid(i, j + 1)]);
        }
    }

    let ring_of = |i: usize| (0..n_theta as i64).map(|j| vid(i, j)).collect::<Vec<_>>();
    SurgeryMesh {
        vertices,
        faces,
        layer_r: mp.r,
        morph_s: mp.s,
        gluing_rings: [ring_of(north_junction), ring_of(south_junction)],
    }
}

/// One morph per layer radius at the same `s` and twist, the polar-layering
/// realization of solid surgery. Radii must be strictly decreasing in (0, 1].
pub fn solid_layers(mp: &MorphParams, radii: &[f64]) -> Result<Vec<SurgeryMesh>, SurgeryError> {
    if radii.is_empty() {
        return Err(SurgeryError::InvalidParams("empty radius list".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
        return Err(SurgeryError::InvalidParams(
            "layer radii must lie in (0, 1]".into(),
        ));
    }
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(SurgeryError::InvalidParams(
            "layer radii must be strictly decreasing".into(),
        ));
    }
    radii
        .iter()
        .map(|&r| morph_surface(&MorphParams { r, ..*mp }))
        .collect()
}

/// The limit circle of the nested tori: surgery's effect on the center
/// point. Requires `s = 1`. The circle radius is extrapolated to `r -> 0`
/// from the tube-center radii of three small layers.
pub fn limit_circle(mp: &MorphParams) -> Result<Vec<Vector3<f64>>, SurgeryError> {
    mp.validate()?;
    if mp.s != 1.0 {
        return Err(SurgeryError::InvalidParams(
            "limit_circle requires s = 1".into(),
        ));
    }
    let probes = [0.15, 0.10, 0.05];
    let mut estimates = Vec::with_capacity(probes.len());
    for r in probes {
        let mesh = morph_surface(&MorphParams { r, ..*mp })?;
        let mut rho_min = f64::INFINITY;
        let mut rho_max = f64::NEG_INFINITY;
        for v in &mesh.vertices {
            let rho = (v[0] * v[0] + v[1] * v[1]).sqrt();
            rho_min = rho_min.min(rho);
            rho_max = rho_max.max(rho);
        }
        estimates.push((r, 0.5 * (rho_min + rho_max)));
    }
    // Linear least-squares fit c(r) = c0 + k r, extrapolated to r = 0.
    let n = estimates.len() as f64;
    let sx: f64 = estimates.iter().map(|e| e.0).sum();
    let sy: f64 = estimates.iter().map(|e| e.1).sum();
    let sxx: f64 = estimates.iter().map(|e| e.0 * e.0).sum();
    let sxy: f64 = estimates.iter().map(|e| e.0 * e.1).sum();
    let k = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let c0 = (sy - k * sx) / n;

    let n_theta = mp.resolution.n_theta;
    let mut circle = Vec::with_capacity(n_theta + 1);
    for j in 0..n_theta {
        let az = TAU * j as f64 / n_theta as f64;
        circle.push(Vector3::new(c0 * az.cos(), c0 * az.sin(), 0.0));
    }
    circle.push(circle[0]);
    Ok(circle)
}
