use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dehomogenization guard for `w`.
const W_EPS: f64 = 1e-12;
/// Smallest admissible |det H|.
pub const DET_EPS: f64 = 1e-9;

/// Row-major 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const IDENTITY: Mat3 = Mat3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        Mat3([[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Adjugate inverse; `None` when |det| is at most [`DET_EPS`].
    pub fn inverse(&self) -> Option<Mat3> {
        let d = self.det();
        if !d.is_finite() || d.abs() <= DET_EPS {
            return None;
        }
        let m = &self.0;
        let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
            [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
            [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
        ];
        let mut out = [[0.0; 3]; 3];
        for (i, row) in adj.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                out[i][j] = v / d;
            }
        }
        Some(Mat3(out))
    }

    pub fn mul_vec(&self, v: [f64; 3]) -> [f64; 3] {
        let m = &self.0;
        [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
    }

    pub fn mul(&self, o: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| self.0[i][k] * o.0[k][j]).sum();
            }
        }
        Mat3(out)
    }
}

/// Axis-aligned ground-plane rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundRect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl GroundRect {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        (self.x_min..=self.x_max).contains(&p.0) && (self.y_min..=self.y_max).contains(&p.1)
    }
}

/// Pinhole pose used to synthesize the default homography.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraPose {
    pub height_m: f64,
    pub depression_deg: f64,
    pub focal_px: f64,
    pub principal_px: (f64, f64),
    /// Ground point under the optical axis.
    pub target: (f64, f64),
}

impl Default for CameraPose {
    fn default() -> Self {
        CameraPose {
            height_m: 10.0,
            depression_deg: 30.0,
            focal_px: 1000.0,
            principal_px: (960.0, 540.0),
            target: (131.25, 3.5),
        }
    }
}

impl CameraPose {
    /// Horizontal distance from the camera foot to the optical-axis target.
    pub fn standoff_m(&self) -> f64 {
        self.height_m / self.depression_deg.to_radians().tan()
    }

    /// Homography of a camera on the `y < target.y` side of the road,
    /// looking across it (optical axis in the y-z plane).
    pub fn homography(&self) -> Result<Mat3> {
        if !(self.height_m > 0.0 && self.focal_px > 0.0) {
            return Err(Error::config("camera height and focal length must be positive"));
        }
        if !(self.depression_deg > 0.0 && self.depression_deg < 90.0) {
            return Err(Error::config("camera depression must lie in (0, 90) degrees"));
        }
        let (s, c) = self.depression_deg.to_radians().sin_cos();
        let centre = [self.target.0, self.target.1 - self.standoff_m(), self.height_m];
        // Camera axes in world coordinates: right, down, forward.
        let r = [[1.0, 0.0, 0.0], [0.0, -s, -c], [0.0, c, -s]];
        let t = [0, 1, 2].map(|i| -(r[i][0] * centre[0] + r[i][1] * centre[1] + r[i][2] * centre[2]));
        let rt = Mat3([[r[0][0], r[0][1], t[0]], [r[1][0], r[1][1], t[1]], [r[2][0], r[2][1], t[2]]]);
        let k = Mat3([
            [self.focal_px, 0.0, self.principal_px.0],
            [0.0, self.focal_px, self.principal_px.1],
            [0.0, 0.0, 1.0],
        ]);
        Ok(k.mul(&rt))
    }
}

/// Ground-plane homography camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    homography: Mat3,
    inverse: Mat3,
    pub fps: f64,
    pub field_of_view: GroundRect,
}

impl CameraModel {
    pub fn new(homography: Mat3, fps: f64, field_of_view: GroundRect) -> Result<CameraModel> {
        if !(fps > 0.0 && fps.is_finite()) {
            return Err(Error::config("fps must be positive"));
        }
        let inverse = homography.inverse().ok_or(Error::SingularHomography { det: homography.det() })?;
        Ok(CameraModel { homography, inverse, fps, field_of_view })
    }

    /// Default roadside camera over a ring of `ring_length_m` with
    /// `road_width_m` of road, at the pose's height and depression.
    pub fn roadside(pose: &CameraPose, fps: f64, ring_length_m: f64, road_width_m: f64) -> Result<CameraModel> {
        let fov = GroundRect { x_min: 0.0, x_max: ring_length_m, y_min: -1.0, y_max: road_width_m + 1.0 };
        CameraModel::new(pose.homography()?, fps, fov)
    }

    pub fn homography(&self) -> &Mat3 {
        &self.homography
    }

    pub fn project_to_image(&self, ground: (f64, f64)) -> Result<(f64, f64)> {
        dehomogenize(self.homography.mul_vec([ground.0, ground.1, 1.0]))
    }

    pub fn ipm_to_ground(&self, pixel: (f64, f64)) -> Result<(f64, f64)> {
        dehomogenize(self.inverse.mul_vec([pixel.0, pixel.1, 1.0]))
    }

    /// Ground-plane meters per pixel at `ground`, from the local Jacobian
    /// of the inverse mapping (geometric mean of the two axes).
    pub fn ground_scale_at(&self, ground: (f64, f64)) -> Result<f64> {
        let p = self.project_to_image(ground)?;
        let gx = self.ipm_to_ground((p.0 + 1.0, p.1))?;
        let gy = self.ipm_to_ground((p.0, p.1 + 1.0))?;
        let dx = ((gx.0 - ground.0).powi(2) + (gx.1 - ground.1).powi(2)).sqrt();
        let dy = ((gy.0 - ground.0).powi(2) + (gy.1 - ground.1).powi(2)).sqrt();
        Ok((dx * dy).sqrt())
    }
}

pub fn project_to_image(ground: (f64, f64), camera: &CameraModel) -> Result<(f64, f64)> {
    camera.project_to_image(ground)
}

pub fn ipm_to_ground(pixel: (f64, f64), camera: &CameraModel) -> Result<(f64, f64)> {
    camera.ipm_to_ground(pixel)
}

fn dehomogenize(v: [f64; 3]) -> Result<(f64, f64)> {
    let scale = v[0].abs().max(v[1].abs()).max(1.0);
    if !v[2].is_finite() || v[2].abs() <= W_EPS * scale {
        return Err(Error::SingularProjection { w: v[2] });
    }
    Ok((v[0] / v[2], v[1] / v[2]))
}
