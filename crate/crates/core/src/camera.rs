//! Pinhole camera model: projection, backprojection, relative poses and
//! fronto-parallel plane homographies.
//!
//! Conventions, fixed once and used everywhere: right-handed coordinates,
//! camera looks down +z, image origin top-left with u right and v down, and
//! pixel `(i, j)` samples the continuous coordinate `(i, j)` (integer
//! centers). Extrinsics are stored world-to-camera so projection is a single
//! multiply-add.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Matrix4, Vector2, Vector3};

use crate::error::{Error, Result};

/// Focal lengths and principal point, in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(Error::Config(format!(
                "focal lengths must be positive, got fx={fx}, fy={fy}"
            )));
        }
        Ok(Intrinsics { fx, fy, cx, cy })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }
}

/// World-to-camera rigid transform: `X_cam = R * X_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrinsics {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

const ROTATION_TOL: f64 = 1e-9;

impl Extrinsics {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let mut max_dev: f64 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { 1.0 } else { 0.0 };
                max_dev = max_dev.max((gram[(i, j)] - target).abs());
            }
        }
        if max_dev > ROTATION_TOL {
            return Err(Error::Geometry(format!(
                "rotation is not orthonormal (max |R'R - I| = {max_dev:.3e})"
            )));
        }
        if (rotation.determinant() - 1.0).abs() > ROTATION_TOL {
            return Err(Error::Geometry(format!(
                "rotation determinant {} is not 1",
                rotation.determinant()
            )));
        }
        Ok(Extrinsics {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Extrinsics {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Camera center in world coordinates: `-R' t`.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }
}

/// A calibrated pinhole view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: Intrinsics,
    pub extrinsics: Extrinsics,
    pub width: usize,
    pub height: usize,
}

/// Result of projecting a world point. `depth` is the camera-frame z; callers
/// inspect its sign for behind-camera points. `valid` is false only for the
/// degenerate z = 0 case where the pixel position is undefined.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    pub u: f64,
    pub v: f64,
    pub depth: f64,
    pub valid: bool,
}

impl Camera {
    pub fn new(
        intrinsics: Intrinsics,
        extrinsics: Extrinsics,
        width: usize,
        height: usize,
    ) -> Result<Self> {
        if width < 1 || height < 1 {
            return Err(Error::Config(format!(
                "image size must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(Camera {
            intrinsics,
            extrinsics,
            width,
            height,
        })
    }

    /// Project a world point to pixel coordinates and camera-frame depth.
    pub fn project(&self, point: &Vector3<f64>) -> Projection {
        let cam = self.extrinsics.rotation * point + self.extrinsics.translation;
        let z = cam.z;
        if z == 0.0 {
            return Projection {
                u: 0.0,
                v: 0.0,
                depth: 0.0,
                valid: false,
            };
        }
        Projection {
            u: self.intrinsics.fx * cam.x / z + self.intrinsics.cx,
            v: self.intrinsics.fy * cam.y / z + self.intrinsics.cy,
            depth: z,
            valid: true,
        }
    }

    /// Lift pixel `(u, v)` at camera-frame depth `d` back to a world point.
    pub fn backproject(&self, u: f64, v: f64, d: f64) -> Result<Vector3<f64>> {
        if d <= 0.0 {
            return Err(Error::InvalidDepth(d));
        }
        let x = (u - self.intrinsics.cx) / self.intrinsics.fx * d;
        let y = (v - self.intrinsics.cy) / self.intrinsics.fy * d;
        let cam = Vector3::new(x, y, d);
        Ok(self.extrinsics.rotation.transpose() * (cam - self.extrinsics.translation))
    }

    /// Ray direction through a pixel, expressed in camera coordinates with
    /// unit z. Backprojection at depth d is `R' (d * ray - t)`.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new(
            (u - self.intrinsics.cx) / self.intrinsics.fx,
            (v - self.intrinsics.cy) / self.intrinsics.fy,
            1.0,
        )
    }

    pub fn center(&self) -> Vector3<f64> {
        self.extrinsics.center()
    }

    /// Rescale camera and image size by a power-of-two divisor. Extrinsics
    /// are untouched; a point projecting at `(u, v)` at full resolution
    /// projects at `(u/s, v/s)` afterwards.
    pub fn scale(&self, s: usize) -> Result<Camera> {
        if s == 0 || !s.is_power_of_two() {
            return Err(Error::Config(format!(
                "scale divisor must be a positive power of two, got {s}"
            )));
        }
        if self.width % s != 0 || self.height % s != 0 {
            return Err(Error::Config(format!(
                "scale divisor {s} does not divide image size {}x{}",
                self.width, self.height
            )));
        }
        let f = s as f64;
        Ok(Camera {
            intrinsics: Intrinsics {
                fx: self.intrinsics.fx / f,
                fy: self.intrinsics.fy / f,
                cx: self.intrinsics.cx / f,
                cy: self.intrinsics.cy / f,
            },
            extrinsics: self.extrinsics,
            width: self.width / s,
            height: self.height / s,
        })
    }

    /// Rescale the world by `f`: translations stretch, rotations and
    /// intrinsics stay. Depths measured by the scaled camera are `f` times
    /// the original ones, which is exactly what adaptive depth scaling needs.
    pub fn scale_world(&self, f: f64) -> Camera {
        Camera {
            intrinsics: self.intrinsics,
            extrinsics: Extrinsics {
                rotation: self.extrinsics.rotation,
                translation: self.extrinsics.translation * f,
            },
            width: self.width,
            height: self.height,
        }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u <= (self.width - 1) as f64 && v <= (self.height - 1) as f64
    }
}

/// Relative rigid transform mapping target-camera coordinates to
/// source-camera coordinates: `X_src = R * X_tgt + t`.
#[derive(Debug, Clone, Copy)]
pub struct RelativePose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

pub fn relative_pose(src: &Camera, tgt: &Camera) -> RelativePose {
    let r_s = src.extrinsics.rotation;
    let r_t = tgt.extrinsics.rotation;
    let rotation = r_s * r_t.transpose();
    let translation = src.extrinsics.translation - rotation * tgt.extrinsics.translation;
    RelativePose {
        rotation,
        translation,
    }
}

/// Homography induced by the fronto-parallel plane z = d in the target frame,
/// mapping homogeneous target pixels to source pixels:
/// `H = K_s (R + t n' / d) K_t^-1` with `n = (0, 0, 1)` and `X_s = R X_t + t`.
/// On the plane `n' X_t = d`, so `X_s = (R + t n'/d) X_t`.
pub fn plane_homography(src: &Camera, tgt: &Camera, d: f64) -> Result<Matrix3<f64>> {
    if d <= 0.0 {
        return Err(Error::InvalidDepth(d));
    }
    let rel = relative_pose(src, tgt);
    let mut m = rel.rotation;
    // t * n' / d touches only the third column
    m.column_mut(2)
        .iter_mut()
        .zip(rel.translation.iter())
        .for_each(|(c, t)| *c += t / d);
    Ok(src.intrinsics.matrix() * m * tgt.intrinsics.inverse_matrix())
}

/// Apply a homography to a pixel. Returns `None` when the homogeneous w
/// component is (numerically) zero.
pub fn apply_homography(h: &Matrix3<f64>, u: f64, v: f64) -> Option<Vector2<f64>> {
    let p = h * Vector3::new(u, v, 1.0);
    if p.z.abs() <= 1e-12 {
        return None;
    }
    Some(Vector2::new(p.x / p.z, p.y / p.z))
}

// --- camera text file -------------------------------------------------------
//
// Layout (whitespace-separated decimal text):
//   extrinsic
//   <4 x 4 row-major [R|t; 0 0 0 1]>
//   intrinsic
//   <3 x 3 row-major K>
//   d_min d_interval

/// One parsed camera file: pose, calibration and the depth-range line.
#[derive(Debug, Clone)]
pub struct CameraFile {
    pub extrinsics: Extrinsics,
    pub intrinsics: Intrinsics,
    pub d_min: f64,
    pub d_interval: f64,
}

impl CameraFile {
    pub fn into_camera(self, width: usize, height: usize) -> Result<Camera> {
        Camera::new(self.intrinsics, self.extrinsics, width, height)
    }
}

pub fn write_camera_file(path: &Path, cam: &Camera, d_min: f64, d_interval: f64) -> Result<()> {
    let mut out = String::new();
    out.push_str("extrinsic\n");
    let e = &cam.extrinsics;
    let m = Matrix4::new(
        e.rotation[(0, 0)],
        e.rotation[(0, 1)],
        e.rotation[(0, 2)],
        e.translation.x,
        e.rotation[(1, 0)],
        e.rotation[(1, 1)],
        e.rotation[(1, 2)],
        e.translation.y,
        e.rotation[(2, 0)],
        e.rotation[(2, 1)],
        e.rotation[(2, 2)],
        e.translation.z,
        0.0,
        0.0,
        0.0,
        1.0,
    );
    for r in 0..4 {
        let _ = writeln!(out, "{} {} {} {}", m[(r, 0)], m[(r, 1)], m[(r, 2)], m[(r, 3)]);
    }
    out.push_str("intrinsic\n");
    let k = cam.intrinsics.matrix();
    for r in 0..3 {
        let _ = writeln!(out, "{} {} {}", k[(r, 0)], k[(r, 1)], k[(r, 2)]);
    }
    let _ = writeln!(out, "{} {}", d_min, d_interval);
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Tokenizer that tracks byte offsets so parse errors can name the spot.
struct Tokens<'a> {
    text: &'a str,
    pos: usize,
    path: &'a Path,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<(&'a str, u64)> {
        let bytes = self.text.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if self.pos >= bytes.len() {
            return Err(Error::parse(
                self.path,
                self.pos as u64,
                "unexpected end of file",
            ));
        }
        let start = self.pos;
        while self.pos < bytes.len() && !bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        Ok((&self.text[start..self.pos], start as u64))
    }

    fn next_f64(&mut self) -> Result<(f64, u64)> {
        let (tok, at) = self.next()?;
        let v = tok
            .parse::<f64>()
            .map_err(|_| Error::parse(self.path, at, format!("expected a number, got {tok:?}")))?;
        Ok((v, at))
    }
}

pub fn read_camera_file(path: &Path) -> Result<CameraFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut tokens = Tokens {
        text: &text,
        pos: 0,
        path,
    };

    let (kw, at) = tokens.next()?;
    if kw != "extrinsic" {
        return Err(Error::parse(path, at, format!("expected 'extrinsic', got {kw:?}")));
    }
    let mut m = [[0.0f64; 4]; 4];
    for row in m.iter_mut() {
        for cell in row.iter_mut() {
            *cell = tokens.next_f64()?.0;
        }
    }
    let bottom_at = tokens.pos as u64;
    if m[3] != [0.0, 0.0, 0.0, 1.0] {
        return Err(Error::parse(
            path,
            bottom_at,
            "extrinsic bottom row must be 0 0 0 1",
        ));
    }
    let rotation = Matrix3::new(
        m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2],
    );
    let translation = Vector3::new(m[0][3], m[1][3], m[2][3]);
    let extrinsics = Extrinsics::new(rotation, translation)
        .map_err(|e| Error::parse(path, 0, format!("bad extrinsic block: {e}")))?;

    let (kw, at) = tokens.next()?;
    if kw != "intrinsic" {
        return Err(Error::parse(path, at, format!("expected 'intrinsic', got {kw:?}")));
    }
    let mut k = [[0.0f64; 3]; 3];
    for row in k.iter_mut() {
        for cell in row.iter_mut() {
            *cell = tokens.next_f64()?.0;
        }
    }
    let intrinsics = Intrinsics::new(k[0][0], k[1][1], k[0][2], k[1][2])
        .map_err(|e| Error::parse(path, 0, format!("bad intrinsic block: {e}")))?;

    let (d_min, at_dmin) = tokens.next_f64()?;
    let (d_interval, at_dint) = tokens.next_f64()?;
    if d_min <= 0.0 {
        return Err(Error::parse(path, at_dmin, format!("d_min must be > 0, got {d_min}")));
    }
    if d_interval <= 0.0 {
        return Err(Error::parse(
            path,
            at_dint,
            format!("d_interval must be > 0, got {d_interval}"),
        ));
    }
    Ok(CameraFile {
        extrinsics,
        intrinsics,
        d_min,
        d_interval,
    })
}
