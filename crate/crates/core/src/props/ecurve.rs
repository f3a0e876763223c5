use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::integrate_with_kinks;

const MAX_PANELS: usize = 4000;

/// `e(s) = E|Z1^2 - s Z2^2|^(1/2)` with the two normalizations of interest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ECurvePoint {
    pub s: f64,
    pub e_s: f64,
    /// `e(s) / sqrt(1 + s^2)`, i.e. divided by `||M||_F` for `M = diag(1, -s)`.
    pub ratio_f: f64,
    /// `e(s) / (1 + s^2)^(1/4)`, i.e. divided by `||M||_F^(1/2)`.
    pub ratio_sqrt_f: f64,
    pub error_estimate: f64,
}

/// `e(s) = (1 / (2 sqrt(2 pi))) int_0^{2 pi} |cos^2 t - s sin^2 t|^(1/2) dt`.
///
/// The integrand has period `pi` and is even about `0` and `pi/2`, so the
/// integral is four times the integral over `[0, pi/2]`. For `s > 0` that
/// quarter is split at the kink `tan^2 t = 1/s`.
pub fn e_of_s(s: f64, tol: f64) -> Result<ECurvePoint> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::invalid(format!("quadrature tolerance must be > 0, got {tol}")));
    }
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::invalid(format!("s must lie in [-1, 1], got {s}")));
    }
    let norm = 4.0 / (2.0 * (2.0 * PI).sqrt());
    let integrand = |t: f64| {
        let (sn, cs) = t.sin_cos();
        (cs * cs - s * sn * sn).abs().sqrt()
    };
    let mut breaks = vec![0.0];
    if s > 0.0 {
        let kink = (1.0 / s.sqrt()).atan();
        if kink < FRAC_PI_2 {
            breaks.push(kink);
        }
    }
    breaks.push(FRAC_PI_2);
    // leave headroom so the reported estimate stays strictly below `tol`
    let q = integrate_with_kinks(integrand, &breaks, 0.5 * tol / norm, MAX_PANELS);
    let e_s = norm * q.value;
    let f2 = 1.0 + s * s;
    Ok(ECurvePoint {
        s,
        e_s,
        ratio_f: e_s / f2.sqrt(),
        ratio_sqrt_f: e_s / f2.sqrt().sqrt(),
        error_estimate: norm * q.abs_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ECurveScan {
    pub points: Vec<ECurvePoint>,
    pub argmin_ratio_f: f64,
    pub min_ratio_f: f64,
    pub argmin_ratio_sqrt_f: f64,
    pub min_ratio_sqrt_f: f64,
}

/// Evaluates `e(s)` on a uniform grid of `[-1, 1]` and reports both minima.
pub fn e_curve_scan(grid_points: usize, tol: f64) -> Result<ECurveScan> {
    if grid_points < 3 {
        return Err(Error::invalid(format!(
            "grid needs at least 3 points, got {grid_points}"
        )));
    }
    let last = (grid_points - 1) as f64;
    let points = (0..grid_points)
        .map(|k| {
            let s = (2.0 * k as f64 - last) / last;
            e_of_s(s, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let argmin = |key: fn(&ECurvePoint) -> f64| {
        points
            .iter()
            .fold(&points[0], |best, p| if key(p) < key(best) { p } else { best })
    };
    let pf = argmin(|p| p.ratio_f);
    let ps = argmin(|p| p.ratio_sqrt_f);
    Ok(ECurveScan {
        argmin_ratio_f: pf.s,
        min_ratio_f: pf.ratio_f,
        argmin_ratio_sqrt_f: ps.s,
        min_ratio_sqrt_f: ps.ratio_sqrt_f,
        points,
    })
}

/// Writes `ecurve_ratio_f.csv` and `ecurve_ratio_sqrt_f.csv` (columns `s,ratio`)
/// into `dir` and returns their paths.
pub fn write_e_curve_csv(scan: &ECurveScan, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, key: fn(&ECurvePoint) -> f64| -> Result<PathBuf> {
        let path = dir.join(name);
        let mut out = String::from("s,ratio\n");
        for p in &scan.points {
            out.push_str(&format!("{},{}\n", p.s, key(p)));
        }
        std::fs::File::create(&path)
            .and_then(|mut f| f.write_all(out.as_bytes()))
            .map_err(|e| Error::io(&path, e))?;
        Ok(path)
    };
    Ok((
        write("ecurve_ratio_f.csv", |p| p.ratio_f)?,
        write("ecurve_ratio_sqrt_f.csv", |p| p.ratio_sqrt_f)?,
    ))
}
