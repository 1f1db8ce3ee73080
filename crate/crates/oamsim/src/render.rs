//! Renders LG(p=0, ℓ) intensity and phase images and measures the phase
//! winding around the optical axis.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::TAU;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Square intensity + phase image, row-major, pixel (0,0) top-left.
/// Coordinates span [-extent, extent] on both axes, sampled at pixel
/// centers.
#[derive(Debug, Clone)]
pub struct ModeImage {
    pub size: usize,
    pub intensity: Vec<f64>,
    pub phase: Vec<f64>,
}

impl ModeImage {
    pub fn at(&self, row: usize, col: usize) -> (f64, f64) {
        let idx = row * self.size + col;
        (self.intensity[idx], self.phase[idx])
    }

    pub fn peak_intensity(&self) -> f64 {
        self.intensity.iter().cloned().fold(0.0, f64::max)
    }

    /// Writes `<prefix>_intensity.pgm` and `<prefix>_phase.pgm` as 16-bit
    /// ASCII PGM; intensity maps [0, peak] and phase maps [-π, π] onto the
    /// full range.
    pub fn write_pgm_pair(&self, prefix: &Path) -> std::io::Result<(PathBuf, PathBuf)> {
        let peak = self.peak_intensity().max(f64::MIN_POSITIVE);
        let intensity_path = suffixed(prefix, "_intensity.pgm");
        let phase_path = suffixed(prefix, "_phase.pgm");
        write_pgm16(&intensity_path, self.size, self.intensity.iter().map(|v| v / peak))?;
        write_pgm16(
            &phase_path,
            self.size,
            self.phase.iter().map(|p| (p + std::f64::consts::PI) / TAU),
        )?;
        Ok((intensity_path, phase_path))
    }

    /// Raw values as CSV rows `row,col,intensity,phase`.
    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        let mut out = String::from("row,col,intensity,phase\n");
        for row in 0..self.size {
            for col in 0..self.size {
                let (i, p) = self.at(row, col);
                out.push_str(&format!("{row},{col},{i},{p}\n"));
            }
        }
        std::fs::write(path, out)
    }
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut name = prefix.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn write_pgm16(path: &Path, size: usize, values: impl Iterator<Item = f64>) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    writeln!(w, "P2")?;
    writeln!(w, "{size} {size}")?;
    writeln!(w, "65535")?;
    for (i, v) in values.enumerate() {
        let level = (v.clamp(0.0, 1.0) * 65535.0).round() as u32;
        if i % size == size - 1 {
            writeln!(w, "{level}")?;
        } else {
            write!(w, "{level} ")?;
        }
    }
    Ok(())
}

/// Peak-normalized LG(p=0, ℓ) amplitude at radius `r`: the intensity
/// r^{2|ℓ|} e^{-2r²/w²} reaches 1 at its ring maximum.
fn lg_amplitude(ell: i32, r: f64, waist: f64) -> f64 {
    let n = ell.unsigned_abs() as f64;
    let gauss = (-(r * r) / (waist * waist)).exp();
    if n == 0.0 {
        return gauss;
    }
    let r_peak_sq = n * waist * waist / 2.0;
    (r * r / r_peak_sq).powf(n / 2.0) * (n / 2.0).exp() * gauss
}

/// Renders a complex superposition Σ aₖ·LG(ℓₖ); intensity and phase come
/// from the summed field.
pub fn render_superposition(
    components: &[(i32, Complex64)],
    grid: usize,
    waist: f64,
    extent: f64,
) -> Result<ModeImage> {
    if grid < 16 {
        return Err(Error::GridTooSmall(grid));
    }
    if !(waist > 0.0) {
        return Err(Error::NonPositive("waist"));
    }
    if !(extent > 0.0) {
        return Err(Error::NonPositive("extent"));
    }
    let step = 2.0 * extent / grid as f64;
    let mut intensity = Vec::with_capacity(grid * grid);
    let mut phase = Vec::with_capacity(grid * grid);
    for row in 0..grid {
        let y = extent - (row as f64 + 0.5) * step;
        for col in 0..grid {
            let x = -extent + (col as f64 + 0.5) * step;
            let r = (x * x + y * y).sqrt();
            let azimuth = y.atan2(x);
            let mut field = Complex64::new(0.0, 0.0);
            for &(ell, amp) in components {
                let helical = Complex64::from_polar(1.0, ell as f64 * azimuth);
                field += amp * lg_amplitude(ell, r, waist) * helical;
            }
            intensity.push(field.norm_sqr());
            phase.push(field.arg());
        }
    }
    Ok(ModeImage { size: grid, intensity, phase })
}

/// Renders a single pure mode with peak intensity 1.
pub fn render_mode(ell: i32, grid: usize, waist: f64, extent: f64) -> Result<ModeImage> {
    render_superposition(&[(ell, Complex64::new(1.0, 0.0))], grid, waist, extent)
}

/// Phase accumulated along a centered pixel ring of `radius_px` pixels,
/// unwrapped step by step. For a pure mode this is 2πℓ.
pub fn accumulated_phase(image: &ModeImage, radius_px: f64) -> Result<f64> {
    let center = (image.size as f64 - 1.0) / 2.0;
    if radius_px <= 0.0 || center - radius_px < 0.0 || center + radius_px > image.size as f64 - 1.0 {
        return Err(Error::RingOutOfBounds);
    }
    let samples = 720;
    let sample_at = |k: usize| -> f64 {
        let theta = TAU * k as f64 / samples as f64;
        let row = (center - radius_px * theta.sin()).round() as usize;
        let col = (center + radius_px * theta.cos()).round() as usize;
        image.phase[row * image.size + col]
    };
    let mut total = 0.0;
    let mut previous = sample_at(0);
    for k in 1..=samples {
        let current = sample_at(k % samples);
        let mut delta = current - previous;
        while delta > std::f64::consts::PI {
            delta -= TAU;
        }
        while delta < -std::f64::consts::PI {
            delta += TAU;
        }
        total += delta;
        previous = current;
    }
    Ok(total)
}

/// Winding number of the phase around the center: accumulated phase over
/// 2π, rounded. Equals ℓ for a pure rendered mode.
pub fn phase_winding(image: &ModeImage) -> Result<i32> {
    let radius = image.size as f64 / 4.0;
    Ok((accumulated_phase(image, radius)? / TAU).round() as i32)
}
