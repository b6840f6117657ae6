//! Channel power gain over a planar region.

use std::io::{self, Write};

use crate::channel::{channel_gain, evaluate_on_grid, ChannelSpec, Grid, Position, Region};
use crate::error::{Error, Result};
use crate::scalar::{power_db, Scalar};

/// Grid step used when none is given: fifty cells per wavelength.
pub const DEFAULT_STEP: f64 = 1.0 / 50.0;

/// Floor applied to the dB value of exact (or numerically exact) nulls.
pub const DB_FLOOR: f64 = -120.0;

/// Power gain `|h|^2` at `r` in dB, floored at [`DB_FLOOR`].
pub fn power_gain_db<T: Scalar>(spec: &ChannelSpec<T>, r: &Position<T>) -> T {
    power_db(channel_gain(spec, r).norm_sqr(), T::lit(DB_FLOOR))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrema<T> {
    pub max_db: T,
    pub min_db: T,
    pub argmax: Position<T>,
    pub argmin: Position<T>,
}

/// Gridded power gain in dB. Cells are row-major: the first in-plane axis
/// varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMap<T> {
    region: Region<T>,
    grid: Grid<T>,
    plane: [usize; 2],
    values: Vec<T>,
    extrema: Extrema<T>,
}

impl<T: Scalar> GainMap<T> {
    pub fn region(&self) -> &Region<T> {
        &self.region
    }

    pub fn step(&self) -> T {
        self.grid.step
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    /// The two in-plane axes (indices into x, y, z).
    pub fn plane_axes(&self) -> [usize; 2] {
        self.plane
    }

    /// Number of cells along each in-plane axis.
    pub fn shape(&self) -> [usize; 2] {
        [self.grid.counts[self.plane[0]], self.grid.counts[self.plane[1]]]
    }

    pub fn values_db(&self) -> &[T] {
        &self.values
    }

    pub fn value_at(&self, col: usize, row: usize) -> T {
        self.values[row * self.shape()[0] + col]
    }

    pub fn position(&self, index: usize) -> Position<T> {
        self.grid.point(index)
    }

    pub fn extrema(&self) -> Extrema<T> {
        self.extrema
    }

    /// Writes `x,y,gain_db` rows in cell order. The column names refer to the
    /// first and second in-plane axes.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,gain_db")?;
        let [a, b] = self.plane;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            writeln!(w, "{},{},{}", p.0[a], p.0[b], v)?;
        }
        Ok(())
    }
}

/// Evaluates `10 log10 |h|^2` on a regular grid over a planar region
/// (exactly one zero extent).
pub fn evaluate_map<T: Scalar>(
    spec: &ChannelSpec<T>,
    region: &Region<T>,
    step: T,
) -> Result<GainMap<T>> {
    if !(step > T::zero() && step.is_finite()) {
        return Err(Error::NonPositiveStep(step.to_f64_lossy()));
    }
    let axes = region.active_axes();
    if axes.len() != 2 {
        return Err(Error::InvalidRegion(format!(
            "gain maps need a planar region, got {} nonzero extents",
            axes.len()
        )));
    }
    let grid = region.grid(step)?;
    let floor = T::lit(DB_FLOOR);
    let values: Vec<T> = evaluate_on_grid(spec, &grid)
        .into_iter()
        .map(|h| power_db(h.norm_sqr(), floor))
        .collect();
    let extrema = scan_extrema(&values, &grid);
    Ok(GainMap {
        region: *region,
        grid,
        plane: [axes[0], axes[1]],
        values,
        extrema,
    })
}

/// Maximum and minimum cells; ties go to the lowest row-major index.
pub fn map_extrema<T: Scalar>(map: &GainMap<T>) -> Extrema<T> {
    scan_extrema(&map.values, &map.grid)
}

fn scan_extrema<T: Scalar>(values: &[T], grid: &Grid<T>) -> Extrema<T> {
    let (mut imax, mut imin) = (0, 0);
    for (i, v) in values.iter().enumerate() {
        if *v > values[imax] {
            imax = i;
        }
        if *v < values[imin] {
            imin = i;
        }
    }
    Extrema {
        max_db: values[imax],
        min_db: values[imin],
        argmax: grid.point(imax),
        argmin: grid.point(imin),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{Direction, PathSpec};
    use crate::fixtures;
    use num_complex::Complex;

    #[test]
    fn single_path_map_is_flat() {
        let spec = ChannelSpec::new(vec![PathSpec::rx_only(
            Direction::<f64>::from_angles(0.9, 0.3).unwrap(),
            Complex::new(1.0, 0.0),
        )])
        .unwrap();
        let map = evaluate_map(&spec, &Region::square(2.0).unwrap(), 0.1).unwrap();
        assert!(map.values_db().iter().all(|v| v.abs() < 1e-12));

        // Broadside arrival has exactly zero phase, so ties resolve to cell 0.
        let spec = ChannelSpec::new(vec![PathSpec::rx_only(
            Direction::<f64>::from_angles(0.0, 0.0).unwrap(),
            Complex::new(1.0, 0.0),
        )])
        .unwrap();
        let map = evaluate_map(&spec, &Region::square(2.0).unwrap(), 0.1).unwrap();
        let e = map_extrema(&map);
        assert_eq!(e.argmax, map.position(0));
        assert_eq!(e.argmin, map.position(0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = fixtures::two_path();
        let region = Region::square(1.0).unwrap();
        assert!(matches!(
            evaluate_map(&spec, &region, 0.0),
            Err(Error::NonPositiveStep(_))
        ));
        assert!(matches!(
            evaluate_map(&spec, &region, -0.1),
            Err(Error::NonPositiveStep(_))
        ));
        let line = Region::rectangle(1.0, 0.0).unwrap();
        assert!(matches!(
            evaluate_map(&spec, &line, 0.1),
            Err(Error::InvalidRegion(_))
        ));
    }

    #[test]
    fn cells_match_pointwise_gain() {
        let spec = fixtures::four_path::<f64>();
        let map = evaluate_map(&spec, &Region::square(1.0).unwrap(), 0.05).unwrap();
        for (i, v) in map.values_db().iter().enumerate() {
            assert!((v - power_gain_db(&spec, &map.position(i))).abs() < 1e-9);
        }
        assert_eq!(map.shape(), [21, 21]);
    }

    #[test]
    fn csv_layout() {
        let spec = fixtures::two_path();
        let map = evaluate_map(&spec, &Region::square(0.1).unwrap(), 0.05).unwrap();
        let mut buf = Vec::new();
        map.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x,y,gain_db");
        assert_eq!(lines.len(), 1 + 9);
        assert!(lines[1].starts_with("-0.05,-0.05,"));
        assert!(lines[2].starts_with("0,-0.05,"));
    }

    #[test]
    fn scaling_shifts_every_cell() {
        let spec = fixtures::four_path();
        let region = Region::square(1.0).unwrap();
        let base = evaluate_map(&spec, &region, 0.1).unwrap();
        let c = 3.5;
        let scaled = evaluate_map(&spec.scaled(Complex::new(c, 0.0)), &region, 0.1).unwrap();
        let shift = 20.0 * f64::log10(c);
        for (a, b) in base.values_db().iter().zip(scaled.values_db()) {
            assert!((b - a - shift).abs() < 1e-9);
        }
        assert_eq!(base.extrema().argmax, scaled.extrema().argmax);
        assert_eq!(base.extrema().argmin, scaled.extrema().argmin);
    }
}
