//! Great-circle distances in miles.

use crate::error::{Error, Result};

/// Earth radius in miles.
pub const EARTH_RADIUS_MI: f64 = 3958.7613;

fn check(p: (f64, f64)) -> Result<()> {
    let (lat, lng) = p;
    if !lat.is_finite() || !lng.is_finite() || !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lng) {
        return Err(Error::CoordinateOutOfRange(lat, lng));
    }
    Ok(())
}

/// Haversine great-circle distance between two (lat, lng) points given in degrees.
pub fn haversine_miles(a: (f64, f64), b: (f64, f64)) -> Result<f64> {
    check(a)?;
    check(b)?;
    let lat1 = a.0.to_radians();
    let lat2 = b.0.to_radians();
    let dlat = (b.0 - a.0).to_radians() / 2.0;
    let dlng = (b.1 - a.1).to_radians() / 2.0;
    let h = dlat.sin().powi(2) + lat1.cos() * lat2.cos() * dlng.sin().powi(2);
    // rounding can push h a hair above 1 for antipodal points
    Ok(2.0 * EARTH_RADIUS_MI * h.sqrt().min(1.0).asin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coincident_points_are_zero() {
        assert_eq!(haversine_miles((29.95, -90.07), (29.95, -90.07)).unwrap(), 0.0);
    }

    #[test]
    fn known_pair_matches_reference() {
        // New Orleans -> Baton Rouge, reference value from an independent
        // haversine implementation with the same Earth radius.
        let d = haversine_miles((29.9511, -90.0715), (30.4515, -91.1871)).unwrap();
        let expected = 75.05494788480453;
        assert!((d - expected).abs() / expected < 1e-9, "got {d}");
    }

    #[test]
    fn antipodal_is_half_circumference() {
        let d = haversine_miles((0.0, 0.0), (0.0, 180.0)).unwrap();
        let expected = std::f64::consts::PI * EARTH_RADIUS_MI;
        assert!((d - expected).abs() / expected < 1e-6, "got {d}");
    }

    #[test]
    fn symmetric() {
        let a = (29.9511, -90.0715);
        let b = (30.4515, -91.1871);
        assert_eq!(haversine_miles(a, b).unwrap(), haversine_miles(b, a).unwrap());
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(haversine_miles((91.0, 0.0), (0.0, 0.0)).is_err());
        assert!(haversine_miles((0.0, 0.0), (0.0, -180.5)).is_err());
        assert!(haversine_miles((f64::NAN, 0.0), (0.0, 0.0)).is_err());
    }
}
