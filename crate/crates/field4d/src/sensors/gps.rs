use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Mean Earth radius used by the local tangent-plane conversion.
const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// A raw GPS fix as stored in datasets.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GeodeticFix {
    pub timestamp: f64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

/// A fix converted to the local metric frame.
#[derive(Clone, Copy, Debug)]
pub struct GpsFix {
    pub timestamp: f64,
    pub position: Vector3<f64>,
}

/// Converts a geodetic fix to East-North-Up meters about `origin`
/// (equirectangular local tangent plane; fields are far smaller than
/// the projection's validity range).
pub fn enu_from_geodetic(fix: &GeodeticFix, origin: &GeodeticFix) -> GpsFix {
    let lat0 = origin.latitude_deg.to_radians();
    let east =
        (fix.longitude_deg - origin.longitude_deg).to_radians() * lat0.cos() * EARTH_RADIUS_M;
    let north = (fix.latitude_deg - origin.latitude_deg).to_radians() * EARTH_RADIUS_M;
    let up = fix.altitude_m - origin.altitude_m;
    GpsFix {
        timestamp: fix.timestamp,
        position: Vector3::new(east, north, up),
    }
}

/// Inverse of [`enu_from_geodetic`], used by the simulator to emit
/// latitude/longitude streams.
pub fn geodetic_from_enu(
    timestamp: f64,
    position: &Vector3<f64>,
    origin: &GeodeticFix,
) -> GeodeticFix {
    let lat0 = origin.latitude_deg.to_radians();
    GeodeticFix {
        timestamp,
        latitude_deg: origin.latitude_deg + (position.y / EARTH_RADIUS_M).to_degrees(),
        longitude_deg: origin.longitude_deg
            + (position.x / (EARTH_RADIUS_M * lat0.cos())).to_degrees(),
        altitude_m: origin.altitude_m + position.z,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn enu_round_trip_is_tight() {
        let origin = GeodeticFix {
            timestamp: 0.0,
            latitude_deg: 31.48,
            longitude_deg: -83.53,
            altitude_m: 100.0,
        };
        for p in [
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(150.0, -120.0, 2.5),
            Vector3::new(-30.0, 45.0, -1.0),
        ] {
            let geo = geodetic_from_enu(1.0, &p, &origin);
            let back = enu_from_geodetic(&geo, &origin);
            assert_relative_eq!(back.position, p, epsilon = 1e-8);
        }
    }
}
