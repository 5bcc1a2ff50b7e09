#ifndef NETREL_HAZARD_HPP
#define NETREL_HAZARD_HPP

#include <string>

#include "netrel/rng.hpp"

namespace netrel {

struct Site {
    double lat = 0.0;
    double lon = 0.0;
    double vs30 = 760.0;        // m/s
    double basin_depth = 0.0;   // km
    std::string soil_class;
};

struct EarthquakeEvent {
    double magnitude = 0.0;
    double epicenter_lat = 0.0;
    double epicenter_lon = 0.0;
};

// Attenuation model structured as a product of five filters evaluated in log
// space: magnitude scaling, geometric attenuation, anelastic adjustment, site
// amplification, and basin scaling, plus a spectral-shape factor for Sa(T).
// All parameters come from a JSON coefficient file; a simplified default
// table ships with the project data.
struct GmpeCoefficients {
    // G1: magnitude/faulting scaling, ln G1 = mag_const + mag_slope*(M - mag_ref)
    double mag_const = 0.0;
    double mag_slope = 0.0;
    double mag_ref = 6.0;
    // G2: geometric attenuation, ln G2 = -atten_exponent * ln(R + atten_offset_km)
    double atten_exponent = 0.0;
    double atten_offset_km = 1.0;
    // G3: anelastic adjustment, ln G3 = -anelastic_per_km * R
    double anelastic_per_km = 0.0;
    // G4: site amplification, ln G4 = site_slope * ln(vs30_ref / vs30)
    double site_slope = 0.0;
    double vs30_ref = 760.0;
    // G5: basin scaling, ln G5 = basin_slope * basin_depth
    double basin_slope = 0.0;
    // Spectral shape: ln mu = shape_const + shape_lnT*ln T + shape_lnT2*(ln T)^2
    //                        + shape_mag*(M - mag_ref)
    double shape_const = 0.0;
    double shape_lnT = 0.0;
    double shape_lnT2 = 0.0;
    double shape_mag = 0.0;
    // Residual variability of ln(PGA)
    double sigma_ln_pga = 0.0;
};

GmpeCoefficients load_gmpe(const std::string& text);

struct TruncExpMagnitude {
    double beta;
    double m_min;
    double m_max;

    double pdf(double m) const;
    double cdf(double m) const;
    double inverse_cdf(double u) const;  // u in [0,1]
};

TruncExpMagnitude load_magnitude_dist(const std::string& text);

// Great-circle distance in km (point-source proxy for rupture distance).
double source_distance(const Site& site, const EarthquakeEvent& event);

// Median PGA in g: exp of the summed log-filters, residual term excluded.
double median_pga(const GmpeCoefficients& c, double magnitude, double r_km, const Site& site);

// Sa(T) = PGA * mu(M, R, vs30, basin_depth, T). Accepts periods in 0.01-5 s.
double spectral_accel(const GmpeCoefficients& c, double magnitude, double r_km,
                      const Site& site, double period_s);

// Lognormal residual draw: ln(result) ~ Normal(ln median, sigma_ln^2).
double sample_ground_motion(double median, double sigma_ln, Rng& rng);

double sample_magnitude_truncexp(const TruncExpMagnitude& dist, Rng& rng);

// Training-distribution magnitude: 8.0 - theta, theta ~ truncated
// exponential(shape 15) on [0, 1.5]; result in [6.5, 8.0].
double sample_training_magnitude(Rng& rng);
TruncExpMagnitude training_theta_dist();

}  // namespace netrel

#endif
